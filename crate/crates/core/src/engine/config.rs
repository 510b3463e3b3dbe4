//! Run configuration with documented defaults.

use serde::{Deserialize, Serialize};

use crate::bench::Problem;
use crate::error::{PgloError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "pglo")]
    Pglo,
    #[serde(rename = "multpps-lhs")]
    MultppsLhs,
    #[serde(rename = "multpps-qei")]
    MultppsQei,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Pglo => "pglo",
            Algorithm::MultppsLhs => "multpps-lhs",
            Algorithm::MultppsQei => "multpps-qei",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pglo" => Ok(Algorithm::Pglo),
            "multpps-lhs" => Ok(Algorithm::MultppsLhs),
            "multpps-qei" => Ok(Algorithm::MultppsQei),
            _ => Err(PgloError::config(format!(
                "unknown algorithm '{s}' (expected pglo, multpps-lhs or multpps-qei)"
            ))),
        }
    }
}

/// Every knob of a run. Optional fields are derived from the problem when
/// absent: `dim` from the problem, `n_0 = 10·dim`, `m = 20` (capped by the
/// number of design points at each fit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub dim: Option<usize>,
    pub noise: Option<f64>,
    pub algorithm: Algorithm,
    /// Number of local regions.
    #[serde(rename = "K")]
    pub k: usize,
    /// Total evaluation budget (replications).
    #[serde(rename = "T")]
    pub t: usize,
    pub n_0: Option<usize>,
    /// Replications per newly evaluated point.
    pub r: usize,
    /// Points evaluated per local stage.
    pub n_max: usize,
    /// Parallel workers.
    pub q: usize,
    /// Inducing points.
    pub m: usize,
    /// Density penalty parameter.
    pub v: f64,
    /// Neighbourhood radius as a fraction of the domain diameter.
    pub neighborhood_frac: f64,
    /// Initial mesh as a fraction of the region's bounding-box diameter.
    pub initial_mesh_frac: f64,
    /// Minimum mesh as a fraction of the domain diameter.
    pub mesh_min_frac: f64,
    /// Slope of the minimum replication sequence.
    pub kappa: f64,
    /// Allocation budget per iteration as a fraction of `n_max·r`.
    pub allocation_fraction: f64,
    pub restart_cap: usize,
    pub hyper_starts: usize,
    pub seed: u64,
    /// Real sleep per evaluation, in milliseconds.
    pub latency_ms: u64,
    /// Simulated cost of one evaluation for the reported clock.
    pub sim_eval_ms: u64,
    /// Report measured wall time instead of the simulated clock.
    pub wall_clock: bool,
    /// Use the problem's true noise variance instead of sample variances.
    pub use_known_noise: bool,
    /// Relative-error threshold defining success.
    pub success_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "sun".into(),
            dim: None,
            noise: None,
            algorithm: Algorithm::Pglo,
            k: 4,
            t: 1500,
            n_0: None,
            r: 5,
            n_max: 40,
            q: 1,
            m: 20,
            v: 3.0,
            neighborhood_frac: 0.05,
            initial_mesh_frac: 0.1,
            mesh_min_frac: 1e-3,
            kappa: 0.05,
            allocation_fraction: 0.3,
            restart_cap: 3,
            hyper_starts: 5,
            seed: 0,
            latency_ms: 0,
            sim_eval_ms: 10,
            wall_clock: false,
            use_known_noise: false,
            success_tol: 0.01,
        }
    }
}

impl RunConfig {
    pub fn problem(&self) -> Result<Problem> {
        Problem::by_name(&self.problem, self.dim, self.noise)
    }

    /// Fills derived fields and checks every invariant.
    pub fn resolve(&self) -> Result<RunConfig> {
        let problem = self.problem()?;
        let d = problem.dim();
        let mut c = self.clone();
        c.dim = Some(d);
        let n_0 = *c.n_0.get_or_insert(10 * d);
        let positive = [("K", c.k), ("T", c.t), ("r", c.r), ("q", c.q), ("n_max", c.n_max), ("m", c.m), ("n_0", n_0)];
        for (name, v) in positive {
            if v == 0 {
                return Err(PgloError::config(format!("{name} must be at least 1")));
            }
        }
        if n_0 < c.k {
            return Err(PgloError::config(format!("n_0 ({n_0}) must be at least K ({})", c.k)));
        }
        if n_0 * c.r > c.t {
            return Err(PgloError::config(format!(
                "T ({}) must cover the initial design n_0·r = {n_0}·{} = {}",
                c.t,
                c.r,
                n_0 * c.r
            )));
        }
        if c.n_max < c.q {
            return Err(PgloError::config(format!("n_max ({}) must be at least q ({})", c.n_max, c.q)));
        }
        let reals = [
            ("v", c.v),
            ("neighborhood_frac", c.neighborhood_frac),
            ("initial_mesh_frac", c.initial_mesh_frac),
            ("mesh_min_frac", c.mesh_min_frac),
            ("success_tol", c.success_tol),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PgloError::config(format!("{name} must be positive")));
            }
        }
        if !(c.kappa >= 0.0 && c.kappa.is_finite()) {
            return Err(PgloError::config("kappa must be nonnegative"));
        }
        if !(c.allocation_fraction >= 0.0 && c.allocation_fraction.is_finite()) {
            return Err(PgloError::config("allocation_fraction must be nonnegative"));
        }
        if c.hyper_starts == 0 {
            return Err(PgloError::config("hyper_starts must be at least 1"));
        }
        Ok(c)
    }

    pub fn n_0(&self) -> usize {
        self.n_0.unwrap_or(10 * self.dim.unwrap_or(1))
    }

    /// Applies a `key=value` override; the value is parsed as JSON, falling
    /// back to a plain string.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let mut json = serde_json::to_value(&*self).map_err(|e| PgloError::config(e.to_string()))?;
        let obj = json.as_object_mut().expect("config serializes to an object");
        if !obj.contains_key(key) {
            return Err(PgloError::config(format!("unknown configuration key '{key}'")));
        }
        let parsed = serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        obj.insert(key.to_string(), parsed);
        *self = serde_json::from_value(json).map_err(|e| PgloError::config(format!("invalid value for '{key}': {e}")))?;
        Ok(())
    }
}
