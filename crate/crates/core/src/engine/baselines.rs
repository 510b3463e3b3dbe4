//! Multistart parallel pattern search (MultPPS): `q` independent searches,
//! restarted together once every mesh has reached the minimum.

use super::{RunOptions, RunOutcome, Runner, Thread};
use crate::acquisition::DomainStartSequence;
use crate::design::latin_hypercube;
use crate::direct_search::{poll_candidates, MeshState};
use crate::engine::RunConfig;
use crate::error::Result;
use crate::rng::stream;

/// Starts come from a fresh Latin hypercube per restart, or (with `qei`)
/// from one sequential q-mEI run on a model fitted to the initial design.
pub(super) fn run_multistart(config: RunConfig, options: RunOptions<'_>, qei: bool) -> Result<RunOutcome> {
    let mut runner = Runner::new(config, options)?;
    let q = runner.cfg.q;
    let min_mesh = runner.min_mesh();
    let mesh0 = (runner.cfg.initial_mesh_frac * runner.unit.diameter()).max(2.0 * min_mesh);
    let model = if qei { Some(runner.initialize()?) } else { None };
    let mut sequence = model.as_ref().map(|m| {
        let y_min = runner.state.archive.best_index().map(|i| runner.state.archive.point(i).sample_mean());
        DomainStartSequence::new(m, y_min.unwrap_or(f64::INFINITY), runner.radius(), runner.batch_options("qei-starts", &[]))
    });
    let no_regions = vec![0; runner.cfg.k];
    let mut restart = 0u64;
    'outer: while runner.remaining() > 0 {
        runner.state.iteration += 1;
        let starts = match sequence.as_mut() {
            Some(seq) => {
                let mut picks = Vec::with_capacity(q);
                for _ in 0..q {
                    match seq.next_start() {
                        Ok(x) => picks.push(x),
                        Err(e) => {
                            runner.warn(format!("q-mEI start failed ({e}); using a random start"));
                            let mut rng = stream(runner.cfg.seed, "fallback-start", &[restart, picks.len() as u64]);
                            picks.push(latin_hypercube(1, &runner.unit, &mut rng).remove(0));
                        }
                    }
                }
                picks
            }
            None => latin_hypercube(q, &runner.unit, &mut stream(runner.cfg.seed, "lhs-starts", &[restart])),
        };
        restart += 1;
        let idx = runner.add_and_evaluate(&starts);
        runner.record("start", &no_regions);
        let mut threads: Vec<Thread> = starts
            .iter()
            .zip(&idx)
            .map(|(x, &i)| Thread {
                state: MeshState::new(x.clone(), runner.state.archive.point(i).sample_mean(), mesh0),
                queue: vec![],
                polled: vec![],
            })
            .collect();
        loop {
            if runner.remaining() == 0 {
                break 'outer;
            }
            let live: Vec<usize> = (0..threads.len()).filter(|&j| threads[j].state.mesh_size > min_mesh).collect();
            if live.is_empty() {
                break;
            }
            let mut wave = Vec::with_capacity(live.len());
            for &j in &live {
                let t = &mut threads[j];
                if t.queue.is_empty() {
                    t.queue = poll_candidates(&t.state, &runner.unit);
                    t.queue.reverse();
                }
                wave.push(t.queue.pop().expect("poll set is never empty"));
            }
            let idx = runner.add_and_evaluate(&wave);
            for (&j, &i) in live.iter().zip(&idx) {
                let t = &mut threads[j];
                t.polled.push(i);
                if t.queue.is_empty() {
                    runner.finish_poll(t);
                }
            }
            runner.record("search", &no_regions);
        }
    }
    Ok(runner.finish())
}
