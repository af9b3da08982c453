// Unused when std is linked (tests), where f64 has inherent methods.
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::rng::{exponential, trajectory_rng};
use super::step::{choose_coordinate, clock_rate, sample_row, TENABILITY_GUARD};
use crate::model::ScenarioConfig;
use crate::{Error, Result};

/// States in force at each checkpoint of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub checkpoint_values: Vec<Vec<f64>>,
    pub event_count: u64,
}

/// Simulates trajectory `index` of the scenario up to its horizon.
pub fn simulate_path(config: &ScenarioConfig, index: u64) -> Result<Trajectory> {
    simulate_path_observed(config, index, |_, _, _| {})
}

/// Like [`simulate_path`], calling `observer(event_time, fired_coordinate,
/// coords_after)` after every event.
pub fn simulate_path_observed<F>(
    config: &ScenarioConfig,
    index: u64,
    mut observer: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, usize, &[f64]),
{
    let mut rng = trajectory_rng(config.master_seed, index);
    let matrix = &config.matrix;
    let mut coords: Vec<f64> = config.init.coords().to_vec();
    let mut increments = vec![0.0; coords.len()];
    let mut checkpoint_values = Vec::with_capacity(config.checkpoints.len());
    let mut pending = config.checkpoints.iter().copied().peekable();
    let mut time = 0.0;
    let mut events = 0u64;

    let annotate = |e: Error, events: u64| Error::Trajectory {
        index,
        events,
        source: Box::new(e),
    };

    loop {
        let rate = clock_rate(&coords).map_err(|e| annotate(e, events))?;
        let event_time = time + exponential(&mut rng, rate);
        while let Some(&cp) = pending.peek() {
            if cp < event_time {
                checkpoint_values.push(coords.clone());
                pending.next();
            } else {
                break;
            }
        }
        if pending.peek().is_none() {
            break;
        }
        let fired = choose_coordinate(&coords, rate, &mut rng);
        sample_row(matrix, fired, &mut rng, &mut increments);
        for (j, (x, inc)) in coords.iter_mut().zip(&increments).enumerate() {
            *x += inc;
            if *x < TENABILITY_GUARD {
                let e = Error::TenabilityBreach {
                    coordinate: j,
                    value: *x,
                };
                return Err(annotate(e, events + 1));
            }
        }
        time = event_time;
        events += 1;
        observer(time, fired, &coords);
    }
    while pending.next().is_some() {
        checkpoint_values.push(coords.clone());
    }
    Ok(Trajectory {
        checkpoint_values,
        event_count: events,
    })
}
