// Unused when std is linked (tests), where f64 has inherent methods.
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand_core::RngCore;

use super::rng::{exponential, uniform_open_closed};
use crate::model::{EntrySpec, NavigationMatrix};
use crate::{Error, Result};

/// Coordinates may dip this far below zero from rounding before an event is
/// treated as a tenability breach.
pub const TENABILITY_GUARD: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub time: f64,
    pub coords: Vec<f64>,
}

impl WalkState {
    pub fn new(time: f64, coords: Vec<f64>) -> Self {
        WalkState { time, coords }
    }
}

/// One renewal of the master clock.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub event_time: f64,
    /// Zero-based index of the coordinate whose row was applied.
    pub fired_coordinate: usize,
    /// The realized row sample that was added to the state.
    pub applied_increments: Vec<f64>,
}

/// Draws the firing coordinate with probability proportional to its
/// (nonnegative part of the) value. `total` is the positive coordinate sum.
#[inline]
pub(crate) fn choose_coordinate<R: RngCore>(coords: &[f64], total: f64, rng: &mut R) -> usize {
    let target = uniform_open_closed(rng) * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in coords.iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = i;
            if target < acc {
                return i;
            }
        }
    }
    last
}

#[inline]
pub(crate) fn clock_rate(coords: &[f64]) -> Result<f64> {
    let sum: f64 = coords.iter().sum();
    if sum > 0.0 {
        Ok(sum)
    } else {
        Err(Error::RateUnderflow { sum })
    }
}

/// Samples row `i` into `increments`.
#[inline]
pub(crate) fn sample_row<R: RngCore>(
    matrix: &NavigationMatrix,
    i: usize,
    rng: &mut R,
    increments: &mut [f64],
) {
    for (inc, e) in increments.iter_mut().zip(matrix.row(i)) {
        *inc = match *e {
            EntrySpec::Constant(a) => a,
            EntrySpec::Exponential { rate } => exponential(rng, rate),
        };
    }
}

/// Advances `coords` by one event in place; returns the waiting time and the
/// fired coordinate. `increments` receives the applied row sample.
#[inline]
pub(crate) fn advance<R: RngCore>(
    coords: &mut [f64],
    matrix: &NavigationMatrix,
    rng: &mut R,
    increments: &mut [f64],
) -> Result<(f64, usize)> {
    let rate = clock_rate(coords)?;
    let wait = exponential(rng, rate);
    let fired = choose_coordinate(coords, rate, rng);
    sample_row(matrix, fired, rng, increments);
    for (j, (x, inc)) in coords.iter_mut().zip(increments.iter()).enumerate() {
        *x += inc;
        if *x < TENABILITY_GUARD {
            return Err(Error::TenabilityBreach {
                coordinate: j,
                value: *x,
            });
        }
    }
    Ok((wait, fired))
}

/// Draws the next event from `state`.
pub fn step<R: RngCore>(
    state: &WalkState,
    matrix: &NavigationMatrix,
    rng: &mut R,
) -> Result<(WalkState, EventRecord)> {
    if state.coords.len() != matrix.dim() {
        return Err(Error::InvalidParameter(
            "state and matrix dimensions differ".into(),
        ));
    }
    let mut coords = state.coords.clone();
    let mut increments = vec![0.0; coords.len()];
    let (wait, fired) = advance(&mut coords, matrix, rng, &mut increments)?;
    let time = state.time + wait;
    Ok((
        WalkState { time, coords },
        EventRecord {
            event_time: time,
            fired_coordinate: fired,
            applied_increments: increments,
        },
    ))
}

/// Counts of the number of events in windows `(t, t + delta_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCounts {
    pub trials: u64,
    pub zero: u64,
    /// Exactly one event, indexed by the fired coordinate.
    pub one_of_type: Vec<u64>,
    pub two_or_more: u64,
}

impl WindowCounts {
    fn frac(&self, k: u64) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            k as f64 / self.trials as f64
        }
    }

    pub fn p_zero(&self) -> f64 {
        self.frac(self.zero)
    }

    pub fn p_one(&self, i: usize) -> f64 {
        self.frac(self.one_of_type[i])
    }

    pub fn p_two_or_more(&self) -> f64 {
        self.frac(self.two_or_more)
    }
}

/// Monte Carlo estimate of the event-count law in a short window started
/// from `state`. A state with a nonpositive clock rate never fires; after the
/// first event the second waiting time uses the updated coordinate sum.
pub fn event_window_counts<R: RngCore>(
    state: &WalkState,
    matrix: &NavigationMatrix,
    delta_t: f64,
    trials: u64,
    rng: &mut R,
) -> WindowCounts {
    let c = matrix.dim();
    let mut counts = WindowCounts {
        trials,
        zero: 0,
        one_of_type: vec![0; c],
        two_or_more: 0,
    };
    let Ok(rate) = clock_rate(&state.coords) else {
        counts.zero = trials;
        return counts;
    };
    let mut coords = vec![0.0; c];
    let mut inc = vec![0.0; c];
    for _ in 0..trials {
        let first = exponential(rng, rate);
        if !(first <= delta_t) {
            counts.zero += 1;
            continue;
        }
        let fired = choose_coordinate(&state.coords, rate, rng);
        sample_row(matrix, fired, rng, &mut inc);
        for ((x, s), d) in coords.iter_mut().zip(&state.coords).zip(&inc) {
            *x = s + d;
        }
        let second = match clock_rate(&coords) {
            Ok(r) => exponential(rng, r),
            Err(_) => f64::INFINITY,
        };
        if first + second <= delta_t {
            counts.two_or_more += 1;
        } else {
            counts.one_of_type[fired] += 1;
        }
    }
    counts
}
