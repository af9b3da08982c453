//! Mergeable central-moment accumulators.
//!
//! Accumulators store centered power sums about their own mean and combine by
//! re-centring both operands about the pooled mean (binomial shift), so
//! merging is exact up to rounding in any grouping.

// Unused when std is linked (tests), where f64 has inherent methods.
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::path::Trajectory;

const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// Univariate accumulator up to the fourth central moment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    // sums[k] = sum (x - mean)^k for k = 2..=4; slots 0 and 1 unused
    sums: [f64; 5],
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::new();
        for &x in xs {
            m.push(x);
        }
        m
    }

    pub fn push(&mut self, x: f64) {
        self.merge(&Moments {
            n: 1,
            mean: x,
            sums: [0.0; 5],
        });
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let nf = n as f64;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.n as f64 / nf);
        let da = self.mean - mean;
        let db = other.mean - mean;
        let mut sums = [0.0; 5];
        for (p, slot) in sums.iter_mut().enumerate().skip(2) {
            *slot = shifted(&self.sums, self.n, p, da) + shifted(&other.sums, other.n, p, db);
        }
        *self = Moments { n, mean, sums };
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.sums[2] / (self.n - 1) as f64
        }
    }

    /// Population central moment of order 2, 3 or 4.
    pub fn central(&self, order: usize) -> f64 {
        assert!(
            (2..=4).contains(&order),
            "central moment order must be 2..=4"
        );
        if self.n == 0 {
            0.0
        } else {
            self.sums[order] / self.n as f64
        }
    }

    pub fn se_mean(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    /// Large-sample standard error of the variance estimate.
    pub fn se_variance(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        let m2 = self.central(2);
        ((self.central(4) - m2 * m2).max(0.0) / self.n as f64).sqrt()
    }
}

// Re-centres sum (x - m)^p about m + (-d), given lower-order sums.
fn shifted(sums: &[f64; 5], n: u64, p: usize, d: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=p {
        let s = match k {
            0 => n as f64,
            1 => 0.0,
            _ => sums[k],
        };
        if s != 0.0 {
            total += BINOM[p][k] * s * d.powi((p - k) as i32);
        }
    }
    total
}

/// Bivariate accumulator holding mixed central sums S_ab for a, b <= 2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoMoments {
    n: u64,
    mean: [f64; 2],
    sums: [[f64; 3]; 3],
}

impl CoMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.merge(&CoMoments {
            n: 1,
            mean: [x, y],
            sums: [[0.0; 3]; 3],
        });
    }

    pub fn merge(&mut self, other: &CoMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let w = other.n as f64 / n as f64;
        let mean = [
            self.mean[0] + (other.mean[0] - self.mean[0]) * w,
            self.mean[1] + (other.mean[1] - self.mean[1]) * w,
        ];
        let da = [self.mean[0] - mean[0], self.mean[1] - mean[1]];
        let db = [other.mean[0] - mean[0], other.mean[1] - mean[1]];
        let mut sums = [[0.0; 3]; 3];
        for (p, row) in sums.iter_mut().enumerate() {
            for (q, slot) in row.iter_mut().enumerate() {
                if p + q >= 2 {
                    *slot = shifted2(&self.sums, self.n, p, q, da)
                        + shifted2(&other.sums, other.n, p, q, db);
                }
            }
        }
        *self = CoMoments { n, mean, sums };
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn means(&self) -> [f64; 2] {
        self.mean
    }

    /// Unbiased sample covariance; zero for fewer than two samples.
    pub fn covariance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.sums[1][1] / (self.n - 1) as f64
        }
    }

    /// Population mixed central moment E[(X-mx)^a (Y-my)^b].
    pub fn central(&self, a: usize, b: usize) -> f64 {
        if self.n == 0 {
            0.0
        } else if a + b < 2 {
            if a + b == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.sums[a][b] / self.n as f64
        }
    }

    pub fn se_covariance(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        let m11 = self.central(1, 1);
        ((self.central(2, 2) - m11 * m11).max(0.0) / self.n as f64).sqrt()
    }
}

fn shifted2(sums: &[[f64; 3]; 3], n: u64, p: usize, q: usize, d: [f64; 2]) -> f64 {
    let mut total = 0.0;
    for i in 0..=p {
        for j in 0..=q {
            let s = match i + j {
                0 => n as f64,
                1 => 0.0,
                _ => sums[i][j],
            };
            if s != 0.0 {
                total += BINOM[p][i]
                    * BINOM[q][j]
                    * s
                    * d[0].powi((p - i) as i32)
                    * d[1].powi((q - j) as i32);
            }
        }
    }
    total
}

/// Per-checkpoint statistics of an ensemble: one [`Moments`] per coordinate
/// and one [`CoMoments`] per unordered coordinate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    checkpoints: Vec<f64>,
    dim: usize,
    coords: Vec<Vec<Moments>>,
    pairs: Vec<Vec<CoMoments>>,
}

impl EnsembleStats {
    pub fn new(checkpoints: &[f64], dim: usize) -> Self {
        let npairs = dim * dim.saturating_sub(1) / 2;
        EnsembleStats {
            checkpoints: checkpoints.to_vec(),
            dim,
            coords: vec![vec![Moments::new(); dim]; checkpoints.len()],
            pairs: vec![vec![CoMoments::new(); npairs]; checkpoints.len()],
        }
    }

    pub fn push(&mut self, trajectory: &Trajectory) {
        for (c, values) in trajectory.checkpoint_values.iter().enumerate() {
            self.push_values(c, values);
        }
    }

    /// Adds one observation of the state at checkpoint index `c`.
    pub fn push_values(&mut self, c: usize, values: &[f64]) {
        assert_eq!(values.len(), self.dim, "state dimension mismatch");
        for (m, &x) in self.coords[c].iter_mut().zip(values) {
            m.push(x);
        }
        let mut k = 0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                self.pairs[c][k].push(values[i], values[j]);
                k += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &EnsembleStats) {
        assert_eq!(self.dim, other.dim, "merging stats of different dimension");
        assert_eq!(
            self.checkpoints, other.checkpoints,
            "merging stats with different checkpoints"
        );
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
    }

    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of trajectories merged so far.
    pub fn count(&self) -> u64 {
        self.coords
            .first()
            .and_then(|c| c.first())
            .map_or(0, Moments::count)
    }

    /// Index of the checkpoint exactly equal to `t`.
    pub fn checkpoint_index(&self, t: f64) -> Option<usize> {
        self.checkpoints.iter().position(|&c| c == t)
    }

    pub fn moments(&self, c: usize, i: usize) -> &Moments {
        &self.coords[c][i]
    }

    /// Mixed accumulator for coordinates `i != j`; the returned means are in
    /// the order `(min(i,j), max(i,j))`.
    pub fn comoments(&self, c: usize, i: usize, j: usize) -> &CoMoments {
        assert!(
            i != j && i < self.dim && j < self.dim,
            "invalid coordinate pair"
        );
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = a * (2 * self.dim - a - 1) / 2 + (b - a - 1);
        &self.pairs[c][k]
    }

    pub fn mean(&self, c: usize, i: usize) -> f64 {
        self.coords[c][i].mean()
    }

    pub fn variance(&self, c: usize, i: usize) -> f64 {
        self.coords[c][i].variance()
    }

    pub fn covariance(&self, c: usize, i: usize, j: usize) -> f64 {
        if i == j {
            self.variance(c, i)
        } else {
            self.comoments(c, i, j).covariance()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
        (m, v, m4)
    }

    #[test]
    fn matches_two_pass() {
        let xs = [1.5, 2.0, -3.25, 8.0, 0.5, 4.0, 4.0];
        let m = Moments::from_slice(&xs);
        let (mean, var, m4) = naive(&xs);
        assert!((m.mean() - mean).abs() < 1e-14);
        assert!((m.variance() - var).abs() < 1e-12);
        assert!((m.central(4) - m4).abs() < 1e-10);
    }

    #[test]
    fn single_sample() {
        let m = Moments::from_slice(&[3.0]);
        assert_eq!(m.mean(), 3.0);
        assert_eq!(m.variance(), 0.0);
        let mut c = CoMoments::new();
        c.push(1.0, 2.0);
        assert_eq!(c.covariance(), 0.0);
    }

    #[test]
    fn covariance_two_pass() {
        let xs = [1.0, 2.0, 4.0, 7.0, 11.0];
        let ys = [2.0, 1.0, 5.0, 5.0, 9.0];
        let mut c = CoMoments::new();
        for (&x, &y) in xs.iter().zip(&ys) {
            c.push(x, y);
        }
        let mx = 5.0;
        let my = 4.4;
        let s11: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let s22: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx).powi(2) * (y - my).powi(2))
            .sum();
        assert!((c.covariance() - s11 / 4.0).abs() < 1e-12);
        assert!((c.central(2, 2) - s22 / 5.0).abs() < 1e-10);
    }

    #[test]
    fn pair_indexing() {
        let mut s = EnsembleStats::new(&[0.0], 4);
        s.push_values(0, &[1.0, 2.0, 3.0, 4.0]);
        s.push_values(0, &[2.0, 0.0, 3.0, 8.0]);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let c = s.comoments(0, i, j);
                    let lo = i.min(j);
                    let hi = i.max(j);
                    assert_eq!(c.means(), [s.mean(0, lo), s.mean(0, hi)]);
                }
            }
        }
        assert_eq!(s.covariance(0, 0, 3), 2.0);
        assert_eq!(s.covariance(0, 2, 1), 0.0);
    }

    proptest! {
        #[test]
        fn merge_in_any_grouping(xs in prop::collection::vec(-50.0f64..50.0, 2..60), split in 0usize..60) {
            let k = split.min(xs.len());
            let whole = Moments::from_slice(&xs);
            let mut left = Moments::from_slice(&xs[..k]);
            let right = Moments::from_slice(&xs[k..]);
            let mut swapped = right;
            swapped.merge(&left);
            left.merge(&right);
            for m in [left, swapped] {
                prop_assert_eq!(m.count(), whole.count());
                let scale = whole.mean().abs().max(1.0);
                prop_assert!((m.mean() - whole.mean()).abs() <= 1e-12 * scale);
                prop_assert!((m.variance() - whole.variance()).abs() <= 1e-9 * whole.variance().max(1.0));
                prop_assert!((m.central(4) - whole.central(4)).abs() <= 1e-8 * whole.central(4).max(1.0));
            }
        }
    }
}
