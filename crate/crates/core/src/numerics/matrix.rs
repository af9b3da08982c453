// Unused when std is linked (tests), where f64 has inherent methods.
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
#[allow(unused_imports)]
use num_traits::Float;

/// Dense row-major square matrix for the small systems in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; panics when the rows are not square.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), dim, "matrix rows must have length {dim}");
            data.extend_from_slice(r);
        }
        SquareMatrix { dim, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        SquareMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

const TAYLOR_ORDER: usize = 18;

/// `e^{M t}` by scaling and squaring around a Taylor core.
///
/// `M t` is scaled by `2^-s` until its 1-norm is at most 1/2, so the order-18
/// Taylor remainder is below `0.5^19 / 19!` relative; the result is then
/// squared `s` times.
pub fn matrix_exp(m: &SquareMatrix, t: f64) -> SquareMatrix {
    let n = m.dim();
    if t == 0.0 || m.max_abs() == 0.0 {
        return SquareMatrix::identity(n);
    }
    let a = m.scale(t);
    let norm = a.norm_one();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a.scale(0.5f64.powi(squarings as i32));

    // Horner form: I + A(I + A/2(I + A/3(...))).
    let id = SquareMatrix::identity(n);
    let mut acc = id.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        acc = id.add(&scaled.mul(&acc).scale(1.0 / k as f64));
    }
    for _ in 0..squarings {
        acc = acc.mul(&acc);
    }
    acc
}
