//! Process configuration: navigation matrices, initial states, scheme
//! classification and tenability.

// Unused when std is linked (tests), where f64 has inherent methods.
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::SquareMatrix;
use crate::{Error, Result};

/// One entry `A_{i,j}` of the navigation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntrySpec {
    Constant(f64),
    /// Exponentially distributed displacement with the given rate (mean `1/rate`).
    Exponential {
        rate: f64,
    },
}

impl EntrySpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        if rate > 0.0 && rate.is_finite() {
            Ok(EntrySpec::Exponential { rate })
        } else {
            Err(Error::InvalidParameter(format!(
                "exponential rate must be positive and finite, got {rate}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            EntrySpec::Constant(a) => a,
            EntrySpec::Exponential { rate } => 1.0 / rate,
        }
    }

    /// Moment generating function `E[e^{u A}]`.
    pub fn mgf(&self, u: f64) -> Result<f64> {
        match *self {
            EntrySpec::Constant(a) => Ok((u * a).exp()),
            EntrySpec::Exponential { rate } if u < rate => Ok(rate / (rate - u)),
            EntrySpec::Exponential { rate } => Err(Error::domain(
                "entry mgf",
                format!("exponential(rate {rate}) mgf needs u < {rate}, got {u}"),
            )),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, EntrySpec::Constant(a) if *a == 0.0)
    }
}

impl fmt::Display for EntrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntrySpec::Constant(a) => write!(f, "{a}"),
            EntrySpec::Exponential { rate } => write!(f, "exp({rate})"),
        }
    }
}

impl From<f64> for EntrySpec {
    fn from(a: f64) -> Self {
        EntrySpec::Constant(a)
    }
}

/// Square `c x c` navigation matrix; row `i` is added when coordinate `i` fires.
#[derive(Debug, Clone, PartialEq)]
pub struct NavigationMatrix {
    dim: usize,
    entries: Vec<EntrySpec>,
}

impl NavigationMatrix {
    /// Row-major entries; `entries.len()` must be `dim * dim` with `dim >= 1`.
    pub fn new(dim: usize, entries: Vec<EntrySpec>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be at least 1".into(),
            ));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "a {dim}x{dim} matrix needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for e in &entries {
            match *e {
                EntrySpec::Constant(a) if !a.is_finite() => {
                    return Err(Error::InvalidParameter(format!("entry {a} is not finite")))
                }
                EntrySpec::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                    return Err(Error::InvalidParameter(format!(
                        "exponential rate {rate} must be positive"
                    )))
                }
                _ => {}
            }
        }
        Ok(NavigationMatrix { dim, entries })
    }

    /// All-constant matrix from rows.
    pub fn from_constants<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "row of length {} in a matrix with {dim} rows",
                    r.len()
                )));
            }
            entries.extend(r.iter().map(|&a| EntrySpec::Constant(a)));
        }
        Self::new(dim, entries)
    }

    /// Diagonal matrix with the given entries and zeros elsewhere.
    pub fn diagonal(diag: &[EntrySpec]) -> Result<Self> {
        let dim = diag.len();
        let mut entries = vec![EntrySpec::Constant(0.0); dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * dim + i] = d;
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> EntrySpec {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[EntrySpec] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[EntrySpec] {
        &self.entries
    }

    fn constant(&self, i: usize, j: usize) -> Option<f64> {
        match self.entry(i, j) {
            EntrySpec::Constant(a) => Some(a),
            EntrySpec::Exponential { .. } => None,
        }
    }

    fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.entry(i, j).is_zero()))
    }
}

/// Starting position `X(0)`: nonnegative coordinates with a positive sum.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState(Vec<f64>);

impl InitialState {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("initial state is empty".into()));
        }
        if let Some(x) = coords.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "initial coordinates must be finite and nonnegative, got {x}"
            )));
        }
        if !(coords.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidParameter(
                "initial coordinate sum must be positive".into(),
            ));
        }
        Ok(InitialState(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Named families of navigation matrices that have closed-form analytics.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    General,
    /// `diag(alpha_1, ..., alpha_c)` with positive constants.
    DiagonalConstant {
        alphas: Vec<f64>,
    },
    /// Diagonal matrix of exponential entries with the given rates.
    DiagonalExponential {
        rates: Vec<f64>,
    },
    /// `[[-g, g], [g, -g]]`.
    Ehrenfest {
        gamma: f64,
    },
    /// `[[-g, -g], [g, g]]`.
    Hill {
        gamma: f64,
    },
    /// `[[alpha, delta - alpha], [0, delta]]` with `0 < alpha < delta`.
    BalancedTriangular {
        alpha: f64,
        delta: f64,
    },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::General => "general",
            Scheme::DiagonalConstant { .. } => "diagonal-constant",
            Scheme::DiagonalExponential { .. } => "diagonal-exponential",
            Scheme::Ehrenfest { .. } => "ehrenfest",
            Scheme::Hill { .. } => "hill",
            Scheme::BalancedTriangular { .. } => "balanced-triangular",
        }
    }

    /// The navigation matrix a named scheme stands for; `None` for `General`.
    pub fn canonical_matrix(&self) -> Option<NavigationMatrix> {
        let m = match self {
            Scheme::General => return None,
            Scheme::DiagonalConstant { alphas } => {
                let diag: Vec<_> = alphas.iter().map(|&a| EntrySpec::Constant(a)).collect();
                NavigationMatrix::diagonal(&diag)
            }
            Scheme::DiagonalExponential { rates } => {
                let diag: Vec<_> = rates
                    .iter()
                    .map(|&rate| EntrySpec::Exponential { rate })
                    .collect();
                NavigationMatrix::diagonal(&diag)
            }
            &Scheme::Ehrenfest { gamma } => {
                NavigationMatrix::from_constants(&[[-gamma, gamma], [gamma, -gamma]])
            }
            &Scheme::Hill { gamma } => {
                NavigationMatrix::from_constants(&[[-gamma, -gamma], [gamma, gamma]])
            }
            &Scheme::BalancedTriangular { alpha, delta } => {
                NavigationMatrix::from_constants(&[[alpha, delta - alpha], [0.0, delta]])
            }
        };
        m.ok()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::General => write!(f, "general"),
            Scheme::DiagonalConstant { alphas } => write!(f, "diagonal-constant{alphas:?}"),
            Scheme::DiagonalExponential { rates } => write!(f, "diagonal-exponential{rates:?}"),
            Scheme::Ehrenfest { gamma } => write!(f, "ehrenfest(gamma={gamma})"),
            Scheme::Hill { gamma } => write!(f, "hill(gamma={gamma})"),
            Scheme::BalancedTriangular { alpha, delta } => {
                write!(f, "balanced-triangular(alpha={alpha}, delta={delta})")
            }
        }
    }
}

/// Matches a matrix against the named schemes. Entries are compared exactly.
pub fn classify(matrix: &NavigationMatrix) -> Scheme {
    let c = |i, j| matrix.constant(i, j);
    if matrix.dim() == 2 {
        if let (Some(a), Some(b), Some(p), Some(q)) = (c(0, 0), c(0, 1), c(1, 0), c(1, 1)) {
            if b > 0.0 && a == -b && p == b && q == -b {
                return Scheme::Ehrenfest { gamma: b };
            }
            if p > 0.0 && a == -p && b == -p && q == p {
                return Scheme::Hill { gamma: p };
            }
            if p == 0.0 && a > 0.0 && a < q && b == q - a {
                return Scheme::BalancedTriangular { alpha: a, delta: q };
            }
        }
    }
    if matrix.is_diagonal() {
        let diag: Vec<_> = (0..matrix.dim()).map(|i| matrix.entry(i, i)).collect();
        if diag
            .iter()
            .all(|e| matches!(e, EntrySpec::Constant(a) if *a > 0.0))
        {
            return Scheme::DiagonalConstant {
                alphas: diag.iter().map(EntrySpec::mean).collect(),
            };
        }
        if diag
            .iter()
            .all(|e| matches!(e, EntrySpec::Exponential { .. }))
        {
            let rates = diag
                .iter()
                .map(|e| match e {
                    EntrySpec::Exponential { rate } => *rate,
                    EntrySpec::Constant(_) => unreachable!(),
                })
                .collect();
            return Scheme::DiagonalExponential { rates };
        }
    }
    Scheme::General
}

/// A scheme-specific tenability condition that the initial state violates.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch {
        matrix: usize,
        init: usize,
    },
    /// Ehrenfest needs `X(0)/gamma` and `Y(0)/gamma` to be nonnegative integers.
    NotOnLattice {
        coordinate: usize,
        value: f64,
        gamma: f64,
    },
    /// Ehrenfest with both quotients zero.
    EmptyLattice,
    /// Hill needs `Y(0) > X(0)`.
    HillBelowDiagonal {
        x0: f64,
        y0: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { matrix, init } => {
                write!(
                    f,
                    "matrix dimension {matrix} differs from initial state dimension {init}"
                )
            }
            Violation::NotOnLattice {
                coordinate,
                value,
                gamma,
            } => write!(
                f,
                "coordinate {} = {value} is not a nonnegative integer multiple of gamma = {gamma}",
                coordinate + 1
            ),
            Violation::EmptyLattice => write!(f, "X(0)/gamma and Y(0)/gamma are both zero"),
            Violation::HillBelowDiagonal { x0, y0 } => {
                write!(f, "Y(0) > X(0) required (got X(0) = {x0}, Y(0) = {y0})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TenabilityReport {
    Tenable,
    Violated(Vec<Violation>),
    /// No criterion is known for this matrix; the simulator guards at run time.
    Unknown {
        warning: String,
    },
}

impl TenabilityReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, TenabilityReport::Tenable)
    }

    /// True unless a violation was found.
    pub fn may_proceed(&self) -> bool {
        !matches!(self, TenabilityReport::Violated(_))
    }
}

const LATTICE_TOLERANCE: f64 = 1e-9;

fn is_nonnegative_integer(q: f64) -> bool {
    q >= 0.0 && (q - q.round()).abs() <= LATTICE_TOLERANCE * q.abs().max(1.0)
}

pub fn check_tenability(matrix: &NavigationMatrix, init: &InitialState) -> TenabilityReport {
    if matrix.dim() != init.dim() {
        return TenabilityReport::Violated(vec![Violation::DimensionMismatch {
            matrix: matrix.dim(),
            init: init.dim(),
        }]);
    }
    let x = init.coords();
    match classify(matrix) {
        Scheme::DiagonalConstant { .. }
        | Scheme::DiagonalExponential { .. }
        | Scheme::BalancedTriangular { .. } => TenabilityReport::Tenable,
        Scheme::Ehrenfest { gamma } => {
            let mut violations = Vec::new();
            let quotients: Vec<f64> = x.iter().map(|v| v / gamma).collect();
            for (coordinate, (&q, &value)) in quotients.iter().zip(x).enumerate() {
                if !is_nonnegative_integer(q) {
                    violations.push(Violation::NotOnLattice {
                        coordinate,
                        value,
                        gamma,
                    });
                }
            }
            if violations.is_empty() && quotients.iter().all(|q| q.round() == 0.0) {
                violations.push(Violation::EmptyLattice);
            }
            if violations.is_empty() {
                TenabilityReport::Tenable
            } else {
                TenabilityReport::Violated(violations)
            }
        }
        Scheme::Hill { .. } => {
            if x[1] > x[0] {
                TenabilityReport::Tenable
            } else {
                TenabilityReport::Violated(vec![Violation::HillBelowDiagonal {
                    x0: x[0],
                    y0: x[1],
                }])
            }
        }
        Scheme::General => TenabilityReport::Unknown {
            warning: "no tenability criterion is known for a general navigation matrix".into(),
        },
    }
}

/// Entrywise expectation `E[A]`.
pub fn row_mean_matrix(matrix: &NavigationMatrix) -> SquareMatrix {
    let n = matrix.dim();
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = matrix.entry(i, j).mean();
        }
    }
    m
}

/// Joint MGF `psi_i(u) = E[exp(sum_j u_j A_{i,j})]` of row `i`, with the
/// entries of a row independent.
pub fn row_mgf(matrix: &NavigationMatrix, i: usize, u: &[f64]) -> Result<f64> {
    if u.len() != matrix.dim() || i >= matrix.dim() {
        return Err(Error::InvalidParameter(format!(
            "row_mgf needs row < {} and a length-{} argument",
            matrix.dim(),
            matrix.dim()
        )));
    }
    let mut exponent = 0.0;
    let mut factor = 1.0;
    for (e, &uj) in matrix.row(i).iter().zip(u) {
        match *e {
            EntrySpec::Constant(a) => exponent += a * uj,
            exp @ EntrySpec::Exponential { .. } => factor *= exp.mgf(uj)?,
        }
    }
    Ok(factor * exponent.exp())
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub matrix: NavigationMatrix,
    pub init: InitialState,
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub ensemble_size: u64,
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub const DEFAULT_ENSEMBLE_SIZE: u64 = 10_000;

    /// Validates and assembles a scenario; every violated invariant is listed.
    pub fn new(
        matrix: NavigationMatrix,
        init: InitialState,
        horizon: f64,
        checkpoints: Vec<f64>,
        ensemble_size: u64,
        master_seed: u64,
    ) -> Result<Self> {
        let cfg = ScenarioConfig {
            matrix,
            init,
            horizon,
            checkpoints,
            ensemble_size,
            master_seed,
        };
        let problems = cfg.problems();
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.matrix.dim() != self.init.dim() {
            out.push(format!(
                "matrix dimension {} differs from init length {}",
                self.matrix.dim(),
                self.init.dim()
            ));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            out.push(format!(
                "horizon must be finite and nonnegative, got {}",
                self.horizon
            ));
        }
        if self.checkpoints.is_empty() {
            out.push("at least one checkpoint is required".into());
        }
        if self.checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
            out.push("checkpoints must be strictly increasing".into());
        }
        if let Some(&first) = self.checkpoints.first() {
            if !(first >= 0.0) {
                out.push(format!("checkpoints must be nonnegative, got {first}"));
            }
        }
        if let Some(&last) = self.checkpoints.last() {
            if !(last <= self.horizon) {
                out.push(format!(
                    "last checkpoint {last} exceeds horizon {}",
                    self.horizon
                ));
            }
        }
        if self.ensemble_size == 0 {
            out.push("ensemble_size must be positive".into());
        }
        if let TenabilityReport::Violated(v) = check_tenability(&self.matrix, &self.init) {
            out.extend(v.iter().map(|v| format!("not tenable: {v}")));
        }
        out
    }

    pub fn scheme(&self) -> Scheme {
        classify(&self.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}
