//! Operators that act diagonally (or densely) on basis coefficients.

use nalgebra::{DMatrix, DVector};

use crate::basis::HFunction;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Default floor used by [`SpectralOperator::inverse`].
pub const DEFAULT_INVERSE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Covariance,
    Autocorrelation,
}

/// Operator diagonal in the shared sine basis, given by its eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
    kind: OperatorKind,
}

impl SpectralOperator {
    /// Positive, nonincreasing eigenvalues.
    pub fn covariance(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::param("operator needs at least one eigenvalue"));
        }
        if let Some(i) = eigenvalues
            .iter()
            .position(|l| !(l.is_finite() && *l > 0.0))
        {
            return Err(Error::param(format!(
                "covariance eigenvalue {} = {} is not positive",
                i + 1,
                eigenvalues[i]
            )));
        }
        if let Some(i) = eigenvalues.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::param(format!(
                "covariance eigenvalues increase at index {}",
                i + 2
            )));
        }
        Ok(Self {
            eigenvalues,
            kind: OperatorKind::Covariance,
        })
    }

    /// Eigenvalues strictly inside `(-1, 1)`.
    pub fn autocorrelation(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::param("operator needs at least one eigenvalue"));
        }
        if let Some(i) = eigenvalues
            .iter()
            .position(|l| !(l.is_finite() && l.abs() < 1.0))
        {
            return Err(Error::param(format!(
                "autocorrelation eigenvalue {} = {} is outside (-1, 1)",
                i + 1,
                eigenvalues[i]
            )));
        }
        Ok(Self {
            eigenvalues,
            kind: OperatorKind::Autocorrelation,
        })
    }

    /// Skips the kind invariants. Used for degenerate test inputs and for
    /// operators assembled from estimates (e.g. the plug-in weights).
    pub fn from_raw(eigenvalues: Vec<f64>, kind: OperatorKind) -> Self {
        assert!(
            !eigenvalues.is_empty(),
            "operator needs at least one eigenvalue"
        );
        Self { eigenvalues, kind }
    }

    pub fn identity(k: usize) -> Self {
        Self::from_raw(vec![1.0; k], OperatorKind::Covariance)
    }

    /// Covariance of the stationary ARH(1) law: `λ_k(R_δ) / (1 − λ_k(ρ)²)`.
    pub fn stationary_covariance(
        rho: &SpectralOperator,
        r_delta: &SpectralOperator,
    ) -> Result<Self> {
        if rho.len() != r_delta.len() {
            return Err(Error::dims(format!(
                "rho has K = {}, R_delta has K = {}",
                rho.len(),
                r_delta.len()
            )));
        }
        let eigs = rho
            .eigenvalues
            .iter()
            .zip(&r_delta.eigenvalues)
            .map(|(r, d)| d / (1.0 - r * r))
            .collect();
        Ok(Self::from_raw(eigs, OperatorKind::Covariance))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_raw(self.eigenvalues.iter().map(|l| s * l).collect(), self.kind)
    }

    pub fn apply(&self, f: &HFunction) -> Result<HFunction> {
        if f.len() != self.len() {
            return Err(Error::dims(format!(
                "operator has K = {}, function has K = {}",
                self.len(),
                f.len()
            )));
        }
        let coeffs = self
            .eigenvalues
            .iter()
            .zip(f.coeffs())
            .map(|(l, c)| l * c)
            .collect();
        Ok(HFunction::from_raw(coeffs, f.interval()))
    }

    /// `j`-th power; `j = 0` is the identity.
    pub fn power(&self, j: u32) -> Self {
        let exp = i32::try_from(j).expect("power exponent overflow");
        Self::from_raw(
            self.eigenvalues.iter().map(|l| l.powi(exp)).collect(),
            self.kind,
        )
    }

    /// Inverse with eigenvalues clamped below at `floor`.
    pub fn inverse(&self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::param(format!(
                "inverse floor must be positive, got {floor}"
            )));
        }
        if self.kind != OperatorKind::Covariance {
            return Err(Error::param("only covariance operators are inverted"));
        }
        Ok(Self::from_raw(
            self.eigenvalues
                .iter()
                .map(|l| 1.0 / l.max(floor))
                .collect(),
            OperatorKind::Covariance,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

/// Kernel regressor `X_n^j`: entry `(k, l)` maps input mode `l` to output mode `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorOperator {
    repr: Repr,
}

impl RegressorOperator {
    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("regressor needs K >= 1"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("regressor entries must be finite"));
        }
        Ok(Self {
            repr: Repr::Diagonal(entries),
        })
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::dims(format!(
                "regressor matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("regressor entries must be finite"));
        }
        Ok(Self {
            repr: Repr::Dense(matrix),
        })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            repr: Repr::Diagonal(vec![1.0; k]),
        }
    }

    pub fn k(&self) -> usize {
        match &self.repr {
            Repr::Diagonal(d) => d.len(),
            Repr::Dense(m) => m.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    /// Diagonal entries if the operator is stored diagonally.
    pub fn diagonal_entries(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Diagonal(d) => Some(d),
            Repr::Dense(_) => None,
        }
    }

    /// Entry `(k, l)`, 0-based.
    #[inline]
    pub fn entry(&self, k: usize, l: usize) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => {
                if k == l {
                    d[k]
                } else {
                    0.0
                }
            }
            Repr::Dense(m) => m[(k, l)],
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            Repr::Dense(m) => m.clone(),
        }
    }

    pub fn apply(&self, f: &HFunction) -> Result<HFunction> {
        if f.len() != self.k() {
            return Err(Error::dims(format!(
                "regressor has K = {}, function has K = {}",
                self.k(),
                f.len()
            )));
        }
        let coeffs = match &self.repr {
            Repr::Diagonal(d) => d.iter().zip(f.coeffs()).map(|(x, c)| x * c).collect(),
            Repr::Dense(m) => (m * DVector::from_column_slice(f.coeffs())).data.into(),
        };
        Ok(HFunction::from_raw(coeffs, f.interval()))
    }

    /// `Vᵀ X`: re-expresses the output in the orthonormal basis given by the columns of `v`.
    pub fn rotate_output(&self, v: &DMatrix<f64>) -> Result<Self> {
        if v.nrows() != self.k() || v.ncols() != self.k() {
            return Err(Error::dims("rotation must be K x K"));
        }
        let rotated = match &self.repr {
            Repr::Diagonal(d) => DMatrix::from_fn(self.k(), self.k(), |r, l| v[(l, r)] * d[l]),
            Repr::Dense(m) => v.tr_mul(m),
        };
        Ok(Self {
            repr: Repr::Dense(rotated),
        })
    }

    pub fn hilbert_schmidt_norm(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Repr::Dense(m) => m.norm(),
        }
    }

    pub fn operator_norm(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().fold(0.0, |acc: f64, x| acc.max(x.abs())),
            Repr::Dense(m) => m.clone().singular_values().max(),
        }
    }
}

/// `N × p` array of regressors; row `n` holds `X_n^1, …, X_n^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorPanel {
    entries: Vec<RegressorOperator>,
    n: usize,
    p: usize,
    k: usize,
}

impl RegressorPanel {
    pub fn new(rows: Vec<Vec<RegressorOperator>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::param(format!("panel needs N >= 2 rows, got {n}")));
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::param("panel needs p >= 1 regressors"));
        }
        let k = rows[0][0].k();
        let mut entries = Vec::with_capacity(n * p);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::dims(format!(
                    "row {} has {} regressors, expected {p}",
                    t + 1,
                    row.len()
                )));
            }
            for op in row {
                if op.k() != k {
                    return Err(Error::dims(format!(
                        "row {} mixes K = {} with K = {k}",
                        t + 1,
                        op.k()
                    )));
                }
                entries.push(op);
            }
        }
        Ok(Self { entries, n, p, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `X_{t+1}^{j+1}` (0-based indices).
    pub fn get(&self, t: usize, j: usize) -> &RegressorOperator {
        &self.entries[t * self.p + j]
    }

    pub fn row(&self, t: usize) -> &[RegressorOperator] {
        &self.entries[t * self.p..(t + 1) * self.p]
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(RegressorOperator::is_diagonal)
    }

    /// First `n` rows.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n < 2 || n > self.n {
            return Err(Error::param(format!(
                "cannot truncate a panel of N = {} to {n} rows",
                self.n
            )));
        }
        Ok(Self {
            entries: self.entries[..n * self.p].to_vec(),
            n,
            p: self.p,
            k: self.k,
        })
    }

    pub fn rotate_output(&self, v: &DMatrix<f64>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|op| op.rotate_output(v))
            .collect::<Result<_>>()?;
        Ok(Self {
            entries,
            n: self.n,
            p: self.p,
            k: self.k,
        })
    }
}

/// `Σ_j X^j(β_j)` for one row of regressors.
pub fn regression_mean(row: &[RegressorOperator], beta: &[HFunction]) -> Result<HFunction> {
    if row.len() != beta.len() {
        return Err(Error::dims(format!(
            "{} regressors vs {} parameters",
            row.len(),
            beta.len()
        )));
    }
    let first = beta
        .first()
        .ok_or_else(|| Error::param("need at least one parameter"))?;
    let mut acc = HFunction::zeros(first.len(), first.interval());
    for (op, b) in row.iter().zip(beta) {
        acc = acc.add(&op.apply(b)?)?;
    }
    Ok(acc)
}

/// Diagonal panel from a model's closed-form regressor sequences.
pub fn build_model_regressors(model: &ModelSpec, n: usize, k: usize) -> Result<RegressorPanel> {
    if n == 0 || k == 0 {
        return Err(Error::param("N and K must be positive"));
    }
    let rows = (1..=n)
        .map(|t| model.regressor_row(t, k))
        .collect::<Result<Vec<_>>>()?;
    RegressorPanel::new(rows)
}
