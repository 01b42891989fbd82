//! Generalized least squares with ARH(1)-correlated functional errors.
//!
//! When `R₀` and `ρ` share the sine eigenbasis, the error covariance of the
//! stacked sample is block diagonal over frequencies, and the block for
//! frequency `k` is `λ_k(R₀) · Λ_k` with `Λ_k` the AR(1) Toeplitz matrix
//! `[λ_k(ρ)^{|i−j|}]`. Its inverse is tridiagonal:
//!
//! ```text
//!                    1   ⎡ 1   −λ                ⎤
//! Λ_k⁻¹  =  ───────────  ⎢−λ  1+λ²  −λ           ⎥
//!             1 − λ²     ⎢      ⋱    ⋱    ⋱      ⎥
//!                        ⎣              −λ   1   ⎦
//! ```
//!
//! so the estimator never materializes the `NK × NK` precision. Each
//! precision block is whitened through its bidiagonal Cholesky factor and
//! the normal equations are accumulated from whitened rows.
//!
//! Two solver paths exist:
//! - per-frequency: diagonal regressors and a coordinatewise precision
//!   decouple into `K` independent `p × p` problems;
//! - dense: anything else accumulates the full `pK × pK` information matrix.
//!
//! Unknown parameters are ordered `(j, l)` with column index `j·K + l`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::basis::HFunction;
use crate::error::{Error, Result};
use crate::parallel::{map_indexed, Execution};
use crate::spectral::{regression_mean, RegressorPanel, SpectralOperator};

/// Largest admissible `|λ|` before `1/(1−λ²)` is treated as singular.
pub const NEAR_UNIT_GUARD: f64 = 1e-10;

/// `N × N` AR(1) correlation matrix with entries `lam^{|i−j|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToeplitzAr1 {
    lam: f64,
    n: usize,
}

impl ToeplitzAr1 {
    pub fn new(lam: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("Toeplitz size must be positive"));
        }
        if !(lam.abs() < 1.0) {
            return Err(Error::NearSingular { lam });
        }
        Ok(Self { lam, n })
    }

    pub fn lam(&self) -> f64 {
        self.lam
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn guard(&self) -> Result<()> {
        if self.lam.abs() >= 1.0 - NEAR_UNIT_GUARD {
            return Err(Error::NearSingular { lam: self.lam });
        }
        Ok(())
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut powers = Vec::with_capacity(self.n);
        let mut acc = 1.0;
        for _ in 0..self.n {
            powers.push(acc);
            acc *= self.lam;
        }
        DMatrix::from_fn(self.n, self.n, |i, j| powers[i.abs_diff(j)])
    }

    /// Closed-form inverse.
    pub fn inverse_tridiag(&self) -> Result<SymTridiag> {
        self.guard()?;
        let n = self.n;
        if n == 1 {
            return Ok(SymTridiag {
                diag: vec![1.0],
                off: vec![],
            });
        }
        let lam = self.lam;
        let s = 1.0 / (1.0 - lam * lam);
        let mut diag = vec![s * (1.0 + lam * lam); n];
        diag[0] = s;
        diag[n - 1] = s;
        Ok(SymTridiag {
            diag,
            off: vec![-s * lam; n - 1],
        })
    }

    /// Upper-triangular `A` with `AᵀA = Λ`: first row `(1, λ, λ², …)`, and
    /// rows `i ≥ 2` equal to `√(1−λ²) · (0, …, 0, 1, λ, λ², …)`.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        self.guard()?;
        let lam = self.lam;
        let root = (1.0 - lam * lam).sqrt();
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| {
            if j < i {
                0.0
            } else {
                let geometric = lam.powi((j - i) as i32);
                if i == 0 {
                    geometric
                } else {
                    root * geometric
                }
            }
        }))
    }
}

/// Symmetric tridiagonal matrix: `diag[i] = T[i,i]`, `off[i] = T[i,i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::dims(format!(
                "{} diagonal vs {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            diag: vec![1.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|v| s * v).collect(),
            off: self.off.iter().map(|v| s * v).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut acc: f64 = self.diag.iter().zip(v).map(|(d, x)| d * x * x).sum();
        for (i, o) in self.off.iter().enumerate() {
            acc += 2.0 * o * v[i] * v[i + 1];
        }
        acc
    }

    /// `T = L Lᵀ` with `L` lower bidiagonal.
    pub fn cholesky(&self) -> Result<BidiagFactor> {
        let n = self.n();
        let mut diag = Vec::with_capacity(n);
        let mut sub = Vec::with_capacity(n.saturating_sub(1));
        let mut pivot = self.diag[0];
        for i in 0..n {
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite(format!(
                    "tridiagonal pivot {i} is {pivot:e}"
                )));
            }
            let d = pivot.sqrt();
            diag.push(d);
            if i + 1 < n {
                let s = self.off[i] / d;
                sub.push(s);
                pivot = self.diag[i + 1] - s * s;
            }
        }
        Ok(BidiagFactor { diag, sub })
    }
}

/// Lower bidiagonal Cholesky factor `L` of a tridiagonal block.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagFactor {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl BidiagFactor {
    /// In place `v ← Lᵀ v`, so that `‖Lᵀv‖² = vᵀ T v`.
    pub fn whiten(&self, v: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let next = if i + 1 < n {
                self.sub[i] * v[i + 1]
            } else {
                0.0
            };
            v[i] = self.diag[i] * v[i] + next;
        }
    }
}

/// An error precision `C⁻¹` over `N` times and `K` coordinates, exposed
/// through a whitening transform on groups of coordinates.
pub trait Precision: Sync {
    fn n(&self) -> usize;
    fn k(&self) -> usize;

    /// Disjoint coordinate groups that are whitened jointly.
    fn groups(&self) -> Vec<Vec<usize>>;

    /// Whitens every column of `block` in place. Rows are ordered
    /// `t · |g| + i` for time `t` and the `i`-th coordinate of group `g`.
    fn whiten(&self, group: usize, block: &mut DMatrix<f64>);

    /// True when every group is the single coordinate equal to its index.
    fn is_coordinatewise(&self) -> bool {
        self.groups()
            .iter()
            .enumerate()
            .all(|(i, g)| g.len() == 1 && g[0] == i)
    }

    /// `rᵀ C⁻¹ r` for a residual sequence.
    fn quad_form(&self, resid: &[HFunction]) -> Result<f64> {
        check_series(resid, self.n(), self.k())?;
        let mut total = 0.0;
        for (gi, g) in self.groups().iter().enumerate() {
            let mut block = DMatrix::from_fn(self.n() * g.len(), 1, |row, _| {
                resid[row / g.len()].coeffs()[g[row % g.len()]]
            });
            self.whiten(gi, &mut block);
            total += block.norm_squared();
        }
        Ok(total)
    }
}

fn check_series(series: &[HFunction], n: usize, k: usize) -> Result<()> {
    if series.len() != n {
        return Err(Error::dims(format!(
            "{} functions for N = {n}",
            series.len()
        )));
    }
    if let Some(f) = series.iter().find(|f| f.len() != k) {
        return Err(Error::dims(format!(
            "function with K = {} for K = {k}",
            f.len()
        )));
    }
    Ok(())
}

/// Per-frequency tridiagonal precision blocks (the inverse covariance
/// matrix operator in the simultaneously diagonal design).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPrecision {
    blocks: Vec<SymTridiag>,
    factors: Vec<BidiagFactor>,
    n: usize,
}

impl BlockPrecision {
    /// Block `k` is `Λ_k⁻¹ / λ_k(R₀)`.
    pub fn build(r0_eff: &SpectralOperator, rho: &SpectralOperator, n: usize) -> Result<Self> {
        if r0_eff.len() != rho.len() {
            return Err(Error::dims(format!(
                "R0 has K = {}, rho has K = {}",
                r0_eff.len(),
                rho.len()
            )));
        }
        if let Some(l) = r0_eff.eigenvalues().iter().find(|l| !(**l > 0.0)) {
            return Err(Error::param(format!(
                "effective R0 eigenvalue {l} is not positive"
            )));
        }
        let scales: Vec<f64> = r0_eff.eigenvalues().iter().map(|l| 1.0 / l).collect();
        Self::from_parts(&scales, rho.eigenvalues(), n)
    }

    /// Block `k` is `scales[k] · Λ(lams[k])⁻¹`.
    pub fn from_parts(scales: &[f64], lams: &[f64], n: usize) -> Result<Self> {
        if scales.len() != lams.len() || scales.is_empty() {
            return Err(Error::dims(format!(
                "{} scales vs {} autocorrelations",
                scales.len(),
                lams.len()
            )));
        }
        let blocks = scales
            .iter()
            .zip(lams)
            .map(|(&s, &lam)| Ok(ToeplitzAr1::new(lam, n)?.inverse_tridiag()?.scaled(s)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(blocks)
    }

    pub fn from_blocks(blocks: Vec<SymTridiag>) -> Result<Self> {
        let n = blocks
            .first()
            .map(SymTridiag::n)
            .ok_or_else(|| Error::param("need at least one block"))?;
        if blocks.iter().any(|b| b.n() != n) {
            return Err(Error::dims("precision blocks differ in size"));
        }
        let factors = blocks
            .iter()
            .map(SymTridiag::cholesky)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks, factors, n })
    }

    pub fn identity(n: usize, k: usize) -> Self {
        Self::from_blocks(vec![SymTridiag::identity(n); k])
            .expect("identity blocks are positive definite")
    }

    pub fn block(&self, k: usize) -> &SymTridiag {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[SymTridiag] {
        &self.blocks
    }

    /// Dense `NK × NK` matrix with index `t·K + k`. Intended for small checks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, k) = (self.n, self.blocks.len());
        let mut out = DMatrix::zeros(n * k, n * k);
        for (f, b) in self.blocks.iter().enumerate() {
            for t in 0..n {
                out[(t * k + f, t * k + f)] = b.diag[t];
                if t + 1 < n {
                    out[(t * k + f, (t + 1) * k + f)] = b.off[t];
                    out[((t + 1) * k + f, t * k + f)] = b.off[t];
                }
            }
        }
        out
    }
}

impl Precision for BlockPrecision {
    fn n(&self) -> usize {
        self.n
    }

    fn k(&self) -> usize {
        self.blocks.len()
    }

    fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.blocks.len()).map(|k| vec![k]).collect()
    }

    fn whiten(&self, group: usize, block: &mut DMatrix<f64>) {
        let factor = &self.factors[group];
        for mut col in block.column_iter_mut() {
            factor.whiten(col.as_mut_slice());
        }
    }

    fn is_coordinatewise(&self) -> bool {
        true
    }

    fn quad_form(&self, resid: &[HFunction]) -> Result<f64> {
        check_series(resid, self.n, self.blocks.len())?;
        Ok(self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let r: Vec<f64> = resid.iter().map(|f| f.coeffs()[k]).collect();
                b.quad_form(&r)
            })
            .sum())
    }
}

/// Squared RKHS norm `Σ_k r_kᵀ C⁻¹_k r_k` of a residual sequence.
pub fn rkhs_loss<P: Precision + ?Sized>(precision: &P, resid: &[HFunction]) -> Result<f64> {
    precision.quad_form(resid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankPolicy {
    /// A rank-deficient information matrix is an error.
    #[default]
    Strict,
    /// Use the pseudo-inverse: minimum-norm estimate on the unidentified directions.
    MinimumNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlsOptions {
    pub rank_policy: RankPolicy,
    /// Eigenvalues below `rank_tol · max eigenvalue` count as zero.
    pub rank_tol: f64,
    pub execution: Execution,
}

impl Default for GlsOptions {
    fn default() -> Self {
        Self {
            rank_policy: RankPolicy::Strict,
            rank_tol: 1e-12,
            execution: Execution::Parallel,
        }
    }
}

impl GlsOptions {
    pub fn minimum_norm() -> Self {
        Self {
            rank_policy: RankPolicy::MinimumNorm,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlsFit {
    pub beta_hat: Vec<HFunction>,
    /// `(XᵀC⁻¹X)⁻¹` restricted to frequency `k`, one `p × p` block per `k`.
    pub covariance_blocks: Vec<DMatrix<f64>>,
    /// `XᵀC⁻¹X` restricted to frequency `k`.
    pub information_blocks: Vec<DMatrix<f64>>,
    pub residuals: Vec<HFunction>,
    pub loss: f64,
    /// 1-based frequencies where the information matrix lost rank.
    pub deficient_frequencies: Vec<usize>,
}

impl GlsFit {
    pub fn p(&self) -> usize {
        self.beta_hat.len()
    }

    pub fn k(&self) -> usize {
        self.beta_hat.first().map_or(0, HFunction::len)
    }

    /// `‖β̂ − β‖_{H^p}`.
    pub fn error_norm(&self, beta: &[HFunction]) -> Result<f64> {
        if beta.len() != self.beta_hat.len() {
            return Err(Error::dims("parameter count mismatch"));
        }
        let mut acc = 0.0;
        for (a, b) in self.beta_hat.iter().zip(beta) {
            acc += a.sub(b)?.norm_sq();
        }
        Ok(acc.sqrt())
    }
}

struct Solved {
    solution: DVector<f64>,
    pinv: DMatrix<f64>,
    null_directions: Vec<DVector<f64>>,
}

fn solve_symmetric(info: DMatrix<f64>, rhs: &DVector<f64>, opts: &GlsOptions) -> Result<Solved> {
    let dim = info.nrows();
    let eig = SymmetricEigen::new(info);
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = opts.rank_tol * max;
    let mut pinv = DMatrix::zeros(dim, dim);
    let mut null_directions = Vec::new();
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        if lam > cutoff && max > 0.0 {
            pinv += (v * v.transpose()) / lam;
        } else {
            null_directions.push(v.into_owned());
        }
    }
    let solution = &pinv * rhs;
    Ok(Solved {
        solution,
        pinv,
        null_directions,
    })
}

fn check_inputs<P: Precision + ?Sized>(
    panel: &RegressorPanel,
    y: &[HFunction],
    precision: &P,
) -> Result<()> {
    check_series(y, panel.n(), panel.k())?;
    if precision.n() != panel.n() || precision.k() != panel.k() {
        return Err(Error::dims(format!(
            "precision is for N = {}, K = {}; panel has N = {}, K = {}",
            precision.n(),
            precision.k(),
            panel.n(),
            panel.k()
        )));
    }
    Ok(())
}

fn finish<P: Precision + ?Sized>(
    panel: &RegressorPanel,
    y: &[HFunction],
    precision: &P,
    beta_hat: Vec<HFunction>,
    covariance_blocks: Vec<DMatrix<f64>>,
    information_blocks: Vec<DMatrix<f64>>,
    deficient_frequencies: Vec<usize>,
) -> Result<GlsFit> {
    let residuals = y
        .iter()
        .enumerate()
        .map(|(t, yt)| yt.sub(&regression_mean(panel.row(t), &beta_hat)?))
        .collect::<Result<Vec<_>>>()?;
    let loss = precision.quad_form(&residuals)?;
    Ok(GlsFit {
        beta_hat,
        covariance_blocks,
        information_blocks,
        residuals,
        loss,
        deficient_frequencies,
    })
}

/// `β̂ = (XᵀC⁻¹X)⁻¹ XᵀC⁻¹ Y`.
pub fn gls_estimate<P: Precision + ?Sized>(
    panel: &RegressorPanel,
    y: &[HFunction],
    precision: &P,
    opts: &GlsOptions,
) -> Result<GlsFit> {
    check_inputs(panel, y, precision)?;
    if panel.is_diagonal() && precision.is_coordinatewise() {
        per_frequency(panel, y, precision, opts)
    } else {
        dense(panel, y, precision, opts)
    }
}

/// Ordinary least squares: GLS with identity precision.
pub fn ols_estimate(panel: &RegressorPanel, y: &[HFunction], opts: &GlsOptions) -> Result<GlsFit> {
    gls_estimate(
        panel,
        y,
        &BlockPrecision::identity(panel.n(), panel.k()),
        opts,
    )
}

fn per_frequency<P: Precision + ?Sized>(
    panel: &RegressorPanel,
    y: &[HFunction],
    precision: &P,
    opts: &GlsOptions,
) -> Result<GlsFit> {
    let (n, p, k) = (panel.n(), panel.p(), panel.k());
    let solved = map_indexed(opts.execution, k, |f| -> Result<(Solved, DMatrix<f64>)> {
        let mut block = DMatrix::from_fn(n, p + 1, |t, c| {
            if c < p {
                panel.get(t, c).entry(f, f)
            } else {
                y[t].coeffs()[f]
            }
        });
        precision.whiten(f, &mut block);
        let gram = block.tr_mul(&block);
        let info = gram.view((0, 0), (p, p)).into_owned();
        let rhs = gram.view((0, p), (p, 1)).column(0).into_owned();
        let solved = solve_symmetric(info.clone(), &rhs, opts)?;
        if !solved.null_directions.is_empty() && opts.rank_policy == RankPolicy::Strict {
            return Err(Error::SingularDesign { frequency: f + 1 });
        }
        Ok((solved, info))
    });

    let interval = y[0].interval();
    let mut coeffs = vec![vec![0.0; k]; p];
    let mut covariance_blocks = Vec::with_capacity(k);
    let mut information_blocks = Vec::with_capacity(k);
    let mut deficient = Vec::new();
    for (f, item) in solved.into_iter().enumerate() {
        let (s, info) = item?;
        for (j, c) in coeffs.iter_mut().enumerate() {
            c[f] = s.solution[j];
        }
        if !s.null_directions.is_empty() {
            deficient.push(f + 1);
        }
        covariance_blocks.push(s.pinv);
        information_blocks.push(info);
    }
    let beta_hat = coeffs
        .into_iter()
        .map(|c| HFunction::new(c, interval))
        .collect::<Result<Vec<_>>>()?;
    finish(
        panel,
        y,
        precision,
        beta_hat,
        covariance_blocks,
        information_blocks,
        deficient,
    )
}

fn dense<P: Precision + ?Sized>(
    panel: &RegressorPanel,
    y: &[HFunction],
    precision: &P,
    opts: &GlsOptions,
) -> Result<GlsFit> {
    let (n, p, k) = (panel.n(), panel.p(), panel.k());
    let q = p * k;
    let groups = precision.groups();
    let partials = map_indexed(opts.execution, groups.len(), |gi| {
        let g = &groups[gi];
        let width = g.len();
        let mut block = DMatrix::from_fn(n * width, q + 1, |row, c| {
            let (t, coord) = (row / width, g[row % width]);
            if c < q {
                panel.get(t, c / k).entry(coord, c % k)
            } else {
                y[t].coeffs()[coord]
            }
        });
        precision.whiten(gi, &mut block);
        block.tr_mul(&block)
    });
    let mut gram = DMatrix::zeros(q + 1, q + 1);
    for part in partials {
        gram += part;
    }
    let info = gram.view((0, 0), (q, q)).into_owned();
    let rhs = gram.view((0, q), (q, 1)).column(0).into_owned();
    let solved = solve_symmetric(info.clone(), &rhs, opts)?;

    let mut deficient: Vec<usize> = solved
        .null_directions
        .iter()
        .map(|v| v.iamax() % k + 1)
        .collect();
    deficient.sort_unstable();
    deficient.dedup();
    if let (Some(&first), RankPolicy::Strict) = (deficient.first(), opts.rank_policy) {
        return Err(Error::SingularDesign { frequency: first });
    }

    let interval = y[0].interval();
    let beta_hat = (0..p)
        .map(|j| {
            HFunction::new(
                solved.solution.rows(j * k, k).iter().copied().collect(),
                interval,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let restrict =
        |m: &DMatrix<f64>, f: usize| DMatrix::from_fn(p, p, |a, b| m[(a * k + f, b * k + f)]);
    let covariance_blocks = (0..k).map(|f| restrict(&solved.pinv, f)).collect();
    let information_blocks = (0..k).map(|f| restrict(&info, f)).collect();
    finish(
        panel,
        y,
        precision,
        beta_hat,
        covariance_blocks,
        information_blocks,
        deficient,
    )
}

/// Standardized estimation error `(XᵀC⁻¹X)_k^{1/2} (β̂ − β)_k` per frequency,
/// flattened as index `k · p + j`. No `1/√N` factor is applied.
pub fn normalized_statistic(fit: &GlsFit, beta_true: &[HFunction]) -> Result<Vec<f64>> {
    let (p, k) = (fit.p(), fit.k());
    if beta_true.len() != p || beta_true.iter().any(|b| b.len() != k) {
        return Err(Error::dims("true parameter does not match the fit"));
    }
    let mut out = Vec::with_capacity(p * k);
    for (f, info) in fit.information_blocks.iter().enumerate() {
        let eig = SymmetricEigen::new(info.clone());
        let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(bad) = eig
            .eigenvalues
            .iter()
            .find(|&&l| l < -1e-10 * max.max(f64::MIN_POSITIVE))
        {
            return Err(Error::NotPositiveDefinite(format!(
                "information block {} has eigenvalue {bad:e}",
                f + 1
            )));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let sqrt =
            &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
        let diff = DVector::from_fn(p, |j, _| {
            fit.beta_hat[j].coeffs()[f] - beta_true[j].coeffs()[f]
        });
        out.extend((sqrt * diff).iter());
    }
    Ok(out)
}
