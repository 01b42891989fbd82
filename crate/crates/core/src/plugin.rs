//! Plug-in estimation when the error covariance is unknown.
//!
//! The pipeline fits OLS, estimates the lag-0 and lag-1 covariance of the
//! OLS residuals, diagonalizes the lag-0 estimate, and estimates the
//! autocorrelation operator componentwise on the leading `k_N` empirical
//! eigendirections:
//!
//! ```text
//! ρ̂_{i,j} = 1/(N−1) · Σ_{n<N} ⟨ε̃_n, φ_{iN}⟩ ⟨ε̃_{n+1}, φ_{jN}⟩ / λ_{jN}
//! ρ̂(f)    = Σ_{i,j ≤ k_N} ρ̂_{i,j} ⟨f, φ_{iN}⟩ φ_{jN}
//! ```
//!
//! The GLS step then runs with the data expressed in the empirical eigenbasis.
//! If `ρ̂` is close to diagonal, each leading direction gets an AR(1)
//! tridiagonal block; otherwise the leading directions are whitened jointly as
//! a VAR(1). Directions beyond `k_N` are treated as white noise with the
//! smallest retained eigenvalue as variance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::basis::HFunction;
use crate::error::{Error, Result};
use crate::gls::{gls_estimate, ols_estimate, BlockPrecision, GlsFit, GlsOptions, Precision};
use crate::spectral::{regression_mean, RegressorOperator, RegressorPanel};

/// Relative floor on `λ_{jN} / λ_{1N}` for the division in `ρ̂`.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Residual energy below this fraction of the response energy counts as an
/// exact fit, and the plug-in step is skipped.
pub const NOISE_FREE_RATIO: f64 = 1e-24;

/// Lag-0 and lag-1 empirical covariances in basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCov {
    pub r0_hat: DMatrix<f64>,
    pub r1_hat: DMatrix<f64>,
    pub n: usize,
}

pub fn empirical_cov(residuals: &[HFunction]) -> Result<EmpiricalCov> {
    let n = residuals.len();
    if n < 2 {
        return Err(Error::param(format!("need N >= 2 residuals, got {n}")));
    }
    let k = residuals[0].len();
    if residuals.iter().any(|r| r.len() != k) {
        return Err(Error::dims("residuals differ in K"));
    }
    let data = DMatrix::from_fn(k, n, |a, t| residuals[t].coeffs()[a]);
    let r0_hat = (&data * data.transpose()) / n as f64;
    let lead = data.columns(0, n - 1);
    let lag = data.columns(1, n - 1);
    let r1_hat = (lead * lag.transpose()) / (n - 1) as f64;
    Ok(EmpiricalCov { r0_hat, r1_hat, n })
}

/// Eigenpairs of `R̃₀ᴺ`, sorted by decreasing eigenvalue; `vectors` holds
/// `φ_{jN}` as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EmpiricalEigen {
    pub fn new(values: Vec<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != vectors.ncols() || vectors.ncols() != values.len() {
            return Err(Error::dims(
                "eigenvectors must form a K x K matrix matching the eigenvalues",
            ));
        }
        Ok(Self { values, vectors })
    }

    /// The shared sine basis with the given eigenvalues.
    pub fn canonical(values: Vec<f64>) -> Self {
        let k = values.len();
        Self {
            values,
            vectors: DMatrix::identity(k, k),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Coordinates `⟨f, φ_{jN}⟩` for all `j`.
    pub fn scores(&self, f: &HFunction) -> Result<DVector<f64>> {
        if f.len() != self.k() {
            return Err(Error::dims(format!(
                "function has K = {}, basis has K = {}",
                f.len(),
                self.k()
            )));
        }
        Ok(self.vectors.tr_mul(&DVector::from_column_slice(f.coeffs())))
    }

    /// Inverse of [`scores`](Self::scores).
    pub fn from_scores(&self, scores: &DVector<f64>, like: &HFunction) -> HFunction {
        HFunction::from_raw((&self.vectors * scores).data.into(), like.interval())
    }
}

pub fn empirical_eigendecomposition(cov: &EmpiricalCov) -> EmpiricalEigen {
    let sym = (&cov.r0_hat + cov.r0_hat.transpose()) * 0.5;
    let k = sym.nrows();
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let mut vectors = DMatrix::zeros(k, k);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        // Largest-magnitude entry positive.
        if v[v.iamax()] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    EmpiricalEigen { values, vectors }
}

/// Componentwise autocorrelation estimate on the leading `k_N` directions.
/// Entry `(i, j)` maps input direction `i` to output direction `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoHat {
    coeffs: DMatrix<f64>,
}

impl RhoHat {
    pub fn new(coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() != coeffs.ncols() {
            return Err(Error::dims("rho-hat must be square"));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("rho-hat entries must be finite"));
        }
        Ok(Self { coeffs })
    }

    /// The null operator (`k_N = 0`).
    pub fn zero() -> Self {
        Self {
            coeffs: DMatrix::zeros(0, 0),
        }
    }

    pub fn k_n(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// VAR(1) transition on the leading scores: `out = Mᵀ`-convention, i.e.
    /// `transition()[(j, i)] = ρ̂_{i,j}`.
    pub fn transition(&self) -> DMatrix<f64> {
        self.coeffs.transpose()
    }

    /// Least-squares VAR(1) transition on the leading scores,
    /// `M[(j, i)] = ρ̂_{i,j} λ_j / λ_i`, i.e. the lag-1 covariance normalized by
    /// the input variance. Agrees with [`transition`](Self::transition) on
    /// the diagonal.
    pub fn yule_walker_transition(&self, eig: &EmpiricalEigen) -> DMatrix<f64> {
        let lam = eig.values();
        DMatrix::from_fn(self.k_n(), self.k_n(), |j, i| {
            self.coeffs[(i, j)] * lam[j] / lam[i]
        })
    }

    /// `Σ|off-diagonal| / Σ|diagonal|` of `ρ̂`.
    pub fn off_diagonal_ratio(&self) -> f64 {
        off_diagonal_ratio(&self.coeffs)
    }

    pub fn apply(&self, eig: &EmpiricalEigen, f: &HFunction) -> Result<HFunction> {
        let k_n = self.k_n();
        if k_n > eig.k() {
            return Err(Error::dims(format!("k_N = {k_n} exceeds K = {}", eig.k())));
        }
        let scores = eig.scores(f)?;
        let lead = scores.rows(0, k_n);
        let mut out = DVector::zeros(eig.k());
        out.rows_mut(0, k_n).copy_from(&(self.transition() * lead));
        Ok(eig.from_scores(&out, f))
    }
}

fn off_diagonal_ratio(m: &DMatrix<f64>) -> f64 {
    let diag: f64 = m.diagonal().iter().map(|v| v.abs()).sum();
    let total: f64 = m.iter().map(|v| v.abs()).sum();
    if diag == 0.0 {
        if total == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (total - diag) / diag
    }
}

pub fn estimate_rho(residuals: &[HFunction], eig: &EmpiricalEigen, k_n: usize) -> Result<RhoHat> {
    let n = residuals.len();
    if n < 2 {
        return Err(Error::param("need at least two residuals"));
    }
    if k_n == 0 || k_n > eig.k().min(n) {
        return Err(Error::param(format!(
            "k_N = {k_n} must lie in 1..={}",
            eig.k().min(n)
        )));
    }
    let floor = EIGEN_FLOOR * eig.values[0];
    for (j, &v) in eig.values[..k_n].iter().enumerate() {
        if !(v > floor) {
            return Err(Error::TruncationTooLarge {
                k_n,
                index: j + 1,
                value: v,
                floor,
            });
        }
    }
    let basis = eig.vectors.columns(0, k_n);
    let scores: Vec<DVector<f64>> = residuals
        .iter()
        .map(|r| {
            if r.len() != eig.k() {
                return Err(Error::dims("residual K differs from the eigenbasis"));
            }
            Ok(basis.tr_mul(&DVector::from_column_slice(r.coeffs())))
        })
        .collect::<Result<_>>()?;
    let mut coeffs = DMatrix::zeros(k_n, k_n);
    for t in 0..n - 1 {
        coeffs += &scores[t] * scores[t + 1].transpose();
    }
    coeffs /= (n - 1) as f64;
    for j in 0..k_n {
        let lam = eig.values[j];
        coeffs.column_mut(j).scale_mut(1.0 / lam);
    }
    RhoHat::new(coeffs)
}

/// Truncation from the divergence condition
/// `N λ_k² / ((Σ_{j≤k} a_j)² log N) ≥ τ`, with
/// `a_1 = 2√2 / (λ_1 − λ_2)` and
/// `a_j = 2√2 · max(1/(λ_{j−1} − λ_j), 1/(λ_j − λ_{j+1}))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRule {
    pub threshold: f64,
    /// Upper bound on `k_N / N`.
    pub max_fraction: f64,
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self {
            threshold: 1.0,
            max_fraction: 0.1,
        }
    }
}

/// Left-hand side of the truncation condition for every `k` (index `k − 1`).
pub fn truncation_ratios(eigenvalues: &[f64], n: usize) -> Vec<f64> {
    let kmax = eigenvalues.len();
    let lam = |j: usize| if j < kmax { eigenvalues[j] } else { 0.0 };
    let inv_gap = |a: f64, b: f64| {
        let gap = a - b;
        if gap > 0.0 {
            1.0 / gap
        } else {
            f64::INFINITY
        }
    };
    let c = 2.0 * 2f64.sqrt();
    let log_n = (n as f64).ln();
    let mut sum_a = 0.0;
    (0..kmax)
        .map(|j| {
            let a = if j == 0 {
                c * inv_gap(lam(0), lam(1))
            } else {
                c * inv_gap(lam(j - 1), lam(j)).max(inv_gap(lam(j), lam(j + 1)))
            };
            sum_a += a;
            n as f64 * lam(j).powi(2) / (sum_a * sum_a * log_n)
        })
        .collect()
}

pub fn select_truncation(eig: &EmpiricalEigen, n: usize, rule: &TruncationRule) -> usize {
    let values = eig.values();
    let distinct = {
        let mut v: Vec<f64> = values.iter().copied().filter(|&l| l > 0.0).collect();
        v.dedup();
        v.len()
    };
    if n < 3 || distinct < 2 {
        return 1;
    }
    let limit = values
        .len()
        .min(n - 1)
        .min((rule.max_fraction * n as f64).floor() as usize)
        .max(1);
    truncation_ratios(values, n)
        .iter()
        .take(limit)
        .enumerate()
        .filter(|(_, r)| **r >= rule.threshold)
        .map(|(j, _)| j + 1)
        .next_back()
        .unwrap_or(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    Fixed(usize),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluginOptions {
    pub truncation: Truncation,
    pub rule: TruncationRule,
    pub gls: GlsOptions,
    /// Off-diagonal mass of the VAR(1) transition, relative to its diagonal,
    /// below which only the diagonal is used.
    pub diagonal_mass_threshold: f64,
}

impl Default for PluginOptions {
    fn default() -> Self {
        Self {
            truncation: Truncation::Auto,
            rule: TruncationRule::default(),
            gls: GlsOptions::default(),
            diagonal_mass_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// OLS residuals vanished; the OLS fit is returned unchanged.
    Unweighted,
    /// AR(1) blocks from the diagonal of `ρ̂`.
    Diagonal,
    /// Joint VAR(1) whitening of the leading directions.
    Var,
}

#[derive(Debug, Clone)]
pub struct PluginFit {
    /// Plug-in GLS fit; residuals are in the sine basis.
    pub fit: GlsFit,
    pub ols: GlsFit,
    pub cov: EmpiricalCov,
    pub eig: EmpiricalEigen,
    pub rho_hat: RhoHat,
    pub k_n: usize,
    pub weighting: Weighting,
}

/// Joint whitening of the leading `k_N` empirical directions as a stationary
/// VAR(1) with transition `M`, stationary covariance `Λ = diag(λ_{jN})` and
/// innovation covariance `Λ − MΛMᵀ`. Remaining directions are independent
/// over time with weight `tail_scale`.
#[derive(Debug, Clone)]
pub struct VarPrecision {
    n: usize,
    k: usize,
    transition: DMatrix<f64>,
    init_scale: Vec<f64>,
    innovation_whitener: DMatrix<f64>,
    tail_root: f64,
}

impl VarPrecision {
    pub fn new(
        lead_values: &[f64],
        transition: DMatrix<f64>,
        tail_scale: f64,
        n: usize,
        k: usize,
    ) -> Result<Self> {
        if !(tail_scale > 0.0 && tail_scale.is_finite()) {
            return Err(Error::param("tail weight must be positive and finite"));
        }
        let m = lead_values.len();
        if m == 0 || m > k || transition.shape() != (m, m) {
            return Err(Error::dims(
                "VAR precision needs a k_N x k_N transition with k_N <= K",
            ));
        }
        if lead_values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NotPositiveDefinite(
                "leading eigenvalues must be positive".into(),
            ));
        }
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(lead_values));
        let innov = &lam - &transition * &lam * transition.transpose();
        let innov = (&innov + innov.transpose()) * 0.5;
        // Clamp directions where the estimated innovation covariance is not positive.
        let floor = 1e-3 * lead_values.iter().copied().fold(f64::INFINITY, f64::min);
        let eig = SymmetricEigen::new(innov);
        let inv_roots = eig.eigenvalues.map(|v| 1.0 / v.max(floor).sqrt());
        let innovation_whitener = DMatrix::from_diagonal(&inv_roots) * eig.eigenvectors.transpose();
        Ok(Self {
            n,
            k,
            transition,
            init_scale: lead_values.iter().map(|v| 1.0 / v.sqrt()).collect(),
            innovation_whitener,
            tail_root: tail_scale.sqrt(),
        })
    }

    pub fn lead(&self) -> usize {
        self.init_scale.len()
    }
}

impl Precision for VarPrecision {
    fn n(&self) -> usize {
        self.n
    }

    fn k(&self) -> usize {
        self.k
    }

    fn groups(&self) -> Vec<Vec<usize>> {
        let m = self.lead();
        std::iter::once((0..m).collect())
            .chain((m..self.k).map(|c| vec![c]))
            .collect()
    }

    fn whiten(&self, group: usize, block: &mut DMatrix<f64>) {
        if group > 0 {
            block.scale_mut(self.tail_root);
            return;
        }
        let m = self.lead();
        for mut col in block.column_iter_mut() {
            for t in (1..self.n).rev() {
                let prev = DVector::from_column_slice(&col.as_slice()[(t - 1) * m..t * m]);
                let cur = DVector::from_column_slice(&col.as_slice()[t * m..(t + 1) * m]);
                let white = &self.innovation_whitener * (cur - &self.transition * prev);
                col.as_mut_slice()[t * m..(t + 1) * m].copy_from_slice(white.as_slice());
            }
            for (v, s) in col.as_mut_slice()[..m].iter_mut().zip(&self.init_scale) {
                *v *= s;
            }
        }
    }
}

/// Empirical eigenbasis and `ρ̂` from a residual sequence.
pub fn autocorrelation_from_residuals(
    residuals: &[HFunction],
    k_n: usize,
) -> Result<(EmpiricalEigen, RhoHat)> {
    let eig = empirical_eigendecomposition(&empirical_cov(residuals)?);
    let rho = estimate_rho(residuals, &eig, k_n)?;
    Ok((eig, rho))
}

pub fn plugin_gls(
    panel: &RegressorPanel,
    y: &[HFunction],
    opts: &PluginOptions,
) -> Result<PluginFit> {
    let n = panel.n();
    if n < 3 {
        return Err(Error::param(format!(
            "plug-in estimation needs N >= 3, got {n}"
        )));
    }
    let ols = ols_estimate(panel, y, &opts.gls)?;
    let cov = empirical_cov(&ols.residuals)?;
    let eig = empirical_eigendecomposition(&cov);
    let response_energy = y.iter().map(HFunction::norm_sq).sum::<f64>() / n as f64;
    if !(eig.values[0] > NOISE_FREE_RATIO * response_energy) {
        return Ok(PluginFit {
            fit: ols.clone(),
            ols,
            cov,
            eig,
            rho_hat: RhoHat::zero(),
            k_n: 0,
            weighting: Weighting::Unweighted,
        });
    }
    let k_n = match opts.truncation {
        Truncation::Fixed(k) => k,
        Truncation::Auto => select_truncation(&eig, n, &opts.rule),
    };
    let rho_hat = estimate_rho(&ols.residuals, &eig, k_n)?;

    let k = panel.k();
    let rotated_panel = panel.rotate_output(eig.vectors())?;
    let rotated_y = y
        .iter()
        .map(|f| {
            Ok(HFunction::from_raw(
                eig.scores(f)?.data.into(),
                f.interval(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    // Directions beyond k_N are weighted as white noise at the smallest
    // retained variance, keeping the weighting invariant to the data scale.
    let tail_scale = 1.0 / eig.values[k_n - 1];
    let transition = rho_hat.yule_walker_transition(&eig);
    let (mut fit, weighting) = if off_diagonal_ratio(&transition) < opts.diagonal_mass_threshold {
        let mut scales = vec![tail_scale; k];
        let mut lams = vec![0.0; k];
        for j in 0..k_n {
            scales[j] = 1.0 / eig.values[j];
            lams[j] = rho_hat.coeffs()[(j, j)];
        }
        let precision = BlockPrecision::from_parts(&scales, &lams, n)?;
        (
            gls_estimate(&rotated_panel, &rotated_y, &precision, &opts.gls)?,
            Weighting::Diagonal,
        )
    } else {
        let precision = VarPrecision::new(&eig.values[..k_n], transition, tail_scale, n, k)?;
        (
            gls_estimate(&rotated_panel, &rotated_y, &precision, &opts.gls)?,
            Weighting::Var,
        )
    };
    fit.residuals = fit
        .residuals
        .iter()
        .map(|r| eig.from_scores(&DVector::from_column_slice(r.coeffs()), r))
        .collect();
    Ok(PluginFit {
        fit,
        ols,
        cov,
        eig,
        rho_hat,
        k_n,
        weighting,
    })
}

/// `Ŷ_t = Σ_j X_t^j(β̂_j) + ρ̂(ε̂_{t−1})` for 1-based time `t`, with
/// `2 ≤ t ≤ N + 1`. `t = N + 1` is the one-step-ahead forecast.
pub fn predict_response(
    row: &[RegressorOperator],
    fit: &GlsFit,
    rho_hat: &RhoHat,
    eig: &EmpiricalEigen,
    time: usize,
) -> Result<HFunction> {
    if time < 2 || time > fit.residuals.len() + 1 {
        return Err(Error::MissingResidual {
            time: time.saturating_sub(1),
        });
    }
    let mean = regression_mean(row, &fit.beta_hat)?;
    let previous = &fit.residuals[time - 2];
    mean.add(&rho_hat.apply(eig, previous)?)
}
