//! Exact simulation of the ARH(1) error process `ε_n = ρ(ε_{n−1}) + δ_n`
//! and of the regression response built on top of it.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::{HFunction, Interval};
use crate::error::{Error, Result};
use crate::spectral::{regression_mean, OperatorKind, RegressorPanel, SpectralOperator};

/// Random stream for repetition `stream` of an experiment seeded with `seed`.
///
/// Streams are independent ChaCha8 sequences, so repetitions can run in any
/// order or on any thread without changing their draws.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArhSpec {
    rho: SpectralOperator,
    r_delta: SpectralOperator,
    interval: Interval,
}

impl ArhSpec {
    pub fn new(
        rho: SpectralOperator,
        r_delta: SpectralOperator,
        interval: Interval,
    ) -> Result<Self> {
        if rho.len() != r_delta.len() {
            return Err(Error::dims(format!(
                "rho has K = {}, R_delta has K = {}",
                rho.len(),
                r_delta.len()
            )));
        }
        if rho.eigenvalues().iter().any(|l| l.abs() >= 1.0) {
            return Err(Error::param(
                "autocorrelation eigenvalues must lie in (-1, 1)",
            ));
        }
        if r_delta.eigenvalues().iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::param("innovation variances must be nonnegative"));
        }
        Ok(Self {
            rho,
            r_delta,
            interval,
        })
    }

    pub fn rho(&self) -> &SpectralOperator {
        &self.rho
    }

    pub fn r_delta(&self) -> &SpectralOperator {
        &self.r_delta
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }

    /// Stationary covariance `R₀` implied by `ρ` and `R_δ`.
    pub fn stationary_covariance(&self) -> SpectralOperator {
        let eigs = self
            .rho
            .eigenvalues()
            .iter()
            .zip(self.r_delta.eigenvalues())
            .map(|(r, d)| d / (1.0 - r * r))
            .collect();
        SpectralOperator::from_raw(eigs, OperatorKind::Covariance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub errors: Vec<HFunction>,
    pub responses: Vec<HFunction>,
    pub seed: u64,
}

fn gaussian_coeffs<R: Rng + ?Sized>(variances: &[f64], rng: &mut R) -> Vec<f64> {
    variances
        .iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            z * v.sqrt()
        })
        .collect()
}

/// Zero-mean Gaussian element with independent coefficients of variance `λ_j(R_δ)`.
pub fn gaussian_innovation<R: Rng + ?Sized>(
    r_delta: &SpectralOperator,
    interval: Interval,
    rng: &mut R,
) -> HFunction {
    HFunction::from_raw(gaussian_coeffs(r_delta.eigenvalues(), rng), interval)
}

/// `n` consecutive states of the stationary process, after `burn_in` discarded steps.
pub fn simulate_arh1<R: Rng + ?Sized>(
    spec: &ArhSpec,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<HFunction>> {
    if n == 0 {
        return Err(Error::param("need at least one state"));
    }
    let lam = spec.rho.eigenvalues();
    let innov_var = spec.r_delta.eigenvalues();
    let mut state = gaussian_coeffs(spec.stationary_covariance().eigenvalues(), rng);
    let mut out = Vec::with_capacity(n);
    for step in 0..burn_in + n {
        for ((s, l), v) in state.iter_mut().zip(lam).zip(innov_var) {
            let z: f64 = rng.sample(StandardNormal);
            *s = l * *s + z * v.sqrt();
        }
        if step >= burn_in {
            out.push(HFunction::from_raw(state.clone(), spec.interval));
        }
    }
    Ok(out)
}

/// `Y_n = Σ_j X_n^j(β_j) + ε_n`.
pub fn simulate_response(
    panel: &RegressorPanel,
    beta: &[HFunction],
    errors: &[HFunction],
) -> Result<Vec<HFunction>> {
    if errors.len() != panel.n() {
        return Err(Error::dims(format!(
            "{} errors for a panel of N = {}",
            errors.len(),
            panel.n()
        )));
    }
    if beta.len() != panel.p() {
        return Err(Error::dims(format!(
            "{} parameters for p = {}",
            beta.len(),
            panel.p()
        )));
    }
    if let Some(b) = beta.iter().find(|b| b.len() != panel.k()) {
        return Err(Error::dims(format!(
            "parameter with K = {} for panel K = {}",
            b.len(),
            panel.k()
        )));
    }
    errors
        .iter()
        .enumerate()
        .map(|(t, e)| regression_mean(panel.row(t), beta)?.add(e))
        .collect()
}

/// Errors and responses for one repetition.
pub fn simulate_path(
    spec: &ArhSpec,
    panel: &RegressorPanel,
    beta: &[HFunction],
    burn_in: usize,
    seed: u64,
    stream: u64,
) -> Result<SamplePath> {
    let mut rng = rng_for(seed, stream);
    let errors = simulate_arh1(spec, panel.n(), burn_in, &mut rng)?;
    let responses = simulate_response(panel, beta, &errors)?;
    Ok(SamplePath {
        errors,
        responses,
        seed,
    })
}
