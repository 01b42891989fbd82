//! Parametric model families for simulation: eigenvalue laws, regressor
//! sequences and parameter coefficients, plus the two built-in presets.

use std::fmt;
use std::str::FromStr;

use crate::arh::ArhSpec;
use crate::basis::{HFunction, Interval};
use crate::error::{Error, Result};
use crate::spectral::{OperatorKind, RegressorOperator, SpectralOperator};

/// `scale / (mode + shift)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub scale: f64,
    pub shift: f64,
    pub exponent: f64,
}

impl PowerLaw {
    /// `1 / (k + 1)^exponent`, the form used by every preset.
    pub const fn shifted(exponent: f64) -> Self {
        Self {
            scale: 1.0,
            shift: 1.0,
            exponent,
        }
    }

    pub fn eval(&self, mode: usize) -> f64 {
        self.scale / (mode as f64 + self.shift).powf(self.exponent)
    }
}

/// Closed-form diagonal regressor entries `x_k(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorLaw {
    /// `exp(−n · k^exponent)`.
    ExpDecay { exponent: f64 },
    /// `1 / (n · (k + 1)^exponent)`.
    InverseTime { exponent: f64 },
}

impl RegressorLaw {
    pub fn eval(&self, time: usize, mode: usize) -> f64 {
        let (n, k) = (time as f64, mode as f64);
        match *self {
            RegressorLaw::ExpDecay { exponent } => (-n * k.powf(exponent)).exp(),
            RegressorLaw::InverseTime { exponent } => 1.0 / (n * (k + 1.0).powf(exponent)),
        }
    }
}

impl fmt::Display for RegressorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegressorLaw::ExpDecay { exponent } => write!(f, "exp:{exponent}"),
            RegressorLaw::InverseTime { exponent } => write!(f, "inv:{exponent}"),
        }
    }
}

impl FromStr for RegressorLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (tag, value) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `exp:<exponent>` or `inv:<exponent>`, got `{s}`"))?;
        let exponent: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("bad exponent `{value}`"))?;
        match tag.trim() {
            "exp" => Ok(RegressorLaw::ExpDecay { exponent }),
            "inv" => Ok(RegressorLaw::InverseTime { exponent }),
            other => Err(format!("unknown regressor law `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelName {
    Model1,
    Model2,
    Custom,
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "model1" => Ok(ModelName::Model1),
            "model2" => Ok(ModelName::Model2),
            "custom" => Ok(ModelName::Custom),
            other => Err(Error::param(format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelName::Model1 => "model1",
            ModelName::Model2 => "model2",
            ModelName::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: ModelName,
    /// Nominal `R₀` law; simulation uses the covariance implied by `ρ` and `R_δ`.
    pub r0: PowerLaw,
    pub r_delta: PowerLaw,
    pub rho: PowerLaw,
    pub regressors: Vec<RegressorLaw>,
    pub beta: Vec<PowerLaw>,
    pub k: usize,
    pub interval: Interval,
    /// Multiplies `R_δ`; zero gives noise-free data.
    pub noise_scale: f64,
}

impl ModelSpec {
    pub fn model1(k: usize) -> Self {
        Self {
            name: ModelName::Model1,
            r0: PowerLaw::shifted(3.0),
            r_delta: PowerLaw::shifted(4.0),
            rho: PowerLaw::shifted(1.0),
            regressors: vec![
                RegressorLaw::ExpDecay { exponent: 0.1 },
                RegressorLaw::ExpDecay { exponent: 0.15 },
                RegressorLaw::ExpDecay { exponent: 0.2 },
            ],
            beta: vec![
                PowerLaw::shifted(0.6),
                PowerLaw::shifted(0.7),
                PowerLaw::shifted(0.8),
            ],
            k,
            interval: Interval::default(),
            noise_scale: 1.0,
        }
    }

    pub fn model2(k: usize) -> Self {
        Self {
            name: ModelName::Model2,
            r0: PowerLaw::shifted(1.1),
            r_delta: PowerLaw::shifted(1.2),
            rho: PowerLaw::shifted(0.51),
            regressors: vec![
                RegressorLaw::InverseTime { exponent: 0.1 },
                RegressorLaw::InverseTime { exponent: 0.02 },
                RegressorLaw::InverseTime { exponent: 0.03 },
            ],
            beta: vec![
                PowerLaw::shifted(0.6),
                PowerLaw::shifted(0.7),
                PowerLaw::shifted(0.8),
            ],
            k,
            interval: Interval::default(),
            noise_scale: 1.0,
        }
    }

    /// Preset by name. `custom` starts from Model 1's laws.
    pub fn preset(name: ModelName, k: usize) -> Self {
        match name {
            ModelName::Model1 => Self::model1(k),
            ModelName::Model2 => Self::model2(k),
            ModelName::Custom => Self {
                name: ModelName::Custom,
                ..Self::model1(k)
            },
        }
    }

    pub fn p(&self) -> usize {
        self.regressors.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("K must be positive"));
        }
        if self.regressors.is_empty() || self.regressors.len() != self.beta.len() {
            return Err(Error::param(format!(
                "{} regressor laws but {} parameter laws",
                self.regressors.len(),
                self.beta.len()
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::param("noise scale must be finite and nonnegative"));
        }
        self.arh_spec().map(|_| ())
    }

    pub fn rho(&self) -> Result<SpectralOperator> {
        SpectralOperator::autocorrelation((1..=self.k).map(|m| self.rho.eval(m)).collect())
    }

    pub fn r_delta(&self) -> Result<SpectralOperator> {
        let eigs: Vec<f64> = (1..=self.k)
            .map(|m| self.noise_scale * self.r_delta.eval(m))
            .collect();
        if self.noise_scale == 0.0 {
            return Ok(SpectralOperator::from_raw(eigs, OperatorKind::Covariance));
        }
        SpectralOperator::covariance(eigs)
    }

    /// Printed `R₀` law, independent of `ρ` and `R_δ`.
    pub fn nominal_r0(&self) -> Result<SpectralOperator> {
        SpectralOperator::covariance((1..=self.k).map(|m| self.r0.eval(m)).collect())
    }

    pub fn arh_spec(&self) -> Result<ArhSpec> {
        ArhSpec::new(self.rho()?, self.r_delta()?, self.interval)
    }

    pub fn beta(&self) -> Vec<HFunction> {
        self.beta
            .iter()
            .map(|law| HFunction::from_fn(self.k, self.interval, |m| law.eval(m)))
            .collect()
    }

    /// Regressors `X_t^1, …, X_t^p` at 1-based time `t`.
    pub fn regressor_row(&self, t: usize, k: usize) -> Result<Vec<RegressorOperator>> {
        self.regressors
            .iter()
            .map(|law| RegressorOperator::diagonal((1..=k).map(|mode| law.eval(t, mode)).collect()))
            .collect()
    }
}
