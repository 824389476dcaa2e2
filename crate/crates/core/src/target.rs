//! Unnormalized target densities.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};

type LogDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type LogDensityN = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Unnormalized univariate log density with a declared support.
#[derive(Clone)]
pub struct UnnormTarget {
    name: String,
    support: (f64, f64),
    log_g: LogDensity,
}

impl UnnormTarget {
    pub fn new<F>(name: impl Into<String>, support: (f64, f64), log_g: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi) = support;
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::ParameterDomain(format!("target support must satisfy lo < hi, got ({lo}, {hi})")));
        }
        Ok(UnnormTarget { name: name.into(), support, log_g: Arc::new(log_g) })
    }

    /// Log density; `-inf` outside the support and for NaN results.
    #[inline]
    pub fn log_g(&self, x: f64) -> f64 {
        if !(x > self.support.0 && x < self.support.1) {
            return f64::NEG_INFINITY;
        }
        let v = (self.log_g)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// True when either end of the support is finite.
    pub fn is_restricted(&self) -> bool {
        self.support.0.is_finite() || self.support.1.is_finite()
    }
}

impl fmt::Debug for UnnormTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnnormTarget").field("name", &self.name).field("support", &self.support).finish()
    }
}

/// Unnormalized multivariate log density on a box.
#[derive(Clone)]
pub struct MultiTarget {
    name: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    log_g: LogDensityN,
}

impl MultiTarget {
    pub fn new<F>(name: impl Into<String>, lower: Vec<f64>, upper: Vec<f64>, log_g: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Shape(format!("support bounds of lengths {} and {}", lower.len(), upper.len())));
        }
        if lower.iter().zip(&upper).any(|(a, b)| a.is_nan() || b.is_nan() || a >= b) {
            return Err(Error::ParameterDomain("target support must satisfy lo < hi in every coordinate".into()));
        }
        Ok(MultiTarget { name: name.into(), lower, upper, log_g: Arc::new(log_g) })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn log_g(&self, x: &[f64]) -> f64 {
        for ((v, lo), hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            if !(v > lo && v < hi) {
                return f64::NEG_INFINITY;
            }
        }
        let v = (self.log_g)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

impl fmt::Debug for MultiTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiTarget").field("name", &self.name).field("dim", &self.dim()).finish()
    }
}

/// The five benchmark targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StdTarget {
    Normal,
    Gamma,
    InvGamma,
    LogGamma,
    LogInvGamma,
}

const GAMMA_SHAPE: f64 = 2.5;
const INVGAMMA_SHAPE: f64 = 2.0;

impl StdTarget {
    pub const ALL: [StdTarget; 5] =
        [StdTarget::Normal, StdTarget::Gamma, StdTarget::InvGamma, StdTarget::LogGamma, StdTarget::LogInvGamma];

    pub fn label(&self) -> &'static str {
        match self {
            StdTarget::Normal => "normal",
            StdTarget::Gamma => "gamma2.5",
            StdTarget::InvGamma => "invgamma2",
            StdTarget::LogGamma => "log-gamma2.5",
            StdTarget::LogInvGamma => "log-invgamma2",
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            StdTarget::Gamma | StdTarget::InvGamma => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn target(&self) -> UnnormTarget {
        let f: fn(f64) -> f64 = match self {
            StdTarget::Normal => |x| -0.5 * x * x,
            StdTarget::Gamma => |x| (GAMMA_SHAPE - 1.0) * x.ln() - x,
            StdTarget::InvGamma => |x| -(INVGAMMA_SHAPE + 1.0) * x.ln() - 1.0 / x,
            StdTarget::LogGamma => |y| GAMMA_SHAPE * y - y.exp(),
            StdTarget::LogInvGamma => |y| -INVGAMMA_SHAPE * y - (-y).exp(),
        };
        UnnormTarget::new(self.label(), self.support(), f).expect("static support is valid")
    }

    /// Analytic CDF of the normalized target.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            StdTarget::Normal => crate::special::norm_cdf(x),
            StdTarget::Gamma => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(GAMMA_SHAPE, x)
                }
            }
            StdTarget::InvGamma => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_ur(INVGAMMA_SHAPE, 1.0 / x)
                }
            }
            StdTarget::LogGamma => gamma_lr(GAMMA_SHAPE, x.exp()),
            StdTarget::LogInvGamma => gamma_ur(INVGAMMA_SHAPE, (-x).exp()),
        }
    }

    /// Independent draw from the normalized target.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            StdTarget::Normal => rng.sample(StandardNormal),
            StdTarget::Gamma => gamma(GAMMA_SHAPE).sample(rng),
            StdTarget::InvGamma => 1.0 / gamma(INVGAMMA_SHAPE).sample(rng),
            StdTarget::LogGamma => gamma(GAMMA_SHAPE).sample(rng).ln(),
            StdTarget::LogInvGamma => -gamma(INVGAMMA_SHAPE).sample(rng).ln(),
        }
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        match self {
            StdTarget::Normal => 0.0,
            StdTarget::Gamma => GAMMA_SHAPE,
            StdTarget::InvGamma => 1.0 / (INVGAMMA_SHAPE - 1.0),
            StdTarget::LogGamma => digamma(GAMMA_SHAPE),
            StdTarget::LogInvGamma => -digamma(INVGAMMA_SHAPE),
        }
    }
}

fn gamma(shape: f64) -> Gamma<f64> {
    Gamma::new(shape, 1.0).expect("positive shape")
}

/// Digamma by recurrence and the asymptotic series.
fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    acc + x.ln() - 0.5 / x - r * (1.0 / 12.0 - r * (1.0 / 120.0 - r * (1.0 / 252.0 - r / 240.0)))
}

impl FromStr for StdTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StdTarget::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::Lookup(format!("target `{s}`")))
    }
}

impl fmt::Display for StdTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Standard target by label.
pub fn std_target(name: &str) -> Result<UnnormTarget> {
    Ok(name.parse::<StdTarget>()?.target())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_target_values() {
        assert_eq!(std_target("gamma2.5").unwrap().log_g(1.0), -1.0);
        assert_eq!(std_target("invgamma2").unwrap().log_g(1.0), -1.0);
        assert_eq!(std_target("log-gamma2.5").unwrap().log_g(0.0), -1.0);
        assert_eq!(std_target("gamma2.5").unwrap().log_g(-1.0), f64::NEG_INFINITY);
        assert!(matches!(std_target("weibull"), Err(Error::Lookup(_))));
    }

    #[test]
    fn log_variants_are_jacobian_adjusted() {
        for (base, logt) in [(StdTarget::Gamma, StdTarget::LogGamma), (StdTarget::InvGamma, StdTarget::LogInvGamma)] {
            let (b, l) = (base.target(), logt.target());
            for &y in &[-1.3, 0.2, 0.9, 2.0] {
                assert!((l.log_g(y) - (b.log_g(f64::exp(y)) + y)).abs() < 1e-12);
                assert!((logt.cdf(y) - base.cdf(f64::exp(y))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn digamma_reference() {
        // psi(1) = -Euler gamma; psi(2.5) = 2 - gamma - 2 ln 2 + 2/3.
        assert!((digamma(1.0) + 0.577_215_664_901_532_9).abs() < 1e-12);
        assert!((StdTarget::LogGamma.mean() - 0.703_156_640_645_243_2).abs() < 1e-12);
    }
}
