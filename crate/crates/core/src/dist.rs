//! Parametric univariate distributions used as pseudo-targets.
//!
//! Every distribution is a location-scale family with optional truncation to
//! an interval. Densities are normalized (including the truncation mass),
//! CDFs saturate exactly at 0 and 1 on the truncation bounds, and quantiles
//! are computed in closed form where one exists and by safeguarded Newton
//! iteration on the log tail otherwise.
//!
//! Distribution literals use the notation
//!
//! ```text
//! t(loc,scale,df)[lo,hi]   normal(loc,scale)   cauchy(loc,scale)
//! unif(lo,hi)              beta(a,b)           beta(a,b,loc,scale)
//! gamma(shape,scale)       gamma(shape,scale,loc)
//! ```
//!
//! where the optional truncation suffix accepts `[` or `(` on either side and
//! `inf` / `-inf` for open ends, e.g. `t(1.47,1.82,5)[0,inf)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use statrs::function::gamma::{gamma_lr, gamma_ur};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::open_unit;
use crate::special::{
    inc_beta_pair, invert_tail, ln_beta, ln_gamma, norm_cdf, norm_quantile, norm_quantile_upper, norm_sf,
};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Distribution family of a [`ScalarDist`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Normal,
    /// Student-t; `df = 1` is the Cauchy distribution.
    StudentT { df: f64 },
    /// Uniform on `(location, location + scale)`.
    Uniform,
    /// Beta(a, b) mapped affinely onto `(location, location + scale)`.
    Beta { a: f64, b: f64 },
    /// Gamma with unit rate, shifted by `location` and scaled by `scale`.
    Gamma { shape: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::StudentT { df } if *df == 1.0 => "cauchy",
            Family::StudentT { .. } => "t",
            Family::Uniform => "unif",
            Family::Beta { .. } => "beta",
            Family::Gamma { .. } => "gamma",
        }
    }
}

/// A parametric, optionally truncated, univariate distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDist {
    family: Family,
    location: f64,
    scale: f64,
    trunc: Option<(f64, f64)>,
    // Effective support after intersecting with the truncation interval.
    lo: f64,
    hi: f64,
    // Standardized tail probabilities at the effective bounds.
    flo: f64,
    slo: f64,
    fhi: f64,
    shi: f64,
    mass: f64,
    ln_norm: f64,
    ln_beta: f64,
}

impl ScalarDist {
    pub fn new(family: Family, location: f64, scale: f64, trunc: Option<(f64, f64)>) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::ParameterDomain(format!("location must be finite, got {location}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::ParameterDomain(format!("scale must be positive, got {scale}")));
        }
        let ln_beta = match family {
            Family::StudentT { df } => {
                if !(df > 0.0 && df.is_finite()) {
                    return Err(Error::ParameterDomain(format!("df must be positive, got {df}")));
                }
                ln_beta(0.5 * df, 0.5)
            }
            Family::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::ParameterDomain(format!("beta shapes must be positive, got ({a}, {b})")));
                }
                ln_beta(a, b)
            }
            Family::Gamma { shape } => {
                if !(shape > 0.0 && shape.is_finite()) {
                    return Err(Error::ParameterDomain(format!("gamma shape must be positive, got {shape}")));
                }
                0.0
            }
            _ => 0.0,
        };
        let (nat_lo, nat_hi) = match family {
            Family::Uniform | Family::Beta { .. } => (location, location + scale),
            Family::Gamma { .. } => (location, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let (lo, hi) = match trunc {
            Some((a, b)) => {
                if a.is_nan() || b.is_nan() || a >= b {
                    return Err(Error::ParameterDomain(format!("truncation bounds must satisfy lo < hi, got ({a}, {b})")));
                }
                (a.max(nat_lo), b.min(nat_hi))
            }
            None => (nat_lo, nat_hi),
        };
        if lo >= hi {
            return Err(Error::ParameterDomain(format!("truncation ({lo}, {hi}) misses the support")));
        }
        let ln_norm = match family {
            Family::Normal => -LN_SQRT_2PI,
            Family::StudentT { df } => ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln(),
            Family::Uniform => 0.0,
            Family::Beta { .. } => -ln_beta,
            Family::Gamma { shape } => -ln_gamma(shape),
        } - scale.ln();
        let mut d = ScalarDist {
            family,
            location,
            scale,
            trunc,
            lo,
            hi,
            flo: 0.0,
            slo: 1.0,
            fhi: 1.0,
            shi: 0.0,
            mass: 1.0,
            ln_norm,
            ln_beta,
        };
        let (flo, slo) = d.tails(lo);
        let (fhi, shi) = d.tails(hi);
        // Measure the retained mass on whichever side keeps precision.
        let mass = if flo > 0.5 { slo - shi } else { fhi - flo };
        if !(mass > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "truncation ({lo}, {hi}) has zero probability under the untruncated distribution"
            )));
        }
        d.flo = flo;
        d.slo = slo;
        d.fhi = fhi;
        d.shi = shi;
        d.mass = mass;
        d.ln_norm -= mass.ln();
        Ok(d)
    }

    pub fn normal(location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Normal, location, scale, None)
    }

    pub fn student_t(location: f64, scale: f64, df: f64) -> Result<Self> {
        Self::new(Family::StudentT { df }, location, scale, None)
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        Self::student_t(location, scale, 1.0)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform, lo, hi - lo, None)
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Beta { a, b }, 0.0, 1.0, None)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Gamma { shape }, 0.0, scale, None)
    }

    /// The same family and parameters restricted to `(lo, hi)`.
    pub fn truncated(&self, lo: f64, hi: f64) -> Result<Self> {
        Self::new(self.family, self.location, self.scale, Some((lo, hi)))
    }

    /// The same distribution with its scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.family, self.location, self.scale * factor, self.trunc)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn df(&self) -> Option<f64> {
        match self.family {
            Family::StudentT { df } => Some(df),
            _ => None,
        }
    }

    pub fn trunc(&self) -> Option<(f64, f64)> {
        self.trunc
    }

    pub fn is_truncated(&self) -> bool {
        self.trunc.is_some()
    }

    /// Effective support `(lo, hi)`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn in_support(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Normalized log density; `-inf` outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < self.lo || x > self.hi {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.location) / self.scale;
        let kernel = match self.family {
            Family::Normal => -0.5 * z * z,
            Family::StudentT { df } => -0.5 * (df + 1.0) * (z * z / df).ln_1p(),
            Family::Uniform => 0.0,
            Family::Beta { a, b } => {
                if z <= 0.0 || z >= 1.0 {
                    let edge = if z <= 0.0 { a } else { b };
                    return if edge < 1.0 {
                        f64::INFINITY
                    } else if edge == 1.0 {
                        self.ln_norm
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                (a - 1.0) * z.ln() + (b - 1.0) * (-z).ln_1p()
            }
            Family::Gamma { shape } => {
                if z <= 0.0 {
                    return if shape < 1.0 {
                        f64::INFINITY
                    } else if shape == 1.0 {
                        self.ln_norm
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                (shape - 1.0) * z.ln() - z
            }
        };
        kernel + self.ln_norm
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("cdf evaluated at NaN".into()));
        }
        if x <= self.lo {
            return Ok(0.0);
        }
        if x >= self.hi {
            return Ok(1.0);
        }
        let (f, s) = self.tails(x);
        let c = if self.flo > 0.5 { (self.slo - s) / self.mass } else { (f - self.flo) / self.mass };
        Ok(c.clamp(0.0, 1.0))
    }

    /// Survival function `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("sf evaluated at NaN".into()));
        }
        if x <= self.lo {
            return Ok(1.0);
        }
        if x >= self.hi {
            return Ok(0.0);
        }
        let (f, s) = self.tails(x);
        let c = if self.fhi < 0.5 { (self.fhi - f) / self.mass } else { (s - self.shi) / self.mass };
        Ok(c.clamp(0.0, 1.0))
    }

    /// Quantile function for `u` in the open unit interval.
    pub fn inv_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        let p = self.flo + u * self.mass;
        let q = self.shi + (1.0 - u) * self.mass;
        let z = if p <= 0.5 { self.std_quantile_lower(p) } else { self.std_quantile_upper(q) };
        // Quantiles beyond the float range saturate at the largest finite value.
        let x = (self.location + self.scale * z).clamp(-f64::MAX, f64::MAX);
        Ok(x.clamp(self.lo, self.hi))
    }

    /// Draws one variate by inversion of an open-interval uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        self.inv_cdf(u).expect("open uniform lies in (0, 1)")
    }

    /// Untruncated standardized lower and upper tails at `x`.
    fn tails(&self, x: f64) -> (f64, f64) {
        if x == f64::NEG_INFINITY {
            return (0.0, 1.0);
        }
        if x == f64::INFINITY {
            return (1.0, 0.0);
        }
        let z = (x - self.location) / self.scale;
        match self.family {
            Family::Normal => (norm_cdf(z), norm_sf(z)),
            Family::StudentT { df } => {
                let lower = t_lower_tail(df, -z.abs(), self.ln_beta);
                if z <= 0.0 {
                    (lower, 1.0 - lower)
                } else {
                    (1.0 - lower, lower)
                }
            }
            Family::Uniform => {
                let z = z.clamp(0.0, 1.0);
                (z, 1.0 - z)
            }
            Family::Beta { a, b } => {
                let z = z.clamp(0.0, 1.0);
                inc_beta_pair(a, b, z, 1.0 - z, self.ln_beta)
            }
            Family::Gamma { shape } => {
                if z <= 0.0 {
                    (0.0, 1.0)
                } else {
                    (gamma_lr(shape, z), gamma_ur(shape, z))
                }
            }
        }
    }

    fn std_quantile_lower(&self, p: f64) -> f64 {
        match self.family {
            Family::Normal => norm_quantile(p),
            Family::StudentT { df } => t_quantile_lower(df, p, self.ln_beta),
            Family::Uniform => p,
            Family::Beta { a, b } => beta_quantile(a, b, p, true, self.ln_beta),
            Family::Gamma { shape } => gamma_quantile(shape, p, true),
        }
    }

    fn std_quantile_upper(&self, q: f64) -> f64 {
        match self.family {
            Family::Normal => norm_quantile_upper(q),
            Family::StudentT { df } => -t_quantile_lower(df, q, self.ln_beta),
            Family::Uniform => 1.0 - q,
            Family::Beta { a, b } => beta_quantile(a, b, q, false, self.ln_beta),
            Family::Gamma { shape } => gamma_quantile(shape, q, false),
        }
    }
}

/// Lower tail `P(T <= z)` of a standard Student-t for `z <= 0`.
fn t_lower_tail(df: f64, z: f64, ln_beta_half: f64) -> f64 {
    debug_assert!(z <= 0.0);
    if df == 1.0 {
        return if z == 0.0 { 0.5 } else { (-1.0 / z).atan() / PI };
    }
    if df == 2.0 {
        let r = (2.0 + z * z).sqrt();
        return 1.0 / (r * (r - z));
    }
    if z < -1e100 {
        // Leading power-law term; the next term is O(df / z^2).
        let a = 0.5 * df;
        return 0.5 * (a * (df.ln() - 2.0 * (-z).ln()) - a.ln() - ln_beta_half).exp();
    }
    let z2 = z * z;
    let (x, y) = (df / (df + z2), z2 / (df + z2));
    let (i, _) = inc_beta_pair(0.5 * df, 0.5, x, y, ln_beta_half);
    0.5 * i
}

fn t_log_density(df: f64, z: f64, ln_beta_half: f64) -> f64 {
    -0.5 * (df + 1.0) * (z * z / df).ln_1p() - 0.5 * df.ln() - ln_beta_half
}

/// Standard Student-t quantile for a lower-tail probability `p <= 0.5`.
fn t_quantile_lower(df: f64, p: f64, ln_beta_half: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if df == 1.0 {
        return -1.0 / (PI * p).tan();
    }
    if df == 2.0 {
        return (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
    }
    let z = norm_quantile(p);
    // Cornish-Fisher expansion around the normal quantile.
    let (z2, z3) = (z * z, z * z * z);
    let cf = z
        + (z3 + z) / (4.0 * df)
        + (5.0 * z3 * z2 + 16.0 * z3 + 3.0 * z) / (96.0 * df * df)
        + (3.0 * z3 * z2 * z2 + 19.0 * z3 * z2 + 17.0 * z3 - 15.0 * z) / (384.0 * df * df * df);
    // Polynomial tail: P(T <= z) ~ C |z|^-df for large |z|.
    let ln_c = -0.5 * df.ln() - ln_beta_half + 0.5 * (df - 1.0) * df.ln() - df.ln();
    let tail = -((ln_c - p.ln()) / df).exp();
    let eval = |z: f64| (t_lower_tail(df, z, ln_beta_half), t_log_density(df, z, ln_beta_half).exp());
    let resid = |z: f64| {
        let t = t_lower_tail(df, z, ln_beta_half);
        if t > 0.0 {
            (t.ln() - p.ln()).abs()
        } else {
            f64::INFINITY
        }
    };
    let init = if cf.is_finite() && cf < 0.0 && resid(cf) <= resid(tail) { cf } else { tail };
    // Grow a finite lower bracket from the initial guess.
    let mut lo = init.min(-1.0);
    while t_lower_tail(df, lo, ln_beta_half) > p && lo > -1e300 {
        lo *= 4.0;
    }
    if t_lower_tail(df, lo, ln_beta_half) > p {
        return f64::NEG_INFINITY;
    }
    invert_tail(eval, p, lo, 0.0, init, true)
}

fn beta_quantile(a: f64, b: f64, target: f64, lower: bool, ln_b: f64) -> f64 {
    let eval = |x: f64| {
        let (l, u) = inc_beta_pair(a, b, x, 1.0 - x, ln_b);
        let dens = if x > 0.0 && x < 1.0 {
            ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b).exp()
        } else {
            0.0
        };
        (if lower { l } else { u }, dens)
    };
    let init = if lower { (a / (a + b)).min(0.5) } else { (a / (a + b)).max(0.5) };
    invert_tail(eval, target, 0.0, 1.0, init, lower)
}

fn gamma_quantile(shape: f64, target: f64, lower: bool) -> f64 {
    let ln_g = ln_gamma(shape);
    let tail = |x: f64| if lower { gamma_lr(shape, x) } else { gamma_ur(shape, x) };
    let eval = |x: f64| {
        let dens = if x > 0.0 { ((shape - 1.0) * x.ln() - x - ln_g).exp() } else { 0.0 };
        (tail(x), dens)
    };
    let mut hi = shape.max(1.0);
    while (tail(hi) < target) == lower && hi < 1e300 {
        hi *= 2.0;
    }
    // Small lower tails behave like x^shape / Gamma(shape + 1).
    let init = if lower && target < 0.1 { ((target.ln() + ln_gamma(shape + 1.0)) / shape).exp() } else { shape };
    invert_tail(eval, target, 0.0, hi, init, lower)
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Serialized as the distribution literal.
impl Serialize for ScalarDist {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScalarDist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for ScalarDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Normal => write!(f, "normal({},{})", self.location, self.scale)?,
            Family::StudentT { df } => write!(f, "t({},{},{})", self.location, self.scale, df)?,
            Family::Uniform => write!(f, "unif({},{})", self.location, self.location + self.scale)?,
            Family::Beta { a, b } => {
                if self.location == 0.0 && self.scale == 1.0 {
                    write!(f, "beta({a},{b})")?
                } else {
                    write!(f, "beta({a},{b},{},{})", self.location, self.scale)?
                }
            }
            Family::Gamma { shape } => {
                if self.location == 0.0 {
                    write!(f, "gamma({shape},{})", self.scale)?
                } else {
                    write!(f, "gamma({shape},{},{})", self.scale, self.location)?
                }
            }
        }
        if let Some((lo, hi)) = self.trunc {
            let open = if lo.is_finite() { '[' } else { '(' };
            let close = if hi.is_finite() { ']' } else { ')' };
            write!(f, "{open}{},{}{close}", fmt_bound(lo), fmt_bound(hi))?;
        }
        Ok(())
    }
}

fn parse_num(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-Inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => t
            .parse::<f64>()
            .map_err(|_| Error::ParameterDomain(format!("cannot parse number `{t}`"))),
    }
}

impl FromStr for ScalarDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let open = s
            .find('(')
            .ok_or_else(|| Error::ParameterDomain(format!("expected `name(args)` in `{s}`")))?;
        let close = s[open..]
            .find(')')
            .map(|i| i + open)
            .ok_or_else(|| Error::ParameterDomain(format!("unclosed argument list in `{s}`")))?;
        let name = &s[..open];
        let args = s[open + 1..close]
            .split(',')
            .map(parse_num)
            .collect::<Result<Vec<f64>>>()?;
        let rest = &s[close + 1..];
        let trunc = if rest.is_empty() {
            None
        } else {
            let inner = rest
                .strip_prefix(['[', '('])
                .and_then(|r| r.strip_suffix([']', ')']))
                .ok_or_else(|| Error::ParameterDomain(format!("bad truncation suffix `{rest}`")))?;
            let bounds = inner.split(',').map(parse_num).collect::<Result<Vec<f64>>>()?;
            if bounds.len() != 2 {
                return Err(Error::ParameterDomain(format!("truncation needs two bounds, got `{rest}`")));
            }
            Some((bounds[0], bounds[1]))
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::ParameterDomain(format!("`{name}` takes {n} arguments, got {}", args.len())))
            }
        };
        let (family, loc, scale) = match name {
            "normal" | "norm" | "n" => {
                arity(2)?;
                (Family::Normal, args[0], args[1])
            }
            "t" | "student_t" | "studentt" => {
                arity(3)?;
                (Family::StudentT { df: args[2] }, args[0], args[1])
            }
            "cauchy" => {
                arity(2)?;
                (Family::StudentT { df: 1.0 }, args[0], args[1])
            }
            "unif" | "uniform" => {
                arity(2)?;
                (Family::Uniform, args[0], args[1] - args[0])
            }
            "beta" => {
                if args.len() == 2 {
                    (Family::Beta { a: args[0], b: args[1] }, 0.0, 1.0)
                } else {
                    arity(4)?;
                    (Family::Beta { a: args[0], b: args[1] }, args[2], args[3])
                }
            }
            "gamma" => {
                if args.len() == 2 {
                    (Family::Gamma { shape: args[0] }, 0.0, args[1])
                } else {
                    arity(3)?;
                    (Family::Gamma { shape: args[0] }, args[2], args[1])
                }
            }
            other => return Err(Error::Lookup(format!("distribution family `{other}`"))),
        };
        ScalarDist::new(family, loc, scale, trunc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn log_pdf_examples() {
        let n = ScalarDist::normal(0.0, 1.0).unwrap();
        assert!(close(n.log_pdf(0.0), -0.918_938_533_204_672_7, 1e-14));
        let c = ScalarDist::cauchy(3.0, 1.3).unwrap();
        assert!(close(c.log_pdf(3.0), (1.0 / (PI * 1.3)).ln(), 1e-14));
        assert!(close(c.log_pdf(3.0), -1.4071, 1e-4));
        let t = ScalarDist::student_t(0.0, 1.0, 5.0).unwrap();
        let tt = t.truncated(0.0, f64::INFINITY).unwrap();
        assert!(close(tt.log_pdf(1.0), t.log_pdf(1.0) + 2f64.ln(), 1e-13));
        assert_eq!(tt.log_pdf(-0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn cdf_examples() {
        let c = ScalarDist::cauchy(2.5, 0.7).unwrap();
        assert!(close(c.cdf(2.5).unwrap(), 0.5, 1e-15));
        let c = ScalarDist::cauchy(0.0, 1.0).unwrap();
        assert!(close(c.cdf(1.0).unwrap(), 0.75, 1e-15));
        let n = ScalarDist::normal(0.0, 1.0).unwrap();
        // 30-digit erf reference: Phi(1.959964) = 0.9750000009035576...
        let v = n.cdf(1.959964).unwrap();
        assert!(close(v, 0.975_000_000_903_557_6, 1e-13), "{v:.17}");
        assert!(n.cdf(f64::NAN).is_err());
    }

    #[test]
    fn inv_cdf_examples() {
        let u = ScalarDist::uniform(0.0, 1.0).unwrap();
        assert!(close(u.inv_cdf(0.3).unwrap(), 0.3, 1e-15));
        let c = ScalarDist::cauchy(0.0, 1.0).unwrap();
        assert!(close(c.inv_cdf(0.75).unwrap(), 1.0, 1e-14));
        // Untruncated t5 0.75-quantile, from an independent incomplete-beta inversion.
        let tt = ScalarDist::student_t(0.0, 1.0, 5.0).unwrap().truncated(0.0, f64::INFINITY).unwrap();
        assert!(close(tt.inv_cdf(0.5).unwrap(), 0.726_686_843_800_422_7, 1e-10));
        assert!(u.inv_cdf(0.0).is_err());
        assert!(u.inv_cdf(1.0).is_err());
    }

    #[test]
    fn gamma_quantiles() {
        // High-precision incomplete-gamma inversions.
        let g = ScalarDist::gamma(2.5, 1.0).unwrap();
        assert!(close(g.inv_cdf(0.5).unwrap(), 2.175_730_095_547_763_7, 1e-12));
        assert!(((g.sf(32.619_318_106_683_92).unwrap() - 1e-12) / 1e-12).abs() < 1e-9);
        let small = ScalarDist::gamma(0.7, 1.0).unwrap();
        let x = small.inv_cdf(1e-10).unwrap();
        assert!(((x - 4.516_943_275_994_268e-15) / x).abs() < 1e-9);
        let shifted: ScalarDist = "gamma(2.5,2,1)".parse().unwrap();
        assert!(close(shifted.inv_cdf(0.5).unwrap(), 1.0 + 2.0 * 2.175_730_095_547_763_7, 1e-11));
        assert_eq!(shifted.support(), (1.0, f64::INFINITY));
        assert_eq!(shifted.to_string(), "gamma(2.5,2,1)");
    }

    #[test]
    fn truncation_saturates_and_validates() {
        let t = ScalarDist::student_t(1.47, 1.82, 5.0).unwrap().truncated(0.0, f64::INFINITY).unwrap();
        assert_eq!(t.cdf(0.0).unwrap(), 0.0);
        assert_eq!(t.cdf(-3.0).unwrap(), 0.0);
        assert_eq!(t.sf(f64::INFINITY).unwrap(), 0.0);
        assert!(ScalarDist::normal(0.0, 0.0).is_err());
        assert!(ScalarDist::student_t(0.0, 1.0, -1.0).is_err());
        assert!(ScalarDist::normal(0.0, 1.0).unwrap().truncated(2.0, 1.0).is_err());
        // Mass underflows: the truncation window is numerically empty.
        assert!(ScalarDist::normal(0.0, 1.0).unwrap().truncated(60.0, 61.0).is_err());
    }

    #[test]
    fn deep_upper_truncation_keeps_precision() {
        let n = ScalarDist::normal(0.0, 1.0).unwrap().truncated(8.0, f64::INFINITY).unwrap();
        let x = n.inv_cdf(0.5).unwrap();
        assert!(x > 8.0 && x < 8.2);
        assert!(close(n.cdf(x).unwrap(), 0.5, 1e-10));
    }

    #[test]
    fn display_parse_round_trip() {
        for s in ["t(1.47,1.82,5)[0,inf)", "normal(0,1)", "unif(0.2,0.5)", "cauchy(3,1.3)", "beta(2,3)"] {
            let d: ScalarDist = s.parse().unwrap();
            let again: ScalarDist = d.to_string().parse().unwrap();
            assert_eq!(d, again, "{s}");
        }
        let d: ScalarDist = "t(1.47,1.82,5)[0,inf)".parse().unwrap();
        assert_eq!(d.df(), Some(5.0));
        assert_eq!(d.support(), (0.0, f64::INFINITY));
        assert!(matches!("gumbel(0,1)".parse::<ScalarDist>(), Err(Error::Lookup(_))));
        assert!("t(0,1)".parse::<ScalarDist>().is_err());
    }
}
