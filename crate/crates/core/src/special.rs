//! Special functions backing the distribution code: regularized incomplete
//! beta with complement, normal tails, and a safeguarded tail inverter.

use std::f64::consts::SQRT_2;

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

const CF_MAX_ITER: usize = 500;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Regularized incomplete beta `I_x(a, b)` and its complement `1 - I_x(a, b)`.
///
/// `y` must equal `1 - x`; passing it separately keeps precision when `x`
/// is close to one. The smaller of the two returned values is computed
/// directly from the continued fraction, never by subtraction.
pub(crate) fn inc_beta_pair(a: f64, b: f64, x: f64, y: f64, ln_beta_ab: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if y <= 0.0 {
        return (1.0, 0.0);
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta_ab;
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = (ln_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0);
        (lower, 1.0 - lower)
    } else {
        let upper = (ln_front.exp() * beta_cf(b, a, y) / b).clamp(0.0, 1.0);
        (1.0 - upper, upper)
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Standard normal lower tail.
pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal upper tail.
pub(crate) fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Standard normal quantile of a lower-tail probability `p` in (0, 1),
/// polished with one Halley step.
pub(crate) fn norm_quantile(p: f64) -> f64 {
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    halley_polish_normal(z, p, true)
}

/// Standard normal quantile of an upper-tail probability `q` in (0, 1).
pub(crate) fn norm_quantile_upper(q: f64) -> f64 {
    let z = SQRT_2 * erfc_inv(2.0 * q);
    halley_polish_normal(z, q, false)
}

fn halley_polish_normal(z: f64, target: f64, lower: bool) -> f64 {
    if !z.is_finite() {
        return z;
    }
    let tail = if lower { norm_cdf(z) } else { norm_sf(z) };
    let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if dens <= 0.0 {
        return z;
    }
    // Newton correction on the tail, with the Halley curvature term.
    let e = if lower { tail - target } else { target - tail };
    let u = e / dens;
    let step = u / (1.0 + 0.5 * z * u);
    if step.is_finite() {
        z - step
    } else {
        z
    }
}

/// Solves `tail(z) = target` for `z` inside `[lo, hi]`.
///
/// `eval` returns `(tail(z), |d tail / dz|)`. When `increasing` is true the
/// tail is a lower tail (increasing in `z`), otherwise an upper tail.
/// Newton steps are taken on the log of the tail, falling back to bisection
/// whenever a step leaves the current bracket.
pub(crate) fn invert_tail<F>(eval: F, target: f64, mut lo: f64, mut hi: f64, init: f64, increasing: bool) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let ln_target = target.ln();
    let mut z = if init > lo && init < hi { init } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let (t, dens) = eval(z);
        if t == target {
            return z;
        }
        // Tighten the bracket from the sign of the residual.
        let below = (t < target) == increasing;
        if below {
            lo = z;
        } else {
            hi = z;
        }
        let mut next = f64::NAN;
        if t > 0.0 && dens > 0.0 {
            let slope = if increasing { dens / t } else { -dens / t };
            next = z - (t.ln() - ln_target) / slope;
        }
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let scale = z.abs().max(next.abs()).max(1e-300);
        if (next - z).abs() <= 4.0 * f64::EPSILON * scale || hi - lo <= 4.0 * f64::EPSILON * scale {
            return next;
        }
        z = next;
    }
    z
}
