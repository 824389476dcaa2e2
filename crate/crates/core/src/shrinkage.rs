//! Shrinkage loops: univariate on (0, 1), univariate under a distribution's
//! CDF, and per-coordinate on a box.
//!
//! Each rejected candidate replaces the bound on its side of the anchor, so
//! the interval (or box) only tightens and the anchor stays inside. A
//! candidate equal to the anchor counts as lying below it. Candidates that
//! round onto a bound are redrawn without being evaluated.

use rand::Rng;

use crate::dist::ScalarDist;
use crate::error::{Error, Result};
use crate::rng::open_unit;

/// Default cap on shrinkage iterations.
pub const MAX_SHRINK_ITERS: usize = 10_000;

fn non_convergence(iterations: usize, bounds: String) -> Error {
    Error::NonConvergence { iterations, bounds }
}

/// Shrinkage on an interval `(lo, hi)` around `x0` with uniform candidates.
///
/// Returns the accepted point and the number of rejected candidates.
pub fn shrink_interval<R, F>(x0: f64, lo: f64, hi: f64, mut accept: F, rng: &mut R) -> Result<(f64, usize)>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> bool,
{
    let (mut l, mut r) = (lo, hi);
    let mut rejects = 0;
    for _ in 0..MAX_SHRINK_ITERS {
        let x1 = l + (r - l) * open_unit(rng);
        if !(x1 > l && x1 < r) {
            continue;
        }
        if accept(x1) {
            return Ok((x1, rejects));
        }
        rejects += 1;
        if x1 <= x0 {
            l = x1;
        } else {
            r = x1;
        }
    }
    Err(non_convergence(MAX_SHRINK_ITERS, format!("({l:e}, {r:e}) around {x0:e}")))
}

/// Shrinkage on the unit interval around `u0`.
pub fn shrink_unit<R, F>(u0: f64, accept: F, rng: &mut R) -> Result<(f64, usize)>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> bool,
{
    if !(0.0..=1.0).contains(&u0) {
        return Err(Error::Domain(format!("anchor {u0} outside [0, 1]")));
    }
    shrink_interval(u0, 0.0, 1.0, accept, rng)
}

/// Shrinkage with candidates drawn from `q` restricted to the current
/// interval, by inverting a uniform on `(cdf(L), cdf(R))`.
pub fn generalized_shrink<R, F>(q: &ScalarDist, x0: f64, mut accept: F, rng: &mut R) -> Result<(f64, usize)>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> bool,
{
    if !q.in_support(x0) {
        return Err(Error::Domain(format!("anchor {x0} outside the support of {q}")));
    }
    let (mut l, mut r) = q.support();
    let mut rejects = 0;
    for _ in 0..MAX_SHRINK_ITERS {
        let (cl, cr) = (q.cdf(l)?, q.cdf(r)?);
        let u = cl + (cr - cl) * open_unit(rng);
        if !(u > cl && u < cr && u > 0.0 && u < 1.0) {
            continue;
        }
        let x1 = q.inv_cdf(u)?;
        if !(x1 > l && x1 < r) {
            continue;
        }
        if accept(x1) {
            return Ok((x1, rejects));
        }
        rejects += 1;
        if x1 <= x0 {
            l = x1;
        } else {
            r = x1;
        }
    }
    Err(non_convergence(MAX_SHRINK_ITERS, format!("({l:e}, {r:e}) around {x0:e}")))
}

/// Per-coordinate shrinkage on the box `[lo, hi]` around `x0`.
pub fn shrink_box<R, F>(x0: &[f64], lo: &[f64], hi: &[f64], mut accept: F, rng: &mut R) -> Result<(Vec<f64>, usize)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> bool,
{
    let d = x0.len();
    if lo.len() != d || hi.len() != d {
        return Err(Error::Shape(format!("box of dims {} and {} around a {d}-vector", lo.len(), hi.len())));
    }
    let mut l = lo.to_vec();
    let mut r = hi.to_vec();
    let mut x1 = vec![0.0; d];
    let mut rejects = 0;
    'outer: for _ in 0..MAX_SHRINK_ITERS {
        for k in 0..d {
            let v = l[k] + (r[k] - l[k]) * open_unit(rng);
            if !(v > l[k] && v < r[k]) {
                continue 'outer;
            }
            x1[k] = v;
        }
        if accept(&x1) {
            return Ok((x1, rejects));
        }
        rejects += 1;
        for k in 0..d {
            if x1[k] <= x0[k] {
                l[k] = x1[k];
            } else {
                r[k] = x1[k];
            }
        }
    }
    let bounds = l
        .iter()
        .zip(&r)
        .enumerate()
        .map(|(k, (a, b))| format!("{k}: ({a:e}, {b:e})"))
        .collect::<Vec<_>>()
        .join(", ");
    Err(non_convergence(MAX_SHRINK_ITERS, bounds))
}

/// Per-coordinate shrinkage on the unit hypercube around `psi0`.
pub fn shrink_hyperrect<R, F>(psi0: &[f64], accept: F, rng: &mut R) -> Result<(Vec<f64>, usize)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> bool,
{
    if psi0.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("anchor outside the unit hypercube".into()));
    }
    let d = psi0.len();
    shrink_box(psi0, &vec![0.0; d], &vec![1.0; d], accept, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, ScriptedUniforms};

    #[test]
    fn whole_support_accepts_first() {
        let mut rng = chain_rng(1, 0);
        let (u, rej) = shrink_unit(0.3, |_| true, &mut rng).unwrap();
        assert!(u > 0.0 && u < 1.0);
        assert_eq!(rej, 0);
        let (v, rej) = shrink_hyperrect(&[0.2, 0.5, 0.9], |_| true, &mut rng).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(rej, 0);
    }

    #[test]
    fn hand_trace() {
        let mut rng = ScriptedUniforms::new(&[0.9, 0.1 / 0.9, 0.45 / 0.8]);
        let mut seen = Vec::new();
        let (u, rej) = shrink_unit(
            0.5,
            |u| {
                seen.push(u);
                u > 0.4 && u < 0.6
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(rej, 2);
        assert!((u - 0.55).abs() < 1e-12);
        assert!((seen[0] - 0.9).abs() < 1e-12 && (seen[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn empty_slice_hits_cap() {
        let mut rng = chain_rng(2, 0);
        let err = shrink_unit(0.5, |_| false, &mut rng).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
