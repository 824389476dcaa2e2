//! Small derivative-free optimizers.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Maximizes a unimodal `f` on `[a, b]` by golden-section search; returns
/// `(argmax, max)`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = a + GOLDEN * (b - a);
    let mut x2 = b - GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + x1.abs().max(x2.abs())) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - GOLDEN * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + GOLDEN * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Brackets a maximum of `f` starting from `x0`, stepping geometrically
/// inside `(lo, hi)`. Returns `(a, b)` containing an interior maximum, or
/// `None` when the ascent runs into a bound.
pub(crate) fn bracket_max<F: Fn(f64) -> f64>(f: &F, x0: f64, step0: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let f0 = f(x0);
    let mut step = step0;
    // Pick the uphill direction.
    let up = f(x0 + step);
    let down = f(x0 - step);
    let dir = if up >= f0 && up >= down {
        1.0
    } else if down > f0 {
        -1.0
    } else {
        return Some((x0 - step, x0 + step));
    };
    let mut prev = x0;
    let mut cur = x0 + dir * step;
    let mut fcur = if dir > 0.0 { up } else { down };
    for _ in 0..200 {
        step *= 1.618;
        let mut next = cur + dir * step;
        if next <= lo || next >= hi {
            // Approach the bound geometrically instead of crossing it.
            let bound = if dir > 0.0 { hi } else { lo };
            if !bound.is_finite() {
                return None;
            }
            next = cur + 0.5 * (bound - cur);
            if (next - cur).abs() <= 1e-12 * (1.0 + cur.abs()) {
                return None;
            }
        }
        let fnext = f(next);
        if fnext < fcur {
            return Some(if dir > 0.0 { (prev, next) } else { (next, prev) });
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
    None
}

/// Result of [`nelder_mead_max`].
#[derive(Debug, Clone)]
pub(crate) struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Nelder-Mead maximization from `x0` with initial simplex offsets `steps`.
/// Stops when the simplex spans less than `xtol` in every coordinate.
pub(crate) fn nelder_mead_max<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    xtol: f64,
    max_evals: usize,
) -> NmResult {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    while evals < max_evals {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("no NaN"));
        let spread = (0..n)
            .map(|k| {
                let (mn, mx) = simplex
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.0[k]), b.max(s.0[k])));
                mx - mn
            })
            .fold(0.0, f64::max);
        if spread < xtol {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|k| simplex[..n].iter().map(|s| s.0[k]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (worst.0[k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr > simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr > worst.1 {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if fc > worst.1.max(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for s in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = (0..n).map(|k| best[k] + 0.5 * (s.0[k] - best[k])).collect();
            let v = eval(&x, &mut evals);
            *s = (x, v);
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("no NaN"));
    let (x, value) = simplex.swap_remove(0);
    NmResult { x, value }
}
