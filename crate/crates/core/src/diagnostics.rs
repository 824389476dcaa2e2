//! Chain diagnostics: AR-spectral effective sample size, Kolmogorov-Smirnov
//! test and the Gelman-Rubin upper confidence bound.

use serde::Serialize;

use crate::dist::ScalarDist;
use crate::error::{Error, Result};
use crate::special::norm_quantile_upper;

/// Per-chain summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub ess: f64,
    pub esps: f64,
    pub ks_d: f64,
    pub ks_p: f64,
    pub psrf_upper95: Option<f64>,
    pub n: usize,
    pub kernel_label: String,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Fitted autoregression used by [`ess`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArFit {
    pub order: usize,
    pub coefs: Vec<f64>,
    /// Innovation variance with the degrees-of-freedom correction.
    pub var_pred: f64,
}

/// Yule-Walker AR fit with order chosen by AIC over `0..=min(n - 1, 10 log10 n)`.
pub fn ar_fit(series: &[f64]) -> Result<ArFit> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("AR fit needs at least 2 values, got {n}")));
    }
    let m = mean(series);
    let max_order = ((10.0 * (n as f64).log10()).floor() as usize).min(n - 1);
    let centered: Vec<f64> = series.iter().map(|v| v - m).collect();
    let acov: Vec<f64> = (0..=max_order)
        .map(|k| centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect();
    if !(acov[0] > 0.0) {
        return Err(Error::Degenerate("series is constant".into()));
    }
    // Levinson-Durbin recursion keeping every order's coefficients.
    let mut phi: Vec<f64> = Vec::new();
    let mut v = acov[0];
    let mut best = (n as f64 * v.ln() + 2.0, 0usize, Vec::new(), v);
    for k in 1..=max_order {
        let num = acov[k] - phi.iter().enumerate().map(|(j, p)| p * acov[k - 1 - j]).sum::<f64>();
        let pacf = num / v;
        let mut next = vec![0.0; k];
        for j in 0..k - 1 {
            next[j] = phi[j] - pacf * phi[k - 2 - j];
        }
        next[k - 1] = pacf;
        phi = next;
        v *= 1.0 - pacf * pacf;
        if !(v > 0.0) {
            break;
        }
        let aic = n as f64 * v.ln() + 2.0 * k as f64 + 2.0;
        if aic < best.0 {
            best = (aic, k, phi.clone(), v);
        }
    }
    let (_, order, coefs, v) = best;
    let var_pred = v * n as f64 / (n - (order + 1)).max(1) as f64;
    Ok(ArFit { order, coefs, var_pred })
}

/// Effective sample size from the AR spectral density at frequency zero.
pub fn ess(series: &[f64]) -> Result<f64> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!("ESS needs at least 2 values, got {}", series.len())));
    }
    let fit = ar_fit(series)?;
    let denom = 1.0 - fit.coefs.iter().sum::<f64>();
    let spec0 = fit.var_pred / (denom * denom);
    Ok(series.len() as f64 * var(series) / spec0)
}

/// Effective samples per CPU second.
pub fn esps(ess: f64, cpu_seconds: f64) -> Result<f64> {
    if !(cpu_seconds > 0.0) {
        return Err(Error::Domain(format!("cpu time must be positive, got {cpu_seconds}")));
    }
    Ok(ess / cpu_seconds)
}

/// One-sample Kolmogorov-Smirnov statistic and p-value.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("K-S test needs at least one sample".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let d = d.clamp(0.0, 1.0);
    Ok((d, ks_pvalue(d, xs.len())))
}

/// P-value of the K-S statistic `d` for sample size `n`: exact below 35,
/// asymptotic otherwise.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    if n < 35 {
        (1.0 - kolmogorov_exact_cdf(n, d)).clamp(0.0, 1.0)
    } else {
        kolmogorov_sf((n as f64).sqrt() * d)
    }
}

/// Upper tail of the limiting Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form, fast for small arguments.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=100 {
            let j = (2 * k - 1) as f64;
            let t = (c * j * j).exp();
            s += t;
            if t < 1e-300 {
                break;
            }
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-300 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Exact `P(D_n < d)` by the Marsaglia-Tsang-Wang matrix recursion.
fn kolmogorov_exact_cdf(n: usize, d: f64) -> f64 {
    let nf = n as f64;
    if d <= 0.5 / nf {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let nd = nf * d;
    let k = nd.floor() as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nd;
    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            hm[i * m + j] = if i + 1 >= j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..=i {
            for g in 1..=(i - j + 1) {
                hm[i * m + j] /= g as f64;
            }
        }
    }
    let (q, e) = mat_power(&hm, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    let mut eq = e;
    for i in 1..=n {
        s = s * i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            eq -= 140;
        }
    }
    s * 10f64.powi(eq)
}

fn mat_mult(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// Matrix power with a decimal exponent kept separately to avoid overflow.
fn mat_power(a: &[f64], m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e) = mat_power(a, m, n / 2);
    let mut b = mat_mult(&half, &half, m);
    let mut eb = 2 * e;
    if n % 2 == 1 {
        b = mat_mult(a, &b, m);
    }
    if b[(m / 2) * m + m / 2] > 1e140 {
        for v in b.iter_mut() {
            *v *= 1e-140;
        }
        eb += 140;
    }
    (b, eb)
}

/// Upper 97.5% bound of the Gelman-Rubin potential scale reduction factor.
pub fn psrf(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::Shape(format!("PSRF needs at least 2 chains, got {m}")));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Shape("chains have unequal lengths".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("chains of length {n}")));
    }
    let (mf, nf) = (m as f64, n as f64);
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let s2: Vec<f64> = chains.iter().map(|c| var(c)).collect();
    let w = mean(&s2);
    let b = nf * var(&means);
    if !(w > 0.0) {
        return Err(Error::Degenerate("within-chain variance is zero".into()));
    }
    let mu = mean(&means);
    let means2: Vec<f64> = means.iter().map(|x| x * x).collect();
    let cov = |a: &[f64], b: &[f64]| {
        let (ma, mb) = (mean(a), mean(b));
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0)
    };
    let var_w = var(&s2) / mf;
    let var_b = 2.0 * b * b / (mf - 1.0);
    let cov_wb = (nf / mf) * (cov(&s2, &means2) - 2.0 * mu * cov(&s2, &means));
    let v = (nf - 1.0) * w / nf + (1.0 + 1.0 / mf) * b / nf;
    let var_v = ((nf - 1.0).powi(2) * var_w
        + (1.0 + 1.0 / mf).powi(2) * var_b
        + 2.0 * (nf - 1.0) * (1.0 + 1.0 / mf) * cov_wb)
        / (nf * nf);
    let df_v = 2.0 * v * v / var_v;
    let df_adj = if df_v.is_finite() { (df_v + 3.0) / (df_v + 1.0) } else { 1.0 };
    let b_df = mf - 1.0;
    let w_df = if var_w > 0.0 { 2.0 * w * w / var_w } else { f64::INFINITY };
    let r2_fixed = (nf - 1.0) / nf;
    let r2_random = (1.0 + 1.0 / mf) * (1.0 / nf) * (b / w);
    let q = f_quantile(0.975, b_df, w_df)?;
    Ok((df_adj * (r2_fixed + q * r2_random)).sqrt())
}

/// Quantile of the F distribution with `d1`, `d2` degrees of freedom.
pub fn f_quantile(p: f64, d1: f64, d2: f64) -> Result<f64> {
    if d2 > 1e7 {
        return Ok(chi2_quantile(p, d1)? / d1);
    }
    let x = ScalarDist::beta(0.5 * d1, 0.5 * d2)?.inv_cdf(p)?;
    Ok(d2 * x / (d1 * (1.0 - x)))
}

fn chi2_quantile(p: f64, df: f64) -> Result<f64> {
    if df == 1.0 {
        let z = norm_quantile_upper(0.5 * (1.0 - p));
        return Ok(z * z);
    }
    let a = 0.5 * df;
    let cdf = |x: f64| statrs::function::gamma::gamma_lr(a, 0.5 * x);
    let (mut lo, mut hi) = (0.0, df.max(1.0));
    while cdf(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Assembles a [`DiagnosticsReport`] for one chain against a reference CDF.
pub fn report<F: Fn(f64) -> f64>(
    draws: &[f64],
    cpu_seconds: f64,
    thin: usize,
    cdf: Option<F>,
    kernel_label: &str,
) -> DiagnosticsReport {
    let e = ess(draws).unwrap_or(0.0);
    let es = esps(e, cpu_seconds).unwrap_or(0.0);
    let (ks_d, ks_p) = match cdf {
        Some(f) if !draws.is_empty() => {
            let thinned: Vec<f64> = draws.iter().step_by(thin.max(1)).copied().collect();
            ks_test(&thinned, f).unwrap_or((f64::NAN, f64::NAN))
        }
        _ => (f64::NAN, f64::NAN),
    };
    DiagnosticsReport {
        ess: e,
        esps: es,
        ks_d,
        ks_p,
        psrf_upper95: None,
        n: draws.len(),
        kernel_label: kernel_label.to_string(),
    }
}
