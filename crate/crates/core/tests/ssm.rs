use nalgebra::{DMatrix, DVector};
use qslice::diagnostics::ks_test;
use qslice::rng::chain_rng;
use qslice::samplers::mqslice_step;
use qslice::ssm::{
    backward_params, cascade_pseudo_from_ffbs, forward_filter, qslice_tvp_update, run_ssm_chain, summarize,
    PseudoFamily, SsmConfig, SsmSampler, TruncDlm,
};

fn small(lower_bound: f64) -> TruncDlm {
    TruncDlm {
        times: vec![0.1, 0.3, 0.4, 0.7, 1.0],
        obs: vec![0.4, 0.1, -0.2, 0.5, 0.2],
        obs_var: 0.3,
        init_mean: 0.2,
        init_var: 0.8,
        evo_rate: 0.5,
        lower_bound,
    }
}

/// Posterior mean and covariance of the untruncated model by direct
/// assembly of the joint precision matrix.
fn dense_posterior(m: &TruncDlm) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.len();
    let mut q = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    q[(0, 0)] += 1.0 / m.init_var;
    b[0] += m.init_mean / m.init_var;
    for t in 1..n {
        let w = m.evo_rate * (m.times[t] - m.times[t - 1]);
        q[(t, t)] += 1.0 / w;
        q[(t - 1, t - 1)] += 1.0 / w;
        q[(t, t - 1)] -= 1.0 / w;
        q[(t - 1, t)] -= 1.0 / w;
    }
    for t in 0..n {
        q[(t, t)] += 1.0 / m.obs_var;
        b[t] += m.obs[t] / m.obs_var;
    }
    let cov = q.try_inverse().unwrap();
    (&cov * b, cov)
}

#[test]
fn single_update_is_conjugate() {
    let m = TruncDlm { times: vec![1.0], obs: vec![1.5], ..small(f64::NEG_INFINITY) };
    let ff = forward_filter(&m).unwrap();
    let prec = 1.0 / 0.8 + 1.0 / 0.3;
    assert!((ff.ff_mean[0] - (0.2 / 0.8 + 1.5 / 0.3) / prec).abs() < 1e-14);
    assert!((ff.ff_sd[0] - prec.powf(-0.5)).abs() < 1e-14);
}

#[test]
fn noiseless_limit_tracks_observations() {
    let m = TruncDlm { obs_var: 1e-12, ..small(f64::NEG_INFINITY) };
    let ff = forward_filter(&m).unwrap();
    for (a, y) in ff.ff_mean.iter().zip(&m.obs) {
        assert!((a - y).abs() < 1e-9);
    }
}

#[test]
fn static_level_matches_batch_conjugate() {
    let m = TruncDlm { evo_rate: 0.0, ..small(f64::NEG_INFINITY) };
    let ff = forward_filter(&m).unwrap();
    for t in 0..m.len() {
        let prec = 1.0 / m.init_var + (t + 1) as f64 / m.obs_var;
        let s: f64 = m.obs[..=t].iter().sum();
        let mean = (m.init_mean / m.init_var + s / m.obs_var) / prec;
        assert!((ff.ff_mean[t] - mean).abs() < 1e-12);
        assert!((ff.ff_sd[t] - prec.powf(-0.5)).abs() < 1e-12);
    }
    assert!(cascade_pseudo_from_ffbs(&m, &ff, PseudoFamily::Normal).is_err());
}

#[test]
fn backward_limits() {
    let next = 0.9;
    let wide = forward_filter(&TruncDlm { evo_rate: 1e12, ..small(0.0) }).unwrap();
    let (mu, _) = backward_params(&wide, next, 2).unwrap();
    assert!((mu - wide.ff_mean[2]).abs() < 1e-9);
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for rate in [10.0, 1.0, 0.1, 0.01, 0.001, 1e-5] {
        let ff = forward_filter(&TruncDlm { evo_rate: rate, ..small(0.0) }).unwrap();
        let (mu, sd) = backward_params(&ff, next, 2).unwrap();
        let gap = (mu - next).abs();
        assert!(gap < prev.0 && sd < prev.1, "rate {rate}");
        prev = (gap, sd);
    }
    assert!(prev.0 < 1e-3 && prev.1 < 1e-2);
    assert!(backward_params(&wide, next, 4).is_err());
}

#[test]
fn ffbs_draws_match_dense_posterior() {
    let m = small(f64::NEG_INFINITY);
    let (mean, cov) = dense_posterior(&m);
    let pseudo = cascade_pseudo_from_ffbs(&m, &forward_filter(&m).unwrap(), PseudoFamily::Normal).unwrap();
    let mut rng = chain_rng(31, 0);
    let n = 10_000;
    let draws: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_vec(pseudo.sample(&mut rng).unwrap())).collect();
    let emp_mean = draws.iter().fold(DVector::zeros(5), |a, d| a + d) / n as f64;
    let emp_cov =
        draws.iter().fold(DMatrix::zeros(5, 5), |a, d| a + (d - &emp_mean) * (d - &emp_mean).transpose()) / (n as f64 - 1.0);
    for i in 0..5 {
        let se = (cov[(i, i)] / n as f64).sqrt();
        assert!((emp_mean[i] - mean[i]).abs() < 3.0 * se, "mean {i}: {} vs {}", emp_mean[i], mean[i]);
        for j in 0..5 {
            // Normal-theory standard error of a sample covariance.
            let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / n as f64).sqrt();
            assert!((emp_cov[(i, j)] - cov[(i, j)]).abs() < 3.0 * se, "cov {i},{j}");
        }
    }
}

#[test]
fn cascade_transform_is_uniform_under_its_own_pseudo() {
    let m = small(0.0);
    let ff = forward_filter(&m).unwrap();
    for fam in [PseudoFamily::Normal, PseudoFamily::StudentT(5.0)] {
        let pseudo = cascade_pseudo_from_ffbs(&m, &ff, fam).unwrap();
        let mut rng = chain_rng(32, 0);
        let psis: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                let a = pseudo.sample(&mut rng).unwrap();
                assert!(a.iter().all(|v| *v >= 0.0));
                pseudo.to_unit(&a).unwrap().0
            })
            .collect();
        for t in 0..5 {
            let col: Vec<f64> = psis.iter().map(|p| p[t]).collect();
            let (_, p) = ks_test(&col, |u| u.clamp(0.0, 1.0)).unwrap();
            assert!(p > 0.001, "{fam} coordinate {t}: p = {p}");
        }
    }
}

#[test]
fn t_components_have_heavier_tails() {
    let m = small(0.0);
    let ff = forward_filter(&m).unwrap();
    let normal = cascade_pseudo_from_ffbs(&m, &ff, PseudoFamily::Normal).unwrap();
    let t5 = cascade_pseudo_from_ffbs(&m, &ff, PseudoFamily::StudentT(5.0)).unwrap();
    // Both share the conditioning value, so compare component quantiles.
    let psi = vec![0.999; 5];
    let (xn, _) = normal.from_unit(&psi).unwrap();
    let (xt, _) = t5.from_unit(&[0.999; 5]).unwrap();
    assert!(xt[4] > xn[4]);
    for t in 0..4 {
        let fixed_next = xn[t + 1];
        let (mu, sd) = backward_params(&ff, fixed_next, t).unwrap();
        let qn = qslice::ScalarDist::normal(mu, sd).unwrap().truncated(0.0, f64::INFINITY).unwrap().inv_cdf(0.999);
        let qt = qslice::ScalarDist::student_t(mu, sd, 5.0).unwrap().truncated(0.0, f64::INFINITY).unwrap().inv_cdf(0.999);
        assert!(qt.unwrap() > qn.unwrap(), "t = {t}");
    }
}

#[test]
fn exact_pseudo_never_rejects() {
    let m = small(f64::NEG_INFINITY);
    let pseudo = cascade_pseudo_from_ffbs(&m, &forward_filter(&m).unwrap(), PseudoFamily::Normal).unwrap();
    let target = m.target().unwrap();
    let mut rng = chain_rng(33, 0);
    let mut x = m.obs.clone();
    for _ in 0..5_000 {
        let rec = mqslice_step(&target, &pseudo, &x, &mut rng).unwrap();
        assert_eq!(rec.n_rejects, 0);
        assert_eq!(rec.n_target_evals, 2);
        x = rec.state;
    }
}

#[test]
fn block_update_counter_law_and_bound() {
    let m = small(0.0);
    let mut rng = chain_rng(34, 0);
    let mut x = vec![0.3; 5];
    for _ in 0..2_000 {
        let rec = qslice_tvp_update(&m, &x, PseudoFamily::Normal, &mut rng).unwrap();
        assert_eq!(rec.n_target_evals, rec.n_rejects + 2);
        assert!(rec.state.iter().all(|a| *a >= 0.0));
        x = rec.state;
    }
    assert!(qslice_tvp_update(&m, &[-0.1, 0.3, 0.3, 0.3, 0.3], PseudoFamily::Normal, &mut rng).is_err());
    assert!(qslice_tvp_update(&m, &[0.3; 4], PseudoFamily::Normal, &mut rng).is_err());
}

#[test]
fn near_exact_pseudo_far_from_bound_rarely_rejects() {
    let m = TruncDlm { obs: vec![5.4, 5.1, 4.8, 5.5, 5.2], ..small(0.0) };
    let mut rng = chain_rng(35, 0);
    let mut x = m.obs.clone();
    let mut rejects = 0;
    for _ in 0..2_000 {
        let rec = qslice_tvp_update(&m, &x, PseudoFamily::Normal, &mut rng).unwrap();
        rejects += rec.n_rejects;
        x = rec.state;
    }
    assert_eq!(rejects, 0);
}

#[test]
fn truncated_mqslice_and_imh_agree() {
    let m = small(0.0);
    let chains = |s: &str| {
        let s: SsmSampler = s.parse().unwrap();
        let c: Vec<_> = (0..2).map(|c| run_ssm_chain(&m, &s, 20_000, 500, 36, c).unwrap()).collect();
        summarize(&s, &c).unwrap()
    };
    let (a, b) = (chains("mqslice:normal"), chains("imh:normal"));
    for t in 0..5 {
        let tol = 3.0 * (a.alpha_se[t].powi(2) + b.alpha_se[t].powi(2)).sqrt();
        assert!((a.alpha_mean[t] - b.alpha_mean[t]).abs() < tol, "t {t}: {} vs {}", a.alpha_mean[t], b.alpha_mean[t]);
    }
    // Truncation moves the posterior mean above the untruncated one.
    let (untrunc, _) = dense_posterior(&m);
    assert!((0..5).all(|t| a.alpha_mean[t] > untrunc[t]));
}

#[test]
fn demo_defaults_press_against_the_bound() {
    let m = SsmConfig::default().model().unwrap();
    let ff = forward_filter(&m).unwrap();
    assert!(ff.ff_mean.iter().zip(&ff.ff_sd).any(|(mu, sd)| mu - 2.0 * sd < 0.0));
    assert_eq!(m.times.len(), 20);
    assert!((m.times[1] - m.times[0] - 1.0 / 12.0).abs() < 1e-15);
}
