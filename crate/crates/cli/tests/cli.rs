mod common;

use std::fs;

use common::{assert_valid, csv_table, ok, qslice, schema, stderr, stdout, validate};
use qslice::rng::chain_rng;
use qslice::StdTarget;
use qslice_cli::bench::BENCH_COLUMNS;
use qslice_cli::examples::{GPRIOR_COLUMNS, SSM_COLUMNS};
use rand::Rng;
use serde_json::{json, Value};

const SMALL_BENCH: [&str; 10] =
    ["bench", "--targets", "normal,gamma2.5", "--n-iter", "500", "--burnin", "100", "--chains", "3", "--kernel"];

fn small_bench(extra: &[&str]) -> Vec<String> {
    let mut a: Vec<String> = SMALL_BENCH.iter().map(|s| s.to_string()).collect();
    a.push("QS=qslice:auc-samples".into());
    a.extend(["--kernel", "stepout:2", "--kernel", "IMH=imh:t(1,2,5)"].map(String::from));
    a.extend(extra.iter().map(|s| s.to_string()));
    a
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn validator_catches_violations() {
    let s = schema("race_result");
    assert!(validate(&s, &json!({"best": 1.0, "rounds": []}), "$").is_ok());
    assert!(validate(&s, &json!({"best": "x", "rounds": []}), "$").is_err());
    assert!(validate(&s, &json!({"rounds": []}), "$").is_err());
    assert!(validate(&s, &json!({"best": 1.0, "rounds": [], "extra": 0}), "$").is_err());
    let d = schema("diag");
    let good = json!({"pseudo": "unif(0,1)", "n": 1, "n_excluded": 0, "excluded": [], "histogram": [1],
                      "auc_estimate": 1.0, "mean": 0.5, "shape": "flat"});
    assert!(validate(&d, &good, "$").is_ok());
    let mut bad = good.clone();
    bad["shape"] = json!("round");
    assert!(validate(&d, &bad, "$").is_err());
    bad = good.clone();
    bad["auc_estimate"] = json!(1.5);
    assert!(validate(&d, &bad, "$").is_err());
}

#[test]
fn bench_csv_header_and_json_schema() {
    let text = ok(&refs(&small_bench(&[])));
    let (header, rows) = csv_table(&text);
    assert_eq!(header, BENCH_COLUMNS);
    assert_eq!(rows.len(), 2 * 3 * 3);
    assert_eq!(rows[0][0], "normal");
    assert_eq!(rows[0][1], "QS");
    assert_eq!(rows[3][1], "stepout:2");
    assert_eq!(rows[17][0..4], ["gamma2.5", "IMH", "t(1,2,5)", "2"]);
    // psrf is shared within a target and kernel.
    assert_eq!(rows[0][10], rows[2][10]);

    let v = assert_valid("bench_rows", &ok(&refs(&small_bench(&["--format", "json"]))));
    assert_eq!(v.as_array().unwrap().len(), 18);
}

#[test]
fn bench_is_deterministic_apart_from_timing() {
    let strip = |t: &str| -> Vec<Vec<String>> {
        let (h, rows) = csv_table(t);
        let skip: Vec<usize> =
            h.iter().enumerate().filter(|(_, c)| *c == "cpu_seconds" || *c == "esps").map(|(i, _)| i).collect();
        rows.into_iter()
            .map(|r| r.into_iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, f)| f).collect())
            .collect()
    };
    let a = ok(&refs(&small_bench(&["--jobs", "1"])));
    let b = ok(&refs(&small_bench(&["--jobs", "4"])));
    assert_eq!(strip(&a), strip(&b));
    let c = ok(&refs(&small_bench(&["--seed", "99"])));
    assert_ne!(strip(&a), strip(&c));
}

#[test]
fn bench_with_zero_iterations_reports_zero_ess() {
    let text = ok(&["bench", "--targets", "normal", "--kernel", "stepout:2", "--n-iter", "0", "--chains", "2"]);
    let (h, rows) = csv_table(&text);
    let ess = h.iter().position(|c| c == "ess").unwrap();
    let ks = h.iter().position(|c| c == "ks_p").unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r[ess].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[ks], "");
    }
}

#[test]
fn bench_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    let out = dir.path().join("rows.csv");
    fs::write(
        &cfg,
        r#"{"targets": ["invgamma2"], "kernels": [{"name": "R", "spec": "rwm:3"}], "n_iter": 300, "burnin": 50, "n_chains": 2}"#,
    )
    .unwrap();
    let printed = ok(&["bench", "--config", cfg.to_str().unwrap(), "--chains", "4", "--print-config"]);
    let v = assert_valid("bench_config", &printed);
    assert_eq!(v["n_chains"], 4);
    assert_eq!(v["n_iter"], 300);
    assert_eq!(v["kernels"][0]["spec"], "rwm:3");

    ok(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let (_, rows) = csv_table(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[0] == "invgamma2" && r[1] == "R" && r[2] == "c=3"));

    let defaults = ok(&["bench", "--print-config"]);
    let v = assert_valid("bench_config", &defaults);
    assert_eq!(v["targets"].as_array().unwrap().len(), 5);
    assert_eq!((v["n_iter"].as_u64(), v["n_chains"].as_u64(), v["thin"].as_u64()), (Some(20000), Some(20), Some(10)));
}

#[test]
fn bench_validation_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"n_chains": 0}"#, "n_chains"),
        (r#"{"thin": 0}"#, "thin"),
        (r#"{"targets": ["normal", "weibull"]}"#, "targets[1]"),
        (r#"{"kernels": [{"name": "A", "spec": "rwm:1"}, {"name": "B", "spec": "slice:1"}]}"#, "kernels[1].spec"),
        (r#"{"kernels": [{"name": "A", "spec": "qslice:t(0,-1,5)"}]}"#, "kernels[0].spec"),
        (r#"{"n_iters": 10}"#, "n_iters"),
    ];
    for (i, (body, field)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("c{i}.json"));
        fs::write(&p, body).unwrap();
        let o = qslice(&["bench", "--config", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(stderr(&o).contains(field), "{body}: {}", stderr(&o));
    }
    let o = qslice(&["bench", "--config", "/nonexistent/bench.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tune_normal_auc_recovers_reference_pseudo() {
    let v = assert_valid("pseudo_fit", &ok(&["tune", "--target", "normal", "--criterion", "auc"]));
    assert!(v["location"].as_f64().unwrap().abs() < 0.05);
    assert!((v["scale"].as_f64().unwrap() - 1.0).abs() < 0.1);
    assert_eq!(v["df"], 20.0);
    assert_eq!(v["criterion"], "AUC");

    let v = assert_valid("pseudo_fit", &ok(&["tune", "--target", "gamma2.5", "--criterion", "msw", "--dfs", "5"]));
    assert_eq!(v["df"], 5.0);
    assert_eq!(v["criterion"], "MSW");
    assert_eq!(v["trunc"][0], 0.0);
    assert!(v["trunc"][1].is_null());

    let v = assert_valid("pseudo_fit", &ok(&["tune", "--target", "normal", "--dfs", "20", "--trunc", "-1,1"]));
    assert_eq!((v["trunc"][0].as_f64(), v["trunc"][1].as_f64()), (Some(-1.0), Some(1.0)));
    let spaced = ok(&["tune", "--target", "normal", "--dfs", "20", "--trunc", "-1", "1"]);
    assert_eq!(serde_json::from_str::<serde_json::Value>(&spaced).unwrap()["trunc"], v["trunc"]);
    for bad in ["1,-1", "0"] {
        let o = qslice(&["tune", "--target", "normal", "--trunc", bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(stderr(&o).contains("trunc"));
    }
}

#[test]
fn tune_race_keeps_the_best_candidate() {
    let text = ok(&["tune", "--target", "normal", "--kernel", "stepout", "--lo", "0.5", "--hi", "10", "--seed", "3"]);
    let v = assert_valid("race_result", &text);
    let rounds = v["rounds"].as_array().unwrap();
    assert_eq!(rounds.len(), 5);
    for r in rounds {
        let c: Vec<f64> = r["candidates"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let e: Vec<f64> = r["esps"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(c.len(), 5);
        let w = c.iter().position(|x| *x == r["winner"].as_f64().unwrap()).unwrap();
        assert!(e.iter().all(|x| *x <= e[w]));
    }
    assert_eq!(v["best"], rounds[4]["winner"]);

    let o = qslice(&["tune", "--target", "normal", "--kernel", "imh"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tune_from_samples() {
    let dir = tempfile::tempdir().unwrap();
    let few = dir.path().join("few.txt");
    fs::write(&few, (1..=10).map(|i| format!("{i}\n")).collect::<String>()).unwrap();
    let o = qslice(&["tune", "--samples", few.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("insufficient"), "{}", stderr(&o));

    let many = dir.path().join("many.txt");
    let mut rng = chain_rng(5, 0);
    let draws: String = (0..5000).map(|_| format!("{}\n", StdTarget::Normal.sample(&mut rng))).collect();
    fs::write(&many, format!("x\n{draws}")).unwrap();
    let v = assert_valid("pseudo_fit", &ok(&["tune", "--samples", many.to_str().unwrap()]));
    assert!(v["location"].as_f64().unwrap().abs() < 0.2);
    assert!((v["scale"].as_f64().unwrap() - 1.0).abs() < 0.3);
    assert_eq!(v["method"], "samples");

    let o = qslice(&["tune", "--samples", dir.path().join("missing.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diag_uniform_is_flat_and_excludes_outside_values() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("u.txt");
    let hist = dir.path().join("h.csv");
    let mut rng = chain_rng(6, 0);
    let mut text: String = (0..100_000).map(|_| format!("{}\n", rng.random::<f64>())).collect();
    text.push_str("1.5\n-2\n");
    fs::write(&chain, text).unwrap();
    let o = qslice(&["diag", "--chain", chain.to_str().unwrap(), "--pseudo", "unif(0,1)", "--hist-out", hist.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("2 draws outside"));
    let v = assert_valid("diag", &stdout(&o));
    assert_eq!(v["shape"], "flat");
    assert!(v["auc_estimate"].as_f64().unwrap() > 0.9);
    assert_eq!(v["n_excluded"], 2);
    assert_eq!(v["excluded"], json!([1.5, -2.0]));
    let (h, rows) = csv_table(&fs::read_to_string(&hist).unwrap());
    assert_eq!(h, ["bin", "lower", "upper", "count"]);
    assert_eq!(rows.len(), 30);
    assert_eq!(rows.iter().map(|r| r[3].parse::<usize>().unwrap()).sum::<usize>(), 100_000);
}

#[test]
fn diag_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    assert_eq!(qslice(&["diag", "--chain", empty.to_str().unwrap(), "--pseudo", "unif(0,1)"]).status.code(), Some(2));
    let junk = dir.path().join("junk.txt");
    fs::write(&junk, "0.1\nabc\n").unwrap();
    assert_eq!(qslice(&["diag", "--chain", junk.to_str().unwrap(), "--pseudo", "unif(0,1)"]).status.code(), Some(2));
    assert_eq!(qslice(&["diag", "--chain", empty.to_str().unwrap(), "--pseudo", "wobble(1)"]).status.code(), Some(2));
}

#[test]
fn diag_shows_mass_outside_the_laplace_bulk() {
    let dir = tempfile::tempdir().unwrap();
    let psi = |pseudo: &str| {
        let path = dir.path().join(format!("{pseudo}.txt"));
        ok(&[
            "gprior", "--sampler", "qslice", "--pseudo", pseudo, "--chains", "1", "--iters", "5000", "--seed", "11",
            "--psi-out", path.to_str().unwrap(),
        ]);
        let v = assert_valid("diag", &ok(&["diag", "--chain", path.to_str().unwrap(), "--pseudo", "unif(0,1)"]));
        let h: Vec<f64> = v["histogram"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
        let middle = h[10..20].iter().sum::<f64>() / 10.0;
        (v, h[29] / middle, h[0] / middle)
    };
    let (lap, top, bottom) = psi("laplace");
    // The excess sits in the upper tail only: the conditional's lower tail
    // decays faster than any t, so the histogram is J-shaped rather than U.
    assert!(top > 3.0 && bottom < 0.5, "{lap}");
    assert_eq!(lap["shape"], "off-center");
    assert!(lap["auc_estimate"].as_f64().unwrap() < 0.5);
    let (wide, top_wide, _) = psi("laplace-wide");
    assert!(top_wide < top);
    assert!(wide["auc_estimate"].as_f64().unwrap() > lap["auc_estimate"].as_f64().unwrap());

    let o = qslice(&["gprior", "--sampler", "stepout", "--psi-out", "x.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gprior_stepout_two_chains_converge() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let draws = dir.path().join("d.csv");
    let text = ok(&[
        "gprior", "--sampler", "stepout", "--chains", "2", "--iters", "20000", "--burnin", "5000", "--summary",
        summary.to_str().unwrap(), "--draws-out", draws.to_str().unwrap(),
    ]);
    let (h, rows) = csv_table(&text);
    assert_eq!(h, GPRIOR_COLUMNS);
    assert_eq!(rows.len(), 2);
    let v = assert_valid("gprior_summary", &fs::read_to_string(&summary).unwrap());
    assert!(v["psrf"].as_f64().unwrap() < 1.05, "{v}");
    assert!(v["rows"][0]["tuned"].as_f64().unwrap() > 0.0);
    let (dh, drows) = csv_table(&fs::read_to_string(&draws).unwrap());
    assert_eq!(dh, ["chain0", "chain1"]);
    assert_eq!(drows.len(), 20_000);
    let bound = 3.0 * 10.0f64.powi(2);
    assert!(drows.iter().flatten().all(|g| g.parse::<f64>().unwrap() < bound));
}

#[test]
fn gprior_log_scale_quantile_slice_json() {
    let text = ok(&[
        "gprior", "--sampler", "qslice", "--pseudo", "laplace-wide", "--log-scale", "--chains", "2", "--iters", "3000",
        "--burnin", "500", "--format", "json", "--extra-cost", "2",
    ]);
    let v = assert_valid("gprior_summary", &text);
    assert_eq!(v["sampler"], "qslice:laplace-wide");
    assert_eq!(v["log_scale"], true);
    assert_eq!(v["extra_cost"], 2);
    assert!(v["psi_auc"].as_f64().unwrap() > 0.0);
    assert!(v["gamma_mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn gprior_argument_errors() {
    for args in [
        vec!["gprior", "--sampler", "hamiltonian"],
        vec!["gprior", "--sampler", "stepout", "--pseudo", "laplace"],
        vec!["gprior", "--sampler", "qslice", "--pseudo", "t(0,1)"],
        vec!["gprior", "--chains", "0"],
        vec!["gprior", "--iters", "many"],
    ] {
        let o = qslice(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn ssm_mqslice_normal_is_cheap() {
    let text = ok(&["ssm", "--sampler", "mqslice", "--pseudo-family", "normal", "--iters", "3000", "--chains", "2"]);
    let (h, rows) = csv_table(&text);
    assert_eq!(h, SSM_COLUMNS);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0..2], ["MQSlice", "normal"]);
    assert!(rows[0][5].parse::<f64>().unwrap() < 5.0);
}

#[test]
fn ssm_json_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ssm.json");
    fs::write(&cfg, r#"{"t_len": 6, "samplers": ["imh:t5", "mslice:1"], "n_iter": 1500, "burnin": 200}"#).unwrap();
    let text = ok(&["ssm", "--config", cfg.to_str().unwrap(), "--chains", "2", "--format", "json"]);
    let v = assert_valid("ssm_rows", &text);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0]["sampler"].as_str(), rows[1]["sampler"].as_str()), (Some("IMH"), Some("MSlice")));
    assert!(rows.iter().all(|r| r["alpha_mean"].as_array().unwrap().len() == 6));
    let means: Vec<f64> = rows[0]["alpha_mean"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(means.iter().all(|m| *m > 0.0));

    fs::write(&cfg, r#"{"t_len": 6, "horizon": 3}"#).unwrap();
    assert_eq!(qslice(&["ssm", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn ssm_argument_errors() {
    for args in [
        vec!["ssm", "--sampler", "particle"],
        vec!["ssm", "--pseudo-family", "cauchy"],
        vec!["ssm", "--sampler", "mslice:-1"],
        vec!["ssm", "--T", "1"],
    ] {
        let o = qslice(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn exit_codes() {
    assert_eq!(qslice(&["--help"]).status.code(), Some(0));
    assert_eq!(qslice(&["--version"]).status.code(), Some(0));
    assert_eq!(qslice(&["bench", "--help"]).status.code(), Some(0));
    assert_eq!(qslice(&[]).status.code(), Some(2));
    assert_eq!(qslice(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qslice(&["bench", "--n-iter", "-3"]).status.code(), Some(2));
    assert_eq!(qslice(&["bench", "--jobs", "0", "--n-iter", "1"]).status.code(), Some(2));
    assert_eq!(qslice(&["tune", "--config", "x.json", "--target", "normal"]).status.code(), Some(2));
    assert_eq!(qslice(&["tune", "--target", "normal", "--criterion", "best"]).status.code(), Some(2));
    // Sampler failures are runtime errors: a start outside the pseudo-target support.
    let o = qslice(&["bench", "--targets", "gamma2.5", "--kernel", "imh:unif(5,6)", "--n-iter", "10", "--burnin", "0", "--chains", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = qslice(&["bench", "--n-iter", "1", "--out", "/nonexistent/dir/rows.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn json_outputs_are_plain_values() {
    // Non-finite statistics appear as null, never as bare NaN tokens.
    let text = ok(&["bench", "--targets", "normal", "--kernel", "stepout:2", "--n-iter", "0", "--chains", "1", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v[0]["ks_p"].is_null() && v[0]["psrf"].is_null());
}
