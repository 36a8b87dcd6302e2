mod common;

use std::fs;

use common::{fitted_claim_mixture, read_json, ruinkit, ruinkit_env, stderr_json, write_claims};
use ruinkit_core::phasetype::PhaseType;

const RUIN_TOML: &str = r#"
seed = 5

[model]
lambda = 1.0
c1 = 1.4
c2 = 1.2
u1 = 2.0
u2 = 6.0
claim = { family = "exponential", rate = 1.0 }

[compute]
paths = 2000
"#;

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ruinkit(&["ruin", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["exit_code"], 2);
    let out = ruinkit(&["fit", dir.path().join("nope.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "[model]\nlambda = 1.0\nunknown_key = 3\n").unwrap();
    let out = ruinkit(&["ruin", p.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let data = dir.path().join("claims.csv");
    write_claims(&data, &PhaseType::exponential(1.0).unwrap(), 50, 12, 1);
    let out = ruinkit(&[
        "fit",
        data.to_str().unwrap(),
        "--estimator",
        "mle",
        "--pvalue-samples",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "UnknownStrategy");
    let out = ruinkit(&["fit", data.to_str().unwrap(), "--pvalue-samples", "20"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn net_profit_violation_is_computation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.toml");
    fs::write(&p, RUIN_TOML.replace("c2 = 1.2", "c2 = 0.9")).unwrap();
    let out = ruinkit(&[
        "ruin",
        p.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn seed_precedence_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.toml");
    fs::write(&p, RUIN_TOML).unwrap();
    let run = |extra: &[&str], env: &[(&str, &str)], name: &str| {
        let o = dir.path().join(name);
        let mut args = vec![
            "ruin",
            p.to_str().unwrap(),
            "--method",
            "mc",
            "--out",
            o.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = ruinkit_env(&args, env);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        read_json(&o.join("manifest.json"))
    };
    assert_eq!(run(&[], &[], "a")["seed"], 5);
    assert_eq!(run(&[], &[("RUINKIT_SEED", "7")], "b")["seed"], 7);
    let m = run(&["--seed", "9"], &[("RUINKIT_SEED", "7")], "c");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["command"], "ruin");
    assert!(m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|o| o == "ruin.json"));
}

#[test]
fn ordered_capitals_fall_back_to_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.toml");
    fs::write(&p, RUIN_TOML.replace("u1 = 2.0", "u1 = 8.0")).unwrap();
    let o = dir.path().join("o");
    let out = ruinkit(&[
        "ruin",
        p.to_str().unwrap(),
        "--method",
        "analytic",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = read_json(&o.join("ruin.json"));
    assert_eq!(r["regime"], "one_dimensional");
    // line 2 stays below line 1, so OR-ruin is the exponential psi at u2 = 6, c2 = 1.2
    let want = (-(1.0 - 1.0 / 1.2) * 6.0f64).exp() / 1.2;
    assert!(
        (r["psi_or"].as_f64().unwrap() - want).abs() < 1e-10,
        "{}",
        r["psi_or"]
    );
}

#[test]
fn erlang_of_shape_one_is_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("claims.csv");
    write_claims(&data, &PhaseType::exponential(0.01).unwrap(), 120, 24, 3);
    let fit = |family: &str, extra: &[&str], name: &str| {
        let o = dir.path().join(name);
        let mut args = vec![
            "fit",
            data.to_str().unwrap(),
            "--family",
            family,
            "--estimator",
            "em",
            "--pvalue-samples",
            "0",
        ];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", o.to_str().unwrap()]);
        let out = ruinkit(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        read_json(&o.join("model_em.json"))["phasetype"].clone()
    };
    assert_eq!(
        fit("erlang", &["--k", "1"], "a"),
        fit("exponential", &[], "b")
    );
}

#[test]
fn report_needs_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ruinkit(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "MissingArtifact");
    let out = ruinkit(&[
        "report",
        "--band",
        dir.path().join("band.csv").to_str().unwrap(),
    ]);
    assert_eq!(stderr_json(&out)["error"], "MissingArtifact");
}

#[test]
fn report_tables_match_plotted_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("claims.csv");
    write_claims(&data, &fitted_claim_mixture(), 200, 24, 11);
    let fitdir = dir.path().join("fit");
    let out = ruinkit(&[
        "fit",
        data.to_str().unwrap(),
        "--family",
        "erlang_mixture",
        "--shapes",
        "1,2",
        "--starts",
        "2",
        "--pvalue-samples",
        "0",
        "--out",
        fitdir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let band = dir.path().join("band.csv");
    fs::write(&band, "u,psi,stderr,lower,upper,psi_model\n0,0.6,0.01,0.55,0.65,0.62\n1000,0.3,0.01,0.25,0.35,0.31\n").unwrap();
    let rep = dir.path().join("rep");
    let out = ruinkit(&[
        "report",
        "--data",
        data.to_str().unwrap(),
        "--fit",
        fitdir.to_str().unwrap(),
        "--band",
        band.to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["ecdf", "histogram", "counts", "ruin"] {
        assert!(fs::read_to_string(rep.join(format!("{f}.svg")))
            .unwrap()
            .starts_with("<svg"));
    }
    let ecdf = fs::read_to_string(rep.join("ecdf.csv")).unwrap();
    assert!(ecdf
        .lines()
        .next()
        .unwrap()
        .starts_with("x,ecdf,cdf_ad_min,cdf_em"));
    assert_eq!(ecdf.lines().count(), 201);
    let last: Vec<f64> = ecdf
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[1], 1.0);
    let ruin = fs::read_to_string(rep.join("ruin.csv")).unwrap();
    assert_eq!(ruin.lines().nth(2).unwrap(), "1000,0.3,0.25,0.35,0.31");
    assert!(fs::read_to_string(rep.join("counts.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .contains("mean_poly1"));
}
