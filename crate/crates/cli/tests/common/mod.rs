#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ruinkit_core::mc::stream;
use ruinkit_core::phasetype::PhaseType;

pub fn ruinkit(args: &[&str]) -> Output {
    ruinkit_env(args, &[])
}

/// Runs the binary with RUINKIT_SEED cleared unless given in `env`.
pub fn ruinkit_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ruinkit"));
    cmd.args(args).env_remove("RUINKIT_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .unwrap_or_else(|| panic!("no JSON on stderr: {text}"));
    serde_json::from_str(line).unwrap()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(
        &fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())),
    )
    .unwrap()
}

/// Claims drawn from `law`, dated evenly over `months` months of 2015 on.
pub fn write_claims(path: &Path, law: &PhaseType, n: usize, months: usize, seed: u64) {
    let x = law.sample_n(&mut stream(seed, 0, 0), n);
    let mut s = String::from("date,amount\n");
    for (i, a) in x.iter().enumerate() {
        let m = i * months / n;
        let day = 1 + (i * 28 * months / n) % 28;
        writeln!(s, "{}-{:02}-{:02},{a}", 2015 + m / 12, 1 + m % 12, day).unwrap();
    }
    fs::write(path, s).unwrap();
}

/// Two-branch Erlang mixture on a realistic claim scale, used as a known truth.
pub fn fitted_claim_mixture() -> PhaseType {
    PhaseType::erlang_mixture(&[0.8673, 0.1327], &[(1, 6e-4), (2, 2e-4)]).unwrap()
}
