use std::path::PathBuf;

use clap::Args;
use ruinkit_core::mc::{RuinEstimate, RuinKind, SimulationConfig};
use ruinkit_core::onedim::{ladder, spectral, SpectralReport};
use ruinkit_core::phasetype::{PhaseType, PhaseTypeSpec};
use ruinkit_core::registry::ruin_methods;
use ruinkit_core::twodim::{NormalizedModel, QuotaShareModel, Regime, RuinReport, TermReport};
use serde::{Deserialize, Serialize};

use crate::common::{
    csv_table, load_config, resolve_seed, resolve_workers, CliError, CliResult, OutDir,
};
use crate::Common;

/// Either the original quota-share parameters or the rescaled system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    QuotaShare {
        lambda: f64,
        claim: PhaseTypeSpec,
        theta1: f64,
        theta2: f64,
        delta: f64,
        x1: f64,
        x2: f64,
    },
    Normalized {
        lambda: f64,
        claim: PhaseTypeSpec,
        c1: f64,
        c2: f64,
        u1: f64,
        u2: f64,
    },
}

impl ModelConfig {
    pub fn normalized(&self) -> CliResult<NormalizedModel> {
        Ok(match self {
            ModelConfig::QuotaShare {
                lambda,
                claim,
                theta1,
                theta2,
                delta,
                x1,
                x2,
            } => {
                let claim = PhaseType::from_spec(claim)?;
                QuotaShareModel::new(*lambda, claim, *theta1, *theta2, *delta, *x1, *x2)?
                    .normalize()?
            }
            ModelConfig::Normalized {
                lambda,
                claim,
                c1,
                c2,
                u1,
                u2,
            } => NormalizedModel::new(*lambda, PhaseType::from_spec(claim)?, *c1, *c2, *u1, *u2)?,
        })
    }

    /// Copy with one capital replaced; `axis` names a capital of this form.
    fn with_capital(&self, axis: &str, value: f64) -> CliResult<Self> {
        let mut m = self.clone();
        let slot = match (&mut m, axis) {
            (ModelConfig::QuotaShare { x1, .. }, "x1") => x1,
            (ModelConfig::QuotaShare { x2, .. }, "x2") => x2,
            (ModelConfig::Normalized { u1, .. }, "u1") => u1,
            (ModelConfig::Normalized { u2, .. }, "u2") => u2,
            _ => {
                return Err(CliError::config(format!(
                    "curve axis '{axis}' does not name a capital of this model (x1/x2 for quota share, u1/u2 for normalized)"
                )))
            }
        };
        *slot = value;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Analytic,
    Mc,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KindChoice {
    Or,
    Sim,
    #[default]
    Both,
}

impl KindChoice {
    pub fn kinds(&self) -> Vec<RuinKind> {
        match self {
            KindChoice::Or => vec![RuinKind::Or],
            KindChoice::Sim => vec![RuinKind::Sim],
            KindChoice::Both => vec![RuinKind::Or, RuinKind::Sim],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComputeConfig {
    pub method: MethodChoice,
    pub kind: KindChoice,
    /// Paths for the survival functionals of the analytic route.
    pub paths: usize,
    /// Paths for plain simulation; defaults to `paths`.
    pub mc_paths: Option<usize>,
    pub escape_bound: f64,
    pub ci_level: f64,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            method: MethodChoice::Both,
            kind: KindChoice::Both,
            paths: 100_000,
            mc_paths: None,
            escape_bound: 1e-9,
            ci_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    /// `x1`/`x2` for a quota-share model, `u1`/`u2` for a normalized one.
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuinConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    pub model: ModelConfig,
    #[serde(default)]
    pub compute: ComputeConfig,
    #[serde(default)]
    pub curve: Option<CurveConfig>,
}

#[derive(Args, Debug)]
pub struct RuinArgs {
    /// TOML or JSON config with `model`, `compute` and optional `curve`.
    pub config: PathBuf,
    /// Overrides `compute.method`.
    #[arg(long, value_parser = ["analytic", "mc", "both"])]
    pub method: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct KindResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<RuinReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<RuinEstimate>,
}

#[derive(Debug, Serialize)]
struct Agreement {
    z: f64,
    within_3_stderr: bool,
}

#[derive(Debug, Serialize)]
struct NormalizedView {
    lambda: f64,
    c1: f64,
    c2: f64,
    u1: f64,
    u2: f64,
    claim_mean: f64,
}

#[derive(Debug, Serialize)]
struct RuinOutput {
    model: NormalizedView,
    regime: Regime,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    crossing_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_or: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_sim: Option<f64>,
    stderr: std::collections::BTreeMap<String, f64>,
    terms: Vec<TermReport>,
    or: Option<KindResult>,
    sim: Option<KindResult>,
    agreement: std::collections::BTreeMap<String, Agreement>,
    /// Spectral data of the upper (`c1`) and lower (`c2`) lines.
    spectral: std::collections::BTreeMap<String, SpectralReport>,
}

fn sim_config(paths: usize, seed: u64, workers: usize, c: &ComputeConfig) -> SimulationConfig {
    SimulationConfig {
        paths,
        seed,
        workers,
        escape_bound: c.escape_bound,
        ci_level: c.ci_level,
        ..SimulationConfig::default()
    }
}

fn compute_kind(
    nm: &NormalizedModel,
    kind: RuinKind,
    method: MethodChoice,
    analytic_cfg: &SimulationConfig,
    mc_cfg: &SimulationConfig,
) -> CliResult<KindResult> {
    let methods = ruin_methods();
    let analytic = match method {
        MethodChoice::Analytic | MethodChoice::Both => {
            Some(methods.get("analytic")?.ruin(nm, kind, analytic_cfg)?)
        }
        MethodChoice::Mc => None,
    };
    let mc = match method {
        MethodChoice::Mc | MethodChoice::Both => {
            Some(methods.get("mc")?.ruin(nm, kind, mc_cfg)?.estimate)
        }
        MethodChoice::Analytic => None,
    };
    Ok(KindResult { analytic, mc })
}

fn kind_name(k: RuinKind) -> &'static str {
    match k {
        RuinKind::Or => "psi_or",
        RuinKind::Sim => "psi_sim",
    }
}

fn spectral_report(nm: &NormalizedModel, upper: bool) -> Option<SpectralReport> {
    let line = if upper {
        nm.upper_line().ok()?
    } else {
        nm.lower_line().ok()?
    };
    spectral(&ladder(&line).ok()?).ok().map(|s| s.report())
}

pub fn run(args: RuinArgs) -> CliResult<()> {
    let mut config: RuinConfig = load_config(&args.config)?;
    if let Some(m) = &args.method {
        config.compute.method = serde_json::from_value(serde_json::Value::String(m.clone()))
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    let seed = resolve_seed(args.common.seed, config.seed)?;
    let workers = resolve_workers(args.common.workers, config.workers)?;
    config.seed = Some(seed);
    config.workers = Some(workers);
    let c = &config.compute;
    let analytic_cfg = sim_config(c.paths, seed, workers, c);
    let mc_cfg = sim_config(c.mc_paths.unwrap_or(c.paths), seed, workers, c);
    analytic_cfg.validate()?;
    mc_cfg.validate()?;

    let nm = config.model.normalized()?;
    let mut out = OutDir::create(
        args.common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("ruinkit-out/ruin")),
    )?;

    let mut result = RuinOutput {
        model: NormalizedView {
            lambda: nm.lambda,
            c1: nm.c1,
            c2: nm.c2,
            u1: nm.u1,
            u2: nm.u2,
            claim_mean: nm.claim.mean(),
        },
        regime: nm.regime(),
        crossing_time: nm.crossing_time().ok(),
        psi_or: None,
        psi_sim: None,
        stderr: Default::default(),
        terms: Vec::new(),
        or: None,
        sim: None,
        agreement: Default::default(),
        spectral: Default::default(),
    };
    for (name, upper) in [("upper", true), ("lower", false)] {
        if let Some(r) = spectral_report(&nm, upper) {
            result.spectral.insert(name.into(), r);
        }
    }
    for kind in c.kind.kinds() {
        let r = compute_kind(&nm, kind, c.method, &analytic_cfg, &mc_cfg)?;
        // the analytic route is the headline value when it ran
        let head = r.analytic.as_ref().map(|a| &a.estimate).or(r.mc.as_ref());
        if let Some(h) = head {
            match kind {
                RuinKind::Or => result.psi_or = Some(h.value),
                RuinKind::Sim => result.psi_sim = Some(h.value),
            }
            result.stderr.insert(kind_name(kind).into(), h.stderr);
        }
        if let (Some(a), Some(m)) = (&r.analytic, &r.mc) {
            let z = a.estimate.z_distance(m);
            result.agreement.insert(
                kind_name(kind).into(),
                Agreement {
                    z,
                    within_3_stderr: z <= 3.0,
                },
            );
        }
        if kind == RuinKind::Or {
            if let Some(a) = &r.analytic {
                result.terms = a.terms.clone();
            }
            result.or = Some(r);
        } else {
            result.sim = Some(r);
        }
    }
    out.write_json("ruin.json", &result)?;

    if let Some(curve) = &config.curve {
        let mut rows = Vec::with_capacity(curve.values.len());
        for &v in &curve.values {
            let nm_v = config.model.with_capital(&curve.axis, v)?.normalized()?;
            let mut row = vec![v];
            for kind in [RuinKind::Or, RuinKind::Sim] {
                let r = compute_kind(&nm_v, kind, c.method, &analytic_cfg, &mc_cfg)?;
                let a = r.analytic.map(|a| a.estimate);
                row.push(a.as_ref().map_or(f64::NAN, |e| e.value));
                row.push(a.as_ref().map_or(f64::NAN, |e| e.stderr));
                row.push(r.mc.as_ref().map_or(f64::NAN, |e| e.value));
                row.push(r.mc.as_ref().map_or(f64::NAN, |e| e.stderr));
            }
            rows.push(row);
        }
        let header = [
            curve.axis.as_str(),
            "psi_or",
            "stderr_or",
            "psi_or_mc",
            "stderr_or_mc",
            "psi_sim",
            "stderr_sim",
            "psi_sim_mc",
            "stderr_sim_mc",
        ];
        out.write_text("curve.csv", &csv_table(&header, &rows))?;
    }
    out.finish("ruin", seed, workers, &config)
}
