use std::path::PathBuf;

use clap::Args;
use ruinkit_core::fit::LossDataset;
use ruinkit_core::mc::{
    bootstrap_ruin_band, estimate_pair, Arrivals, BandTemplate, IntensityModel, PremiumRule,
    RuinBand, RuinEstimate, SimulationConfig, TruncationRule,
};
use ruinkit_core::onedim::{CompoundPoissonLine, RuinFunction};
use ruinkit_core::phasetype::{PhaseType, PhaseTypeSpec};
use serde::{Deserialize, Serialize};

use crate::common::{
    csv_table, load_config, resolve_seed, resolve_workers, CliError, CliResult, OutDir,
};
use crate::ruin::{KindChoice, ModelConfig};
use crate::Common;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimBlock {
    pub kind: KindChoice,
    pub paths: usize,
    pub horizon: f64,
    /// Defaults to `lundberg_adaptive` with Poisson arrivals and to
    /// `fixed_horizon` with an NHPP block.
    pub truncation: Option<TruncationRule>,
    pub escape_bound: f64,
    pub ci_level: f64,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self {
            kind: KindChoice::Both,
            paths: 100_000,
            horizon: 100.0,
            truncation: None,
            escape_bound: 1e-9,
            ci_level: 0.95,
        }
    }
}

fn default_replicates() -> usize {
    1000
}

fn default_level() -> f64 {
    0.9
}

fn default_band_paths() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapBlock {
    /// `date,amount` CSV, relative to the config file.
    pub data: PathBuf,
    pub lambda: f64,
    pub premium: PremiumRule,
    pub u_grid: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_band_paths")]
    pub paths: usize,
    #[serde(default)]
    pub trim_upper: Option<f64>,
    /// Fitted claim law whose ruin curve is drawn against the band.
    #[serde(default)]
    pub claim: Option<PhaseTypeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub simulate: SimBlock,
    #[serde(default)]
    pub nhpp: Option<IntensityModel>,
    #[serde(default)]
    pub bootstrap: Option<BootstrapBlock>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// TOML or JSON config with `model`, `simulate`, and optional `nhpp`
    /// and `bootstrap` blocks.
    pub config: PathBuf,
    /// Overrides `simulate.horizon`.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Overrides `simulate.kind`.
    #[arg(long, value_parser = ["or", "sim", "both"])]
    pub kind: Option<String>,
    /// Overrides `simulate.paths`.
    #[arg(long)]
    pub paths: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct ArrivalReport {
    process: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    intensity: Option<IntensityModel>,
    /// Stretches where the fitted intensity is negative and set to zero.
    clamped: Vec<(f64, f64)>,
    expected_claims: f64,
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    arrivals: ArrivalReport,
    truncation: TruncationRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_or: Option<RuinEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_sim: Option<RuinEstimate>,
}

fn band_rows(band: &RuinBand, model_curve: Option<&[f64]>) -> Vec<Vec<f64>> {
    band.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = vec![p.u, p.psi, p.stderr, p.lower, p.upper];
            if let Some(c) = model_curve {
                r.push(c[i]);
            }
            r
        })
        .collect()
}

fn run_bootstrap(
    b: &BootstrapBlock,
    base: &std::path::Path,
    seed: u64,
    workers: usize,
    out: &mut OutDir,
) -> CliResult<()> {
    let path = if b.data.is_absolute() {
        b.data.clone()
    } else {
        base.join(&b.data)
    };
    let mut data = LossDataset::from_csv_path(&path).map_err(CliError::data)?;
    if let Some(q) = b.trim_upper {
        data = data.trim_upper(q)?;
    }
    let cfg = SimulationConfig {
        paths: b.paths,
        seed,
        workers,
        ..SimulationConfig::default()
    };
    let template = BandTemplate {
        lambda: b.lambda,
        premium: b.premium,
        u_grid: b.u_grid.clone(),
    };
    let band = bootstrap_ruin_band(&data.amounts(), &template, b.replicates, b.level, &cfg)?;
    let model_curve = match &b.claim {
        Some(spec) => {
            let law = PhaseType::from_spec(spec)?;
            let premium = match b.premium {
                PremiumRule::Loading { theta } => (1.0 + theta) * b.lambda * law.mean(),
                PremiumRule::Fixed { premium } => premium,
            };
            let f = RuinFunction::new(&CompoundPoissonLine::new(b.lambda, law, premium)?)?;
            Some(
                b.u_grid
                    .iter()
                    .map(|&u| f.psi(u))
                    .collect::<ruinkit_core::Result<Vec<f64>>>()?,
            )
        }
        None => None,
    };
    out.write_json("band.json", &band)?;
    let mut header = vec!["u", "psi", "stderr", "lower", "upper"];
    if model_curve.is_some() {
        header.push("psi_model");
    }
    out.write_text(
        "band.csv",
        &csv_table(&header, &band_rows(&band, model_curve.as_deref())),
    )
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let mut config: SimulateConfig = load_config(&args.config)?;
    if let Some(h) = args.horizon {
        config.simulate.horizon = h;
    }
    if let Some(k) = &args.kind {
        config.simulate.kind = serde_json::from_value(serde_json::Value::String(k.clone()))
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    if let Some(p) = args.paths {
        config.simulate.paths = p;
    }
    let truncation = config
        .simulate
        .truncation
        .unwrap_or(if config.nhpp.is_some() {
            TruncationRule::FixedHorizon
        } else {
            TruncationRule::LundbergAdaptive
        });
    config.simulate.truncation = Some(truncation);
    let seed = resolve_seed(args.common.seed, config.seed)?;
    let workers = resolve_workers(args.common.workers, config.workers)?;
    config.seed = Some(seed);
    config.workers = Some(workers);
    if config.model.is_none() && config.bootstrap.is_none() {
        return Err(CliError::config(
            "nothing to simulate: give a model block, a bootstrap block or both",
        ));
    }

    let mut out = OutDir::create(
        args.common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("ruinkit-out/simulate")),
    )?;
    if let Some(model) = &config.model {
        let s = &config.simulate;
        let cfg = SimulationConfig {
            paths: s.paths,
            horizon: s.horizon,
            seed,
            workers,
            truncation,
            ci_level: s.ci_level,
            escape_bound: s.escape_bound,
        };
        cfg.validate()?;
        let nm = model.normalized()?;
        let (arrivals, report) = match &config.nhpp {
            Some(intensity) => {
                let arr = Arrivals::nhpp(intensity.clone(), s.horizon)?;
                let report = ArrivalReport {
                    process: "nhpp",
                    intensity: Some(intensity.clone()),
                    clamped: intensity.negative_segments(s.horizon),
                    expected_claims: arr.mean_count(s.horizon),
                };
                (arr, report)
            }
            None => (
                Arrivals::Poisson(nm.lambda),
                ArrivalReport {
                    process: "poisson",
                    intensity: None,
                    clamped: Vec::new(),
                    expected_claims: nm.lambda * s.horizon,
                },
            ),
        };
        let need_or = s.kind != KindChoice::Sim;
        let need_sim = s.kind != KindChoice::Or;
        let (or, sim) = estimate_pair(&nm, &arrivals, &cfg, need_or, need_sim)?;
        let result = SimulateOutput {
            arrivals: report,
            truncation,
            psi_or: need_or.then_some(or),
            psi_sim: need_sim.then_some(sim),
        };
        out.write_json("simulate.json", &result)?;
    }
    if let Some(b) = &config.bootstrap {
        let base = args
            .config
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_default();
        run_bootstrap(b, &base, seed, workers, &mut out)?;
    }
    out.finish("simulate", seed, workers, &config)
}
