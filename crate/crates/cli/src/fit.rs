use std::path::PathBuf;

use clap::Args;
use ruinkit_core::fit::{
    fit_and_select, gof_statistics_ph, mc_pvalues, AdMinOptions, EmOptions, Family, GofStatistics,
    IntensityFamily, LossDataset, SeverityFit,
};
use ruinkit_core::phasetype::PhaseTypeSpec;
use ruinkit_core::registry::configured_severity_estimators;
use serde::Serialize;

use crate::common::{csv_table, resolve_seed, resolve_workers, CliError, CliResult, OutDir};
use crate::Common;

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with `date` and `amount` columns.
    pub data: PathBuf,
    #[arg(long, default_value = "erlang_mixture", value_parser = ["exponential", "hyperexponential", "erlang", "erlang_mixture"])]
    pub family: String,
    /// Phases of a hyperexponential, shape of an Erlang, or the number of
    /// grid shapes EM keeps for an Erlang mixture.
    #[arg(long)]
    pub k: Option<usize>,
    /// Shape grid of an Erlang mixture.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub shapes: Vec<u32>,
    /// Estimators by registry name.
    #[arg(long, value_delimiter = ',', default_value = "ad_min,em")]
    pub estimator: Vec<String>,
    /// Bootstrap samples for the p-values; 0 skips them.
    #[arg(long, default_value_t = 1000)]
    pub pvalue_samples: usize,
    /// Multi-starts of the A2 minimization.
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    /// Drop amounts above this sample quantile before fitting.
    #[arg(long)]
    pub trim_upper: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct Resolved<'a> {
    data: String,
    family: &'a Family,
    estimators: &'a [String],
    em_k: Option<usize>,
    pvalue_samples: usize,
    starts: usize,
    trim_upper: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ModelOutput<'a> {
    fit: &'a SeverityFit,
    /// The fitted law as `{alpha, Q}`.
    phasetype: PhaseTypeSpec,
}

#[derive(Debug, Serialize)]
struct StatisticsOnly {
    n: usize,
    statistics: GofStatistics,
}

fn family(args: &FitArgs) -> CliResult<(Family, Option<usize>)> {
    Ok(match args.family.as_str() {
        "exponential" => (Family::Exponential, None),
        "hyperexponential" => (
            Family::Hyperexponential {
                k: args.k.unwrap_or(2),
            },
            None,
        ),
        "erlang" => {
            let k = args.k.unwrap_or(1);
            let k = u32::try_from(k)
                .map_err(|_| CliError::config(format!("Erlang shape {k} is too large")))?;
            (Family::Erlang { k }, None)
        }
        "erlang_mixture" => {
            if args.shapes.is_empty() {
                return Err(CliError::config("--shapes must list at least one shape"));
            }
            (
                Family::ErlangMixture {
                    shapes: args.shapes.clone(),
                },
                args.k,
            )
        }
        other => return Err(CliError::config(format!("unknown family '{other}'"))),
    })
}

pub fn run(args: FitArgs) -> CliResult<()> {
    let seed = resolve_seed(args.common.seed, None)?;
    let workers = resolve_workers(args.common.workers, None)?;
    let (family, em_k) = family(&args)?;
    if args.pvalue_samples != 0 && args.pvalue_samples < 100 {
        return Err(CliError::config(
            "--pvalue-samples must be 0 or at least 100",
        ));
    }
    let mut data = LossDataset::from_csv_path(&args.data).map_err(CliError::data)?;
    if let Some(q) = args.trim_upper {
        data = data.trim_upper(q)?;
    }
    let amounts = data.amounts();
    let registry = configured_severity_estimators(
        AdMinOptions {
            starts: args.starts,
            ..AdMinOptions::default()
        },
        EmOptions {
            k: em_k,
            ..EmOptions::default()
        },
    );
    let estimators = args
        .estimator
        .iter()
        .map(|n| registry.get(n))
        .collect::<ruinkit_core::Result<Vec<_>>>()?;

    let mut out = OutDir::create(
        args.common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("ruinkit-out/fit")),
    )?;
    for est in &estimators {
        let name = est.name();
        let (fit, gof) = if args.pvalue_samples > 0 {
            let report = mc_pvalues(
                &amounts,
                &family,
                est.as_ref(),
                args.pvalue_samples,
                seed,
                workers,
            )?;
            (report.fit.clone(), serde_json::to_value(&report))
        } else {
            let fit = est.fit(&amounts, &family, seed)?;
            let statistics = gof_statistics_ph(&amounts, &fit.model()?)?;
            let only = StatisticsOnly {
                n: amounts.len(),
                statistics,
            };
            (fit, serde_json::to_value(&only))
        };
        let gof = gof
            .map_err(|e| CliError::new(crate::common::EXIT_COMPUTE, "Serialize", e.to_string()))?;
        let law = fit.model()?;
        out.write_json(
            &format!("model_{name}.json"),
            &ModelOutput {
                fit: &fit,
                phasetype: law.to_spec(),
            },
        )?;
        out.write_json(&format!("gof_{name}.json"), &gof)?;
    }

    let counts = data.monthly_counts();
    let rows: Vec<Vec<f64>> = counts
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.count as f64;
            Some((c.count as f64, *acc))
        })
        .enumerate()
        .map(|(k, (c, cum))| vec![(k + 1) as f64, c, cum])
        .collect();
    out.write_text(
        "counts.csv",
        &csv_table(&["month", "count", "cumulative"], &rows),
    )?;
    let families: Vec<IntensityFamily> = (1..=4)
        .map(|degree| IntensityFamily::Polynomial { degree })
        .chain([IntensityFamily::Exponential])
        .filter(|f| counts.len() > f.parameters())
        .collect();
    if !families.is_empty() {
        let per_month: Vec<f64> = counts.iter().map(|c| c.count as f64).collect();
        let selection = fit_and_select(&per_month, 1.0, &families)?;
        out.write_json("intensity.json", &selection)?;
    }

    let resolved = Resolved {
        data: args.data.display().to_string(),
        family: &family,
        estimators: &args.estimator,
        em_k,
        pvalue_samples: args.pvalue_samples,
        starts: args.starts,
        trim_upper: args.trim_upper,
    };
    out.finish("fit", seed, workers, &resolved)
}
