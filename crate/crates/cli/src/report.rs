use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use ruinkit_core::fit::{Ecdf, LossDataset, SelectionReport};
use ruinkit_core::phasetype::{PhaseType, PhaseTypeSpec};
use serde::{Deserialize, Serialize};

use crate::common::{
    csv_table, resolve_seed, resolve_workers, CliError, CliResult, OutDir, EXIT_IO,
};
use crate::svg::{Mark, Plot, Series};
use crate::Common;

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// Claim data, `date,amount` CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory of `ruinkit fit`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// `band.csv` written by `ruinkit simulate`.
    #[arg(long)]
    pub band: Option<PathBuf>,
    /// `curve.csv` written by `ruinkit ruin`.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

fn missing(what: &str) -> CliError {
    CliError::new(EXIT_IO, "MissingArtifact", what.to_string())
}

fn read(path: &Path) -> CliResult<String> {
    if !path.exists() {
        return Err(missing(&format!("{} does not exist", path.display())));
    }
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Header and numeric rows of a CSV written by this tool.
fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| missing(&format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| CliError::new(EXIT_IO, "Parse", format!("{}: {e}", path.display())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((header, rows))
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Option<Vec<f64>> {
    let i = header.iter().position(|h| h == name)?;
    Some(
        rows.iter()
            .map(|r| r.get(i).copied().unwrap_or(f64::NAN))
            .collect(),
    )
}

#[derive(Deserialize)]
struct ModelFile {
    phasetype: PhaseTypeSpec,
}

/// Fitted laws found in a fit directory, by estimator name.
fn fitted_models(dir: &Path) -> CliResult<Vec<(String, PhaseType)>> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("model_") && n.ends_with(".json"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let path = dir.join(&n);
            let m: ModelFile = serde_json::from_str(&read(&path)?)
                .map_err(|e| CliError::new(EXIT_IO, "Parse", format!("{}: {e}", path.display())))?;
            let label = n
                .trim_start_matches("model_")
                .trim_end_matches(".json")
                .to_string();
            Ok((label, PhaseType::from_spec(&m.phasetype)?))
        })
        .collect()
}

fn ecdf_figure(amounts: &[f64], models: &[(String, PhaseType)], out: &mut OutDir) -> CliResult<()> {
    let e = Ecdf::new(amounts)?;
    let xs: Vec<f64> = e.sorted().to_vec();
    let mut header = vec!["x".to_string(), "ecdf".to_string()];
    let mut cols = vec![
        xs.clone(),
        xs.iter().map(|&x| e.eval(x)).collect::<Vec<f64>>(),
    ];
    for (name, law) in models {
        header.push(format!("cdf_{name}"));
        cols.push(
            xs.iter()
                .map(|&x| law.cdf(x))
                .collect::<ruinkit_core::Result<Vec<f64>>>()?,
        );
    }
    let rows: Vec<Vec<f64>> = (0..xs.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_text("ecdf.csv", &csv_table(&h, &rows))?;
    let mut series = vec![Series::new(
        "empirical",
        xs.clone(),
        cols[1].clone(),
        Mark::Step,
    )];
    for (k, (name, _)) in models.iter().enumerate() {
        series.push(Series::new(
            name,
            xs.clone(),
            cols[2 + k].clone(),
            Mark::Line,
        ));
    }
    let plot = Plot {
        title: "Empirical and fitted distribution functions".into(),
        xlabel: "claim amount".into(),
        ylabel: "F(x)".into(),
        series,
    };
    out.write_text("ecdf.svg", &plot.render())
}

fn histogram_figure(
    amounts: &[f64],
    models: &[(String, PhaseType)],
    out: &mut OutDir,
) -> CliResult<()> {
    let n = amounts.len();
    let bins = ((n as f64).sqrt().ceil() as usize).clamp(5, 60);
    let lo = 0.0;
    let hi = amounts.iter().cloned().fold(0.0, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in amounts {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let lefts: Vec<f64> = (0..bins).map(|b| lo + b as f64 * width).collect();
    let density: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (n as f64 * width))
        .collect();
    let mids: Vec<f64> = lefts.iter().map(|l| l + 0.5 * width).collect();
    let mut header = vec![
        "left".to_string(),
        "right".to_string(),
        "density".to_string(),
    ];
    let mut cols = vec![
        lefts.clone(),
        lefts.iter().map(|l| l + width).collect(),
        density.clone(),
    ];
    for (name, law) in models {
        header.push(format!("pdf_{name}"));
        cols.push(
            mids.iter()
                .map(|&x| law.pdf(x))
                .collect::<ruinkit_core::Result<Vec<f64>>>()?,
        );
    }
    let rows: Vec<Vec<f64>> = (0..bins)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_text("histogram.csv", &csv_table(&h, &rows))?;
    let mut series = vec![Series::new("data", lefts, density, Mark::Bars(width))];
    for (k, (name, _)) in models.iter().enumerate() {
        series.push(Series::new(
            name,
            mids.clone(),
            cols[3 + k].clone(),
            Mark::Line,
        ));
    }
    let plot = Plot {
        title: "Histogram and fitted densities".into(),
        xlabel: "claim amount".into(),
        ylabel: "density".into(),
        series,
    };
    out.write_text("histogram.svg", &plot.render())
}

fn counts_figure(
    data: &LossDataset,
    selection: Option<&SelectionReport>,
    out: &mut OutDir,
) -> CliResult<()> {
    let counts = data.monthly_counts();
    let months: Vec<f64> = (1..=counts.len()).map(|k| k as f64).collect();
    let cumulative: Vec<f64> = counts
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.count as f64;
            Some(*acc)
        })
        .collect();
    let mut header = vec!["month".to_string(), "cumulative".to_string()];
    let mut cols = vec![months.clone(), cumulative.clone()];
    let mut series = vec![Series::new(
        "observed",
        months.clone(),
        cumulative,
        Mark::Step,
    )];
    if let Some(sel) = selection {
        let mut ranked = sel.ranked.clone();
        ranked.sort_by(|a, b| a.label.cmp(&b.label));
        for c in &ranked {
            let v: Vec<f64> = months.iter().map(|&t| c.model.raw_cumulative(t)).collect();
            header.push(format!("mean_{}", c.label));
            cols.push(v.clone());
            series.push(Series::new(&c.label, months.clone(), v, Mark::Line));
        }
    }
    let rows: Vec<Vec<f64>> = (0..months.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_text("counts.csv", &csv_table(&h, &rows))?;
    let plot = Plot {
        title: "Aggregate number of claims and fitted mean-value functions".into(),
        xlabel: "month".into(),
        ylabel: "claims".into(),
        series,
    };
    out.write_text("counts.svg", &plot.render())
}

fn ruin_figure(band: Option<&Path>, curve: Option<&Path>, out: &mut OutDir) -> CliResult<()> {
    let mut series = Vec::new();
    let mut header: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut xlabel = "initial capital".to_string();
    if let Some(p) = band {
        let (h, rows) = read_table(p)?;
        let need = |n: &str| {
            column(&h, &rows, n)
                .ok_or_else(|| missing(&format!("{} lacks column '{n}'", p.display())))
        };
        let (u, psi, lower, upper) = (need("u")?, need("psi")?, need("lower")?, need("upper")?);
        series.push(Series::new(
            "bootstrap band",
            u.clone(),
            lower.clone(),
            Mark::Band(upper.clone()),
        ));
        series.push(Series::new("empirical", u.clone(), psi.clone(), Mark::Line));
        header.extend(["u", "psi", "lower", "upper"].map(String::from));
        cols.extend([u.clone(), psi, lower, upper]);
        if let Some(m) = column(&h, &rows, "psi_model") {
            series.push(Series::new("fitted model", u, m.clone(), Mark::Line));
            header.push("psi_model".into());
            cols.push(m);
        }
    }
    if let Some(p) = curve {
        let (h, rows) = read_table(p)?;
        let axis = h.first().cloned().unwrap_or_else(|| "u".into());
        let x = column(&h, &rows, &axis).unwrap_or_default();
        xlabel = axis.clone();
        for name in ["psi_or", "psi_sim"] {
            if let Some(v) = column(&h, &rows, name) {
                if v.iter().any(|y| y.is_finite()) {
                    series.push(Series::new(name, x.clone(), v.clone(), Mark::Line));
                    if band.is_none() {
                        if header.is_empty() {
                            header.push(axis.clone());
                            cols.push(x.clone());
                        }
                        header.push(name.into());
                        cols.push(v);
                    }
                }
            }
        }
    }
    if !header.is_empty() {
        let rows: Vec<Vec<f64>> = (0..cols[0].len())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        out.write_text("ruin.csv", &csv_table(&h, &rows))?;
    }
    let plot = Plot {
        title: "Ruin probability against initial capital".into(),
        xlabel,
        ylabel: "ruin probability".into(),
        series,
    };
    out.write_text("ruin.svg", &plot.render())
}

pub fn run(args: ReportArgs) -> CliResult<()> {
    if args.data.is_none() && args.fit.is_none() && args.band.is_none() && args.curve.is_none() {
        return Err(missing("no inputs: give --data, --fit, --band or --curve"));
    }
    let seed = resolve_seed(args.common.seed, None)?;
    let workers = resolve_workers(args.common.workers, None)?;
    let models = match &args.fit {
        Some(dir) if dir.is_dir() => fitted_models(dir)?,
        Some(dir) => {
            return Err(missing(&format!(
                "{} is not a fit output directory",
                dir.display()
            )))
        }
        None => Vec::new(),
    };
    let selection: Option<SelectionReport> =
        match &args.fit {
            Some(dir) if dir.join("intensity.json").exists() => {
                let p = dir.join("intensity.json");
                Some(serde_json::from_str(&read(&p)?).map_err(|e| {
                    CliError::new(EXIT_IO, "Parse", format!("{}: {e}", p.display()))
                })?)
            }
            _ => None,
        };
    let mut out = OutDir::create(
        args.common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("ruinkit-out/report")),
    )?;
    if let Some(path) = &args.data {
        if !path.exists() {
            return Err(missing(&format!("{} does not exist", path.display())));
        }
        let data = LossDataset::from_csv_path(path).map_err(CliError::data)?;
        let amounts = data.amounts();
        ecdf_figure(&amounts, &models, &mut out)?;
        histogram_figure(&amounts, &models, &mut out)?;
        counts_figure(&data, selection.as_ref(), &mut out)?;
    } else if args.fit.is_some() && args.band.is_none() && args.curve.is_none() {
        return Err(missing("figures of a fit need the claim data (--data)"));
    }
    if args.band.is_some() || args.curve.is_some() {
        ruin_figure(args.band.as_deref(), args.curve.as_deref(), &mut out)?;
    }
    out.finish("report", seed, workers, &args)
}
