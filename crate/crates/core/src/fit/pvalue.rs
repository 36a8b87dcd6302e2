use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gof::{gof_statistics_ph, GofStatistics, Statistic};
use super::severity::{Family, SeverityEstimator, SeverityFit};
use crate::error::{Error, Result};
use crate::mc::stream;

const TAG_BOOT: u64 = 0x7076_616c;

/// `(1 + #{simulated >= observed}) / (N + 1)`.
pub fn rank_pvalue(observed: f64, simulated: &[f64]) -> f64 {
    let k = simulated.iter().filter(|&&s| s >= observed).count();
    (1 + k) as f64 / (simulated.len() + 1) as f64
}

/// Fit, statistics and parametric-bootstrap p-values of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub n: usize,
    pub fit: SeverityFit,
    pub statistics: GofStatistics,
    pub p_values: BTreeMap<Statistic, f64>,
    pub simulated: usize,
    pub dropped: usize,
    pub warnings: Vec<String>,
}

/// Parametric bootstrap: fit, simulate `n_sim` samples of the same size from
/// the fitted law, refit each and recompute every statistic. Replicates
/// whose refit fails are dropped and counted.
pub fn mc_pvalues(
    data: &[f64],
    family: &Family,
    estimator: &dyn SeverityEstimator,
    n_sim: usize,
    seed: u64,
    workers: usize,
) -> Result<GofReport> {
    if n_sim < 100 {
        return Err(Error::BadSampleSize(n_sim));
    }
    let fit = estimator.fit(data, family, seed)?;
    let law = fit.model()?;
    let observed = gof_statistics_ph(data, &law)?;
    let n = data.len();

    let one = |b: usize| -> Option<GofStatistics> {
        let mut rng = stream(seed, TAG_BOOT, b as u64);
        let sample = law.sample_n(&mut rng, n);
        let refit = estimator.fit(&sample, family, seed ^ (b as u64 + 1)).ok()?;
        let m = refit.model().ok()?;
        gof_statistics_ph(&sample, &m).ok()
    };
    let sims: Vec<Option<GofStatistics>> = if workers > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| (0..n_sim).into_par_iter().map(one).collect()),
            Err(_) => (0..n_sim).map(one).collect(),
        }
    } else {
        (0..n_sim).map(one).collect()
    };
    let ok: Vec<GofStatistics> = sims.iter().flatten().copied().collect();
    let dropped = n_sim - ok.len();
    if ok.is_empty() {
        return Err(Error::OptimizerFailed(
            "every bootstrap refit failed".into(),
        ));
    }
    let mut warnings = Vec::new();
    if dropped as f64 > 0.05 * n_sim as f64 {
        warnings.push(format!(
            "{dropped} of {n_sim} bootstrap refits failed and were dropped"
        ));
    }
    let p_values = Statistic::ALL
        .iter()
        .map(|&s| {
            let sim: Vec<f64> = ok.iter().map(|g| g.get(s)).collect();
            (s, rank_pvalue(observed.get(s), &sim))
        })
        .collect();
    Ok(GofReport {
        n,
        fit,
        statistics: observed,
        p_values,
        simulated: ok.len(),
        dropped,
        warnings,
    })
}

pub fn mc_pvalue(
    data: &[f64],
    family: &Family,
    estimator: &dyn SeverityEstimator,
    statistic: Statistic,
    n_sim: usize,
    seed: u64,
    workers: usize,
) -> Result<f64> {
    Ok(mc_pvalues(data, family, estimator, n_sim, seed, workers)?.p_values[&statistic])
}
