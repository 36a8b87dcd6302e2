use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::{run_batches, stream};
use super::SimulationConfig;
use crate::error::{Error, Result};

const TAG_RESAMPLE: u64 = 0x6273_7472;
const TAG_CURVE: u64 = 0x6375_7276;

/// How the premium rate of each resampled model is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PremiumRule {
    /// `c = (1 + theta) lambda mean`, with the mean of the sample at hand.
    Loading {
        theta: f64,
    },
    Fixed {
        premium: f64,
    },
}

impl PremiumRule {
    fn premium(&self, lambda: f64, mean: f64) -> f64 {
        match *self {
            PremiumRule::Loading { theta } => (1.0 + theta) * lambda * mean,
            PremiumRule::Fixed { premium } => premium,
        }
    }
}

/// The part of the model held fixed across bootstrap replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTemplate {
    pub lambda: f64,
    pub premium: PremiumRule,
    pub u_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub u: f64,
    /// Curve of the full sample.
    pub psi: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinBand {
    pub level: f64,
    pub replicates: usize,
    pub paths: usize,
    pub premium: f64,
    pub points: Vec<BandPoint>,
}

/// Draws from the integrated tail of the empirical law: an atom chosen with
/// probability proportional to its size, then a uniform point below it.
struct LadderSampler {
    atoms: Vec<f64>,
    cum: Vec<f64>,
}

impl LadderSampler {
    fn new(claims: &[f64]) -> Self {
        let mut cum = Vec::with_capacity(claims.len());
        let mut acc = 0.0;
        for &x in claims {
            acc += x;
            cum.push(acc);
        }
        Self {
            atoms: claims.to_vec(),
            cum,
        }
    }

    #[inline]
    fn draw(&self, v: f64, w: f64) -> f64 {
        let total = *self.cum.last().unwrap_or(&0.0);
        let i = self
            .cum
            .partition_point(|&c| c <= v * total)
            .min(self.atoms.len() - 1);
        w * self.atoms[i]
    }
}

fn check_claims(claims: &[f64]) -> Result<f64> {
    if claims.is_empty() {
        return Err(Error::EmptyData);
    }
    if let Some(x) = claims.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "claim amounts must be positive, got {x}"
        )));
    }
    Ok(claims.iter().sum::<f64>() / claims.len() as f64)
}

/// Ruin curve of the compound Poisson line with the empirical claim law,
/// simulated through the maximal aggregate loss: a geometric number of
/// ladder heights. Returns `(psi, stderr)` per grid point.
pub fn empirical_ruin_curve(
    claims: &[f64],
    lambda: f64,
    premium: f64,
    u_grid: &[f64],
    cfg: &SimulationConfig,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let mean = check_claims(claims)?;
    let rho = lambda * mean / premium;
    if !(rho < 1.0) {
        return Err(Error::NetProfitViolated {
            claims_rate: lambda * mean,
            premium,
        });
    }
    let sampler = LadderSampler::new(claims);
    let counts = curve_counts(&sampler, rho, u_grid, cfg);
    let n = cfg.paths as f64;
    Ok(counts
        .iter()
        .map(|&k| {
            let p = k as f64 / n;
            (p, (p * (1.0 - p) / n).sqrt())
        })
        .collect())
}

/// Per-grid-point counts of `M > u`. The random numbers depend only on the
/// seed, so curves for different samples share them.
fn curve_counts(
    sampler: &LadderSampler,
    rho: f64,
    u_grid: &[f64],
    cfg: &SimulationConfig,
) -> Vec<usize> {
    let parts = run_batches(
        cfg.paths,
        cfg.seed,
        TAG_CURVE,
        cfg.workers,
        |_, len, rng: &mut ChaCha8Rng| {
            let mut counts = vec![0usize; u_grid.len()];
            for _ in 0..len {
                let mut m = 0.0;
                while rng.random::<f64>() < rho {
                    let (v, w): (f64, f64) = (rng.random(), rng.random());
                    m += sampler.draw(v, w);
                }
                for (c, &u) in counts.iter_mut().zip(u_grid) {
                    *c += (m > u) as usize;
                }
            }
            counts
        },
    );
    let mut total = vec![0usize; u_grid.len()];
    for p in parts {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    total
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise nonparametric bootstrap band for the ruin curve. Each
/// replicate resamples the claim amounts with replacement and re-estimates
/// the curve on common random numbers; `lambda` stays fixed.
pub fn bootstrap_ruin_band(
    losses: &[f64],
    template: &BandTemplate,
    replicates: usize,
    level: f64,
    cfg: &SimulationConfig,
) -> Result<RuinBand> {
    if losses.len() < 30 {
        return Err(Error::InsufficientData(format!(
            "{} claims, need at least 30",
            losses.len()
        )));
    }
    if replicates < 200 {
        return Err(Error::InsufficientData(format!(
            "{replicates} bootstrap replicates, need at least 200"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "band level must lie in (0,1), got {level}"
        )));
    }
    let n = losses.len();
    let full_mean = check_claims(losses)?;
    let full_premium = template.premium.premium(template.lambda, full_mean);
    let center =
        empirical_ruin_curve(losses, template.lambda, full_premium, &template.u_grid, cfg)?;

    let mut curves: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); template.u_grid.len()];
    let inner = SimulationConfig {
        workers: 1,
        ..cfg.clone()
    };
    let pool = if cfg.workers > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .ok()
    } else {
        None
    };
    let one = |b: usize| -> Result<Vec<f64>> {
        let mut rng = stream(cfg.seed, TAG_RESAMPLE, b as u64);
        let mut sample: Vec<f64> = (0..n).map(|_| losses[rng.random_range(0..n)]).collect();
        sample.sort_by(f64::total_cmp);
        let mean = sample.iter().sum::<f64>() / n as f64;
        let premium = template.premium.premium(template.lambda, mean);
        let rho = template.lambda * mean / premium;
        if !(rho < 1.0) {
            // resample too heavy for the fixed premium: certain ruin
            return Ok(vec![1.0; template.u_grid.len()]);
        }
        let counts = curve_counts(&LadderSampler::new(&sample), rho, &template.u_grid, &inner);
        Ok(counts
            .iter()
            .map(|&k| k as f64 / inner.paths as f64)
            .collect())
    };
    let results: Vec<Result<Vec<f64>>> = match &pool {
        Some(p) => {
            use rayon::prelude::*;
            p.install(|| (0..replicates).into_par_iter().map(one).collect())
        }
        None => (0..replicates).map(one).collect(),
    };
    for r in results {
        for (col, v) in curves.iter_mut().zip(r?) {
            col.push(v);
        }
    }

    let tail = (1.0 - level) / 2.0;
    let points = template
        .u_grid
        .iter()
        .zip(curves.iter_mut())
        .zip(center)
        .map(|((&u, col), (psi, stderr))| {
            col.sort_by(f64::total_cmp);
            BandPoint {
                u,
                psi,
                stderr,
                lower: quantile(col, tail),
                upper: quantile(col, 1.0 - tail),
            }
        })
        .collect();
    Ok(RuinBand {
        level,
        replicates,
        paths: cfg.paths,
        premium: full_premium,
        points,
    })
}
