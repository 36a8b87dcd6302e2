use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::optim::NelderMead;
use crate::error::{Error, Result};
use crate::mc::stream;
use crate::phasetype::{erlang_cdf_pair, ErlangBranch, PhaseType};

const TAG_STARTS: u64 = 0x7374_6172;
const MIN_SAMPLE: usize = 10;
const PRUNE_WEIGHT: f64 = 1e-10;

/// Severity families. All of them are Erlang mixtures with fixed shapes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Exponential,
    Hyperexponential { k: usize },
    Erlang { k: u32 },
    ErlangMixture { shapes: Vec<u32> },
}

impl Family {
    pub fn shapes(&self) -> Vec<u32> {
        match self {
            Family::Exponential => vec![1],
            Family::Hyperexponential { k } => vec![1; *k],
            Family::Erlang { k } => vec![*k],
            Family::ErlangMixture { shapes } => shapes.clone(),
        }
    }

    fn check(&self) -> Result<()> {
        let s = self.shapes();
        if s.is_empty() || s.contains(&0) {
            return Err(Error::BadRate(format!(
                "family {self:?} needs at least one shape >= 1"
            )));
        }
        Ok(())
    }
}

/// Erlang mixture with fixed shapes, as manipulated by the fitters.
#[derive(Debug, Clone, PartialEq)]
struct Mixture {
    shapes: Vec<u32>,
    weights: Vec<f64>,
    rates: Vec<f64>,
}

impl Mixture {
    fn from_params(shapes: &[u32], p: &[f64]) -> Self {
        let k = shapes.len();
        let rates: Vec<f64> = p[..k].iter().map(|v| v.exp()).collect();
        let mut logits = vec![0.0];
        logits.extend_from_slice(&p[k..]);
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
        let s: f64 = e.iter().sum();
        Self {
            shapes: shapes.to_vec(),
            weights: e.iter().map(|v| v / s).collect(),
            rates,
        }
    }

    fn to_params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.rates.iter().map(|r| r.ln()).collect();
        let w0 = self.weights[0].max(1e-300);
        p.extend(self.weights[1..].iter().map(|w| (w.max(1e-300) / w0).ln()));
        p
    }

    fn branches(&self) -> Vec<ErlangBranch> {
        self.shapes
            .iter()
            .zip(&self.weights)
            .zip(&self.rates)
            .map(|((&shape, &weight), &rate)| ErlangBranch {
                weight,
                shape,
                rate,
            })
            .collect()
    }

    /// Anderson-Darling statistic against sorted data, with both tails of
    /// the law evaluated without cancellation.
    fn a2(&self, sorted: &[f64]) -> f64 {
        let n = sorted.len();
        let pairs: Vec<(f64, f64)> = sorted
            .iter()
            .map(|&x| {
                let mut c = 0.0;
                let mut s = 0.0;
                for ((&k, &w), &r) in self.shapes.iter().zip(&self.weights).zip(&self.rates) {
                    let (ci, si) = erlang_cdf_pair(k, r, x);
                    c += w * ci;
                    s += w * si;
                }
                (c, s)
            })
            .collect();
        let mut acc = 0.0;
        for i in 0..n {
            acc += (2 * i + 1) as f64 * (pairs[i].0.ln() + pairs[n - 1 - i].1.ln());
        }
        -(n as f64) - acc / n as f64
    }

    fn log_density_parts(&self, x: f64, out: &mut [f64]) {
        for (j, ((&k, &w), &r)) in self
            .shapes
            .iter()
            .zip(&self.weights)
            .zip(&self.rates)
            .enumerate()
        {
            let n = k as f64;
            out[j] = w.ln() + n * r.ln() + (n - 1.0) * x.ln() - r * x - ln_gamma_int(k);
        }
    }

    fn log_likelihood(&self, data: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.shapes.len()];
        data.iter()
            .map(|&x| {
                self.log_density_parts(x, &mut buf);
                log_sum_exp(&buf)
            })
            .sum()
    }

    /// Quantile-group start: component `j` is matched to the `j`-th block
    /// of the sorted sample, ordered by component mean.
    fn initial(shapes: &[u32], sorted: &[f64]) -> Self {
        let k = shapes.len();
        let n = sorted.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&j| shapes[j]);
        let mut rates = vec![0.0; k];
        for (g, &j) in order.iter().enumerate() {
            let lo = g * n / k;
            let hi = ((g + 1) * n / k).max(lo + 1).min(n);
            let m = sorted[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            rates[j] = shapes[j] as f64 / m.max(f64::MIN_POSITIVE);
        }
        Self {
            shapes: shapes.to_vec(),
            weights: vec![1.0 / k as f64; k],
            rates,
        }
    }
}

fn ln_gamma_int(k: u32) -> f64 {
    (1..k).map(|i| (i as f64).ln()).sum()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn sorted_sample(data: &[f64]) -> Result<Vec<f64>> {
    if data.len() < MIN_SAMPLE {
        return Err(Error::InsufficientData(format!(
            "{} observations, need at least {MIN_SAMPLE}",
            data.len()
        )));
    }
    if let Some(x) = data.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::Parse(format!(
            "observations must be positive, got {x}"
        )));
    }
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Result of a severity fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityFit {
    pub estimator: String,
    pub family: Family,
    pub branches: Vec<ErlangBranch>,
    pub a2: f64,
    pub log_likelihood: f64,
    pub mean: f64,
    pub notes: Vec<String>,
}

impl SeverityFit {
    pub fn model(&self) -> Result<PhaseType> {
        let w: Vec<f64> = self.branches.iter().map(|b| b.weight).collect();
        let c: Vec<(u32, f64)> = self.branches.iter().map(|b| (b.shape, b.rate)).collect();
        PhaseType::erlang_mixture(&w, &c)
    }

    fn from_mixture(
        estimator: &str,
        family: &Family,
        m: &Mixture,
        sorted: &[f64],
        notes: Vec<String>,
    ) -> Self {
        let mean = m
            .shapes
            .iter()
            .zip(&m.weights)
            .zip(&m.rates)
            .map(|((&k, &w), &r)| w * k as f64 / r)
            .sum();
        Self {
            estimator: estimator.to_string(),
            family: family.clone(),
            branches: m.branches(),
            a2: m.a2(sorted),
            log_likelihood: m.log_likelihood(sorted),
            mean,
            notes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdMinOptions {
    pub starts: usize,
    pub max_evals: usize,
}

impl Default for AdMinOptions {
    fn default() -> Self {
        Self {
            starts: 20,
            max_evals: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub initial_a2: f64,
    pub final_a2: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdMinFit {
    pub fit: SeverityFit,
    pub starts: Vec<StartRecord>,
}

/// Minimum Anderson-Darling fit: simplex search over log-rates and
/// softmax weight logits from a quantile-matched start plus random starts.
pub fn fit_ad_min(
    data: &[f64],
    family: &Family,
    options: &AdMinOptions,
    seed: u64,
) -> Result<AdMinFit> {
    family.check()?;
    let sorted = sorted_sample(data)?;
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::OptimizerFailed("all observations are equal".into()));
    }
    let shapes = family.shapes();
    let base = Mixture::initial(&shapes, &sorted).to_params();
    let mut rng = stream(seed, TAG_STARTS, 0);
    let nm = NelderMead {
        max_evals: options.max_evals,
        ..NelderMead::default()
    };
    let objective = |p: &[f64]| Mixture::from_params(&shapes, p).a2(&sorted);

    let mut records = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in 0..options.starts.max(1) {
        let x0: Vec<f64> = if s == 0 {
            base.clone()
        } else {
            base.iter()
                .map(|v| v + rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let initial_a2 = objective(&x0);
        let m = nm.minimize(objective, &x0);
        records.push(StartRecord {
            initial_a2,
            final_a2: m.fx,
            evals: m.evals,
        });
        if m.fx.is_finite() && best.as_ref().is_none_or(|(f, _)| m.fx < *f) {
            best = Some((m.fx, m.x));
        }
    }
    let (_, x) =
        best.ok_or_else(|| Error::OptimizerFailed("no start reached a finite A2".into()))?;
    let mix = Mixture::from_params(&shapes, &x);
    let mut notes = Vec::new();
    if mix.weights.iter().any(|&w| w < 1e-6) {
        notes.push("a mixture weight is at the boundary of the simplex".into());
    }
    Ok(AdMinFit {
        fit: SeverityFit::from_mixture("ad_min", family, &mix, &sorted, notes),
        starts: records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Keep only the best `k` shapes of the grid, chosen by likelihood.
    pub k: Option<usize>,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-9,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub fit: SeverityFit,
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Shapes whose weight underflowed and were removed.
    pub pruned: Vec<u32>,
}

fn em_run(
    sorted: &[f64],
    shapes: &[u32],
    options: &EmOptions,
) -> Result<(Mixture, Vec<f64>, bool, Vec<u32>)> {
    let n = sorted.len();
    let mut mix = Mixture::initial(shapes, sorted);
    let mut trace = vec![mix.log_likelihood(sorted)];
    let mut pruned = Vec::new();
    let mut converged = false;
    let mut buf = vec![0.0; shapes.len()];
    for _ in 0..options.max_iter {
        let k = mix.shapes.len();
        let mut resp_sum = vec![0.0; k];
        let mut resp_x = vec![0.0; k];
        for &x in sorted {
            mix.log_density_parts(x, &mut buf[..k]);
            let l = log_sum_exp(&buf[..k]);
            for j in 0..k {
                let r = (buf[j] - l).exp();
                resp_sum[j] += r;
                resp_x[j] += r * x;
            }
        }
        let mut next = Mixture {
            shapes: Vec::new(),
            weights: Vec::new(),
            rates: Vec::new(),
        };
        for j in 0..k {
            let w = resp_sum[j] / n as f64;
            if w < PRUNE_WEIGHT || resp_x[j] <= 0.0 {
                pruned.push(mix.shapes[j]);
                continue;
            }
            next.shapes.push(mix.shapes[j]);
            next.weights.push(w);
            next.rates
                .push(mix.shapes[j] as f64 * resp_sum[j] / resp_x[j]);
        }
        if next.shapes.is_empty() {
            return Err(Error::EmptyComponent(0));
        }
        let total: f64 = next.weights.iter().sum();
        next.weights.iter_mut().for_each(|w| *w /= total);
        mix = next;
        let ll = mix.log_likelihood(sorted);
        let prev = *trace.last().unwrap_or(&ll);
        trace.push(ll);
        if ((ll - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < options.tol {
            converged = true;
            break;
        }
    }
    Ok((mix, trace, converged, pruned))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// EM for a mixture of Erlangs with fixed shapes. Weights and rates have
/// closed-form updates; the fitted mean equals the sample mean at every
/// iteration after the first.
pub fn fit_em_mixture_erlang(data: &[f64], shapes: &[u32], options: &EmOptions) -> Result<EmFit> {
    let family = Family::ErlangMixture {
        shapes: shapes.to_vec(),
    };
    fit_em(data, &family, options)
}

pub fn fit_em(data: &[f64], family: &Family, options: &EmOptions) -> Result<EmFit> {
    family.check()?;
    let sorted = sorted_sample(data)?;
    let shapes = family.shapes();
    let subsets = match options.k {
        Some(k) if k == 0 || k > shapes.len() => {
            return Err(Error::InvalidConfig(format!(
                "k = {k} with {} shapes",
                shapes.len()
            )));
        }
        Some(k) if k < shapes.len() => combinations(shapes.len(), k),
        _ => vec![(0..shapes.len()).collect()],
    };
    let mut best: Option<(Mixture, Vec<f64>, bool, Vec<u32>)> = None;
    for sub in subsets {
        let s: Vec<u32> = sub.iter().map(|&i| shapes[i]).collect();
        let run = em_run(&sorted, &s, options)?;
        let ll = *run.1.last().unwrap_or(&f64::NEG_INFINITY);
        if best
            .as_ref()
            .is_none_or(|b| ll > *b.1.last().unwrap_or(&f64::NEG_INFINITY))
        {
            best = Some(run);
        }
    }
    let (mix, trace, converged, pruned) = best.ok_or(Error::EmptyComponent(0))?;
    let mut notes = Vec::new();
    if !pruned.is_empty() {
        notes.push(format!("pruned components with shapes {pruned:?}"));
    }
    if !converged {
        notes.push(format!(
            "stopped after {} iterations without converging",
            options.max_iter
        ));
    }
    Ok(EmFit {
        fit: SeverityFit::from_mixture("em", family, &mix, &sorted, notes),
        iterations: trace.len() - 1,
        log_likelihood_trace: trace,
        converged,
        pruned,
    })
}

/// Pluggable severity estimator.
pub trait SeverityEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, data: &[f64], family: &Family, seed: u64) -> Result<SeverityFit>;
}

#[derive(Debug, Clone, Default)]
pub struct AdMinEstimator {
    pub options: AdMinOptions,
}

impl SeverityEstimator for AdMinEstimator {
    fn name(&self) -> &'static str {
        "ad_min"
    }

    fn fit(&self, data: &[f64], family: &Family, seed: u64) -> Result<SeverityFit> {
        Ok(fit_ad_min(data, family, &self.options, seed)?.fit)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EmEstimator {
    pub options: EmOptions,
}

impl SeverityEstimator for EmEstimator {
    fn name(&self) -> &'static str {
        "em"
    }

    fn fit(&self, data: &[f64], family: &Family, _seed: u64) -> Result<SeverityFit> {
        Ok(fit_em(data, family, &self.options)?.fit)
    }
}
