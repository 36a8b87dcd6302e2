use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{IntensityKind, IntensityModel};

/// Relative MSE improvement below which a more complex intensity is not
/// worth its extra parameters.
pub const NEGLIGIBLE_GAIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum IntensityFamily {
    Polynomial { degree: usize },
    Exponential,
}

impl IntensityFamily {
    pub fn label(&self) -> String {
        match self {
            IntensityFamily::Polynomial { degree } => format!("poly{degree}"),
            IntensityFamily::Exponential => "exp".into(),
        }
    }

    pub fn parameters(&self) -> usize {
        match self {
            IntensityFamily::Polynomial { degree } => degree + 1,
            IntensityFamily::Exponential => 2,
        }
    }
}

/// Cumulative counts at the ends of the periods, `t_k = k * period`.
fn cumulative(counts: &[f64], period: f64) -> (Vec<f64>, Vec<f64>) {
    let mut acc = 0.0;
    let mut t = Vec::with_capacity(counts.len());
    let mut y = Vec::with_capacity(counts.len());
    for (k, c) in counts.iter().enumerate() {
        acc += c;
        t.push((k + 1) as f64 * period);
        y.push(acc);
    }
    (t, y)
}

fn mse(model: &IntensityModel, t: &[f64], y: &[f64]) -> f64 {
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| (yi - model.raw_cumulative(ti)).powi(2))
        .sum::<f64>()
        / t.len() as f64
}

fn fit_polynomial(t: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    // time rescaled to [0, 1] for conditioning
    let scale = t.iter().cloned().fold(0.0, f64::max);
    let p = degree + 1;
    let design = DMatrix::from_fn(t.len(), p, |i, j| (t[i] / scale).powi(j as i32 + 1));
    let rhs = DVector::from_column_slice(y);
    let b = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::IllPosed(e.to_string()))?;
    Ok((0..p)
        .map(|j| b[j] * (j + 1) as f64 / scale.powi(j as i32 + 1))
        .collect())
}

fn exp_amplitude(t: &[f64], y: &[f64], b: f64) -> (f64, f64) {
    let g: Vec<f64> = t
        .iter()
        .map(|&ti| {
            if (b * ti).abs() < 1e-8 {
                ti
            } else {
                (b * ti).exp_m1() / b
            }
        })
        .collect();
    let a = g.iter().zip(y).map(|(g, y)| g * y).sum::<f64>() / g.iter().map(|g| g * g).sum::<f64>();
    let sse = g.iter().zip(y).map(|(g, y)| (y - a * g).powi(2)).sum();
    (a, sse)
}

/// `a e^{b t}`: `a` in closed form for each `b`, `b` by grid then golden
/// section on the scaled growth `b * t_max`.
fn fit_exponential(t: &[f64], y: &[f64]) -> (f64, f64) {
    let scale = t.iter().cloned().fold(0.0, f64::max);
    let sse = |s: f64| exp_amplitude(t, y, s / scale).1;
    let grid: Vec<f64> = (0..=400).map(|i| -20.0 + 0.1 * i as f64).collect();
    let i = (0..grid.len())
        .min_by(|&a, &b| sse(grid[a]).total_cmp(&sse(grid[b])))
        .unwrap_or(200);
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if sse(m1) <= sse(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let b = 0.5 * (lo + hi) / scale;
    (exp_amplitude(t, y, b).0, b)
}

/// Least-squares fit of the mean-value function to cumulative counts.
/// `counts[k]` is the number of claims in period `k`, which ends at
/// `(k + 1) * period`.
pub fn fit_intensity(
    counts: &[f64],
    period: f64,
    family: IntensityFamily,
) -> Result<IntensityModel> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::IllPosed(format!(
            "period length must be positive, got {period}"
        )));
    }
    let need = family.parameters() + 1;
    if counts.len() < need {
        return Err(Error::IllPosed(format!(
            "{} periods for {} parameters; need at least {need}",
            counts.len(),
            family.parameters()
        )));
    }
    if counts.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::IllPosed("counts must be nonnegative".into()));
    }
    let (t, y) = cumulative(counts, period);
    let kind = match family {
        IntensityFamily::Polynomial { degree } => IntensityKind::Polynomial {
            coefficients: fit_polynomial(&t, &y, degree)?,
        },
        IntensityFamily::Exponential => {
            let (a, b) = fit_exponential(&t, &y);
            IntensityKind::Exponential { a, b }
        }
    };
    let mut model = IntensityModel::new(kind);
    model.mse = mse(&model, &t, &y);
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub parameters: usize,
    pub mse: f64,
    pub model: IntensityModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub from: String,
    pub to: String,
    pub relative_gain: f64,
    pub negligible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Candidates by increasing MSE.
    pub ranked: Vec<Candidate>,
    pub steps: Vec<SelectionStep>,
    pub selected: String,
}

/// Walks the candidates from fewest to most parameters and moves to a
/// richer one only when it lowers the current MSE by at least
/// [`NEGLIGIBLE_GAIN`] relative.
pub fn model_select_intensity(candidates: Vec<Candidate>) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::IllPosed("no intensity candidates".into()));
    }
    let mut walk = candidates.clone();
    walk.sort_by(|a, b| {
        a.parameters
            .cmp(&b.parameters)
            .then(a.mse.total_cmp(&b.mse))
    });
    let mut current = 0;
    let mut steps = Vec::new();
    for i in 1..walk.len() {
        let (c, n) = (&walk[current], &walk[i]);
        let gain = (c.mse - n.mse) / c.mse;
        let negligible = !(gain >= NEGLIGIBLE_GAIN);
        steps.push(SelectionStep {
            from: c.label.clone(),
            to: n.label.clone(),
            relative_gain: gain,
            negligible,
        });
        if !negligible {
            current = i;
        }
    }
    let selected = walk[current].label.clone();
    let mut ranked = candidates;
    ranked.sort_by(|a, b| a.mse.total_cmp(&b.mse));
    Ok(SelectionReport {
        ranked,
        steps,
        selected,
    })
}

/// Fits every family and runs the selection.
pub fn fit_and_select(
    counts: &[f64],
    period: f64,
    families: &[IntensityFamily],
) -> Result<SelectionReport> {
    let cands = families
        .iter()
        .map(|f| {
            let model = fit_intensity(counts, period, *f)?;
            Ok(Candidate {
                label: f.label(),
                parameters: f.parameters(),
                mse: model.mse,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    model_select_intensity(cands)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(label: &str, parameters: usize, mse: f64) -> Candidate {
        Candidate {
            label: label.into(),
            parameters,
            mse,
            model: IntensityModel::constant(1.0),
        }
    }

    #[test]
    fn recovers_noise_free_polynomial() {
        let truth = IntensityModel::polynomial(vec![2.0, -0.5, 0.3, 0.01]);
        let period = 0.5;
        let counts: Vec<f64> = (0..30)
            .map(|k| {
                truth.raw_cumulative((k + 1) as f64 * period)
                    - truth.raw_cumulative(k as f64 * period)
            })
            .collect();
        let fit =
            fit_intensity(&counts, period, IntensityFamily::Polynomial { degree: 3 }).unwrap();
        let IntensityKind::Polynomial { coefficients } = &fit.kind else {
            panic!()
        };
        for (a, b) in coefficients.iter().zip([2.0, -0.5, 0.3, 0.01]) {
            assert!((a - b).abs() < 1e-8, "{coefficients:?}");
        }
        assert!(fit.mse < 1e-16);
    }

    #[test]
    fn recovers_exponential() {
        let truth = IntensityModel::exponential(3.0, 0.1);
        let counts: Vec<f64> = (0..24)
            .map(|k| truth.raw_cumulative((k + 1) as f64) - truth.raw_cumulative(k as f64))
            .collect();
        let fit = fit_intensity(&counts, 1.0, IntensityFamily::Exponential).unwrap();
        let IntensityKind::Exponential { a, b } = fit.kind else {
            panic!()
        };
        assert!((a - 3.0).abs() < 1e-6 && (b - 0.1).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn constant_rate_degree_zero() {
        let counts = vec![5.0; 40];
        let fit = fit_intensity(&counts, 1.0, IntensityFamily::Polynomial { degree: 0 }).unwrap();
        assert!((fit.rate(3.0) - 5.0).abs() < 1e-12);
        assert!(
            fit_intensity(&counts[..3], 1.0, IntensityFamily::Polynomial { degree: 3 }).is_err()
        );
    }

    #[test]
    fn selection_rule() {
        let r =
            model_select_intensity(vec![cand("poly3", 4, 3.16), cand("poly4", 5, 3.09)]).unwrap();
        assert_eq!(r.selected, "poly3");
        assert!(r.steps[0].negligible && (r.steps[0].relative_gain - 0.0221).abs() < 1e-3);
        let r = model_select_intensity(vec![cand("only", 2, 1.0)]).unwrap();
        assert_eq!(r.selected, "only");
        let r = model_select_intensity(vec![
            cand("a", 1, 10.0),
            cand("b", 2, 5.0),
            cand("c", 3, 2.0),
        ])
        .unwrap();
        assert_eq!(r.selected, "c");
        let table = vec![
            cand("poly1", 2, 22.23),
            cand("poly2", 3, 8.52),
            cand("poly3", 4, 3.16),
            cand("poly4", 5, 3.09),
            cand("exp", 2, 13.20),
        ];
        let r = model_select_intensity(table).unwrap();
        assert_eq!(r.selected, "poly3");
        assert_eq!(r.ranked[0].label, "poly4");
    }
}
