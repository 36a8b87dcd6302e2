use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasetype::PhaseType;

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        if data.iter().any(|x| x.is_nan()) {
            return Err(Error::NonFinite("NaN in data".into()));
        }
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// `#{x_i < x} / n`, the left limit at `x`.
    pub fn eval_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.sorted.len() as f64
    }

    /// `sup_x |F_n(x) - F(x)|` for a continuous `F`, attained at a jump.
    pub fn sup_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (i as f64 / n - f).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statistic {
    D,
    V,
    W2,
    A2,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [Statistic::D, Statistic::V, Statistic::W2, Statistic::A2];

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::D => "D",
            Statistic::V => "V",
            Statistic::W2 => "W2",
            Statistic::A2 => "A2",
        }
    }
}

/// EDF statistics of a sample against a continuous law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofStatistics {
    pub n: usize,
    pub d_plus: f64,
    pub d_minus: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "W2")]
    pub w2: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
}

impl GofStatistics {
    pub fn get(&self, s: Statistic) -> f64 {
        match s {
            Statistic::D => self.d,
            Statistic::V => self.v,
            Statistic::W2 => self.w2,
            Statistic::A2 => self.a2,
        }
    }
}

/// Statistics from sorted probability-integral transforms `u_1 <= ... <= u_n`.
/// `A2` is infinite when some `u_i` is exactly 0 or 1.
pub fn statistics_from_pit(u: &[f64]) -> Result<GofStatistics> {
    if u.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = u.len();
    let nf = n as f64;
    let (mut dp, mut dm, mut w2, mut s) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, 0.0);
    for (k, &ui) in u.iter().enumerate() {
        if !(0.0..=1.0).contains(&ui) {
            return Err(Error::NonFinite(format!("transform {ui} outside [0,1]")));
        }
        let i = (k + 1) as f64;
        dp = dp.max(i / nf - ui);
        dm = dm.max(ui - (i - 1.0) / nf);
        w2 += (ui - (2.0 * i - 1.0) / (2.0 * nf)).powi(2);
        s += (2.0 * i - 1.0) * (ui.ln() + (1.0 - u[n - 1 - k]).ln());
    }
    w2 += 1.0 / (12.0 * nf);
    let a2 = -nf - s / nf;
    Ok(GofStatistics {
        n,
        d_plus: dp,
        d_minus: dm,
        d: dp.max(dm),
        v: dp + dm,
        w2,
        a2: if a2.is_nan() { f64::INFINITY } else { a2 },
    })
}

/// `D`, `V`, `W2` and `A2` of `data` against `cdf`.
pub fn gof_statistics(data: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofStatistics> {
    let e = Ecdf::new(data)?;
    let u: Vec<f64> = e.sorted().iter().map(|&x| cdf(x)).collect();
    let st = statistics_from_pit(&u)?;
    if !st.a2.is_finite() {
        return Err(Error::DegenerateU);
    }
    Ok(st)
}

pub fn gof_statistics_ph(data: &[f64], law: &PhaseType) -> Result<GofStatistics> {
    if let Some(x) = data.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::NegativeArgument(*x));
    }
    gof_statistics(data, |x| law.cdf(x).unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_steps() {
        let e = Ecdf::new(&[2.0]).unwrap();
        assert_eq!(e.eval(1.999), 0.0);
        assert_eq!(e.eval(2.0), 1.0);
        let t = Ecdf::new(&[1.0, 3.0, 3.0, 5.0]).unwrap();
        assert_eq!(t.eval(3.0), 0.75);
        assert_eq!(t.eval_left(3.0), 0.25);
        assert_eq!(Ecdf::new(&[]), Err(Error::EmptyData));
    }

    #[test]
    fn ecdf_close_to_exponential() {
        let law = PhaseType::exponential(1.0).unwrap();
        let mut rng = crate::mc::stream(1, 0, 0);
        let e = Ecdf::new(&law.sample_n(&mut rng, 100_000)).unwrap();
        assert!(e.sup_distance(|x| 1.0 - (-x).exp()) < 0.01);
    }

    #[test]
    fn equispaced_transforms() {
        let n = 50;
        let u: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let s = statistics_from_pit(&u).unwrap();
        assert!((s.d - 0.5 / n as f64).abs() < 1e-15);
        assert!((s.w2 - 1.0 / (12.0 * n as f64)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_transform() {
        assert_eq!(
            gof_statistics(&[1.0, 2.0], |x| if x > 1.5 { 1.0 } else { 0.3 }),
            Err(Error::DegenerateU)
        );
        let s = statistics_from_pit(&[0.0, 0.5]).unwrap();
        assert!(s.a2.is_infinite());
    }
}
