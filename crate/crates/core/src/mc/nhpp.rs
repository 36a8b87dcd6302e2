use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid resolution for positivity checks, rate bounds and root bracketing.
const GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntensityKind {
    /// `a_0 + a_1 t + ... + a_d t^d`, coefficients in increasing degree.
    Polynomial { coefficients: Vec<f64> },
    /// `a e^{b t}`.
    Exponential { a: f64, b: f64 },
}

/// Claim intensity `lambda(t)` in claims per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityModel {
    #[serde(flatten)]
    pub kind: IntensityKind,
    #[serde(default)]
    pub mse: f64,
    /// Negative stretches of the fitted curve are treated as zero intensity.
    #[serde(default = "default_clamp")]
    pub clamp_negative: bool,
}

fn default_clamp() -> bool {
    true
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

fn poly_integral(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, a)| acc * t + a / (k + 1) as f64)
        * t
}

impl IntensityModel {
    pub fn new(kind: IntensityKind) -> Self {
        Self {
            kind,
            mse: 0.0,
            clamp_negative: true,
        }
    }

    pub fn constant(rate: f64) -> Self {
        Self::polynomial(vec![rate])
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self::new(IntensityKind::Polynomial { coefficients })
    }

    pub fn exponential(a: f64, b: f64) -> Self {
        Self::new(IntensityKind::Exponential { a, b })
    }

    pub fn raw_rate(&self, t: f64) -> f64 {
        match &self.kind {
            IntensityKind::Polynomial { coefficients } => horner(coefficients, t),
            IntensityKind::Exponential { a, b } => a * (b * t).exp(),
        }
    }

    #[inline]
    pub fn rate(&self, t: f64) -> f64 {
        let r = self.raw_rate(t);
        if self.clamp_negative {
            r.max(0.0)
        } else {
            r
        }
    }

    /// `int_0^t` of the unclamped curve, in closed form.
    pub fn raw_cumulative(&self, t: f64) -> f64 {
        match &self.kind {
            IntensityKind::Polynomial { coefficients } => poly_integral(coefficients, t),
            IntensityKind::Exponential { a, b } => {
                if b.abs() * t < 1e-8 {
                    a * t * (1.0 + b * t / 2.0)
                } else {
                    a * (b * t).exp_m1() / b
                }
            }
        }
    }

    /// Sign changes of the raw curve in `(0, t)`, located by bisection.
    fn sign_changes(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let h = t / GRID as f64;
        let mut prev = self.raw_rate(0.0);
        for k in 1..=GRID {
            let (mut lo, mut hi) = ((k - 1) as f64 * h, k as f64 * h);
            let cur = self.raw_rate(hi);
            if (prev < 0.0) != (cur < 0.0) {
                let neg_lo = prev < 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (self.raw_rate(mid) < 0.0) == neg_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON * hi.max(1.0) {
                        break;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            prev = cur;
        }
        out
    }

    /// Intervals in `[0, horizon]` where the sampled rate is positive.
    fn positive_segments(&self, horizon: f64) -> Vec<(f64, f64)> {
        if !self.clamp_negative {
            return vec![(0.0, horizon)];
        }
        let mut knots = vec![0.0];
        knots.extend(self.sign_changes(horizon));
        knots.push(horizon);
        knots
            .windows(2)
            .filter(|w| self.raw_rate(0.5 * (w[0] + w[1])) > 0.0)
            .map(|w| (w[0], w[1]))
            .collect()
    }

    fn cumulative_on(&self, segments: &[(f64, f64)], t: f64) -> f64 {
        segments
            .iter()
            .take_while(|s| s.0 < t)
            .map(|&(a, b)| self.raw_cumulative(b.min(t)) - self.raw_cumulative(a))
            .sum()
    }

    /// Mean-value function `Lambda(t)` of the intensity actually sampled:
    /// the clamped curve when `clamp_negative` is set.
    pub fn cumulative(&self, t: f64) -> f64 {
        if !self.clamp_negative || t <= 0.0 {
            return self.raw_cumulative(t);
        }
        self.cumulative_on(&self.positive_segments(t), t)
    }

    /// Intervals in `[0, horizon]` where the raw curve is negative.
    pub fn negative_segments(&self, horizon: f64) -> Vec<(f64, f64)> {
        let mut knots = vec![0.0];
        knots.extend(self.sign_changes(horizon));
        knots.push(horizon);
        knots
            .windows(2)
            .filter(|w| self.raw_rate(0.5 * (w[0] + w[1])) < 0.0)
            .map(|w| (w[0], w[1]))
            .collect()
    }

    pub fn check(&self, horizon: f64) -> Result<()> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        for k in 0..=GRID {
            let t = horizon * k as f64 / GRID as f64;
            let r = self.raw_rate(t);
            if !r.is_finite() {
                return Err(Error::NonFinite(format!("intensity at t={t}")));
            }
            if r < 0.0 && !self.clamp_negative {
                return Err(Error::NegativeIntensity(t));
            }
        }
        Ok(())
    }

    /// Upper bound for thinning: grid maximum of the sampled rate plus a 1% margin.
    pub fn rate_bound(&self, horizon: f64) -> f64 {
        let max = (0..=GRID)
            .map(|k| self.rate(horizon * k as f64 / GRID as f64))
            .fold(0.0f64, f64::max);
        max * 1.01
    }
}

/// Event times on `[0, horizon]` by thinning a homogeneous stream at the
/// grid bound.
pub fn nhpp_sample<R: Rng + ?Sized>(
    intensity: &IntensityModel,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    intensity.check(horizon)?;
    let bound = intensity.rate_bound(horizon);
    let mut out = Vec::new();
    if bound <= 0.0 {
        return Ok(out);
    }
    let mut t = 0.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        t += e / bound;
        if t > horizon {
            return Ok(out);
        }
        let r = intensity.rate(t);
        if r > bound {
            return Err(Error::InvalidConfig(format!(
                "intensity {r} exceeds thinning bound {bound} at t={t}"
            )));
        }
        let v: f64 = rng.random();
        if v * bound < r {
            out.push(t);
        }
    }
}

/// Event times on `[0, horizon]` by inverting `Lambda` at the points of a
/// unit-rate Poisson stream.
pub fn nhpp_sample_inversion<R: Rng + ?Sized>(
    intensity: &IntensityModel,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    intensity.check(horizon)?;
    let segments = intensity.positive_segments(horizon);
    let total = intensity.cumulative_on(&segments, horizon);
    let mut out = Vec::new();
    let mut level = 0.0;
    let mut lo = 0.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        level += e;
        if level > total {
            return Ok(out);
        }
        let mut hi = horizon;
        let mut a = lo;
        for _ in 0..100 {
            let mid = 0.5 * (a + hi);
            if intensity.cumulative_on(&segments, mid) < level {
                a = mid;
            } else {
                hi = mid;
            }
            if hi - a <= 1e-12 * horizon {
                break;
            }
        }
        lo = a;
        out.push(hi);
    }
}
