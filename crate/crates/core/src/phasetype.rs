//! Continuous phase-type laws: validation, evaluation, canonical
//! constructors, sampling and exponential tilting.
//!
//! A law is stored as `(alpha, Q)` with exit vector `t = -Q 1`. When the
//! generator is a collection of constant-rate chains (exponential,
//! hyperexponential, Erlang, Erlang mixtures) the law also carries an
//! [`Structure::ErlangMixture`] description, which gives closed-form
//! densities and exact, fast sampling. Every closed form is checked against
//! the matrix route in tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const ALPHA_TOL: f64 = 1e-12;

/// One Erlang branch of a mixture: with probability `weight` the claim is
/// Erlang with `shape` phases of rate `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangBranch {
    pub weight: f64,
    pub shape: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    General,
    ErlangMixture(Vec<ErlangBranch>),
    SumOfExponentials(Vec<f64>),
}

#[derive(Debug, Clone)]
struct JumpRow {
    rate: f64,
    // (target, cumulative probability); target == m means absorption
    targets: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct PhaseType {
    alpha: DVector<f64>,
    q: DMatrix<f64>,
    exit: DVector<f64>,
    structure: Structure,
    alpha_cum: Vec<f64>,
    jumps: Vec<JumpRow>,
}

impl PartialEq for PhaseType {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha && self.q == other.q
    }
}

impl PhaseType {
    /// Validates `(alpha, Q)` and builds the law.
    pub fn new(alpha: Vec<f64>, q: DMatrix<f64>) -> Result<Self> {
        let alpha = DVector::from_vec(alpha);
        validate(&alpha, &q)?;
        let structure = detect_erlang_chains(&alpha, &q)
            .map(Structure::ErlangMixture)
            .unwrap_or(Structure::General);
        Ok(Self::assemble(alpha, q, structure))
    }

    fn assemble(alpha: DVector<f64>, q: DMatrix<f64>, structure: Structure) -> Self {
        let m = alpha.len();
        let exit = -(&q * DVector::from_element(m, 1.0));
        let exit = exit.map(|v| if v.abs() < 1e-300 { 0.0 } else { v });
        let mut acc = 0.0;
        let alpha_cum = alpha
            .iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect();
        let jumps = (0..m)
            .map(|i| {
                let rate = -q[(i, i)];
                let mut targets = Vec::new();
                let mut cum = 0.0;
                for j in 0..m {
                    if j != i && q[(i, j)] > 0.0 {
                        cum += q[(i, j)] / rate;
                        targets.push((j, cum));
                    }
                }
                targets.push((m, 1.0));
                JumpRow { rate, targets }
            })
            .collect();
        Self {
            alpha,
            q,
            exit,
            structure,
            alpha_cum,
            jumps,
        }
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::erlang_mixture(&[1.0], &[(1, rate)])
    }

    pub fn hyperexponential(weights: &[f64], rates: &[f64]) -> Result<Self> {
        if weights.len() != rates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rates",
                weights.len(),
                rates.len()
            )));
        }
        let comps: Vec<(u32, f64)> = rates.iter().map(|&r| (1, r)).collect();
        Self::erlang_mixture(weights, &comps)
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        Self::erlang_mixture(&[1.0], &[(shape, rate)])
    }

    /// Convolution of exponentials with the given rates, as a bidiagonal chain.
    pub fn sum_of_exponentials(rates: &[f64]) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::BadRate("no rates given".into()));
        }
        check_rates(rates)?;
        let m = rates.len();
        let mut q = DMatrix::zeros(m, m);
        for (i, &r) in rates.iter().enumerate() {
            q[(i, i)] = -r;
            if i + 1 < m {
                q[(i, i + 1)] = r;
            }
        }
        let mut alpha = DVector::zeros(m);
        alpha[0] = 1.0;
        let structure = if rates.iter().all(|&r| r == rates[0]) {
            Structure::ErlangMixture(vec![ErlangBranch {
                weight: 1.0,
                shape: m as u32,
                rate: rates[0],
            }])
        } else {
            Structure::SumOfExponentials(rates.to_vec())
        };
        Ok(Self::assemble(alpha, q, structure))
    }

    /// Mixture of Erlang laws given as `(shape, rate)` pairs; block-diagonal
    /// chains with the weight placed on each chain head.
    pub fn erlang_mixture(weights: &[f64], components: &[(u32, f64)]) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::BadWeights(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        check_weights(weights)?;
        let rates: Vec<f64> = components.iter().map(|c| c.1).collect();
        check_rates(&rates)?;
        if let Some(c) = components.iter().find(|c| c.0 == 0) {
            return Err(Error::BadRate(format!("shape must be >= 1, got {}", c.0)));
        }
        let m: usize = components.iter().map(|c| c.0 as usize).sum();
        let mut q = DMatrix::zeros(m, m);
        let mut alpha = DVector::zeros(m);
        let mut head = 0;
        let mut branches = Vec::with_capacity(components.len());
        for (&w, &(shape, rate)) in weights.iter().zip(components) {
            alpha[head] = w;
            for k in 0..shape as usize {
                let i = head + k;
                q[(i, i)] = -rate;
                if k + 1 < shape as usize {
                    q[(i, i + 1)] = rate;
                }
            }
            head += shape as usize;
            branches.push(ErlangBranch {
                weight: w,
                shape,
                rate,
            });
        }
        Ok(Self::assemble(alpha, q, Structure::ErlangMixture(branches)))
    }

    pub fn from_spec(spec: &PhaseTypeSpec) -> Result<Self> {
        match spec {
            PhaseTypeSpec::Explicit { alpha, q } => {
                let m = alpha.len();
                if q.len() != m || q.iter().any(|row| row.len() != m) {
                    return Err(Error::DimensionMismatch(format!(
                        "alpha has {m} entries but Q is not {m}x{m}"
                    )));
                }
                let flat: Vec<f64> = q.iter().flatten().copied().collect();
                Self::new(alpha.clone(), DMatrix::from_row_slice(m, m, &flat))
            }
            PhaseTypeSpec::Family(f) => match f {
                FamilySpec::Exponential { rate } => Self::exponential(*rate),
                FamilySpec::Hyperexponential { weights, rates } => {
                    Self::hyperexponential(weights, rates)
                }
                FamilySpec::Erlang { shape, rate } => Self::erlang(*shape, *rate),
                FamilySpec::SumOfExponentials { rates } => Self::sum_of_exponentials(rates),
                FamilySpec::ErlangMixture {
                    weights,
                    components,
                } => Self::erlang_mixture(weights, components),
            },
        }
    }

    /// Explicit `{"alpha", "Q"}` representation.
    pub fn to_spec(&self) -> PhaseTypeSpec {
        let m = self.phases();
        PhaseTypeSpec::Explicit {
            alpha: self.alpha.iter().copied().collect(),
            q: (0..m)
                .map(|i| (0..m).map(|j| self.q[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }
    pub fn generator(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn exit(&self) -> &DVector<f64> {
        &self.exit
    }
    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Erlang branches when the law is a constant-rate chain mixture.
    pub fn erlang_branches(&self) -> Option<&[ErlangBranch]> {
        match &self.structure {
            Structure::ErlangMixture(b) => Some(b),
            _ => None,
        }
    }

    /// Same law with the structural shortcut removed, so every evaluation
    /// and draw goes through the generic matrix / chain route.
    pub fn without_structure(&self) -> Self {
        let mut out = self.clone();
        out.structure = Structure::General;
        out
    }

    pub fn is_exponential(&self) -> Option<f64> {
        (self.phases() == 1).then(|| -self.q[(0, 0)])
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeArgument(x));
        }
        if let Structure::ErlangMixture(b) = &self.structure {
            return Ok(b
                .iter()
                .map(|br| br.weight * erlang_pdf(br.shape, br.rate, x))
                .sum());
        }
        let e = linalg::expm_scaled(&self.q, x)?;
        Ok((self.alpha.transpose() * e * &self.exit)[(0, 0)].max(0.0))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.survival(x)?)
    }

    /// `P(X > x) = alpha e^{Qx} 1`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeArgument(x));
        }
        if let Structure::ErlangMixture(b) = &self.structure {
            return Ok(b
                .iter()
                .map(|br| br.weight * erlang_survival(br.shape, br.rate, x))
                .sum::<f64>()
                .clamp(0.0, 1.0));
        }
        let e = linalg::expm_scaled(&self.q, x)?;
        let ones = DVector::from_element(self.phases(), 1.0);
        Ok((self.alpha.transpose() * e * ones)[(0, 0)].clamp(0.0, 1.0))
    }

    /// k-th raw moment `k! alpha (-Q)^{-k} 1`.
    pub fn moment(&self, k: u32) -> f64 {
        let neg_q = -&self.q;
        let lu = neg_q.lu();
        let mut v = DVector::from_element(self.phases(), 1.0);
        let mut fact = 1.0;
        for i in 1..=k {
            v = lu.solve(&v).expect("validated sub-generator is invertible");
            fact *= i as f64;
        }
        fact * self.alpha.dot(&v)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    /// `alpha (sI - Q)^{-1} t`, the rational continuation of `E e^{-sX}`.
    pub fn resolvent(&self, s: Complex64) -> Result<Complex64> {
        let m = self.phases();
        let mat = DMatrix::<Complex64>::identity(m, m) * s - linalg::to_complex(&self.q);
        let t = self.exit.map(|v| Complex64::new(v, 0.0));
        let x = linalg::complex_solve(&mat, &t)
            .ok_or(Error::SingularResolvent { re: s.re, im: s.im })?;
        Ok(self.alpha.iter().zip(x.iter()).map(|(a, xi)| xi * *a).sum())
    }

    pub fn resolvent_real(&self, s: f64) -> Result<f64> {
        let m = self.phases();
        let mat = DMatrix::<f64>::identity(m, m) * s - &self.q;
        let x = mat
            .lu()
            .solve(&self.exit)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularResolvent { re: s, im: 0.0 })?;
        Ok(self.alpha.dot(&x))
    }

    pub fn spectral_abscissa(&self) -> f64 {
        match &self.structure {
            Structure::ErlangMixture(b) => b
                .iter()
                .map(|br| -br.rate)
                .fold(f64::NEG_INFINITY, f64::max),
            _ => linalg::spectral_abscissa(&self.q),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.structure {
            Structure::ErlangMixture(b) => {
                let br = if b.len() == 1 {
                    &b[0]
                } else {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = &b[b.len() - 1];
                    for br in b {
                        acc += br.weight;
                        if u < acc {
                            pick = br;
                            break;
                        }
                    }
                    pick
                };
                let mut s = 0.0;
                for _ in 0..br.shape {
                    let e: f64 = rng.sample(Exp1);
                    s += e;
                }
                s / br.rate
            }
            Structure::SumOfExponentials(rates) => rates
                .iter()
                .map(|r| {
                    let e: f64 = rng.sample(Exp1);
                    e / r
                })
                .sum(),
            Structure::General => self.sample_chain(rng),
        }
    }

    fn sample_chain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.phases();
        let u: f64 = rng.random();
        let mut state = self.alpha_cum.iter().position(|&c| u < c).unwrap_or(m - 1);
        let mut time = 0.0;
        loop {
            let row = &self.jumps[state];
            let e: f64 = rng.sample(Exp1);
            time += e / row.rate;
            let v: f64 = rng.random();
            let next = row
                .targets
                .iter()
                .find(|(_, c)| v < *c)
                .map(|(j, _)| *j)
                .unwrap_or(m);
            if next == m {
                return time;
            }
            state = next;
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    pub fn tilt(&self, kappa: Complex64) -> TiltedClaim {
        TiltedClaim::new(self, kappa)
    }

    /// Removes states that cannot be reached from the support of `alpha`.
    pub fn canonicalize(&self) -> Result<Self> {
        let m = self.phases();
        let mut reach = vec![false; m];
        let mut stack: Vec<usize> = (0..m).filter(|&i| self.alpha[i] > 0.0).collect();
        while let Some(i) = stack.pop() {
            if reach[i] {
                continue;
            }
            reach[i] = true;
            for j in 0..m {
                if j != i && self.q[(i, j)] > 0.0 && !reach[j] {
                    stack.push(j);
                }
            }
        }
        let keep: Vec<usize> = (0..m).filter(|&i| reach[i]).collect();
        if keep.len() == m {
            return Ok(self.clone());
        }
        let k = keep.len();
        let q = DMatrix::from_fn(k, k, |a, b| self.q[(keep[a], keep[b])]);
        let alpha = keep.iter().map(|&i| self.alpha[i]).collect();
        Self::new(alpha, q)
    }
}

/// Validates `(alpha, Q)` against the sub-generator and transience invariants.
pub fn validate(alpha: &DVector<f64>, q: &DMatrix<f64>) -> Result<()> {
    let m = alpha.len();
    if m == 0 || q.nrows() != m || q.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "alpha has {m} entries, Q is {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if alpha.iter().chain(q.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("phase-type parameters".into()));
    }
    if let Some((i, a)) = alpha.iter().enumerate().find(|(_, a)| **a < 0.0) {
        return Err(Error::NonStochasticAlpha(format!("alpha[{i}] = {a} < 0")));
    }
    let total: f64 = alpha.sum();
    if (total - 1.0).abs() > ALPHA_TOL {
        return Err(Error::NonStochasticAlpha(format!("entries sum to {total}")));
    }
    for i in 0..m {
        if q[(i, i)] >= 0.0 {
            return Err(Error::NotSubGenerator(format!(
                "diagonal entry Q[{i}][{i}] = {} is not negative",
                q[(i, i)]
            )));
        }
        for j in 0..m {
            if i != j && q[(i, j)] < 0.0 {
                return Err(Error::NotSubGenerator(format!(
                    "off-diagonal entry Q[{i}][{j}] = {} is negative",
                    q[(i, j)]
                )));
            }
        }
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        if off > -q[(i, i)] {
            return Err(Error::NotSubGenerator(format!(
                "row {i} has positive sum {}",
                off + q[(i, i)]
            )));
        }
    }
    let exit = -(q * DVector::from_element(m, 1.0));
    if !exit.iter().any(|&v| v > 0.0) {
        return Err(Error::NotTransient("exit vector t = -Q1 is zero".into()));
    }
    let sa = linalg::spectral_abscissa(q);
    if sa >= 0.0 {
        return Err(Error::NotTransient(format!(
            "spectral abscissa {sa} is not negative"
        )));
    }
    Ok(())
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::BadWeights(format!(
            "negative or non-finite weight in {w:?}"
        )));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > ALPHA_TOL {
        return Err(Error::BadWeights(format!("weights sum to {s}")));
    }
    Ok(())
}

fn check_rates(r: &[f64]) -> Result<()> {
    if let Some(bad) = r.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::BadRate(format!(
            "rate {bad} is not positive and finite"
        )));
    }
    Ok(())
}

/// Recognises generators made of constant-rate chains and returns the
/// equivalent Erlang branches (weights on interior states become shorter
/// Erlang laws).
fn detect_erlang_chains(alpha: &DVector<f64>, q: &DMatrix<f64>) -> Option<Vec<ErlangBranch>> {
    let m = alpha.len();
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let mut links = vec![false; m];
    for i in 0..m {
        let rate = -q[(i, i)];
        let targets: Vec<usize> = (0..m).filter(|&j| j != i && q[(i, j)] != 0.0).collect();
        match targets.as_slice() {
            [] => {}
            [j] if *j == i + 1 && rel(q[(i, *j)], rate) && rel(q[(*j, *j)], q[(i, i)]) => {
                links[i] = true
            }
            _ => return None,
        }
    }
    let mut branches = Vec::new();
    for i in 0..m {
        if alpha[i] > 0.0 {
            let mut len = 1;
            let mut k = i;
            while links[k] {
                k += 1;
                len += 1;
            }
            branches.push(ErlangBranch {
                weight: alpha[i],
                shape: len,
                rate: -q[(i, i)],
            });
        }
    }
    Some(branches)
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

pub(crate) fn erlang_pdf(shape: u32, rate: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if shape == 1 { rate } else { 0.0 };
    }
    let n = shape as f64;
    (n * rate.ln() + (n - 1.0) * x.ln() - rate * x - ln_factorial(shape - 1)).exp()
}

pub(crate) fn erlang_survival(shape: u32, rate: f64, x: f64) -> f64 {
    let y = rate * x;
    let mut term = (-y).exp();
    let mut sum = term;
    for i in 1..shape {
        term *= y / i as f64;
        sum += term;
    }
    sum
}

/// `(F(x), 1 - F(x))` of an Erlang law, each accurate in its own tail.
pub(crate) fn erlang_cdf_pair(shape: u32, rate: f64, x: f64) -> (f64, f64) {
    let y = rate * x;
    let n = shape as f64;
    if y > n {
        let s = erlang_survival(shape, rate, x);
        return (1.0 - s, s);
    }
    if y <= 0.0 {
        return (0.0, 1.0);
    }
    // lower tail e^{-y} sum_{i >= n} y^i / i!
    let mut term = (n * y.ln() - y - ln_factorial(shape)).exp();
    let mut c = 0.0;
    let mut i = n;
    while term > 1e-18 * c || c == 0.0 {
        c += term;
        i += 1.0;
        term *= y / i;
        if term == 0.0 {
            break;
        }
    }
    (c, 1.0 - c)
}

/// Exponentially tilted claim law: density proportional to
/// `e^{-kappa x} f(x)`, normalised by `alpha (kappa I - Q)^{-1} t`.
#[derive(Debug, Clone)]
pub struct TiltedClaim {
    pub base: PhaseType,
    pub kappa: Complex64,
    pub q_tilted: DMatrix<Complex64>,
    pub valid: bool,
    pub normalizer: Complex64,
}

impl TiltedClaim {
    fn new(base: &PhaseType, kappa: Complex64) -> Self {
        let m = base.phases();
        let q_tilted =
            linalg::to_complex(base.generator()) - DMatrix::<Complex64>::identity(m, m) * kappa;
        // eigenvalues of Q - kappa I are those of Q shifted by -kappa
        let valid = base.spectral_abscissa() - kappa.re < 0.0;
        let normalizer = base
            .resolvent(kappa)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        Self {
            base: base.clone(),
            kappa,
            q_tilted,
            valid,
            normalizer,
        }
    }

    /// Tilted density `e^{-kappa x} f(x) / normalizer`.
    pub fn density(&self, x: f64) -> Result<Complex64> {
        let f = self.base.pdf(x)?;
        Ok((-self.kappa * x).exp() * f / self.normalizer)
    }

    /// The tilted law as a proper phase-type distribution. Only defined for
    /// a valid real tilt; uses the h-transform with `h = (kappa I - Q)^{-1} t`
    /// so that the representation is again a sub-generator.
    pub fn law(&self) -> Option<PhaseType> {
        if !self.valid || self.kappa.im != 0.0 {
            return None;
        }
        let kappa = self.kappa.re;
        if let Some(branches) = self.base.erlang_branches() {
            let n = self.normalizer.re;
            let weights: Vec<f64> = branches
                .iter()
                .map(|b| b.weight * (b.rate / (b.rate + kappa)).powi(b.shape as i32) / n)
                .collect();
            let total: f64 = weights.iter().sum();
            let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let comps: Vec<(u32, f64)> =
                branches.iter().map(|b| (b.shape, b.rate + kappa)).collect();
            return PhaseType::erlang_mixture(&weights, &comps).ok();
        }
        let m = self.base.phases();
        let qt = self.base.generator() - DMatrix::<f64>::identity(m, m) * kappa;
        let h = (-&qt).lu().solve(self.base.exit())?;
        if h.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let norm = self.base.alpha().dot(&h);
        let alpha: Vec<f64> = (0..m).map(|i| self.base.alpha()[i] * h[i] / norm).collect();
        let total: f64 = alpha.iter().sum();
        let alpha = alpha.iter().map(|a| a / total).collect();
        let mut q = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let mut off = 0.0;
            for j in 0..m {
                if i != j {
                    q[(i, j)] = qt[(i, j)] * h[j] / h[i];
                    off += q[(i, j)];
                }
            }
            q[(i, i)] = -(off + self.base.exit()[i] / h[i]);
        }
        PhaseType::new(alpha, q).ok()
    }
}

/// JSON form of a claim law: either explicit parameters or a named family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseTypeSpec {
    Explicit {
        alpha: Vec<f64>,
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
    Family(FamilySpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Exponential {
        rate: f64,
    },
    Hyperexponential {
        weights: Vec<f64>,
        rates: Vec<f64>,
    },
    Erlang {
        shape: u32,
        rate: f64,
    },
    SumOfExponentials {
        rates: Vec<f64>,
    },
    ErlangMixture {
        weights: Vec<f64>,
        components: Vec<(u32, f64)>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn dickson_hipp() -> PhaseType {
        let q = DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -2.0, 2.0, 0.0, 0.0, 0.0, -2.0,
            ],
        );
        PhaseType::new(vec![0.5, 0.0, 0.5, 0.0], q).unwrap()
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn validate_examples() {
        let beta = 2.5;
        let e = PhaseType::new(vec![1.0], DMatrix::from_element(1, 1, -beta)).unwrap();
        assert_eq!(e.exit()[0], beta);
        dickson_hipp();
        let err = PhaseType::new(vec![1.0], DMatrix::from_element(1, 1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::NotSubGenerator(_)));
    }

    #[test]
    fn validate_error_paths() {
        let q = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        assert!(matches!(
            PhaseType::new(vec![0.6, 0.6], q.clone()),
            Err(Error::NonStochasticAlpha(_))
        ));
        assert!(matches!(
            PhaseType::new(vec![1.2, -0.2], q),
            Err(Error::NonStochasticAlpha(_))
        ));
        let pos_row = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -1.0]);
        assert!(matches!(
            PhaseType::new(vec![1.0, 0.0], pos_row),
            Err(Error::NotSubGenerator(_))
        ));
        let neg_off = DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 0.0, -1.0]);
        assert!(matches!(
            PhaseType::new(vec![1.0, 0.0], neg_off),
            Err(Error::NotSubGenerator(_))
        ));
        // closed class {0,1}: zero exit vector
        let closed = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        assert!(matches!(
            PhaseType::new(vec![1.0, 0.0], closed),
            Err(Error::NotTransient(_))
        ));
        // exit exists but a recurrent class {1,2} traps mass
        let trap = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 1.0, -1.0]);
        assert!(matches!(
            PhaseType::new(vec![1.0, 0.0, 0.0], trap),
            Err(Error::NotTransient(_))
        ));
    }

    #[test]
    fn pdf_examples() {
        let e = PhaseType::exponential(1.0).unwrap();
        assert!((e.pdf(0.0).unwrap() - 1.0).abs() < 1e-15);
        let er = PhaseType::erlang(2, 1.0).unwrap();
        assert!((er.pdf(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((er.without_structure().pdf(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        let dh = dickson_hipp().without_structure();
        let e1 = PhaseType::erlang(2, 1.0).unwrap();
        let e2 = PhaseType::erlang(2, 2.0).unwrap();
        let x = 0.7;
        let oracle = 0.5 * x * (-x as f64).exp() + 0.5 * 4.0 * x * (-2.0 * x as f64).exp();
        assert!((dh.pdf(x).unwrap() - oracle).abs() < 1e-14);
        assert!(
            (dh.pdf(x).unwrap() - 0.5 * e1.pdf(x).unwrap() - 0.5 * e2.pdf(x).unwrap()).abs()
                < 1e-14
        );
        assert!(matches!(e.pdf(-1.0), Err(Error::NegativeArgument(_))));
    }

    #[test]
    fn cdf_examples() {
        let e = PhaseType::exponential(0.7).unwrap();
        assert_eq!(e.cdf(0.0).unwrap(), 0.0);
        assert!((e.cdf(2.0).unwrap() - (1.0 - (-1.4f64).exp())).abs() < 1e-15);
        // Erlang(2,1) at 2: quadrature oracle of the density x e^{-x}
        let er = PhaseType::erlang(2, 1.0).unwrap().without_structure();
        let quad = simpson(|x| x * (-x as f64).exp(), 0.0, 2.0, 2000);
        let closed = 1.0 - 3.0 * (-2.0f64).exp();
        assert!((quad - closed).abs() < 1e-12);
        assert!((er.cdf(2.0).unwrap() - quad).abs() < 1e-12);
        assert!(matches!(e.cdf(-0.1), Err(Error::NegativeArgument(_))));
    }

    #[test]
    fn moment_examples() {
        let e = PhaseType::exponential(4.0).unwrap();
        assert!((e.moment(1) - 0.25).abs() < 1e-15);
        assert!((e.moment(2) - 2.0 / 16.0).abs() < 1e-15);
        assert!((PhaseType::erlang(2, 1.0).unwrap().mean() - 2.0).abs() < 1e-14);
        let q =
            DMatrix::from_row_slice(3, 3, &[-6e-4, 0.0, 0.0, 0.0, -2e-4, 2e-4, 0.0, 0.0, -2e-4]);
        let ph = PhaseType::new(vec![0.8673, 0.1327, 0.0], q).unwrap();
        // direct linear solve of (-Q) x = 1, by hand: x = (1/6e-4, 2/2e-4, 1/2e-4)
        let oracle = 0.8673 / 6e-4 + 0.1327 * 2.0 / 2e-4;
        assert!((ph.mean() - oracle).abs() < 1e-9 * oracle);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let draws = ph.sample_n(&mut rng, n);
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = ph.variance().sqrt() / (n as f64).sqrt();
        assert!((mean - oracle).abs() < 4.0 * sd, "{mean} vs {oracle}");
    }

    #[test]
    fn resolvent_examples() {
        let beta = 1.7;
        let e = PhaseType::exponential(beta).unwrap();
        let s = Complex64::new(0.4, -0.3);
        assert!((e.resolvent(s).unwrap() - beta / (s + beta)).norm() < 1e-15);
        assert!(
            (dickson_hipp()
                .resolvent(Complex64::new(0.0, 0.0))
                .unwrap()
                .re
                - 1.0)
                .abs()
                < 1e-14
        );
        let er = PhaseType::erlang(2, 1.0).unwrap();
        let r = er.resolvent_real(-0.35961).unwrap();
        assert!((r - 1.0 / (1.0f64 - 0.35961).powi(2)).abs() < 1e-12);
        assert!(matches!(
            e.resolvent(Complex64::new(-beta, 0.0)),
            Err(Error::SingularResolvent { .. })
        ));
    }

    #[test]
    fn constructors_are_canonical() {
        let er = PhaseType::erlang(2, 1.0).unwrap();
        assert_eq!(er.alpha().as_slice(), &[1.0, 0.0]);
        assert_eq!(
            er.generator(),
            &DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0])
        );
        assert_eq!(
            PhaseType::hyperexponential(&[1.0], &[3.0]).unwrap(),
            PhaseType::exponential(3.0).unwrap()
        );
        let mix = PhaseType::erlang_mixture(&[0.5, 0.5], &[(2, 1.0), (2, 2.0)]).unwrap();
        assert_eq!(mix, dickson_hipp());
        let soe = PhaseType::sum_of_exponentials(&[1.0, 3.0]).unwrap();
        assert_eq!(
            soe.generator(),
            &DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -3.0])
        );
        assert!(matches!(
            PhaseType::hyperexponential(&[0.5, 0.6], &[1.0, 2.0]),
            Err(Error::BadWeights(_))
        ));
        assert!(matches!(PhaseType::erlang(2, -1.0), Err(Error::BadRate(_))));
        assert!(matches!(PhaseType::erlang(0, 1.0), Err(Error::BadRate(_))));
    }

    #[test]
    fn explicit_chains_are_detected() {
        let q =
            DMatrix::from_row_slice(3, 3, &[-6e-4, 0.0, 0.0, 0.0, -2e-4, 2e-4, 0.0, 0.0, -2e-4]);
        let ph = PhaseType::new(vec![0.8673, 0.1327, 0.0], q).unwrap();
        let b = ph.erlang_branches().unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].shape, b[1].shape), (1, 2));
        // interior start of a chain is a shorter Erlang
        let q2 = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let ph2 = PhaseType::new(vec![0.5, 0.5], q2).unwrap();
        let b2 = ph2.erlang_branches().unwrap();
        assert_eq!((b2[0].shape, b2[1].shape), (2, 1));
        for x in [0.0, 0.3, 1.0, 4.0] {
            let g = ph2.without_structure();
            assert!((ph2.cdf(x).unwrap() - g.cdf(x).unwrap()).abs() < 1e-14);
        }
        // mixed rates along a chain fall back to the generic route
        let soe = PhaseType::new(
            vec![1.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -3.0]),
        )
        .unwrap();
        assert_eq!(soe.structure(), &Structure::General);
    }

    #[test]
    fn canonicalize_prunes_unreachable() {
        let q = DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -2.0, 2.0, 0.0, 0.0, -2.0]);
        let ph = PhaseType::new(vec![1.0, 0.0, 0.0], q).unwrap();
        let c = ph.canonicalize().unwrap();
        assert_eq!(c.phases(), 1);
        assert_eq!(c, PhaseType::exponential(1.0).unwrap());
    }

    #[test]
    fn sampling_matches_known_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let beta = 2.0;
        let e = PhaseType::exponential(beta).unwrap();
        let d = e.sample_n(&mut rng, n);
        let mean = d.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt());

        // Erlang(2,1) through the chain simulator; var of the sample
        // variance is (mu4 - sigma^4)/n with mu4 = 24 + ... = 30 for Erlang(2,1)
        let er = PhaseType::erlang(2, 1.0).unwrap().without_structure();
        let d = er.sample_n(&mut rng, n);
        let m = d.iter().sum::<f64>() / n as f64;
        let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = ((30.0 - 4.0) / n as f64).sqrt();
        assert!((v - 2.0).abs() < 4.0 * sd, "variance {v}");
    }

    #[test]
    fn sampling_dickson_hipp_ks() {
        let dh = dickson_hipp();
        for ph in [dh.clone(), dh.without_structure()] {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut d = ph.sample_n(&mut rng, 1_000_000);
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = d.len() as f64;
            let mut ks: f64 = 0.0;
            for (i, &x) in d.iter().enumerate().step_by(97) {
                let f = dh.cdf(x).unwrap();
                ks = ks
                    .max((f - i as f64 / n).abs())
                    .max(((i + 1) as f64 / n - f).abs());
            }
            assert!(ks < 0.002, "ks = {ks}");
        }
    }

    #[test]
    fn tilt_examples() {
        let beta = 2.0;
        let gamma = 0.5;
        let t = PhaseType::exponential(beta)
            .unwrap()
            .tilt(Complex64::new(-gamma, 0.0));
        assert!(t.valid);
        let law = t.law().unwrap();
        assert!((law.is_exponential().unwrap() - (beta - gamma)).abs() < 1e-15);
        assert!((t.normalizer.re - beta / (beta - gamma)).abs() < 1e-14);
        let bad = PhaseType::exponential(beta)
            .unwrap()
            .tilt(Complex64::new(-2.5, 0.0));
        assert!(!bad.valid);
        assert!(bad.law().is_none());

        let er = PhaseType::erlang(2, 1.0).unwrap();
        let t2 = er.tilt(Complex64::new(-1.39039, 0.0));
        assert!(!t2.valid);
        let sa = linalg::spectral_abscissa(&(er.generator() + DMatrix::identity(2, 2) * 1.39039));
        assert!((sa - 0.39039).abs() < 1e-12);
        let t1 = er.tilt(Complex64::new(-0.35961, 0.0));
        assert!(t1.valid);
        let l1 = t1.law().unwrap();
        assert!((l1.erlang_branches().unwrap()[0].rate - 0.64039).abs() < 1e-12);

        let near = dickson_hipp().tilt(Complex64::new(-1e-12, 0.0));
        assert!((near.normalizer.re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tilted_general_law_matches_density() {
        let ph = PhaseType::sum_of_exponentials(&[1.0, 3.0])
            .unwrap()
            .without_structure();
        let t = ph.tilt(Complex64::new(-0.4, 0.0));
        let law = t.law().unwrap();
        for x in [0.0, 0.2, 1.0, 3.0] {
            let d = t.density(x).unwrap();
            assert!(d.im.abs() < 1e-15);
            assert!((law.pdf(x).unwrap() - d.re).abs() < 1e-12);
        }
        let mass = simpson(|x| t.density(x).unwrap().re, 0.0, 60.0, 20000);
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn json_forms() {
        let explicit: PhaseTypeSpec =
            serde_json::from_str(r#"{"alpha": [1.0, 0.0], "Q": [[-1.0, 1.0], [0.0, -1.0]]}"#)
                .unwrap();
        let fam: PhaseTypeSpec = serde_json::from_str(
            r#"{"family": "erlang_mixture", "weights": [0.5, 0.5], "components": [[2, 1.0], [2, 2.0]]}"#,
        )
        .unwrap();
        assert_eq!(
            PhaseType::from_spec(&explicit).unwrap(),
            PhaseType::erlang(2, 1.0).unwrap()
        );
        assert_eq!(PhaseType::from_spec(&fam).unwrap(), dickson_hipp());
        let back = PhaseType::from_spec(&dickson_hipp().to_spec()).unwrap();
        assert_eq!(back, dickson_hipp());
        let bad: PhaseTypeSpec =
            serde_json::from_str(r#"{"alpha": [1.0], "Q": [[-1.0, 0.0]]}"#).unwrap();
        assert!(matches!(
            PhaseType::from_spec(&bad),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
