//! Infinite-horizon ruin for a single compound Poisson surplus line with
//! phase-type claims.
//!
//! The ruin function is the tail of a phase-type law, `psi(z) = alpha_+ e^{Q_+ z} 1`,
//! built from the ladder-height representation. Two evaluation routes are
//! provided: the matrix exponential itself and a spectral expansion over the
//! Lundberg roots (the eigenvalues of `Q_+`). The spectral route is what the
//! two-dimensional formula needs; the matrix route is the fallback whenever
//! the eigenvector basis is unreliable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::phasetype::PhaseType;

/// Imaginary parts below this are treated as zero when classifying roots.
pub const IMAG_TOL: f64 = 1e-9;
/// Relative eigenvalue gap below which roots count as repeated.
pub const REPEATED_GAP: f64 = 1e-7;
/// Eigenvector-matrix condition number beyond which spectral coefficients
/// are rejected.
pub const CONDITION_LIMIT: f64 = 1e10;
/// Tolerance on the (scaled) Lundberg-equation residual of a root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CompoundPoissonLine {
    pub lambda: f64,
    pub claim: PhaseType,
    pub premium: f64,
}

impl CompoundPoissonLine {
    pub fn new(lambda: f64, claim: PhaseType, premium: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidModel(format!(
                "arrival rate must be positive, got {lambda}"
            )));
        }
        if !(premium > 0.0) || !premium.is_finite() {
            return Err(Error::InvalidModel(format!(
                "premium rate must be positive, got {premium}"
            )));
        }
        Ok(Self {
            lambda,
            claim,
            premium,
        })
    }

    /// `lambda * E X / c`, the ruin probability at zero capital.
    pub fn load(&self) -> f64 {
        self.lambda * self.claim.mean() / self.premium
    }

    pub fn check_net_profit(&self) -> Result<()> {
        let claims_rate = self.lambda * self.claim.mean();
        if claims_rate < self.premium {
            Ok(())
        } else {
            Err(Error::NetProfitViolated {
                claims_rate,
                premium: self.premium,
            })
        }
    }

    /// Lévy exponent `log E e^{s (U(1) - u)} = c s + lambda (E e^{-sX} - 1)`,
    /// continued to wherever the resolvent exists.
    pub fn exponent(&self, s: Complex64) -> Result<Complex64> {
        Ok(s * self.premium + (self.claim.resolvent(s)? - 1.0) * self.lambda)
    }

    /// Positive `R` with `exponent(-R) = 0`, found by bisection on the real
    /// line below the pole of the moment generating function.
    pub fn adjustment_coefficient(&self) -> Result<f64> {
        self.check_net_profit()?;
        let pole = -self.claim.spectral_abscissa();
        let g = |r: f64| -> f64 {
            match self.claim.resolvent_real(-r) {
                Ok(m) if m.is_finite() && m > 0.0 => self.lambda * (m - 1.0) - self.premium * r,
                _ => f64::INFINITY,
            }
        };
        let mut lo = 0.0;
        let mut hi = pole;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Ladder-height representation `(alpha_+, Q_+)` of the maximal aggregate loss.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub alpha_plus: DVector<f64>,
    pub q_plus: DMatrix<f64>,
}

/// `alpha_+ = -(lambda/c) alpha Q^{-1}` and `Q_+ = Q + t alpha_+`.
pub fn ladder(line: &CompoundPoissonLine) -> Result<Ladder> {
    line.check_net_profit()?;
    let claim = &line.claim;
    let qt = claim.generator().transpose();
    let y = qt
        .lu()
        .solve(claim.alpha())
        .ok_or_else(|| Error::NotTransient("claim generator is singular".into()))?;
    let alpha_plus = y * (-line.lambda / line.premium);
    let q_plus = claim.generator() + claim.exit() * alpha_plus.transpose();
    Ok(Ladder { alpha_plus, q_plus })
}

impl Ladder {
    /// Matrix-exponential evaluation of the ruin function.
    pub fn psi(&self, z: f64) -> Result<f64> {
        if z < 0.0 || z.is_nan() {
            return Err(Error::NegativeArgument(z));
        }
        let e = linalg::expm_scaled(&self.q_plus, z)?;
        let ones = DVector::from_element(self.alpha_plus.len(), 1.0);
        Ok((self.alpha_plus.transpose() * e * ones)[(0, 0)].clamp(0.0, 1.0))
    }

    pub fn load(&self) -> f64 {
        self.alpha_plus.sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootClass {
    AllRealDistinct,
    RepeatedReal,
    ComplexPairs,
}

/// One distinct Lundberg root with its multiplicity and the coefficients
/// `vartheta_{i1}, ..., vartheta_{i n_i}` of `z^{j-1} e^{kappa z}`.
#[derive(Debug, Clone)]
pub struct SpectralRoot {
    pub kappa: Complex64,
    pub multiplicity: usize,
    pub coefficients: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct LadderSystem {
    pub ladder: Ladder,
    pub roots: Vec<SpectralRoot>,
    pub classification: RootClass,
    pub delta: Option<DMatrix<Complex64>>,
    pub condition_estimate: f64,
}

/// Eigendecomposition of `Q_+` and the expansion coefficients.
pub fn spectral(ladder: &Ladder) -> Result<LadderSystem> {
    let eig = linalg::eigen(&ladder.q_plus, IMAG_TOL);
    let m = eig.values.len();
    let radius = eig.values.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut repeated = false;
    for i in 0..m {
        for j in i + 1..m {
            if (eig.values[i] - eig.values[j]).norm() < REPEATED_GAP * radius {
                repeated = true;
            }
        }
    }
    let complex = eig.values.iter().any(|z| z.im.abs() > IMAG_TOL);

    if repeated {
        // group clustered eigenvalues; coefficients are left empty
        let mut roots: Vec<SpectralRoot> = Vec::new();
        for z in &eig.values {
            match roots
                .iter_mut()
                .find(|r| (r.kappa - z).norm() < REPEATED_GAP * radius)
            {
                Some(r) => r.multiplicity += 1,
                None => roots.push(SpectralRoot {
                    kappa: *z,
                    multiplicity: 1,
                    coefficients: Vec::new(),
                }),
            }
        }
        return Ok(LadderSystem {
            ladder: ladder.clone(),
            roots,
            classification: RootClass::RepeatedReal,
            delta: None,
            condition_estimate: f64::INFINITY,
        });
    }

    let delta = eig.vectors;
    let (cond, inv) = linalg::condition_1(&delta);
    let inv = match inv {
        Some(inv) if cond <= CONDITION_LIMIT => inv,
        _ => return Err(Error::IllConditioned(cond)),
    };
    let ap = ladder.alpha_plus.map(|v| Complex64::new(v, 0.0));
    let ap_delta = ap.transpose() * &delta;
    let inv_ones = &inv * DVector::from_element(m, Complex64::new(1.0, 0.0));
    let roots = (0..m)
        .map(|i| SpectralRoot {
            kappa: eig.values[i],
            multiplicity: 1,
            coefficients: vec![ap_delta[(0, i)] * inv_ones[i]],
        })
        .collect();
    Ok(LadderSystem {
        ladder: ladder.clone(),
        roots,
        classification: if complex {
            RootClass::ComplexPairs
        } else {
            RootClass::AllRealDistinct
        },
        delta: Some(delta),
        condition_estimate: cond,
    })
}

impl LadderSystem {
    /// Builds a system from exactly known roots and coefficients, e.g. a
    /// Jordan-block construction whose repeated roots cannot be recovered
    /// from floating-point eigenvalues.
    pub fn from_roots(ladder: Ladder, roots: Vec<SpectralRoot>) -> Self {
        let classification = if roots.iter().any(|r| r.multiplicity > 1) {
            RootClass::RepeatedReal
        } else if roots.iter().any(|r| r.kappa.im.abs() > IMAG_TOL) {
            RootClass::ComplexPairs
        } else {
            RootClass::AllRealDistinct
        };
        Self {
            ladder,
            roots,
            classification,
            delta: None,
            condition_estimate: f64::NAN,
        }
    }

    pub fn has_coefficients(&self) -> bool {
        self.roots
            .iter()
            .all(|r| r.coefficients.len() == r.multiplicity && r.multiplicity > 0)
    }

    /// Spectral evaluation `sum_i sum_j vartheta_ij z^{j-1} e^{kappa_i z}`.
    pub fn psi(&self, z: f64) -> Result<f64> {
        Ok(self.psi_complex(z)?.re)
    }

    pub fn psi_complex(&self, z: f64) -> Result<Complex64> {
        if z < 0.0 || z.is_nan() {
            return Err(Error::NegativeArgument(z));
        }
        if !self.has_coefficients() {
            return Err(Error::IncompleteSpectralData(format!(
                "{:?} system has no expansion coefficients",
                self.classification
            )));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for r in &self.roots {
            let e = (r.kappa * z).exp();
            let mut zp = 1.0;
            for c in &r.coefficients {
                total += c * e * zp;
                zp *= z;
            }
        }
        Ok(total)
    }

    pub fn dominant_root(&self) -> Complex64 {
        self.roots
            .iter()
            .map(|r| r.kappa)
            .fold(Complex64::new(f64::NEG_INFINITY, 0.0), |a, b| {
                if b.re > a.re {
                    b
                } else {
                    a
                }
            })
    }

    pub fn report(&self) -> SpectralReport {
        let m = self.ladder.alpha_plus.len();
        SpectralReport {
            alpha_plus: self.ladder.alpha_plus.iter().copied().collect(),
            q_plus: (0..m)
                .map(|i| (0..m).map(|j| self.ladder.q_plus[(i, j)]).collect())
                .collect(),
            classification: self.classification,
            condition_estimate: self.condition_estimate,
            roots: self
                .roots
                .iter()
                .map(|r| RootReport {
                    kappa: [r.kappa.re, r.kappa.im],
                    multiplicity: r.multiplicity,
                    vartheta: r.coefficients.iter().map(|c| [c.re, c.im]).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootReport {
    pub kappa: [f64; 2],
    pub multiplicity: usize,
    pub vartheta: Vec<[f64; 2]>,
}

/// JSON view of a [`LadderSystem`]; complex numbers as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub alpha_plus: Vec<f64>,
    pub q_plus: Vec<Vec<f64>>,
    pub classification: RootClass,
    pub condition_estimate: f64,
    pub roots: Vec<RootReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LundbergReport {
    pub residuals: Vec<([f64; 2], f64)>,
    pub max_residual: f64,
}

/// Residual of the Lundberg equation at `kappa`, scaled by the size of its
/// terms so the tolerance does not depend on the monetary unit.
pub fn lundberg_residual(line: &CompoundPoissonLine, kappa: Complex64) -> Result<f64> {
    let r = line.claim.resolvent(kappa)?;
    let value = kappa * line.premium + (r - 1.0) * line.lambda;
    let scale = (kappa.norm() * line.premium).max(line.lambda * (r.norm() + 1.0));
    Ok(value.norm() / scale)
}

/// Confirms every root of `system` solves the Lundberg equation of `line`.
pub fn lundberg_check(line: &CompoundPoissonLine, system: &LadderSystem) -> Result<LundbergReport> {
    let mut residuals = Vec::with_capacity(system.roots.len());
    let mut worst = 0.0f64;
    for r in &system.roots {
        let res = lundberg_residual(line, r.kappa)?;
        if res > ROOT_RESIDUAL_TOL {
            return Err(Error::RootResidualTooLarge {
                re: r.kappa.re,
                im: r.kappa.im,
                residual: res,
            });
        }
        worst = worst.max(res);
        residuals.push(([r.kappa.re, r.kappa.im], res));
    }
    Ok(LundbergReport {
        residuals,
        max_residual: worst,
    })
}

/// Ruin function of a line, spectral when available and matrix otherwise.
#[derive(Debug, Clone)]
pub struct RuinFunction {
    pub ladder: Ladder,
    pub system: Option<LadderSystem>,
}

impl RuinFunction {
    pub fn new(line: &CompoundPoissonLine) -> Result<Self> {
        let ladder = ladder(line)?;
        let system = match spectral(&ladder) {
            Ok(s) if s.has_coefficients() => Some(s),
            Ok(_) | Err(Error::IllConditioned(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { ladder, system })
    }

    pub fn psi(&self, z: f64) -> Result<f64> {
        match &self.system {
            Some(s) => Ok(s.psi(z)?.clamp(0.0, 1.0)),
            None => self.ladder.psi(z),
        }
    }
}
