//! Insurer/reinsurer quota-share system. After rescaling both companies see
//! the same claims, `U_i(t) = u_i + c_i t - S(t)` with `c1 > c2`, so
//! `U_1 - U_2` is deterministic and the lines swap order at most once.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{line_walk, run_paths, Method, RuinEstimate, RuinKind, SimulationConfig};
use crate::onedim::{CompoundPoissonLine, LadderSystem, RuinFunction};
use crate::phasetype::{PhaseType, TiltedClaim};

const TAG_PLAIN: u64 = 0x706c_6169;
const TAG_TILTED: u64 = 0x7469_6c74;

#[derive(Debug, Clone, PartialEq)]
pub struct QuotaShareModel {
    pub lambda: f64,
    pub claim: PhaseType,
    pub theta1: f64,
    pub theta2: f64,
    pub delta: f64,
    pub x1: f64,
    pub x2: f64,
}

impl QuotaShareModel {
    pub fn new(
        lambda: f64,
        claim: PhaseType,
        theta1: f64,
        theta2: f64,
        delta: f64,
        x1: f64,
        x2: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidModel(format!(
                "arrival rate must be positive, got {lambda}"
            )));
        }
        if !(theta1 > theta2 && theta2 > 0.0) || !theta1.is_finite() {
            return Err(Error::InvalidModel(format!(
                "loadings must satisfy theta1 > theta2 > 0, got {theta1}, {theta2}"
            )));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidModel(format!(
                "share must lie in (0,1), got {delta}"
            )));
        }
        if !(x1 >= 0.0 && x2 >= 0.0) || !x1.is_finite() || !x2.is_finite() {
            return Err(Error::InvalidModel(format!(
                "capitals must be nonnegative, got {x1}, {x2}"
            )));
        }
        Ok(Self {
            lambda,
            claim,
            theta1,
            theta2,
            delta,
            x1,
            x2,
        })
    }

    pub fn normalize(&self) -> Result<NormalizedModel> {
        if self.delta <= 0.0 || self.delta >= 1.0 {
            return Err(Error::DegenerateShare(self.delta));
        }
        let rate = self.lambda * self.claim.mean();
        NormalizedModel::new(
            self.lambda,
            self.claim.clone(),
            (1.0 + self.theta1) * rate,
            (1.0 + self.theta2) * rate,
            self.x1 / self.delta,
            self.x2 / (1.0 - self.delta),
        )
    }
}

/// Rescaled system: capitals `u1 = x1/delta`, `u2 = x2/(1-delta)` and
/// premium rates `c_i = (1 + theta_i) lambda E X`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedModel {
    pub lambda: f64,
    pub claim: PhaseType,
    pub c1: f64,
    pub c2: f64,
    pub u1: f64,
    pub u2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `u1 >= u2`: the lines never cross and one of them decides.
    OneDimensional,
    /// `u1 < u2`: the lines cross at the deterministic time `T`.
    Crossing,
}

impl NormalizedModel {
    pub fn new(lambda: f64, claim: PhaseType, c1: f64, c2: f64, u1: f64, u2: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidModel(format!(
                "arrival rate must be positive, got {lambda}"
            )));
        }
        if !(c1 > c2 && c2 > 0.0) || !c1.is_finite() {
            return Err(Error::InvalidModel(format!(
                "premium rates must satisfy c1 > c2 > 0, got {c1}, {c2}"
            )));
        }
        if !(u1 >= 0.0 && u2 >= 0.0) || !u1.is_finite() || !u2.is_finite() {
            return Err(Error::InvalidModel(format!(
                "capitals must be nonnegative, got {u1}, {u2}"
            )));
        }
        Ok(Self {
            lambda,
            claim,
            c1,
            c2,
            u1,
            u2,
        })
    }

    pub fn upper_line(&self) -> Result<CompoundPoissonLine> {
        CompoundPoissonLine::new(self.lambda, self.claim.clone(), self.c1)
    }

    pub fn lower_line(&self) -> Result<CompoundPoissonLine> {
        CompoundPoissonLine::new(self.lambda, self.claim.clone(), self.c2)
    }

    pub fn regime(&self) -> Regime {
        if self.u1 >= self.u2 {
            Regime::OneDimensional
        } else {
            Regime::Crossing
        }
    }

    /// Time at which the drift lines meet, `(u2 - u1)/(c1 - c2)`.
    pub fn crossing_time(&self) -> Result<f64> {
        if self.u1 > self.u2 {
            return Err(Error::RegimeOneDimensional);
        }
        Ok((self.u2 - self.u1) / (self.c1 - self.c2))
    }
}

/// Exponential change of measure of a line at root `kappa`.
#[derive(Debug, Clone)]
pub struct TiltedSystem {
    pub kappa: Complex64,
    /// `c kappa + lambda (E e^{-kappa X} - 1)`.
    pub phi: Complex64,
    pub lambda_tilde: Complex64,
    pub claim_tilted: TiltedClaim,
    pub valid: bool,
}

impl TiltedSystem {
    /// The tilted line, available for valid real tilts.
    pub fn line(&self, premium: f64) -> Option<CompoundPoissonLine> {
        if !self.valid {
            return None;
        }
        let law = self.claim_tilted.law()?;
        CompoundPoissonLine::new(self.lambda_tilde.re, law, premium).ok()
    }
}

pub fn tilted_line(line: &CompoundPoissonLine, kappa: Complex64) -> TiltedSystem {
    let claim_tilted = line.claim.tilt(kappa);
    let r = claim_tilted.normalizer;
    let phi = kappa * line.premium + (r - 1.0) * line.lambda;
    let lambda_tilde = r * line.lambda;
    let valid = claim_tilted.valid
        && kappa.im == 0.0
        && lambda_tilde.re > 0.0
        && lambda_tilde.re.is_finite();
    TiltedSystem {
        kappa,
        phi,
        lambda_tilde,
        claim_tilted,
        valid,
    }
}

/// Tilt of the upper line, the one simulated up to `T` for OR ruin.
pub fn tilted_system(nm: &NormalizedModel, kappa: Complex64) -> Result<TiltedSystem> {
    Ok(tilted_line(&nm.upper_line()?, kappa))
}

/// `P(inf_{s <= T} U(s) > 0)` for a single line.
pub fn survival_to_t(
    line: &CompoundPoissonLine,
    u: f64,
    t: f64,
    cfg: &SimulationConfig,
) -> Result<RuinEstimate> {
    check_inputs(u, t, cfg)?;
    if t == 0.0 {
        let mut e = RuinEstimate::from_mean(1.0, 0.0, cfg.paths, cfg.ci_level, Method::MonteCarlo);
        e.horizon = Some(0.0);
        return Ok(e);
    }
    let m = run_paths(
        cfg.paths,
        cfg.seed,
        TAG_PLAIN,
        cfg.workers,
        1,
        |rng, row| {
            row[0] = line_walk(line, u, t, rng).is_some() as u8 as f64;
        },
    );
    let mut e = RuinEstimate::from_mean(
        m.mean(0),
        m.stderr(0),
        cfg.paths,
        cfg.ci_level,
        Method::MonteCarlo,
    );
    e.horizon = Some(t);
    Ok(e)
}

fn check_inputs(u: f64, t: f64, cfg: &SimulationConfig) -> Result<()> {
    if cfg.paths < 100 {
        return Err(Error::BadSampleSize(cfg.paths));
    }
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::NegativeArgument(u));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeArgument(t));
    }
    Ok(())
}

/// Complex Monte Carlo mean with componentwise standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub re: f64,
    pub im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub paths: usize,
}

impl ComplexEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn exact(v: Complex64, paths: usize) -> Self {
        Self {
            re: v.re,
            im: v.im,
            stderr_re: 0.0,
            stderr_im: 0.0,
            paths,
        }
    }

    /// Distance in combined standard errors, taking the worse component.
    pub fn z_distance(&self, other: &ComplexEstimate) -> f64 {
        let z = |a: f64, b: f64, sa: f64, sb: f64| {
            let se = (sa * sa + sb * sb).sqrt();
            if se == 0.0 {
                if a == b {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (a - b).abs() / se
            }
        };
        z(self.re, other.re, self.stderr_re, other.stderr_re).max(z(
            self.im,
            other.im,
            self.stderr_im,
            other.stderr_im,
        ))
    }
}

#[inline]
fn weight(z: f64, kappa: Complex64, j: u32) -> Complex64 {
    (kappa * z).exp() * z.powi(j as i32 - 1)
}

/// `E[U(T)^{j-1} e^{kappa U(T)}; inf_{s <= T} U(s) > 0]` under the
/// original measure. The weight is bounded on surviving paths for
/// `Re kappa < 0`, so every root is handled the same way.
pub fn weighted_survival_functional(
    line: &CompoundPoissonLine,
    u: f64,
    t: f64,
    kappa: Complex64,
    j: u32,
    cfg: &SimulationConfig,
) -> Result<ComplexEstimate> {
    check_inputs(u, t, cfg)?;
    if !(kappa.re < 0.0) || j == 0 {
        return Err(Error::InvalidModel(format!(
            "need Re kappa < 0 and j >= 1, got {kappa}, {j}"
        )));
    }
    if t == 0.0 {
        return Ok(ComplexEstimate::exact(weight(u, kappa, j), cfg.paths));
    }
    let m = run_paths(
        cfg.paths,
        cfg.seed,
        TAG_PLAIN,
        cfg.workers,
        2,
        |rng, row| {
            if let Some(z) = line_walk(line, u, t, rng) {
                let w = weight(z, kappa, j);
                row[0] = w.re;
                row[1] = w.im;
            }
        },
    );
    Ok(ComplexEstimate {
        re: m.mean(0),
        im: m.mean(1),
        stderr_re: m.stderr(0),
        stderr_im: m.stderr(1),
        paths: cfg.paths,
    })
}

/// Same functional through the change of measure:
/// `e^{phi T} e^{kappa u} Q(inf_{s <= T} U(s) > 0)`, with the survival
/// probability simulated under the tilted parameters.
pub fn tilted_survival_functional(
    line: &CompoundPoissonLine,
    u: f64,
    t: f64,
    kappa: f64,
    cfg: &SimulationConfig,
) -> Result<ComplexEstimate> {
    check_inputs(u, t, cfg)?;
    let ts = tilted_line(line, Complex64::new(kappa, 0.0));
    let tilted = ts.line(line.premium).ok_or_else(|| {
        Error::InvalidModel(format!(
            "tilt at kappa = {kappa} does not give a proper claim law"
        ))
    })?;
    let scale = (ts.phi.re * t + kappa * u).exp();
    if t == 0.0 {
        return Ok(ComplexEstimate::exact(
            Complex64::new(scale, 0.0),
            cfg.paths,
        ));
    }
    let m = run_paths(
        cfg.paths,
        cfg.seed,
        TAG_TILTED,
        cfg.workers,
        1,
        |rng, row| {
            row[0] = line_walk(&tilted, u, t, rng).is_some() as u8 as f64;
        },
    );
    Ok(ComplexEstimate {
        re: scale * m.mean(0),
        im: 0.0,
        stderr_re: scale * m.stderr(0),
        stderr_im: 0.0,
        paths: cfg.paths,
    })
}

/// One term `vartheta_ij E[U(T)^{j-1} e^{kappa_i U(T)}; survival]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub kappa: [f64; 2],
    pub j: u32,
    pub vartheta: [f64; 2],
    pub functional: [f64; 2],
    pub stderr: [f64; 2],
    /// Real part of `vartheta * functional`.
    pub contribution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Closed form of the one-dimensional ruin function.
    Analytic,
    /// Survival and root terms estimated on common paths.
    Spectral,
    /// Per-path matrix-exponential ruin function, used when no usable
    /// spectral expansion exists.
    Matrix,
    /// Single-root exponential formula with a tilted survival estimate.
    ChangeOfMeasure,
    /// Plain simulation of both lines.
    Simulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinReport {
    pub kind: RuinKind,
    pub estimate: RuinEstimate,
    pub regime: Regime,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub crossing_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survival: Option<RuinEstimate>,
    pub terms: Vec<TermReport>,
    pub route: Route,
}

fn term_list(system: &LadderSystem) -> Vec<(Complex64, u32, Complex64)> {
    system
        .roots
        .iter()
        .flat_map(|r| {
            r.coefficients
                .iter()
                .enumerate()
                .map(move |(j, c)| (r.kappa, j as u32 + 1, *c))
        })
        .collect()
}

fn analytic_terms(f: &RuinFunction, z: f64) -> Vec<TermReport> {
    let Some(system) = &f.system else {
        return Vec::new();
    };
    term_list(system)
        .into_iter()
        .map(|(kappa, j, theta)| {
            let w = weight(z, kappa, j);
            TermReport {
                kappa: [kappa.re, kappa.im],
                j,
                vartheta: [theta.re, theta.im],
                functional: [w.re, w.im],
                stderr: [0.0, 0.0],
                contribution: (theta * w).re,
            }
        })
        .collect()
}

/// `1 - P(survive to T) + E[psi_after(U(T)); survive]` for the line that
/// binds before `T`, with `psi_after` the ruin function of the line that
/// binds afterwards. All pieces come from one set of paths.
fn master(
    before: &CompoundPoissonLine,
    u: f64,
    t: f64,
    after: &RuinFunction,
    cfg: &SimulationConfig,
) -> Result<(RuinEstimate, RuinEstimate, Vec<TermReport>, Route)> {
    check_inputs(u, t, cfg)?;
    let terms = after.system.as_ref().map(term_list).unwrap_or_default();
    let width = 2 + 2 * terms.len();
    let m = run_paths(
        cfg.paths,
        cfg.seed,
        TAG_PLAIN,
        cfg.workers,
        width,
        |rng, row| {
            let Some(z) = line_walk(before, u, t, rng) else {
                row[0] = 1.0;
                return;
            };
            row[1] = 1.0;
            if after.system.is_none() {
                row[0] = after.ladder.psi(z).unwrap_or(f64::NAN);
                return;
            }
            let mut y = 0.0;
            for (k, &(kappa, j, theta)) in terms.iter().enumerate() {
                let w = weight(z, kappa, j);
                row[2 + 2 * k] = w.re;
                row[3 + 2 * k] = w.im;
                y += (theta * w).re;
            }
            row[0] = y;
        },
    );
    let value = m.mean(0);
    if !value.is_finite() {
        return Err(Error::NonFinite("master formula estimate".into()));
    }
    let method = if after.system.is_some() {
        Method::MonteCarlo
    } else {
        Method::Hybrid
    };
    let mut est = RuinEstimate::from_mean(value, m.stderr(0), cfg.paths, cfg.ci_level, method);
    est.horizon = Some(t);
    let mut surv = RuinEstimate::from_mean(
        m.mean(1),
        m.stderr(1),
        cfg.paths,
        cfg.ci_level,
        Method::MonteCarlo,
    );
    surv.horizon = Some(t);
    let reports = terms
        .iter()
        .enumerate()
        .map(|(k, &(kappa, j, theta))| {
            let w = Complex64::new(m.mean(2 + 2 * k), m.mean(3 + 2 * k));
            TermReport {
                kappa: [kappa.re, kappa.im],
                j,
                vartheta: [theta.re, theta.im],
                functional: [w.re, w.im],
                stderr: [m.stderr(2 + 2 * k), m.stderr(3 + 2 * k)],
                contribution: (theta * w).re,
            }
        })
        .collect();
    let route = if after.system.is_some() {
        Route::Spectral
    } else {
        Route::Matrix
    };
    Ok((est, surv, reports, route))
}

/// Probability that at least one company is ruined.
pub fn ruin_or(nm: &NormalizedModel, cfg: &SimulationConfig) -> Result<RuinReport> {
    let lower = RuinFunction::new(&nm.lower_line()?)?;
    match nm.regime() {
        Regime::OneDimensional => Ok(RuinReport {
            kind: RuinKind::Or,
            estimate: RuinEstimate::analytic(lower.psi(nm.u2)?),
            regime: Regime::OneDimensional,
            crossing_time: None,
            survival: None,
            terms: analytic_terms(&lower, nm.u2),
            route: Route::Analytic,
        }),
        Regime::Crossing => {
            let t = nm.crossing_time()?;
            let (estimate, survival, terms, route) =
                master(&nm.upper_line()?, nm.u1, t, &lower, cfg)?;
            Ok(RuinReport {
                kind: RuinKind::Or,
                estimate,
                regime: Regime::Crossing,
                crossing_time: Some(t),
                survival: Some(survival),
                terms,
                route,
            })
        }
    }
}

/// Probability that both companies are negative at the same instant. The
/// pointwise upper line decides: `U_2` before `T`, `U_1` afterwards.
pub fn ruin_sim(nm: &NormalizedModel, cfg: &SimulationConfig) -> Result<RuinReport> {
    let upper = RuinFunction::new(&nm.upper_line()?)?;
    match nm.regime() {
        Regime::OneDimensional => Ok(RuinReport {
            kind: RuinKind::Sim,
            estimate: RuinEstimate::analytic(upper.psi(nm.u1)?),
            regime: Regime::OneDimensional,
            crossing_time: None,
            survival: None,
            terms: analytic_terms(&upper, nm.u1),
            route: Route::Analytic,
        }),
        Regime::Crossing => {
            let t = nm.crossing_time()?;
            let (estimate, survival, terms, route) =
                master(&nm.lower_line()?, nm.u2, t, &upper, cfg)?;
            Ok(RuinReport {
                kind: RuinKind::Sim,
                estimate,
                regime: Regime::Crossing,
                crossing_time: Some(t),
                survival: Some(survival),
                terms,
                route,
            })
        }
    }
}

/// OR ruin for exponential claims: one root `-gamma` with
/// `gamma = beta - lambda/c2` and the survival term of the root evaluated
/// under the tilted measure.
pub fn ruin_or_exponential(nm: &NormalizedModel, cfg: &SimulationConfig) -> Result<RuinReport> {
    let beta = nm.claim.is_exponential().ok_or(Error::NotExponential)?;
    let lower = nm.lower_line()?;
    lower.check_net_profit()?;
    let gamma = beta - nm.lambda / nm.c2;
    let theta = nm.lambda / (nm.c2 * beta);
    let kappa = Complex64::new(-gamma, 0.0);
    match nm.regime() {
        Regime::OneDimensional => {
            let w = (-gamma * nm.u2).exp();
            Ok(RuinReport {
                kind: RuinKind::Or,
                estimate: RuinEstimate::analytic(theta * w),
                regime: Regime::OneDimensional,
                crossing_time: None,
                survival: None,
                terms: vec![TermReport {
                    kappa: [-gamma, 0.0],
                    j: 1,
                    vartheta: [theta, 0.0],
                    functional: [w, 0.0],
                    stderr: [0.0, 0.0],
                    contribution: theta * w,
                }],
                route: Route::Analytic,
            })
        }
        Regime::Crossing => {
            let t = nm.crossing_time()?;
            let upper = nm.upper_line()?;
            let survival = survival_to_t(&upper, nm.u1, t, cfg)?;
            let tilted = tilted_survival_functional(&upper, nm.u1, t, kappa.re, cfg)?;
            let raw = 1.0 - survival.raw_value + theta * tilted.re;
            let se = (survival.stderr.powi(2) + (theta * tilted.stderr_re).powi(2)).sqrt();
            let mut estimate =
                RuinEstimate::from_mean(raw, se, cfg.paths, cfg.ci_level, Method::MonteCarlo);
            estimate.horizon = Some(t);
            Ok(RuinReport {
                kind: RuinKind::Or,
                estimate,
                regime: Regime::Crossing,
                crossing_time: Some(t),
                survival: Some(survival),
                terms: vec![TermReport {
                    kappa: [-gamma, 0.0],
                    j: 1,
                    vartheta: [theta, 0.0],
                    functional: [tilted.re, 0.0],
                    stderr: [tilted.stderr_re, 0.0],
                    contribution: theta * tilted.re,
                }],
                route: Route::ChangeOfMeasure,
            })
        }
    }
}
