use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::run_batches;
use super::nhpp::IntensityModel;
use super::{Method, RuinEstimate, SimulationConfig, TruncationRule};
use crate::error::{Error, Result};
use crate::onedim::CompoundPoissonLine;
use crate::phasetype::PhaseType;
use crate::twodim::NormalizedModel;

const MAX_DOUBLINGS: u32 = 10;

const TAG_TRUNCATED: u64 = 0x7275_696e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuinKind {
    /// At least one line ruined.
    Or,
    /// Both lines negative at the same instant.
    Sim,
}

/// Claim arrival process.
#[derive(Debug, Clone)]
pub enum Arrivals {
    Poisson(f64),
    /// Thinning of a rate-`bound` Poisson stream by `intensity(t) / bound`.
    Nhpp {
        intensity: IntensityModel,
        bound: f64,
    },
}

impl Arrivals {
    pub fn nhpp(intensity: IntensityModel, horizon: f64) -> Result<Self> {
        intensity.check(horizon)?;
        let bound = intensity.rate_bound(horizon);
        Ok(Arrivals::Nhpp { intensity, bound })
    }

    /// Expected number of arrivals in `[0, t]`.
    pub fn mean_count(&self, t: f64) -> f64 {
        match self {
            Arrivals::Poisson(l) => l * t,
            Arrivals::Nhpp { intensity, .. } => intensity.cumulative(t),
        }
    }
}

/// Next arrival strictly after `t` and no later than `until`.
#[inline]
pub fn next_arrival<R: Rng + ?Sized>(
    arrivals: &Arrivals,
    mut t: f64,
    until: f64,
    rng: &mut R,
) -> Option<f64> {
    match arrivals {
        Arrivals::Poisson(lambda) => {
            let e: f64 = rng.sample(Exp1);
            let next = t + e / lambda;
            (next <= until).then_some(next)
        }
        Arrivals::Nhpp { intensity, bound } => {
            if *bound <= 0.0 {
                return None;
            }
            loop {
                let e: f64 = rng.sample(Exp1);
                t += e / bound;
                if t > until {
                    return None;
                }
                let v: f64 = rng.random();
                if v * bound < intensity.rate(t) {
                    return Some(t);
                }
            }
        }
    }
}

/// Simulates one line `u + c t - S(t)` up to `t_end`. Returns the terminal
/// surplus when the line never drops below zero, `None` when ruined.
/// Between claims the surplus only increases, so claim instants suffice.
#[inline]
pub fn line_walk<R: Rng + ?Sized>(
    line: &CompoundPoissonLine,
    u: f64,
    t_end: f64,
    rng: &mut R,
) -> Option<f64> {
    let mut t = 0.0;
    let mut s = 0.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        t += e / line.lambda;
        if t > t_end {
            return Some(u + line.premium * t_end - s);
        }
        s += line.claim.sample(rng);
        if u + line.premium * t - s < 0.0 {
            return None;
        }
    }
}

/// Summary of a two-line path on `[0, horizon]`; minima are taken over the
/// initial point and post-claim values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub min_u1: f64,
    pub min_u2: f64,
    pub terminal_u1: f64,
    pub terminal_u2: f64,
    pub first_passage_u1: Option<f64>,
    pub first_passage_u2: Option<f64>,
    pub or_ruin_time: Option<f64>,
    pub sim_ruin_time: Option<f64>,
    pub claims: usize,
}

/// Event-driven simulation of the rescaled pair: one shared claim per
/// arrival subtracted from both lines.
pub fn simulate_two_dim_path<R: Rng + ?Sized>(
    nm: &NormalizedModel,
    arrivals: &Arrivals,
    horizon: f64,
    rng: &mut R,
) -> PathSummary {
    let mut out = PathSummary {
        min_u1: nm.u1,
        min_u2: nm.u2,
        terminal_u1: 0.0,
        terminal_u2: 0.0,
        first_passage_u1: None,
        first_passage_u2: None,
        or_ruin_time: None,
        sim_ruin_time: None,
        claims: 0,
    };
    let mut t = 0.0;
    let mut s = 0.0;
    while let Some(next) = next_arrival(arrivals, t, horizon, rng) {
        t = next;
        s += nm.claim.sample(rng);
        out.claims += 1;
        let x1 = nm.u1 + nm.c1 * t - s;
        let x2 = nm.u2 + nm.c2 * t - s;
        out.min_u1 = out.min_u1.min(x1);
        out.min_u2 = out.min_u2.min(x2);
        if x1 < 0.0 && out.first_passage_u1.is_none() {
            out.first_passage_u1 = Some(t);
        }
        if x2 < 0.0 && out.first_passage_u2.is_none() {
            out.first_passage_u2 = Some(t);
        }
        if (x1 < 0.0 || x2 < 0.0) && out.or_ruin_time.is_none() {
            out.or_ruin_time = Some(t);
        }
        if x1 < 0.0 && x2 < 0.0 && out.sim_ruin_time.is_none() {
            out.sim_ruin_time = Some(t);
        }
    }
    out.terminal_u1 = nm.u1 + nm.c1 * horizon - s;
    out.terminal_u2 = nm.u2 + nm.c2 * horizon - s;
    out
}

const ALIVE: u8 = 0;
const RUINED: u8 = 1;
const ESCAPED: u8 = 2;

#[derive(Debug, Clone, Copy)]
struct Walk {
    t: f64,
    s: f64,
    or: u8,
    sim: u8,
}

enum Surplus {
    Line { u: f64, c: f64 },
    Pair { u1: f64, u2: f64, c1: f64, c2: f64 },
}

struct Walker<'a> {
    surplus: Surplus,
    claim: &'a PhaseType,
    arrivals: &'a Arrivals,
    need_or: bool,
    need_sim: bool,
    escape: f64,
}

impl Walker<'_> {
    fn resolved(&self, w: &Walk) -> bool {
        (!self.need_or || w.or != ALIVE) && (!self.need_sim || w.sim != ALIVE)
    }

    fn advance(&self, w: &mut Walk, until: f64, rng: &mut ChaCha8Rng) {
        if self.resolved(w) {
            return;
        }
        while let Some(t) = next_arrival(self.arrivals, w.t, until, rng) {
            w.t = t;
            w.s += self.claim.sample(rng);
            match self.surplus {
                Surplus::Line { u, c } => {
                    let x = u + c * t - w.s;
                    if x < 0.0 {
                        w.or = RUINED;
                    } else if x >= self.escape {
                        w.or = ESCAPED;
                    }
                }
                Surplus::Pair { u1, u2, c1, c2 } => {
                    let x1 = u1 + c1 * t - w.s;
                    let x2 = u2 + c2 * t - w.s;
                    if w.or == ALIVE {
                        if x1 < 0.0 || x2 < 0.0 {
                            w.or = RUINED;
                        } else if x1.min(x2) >= self.escape {
                            w.or = ESCAPED;
                        }
                    }
                    if w.sim == ALIVE {
                        if x1 < 0.0 && x2 < 0.0 {
                            w.sim = RUINED;
                        } else if x1.max(x2) >= self.escape {
                            w.sim = ESCAPED;
                        }
                    }
                }
            }
            if self.resolved(w) {
                return;
            }
        }
        w.t = until;
    }
}

struct Outcome {
    or: RuinEstimate,
    sim: RuinEstimate,
}

/// Horizon-doubling driver. Every round extends the unresolved paths of each
/// batch with that batch's own stream, so the result is reproducible.
fn run_truncated(walker: &Walker, cfg: &SimulationConfig, tag: u64) -> Result<Outcome> {
    let adaptive = cfg.truncation == TruncationRule::LundbergAdaptive;
    let fresh = Walk {
        t: 0.0,
        s: 0.0,
        or: ALIVE,
        sim: ALIVE,
    };
    let mut horizon = cfg.horizon;
    let mut states: Vec<(ChaCha8Rng, Vec<Walk>)> =
        run_batches(cfg.paths, cfg.seed, tag, 1, |_, len, rng| {
            (rng.clone(), vec![fresh; len])
        });
    let pool = if cfg.workers > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .ok()
    } else {
        None
    };
    let n = cfg.paths as f64;
    let mut prev: Option<(f64, f64)> = None;

    for round in 0..=MAX_DOUBLINGS {
        let step = |(rng, walks): &mut (ChaCha8Rng, Vec<Walk>)| {
            for w in walks.iter_mut() {
                walker.advance(w, horizon, rng);
            }
        };
        match &pool {
            Some(p) => p.install(|| states.par_iter_mut().for_each(step)),
            None => states.iter_mut().for_each(step),
        }

        let (mut or_ruined, mut sim_ruined, mut alive) = (0usize, 0usize, 0usize);
        for (_, walks) in &states {
            for w in walks {
                or_ruined += (w.or == RUINED) as usize;
                sim_ruined += (w.sim == RUINED) as usize;
                alive += (!walker.resolved(w)) as usize;
            }
        }
        let p_or = or_ruined as f64 / n;
        let p_sim = sim_ruined as f64 / n;
        let se = |p: f64| (p * (1.0 - p) / n).sqrt();
        let finish = |bound: Option<f64>| {
            let make = |p: f64| {
                let mut e =
                    RuinEstimate::from_mean(p, se(p), cfg.paths, cfg.ci_level, Method::MonteCarlo);
                e.truncation_bound = bound;
                e.horizon = Some(horizon);
                e
            };
            Outcome {
                or: make(p_or),
                sim: make(p_sim),
            }
        };

        if !adaptive {
            return Ok(finish(None));
        }
        if alive == 0 {
            return Ok(finish(Some(cfg.escape_bound)));
        }
        if let Some((q_or, q_sim)) = prev {
            let stable = |p: f64, q: f64, need: bool| {
                !need || p - q < 0.25 * se(p) || (p == q && se(p) == 0.0)
            };
            if stable(p_or, q_or, walker.need_or) && stable(p_sim, q_sim, walker.need_sim) {
                let drift = if walker.need_or { p_or - q_or } else { 0.0 }
                    .max(if walker.need_sim { p_sim - q_sim } else { 0.0 });
                return Ok(finish(Some(cfg.escape_bound + drift)));
            }
        }
        prev = Some((p_or, p_sim));
        if round < MAX_DOUBLINGS {
            horizon *= 2.0;
        }
    }
    Err(Error::HorizonNotConverged(horizon))
}

fn escape_level(lower_line: &CompoundPoissonLine, bound: f64, lines: f64) -> Result<f64> {
    let r = lower_line.adjustment_coefficient()?;
    Ok((lines / bound).ln() / r)
}

/// Ruin probability of the pair by plain simulation. With
/// [`TruncationRule::FixedHorizon`] this is the finite-horizon probability
/// on `[0, cfg.horizon]`; with [`TruncationRule::LundbergAdaptive`] it
/// targets the infinite horizon.
pub fn estimate_ruin_mc(
    nm: &NormalizedModel,
    kind: RuinKind,
    cfg: &SimulationConfig,
) -> Result<RuinEstimate> {
    estimate_ruin_mc_with(nm, kind, &Arrivals::Poisson(nm.lambda), cfg)
}

pub fn estimate_ruin_mc_with(
    nm: &NormalizedModel,
    kind: RuinKind,
    arrivals: &Arrivals,
    cfg: &SimulationConfig,
) -> Result<RuinEstimate> {
    let (or, sim) = estimate_pair(
        nm,
        arrivals,
        cfg,
        kind == RuinKind::Or,
        kind == RuinKind::Sim,
    )?;
    Ok(match kind {
        RuinKind::Or => or,
        RuinKind::Sim => sim,
    })
}

/// OR and SIM estimates from the same set of paths, so `sim <= or` holds
/// path by path.
pub fn estimate_pair(
    nm: &NormalizedModel,
    arrivals: &Arrivals,
    cfg: &SimulationConfig,
    need_or: bool,
    need_sim: bool,
) -> Result<(RuinEstimate, RuinEstimate)> {
    cfg.validate()?;
    let adaptive = cfg.truncation == TruncationRule::LundbergAdaptive;
    let escape = if adaptive {
        if !matches!(arrivals, Arrivals::Poisson(_)) {
            return Err(Error::InvalidConfig(
                "lundberg_adaptive truncation needs homogeneous Poisson arrivals; use fixed_horizon".into(),
            ));
        }
        let lines = if need_or { 2.0 } else { 1.0 };
        escape_level(&nm.lower_line()?, cfg.escape_bound, lines)?
    } else {
        f64::INFINITY
    };
    let walker = Walker {
        surplus: Surplus::Pair {
            u1: nm.u1,
            u2: nm.u2,
            c1: nm.c1,
            c2: nm.c2,
        },
        claim: &nm.claim,
        arrivals,
        need_or,
        need_sim,
        escape,
    };
    let out = run_truncated(&walker, cfg, TAG_TRUNCATED)?;
    Ok((out.or, out.sim))
}

/// Ruin probability of a single line by plain simulation.
pub fn estimate_line_ruin_mc(
    line: &CompoundPoissonLine,
    u: f64,
    cfg: &SimulationConfig,
) -> Result<RuinEstimate> {
    cfg.validate()?;
    let escape = if cfg.truncation == TruncationRule::LundbergAdaptive {
        escape_level(line, cfg.escape_bound, 1.0)?
    } else {
        f64::INFINITY
    };
    let arrivals = Arrivals::Poisson(line.lambda);
    let walker = Walker {
        surplus: Surplus::Line { u, c: line.premium },
        claim: &line.claim,
        arrivals: &arrivals,
        need_or: true,
        need_sim: false,
        escape,
    };
    Ok(run_truncated(&walker, cfg, TAG_TRUNCATED)?.or)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use crate::onedim::ladder;

    fn erlang_nm(u1: f64, u2: f64) -> NormalizedModel {
        let claim = PhaseType::erlang(2, 1.0).unwrap();
        NormalizedModel::new(1.0, claim, 2.8, 2.4, u1, u2).unwrap()
    }

    #[test]
    fn no_claims_leaves_capitals() {
        let nm = erlang_nm(1.0, 2.0);
        let mut rng = stream(3, 0, 0);
        // horizon so short that no claim arrives with overwhelming probability
        let p = simulate_two_dim_path(&nm, &Arrivals::Poisson(1.0), 1e-12, &mut rng);
        assert_eq!(p.claims, 0);
        assert_eq!((p.min_u1, p.min_u2), (1.0, 2.0));
    }

    #[test]
    fn terminal_mean_follows_drift() {
        let nm = erlang_nm(1.0, 2.0);
        let horizon = 3.0;
        let arr = Arrivals::Poisson(nm.lambda);
        let m = crate::mc::run_paths(1_000_000, 11, 0, 1, 1, |rng, row| {
            row[0] = simulate_two_dim_path(&nm, &arr, horizon, rng).terminal_u1;
        });
        // Var S(t) = lambda E[X^2] t = 6 t for Erlang(2,1)
        let want = nm.u1 + (nm.c1 - nm.lambda * 2.0) * horizon;
        let sd = (6.0 * horizon / 1e6f64).sqrt();
        assert!(
            (m.mean(0) - want).abs() < 4.0 * sd,
            "{} vs {want}",
            m.mean(0)
        );
    }

    #[test]
    fn or_at_zero_capital_matches_pollaczek_khinchine() {
        let nm = erlang_nm(0.0, 0.0);
        let cfg = SimulationConfig::with_paths(200_000, 4);
        let est = estimate_ruin_mc(&nm, RuinKind::Or, &cfg).unwrap();
        let pk = nm.lambda * 2.0 / nm.c2;
        assert!(
            (est.value - pk).abs() < 3.0 * est.stderr,
            "{} vs {pk}",
            est.value
        );
        let sim = estimate_ruin_mc(&nm, RuinKind::Sim, &cfg).unwrap();
        assert!(sim.value <= est.value);
    }

    #[test]
    fn embedded_line_matches_matrix_formula() {
        // u2 so large the second line never binds: OR ruin is ruin of line 1
        let claim = PhaseType::erlang(2, 1.0).unwrap();
        let nm = NormalizedModel::new(1.0, claim.clone(), 4.0, 3.0, 1.0, 1e6).unwrap();
        let cfg = SimulationConfig::with_paths(200_000, 5);
        let est = estimate_ruin_mc(&nm, RuinKind::Or, &cfg).unwrap();
        let line = CompoundPoissonLine::new(1.0, claim, 4.0).unwrap();
        let psi = ladder(&line).unwrap().psi(1.0).unwrap();
        assert!(
            (est.value - psi).abs() < 3.0 * est.stderr,
            "{} vs {psi}",
            est.value
        );
        assert!(est.truncation_bound.is_some());
    }

    #[test]
    fn fixed_horizon_is_reproducible_and_bounded() {
        let nm = erlang_nm(1.0, 3.0);
        let mut cfg = SimulationConfig::with_paths(50_000, 9);
        cfg.truncation = TruncationRule::FixedHorizon;
        cfg.horizon = 5.0;
        let a = estimate_ruin_mc(&nm, RuinKind::Or, &cfg).unwrap();
        let b = estimate_ruin_mc(&nm, RuinKind::Or, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.workers = 3;
        let c = estimate_ruin_mc(&nm, RuinKind::Or, &cfg).unwrap();
        assert_eq!(a, c);
        cfg.horizon = 50.0;
        let longer = estimate_ruin_mc(&nm, RuinKind::Or, &cfg).unwrap();
        assert!(longer.value >= a.value - 3.0 * a.stderr);
        assert_eq!(a.horizon, Some(5.0));
    }

    #[test]
    fn sim_never_exceeds_or_on_common_paths() {
        let nm = erlang_nm(0.5, 3.0);
        let cfg = SimulationConfig::with_paths(20_000, 1);
        let (or, sim) =
            estimate_pair(&nm, &Arrivals::Poisson(nm.lambda), &cfg, true, true).unwrap();
        assert!(sim.value <= or.value);
    }

    #[test]
    fn adaptive_rejects_nhpp() {
        let nm = erlang_nm(0.5, 3.0);
        let intensity = IntensityModel::constant(1.0);
        let arr = Arrivals::nhpp(intensity, 10.0).unwrap();
        let cfg = SimulationConfig::with_paths(1000, 1);
        assert!(matches!(
            estimate_ruin_mc_with(&nm, RuinKind::Or, &arr, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
