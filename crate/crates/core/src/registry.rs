//! Name-keyed registries of interchangeable algorithms, so configuration
//! files and the CLI can select a strategy at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fit::{
    AdMinEstimator, AdMinOptions, EmEstimator, EmOptions, GofStatistics, SeverityEstimator,
    Statistic,
};
use crate::mc::{estimate_pair, Arrivals, RuinKind, SimulationConfig};
use crate::twodim::{ruin_or, ruin_sim, NormalizedModel, RuinReport};

pub struct Registry<T: ?Sized> {
    entries: BTreeMap<String, Arc<T>>,
}

impl<T: ?Sized> Default for Registry<T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: ?Sized> Registry<T> {
    pub fn register(&mut self, name: &str, item: Arc<T>) {
        self.entries.insert(name.to_string(), item);
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}

/// Computes one kind of two-line ruin probability.
pub trait RuinMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn ruin(
        &self,
        nm: &NormalizedModel,
        kind: RuinKind,
        cfg: &SimulationConfig,
    ) -> Result<RuinReport>;
}

/// Ruin functions of the two lines combined through the crossing time.
pub struct AnalyticRuin;

impl RuinMethod for AnalyticRuin {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn ruin(
        &self,
        nm: &NormalizedModel,
        kind: RuinKind,
        cfg: &SimulationConfig,
    ) -> Result<RuinReport> {
        match kind {
            RuinKind::Or => ruin_or(nm, cfg),
            RuinKind::Sim => ruin_sim(nm, cfg),
        }
    }
}

/// Plain simulation of both lines.
pub struct MonteCarloRuin;

impl RuinMethod for MonteCarloRuin {
    fn name(&self) -> &'static str {
        "mc"
    }

    fn ruin(
        &self,
        nm: &NormalizedModel,
        kind: RuinKind,
        cfg: &SimulationConfig,
    ) -> Result<RuinReport> {
        let (or, sim) = estimate_pair(
            nm,
            &Arrivals::Poisson(nm.lambda),
            cfg,
            kind == RuinKind::Or,
            kind == RuinKind::Sim,
        )?;
        Ok(RuinReport {
            kind,
            estimate: if kind == RuinKind::Or { or } else { sim },
            regime: nm.regime(),
            crossing_time: nm.crossing_time().ok(),
            survival: None,
            terms: Vec::new(),
            route: crate::twodim::Route::Simulation,
        })
    }
}

/// Picks one statistic out of the joint computation.
pub trait GofStatistic: Send + Sync {
    fn name(&self) -> &'static str;
    fn value(&self, stats: &GofStatistics) -> f64;
}

impl GofStatistic for Statistic {
    fn name(&self) -> &'static str {
        Statistic::name(self)
    }

    fn value(&self, stats: &GofStatistics) -> f64 {
        stats.get(*self)
    }
}

pub fn ruin_methods() -> Registry<dyn RuinMethod> {
    let mut r: Registry<dyn RuinMethod> = Registry::default();
    r.register("analytic", Arc::new(AnalyticRuin));
    r.register("mc", Arc::new(MonteCarloRuin));
    r
}

pub fn severity_estimators() -> Registry<dyn SeverityEstimator> {
    configured_severity_estimators(AdMinOptions::default(), EmOptions::default())
}

pub fn configured_severity_estimators(
    ad_min: AdMinOptions,
    em: EmOptions,
) -> Registry<dyn SeverityEstimator> {
    let mut r: Registry<dyn SeverityEstimator> = Registry::default();
    r.register("ad_min", Arc::new(AdMinEstimator { options: ad_min }));
    r.register("em", Arc::new(EmEstimator { options: em }));
    r
}

pub fn gof_statistics() -> Registry<dyn GofStatistic> {
    let mut r: Registry<dyn GofStatistic> = Registry::default();
    for s in Statistic::ALL {
        r.register(s.name(), Arc::new(s));
    }
    r
}
