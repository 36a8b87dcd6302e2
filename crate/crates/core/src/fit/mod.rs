//! Identification from loss data: severity laws by minimum Anderson-Darling
//! distance or EM, EDF goodness-of-fit statistics with parametric-bootstrap
//! p-values, and claim-intensity selection.

mod data;
mod gof;
mod intensity;
mod optim;
mod pvalue;
mod severity;

pub use data::{LossDataset, LossRecord, PeriodCount};
pub use gof::{
    gof_statistics, gof_statistics_ph, statistics_from_pit, Ecdf, GofStatistics, Statistic,
};
pub use intensity::{
    fit_and_select, fit_intensity, model_select_intensity, Candidate, IntensityFamily,
    SelectionReport, SelectionStep, NEGLIGIBLE_GAIN,
};
pub use optim::{Minimum, NelderMead};
pub use pvalue::{mc_pvalue, mc_pvalues, rank_pvalue, GofReport};
pub use severity::{
    fit_ad_min, fit_em, fit_em_mixture_erlang, AdMinEstimator, AdMinFit, AdMinOptions, EmEstimator,
    EmFit, EmOptions, Family, SeverityEstimator, SeverityFit, StartRecord,
};
