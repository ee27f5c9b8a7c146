//! Tests for discriminating between long-range dependence and changes in mean.
//!
//! The central object is the split statistic `M_n`: the CUSUM estimator picks
//! a change-point `k̂`, and each side of the split is re-tested with its own
//! self-normalized CUSUM statistic. Under a weakly dependent series with a
//! single mean shift `M_n` converges to the maximum of two independent
//! `sup|B(t)|` laws; under long memory it diverges.
//!
//! Module map:
//!
//! - [`stats`]: autocovariances, Bartlett long-run variance, CUSUM profile,
//!   the change-point estimator and the split statistics.
//! - [`asymptotics`]: the Kolmogorov distribution of `sup|B(t)|`, multistage
//!   critical values `c(u)` and bandwidth rules.
//! - [`segmentation`]: the multistage binary-segmentation classifier.
//! - [`simulate`]: change-point, linear/FARIMA, GARCH, LARCH and fractional
//!   Gaussian noise generators with reproducible substreams.
//! - [`experiments`]: Monte Carlo size/power tables and limit-theorem checks.
//! - [`pipeline`], [`diagnostics`], [`report`]: ingestion, ACF/periodogram
//!   tables and serializable reports used by the command-line tool.

pub mod asymptotics;
pub mod diagnostics;
mod error;
pub mod experiments;
pub mod pipeline;
pub mod report;
pub mod segmentation;
mod series;
pub mod simulate;
pub mod stats;
mod sum;

pub use asymptotics::{
    bridge_sup_cdf, bridge_sup_quantile, critical_value, default_bandwidth, Bandwidth,
    BandwidthRule, CriticalValue,
};
pub use error::{Error, Result};
pub use segmentation::{multistage_classify, SegmentationConfig, SegmentationResult, Verdict};
pub use series::Series;
pub use simulate::{ChangePointModelSpec, Innovation, Model, ProcessSpec, Source};
pub use stats::{
    changepoint_estimator, cusum_profile, cusum_statistic, long_run_variance, split_statistics,
    Kernel, KernelWeights, SplitConfig, SplitTestResult,
};
