//! Monte Carlo experiments: rejection tables, long-run variance consistency,
//! the long-memory limit functionals and divergence checks.
//!
//! Every replication draws from its own substream of the master seed and
//! results are collected in replication order, so numbers do not depend on
//! the thread count.

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{critical_value, BandwidthRule};
use crate::error::{Error, Result};
use crate::simulate::{
    farima_autocovariance, fgn_autocovariance, substream, ChangePointModelSpec, FgnGenerator,
    FgnMethod, Generator, Model, ProcessSpec, Source, DEFAULT_DENSE_CAP,
};
use crate::stats::{changepoint_estimator, long_run_variance, split_statistics, KernelWeights, SplitConfig};

pub const EXPERIMENT_N: usize = 2021;
pub const EXPERIMENT_ALPHAS: [f64; 3] = [0.10, 0.05, 0.01];
pub const DEFAULT_BOOTSTRAP: usize = 200;
/// Largest tolerated share of failed replications for a check to pass.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Transformation applied to each simulated series before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McTransform {
    #[default]
    Identity,
    Square,
}

impl McTransform {
    fn apply(self, mut x: Vec<f64>) -> Vec<f64> {
        if self == McTransform::Square {
            x.iter_mut().for_each(|v| *v *= *v);
        }
        x
    }
}

/// Which statistic is compared against which critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McStatistic {
    /// `M_n` against `c(2)`.
    #[default]
    SplitMax,
    /// `T_n` against `c(1)`.
    Cusum,
}

impl McStatistic {
    pub fn stage(self) -> usize {
        match self {
            McStatistic::SplitMax => 2,
            McStatistic::Cusum => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub source: Source,
    #[serde(default)]
    pub transform: McTransform,
    #[serde(default)]
    pub statistic: McStatistic,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default = "default_min_seg")]
    pub min_seg: usize,
    pub master_seed: u64,
}

fn default_min_seg() -> usize {
    crate::stats::DEFAULT_MIN_SEG
}

impl McConfig {
    pub fn new(source: impl Into<Source>, n: usize, replications: usize, master_seed: u64) -> Self {
        McConfig {
            replications,
            n,
            alphas: EXPERIMENT_ALPHAS.to_vec(),
            source: source.into(),
            transform: McTransform::Identity,
            statistic: McStatistic::SplitMax,
            bandwidth: BandwidthRule::default(),
            min_seg: default_min_seg(),
            master_seed,
        }
    }

    /// Squared returns of the two-regime GARCH(1,1) fitted to the Dow Jones
    /// series: the size experiment.
    pub fn garch_size(replications: usize, master_seed: u64) -> Self {
        McConfig {
            transform: McTransform::Square,
            ..McConfig::new(ProcessSpec::dow_jones_garch(), EXPERIMENT_N, replications, master_seed)
        }
    }

    /// Squared LARCH returns with `a = 0.03`, `b_0 = 0.25`, `d = 0.35`: the
    /// power experiment.
    pub fn larch_power(replications: usize, master_seed: u64) -> Self {
        McConfig {
            transform: McTransform::Square,
            ..McConfig::new(ProcessSpec::long_memory_larch(), EXPERIMENT_N, replications, master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::invalid("alphas", "levels must lie in (0, 1)"));
        }
        self.bandwidth.validate()?;
        self.source.validate()
    }

    fn split_config(&self) -> SplitConfig {
        SplitConfig::new(self.bandwidth, self.min_seg)
    }
}

/// Failed replications by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub zero_variance: usize,
    pub negative_variance: usize,
    pub segment_too_short: usize,
    pub other: usize,
}

impl FailureCounts {
    fn record(&mut self, e: &Error) {
        match e {
            Error::ZeroVariance => self.zero_variance += 1,
            Error::NegativeVariance { .. } => self.negative_variance += 1,
            Error::SegmentTooShort { .. } => self.segment_too_short += 1,
            _ => self.other += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.zero_variance + self.negative_variance + self.segment_too_short + self.other
    }

    fn tally<T>(results: &[Result<T>]) -> Self {
        let mut f = FailureCounts::default();
        results.iter().filter_map(|r| r.as_ref().err()).for_each(|e| f.record(e));
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionLevel {
    pub alpha: f64,
    pub critical_value: f64,
    pub rejections: usize,
    /// Rejections over successful replications.
    pub fraction: f64,
    /// `√(p(1-p)/R)`.
    pub std_error: f64,
}

impl RejectionLevel {
    /// Whether `target` lies within `k` standard errors, with the error
    /// evaluated at the target rate.
    pub fn within(&self, target: f64, k: f64, replications: usize) -> bool {
        let se = (target * (1.0 - target) / replications as f64).sqrt();
        (self.fraction - target).abs() <= k * se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub statistic: McStatistic,
    pub transform: McTransform,
    pub innovation: String,
    pub levels: Vec<RejectionLevel>,
    pub failures: FailureCounts,
}

impl RejectionTable {
    pub fn level(&self, alpha: f64) -> Option<&RejectionLevel> {
        self.levels.iter().find(|l| (l.alpha - alpha).abs() < 1e-12)
    }

    pub fn failure_rate(&self) -> f64 {
        self.failures.total() as f64 / self.replications as f64
    }
}

fn source_innovation(source: &Source) -> String {
    let spec = match source {
        Source::Process(p) => p,
        Source::ChangePoint(c) => &c.innovation,
    };
    let mut text = format!("{} innovations", spec.innovation.describe());
    if spec.innovation == Default::default() {
        text.push_str(" (default)");
    }
    text
}

/// Simulates, tests and tallies rejections at every level. Replications whose
/// statistic cannot be computed are counted, not fatal.
pub fn rejection_table(config: &McConfig) -> Result<RejectionTable> {
    config.validate()?;
    let generator = Generator::new(&config.source, config.n)?;
    let split = config.split_config();
    let stats: Vec<Result<f64>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let x = config.transform.apply(generator.replicate(config.master_seed, rep));
            match config.statistic {
                McStatistic::SplitMax => split_statistics(&x, &split).map(|r| r.mn),
                McStatistic::Cusum => split.segment_cusum(&x).map(|c| c.statistic),
            }
        })
        .collect();

    let failures = FailureCounts::tally(&stats);
    let ok: Vec<f64> = stats.into_iter().filter_map(Result::ok).collect();
    let levels = config
        .alphas
        .iter()
        .map(|&alpha| {
            let c = critical_value(config.statistic.stage(), alpha)?.value;
            let rejections = ok.iter().filter(|&&m| m > c).count();
            let fraction = if ok.is_empty() {
                0.0
            } else {
                rejections as f64 / ok.len() as f64
            };
            Ok(RejectionLevel {
                alpha,
                critical_value: c,
                rejections,
                fraction,
                std_error: (fraction * (1.0 - fraction) / config.replications as f64).sqrt(),
            })
        })
        .collect::<Result<_>>()?;

    Ok(RejectionTable {
        n: config.n,
        replications: config.replications,
        master_seed: config.master_seed,
        statistic: config.statistic,
        transform: config.transform,
        innovation: source_innovation(&config.source),
        levels,
        failures,
    })
}

/// A median with the interquartile range of its bootstrap distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianSummary {
    pub median: f64,
    pub bootstrap_iqr: f64,
    pub count: usize,
}

fn median_of(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl MedianSummary {
    /// `None` for an empty sample.
    pub fn from_values(values: &[f64], seed: u64) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = median_of(&sorted);
        let mut rng = substream(seed, u64::MAX);
        let mut boot: Vec<f64> = (0..DEFAULT_BOOTSTRAP)
            .map(|_| {
                let mut resample: Vec<f64> =
                    (0..values.len()).map(|_| *values.choose(&mut rng).unwrap()).collect();
                resample.sort_by(f64::total_cmp);
                median_of(&resample)
            })
            .collect();
        boot.sort_by(f64::total_cmp);
        Some(MedianSummary {
            median,
            bootstrap_iqr: quantile_sorted(&boot, 0.75) - quantile_sorted(&boot, 0.25),
            count: values.len(),
        })
    }
}

/// What the long-run variance estimator converges to for a given process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum ConsistencyTarget {
    /// `s_n² → Σ_j γ_j`.
    WeakDependence { long_run_variance: f64 },
    /// `q^{1-2H} s_n² → c_0 / (H(2H-1))`.
    LongMemory { hurst: f64, c0: f64, limit: f64 },
}

impl ConsistencyTarget {
    pub fn value(&self) -> f64 {
        match *self {
            ConsistencyTarget::WeakDependence { long_run_variance } => long_run_variance,
            ConsistencyTarget::LongMemory { limit, .. } => limit,
        }
    }
}

/// `c_0` extrapolated from the exact covariance oracle: `γ_j j^{2-2H}`
/// evaluated at two large lags and Richardson-combined.
pub fn fitted_decay_constant(spec: &ProcessSpec) -> Result<f64> {
    let hurst = spec
        .hurst()
        .ok_or_else(|| Error::invalid("model", "no long-memory covariance oracle for this model"))?;
    let lag = 1usize << 14;
    let gamma_at = |j: usize| -> Result<f64> {
        match spec.model {
            Model::Fgn { hurst, .. } => fgn_autocovariance(hurst, j),
            Model::Farima { d, .. } => Ok(farima_autocovariance(d, j)?[j]),
            _ => unreachable!("hurst() is only defined for fGn and FARIMA"),
        }
    };
    let scaled = |j: usize| -> Result<f64> { Ok(gamma_at(j)? * (j as f64).powf(2.0 - 2.0 * hurst)) };
    // Leading corrections are O(1/j) for FARIMA and O(1/j²) for fGn.
    Ok(2.0 * scaled(2 * lag)? - scaled(lag)?)
}

/// Limit of `s_n²` (weak dependence) or `q^{1-2H} s_n²` (long memory).
pub fn consistency_target(spec: &ProcessSpec) -> Result<ConsistencyTarget> {
    spec.validate()?;
    if let Some(hurst) = spec.hurst() {
        let c0 = fitted_decay_constant(spec)?;
        return Ok(ConsistencyTarget::LongMemory {
            hurst,
            c0,
            limit: c0 / (hurst * (2.0 * hurst - 1.0)),
        });
    }
    let long_run_variance = match &spec.model {
        Model::IidNormal { sd } => sd * sd,
        Model::LinearMa { coeffs } => coeffs.iter().sum::<f64>().powi(2),
        // Returns are uncorrelated, so only γ_0 contributes.
        Model::Garch(p) => p.unconditional_variance(),
        Model::Larch { a, coeffs } => {
            let b = coeffs.resolve()?;
            let ss: f64 = b.iter().map(|v| v * v).sum();
            if ss >= 1.0 {
                return Err(Error::invalid("larch", "returns have no finite variance when Σb² ≥ 1"));
            }
            a * a / (1.0 - ss)
        }
        Model::Fgn { .. } => 1.0,
        Model::TwoRegimeGarch { .. } => {
            return Err(Error::invalid("model", "a regime-switching process is not stationary"))
        }
        Model::Farima { .. } => unreachable!("handled as long memory"),
    };
    Ok(ConsistencyTarget::WeakDependence { long_run_variance })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyPoint {
    pub n: usize,
    pub q: usize,
    pub summary: MedianSummary,
    /// `median / target - 1`.
    pub relative_error: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub target: ConsistencyTarget,
    pub replications: usize,
    pub points: Vec<ConsistencyPoint>,
}

impl ConsistencyReport {
    /// Every grid point within `tolerance` of the target with a failure rate
    /// below one percent.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.points.iter().all(|p| {
            p.relative_error.abs() <= tolerance
                && (p.failures as f64) < MAX_FAILURE_RATE * self.replications as f64
        })
    }

    /// Largest relative spread between any two grid-point medians.
    pub fn max_spread(&self) -> f64 {
        let m: Vec<f64> = self.points.iter().map(|p| p.summary.median).collect();
        let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    }
}

/// Stream index of replication `rep` at grid point `grid`.
fn grid_stream(grid: usize, rep: usize) -> u64 {
    ((grid as u64) << 32) | rep as u64
}

/// Median Bartlett estimate over `reps` replications at each `n` of the grid,
/// normalized by `q^{1-2H}` for long-memory processes.
pub fn bartlett_consistency(
    spec: &ProcessSpec,
    n_grid: &[usize],
    rule: BandwidthRule,
    reps: usize,
    master_seed: u64,
) -> Result<ConsistencyReport> {
    if reps == 0 || n_grid.is_empty() {
        return Err(Error::invalid("grid", "need at least one n and one replication"));
    }
    rule.validate()?;
    let target = consistency_target(spec)?;
    let source = Source::Process(spec.clone());
    let mut points = Vec::with_capacity(n_grid.len());
    for (g, &n) in n_grid.iter().enumerate() {
        let generator = Generator::new(&source, n)?;
        let q = rule.bandwidth(n).q;
        let weights = KernelWeights::bartlett(q);
        let scale = match target {
            ConsistencyTarget::WeakDependence { .. } => 1.0,
            ConsistencyTarget::LongMemory { hurst, .. } => (q as f64).powf(1.0 - 2.0 * hurst),
        };
        let values: Vec<Result<f64>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let x = generator.sample(&mut substream(master_seed, grid_stream(g, rep)));
                long_run_variance(&x, &weights).map(|e| e.value * scale)
            })
            .collect();
        let failures = FailureCounts::tally(&values).total();
        let ok: Vec<f64> = values.into_iter().filter_map(Result::ok).collect();
        let summary = MedianSummary::from_values(&ok, master_seed ^ n as u64)
            .ok_or(Error::ZeroVariance)?;
        points.push(ConsistencyPoint {
            n,
            q,
            relative_error: summary.median / target.value() - 1.0,
            summary,
            failures,
        });
    }
    Ok(ConsistencyReport {
        target,
        replications: reps,
        points,
    })
}

/// One draw of the long-memory limit of the normalized split statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitFunctionalSample {
    /// First argmax of `|W_H(t) - t W_H(1)|` on the grid.
    pub xi: f64,
    /// `ξ^{-1/2} sup_{t≤ξ} |W_H(t) - (t/ξ) W_H(ξ)|`.
    pub v1: f64,
    /// The bridge functional of the increments after `ξ`, scaled by `(1-ξ)^{-1/2}`.
    pub v2: f64,
    /// `ξ` fell on the first or last grid interval.
    pub boundary: bool,
}

/// Samples the limit vector on a grid of `grid_n` steps using exact fGn.
pub fn limit_functional_samples(
    hurst: f64,
    grid_n: usize,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<LimitFunctionalSample>> {
    if grid_n > DEFAULT_DENSE_CAP {
        return Err(Error::invalid(
            "grid_n",
            format!("must not exceed {DEFAULT_DENSE_CAP}, got {grid_n}"),
        ));
    }
    if grid_n < 4 {
        return Err(Error::TooShort { min: 4, got: grid_n });
    }
    let generator = FgnGenerator::new(hurst, grid_n, FgnMethod::Circulant)?;
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let x = generator.sample(&mut substream(master_seed, rep));
            limit_functional(&x, hurst)
        })
        .collect();
    Ok(samples)
}

/// The limit functionals of one fGn path `x` of `n` increments.
pub fn limit_functional(x: &[f64], hurst: f64) -> LimitFunctionalSample {
    let n = x.len();
    let scale = (n as f64).powf(-hurst);
    let mut w = Vec::with_capacity(n + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        w.push(acc * scale);
    }
    let w1 = w[n];
    let mut k_xi = 0;
    let mut best = f64::NEG_INFINITY;
    for (k, wk) in w.iter().enumerate() {
        let b = (wk - k as f64 / n as f64 * w1).abs();
        if b > best {
            best = b;
            k_xi = k;
        }
    }
    let xi = k_xi as f64 / n as f64;
    let bridge_sup = |lo: usize, hi: usize| -> f64 {
        if hi == lo {
            return 0.0;
        }
        let len = (hi - lo) as f64;
        let (a, b) = (w[lo], w[hi]);
        (lo..=hi)
            .map(|k| ((w[k] - a) - (k - lo) as f64 / len * (b - a)).abs())
            .fold(0.0, f64::max)
    };
    let v1 = if k_xi == 0 { 0.0 } else { bridge_sup(0, k_xi) / xi.sqrt() };
    let v2 = if k_xi == n {
        0.0
    } else {
        bridge_sup(k_xi, n) / (1.0 - xi).sqrt()
    };
    LimitFunctionalSample {
        xi,
        v1,
        v2,
        boundary: k_xi <= 1 || k_xi >= n - 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizePair {
    pub small: MedianSummary,
    pub large: MedianSummary,
}

impl SizePair {
    pub fn ratio(&self) -> f64 {
        self.large.median / self.small.median
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub n_small: usize,
    pub n_large: usize,
    pub replications: usize,
    pub mn: SizePair,
    pub tn: SizePair,
    pub failures: usize,
    /// Median `M_n` grows with `n`.
    pub lrd_pass: bool,
    /// Median `T_n` ratio within 35% of `√(n_large / n_small)`.
    pub changepoint_rate_pass: bool,
}

/// Medians of `M_n` and `T_n` at two sample sizes.
pub fn divergence_check(
    source: &Source,
    n_small: usize,
    n_large: usize,
    reps: usize,
    master_seed: u64,
    split: &SplitConfig,
) -> Result<DivergenceReport> {
    if n_small >= n_large {
        return Err(Error::invalid("n_small", "must be smaller than n_large"));
    }
    if reps == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let mut failures = 0;
    let mut out = Vec::with_capacity(2);
    for (g, n) in [n_small, n_large].into_iter().enumerate() {
        let generator = Generator::new(source, n)?;
        let pairs: Vec<Result<(f64, f64)>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let x = generator.sample(&mut substream(master_seed, grid_stream(g, rep)));
                let m = split_statistics(&x, split)?.mn;
                let t = split.segment_cusum(&x)?.statistic;
                Ok((m, t))
            })
            .collect();
        failures += FailureCounts::tally(&pairs).total();
        let ok: Vec<(f64, f64)> = pairs.into_iter().filter_map(Result::ok).collect();
        let m: Vec<f64> = ok.iter().map(|p| p.0).collect();
        let t: Vec<f64> = ok.iter().map(|p| p.1).collect();
        let seed = master_seed ^ n as u64;
        out.push((
            MedianSummary::from_values(&m, seed).ok_or(Error::ZeroVariance)?,
            MedianSummary::from_values(&t, seed.rotate_left(17)).ok_or(Error::ZeroVariance)?,
        ));
    }
    let mn = SizePair {
        small: out[0].0,
        large: out[1].0,
    };
    let tn = SizePair {
        small: out[0].1,
        large: out[1].1,
    };
    let expected = (n_large as f64 / n_small as f64).sqrt();
    let healthy = (failures as f64) < MAX_FAILURE_RATE * (2 * reps) as f64;
    Ok(DivergenceReport {
        n_small,
        n_large,
        replications: reps,
        lrd_pass: healthy && mn.large.median > mn.small.median,
        changepoint_rate_pass: healthy && (tn.ratio() / expected - 1.0).abs() <= 0.35,
        mn,
        tn,
        failures,
    })
}

/// Share of replications whose `k̂` lies within `tolerance` of `⌊nθ⌋`.
pub fn changepoint_accuracy(
    spec: &ChangePointModelSpec,
    n: usize,
    tolerance: usize,
    reps: usize,
    master_seed: u64,
) -> Result<f64> {
    if reps == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let generator = Generator::new(&Source::ChangePoint(spec.clone()), n)?;
    let k_star = spec.break_index(n);
    let hits: Vec<Result<bool>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let khat = changepoint_estimator(&generator.replicate(master_seed, rep))?;
            Ok(khat.abs_diff(k_star) <= tolerance)
        })
        .collect();
    let ok = hits.iter().filter(|h| matches!(h, Ok(true))).count();
    Ok(ok as f64 / reps as f64)
}
