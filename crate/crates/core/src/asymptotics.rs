//! Limit-distribution machinery.
//!
//! Under the null both segment statistics converge to `sup_{0≤t≤1}|B(t)|` for
//! independent Brownian bridges `B`, whose distribution function is the
//! Kolmogorov series
//!
//! ```text
//! K(x) = 1 + 2 Σ_{k≥1} (-1)^k exp(-2 k² x²)
//!      = (√(2π) / x) Σ_{k≥1} exp(-(2k-1)² π² / (8 x²))
//! ```
//!
//! The second (theta-function) form is the same function; it converges in a
//! handful of terms for small `x`, where the alternating form would sum many
//! nearly cancelling terms. Critical values for the `u`-th stage of the
//! multistage procedure solve `K(c(u)) = (1 - α)^{1/u}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TERM_TOLERANCE: f64 = 1e-12;
const CDF_FLOOR: f64 = 0.05;
const THETA_FORM_BELOW: f64 = 1.0;
const MAX_TERMS: usize = 10_000;

/// Distribution function of `sup_{0≤t≤1}|B(t)|`.
pub fn bridge_sup_cdf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid("x", format!("must be nonnegative, got {x}")));
    }
    if x < CDF_FLOOR {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let p = if x < THETA_FORM_BELOW {
        let scale = (2.0 * PI).sqrt() / x;
        let rate = PI * PI / (8.0 * x * x);
        let mut total = 0.0;
        for k in 1..=MAX_TERMS {
            let odd = (2 * k - 1) as f64;
            let term = scale * (-odd * odd * rate).exp();
            total += term;
            if term < TERM_TOLERANCE {
                break;
            }
        }
        total
    } else {
        let mut total = 1.0;
        for k in 1..=MAX_TERMS {
            let kf = k as f64;
            let term = 2.0 * (-2.0 * kf * kf * x * x).exp();
            if k % 2 == 1 {
                total -= term;
            } else {
                total += term;
            }
            if term < TERM_TOLERANCE {
                break;
            }
        }
        total
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Inverse of [`bridge_sup_cdf`] by bracketing and bisection.
pub fn bridge_sup_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("must lie in (0, 1), got {p}")));
    }
    let cdf = |x: f64| bridge_sup_cdf(x).expect("bracket stays nonnegative");
    let (mut lo, mut hi) = (0.2, 4.0);
    while cdf(lo) > p && lo > CDF_FLOOR {
        lo = (lo * 0.5).max(CDF_FLOOR);
    }
    while cdf(hi) < p && hi < 64.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Stage-`u` critical value of the multistage procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub u: usize,
    pub alpha: f64,
    pub value: f64,
}

/// `c(u)` with `P(max of u independent sup|B| ≤ c(u)) = 1 - α`.
pub fn critical_value(u: usize, alpha: f64) -> Result<CriticalValue> {
    if u == 0 {
        return Err(Error::invalid("u", "number of bridges must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ));
    }
    let p = if u == 1 {
        1.0 - alpha
    } else {
        (1.0 - alpha).powf(1.0 / u as f64)
    };
    Ok(CriticalValue {
        u,
        alpha,
        value: bridge_sup_quantile(p)?,
    })
}

/// Bandwidth function `q(n)` for the Bartlett estimator, floored to an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `q(n) = ⌊c · log10(n)⌋`.
    Log10 { multiplier: f64 },
    /// `q(n) = ⌊c · n^β⌋`.
    Power { multiplier: f64, exponent: f64 },
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Log10 { multiplier: 15.0 }
    }
}

/// A bandwidth together with whether the `n - 2` clamp was applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub q: usize,
    pub clamped: bool,
}

impl BandwidthRule {
    pub fn log10(multiplier: f64) -> Self {
        BandwidthRule::Log10 { multiplier }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, beta) = match *self {
            BandwidthRule::Log10 { multiplier } => (multiplier, 0.0),
            BandwidthRule::Power {
                multiplier,
                exponent,
            } => (multiplier, exponent),
        };
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(
                "bandwidth.multiplier",
                format!("must be positive, got {c}"),
            ));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid(
                "bandwidth.exponent",
                format!("must be nonnegative, got {beta}"),
            ));
        }
        Ok(())
    }

    /// Unclamped `⌊q(n)⌋`, as used by the asymptotic condition checks.
    pub fn raw(&self, n: u64) -> u64 {
        let n = n as f64;
        let value = match *self {
            BandwidthRule::Log10 { multiplier } => multiplier * n.log10(),
            BandwidthRule::Power {
                multiplier,
                exponent,
            } => multiplier * n.powf(exponent),
        };
        // Guard exact products such as 15·log10(1000) = 45 against rounding down.
        (value + 1e-9).floor().max(0.0) as u64
    }

    /// The bandwidth used on a segment of length `n`; see [`default_bandwidth`].
    pub fn bandwidth(&self, n: usize) -> Bandwidth {
        default_bandwidth(n, *self)
    }
}

/// `q(n)` floored, raised to at least 1 and clamped to `n - 2`.
///
/// For `n = 2` the clamp wins and the result is 0.
pub fn default_bandwidth(n: usize, rule: BandwidthRule) -> Bandwidth {
    let raw = rule.raw(n as u64).max(1) as usize;
    let cap = n.saturating_sub(2);
    if raw > cap {
        Bandwidth {
            q: cap,
            clamped: true,
        }
    } else {
        Bandwidth {
            q: raw,
            clamped: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: String,
    pub passed: bool,
    pub detail: String,
}

/// Finite-grid evidence for the asymptotic bandwidth conditions.
///
/// A pass means the rule behaves as required on the doubling grid up to
/// `n_max`; it is necessary at scale, not a proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    pub rule: BandwidthRule,
    pub hurst: Option<f64>,
    pub n_max: u64,
    pub checks: Vec<ConditionCheck>,
}

impl BandwidthReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, condition: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }
}

pub const COND_MONOTONE: &str = "nondecreasing";
pub const COND_DOUBLING: &str = "doubling_ratio";
pub const COND_WEAK: &str = "weak_dependence_growth";
pub const COND_LONG_MEMORY: &str = "long_memory_growth";

const MAX_DOUBLING_RATIO: f64 = 4.0;

/// Checks a bandwidth rule on the grid `n = 2, 4, 8, …, ≤ n_max`.
///
/// - `nondecreasing`: `q(2n) ≥ q(n)` everywhere.
/// - `doubling_ratio`: `q(2n)/q(n) ≤ 4` wherever `q(n) > 0`.
/// - `weak_dependence_growth`: `q` grows and `q(n)(ln n)^4 / n` never exceeds
///   its value at the start of the upper half of the grid (`n ≥ √n_max`).
/// - `long_memory_growth` (when `hurst` is given): the same with exponent
///   `7/(4 - 4H)` in place of 4.
pub fn validate_bandwidth_rule(
    rule: BandwidthRule,
    hurst: Option<f64>,
    n_max: u64,
) -> Result<BandwidthReport> {
    rule.validate()?;
    if n_max < 4 {
        return Err(Error::invalid("n_max", format!("must be at least 4, got {n_max}")));
    }
    let grid: Vec<u64> = std::iter::successors(Some(2u64), |n| n.checked_mul(2))
        .take_while(|&n| n <= n_max)
        .collect();
    let q: Vec<u64> = grid.iter().map(|&n| rule.raw(n)).collect();

    let mut checks = Vec::new();

    let drop = q.windows(2).position(|w| w[1] < w[0]);
    checks.push(ConditionCheck {
        condition: COND_MONOTONE.into(),
        passed: drop.is_none(),
        detail: match drop {
            None => format!("q nondecreasing over {} grid points", grid.len()),
            Some(i) => format!("q({}) = {} < q({}) = {}", grid[i + 1], q[i + 1], grid[i], q[i]),
        },
    });

    let worst = q
        .windows(2)
        .zip(&grid)
        .filter(|(w, _)| w[0] > 0)
        .map(|(w, &n)| (w[1] as f64 / w[0] as f64, n))
        .fold((0.0f64, 0u64), |acc, x| if x.0 > acc.0 { x } else { acc });
    checks.push(ConditionCheck {
        condition: COND_DOUBLING.into(),
        passed: worst.0 <= MAX_DOUBLING_RATIO,
        detail: format!("max q(2n)/q(n) = {:.4} at n = {}", worst.0, worst.1),
    });

    checks.push(tail_growth_check(COND_WEAK, &grid, &q, n_max, 4.0));

    if let Some(h) = hurst {
        if h > 0.5 && h < 1.0 {
            checks.push(tail_growth_check(
                COND_LONG_MEMORY,
                &grid,
                &q,
                n_max,
                7.0 / (4.0 - 4.0 * h),
            ));
        } else {
            checks.push(ConditionCheck {
                condition: COND_LONG_MEMORY.into(),
                passed: false,
                detail: format!("H = {h} outside (1/2, 1)"),
            });
        }
    }

    Ok(BandwidthReport {
        rule,
        hurst,
        n_max,
        checks,
    })
}

fn tail_growth_check(name: &str, grid: &[u64], q: &[u64], n_max: u64, power: f64) -> ConditionCheck {
    let threshold = (n_max as f64).sqrt();
    let start = grid
        .iter()
        .position(|&n| n as f64 >= threshold)
        .unwrap_or(grid.len() - 1)
        .min(grid.len().saturating_sub(2));
    let ratio = |i: usize| q[i] as f64 * (grid[i] as f64).ln().powf(power) / grid[i] as f64;
    let first = ratio(start);
    let last = grid.len() - 1;
    let (peak_at, peak) = (start..=last)
        .map(|i| (i, ratio(i)))
        .fold((start, first), |acc, x| if x.1 > acc.1 { x } else { acc });
    let grows = q[last] > q[start];
    let bounded = peak <= first * (1.0 + 1e-12);
    ConditionCheck {
        condition: name.into(),
        passed: grows && bounded,
        detail: format!(
            "q(n)(ln n)^{power:.3}/n from n = {}: start {first:.4e}, max {peak:.4e} at n = {}; q grows {} -> {}",
            grid[start], grid[peak_at], q[start], q[last]
        ),
    }
}
