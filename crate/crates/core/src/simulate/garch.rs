//! GARCH(p, q) returns `r_k = σ_k ε_k`.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Generator, InnovationSampler, Model, ProcessSpec, Source};
use crate::error::{Error, Result};
use crate::series::Series;

pub const DEFAULT_GARCH_BURNIN: usize = 1000;

/// `σ_k² = ω + Σ α_i r_{k-i}² + Σ β_j σ_{k-j}²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
}

impl GarchParams {
    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Self {
        GarchParams {
            omega,
            alpha: vec![alpha],
            beta: vec![beta],
        }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).sum()
    }

    /// `E r² = ω / (1 - Σα - Σβ)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    pub fn validate(&self, context: &str) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid(
                format!("{context}.omega"),
                format!("must be positive, got {}", self.omega),
            ));
        }
        if let Some(c) = self
            .alpha
            .iter()
            .chain(&self.beta)
            .find(|c| !(c.is_finite() && **c >= 0.0))
        {
            return Err(Error::invalid(
                format!("{context}.alpha/beta"),
                format!("coefficients must be nonnegative, got {c}"),
            ));
        }
        let s = self.persistence();
        if s >= 1.0 {
            return Err(Error::invalid(
                format!("{context}.alpha/beta"),
                format!("stationarity needs sum(alpha) + sum(beta) < 1, got {s}"),
            ));
        }
        Ok(())
    }

    fn variance(&self, r2: &VecDeque<f64>, s2: &VecDeque<f64>) -> f64 {
        // Histories hold the most recent value first.
        let arch: f64 = self.alpha.iter().zip(r2).map(|(a, r)| a * r).sum();
        let garch: f64 = self.beta.iter().zip(s2).map(|(b, s)| b * s).sum();
        self.omega + arch + garch
    }
}

/// Runs the recursion for `burnin + n` steps; `after` switches the parameters
/// from output index `k*` on, carrying the volatility state across the break.
pub(crate) fn run<R: Rng + ?Sized>(
    before: &GarchParams,
    after: Option<&(GarchParams, usize)>,
    n: usize,
    burnin: usize,
    innovation: &InnovationSampler,
    rng: &mut R,
) -> Vec<f64> {
    let depth = [before.alpha.len(), before.beta.len()]
        .into_iter()
        .chain(after.iter().flat_map(|(p, _)| [p.alpha.len(), p.beta.len()]))
        .max()
        .unwrap_or(0)
        .max(1);
    let start = before.unconditional_variance();
    let mut r2: VecDeque<f64> = VecDeque::from(vec![start; depth]);
    let mut s2: VecDeque<f64> = VecDeque::from(vec![start; depth]);
    let mut out = Vec::with_capacity(n);

    for step in 0..burnin + n {
        let params = match after {
            Some((p, k_star)) if step >= burnin + k_star => p,
            _ => before,
        };
        let sigma2 = params.variance(&r2, &s2);
        let r = sigma2.sqrt() * innovation.draw(rng);
        r2.pop_back();
        r2.push_front(r * r);
        s2.pop_back();
        s2.push_front(sigma2);
        if step >= burnin {
            out.push(r);
        }
    }
    out
}

/// GARCH or two-regime GARCH returns of length `n`, seeded by `spec.seed`.
pub fn simulate_garch(spec: &ProcessSpec, n: usize) -> Result<Series> {
    if !matches!(spec.model, Model::Garch(_) | Model::TwoRegimeGarch { .. }) {
        return Err(Error::invalid("model", "simulate_garch needs garch or two_regime_garch"));
    }
    let source = Source::Process(spec.clone());
    Series::new(Generator::new(&source, n)?.replicate(spec.seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_square(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn dow_jones_fits_match_moment_identity() {
        let before = GarchParams::garch11(0.02461474, 0.06404848, 0.87864088);
        let after = GarchParams::garch11(0.09540076, 0.09734341, 0.83945713);
        assert!((before.unconditional_variance() - 0.4295).abs() < 1e-4);
        assert!((after.unconditional_variance() - 1.5095).abs() < 1e-4);
        let diff = after.unconditional_variance() - before.unconditional_variance();
        assert!((diff - 1.080022).abs() < 1e-4, "{diff}");
        for (seed, p) in [(1, before), (2, after)] {
            let spec = ProcessSpec::new(Model::Garch(p.clone())).with_seed(seed);
            let x = simulate_garch(&spec, 200_000).unwrap();
            let m = mean_square(&x);
            let target = p.unconditional_variance();
            assert!((m - target).abs() / target < 0.05, "{m} vs {target}");
        }
    }

    #[test]
    fn no_feedback_is_iid_with_variance_omega() {
        let spec = ProcessSpec::new(Model::Garch(GarchParams::garch11(2.0, 0.0, 0.0))).with_seed(3);
        let x = simulate_garch(&spec, 100_000).unwrap();
        assert!((mean_square(&x) - 2.0).abs() < 0.05);
        let lag1: f64 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / x.len() as f64;
        assert!(lag1.abs() < 0.05);
    }

    #[test]
    fn higher_order_recursion() {
        let p = GarchParams {
            omega: 0.1,
            alpha: vec![0.05, 0.05],
            beta: vec![0.3, 0.2],
        };
        let spec = ProcessSpec::new(Model::Garch(p.clone())).with_seed(11);
        let x = simulate_garch(&spec, 200_000).unwrap();
        let target = p.unconditional_variance();
        assert!((mean_square(&x) - target).abs() / target < 0.05);
    }

    #[test]
    fn nonstationary_parameters_name_the_constraint() {
        let err = GarchParams::garch11(0.1, 0.3, 0.7).validate("garch").unwrap_err();
        assert!(err.to_string().contains("sum(alpha) + sum(beta) < 1"), "{err}");
        assert!(GarchParams::garch11(0.0, 0.1, 0.1).validate("garch").is_err());
        assert!(GarchParams::garch11(0.1, -0.1, 0.1).validate("garch").is_err());
    }

    #[test]
    fn regimes_switch_level() {
        let spec = ProcessSpec::dow_jones_garch().with_seed(5);
        let x = simulate_garch(&spec, 40_000).unwrap();
        let k = (40_000.0 * 0.525f64).floor() as usize;
        let (m1, m2) = (mean_square(&x[..k]), mean_square(&x[k..]));
        assert!((m1 - 0.4295).abs() < 0.1, "{m1}");
        assert!((m2 - 1.5095).abs() < 0.3, "{m2}");
    }
}
