//! LARCH returns `r_k = σ_k ε_k` with `σ_k = a + Σ_{j≥1} b_j r_{k-j}`.

use rand::Rng;

use super::{Generator, Innovation, InnovationSampler, Model, ProcessSpec, Source};
use crate::error::{Error, Result};
use crate::series::Series;

pub const DEFAULT_LARCH_LAGS: usize = 2000;
pub const DEFAULT_LARCH_BURNIN: usize = 5000;

/// `b_1..b_J` from `b_j = b_{j-1}(j + d)/(j + 1)`.
pub fn larch_coefficients(b0: f64, d: f64, lags: usize) -> Result<Vec<f64>> {
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::invalid("larch.d", format!("must lie in (0, 1/2), got {d}")));
    }
    if lags == 0 {
        return Err(Error::invalid("larch.lags", "need at least one lag"));
    }
    if !b0.is_finite() {
        return Err(Error::invalid("larch.b0", "must be finite"));
    }
    let mut b = Vec::with_capacity(lags);
    let mut prev = b0;
    for j in 1..=lags {
        let jf = j as f64;
        prev = prev * (jf + d) / (jf + 1.0);
        b.push(prev);
    }
    Ok(b)
}

/// `L (E ε⁴)^{1/2} Σ b_j²`, with `L = 7` for Gaussian and `11` otherwise.
/// Values below 1 give a fourth-order stationary squared process.
pub fn larch_moment_gate(b: &[f64], innovation: &Innovation) -> f64 {
    let l = match innovation {
        Innovation::Normal => 7.0,
        _ => 11.0,
    };
    let ss: f64 = b.iter().map(|v| v * v).sum();
    l * innovation.fourth_moment().sqrt() * ss
}

pub(crate) fn run<R: Rng + ?Sized>(
    a: f64,
    b: &[f64],
    n: usize,
    burnin: usize,
    innovation: &InnovationSampler,
    rng: &mut R,
) -> Vec<f64> {
    let lags = b.len();
    // Reversed so the dot product runs over a contiguous window of the past.
    let rev: Vec<f64> = b.iter().rev().copied().collect();
    let total = burnin + n;
    let mut r = Vec::with_capacity(total);
    for k in 0..total {
        let depth = k.min(lags);
        let feedback: f64 = rev[lags - depth..]
            .iter()
            .zip(&r[k - depth..k])
            .map(|(c, v)| c * v)
            .sum();
        let sigma = a + feedback;
        r.push(sigma * innovation.draw(rng));
    }
    r.split_off(burnin)
}

/// LARCH returns of length `n`, seeded by `spec.seed`.
pub fn simulate_larch(spec: &ProcessSpec, n: usize) -> Result<Series> {
    if !matches!(spec.model, Model::Larch { .. }) {
        return Err(Error::invalid("model", "simulate_larch needs larch"));
    }
    let source = Source::Process(spec.clone());
    Series::new(Generator::new(&source, n)?.replicate(spec.seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::LarchCoefficients;
    use crate::stats::sample_autocovariance;

    #[test]
    fn recursion_values() {
        let b = larch_coefficients(0.25, 0.35, 3).unwrap();
        assert!((b[0] - 0.16875).abs() < 1e-15);
        assert!((b[1] - 0.1321875).abs() < 1e-15);
        assert!(b.windows(2).all(|w| w[1] < w[0]));
        assert!(larch_coefficients(0.25, 0.6, 3).is_err());
        assert!(larch_coefficients(0.25, 0.35, 0).is_err());
    }

    #[test]
    fn coefficients_follow_gamma_ratio() {
        // b_j = b_0 Γ(j+1+d) / (Γ(1+d) Γ(j+2)) ∼ b_0 j^{d-1} / Γ(1+d).
        use statrs::function::gamma::ln_gamma;
        let (b0, d) = (0.25, 0.35);
        let b = larch_coefficients(b0, d, 5000).unwrap();
        for j in [1usize, 7, 100, 5000] {
            let jf = j as f64;
            let closed = b0 * (ln_gamma(jf + 1.0 + d) - ln_gamma(1.0 + d) - ln_gamma(jf + 2.0)).exp();
            assert!((b[j - 1] - closed).abs() / closed < 1e-10, "j = {j}");
        }
        let tail = b[4999] * 5000f64.powf(1.0 - d) * ln_gamma(1.0 + d).exp() / b0;
        assert!((tail - 1.0).abs() < 1e-3, "{tail}");
    }

    #[test]
    fn default_larch_fails_the_gate() {
        let b = larch_coefficients(0.25, 0.35, DEFAULT_LARCH_LAGS).unwrap();
        let mut ss = 0.0;
        for v in &b {
            ss += v * v;
        }
        let gate = larch_moment_gate(&b, &Innovation::Normal);
        assert!((gate - 7.0 * 3f64.sqrt() * ss).abs() < 1e-12);
        assert!((ss - 0.19640).abs() < 1e-4, "{ss}");
        assert!(gate > 1.0);
        let t = Innovation::StudentT { nu: 10.0 };
        assert!((larch_moment_gate(&b, &t) - 11.0 * (4.0f64).sqrt() * ss).abs() < 1e-12);
    }

    #[test]
    fn no_feedback_is_scaled_noise() {
        let spec = ProcessSpec::new(Model::Larch {
            a: 0.5,
            coeffs: LarchCoefficients::Explicit(vec![0.0; 10]),
        })
        .with_seed(2);
        let x = simulate_larch(&spec, 50_000).unwrap();
        let v = sample_autocovariance(&x, 0).unwrap();
        assert!((v - 0.25).abs() < 0.01);
        assert!(sample_autocovariance(&x, 1).unwrap().abs() < 0.01);
    }

    #[test]
    fn squares_have_persistent_positive_correlation() {
        let mut hits = 0;
        let reps = 10;
        for seed in 0..reps {
            let x = simulate_larch(&ProcessSpec::long_memory_larch().with_seed(seed), 20_000).unwrap();
            let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
            let g0 = sample_autocovariance(&sq, 0).unwrap();
            if (10..=100).all(|j| sample_autocovariance(&sq, j).unwrap() / g0 > 0.0) {
                hits += 1;
            }
        }
        assert!(hits * 10 >= reps * 9, "{hits} of {reps}");
    }
}
