//! Generators for the process classes the test is calibrated against.
//!
//! All generators are pure functions of `(spec, n, rng)`. Monte Carlo code
//! draws each replication from its own ChaCha stream selected by
//! `(master_seed, replication)`, see [`substream`], so results do not depend
//! on scheduling.

mod fgn;
mod garch;
mod larch;
mod linear;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

pub use fgn::{
    fgn_autocovariance, fgn_decay_constant, simulate_fgn, FgnGenerator, FgnMethod,
    DEFAULT_DENSE_CAP,
};
pub use garch::{simulate_garch, GarchParams, DEFAULT_GARCH_BURNIN};
pub use larch::{
    larch_coefficients, larch_moment_gate, simulate_larch, DEFAULT_LARCH_BURNIN,
    DEFAULT_LARCH_LAGS,
};
pub use linear::{
    farima_autocovariance, farima_coefficients, farima_decay_constant, farima_tail_variance,
    farima_truncation,
    simulate_linear, LinearFilter,
};

/// Independent stream `index` of the generator keyed by `master`.
pub fn substream(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Innovation law, always normalized to mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum Innovation {
    #[default]
    Normal,
    /// Student-t with `nu > 8` degrees of freedom, rescaled to unit variance.
    StudentT { nu: f64 },
}

impl Innovation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Innovation::Normal => Ok(()),
            Innovation::StudentT { nu } if nu > 8.0 && nu.is_finite() => Ok(()),
            Innovation::StudentT { nu } => Err(Error::invalid(
                "innovation.nu",
                format!("Student-t innovations need nu > 8, got {nu}"),
            )),
        }
    }

    /// `E ε⁴` of the unit-variance law.
    pub fn fourth_moment(&self) -> f64 {
        match *self {
            Innovation::Normal => 3.0,
            Innovation::StudentT { nu } => 3.0 * (nu - 2.0) / (nu - 4.0),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Innovation::Normal => "standard normal".to_string(),
            Innovation::StudentT { nu } => format!("unit-variance Student-t, nu = {nu}"),
        }
    }

    pub(crate) fn sampler(&self) -> Result<InnovationSampler> {
        self.validate()?;
        Ok(match *self {
            Innovation::Normal => InnovationSampler::Normal,
            Innovation::StudentT { nu } => InnovationSampler::StudentT {
                dist: StudentT::new(nu).map_err(|e| Error::invalid("innovation.nu", e.to_string()))?,
                scale: ((nu - 2.0) / nu).sqrt(),
            },
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum InnovationSampler {
    Normal,
    StudentT { dist: StudentT<f64>, scale: f64 },
}

impl InnovationSampler {
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationSampler::Normal => StandardNormal.sample(rng),
            InnovationSampler::StudentT { dist, scale } => dist.sample(rng) * scale,
        }
    }

    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.draw(rng)).collect()
    }
}

/// LARCH coefficient sequence `b_1, b_2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LarchCoefficients {
    Explicit(Vec<f64>),
    /// `b_j = b_{j-1}(j + d)/(j + 1)` from `b_0`, truncated at `lags`.
    Recursive {
        b0: f64,
        d: f64,
        #[serde(default = "default_larch_lags")]
        lags: usize,
    },
}

fn default_larch_lags() -> usize {
    DEFAULT_LARCH_LAGS
}

impl LarchCoefficients {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            LarchCoefficients::Explicit(b) => {
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("larch.coeffs", "coefficients must be finite"));
                }
                Ok(b.clone())
            }
            LarchCoefficients::Recursive { b0, d, lags } => larch_coefficients(*b0, *d, *lags),
        }
    }
}

/// The generative model behind a [`ProcessSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    IidNormal {
        sd: f64,
    },
    /// `X_k = Σ_j a_j ε_{k-j}` with the given finite coefficients.
    LinearMa {
        coeffs: Vec<f64>,
    },
    /// FARIMA(0, d, 0) through its truncated MA(∞) representation.
    Farima {
        d: f64,
        #[serde(default)]
        truncation: Option<usize>,
    },
    Garch(GarchParams),
    /// GARCH returns whose parameters switch at `⌊nθ⌋`.
    TwoRegimeGarch {
        before: GarchParams,
        after: GarchParams,
        theta: f64,
    },
    Larch {
        a: f64,
        coeffs: LarchCoefficients,
    },
    /// Fractional Gaussian noise with unit variance.
    Fgn {
        hurst: f64,
        #[serde(default)]
        method: FgnMethod,
    },
}

/// A stationary (or regime-switching) process together with its innovation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub model: Model,
    #[serde(default)]
    pub innovation: Innovation,
    /// Discarded warm-up steps for recursive models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burnin: Option<usize>,
    /// Seed used by the single-series helpers such as [`simulate_linear`].
    #[serde(default)]
    pub seed: u64,
}

impl ProcessSpec {
    pub fn new(model: Model) -> Self {
        ProcessSpec {
            model,
            innovation: Innovation::Normal,
            burnin: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn iid(sd: f64) -> Self {
        ProcessSpec::new(Model::IidNormal { sd })
    }

    pub fn farima(d: f64) -> Self {
        ProcessSpec::new(Model::Farima { d, truncation: None })
    }

    pub fn fgn(hurst: f64, method: FgnMethod) -> Self {
        ProcessSpec::new(Model::Fgn { hurst, method })
    }

    /// The LARCH alternative used for the power experiment.
    pub fn long_memory_larch() -> Self {
        ProcessSpec::new(Model::Larch {
            a: 0.03,
            coeffs: LarchCoefficients::Recursive {
                b0: 0.25,
                d: 0.35,
                lags: DEFAULT_LARCH_LAGS,
            },
        })
    }

    /// Two-regime GARCH(1,1) fitted to the Dow Jones returns before and after
    /// the estimated change at 1061 of 2021 observations.
    pub fn dow_jones_garch() -> Self {
        ProcessSpec::new(Model::TwoRegimeGarch {
            before: GarchParams::garch11(0.02461474, 0.06404848, 0.87864088),
            after: GarchParams::garch11(0.09540076, 0.09734341, 0.83945713),
            theta: 0.525,
        })
    }

    /// Hurst index when the model is long-range dependent.
    pub fn hurst(&self) -> Option<f64> {
        match self.model {
            Model::Farima { d, .. } => Some(d + 0.5),
            Model::Fgn { hurst, .. } if hurst > 0.5 => Some(hurst),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.innovation.validate()?;
        match &self.model {
            Model::IidNormal { sd } => {
                if !(sd.is_finite() && *sd > 0.0) {
                    return Err(Error::invalid("iid_normal.sd", format!("must be positive, got {sd}")));
                }
            }
            Model::LinearMa { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid(
                        "linear_ma.coeffs",
                        "need at least one finite coefficient",
                    ));
                }
            }
            Model::Farima { d, .. } => {
                farima_coefficients(*d, 0)?;
            }
            Model::Garch(p) => p.validate("garch")?,
            Model::TwoRegimeGarch {
                before,
                after,
                theta,
            } => {
                before.validate("two_regime_garch.before")?;
                after.validate("two_regime_garch.after")?;
                check_theta("two_regime_garch.theta", *theta)?;
            }
            Model::Larch { a, coeffs } => {
                if !(a.is_finite() && *a != 0.0) {
                    return Err(Error::invalid("larch.a", "must be finite and nonzero"));
                }
                coeffs.resolve()?;
            }
            Model::Fgn { hurst, .. } => {
                fgn_autocovariance(*hurst, 0)?;
                if self.innovation != Innovation::Normal {
                    return Err(Error::invalid(
                        "innovation",
                        "fractional Gaussian noise is Gaussian by construction",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_theta(name: &str, theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in (0, 1), got {theta}")))
    }
}

/// One mean shift of size `delta` at `⌊nθ⌋` on top of a stationary process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointModelSpec {
    pub theta: f64,
    pub mu: f64,
    pub delta: f64,
    pub innovation: ProcessSpec,
}

impl ChangePointModelSpec {
    pub fn validate(&self) -> Result<()> {
        check_theta("change_point.theta", self.theta)?;
        if !(self.mu.is_finite() && self.delta.is_finite()) {
            return Err(Error::invalid("change_point", "mu and delta must be finite"));
        }
        self.innovation.validate()
    }

    /// `k* = ⌊nθ⌋`.
    pub fn break_index(&self, n: usize) -> usize {
        (n as f64 * self.theta).floor() as usize
    }
}

/// Anything the simulators can draw a series from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Process(ProcessSpec),
    ChangePoint(ChangePointModelSpec),
}

impl Source {
    pub fn validate(&self) -> Result<()> {
        match self {
            Source::Process(p) => p.validate(),
            Source::ChangePoint(c) => c.validate(),
        }
    }
}

impl From<ProcessSpec> for Source {
    fn from(p: ProcessSpec) -> Self {
        Source::Process(p)
    }
}

impl From<ChangePointModelSpec> for Source {
    fn from(c: ChangePointModelSpec) -> Self {
        Source::ChangePoint(c)
    }
}

/// A source prepared for repeated sampling at a fixed length: filter
/// spectra, covariance factors and coefficient tables are built once.
pub struct Generator {
    n: usize,
    kind: GenKind,
}

enum GenKind {
    Iid {
        sd: f64,
        innovation: InnovationSampler,
    },
    Linear {
        filter: LinearFilter,
        innovation: InnovationSampler,
    },
    Garch {
        before: GarchParams,
        after: Option<(GarchParams, usize)>,
        burnin: usize,
        innovation: InnovationSampler,
    },
    Larch {
        a: f64,
        b: Vec<f64>,
        burnin: usize,
        innovation: InnovationSampler,
    },
    Fgn(FgnGenerator),
    Shift {
        base: Box<Generator>,
        k_star: usize,
        mu: f64,
        delta: f64,
    },
}

impl Generator {
    pub fn new(source: &Source, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "series length must be positive"));
        }
        source.validate()?;
        match source {
            Source::Process(p) => Generator::process(p, n),
            Source::ChangePoint(c) => Ok(Generator {
                n,
                kind: GenKind::Shift {
                    base: Box::new(Generator::process(&c.innovation, n)?),
                    k_star: c.break_index(n),
                    mu: c.mu,
                    delta: c.delta,
                },
            }),
        }
    }

    fn process(spec: &ProcessSpec, n: usize) -> Result<Self> {
        let innovation = spec.innovation.sampler()?;
        let kind = match &spec.model {
            Model::IidNormal { sd } => GenKind::Iid {
                sd: *sd,
                innovation,
            },
            Model::LinearMa { coeffs } => GenKind::Linear {
                filter: LinearFilter::new(coeffs.clone(), n),
                innovation,
            },
            Model::Farima { d, truncation } => {
                let m = truncation.unwrap_or_else(|| farima_truncation(n));
                GenKind::Linear {
                    filter: LinearFilter::new(farima_coefficients(*d, m)?, n),
                    innovation,
                }
            }
            Model::Garch(p) => GenKind::Garch {
                before: p.clone(),
                after: None,
                burnin: spec.burnin.unwrap_or(DEFAULT_GARCH_BURNIN),
                innovation,
            },
            Model::TwoRegimeGarch {
                before,
                after,
                theta,
            } => GenKind::Garch {
                before: before.clone(),
                after: Some((after.clone(), (n as f64 * theta).floor() as usize)),
                burnin: spec.burnin.unwrap_or(DEFAULT_GARCH_BURNIN),
                innovation,
            },
            Model::Larch { a, coeffs } => {
                let b = coeffs.resolve()?;
                let gate = larch_moment_gate(&b, &spec.innovation);
                if gate >= 1.0 {
                    log::warn!(
                        "LARCH fourth-moment sufficient condition not met: L·(Eε⁴)^½·Σb² = {gate:.4} ≥ 1"
                    );
                }
                GenKind::Larch {
                    a: *a,
                    b,
                    burnin: spec.burnin.unwrap_or(DEFAULT_LARCH_BURNIN),
                    innovation,
                }
            }
            Model::Fgn { hurst, method } => GenKind::Fgn(FgnGenerator::new(*hurst, n, *method)?),
        };
        Ok(Generator { n, kind })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.n;
        match &self.kind {
            GenKind::Iid { sd, innovation } => (0..n).map(|_| sd * innovation.draw(rng)).collect(),
            GenKind::Linear { filter, innovation } => {
                let eps = innovation.fill(rng, filter.input_len());
                filter.apply(&eps)
            }
            GenKind::Garch {
                before,
                after,
                burnin,
                innovation,
            } => garch::run(before, after.as_ref(), n, *burnin, innovation, rng),
            GenKind::Larch {
                a,
                b,
                burnin,
                innovation,
            } => larch::run(*a, b, n, *burnin, innovation, rng),
            GenKind::Fgn(g) => g.sample(rng),
            GenKind::Shift {
                base,
                k_star,
                mu,
                delta,
            } => {
                let mut y = base.sample(rng);
                let shifted = mu + delta;
                for (i, v) in y.iter_mut().enumerate() {
                    *v += if i < *k_star { *mu } else { shifted };
                }
                y
            }
        }
    }

    /// Replication `rep` of the experiment keyed by `master_seed`.
    pub fn replicate(&self, master_seed: u64, rep: u64) -> Vec<f64> {
        self.sample(&mut substream(master_seed, rep))
    }
}

/// A single series of length `n` from stream 0 of `seed`.
pub fn simulate(source: &Source, n: usize, seed: u64) -> Result<Series> {
    let values = Generator::new(source, n)?.replicate(seed, 0);
    Series::new(values)
}

/// `X_i = μ + Y_i` before `⌊nθ⌋` and `μ + Δ + Y_i` after, seeded by the
/// innovation spec.
pub fn simulate_changepoint(spec: &ChangePointModelSpec, n: usize) -> Result<Series> {
    simulate(&Source::ChangePoint(spec.clone()), n, spec.innovation.seed)
}
