//! Invariants shared by the property tests and the acceptance run.

#![allow(dead_code)]

use lrdbreak::asymptotics::{bridge_sup_cdf, bridge_sup_quantile, critical_value, BandwidthRule};
use lrdbreak::pipeline::{load_series_from, write_values, Pipeline};
use lrdbreak::report::{run_segmentation_series, Report, TestOptions};
use lrdbreak::segmentation::{multistage_classify, SegmentationConfig, Verdict};
use lrdbreak::simulate::{
    ChangePointModelSpec, FgnMethod, GarchParams, Innovation, LarchCoefficients, Model,
    ProcessSpec, Source,
};
use lrdbreak::stats::{
    bartlett_weights, changepoint_estimator, cusum_profile, cusum_statistic, long_run_variance,
    sample_autocovariance, split_statistics, KernelWeights, SplitConfig,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub type Check = fn(u32) -> Result<(), String>;

/// Name and runner of every invariant, run with the given number of cases.
pub const PROPERTIES: &[(&str, Check)] = &[
    ("affine invariance of T_n and khat", affine_invariance),
    ("Bartlett nonnegativity", bartlett_nonnegative),
    ("q = 0 reduction", q_zero_reduction),
    ("profile endpoint D_n = 0", profile_endpoint),
    ("segment locality", segment_locality),
    ("Bartlett weight shape", weight_shape),
    ("CDF monotone and bounded", cdf_monotone),
    ("CDF/quantile round trips", cdf_quantile_round_trip),
    ("critical value consistency and monotonicity", critical_value_monotone),
    ("segmentation nesting, gate and determinism", segmentation_structure),
    ("spec serialization round trip", spec_round_trip),
    ("series text round trip", series_round_trip),
    ("report serialization round trip", report_round_trip),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn series(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![-1e3..1e3f64, -1.0..1.0f64, (0..5i32).prop_map(|v| v as f64)],
        min..max,
    )
}

fn varied(x: &[f64]) -> bool {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo > 1e-6 * hi.abs().max(lo.abs()).max(1.0)
}

/// Relative gap between the largest and second-largest profile values.
fn argmax_margin(x: &[f64]) -> f64 {
    let p = cusum_profile(x);
    let mut sorted = p.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    (sorted[0] - sorted[1]) / sorted[0].max(f64::MIN_POSITIVE)
}

pub fn affine_invariance(cases: u32) -> Result<(), String> {
    let scale = prop_oneof![1e-3..1e3f64, -1e3..-1e-3f64];
    run(cases, (series(20, 300), scale, -1e3..1e3f64, 0..10usize), |(x, a, b, q)| {
        prop_assume!(varied(&x));
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assume!(varied(&y));
        let (tx, ty) = (cusum_statistic(&x, q).unwrap(), cusum_statistic(&y, q).unwrap());
        prop_assert!((tx - ty).abs() <= 1e-10 * tx.abs(), "T_n {tx} vs {ty}");
        // Exact equality of k̂ is only meaningful away from numerical ties.
        if argmax_margin(&x) > 1e-8 {
            prop_assert_eq!(changepoint_estimator(&x).unwrap(), changepoint_estimator(&y).unwrap());
        }
        Ok(())
    })
}

pub fn bartlett_nonnegative(cases: u32) -> Result<(), String> {
    let input = series(2, 200).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), 0..n)
    });
    run(cases, input, |(x, q)| {
        let g0 = sample_autocovariance(&x, 0).unwrap();
        let s2 = long_run_variance(&x, &KernelWeights::bartlett(q)).unwrap().value;
        prop_assert!(s2 >= -1e-12 * g0, "s² = {s2}, γ̂0 = {g0}");
        Ok(())
    })
}

pub fn q_zero_reduction(cases: u32) -> Result<(), String> {
    run(cases, series(2, 300), |x| {
        let s2 = long_run_variance(&x, &KernelWeights::bartlett(0)).unwrap().value;
        prop_assert_eq!(s2, sample_autocovariance(&x, 0).unwrap());
        Ok(())
    })
}

pub fn profile_endpoint(cases: u32) -> Result<(), String> {
    let big = prop::collection::vec(-1e6..1e6f64, 1..2000);
    run(cases, prop_oneof![series(1, 500), big], |x| {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let last = *cusum_profile(&x).last().unwrap();
        prop_assert!(last <= 1e-12 * scale, "D_n = {last}");
        Ok(())
    })
}

pub fn segment_locality(cases: u32) -> Result<(), String> {
    let input = series(40, 200).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), 20..n - 1, any::<f64>().prop_filter("finite", |v| v.is_finite()))
    });
    run(cases, input, |(mut x, k, noise)| {
        prop_assume!(varied(&x[..k]));
        let config = SplitConfig::default();
        let q = config.bandwidth.bandwidth(k).q;
        let before = cusum_statistic(&x[..k], q).unwrap();
        for v in &mut x[k..] {
            *v = noise;
        }
        prop_assert_eq!(before.to_bits(), cusum_statistic(&x[..k], q).unwrap().to_bits());
        Ok(())
    })
}

pub fn weight_shape(cases: u32) -> Result<(), String> {
    run(cases, 1..5000usize, |q| {
        let w = bartlett_weights(q);
        let w = w.weights();
        prop_assert_eq!(w.len(), q);
        prop_assert!(w.iter().all(|v| *v > 0.0 && *v < 1.0));
        prop_assert!(w.windows(2).all(|p| p[1] < p[0]));
        Ok(())
    })
}

pub fn cdf_monotone(_cases: u32) -> Result<(), String> {
    let mut prev = 0.0;
    for i in 0..=10_000 {
        let x = 4.0 * i as f64 / 10_000.0;
        let c = bridge_sup_cdf(x).map_err(|e| e.to_string())?;
        if !(0.0..=1.0).contains(&c) || c < prev {
            return Err(format!("cdf({x}) = {c} after {prev}"));
        }
        prev = c;
    }
    Ok(())
}

pub fn cdf_quantile_round_trip(cases: u32) -> Result<(), String> {
    run(cases, 0.01..0.999f64, |p| {
        let x = bridge_sup_quantile(p).unwrap();
        let back = bridge_sup_cdf(x).unwrap();
        prop_assert!((back - p).abs() < 1e-7, "cdf(quantile({p})) = {back}");
        let again = bridge_sup_quantile(back).unwrap();
        prop_assert!((again - x).abs() < 1e-7, "quantile(cdf({x})) = {again}");
        Ok(())
    })
}

pub fn critical_value_monotone(_cases: u32) -> Result<(), String> {
    let alphas = [0.20, 0.10, 0.05, 0.025, 0.01, 0.001];
    for &a in &alphas {
        let c1 = critical_value(1, a).unwrap().value;
        if c1 != bridge_sup_quantile(1.0 - a).unwrap() {
            return Err(format!("c(1, {a}) differs from the quantile"));
        }
        let mut prev = 0.0;
        for u in 1..=10 {
            let c = critical_value(u, a).unwrap().value;
            if c <= prev {
                return Err(format!("c({u}, {a}) = {c} not above {prev}"));
            }
            prev = c;
        }
    }
    for u in 1..=10 {
        for w in alphas.windows(2) {
            let (hi, lo) = (critical_value(u, w[0]).unwrap().value, critical_value(u, w[1]).unwrap().value);
            if hi >= lo {
                return Err(format!("c({u}) not decreasing in alpha at {}", w[0]));
            }
        }
    }
    Ok(())
}

fn piecewise() -> impl Strategy<Value = Vec<f64>> {
    // Up to four constant blocks plus bounded noise.
    let block = (60..200usize, -6.0..6.0f64);
    (prop::collection::vec(block, 1..5), any::<u64>()).prop_map(|(blocks, seed)| {
        let mut state = seed | 1;
        let mut out = Vec::new();
        for (len, level) in blocks {
            for _ in 0..len {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                out.push(level + (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0);
            }
        }
        out
    })
}

pub fn segmentation_structure(cases: u32) -> Result<(), String> {
    run(cases.min(64), (piecewise(), 1..4usize), |(x, k)| {
        let config = SegmentationConfig {
            max_changes: k,
            ..Default::default()
        };
        let Ok(result) = multistage_classify(&x, &config) else {
            return Ok(());
        };
        prop_assert!(result.trace_is_consistent());
        prop_assert!(result.trace.len() <= k + 1);
        for stage in &result.trace {
            // Segments partition [0, n].
            prop_assert_eq!(stage.segments[0].lo, 0);
            prop_assert_eq!(stage.segments.last().unwrap().hi, x.len());
            prop_assert!(stage.segments.windows(2).all(|w| w[0].hi == w[1].lo));
            prop_assert_eq!(stage.segments.len(), stage.stage);
            if let Some((lo, hi, at)) = stage.split {
                prop_assert!(lo < at && at < hi);
            }
        }
        if let Verdict::WeaklyDependent { changes } = result.verdict {
            prop_assert_eq!(changes, result.changepoints.len());
            prop_assert!(result.trace[..changes].iter().all(|s| s.exceeded));
        }
        prop_assert_eq!(&multistage_classify(&x, &config).unwrap(), &result);
        Ok(())
    })
}

fn process_spec() -> impl Strategy<Value = ProcessSpec> {
    let model = prop_oneof![
        (0.1..5.0f64).prop_map(|sd| Model::IidNormal { sd }),
        prop::collection::vec(-2.0..2.0f64, 1..6).prop_map(|coeffs| Model::LinearMa { coeffs }),
        (0.01..0.49f64, prop::option::of(10..100usize))
            .prop_map(|(d, truncation)| Model::Farima { d, truncation }),
        (0.01..1.0f64, 0.0..0.3f64, 0.0..0.6f64)
            .prop_map(|(w, a, b)| Model::Garch(GarchParams::garch11(w, a, b))),
        (0.01..1.0f64, 0.05..0.25f64, 0.01..0.49f64, 1..50usize).prop_map(|(a, b0, d, lags)| {
            Model::Larch {
                a,
                coeffs: LarchCoefficients::Recursive { b0, d, lags },
            }
        }),
        (0.5..0.99f64, prop::bool::ANY).prop_map(|(hurst, c)| Model::Fgn {
            hurst,
            method: if c { FgnMethod::Circulant } else { FgnMethod::Cholesky },
        }),
    ];
    (model, prop::option::of(9.0..30.0f64), prop::option::of(0..5000usize), any::<u64>()).prop_map(
        |(model, nu, burnin, seed)| {
            let gaussian = matches!(model, Model::Fgn { .. });
            ProcessSpec {
                model,
                innovation: match nu {
                    Some(nu) if !gaussian => Innovation::StudentT { nu },
                    _ => Innovation::Normal,
                },
                burnin,
                seed,
            }
        },
    )
}

pub fn spec_round_trip(cases: u32) -> Result<(), String> {
    let source = prop_oneof![
        process_spec().prop_map(Source::Process),
        (process_spec(), 0.05..0.95f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(
            |(innovation, theta, mu, delta)| Source::ChangePoint(ChangePointModelSpec {
                theta,
                mu,
                delta,
                innovation,
            })
        ),
    ];
    run(cases, source, |s| {
        let text = serde_json::to_string(&s).unwrap();
        let back: Source = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
        Ok(())
    })
}

pub fn series_round_trip(cases: u32) -> Result<(), String> {
    let value = any::<f64>().prop_filter("finite", |v| v.is_finite());
    run(cases, prop::collection::vec(value, 1..200), |x| {
        let mut buf = Vec::new();
        write_values(&mut buf, &x).unwrap();
        let back = load_series_from(buf.as_slice(), &Pipeline::default()).unwrap();
        for (a, b) in x.iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        Ok(())
    })
}

pub fn report_round_trip(cases: u32) -> Result<(), String> {
    let options = (0.01..0.2f64, 5.0..20.0f64, 10..40usize);
    run(cases.min(64), (piecewise(), options), |(x, (alpha, c, min_seg))| {
        let options = TestOptions {
            alpha,
            bandwidth: BandwidthRule::log10(c),
            min_seg,
        };
        let Ok(report) = run_segmentation_series(&x, &options, 2) else {
            return Ok(());
        };
        let back: Report = serde_json::from_str(&report.to_json()).unwrap();
        prop_assert_eq!(&back, &report);
        if let Ok(split) = split_statistics(&x, &SplitConfig::new(options.bandwidth, min_seg)) {
            let text = serde_json::to_string(&split).unwrap();
            prop_assert_eq!(serde_json::from_str::<lrdbreak::SplitTestResult>(&text).unwrap(), split);
        }
        Ok(())
    })
}
