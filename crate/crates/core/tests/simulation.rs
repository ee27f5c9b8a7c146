use lrdbreak::simulate::{
    farima_autocovariance, simulate, ChangePointModelSpec, FgnMethod, GarchParams, Generator, Model,
    ProcessSpec, Source,
};
use lrdbreak::stats::sample_autocovariance;

fn all_sources() -> Vec<Source> {
    vec![
        ProcessSpec::iid(2.0).into(),
        ProcessSpec::new(Model::LinearMa { coeffs: vec![1.0, 0.5, 0.25] }).into(),
        ProcessSpec::farima(0.3).into(),
        ProcessSpec::new(Model::Garch(GarchParams::garch11(0.1, 0.1, 0.8))).into(),
        ProcessSpec::dow_jones_garch().into(),
        ProcessSpec::long_memory_larch().into(),
        ProcessSpec::fgn(0.8, FgnMethod::Cholesky).into(),
        ProcessSpec::fgn(0.8, FgnMethod::Circulant).into(),
        ChangePointModelSpec {
            theta: 0.4,
            mu: 1.0,
            delta: -2.0,
            innovation: ProcessSpec::farima(0.2),
        }
        .into(),
    ]
}

#[test]
fn reproducible_across_runs_and_thread_counts() {
    let n = 700;
    for source in all_sources() {
        let reference: Vec<u64> = simulate(&source, n, 99).unwrap().iter().map(|v| v.to_bits()).collect();
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let again = pool.install(|| simulate(&source, n, 99).unwrap());
            let bits: Vec<u64> = again.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits, reference, "{source:?} with {threads} threads");
        }
        let other = simulate(&source, n, 100).unwrap();
        assert_ne!(other.values(), simulate(&source, n, 99).unwrap().values());
    }
}

/// `Var(S_1 - S_2)` for adjacent blocks of length `m`, given `Var(S_k)`.
fn half_difference_var(var_sum: impl Fn(usize) -> f64, m: usize) -> f64 {
    4.0 * var_sum(m) - var_sum(2 * m)
}

fn half_means_z(x: &[f64], var_diff_of_sums: f64) -> f64 {
    let m = x.len() / 2;
    let a: f64 = x[..m].iter().sum();
    let b: f64 = x[m..2 * m].iter().sum();
    (a - b) / var_diff_of_sums.sqrt()
}

#[test]
fn stationary_generators_have_stable_halves() {
    let n = 100_000;
    let m = n / 2;

    let iid = simulate(&ProcessSpec::iid(1.0).into(), n, 1).unwrap();
    assert!(half_means_z(&iid, 2.0 * m as f64).abs() < 5.0);

    let d = 0.3;
    let gamma = farima_autocovariance(d, n).unwrap();
    let var_sum = |k: usize| {
        gamma[0] * k as f64 + 2.0 * (1..k).map(|j| (k - j) as f64 * gamma[j]).sum::<f64>()
    };
    let farima = simulate(&ProcessSpec::farima(d).into(), n, 2).unwrap();
    assert!(half_means_z(&farima, half_difference_var(var_sum, m)).abs() < 5.0);

    let h = 0.8;
    let fgn = simulate(&ProcessSpec::fgn(h, FgnMethod::Circulant).into(), n, 3).unwrap();
    let var_fgn = half_difference_var(|k| (k as f64).powf(2.0 * h), m);
    assert!(half_means_z(&fgn, var_fgn).abs() < 5.0);

    // Returns are uncorrelated with the unconditional variance as scale.
    let garch = GarchParams::garch11(0.02461474, 0.06404848, 0.87864088);
    let r = simulate(&ProcessSpec::new(Model::Garch(garch.clone())).into(), n, 4).unwrap();
    assert!(half_means_z(&r, 2.0 * m as f64 * garch.unconditional_variance()).abs() < 5.0);

    let larch = simulate(&ProcessSpec::long_memory_larch().into(), n, 5).unwrap();
    let var: f64 = larch.iter().map(|v| v * v).sum::<f64>() / n as f64;
    assert!(half_means_z(&larch, 2.0 * m as f64 * var).abs() < 5.0);
}

fn acf_log_slope(source: &Source, n: usize, reps: u64, seed: u64) -> f64 {
    let g = Generator::new(source, n).unwrap();
    let lags: Vec<usize> = (10..=100).collect();
    let mut rho = vec![0.0; lags.len()];
    for r in 0..reps {
        let x = g.replicate(seed, r);
        let g0 = sample_autocovariance(&x, 0).unwrap();
        for (acc, &j) in rho.iter_mut().zip(&lags) {
            *acc += sample_autocovariance(&x, j).unwrap() / g0;
        }
    }
    let pts: Vec<(f64, f64)> =
        lags.iter().zip(&rho).map(|(&j, &r)| ((j as f64).ln(), (r / reps as f64).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn farima_and_fgn_share_decay_exponent() {
    let d = 0.35;
    let n = 50_000;
    let a = acf_log_slope(&ProcessSpec::farima(d).into(), n, 10, 17);
    let b = acf_log_slope(&ProcessSpec::fgn(d + 0.5, FgnMethod::Circulant).into(), n, 10, 18);
    assert!((a - b).abs() <= 0.15, "slopes {a} and {b}");
    assert!(a < 0.0 && b < 0.0);
}

#[test]
fn changepoint_model_adds_levels_to_innovations() {
    let spec = ChangePointModelSpec {
        theta: 0.25,
        mu: 3.0,
        delta: 1.5,
        innovation: ProcessSpec::farima(0.2),
    };
    let n = 400;
    let base = simulate(&Source::Process(spec.innovation.clone()), n, 6).unwrap();
    let shifted = simulate(&spec.clone().into(), n, 6).unwrap();
    let k = spec.break_index(n);
    assert_eq!(k, 100);
    for (i, (x, y)) in shifted.iter().zip(base.iter()).enumerate() {
        let level = if i < k { 3.0 } else { 4.5 };
        assert!((x - y - level).abs() < 1e-12);
    }
}
