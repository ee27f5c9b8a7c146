use std::fmt::Write;

use lrdbreak::asymptotics::BandwidthReport;
use lrdbreak::diagnostics::Diagnostics;
use lrdbreak::experiments::RejectionTable;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| v.to_string())
}

pub fn rejection_table(t: &RejectionTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n {}  replications {}  seed {}  statistic {:?}  transform {:?}",
        t.n, t.replications, t.master_seed, t.statistic, t.transform
    );
    let _ = writeln!(out, "innovations: {}", t.innovation);
    let _ = writeln!(out, "alpha\tcritical\trejections\tfraction\tstd_error");
    for l in &t.levels {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            l.alpha, l.critical_value, l.rejections, l.fraction, l.std_error
        );
    }
    let f = &t.failures;
    let _ = writeln!(
        out,
        "failures: zero_variance {} negative_variance {} segment_too_short {} other {}",
        f.zero_variance, f.negative_variance, f.segment_too_short, f.other
    );
    out
}

pub fn diagnostics(d: &Diagnostics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# n {} max_lag {} window {}", d.n, d.max_lag, d.window);
    if d.degenerate {
        out.push_str("# constant input: autocorrelations beyond lag 0 set to 0\n");
    }
    out.push_str("lag\tacf\n");
    for r in &d.acf {
        let _ = writeln!(out, "{}\t{}", r.lag, r.acf);
    }
    out.push_str("\nj\tfrequency\traw\tsmoothed\tlog10_frequency\tlog10_raw\tlog10_smoothed\n");
    for r in &d.periodogram {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.j,
            r.frequency,
            r.raw,
            r.smoothed,
            r.log10_frequency,
            opt(r.log10_raw),
            opt(r.log10_smoothed)
        );
    }
    out
}

pub fn bandwidth(r: &BandwidthReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rule {:?}  n_max {}  hurst {}", r.rule, r.n_max, opt(r.hurst));
    for c in &r.checks {
        let _ = writeln!(
            out,
            "{} {}: {}",
            if c.passed { "pass" } else { "FAIL" },
            c.condition,
            c.detail
        );
    }
    out.push_str("(grid checks are necessary at scale, not a proof)\n");
    out
}
