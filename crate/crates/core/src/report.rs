//! Serializable reports for the split test and the segmentation procedure.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{critical_value, BandwidthRule, CriticalValue};
use crate::error::Error;
use crate::pipeline::{load_series, InputError, Pipeline};
use crate::segmentation::{multistage_classify, SegmentationConfig, SegmentationResult, Verdict};
use crate::stats::{split_statistics, SplitConfig, SplitTestResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "lrdbreak";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Input failures and computational failures, kept apart so callers can map
/// them to different exit codes.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Compute(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_computational() {
            RunError::Compute(e)
        } else {
            RunError::Input(InputError::Series(e))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    pub alpha: f64,
    pub bandwidth: BandwidthRule,
    pub min_seg: usize,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            alpha: 0.05,
            bandwidth: BandwidthRule::default(),
            min_seg: crate::stats::DEFAULT_MIN_SEG,
        }
    }
}

impl TestOptions {
    fn split(&self) -> SplitConfig {
        SplitConfig::new(self.bandwidth, self.min_seg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub pipeline: Pipeline,
    /// Textual form of the transform chain.
    pub chain: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSection {
    #[serde(flatten)]
    pub result: SplitTestResult,
    pub critical_value: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictCode {
    ChangePointNotRejected,
    ChangePointRejected,
    WeaklyDependent,
    LongRangeDependent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportVerdict {
    pub code: VerdictCode,
    pub text: String,
    pub changepoints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n: usize,
    pub alpha: f64,
    pub bandwidth: BandwidthRule,
    pub min_seg: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_changes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSection>,
    pub critical_values: Vec<CriticalValue>,
    pub verdict: ReportVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegmentationResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    fn base(command: &str, n: usize, options: &TestOptions) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo::default(),
            command: command.to_string(),
            input: None,
            seed: None,
            n,
            alpha: options.alpha,
            bandwidth: options.bandwidth,
            min_seg: options.min_seg,
            max_changes: None,
            split: None,
            critical_values: Vec::new(),
            verdict: ReportVerdict {
                code: VerdictCode::ChangePointNotRejected,
                text: String::new(),
                changepoints: Vec::new(),
            },
            segmentation: None,
            notes: Vec::new(),
        }
    }

    pub fn with_input(mut self, path: &Path, pipeline: &Pipeline) -> Self {
        self.input = Some(InputInfo {
            path: path.display().to_string(),
            pipeline: pipeline.clone(),
            chain: pipeline.to_string(),
        });
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Human-readable summary; every number in it also appears in the
    /// structured form.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.tool.name, self.tool.version, self.command);
        if let Some(input) = &self.input {
            let _ = writeln!(out, "input      {} ({})", input.path, input.chain);
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed       {seed}");
        }
        let _ = writeln!(out, "n          {}", self.n);
        let _ = writeln!(out, "alpha      {}", self.alpha);
        let _ = writeln!(out, "bandwidth  {}", describe_rule(&self.bandwidth));
        let _ = writeln!(out, "min_seg    {}", self.min_seg);
        if let Some(s) = &self.split {
            let r = &s.result;
            let _ = writeln!(out, "khat       {}", r.khat);
            let _ = writeln!(out, "T_n,1      {}  (q = {}, s = {})", r.t1, r.q1, r.s1);
            let _ = writeln!(out, "T_n,2      {}  (q = {}, s = {})", r.t2, r.q2, r.s2);
            let _ = writeln!(out, "M_n        {}", r.mn);
        }
        for c in &self.critical_values {
            let _ = writeln!(out, "c({})       {}", c.u, c.value);
        }
        if let Some(seg) = &self.segmentation {
            for stage in &seg.trace {
                let _ = write!(
                    out,
                    "stage {}    max T = {} vs c = {}{}",
                    stage.stage,
                    stage.statistic,
                    stage.critical_value,
                    if stage.exceeded { " exceeded" } else { "" }
                );
                if let Some((lo, hi, at)) = stage.split {
                    let _ = write!(out, ", split {lo}..{hi} at {at}");
                }
                out.push('\n');
            }
            if seg.exhausted_by_min_seg {
                out.push_str("note       no segment long enough to split further\n");
            }
        }
        if !self.verdict.changepoints.is_empty() {
            let cps: Vec<String> = self.verdict.changepoints.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "changes at {}", cps.join(", "));
        }
        let _ = writeln!(out, "verdict    {}", self.verdict.text);
        for note in &self.notes {
            let _ = writeln!(out, "note       {note}");
        }
        out
    }
}

fn describe_rule(rule: &BandwidthRule) -> String {
    match rule {
        BandwidthRule::Log10 { multiplier } => format!("q(n) = floor({multiplier} log10 n)"),
        BandwidthRule::Power { multiplier, exponent } => {
            format!("q(n) = floor({multiplier} n^{exponent})")
        }
    }
}

/// The split test on an in-memory series.
pub fn run_test_series(x: &[f64], options: &TestOptions) -> Result<Report, RunError> {
    let result = split_statistics(x, &options.split())?;
    let critical = critical_value(2, options.alpha)?;
    let rejected = result.mn > critical.value;
    let mut report = Report::base("test", x.len(), options);
    report.split = Some(SplitSection {
        result,
        critical_value: critical.value,
        rejected,
    });
    report.critical_values = vec![critical];
    report.verdict = if rejected {
        ReportVerdict {
            code: VerdictCode::ChangePointRejected,
            text: "change-point model rejected in favour of long-range dependence".into(),
            changepoints: Vec::new(),
        }
    } else {
        ReportVerdict {
            code: VerdictCode::ChangePointNotRejected,
            text: "change-point model not rejected".into(),
            changepoints: vec![result.khat],
        }
    };
    Ok(report)
}

pub fn run_test(path: impl AsRef<Path>, pipeline: &Pipeline, options: &TestOptions) -> Result<Report, RunError> {
    let x = load_series(path.as_ref(), pipeline)?;
    Ok(run_test_series(&x, options)?.with_input(path.as_ref(), pipeline))
}

/// The multistage procedure on an in-memory series.
pub fn run_segmentation_series(
    x: &[f64],
    options: &TestOptions,
    max_changes: usize,
) -> Result<Report, RunError> {
    let config = SegmentationConfig {
        max_changes,
        alpha: options.alpha,
        split: options.split(),
    };
    let result = multistage_classify(x, &config)?;
    let mut report = Report::base("segment", x.len(), options);
    report.max_changes = Some(max_changes);
    report.critical_values = result
        .trace
        .iter()
        .map(|s| critical_value(s.stage, options.alpha))
        .collect::<Result<_, _>>()?;
    report.verdict = ReportVerdict {
        code: match result.verdict {
            Verdict::WeaklyDependent { .. } => VerdictCode::WeaklyDependent,
            Verdict::LongRangeDependent => VerdictCode::LongRangeDependent,
        },
        text: result.verdict.to_string(),
        changepoints: result.changepoints.clone(),
    };
    if result.exhausted_by_min_seg {
        report
            .notes
            .push("stopped early: every segment is too short to split under min_seg".into());
    }
    report.segmentation = Some(result);
    Ok(report)
}

pub fn run_segmentation(
    path: impl AsRef<Path>,
    pipeline: &Pipeline,
    options: &TestOptions,
    max_changes: usize,
) -> Result<Report, RunError> {
    let x = load_series(path.as_ref(), pipeline)?;
    Ok(run_segmentation_series(&x, options, max_changes)?.with_input(path.as_ref(), pipeline))
}
