use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bsp::{cost_report, CostModel, SuperstepTrace};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMode {
    Forward,
    Inverse,
    Roundtrip,
}

impl TransformMode {
    /// Transforms executed per iteration.
    pub fn transforms(self) -> usize {
        match self {
            TransformMode::Roundtrip => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub supersteps: usize,
    pub communicate_supersteps: usize,
    pub syncs_charged: u32,
    pub max_words_sent: u64,
    pub max_words_received: u64,
    pub max_flops_per_rank: u64,
    pub bsp_g: f64,
    pub bsp_l: f64,
    pub bsp_cost: f64,
}

impl TraceSummary {
    pub fn new(trace: &SuperstepTrace, model: CostModel) -> Self {
        Self {
            supersteps: trace.supersteps.len(),
            communicate_supersteps: trace.communicate_count(),
            syncs_charged: trace.syncs_charged(),
            max_words_sent: trace.words_sent_per_rank().into_iter().max().unwrap_or(0),
            max_words_received: trace
                .words_received_per_rank()
                .into_iter()
                .max()
                .unwrap_or(0),
            max_flops_per_rank: trace.flops_per_rank().into_iter().max().unwrap_or(0),
            bsp_g: model.g,
            bsp_l: model.l,
            bsp_cost: cost_report(trace, model),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Global coordinate of the first element outside tolerance.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_mismatch: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub baseline_nprocs: usize,
    pub baseline_time_per_iteration_s: f64,
    pub speedup: f64,
}

/// Everything one CLI run reports. All fields except the wall times are
/// deterministic for a given configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub shape: Vec<usize>,
    pub grid: Vec<usize>,
    pub nprocs: usize,
    pub elements: usize,
    pub mode: TransformMode,
    pub execution: crate::bsp::ExecMode,
    pub iterations: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub time_per_iteration_s: f64,
    /// `transforms * 5 N log2 N / time_per_iteration`, in Gflop/s.
    pub gflops: f64,
    pub trace: TraceSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verification: Option<Verification>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub speedup: Option<Speedup>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let dims = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        let mode = match self.mode {
            TransformMode::Forward => "forward",
            TransformMode::Inverse => "inverse",
            TransformMode::Roundtrip => "roundtrip",
        };
        let exec = match self.execution {
            crate::bsp::ExecMode::Parallel => "parallel",
            crate::bsp::ExecMode::Serial => "serial",
        };
        let _ = writeln!(
            s,
            "fftu {mode}: shape {} on grid {} (p = {}, N = {}), {exec} execution",
            dims(&self.shape),
            dims(&self.grid),
            self.nprocs,
            self.elements
        );
        let _ = writeln!(
            s,
            "  iterations        {} (seed {})",
            self.iterations, self.seed
        );
        let _ = writeln!(s, "  wall time         {:.6e} s", self.wall_time_s);
        let _ = writeln!(s, "  time/iteration    {:.6e} s", self.time_per_iteration_s);
        let _ = writeln!(
            s,
            "  flop rate         {:.3} Gflop/s (5 N log2 N)",
            self.gflops
        );
        let t = &self.trace;
        let _ = writeln!(
            s,
            "  supersteps        {} ({} communicate, {} sync charged)",
            t.supersteps, t.communicate_supersteps, t.syncs_charged
        );
        let _ = writeln!(
            s,
            "  words per rank    {} sent, {} received",
            t.max_words_sent, t.max_words_received
        );
        let _ = writeln!(s, "  flops per rank    {}", t.max_flops_per_rank);
        let _ = writeln!(
            s,
            "  BSP cost          {} (g = {}, l = {})",
            t.bsp_cost, t.bsp_g, t.bsp_l
        );
        if let Some(v) = &self.verification {
            let _ = writeln!(
                s,
                "  residual          {:.3e} (tolerance {:.1e}) {}",
                v.residual,
                v.tolerance,
                if v.passed { "PASS" } else { "FAIL" }
            );
            if let Some(idx) = &v.first_mismatch {
                let _ = writeln!(s, "  first mismatch    {idx:?}");
            }
        }
        if let Some(sp) = &self.speedup {
            let _ = writeln!(s, "  {:>8} {:>14} {:>9}", "p", "time (s)", "speedup");
            let _ = writeln!(
                s,
                "  {:>8} {:>14.6e} {:>9.2}",
                sp.baseline_nprocs, sp.baseline_time_per_iteration_s, 1.0
            );
            let _ = writeln!(
                s,
                "  {:>8} {:>14.6e} {:>9.2}",
                self.nprocs, self.time_per_iteration_s, sp.speedup
            );
        }
        s
    }
}
