//! The `fftu` benchmark and verification tool.
//!
//! Exit codes: 0 on success, 1 on verification failure or I/O error, 2 on a
//! usage or shape/grid constraint error, 3 when `--verify` is requested for a
//! signal larger than the oracle cap.

mod report;
pub mod signal_io;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use report::{RunReport, Speedup, TraceSummary, TransformMode, Verification};
pub use signal_io::{read_signal, write_signal};

use crate::bsp::{CostModel, ExecMode, SuperstepTrace};
use crate::distribution::ProcGrid;
use crate::engine::{fftu_inverse, fftu_transform, FftuPlan};
use crate::error::Error;
use crate::kernel::{
    dft_naive_md, relative_l2, ComplexSample, Direction, TensorShape, TensorSignal,
};

pub const DEFAULT_ORACLE_CAP: usize = 65536;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Parser, Debug, Clone)]
#[command(
    name = "fftu",
    version,
    about = "Cyclic-to-cyclic parallel multidimensional FFT on virtual BSP processors"
)]
pub struct Args {
    /// Global array shape, e.g. 64x64x64. Taken from --input when omitted.
    #[arg(long)]
    pub shape: Option<String>,

    /// Processor grid, e.g. 2x2x1 (defaults to all ones).
    #[arg(long)]
    pub grid: Option<String>,

    /// Run the inverse transform.
    #[arg(long, conflicts_with = "roundtrip")]
    pub inverse: bool,

    /// Run forward followed by inverse without redistribution.
    #[arg(long)]
    pub roundtrip: bool,

    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub iterations: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Compare against the naive DFT oracle.
    #[arg(long)]
    pub verify: bool,

    /// Read the input signal from a binary signal file.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Write the gathered output signal.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,

    /// Write the superstep trace as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// Run virtual processors one after another (same as FFTU_SERIAL=1).
    #[arg(long)]
    pub serial: bool,

    /// Largest N for which --verify is allowed.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,

    /// JSON report of an earlier run to compute speedup against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,

    /// BSP cost per communicated word.
    #[arg(long, default_value_t = 1.0)]
    pub bsp_g: f64,

    /// BSP cost per charged synchronization.
    #[arg(long, default_value_t = 0.0)]
    pub bsp_l: f64,
}

/// A fully validated run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: TensorSignal,
    pub grid: ProcGrid,
    pub mode: TransformMode,
    pub iterations: usize,
    pub seed: u64,
    pub verify: bool,
    pub output_path: Option<PathBuf>,
    pub trace_path: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub exec: ExecMode,
    pub cost: CostModel,
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Domain(_) | Error::UnsupportedLength { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Deterministic test signal: ChaCha8 seeded with `seed`; each component is
/// `2 u - 1` with `u = (next_u64 >> 11) * 2^-53`, real part first, row-major.
pub fn generate_input(shape: &TensorShape, seed: u64) -> TensorSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = || {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * u - 1.0
    };
    let data = (0..shape.len())
        .map(|_| {
            let re = uniform();
            let im = uniform();
            Complex64::new(re, im)
        })
        .collect();
    TensorSignal::new(shape.clone(), data).expect("generated length matches shape")
}

/// Verification threshold on relative L2 error, growing mildly with size.
pub fn verify_tolerance(n: usize) -> f64 {
    1e-11 * (1.0f64).max((n as f64).log2() / 10.0)
}

impl RunConfig {
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let from_file = args.input.as_deref().map(read_signal).transpose()?;
        let shape = match (&args.shape, &from_file) {
            (Some(s), file) => {
                let shape: TensorShape = s
                    .parse()
                    .map_err(|e: Error| CliError::usage(e.to_string()))?;
                if let Some(x) = file {
                    if x.shape() != &shape {
                        return Err(CliError::usage(format!(
                            "--shape {shape} does not match input file shape {}",
                            x.shape()
                        )));
                    }
                }
                shape
            }
            (None, Some(x)) => x.shape().clone(),
            (None, None) => return Err(CliError::usage("either --shape or --input is required")),
        };
        let grid = match &args.grid {
            Some(g) => g
                .parse()
                .map_err(|e: Error| CliError::usage(e.to_string()))?,
            None => ProcGrid::ones(shape.ndim()),
        };
        if args.verify && shape.len() > args.oracle_cap {
            return Err(CliError {
                code: 3,
                message: format!(
                    "--verify needs the O(N^2) oracle; N = {} exceeds the cap {} (see --oracle-cap)",
                    shape.len(),
                    args.oracle_cap
                ),
            });
        }
        let mode = if args.roundtrip {
            TransformMode::Roundtrip
        } else if args.inverse {
            TransformMode::Inverse
        } else {
            TransformMode::Forward
        };
        let exec = if args.serial {
            ExecMode::Serial
        } else {
            ExecMode::from_env()
        };
        let input = from_file.unwrap_or_else(|| generate_input(&shape, args.seed));
        Ok(Self {
            input,
            grid,
            mode,
            iterations: args.iterations as usize,
            seed: args.seed,
            verify: args.verify,
            output_path: args.output.clone(),
            trace_path: args.trace.clone(),
            baseline: args.baseline.clone(),
            exec,
            cost: CostModel::new(args.bsp_g, args.bsp_l)?,
        })
    }
}

/// Output of [`run`]: the report plus the gathered result.
pub struct RunOutcome {
    pub report: RunReport,
    pub output: TensorSignal,
    pub trace: SuperstepTrace,
}

fn naive_inverse(x: &TensorSignal) -> TensorSignal {
    let n = x.shape().len() as f64;
    let conj = TensorSignal::new(
        x.shape().clone(),
        x.data().iter().map(|v| v.conj()).collect(),
    )
    .expect("same shape");
    let y = dft_naive_md(&conj);
    TensorSignal::new(
        x.shape().clone(),
        y.data().iter().map(|v| v.conj() / n).collect(),
    )
    .expect("same shape")
}

fn verify(output: &TensorSignal, reference: &TensorSignal) -> Verification {
    let n = reference.shape().len();
    let residual = relative_l2(output.data(), reference.data());
    let tolerance = verify_tolerance(n);
    let passed = residual <= tolerance;
    let first_mismatch = (!passed).then(|| {
        let scale = reference
            .data()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let errors: Vec<f64> = output
            .data()
            .iter()
            .zip(reference.data())
            .map(|(a, b)| (a - b).norm())
            .collect();
        let idx = errors
            .iter()
            .position(|&e| !(e <= tolerance * scale))
            .unwrap_or_else(|| {
                errors
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            });
        reference.shape().coord_of(idx)
    });
    Verification {
        residual,
        tolerance,
        passed,
        first_mismatch,
    }
}

fn transform_once(
    plan: &FftuPlan,
    work: &mut [Vec<ComplexSample>],
    mode: TransformMode,
    exec: ExecMode,
) -> crate::error::Result<SuperstepTrace> {
    match mode {
        TransformMode::Forward => fftu_transform(work, plan, exec),
        TransformMode::Inverse => fftu_inverse(work, plan, exec),
        TransformMode::Roundtrip => {
            let mut trace = fftu_transform(work, plan, exec)?;
            trace.extend(fftu_inverse(work, plan, exec)?);
            Ok(trace)
        }
    }
}

/// Executes a configuration: repeated timed transforms, optional
/// verification, output and trace files.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let shape = config.input.shape().clone();
    let direction = match config.mode {
        TransformMode::Inverse => Direction::Inverse,
        _ => Direction::Forward,
    };
    let plan = FftuPlan::new(shape.clone(), config.grid.clone(), direction)?;
    let input = plan.distribute(&config.input)?;
    let mut work = input.clone();

    let mut trace = SuperstepTrace::default();
    let start = Instant::now();
    for i in 0..config.iterations {
        if i > 0 {
            for (w, x) in work.iter_mut().zip(&input) {
                w.copy_from_slice(x);
            }
        }
        trace = transform_once(&plan, &mut work, config.mode, config.exec)?;
    }
    let wall = start.elapsed().as_secs_f64();
    let per_iter = wall / config.iterations as f64;

    let output = plan.collect(&work)?;
    let n = shape.len();
    let flops_per_iter = config.mode.transforms() as f64 * 5.0 * n as f64 * (n as f64).log2();
    let gflops = if per_iter > 0.0 {
        flops_per_iter / per_iter * 1e-9
    } else {
        0.0
    };

    let verification = config.verify.then(|| {
        let reference = match config.mode {
            TransformMode::Forward => dft_naive_md(&config.input),
            TransformMode::Inverse => naive_inverse(&config.input),
            TransformMode::Roundtrip => config.input.clone(),
        };
        verify(&output, &reference)
    });

    let speedup = match &config.baseline {
        Some(path) => {
            let base = RunReport::read_json(path)?;
            Some(Speedup {
                baseline_nprocs: base.nprocs,
                baseline_time_per_iteration_s: base.time_per_iteration_s,
                speedup: if per_iter > 0.0 {
                    base.time_per_iteration_s / per_iter
                } else {
                    0.0
                },
            })
        }
        None => None,
    };

    if let Some(path) = &config.output_path {
        write_signal(path, &output)?;
    }
    if let Some(path) = &config.trace_path {
        trace.write_json(path)?;
    }

    let report = RunReport {
        shape: shape.dims().to_vec(),
        grid: config.grid.dims().to_vec(),
        nprocs: config.grid.nprocs(),
        elements: n,
        mode: config.mode,
        execution: config.exec,
        iterations: config.iterations,
        seed: config.seed,
        wall_time_s: wall,
        time_per_iteration_s: per_iter,
        gflops,
        trace: TraceSummary::new(&trace, config.cost),
        verification,
        speedup,
    };
    Ok(RunOutcome {
        report,
        output,
        trace,
    })
}

/// Parses `argv`, runs, prints the report and returns the exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&args) {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("fftu: {}", e.message);
            e.code
        }
    }
}

/// Runs parsed arguments; returns the rendered report and whether verification
/// (if any) passed.
pub fn execute(args: &Args) -> Result<(String, bool), CliError> {
    let config = RunConfig::from_args(args)?;
    let outcome = run(&config)?;
    let text = match args.report {
        ReportFormat::Text => outcome.report.to_text(),
        ReportFormat::Json => outcome.report.to_json()? + "\n",
    };
    if let Some(v) = &outcome.report.verification {
        if !v.passed {
            eprintln!(
                "fftu: verification failed: residual {:.3e} > {:.1e}, first mismatch at {:?}",
                v.residual,
                v.tolerance,
                v.first_mismatch.as_deref().unwrap_or(&[])
            );
        }
    }
    let passed = outcome
        .report
        .verification
        .as_ref()
        .is_none_or(|v| v.passed);
    Ok((text, passed))
}
