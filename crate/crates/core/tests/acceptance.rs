//! One line per acceptance criterion; exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{legal_factors, legal_grids, random_signal, random_vec, ORACLE_SHAPES};
use fftu::bsp::SuperstepKind;
use fftu::fourstep::{four_step, SplitPlan};
use fftu::kernel::{relative_l2, MAX_NAIVE_PRIME};
use fftu::{
    dft_naive, dft_naive_md, fftu_inverse, fftu_transform, max_processors, Direction, Error,
    ExecMode, FftuPlan, ProcGrid, Strategy, SuperstepTrace, TensorShape,
};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Run {
    dims: Vec<usize>,
    grid: ProcGrid,
    plan: FftuPlan,
    locals: Vec<Vec<fftu::ComplexSample>>,
    trace: SuperstepTrace,
    residual: f64,
}

fn oracle_runs() -> Vec<Run> {
    let mut runs = Vec::new();
    for (i, dims) in ORACLE_SHAPES.iter().enumerate() {
        let x = random_signal(dims, 1000 + i as u64);
        let want = dft_naive_md(&x);
        for grid in legal_grids(dims) {
            let plan = FftuPlan::new(x.shape().clone(), grid.clone(), Direction::Forward).unwrap();
            let mut locals = plan.distribute(&x).unwrap();
            let trace = fftu_transform(&mut locals, &plan, ExecMode::Parallel).unwrap();
            let y = plan.collect(&locals).unwrap();
            runs.push(Run {
                dims: dims.to_vec(),
                grid,
                plan,
                locals,
                trace,
                residual: relative_l2(y.data(), want.data()),
            });
        }
    }
    runs
}

fn label(r: &Run) -> String {
    let d: Vec<String> = r.dims.iter().map(usize::to_string).collect();
    format!("{} on {}", d.join("x"), r.grid)
}

fn c1_oracle(runs: &[Run], secs: f64) -> Verdict {
    let worst = runs
        .iter()
        .max_by(|a, b| a.residual.total_cmp(&b.residual))
        .unwrap();
    let detail = format!(
        "{} runs, worst residual {:.2e} ({}), {:.2} s",
        runs.len(),
        worst.residual,
        label(worst),
        secs
    );
    if worst.residual <= 1e-11 && secs < 60.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c2_four_step() -> Verdict {
    let mut count = 0;
    let mut rejected = Vec::new();
    let mut unexpected = Vec::new();
    let mut worst = 0.0f64;
    for n in 1..=256 {
        let x = random_vec(n, n as u64);
        let want = dft_naive(&x).unwrap();
        for p in legal_factors(n) {
            match four_step(&x, SplitPlan::new(n, p).unwrap()) {
                Ok(y) => {
                    worst = worst.max(relative_l2(&y, &want));
                    count += 1;
                }
                // lengths with a prime factor above the kernel limit are rejected by design
                Err(Error::UnsupportedLength { factor, .. }) if factor > MAX_NAIVE_PRIME => {
                    rejected.push(format!("({n},{p})"))
                }
                Err(e) => unexpected.push(format!("({n},{p}): {e}")),
            }
        }
    }
    let detail = format!(
        "{count} (n, p) pairs, worst residual {worst:.2e}; {} pairs with a prime factor > {MAX_NAIVE_PRIME} rejected with UnsupportedLength",
        rejected.len()
    );
    if !unexpected.is_empty() {
        return Verdict::Fail(format!("{detail}; unexpected errors {unexpected:?}"));
    }
    if worst <= 1e-11 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c3_placement(runs: &[Run]) -> Verdict {
    let mut checked = 0usize;
    for r in runs {
        let map = r.plan.map();
        let shape = r.plan.shape();
        let x = random_signal(
            &r.dims,
            1000 + ORACLE_SHAPES
                .iter()
                .position(|d| *d == &r.dims[..])
                .unwrap() as u64,
        );
        let want = dft_naive_md(&x);
        let scale = want.data().iter().map(|v| v.norm()).fold(1.0, f64::max);
        let local = r.plan.local_shape();
        for (rank, block) in r.locals.iter().enumerate() {
            let s = r.grid.coord_of(rank);
            for (i, v) in block.iter().enumerate() {
                let k = local.coord_of(i);
                let j = map.local_to_global(&s, &k).unwrap();
                if map.global_to_local(&j).unwrap() != (s.clone(), k.clone()) {
                    return Verdict::Fail(format!("{}: map not inverse at {j:?}", label(r)));
                }
                let expect = want.data()[shape.linear_index(&j).unwrap()];
                if (v - expect).norm() > 1e-11 * scale {
                    return Verdict::Fail(format!(
                        "{}: rank {rank} local {k:?} does not hold Y{j:?}",
                        label(r)
                    ));
                }
                checked += 1;
            }
        }
        let late =
            r.trace.supersteps.iter().skip(2).any(|s| {
                s.kind == SuperstepKind::Communicate || s.words_sent.iter().any(|&w| w > 0)
            });
        if late {
            return Verdict::Fail(format!(
                "{}: communication in or after Superstep 2",
                label(r)
            ));
        }
    }
    Verdict::Pass(format!(
        "{checked} output elements at their cyclic position; no communication from Superstep 2 on"
    ))
}

fn parallel_runs(runs: &[Run]) -> impl Iterator<Item = &Run> {
    runs.iter().filter(|r| r.grid.nprocs() > 1)
}

fn c4_single_exchange(runs: &[Run]) -> Verdict {
    let mut n = 0;
    for r in parallel_runs(runs) {
        let (c, s) = (r.trace.communicate_count(), r.trace.syncs_charged());
        if c != 1 || s != 1 {
            return Verdict::Fail(format!(
                "{}: {c} communicate supersteps, {s} syncs",
                label(r)
            ));
        }
        n += 1;
    }
    Verdict::Pass(format!(
        "{n} runs with p > 1: 1 communicate superstep, 1 sync each"
    ))
}

fn c5_volume(runs: &[Run]) -> Verdict {
    let mut n = 0;
    for r in parallel_runs(runs) {
        let want = (r.plan.shape().len() / r.grid.nprocs()) as u64;
        let sent = r.trace.words_sent_per_rank();
        let recv = r.trace.words_received_per_rank();
        if sent.iter().chain(&recv).any(|&w| w != want) {
            return Verdict::Fail(format!(
                "{}: expected {want} words, sent {sent:?} received {recv:?}",
                label(r)
            ));
        }
        n += 1;
    }
    Verdict::Pass(format!(
        "{n} runs: every rank sends and receives exactly N/p words"
    ))
}

fn c6_flops() -> Verdict {
    let x = random_signal(&[8, 8, 8], 6);
    let n = 512f64;
    let mut worst_ratio = 0.0f64;
    let mut rows = Vec::new();
    for g in 0..8usize {
        let grid = [1 + (g >> 2 & 1), 1 + (g >> 1 & 1), 1 + (g & 1)];
        let plan = FftuPlan::new(
            x.shape().clone(),
            ProcGrid::new(grid).unwrap(),
            Direction::Forward,
        )
        .unwrap();
        let mut locals = plan.distribute(&x).unwrap();
        let trace = fftu_transform(&mut locals, &plan, ExecMode::Serial).unwrap();
        let per = n / plan.nprocs() as f64;
        let bound = 5.0 * per * n.log2() + 12.0 * per;
        let measured = trace.flops_per_rank().into_iter().max().unwrap() as f64;
        worst_ratio = worst_ratio.max(measured / bound);
        rows.push(format!("{grid:?}:{measured}/{bound}"));
    }
    let detail = format!("max measured/model {worst_ratio:.3} [{}]", rows.join(" "));
    if worst_ratio <= 1.10 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c7_roundtrip() -> Verdict {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (i, dims) in ORACLE_SHAPES.iter().enumerate() {
        let x = random_signal(dims, 7000 + i as u64);
        for grid in legal_grids(dims) {
            let plan = FftuPlan::new(x.shape().clone(), grid, Direction::Forward).unwrap();
            let mut locals = plan.distribute(&x).unwrap();
            fftu_transform(&mut locals, &plan, ExecMode::Parallel).unwrap();
            fftu_inverse(&mut locals, &plan, ExecMode::Parallel).unwrap();
            let y = plan.collect(&locals).unwrap();
            worst = worst.max(relative_l2(y.data(), x.data()));
            count += 1;
        }
    }
    let detail = format!("{count} plans, worst residual {worst:.2e}");
    if worst <= 1e-11 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c8_pmax() -> Verdict {
    let mut notes = Vec::new();
    for dims in [&[1024usize, 1024, 1024][..], &[16_777_216, 64]] {
        let got = max_processors(&TensorShape::new(dims).unwrap(), Strategy::Cyclic).unwrap();
        if got != 32768 {
            return Verdict::Fail(format!("{dims:?}: {got}, expected 32768"));
        }
        notes.push(format!("{dims:?}={got}"));
    }
    for dims in ORACLE_SHAPES {
        let square = dims.iter().all(|&n| {
            let r = (n as f64).sqrt().round() as usize;
            r * r == n
        });
        if !square {
            continue;
        }
        let shape = TensorShape::new(*dims).unwrap();
        let root = (shape.len() as f64).sqrt().round() as u64;
        let got = max_processors(&shape, Strategy::Cyclic).unwrap();
        if got != root {
            return Verdict::Fail(format!("{dims:?}: {got}, expected sqrt(N) = {root}"));
        }
        notes.push(format!("{dims:?}={got}"));
    }
    Verdict::Pass(notes.join(", "))
}

fn c9_twiddles(runs: &[Run]) -> Verdict {
    for r in runs {
        let want: usize = r.dims.iter().zip(r.grid.dims()).map(|(n, p)| n / p).sum();
        for rank in 0..r.grid.nprocs() {
            let got = r.plan.twiddle_table(rank).len();
            if got != want {
                return Verdict::Fail(format!(
                    "{} rank {rank}: {got} entries, expected {want}",
                    label(r)
                ));
            }
        }
    }
    Verdict::Pass(format!(
        "{} plans: table size = sum n_l/p_l on every rank",
        runs.len()
    ))
}

fn c10_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_fftu");
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, serial: bool| -> Vec<u8> {
        let path = dir.path().join(name);
        let mut cmd = Command::new(bin);
        cmd.args([
            "--shape",
            "16x8x4",
            "--grid",
            "4x2x2",
            "--seed",
            "31",
            "--roundtrip",
            "--output",
        ])
        .arg(&path)
        .env_remove("FFTU_SERIAL");
        if serial {
            cmd.arg("--serial");
        }
        let status = cmd.output().unwrap().status;
        assert!(status.success(), "fftu exited with {status}");
        std::fs::read(Path::new(&path)).unwrap()
    };
    let p1 = run("p1", false);
    let p2 = run("p2", false);
    let s1 = run("s1", true);
    let s2 = run("s2", true);
    let detail = format!(
        "parallel runs identical: {}, serial runs identical: {}, parallel = serial: {}",
        p1 == p2,
        s1 == s2,
        p1 == s1
    );
    if p1 == p2 && s1 == s2 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c11_scaling() -> Verdict {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let x = random_signal(&[256, 256, 16], 11);
    let time = |grid: [usize; 3]| {
        let plan = FftuPlan::new(
            x.shape().clone(),
            ProcGrid::new(grid).unwrap(),
            Direction::Forward,
        )
        .unwrap();
        let input = plan.distribute(&x).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let mut locals = input.clone();
            let start = Instant::now();
            fftu_transform(&mut locals, &plan, ExecMode::Parallel).unwrap();
            best = best.min(start.elapsed().as_secs_f64());
        }
        best
    };
    let t1 = time([1, 1, 1]);
    let t4 = time([2, 2, 1]);
    let detail = format!("p=1 {t1:.3} s, p=4 {t4:.3} s, {cores} core(s) available");
    if cores < 4 {
        Verdict::Skip(format!("{detail}; needs a machine with at least 4 cores"))
    } else if t4 < t1 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn main() {
    let start = Instant::now();
    let runs = oracle_runs();
    let secs = start.elapsed().as_secs_f64();

    let results: Vec<(&str, Verdict)> = vec![
        ("oracle equivalence", c1_oracle(&runs, secs)),
        ("four-step equivalence", c2_four_step()),
        ("distribution invariance", c3_placement(&runs)),
        ("single all-to-all", c4_single_exchange(&runs)),
        ("communication volume", c5_volume(&runs)),
        ("flop accounting", c6_flops()),
        ("roundtrip", c7_roundtrip()),
        ("p_max reporting", c8_pmax()),
        ("twiddle table size", c9_twiddles(&runs)),
        ("determinism", c10_determinism()),
        ("strong scaling sanity", c11_scaling()),
    ];

    let mut failed = 0;
    for (i, (name, verdict)) in results.iter().enumerate() {
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] {:>2} {name}: {detail}", i + 1);
    }
    println!("acceptance: {} criteria, {failed} failed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
