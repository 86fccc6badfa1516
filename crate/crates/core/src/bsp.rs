//! A miniature bulk synchronous parallel runtime.
//!
//! `p` virtual processors run an SPMD program as a fixed sequence of
//! supersteps. Within a superstep each rank only touches its own
//! [`Processor`] memory and may issue one-sided [`RankContext::put`]s. Puts are
//! buffered and written into the destination registers at the barrier that
//! ends the superstep, so they become visible at the start of the next one.
//!
//! Ranks run either on scoped worker threads ([`ExecMode::Parallel`]) or one
//! after another in rank order ([`ExecMode::Serial`]). Delivery order is by
//! source rank in both modes, so results are bit-identical.
//!
//! Every superstep is recorded in a [`SuperstepTrace`] with formula-annotated
//! flop counts and the words each rank sent and received. Following the usual
//! BSP accounting for Put-only programs, only communication supersteps are
//! charged a synchronization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ComplexSample;

/// Environment variable that forces serial execution when set to `1`.
pub const SERIAL_ENV: &str = "FFTU_SERIAL";

pub type RegisterId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Parallel,
    Serial,
}

impl ExecMode {
    /// `Serial` when `FFTU_SERIAL=1`, otherwise `Parallel`.
    pub fn from_env() -> Self {
        match std::env::var(SERIAL_ENV) {
            Ok(v) if v.trim() == "1" => ExecMode::Serial,
            _ => ExecMode::Parallel,
        }
    }
}

/// A strided box inside a destination register: `start + i * stride` per
/// dimension for `i < count`, enumerated row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub start: Vec<usize>,
    pub stride: Vec<usize>,
    pub count: Vec<usize>,
}

impl Region {
    pub fn new(start: Vec<usize>, stride: Vec<usize>, count: Vec<usize>) -> Result<Self> {
        if start.len() != stride.len() || start.len() != count.len() || start.is_empty() {
            return Err(Error::Config(
                "region start, stride and count must have the same nonzero length".into(),
            ));
        }
        if stride.iter().any(|&s| s == 0) {
            return Err(Error::Config("region strides must be positive".into()));
        }
        Ok(Self {
            start,
            stride,
            count,
        })
    }

    pub fn contiguous(start: Vec<usize>, count: Vec<usize>) -> Result<Self> {
        let stride = vec![1; start.len()];
        Self::new(start, stride, count)
    }

    pub fn len(&self) -> usize {
        self.count.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_within(&self, shape: &[usize]) -> Result<()> {
        if shape.len() != self.start.len() {
            return Err(Error::Bounds(format!(
                "region has {} dimensions, register has {}",
                self.start.len(),
                shape.len()
            )));
        }
        for (l, &n) in shape.iter().enumerate() {
            if self.count[l] == 0 {
                continue;
            }
            let last = self.start[l] + (self.count[l] - 1) * self.stride[l];
            if last >= n {
                return Err(Error::Bounds(format!(
                    "region reaches index {last} in dimension {l} of size {n}"
                )));
            }
        }
        Ok(())
    }

    /// Calls `f(base, stride, run)` for every innermost run, in row-major
    /// payload order. `run` consecutive payload elements go to
    /// `base + i * stride`.
    fn for_each_run(&self, shape: &[usize], mut f: impl FnMut(usize, usize, usize)) {
        if self.is_empty() {
            return;
        }
        let d = shape.len();
        let mut reg_strides = vec![1; d];
        for l in (0..d - 1).rev() {
            reg_strides[l] = reg_strides[l + 1] * shape[l + 1];
        }
        let inner_stride = self.stride[d - 1] * reg_strides[d - 1];
        let inner_count = self.count[d - 1];
        let mut idx = vec![0usize; d - 1];
        loop {
            let base: usize = (0..d)
                .map(|l| {
                    let i = if l < d - 1 { idx[l] } else { 0 };
                    (self.start[l] + i * self.stride[l]) * reg_strides[l]
                })
                .sum();
            f(base, inner_stride, inner_count);
            let mut l = d - 1;
            loop {
                if l == 0 {
                    return;
                }
                l -= 1;
                idx[l] += 1;
                if idx[l] < self.count[l] {
                    break;
                }
                idx[l] = 0;
            }
        }
    }
}

/// A named row-major buffer on one processor that Puts can target.
#[derive(Clone, Debug, PartialEq)]
pub struct Register {
    shape: Vec<usize>,
    data: Vec<ComplexSample>,
}

impl Register {
    pub fn new(shape: Vec<usize>, data: Vec<ComplexSample>) -> Result<Self> {
        if shape.is_empty() || shape.iter().product::<usize>() != data.len() {
            return Err(Error::Config(format!(
                "register shape {shape:?} does not match {} elements",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![ComplexSample::default(); len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[ComplexSample] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [ComplexSample] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<ComplexSample> {
        self.data
    }
}

/// Memory of one virtual processor: program state plus Put-addressable registers.
#[derive(Clone, Debug)]
pub struct Processor<S> {
    pub state: S,
    pub registers: Vec<Register>,
}

impl<S> Processor<S> {
    pub fn new(state: S, registers: Vec<Register>) -> Self {
        Self { state, registers }
    }
}

/// A buffered one-sided write.
#[derive(Clone, Debug)]
pub struct Packet {
    pub src: usize,
    pub dest: usize,
    pub register: RegisterId,
    pub region: Region,
    pub payload: Vec<ComplexSample>,
}

/// What one rank sees while executing a superstep.
pub struct RankContext<'a, S> {
    pid: usize,
    nprocs: usize,
    superstep: usize,
    processor: &'a mut Processor<S>,
    outbox: Vec<Packet>,
    flops: u64,
}

impl<'a, S> RankContext<'a, S> {
    pub fn pid(&self) -> usize {
        self.pid
    }

    pub fn nprocs(&self) -> usize {
        self.nprocs
    }

    pub fn superstep(&self) -> usize {
        self.superstep
    }

    pub fn state(&self) -> &S {
        &self.processor.state
    }

    pub fn state_mut(&mut self) -> &mut S {
        &mut self.processor.state
    }

    pub fn register(&self, id: RegisterId) -> Result<&Register> {
        self.processor
            .registers
            .get(id)
            .ok_or_else(|| Error::Bounds(format!("no register {id} on rank {}", self.pid)))
    }

    pub fn register_mut(&mut self, id: RegisterId) -> Result<&mut Register> {
        let pid = self.pid;
        self.processor
            .registers
            .get_mut(id)
            .ok_or_else(|| Error::Bounds(format!("no register {id} on rank {pid}")))
    }

    /// Simultaneous access to state and registers.
    pub fn memory_mut(&mut self) -> (&mut S, &mut [Register]) {
        (&mut self.processor.state, &mut self.processor.registers)
    }

    /// Queues `payload` for `region` of register `register` on `dest`. The data
    /// lands at the end of this superstep.
    pub fn put(
        &mut self,
        dest: usize,
        register: RegisterId,
        region: Region,
        payload: Vec<ComplexSample>,
    ) -> Result<()> {
        if dest >= self.nprocs {
            return Err(Error::Bounds(format!(
                "put destination {dest} out of range 0..{}",
                self.nprocs
            )));
        }
        if payload.len() != region.len() {
            return Err(Error::Config(format!(
                "payload of {} words for a region of {}",
                payload.len(),
                region.len()
            )));
        }
        self.outbox.push(Packet {
            src: self.pid,
            dest,
            register,
            region,
            payload,
        });
        Ok(())
    }

    pub fn add_flops(&mut self, flops: u64) {
        self.flops += flops;
    }
}

/// An SPMD program given as the text of every superstep for processor `P(s)`.
pub trait SpmdProgram: Sync {
    type State: Send;

    fn superstep_count(&self) -> usize;

    fn superstep(&self, step: usize, ctx: &mut RankContext<'_, Self::State>) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuperstepKind {
    Compute,
    Communicate,
}

/// Cost record of one superstep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperstepRecord {
    pub index: usize,
    pub kind: SuperstepKind,
    pub max_flops: u64,
    pub max_words_sent: u64,
    pub max_words_received: u64,
    pub sync_charged: u32,
    pub flops: Vec<u64>,
    pub words_sent: Vec<u64>,
    pub words_received: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperstepTrace {
    pub nprocs: usize,
    pub supersteps: Vec<SuperstepRecord>,
}

impl SuperstepTrace {
    pub fn communicate_count(&self) -> usize {
        self.supersteps
            .iter()
            .filter(|s| s.kind == SuperstepKind::Communicate)
            .count()
    }

    pub fn syncs_charged(&self) -> u32 {
        self.supersteps.iter().map(|s| s.sync_charged).sum()
    }

    /// Total flops of each rank over the whole run.
    pub fn flops_per_rank(&self) -> Vec<u64> {
        let mut out = vec![0; self.nprocs];
        for s in &self.supersteps {
            for (o, f) in out.iter_mut().zip(&s.flops) {
                *o += f;
            }
        }
        out
    }

    /// Total words sent by each rank over the whole run.
    pub fn words_sent_per_rank(&self) -> Vec<u64> {
        sum_columns(self.nprocs, self.supersteps.iter().map(|s| &s.words_sent))
    }

    pub fn words_received_per_rank(&self) -> Vec<u64> {
        sum_columns(
            self.nprocs,
            self.supersteps.iter().map(|s| &s.words_received),
        )
    }

    /// Appends the supersteps of `other`, renumbering them.
    pub fn extend(&mut self, other: SuperstepTrace) {
        let offset = self.supersteps.len();
        if self.nprocs == 0 {
            self.nprocs = other.nprocs;
        }
        self.supersteps
            .extend(other.supersteps.into_iter().map(|mut s| {
                s.index += offset;
                s
            }));
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn sum_columns<'a>(n: usize, rows: impl Iterator<Item = &'a Vec<u64>>) -> Vec<u64> {
    let mut out = vec![0; n];
    for row in rows {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out
}

/// BSP machine parameters: `g` per word communicated, `l` per charged sync.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub g: f64,
    pub l: f64,
}

impl CostModel {
    pub fn new(g: f64, l: f64) -> Result<Self> {
        if !(g >= 0.0 && l >= 0.0 && g.is_finite() && l.is_finite()) {
            return Err(Error::Domain(format!(
                "g = {g} and l = {l} must be finite and non-negative"
            )));
        }
        Ok(Self { g, l })
    }
}

/// Sum over supersteps of `max_flops + g * h + l * sync`, with
/// `h = max(words sent, words received)`.
pub fn cost_report(trace: &SuperstepTrace, model: CostModel) -> f64 {
    trace
        .supersteps
        .iter()
        .map(|s| {
            s.max_flops as f64
                + model.g * s.max_words_sent.max(s.max_words_received) as f64
                + model.l * f64::from(s.sync_charged)
        })
        .sum()
}

struct RankOutcome {
    outbox: Vec<Packet>,
    flops: u64,
}

fn run_rank<P: SpmdProgram>(
    program: &P,
    step: usize,
    pid: usize,
    nprocs: usize,
    processor: &mut Processor<P::State>,
) -> Result<RankOutcome> {
    let mut ctx = RankContext {
        pid,
        nprocs,
        superstep: step,
        processor,
        outbox: Vec::new(),
        flops: 0,
    };
    program.superstep(step, &mut ctx).map_err(|e| Error::Rank {
        pid,
        superstep: step,
        source: Box::new(e),
    })?;
    Ok(RankOutcome {
        outbox: ctx.outbox,
        flops: ctx.flops,
    })
}

fn worker_count(mode: ExecMode, nprocs: usize) -> usize {
    match mode {
        ExecMode::Serial => 1,
        ExecMode::Parallel => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(nprocs)
            .max(1),
    }
}

/// Runs `f(rank, item)` over all items, chunked across `workers` scoped threads.
/// Results come back in rank order.
fn for_each_rank<T: Send, R: Send>(
    items: &mut [T],
    workers: usize,
    f: impl Fn(usize, &mut T) -> R + Sync,
) -> Vec<R> {
    if workers <= 1 || items.len() <= 1 {
        return items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks_mut(chunk)
            .enumerate()
            .map(|(c, part)| {
                scope.spawn(move || {
                    part.iter_mut()
                        .enumerate()
                        .map(|(i, t)| f(c * chunk + i, t))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("BSP worker panicked"))
            .collect()
    })
}

fn deliver<S>(processor: &mut Processor<S>, dest: usize, inbox: &[Packet]) -> Result<()> {
    // writer[register][element] = source rank + 1, tracked only in debug builds
    let mut writers: Vec<Vec<usize>> = Vec::new();
    for packet in inbox {
        let register = processor
            .registers
            .get_mut(packet.register)
            .ok_or_else(|| {
                Error::Bounds(format!(
                    "put from rank {} targets missing register {} on rank {dest}",
                    packet.src, packet.register
                ))
            })?;
        packet.region.check_within(&register.shape)?;
        if cfg!(debug_assertions) {
            if writers.len() <= packet.register {
                writers.resize(packet.register + 1, Vec::new());
            }
            let w = &mut writers[packet.register];
            if w.is_empty() {
                w.resize(register.data.len(), 0);
            }
            let mut clash = None;
            packet
                .region
                .for_each_run(&register.shape, |base, stride, run| {
                    for i in 0..run {
                        let e = base + i * stride;
                        if w[e] != 0 && clash.is_none() {
                            clash = Some((e, w[e] - 1));
                        }
                        w[e] = packet.src + 1;
                    }
                });
            if let Some((element, first)) = clash {
                return Err(Error::OverlappingPut {
                    dest,
                    register: packet.register,
                    element,
                    first,
                    second: packet.src,
                });
            }
        }
        let mut cursor = 0;
        let data = &mut register.data;
        packet
            .region
            .for_each_run(&register.shape, |base, stride, run| {
                let src = &packet.payload[cursor..cursor + run];
                if stride == 1 {
                    data[base..base + run].copy_from_slice(src);
                } else {
                    for (i, &v) in src.iter().enumerate() {
                        data[base + i * stride] = v;
                    }
                }
                cursor += run;
            });
    }
    Ok(())
}

/// Executes `program` on one virtual processor per entry of `processors`.
///
/// Returns the final processor memories and the superstep trace. A failure on
/// any rank aborts the run with the error of the lowest failing rank.
pub fn run_spmd<P: SpmdProgram>(
    program: &P,
    mut processors: Vec<Processor<P::State>>,
    mode: ExecMode,
) -> Result<(Vec<Processor<P::State>>, SuperstepTrace)> {
    let nprocs = processors.len();
    if nprocs == 0 {
        return Err(Error::Domain("need at least one processor".into()));
    }
    let workers = worker_count(mode, nprocs);
    let mut trace = SuperstepTrace {
        nprocs,
        supersteps: Vec::with_capacity(program.superstep_count()),
    };

    for step in 0..program.superstep_count() {
        let outcomes = for_each_rank(&mut processors, workers, |pid, proc_| {
            run_rank(program, step, pid, nprocs, proc_)
        });
        let mut flops = Vec::with_capacity(nprocs);
        let mut inboxes: Vec<Vec<Packet>> = (0..nprocs).map(|_| Vec::new()).collect();
        let mut words_sent = vec![0u64; nprocs];
        let mut words_received = vec![0u64; nprocs];
        for outcome in outcomes {
            let outcome = outcome?;
            flops.push(outcome.flops);
            for packet in outcome.outbox {
                let words = packet.payload.len() as u64;
                words_sent[packet.src] += words;
                words_received[packet.dest] += words;
                inboxes[packet.dest].push(packet);
            }
        }
        let communicated = inboxes.iter().any(|b| !b.is_empty());

        let mut pairs: Vec<_> = processors.iter_mut().zip(inboxes).collect();
        let delivered = for_each_rank(&mut pairs, workers, |dest, (proc_, inbox)| {
            deliver(proc_, dest, inbox)
        });
        drop(pairs);
        delivered.into_iter().collect::<Result<Vec<_>>>()?;

        trace.supersteps.push(SuperstepRecord {
            index: step,
            kind: if communicated {
                SuperstepKind::Communicate
            } else {
                SuperstepKind::Compute
            },
            max_flops: flops.iter().copied().max().unwrap_or(0),
            max_words_sent: words_sent.iter().copied().max().unwrap_or(0),
            max_words_received: words_received.iter().copied().max().unwrap_or(0),
            sync_charged: u32::from(communicated),
            flops,
            words_sent,
            words_received,
        });
    }
    Ok((processors, trace))
}
