//! The cyclic-to-cyclic parallel FFT.
//!
//! A transform over a `p_1 x ... x p_d` processor grid with `p_l^2 | n_l` runs
//! as three supersteps on every rank `s`:
//!
//! 0. a local tensor FFT of the `(n_1/p_1) x ... x (n_d/p_d)` block, followed by
//!    the fused twiddle-and-pack pass that multiplies element `t` by
//!    `prod_l omega_{n_l}^{t_l s_l}` and stores it in packet `t mod p` at
//!    position `t div p`;
//! 1. a single all-to-all: packet `k` goes to rank `k` as the box
//!    `[s n/p^2, (s+1) n/p^2)` of its block;
//! 2. local `F_{p_1} x ... x F_{p_d}` transforms of every strided subarray
//!    `(t : n/p^2 : n/p)`.
//!
//! The output is left in the same cyclic distribution as the input. The inverse
//! runs the identical program with conjugated roots and scales by `1/N` at the
//! end, so a forward transform, a pointwise operation and an inverse transform
//! need no redistribution.

use num_complex::Complex64;

use crate::bsp::{
    run_spmd, ExecMode, Processor, RankContext, Region, Register, SpmdProgram, SuperstepTrace,
};
use crate::distribution::{CyclicMap, Distribution, ProcGrid};
use crate::error::{Error, Result};
use crate::kernel::{
    root, scale, ComplexSample, Direction, Fft1dPlan, TensorFftPlan, TensorShape, TensorSignal,
};

const BLOCK: usize = 0;
const FLOPS_PER_COMPLEX_MUL: u64 = 6;
const FLOPS_PER_REAL_SCALE: u64 = 2;

/// Per-rank twiddle weights: for each dimension `l`, `omega_{n_l}^{k s_l}` for
/// `k < n_l / p_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwiddleTable {
    weights: Vec<Vec<ComplexSample>>,
}

impl TwiddleTable {
    fn new(shape: &TensorShape, grid: &ProcGrid, coord: &[usize]) -> Self {
        let weights = shape
            .dims()
            .iter()
            .zip(grid.dims())
            .zip(coord)
            .map(|((&n, &p), &s)| (0..n / p).map(|k| root(n, (k * s) % n)).collect())
            .collect();
        Self { weights }
    }

    /// Number of stored weights, `sum_l n_l / p_l`.
    pub fn len(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self, l: usize) -> &[ComplexSample] {
        &self.weights[l]
    }
}

/// Reusable description of one transform size on one processor grid.
#[derive(Clone, Debug)]
pub struct FftuPlan {
    map: CyclicMap,
    direction: Direction,
    twiddles: Vec<TwiddleTable>,
    local: TensorFftPlan,
    grid_axes: Vec<Option<Fft1dPlan>>,
    packet: Vec<usize>,
}

impl FftuPlan {
    /// Checks `p_l^2 | n_l` for every dimension and precomputes all tables.
    pub fn new(shape: TensorShape, grid: ProcGrid, direction: Direction) -> Result<Self> {
        if shape.ndim() != grid.ndim() {
            return Err(Error::Config(format!(
                "shape {shape} has {} dimensions but grid {grid} has {}",
                shape.ndim(),
                grid.ndim()
            )));
        }
        for (l, (&n, &p)) in shape.dims().iter().zip(grid.dims()).enumerate() {
            if n % (p * p) != 0 {
                return Err(Error::Config(format!(
                    "dimension {l}: p^2 = {} does not divide n = {n}",
                    p * p
                )));
            }
        }
        let map = CyclicMap::new(shape.clone(), grid.clone())?;
        let local = TensorFftPlan::new(map.local_box().clone())?;
        let grid_axes = grid
            .dims()
            .iter()
            .map(|&p| {
                if p > 1 {
                    Fft1dPlan::new(p).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        let packet = shape
            .dims()
            .iter()
            .zip(grid.dims())
            .map(|(n, p)| n / (p * p))
            .collect();
        let twiddles = (0..grid.nprocs())
            .map(|rank| TwiddleTable::new(&shape, &grid, &grid.coord_of(rank)))
            .collect();
        Ok(Self {
            map,
            direction,
            twiddles,
            local,
            grid_axes,
            packet,
        })
    }

    pub fn shape(&self) -> &TensorShape {
        self.map.shape()
    }

    pub fn grid(&self) -> &ProcGrid {
        self.map.grid()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// The distribution of both input and output.
    pub fn map(&self) -> &CyclicMap {
        &self.map
    }

    pub fn nprocs(&self) -> usize {
        self.map.nprocs()
    }

    /// Local block shape `(n_l / p_l)`.
    pub fn local_shape(&self) -> &TensorShape {
        self.map.local_box()
    }

    /// Packet shape `(n_l / p_l^2)`.
    pub fn packet_shape(&self) -> &[usize] {
        &self.packet
    }

    pub fn twiddle_table(&self, rank: usize) -> &TwiddleTable {
        &self.twiddles[rank]
    }

    /// Scatters a global signal into this plan's cyclic distribution.
    pub fn distribute(&self, x: &TensorSignal) -> Result<Vec<Vec<ComplexSample>>> {
        Ok(crate::distribution::scatter(&self.map, x)?
            .into_iter()
            .map(TensorSignal::into_data)
            .collect())
    }

    /// Reassembles the global signal from per-rank blocks.
    pub fn collect(&self, locals: &[Vec<ComplexSample>]) -> Result<TensorSignal> {
        let local_shape = self.local_shape().clone();
        let blocks = locals
            .iter()
            .map(|b| TensorSignal::new(local_shape.clone(), b.clone()))
            .collect::<Result<Vec<_>>>()?;
        crate::distribution::gather(&self.map, &blocks)
    }

    /// Runs the plan's own direction in place.
    pub fn execute(
        &self,
        locals: &mut [Vec<ComplexSample>],
        mode: ExecMode,
    ) -> Result<SuperstepTrace> {
        run(self, locals, self.direction, mode)
    }
}

/// Fused twiddle and pack of one rank's block after the local transform.
///
/// Returns the `p` packets in rank order, each a row-major box of shape
/// `(n_l / p_l^2)`, and the flop count. The inner loop performs at most two
/// complex multiplies per element: the running factor update and the element
/// scale. Dimensions whose grid coordinate is zero have all weights equal to
/// one and are skipped.
pub fn pack_and_twiddle(
    local: &[ComplexSample],
    s: &[usize],
    plan: &FftuPlan,
) -> Result<(Vec<Vec<ComplexSample>>, u64)> {
    pack_and_twiddle_dir(local, s, plan, Direction::Forward)
}

fn pack_and_twiddle_dir(
    local: &[ComplexSample],
    s: &[usize],
    plan: &FftuPlan,
    direction: Direction,
) -> Result<(Vec<Vec<ComplexSample>>, u64)> {
    if local.len() != plan.local_shape().len() {
        return Err(Error::Config(format!(
            "local block has {} elements, plan expects {}",
            local.len(),
            plan.local_shape().len()
        )));
    }
    let rank = plan.grid().rank_of(s)?;
    let p = plan.nprocs();
    let packet_len = plan.local_shape().len() / p;
    let mut packets = vec![vec![Complex64::default(); packet_len]; p];
    let mut packer = Packer {
        block: plan.local_shape().dims(),
        grid: plan.grid().dims(),
        packet: &plan.packet,
        table: plan.twiddle_table(rank),
        active: s.iter().map(|&v| v != 0).collect(),
        inverse: direction.is_inverse(),
        local,
        packets: &mut packets,
        multiplies: 0,
    };
    packer.level(0, Complex64::new(1.0, 0.0), false, 0, 0, 0);
    let flops = packer.multiplies * FLOPS_PER_COMPLEX_MUL;
    Ok((packets, flops))
}

struct Packer<'a> {
    block: &'a [usize],
    grid: &'a [usize],
    packet: &'a [usize],
    table: &'a TwiddleTable,
    active: Vec<bool>,
    inverse: bool,
    local: &'a [ComplexSample],
    packets: &'a mut [Vec<ComplexSample>],
    multiplies: u64,
}

impl Packer<'_> {
    /// Loop over `t_l`; `factor` is `prod_{i < l} omega^{t_i s_i}` and `twiddled`
    /// records whether any factor so far differs from one.
    fn level(
        &mut self,
        l: usize,
        factor: ComplexSample,
        twiddled: bool,
        src: usize,
        dest: usize,
        pos: usize,
    ) {
        let d = self.block.len();
        let weights = self.table.dim(l);
        for t in 0..self.block[l] {
            let (f, tw) = if self.active[l] {
                let mut w = weights[t];
                if self.inverse {
                    w = w.conj();
                }
                if twiddled {
                    self.multiplies += 1;
                    (factor * w, true)
                } else {
                    (w, true)
                }
            } else {
                (factor, twiddled)
            };
            let src = src * self.block[l] + t;
            let dest = dest * self.grid[l] + t % self.grid[l];
            let pos = pos * self.packet[l] + t / self.grid[l];
            if l + 1 == d {
                let v = self.local[src];
                self.packets[dest][pos] = if tw {
                    self.multiplies += 1;
                    v * f
                } else {
                    v
                };
            } else {
                self.level(l + 1, f, tw, src, dest, pos);
            }
        }
    }
}

/// Superstep-2 transform of all strided subarrays `(t : n/p^2 : n/p)`, done as
/// one pass per dimension of length-`p_l` transforms at stride `n_l/p_l^2`.
fn strided_grid_transform(
    plan: &FftuPlan,
    block: &mut [ComplexSample],
    scratch: &mut Vec<ComplexSample>,
    direction: Direction,
) -> u64 {
    let dims = plan.local_shape().dims();
    let total = block.len();
    let longest = plan.grid().dims().iter().copied().max().unwrap_or(1);
    if scratch.len() < longest {
        scratch.resize(longest, Complex64::default());
    }
    let mut flops = 0;
    let mut inner = total;
    for (l, axis) in plan.grid_axes.iter().enumerate() {
        inner /= dims[l];
        let Some(fft) = axis else { continue };
        let b = plan.packet[l];
        let outer = total / (dims[l] * inner);
        let stride = b * inner;
        for o in 0..outer {
            let base = o * dims[l] * inner;
            for c in 0..b {
                for i in 0..inner {
                    fft.process_strided(block, base + c * inner + i, stride, scratch, direction);
                }
            }
        }
        flops += (outer * b * inner) as u64 * fft.flops();
    }
    flops
}

#[derive(Default)]
struct RankState {
    packets: Vec<Vec<ComplexSample>>,
    scratch: Vec<ComplexSample>,
}

struct FftuProgram<'a> {
    plan: &'a FftuPlan,
    direction: Direction,
}

impl FftuProgram<'_> {
    fn finish(&self, ctx: &mut RankContext<'_, RankState>) -> Result<()> {
        if self.direction.is_inverse() {
            let n = self.plan.shape().len();
            let block = ctx.register_mut(BLOCK)?.data_mut();
            scale(block, 1.0 / n as f64);
            let words = block.len() as u64;
            ctx.add_flops(FLOPS_PER_REAL_SCALE * words);
        }
        Ok(())
    }
}

impl SpmdProgram for FftuProgram<'_> {
    type State = RankState;

    fn superstep_count(&self) -> usize {
        if self.plan.nprocs() == 1 {
            1
        } else {
            3
        }
    }

    fn superstep(&self, step: usize, ctx: &mut RankContext<'_, RankState>) -> Result<()> {
        let plan = self.plan;
        let pid = ctx.pid();
        match step {
            0 => {
                let (state, registers) = ctx.memory_mut();
                let block = registers[BLOCK].data_mut();
                let mut flops = plan
                    .local
                    .process(block, &mut state.scratch, self.direction);
                if plan.nprocs() > 1 {
                    let s = plan.grid().coord_of(pid);
                    let (packets, pack_flops) =
                        pack_and_twiddle_dir(block, &s, plan, self.direction)?;
                    state.packets = packets;
                    flops += pack_flops;
                }
                ctx.add_flops(flops);
                if plan.nprocs() == 1 {
                    self.finish(ctx)?;
                }
                Ok(())
            }
            1 => {
                let s = plan.grid().coord_of(pid);
                let start: Vec<usize> = s.iter().zip(&plan.packet).map(|(s, b)| s * b).collect();
                let packets = std::mem::take(&mut ctx.state_mut().packets);
                for (k, packet) in packets.into_iter().enumerate() {
                    let region = Region::contiguous(start.clone(), plan.packet.clone())?;
                    ctx.put(k, BLOCK, region, packet)?;
                }
                Ok(())
            }
            2 => {
                let (state, registers) = ctx.memory_mut();
                let block = registers[BLOCK].data_mut();
                let flops = strided_grid_transform(plan, block, &mut state.scratch, self.direction);
                ctx.add_flops(flops);
                self.finish(ctx)
            }
            _ => Err(Error::Domain(format!("no superstep {step}"))),
        }
    }
}

fn run(
    plan: &FftuPlan,
    locals: &mut [Vec<ComplexSample>],
    direction: Direction,
    mode: ExecMode,
) -> Result<SuperstepTrace> {
    let p = plan.nprocs();
    let block_len = plan.local_shape().len();
    if locals.len() != p {
        return Err(Error::Config(format!(
            "plan has {p} ranks, got {} local blocks",
            locals.len()
        )));
    }
    if let Some(rank) = locals.iter().position(|b| b.len() != block_len) {
        return Err(Error::Config(format!(
            "rank {rank} block has {} elements, plan expects {block_len}",
            locals[rank].len()
        )));
    }
    let shape = plan.local_shape().dims().to_vec();
    let processors = locals
        .iter_mut()
        .map(|b| {
            let data = std::mem::take(b);
            Ok(Processor::new(
                RankState::default(),
                vec![Register::new(shape.clone(), data)?],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let program = FftuProgram { plan, direction };
    let (processors, trace) = run_spmd(&program, processors, mode)?;
    for (slot, mut proc_) in locals.iter_mut().zip(processors) {
        *slot = proc_.registers.swap_remove(BLOCK).into_data();
    }
    Ok(trace)
}

/// Forward transform in place; input and output share the plan's cyclic
/// distribution.
pub fn fftu_transform(
    locals: &mut [Vec<ComplexSample>],
    plan: &FftuPlan,
    mode: ExecMode,
) -> Result<SuperstepTrace> {
    run(plan, locals, Direction::Forward, mode)
}

/// Inverse transform in place: conjugated roots and a final `1/N` scale.
pub fn fftu_inverse(
    locals: &mut [Vec<ComplexSample>],
    plan: &FftuPlan,
    mode: ExecMode,
) -> Result<SuperstepTrace> {
    run(plan, locals, Direction::Inverse, mode)
}

/// Copy-out variant of [`fftu_transform`] / [`fftu_inverse`].
pub fn fftu_transform_copy(
    locals: &[Vec<ComplexSample>],
    plan: &FftuPlan,
    direction: Direction,
    mode: ExecMode,
) -> Result<(Vec<Vec<ComplexSample>>, SuperstepTrace)> {
    let mut out = locals.to_vec();
    let trace = run(plan, &mut out, direction, mode)?;
    Ok((out, trace))
}
