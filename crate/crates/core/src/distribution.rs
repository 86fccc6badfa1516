//! Data distributions as explicit bijections between `(rank, local index)` and
//! global index.
//!
//! The cyclic map is the one the parallel engine uses. Slab and pencil maps
//! exist for comparison and for the processor-ceiling report.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{parse_dims, write_dims, TensorShape, TensorSignal};

/// Processor grid `(p_1, ..., p_d)`. Ranks are the row-major linearization of
/// grid coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ProcGrid(Vec<usize>);

impl ProcGrid {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::Domain(
                "processor grid needs at least one dimension".into(),
            ));
        }
        if let Some(l) = dims.iter().position(|&p| p == 0) {
            return Err(Error::Domain(format!(
                "processor grid dimension {l} is zero"
            )));
        }
        Ok(Self(dims))
    }

    /// The single-processor grid with `d` dimensions.
    pub fn ones(d: usize) -> Self {
        Self(vec![1; d.max(1)])
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    pub fn nprocs(&self) -> usize {
        self.0.iter().product()
    }

    pub fn rank_of(&self, coord: &[usize]) -> Result<usize> {
        if coord.len() != self.0.len() {
            return Err(Error::Bounds(format!(
                "grid coordinate has {} components, grid has {}",
                coord.len(),
                self.0.len()
            )));
        }
        let mut rank = 0;
        for (l, (&s, &p)) in coord.iter().zip(&self.0).enumerate() {
            if s >= p {
                return Err(Error::Bounds(format!(
                    "grid coordinate {s} out of range 0..{p} in dimension {l}"
                )));
            }
            rank = rank * p + s;
        }
        Ok(rank)
    }

    pub fn coord_of(&self, mut rank: usize) -> Vec<usize> {
        let mut coord = vec![0; self.0.len()];
        for l in (0..self.0.len()).rev() {
            coord[l] = rank % self.0[l];
            rank /= self.0[l];
        }
        coord
    }
}

impl TryFrom<Vec<usize>> for ProcGrid {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<ProcGrid> for Vec<usize> {
    fn from(grid: ProcGrid) -> Self {
        grid.0
    }
}

impl fmt::Display for ProcGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_dims(f, &self.0)
    }
}

impl FromStr for ProcGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_dims(s)?)
    }
}

/// A bijection between `(rank, local row-major index)` and global coordinates.
pub trait Distribution {
    fn shape(&self) -> &TensorShape;

    fn nprocs(&self) -> usize;

    /// Shape of the local box held by `rank`.
    fn local_shape(&self, rank: usize) -> TensorShape;

    /// Global coordinate of element `local` (row-major) on `rank`.
    fn global_of(&self, rank: usize, local: &[usize]) -> Vec<usize>;

    /// Owning rank and local row-major index of a global coordinate.
    fn owner(&self, global: &[usize]) -> (usize, usize);
}

/// The d-dimensional cyclic map `phi(s, k) = s + k p`, component-wise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicMap {
    shape: TensorShape,
    grid: ProcGrid,
    local: TensorShape,
}

impl CyclicMap {
    pub fn new(shape: TensorShape, grid: ProcGrid) -> Result<Self> {
        check_same_rank(&shape, &grid)?;
        for (l, (&n, &p)) in shape.dims().iter().zip(grid.dims()).enumerate() {
            if n % p != 0 {
                return Err(Error::Config(format!(
                    "dimension {l}: p = {p} does not divide n = {n}"
                )));
            }
        }
        let local = TensorShape::new(
            shape
                .dims()
                .iter()
                .zip(grid.dims())
                .map(|(n, p)| n / p)
                .collect::<Vec<_>>(),
        )?;
        Ok(Self { shape, grid, local })
    }

    pub fn grid(&self) -> &ProcGrid {
        &self.grid
    }

    /// Local box shape `(n_1/p_1, ..., n_d/p_d)`, the same on every rank.
    pub fn local_box(&self) -> &TensorShape {
        &self.local
    }

    pub fn local_to_global(&self, s: &[usize], k: &[usize]) -> Result<Vec<usize>> {
        self.grid.rank_of(s)?;
        self.local.linear_index(k)?;
        Ok(s.iter()
            .zip(k)
            .zip(self.grid.dims())
            .map(|((s, k), p)| s + k * p)
            .collect())
    }

    pub fn global_to_local(&self, j: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
        self.shape.linear_index(j)?;
        let p = self.grid.dims();
        Ok((
            j.iter().zip(p).map(|(j, p)| j % p).collect(),
            j.iter().zip(p).map(|(j, p)| j / p).collect(),
        ))
    }
}

impl Distribution for CyclicMap {
    fn shape(&self) -> &TensorShape {
        &self.shape
    }

    fn nprocs(&self) -> usize {
        self.grid.nprocs()
    }

    fn local_shape(&self, _rank: usize) -> TensorShape {
        self.local.clone()
    }

    fn global_of(&self, rank: usize, local: &[usize]) -> Vec<usize> {
        let s = self.grid.coord_of(rank);
        s.iter()
            .zip(local)
            .zip(self.grid.dims())
            .map(|((s, k), p)| s + k * p)
            .collect()
    }

    fn owner(&self, global: &[usize]) -> (usize, usize) {
        let p = self.grid.dims();
        let mut rank = 0;
        let mut local = 0;
        for ((&j, &p), &m) in global.iter().zip(p).zip(self.local.dims()) {
            rank = rank * p + j % p;
            local = local * m + j / p;
        }
        (rank, local)
    }
}

/// Block distribution of one dimension over `p` processors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlabMap {
    shape: TensorShape,
    nprocs: usize,
    dim: usize,
    local: TensorShape,
}

impl SlabMap {
    pub fn new(shape: TensorShape, nprocs: usize, dim: usize) -> Result<Self> {
        if dim >= shape.ndim() {
            return Err(Error::Domain(format!(
                "slab dimension {dim} out of range for a {}-dimensional shape",
                shape.ndim()
            )));
        }
        let local = block_local(&shape, &[(dim, nprocs)])?;
        Ok(Self {
            shape,
            nprocs,
            dim,
            local,
        })
    }
}

impl Distribution for SlabMap {
    fn shape(&self) -> &TensorShape {
        &self.shape
    }

    fn nprocs(&self) -> usize {
        self.nprocs
    }

    fn local_shape(&self, _rank: usize) -> TensorShape {
        self.local.clone()
    }

    fn global_of(&self, rank: usize, local: &[usize]) -> Vec<usize> {
        let mut g = local.to_vec();
        g[self.dim] += rank * self.local.dims()[self.dim];
        g
    }

    fn owner(&self, global: &[usize]) -> (usize, usize) {
        let b = self.local.dims()[self.dim];
        let mut k = global.to_vec();
        k[self.dim] %= b;
        let local = self.local.linear_index(&k).expect("global index in range");
        (global[self.dim] / b, local)
    }
}

/// Block distribution of two dimensions `(a, b)` over a `p_a x p_b` grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PencilMap {
    shape: TensorShape,
    grid: (usize, usize),
    dims: (usize, usize),
    local: TensorShape,
}

impl PencilMap {
    pub fn new(shape: TensorShape, grid: (usize, usize), dims: (usize, usize)) -> Result<Self> {
        let d = shape.ndim();
        if dims.0 == dims.1 || dims.0 >= d || dims.1 >= d {
            return Err(Error::Domain(format!(
                "pencil dimensions {dims:?} must be distinct and below {d}"
            )));
        }
        let local = block_local(&shape, &[(dims.0, grid.0), (dims.1, grid.1)])?;
        Ok(Self {
            shape,
            grid,
            dims,
            local,
        })
    }
}

impl Distribution for PencilMap {
    fn shape(&self) -> &TensorShape {
        &self.shape
    }

    fn nprocs(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    fn local_shape(&self, _rank: usize) -> TensorShape {
        self.local.clone()
    }

    fn global_of(&self, rank: usize, local: &[usize]) -> Vec<usize> {
        let (s1, s2) = (rank / self.grid.1, rank % self.grid.1);
        let mut g = local.to_vec();
        g[self.dims.0] += s1 * self.local.dims()[self.dims.0];
        g[self.dims.1] += s2 * self.local.dims()[self.dims.1];
        g
    }

    fn owner(&self, global: &[usize]) -> (usize, usize) {
        let (a, b) = self.dims;
        let (ba, bb) = (self.local.dims()[a], self.local.dims()[b]);
        let mut k = global.to_vec();
        k[a] %= ba;
        k[b] %= bb;
        let local = self.local.linear_index(&k).expect("global index in range");
        ((global[a] / ba) * self.grid.1 + global[b] / bb, local)
    }
}

fn check_same_rank(shape: &TensorShape, grid: &ProcGrid) -> Result<()> {
    if shape.ndim() != grid.ndim() {
        return Err(Error::Config(format!(
            "shape {shape} has {} dimensions but grid {grid} has {}",
            shape.ndim(),
            grid.ndim()
        )));
    }
    Ok(())
}

fn block_local(shape: &TensorShape, splits: &[(usize, usize)]) -> Result<TensorShape> {
    let mut dims = shape.dims().to_vec();
    for &(l, p) in splits {
        if p == 0 || dims[l] % p != 0 {
            return Err(Error::Config(format!(
                "dimension {l}: p = {p} does not divide n = {}",
                dims[l]
            )));
        }
        dims[l] /= p;
    }
    TensorShape::new(dims)
}

/// Splits a global tensor into one local row-major box per rank.
pub fn scatter<D: Distribution + ?Sized>(map: &D, x: &TensorSignal) -> Result<Vec<TensorSignal>> {
    if x.shape() != map.shape() {
        return Err(Error::Config(format!(
            "signal shape {} does not match distribution shape {}",
            x.shape(),
            map.shape()
        )));
    }
    (0..map.nprocs())
        .map(|rank| {
            let local = map.local_shape(rank);
            let data = (0..local.len())
                .map(|i| {
                    let g = map.global_of(rank, &local.coord_of(i));
                    x.get(&g)
                })
                .collect::<Result<Vec<_>>>()?;
            TensorSignal::new(local, data)
        })
        .collect()
}

/// Reassembles the global tensor; exact inverse of [`scatter`].
pub fn gather<D: Distribution + ?Sized>(map: &D, locals: &[TensorSignal]) -> Result<TensorSignal> {
    if locals.len() != map.nprocs() {
        return Err(Error::Config(format!(
            "expected {} local arrays, got {}",
            map.nprocs(),
            locals.len()
        )));
    }
    let shape = map.shape().clone();
    let mut out = TensorSignal::zeros(shape.clone());
    for (rank, local) in locals.iter().enumerate() {
        let expected = map.local_shape(rank);
        if local.shape() != &expected {
            return Err(Error::Config(format!(
                "rank {rank} holds shape {}, expected {expected}",
                local.shape()
            )));
        }
        for (i, &v) in local.data().iter().enumerate() {
            let g = map.global_of(rank, &expected.coord_of(i));
            let idx = shape.linear_index(&g)?;
            out.data_mut()[idx] = v;
        }
    }
    Ok(out)
}

/// Distribution strategy whose processor ceiling [`max_processors`] reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// d-dimensional cyclic with one all-to-all (`p_l^2 | n_l`).
    Cyclic,
    /// Slab along `dim`, finishing in a distribution over the remaining dimensions.
    Slab { dim: usize },
    /// Two-dimensional pencil distribution.
    Pencil,
    /// `r` distributed dimensions with a single redistribution.
    RDim(usize),
}

/// Largest `q` with `q^2 | n`.
pub fn largest_square_divisor_root(mut n: u64) -> u64 {
    let mut q = 1;
    let mut f = 2;
    while f * f <= n {
        let mut e = 0;
        while n % f == 0 {
            n /= f;
            e += 1;
        }
        q *= f.pow(e / 2);
        f += 1;
    }
    q
}

/// Processor ceiling of a strategy for a shape.
pub fn max_processors(shape: &TensorShape, strategy: Strategy) -> Result<u64> {
    let dims: Vec<u64> = shape.dims().iter().map(|&n| n as u64).collect();
    let d = dims.len();
    let total: u64 = dims.iter().product();
    match strategy {
        Strategy::Cyclic => Ok(dims
            .iter()
            .map(|&n| largest_square_divisor_root(n))
            .product()),
        Strategy::Slab { dim } => {
            if dim >= d {
                return Err(Error::Domain(format!(
                    "slab dimension {dim} out of range for a {d}-dimensional shape"
                )));
            }
            Ok(dims[dim].min(total / dims[dim]))
        }
        Strategy::Pencil => match d {
            0..=2 => Err(Error::Domain(format!(
                "pencil distribution needs at least 3 dimensions, shape has {d}"
            ))),
            // min over pairs of n_a n_b, i.e. N / max n_l
            3 => Ok(total / dims.iter().copied().max().unwrap_or(1)),
            _ => best_split(&dims, 2),
        },
        Strategy::RDim(r) => {
            if r == 0 || r >= d {
                return Err(Error::Domain(format!(
                    "r = {r} must satisfy 1 <= r < d = {d}"
                )));
            }
            best_split(&dims, r)
        }
    }
}

/// max over r-subsets S of min(prod_S n, prod_{not S} n).
fn best_split(dims: &[u64], r: usize) -> Result<u64> {
    let d = dims.len();
    let total: u64 = dims.iter().product();
    let mut best = 0;
    for mask in 0u32..(1u32 << d) {
        if mask.count_ones() as usize != r {
            continue;
        }
        let chosen: u64 = (0..d)
            .filter(|l| mask & (1 << l) != 0)
            .map(|l| dims[l])
            .product();
        best = best.max(chosen.min(total / chosen));
    }
    Ok(best)
}
