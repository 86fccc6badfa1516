//! Sequential FFT primitives.
//!
//! Everything here runs on a single buffer owned by the caller: roots of unity,
//! the literal DFT sums used as oracles, a mixed-radix Cooley-Tukey 1D transform
//! that can work on strided subarrays in place, and the tensor-product
//! multidimensional transform built from batches of those 1D transforms.
//!
//! All transforms in this module are computed in `f64`. The forward transform uses
//! the root `exp(-2*pi*i/n)`; the inverse uses the conjugate root and is scaled by
//! `1/n` only at the public entry points ([`fft_1d`], [`fft_strided`], [`fft_md`]).
//! The plan types ([`Fft1dPlan`], [`TensorFftPlan`]) never scale.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element type of every signal.
pub type ComplexSample = Complex64;

/// Largest prime factor handled by the naive base case of the mixed-radix recursion.
pub const MAX_NAIVE_PRIME: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn is_inverse(self) -> bool {
        self == Direction::Inverse
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

/// `exp(-2*pi*i*e/n)`, with `e` reduced modulo `n` before the angle is formed.
pub fn omega(n: usize, e: i64) -> Result<ComplexSample> {
    if n == 0 {
        return Err(Error::Domain("omega: n must be at least 1".into()));
    }
    let k = e.rem_euclid(n as i64) as usize;
    Ok(root(n, k))
}

/// `omega_n^k` for an already reduced exponent `0 <= k < n`.
///
/// Quarter turns are returned exactly. Other angles are evaluated on the
/// half-turn closest to zero.
pub(crate) fn root(n: usize, k: usize) -> ComplexSample {
    debug_assert!(k < n);
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let (n128, k128) = (n as u128, k as u128);
    if 2 * k128 == n128 {
        return Complex64::new(-1.0, 0.0);
    }
    if 4 * k128 == n128 {
        return Complex64::new(0.0, -1.0);
    }
    if 4 * k128 == 3 * n128 {
        return Complex64::new(0.0, 1.0);
    }
    if 2 * k128 < n128 {
        let (sin, cos) = (std::f64::consts::TAU * k as f64 / n as f64).sin_cos();
        Complex64::new(cos, -sin)
    } else {
        let (sin, cos) = (std::f64::consts::TAU * (n - k) as f64 / n as f64).sin_cos();
        Complex64::new(cos, sin)
    }
}

/// Nominal real-flop count of a length-`n` FFT, `5 n log2 n`.
pub fn nominal_fft_flops(n: usize) -> u64 {
    if n <= 1 {
        return 0;
    }
    (5.0 * n as f64 * (n as f64).log2()).round() as u64
}

/// Relative L2 distance `|a - reference| / |reference|`.
///
/// Falls back to the absolute distance when the reference is identically zero.
pub fn relative_l2(a: &[ComplexSample], reference: &[ComplexSample]) -> f64 {
    assert_eq!(a.len(), reference.len(), "relative_l2: length mismatch");
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (x, r) in a.iter().zip(reference) {
        diff += (x - r).norm_sqr();
        norm += r.norm_sqr();
    }
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}

/// Global array dimensions `(n_1, ..., n_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TensorShape(Vec<usize>);

impl TensorShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::Domain("shape needs at least one dimension".into()));
        }
        if let Some(l) = dims.iter().position(|&n| n == 0) {
            return Err(Error::Domain(format!("shape dimension {l} is zero")));
        }
        Ok(Self(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    /// Total element count `N`.
    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major element strides (last dimension contiguous).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for l in (0..self.0.len().saturating_sub(1)).rev() {
            strides[l] = strides[l + 1] * self.0[l + 1];
        }
        strides
    }

    pub fn linear_index(&self, coord: &[usize]) -> Result<usize> {
        if coord.len() != self.0.len() {
            return Err(Error::Bounds(format!(
                "coordinate has {} components, shape has {}",
                coord.len(),
                self.0.len()
            )));
        }
        let mut idx = 0;
        for (l, (&c, &n)) in coord.iter().zip(&self.0).enumerate() {
            if c >= n {
                return Err(Error::Bounds(format!(
                    "coordinate {c} out of range 0..{n} in dimension {l}"
                )));
            }
            idx = idx * n + c;
        }
        Ok(idx)
    }

    pub fn coord_of(&self, mut index: usize) -> Vec<usize> {
        let mut coord = vec![0; self.0.len()];
        for l in (0..self.0.len()).rev() {
            coord[l] = index % self.0[l];
            index /= self.0[l];
        }
        coord
    }
}

impl TryFrom<Vec<usize>> for TensorShape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<TensorShape> for Vec<usize> {
    fn from(shape: TensorShape) -> Self {
        shape.0
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_dims(f, &self.0)
    }
}

impl FromStr for TensorShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_dims(s)?)
    }
}

pub(crate) fn write_dims(f: &mut fmt::Formatter<'_>, dims: &[usize]) -> fmt::Result {
    for (i, n) in dims.iter().enumerate() {
        if i > 0 {
            f.write_str("x")?;
        }
        write!(f, "{n}")?;
    }
    Ok(())
}

/// Parses `AxBx...` into its components.
pub(crate) fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.trim()
        .split(['x', 'X'])
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::Domain(format!("cannot parse {part:?} in {s:?} as a size")))
        })
        .collect()
}

/// A dense tensor stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSignal {
    shape: TensorShape,
    data: Vec<ComplexSample>,
}

impl TensorSignal {
    pub fn new(shape: TensorShape, data: Vec<ComplexSample>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Config(format!(
                "shape {shape} needs {} elements, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: TensorShape) -> Self {
        let data = vec![Complex64::default(); shape.len()];
        Self { shape, data }
    }

    pub fn from_fn(shape: TensorShape, mut f: impl FnMut(&[usize]) -> ComplexSample) -> Self {
        let data = (0..shape.len()).map(|i| f(&shape.coord_of(i))).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> &TensorShape {
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

    pub fn get(&self, coord: &[usize]) -> Result<ComplexSample> {
        Ok(self.data[self.shape.linear_index(coord)?])
    }
}

/// Literal evaluation of `y_k = sum_j x_j omega_n^{jk}`.
pub fn dft_naive(x: &[ComplexSample]) -> Result<Vec<ComplexSample>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::Domain("dft_naive: empty signal".into()));
    }
    let roots: Vec<_> = (0..n).map(|e| root(n, e)).collect();
    Ok((0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| v * roots[(j * k) % n])
                .sum()
        })
        .collect())
}

/// Literal nested-sum multidimensional DFT; `O(N^2)` and used only as an oracle.
pub fn dft_naive_md(x: &TensorSignal) -> TensorSignal {
    let dims = x.shape.dims();
    let d = dims.len();
    let tables: Vec<Vec<ComplexSample>> = dims
        .iter()
        .map(|&n| (0..n).map(|e| root(n, e)).collect())
        .collect();
    let n_total = x.shape.len();
    let mut out = vec![Complex64::default(); n_total];
    let mut k = vec![0usize; d];
    let mut j = vec![0usize; d];
    // phase[l] = prod_{i <= l} omega_{n_i}^{j_i k_i}
    let mut phase = vec![Complex64::new(1.0, 0.0); d];
    for (kk, y) in out.iter_mut().enumerate() {
        if kk > 0 {
            advance(&mut k, dims);
        }
        j.iter_mut().for_each(|v| *v = 0);
        let mut acc = Complex64::default();
        let mut first_changed = 0;
        for (jj, &v) in x.data.iter().enumerate() {
            if jj > 0 {
                first_changed = advance(&mut j, dims);
            }
            for l in first_changed..d {
                let w = tables[l][(j[l] * k[l]) % dims[l]];
                phase[l] = if l == 0 { w } else { phase[l - 1] * w };
            }
            acc += v * phase[d - 1];
        }
        *y = acc;
    }
    TensorSignal {
        shape: x.shape.clone(),
        data: out,
    }
}

/// Row-major odometer step; returns the outermost dimension that changed.
fn advance(coord: &mut [usize], dims: &[usize]) -> usize {
    for l in (0..coord.len()).rev() {
        coord[l] += 1;
        if coord[l] < dims[l] {
            return l;
        }
        coord[l] = 0;
    }
    0
}

fn smallest_prime_factors(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    let mut f = 2;
    while f * f <= n {
        while n % f == 0 {
            factors.push(f);
            n /= f;
        }
        f += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

/// Precomputed mixed-radix decimation-in-time transform of one length.
///
/// The recursion splits off the smallest prime factor at each level and
/// evaluates prime radices up to [`MAX_NAIVE_PRIME`] by their naive DFT.
#[derive(Clone, Debug)]
pub struct Fft1dPlan {
    len: usize,
    factors: Vec<usize>,
    roots: Vec<ComplexSample>,
}

impl Fft1dPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Domain("transform length must be at least 1".into()));
        }
        let factors = smallest_prime_factors(len);
        if let Some(&factor) = factors.iter().find(|&&f| f > MAX_NAIVE_PRIME) {
            return Err(Error::UnsupportedLength {
                len,
                factor,
                limit: MAX_NAIVE_PRIME,
            });
        }
        let roots = (0..len).map(|k| root(len, k)).collect();
        Ok(Self {
            len,
            factors,
            roots,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn flops(&self) -> u64 {
        nominal_fft_flops(self.len)
    }

    /// Unscaled in-place transform of `buf[offset + i * stride]` for `i < len`.
    ///
    /// `scratch` must hold at least `len` elements. No other element of `buf` is
    /// read or written.
    pub fn process_strided(
        &self,
        buf: &mut [ComplexSample],
        offset: usize,
        stride: usize,
        scratch: &mut [ComplexSample],
        direction: Direction,
    ) {
        let n = self.len;
        assert!(
            offset + (n - 1) * stride < buf.len(),
            "strided range out of bounds"
        );
        if n == 1 {
            return;
        }
        let out = &mut scratch[..n];
        self.dit(
            buf,
            offset,
            stride,
            out,
            &self.factors,
            1,
            direction.is_inverse(),
        );
        for (i, &v) in out.iter().enumerate() {
            buf[offset + i * stride] = v;
        }
    }

    pub fn process(
        &self,
        buf: &mut [ComplexSample],
        scratch: &mut [ComplexSample],
        direction: Direction,
    ) {
        self.process_strided(buf, 0, 1, scratch, direction);
    }

    #[inline]
    fn root(&self, e: usize, inverse: bool) -> ComplexSample {
        let w = self.roots[e];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dit(
        &self,
        input: &[ComplexSample],
        offset: usize,
        stride: usize,
        out: &mut [ComplexSample],
        factors: &[usize],
        root_step: usize,
        inverse: bool,
    ) {
        let Some((&radix, rest)) = factors.split_first() else {
            out[0] = input[offset];
            return;
        };
        let m = out.len() / radix;
        if rest.is_empty() {
            // leaves: out[q] = input[offset + q * stride] with m == 1
            for (q, v) in out.iter_mut().enumerate() {
                *v = input[offset + q * stride];
            }
        } else {
            for (q, chunk) in out.chunks_exact_mut(m).enumerate() {
                self.dit(
                    input,
                    offset + q * stride,
                    stride * radix,
                    chunk,
                    rest,
                    root_step * radix,
                    inverse,
                );
            }
        }

        if radix == 2 {
            let (lo, hi) = out.split_at_mut(m);
            for (a, (u, v)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let t = if a == 0 {
                    *v
                } else {
                    *v * self.root(a * root_step, inverse)
                };
                let s = *u;
                *u = s + t;
                *v = s - t;
            }
            return;
        }

        // omega_radix = omega_len^(len / radix)
        let radix_step = self.len / radix;
        let mut tmp = [Complex64::default(); MAX_NAIVE_PRIME];
        for a in 0..m {
            tmp[0] = out[a];
            for q in 1..radix {
                let v = out[q * m + a];
                tmp[q] = if a == 0 {
                    v
                } else {
                    v * self.root(q * a * root_step, inverse)
                };
            }
            for b in 0..radix {
                let mut acc = tmp[0];
                for (q, &t) in tmp.iter().enumerate().take(radix).skip(1) {
                    acc += t * self.root(((q * b) % radix) * radix_step, inverse);
                }
                out[a + m * b] = acc;
            }
        }
    }
}

/// Tensor product of 1D plans, applied axis by axis over a row-major box.
#[derive(Clone, Debug)]
pub struct TensorFftPlan {
    shape: TensorShape,
    axes: Vec<Option<Fft1dPlan>>,
}

impl TensorFftPlan {
    pub fn new(shape: TensorShape) -> Result<Self> {
        let axes = shape
            .dims()
            .iter()
            .map(|&n| {
                if n > 1 {
                    Fft1dPlan::new(n).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { shape, axes })
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn max_axis_len(&self) -> usize {
        self.shape.dims().iter().copied().max().unwrap_or(1)
    }

    /// Unscaled transform along every axis; returns the nominal flop count.
    pub fn process(
        &self,
        data: &mut [ComplexSample],
        scratch: &mut Vec<ComplexSample>,
        direction: Direction,
    ) -> u64 {
        assert_eq!(data.len(), self.shape.len(), "tensor length mismatch");
        let dims = self.shape.dims();
        let total = data.len();
        if scratch.len() < self.max_axis_len() {
            scratch.resize(self.max_axis_len(), Complex64::default());
        }
        let mut flops = 0;
        let mut inner = total;
        for (l, axis) in self.axes.iter().enumerate() {
            inner /= dims[l];
            let Some(plan) = axis else { continue };
            let outer = total / (dims[l] * inner);
            for o in 0..outer {
                let base = o * dims[l] * inner;
                for i in 0..inner {
                    plan.process_strided(data, base + i, inner, scratch, direction);
                }
            }
            flops += (outer * inner) as u64 * plan.flops();
        }
        flops
    }
}

pub(crate) fn scale(data: &mut [ComplexSample], factor: f64) {
    data.iter_mut().for_each(|v| *v *= factor);
}

/// 1D FFT of any length whose prime factors are at most [`MAX_NAIVE_PRIME`].
pub fn fft_1d(x: &[ComplexSample], direction: Direction) -> Result<Vec<ComplexSample>> {
    let plan = Fft1dPlan::new(x.len())?;
    let mut out = x.to_vec();
    let mut scratch = vec![Complex64::default(); x.len()];
    plan.process(&mut out, &mut scratch, direction);
    if direction.is_inverse() {
        scale(&mut out, 1.0 / x.len() as f64);
    }
    Ok(out)
}

/// Replaces the subarray `buffer[offset + i * stride]`, `i < count`, by its transform.
pub fn fft_strided(
    buffer: &mut [ComplexSample],
    offset: usize,
    stride: usize,
    count: usize,
    direction: Direction,
) -> Result<()> {
    if stride == 0 || count == 0 {
        return Err(Error::Domain("stride and count must be positive".into()));
    }
    let last = (count - 1)
        .checked_mul(stride)
        .and_then(|v| v.checked_add(offset));
    match last {
        Some(last) if last < buffer.len() => {}
        _ => {
            return Err(Error::Bounds(format!(
                "strided range offset {offset} stride {stride} count {count} exceeds buffer of {}",
                buffer.len()
            )))
        }
    }
    let plan = Fft1dPlan::new(count)?;
    let mut scratch = vec![Complex64::default(); count];
    plan.process_strided(buffer, offset, stride, &mut scratch, direction);
    if direction.is_inverse() {
        let inv = 1.0 / count as f64;
        for i in 0..count {
            buffer[offset + i * stride] *= inv;
        }
    }
    Ok(())
}

/// Multidimensional FFT as successive batched 1D transforms along each axis.
pub fn fft_md(x: &TensorSignal, direction: Direction) -> Result<TensorSignal> {
    let plan = TensorFftPlan::new(x.shape.clone())?;
    let mut out = x.clone();
    let mut scratch = Vec::new();
    plan.process(&mut out.data, &mut scratch, direction);
    if direction.is_inverse() {
        scale(&mut out.data, 1.0 / x.shape.len() as f64);
    }
    Ok(out)
}
