//! Sequential four-step FFT: local transforms of the `p` strided subarrays,
//! twiddling, a transpose, and `n/p` strided transforms of length `p`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{fft_1d, root, ComplexSample, Direction, Fft1dPlan};

/// Length `n` split by a factor `p` with `p^2 | n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    n: usize,
    p: usize,
}

impl SplitPlan {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Domain("n and p must be positive".into()));
        }
        if n % (p * p) != 0 {
            return Err(Error::Config(format!(
                "p^2 = {} does not divide n = {n}",
                p * p
            )));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Config(format!(
                "plan is for length {}, signal has length {len}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Intermediate states reported by [`four_step_observed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// `z^(0) .. z^(p-1)` concatenated, each of length `n/p`.
    LocalTransforms,
    /// The same rows after twiddling.
    Twiddled,
    /// `w^(0) .. w^(n/p - 1)` concatenated, each of length `p`.
    Transposed,
}

pub fn four_step(x: &[ComplexSample], plan: SplitPlan) -> Result<Vec<ComplexSample>> {
    four_step_observed(x, plan, |_, _| {})
}

/// [`four_step`] with a callback after each intermediate step.
pub fn four_step_observed(
    x: &[ComplexSample],
    plan: SplitPlan,
    mut observe: impl FnMut(Stage, &[ComplexSample]),
) -> Result<Vec<ComplexSample>> {
    plan.check(x.len())?;
    let SplitPlan { n, p } = plan;
    if p == 1 {
        return fft_1d(x, Direction::Forward);
    }
    let m = n / p;
    let short = Fft1dPlan::new(m)?;
    let long = Fft1dPlan::new(p)?;
    let mut scratch = vec![Complex64::default(); m.max(p)];

    // Step 0
    let mut z: Vec<Vec<ComplexSample>> = (0..p)
        .map(|s| {
            let mut row: Vec<_> = x.iter().skip(s).step_by(p).copied().collect();
            short.process(&mut row, &mut scratch, Direction::Forward);
            row
        })
        .collect();
    observe(Stage::LocalTransforms, &z.concat());

    // Step 1
    for (s, row) in z.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v *= root(n, k * s);
        }
    }
    observe(Stage::Twiddled, &z.concat());

    // Step 2
    let w: Vec<Vec<ComplexSample>> = (0..m).map(|k| (0..p).map(|s| z[s][k]).collect()).collect();
    observe(Stage::Transposed, &w.concat());

    // Step 3
    let mut y = vec![Complex64::default(); n];
    for (k, mut col) in w.into_iter().enumerate() {
        long.process(&mut col, &mut scratch, Direction::Forward);
        for (c, v) in col.into_iter().enumerate() {
            y[k + c * m] = v;
        }
    }
    Ok(y)
}

/// In-place four-step transform allocating its own permutation buffer.
pub fn four_step_inplace(x: &mut [ComplexSample], plan: SplitPlan) -> Result<()> {
    let mut buffer = Vec::new();
    four_step_inplace_with(x, plan, &mut buffer)
}

/// In-place four-step transform using `buffer` (grown to `n`) for the Step-2
/// permutation and as kernel scratch. For `p = 1` the buffer is not touched.
pub fn four_step_inplace_with(
    x: &mut [ComplexSample],
    plan: SplitPlan,
    buffer: &mut Vec<ComplexSample>,
) -> Result<()> {
    plan.check(x.len())?;
    let SplitPlan { n, p } = plan;
    if p == 1 {
        let whole = Fft1dPlan::new(n)?;
        let mut scratch = vec![Complex64::default(); n];
        whole.process(x, &mut scratch, Direction::Forward);
        return Ok(());
    }
    let m = n / p;
    let short = Fft1dPlan::new(m)?;
    let long = Fft1dPlan::new(p)?;
    if buffer.len() < n {
        buffer.resize(n, Complex64::default());
    }

    for s in 0..p {
        short.process_strided(x, s, p, buffer, Direction::Forward);
    }
    for k in 0..m {
        for s in 0..p {
            x[s + k * p] *= root(n, k * s);
        }
    }
    buffer[..n].copy_from_slice(x);
    for k in 0..m {
        for s in 0..p {
            x[k + s * m] = buffer[s + k * p];
        }
    }
    for k in 0..m {
        long.process_strided(x, k, m, buffer, Direction::Forward);
    }
    Ok(())
}
