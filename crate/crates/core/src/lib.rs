//! Parallel multidimensional FFT in the cyclic distribution.
//!
//! A d-dimensional transform of `N = n_1 ... n_d` elements over a
//! `p_1 x ... x p_d` grid of virtual processors (`p_l^2 | n_l`) that starts
//! and ends in the same cyclic distribution and communicates in exactly one
//! all-to-all superstep. Up to `sqrt(N)` processors can be used when every
//! `n_l` is a square.
//!
//! - [`kernel`]: sequential FFTs and the naive DFT oracles
//! - [`distribution`]: cyclic, slab and pencil maps, scatter and gather
//! - [`fourstep`]: the sequential four-step factorization
//! - [`bsp`]: the superstep runtime with Put and cost accounting
//! - [`engine`]: the parallel transform and its inverse
//! - [`cli`]: the `fftu` benchmark tool

pub mod bsp;
pub mod cli;
pub mod distribution;
pub mod engine;
pub mod error;
pub mod fourstep;
pub mod kernel;

pub use bsp::{cost_report, run_spmd, CostModel, ExecMode, SuperstepTrace};
pub use distribution::{gather, max_processors, scatter, CyclicMap, ProcGrid, Strategy};
pub use engine::{fftu_inverse, fftu_transform, pack_and_twiddle, FftuPlan, TwiddleTable};
pub use error::{Error, Result};
pub use kernel::{
    dft_naive, dft_naive_md, fft_1d, fft_md, fft_strided, omega, ComplexSample, Direction,
    TensorShape, TensorSignal,
};
