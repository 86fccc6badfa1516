#![allow(dead_code)]

use fftu::{ComplexSample, ProcGrid, TensorShape, TensorSignal};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ORACLE_SHAPES: &[&[usize]] = &[
    &[16],
    &[64],
    &[8, 8],
    &[16, 4],
    &[8, 8, 8],
    &[4, 4, 4, 4],
    &[8, 4, 2],
    &[4, 4, 2, 2, 2],
];

pub fn shape(dims: &[usize]) -> TensorShape {
    TensorShape::new(dims).unwrap()
}

pub fn random_signal(dims: &[usize], seed: u64) -> TensorSignal {
    let shape = shape(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..shape.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    TensorSignal::new(shape, data).unwrap()
}

pub fn random_vec(n: usize, seed: u64) -> Vec<ComplexSample> {
    random_signal(&[n], seed).into_data()
}

/// Every q with q^2 | n.
pub fn legal_factors(n: usize) -> Vec<usize> {
    (1..=n)
        .take_while(|q| q * q <= n)
        .filter(|q| n % (q * q) == 0)
        .collect()
}

/// Every grid with p_l^2 | n_l, in lexicographic order.
pub fn legal_grids(dims: &[usize]) -> Vec<ProcGrid> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for &n in dims {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                legal_factors(n).into_iter().map(move |q| {
                    let mut g = prefix.clone();
                    g.push(q);
                    g
                })
            })
            .collect();
    }
    out.into_iter().map(|g| ProcGrid::new(g).unwrap()).collect()
}
