//! Browser demo: distribution colouring, a 2D spectrum computed by the
//! parallel transform, and the BSP cost of a plan.
//!
//! Every export runs the virtual processors serially, since the browser has
//! a single thread.

use fftu::cli::TraceSummary;
use fftu::distribution::{Distribution, PencilMap, SlabMap};
use fftu::kernel::relative_l2;
use fftu::{
    fft_md, fftu_transform, max_processors, CostModel, CyclicMap, Direction, ExecMode, FftuPlan,
    ProcGrid, Strategy, TensorShape, TensorSignal,
};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Owning rank of every element of an `rows x cols` array, row-major.
///
/// `strategy` is `cyclic`, `slab` or `pencil`; `p_rows x p_cols` is the grid
/// (a slab uses `p_rows * p_cols` processors along the rows).
pub fn owners(
    rows: usize,
    cols: usize,
    strategy: &str,
    p_rows: usize,
    p_cols: usize,
) -> fftu::Result<Vec<u32>> {
    let shape = TensorShape::new([rows, cols])?;
    let map: Box<dyn Distribution> = match strategy {
        "cyclic" => Box::new(CyclicMap::new(
            shape.clone(),
            ProcGrid::new([p_rows, p_cols])?,
        )?),
        "slab" => Box::new(SlabMap::new(shape.clone(), p_rows * p_cols, 0)?),
        "pencil" => Box::new(PencilMap::new(shape.clone(), (p_rows, p_cols), (0, 1))?),
        other => return Err(fftu::Error::Domain(format!("unknown strategy {other:?}"))),
    };
    Ok((0..shape.len())
        .map(|i| map.owner(&shape.coord_of(i)).0 as u32)
        .collect())
}

#[wasm_bindgen]
pub fn owner_map(
    rows: usize,
    cols: usize,
    strategy: &str,
    p_rows: usize,
    p_cols: usize,
) -> Result<Vec<u32>, JsError> {
    owners(rows, cols, strategy, p_rows, p_cols).map_err(js_err)
}

/// Test images for [`spectrum`].
pub fn pattern(kind: &str, n: usize) -> fftu::Result<TensorSignal> {
    let shape = TensorShape::new([n, n])?;
    let c = n as f64 / 2.0;
    let f = |k: &[usize]| -> f64 {
        let (y, x) = (k[0] as f64, k[1] as f64);
        match kind {
            "square" => {
                ((y - c).abs() < n as f64 / 8.0 && (x - c).abs() < n as f64 / 8.0) as u8 as f64
            }
            "disc" => (((y - c).powi(2) + (x - c).powi(2)).sqrt() < n as f64 / 6.0) as u8 as f64,
            "stripes" => (2.0 * std::f64::consts::PI * (3.0 * x + 5.0 * y) / n as f64).cos(),
            "checker" => ((k[0] / 4 + k[1] / 4) % 2) as f64,
            _ => 0.0,
        }
    };
    if !["square", "disc", "stripes", "checker"].contains(&kind) {
        return Err(fftu::Error::Domain(format!("unknown pattern {kind:?}")));
    }
    Ok(TensorSignal::from_fn(shape, |k| Complex64::new(f(k), 0.0)))
}

#[wasm_bindgen]
pub struct Spectrum {
    n: usize,
    input: Vec<f64>,
    log_magnitude: Vec<f64>,
    residual: f64,
    summary: String,
}

#[wasm_bindgen]
impl Spectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Real part of the input, row-major.
    pub fn input(&self) -> Vec<f64> {
        self.input.clone()
    }

    /// `log(1 + |Y|)` with the zero frequency moved to the centre.
    pub fn log_magnitude(&self) -> Vec<f64> {
        self.log_magnitude.clone()
    }

    /// Relative L2 distance from the sequential transform.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Trace summary as JSON.
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

pub fn compute_spectrum(
    kind: &str,
    n: usize,
    p_rows: usize,
    p_cols: usize,
) -> fftu::Result<Spectrum> {
    let x = pattern(kind, n)?;
    let plan = FftuPlan::new(
        x.shape().clone(),
        ProcGrid::new([p_rows, p_cols])?,
        Direction::Forward,
    )?;
    let mut locals = plan.distribute(&x)?;
    let trace = fftu_transform(&mut locals, &plan, ExecMode::Serial)?;
    let y = plan.collect(&locals)?;
    let residual = relative_l2(y.data(), fft_md(&x, Direction::Forward)?.data());
    let h = n / 2;
    let log_magnitude = (0..n * n)
        .map(|i| {
            let (r, c) = ((i / n + h) % n, (i % n + h) % n);
            y.data()[r * n + c].norm().ln_1p()
        })
        .collect();
    let summary = TraceSummary::new(&trace, CostModel::new(1.0, 0.0)?);
    Ok(Spectrum {
        n,
        input: x.data().iter().map(|v| v.re).collect(),
        log_magnitude,
        residual,
        summary: serde_json::to_string(&summary)?,
    })
}

#[wasm_bindgen]
pub fn spectrum(kind: &str, n: usize, p_rows: usize, p_cols: usize) -> Result<Spectrum, JsError> {
    compute_spectrum(kind, n, p_rows, p_cols).map_err(js_err)
}

/// BSP cost of one forward transform of `shape` (e.g. `64x64x16`) on `grid`,
/// with the processor ceilings of the cyclic and slab strategies, as JSON.
pub fn cost_json(shape: &str, grid: &str, g: f64, l: f64) -> fftu::Result<String> {
    let shape: TensorShape = shape.parse()?;
    let grid: ProcGrid = grid.parse()?;
    let plan = FftuPlan::new(shape.clone(), grid, Direction::Forward)?;
    let mut locals = vec![vec![Complex64::default(); plan.local_shape().len()]; plan.nprocs()];
    let trace = fftu_transform(&mut locals, &plan, ExecMode::Serial)?;
    let summary = TraceSummary::new(&trace, CostModel::new(g, l)?);
    let value = serde_json::json!({
        "nprocs": plan.nprocs(),
        "elements": shape.len(),
        "p_max_cyclic": max_processors(&shape, Strategy::Cyclic)?,
        "p_max_slab": max_processors(&shape, Strategy::Slab { dim: 0 })?,
        "trace": summary,
        "supersteps": trace.supersteps,
    });
    Ok(value.to_string())
}

#[wasm_bindgen]
pub fn bsp_cost(shape: &str, grid: &str, g: f64, l: f64) -> Result<String, JsError> {
    cost_json(shape, grid, g, l).map_err(js_err)
}
