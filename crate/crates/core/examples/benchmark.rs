//! Times model assembly and operator application on the 128×128 benchmark geometry.

use std::time::Instant;

use fbmb::geometry::{make_grid, make_ring_array, Point2, Timing};
use fbmb::model::build_model;

fn main() -> fbmb::Result<()> {
    let grid = make_grid(128, 128, 150e-6, Point2::ORIGIN)?;
    let array = make_ring_array(256, 0.040, 270.0, Point2::ORIGIN)?;
    let timing = Timing::covering(&grid, &array, 40e6, 1500.0, None, 4)?;
    let t = Instant::now();
    let model = build_model(grid, array, timing)?;
    let s = model.stats();
    println!("build: {:.2} s, {} rows, {} nnz, {:.0} MB", t.elapsed().as_secs_f64(), s.rows, s.nnz, s.memory_bytes as f64 / 1e6);
    let mut x = model.zero_image();
    x.values_mut().iter_mut().enumerate().for_each(|(k, v)| *v = (k % 7) as f64);
    let t = Instant::now();
    let y = model.apply(&x)?;
    println!("apply: {:.3} s", t.elapsed().as_secs_f64());
    let t = Instant::now();
    let _ = model.apply_adjoint(&y)?;
    println!("adjoint: {:.3} s", t.elapsed().as_secs_f64());
    Ok(())
}
