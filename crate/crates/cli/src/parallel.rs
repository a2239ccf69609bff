//! Parallel sweep.
//!
//! Every `(cell, seed index)` run is independent, so they are spread over the
//! rayon pool and gathered back by index. The result is identical to
//! [`ppacdc_core::sim::sweep::sweep`] regardless of thread count.

use ppacdc_core::sim::sweep::{run_cell, summarize, SweepGrid, SweepRow};
use ppacdc_core::{Result, SimConfig};
use rayon::prelude::*;

pub fn par_sweep(base: &SimConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, u32)> = grid.cells().collect();
    let seeds = grid.n_seeds;
    let iterations = (0..cells.len() * seeds)
        .into_par_iter()
        .map(|task| {
            let (alpha, bits) = cells[task / seeds];
            run_cell(base, alpha, bits, task % seeds, grid.resample_topology)
                .map(|r| r.convergence_iter)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(alpha, bits))| summarize(alpha, bits, &iterations[c * seeds..(c + 1) * seeds]))
        .collect())
}
