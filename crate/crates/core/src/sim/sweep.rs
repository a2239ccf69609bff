//! Parameter sweeps over the zooming factor and the bit budget.
//!
//! Seed index `i` of every cell runs with seed `base.seed + i` (wrapping), so
//! all cells see the same initial states and a one-seed sweep reproduces a
//! single [`run`] with the base seed.

use alloc::vec::Vec;

use super::{run, GraphSpec, RunResult, SimConfig};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub bits: Vec<u32>,
    pub n_seeds: usize,
    /// Draw a new random topology per seed instead of keeping the base graph.
    pub resample_topology: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub bits: u32,
    pub seeds: usize,
    pub converged_count: usize,
    /// Statistics over converged runs only; `None` when none converged.
    pub mean_iters: Option<f64>,
    pub min_iters: Option<usize>,
    pub max_iters: Option<usize>,
}

impl SweepRow {
    /// Whether some seed failed to converge.
    pub fn flagged(&self) -> bool {
        self.converged_count < self.seeds
    }
}

impl SweepGrid {
    /// `(alpha, bits)` cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.alphas
            .iter()
            .flat_map(move |&a| self.bits.iter().map(move |&b| (a, b)))
    }
}

pub fn run_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Config for one `(alpha, bits, seed index)` run. Traces are disabled.
pub fn cell_config(
    base: &SimConfig,
    alpha: f64,
    bits: u32,
    index: usize,
    resample_topology: bool,
) -> SimConfig {
    let seed = run_seed(base.seed, index);
    let mut config = base.clone();
    config.protocol.alpha = alpha;
    config.protocol.bits = bits;
    config.seed = seed;
    config.record_trace = false;
    if resample_topology {
        if let GraphSpec::Random { seed: graph_seed, .. } = &mut config.graph {
            *graph_seed = seed;
        }
    }
    config
}

pub fn run_cell(
    base: &SimConfig,
    alpha: f64,
    bits: u32,
    index: usize,
    resample_topology: bool,
) -> Result<RunResult> {
    run(&cell_config(base, alpha, bits, index, resample_topology))
}

/// Aggregates convergence iterations (`None` for a non-converged run).
pub fn summarize(alpha: f64, bits: u32, iterations: &[Option<usize>]) -> SweepRow {
    let converged: Vec<usize> = iterations.iter().flatten().copied().collect();
    let mean_iters = (!converged.is_empty())
        .then(|| converged.iter().sum::<usize>() as f64 / converged.len() as f64);
    SweepRow {
        alpha,
        bits,
        seeds: iterations.len(),
        converged_count: converged.len(),
        mean_iters,
        min_iters: converged.iter().min().copied(),
        max_iters: converged.iter().max().copied(),
    }
}

/// Sequential sweep. Rows come back in [`SweepGrid::cells`] order.
pub fn sweep(base: &SimConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    grid.cells()
        .map(|(alpha, bits)| {
            let iterations = (0..grid.n_seeds)
                .map(|i| {
                    run_cell(base, alpha, bits, i, grid.resample_topology)
                        .map(|r| r.convergence_iter)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(alpha, bits, &iterations))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_skips_failures() {
        let row = summarize(1.2, 8, &[Some(10), None, Some(20)]);
        assert_eq!(row.seeds, 3);
        assert_eq!(row.converged_count, 2);
        assert_eq!(row.mean_iters, Some(15.0));
        assert_eq!((row.min_iters, row.max_iters), (Some(10), Some(20)));
        assert!(row.flagged());

        let none = summarize(10.0, 2, &[None, None]);
        assert_eq!(none.mean_iters, None);
        assert!(none.flagged());
    }

    #[test]
    fn single_seed_sweep_matches_run() {
        let base = SimConfig {
            seed: 77,
            ..SimConfig::default()
        };
        let grid = SweepGrid {
            alphas: alloc::vec![1.2],
            bits: alloc::vec![10],
            n_seeds: 1,
            resample_topology: false,
        };
        let rows = sweep(&base, &grid).unwrap();
        let mut single = base.clone();
        single.protocol.bits = 10;
        let result = run(&single).unwrap();
        assert_eq!(rows[0].min_iters, result.convergence_iter);
        assert_eq!(rows[0].converged_count, usize::from(result.converged));
    }

    #[test]
    fn resampling_changes_only_random_graphs() {
        let base = SimConfig {
            graph: GraphSpec::Random {
                n: 6,
                extra_edge_prob: 0.2,
                seed: 1,
            },
            ..SimConfig::default()
        };
        let fixed = cell_config(&base, 1.2, 8, 3, false);
        let moved = cell_config(&base, 1.2, 8, 3, true);
        assert_eq!(fixed.graph, base.graph);
        assert_eq!(
            moved.graph,
            GraphSpec::Random {
                n: 6,
                extra_edge_prob: 0.2,
                seed: 3
            }
        );
        let ring = cell_config(&SimConfig::default(), 1.2, 8, 3, true);
        assert_eq!(ring.graph, GraphSpec::Ring { n: 5 });
    }
}
