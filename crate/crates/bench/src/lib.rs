//! Shared input builders for the operator benchmarks.

use morreylab_core::{build_bank, Grid, KernelBank, SampledFunction};

/// A smooth off-center bump, the typical corpus shape.
pub fn bump(grid: &Grid) -> SampledFunction {
    SampledFunction::from_fn(grid, |p| {
        let dx = p[0] - 0.1;
        let dy = p[1];
        let s = (dx * dx + dy * dy).sqrt() / 0.15;
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(3)
        }
    })
    .expect("finite bump")
}

pub fn standard_grid(dim: usize, n: usize) -> Grid {
    Grid::new(dim, 1.0, n).expect("valid grid")
}

pub fn standard_bank(grid: &Grid, size: usize) -> KernelBank {
    build_bank(1.0, size, 7, grid).expect("admissible bank")
}
