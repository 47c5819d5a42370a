//! Uniform grids on a symmetric box, midpoint quadrature, and dyadic cubes.
//!
//! Everything downstream (weights, square functions, Morrey norms, the
//! Calderón–Zygmund splitting) works on cell-center samples of a box
//! `[-L, L]^n` with `N` cells per axis, `N` a power of two. Cell centers
//! are offset by `h/2` so the origin is never a sample point, which keeps
//! singular power weights finite. A cell belongs to a region iff its
//! center does, which makes the midpoint rule exactly additive over
//! dyadic partitions.
//!
//! Metric balls are taken in the max norm (axis-aligned cubes; on the
//! line, ordinary intervals). A ball of dyadic radius `h·2^k` anchored on
//! a lattice corner then contains exactly `(2^{k+1})^n` cells, so
//! ball-doubling ratios of the constant weight come out as exactly `2^n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ambient point. One-dimensional grids use the first coordinate and keep
/// the second at zero, so Euclidean distances work unchanged.
pub type Point = [f64; 2];

/// Index-space slack when testing cell-center membership; a millionth of a
/// cell, far below any geometry the lab constructs.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("points per axis must be a power of two >= 8, got {0}")]
    BadPointsPerAxis(usize),
    #[error("half width must be positive and finite, got {0}")]
    BadHalfWidth(f64),
    #[error("non-finite sample value {value} at cell {index}")]
    NonFiniteSample { index: usize, value: f64 },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("ball center must lie inside the box")]
    BallCenterOutsideBox,
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("cube side must be positive and finite, got {0}")]
    BadSide(f64),
    #[error("cube is at cell level; cannot refine below the grid spacing")]
    AtCellLevel,
}

/// Uniform discretization of the box `[-L, L]^n`, `n ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(GridError::BadHalfWidth(half_width));
        }
        let n = points_per_axis;
        if n < 8 || !n.is_power_of_two() {
            return Err(GridError::BadPointsPerAxis(n));
        }
        Ok(Grid {
            dim,
            half_width,
            points_per_axis: n,
            spacing: 2.0 * half_width / n as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of cells, `N^n`.
    pub fn cell_count(&self) -> usize {
        match self.dim {
            1 => self.points_per_axis,
            _ => self.points_per_axis * self.points_per_axis,
        }
    }

    /// Measure of one cell, `h^n`.
    pub fn cell_measure(&self) -> f64 {
        match self.dim {
            1 => self.spacing,
            _ => self.spacing * self.spacing,
        }
    }

    /// Center coordinate along one axis: `-L + (i + 1/2) h`.
    pub fn axis_center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    /// Lattice corner along one axis: `-L + i h`, `i = 0..=N`. Corner
    /// `N/2` is the origin.
    pub fn axis_corner(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing
    }

    /// Center of the cell with flat index `idx` (row-major in 2-D).
    pub fn center(&self, idx: usize) -> Point {
        match self.dim {
            1 => [self.axis_center(idx), 0.0],
            _ => {
                let n = self.points_per_axis;
                [self.axis_center(idx % n), self.axis_center(idx / n)]
            }
        }
    }

    /// Flat index from per-axis indices (the second is ignored in 1-D).
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        match self.dim {
            1 => ix,
            _ => iy * self.points_per_axis + ix,
        }
    }

    /// Indices of axis centers inside the closed interval `[lo, hi]`.
    pub fn axis_cells_closed(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let n = self.points_per_axis as f64;
        let lo_idx = ((lo + self.half_width) / self.spacing - 0.5 - TIE_EPS).ceil();
        let hi_idx = ((hi + self.half_width) / self.spacing - 0.5 + TIE_EPS).floor();
        let start = lo_idx.max(0.0) as usize;
        let end = (hi_idx.min(n - 1.0) + 1.0).max(0.0) as usize;
        start..end.max(start)
    }

    /// Indices of axis centers inside the half-open interval `[lo, hi)`.
    pub fn axis_cells_half_open(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let n = self.points_per_axis as f64;
        let lo_idx = ((lo + self.half_width) / self.spacing - 0.5 - TIE_EPS).ceil();
        let hi_idx = ((hi + self.half_width) / self.spacing - 0.5 - TIE_EPS).ceil();
        let start = lo_idx.max(0.0) as usize;
        let end = hi_idx.clamp(0.0, n) as usize;
        start..end.max(start)
    }

    /// Visit every cell whose center lies in `region`, in increasing flat
    /// index order (the deterministic reduction order used throughout).
    pub fn for_each_cell_in<F: FnMut(usize)>(&self, region: Region, mut visit: F) {
        match region {
            Region::FullBox => {
                for idx in 0..self.cell_count() {
                    visit(idx);
                }
            }
            Region::Ball(b) => {
                let rx = self.axis_cells_closed(b.center[0] - b.radius, b.center[0] + b.radius);
                if self.dim == 1 {
                    for ix in rx {
                        visit(ix);
                    }
                } else {
                    let ry = self.axis_cells_closed(b.center[1] - b.radius, b.center[1] + b.radius);
                    for iy in ry {
                        for ix in rx.clone() {
                            visit(self.index(ix, iy));
                        }
                    }
                }
            }
            Region::Cube(q) => {
                let rx = self.axis_cells_half_open(q.anchor[0], q.anchor[0] + q.side);
                if self.dim == 1 {
                    for ix in rx {
                        visit(ix);
                    }
                } else {
                    let ry = self.axis_cells_half_open(q.anchor[1], q.anchor[1] + q.side);
                    for iy in ry {
                        for ix in rx.clone() {
                            visit(self.index(ix, iy));
                        }
                    }
                }
            }
        }
    }

    /// Flat indices of the cells in `region`, in increasing order.
    pub fn cells_in(&self, region: Region) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_cell_in(region, |idx| out.push(idx));
        out
    }

    /// Number of cells in `region`.
    pub fn cell_count_in(&self, region: Region) -> usize {
        let mut n = 0usize;
        self.for_each_cell_in(region, |_| n += 1);
        n
    }
}

/// Euclidean distance between two points.
pub fn dist(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Squared Euclidean distance.
pub fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Metric ball in the max norm: the axis-aligned cube of half-side
/// `radius` around `center`; an interval on the line. Cell membership is
/// closed: `|x_i - c_i| <= r` on every used axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64, grid: &Grid) -> Result<Self, GridError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GridError::BadRadius(radius));
        }
        if center
            .iter()
            .take(grid.dim())
            .any(|c| c.abs() > grid.half_width())
        {
            return Err(GridError::BallCenterOutsideBox);
        }
        Ok(Ball { center, radius })
    }

    /// The concentric ball with `lambda` times the radius.
    pub fn scaled(&self, lambda: f64) -> Ball {
        Ball {
            center: self.center,
            radius: self.radius * lambda,
        }
    }

    /// Whether the ball (not just its cells) stays inside the box.
    pub fn inside_box(&self, grid: &Grid) -> bool {
        (0..grid.dim()).all(|a| self.center[a].abs() + self.radius <= grid.half_width() + 1e-12)
    }
}

/// Half-open dyadic cube `[anchor, anchor + side)^n`. `level` counts
/// halvings from the root cube: `side = root_side · 2^{-level}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub anchor: Point,
    pub side: f64,
    pub level: u32,
}

impl DyadicCube {
    pub fn new(anchor: Point, side: f64, level: u32) -> Result<Self, GridError> {
        if !(side.is_finite() && side > 0.0) {
            return Err(GridError::BadSide(side));
        }
        Ok(DyadicCube {
            anchor,
            side,
            level,
        })
    }

    /// The root cube: the whole box `[-L, L)^n` at level 0.
    pub fn root(grid: &Grid) -> DyadicCube {
        let l = grid.half_width();
        DyadicCube {
            anchor: [-l, if grid.dim() == 2 { -l } else { 0.0 }],
            side: 2.0 * l,
            level: 0,
        }
    }

    /// Geometric center of the cube.
    pub fn center(&self, grid: &Grid) -> Point {
        let half = 0.5 * self.side;
        match grid.dim() {
            1 => [self.anchor[0] + half, 0.0],
            _ => [self.anchor[0] + half, self.anchor[1] + half],
        }
    }

    /// The `2^n` children tiling this cube, each with half the side.
    /// Refinement stops at cell level: a cube of side `h` has no children.
    pub fn children(&self, grid: &Grid) -> Result<Vec<DyadicCube>, GridError> {
        let child_side = 0.5 * self.side;
        if child_side < grid.spacing() * (1.0 - 1e-12) {
            return Err(GridError::AtCellLevel);
        }
        let mut out = Vec::with_capacity(1 << grid.dim());
        let offsets: &[[f64; 2]] = match grid.dim() {
            1 => &[[0.0, 0.0], [1.0, 0.0]],
            _ => &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
        };
        for off in offsets {
            out.push(DyadicCube {
                anchor: [
                    self.anchor[0] + off[0] * child_side,
                    self.anchor[1] + off[1] * child_side,
                ],
                side: child_side,
                level: self.level + 1,
            });
        }
        Ok(out)
    }
}

/// The `2^n` children of a dyadic cube (spec operation form of
/// [`DyadicCube::children`]).
pub fn dyadic_children(q: &DyadicCube, grid: &Grid) -> Result<Vec<DyadicCube>, GridError> {
    q.children(grid)
}

/// Integration region for the midpoint rule.
#[derive(Debug, Clone, Copy)]
pub enum Region {
    FullBox,
    Ball(Ball),
    Cube(DyadicCube),
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Region {
        Region::Ball(b)
    }
}

impl From<DyadicCube> for Region {
    fn from(q: DyadicCube) -> Region {
        Region::Cube(q)
    }
}

/// Function values sampled at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    /// Sample a pointwise rule at every cell center; rejects non-finite
    /// values.
    pub fn from_fn<F: Fn(Point) -> f64>(grid: &Grid, rule: F) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(grid.cell_count());
        for idx in 0..grid.cell_count() {
            let v = rule(grid.center(idx));
            if !v.is_finite() {
                return Err(GridError::NonFiniteSample {
                    index: idx,
                    value: v,
                });
            }
            values.push(v);
        }
        Ok(SampledFunction {
            grid: *grid,
            values,
        })
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self, GridError> {
        Self::from_fn(grid, |_| c)
    }

    pub fn zeros(grid: &Grid) -> Self {
        SampledFunction {
            grid: *grid,
            values: vec![0.0; grid.cell_count()],
        }
    }

    /// Wrap precomputed per-cell values; rejects length mismatch and
    /// non-finite entries.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.cell_count() {
            return Err(GridError::GridMismatch);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(GridError::NonFiniteSample { index, value });
            }
        }
        Ok(SampledFunction {
            grid: *grid,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Cellwise map. The caller is responsible for keeping values finite.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> SampledFunction {
        SampledFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> SampledFunction {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> SampledFunction {
        self.map(f64::abs)
    }

    pub fn try_add(&self, other: &SampledFunction) -> Result<SampledFunction, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(SampledFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Midpoint-rule integral of `f` over a region: the sum of cell-center
/// values times `h^n`, a cell counting iff its center lies in the region.
/// An empty intersection integrates to zero.
pub fn quad_integral(f: &SampledFunction, region: Region) -> f64 {
    let mut sum = 0.0;
    f.grid()
        .for_each_cell_in(region, |idx| sum += f.values[idx]);
    sum * f.grid().cell_measure()
}
