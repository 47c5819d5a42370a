//! Weighted Lebesgue, Morrey, and weak Morrey norms over a shared ball
//! family.
//!
//! The weak norm's supremum over levels is computed exactly: the discrete
//! distribution function is a step function of the finitely many values
//! of |f| on a ball, and `sup_{λ>0} λ · w({|f| > λ})^{1/p}` is attained
//! in the limit λ ↑ v at some value v, i.e. on the superlevel set
//! `{|f| >= v}`. Sorting the values (stably, ties in cell order) and
//! scanning prefix weights gives that supremum with no λ grid. Keeping
//! tied blocks in cell order also makes the discrete Chebyshev inequality
//! `weak <= strong` hold exactly in floating point, equality cases
//! (indicators) included.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{quad_integral, Ball, Region, SampledFunction};
use crate::weights::{BallFamily, Weight};

#[derive(Debug, Error)]
pub enum SpacesError {
    #[error("Morrey exponent p must satisfy p >= 1, got {0}")]
    BadP(f64),
    #[error("Morrey parameter kappa must lie in (0, 1), got {0}")]
    BadKappa(f64),
    #[error("level must be nonnegative and finite, got {0}")]
    BadLevel(f64),
    #[error("ball family is empty or holds no cells")]
    EmptyFamily,
    #[error("function and weight live on different grids")]
    GridMismatch,
}

/// Exponent pair (p, κ) of the Morrey scale L^{p,κ}(w).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyParams {
    pub p: f64,
    pub kappa: f64,
}

impl MorreyParams {
    pub fn new(p: f64, kappa: f64) -> Result<Self, SpacesError> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(SpacesError::BadP(p));
        }
        if !(kappa.is_finite() && 0.0 < kappa && kappa < 1.0) {
            return Err(SpacesError::BadKappa(kappa));
        }
        Ok(MorreyParams { p, kappa })
    }
}

/// `(∫ |f|^p w)^{1/p}` over the whole box.
pub fn lp_w_norm(f: &SampledFunction, p: f64, w: &Weight) -> Result<f64, SpacesError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(SpacesError::BadP(p));
    }
    if f.grid() != w.grid() {
        return Err(SpacesError::GridMismatch);
    }
    let integrand = SampledFunction::from_values(
        f.grid(),
        f.values()
            .iter()
            .zip(w.data().values())
            .map(|(&v, &wv)| v.abs().powf(p) * wv)
            .collect(),
    )
    .expect("finite");
    Ok(quad_integral(&integrand, Region::FullBox).powf(1.0 / p))
}

/// `w({x in B : |f(x)| > level})`: the weighted measure of the strict
/// superlevel set inside a ball.
pub fn local_distribution(
    f: &SampledFunction,
    w: &Weight,
    ball: Ball,
    level: f64,
) -> Result<f64, SpacesError> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(SpacesError::BadLevel(level));
    }
    if f.grid() != w.grid() {
        return Err(SpacesError::GridMismatch);
    }
    let grid = f.grid();
    let mut sum = 0.0;
    grid.for_each_cell_in(Region::Ball(ball), |idx| {
        if f.value(idx).abs() > level {
            sum += w.value(idx);
        }
    });
    Ok(sum * grid.cell_measure())
}

/// Strong Morrey norm: `max_B ( w(B)^{-κ} ∫_B |f|^p w )^{1/p}`, computed
/// as `(∫_B |f|^p w)^{1/p} / w(B)^{κ/p}` so the weak/strong comparison
/// shares its scaling path. Balls without cells are skipped.
pub fn morrey_norm(
    f: &SampledFunction,
    params: MorreyParams,
    w: &Weight,
    family: &BallFamily,
) -> Result<f64, SpacesError> {
    if f.grid() != w.grid() {
        return Err(SpacesError::GridMismatch);
    }
    let grid = f.grid();
    let hn = grid.cell_measure();
    let mut best: Option<f64> = None;
    for ball in family.balls() {
        let mut integral = 0.0;
        let mut w_ball = 0.0;
        let mut cells = 0usize;
        grid.for_each_cell_in(Region::Ball(ball), |idx| {
            integral += f.value(idx).abs().powf(params.p) * w.value(idx);
            w_ball += w.value(idx);
            cells += 1;
        });
        if cells == 0 {
            continue;
        }
        let candidate =
            (integral * hn).powf(1.0 / params.p) / (w_ball * hn).powf(params.kappa / params.p);
        best = Some(best.map_or(candidate, |b: f64| b.max(candidate)));
    }
    best.ok_or(SpacesError::EmptyFamily)
}

/// Exact level supremum `sup_{λ>0} λ · (Σ_{|f| >= v} w h^n)^{1/p}` over
/// the given cells (the `κ = 0` building block shared by the weak Morrey
/// norm and the weak-(1,1) experiments). Ties accumulate in cell order.
pub fn weak_level_sup(f: &SampledFunction, w: &Weight, cells: &[usize], p: f64) -> f64 {
    let mut ranked: Vec<usize> = cells
        .iter()
        .copied()
        .filter(|&i| f.value(i) != 0.0)
        .collect();
    ranked.sort_by(|&a, &b| {
        f.value(b)
            .abs()
            .partial_cmp(&f.value(a).abs())
            .expect("finite values")
            .then(a.cmp(&b))
    });
    let hn = f.grid().cell_measure();
    let mut best = 0.0f64;
    let mut prefix_w = 0.0f64;
    let mut i = 0;
    while i < ranked.len() {
        let v = f.value(ranked[i]).abs();
        // Absorb the tied block in cell order.
        while i < ranked.len() && f.value(ranked[i]).abs() == v {
            prefix_w += w.value(ranked[i]);
            i += 1;
        }
        let candidate = v * (prefix_w * hn).powf(1.0 / p);
        if candidate > best {
            best = candidate;
        }
    }
    best
}

/// Weak Morrey norm:
/// `max_B sup_{λ>0} λ · w({x in B: |f| > λ})^{1/p} / w(B)^{κ/p}`,
/// with the λ supremum evaluated exactly over the value set of |f|.
pub fn weak_morrey_norm(
    f: &SampledFunction,
    params: MorreyParams,
    w: &Weight,
    family: &BallFamily,
) -> Result<f64, SpacesError> {
    if f.grid() != w.grid() {
        return Err(SpacesError::GridMismatch);
    }
    let grid = f.grid();
    let hn = grid.cell_measure();
    let mut best: Option<f64> = None;
    for ball in family.balls() {
        let cells = grid.cells_in(Region::Ball(ball));
        if cells.is_empty() {
            continue;
        }
        let w_ball: f64 = cells.iter().map(|&i| w.value(i)).sum::<f64>() * hn;
        let sup = weak_level_sup(f, w, &cells, params.p);
        let candidate = sup / w_ball.powf(params.kappa / params.p);
        best = Some(best.map_or(candidate, |b: f64| b.max(candidate)));
    }
    best.ok_or(SpacesError::EmptyFamily)
}
