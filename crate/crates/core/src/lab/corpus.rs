//! The seeded default corpus: twelve compactly supported functions
//! (single bumps at varied scales, opposite-sign bump pairs, ball
//! indicators, oscillating bumps) crossed with three A_1 power weights.
//! Positions are jittered from the seed; every support stays inside the
//! half-box so cones and shells see genuine far field before the
//! boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{dist, Grid, Point, SampledFunction};
use crate::weights::Weight;

use super::LabError;

#[derive(Debug, Clone)]
pub struct CorpusFunction {
    pub descriptor: String,
    pub f: SampledFunction,
}

#[derive(Debug, Clone)]
pub struct CorpusWeight {
    pub descriptor: String,
    pub exponent: f64,
    pub a1_valid: bool,
    pub weight: Weight,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub functions: Vec<CorpusFunction>,
    pub weights: Vec<CorpusWeight>,
    pub seed: u64,
}

fn smooth_bump(p: Point, center: Point, radius: f64) -> f64 {
    let s = dist(p, center) / radius;
    if s >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        t * t * t
    }
}

/// Draw a center with |u| + radius within the half-box.
fn draw_center(rng: &mut ChaCha8Rng, grid: &Grid, radius: f64) -> Point {
    let budget = 0.5 * grid.half_width() - radius;
    let x: f64 = rng.random_range(-budget..budget);
    let y: f64 = if grid.dim() == 2 {
        rng.random_range(-budget..budget)
    } else {
        0.0
    };
    [x, y]
}

/// Build the default corpus on `grid` from `seed`.
pub fn default_corpus(grid: &Grid, seed: u64) -> Result<Corpus, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let mut functions = Vec::with_capacity(12);

    // Three single bumps at varied scales.
    for radius in [l / 32.0, l / 16.0, l / 8.0] {
        let center = draw_center(&mut rng, grid, radius);
        functions.push(CorpusFunction {
            descriptor: format!("bump(r={radius},u=({},{}))", center[0], center[1]),
            f: SampledFunction::from_fn(grid, |p| smooth_bump(p, center, radius))?,
        });
    }

    // Three bump pairs with opposite signs.
    for (r1, r2) in [
        (l / 24.0, l / 24.0),
        (l / 16.0, l / 12.0),
        (l / 10.0, l / 20.0),
    ] {
        let c1 = draw_center(&mut rng, grid, r1);
        let c2 = draw_center(&mut rng, grid, r2);
        functions.push(CorpusFunction {
            descriptor: format!("pair(r1={r1},r2={r2})"),
            f: SampledFunction::from_fn(grid, |p| smooth_bump(p, c1, r1) - smooth_bump(p, c2, r2))?,
        });
    }

    // Three ball indicators.
    for radius in [l / 20.0, l / 10.0, l / 6.0] {
        let center = draw_center(&mut rng, grid, radius);
        functions.push(CorpusFunction {
            descriptor: format!("indicator(r={radius})"),
            f: SampledFunction::from_fn(
                grid,
                |p| {
                    if dist(p, center) <= radius {
                        1.0
                    } else {
                        0.0
                    }
                },
            )?,
        });
    }

    // Three oscillating bumps.
    for (radius, waves) in [(l / 12.0, 2.0), (l / 8.0, 3.0), (l / 6.0, 5.0)] {
        let center = draw_center(&mut rng, grid, radius);
        functions.push(CorpusFunction {
            descriptor: format!("oscbump(r={radius},k={waves})"),
            f: SampledFunction::from_fn(grid, |p| {
                let envelope = smooth_bump(p, center, radius);
                let phase = waves * std::f64::consts::PI * (p[0] - center[0]) / radius;
                envelope * phase.cos()
            })?,
        });
    }

    // Power weights, all inside the A_1 range -n < a <= 0.
    let exponents: [f64; 3] = match grid.dim() {
        1 => [0.0, -0.25, -0.5],
        _ => [0.0, -0.5, -1.0],
    };
    let n = grid.dim() as f64;
    let weights = exponents
        .iter()
        .map(|&a| {
            Ok(CorpusWeight {
                descriptor: format!("pow({a})"),
                exponent: a,
                a1_valid: a > -n && a <= 0.0,
                weight: Weight::power(a, grid)?,
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;

    Ok(Corpus {
        functions,
        weights,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_seed_deterministic_and_supported_in_half_box() {
        for (dim, n) in [(1usize, 128usize), (2, 32)] {
            let g = Grid::new(dim, 1.0, n).unwrap();
            let a = default_corpus(&g, 42).unwrap();
            let b = default_corpus(&g, 42).unwrap();
            assert_eq!(a.functions.len(), 12);
            assert_eq!(a.weights.len(), 3);
            for (fa, fb) in a.functions.iter().zip(&b.functions) {
                assert_eq!(fa.f, fb.f);
                assert_eq!(fa.descriptor, fb.descriptor);
                // Support inside the half-box.
                for idx in 0..g.cell_count() {
                    if fa.f.value(idx) != 0.0 {
                        let p = g.center(idx);
                        assert!(dist(p, [0.0, 0.0]) <= 0.5 * g.half_width() + 1e-12);
                    }
                }
                // Not identically zero.
                assert!(fa.f.values().iter().any(|&v| v != 0.0), "{}", fa.descriptor);
            }
            for w in &a.weights {
                assert!(w.a1_valid, "{}", w.descriptor);
            }
            let other = default_corpus(&g, 43).unwrap();
            assert_ne!(a.functions[0].f, other.functions[0].f);
        }
    }
}
