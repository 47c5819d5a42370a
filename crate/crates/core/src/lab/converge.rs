//! Discretization-drift study: rerun one experiment along one axis
//! (grid resolution, bank size, ladder density, t-range, shell count,
//! family stride) and report the max-ratio sequence with its relative
//! drift between consecutive levels.

use serde::{Deserialize, Serialize};

use super::{
    default_corpus, run_experiment, ExperimentId, ExperimentReport, LabConfig, LabContext, LabError,
};

/// The tunable axes. `TRange` counts octaves below t_max; enlarging it
/// widens the ladder downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    GridN,
    BankSize,
    ScalesPerOctave,
    TRange,
    Shells,
    FamilyStride,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::GridN => "grid_n",
            Axis::BankSize => "bank_size",
            Axis::ScalesPerOctave => "scales_per_octave",
            Axis::TRange => "t_range",
            Axis::Shells => "shells",
            Axis::FamilyStride => "family_stride",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        for axis in [
            Axis::GridN,
            Axis::BankSize,
            Axis::ScalesPerOctave,
            Axis::TRange,
            Axis::Shells,
            Axis::FamilyStride,
        ] {
            if axis.name().eq_ignore_ascii_case(s) {
                return Ok(axis);
            }
        }
        Err(LabError::Config {
            key: "converge.axis".to_string(),
            message: format!("unknown axis {s:?}"),
        })
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Max-ratio sequence along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSection {
    pub axis: String,
    pub points: Vec<ConvergencePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub value: f64,
    pub max_ratio: f64,
    pub drift: Option<f64>,
}

fn apply(axis: Axis, value: usize, base: &LabConfig) -> Result<LabConfig, LabError> {
    let mut cfg = base.clone();
    match axis {
        Axis::GridN => cfg.grid_points = value,
        Axis::BankSize => cfg.bank_size = value,
        Axis::ScalesPerOctave => cfg.cone_scales_per_octave = value as u32,
        Axis::TRange => {
            // value = octaves below t_max.
            let grid = base.grid()?;
            let t_max = if base.cone_t_max > 0.0 {
                base.cone_t_max
            } else {
                0.5 * grid.half_width()
            };
            cfg.cone_t_max = t_max;
            cfg.cone_t_min = t_max / 2f64.powi(value as i32);
        }
        Axis::Shells => cfg.gstar_shells = value,
        Axis::FamilyStride => cfg.family_stride = value,
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run `id` at every axis value (strictly monotone, at least two) and
/// collect the max-ratio drift sequence.
pub fn convergence_study(
    id: ExperimentId,
    cfg: &LabConfig,
    axis: Axis,
    values: &[usize],
) -> Result<ExperimentReport, LabError> {
    if values.len() < 2 {
        return Err(LabError::AxisTooShort(values.len()));
    }
    let increasing = values.windows(2).all(|p| p[0] < p[1]);
    let decreasing = values.windows(2).all(|p| p[0] > p[1]);
    if !increasing && !decreasing {
        return Err(LabError::AxisNotMonotone);
    }

    let mut points = Vec::with_capacity(values.len());
    let mut previous: Option<f64> = None;
    for &value in values {
        let level_cfg = apply(axis, value, cfg)?;
        let grid = level_cfg.grid()?;
        let corpus = default_corpus(&grid, level_cfg.corpus_seed)?;
        let report = run_experiment(id, &corpus, &level_cfg)?;
        let max_ratio = report.max_ratio.unwrap_or(0.0);
        let drift = previous.map(|p| {
            if p == 0.0 {
                0.0
            } else {
                (max_ratio - p).abs() / p
            }
        });
        points.push(ConvergencePoint {
            value: value as f64,
            max_ratio,
            drift,
        });
        previous = Some(max_ratio);
    }

    let ctx = LabContext::build(cfg)?;
    let instances = points
        .iter()
        .map(|pt| {
            let mut row = super::InstanceResult::new(
                format!("{}={}", axis.name(), pt.value),
                String::new(),
                pt.max_ratio,
                1.0,
            );
            if let Some(d) = pt.drift {
                row = row.with_flag(format!("drift:{d}"));
            }
            row
        })
        .collect();
    let mut report = ExperimentReport::assemble(id, &ctx, cfg, instances, 0);
    report.convergence = Some(ConvergenceSection {
        axis: axis.name().to_string(),
        points,
    });
    Ok(report)
}
