//! Experiment harness: evaluate both sides of every inequality over a
//! seeded corpus, search adversarially for worst ratios, study
//! discretization drift, and emit reproducible CSV/JSON reports.

mod converge;
mod corpus;
mod experiments;
mod report;
mod search;

pub use converge::{convergence_study, Axis, ConvergencePoint, ConvergenceSection};
pub use corpus::{default_corpus, Corpus, CorpusFunction, CorpusWeight};
pub use experiments::run_experiment;
pub use report::{read_report, write_report, ReportFormat};
pub use search::{adversarial_search, SearchFamily};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::czdecomp::CzError;
use crate::grid::{Grid, GridError};
use crate::kernel::{build_bank, BankDescriptor, KernelBank, KernelError};
use crate::spaces::{MorreyParams, SpacesError};
use crate::sqfn::{ConeSpec, GStarSpec, SqfnError};
use crate::weights::{BallFamily, WeightError};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("experiment {experiment} does not support {operation}")]
    Unsupported {
        experiment: String,
        operation: &'static str,
    },
    #[error("weight {weight} is not admissible for experiment {experiment}")]
    WeightNotAdmissible { experiment: String, weight: String },
    #[error("corpus grid does not match the configured grid")]
    CorpusGridMismatch,
    #[error("invalid config value for {key}: {message}")]
    Config { key: String, message: String },
    #[error("axis values must be strictly monotone")]
    AxisNotMonotone,
    #[error("need at least 2 axis values, got {0}")]
    AxisTooShort(usize),
    #[error("search budget must be at least 1")]
    BudgetZero,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sqfn(#[from] SqfnError),
    #[error(transparent)]
    Spaces(#[from] SpacesError),
    #[error(transparent)]
    Cz(#[from] CzError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// The experiments the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    /// ||S_α f||_{WL^{1,κ}(w)} against ||f||_{L^{1,κ}(w)}.
    T11,
    /// ||g*_{λ,α} f||_{WL^{1,κ}(w)} against ||f||_{L^{1,κ}(w)}.
    T12,
    /// ||g_α f||_{WL^{1,κ}(w)} against ||f||_{L^{1,κ}(w)}.
    C13,
    /// Weak (1,1) for S_α plus the maximal-function control Mw <= C w.
    T31,
    /// Weak (1,1) for g*_{λ,α}.
    T42,
    /// ||S_{α,2^j} f||_{L²_w} against 2^{jn/2} ||S_α f||_{L²_w}, j = 1..4.
    L41,
    /// Pointwise shell bound on g*.
    Ineq6,
    /// Far-field decay: max_B S_α(f) against the dyadic-average sum, for
    /// f supported outside 2B.
    Tail,
    /// Calderón–Zygmund properties on seeded (f, σ) pairs.
    Cz,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::T11,
        ExperimentId::T12,
        ExperimentId::C13,
        ExperimentId::T31,
        ExperimentId::T42,
        ExperimentId::L41,
        ExperimentId::Ineq6,
        ExperimentId::Tail,
        ExperimentId::Cz,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::T11 => "T1.1",
            ExperimentId::T12 => "T1.2",
            ExperimentId::C13 => "C1.3",
            ExperimentId::T31 => "T3.1",
            ExperimentId::T42 => "T4.2",
            ExperimentId::L41 => "L4.1",
            ExperimentId::Ineq6 => "INEQ6",
            ExperimentId::Tail => "TAIL",
            ExperimentId::Cz => "CZ",
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        ExperimentId::ALL
            .iter()
            .copied()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LabError::UnknownExperiment(s.to_string()))
    }
}

/// Every free parameter of the lab in one serializable block. Zero means
/// "derive from the grid" for the fields documented as auto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub grid_dim: usize,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub bank_alpha: f64,
    pub bank_size: usize,
    pub bank_seed: u64,
    /// 0 => 2h.
    pub cone_t_min: f64,
    /// 0 => L/2.
    pub cone_t_max: f64,
    pub cone_scales_per_octave: u32,
    pub cone_apertures: Vec<f64>,
    pub morrey_p: f64,
    pub morrey_kappa: f64,
    pub gstar_lambda: f64,
    /// 0 => enough shells to cover the box.
    pub gstar_shells: usize,
    /// 0 => N/16.
    pub family_stride: usize,
    pub family_k_min: u32,
    /// 0 => radii up to L/2.
    pub family_k_max: u32,
    pub corpus_seed: u64,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            grid_dim: 1,
            grid_half_width: 1.0,
            grid_points: 256,
            bank_alpha: 1.0,
            bank_size: 6,
            bank_seed: 7,
            cone_t_min: 0.0,
            cone_t_max: 0.0,
            cone_scales_per_octave: 4,
            cone_apertures: vec![1.0, 2.0],
            morrey_p: 1.0,
            morrey_kappa: 0.5,
            gstar_lambda: 6.0,
            gstar_shells: 0,
            family_stride: 0,
            family_k_min: 0,
            family_k_max: 0,
            corpus_seed: 42,
        }
    }
}

impl LabConfig {
    /// Check every invariant, naming the offending dotted key.
    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |key: &str, message: String| {
            Err(LabError::Config {
                key: key.to_string(),
                message,
            })
        };
        if self.grid_dim != 1 && self.grid_dim != 2 {
            return bad("grid.dim", format!("must be 1 or 2, got {}", self.grid_dim));
        }
        if !(self.grid_half_width.is_finite() && self.grid_half_width > 0.0) {
            return bad(
                "grid.half_width",
                format!("must be positive, got {}", self.grid_half_width),
            );
        }
        if self.grid_points < 8 || !self.grid_points.is_power_of_two() {
            return bad(
                "grid.points",
                format!("must be a power of two >= 8, got {}", self.grid_points),
            );
        }
        if !(self.bank_alpha > 0.0 && self.bank_alpha <= 1.0) {
            return bad(
                "bank.alpha",
                format!("must lie in (0, 1], got {}", self.bank_alpha),
            );
        }
        if self.bank_size == 0 {
            return bad("bank.size", "must be at least 1".into());
        }
        if self.cone_scales_per_octave < 2 {
            return bad(
                "cone.scales_per_octave",
                format!("must be >= 2, got {}", self.cone_scales_per_octave),
            );
        }
        if self.cone_t_min < 0.0 || self.cone_t_max < 0.0 {
            return bad("cone.t_min", "scale bounds must be nonnegative".into());
        }
        if self.cone_t_min > 0.0 && self.cone_t_max > 0.0 && self.cone_t_min >= self.cone_t_max {
            return bad(
                "cone.t_min",
                format!(
                    "must be below cone.t_max, got [{}, {}]",
                    self.cone_t_min, self.cone_t_max
                ),
            );
        }
        if self.cone_apertures.is_empty() || self.cone_apertures.iter().any(|&b| b < 1.0) {
            return bad("cone.apertures", "every aperture must be >= 1".into());
        }
        if !(self.morrey_p.is_finite() && self.morrey_p >= 1.0) {
            return bad("morrey.p", format!("must be >= 1, got {}", self.morrey_p));
        }
        if !(self.morrey_kappa > 0.0 && self.morrey_kappa < 1.0) {
            return bad(
                "morrey.kappa",
                format!("must lie in (0, 1), got {}", self.morrey_kappa),
            );
        }
        if !(self.gstar_lambda.is_finite() && self.gstar_lambda > 1.0) {
            return bad(
                "gstar.lambda",
                format!("must be > 1, got {}", self.gstar_lambda),
            );
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, LabError> {
        self.validate()?;
        Ok(Grid::new(
            self.grid_dim,
            self.grid_half_width,
            self.grid_points,
        )?)
    }

    pub fn cone(&self, grid: &Grid) -> Result<ConeSpec, LabError> {
        let t_min = if self.cone_t_min > 0.0 {
            self.cone_t_min
        } else {
            2.0 * grid.spacing()
        };
        let t_max = if self.cone_t_max > 0.0 {
            self.cone_t_max
        } else {
            0.5 * grid.half_width()
        };
        Ok(ConeSpec::new(
            1.0,
            t_min,
            t_max,
            self.cone_scales_per_octave,
        )?)
    }

    pub fn bank(&self, grid: &Grid) -> Result<KernelBank, LabError> {
        Ok(build_bank(
            self.bank_alpha,
            self.bank_size,
            self.bank_seed,
            grid,
        )?)
    }

    pub fn family(&self, grid: &Grid) -> Result<BallFamily, LabError> {
        let stride = if self.family_stride > 0 {
            self.family_stride
        } else {
            grid.points_per_axis() / 16
        };
        let k_max = if self.family_k_max > 0 {
            self.family_k_max
        } else {
            (grid.points_per_axis() / 4).max(2).ilog2()
        };
        Ok(BallFamily::corner_lattice(
            grid,
            stride,
            self.family_k_min,
            k_max,
        )?)
    }

    pub fn gstar(&self, grid: &Grid, cone: &ConeSpec) -> Result<GStarSpec, LabError> {
        let shells = if self.gstar_shells > 0 {
            self.gstar_shells
        } else {
            GStarSpec::shells_covering(grid, cone)
        };
        Ok(GStarSpec::new(self.gstar_lambda, shells, *cone)?)
    }

    pub fn morrey(&self) -> Result<MorreyParams, LabError> {
        Ok(MorreyParams::new(self.morrey_p, self.morrey_kappa)?)
    }
}

/// Everything an experiment needs, realized once from a config.
pub struct LabContext {
    pub grid: Grid,
    pub bank: KernelBank,
    pub cone: ConeSpec,
    pub gstar: GStarSpec,
    pub morrey: MorreyParams,
    pub family: BallFamily,
}

impl LabContext {
    pub fn build(cfg: &LabConfig) -> Result<Self, LabError> {
        let grid = cfg.grid()?;
        let cone = cfg.cone(&grid)?;
        Ok(LabContext {
            grid,
            bank: cfg.bank(&grid)?,
            gstar: cfg.gstar(&grid, &cone)?,
            cone,
            morrey: cfg.morrey()?,
            family: cfg.family(&grid)?,
        })
    }
}

/// One (instance, weight) row of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: String,
    pub weight: String,
    pub lhs: f64,
    pub rhs: f64,
    /// None when the row was skipped (zero RHS).
    pub ratio: Option<f64>,
    pub flags: Vec<String>,
}

impl InstanceResult {
    pub fn new(instance: String, weight: String, lhs: f64, rhs: f64) -> Self {
        let ratio = (rhs != 0.0).then(|| lhs / rhs);
        let flags = if ratio.is_none() {
            vec!["skipped:rhs_zero".to_string()]
        } else {
            Vec::new()
        };
        InstanceResult {
            instance,
            weight,
            lhs,
            rhs,
            ratio,
            flags,
        }
    }

    pub fn with_flag(mut self, flag: String) -> Self {
        self.flags.push(flag);
        self
    }
}

/// Complete reproduction recipe for a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: LabConfig,
    pub bank: BankDescriptor,
    pub family: String,
    pub ladder: Vec<f64>,
    pub lambda_threshold: f64,
    pub shells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub provenance: Provenance,
    pub instances: Vec<InstanceResult>,
    pub max_ratio: Option<f64>,
    pub skipped: usize,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub search_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub convergence: Option<ConvergenceSection>,
}

impl ExperimentReport {
    pub(crate) fn assemble(
        id: ExperimentId,
        ctx: &LabContext,
        cfg: &LabConfig,
        instances: Vec<InstanceResult>,
        violations: usize,
    ) -> ExperimentReport {
        let skipped = instances.iter().filter(|r| r.ratio.is_none()).count();
        let max_ratio = instances
            .iter()
            .filter_map(|r| r.ratio)
            .fold(None, |acc: Option<f64>, r| {
                Some(acc.map_or(r, |a| a.max(r)))
            });
        ExperimentReport {
            experiment: id.name().to_string(),
            provenance: Provenance {
                config: cfg.clone(),
                bank: ctx.bank.descriptor(),
                family: ctx.family.descriptor.clone(),
                ladder: ctx.cone.ladder(),
                lambda_threshold: GStarSpec::lambda_threshold(ctx.grid.dim(), ctx.bank.alpha()),
                shells: ctx.gstar.shells,
            },
            instances,
            max_ratio,
            skipped,
            violations,
            search_trace: None,
            convergence: None,
        }
    }
}
