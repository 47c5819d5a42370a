//! Numerical laboratory for intrinsic square functions on weighted Morrey
//! spaces: grids and midpoint quadrature, Muckenhoupt weight machinery,
//! a finite admissible kernel bank, the square-function operators
//! S_α / S_{α,β} / g_α / g*_{λ,α}, weighted (weak) Morrey norms, the
//! Calderón–Zygmund decomposition, and an experiment harness that
//! evaluates both sides of every inequality over seeded corpora.

pub mod czdecomp;
pub mod grid;
pub mod kernel;
pub mod lab;
pub mod spaces;
pub mod sqfn;
pub mod weights;

pub use czdecomp::{cz_decompose, cz_verify, BadPart, CzDecomposition, CzError, CzReport};
pub use grid::{
    dyadic_children, quad_integral, Ball, DyadicCube, Grid, GridError, Point, Region,
    SampledFunction,
};
pub use kernel::{
    admissibility_report, build_bank, AdmissibilityReport, BankDescriptor, Kernel, KernelBank,
    KernelError,
};
pub use lab::{
    adversarial_search, convergence_study, default_corpus, read_report, run_experiment,
    write_report, Axis, Corpus, ExperimentId, ExperimentReport, InstanceResult, LabConfig,
    LabContext, LabError, ReportFormat, SearchFamily,
};
pub use spaces::{
    local_distribution, lp_w_norm, morrey_norm, weak_level_sup, weak_morrey_norm, MorreyParams,
    SpacesError,
};
pub use sqfn::{
    a_alpha_at, g_alpha_field, g_star_field, g_star_shell_bound, s_alpha_field, AlphaField,
    ConeSpec, GStarSpec, SqfnError,
};
pub use weights::{
    hl_maximal, muckenhoupt_characteristic, reverse_holder_constant, weight_lemma_report,
    BallFamily, Weight, WeightError, WeightReport, WeightTag,
};

pub(crate) mod parallel {
    use rayon::prelude::*;

    /// Ordered parallel map: values are computed independently per index
    /// and collected in index order, so any later reduction runs in a
    /// fixed deterministic order regardless of the worker count.
    pub fn par_collect<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
        (0..n).into_par_iter().map(f).collect()
    }
}
