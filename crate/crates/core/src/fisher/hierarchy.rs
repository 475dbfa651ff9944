//! Optimized measurement classes and the six-value hierarchy report.
//!
//! Local and global values are closed-form (marginal and joint QFI). Product
//! and adaptive values have no known closed form, so they are maximized with
//! multi-start Nelder–Mead over the `exp(iH)` projective chart and reported
//! as certified lower bounds: every evaluated point is a physical
//! measurement, so the best value found never overshoots the class optimum.
//!
//! Structural warm candidates (marginal SLD bases, the computational basis,
//! and, inside the full report, the winning product stage reused as an
//! adaptive first stage) are folded into each maximum. They guarantee the
//! reported values respect the chain inequalities ordering the classes, up
//! to tolerance, independent of optimizer luck.

use crate::matcore::{BipartiteDims, Party};
use crate::optim::{multi_start_max, MultiStartOptions, NelderMeadOptions};
use crate::povm::{
    product_povm, projective_from_params, AdaptiveDirection, Povm, PovmClass, ProjectiveParam,
};
use crate::states::ParameterizedFamily;
use crate::{Error, Result};

use super::{
    adaptive_fi_given_first_point, classical_fi, sld, sld_basis_measurement, FamilyPoint,
    NumericOptions,
};

/// Slack for chain-inequality verdicts between reported values.
pub const CHAIN_SLACK: f64 = 1e-6;

/// Multi-start search controls for the optimized classes.
#[derive(Clone, Copy, Debug)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_evals: usize,
    pub ftol: f64,
    /// Random starts draw each parameter uniformly from this half-range.
    pub init_range: f64,
    pub simplex_step: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            starts: 16,
            seed: 0,
            max_evals: 2000,
            ftol: 1e-9,
            init_range: std::f64::consts::PI,
            simplex_step: 0.5,
        }
    }
}

impl OptimizerOptions {
    fn multi_start(&self) -> MultiStartOptions {
        MultiStartOptions {
            starts: self.starts,
            seed: self.seed,
            init_range: self.init_range,
            nm: NelderMeadOptions {
                max_evals: self.max_evals,
                ftol: self.ftol,
                simplex_step: self.simplex_step,
            },
        }
    }
}

/// All knobs of the hierarchy computation.
#[derive(Clone, Copy, Debug, Default)]
pub struct HierarchyOptions {
    pub numeric: NumericOptions,
    pub optimizer: OptimizerOptions,
}

/// How a reported value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodTag {
    /// Exact up to the eigensolver: marginal or joint QFI via the SLD.
    ClosedForm,
    /// Best value found by the measurement search: a lower bound.
    OptimizedLowerBound,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::ClosedForm => "closed_form",
            MethodTag::OptimizedLowerBound => "optimized_lower_bound",
        }
    }
}

/// Search record for one optimized class value.
#[derive(Clone, Debug)]
pub struct OptimizerDiagnostics {
    pub starts: usize,
    pub total_evals: usize,
    /// Winning start index, when the search itself won.
    pub best_start: Option<usize>,
    /// Winning chart parameters, when the search itself won.
    pub best_params: Option<Vec<f64>>,
    /// Label of the warm candidate, when a candidate beat the search.
    pub candidate: Option<String>,
    /// Convergence flag of the winning simplex (true for candidates, which
    /// are evaluated exactly).
    pub converged: bool,
}

/// One class value with its provenance.
#[derive(Clone, Debug)]
pub struct ClassValue {
    pub class: PovmClass,
    pub value: f64,
    pub method: MethodTag,
    pub diagnostics: Option<OptimizerDiagnostics>,
}

/// Externally supplied warm candidate for [`optimize_class_seeded`].
#[derive(Clone, Debug)]
pub enum ClassCandidate {
    /// A full measurement on the joint space; used by the product class.
    Joint { label: String, povm: Povm },
    /// A first-stage measurement; used by the adaptive classes.
    First { label: String, povm: Povm },
}

/// One link of the chain `local ≤ product ≤ adaptive ≤ global`.
#[derive(Clone, Debug)]
pub struct ChainCheck {
    pub lhs_name: &'static str,
    pub rhs_name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl ChainCheck {
    fn new(lhs_name: &'static str, lhs: f64, rhs_name: &'static str, rhs: f64) -> Self {
        ChainCheck {
            lhs_name,
            rhs_name,
            lhs,
            rhs,
            slack: CHAIN_SLACK,
            pass: lhs <= rhs + CHAIN_SLACK,
        }
    }
}

/// One of the six values in a [`HierarchyReport`].
#[derive(Clone, Debug)]
pub struct HierarchyEntry {
    pub value: f64,
    pub method: MethodTag,
    pub diagnostics: Option<OptimizerDiagnostics>,
}

impl From<ClassValue> for HierarchyEntry {
    fn from(cv: ClassValue) -> Self {
        HierarchyEntry {
            value: cv.value,
            method: cv.method,
            diagnostics: cv.diagnostics,
        }
    }
}

/// The full measurement-class hierarchy of one family at one parameter
/// value. Optimized entries carry the `_lb` caveat in serialized form: they
/// are lower bounds, exact only up to the search.
#[derive(Clone, Debug)]
pub struct HierarchyReport {
    pub theta: f64,
    pub fi_local_a: HierarchyEntry,
    pub fi_local_b: HierarchyEntry,
    pub fi_product: HierarchyEntry,
    pub fi_adaptive_ab: HierarchyEntry,
    pub fi_adaptive_ba: HierarchyEntry,
    pub fi_global: HierarchyEntry,
    pub chain: Vec<ChainCheck>,
}

impl HierarchyReport {
    /// The six values in canonical order:
    /// local_a, local_b, product, adaptive_ab, adaptive_ba, global.
    pub fn values(&self) -> [f64; 6] {
        [
            self.fi_local_a.value,
            self.fi_local_b.value,
            self.fi_product.value,
            self.fi_adaptive_ab.value,
            self.fi_adaptive_ba.value,
            self.fi_global.value,
        ]
    }

    pub fn chain_ok(&self) -> bool {
        self.chain.iter().all(|c| c.pass)
    }

    /// Global value strictly above the sum of the locals: entanglement-like
    /// advantage of joint measurement over separate ones.
    pub fn is_superadditive(&self, margin: f64) -> bool {
        self.fi_global.value > self.fi_local_a.value + self.fi_local_b.value + margin
    }

    /// Locals sum to strictly more than the global value: overlapping
    /// information that cannot be extracted twice.
    pub fn is_subadditive(&self, margin: f64) -> bool {
        self.fi_global.value + margin < self.fi_local_a.value + self.fi_local_b.value
    }
}

fn require_dims(f: &ParameterizedFamily, dims: BipartiteDims) -> Result<()> {
    if f.dim() != dims.total() {
        return Err(Error::DimMismatch(format!(
            "family dimension {} does not match dims ({}, {})",
            f.dim(),
            dims.dim_a,
            dims.dim_b
        )));
    }
    Ok(())
}

/// Errors that mean "this measurement is numerically unusable here", not
/// "the computation is broken": skipped during search and candidate folding.
fn is_soft_error(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularOutcome { .. }
            | Error::InvalidDensity(_)
            | Error::NoConvergence { .. }
            | Error::NotHermitian { .. }
            | Error::NotTraceless(_)
    )
}

struct SearchOutcome {
    value: f64,
    diagnostics: OptimizerDiagnostics,
    /// Winning product parts (product class only), for reuse as adaptive
    /// first stages.
    product_parts: Option<(Povm, Povm)>,
}

/// Maximizes `objective` over the chart, folds in candidates, and picks the
/// winner deterministically (strict improvement, candidates after the
/// search, earlier candidates win ties).
fn run_search(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    param_dim: usize,
    candidates: &[(String, f64)],
    opts: &OptimizerOptions,
) -> (f64, OptimizerDiagnostics) {
    let report = multi_start_max(objective, param_dim, &opts.multi_start());
    let mut value = report.best_value;
    let mut diagnostics = OptimizerDiagnostics {
        starts: report.starts,
        total_evals: report.total_evals,
        best_start: Some(report.best_start),
        best_params: Some(report.best_x.clone()),
        candidate: None,
        converged: report.best_converged,
    };
    for (label, cand_value) in candidates {
        if *cand_value > value {
            value = *cand_value;
            diagnostics.best_start = None;
            diagnostics.best_params = None;
            diagnostics.candidate = Some(label.clone());
            diagnostics.converged = true;
        }
    }
    (value, diagnostics)
}

fn closed_form_entry(point: &FamilyPoint, class: PovmClass, numeric: &NumericOptions) -> Result<ClassValue> {
    let value = match class {
        PovmClass::LocalA => {
            let r = point.reduced(Party::A)?;
            sld(&r.rho, &r.drho, numeric.sld_tol)?.qfi
        }
        PovmClass::LocalB => {
            let r = point.reduced(Party::B)?;
            sld(&r.rho, &r.drho, numeric.sld_tol)?.qfi
        }
        PovmClass::Global => sld(&point.rho, &point.drho, numeric.sld_tol)?.qfi,
        _ => unreachable!("not a closed-form class"),
    };
    Ok(ClassValue {
        class,
        value,
        method: MethodTag::ClosedForm,
        diagnostics: None,
    })
}

/// Marginal SLD eigenbasis of one party, as a warm-start measurement.
/// Falls back to the computational basis when the marginal is insensitive.
fn marginal_sld_basis(point: &FamilyPoint, party: Party, numeric: &NumericOptions) -> Result<Povm> {
    let r = point.reduced(party)?;
    let s = sld(&r.rho, &r.drho, numeric.sld_tol)?;
    sld_basis_measurement(&s)
}

fn product_search(
    point: &FamilyPoint,
    dims: BipartiteDims,
    opts: &HierarchyOptions,
    extra: &[ClassCandidate],
) -> Result<SearchOutcome> {
    let (da, db) = (dims.dim_a, dims.dim_b);
    let (na, nb) = (ProjectiveParam::param_count(da), ProjectiveParam::param_count(db));
    let numeric = opts.numeric;

    let value_of = |povm: &Povm| -> Result<f64> {
        classical_fi(&point.rho, &point.drho, povm, numeric.p_tol)
    };

    // Structural candidates: marginal SLD bases and computational bases in
    // all four pairings. These realize the local values inside the product
    // class, pinning the lower end of the chain.
    let sld_a = marginal_sld_basis(point, Party::A, &numeric)?;
    let sld_b = marginal_sld_basis(point, Party::B, &numeric)?;
    let comp_a = Povm::computational(da);
    let comp_b = Povm::computational(db);
    let mut named: Vec<(String, Povm, Povm)> = vec![
        ("sld_a x sld_b".into(), sld_a.clone(), sld_b.clone()),
        ("sld_a x computational_b".into(), sld_a, comp_b.clone()),
        ("computational_a x sld_b".into(), comp_a.clone(), sld_b),
        ("computational_a x computational_b".into(), comp_a, comp_b),
    ];
    let mut candidates: Vec<(String, f64)> = Vec::new();
    let mut parts: Vec<(Povm, Povm)> = Vec::new();
    for (label, a, b) in named.drain(..) {
        match value_of(&product_povm(&a, &b)) {
            Ok(v) => {
                candidates.push((label, v));
                parts.push((a, b));
            }
            Err(e) if is_soft_error(&e) => {}
            Err(e) => return Err(e),
        }
    }
    for cand in extra {
        if let ClassCandidate::Joint { label, povm } = cand {
            match value_of(povm) {
                Ok(v) => candidates.push((label.clone(), v)),
                Err(e) if is_soft_error(&e) => {}
                Err(e) => return Err(e),
            }
        }
    }

    let mut objective = |x: &[f64]| -> f64 {
        let pa = ProjectiveParam::new(da, x[..na].to_vec()).expect("split sizes fixed");
        let pb = ProjectiveParam::new(db, x[na..].to_vec()).expect("split sizes fixed");
        let povm = product_povm(&projective_from_params(&pa), &projective_from_params(&pb));
        value_of(&povm).unwrap_or(f64::NEG_INFINITY)
    };
    let (value, diagnostics) = run_search(&mut objective, na + nb, &candidates, &opts.optimizer);

    // Winning measurement parts for downstream warm starts.
    let product_parts = if let Some(params) = &diagnostics.best_params {
        let pa = ProjectiveParam::new(da, params[..na].to_vec()).expect("split sizes fixed");
        let pb = ProjectiveParam::new(db, params[na..].to_vec()).expect("split sizes fixed");
        Some((
            projective_from_params(&pa),
            projective_from_params(&pb),
        ))
    } else {
        diagnostics
            .candidate
            .as_ref()
            .and_then(|label| {
                candidates
                    .iter()
                    .position(|(l, _)| l == label)
                    .filter(|&i| i < parts.len())
                    .map(|i| parts[i].clone())
            })
    };

    Ok(SearchOutcome {
        value,
        diagnostics,
        product_parts,
    })
}

fn adaptive_search(
    point: &FamilyPoint,
    dims: BipartiteDims,
    direction: AdaptiveDirection,
    opts: &HierarchyOptions,
    extra: &[ClassCandidate],
) -> Result<SearchOutcome> {
    let measured = direction.first_party();
    let dm = dims.dim_of(measured);
    let n = ProjectiveParam::param_count(dm);
    let numeric = opts.numeric;

    let value_of = |first: &Povm| -> Result<f64> {
        adaptive_fi_given_first_point(point, first, dims, direction, &numeric)
    };

    let mut candidates: Vec<(String, f64)> = Vec::new();
    let try_candidate = |label: String, povm: &Povm, out: &mut Vec<(String, f64)>| -> Result<()> {
        match value_of(povm) {
            Ok(v) => {
                out.push((label, v));
                Ok(())
            }
            Err(e) if is_soft_error(&e) => Ok(()),
            Err(e) => Err(e),
        }
    };
    try_candidate(
        "sld_first".into(),
        &marginal_sld_basis(point, measured, &numeric)?,
        &mut candidates,
    )?;
    try_candidate("computational_first".into(), &Povm::computational(dm), &mut candidates)?;
    for cand in extra {
        if let ClassCandidate::First { label, povm } = cand {
            try_candidate(label.clone(), povm, &mut candidates)?;
        }
    }

    let mut objective = |x: &[f64]| -> f64 {
        let p = ProjectiveParam::new(dm, x.to_vec()).expect("length fixed by search dim");
        value_of(&projective_from_params(&p)).unwrap_or(f64::NEG_INFINITY)
    };
    let (value, diagnostics) = run_search(&mut objective, n, &candidates, &opts.optimizer);

    Ok(SearchOutcome {
        value,
        diagnostics,
        product_parts: None,
    })
}

fn finite_or_singular(outcome: SearchOutcome, class: PovmClass) -> Result<ClassValue> {
    if !outcome.value.is_finite() {
        // Every evaluated measurement was rejected; surface the family as
        // singular for this class rather than reporting -∞.
        return Err(Error::SingularOutcome {
            outcome: 0,
            p: 0.0,
            dp: f64::INFINITY,
            p_tol: 0.0,
        });
    }
    Ok(ClassValue {
        class,
        value: outcome.value,
        method: MethodTag::OptimizedLowerBound,
        diagnostics: Some(outcome.diagnostics),
    })
}

/// Computes one class value: closed form for local and global, a multi-start
/// measurement search (with structural warm candidates) for the rest.
pub fn optimize_class(
    f: &ParameterizedFamily,
    theta: f64,
    dims: BipartiteDims,
    class: PovmClass,
    opts: &HierarchyOptions,
) -> Result<ClassValue> {
    optimize_class_seeded(f, theta, dims, class, opts, &[])
}

/// [`optimize_class`] with externally supplied warm candidates. Candidates
/// of the wrong shape for the class are ignored.
pub fn optimize_class_seeded(
    f: &ParameterizedFamily,
    theta: f64,
    dims: BipartiteDims,
    class: PovmClass,
    opts: &HierarchyOptions,
    extra: &[ClassCandidate],
) -> Result<ClassValue> {
    require_dims(f, dims)?;
    let point = FamilyPoint::new(f, theta, &opts.numeric)?;
    let point = FamilyPoint {
        rho: crate::states::DensityMatrix::new(point.rho.mat().clone(), Some(dims))?,
        drho: point.drho,
    };
    match class {
        PovmClass::LocalA | PovmClass::LocalB | PovmClass::Global => {
            closed_form_entry(&point, class, &opts.numeric)
        }
        PovmClass::Product => {
            finite_or_singular(product_search(&point, dims, opts, extra)?, class)
        }
        PovmClass::AdaptiveAToB => finite_or_singular(
            adaptive_search(&point, dims, AdaptiveDirection::AToB, opts, extra)?,
            class,
        ),
        PovmClass::AdaptiveBToA => finite_or_singular(
            adaptive_search(&point, dims, AdaptiveDirection::BToA, opts, extra)?,
            class,
        ),
    }
}

/// Computes all six class values at θ and checks the chain inequalities.
///
/// The adaptive searches are additionally seeded with the winning product
/// stages, so `product ≤ adaptive` holds up to numerics by construction
/// (an adaptive strategy may always ignore the message and measure the
/// product's second stage; the conditional QFI only improves on it).
pub fn hierarchy_report(
    f: &ParameterizedFamily,
    theta: f64,
    dims: BipartiteDims,
    opts: &HierarchyOptions,
) -> Result<HierarchyReport> {
    require_dims(f, dims)?;
    let base = FamilyPoint::new(f, theta, &opts.numeric)?;
    let point = FamilyPoint {
        rho: crate::states::DensityMatrix::new(base.rho.mat().clone(), Some(dims))?,
        drho: base.drho,
    };
    let numeric = opts.numeric;

    let local_a = closed_form_entry(&point, PovmClass::LocalA, &numeric)?;
    let local_b = closed_form_entry(&point, PovmClass::LocalB, &numeric)?;
    let global = closed_form_entry(&point, PovmClass::Global, &numeric)?;

    let product = product_search(&point, dims, opts, &[])?;
    let mut ab_extra = Vec::new();
    let mut ba_extra = Vec::new();
    if let Some((pa, pb)) = &product.product_parts {
        ab_extra.push(ClassCandidate::First {
            label: "product_first".into(),
            povm: pa.clone(),
        });
        ba_extra.push(ClassCandidate::First {
            label: "product_first".into(),
            povm: pb.clone(),
        });
    }
    let adaptive_ab = adaptive_search(&point, dims, AdaptiveDirection::AToB, opts, &ab_extra)?;
    let adaptive_ba = adaptive_search(&point, dims, AdaptiveDirection::BToA, opts, &ba_extra)?;

    let product = finite_or_singular(product, PovmClass::Product)?;
    let adaptive_ab = finite_or_singular(adaptive_ab, PovmClass::AdaptiveAToB)?;
    let adaptive_ba = finite_or_singular(adaptive_ba, PovmClass::AdaptiveBToA)?;

    let chain = vec![
        ChainCheck::new("fi_local_a", local_a.value, "fi_product_lb", product.value),
        ChainCheck::new("fi_local_b", local_b.value, "fi_product_lb", product.value),
        ChainCheck::new("fi_product_lb", product.value, "fi_adaptive_ab_lb", adaptive_ab.value),
        ChainCheck::new("fi_product_lb", product.value, "fi_adaptive_ba_lb", adaptive_ba.value),
        ChainCheck::new("fi_adaptive_ab_lb", adaptive_ab.value, "fi_global", global.value),
        ChainCheck::new("fi_adaptive_ba_lb", adaptive_ba.value, "fi_global", global.value),
    ];

    Ok(HierarchyReport {
        theta,
        fi_local_a: local_a.into(),
        fi_local_b: local_b.into(),
        fi_product: product.into(),
        fi_adaptive_ab: adaptive_ab.into(),
        fi_adaptive_ba: adaptive_ba.into(),
        fi_global: global.into(),
        chain,
    })
}
