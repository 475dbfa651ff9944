//! Fisher information: quantum, classical, and measurement-conditioned.
//!
//! The quantum Fisher information (QFI) of a family `ρ_θ` is `tr(ρ_θ L_θ²)`
//! where the symmetric logarithmic derivative `L_θ` solves
//! `∂_θ ρ_θ = (L_θ ρ_θ + ρ_θ L_θ) / 2`. It upper-bounds the classical Fisher
//! information `Σ_i (∂_θ p_i)² / p_i` of every measurement's outcome
//! distribution, and the eigenbasis of `L_θ` attains it.
//!
//! For bipartite states this module also builds the classical-quantum state
//! left after one party measures (outcome probabilities paired with
//! conditional states of the other party) and evaluates two-stage adaptive
//! strategies both directly (as one joint measurement) and through the
//! decomposition `F(p) + Σ_i p_i F_i`, whose agreement is a strong internal
//! consistency check.
//!
//! The optimized measurement classes live in the re-exported submodule; see
//! [`hierarchy_report`].

use num_complex::Complex64;

use crate::matcore::{self, BipartiteDims, CMatrix, Party};
use crate::povm::{AdaptiveDirection, Povm};
use crate::states::{DensityMatrix, ParameterizedFamily};
use crate::{Error, Result};

mod hierarchy;
pub use hierarchy::*;

/// Eigenvalue-pair sums at or below this are outside the support and are
/// excluded from SLD and QFI sums.
pub const DEFAULT_SLD_TOL: f64 = 1e-10;

/// Outcome probabilities below this are treated as vanishing.
pub const DEFAULT_P_TOL: f64 = 1e-12;

/// Tolerance on Hermiticity / tracelessness of derivative inputs.
pub const DERIVATIVE_TOL: f64 = 1e-7;

/// Shared numeric knobs: finite-difference step for families without a
/// closed-form derivative, SLD support cutoff, and probability floor.
#[derive(Clone, Copy, Debug)]
pub struct NumericOptions {
    pub fd_step: f64,
    pub sld_tol: f64,
    pub p_tol: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            fd_step: crate::states::DEFAULT_FD_STEP,
            sld_tol: DEFAULT_SLD_TOL,
            p_tol: DEFAULT_P_TOL,
        }
    }
}

/// A family frozen at one parameter value: the state and its θ-derivative.
/// Everything downstream is linear in these two matrices, so optimizer
/// objectives evaluate against one snapshot instead of re-evaluating the
/// family per iteration.
#[derive(Clone, Debug)]
pub struct FamilyPoint {
    pub rho: DensityMatrix,
    pub drho: CMatrix,
}

impl FamilyPoint {
    /// Evaluates `f` at θ, differentiating analytically when the family
    /// supports it and by central differences at `numeric.fd_step` otherwise.
    pub fn new(f: &ParameterizedFamily, theta: f64, numeric: &NumericOptions) -> Result<Self> {
        let rho = f.eval(theta)?;
        let drho = f.derivative_auto(theta, numeric.fd_step)?;
        Ok(FamilyPoint { rho, drho })
    }

    pub fn dims(&self) -> Option<BipartiteDims> {
        self.rho.dims()
    }

    /// Marginal state and marginal derivative of one party.
    pub fn reduced(&self, keep: Party) -> Result<FamilyPoint> {
        let dims = self.dims().ok_or_else(|| {
            Error::DimMismatch("state has no bipartite split; cannot reduce".into())
        })?;
        let rho = self.rho.reduced(keep)?;
        let drho = matcore::partial_trace(&self.drho, dims, keep)?;
        Ok(FamilyPoint { rho, drho })
    }
}

/// Symmetric logarithmic derivative and the QFI it certifies.
#[derive(Clone, Debug)]
pub struct SldResult {
    pub sld: CMatrix,
    pub qfi: f64,
    /// Number of eigenvalues of ρ above the truncation tolerance.
    pub support_rank: usize,
    pub truncation_tol: f64,
}

/// Solves `∂ρ = (Lρ + ρL)/2` on the support of ρ and returns
/// `qfi = tr(ρ L²)`.
///
/// In the eigenbasis of ρ, `L_jk = 2 (∂ρ)_jk / (λ_j + λ_k)` wherever
/// `λ_j + λ_k > tol`; other matrix elements are set to zero (the standard
/// support convention for rank-deficient states).
pub fn sld(rho: &DensityMatrix, drho: &CMatrix, tol: f64) -> Result<SldResult> {
    let n = rho.dim();
    if drho.rows() != n || drho.cols() != n {
        return Err(Error::DimMismatch(format!(
            "derivative is {}x{}, state dimension is {n}",
            drho.rows(),
            drho.cols()
        )));
    }
    let herm = drho.hermitian_residual();
    if herm > DERIVATIVE_TOL {
        return Err(Error::NotHermitian {
            residual: herm,
            tol: DERIVATIVE_TOL,
        });
    }
    let tr = drho.trace().norm();
    if tr > DERIVATIVE_TOL {
        return Err(Error::NotTraceless(tr));
    }

    let eig = matcore::herm_eig(rho.mat())?;
    let v = &eig.eigenvectors;
    // ∂ρ in the eigenbasis of ρ.
    let d = v.dagger().matmul(drho).matmul(v);

    let mut l_eig = CMatrix::zeros(n, n);
    let mut qfi = 0.0;
    for j in 0..n {
        for k in 0..n {
            let denom = eig.eigenvalues[j] + eig.eigenvalues[k];
            if denom > tol {
                l_eig[(j, k)] = d[(j, k)].scale(2.0 / denom);
                qfi += 2.0 * d[(j, k)].norm_sqr() / denom;
            }
        }
    }
    let sld = v.matmul(&l_eig).matmul(&v.dagger());
    let support_rank = eig.eigenvalues.iter().filter(|&&lam| lam > tol).count();
    Ok(SldResult {
        sld,
        qfi,
        support_rank,
        truncation_tol: tol,
    })
}

/// QFI of a pure-state family: `4 (⟨∂ψ|∂ψ⟩ - |⟨ψ|∂ψ⟩|²)`.
pub fn qfi_pure(psi: &[Complex64], dpsi: &[Complex64]) -> Result<f64> {
    let norm = matcore::vec_norm(psi);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    if psi.len() != dpsi.len() {
        return Err(Error::DimMismatch(format!(
            "state has {} entries, derivative {}",
            psi.len(),
            dpsi.len()
        )));
    }
    let dd = matcore::inner(dpsi, dpsi).re;
    let overlap = matcore::inner(psi, dpsi);
    Ok(4.0 * (dd - overlap.norm_sqr()))
}

/// Classical Fisher information of the outcome distribution of `m`:
/// `Σ_i (∂p_i)²/p_i` with `p_i = tr(ρ M_i)`.
///
/// Outcomes with `p_i < p_tol` contribute nothing when `|∂p_i| < √p_tol`;
/// otherwise the sum diverges and the call fails with `SingularOutcome`.
pub fn classical_fi(rho: &DensityMatrix, drho: &CMatrix, m: &Povm, p_tol: f64) -> Result<f64> {
    if m.dim() != rho.dim() {
        return Err(Error::DimMismatch(format!(
            "measurement acts on dimension {}, state on {}",
            m.dim(),
            rho.dim()
        )));
    }
    let mut fi = 0.0;
    for (e, &label) in m.elements().iter().zip(m.labels()) {
        let p = rho.mat().trace_product(e).re;
        let dp = drho.trace_product(e).re;
        if p < p_tol {
            if dp.abs() < p_tol.sqrt() {
                continue;
            }
            return Err(Error::SingularOutcome {
                outcome: label,
                p,
                dp,
                p_tol,
            });
        }
        fi += dp * dp / p;
    }
    Ok(fi)
}

/// Projective measurement in the eigenbasis of the SLD; attains the QFI.
pub fn sld_basis_measurement(s: &SldResult) -> Result<Povm> {
    let eig = matcore::herm_eig(&s.sld)?;
    Povm::from_basis(&eig.eigenvectors)
}

/// Conditional state of the unmeasured party for one outcome.
#[derive(Clone, Debug)]
pub enum Conditional {
    State(DensityMatrix),
    /// Outcome probability below the floor; excluded from downstream sums.
    Negligible,
}

impl Conditional {
    pub fn state(&self) -> Option<&DensityMatrix> {
        match self {
            Conditional::State(s) => Some(s),
            Conditional::Negligible => None,
        }
    }
}

/// Classical-quantum state produced by measuring one party: outcome
/// probabilities and the other party's conditional states, in outcome order.
#[derive(Clone, Debug)]
pub struct CqState {
    pub probs: Vec<f64>,
    pub conditionals: Vec<Conditional>,
    pub labels: Vec<usize>,
}

/// θ-derivatives of a [`CqState`], index-aligned with it. A conditional's
/// derivative is `None` exactly where the conditional is `Negligible`.
#[derive(Clone, Debug)]
pub struct CqDerivative {
    pub dprobs: Vec<f64>,
    pub dconditionals: Vec<Option<CMatrix>>,
}

/// `tr_measured[(M ⊗ 1) X]` without forming the Kronecker product:
/// contracts the measurement element against the measured party's indices.
fn conditional_operator(m: &CMatrix, x: &CMatrix, dims: BipartiteDims, measured: Party) -> CMatrix {
    let (da, db) = (dims.dim_a, dims.dim_b);
    match measured {
        Party::A => CMatrix::from_fn(db, db, |k, l| {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..da {
                for j in 0..da {
                    s += m[(i, j)] * x[(j * db + k, i * db + l)];
                }
            }
            s
        }),
        Party::B => CMatrix::from_fn(da, da, |k, l| {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..db {
                for j in 0..db {
                    s += m[(i, j)] * x[(k * db + j, l * db + i)];
                }
            }
            s
        }),
    }
}

/// Measures `measured` with `m` at a frozen family point and returns the
/// conditional ensemble with its θ-derivatives.
///
/// The unnormalized conditional is `τ_i = tr_measured[(M_i ⊗ 1) ρ]` with
/// `p_i = tr τ_i`; the conditional derivative follows the quotient rule
/// `∂(τ_i/p_i) = (∂τ_i - (∂p_i) τ_i/p_i) / p_i`, which is exact because
/// `τ_i` is linear in the state.
pub fn cq_point(
    point: &FamilyPoint,
    m: &Povm,
    dims: BipartiteDims,
    measured: Party,
    numeric: &NumericOptions,
) -> Result<(CqState, CqDerivative)> {
    dims.check_operator(point.rho.mat())?;
    if m.dim() != dims.dim_of(measured) {
        return Err(Error::DimMismatch(format!(
            "measurement acts on dimension {}, party {} has dimension {}",
            m.dim(),
            measured.as_str(),
            dims.dim_of(measured)
        )));
    }
    let mut probs = Vec::with_capacity(m.len());
    let mut dprobs = Vec::with_capacity(m.len());
    let mut conditionals = Vec::with_capacity(m.len());
    let mut dconditionals = Vec::with_capacity(m.len());
    for e in m.elements() {
        let tau = conditional_operator(e, point.rho.mat(), dims, measured);
        let dtau = conditional_operator(e, &point.drho, dims, measured);
        let p = tau.trace().re;
        let dp = dtau.trace().re;
        probs.push(p);
        dprobs.push(dp);
        if p < numeric.p_tol {
            conditionals.push(Conditional::Negligible);
            dconditionals.push(None);
            continue;
        }
        let cond = tau.scale_re(1.0 / p).hermitize();
        let dcond = dtau.sub(&cond.scale_re(dp)).scale_re(1.0 / p).hermitize();
        conditionals.push(Conditional::State(DensityMatrix::new(cond, None)?));
        dconditionals.push(Some(dcond));
    }
    Ok((
        CqState {
            probs,
            conditionals,
            labels: m.labels().to_vec(),
        },
        CqDerivative {
            dprobs,
            dconditionals,
        },
    ))
}

/// Classical-quantum state after party a measures `ma`.
pub fn cq_state(
    f: &ParameterizedFamily,
    theta: f64,
    ma: &Povm,
    dims: BipartiteDims,
    numeric: &NumericOptions,
) -> Result<CqState> {
    let point = FamilyPoint::new(f, theta, numeric)?;
    Ok(cq_point(&point, ma, dims, Party::A, numeric)?.0)
}

/// First-stage Fisher term `Σ_i (∂p_i)²/p_i` with the same singular-outcome
/// policy as [`classical_fi`].
fn first_stage_fi(cq: &CqState, dcq: &CqDerivative, p_tol: f64) -> Result<f64> {
    let mut fi = 0.0;
    for ((&p, &dp), &label) in cq.probs.iter().zip(&dcq.dprobs).zip(&cq.labels) {
        if p < p_tol {
            if dp.abs() < p_tol.sqrt() {
                continue;
            }
            return Err(Error::SingularOutcome {
                outcome: label,
                p,
                dp,
                p_tol,
            });
        }
        fi += dp * dp / p;
    }
    Ok(fi)
}

pub(crate) fn adaptive_fi_given_first_point(
    point: &FamilyPoint,
    first: &Povm,
    dims: BipartiteDims,
    direction: AdaptiveDirection,
    numeric: &NumericOptions,
) -> Result<f64> {
    let measured = direction.first_party();
    let (cq, dcq) = cq_point(point, first, dims, measured, numeric)?;
    let mut fi = first_stage_fi(&cq, &dcq, numeric.p_tol)?;
    for ((cond, dcond), &p) in cq
        .conditionals
        .iter()
        .zip(&dcq.dconditionals)
        .zip(&cq.probs)
    {
        if let (Conditional::State(state), Some(d)) = (cond, dcond) {
            fi += p * sld(state, d, numeric.sld_tol)?.qfi;
        }
    }
    Ok(fi)
}

/// Best-case adaptive value for a fixed first stage: the first party
/// measures `first`, the second extracts the full conditional QFI,
/// `F(p) + Σ_i p_i F(ρ^{second|i})`.
pub fn adaptive_fi_given_first(
    f: &ParameterizedFamily,
    theta: f64,
    first: &Povm,
    dims: BipartiteDims,
    direction: AdaptiveDirection,
    numeric: &NumericOptions,
) -> Result<f64> {
    let point = FamilyPoint::new(f, theta, numeric)?;
    adaptive_fi_given_first_point(&point, first, dims, direction, numeric)
}

/// The two evaluation routes for an explicit two-stage strategy.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveRoutes {
    /// Classical FI of the flattened joint POVM.
    pub joint: f64,
    /// First-stage FI plus probability-weighted conditional measured FIs.
    pub decomposed: f64,
}

impl AdaptiveRoutes {
    pub fn residual(&self) -> f64 {
        (self.joint - self.decomposed).abs()
    }
}

/// Evaluates an explicit adaptive strategy both as one joint measurement and
/// through the conditional decomposition. The two must agree; the residual
/// measures numerical (not statistical) error.
pub fn adaptive_fi_explicit(
    f: &ParameterizedFamily,
    theta: f64,
    ap: &crate::povm::AdaptivePovm,
    dims: BipartiteDims,
    direction: AdaptiveDirection,
    numeric: &NumericOptions,
) -> Result<AdaptiveRoutes> {
    let point = FamilyPoint::new(f, theta, numeric)?;
    let joint_povm = crate::povm::adaptive_embed(ap, dims, direction)?;
    let joint = classical_fi(&point.rho, &point.drho, &joint_povm, numeric.p_tol)?;

    let measured = direction.first_party();
    let (cq, dcq) = cq_point(&point, ap.first(), dims, measured, numeric)?;
    let mut decomposed = first_stage_fi(&cq, &dcq, numeric.p_tol)?;
    for (i, ((cond, dcond), &p)) in cq
        .conditionals
        .iter()
        .zip(&dcq.dconditionals)
        .zip(&cq.probs)
        .enumerate()
    {
        if let (Conditional::State(state), Some(d)) = (cond, dcond) {
            decomposed += p * classical_fi(state, d, &ap.conditionals()[i], numeric.p_tol)?;
        }
    }
    Ok(AdaptiveRoutes { joint, decomposed })
}

/// QFI of one party's marginal family.
pub fn fi_marginal(
    f: &ParameterizedFamily,
    theta: f64,
    dims: BipartiteDims,
    party: Party,
    numeric: &NumericOptions,
) -> Result<f64> {
    let point = FamilyPoint::new(f, theta, numeric)?;
    dims.check_operator(point.rho.mat())?;
    let reduced = point.reduced(party)?;
    Ok(sld(&reduced.rho, &reduced.drho, numeric.sld_tol)?.qfi)
}

/// Residual of extension invariance: measuring party a's marginal directly
/// versus measuring `m ⊗ 1` on the marginal extended by a fixed (randomly
/// drawn, seed-determined) pure ancilla of dimension `extension_dim`.
/// Vanishes for every extension because the ancilla is uncorrelated.
pub fn check_extension_invariance(
    f: &ParameterizedFamily,
    theta: f64,
    dims: BipartiteDims,
    m: &Povm,
    extension_dim: usize,
    seed: u64,
    numeric: &NumericOptions,
) -> Result<f64> {
    if extension_dim == 0 {
        return Err(Error::DimMismatch("extension dimension must be positive".into()));
    }
    let point = FamilyPoint::new(f, theta, numeric)?;
    dims.check_operator(point.rho.mat())?;
    let reduced = point.reduced(Party::A)?;
    let direct = classical_fi(&reduced.rho, &reduced.drho, m, numeric.p_tol)?;

    let chi = crate::sample::pure_state(extension_dim, &mut crate::sample::rng(seed));
    let ancilla = matcore::outer(&chi);
    let ext_dims = BipartiteDims::new(reduced.rho.dim(), extension_dim)?;
    let ext_rho = DensityMatrix::new(
        matcore::kron(reduced.rho.mat(), &ancilla),
        Some(ext_dims),
    )?;
    let ext_drho = matcore::kron(&reduced.drho, &ancilla);
    let embedded = m.embed_local(ext_dims, Party::A)?;
    let extended = classical_fi(&ext_rho, &ext_drho, &embedded, numeric.p_tol)?;
    Ok((extended - direct).abs())
}
