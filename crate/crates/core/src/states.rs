//! Density matrices and one-parameter state families.
//!
//! A [`ParameterizedFamily`] maps a real parameter θ to a density matrix and
//! knows how to differentiate itself: analytically where a closed form exists
//! (unitary orbits of a fixed generator, the builtin families, products, and
//! channel pushforwards of those), by central finite differences otherwise.
//! Tabulated families interpolate nothing; they evaluate only at their grid
//! points and differentiate from neighboring entries.

use num_complex::Complex64;

use crate::matcore::{self, BipartiteDims, CMatrix, EigDecomposition, Party};
use crate::{Error, Result};

/// Hermiticity tolerance for density-matrix validation.
pub const DENSITY_HERM_TOL: f64 = 1e-9;

/// Unit-trace tolerance for density-matrix validation.
pub const DENSITY_TRACE_TOL: f64 = 1e-9;

/// Eigenvalues may undershoot zero by at most this much.
pub const DENSITY_EIG_FLOOR: f64 = 1e-9;

/// Default step for central finite differences.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Classical Bernoulli parameters stay this far inside (0, 1).
pub const BERNOULLI_MARGIN: f64 = 1e-6;

/// A tabulated θ must match a grid point within this tolerance.
pub const GRID_THETA_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn phase(theta: f64) -> Complex64 {
    Complex64::new(0.0, theta).exp()
}

/// Validated quantum state: Hermitian, unit trace, positive semidefinite
/// within [`DENSITY_EIG_FLOOR`]. Optionally carries a bipartite split.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
    dims: Option<BipartiteDims>,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix, dims: Option<BipartiteDims>) -> Result<Self> {
        Self::new_with_tol(mat, dims, DENSITY_HERM_TOL, DENSITY_TRACE_TOL, DENSITY_EIG_FLOOR)
    }

    pub fn new_with_tol(
        mat: CMatrix,
        dims: Option<BipartiteDims>,
        herm_tol: f64,
        trace_tol: f64,
        eig_floor: f64,
    ) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}x{}, not square",
                mat.rows(),
                mat.cols()
            )));
        }
        if let Some(d) = dims {
            d.check_operator(&mat)?;
        }
        let herm = mat.hermitian_residual();
        if herm > herm_tol {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (residual {herm:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
        }
        let eig = matcore::herm_eig(&mat)?;
        let min = eig.eigenvalues[0];
        if min < -eig_floor {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { mat, dims })
    }

    /// `|psi⟩⟨psi|` from a unit vector; `NotNormalized` otherwise.
    pub fn from_pure(psi: &[Complex64], dims: Option<BipartiteDims>) -> Result<Self> {
        let norm = matcore::vec_norm(psi);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(norm));
        }
        if let Some(d) = dims {
            if d.total() != psi.len() {
                return Err(Error::DimMismatch(format!(
                    "vector has {} entries, dims total {}",
                    psi.len(),
                    d.total()
                )));
            }
        }
        Ok(DensityMatrix {
            mat: matcore::outer(psi),
            dims,
        })
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn dims(&self) -> Option<BipartiteDims> {
        self.dims
    }

    /// Marginal state of one party; requires a bipartite split.
    pub fn reduced(&self, keep: Party) -> Result<DensityMatrix> {
        let dims = self.dims.ok_or_else(|| {
            Error::DimMismatch("state has no bipartite split; cannot reduce".into())
        })?;
        let mat = matcore::partial_trace(&self.mat, dims, keep)?;
        Ok(DensityMatrix { mat, dims: None })
    }
}

/// Differentiation scheme for [`ParameterizedFamily::derivative`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivScheme {
    /// Closed form; errors with `AnalyticUnavailable` if the family has none.
    Analytic,
    /// Central difference `(ρ(θ+h) - ρ(θ-h)) / 2h`.
    CentralFd { step: f64 },
    /// Richardson-extrapolated central difference `(4 D(h) - D(2h)) / 3`.
    Richardson { step: f64 },
}

/// Builtin one-parameter families.
///
/// All act on two qubits except `BernoulliQubit`, the single-qubit classical
/// coin used as a product factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinFamilyName {
    /// `(|00⟩ + e^{iθ}|11⟩)/√2`: maximally entangled, phase-encoded.
    BellPhase,
    /// `θ|00⟩⟨00| + (1-θ)|11⟩⟨11|`: classically correlated coin, θ ∈ (0, 1).
    CcBernoulli,
    /// `cos(θ/2)|00⟩ + sin(θ/2)|11⟩`: amplitude-encoded pure state.
    CosSin,
    /// `(|0⟩ + e^{iθ}|1⟩)/√2 ⊗ |0⟩`: phase held entirely by party a.
    PlusPhaseTimesZero,
    /// Single-qubit classical coin `diag(θ, 1-θ)`, θ ∈ (0, 1).
    BernoulliQubit,
}

impl BuiltinFamilyName {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bell_phase" => Ok(Self::BellPhase),
            "cc_bernoulli" => Ok(Self::CcBernoulli),
            "cossin" => Ok(Self::CosSin),
            "plus_phase_times_zero" => Ok(Self::PlusPhaseTimesZero),
            "bernoulli_qubit" => Ok(Self::BernoulliQubit),
            _ => Err(Error::UnknownName(name.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::BellPhase => "bell_phase",
            Self::CcBernoulli => "cc_bernoulli",
            Self::CosSin => "cossin",
            Self::PlusPhaseTimesZero => "plus_phase_times_zero",
            Self::BernoulliQubit => "bernoulli_qubit",
        }
    }

    fn dims(self) -> Option<BipartiteDims> {
        match self {
            Self::BernoulliQubit => None,
            _ => Some(BipartiteDims { dim_a: 2, dim_b: 2 }),
        }
    }

    fn dim(self) -> usize {
        match self {
            Self::BernoulliQubit => 2,
            _ => 4,
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    /// `ρ_θ = e^{-iθG} ρ₀ e^{iθG}` with the generator's eigendecomposition
    /// cached for repeated evaluation.
    Generator {
        rho0: DensityMatrix,
        gen: CMatrix,
        gen_eig: EigDecomposition,
        dims: Option<BipartiteDims>,
    },
    Builtin(BuiltinFamilyName),
    Product {
        a: Box<ParameterizedFamily>,
        b: Box<ParameterizedFamily>,
    },
    Grid {
        thetas: Vec<f64>,
        states: Vec<DensityMatrix>,
    },
    /// Image of `base` under a fixed Kraus channel; the derivative pushes
    /// through by linearity.
    Mapped {
        base: Box<ParameterizedFamily>,
        kraus: Vec<CMatrix>,
        dims: Option<BipartiteDims>,
        label: String,
    },
}

/// One-parameter family of density matrices `θ ↦ ρ_θ`.
#[derive(Clone, Debug)]
pub struct ParameterizedFamily {
    kind: Kind,
}

/// Builds a builtin family from its string name.
pub fn make_builtin(name: &str) -> Result<ParameterizedFamily> {
    Ok(ParameterizedFamily::builtin(BuiltinFamilyName::parse(name)?))
}

impl ParameterizedFamily {
    /// Unitary orbit `e^{-iθG} ρ₀ e^{iθG}` of a Hermitian generator.
    pub fn generator(rho0: DensityMatrix, gen: CMatrix) -> Result<Self> {
        if gen.rows() != rho0.dim() || gen.cols() != rho0.dim() {
            return Err(Error::DimMismatch(format!(
                "generator is {}x{}, state dimension is {}",
                gen.rows(),
                gen.cols(),
                rho0.dim()
            )));
        }
        let residual = gen.hermitian_residual();
        if residual > matcore::HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                residual,
                tol: matcore::HERMITICITY_TOL,
            });
        }
        let gen_eig = matcore::herm_eig(&gen)?;
        let dims = rho0.dims();
        Ok(ParameterizedFamily {
            kind: Kind::Generator {
                rho0,
                gen,
                gen_eig,
                dims,
            },
        })
    }

    pub fn builtin(name: BuiltinFamilyName) -> Self {
        ParameterizedFamily {
            kind: Kind::Builtin(name),
        }
    }

    /// `σ^a_θ ⊗ σ^b_θ` with the split between the factors.
    pub fn product_of(a: ParameterizedFamily, b: ParameterizedFamily) -> Self {
        ParameterizedFamily {
            kind: Kind::Product {
                a: Box::new(a),
                b: Box::new(b),
            },
        }
    }

    /// Tabulated family; `points` must have strictly increasing θ and
    /// consistent dimensions.
    pub fn grid(points: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSpec("grid family has no points".into()));
        }
        let dim = points[0].1.dim();
        let dims = points[0].1.dims();
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidSpec(format!(
                    "grid thetas must strictly increase, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for (_, s) in &points {
            if s.dim() != dim || s.dims() != dims {
                return Err(Error::DimMismatch(
                    "grid states have inconsistent dimensions".into(),
                ));
            }
        }
        let (thetas, states) = points.into_iter().unzip();
        Ok(ParameterizedFamily {
            kind: Kind::Grid { thetas, states },
        })
    }

    /// Image of `base` under a completeness-checked Kraus set.
    /// Channels construct this through [`crate::channels::push_family`].
    pub(crate) fn mapped(
        base: ParameterizedFamily,
        kraus: Vec<CMatrix>,
        dims: Option<BipartiteDims>,
        label: String,
    ) -> Self {
        ParameterizedFamily {
            kind: Kind::Mapped {
                base: Box::new(base),
                kraus,
                dims,
                label,
            },
        }
    }

    /// Short description used in error messages.
    pub fn label(&self) -> String {
        match &self.kind {
            Kind::Generator { .. } => "generator".into(),
            Kind::Builtin(name) => name.as_str().into(),
            Kind::Product { a, b } => format!("product_of({}, {})", a.label(), b.label()),
            Kind::Grid { .. } => "grid".into(),
            Kind::Mapped { base, label, .. } => format!("{}({})", label, base.label()),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Generator { rho0, .. } => rho0.dim(),
            Kind::Builtin(name) => name.dim(),
            Kind::Product { a, b } => a.dim() * b.dim(),
            Kind::Grid { states, .. } => states[0].dim(),
            Kind::Mapped { kraus, .. } => kraus[0].rows(),
        }
    }

    /// Bipartite split, if the family carries one. Products split between
    /// their factors.
    pub fn dims(&self) -> Option<BipartiteDims> {
        match &self.kind {
            Kind::Generator { dims, .. } => *dims,
            Kind::Builtin(name) => name.dims(),
            Kind::Product { a, b } => Some(BipartiteDims {
                dim_a: a.dim(),
                dim_b: b.dim(),
            }),
            Kind::Grid { states, .. } => states[0].dims(),
            Kind::Mapped { dims, .. } => *dims,
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        match &self.kind {
            Kind::Generator { .. } | Kind::Builtin(_) => true,
            Kind::Product { a, b } => a.has_analytic_derivative() && b.has_analytic_derivative(),
            Kind::Grid { .. } => false,
            Kind::Mapped { base, .. } => base.has_analytic_derivative(),
        }
    }

    /// The state at θ.
    pub fn eval(&self, theta: f64) -> Result<DensityMatrix> {
        let mat = self.eval_mat(theta)?;
        Ok(DensityMatrix {
            mat,
            dims: self.dims(),
        })
    }

    fn eval_mat(&self, theta: f64) -> Result<CMatrix> {
        match &self.kind {
            Kind::Generator { rho0, gen_eig, .. } => {
                let u = gen_eig.apply_fn(|lam| phase(-theta * lam));
                Ok(u.matmul(rho0.mat()).matmul(&u.dagger()))
            }
            Kind::Builtin(name) => builtin_eval(*name, theta),
            Kind::Product { a, b } => Ok(matcore::kron(
                &a.eval_mat(theta)?,
                &b.eval_mat(theta)?,
            )),
            Kind::Grid { thetas, states } => {
                let k = self.grid_index(thetas, theta)?;
                Ok(states[k].mat().clone())
            }
            Kind::Mapped { base, kraus, .. } => {
                Ok(apply_kraus(kraus, &base.eval_mat(theta)?))
            }
        }
    }

    /// `∂_θ ρ_θ` under the requested scheme. Hermitian and traceless up to
    /// scheme error; finite-difference output is re-hermitized to suppress
    /// rounding drift.
    pub fn derivative(&self, theta: f64, scheme: DerivScheme) -> Result<CMatrix> {
        match scheme {
            DerivScheme::Analytic => self.analytic_derivative(theta),
            DerivScheme::CentralFd { step } => self.central_fd(theta, step),
            DerivScheme::Richardson { step } => {
                let d1 = self.central_fd(theta, step)?;
                let d2 = self.central_fd(theta, 2.0 * step)?;
                Ok(d1.scale_re(4.0 / 3.0).sub(&d2.scale_re(1.0 / 3.0)))
            }
        }
    }

    /// Analytic derivative when available, else central differences at `step`.
    pub fn derivative_auto(&self, theta: f64, step: f64) -> Result<CMatrix> {
        if self.has_analytic_derivative() {
            self.derivative(theta, DerivScheme::Analytic)
        } else {
            self.derivative(theta, DerivScheme::CentralFd { step })
        }
    }

    fn analytic_derivative(&self, theta: f64) -> Result<CMatrix> {
        match &self.kind {
            Kind::Generator { gen, .. } => {
                // ∂ρ = -i [G, ρ_θ]
                let rho = self.eval_mat(theta)?;
                let comm = gen.matmul(&rho).sub(&rho.matmul(gen));
                Ok(comm.scale(c(0.0, -1.0)))
            }
            Kind::Builtin(name) => builtin_derivative(*name, theta),
            Kind::Product { a, b } => {
                let ra = a.eval_mat(theta)?;
                let rb = b.eval_mat(theta)?;
                let da = a.analytic_derivative(theta)?;
                let db = b.analytic_derivative(theta)?;
                Ok(matcore::kron(&da, &rb).add(&matcore::kron(&ra, &db)))
            }
            Kind::Grid { .. } => Err(Error::AnalyticUnavailable(self.label())),
            Kind::Mapped { base, kraus, .. } => {
                Ok(apply_kraus(kraus, &base.analytic_derivative(theta)?))
            }
        }
    }

    fn central_fd(&self, theta: f64, step: f64) -> Result<CMatrix> {
        if let Kind::Grid { thetas, states } = &self.kind {
            // Differentiate from neighboring tabulated points; `step` is the
            // neighbor offset (1 for D(h), 2 for D(2h) in Richardson), scaled
            // against the local grid spacing.
            let k = self.grid_index(thetas, theta)?;
            let spacing = grid_spacing(thetas, k);
            let hops = ((step / spacing).round() as usize).max(1);
            if k < hops || k + hops >= thetas.len() {
                return Err(Error::ThetaOutOfDomain {
                    theta,
                    family: format!("{} (derivative needs interior points)", self.label()),
                });
            }
            let dt = thetas[k + hops] - thetas[k - hops];
            return Ok(states[k + hops]
                .mat()
                .sub(states[k - hops].mat())
                .scale_re(1.0 / dt)
                .hermitize());
        }
        let plus = self.eval_mat(theta + step)?;
        let minus = self.eval_mat(theta - step)?;
        Ok(plus.sub(&minus).scale_re(0.5 / step).hermitize())
    }

    fn grid_index(&self, thetas: &[f64], theta: f64) -> Result<usize> {
        thetas
            .iter()
            .position(|&t| (t - theta).abs() <= GRID_THETA_TOL)
            .ok_or_else(|| Error::ThetaOutOfDomain {
                theta,
                family: self.label(),
            })
    }
}

fn grid_spacing(thetas: &[f64], k: usize) -> f64 {
    if k + 1 < thetas.len() {
        thetas[k + 1] - thetas[k]
    } else if k > 0 {
        thetas[k] - thetas[k - 1]
    } else {
        1.0
    }
}

fn apply_kraus(kraus: &[CMatrix], x: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(kraus[0].rows(), kraus[0].rows());
    for e in kraus {
        out = out.add(&e.matmul(x).matmul(&e.dagger()));
    }
    out
}

fn check_bernoulli_domain(theta: f64, name: BuiltinFamilyName) -> Result<()> {
    if !(BERNOULLI_MARGIN..=1.0 - BERNOULLI_MARGIN).contains(&theta) {
        return Err(Error::ThetaOutOfDomain {
            theta,
            family: name.as_str().to_string(),
        });
    }
    Ok(())
}

fn builtin_eval(name: BuiltinFamilyName, theta: f64) -> Result<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        BuiltinFamilyName::BellPhase => {
            let psi = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), phase(theta) * s];
            Ok(matcore::outer(&psi))
        }
        BuiltinFamilyName::CcBernoulli => {
            check_bernoulli_domain(theta, name)?;
            Ok(CMatrix::from_real_diag(&[theta, 0.0, 0.0, 1.0 - theta]))
        }
        BuiltinFamilyName::CosSin => {
            let half = theta / 2.0;
            let psi = [
                c(half.cos(), 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(half.sin(), 0.0),
            ];
            Ok(matcore::outer(&psi))
        }
        BuiltinFamilyName::PlusPhaseTimesZero => {
            let psi = [c(s, 0.0), c(0.0, 0.0), phase(theta) * s, c(0.0, 0.0)];
            Ok(matcore::outer(&psi))
        }
        BuiltinFamilyName::BernoulliQubit => {
            check_bernoulli_domain(theta, name)?;
            Ok(CMatrix::from_real_diag(&[theta, 1.0 - theta]))
        }
    }
}

fn builtin_derivative(name: BuiltinFamilyName, theta: f64) -> Result<CMatrix> {
    match name {
        BuiltinFamilyName::BellPhase => {
            // ∂ρ = (i e^{iθ}|11⟩⟨00| - i e^{-iθ}|00⟩⟨11|) / 2
            let mut d = CMatrix::zeros(4, 4);
            d[(3, 0)] = c(0.0, 0.5) * phase(theta);
            d[(0, 3)] = d[(3, 0)].conj();
            Ok(d)
        }
        BuiltinFamilyName::CcBernoulli => {
            check_bernoulli_domain(theta, name)?;
            Ok(CMatrix::from_real_diag(&[1.0, 0.0, 0.0, -1.0]))
        }
        BuiltinFamilyName::CosSin => {
            let (sin, cos) = theta.sin_cos();
            let mut d = CMatrix::zeros(4, 4);
            d[(0, 0)] = c(-sin / 2.0, 0.0);
            d[(3, 3)] = c(sin / 2.0, 0.0);
            d[(0, 3)] = c(cos / 2.0, 0.0);
            d[(3, 0)] = c(cos / 2.0, 0.0);
            Ok(d)
        }
        BuiltinFamilyName::PlusPhaseTimesZero => {
            let mut d = CMatrix::zeros(4, 4);
            d[(2, 0)] = c(0.0, 0.5) * phase(theta);
            d[(0, 2)] = d[(2, 0)].conj();
            Ok(d)
        }
        BuiltinFamilyName::BernoulliQubit => {
            check_bernoulli_domain(theta, name)?;
            Ok(CMatrix::from_real_diag(&[1.0, -1.0]))
        }
    }
}
