//! Measurements and the bipartite measurement classes.
//!
//! A [`Povm`] is a list of positive operators summing to the identity. The
//! bipartite classes form the lattice behind the Fisher-information
//! hierarchy: single-party measurements embed as `M ⊗ 1`, product
//! measurements pair outcomes independently, adaptive strategies condition
//! the second party's measurement on the first party's outcome, and global
//! measurements act on the joint space without restriction.
//!
//! Projective measurements are parameterized through a Hermitian matrix `H`
//! (`dim` real diagonal entries, then re/im pairs for the strict upper
//! triangle, row-major): the measurement basis is the column set of
//! `exp(iH)`. This chart is smooth and covers every orthonormal basis, which
//! is what the derivative-free optimizer needs.

use num_complex::Complex64;

use crate::matcore::{self, BipartiteDims, CMatrix, Party};
use crate::{Error, Result};

/// Hermiticity tolerance for POVM elements.
pub const ELEMENT_HERM_TOL: f64 = 1e-9;

/// POVM-element eigenvalues may undershoot zero by at most this much.
pub const ELEMENT_EIG_FLOOR: f64 = 1e-9;

/// Tolerance on `max |Σ_i M_i - 1|`.
pub const COMPLETENESS_TOL: f64 = 1e-8;

/// Ordering of the classical message in an adaptive strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptiveDirection {
    /// Party a measures first and announces the outcome to party b.
    AToB,
    /// Party b measures first and announces the outcome to party a.
    BToA,
}

impl AdaptiveDirection {
    /// The party that measures first.
    pub fn first_party(self) -> Party {
        match self {
            AdaptiveDirection::AToB => Party::A,
            AdaptiveDirection::BToA => Party::B,
        }
    }
}

/// The measurement classes of the bipartite hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PovmClass {
    LocalA,
    LocalB,
    Product,
    AdaptiveAToB,
    AdaptiveBToA,
    Global,
}

impl PovmClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PovmClass::LocalA => "local_a",
            PovmClass::LocalB => "local_b",
            PovmClass::Product => "product",
            PovmClass::AdaptiveAToB => "adaptive_ab",
            PovmClass::AdaptiveBToA => "adaptive_ba",
            PovmClass::Global => "global",
        }
    }
}

/// Positive operator-valued measure: elements plus integer outcome labels.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<CMatrix>,
    labels: Vec<usize>,
}

impl Povm {
    /// Builds a POVM after shape checks only; use [`Povm::validate`] for the
    /// positivity and completeness report, or [`Povm::validated`] to reject
    /// invalid sets outright.
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).collect();
        Povm::with_labels(elements, labels)
    }

    pub fn with_labels(elements: Vec<CMatrix>, labels: Vec<usize>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        if labels.len() != elements.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        let dim = elements[0].rows();
        for (k, e) in elements.iter().enumerate() {
            if !e.is_square() || e.rows() != dim {
                return Err(Error::DimMismatch(format!(
                    "element {k} is {}x{}, expected {dim}x{dim}",
                    e.rows(),
                    e.cols()
                )));
            }
        }
        Ok(Povm { elements, labels })
    }

    /// Builds and rejects anything that fails the validation report.
    pub fn validated(elements: Vec<CMatrix>) -> Result<Self> {
        let povm = Povm::new(elements)?;
        let report = povm.validate()?;
        if !report.pass {
            return Err(Error::InvalidPovm(report.describe_failures()));
        }
        Ok(povm)
    }

    /// Projectors onto the computational basis.
    pub fn computational(dim: usize) -> Povm {
        let elements = (0..dim)
            .map(|k| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(k, k)] = Complex64::new(1.0, 0.0);
                m
            })
            .collect();
        Povm {
            elements,
            labels: (0..dim).collect(),
        }
    }

    /// The single-outcome measurement `{1}`: measure nothing.
    pub fn trivial(dim: usize) -> Povm {
        Povm {
            elements: vec![CMatrix::identity(dim)],
            labels: vec![0],
        }
    }

    /// Rank-1 projectors onto the columns of a unitary.
    pub fn from_basis(u: &CMatrix) -> Result<Povm> {
        let residual = u.dagger().matmul(u).max_abs_diff(&CMatrix::identity(u.rows()));
        if !u.is_square() || residual > 1e-9 {
            return Err(Error::InvalidPovm(format!(
                "basis matrix is not unitary (residual {residual:.3e})"
            )));
        }
        let elements = (0..u.cols()).map(|j| matcore::outer(&u.column(j))).collect();
        Ok(Povm {
            elements,
            labels: (0..u.cols()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Positivity and completeness report. Errors only if an element is so
    /// far from Hermitian that its spectrum is meaningless.
    pub fn validate(&self) -> Result<ValidationReport> {
        let mut element_hermiticity = Vec::with_capacity(self.len());
        let mut element_min_eigenvalue = Vec::with_capacity(self.len());
        let mut sum = CMatrix::zeros(self.dim(), self.dim());
        for e in &self.elements {
            let herm = e.hermitian_residual();
            element_hermiticity.push(herm);
            let eig = matcore::herm_eig_with(&e.hermitize(), f64::INFINITY, 100)?;
            element_min_eigenvalue.push(eig.eigenvalues[0]);
            sum = sum.add(e);
        }
        let completeness_residual = sum.max_abs_diff(&CMatrix::identity(self.dim()));
        let pass = element_hermiticity.iter().all(|&h| h <= ELEMENT_HERM_TOL)
            && element_min_eigenvalue.iter().all(|&m| m >= -ELEMENT_EIG_FLOOR)
            && completeness_residual <= COMPLETENESS_TOL;
        Ok(ValidationReport {
            element_hermiticity,
            element_min_eigenvalue,
            completeness_residual,
            pass,
        })
    }

    /// Embeds a single-party measurement as `M ⊗ 1` (party a) or `1 ⊗ M`.
    pub fn embed_local(&self, dims: BipartiteDims, party: Party) -> Result<Povm> {
        if self.dim() != dims.dim_of(party) {
            return Err(Error::DimMismatch(format!(
                "measurement dimension {} does not match party {} dimension {}",
                self.dim(),
                party.as_str(),
                dims.dim_of(party)
            )));
        }
        let other = CMatrix::identity(dims.dim_of(party.other()));
        let elements = self
            .elements
            .iter()
            .map(|e| match party {
                Party::A => matcore::kron(e, &other),
                Party::B => matcore::kron(&other, e),
            })
            .collect();
        Ok(Povm {
            elements,
            labels: self.labels.clone(),
        })
    }
}

/// Per-element hermiticity and positivity residuals plus the completeness
/// residual of a candidate POVM.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub element_hermiticity: Vec<f64>,
    pub element_min_eigenvalue: Vec<f64>,
    pub completeness_residual: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn describe_failures(&self) -> String {
        let mut parts = Vec::new();
        for (k, &h) in self.element_hermiticity.iter().enumerate() {
            if h > ELEMENT_HERM_TOL {
                parts.push(format!("element {k} hermiticity residual {h:.3e}"));
            }
        }
        for (k, &m) in self.element_min_eigenvalue.iter().enumerate() {
            if m < -ELEMENT_EIG_FLOOR {
                parts.push(format!("element {k} minimum eigenvalue {m:.3e}"));
            }
        }
        if self.completeness_residual > COMPLETENESS_TOL {
            parts.push(format!(
                "completeness residual {:.3e}",
                self.completeness_residual
            ));
        }
        if parts.is_empty() {
            parts.push("no failures".into());
        }
        parts.join("; ")
    }
}

/// Product measurement `{A_i ⊗ B_j}` with labels `(i, j)` flattened
/// row-major: `label = i * nb + j`.
pub fn product_povm(ma: &Povm, mb: &Povm) -> Povm {
    let nb = mb.len();
    let mut elements = Vec::with_capacity(ma.len() * nb);
    let mut labels = Vec::with_capacity(ma.len() * nb);
    for (i, a) in ma.elements.iter().enumerate() {
        for (j, b) in mb.elements.iter().enumerate() {
            elements.push(matcore::kron(a, b));
            labels.push(i * nb + j);
        }
    }
    Povm { elements, labels }
}

/// Two-stage adaptive strategy: a first-stage POVM on one party and one
/// conditional POVM on the other party per first-stage outcome.
#[derive(Clone, Debug)]
pub struct AdaptivePovm {
    first: Povm,
    conditionals: Vec<Povm>,
}

impl AdaptivePovm {
    pub fn new(first: Povm, conditionals: Vec<Povm>) -> Result<Self> {
        if conditionals.len() != first.len() {
            return Err(Error::MissingConditional {
                got: conditionals.len(),
                want: first.len(),
            });
        }
        let dim = conditionals[0].dim();
        for (k, m) in conditionals.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::DimMismatch(format!(
                    "conditional {k} acts on dimension {}, expected {dim}",
                    m.dim()
                )));
            }
        }
        Ok(AdaptivePovm {
            first,
            conditionals,
        })
    }

    /// Adaptive strategy that ignores the first outcome: every conditional is
    /// `second`. Realizes the product measurement inside the adaptive class.
    pub fn constant(first: Povm, second: Povm) -> Self {
        let n = first.len();
        AdaptivePovm {
            first,
            conditionals: vec![second; n],
        }
    }

    pub fn first(&self) -> &Povm {
        &self.first
    }

    pub fn conditionals(&self) -> &[Povm] {
        &self.conditionals
    }
}

/// Flattens an adaptive strategy into one joint POVM
/// `{A_i ⊗ B^{(i)}_j}` on the bipartite space. Labels enumerate pairs
/// `(i, j)` row-major in `i`.
pub fn adaptive_embed(
    ap: &AdaptivePovm,
    dims: BipartiteDims,
    direction: AdaptiveDirection,
) -> Result<Povm> {
    let first_party = direction.first_party();
    if ap.first.dim() != dims.dim_of(first_party) {
        return Err(Error::DimMismatch(format!(
            "first stage acts on dimension {}, party {} has dimension {}",
            ap.first.dim(),
            first_party.as_str(),
            dims.dim_of(first_party)
        )));
    }
    if ap.conditionals[0].dim() != dims.dim_of(first_party.other()) {
        return Err(Error::DimMismatch(format!(
            "conditionals act on dimension {}, party {} has dimension {}",
            ap.conditionals[0].dim(),
            first_party.other().as_str(),
            dims.dim_of(first_party.other())
        )));
    }
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut next = 0;
    for (i, a) in ap.first.elements.iter().enumerate() {
        for b in ap.conditionals[i].elements.iter() {
            elements.push(match first_party {
                Party::A => matcore::kron(a, b),
                Party::B => matcore::kron(b, a),
            });
            labels.push(next);
            next += 1;
        }
    }
    Ok(Povm { elements, labels })
}

/// Chart on projective measurements: `dim` diagonal entries of a Hermitian
/// `H`, then `(re, im)` for each strict-upper-triangle entry row-major;
/// the measurement is the column basis of `exp(iH)`.
#[derive(Clone, Debug)]
pub struct ProjectiveParam {
    dim: usize,
    params: Vec<f64>,
}

impl ProjectiveParam {
    /// Number of real parameters for a given dimension: `dim²`.
    pub fn param_count(dim: usize) -> usize {
        dim * dim
    }

    pub fn new(dim: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != Self::param_count(dim) {
            return Err(Error::InvalidSpec(format!(
                "projective chart on dimension {dim} needs {} parameters, got {}",
                Self::param_count(dim),
                params.len()
            )));
        }
        Ok(ProjectiveParam { dim, params })
    }

    pub fn zeros(dim: usize) -> Self {
        ProjectiveParam {
            dim,
            params: vec![0.0; Self::param_count(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn hermitian(&self) -> CMatrix {
        let n = self.dim;
        let mut h = CMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = Complex64::new(self.params[i], 0.0);
        }
        let mut t = n;
        for i in 0..n {
            for j in (i + 1)..n {
                let z = Complex64::new(self.params[t], self.params[t + 1]);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
                t += 2;
            }
        }
        h
    }
}

/// Rank-1 projectors onto the columns of `exp(iH)`.
pub fn projective_from_params(p: &ProjectiveParam) -> Povm {
    let h = p.hermitian();
    let eig = matcore::herm_eig(&h).expect("parameterized matrix is Hermitian by construction");
    let u = eig.apply_fn(|lam| Complex64::new(0.0, lam).exp());
    let elements = (0..p.dim).map(|j| matcore::outer(&u.column(j))).collect();
    Povm {
        elements,
        labels: (0..p.dim).collect(),
    }
}
