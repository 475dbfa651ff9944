//! Dense complex matrices and the Hermitian eigensolver.
//!
//! Everything downstream works at desk scale (dimensions up to a few dozen),
//! so the representation is a plain row-major `Vec<Complex64>` and the
//! eigensolver is cyclic Jacobi with exact 2×2 Hermitian subproblems. Jacobi
//! keeps the accumulated transform unitary to machine precision and, with the
//! fixed sweep order and deterministic sorting below, gives bit-reproducible
//! decompositions.

pub use num_complex::Complex64;

use crate::{Error, Result};

/// Hermiticity tolerance on eigensolver input: `max |m - m†|`.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// Sweep cap for the Jacobi iteration; exceeded means `NoConvergence`.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Off-diagonal Frobenius threshold, relative to the input norm.
pub const OFF_DIAGONAL_REL_TOL: f64 = 1e-14;

/// Which tensor factor of a bipartite operator to keep or act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Party::A => "a",
            Party::B => "b",
        }
    }
}

/// Local dimensions of a bipartite system, ordered (a, b).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BipartiteDims {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteDims {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::DimMismatch(format!(
                "bipartite dims must be positive, got ({dim_a}, {dim_b})"
            )));
        }
        Ok(BipartiteDims { dim_a, dim_b })
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn dim_of(&self, party: Party) -> usize {
        match party {
            Party::A => self.dim_a,
            Party::B => self.dim_b,
        }
    }

    /// Checks that `m` is a square operator on the joint space.
    pub fn check_operator(&self, m: &CMatrix) -> Result<()> {
        if m.rows() != self.total() || m.cols() != self.total() {
            return Err(Error::DimMismatch(format!(
                "operator is {}x{}, expected {}x{} for dims ({}, {})",
                m.rows(),
                m.cols(),
                self.total(),
                self.total(),
                self.dim_a,
                self.dim_b
            )));
        }
        Ok(())
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        CMatrix::from_diag(&diag.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn dagger(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x *= s;
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Complex64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut t = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                t += self[(i, k)] * other[(k, i)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &CMatrix, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.max_abs_diff(other) <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |m - m†|`; zero for exactly Hermitian matrices.
    pub fn hermitian_residual(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut r: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    /// `(m + m†) / 2`: projects onto the Hermitian part.
    pub fn hermitize(&self) -> CMatrix {
        debug_assert!(self.is_square());
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Applies `self` (as an operator) to a vector.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `|psi⟩⟨psi|` as a dense matrix.
pub fn outer(psi: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj())
}

/// `⟨a|b⟩` with the physics convention (conjugate-linear in the first slot).
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i1 in 0..a.rows() {
        for j1 in 0..a.cols() {
            let av = a[(i1, j1)];
            if av == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i2 in 0..b.rows() {
                for j2 in 0..b.cols() {
                    out[(i1 * b.rows() + i2, j1 * b.cols() + j2)] = av * b[(i2, j2)];
                }
            }
        }
    }
    out
}

/// The Pauli matrices, in x, y, z order.
pub fn paulis() -> [CMatrix; 3] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        CMatrix {
            rows: 2,
            cols: 2,
            data: vec![o, l, l, o],
        },
        CMatrix {
            rows: 2,
            cols: 2,
            data: vec![o, -i, i, o],
        },
        CMatrix {
            rows: 2,
            cols: 2,
            data: vec![l, o, o, -l],
        },
    ]
}

/// Partial trace of a bipartite operator, keeping the requested party.
pub fn partial_trace(m: &CMatrix, dims: BipartiteDims, keep: Party) -> Result<CMatrix> {
    dims.check_operator(m)?;
    let (da, db) = (dims.dim_a, dims.dim_b);
    match keep {
        Party::A => {
            let mut out = CMatrix::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    for k in 0..db {
                        out[(i, j)] += m[(i * db + k, j * db + k)];
                    }
                }
            }
            Ok(out)
        }
        Party::B => {
            let mut out = CMatrix::zeros(db, db);
            for k in 0..db {
                for l in 0..db {
                    for i in 0..da {
                        out[(k, l)] += m[(i * db + k, i * db + l)];
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Eigendecomposition of a Hermitian matrix: `m = V Λ V†` with real `Λ`.
///
/// Eigenvalues ascend; each eigenvector's largest-magnitude component is made
/// real positive, and exact ties in eigenvalue order are broken by the first
/// differing eigenvector component, so the decomposition is deterministic.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V Λ V†`; matches the input within the reconstruction tolerance.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        CMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj())
                .sum()
        })
    }

    /// `V f(Λ) V†` for a scalar function applied to the spectrum.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        CMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * f(self.eigenvalues[k]) * v[(j, k)].conj())
                .sum()
        })
    }
}

/// Eigendecomposition with default tolerances.
pub fn herm_eig(m: &CMatrix) -> Result<EigDecomposition> {
    herm_eig_with(m, HERMITICITY_TOL, DEFAULT_MAX_SWEEPS)
}

/// Eigendecomposition with explicit hermiticity tolerance and sweep cap.
pub fn herm_eig_with(
    m: &CMatrix,
    hermiticity_tol: f64,
    max_sweeps: usize,
) -> Result<EigDecomposition> {
    if !m.is_square() {
        return Err(Error::DimMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let residual = m.hermitian_residual();
    if residual > hermiticity_tol {
        return Err(Error::NotHermitian {
            residual,
            tol: hermiticity_tol,
        });
    }

    let n = m.rows();
    // Work on the exactly-Hermitian part so rounding in the input cannot leak
    // into complex diagonal entries.
    let mut a = m.hermitize();
    let mut v = CMatrix::identity(n);
    let off_tol = OFF_DIAGONAL_REL_TOL * a.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut converged = off_norm(&a) <= off_tol;
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= off_tol;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            off: off_norm(&a),
        });
    }

    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut columns: Vec<Vec<Complex64>> = (0..n).map(|j| v.column(j)).collect();
    for col in columns.iter_mut() {
        fix_phase(col);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eigenvalues[i]
            .total_cmp(&eigenvalues[j])
            .then_with(|| compare_columns(&columns[i], &columns[j]))
    });
    eigenvalues = order.iter().map(|&i| eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| columns[order[j]][i]);

    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Frobenius norm of the strictly off-diagonal part.
fn off_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One exact 2×2 Hermitian rotation zeroing `a[(p, q)]`.
///
/// The 2×2 block `[[α, b], [b̄, δ]]` has eigenvalues `mid ∓ r` with
/// `r = sqrt(((α-δ)/2)² + |b|²)`; the eigenvector components are computed in
/// cancellation-free form so the rotation stays unitary to machine precision.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let b = a[(p, q)];
    if b.norm() == 0.0 {
        return;
    }
    let alpha = a[(p, p)].re;
    let delta = a[(q, q)].re;
    let half_gap = (alpha - delta) / 2.0;
    let r = (half_gap * half_gap + b.norm_sqr()).sqrt();

    // t2 = λ_high - α ≥ 0 and t1 = λ_low - α ≤ 0, with the subtraction
    // rearranged so neither loses precision when |b| ≪ |half_gap|.
    let t2 = if half_gap > 0.0 {
        b.norm_sqr() / (r + half_gap)
    } else {
        r - half_gap
    };
    let t1 = if half_gap < 0.0 {
        -b.norm_sqr() / (r - half_gap)
    } else {
        -(r + half_gap)
    };

    let n1 = (b.norm_sqr() + t1 * t1).sqrt();
    let n2 = (b.norm_sqr() + t2 * t2).sqrt();
    // Rotation columns (eigenvectors of the block): low eigenvalue first so
    // the diagonal drifts toward ascending order as sweeps progress.
    let j11 = b / n1;
    let j21 = Complex64::new(t1 / n1, 0.0);
    let j12 = b / n2;
    let j22 = Complex64::new(t2 / n2, 0.0);

    let n = a.rows();
    // A ← A · J on columns p, q.
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * j11 + aiq * j21;
        a[(i, q)] = aip * j12 + aiq * j22;
    }
    // A ← J† · A on rows p, q.
    for i in 0..n {
        let api = a[(p, i)];
        let aqi = a[(q, i)];
        a[(p, i)] = j11.conj() * api + j21.conj() * aqi;
        a[(q, i)] = j12.conj() * api + j22.conj() * aqi;
    }
    // The block is now diagonal by construction; remove rotation roundoff.
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    // V ← V · J.
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * j11 + viq * j21;
        v[(i, q)] = vip * j12 + viq * j22;
    }
}

/// Rotates a column's global phase so its largest-magnitude component
/// (lowest index on ties) is real positive.
fn fix_phase(col: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = 0.0;
    for (i, z) in col.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag + 1e-15 {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag == 0.0 {
        return;
    }
    let phase = col[best] / best_mag;
    for z in col.iter_mut() {
        *z /= phase;
    }
}

/// Lexicographic order on (re, im) pairs; total and deterministic.
fn compare_columns(x: &[Complex64], y: &[Complex64]) -> std::cmp::Ordering {
    for (a, b) in x.iter().zip(y) {
        let ord = a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RECONSTRUCTION_TOL: f64 = 1e-10;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        g.add(&g.dagger()).scale_re(0.5)
    }

    #[test]
    fn eig_diagonal_matrix_is_identity_basis() {
        let m = CMatrix::from_real_diag(&[3.0, -1.0, 2.0]);
        let e = herm_eig(&m).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);
        // Columns must be the permuted standard basis with positive phase.
        assert!((e.eigenvectors[(1, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((e.eigenvectors[(2, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((e.eigenvectors[(0, 2)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eig_pauli_x_spectrum() {
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = c(1.0, 0.0);
        x[(1, 0)] = c(1.0, 0.0);
        let e = herm_eig(&x).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Phase convention: largest component real positive.
        assert!((e.eigenvectors[(0, 0)].re - s).abs() < 1e-12);
        assert!((e.eigenvectors[(1, 0)].re + s).abs() < 1e-12);
        assert!((e.eigenvectors[(0, 1)].re - s).abs() < 1e-12);
        assert!((e.eigenvectors[(1, 1)].re - s).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        match herm_eig(&m) {
            Err(Error::NotHermitian { residual, .. }) => assert!(residual > 0.9),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn eig_reconstruction_and_unitarity_across_seeds_and_dims() {
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 2 + (seed as usize % 7); // dims 2..=8
            let m = random_hermitian(dim, &mut rng);
            let e = herm_eig(&m).unwrap();

            assert!(
                e.reconstruct().max_abs_diff(&m) <= RECONSTRUCTION_TOL,
                "reconstruction failed at seed {seed} dim {dim}"
            );
            let v = &e.eigenvectors;
            let vtv = v.dagger().matmul(v);
            assert!(
                vtv.max_abs_diff(&CMatrix::identity(dim)) <= RECONSTRUCTION_TOL,
                "unitarity failed at seed {seed} dim {dim}"
            );
            for w in e.eigenvalues.windows(2) {
                assert!(w[0] <= w[1], "eigenvalues out of order at seed {seed}");
            }
        }
    }

    #[test]
    fn eig_is_deterministic_on_degenerate_spectra() {
        let m = CMatrix::identity(4).scale_re(0.25);
        let a = herm_eig(&m).unwrap();
        let b = herm_eig(&m).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert!(a.eigenvectors.max_abs_diff(&b.eigenvectors) == 0.0);
    }

    #[test]
    fn apply_fn_matches_scalar_function_on_diagonal() {
        let m = CMatrix::from_real_diag(&[1.0, 4.0]);
        let sqrt = herm_eig(&m).unwrap().apply_fn(|x| c(x.sqrt(), 0.0));
        assert!(sqrt.approx_eq(&CMatrix::from_real_diag(&[1.0, 2.0]), 1e-12));
    }

    #[test]
    fn kron_with_identity_embeds() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = c(2.0, 1.0);
        let k = kron(&a, &CMatrix::identity(2));
        assert_eq!(k.rows(), 4);
        assert!((k[(0, 2)] - c(2.0, 1.0)).norm() < 1e-15);
        assert!((k[(1, 3)] - c(2.0, 1.0)).norm() < 1e-15);
        assert!(k[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let dims = BipartiteDims::new(2, 3).unwrap();
        let m = kron(&a, &b);
        let ta = partial_trace(&m, dims, Party::A).unwrap();
        let tb = partial_trace(&m, dims, Party::B).unwrap();
        assert!(ta.approx_eq(&a.scale(b.trace()), 1e-12));
        assert!(tb.approx_eq(&b.scale(a.trace()), 1e-12));
    }

    #[test]
    fn partial_trace_of_bell_projector_is_maximally_mixed() {
        // Direct expansion of |Ψ⟩ = (|00⟩ + e^{iθ}|11⟩)/√2, no kron involved.
        let theta = 0.83;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [
            c(s, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            s * Complex64::new(0.0, theta).exp(),
        ];
        let proj = outer(&psi);
        let dims = BipartiteDims::new(2, 2).unwrap();
        let half = CMatrix::identity(2).scale_re(0.5);
        assert!(partial_trace(&proj, dims, Party::A).unwrap().approx_eq(&half, 1e-14));
        assert!(partial_trace(&proj, dims, Party::B).unwrap().approx_eq(&half, 1e-14));
    }

    #[test]
    fn partial_trace_preserves_trace_and_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = BipartiteDims::new(3, 2).unwrap();
        let x = random_hermitian(6, &mut rng);
        let y = random_hermitian(6, &mut rng);
        for keep in [Party::A, Party::B] {
            let tx = partial_trace(&x, dims, keep).unwrap();
            assert!((tx.trace() - x.trace()).norm() < 1e-12);
            let lin = partial_trace(&x.scale_re(2.0).add(&y), dims, keep).unwrap();
            let expect = tx.scale_re(2.0).add(&partial_trace(&y, dims, keep).unwrap());
            assert!(lin.approx_eq(&expect, 1e-12));
        }
    }

    proptest! {
        #[test]
        fn kron_mixed_product_identity(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(2, &mut rng);
            let b = random_hermitian(3, &mut rng);
            let cm = random_hermitian(2, &mut rng);
            let d = random_hermitian(3, &mut rng);
            // (A ⊗ B)(C ⊗ D) = AC ⊗ BD
            let lhs = kron(&a, &b).matmul(&kron(&cm, &d));
            let rhs = kron(&a.matmul(&cm), &b.matmul(&d));
            prop_assert!(lhs.approx_eq(&rhs, 1e-12));
        }

        #[test]
        fn kron_is_associative(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(2, &mut rng);
            let b = random_hermitian(2, &mut rng);
            let cm = random_hermitian(3, &mut rng);
            let lhs = kron(&kron(&a, &b), &cm);
            let rhs = kron(&a, &kron(&b, &cm));
            prop_assert!(lhs.approx_eq(&rhs, 1e-13));
        }
    }
}
