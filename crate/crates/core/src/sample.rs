//! Deterministic random quantum objects.
//!
//! Everything here is driven by a caller-supplied ChaCha8 stream so tests,
//! benchmarks, and the library's own randomized checks are reproducible from
//! a single seed.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{self, CMatrix};
use crate::povm::{projective_from_params, Povm, ProjectiveParam};
use crate::states::{DensityMatrix, ParameterizedFamily};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng))
}

/// GUE-style random Hermitian matrix `(G + G†)/2`.
pub fn hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = gaussian_matrix(dim, rng);
    g.add(&g.dagger()).scale_re(0.5)
}

/// Haar-like random unitary `exp(iH)` from a Gaussian Hermitian generator.
pub fn unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let h = hermitian(dim, rng);
    matcore::herm_eig(&h)
        .expect("Hermitian by construction")
        .apply_fn(|lam| Complex64::new(0.0, lam).exp())
}

/// Normalized Gaussian state vector.
pub fn pure_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let norm = matcore::vec_norm(&v);
        if norm > 1e-6 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Wishart-style random mixed state `GG†/tr(GG†)`.
pub fn density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = gaussian_matrix(dim, rng);
    let psd = g.matmul(&g.dagger());
    let mat = psd.scale_re(1.0 / psd.trace().re);
    DensityMatrix::new(mat, None).expect("normalized PSD matrix is a state")
}

/// Random mixed state kept away from rank deficiency by an identity floor.
pub fn density_full_rank(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = gaussian_matrix(dim, rng);
    let psd = g
        .matmul(&g.dagger())
        .add(&CMatrix::identity(dim).scale_re(0.2 * dim as f64));
    let mat = psd.scale_re(1.0 / psd.trace().re);
    DensityMatrix::new(mat, None).expect("floored PSD matrix is a state")
}

/// Random unitary-orbit family: full-rank initial state, Gaussian generator.
pub fn generator_family(dim: usize, rng: &mut ChaCha8Rng) -> ParameterizedFamily {
    let rho0 = density_full_rank(dim, rng);
    let gen = hermitian(dim, rng);
    ParameterizedFamily::generator(rho0, gen).expect("sampled generator is Hermitian")
}

/// Random projective measurement through the `exp(iH)` chart.
pub fn projective(dim: usize, rng: &mut ChaCha8Rng) -> Povm {
    let params: Vec<f64> = (0..ProjectiveParam::param_count(dim))
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    projective_from_params(&ProjectiveParam::new(dim, params).expect("count matches dim"))
}

/// Random `outcomes`-element POVM: Wishart elements whitened by the inverse
/// square root of their sum, so completeness is exact up to rounding.
pub fn povm(dim: usize, outcomes: usize, rng: &mut ChaCha8Rng) -> Povm {
    assert!(outcomes >= 2, "a POVM needs at least two outcomes");
    let raws: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian_matrix(dim, rng);
            g.matmul(&g.dagger())
        })
        .collect();
    let mut sum = CMatrix::zeros(dim, dim);
    for r in &raws {
        sum = sum.add(r);
    }
    let inv_sqrt = matcore::herm_eig(&sum)
        .expect("sum of PSD matrices is Hermitian")
        .apply_fn(|lam| Complex64::new(1.0 / lam.max(1e-300).sqrt(), 0.0));
    let elements = raws
        .iter()
        .map(|r| inv_sqrt.matmul(r).matmul(&inv_sqrt).hermitize())
        .collect();
    Povm::validated(elements).expect("whitened Wishart set is a POVM")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_objects_validate() {
        let mut r = rng(17);
        for dim in 2..=4 {
            let u = unitary(dim, &mut r);
            let id = CMatrix::identity(dim);
            assert!(u.dagger().matmul(&u).approx_eq(&id, 1e-12));

            let rho = density_full_rank(dim, &mut r);
            let eig = matcore::herm_eig(rho.mat()).unwrap();
            assert!(eig.eigenvalues[0] > 0.01, "not full rank: {:?}", eig.eigenvalues);

            let m = povm(dim, dim + 1, &mut r);
            assert!(m.validate().unwrap().pass);

            let p = projective(dim, &mut r);
            assert!(p.validate().unwrap().pass);
        }
    }

    #[test]
    fn same_seed_reproduces_the_stream() {
        let a = density(3, &mut rng(5));
        let b = density(3, &mut rng(5));
        assert!(a.mat().max_abs_diff(b.mat()) == 0.0);
    }
}
