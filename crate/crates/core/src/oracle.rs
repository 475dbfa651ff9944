//! Dense-grid reference values for two-qubit families.
//!
//! Rank-1 projective measurements on a qubit are in bijection with Bloch
//! directions, so sweeping a dense grid of directions enumerates them up to
//! the grid spacing. For a two-qubit state every quantity these sweeps need
//! (outcome probabilities, conditional states, conditional information) has
//! a closed form in the Bloch marginals and the correlation matrix, which
//! gives an optimizer-free cross-check for the product and adaptive class
//! values. The oracles return certified lower bounds of the same kind as
//! the optimizer: every grid point is a physical measurement.

use crate::fisher::{FamilyPoint, NumericOptions};
use crate::matcore::{kron, paulis, CMatrix, Party};
use crate::povm::AdaptiveDirection;
use crate::states::ParameterizedFamily;
use crate::{Error, Result};

pub const DEFAULT_POLAR: usize = 64;
pub const DEFAULT_AZIMUTHAL: usize = 128;

/// Below this distance from a pure state the curvature term of the qubit
/// information formula is dropped (its numerator vanishes there too).
const PURITY_FLOOR: f64 = 1e-12;

/// Angular resolution of the direction grid: `polar + 1` latitudes by
/// `azimuthal` longitudes, with the poles stored once.
#[derive(Clone, Copy, Debug)]
pub struct GridResolution {
    pub polar: usize,
    pub azimuthal: usize,
}

impl Default for GridResolution {
    fn default() -> Self {
        GridResolution {
            polar: DEFAULT_POLAR,
            azimuthal: DEFAULT_AZIMUTHAL,
        }
    }
}

/// Best value found on the grid, with the winning direction(s).
#[derive(Clone, Copy, Debug)]
pub struct OracleValue {
    pub value: f64,
    pub first_direction: [f64; 3],
    /// Second-party direction for the product sweep; the adaptive sweep has
    /// none (its second stage is chosen in closed form per outcome).
    pub second_direction: Option<[f64; 3]>,
}

/// Unit vectors covering the sphere at the requested resolution.
pub fn grid_directions(res: GridResolution) -> Result<Vec<[f64; 3]>> {
    if res.polar < 2 || res.azimuthal < 3 {
        return Err(Error::InvalidSpec(format!(
            "grid resolution {}x{} is too coarse to cover the sphere",
            res.polar, res.azimuthal
        )));
    }
    let mut dirs = Vec::with_capacity(2 + (res.polar - 1) * res.azimuthal);
    dirs.push([0.0, 0.0, 1.0]);
    for i in 1..res.polar {
        let theta = std::f64::consts::PI * i as f64 / res.polar as f64;
        let (sin_t, cos_t) = theta.sin_cos();
        for j in 0..res.azimuthal {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / res.azimuthal as f64;
            dirs.push([sin_t * phi.cos(), sin_t * phi.sin(), cos_t]);
        }
    }
    dirs.push([0.0, 0.0, -1.0]);
    Ok(dirs)
}

/// Pauli expectations of a 2x2 Hermitian operator. For a density matrix
/// this is the Bloch vector; for a derivative it is the Bloch velocity.
pub fn qubit_bloch(m: &CMatrix) -> Result<[f64; 3]> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimMismatch(format!(
            "expected a 2x2 operator, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let p = paulis();
    Ok([
        m.trace_product(&p[0]).re,
        m.trace_product(&p[1]).re,
        m.trace_product(&p[2]).re,
    ])
}

/// Quantum Fisher information of a qubit family in Bloch form:
/// `|dw|^2 + (w . dw)^2 / (1 - |w|^2)`, the curvature term dropped on the
/// pure-state boundary where both its numerator and denominator vanish.
pub fn qubit_qfi_bloch(w: [f64; 3], dw: [f64; 3]) -> f64 {
    let dw2 = dw[0] * dw[0] + dw[1] * dw[1] + dw[2] * dw[2];
    let wdw = w[0] * dw[0] + w[1] * dw[1] + w[2] * dw[2];
    let s2 = 1.0 - (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    if s2 > PURITY_FLOOR {
        dw2 + wdw * wdw / s2
    } else {
        dw2
    }
}

/// Closed-form qubit information from the state and its derivative.
pub fn qubit_qfi(rho: &CMatrix, drho: &CMatrix) -> Result<f64> {
    Ok(qubit_qfi_bloch(qubit_bloch(rho)?, qubit_bloch(drho)?))
}

/// Bloch marginals and correlation matrix of a 4x4 operator on 2 x 2.
struct PauliData {
    r_a: [f64; 3],
    r_b: [f64; 3],
    t: [[f64; 3]; 3],
}

fn pauli_data(m: &CMatrix) -> PauliData {
    let p = paulis();
    let id = CMatrix::identity(2);
    let mut out = PauliData {
        r_a: [0.0; 3],
        r_b: [0.0; 3],
        t: [[0.0; 3]; 3],
    };
    for i in 0..3 {
        out.r_a[i] = m.trace_product(&kron(&p[i], &id)).re;
        out.r_b[i] = m.trace_product(&kron(&id, &p[i])).re;
        for j in 0..3 {
            out.t[i][j] = m.trace_product(&kron(&p[i], &p[j])).re;
        }
    }
    out
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `d^T t` for a row contraction, `t d` for a column contraction.
fn contract_rows(d: &[f64; 3], t: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for j in 0..3 {
        out[j] = d[0] * t[0][j] + d[1] * t[1][j] + d[2] * t[2][j];
    }
    out
}

fn contract_cols(t: &[[f64; 3]; 3], d: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = t[i][0] * d[0] + t[i][1] * d[1] + t[i][2] * d[2];
    }
    out
}

fn two_qubit_point(
    f: &ParameterizedFamily,
    theta: f64,
    numeric: &NumericOptions,
) -> Result<(PauliData, PauliData)> {
    if f.dim() != 4 {
        return Err(Error::DimMismatch(format!(
            "grid oracles cover two-qubit families only, got dimension {}",
            f.dim()
        )));
    }
    let point = FamilyPoint::new(f, theta, numeric)?;
    Ok((pauli_data(point.rho.mat()), pauli_data(&point.drho)))
}

fn no_feasible_direction() -> Error {
    Error::SingularOutcome {
        outcome: 0,
        p: 0.0,
        dp: f64::INFINITY,
        p_tol: 0.0,
    }
}

/// Sweeps all pairs of local projective bases and reports the best
/// classical Fisher information of the induced four-outcome measurement.
pub fn product_grid_oracle(
    f: &ParameterizedFamily,
    theta: f64,
    res: GridResolution,
    numeric: &NumericOptions,
) -> Result<OracleValue> {
    let (rho, drho) = two_qubit_point(f, theta, numeric)?;
    let dirs = grid_directions(res)?;
    let p_tol = numeric.p_tol;
    let dp_guard = p_tol.sqrt();

    // Per-direction first-party data, hoisted out of the quadratic loop.
    struct SideA {
        ara: f64,
        adra: f64,
        arow: [f64; 3],
        adrow: [f64; 3],
    }
    let side_a: Vec<SideA> = dirs
        .iter()
        .map(|d| SideA {
            ara: dot(d, &rho.r_a),
            adra: dot(d, &drho.r_a),
            arow: contract_rows(d, &rho.t),
            adrow: contract_rows(d, &drho.t),
        })
        .collect();
    let side_b: Vec<(f64, f64)> = dirs
        .iter()
        .map(|d| (dot(d, &rho.r_b), dot(d, &drho.r_b)))
        .collect();

    let mut best = f64::NEG_INFINITY;
    let mut best_pair = (0usize, 0usize);
    for (ia, a) in side_a.iter().enumerate() {
        for (ib, d_b) in dirs.iter().enumerate() {
            let (brb, bdrb) = side_b[ib];
            let atb = dot(&a.arow, d_b);
            let adtb = dot(&a.adrow, d_b);
            let mut fi = 0.0;
            let mut feasible = true;
            for (s, t) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let p = 0.25 * (1.0 + s * a.ara + t * brb + s * t * atb);
                let dp = 0.25 * (s * a.adra + t * bdrb + s * t * adtb);
                if p < p_tol {
                    if dp.abs() >= dp_guard {
                        feasible = false;
                        break;
                    }
                    continue;
                }
                fi += dp * dp / p;
            }
            if feasible && fi > best {
                best = fi;
                best_pair = (ia, ib);
            }
        }
    }
    if !best.is_finite() {
        return Err(no_feasible_direction());
    }
    Ok(OracleValue {
        value: best,
        first_direction: dirs[best_pair.0],
        second_direction: Some(dirs[best_pair.1]),
    })
}

/// Sweeps first-stage projective bases on the measured party and reports
/// the best two-stage value: first-stage classical information plus the
/// probability-weighted quantum information of the conditional states of
/// the other party, which an outcome-adapted second stage attains.
pub fn adaptive_grid_oracle(
    f: &ParameterizedFamily,
    theta: f64,
    direction: AdaptiveDirection,
    res: GridResolution,
    numeric: &NumericOptions,
) -> Result<OracleValue> {
    let (rho, drho) = two_qubit_point(f, theta, numeric)?;
    let dirs = grid_directions(res)?;
    let p_tol = numeric.p_tol;
    let dp_guard = p_tol.sqrt();
    let measured = direction.first_party();

    let mut best = f64::NEG_INFINITY;
    let mut best_dir = 0usize;
    for (idx, d) in dirs.iter().enumerate() {
        // Outcome probabilities of the binary first stage and the Pauli
        // expectations of the unnormalized conditional states.
        let (r_first, dr_first) = match measured {
            Party::A => (&rho.r_a, &drho.r_a),
            Party::B => (&rho.r_b, &drho.r_b),
        };
        let proj = dot(d, r_first);
        let dproj = dot(d, dr_first);
        let (v_corr, dv_corr, r_other, dr_other) = match measured {
            Party::A => (
                contract_rows(d, &rho.t),
                contract_rows(d, &drho.t),
                &rho.r_b,
                &drho.r_b,
            ),
            Party::B => (
                contract_cols(&rho.t, d),
                contract_cols(&drho.t, d),
                &rho.r_a,
                &drho.r_a,
            ),
        };

        let mut total = 0.0;
        let mut feasible = true;
        for s in [1.0, -1.0] {
            let p = 0.5 * (1.0 + s * proj);
            let dp = 0.5 * s * dproj;
            if p < p_tol {
                if dp.abs() >= dp_guard {
                    feasible = false;
                    break;
                }
                continue;
            }
            total += dp * dp / p;
            let mut w = [0.0; 3];
            let mut dw = [0.0; 3];
            for k in 0..3 {
                w[k] = 0.5 * (r_other[k] + s * v_corr[k]) / p;
                dw[k] = (0.5 * (dr_other[k] + s * dv_corr[k]) - dp * w[k]) / p;
            }
            total += p * qubit_qfi_bloch(w, dw);
        }
        if feasible && total > best {
            best = total;
            best_dir = idx;
        }
    }
    if !best.is_finite() {
        return Err(no_feasible_direction());
    }
    Ok(OracleValue {
        value: best,
        first_direction: dirs[best_dir],
        second_direction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::sld;
    use crate::sample;
    use crate::states::make_builtin;

    const TOL: f64 = 1e-9;

    fn small() -> GridResolution {
        GridResolution {
            polar: 8,
            azimuthal: 16,
        }
    }

    #[test]
    fn direction_grid_covers_poles_once_and_stays_normalized() {
        let dirs = grid_directions(small()).unwrap();
        assert_eq!(dirs.len(), 2 + 7 * 16);
        for d in &dirs {
            let n = dot(d, d);
            assert!((n - 1.0).abs() < 1e-12);
        }
        let poles = dirs.iter().filter(|d| d[2].abs() > 1.0 - 1e-12).count();
        assert_eq!(poles, 2);
    }

    #[test]
    fn qubit_closed_form_matches_the_sld_value() {
        for seed in 0..20 {
            let mut rng = sample::rng(seed);
            let f = sample::generator_family(2, &mut rng);
            let point = FamilyPoint::new(&f, 0.4, &NumericOptions::default()).unwrap();
            let expect = sld(&point.rho, &point.drho, 1e-10).unwrap().qfi;
            let got = qubit_qfi(point.rho.mat(), &point.drho).unwrap();
            assert!(
                (got - expect).abs() < 1e-8,
                "seed {seed}: bloch {got} vs sld {expect}"
            );
        }
    }

    #[test]
    fn qubit_closed_form_handles_pure_phase_states() {
        // (|0> + e^{i theta} |1>)/sqrt(2): unit information at every angle.
        let theta: f64 = 0.9;
        let w = [theta.cos(), theta.sin(), 0.0];
        let dw = [-theta.sin(), theta.cos(), 0.0];
        assert!((qubit_qfi_bloch(w, dw) - 1.0).abs() < TOL);
    }

    #[test]
    fn product_sweep_recovers_coin_flip_information() {
        // The best basis pair is computational on both sides, which sits at
        // the grid poles, so the coarse grid is exact here.
        let f = make_builtin("cc_bernoulli").unwrap();
        let v = product_grid_oracle(&f, 0.5, small(), &NumericOptions::default()).unwrap();
        assert!((v.value - 4.0).abs() < TOL, "value {}", v.value);
        assert!(v.first_direction[2].abs() > 1.0 - 1e-12);
    }

    #[test]
    fn product_sweep_extracts_phase_information_on_the_equator() {
        // Any pair of equatorial bases whose azimuths do not sum to the
        // phase exactly attains the full value, so the sweep hits it.
        let f = make_builtin("bell_phase").unwrap();
        let v = product_grid_oracle(
            &f,
            std::f64::consts::FRAC_PI_3,
            GridResolution {
                polar: 16,
                azimuthal: 32,
            },
            &NumericOptions::default(),
        )
        .unwrap();
        assert!((v.value - 1.0).abs() < TOL, "value {}", v.value);
    }

    #[test]
    fn adaptive_sweep_recovers_full_information_on_the_phase_family() {
        // A first stage along x leaves pure conditional phase states on the
        // unmeasured party; their conditional information restores the full
        // unit value in both directions.
        let f = make_builtin("bell_phase").unwrap();
        for direction in [AdaptiveDirection::AToB, AdaptiveDirection::BToA] {
            let v = adaptive_grid_oracle(
                &f,
                std::f64::consts::FRAC_PI_3,
                direction,
                small(),
                &NumericOptions::default(),
            )
            .unwrap();
            assert!((v.value - 1.0).abs() < TOL, "value {}", v.value);
            assert!(v.second_direction.is_none());
        }
    }

    #[test]
    fn adaptive_sweep_matches_amplitude_family_value() {
        let f = make_builtin("cossin").unwrap();
        let v = adaptive_grid_oracle(
            &f,
            1.1,
            AdaptiveDirection::AToB,
            small(),
            &NumericOptions::default(),
        )
        .unwrap();
        assert!((v.value - 1.0).abs() < TOL, "value {}", v.value);
    }

    #[test]
    fn sweeps_reject_families_of_other_dimensions() {
        let f = make_builtin("bernoulli_qubit").unwrap();
        let err = product_grid_oracle(&f, 0.3, small(), &NumericOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DimMismatch(_)));
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let err = grid_directions(GridResolution {
            polar: 1,
            azimuthal: 2,
        })
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
    }
}
