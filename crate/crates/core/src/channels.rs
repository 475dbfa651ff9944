//! Quantum channels in Kraus form and family flows through them.
//!
//! A channel acts on states as `ρ ↦ Σ_k E_k ρ E_k†` with `Σ_k E_k† E_k = 1`.
//! Pushing a parameterized family through a channel gives a new family whose
//! derivative is the channel image of the original derivative, so the whole
//! hierarchy can be traced along a sequence of channels. Information never
//! increases under a channel, and moving it between locally accessible and
//! globally shared form is exactly what entangling channels do; the flow
//! trace makes that visible step by step.

use num_complex::Complex64;

use crate::fisher::{hierarchy_report, HierarchyOptions, HierarchyReport};
use crate::matcore::{kron, paulis, BipartiteDims, CMatrix};
use crate::states::{DensityMatrix, ParameterizedFamily};
use crate::{Error, Result};

/// Largest allowed deviation of `Σ E† E` from the identity.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-9;
/// Largest allowed deviation of a supplied unitary from unitarity.
pub const UNITARY_BLOCK_TOL: f64 = 1e-9;

/// A completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
    dim_in: usize,
    dim_out: usize,
    label: String,
}

impl QuantumChannel {
    /// Builds a channel from Kraus operators, checking trace preservation.
    pub fn new(kraus: Vec<CMatrix>, label: impl Into<String>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidSpec(
                "a channel needs at least one Kraus operator".into(),
            ));
        }
        let dim_out = kraus[0].rows();
        let dim_in = kraus[0].cols();
        for e in &kraus {
            if e.rows() != dim_out || e.cols() != dim_in {
                return Err(Error::DimMismatch(format!(
                    "Kraus operators disagree in shape: {}x{} vs {}x{}",
                    e.rows(),
                    e.cols(),
                    dim_out,
                    dim_in
                )));
            }
        }
        let mut sum = CMatrix::zeros(dim_in, dim_in);
        for e in &kraus {
            sum = sum.add(&e.dagger().matmul(e));
        }
        let residual = sum.max_abs_diff(&CMatrix::identity(dim_in));
        if residual > TRACE_PRESERVATION_TOL {
            return Err(Error::NotTracePreserving(residual));
        }
        Ok(QuantumChannel {
            kraus,
            dim_in,
            dim_out,
            label: label.into(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        QuantumChannel {
            kraus: vec![CMatrix::identity(dim)],
            dim_in: dim,
            dim_out: dim,
            label: "identity".into(),
        }
    }

    /// Unitary conjugation `ρ ↦ U ρ U†`.
    pub fn unitary(u: CMatrix, label: impl Into<String>) -> Result<Self> {
        if u.rows() != u.cols() {
            return Err(Error::DimMismatch(format!(
                "unitary must be square, got {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        let dim = u.rows();
        let residual = u.dagger().matmul(&u).max_abs_diff(&CMatrix::identity(dim));
        if residual > UNITARY_BLOCK_TOL {
            return Err(Error::NotUnitaryBlock { index: 0, residual });
        }
        Ok(QuantumChannel {
            kraus: vec![u],
            dim_in: dim,
            dim_out: dim,
            label: label.into(),
        })
    }

    /// Controlled NOT on a qubit pair, first party controlling the second.
    pub fn cnot() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let mut u = CMatrix::zeros(4, 4);
        u[(0, 0)] = one;
        u[(1, 1)] = one;
        u[(2, 3)] = one;
        u[(3, 2)] = one;
        QuantumChannel {
            kraus: vec![u],
            dim_in: 4,
            dim_out: 4,
            label: "cnot".into(),
        }
    }

    /// Qubit depolarizing channel
    /// `ρ ↦ (1 - 3q/4) ρ + (q/4)(XρX + YρY + ZρZ)` for `q` in `[0, 4/3]`;
    /// `q = 1` sends every state to the maximally mixed one.
    pub fn depolarizing(q: f64) -> Result<Self> {
        if !(0.0..=4.0 / 3.0).contains(&q) {
            return Err(Error::InvalidSpec(format!(
                "depolarizing strength {q} outside [0, 4/3]"
            )));
        }
        let keep = (1.0 - 0.75 * q).max(0.0).sqrt();
        let flip = (0.25 * q).sqrt();
        let mut kraus = vec![CMatrix::identity(2).scale_re(keep)];
        for p in paulis() {
            kraus.push(p.scale_re(flip));
        }
        Ok(QuantumChannel {
            kraus,
            dim_in: 2,
            dim_out: 2,
            label: format!("depolarizing({q})"),
        })
    }

    /// Unitary controlled by the first party's computational basis:
    /// `Σ_c |c⟩⟨c| ⊗ U_c`, one block per control level.
    pub fn conditional_unitary(dims: BipartiteDims, unitaries: &[CMatrix]) -> Result<Self> {
        if unitaries.len() != dims.dim_a {
            return Err(Error::MissingConditional {
                got: unitaries.len(),
                want: dims.dim_a,
            });
        }
        let db = dims.dim_b;
        let id = CMatrix::identity(db);
        let mut u = CMatrix::zeros(dims.total(), dims.total());
        for (c, block) in unitaries.iter().enumerate() {
            if block.rows() != db || block.cols() != db {
                return Err(Error::DimMismatch(format!(
                    "conditional block {c} is {}x{}, expected {db}x{db}",
                    block.rows(),
                    block.cols()
                )));
            }
            let residual = block.dagger().matmul(block).max_abs_diff(&id);
            if residual > UNITARY_BLOCK_TOL {
                return Err(Error::NotUnitaryBlock { index: c, residual });
            }
            for i in 0..db {
                for j in 0..db {
                    u[(c * db + i, c * db + j)] = block[(i, j)];
                }
            }
        }
        Ok(QuantumChannel {
            kraus: vec![u],
            dim_in: dims.total(),
            dim_out: dims.total(),
            label: "conditional_unitary".into(),
        })
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Schrödinger action on an arbitrary operator: `Σ E x E†`.
    pub fn apply_op(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "channel expects {0}x{0} input, got {1}x{2}",
                self.dim_in,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for e in &self.kraus {
            out = out.add(&e.matmul(x).matmul(&e.dagger()));
        }
        Ok(out)
    }

    /// Channel action on a state, revalidated on the way out.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_op(rho.mat())?;
        let dims = if self.dim_in == self.dim_out {
            rho.dims()
        } else {
            None
        };
        DensityMatrix::new(out, dims)
    }

    /// Heisenberg action on an observable: `Σ E† m E`. It is dual to
    /// [`apply_op`](Self::apply_op): `tr(E(ρ) m) = tr(ρ E†(m))`, so it pulls
    /// measurements back through the channel.
    pub fn adjoint_apply(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.rows() != self.dim_out || m.cols() != self.dim_out {
            return Err(Error::DimMismatch(format!(
                "channel adjoint expects {0}x{0} input, got {1}x{2}",
                self.dim_out,
                m.rows(),
                m.cols()
            )));
        }
        let mut out = CMatrix::zeros(self.dim_in, self.dim_in);
        for e in &self.kraus {
            out = out.add(&e.dagger().matmul(m).matmul(e));
        }
        Ok(out)
    }
}

/// Independent channels on the two parties, acting as `E_A ⊗ E_B`.
pub fn local_channel(cha: &QuantumChannel, chb: &QuantumChannel) -> Result<QuantumChannel> {
    let mut kraus = Vec::with_capacity(cha.kraus.len() * chb.kraus.len());
    for ea in &cha.kraus {
        for eb in &chb.kraus {
            kraus.push(kron(ea, eb));
        }
    }
    QuantumChannel::new(kraus, format!("{} x {}", cha.label, chb.label))
}

/// The image family `θ ↦ E(ρ_θ)`. Square channels inherit the base
/// family's bipartite split.
pub fn push_family(f: &ParameterizedFamily, ch: &QuantumChannel) -> Result<ParameterizedFamily> {
    if f.dim() != ch.dim_in {
        return Err(Error::DimMismatch(format!(
            "family dimension {} does not match channel input {}",
            f.dim(),
            ch.dim_in
        )));
    }
    let dims = if ch.dim_in == ch.dim_out {
        f.dims()
    } else {
        None
    };
    Ok(ParameterizedFamily::mapped(
        f.clone(),
        ch.kraus.clone(),
        dims,
        ch.label.clone(),
    ))
}

/// One stage of a channel flow: the family after `label`, measured.
#[derive(Clone, Debug)]
pub struct FlowStep {
    pub label: String,
    pub report: HierarchyReport,
}

/// Hierarchy reports along a channel sequence, starting from the untouched
/// family at step 0.
#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub steps: Vec<FlowStep>,
}

impl FlowTrace {
    /// True when no report's global value rises along the flow (beyond
    /// `slack`). Channels cannot create information about the parameter.
    pub fn global_monotone(&self, slack: f64) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[1].report.fi_global.value <= w[0].report.fi_global.value + slack)
    }
}

/// Pushes the family through `channels` in order, reporting the full
/// hierarchy before any channel and after each one. Every channel must
/// preserve the joint dimension so the bipartite split stays meaningful.
pub fn flow_trace(
    f: &ParameterizedFamily,
    theta: f64,
    dims: BipartiteDims,
    channels: &[QuantumChannel],
    opts: &HierarchyOptions,
) -> Result<FlowTrace> {
    let mut steps = vec![FlowStep {
        label: "initial".into(),
        report: hierarchy_report(f, theta, dims, opts)?,
    }];
    let mut current = f.clone();
    for ch in channels {
        if ch.dim_in != dims.total() || ch.dim_out != dims.total() {
            return Err(Error::DimMismatch(format!(
                "flow channel '{}' maps {} -> {}, expected {2} -> {2} to keep the split",
                ch.label,
                ch.dim_in,
                dims.total()
            )));
        }
        current = push_family(&current, ch)?;
        steps.push(FlowStep {
            label: ch.label.clone(),
            report: hierarchy_report(&current, theta, dims, opts)?,
        });
    }
    Ok(FlowTrace { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::OptimizerOptions;
    use crate::matcore::Party;
    use crate::sample;
    use crate::states::make_builtin;

    const TOL: f64 = 1e-12;

    fn dims22() -> BipartiteDims {
        BipartiteDims { dim_a: 2, dim_b: 2 }
    }

    fn bernoulli_times_zero() -> ParameterizedFamily {
        let zero = DensityMatrix::from_pure(
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            None,
        )
        .unwrap();
        let constant = ParameterizedFamily::generator(zero, CMatrix::zeros(2, 2)).unwrap();
        ParameterizedFamily::product_of(make_builtin("bernoulli_qubit").unwrap(), constant)
    }

    #[test]
    fn kraus_sets_must_resolve_the_identity() {
        let half = CMatrix::identity(2).scale_re(0.5);
        let err = QuantumChannel::new(vec![half], "lossy").unwrap_err();
        assert!(matches!(err, Error::NotTracePreserving(r) if r > 0.5));
    }

    #[test]
    fn non_unitary_blocks_are_rejected_with_their_index() {
        let x = paulis()[0].clone();
        let bad = x.scale_re(0.9);
        let err = QuantumChannel::conditional_unitary(dims22(), &[x, bad]).unwrap_err();
        assert!(matches!(err, Error::NotUnitaryBlock { index: 1, .. }));
        let err = QuantumChannel::conditional_unitary(dims22(), &[CMatrix::identity(2)]).unwrap_err();
        assert!(matches!(err, Error::MissingConditional { got: 1, want: 2 }));
    }

    #[test]
    fn depolarizing_at_full_strength_erases_every_state() {
        let ch = QuantumChannel::depolarizing(1.0).unwrap();
        let mut rng = sample::rng(5);
        for _ in 0..5 {
            let rho = sample::density_full_rank(2, &mut rng);
            let out = ch.apply(&rho).unwrap();
            let mixed = CMatrix::identity(2).scale_re(0.5);
            assert!(out.mat().max_abs_diff(&mixed) < TOL);
        }
        assert!(QuantumChannel::depolarizing(-0.1).is_err());
        assert!(QuantumChannel::depolarizing(1.4).is_err());
    }

    #[test]
    fn heisenberg_picture_is_dual_to_schroedinger() {
        let mut rng = sample::rng(11);
        let channels = vec![
            QuantumChannel::cnot(),
            local_channel(
                &QuantumChannel::depolarizing(0.37).unwrap(),
                &QuantumChannel::unitary(sample::unitary(2, &mut rng), "u").unwrap(),
            )
            .unwrap(),
            QuantumChannel::conditional_unitary(dims22(), &[CMatrix::identity(2), paulis()[0].clone()])
                .unwrap(),
        ];
        for ch in &channels {
            for seed in 0..5 {
                let mut rng = sample::rng(100 + seed);
                let rho = sample::density_full_rank(4, &mut rng);
                let m = sample::hermitian(4, &mut rng);
                let lhs = ch.apply_op(rho.mat()).unwrap().trace_product(&m);
                let rhs = rho.mat().trace_product(&ch.adjoint_apply(&m).unwrap());
                assert!((lhs - rhs).norm() < 1e-10, "{}: {lhs} vs {rhs}", ch.label());
            }
        }
    }

    #[test]
    fn cnot_swaps_the_phase_product_and_entangled_families() {
        let cnot = QuantumChannel::cnot();
        let product = make_builtin("plus_phase_times_zero").unwrap();
        let entangled = make_builtin("bell_phase").unwrap();
        let forward = push_family(&product, &cnot).unwrap();
        let backward = push_family(&entangled, &cnot).unwrap();
        for theta in [0.0, 0.7, std::f64::consts::FRAC_PI_3, 2.9] {
            let f = forward.eval(theta).unwrap();
            let e = entangled.eval(theta).unwrap();
            assert!(f.mat().max_abs_diff(e.mat()) < TOL);
            let b = backward.eval(theta).unwrap();
            let p = product.eval(theta).unwrap();
            assert!(b.mat().max_abs_diff(p.mat()) < TOL);
        }
        // Conjugating twice is the identity.
        let twice = push_family(&forward, &cnot).unwrap();
        let back = twice.eval(0.4).unwrap();
        assert!(back.mat().max_abs_diff(product.eval(0.4).unwrap().mat()) < TOL);
    }

    #[test]
    fn controlled_flip_turns_a_private_coin_into_a_shared_record() {
        let ch = QuantumChannel::conditional_unitary(
            dims22(),
            &[CMatrix::identity(2), paulis()[0].clone()],
        )
        .unwrap();
        let moved = push_family(&bernoulli_times_zero(), &ch).unwrap();
        let target = make_builtin("cc_bernoulli").unwrap();
        for theta in [0.2, 0.3, 0.5, 0.8] {
            let lhs = moved.eval(theta).unwrap();
            let rhs = target.eval(theta).unwrap();
            assert!(lhs.mat().max_abs_diff(rhs.mat()) < TOL, "theta {theta}");
            let dl = moved.derivative_auto(theta, 1e-5).unwrap();
            let dr = target.derivative_auto(theta, 1e-5).unwrap();
            assert!(dl.max_abs_diff(&dr) < 1e-9, "derivative at {theta}");
        }
    }

    #[test]
    fn channel_on_one_party_leaves_the_other_marginal_alone() {
        let mut rng = sample::rng(21);
        let noise = local_channel(
            &QuantumChannel::identity(2),
            &QuantumChannel::depolarizing(0.3).unwrap(),
        )
        .unwrap();
        for _ in 0..5 {
            let rho = sample::density_full_rank(4, &mut rng);
            let rho = DensityMatrix::new(rho.mat().clone(), Some(dims22())).unwrap();
            let out = noise.apply(&rho).unwrap();
            let before = rho.reduced(Party::A).unwrap();
            let after = out.reduced(Party::A).unwrap();
            assert!(before.mat().max_abs_diff(after.mat()) < 1e-10);
        }
    }

    #[test]
    fn flow_trace_starts_from_the_untouched_report() {
        let opts = HierarchyOptions {
            optimizer: OptimizerOptions {
                starts: 4,
                max_evals: 400,
                ..Default::default()
            },
            ..Default::default()
        };
        let f = make_builtin("plus_phase_times_zero").unwrap();
        let theta = 0.6;
        let direct = hierarchy_report(&f, theta, dims22(), &opts).unwrap();
        let trace = flow_trace(&f, theta, dims22(), &[QuantumChannel::cnot()], &opts).unwrap();
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(trace.steps[0].label, "initial");
        assert_eq!(trace.steps[1].label, "cnot");
        assert_eq!(trace.steps[0].report.values(), direct.values());
        // The controlled flip moves the information from party A into
        // correlations: locals drop to zero, the global value is unchanged.
        let after = &trace.steps[1].report;
        assert!((trace.steps[0].report.fi_local_a.value - 1.0).abs() < 1e-9);
        assert!(after.fi_local_a.value.abs() < 1e-9);
        assert!(after.fi_local_b.value.abs() < 1e-9);
        assert!((after.fi_global.value - 1.0).abs() < 1e-9);
        assert!(trace.global_monotone(1e-9));
    }

    #[test]
    fn flows_reject_dimension_changing_channels() {
        let f = make_builtin("bell_phase").unwrap();
        let err = flow_trace(
            &f,
            0.3,
            dims22(),
            &[QuantumChannel::depolarizing(0.2).unwrap()],
            &HierarchyOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimMismatch(_)));
    }
}
