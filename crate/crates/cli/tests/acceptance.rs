//! Release gate. Every check prints one verdict line and then asserts it,
//! so `--nocapture` shows the full scorecard even when a later check trips.

use std::process::Command;
use std::time::Instant;

use serde_json::Value;

use mifi::channels::{local_channel, push_family, QuantumChannel};
use mifi::fisher::{
    adaptive_fi_explicit, adaptive_fi_given_first, classical_fi, cq_point, hierarchy_report,
    optimize_class_seeded, qfi_pure, sld, sld_basis_measurement, FamilyPoint, HierarchyOptions,
    NumericOptions,
};
use mifi::matcore::{BipartiteDims, CMatrix, Complex64, Party};
use mifi::oracle::{adaptive_grid_oracle, product_grid_oracle, GridResolution};
use mifi::povm::{AdaptiveDirection, AdaptivePovm, PovmClass};
use mifi::sample;
use mifi::states::{make_builtin, DensityMatrix, DerivScheme, ParameterizedFamily};

const BIN: &str = env!("CARGO_BIN_EXE_mifi");
const PI_THIRD: f64 = std::f64::consts::FRAC_PI_3;

fn verdict(n: usize, ok: bool, desc: &str) {
    println!("ACCEPT {n} {} — {desc}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "acceptance check {n} failed: {desc}");
}

fn dims22() -> BipartiteDims {
    BipartiteDims::new(2, 2).unwrap()
}

fn cli_json(args: &[&str]) -> Value {
    let out = Command::new(BIN)
        .args(args)
        .output()
        .expect("binary should launch");
    assert!(
        out.status.success(),
        "cli {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("cli output should be JSON")
}

fn val(report: &Value, key: &str) -> f64 {
    report["values"][key].as_f64().expect("numeric entry")
}

#[test]
fn accept_01_fully_shared_families_report_equal_information() {
    let start = Instant::now();
    let half_angle = cli_json(&["hierarchy", "--family", "cossin", "--theta", "1.1"]);
    let first_fast = start.elapsed().as_secs_f64() < 10.0;
    let flat_one = ["fi_local_a", "fi_local_b", "fi_global"]
        .iter()
        .all(|k| (val(&half_angle, k) - 1.0).abs() < 1e-6);

    let start = Instant::now();
    let coin = cli_json(&["hierarchy", "--family", "cc_bernoulli", "--theta", "0.5"]);
    let second_fast = start.elapsed().as_secs_f64() < 10.0;
    let closed_four = ["fi_local_a", "fi_local_b", "fi_global"]
        .iter()
        .all(|k| (val(&coin, k) - 4.0).abs() < 1e-8);
    let optimized_four = ["fi_product_lb", "fi_adaptive_ab_lb", "fi_adaptive_ba_lb"]
        .iter()
        .all(|k| (val(&coin, k) - 4.0).abs() < 1e-3);

    verdict(
        1,
        flat_one && closed_four && optimized_four && first_fast && second_fast,
        "fully shared families report equal local and global information",
    );
}

#[test]
fn accept_02_entangled_phase_is_invisible_locally_and_whole_globally() {
    let numeric = NumericOptions::default();
    let theta = PI_THIRD;

    // Statevector route, independent of the density-matrix machinery.
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let phase = Complex64::new(0.0, theta).exp();
    let zero = Complex64::new(0.0, 0.0);
    let psi = [Complex64::new(amp, 0.0), zero, zero, phase * amp];
    let dpsi = [zero, zero, zero, Complex64::new(0.0, 1.0) * phase * amp];
    let pure = qfi_pure(&psi, &dpsi).unwrap();

    let f = make_builtin("bell_phase").unwrap();
    let grid = product_grid_oracle(&f, theta, GridResolution::default(), &numeric)
        .unwrap()
        .value;
    let routes_agree = (pure - grid).abs() < 1e-3;

    let report = hierarchy_report(&f, theta, dims22(), &HierarchyOptions::default()).unwrap();
    let locals_zero =
        report.fi_local_a.value.abs() < 1e-9 && report.fi_local_b.value.abs() < 1e-9;
    let pinned_one = (pure - 1.0).abs() < 1e-9 && (report.fi_global.value - 1.0).abs() < 1e-9;
    let superadditive = report.is_superadditive(0.5);

    verdict(
        2,
        routes_agree && locals_zero && pinned_one && superadditive,
        "entangled phase shows zero marginal but unit global information",
    );
}

#[test]
fn accept_03_transfer_presets_move_information_between_parties() {
    let start = Instant::now();
    let copy = cli_json(&["example", "transfer-1"]);
    let hide = cli_json(&["example", "transfer-2"]);
    let reveal = cli_json(&["example", "transfer-3"]);
    let fast = start.elapsed().as_secs_f64() < 10.0;

    let step = |ex: &Value, i: usize| -> (f64, f64, f64) {
        let v = &ex["steps"][i]["values"];
        (
            v["fi_local_a"].as_f64().unwrap(),
            v["fi_local_b"].as_f64().unwrap(),
            v["fi_global"].as_f64().unwrap(),
        )
    };

    let (a0, b0, g0) = step(&hide, 0);
    let (a1, b1, g1) = step(&hide, 1);
    let hides = (a0 - 1.0).abs() < 1e-6
        && b0.abs() < 1e-9
        && a1.abs() < 1e-9
        && b1.abs() < 1e-9
        && (g0 - 1.0).abs() < 1e-6
        && (g1 - 1.0).abs() < 1e-6;

    let (a0, b0, g0) = step(&reveal, 0);
    let (a1, b1, g1) = step(&reveal, 1);
    let reveals = a0.abs() < 1e-9
        && b0.abs() < 1e-9
        && (a1 - 1.0).abs() < 1e-6
        && b1.abs() < 1e-9
        && (g0 - 1.0).abs() < 1e-6
        && (g1 - 1.0).abs() < 1e-6;

    let (a0, b0, _) = step(&copy, 0);
    let (a1, b1, _) = step(&copy, 1);
    let copies = (a1 - a0).abs() < 1e-9 && b0.abs() < 1e-9 && b1 - b0 > 1e-6;

    let verdicts = [&copy, &hide, &reveal]
        .iter()
        .all(|r| r["pass"] == Value::Bool(true));

    verdict(
        3,
        hides && reveals && copies && verdicts && fast,
        "transfer presets relocate information between the parties",
    );
}

#[test]
fn accept_04_no_measurement_beats_the_quantum_bound() {
    let start = Instant::now();
    let numeric = NumericOptions::default();
    let mut rng = sample::rng(404);
    let mut bounded = true;
    let mut attained = true;
    for trial in 0..50usize {
        let dim = if trial % 2 == 0 { 2 } else { 3 };
        let f = sample::generator_family(dim, &mut rng);
        let theta = -0.9 + 1.8 * trial as f64 / 49.0;
        let point = FamilyPoint::new(&f, theta, &numeric).unwrap();
        let s = sld(&point.rho, &point.drho, numeric.sld_tol).unwrap();
        for k in 0..200usize {
            let m = if k % 5 == 0 {
                sample::projective(dim, &mut rng)
            } else {
                sample::povm(dim, 2 + k % 3, &mut rng)
            };
            let c = classical_fi(&point.rho, &point.drho, &m, numeric.p_tol).unwrap();
            bounded &= c <= s.qfi + 1e-7;
        }
        let best = sld_basis_measurement(&s).unwrap();
        let c = classical_fi(&point.rho, &point.drho, &best, numeric.p_tol).unwrap();
        attained &= (c - s.qfi).abs() < 1e-7;
    }
    let fast = start.elapsed().as_secs_f64() < 60.0;
    verdict(
        4,
        bounded && attained && fast,
        "no sampled measurement beats the quantum bound and the eigenbasis attains it",
    );
}

#[test]
fn accept_05_random_reports_respect_the_class_chain() {
    let start = Instant::now();
    let opts = HierarchyOptions::default();
    let mut rng = sample::rng(505);
    let mut chained = true;
    let mut capped = true;
    for trial in 0..30usize {
        let f = sample::generator_family(4, &mut rng);
        let theta = -0.8 + 1.6 * trial as f64 / 29.0;
        let r = hierarchy_report(&f, theta, dims22(), &opts).unwrap();
        chained &= r.chain_ok();
        let g = r.fi_global.value;
        for v in [
            r.fi_product.value,
            r.fi_adaptive_ab.value,
            r.fi_adaptive_ba.value,
        ] {
            capped &= v <= g + 1e-6;
        }
    }
    let fast = start.elapsed().as_secs_f64() < 300.0;
    verdict(
        5,
        chained && capped && fast,
        "random bipartite reports satisfy every chain inequality",
    );
}

#[test]
fn accept_06_staged_evaluation_routes_agree() {
    let numeric = NumericOptions::default();
    let mut rng = sample::rng(606);

    // Route one: the flattened joint measurement. Route two: first-stage
    // information plus probability-weighted conditional informations.
    let mut routes_ok = true;
    for trial in 0..30usize {
        let f = sample::generator_family(4, &mut rng);
        let theta = -0.6 + 1.2 * trial as f64 / 29.0;
        let direction = if trial % 2 == 0 {
            AdaptiveDirection::AToB
        } else {
            AdaptiveDirection::BToA
        };
        let first = if trial % 3 == 0 {
            sample::povm(2, 3, &mut rng)
        } else {
            sample::projective(2, &mut rng)
        };
        let conditionals = (0..first.len())
            .map(|k| {
                if (trial + k) % 4 == 0 {
                    sample::povm(2, 2, &mut rng)
                } else {
                    sample::projective(2, &mut rng)
                }
            })
            .collect();
        let ap = AdaptivePovm::new(first, conditionals).unwrap();
        let routes = adaptive_fi_explicit(&f, theta, &ap, dims22(), direction, &numeric).unwrap();
        routes_ok &= routes.residual() < 1e-6;
    }

    // The weighted-conditional closed form must equal one flat computation
    // on the outcome-indexed block state it describes.
    let mut block_ok = true;
    for trial in 0..30usize {
        let f = sample::generator_family(4, &mut rng);
        let theta = -0.5 + trial as f64 / 29.0;
        let m = sample::projective(2, &mut rng);
        let direct =
            adaptive_fi_given_first(&f, theta, &m, dims22(), AdaptiveDirection::AToB, &numeric)
                .unwrap();

        let point = FamilyPoint::new(&f, theta, &numeric).unwrap();
        let (cq, dcq) = cq_point(&point, &m, dims22(), Party::A, &numeric).unwrap();
        let db = 2usize;
        let k = cq.probs.len();
        let mut tau = CMatrix::zeros(k * db, k * db);
        let mut dtau = CMatrix::zeros(k * db, k * db);
        for i in 0..k {
            let (cond, dcond) = (&cq.conditionals[i], &dcq.dconditionals[i]);
            if let (Some(rho_i), Some(drho_i)) = (cond.state(), dcond.as_ref()) {
                let (p, dp) = (cq.probs[i], dcq.dprobs[i]);
                for r in 0..db {
                    for c in 0..db {
                        tau[(i * db + r, i * db + c)] = rho_i.mat()[(r, c)] * p;
                        dtau[(i * db + r, i * db + c)] =
                            drho_i[(r, c)] * p + rho_i.mat()[(r, c)] * dp;
                    }
                }
            }
        }
        let block = DensityMatrix::new(tau, None).unwrap();
        let via_block = sld(&block, &dtau.hermitize(), numeric.sld_tol).unwrap().qfi;
        block_ok &= (direct - via_block).abs() < 1e-6;
    }

    verdict(
        6,
        routes_ok && block_ok,
        "staged measurement evaluation routes agree",
    );
}

#[test]
fn accept_07_local_channels_never_increase_class_values() {
    let start = Instant::now();
    let opts = HierarchyOptions::default();
    let mut rng = sample::rng(707);
    let classes = [
        PovmClass::LocalA,
        PovmClass::LocalB,
        PovmClass::Product,
        PovmClass::AdaptiveAToB,
        PovmClass::AdaptiveBToA,
        PovmClass::Global,
    ];
    let mut monotone = true;
    for trial in 0..50usize {
        let f = sample::generator_family(4, &mut rng);
        let theta = 0.2 + 0.012 * trial as f64;
        let class = classes[trial % classes.len()];

        let cha = if trial % 5 == 0 {
            QuantumChannel::unitary(sample::unitary(2, &mut rng), "rotate_a").unwrap()
        } else {
            QuantumChannel::depolarizing([0.0, 0.3, 0.8, 1.1][trial % 4]).unwrap()
        };
        let chb = if trial % 7 == 0 {
            QuantumChannel::unitary(sample::unitary(2, &mut rng), "rotate_b").unwrap()
        } else {
            QuantumChannel::depolarizing([0.5, 0.0, 0.2, 0.9][(trial / 4) % 4]).unwrap()
        };
        let ch = local_channel(&cha, &chb).unwrap();
        let pushed = push_family(&f, &ch).unwrap();

        let pre = optimize_class_seeded(&f, theta, dims22(), class, &opts, &[]).unwrap();
        let post = optimize_class_seeded(&pushed, theta, dims22(), class, &opts, &[]).unwrap();
        let slack = match class {
            PovmClass::LocalA | PovmClass::LocalB | PovmClass::Global => 1e-8,
            _ => 1e-4,
        };
        if post.value > pre.value + slack {
            eprintln!(
                "trial {trial}: class {} rose from {} to {}",
                class.as_str(),
                pre.value,
                post.value
            );
            monotone = false;
        }
    }
    let fast = start.elapsed().as_secs_f64() < 300.0;
    verdict(
        7,
        monotone && fast,
        "local channels never increase any class value",
    );
}

#[test]
fn accept_08_grid_oracle_corroborates_the_optimizer() {
    let numeric = NumericOptions::default();
    let opts = HierarchyOptions::default();
    let res = GridResolution::default();
    let mut agree = true;
    for (name, theta) in [
        ("bell_phase", PI_THIRD),
        ("cossin", 1.1),
        ("cc_bernoulli", 0.5),
    ] {
        let f = make_builtin(name).unwrap();
        let r = hierarchy_report(&f, theta, dims22(), &opts).unwrap();
        let product = product_grid_oracle(&f, theta, res, &numeric).unwrap().value;
        let ab = adaptive_grid_oracle(&f, theta, AdaptiveDirection::AToB, res, &numeric)
            .unwrap()
            .value;
        let ba = adaptive_grid_oracle(&f, theta, AdaptiveDirection::BToA, res, &numeric)
            .unwrap()
            .value;
        agree &= (product - r.fi_product.value).abs() < 1e-3;
        agree &= (ab - r.fi_adaptive_ab.value).abs() < 1e-3;
        agree &= (ba - r.fi_adaptive_ba.value).abs() < 1e-3;
    }
    verdict(
        8,
        agree,
        "the measurement-grid oracle corroborates both optimized classes",
    );
}

#[test]
fn accept_09_finite_differences_track_analytic_derivatives() {
    let mut rng = sample::rng(909);
    let mut small_error = true;
    let mut second_order = true;
    for dim in [2usize, 3, 4] {
        for rep in 0..3usize {
            let rho0 = sample::density_full_rank(dim, &mut rng);
            let g = sample::hermitian(dim, &mut rng);
            // A fixed generator scale keeps truncation error well above the
            // rounding floor, so the convergence-rate check is meaningful.
            let g = g.scale_re(10.0 / g.frobenius_norm());
            let f = ParameterizedFamily::generator(rho0, g).unwrap();
            let theta = 0.3 + 0.2 * rep as f64;

            let exact = f.derivative(theta, DerivScheme::Analytic).unwrap();
            let coarse = f
                .derivative(theta, DerivScheme::CentralFd { step: 1e-5 })
                .unwrap()
                .max_abs_diff(&exact);
            let fine = f
                .derivative(theta, DerivScheme::CentralFd { step: 5e-6 })
                .unwrap()
                .max_abs_diff(&exact);
            small_error &= coarse <= 1e-7;
            second_order &= coarse >= 3.5 * fine;
        }
    }
    verdict(
        9,
        small_error && second_order,
        "central differences converge to the analytic derivative at second order",
    );
}
