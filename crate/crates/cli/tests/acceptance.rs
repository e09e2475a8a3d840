//! Acceptance gate: one test per shipping criterion, each printing a
//! single `acceptance criterion N (<label>): PASS|FAIL` line (visible
//! with `--nocapture`, and in the captured output on failure).
//!
//! Expected values are frozen from an independent reference
//! implementation; tolerances are stated inline next to each check.

use std::process::Command;
use std::time::{Duration, Instant};

use edgelap::certify::{build_certificate, EnvelopeVariant, LipschitzBounds};
use edgelap::decomposition::decompose;
use edgelap::dynamics::{
    reduced_rhs_check, simulate, ChuaParams, DriftModel, InitialState, SimParams,
};
use edgelap::graph::{Digraph, Edge};
use edgelap::nalgebra::DMatrix;
use edgelap::quantizer::QuantizerSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const SIGMA: f64 = 1.64;
const XI2: f64 = 4.3871e-3;
const AGENT_DIM: usize = 3;

fn reference_graph() -> Digraph {
    Digraph::new(
        5,
        vec![
            Edge::new(1, 2, 0.12),
            Edge::new(2, 3, 0.24),
            Edge::new(3, 4, 0.44),
            Edge::new(3, 5, 0.43),
            Edge::new(5, 1, 0.09),
        ],
    )
    .unwrap()
}

fn reference_lipschitz() -> LipschitzBounds {
    LipschitzBounds { xi1: 0.0, xi2: XI2 }
}

fn reference_init() -> InitialState {
    InitialState::SeededUniform {
        position_range: (-2.0, 2.0),
        velocity_range: (-1.0, 1.0),
        seed: 42,
    }
}

/// Prints the verdict line for a criterion, then asserts it.
fn verdict(criterion: usize, label: &str, failures: &[String]) {
    let pass = failures.is_empty();
    println!(
        "acceptance criterion {criterion} ({label}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({label}) failed:\n{}", failures.join("\n"));
}

fn check(failures: &mut Vec<String>, ok: bool, detail: impl FnOnce() -> String) {
    if !ok {
        failures.push(detail());
    }
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edgelap"))
}

#[test]
fn criterion_1_reference_matrices() {
    let expected_essential = [
        [0.21, 0.09, 0.00, 0.09],
        [-0.12, 0.24, 0.00, 0.00],
        [0.00, -0.24, 0.44, 0.00],
        [0.00, -0.24, 0.00, 0.43],
    ];
    let expected_coupling = [
        [0.12, 0.00, 0.00, 0.00, -0.09],
        [-0.12, 0.24, 0.00, 0.00, 0.00],
        [0.00, -0.24, 0.44, 0.00, 0.00],
        [0.00, -0.24, 0.00, 0.43, 0.00],
    ];

    let mut failures = Vec::new();
    let start = Instant::now();

    let d = decompose(&reference_graph()).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..4 {
        for (j, want) in expected_essential[i].iter().enumerate() {
            worst = worst.max((d.essential_edge_laplacian[(i, j)] - want).abs());
        }
        for (j, want) in expected_coupling[i].iter().enumerate() {
            worst = worst.max((d.tree_in_incidence[(i, j)] - want).abs());
        }
    }
    check(&mut failures, worst <= 0.005, || {
        format!("matrix deviation {worst:.2e} exceeds the two-decimal tolerance 0.005")
    });

    let output = binary().args(["reproduce-paper", "--fast"]).output().unwrap();
    check(&mut failures, output.status.success(), || {
        format!(
            "reproduce-paper --fast exited with {:?}:\n{}",
            output.status.code(),
            String::from_utf8_lossy(&output.stdout)
        )
    });
    let stdout = String::from_utf8_lossy(&output.stdout);
    check(
        &mut failures,
        stdout.contains("check essential edge Laplacian: PASS")
            && stdout.contains("check tree coupling matrix: PASS"),
        || format!("reproduce-paper --fast is missing matrix PASS lines:\n{stdout}"),
    );

    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(1), || {
        format!("runtime {elapsed:?} exceeds 1 s")
    });

    verdict(1, "reference matrices", &failures);
}

#[test]
fn criterion_2_certificate_scalars() {
    let mut failures = Vec::new();
    let start = Instant::now();

    let d = decompose(&reference_graph()).unwrap();
    let cert = build_certificate(&d, SIGMA, reference_lipschitz()).unwrap();

    let delta_l_max = cert.delta_l_max;
    let expected_delta = 0.0301;
    let dev = (delta_l_max - expected_delta).abs() / expected_delta;
    check(&mut failures, dev <= 0.05, || {
        format!("delta_l_max = {delta_l_max} is not within 5% of {expected_delta}")
    });

    let pi = cert.decay_constant(0.01).unwrap();
    let expected_pi = 0.5387;
    let dev = (pi - expected_pi).abs() / expected_pi;
    check(&mut failures, dev <= 0.05, || {
        format!("decay constant {pi} is not within 5% of {expected_pi}")
    });

    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(1), || {
        format!("runtime {elapsed:?} exceeds 1 s")
    });

    verdict(2, "certificate scalars", &failures);
}

/// Random quasi-strongly connected digraph: a spanning tree rooted at
/// node 1 (every child hangs off an earlier node) plus random extra
/// edges, so node 1 reaches every node by construction.
fn random_digraph(rng: &mut ChaCha12Rng) -> Digraph {
    let num_nodes = rng.random_range(2..=8usize);
    let mut edges = Vec::new();
    let mut pairs = std::collections::HashSet::new();
    for child in 2..=num_nodes {
        let parent = rng.random_range(1..child);
        pairs.insert((parent, child));
        edges.push(Edge::new(parent, child, rng.random_range(0.1..2.0)));
    }
    for _ in 0..rng.random_range(0..=8usize) {
        let tail = rng.random_range(1..=num_nodes);
        let head = rng.random_range(1..=num_nodes);
        if tail == head || !pairs.insert((tail, head)) {
            continue;
        }
        edges.push(Edge::new(tail, head, rng.random_range(0.1..2.0)));
    }
    Digraph::new(num_nodes, edges).unwrap()
}

#[test]
fn criterion_3_random_spectra() {
    let mut failures = Vec::new();
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(3);

    for case in 0..128 {
        let graph = random_digraph(&mut rng);
        let d = decompose(&graph).unwrap();
        let report = d.spectral_properties().unwrap();
        check(&mut failures, report.nonzero_spectra_match, || {
            format!("case {case}: nonzero spectra of L_e and L_G disagree beyond 1e-9")
        });
        check(
            &mut failures,
            report.zero_multiplicity == report.expected_zero_multiplicity,
            || {
                format!(
                    "case {case}: {} zero eigenvalues, expected {}",
                    report.zero_multiplicity, report.expected_zero_multiplicity
                )
            },
        );
        check(&mut failures, report.zero_is_semisimple(), || {
            format!(
                "case {case}: rank(L_e) = {} but rank(L_e^2) = {}",
                report.edge_rank, report.edge_rank_squared
            )
        });
        check(&mut failures, report.essential_positive_stable, || {
            format!("case {case}: an eigenvalue of the essential edge Laplacian has real part <= 0")
        });
        if failures.len() > 8 {
            break;
        }
    }

    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(30), || {
        format!("runtime {elapsed:?} exceeds 30 s")
    });

    verdict(3, "random graph spectra", &failures);
}

#[test]
fn criterion_4_lyapunov_algebra() {
    let mut failures = Vec::new();

    let d = decompose(&reference_graph()).unwrap();
    let cert = build_certificate(&d, SIGMA, reference_lipschitz()).unwrap();

    let residual = cert.lyapunov_residual();
    check(&mut failures, residual <= 1e-10, || {
        format!("Lyapunov residual {residual:.3e} exceeds 1e-10")
    });
    let residual = cert.q_closed_form_residual();
    check(&mut failures, residual <= 1e-10, || {
        format!("Q closed-form residual {residual:.3e} exceeds 1e-10")
    });
    let residual = cert.schur_complement_residual();
    check(&mut failures, residual <= 1e-10, || {
        format!("Schur complement residual {residual:.3e} exceeds 1e-10")
    });

    let threshold = cert.sigma_min;
    let above = build_certificate(&d, threshold * 1.001, reference_lipschitz()).unwrap();
    check(&mut failures, above.lambda_min_q > 0.0, || {
        format!(
            "lambda_min(Q) = {} at sigma = sigma_min * 1.001; expected positive",
            above.lambda_min_q
        )
    });
    let below = build_certificate(&d, threshold * 0.999, reference_lipschitz()).unwrap();
    check(&mut failures, below.lambda_min_q <= 0.0, || {
        format!(
            "lambda_min(Q) = {} at sigma = sigma_min * 0.999; expected nonpositive",
            below.lambda_min_q
        )
    });
    check(&mut failures, !below.feasible, || {
        String::from("certificate below the gain threshold reports feasible")
    });

    verdict(4, "Lyapunov and Q algebra", &failures);
}

#[test]
fn criterion_5_quantizer_bounds() {
    let mut failures = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let samples = 10_000usize;

    for delta_u in [0.01, 0.1, 1.0, 3.0] {
        let q = QuantizerSpec::uniform(delta_u).unwrap();
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let x: f64 = rng.random_range(-50.0..50.0);
            let err = (q.quantize(x) - x).abs();
            let bound = delta_u / 2.0 + 1e-12 * x.abs().max(1.0);
            if err > bound {
                worst = worst.max(err - bound);
            }
        }
        check(&mut failures, worst == 0.0, || {
            format!("uniform delta_u = {delta_u}: error exceeds delta_u/2 by {worst:.3e}")
        });
    }

    for delta_u in [0.01, 0.1, 0.5, 0.9] {
        let q = QuantizerSpec::logarithmic(delta_u).unwrap();
        let delta_l = 1.0 - (-delta_u).exp();
        let mut worst = 0.0_f64;
        let mut odd_violations = 0usize;
        for _ in 0..samples {
            let magnitude = (rng.random_range(-6.0..6.0) * std::f64::consts::LN_10).exp();
            let x = if rng.random_range(0..2) == 0 { magnitude } else { -magnitude };
            let err = (q.quantize(x) - x).abs();
            let bound = (delta_l + 1e-12) * x.abs();
            if err > bound {
                worst = worst.max(err - bound);
            }
            if q.quantize(-x).to_bits() != (-q.quantize(x)).to_bits() {
                odd_violations += 1;
            }
        }
        check(&mut failures, worst == 0.0, || {
            format!(
                "logarithmic delta_u = {delta_u}: error exceeds (1 - e^-delta_u)|x| by {worst:.3e}"
            )
        });
        check(&mut failures, odd_violations == 0, || {
            format!("logarithmic delta_u = {delta_u}: {odd_violations} odd-symmetry violations")
        });
        check(&mut failures, q.quantize(0.0) == 0.0, || {
            String::from("logarithmic quantizer does not fix zero")
        });
    }

    verdict(5, "quantizer error bounds", &failures);
}

#[test]
fn criterion_6_uniform_radius() {
    let mut failures = Vec::new();
    let start = Instant::now();

    let d = decompose(&reference_graph()).unwrap();
    let cert = build_certificate(&d, SIGMA, reference_lipschitz()).unwrap();
    let drift = DriftModel::Chua(ChuaParams::default());
    let init = reference_init();
    let params = SimParams { horizon: 300.0, dt: 1e-3, sample_every: 100 };

    let mut previous = 0.0_f64;
    for delta_u in [0.01, 0.1, 1.0, 2.0, 3.0] {
        let radius = cert.radius(delta_u, AGENT_DIM).unwrap();
        let trajectory = simulate(
            &d,
            SIGMA,
            QuantizerSpec::uniform(delta_u).unwrap(),
            &drift,
            &init,
            AGENT_DIM,
            params,
        )
        .unwrap();
        let steady = trajectory.steady_state_error(0.1).unwrap();
        check(&mut failures, steady <= radius, || {
            format!("delta_u = {delta_u}: steady error {steady} exceeds radius {radius}")
        });
        check(&mut failures, steady >= previous, || {
            format!("delta_u = {delta_u}: steady error {steady} dropped below {previous}")
        });
        previous = steady;
    }

    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(300), || {
        format!("runtime {elapsed:?} exceeds 5 min")
    });

    verdict(6, "uniform steady-state radius", &failures);
}

#[test]
fn criterion_7_logarithmic_envelope() {
    let mut failures = Vec::new();
    let start = Instant::now();

    let d = decompose(&reference_graph()).unwrap();
    let cert = build_certificate(&d, SIGMA, reference_lipschitz()).unwrap();
    let delta_l = 0.01_f64;
    let envelope = cert.envelope(delta_l, EnvelopeVariant::Rigorous).unwrap();

    let delta_u = -(1.0 - delta_l).ln();
    let trajectory = simulate(
        &d,
        SIGMA,
        QuantizerSpec::logarithmic(delta_u).unwrap(),
        &DriftModel::Chua(ChuaParams::default()),
        &reference_init(),
        AGENT_DIM,
        SimParams { horizon: 300.0, dt: 1e-3, sample_every: 100 },
    )
    .unwrap();

    let z0 = trajectory.tree_norms[0];
    let mut violations = 0usize;
    for (i, &t) in trajectory.times.iter().enumerate() {
        if trajectory.tree_norms[i] > envelope.bound(t, z0) {
            violations += 1;
        }
    }
    check(&mut failures, violations == 0, || {
        format!("{violations} of {} samples exceed the certified envelope", trajectory.len())
    });

    let final_norm = *trajectory.tree_norms.last().unwrap();
    check(&mut failures, final_norm <= 1e-3, || {
        format!("|z_T| at the horizon is {final_norm:.3e}, above 1e-3")
    });

    let elapsed = start.elapsed();
    check(&mut failures, elapsed < Duration::from_secs(60), || {
        format!("runtime {elapsed:?} exceeds 1 min")
    });

    verdict(7, "logarithmic envelope", &failures);
}

#[test]
fn criterion_8_reduced_model() {
    let mut failures = Vec::new();

    let d = decompose(&reference_graph()).unwrap();
    let drift = DriftModel::Chua(ChuaParams::default());
    let quantizer = QuantizerSpec::uniform(0.1).unwrap();
    let init = reference_init();

    let run = |dt: f64| {
        simulate(
            &d,
            SIGMA,
            quantizer,
            &drift,
            &init,
            AGENT_DIM,
            SimParams { horizon: 0.5, dt, sample_every: 1 },
        )
        .unwrap()
    };
    let coarse = run(5e-4);
    let fine = run(2.5e-4);

    let coarse_check = reduced_rhs_check(&d, SIGMA, quantizer, &drift, &coarse).unwrap();
    let fine_check = reduced_rhs_check(&d, SIGMA, quantizer, &drift, &fine).unwrap();
    check(&mut failures, coarse_check.checked > 0 && fine_check.checked > 0, || {
        format!(
            "no unmasked samples to compare ({} coarse, {} fine)",
            coarse_check.checked, fine_check.checked
        )
    });
    let ratio = coarse_check.max_residual / fine_check.max_residual;
    check(&mut failures, ratio >= 3.5, || {
        format!(
            "residual ratio {ratio:.2} below 3.5 ({:.3e} at dt = 5e-4, {:.3e} at dt = 2.5e-4)",
            coarse_check.max_residual, fine_check.max_residual
        )
    });

    let identity = DMatrix::<f64>::identity(AGENT_DIM, AGENT_DIM);
    let incidence_t = d.incidence.transpose().kronecker(&identity);
    let cut_t = d.cut_basis.transpose().kronecker(&identity);
    let mut worst = 0.0_f64;
    for i in 0..coarse.len() {
        worst = worst.max((&incidence_t * &coarse.positions[i] - &coarse.edge_positions[i]).amax());
        worst = worst.max((&incidence_t * &coarse.velocities[i] - &coarse.edge_velocities[i]).amax());
        worst = worst.max((&cut_t * &coarse.tree_positions[i] - &coarse.edge_positions[i]).amax());
        worst = worst.max((&cut_t * &coarse.tree_velocities[i] - &coarse.edge_velocities[i]).amax());
    }
    check(&mut failures, worst <= 1e-12, || {
        format!("edge-state identity residual {worst:.3e} exceeds 1e-12")
    });

    verdict(8, "reduced model consistency", &failures);
}

#[test]
fn criterion_9_deterministic_csv() {
    let mut failures = Vec::new();

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(
        &config,
        r#"
sigma = 1.64
n = 3
xi2 = 4.3871e-3
horizon = 2.0
dt = 1e-3
sample_every = 10

[graph]
edges = [[1, 2, 0.12], [2, 3, 0.24], [3, 4, 0.44], [3, 5, 0.43], [5, 1, 0.09]]

[quantizer]
family = "uniform"
delta_u = 0.1

[drift]
kind = "chua"

[init]
kind = "seeded"
seed = 42
position_range = [-2.0, 2.0]
velocity_range = [-1.0, 1.0]
"#,
    )
    .unwrap();

    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let status = binary()
            .args(["simulate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        check(&mut failures, status.success(), || {
            format!("simulate exited with {:?}", status.code())
        });
    }

    let bytes_a = std::fs::read(&out_a).unwrap();
    let bytes_b = std::fs::read(&out_b).unwrap();
    check(&mut failures, !bytes_a.is_empty(), || String::from("first CSV is empty"));
    check(&mut failures, bytes_a == bytes_b, || {
        String::from("repeated runs with the same config and seed differ")
    });

    verdict(9, "deterministic CSV output", &failures);
}
