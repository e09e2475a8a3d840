//! `reproduce-paper`: a hermetic five-node reference scenario with
//! built-in expected values.
//!
//! The scenario is the directed 5-cycle-with-chord used throughout the
//! test suite: edges 1->2, 2->3, 3->4, 3->5, 5->1 with weights
//! 0.12, 0.24, 0.44, 0.43, 0.09, gain 1.64, Chua drift on n = 3 with
//! velocity Lipschitz bound 4.3871e-3. The command recomputes the
//! reduced matrices, certificate scalars, the uniform-step radius table,
//! and (unless `--fast`) simulates both quantizer families to check the
//! certified bounds, printing one PASS/FAIL line per check.

use edgelap::certify::{build_certificate, EnvelopeVariant, LipschitzBounds};
use edgelap::nalgebra::DMatrix;
use edgelap::decomposition::{decompose, EdgeDecomposition};
use edgelap::dynamics::{simulate, ChuaParams, DriftModel, InitialState, SimParams};
use edgelap::graph::{Digraph, Edge};
use edgelap::quantizer::QuantizerSpec;

use crate::CliError;

/// Gain of the reference scenario.
pub const SIGMA: f64 = 1.64;
/// Velocity Lipschitz bound assumed for the Chua drift.
pub const XI2: f64 = 4.3871e-3;
/// Agent state dimension.
pub const N: usize = 3;
/// Expected admissible relative-quantization bound.
pub const EXPECTED_DELTA_L_MAX: f64 = 0.0301;
/// Expected decay constant at `delta_l = 0.01`.
pub const EXPECTED_PI: f64 = 0.5387;
/// Relative tolerance on the two scalar checks.
pub const SCALAR_RTOL: f64 = 0.05;
/// Entrywise tolerance on the matrix checks (two-decimal rounding).
pub const MATRIX_ATOL: f64 = 0.005;
/// Uniform quantizer steps tabulated for the radius table.
pub const RADIUS_STEPS: [f64; 5] = [0.01, 0.1, 1.0, 2.0, 3.0];

const EXPECTED_ESSENTIAL: [[f64; 4]; 4] = [
    [0.21, 0.09, 0.00, 0.09],
    [-0.12, 0.24, 0.00, 0.00],
    [0.00, -0.24, 0.44, 0.00],
    [0.00, -0.24, 0.00, 0.43],
];

const EXPECTED_COUPLING: [[f64; 5]; 4] = [
    [0.12, 0.00, 0.00, 0.00, -0.09],
    [-0.12, 0.24, 0.00, 0.00, 0.00],
    [0.00, -0.24, 0.44, 0.00, 0.00],
    [0.00, -0.24, 0.00, 0.43, 0.00],
];

/// The built-in five-node digraph.
pub fn reference_graph() -> Digraph {
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
    .expect("reference graph is valid")
}

/// The seeded initial state used by the bound checks.
pub fn reference_init() -> InitialState {
    InitialState::SeededUniform {
        position_range: (-2.0, 2.0),
        velocity_range: (-1.0, 1.0),
        seed: 42,
    }
}

struct Checks {
    failures: usize,
}

impl Checks {
    fn report(&mut self, name: &str, pass: bool, detail: &str) {
        println!("check {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn matrix_check(
    checks: &mut Checks,
    name: &str,
    actual: &DMatrix<f64>,
    expected_rows: &[&[f64]],
) {
    let rows = expected_rows.len();
    let cols = expected_rows[0].len();
    if actual.nrows() != rows || actual.ncols() != cols {
        checks.report(
            name,
            false,
            &format!("shape {}x{}, expected {rows}x{cols}", actual.nrows(), actual.ncols()),
        );
        return;
    }
    let mut worst = 0.0_f64;
    for (i, row) in expected_rows.iter().enumerate() {
        for (j, &want) in row.iter().enumerate() {
            worst = worst.max((actual[(i, j)] - want).abs());
        }
    }
    checks.report(
        name,
        worst <= MATRIX_ATOL,
        &format!("max entry deviation {worst:.2e}, tolerance {MATRIX_ATOL}"),
    );
}

fn scalar_check(checks: &mut Checks, name: &str, actual: f64, expected: f64) {
    let deviation = (actual - expected).abs() / expected.abs();
    checks.report(
        name,
        deviation <= SCALAR_RTOL,
        &format!("{actual:.6} vs {expected} (relative deviation {:.2}%)", deviation * 100.0),
    );
}

fn uniform_bound_check(
    checks: &mut Checks,
    decomposition: &EdgeDecomposition,
    cert: &edgelap::StabilityCertificate,
    horizon: f64,
) -> Result<(), CliError> {
    let delta_u = 0.1;
    let radius = cert.radius(delta_u, N)?;
    let trajectory = simulate(
        decomposition,
        SIGMA,
        QuantizerSpec::uniform(delta_u).map_err(edgelap::SimError::from)?,
        &DriftModel::Chua(ChuaParams::default()),
        &reference_init(),
        N,
        SimParams { horizon, dt: 1e-3, sample_every: 100 },
    )?;
    let steady = trajectory.steady_state_error(0.1).expect("nonempty trajectory");
    checks.report(
        "uniform steady-state bound",
        steady <= radius,
        &format!("steady error {steady:.6} <= radius {radius:.6} at delta_u = {delta_u}"),
    );
    Ok(())
}

fn logarithmic_envelope_check(
    checks: &mut Checks,
    decomposition: &EdgeDecomposition,
    cert: &edgelap::StabilityCertificate,
    horizon: f64,
) -> Result<(), CliError> {
    let delta_l = 0.01_f64;
    let delta_u = -(1.0 - delta_l).ln();
    let envelope = cert.envelope(delta_l, EnvelopeVariant::Rigorous)?;
    let trajectory = simulate(
        decomposition,
        SIGMA,
        QuantizerSpec::logarithmic(delta_u).map_err(edgelap::SimError::from)?,
        &DriftModel::Chua(ChuaParams::default()),
        &reference_init(),
        N,
        SimParams { horizon, dt: 1e-3, sample_every: 100 },
    )?;

    let z0 = trajectory.tree_norms[0];
    let mut worst_ratio = 0.0_f64;
    let mut violations = 0usize;
    for (i, &t) in trajectory.times.iter().enumerate() {
        let bound = envelope.bound(t, z0);
        if trajectory.tree_norms[i] > bound {
            violations += 1;
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(trajectory.tree_norms[i] / bound);
        }
    }
    checks.report(
        "logarithmic envelope",
        violations == 0,
        &format!(
            "{violations} of {} samples above the bound, worst |z_T|/bound = {worst_ratio:.4}",
            trajectory.len()
        ),
    );

    let final_norm = *trajectory.tree_norms.last().unwrap();
    if horizon >= 60.0 {
        checks.report(
            "logarithmic final norm",
            final_norm <= 1e-3,
            &format!("|z_T({horizon})| = {final_norm:.3e} <= 1e-3"),
        );
    } else {
        println!(
            "check logarithmic final norm: SKIPPED (horizon {horizon} s < 60 s; |z_T(end)| = \
             {final_norm:.3e})"
        );
    }
    Ok(())
}

/// Runs the subcommand; see the clap help for the flags.
///
/// # Errors
///
/// [`CliError::Reproduction`] when any check fails, plus the usual
/// numerical and simulation errors.
pub fn run(horizon: f64, fast: bool) -> Result<(), CliError> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(CliError::Argument {
            message: format!("--horizon must be finite and > 0, got {horizon}"),
        });
    }

    let graph = reference_graph();
    let decomposition = decompose(&graph)?;
    let cert = build_certificate(
        &decomposition,
        SIGMA,
        LipschitzBounds { xi1: 0.0, xi2: XI2 },
    )?;

    let mut checks = Checks { failures: 0 };

    println!("reference scenario: 5 nodes, 5 edges, sigma = {SIGMA}, xi2 = {XI2}, n = {N}");
    let expected_essential: Vec<&[f64]> =
        EXPECTED_ESSENTIAL.iter().map(|r| r.as_slice()).collect();
    matrix_check(
        &mut checks,
        "essential edge Laplacian",
        &decomposition.essential_edge_laplacian,
        &expected_essential,
    );
    let expected_coupling: Vec<&[f64]> =
        EXPECTED_COUPLING.iter().map(|r| r.as_slice()).collect();
    matrix_check(
        &mut checks,
        "tree coupling matrix",
        &decomposition.tree_in_incidence,
        &expected_coupling,
    );

    scalar_check(&mut checks, "delta_l_max", cert.delta_l_max, EXPECTED_DELTA_L_MAX);
    scalar_check(&mut checks, "pi(0.01)", cert.decay_constant(0.01)?, EXPECTED_PI);

    println!("certified radii (n = {N}):");
    for delta_u in RADIUS_STEPS {
        println!("  radius({delta_u}) = {:.6}", cert.radius(delta_u, N)?);
    }

    if fast {
        println!("simulation checks skipped (--fast)");
    } else {
        uniform_bound_check(&mut checks, &decomposition, &cert, horizon)?;
        logarithmic_envelope_check(&mut checks, &decomposition, &cert, horizon)?;
    }

    if checks.failures > 0 {
        return Err(CliError::Reproduction { failures: checks.failures });
    }
    println!("all checks passed");
    Ok(())
}
