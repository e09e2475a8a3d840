//! `simulate`: integrate the closed loop for a scenario and write the
//! trajectory as CSV.

use std::path::Path;

use edgelap::certify::{build_certificate, Envelope, EnvelopeVariant};
use edgelap::decomposition::decompose;
use edgelap::dynamics::{simulate, InitialState};
use edgelap::quantizer::QuantizerSpec;

use crate::config::{load_scenario, Scenario};
use crate::{csvio, CliError};

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    /// Replacement horizon.
    pub horizon: Option<f64>,
    /// Replacement integrator step.
    pub dt: Option<f64>,
    /// Replacement recording stride.
    pub sample_every: Option<usize>,
    /// Replacement seed; requires a seeded initial state.
    pub seed: Option<u64>,
}

pub(crate) fn apply_overrides(scenario: &mut Scenario, ov: Overrides) -> Result<(), CliError> {
    if let Some(horizon) = ov.horizon {
        scenario.params.horizon = horizon;
    }
    if let Some(dt) = ov.dt {
        scenario.params.dt = dt;
    }
    if let Some(sample_every) = ov.sample_every {
        scenario.params.sample_every = sample_every;
    }
    if let Some(seed) = ov.seed {
        match &mut scenario.init {
            InitialState::SeededUniform { seed: s, .. } => *s = seed,
            InitialState::Explicit { .. } => {
                return Err(CliError::Argument {
                    message: "--seed requires a seeded initial state, but the configuration \
                              uses kind = \"explicit\""
                        .to_string(),
                });
            }
        }
    }
    Ok(())
}

/// When the scenario uses a logarithmic quantizer and the certificate
/// covers its `delta_l`, returns the rigorous envelope to tabulate
/// alongside the trajectory.
pub(crate) fn certified_envelope(scenario: &Scenario) -> Option<Envelope> {
    if !matches!(scenario.quantizer, QuantizerSpec::Logarithmic { .. }) {
        return None;
    }
    let delta_l = scenario.quantizer.delta_l()?;
    let decomposition = decompose(&scenario.graph).ok()?;
    let cert = build_certificate(&decomposition, scenario.sigma, scenario.lipschitz).ok()?;
    cert.envelope(delta_l, EnvelopeVariant::Rigorous).ok()
}

/// Runs the subcommand; see the clap help for the flags.
///
/// # Errors
///
/// Configuration, simulation, and IO errors.
pub fn run(config: &Path, out: &Path, overrides: Overrides) -> Result<(), CliError> {
    let mut scenario = load_scenario(config)?;
    apply_overrides(&mut scenario, overrides)?;

    let decomposition = decompose(&scenario.graph)?;
    let trajectory = simulate(
        &decomposition,
        scenario.sigma,
        scenario.quantizer,
        &scenario.drift,
        &scenario.init,
        scenario.n,
        scenario.params,
    )?;

    let envelope = certified_envelope(&scenario);
    let envelope_entry = envelope.as_ref().map(|env| (env, trajectory.tree_norms[0]));
    csvio::write_trajectory(out, &trajectory, envelope_entry)?;

    let last = trajectory.len() - 1;
    println!(
        "wrote {} samples over [0, {}] s to {}",
        trajectory.len(),
        trajectory.times[last],
        out.display()
    );
    println!("|z_T(0)| = {:.6e}", trajectory.tree_norms[0]);
    println!("|z_T(end)| = {:.6e}", trajectory.tree_norms[last]);
    if let Some(steady) = trajectory.steady_state_error(0.1) {
        println!("steady-state error (final 10%) = {:.6e}", steady);
    }
    if let Some(env) = &envelope {
        println!(
            "envelope column: prefactor = {:.6}, rate = {:.6}",
            env.prefactor, env.rate
        );
    } else if matches!(scenario.quantizer, QuantizerSpec::Logarithmic { .. }) {
        println!("envelope column omitted: certificate does not cover this quantizer");
    }
    Ok(())
}
