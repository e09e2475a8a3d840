//! `sweep`: run the scenario once per uniform quantizer step and
//! compare steady-state errors against certified radii.

use std::path::Path;

use edgelap::certify::build_certificate;
use edgelap::decomposition::decompose;
use edgelap::dynamics::simulate;
use edgelap::quantizer::QuantizerSpec;

use crate::commands::simulate::{apply_overrides, Overrides};
use crate::config::load_scenario;
use crate::CliError;

/// The fraction of the horizon treated as steady state.
pub const STEADY_FRACTION: f64 = 0.1;

fn parse_deltas(arg: &str) -> Result<Vec<f64>, CliError> {
    let mut deltas = Vec::new();
    for part in arg.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let value: f64 = part.parse().map_err(|_| CliError::Argument {
            message: format!("--deltas: cannot parse `{part}` as a number"),
        })?;
        if !value.is_finite() || value <= 0.0 {
            return Err(CliError::Argument {
                message: format!("--deltas: step {value} must be finite and > 0"),
            });
        }
        deltas.push(value);
    }
    deltas.sort_by(f64::total_cmp);
    if deltas.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Argument {
            message: "--deltas: steps must be distinct".to_string(),
        });
    }
    if deltas.len() < 2 {
        return Err(CliError::Argument {
            message: format!("--deltas: need at least 2 steps, got {}", deltas.len()),
        });
    }
    Ok(deltas)
}

/// Runs the subcommand; see the clap help for the flags.
///
/// # Errors
///
/// Argument, configuration, certificate, simulation, and IO errors;
/// [`CliError::Infeasible`] when no radius is certified at all.
pub fn run(
    config: &Path,
    deltas_arg: &str,
    out: Option<&Path>,
    horizon: Option<f64>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let deltas = parse_deltas(deltas_arg)?;
    let mut scenario = load_scenario(config)?;
    apply_overrides(&mut scenario, Overrides { horizon, seed, ..Overrides::default() })?;

    let decomposition = decompose(&scenario.graph)?;
    let cert = build_certificate(&decomposition, scenario.sigma, scenario.lipschitz)?;

    println!(
        "sweep: {} uniform steps, horizon {} s, dt {}, n = {}",
        deltas.len(),
        scenario.params.horizon,
        scenario.params.dt,
        scenario.n
    );
    println!("{:>10}  {:>14}  {:>14}  {:>6}", "delta_u", "radius", "steady_error", "within");

    let mut rows = Vec::new();
    let mut all_within = true;
    for &delta_u in &deltas {
        let radius = cert.radius(delta_u, scenario.n)?;
        let quantizer = QuantizerSpec::uniform(delta_u).map_err(edgelap::SimError::from)?;
        let trajectory = simulate(
            &decomposition,
            scenario.sigma,
            quantizer,
            &scenario.drift,
            &scenario.init,
            scenario.n,
            scenario.params,
        )?;
        let steady = trajectory
            .steady_state_error(STEADY_FRACTION)
            .expect("nonempty trajectory");
        let within = steady <= radius;
        all_within &= within;
        println!(
            "{delta_u:>10}  {radius:>14.6}  {steady:>14.6}  {:>6}",
            if within { "yes" } else { "NO" }
        );
        rows.push((delta_u, radius, steady, within));
    }

    let monotone = rows.windows(2).all(|w| w[0].2 <= w[1].2);
    println!(
        "steady-state errors monotone nondecreasing: {}",
        if monotone { "yes" } else { "NO" }
    );
    println!(
        "all steady-state errors within certified radii: {}",
        if all_within { "yes" } else { "NO" }
    );

    if let Some(out_path) = out {
        let mut writer = csv::Writer::from_path(out_path).map_err(|e| CliError::Csv {
            path: out_path.to_path_buf(),
            message: e.to_string(),
        })?;
        writer
            .write_record(["delta_u", "radius", "steady_error", "within"])
            .map_err(|e| CliError::Csv { path: out_path.to_path_buf(), message: e.to_string() })?;
        for (delta_u, radius, steady, within) in &rows {
            writer
                .write_record([
                    format!("{delta_u}"),
                    format!("{radius}"),
                    format!("{steady}"),
                    format!("{within}"),
                ])
                .map_err(|e| CliError::Csv {
                    path: out_path.to_path_buf(),
                    message: e.to_string(),
                })?;
        }
        writer.flush().map_err(|e| CliError::Csv {
            path: out_path.to_path_buf(),
            message: e.to_string(),
        })?;
        println!("wrote sweep table to {}", out_path.display());
    }
    Ok(())
}
