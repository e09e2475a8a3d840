//! `certify`: build the stability certificate for a scenario and print
//! its scalars.

use std::fmt::Write as _;
use std::path::Path;

use edgelap::certify::{build_certificate, EnvelopeVariant, StabilityCertificate};
use edgelap::decomposition::{decompose, EdgeDecomposition};
use edgelap::quantizer::QuantizerSpec;

use crate::config::{load_scenario, Scenario};
use crate::CliError;

fn write_header(report: &mut String, scenario: &Scenario, d: &EdgeDecomposition) {
    let _ = writeln!(
        report,
        "graph: {} nodes, {} edges, root {}, {} tree + {} co-tree",
        d.num_nodes(),
        d.num_edges(),
        d.root,
        d.tree_count(),
        d.cotree_count()
    );
    let _ = writeln!(report, "sigma = {}", scenario.sigma);
    let _ = writeln!(report, "n = {}", scenario.n);
    let _ = writeln!(
        report,
        "lipschitz: xi1 = {}, xi2 = {}",
        scenario.lipschitz.xi1, scenario.lipschitz.xi2
    );
}

fn write_scalars(report: &mut String, cert: &StabilityCertificate) {
    let _ = writeln!(report, "sigma_min = {:.12}", cert.sigma_min);
    let _ = writeln!(report, "lambda_min(H) = {:.12}", cert.lambda_min_h);
    let _ = writeln!(report, "lambda_max(H) = {:.12}", cert.lambda_max_h);
    let _ = writeln!(report, "lambda_min(Q) = {:.12}", cert.lambda_min_q);
    let _ = writeln!(report, "lambda_min(P) = {:.12}", cert.lambda_min_p);
    let _ = writeln!(report, "lambda_max(P) = {:.12}", cert.lambda_max_p);
    let _ = writeln!(report, "norm(P) = {:.12}", cert.norm_p);
    let _ = writeln!(report, "norm(P LT1) = {:.12}", cert.norm_p_lt1);
    let _ = writeln!(report, "norm(R^T) = {:.12}", cert.norm_r_transpose);
    let _ = writeln!(report, "margin = {:.12}", cert.margin);
    let _ = writeln!(report, "delta_l_max = {:.12}", cert.delta_l_max);
    let _ = writeln!(report, "lyapunov residual = {:.3e}", cert.lyapunov_residual());
    let _ = writeln!(report, "Q closed-form residual = {:.3e}", cert.q_closed_form_residual());
    let _ = writeln!(
        report,
        "Schur complement residual = {:.3e}",
        cert.schur_complement_residual()
    );
}

fn write_quantizer_section(
    report: &mut String,
    scenario: &Scenario,
    cert: &StabilityCertificate,
) -> Result<(), CliError> {
    match scenario.quantizer {
        QuantizerSpec::None => {
            let _ = writeln!(report, "quantizer: none (exact measurements)");
            if cert.feasible {
                let pi = cert.decay_constant(0.0)?;
                let env = cert.envelope(0.0, EnvelopeVariant::Rigorous)?;
                let _ = writeln!(report, "pi(0) = {:.12}", pi);
                let _ = writeln!(
                    report,
                    "envelope (rigorous): prefactor = {:.12}, rate = {:.12}",
                    env.prefactor, env.rate
                );
            }
        }
        QuantizerSpec::Uniform { delta_u } => {
            let _ = writeln!(report, "quantizer: uniform, delta_u = {delta_u}");
            if cert.feasible {
                let radius = cert.radius(delta_u, scenario.n)?;
                let _ = writeln!(
                    report,
                    "radius(delta_u = {delta_u}, n = {}) = {:.12}",
                    scenario.n, radius
                );
            }
        }
        QuantizerSpec::Logarithmic { delta_u } => {
            let delta_l = scenario.quantizer.delta_l().unwrap();
            let _ = writeln!(
                report,
                "quantizer: logarithmic, delta_u = {delta_u}, delta_l = {:.12}",
                delta_l
            );
            if cert.feasible {
                if delta_l < cert.delta_l_max {
                    let pi = cert.decay_constant(delta_l)?;
                    let _ = writeln!(report, "pi(delta_l) = {:.12}", pi);
                    for (variant, name) in [
                        (EnvelopeVariant::Rigorous, "rigorous"),
                        (EnvelopeVariant::Reference, "reference"),
                    ] {
                        let env = cert.envelope(delta_l, variant)?;
                        let _ = writeln!(
                            report,
                            "envelope ({name}): prefactor = {:.12}, rate = {:.12}",
                            env.prefactor, env.rate
                        );
                    }
                } else {
                    let _ = writeln!(
                        report,
                        "delta_l = {delta_l:.12} is not below delta_l_max; no decay certified"
                    );
                }
            }
        }
    }
    Ok(())
}

/// Runs the subcommand; see the clap help for the flags.
///
/// # Errors
///
/// Configuration and numerical errors; [`CliError::Infeasible`] when the
/// certificate exists but does not certify stability.
pub fn run(
    config: &Path,
    target_radius: Option<f64>,
    z0_norm: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let scenario = load_scenario(config)?;
    let decomposition = decompose(&scenario.graph)?;
    let cert = build_certificate(&decomposition, scenario.sigma, scenario.lipschitz)?;

    let mut report = String::new();
    write_header(&mut report, &scenario, &decomposition);
    write_scalars(&mut report, &cert);
    write_quantizer_section(&mut report, &scenario, &cert)?;

    if cert.feasible {
        let _ = writeln!(report, "feasible: yes");
        if let Some(radius) = target_radius {
            let z0 = z0_norm.ok_or_else(|| CliError::Argument {
                message: "--target-radius requires --z0-norm".to_string(),
            })?;
            let delta_l = scenario.quantizer.delta_l().unwrap_or(0.0);
            let env = cert.envelope(delta_l, EnvelopeVariant::Rigorous)?;
            let time = env.convergence_time(radius, z0)?;
            let _ = writeln!(
                report,
                "time to |z_T| <= {radius} from |z_T(0)| = {z0}: {time:.6} s"
            );
        }
    } else {
        let _ = writeln!(report, "feasible: no");
    }

    print!("{report}");
    if let Some(out_path) = out {
        std::fs::write(out_path, &report)
            .map_err(|source| CliError::Io { path: out_path.to_path_buf(), source })?;
    }

    if let Some(reason) = &cert.infeasibility {
        return Err(CliError::Infeasible { reason: reason.to_string() });
    }
    Ok(())
}
