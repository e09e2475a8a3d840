//! Trajectory CSV writing and reading.
//!
//! Column layout: `t`, one `x{agent}_{dim}` column per position
//! component, one `v{agent}_{dim}` per velocity component (both
//! 1-based, agent-major), `z_T_norm`, and optionally `envelope` with the
//! certified bound evaluated at each sample time. Floats are written
//! with Rust's shortest round-trip formatting, so identical runs produce
//! byte-identical files.

use std::path::Path;

use edgelap::certify::Envelope;
use edgelap::dynamics::Trajectory;

use crate::CliError;

fn csv_error(path: &Path, message: impl std::fmt::Display) -> CliError {
    CliError::Csv { path: path.to_path_buf(), message: message.to_string() }
}

/// Writes a recorded trajectory, optionally with the envelope bound
/// `t -> envelope.bound(t, z0_norm)` as a trailing column.
///
/// # Errors
///
/// [`CliError::Csv`] on IO failures.
pub fn write_trajectory(
    path: &Path,
    trajectory: &Trajectory,
    envelope: Option<(&Envelope, f64)>,
) -> Result<(), CliError> {
    let n = trajectory.agent_dim;
    let num_nodes = if trajectory.is_empty() {
        0
    } else {
        trajectory.positions[0].len() / n
    };

    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["t".to_string()];
    for prefix in ["x", "v"] {
        for agent in 1..=num_nodes {
            for dim in 1..=n {
                header.push(format!("{prefix}{agent}_{dim}"));
            }
        }
    }
    header.push("z_T_norm".to_string());
    if envelope.is_some() {
        header.push("envelope".to_string());
    }
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;

    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..trajectory.len() {
        row.clear();
        let t = trajectory.times[i];
        row.push(format!("{t}"));
        for value in trajectory.positions[i].iter().chain(trajectory.velocities[i].iter()) {
            row.push(format!("{value}"));
        }
        row.push(format!("{}", trajectory.tree_norms[i]));
        if let Some((env, z0_norm)) = envelope {
            row.push(format!("{}", env.bound(t, z0_norm)));
        }
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| csv_error(path, e))?;
    Ok(())
}

/// The time series a plot needs: tree-state norms and the optional
/// envelope column.
#[derive(Debug, Clone)]
pub struct NormSeries {
    /// Sample times.
    pub times: Vec<f64>,
    /// Tree-state norms.
    pub norms: Vec<f64>,
    /// Envelope bound, when the file carries one.
    pub envelope: Option<Vec<f64>>,
}

/// Reads the `t`, `z_T_norm`, and optional `envelope` columns back from
/// a trajectory CSV.
///
/// # Errors
///
/// [`CliError::Csv`] naming the missing column or the 1-based data row
/// of the first malformed record.
pub fn read_norm_series(path: &Path) -> Result<NormSeries, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let t_col = find("t").ok_or_else(|| csv_error(path, "missing column `t`"))?;
    let norm_col =
        find("z_T_norm").ok_or_else(|| csv_error(path, "missing column `z_T_norm`"))?;
    let env_col = find("envelope");

    let mut series = NormSeries {
        times: Vec::new(),
        norms: Vec::new(),
        envelope: env_col.map(|_| Vec::new()),
    };
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(|e| csv_error(path, format_args!("data row {row}: {e}")))?;
        let parse = |col: usize, name: &str| -> Result<f64, CliError> {
            let field = record.get(col).ok_or_else(|| {
                csv_error(path, format_args!("data row {row}: missing column `{name}`"))
            })?;
            field.parse::<f64>().map_err(|_| {
                csv_error(
                    path,
                    format_args!("data row {row}: cannot parse `{field}` in column `{name}`"),
                )
            })
        };
        series.times.push(parse(t_col, "t")?);
        series.norms.push(parse(norm_col, "z_T_norm")?);
        if let Some(col) = env_col {
            let value = parse(col, "envelope")?;
            series.envelope.as_mut().unwrap().push(value);
        }
    }
    if series.times.is_empty() {
        return Err(csv_error(path, "no data rows"));
    }
    Ok(series)
}
