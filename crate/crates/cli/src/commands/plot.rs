//! `plot`: render a trajectory CSV to a standalone SVG.

use std::path::Path;

use crate::csvio::read_norm_series;
use crate::svg::{render, Series};
use crate::CliError;

/// Reads the norm columns from `csv` and writes an SVG to `out`.
///
/// # Errors
///
/// [`CliError::Csv`] on malformed input, [`CliError::Io`] when the
/// output file cannot be written.
pub fn run(csv: &Path, out: &Path) -> Result<(), CliError> {
    let series = read_norm_series(csv)?;

    let mut plotted = vec![Series {
        label: "|z_T|",
        times: &series.times,
        values: &series.norms,
        dashed: false,
    }];
    if let Some(envelope) = &series.envelope {
        plotted.push(Series {
            label: "certified envelope",
            times: &series.times,
            values: envelope,
            dashed: true,
        });
    }

    let document = render("tree coordinate norm", &plotted);
    std::fs::write(out, document).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    println!("wrote {}", out.display());
    Ok(())
}
