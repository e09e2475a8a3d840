//! Scenario configuration files: TOML schema, validation, and
//! resolution into library types.
//!
//! A scenario file looks like:
//!
//! ```toml
//! sigma = 1.64
//! n = 3
//! xi2 = 4.3871e-3
//!
//! [graph]
//! edges = [[1, 2, 0.12], [2, 3, 0.24], [3, 4, 0.44], [3, 5, 0.43], [5, 1, 0.09]]
//!
//! [quantizer]
//! family = "uniform"
//! delta_u = 0.1
//!
//! [drift]
//! kind = "chua"
//!
//! [init]
//! kind = "seeded"
//! seed = 42
//! ```
//!
//! Graphs come either inline (`edges`) or from an edge-list file
//! (`path`, resolved relative to the configuration file). Validation
//! collects every problem before failing, so a broken file reports all
//! of its issues at once, each prefixed with the offending field.

use std::fmt::Write as _;
use std::path::Path;

use edgelap::certify::LipschitzBounds;
use edgelap::dynamics::{ChuaParams, DriftModel, InitialState, SimParams};
use edgelap::graph::{parse_edge_list, Digraph, Edge};
use edgelap::quantizer::QuantizerSpec;
use serde::Deserialize;

use crate::CliError;

fn default_horizon() -> f64 {
    300.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_sample_every() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sigma: f64,
    n: usize,
    #[serde(default)]
    xi1: f64,
    #[serde(default)]
    xi2: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_sample_every")]
    sample_every: usize,
    graph: RawGraph,
    quantizer: RawQuantizer,
    #[serde(default)]
    drift: RawDrift,
    #[serde(default)]
    init: RawInit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    path: Option<String>,
    edges: Option<Vec<(u32, u32, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    None,
    Uniform,
    Logarithmic,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuantizer {
    family: Family,
    delta_u: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DriftKind {
    Zero,
    Chua,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrift {
    kind: DriftKind,
    zeta: Option<f64>,
    tau: Option<f64>,
    chi: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
}

impl Default for RawDrift {
    fn default() -> Self {
        Self { kind: DriftKind::Zero, zeta: None, tau: None, chi: None, a: None, b: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum InitKind {
    Seeded,
    Explicit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    kind: InitKind,
    seed: Option<u64>,
    position_range: Option<(f64, f64)>,
    velocity_range: Option<(f64, f64)>,
    positions: Option<Vec<f64>>,
    velocities: Option<Vec<f64>>,
}

impl Default for RawInit {
    fn default() -> Self {
        Self {
            kind: InitKind::Seeded,
            seed: None,
            position_range: None,
            velocity_range: None,
            positions: None,
            velocities: None,
        }
    }
}

/// A fully validated scenario, ready to decompose, certify, and
/// simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// The communication digraph.
    pub graph: Digraph,
    /// Controller gain.
    pub sigma: f64,
    /// Agent state dimension.
    pub n: usize,
    /// Assumed drift Lipschitz bounds.
    pub lipschitz: LipschitzBounds,
    /// Measurement quantizer.
    pub quantizer: QuantizerSpec,
    /// Per-agent drift.
    pub drift: DriftModel,
    /// Initial state recipe.
    pub init: InitialState,
    /// Integration horizon and recording cadence.
    pub params: SimParams,
}

struct Issues(Vec<String>);

impl Issues {
    fn push(&mut self, field: &str, message: impl std::fmt::Display) {
        let mut line = String::new();
        let _ = write!(line, "{field}: {message}");
        self.0.push(line);
    }
}

fn load_graph(raw: &RawGraph, config_dir: &Path, issues: &mut Issues) -> Option<Digraph> {
    match (&raw.path, &raw.edges) {
        (Some(_), Some(_)) => {
            issues.push("graph", "give either `path` or `edges`, not both");
            None
        }
        (None, None) => {
            issues.push("graph", "one of `path` or `edges` is required");
            None
        }
        (Some(path), None) => {
            let resolved = config_dir.join(path);
            let text = match std::fs::read_to_string(&resolved) {
                Ok(text) => text,
                Err(err) => {
                    issues.push("graph.path", format_args!("cannot read {}: {err}", resolved.display()));
                    return None;
                }
            };
            match parse_edge_list(&text) {
                Ok(graph) => Some(graph),
                Err(err) => {
                    issues.push("graph.path", err);
                    None
                }
            }
        }
        (None, Some(edges)) => {
            if edges.is_empty() {
                issues.push("graph.edges", "at least one edge is required");
                return None;
            }
            let num_nodes = edges.iter().map(|&(t, h, _)| t.max(h)).max().unwrap_or(0) as usize;
            let edges: Vec<Edge> = edges
                .iter()
                .map(|&(t, h, w)| Edge::new(t as usize, h as usize, w))
                .collect();
            match Digraph::new(num_nodes, edges) {
                Ok(graph) => Some(graph),
                Err(err) => {
                    issues.push("graph.edges", err);
                    None
                }
            }
        }
    }
}

fn resolve_quantizer(raw: &RawQuantizer, issues: &mut Issues) -> Option<QuantizerSpec> {
    match (raw.family, raw.delta_u) {
        (Family::None, None) => Some(QuantizerSpec::None),
        (Family::None, Some(_)) => {
            issues.push("quantizer.delta_u", "not valid for family \"none\"");
            None
        }
        (Family::Uniform, Some(delta_u)) => match QuantizerSpec::uniform(delta_u) {
            Ok(q) => Some(q),
            Err(err) => {
                issues.push("quantizer.delta_u", err);
                None
            }
        },
        (Family::Logarithmic, Some(delta_u)) => match QuantizerSpec::logarithmic(delta_u) {
            Ok(q) => Some(q),
            Err(err) => {
                issues.push("quantizer.delta_u", err);
                None
            }
        },
        (Family::Uniform | Family::Logarithmic, None) => {
            issues.push("quantizer.delta_u", "required for this family");
            None
        }
    }
}

fn resolve_drift(raw: &RawDrift, n: usize, issues: &mut Issues) -> Option<DriftModel> {
    match raw.kind {
        DriftKind::Zero => {
            for (value, field) in [
                (raw.zeta, "drift.zeta"),
                (raw.tau, "drift.tau"),
                (raw.chi, "drift.chi"),
                (raw.a, "drift.a"),
                (raw.b, "drift.b"),
            ] {
                if value.is_some() {
                    issues.push(field, "only valid for kind = \"chua\"");
                }
            }
            Some(DriftModel::Zero)
        }
        DriftKind::Chua => {
            if n != 3 {
                issues.push("n", format_args!("drift kind \"chua\" requires n = 3, got {n}"));
            }
            let defaults = ChuaParams::default();
            let params = ChuaParams {
                zeta: raw.zeta.unwrap_or(defaults.zeta),
                tau: raw.tau.unwrap_or(defaults.tau),
                chi: raw.chi.unwrap_or(defaults.chi),
                a: raw.a.unwrap_or(defaults.a),
                b: raw.b.unwrap_or(defaults.b),
            };
            for (value, field) in [
                (params.zeta, "drift.zeta"),
                (params.tau, "drift.tau"),
                (params.chi, "drift.chi"),
                (params.a, "drift.a"),
                (params.b, "drift.b"),
            ] {
                if !value.is_finite() {
                    issues.push(field, "must be finite");
                }
            }
            Some(DriftModel::Chua(params))
        }
    }
}

fn resolve_init(
    raw: &RawInit,
    state_len: Option<usize>,
    issues: &mut Issues,
) -> Option<InitialState> {
    match raw.kind {
        InitKind::Seeded => {
            for (value, field) in [
                (raw.positions.as_ref(), "init.positions"),
                (raw.velocities.as_ref(), "init.velocities"),
            ] {
                if value.is_some() {
                    issues.push(field, "only valid for kind = \"explicit\"");
                }
            }
            let mut range_ok = true;
            for (range, field) in [
                (raw.position_range, "init.position_range"),
                (raw.velocity_range, "init.velocity_range"),
            ] {
                if let Some((lo, hi)) = range {
                    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                        issues.push(field, "bounds must be finite with lower < upper");
                        range_ok = false;
                    }
                }
            }
            if !range_ok {
                return None;
            }
            Some(InitialState::SeededUniform {
                position_range: raw.position_range.unwrap_or((-2.0, 2.0)),
                velocity_range: raw.velocity_range.unwrap_or((-2.0, 2.0)),
                seed: raw.seed.unwrap_or(42),
            })
        }
        InitKind::Explicit => {
            if raw.seed.is_some() {
                issues.push("init.seed", "only valid for kind = \"seeded\"");
            }
            for (range, field) in [
                (raw.position_range, "init.position_range"),
                (raw.velocity_range, "init.velocity_range"),
            ] {
                if range.is_some() {
                    issues.push(field, "only valid for kind = \"seeded\"");
                }
            }
            let mut ok = true;
            for (value, field) in [
                (raw.positions.as_ref(), "init.positions"),
                (raw.velocities.as_ref(), "init.velocities"),
            ] {
                match value {
                    None => {
                        issues.push(field, "required for kind = \"explicit\"");
                        ok = false;
                    }
                    Some(values) => {
                        if let Some(expected) = state_len {
                            if values.len() != expected {
                                issues.push(
                                    field,
                                    format_args!(
                                        "expected length {expected} (nodes x n), found {}",
                                        values.len()
                                    ),
                                );
                                ok = false;
                            }
                        }
                        if values.iter().any(|v| !v.is_finite()) {
                            issues.push(field, "all entries must be finite");
                            ok = false;
                        }
                    }
                }
            }
            if !ok {
                return None;
            }
            Some(InitialState::Explicit {
                positions: raw.positions.clone().unwrap(),
                velocities: raw.velocities.clone().unwrap(),
            })
        }
    }
}

/// Loads and validates a scenario file.
///
/// # Errors
///
/// [`CliError::Io`] when the file cannot be read and
/// [`CliError::Config`] carrying every validation issue found.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|err| CliError::Config { issues: vec![err.to_string()] })?;
    let config_dir = path.parent().unwrap_or_else(|| Path::new("."));

    let mut issues = Issues(Vec::new());

    if !raw.sigma.is_finite() || raw.sigma <= 0.0 {
        issues.push("sigma", "must be finite and > 0");
    }
    if raw.n == 0 {
        issues.push("n", "must be >= 1");
    }
    if !raw.xi1.is_finite() || raw.xi1 < 0.0 {
        issues.push("xi1", "must be finite and >= 0");
    }
    if !raw.xi2.is_finite() || raw.xi2 < 0.0 {
        issues.push("xi2", "must be finite and >= 0");
    }
    if !raw.horizon.is_finite() || raw.horizon <= 0.0 {
        issues.push("horizon", "must be finite and > 0");
    }
    if !raw.dt.is_finite() || raw.dt <= 0.0 {
        issues.push("dt", "must be finite and > 0");
    } else if raw.horizon.is_finite() && raw.dt > raw.horizon {
        issues.push("dt", "must not exceed the horizon");
    }
    if raw.sample_every == 0 {
        issues.push("sample_every", "must be >= 1");
    }

    let graph = load_graph(&raw.graph, config_dir, &mut issues);
    let quantizer = resolve_quantizer(&raw.quantizer, &mut issues);
    let drift = resolve_drift(&raw.drift, raw.n, &mut issues);
    let state_len = graph.as_ref().map(|g| g.num_nodes() * raw.n);
    let init = resolve_init(&raw.init, state_len, &mut issues);

    if !issues.0.is_empty() {
        return Err(CliError::Config { issues: issues.0 });
    }

    Ok(Scenario {
        graph: graph.unwrap(),
        sigma: raw.sigma,
        n: raw.n,
        lipschitz: LipschitzBounds { xi1: raw.xi1, xi2: raw.xi2 },
        quantizer: quantizer.unwrap(),
        drift: drift.unwrap(),
        init: init.unwrap(),
        params: SimParams {
            horizon: raw.horizon,
            dt: raw.dt,
            sample_every: raw.sample_every,
        },
    })
}
