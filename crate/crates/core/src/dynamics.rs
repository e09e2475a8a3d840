//! Closed-loop simulation of second-order consensus under quantized
//! relative measurements.
//!
//! Each of the `N` agents carries an `n`-dimensional position and
//! velocity obeying
//!
//! ```text
//! x_i' = v_i
//! v_i' = f(x_i, v_i, t) + u_i
//! u = -sigma^2 (Ew ⊗ I_n) q(x_e) - sigma^3 (Ew ⊗ I_n) q(v_e)
//! ```
//!
//! where `Ew` is the weighted in-incidence matrix, `x_e = (E^T ⊗ I_n) x`
//! stacks the relative states along edges, and `q` is applied
//! componentwise. Integration is classical fixed-step RK4 with the
//! quantizer applied inside every stage evaluation, so the integrator
//! sees exactly the discontinuous closed loop.
//!
//! [`reduced_rhs_check`] validates recorded trajectories against the
//! tree-coordinate form of the dynamics by centered differences,
//! masking samples where the quantizer switches levels inside the
//! difference stencil.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::decomposition::EdgeDecomposition;
use crate::linalg;
use crate::quantizer::{QuantizerError, QuantizerSpec};

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Errors from simulation and trajectory checking.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    /// A scalar parameter is out of range.
    #[error("invalid simulation parameter: {name}")]
    InvalidParameter {
        /// Which parameter.
        name: &'static str,
    },
    /// A buffer or state dimension does not match the scenario.
    #[error("dimension mismatch for {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        /// What was being sized.
        context: &'static str,
        /// Required length.
        expected: usize,
        /// Provided length.
        found: usize,
    },
    /// The state left the finite floats; the step size is too coarse for
    /// the chosen gain or the loop is unstable.
    #[error("state became non-finite at t = {time}")]
    NonFiniteState {
        /// Time of the failed step.
        time: f64,
    },
    /// The trajectory check needs at least three samples.
    #[error("reduced model check requires at least 3 samples, found {found}")]
    InsufficientSamples {
        /// Samples available.
        found: usize,
    },
    /// The trajectory check requires uniformly spaced samples.
    #[error("reduced model check requires uniformly spaced samples")]
    NonUniformSampling,
    /// The quantizer parameters are invalid.
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
}

/// Parameters of the Chua-circuit drift in dimensionless form.
///
/// The drift acts on the velocity only, which makes it Lipschitz in `v`
/// with constant well under the dissipation margins of moderately sized
/// graphs, while still being genuinely nonlinear (piecewise linear with
/// two breakpoints).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChuaParams {
    /// Scale of the first component.
    pub zeta: f64,
    /// Scale of the second component.
    pub tau: f64,
    /// Scale of the third component.
    pub chi: f64,
    /// Inner slope of the piecewise-linear characteristic.
    pub a: f64,
    /// Outer slope of the piecewise-linear characteristic.
    pub b: f64,
}

impl Default for ChuaParams {
    fn default() -> Self {
        Self {
            zeta: 0.01,
            tau: 0.001,
            chi: 0.018,
            a: -4.0 / 3.0,
            b: -3.0 / 4.0,
        }
    }
}

impl ChuaParams {
    fn eval(&self, v: &[f64], out: &mut [f64]) {
        let nonlinearity =
            self.b * v[0] + 0.5 * (self.a - self.b) * ((v[0] + 1.0).abs() - (v[0] - 1.0).abs());
        out[0] = self.zeta * (-v[0] + v[1] - nonlinearity);
        out[1] = self.tau * (v[0] - v[1] + v[2]);
        out[2] = -self.chi * v[1];
    }
}

/// A per-agent drift term `f(x_i, v_i, t)`.
pub trait Drift {
    /// Writes `f(x, v, t)` into `out`; all slices have the agent
    /// dimension `n`.
    fn eval(&self, x: &[f64], v: &[f64], t: f64, out: &mut [f64]);

    /// The agent dimension this drift requires, if it is specific.
    fn required_dim(&self) -> Option<usize> {
        None
    }
}

/// The built-in drift models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftModel {
    /// No drift: double-integrator agents.
    Zero,
    /// Chua-circuit drift on the velocity, requires `n = 3`.
    Chua(ChuaParams),
}

impl Drift for DriftModel {
    fn eval(&self, _x: &[f64], v: &[f64], _t: f64, out: &mut [f64]) {
        match self {
            Self::Zero => out.fill(0.0),
            Self::Chua(params) => params.eval(v, out),
        }
    }

    fn required_dim(&self) -> Option<usize> {
        match self {
            Self::Zero => None,
            Self::Chua(_) => Some(3),
        }
    }
}

/// How the initial agent states are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Explicit stacked states, each of length `N * n`, agent-major.
    Explicit {
        /// Stacked positions.
        positions: Vec<f64>,
        /// Stacked velocities.
        velocities: Vec<f64>,
    },
    /// Componentwise uniform draws from fixed boxes, reproducible by
    /// seed.
    SeededUniform {
        /// `[lo, hi)` for every position component.
        position_range: (f64, f64),
        /// `[lo, hi)` for every velocity component.
        velocity_range: (f64, f64),
        /// Stream seed.
        seed: u64,
    },
}

impl InitialState {
    fn realize(&self, num_nodes: usize, n: usize) -> Result<(DVector<f64>, DVector<f64>), SimError> {
        let len = num_nodes * n;
        match self {
            Self::Explicit { positions, velocities } => {
                if positions.len() != len {
                    return Err(SimError::DimensionMismatch {
                        context: "initial positions",
                        expected: len,
                        found: positions.len(),
                    });
                }
                if velocities.len() != len {
                    return Err(SimError::DimensionMismatch {
                        context: "initial velocities",
                        expected: len,
                        found: velocities.len(),
                    });
                }
                Ok((
                    DVector::from_column_slice(positions),
                    DVector::from_column_slice(velocities),
                ))
            }
            Self::SeededUniform { position_range, velocity_range, seed } => {
                for (range, name) in [
                    (position_range, "position_range"),
                    (velocity_range, "velocity_range"),
                ] {
                    if !range.0.is_finite() || !range.1.is_finite() || range.0 >= range.1 {
                        return Err(SimError::InvalidParameter { name });
                    }
                }
                let mut rng = ChaCha12Rng::seed_from_u64(*seed);
                let x = DVector::from_fn(len, |_, _| {
                    rng.random_range(position_range.0..position_range.1)
                });
                let v = DVector::from_fn(len, |_, _| {
                    rng.random_range(velocity_range.0..velocity_range.1)
                });
                Ok((x, v))
            }
        }
    }
}

/// Integration horizon and recording cadence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Final time; the run covers `[0, horizon]`.
    pub horizon: f64,
    /// Fixed RK4 step.
    pub dt: f64,
    /// Record every this many steps (1 records every step).
    pub sample_every: usize,
}

/// A recorded closed-loop trajectory.
///
/// All stacked vectors are agent-major (`n` consecutive entries per
/// agent) and edge vectors follow the decomposition's permuted edge
/// order, tree edges first, so the tree blocks are simple prefixes.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Agent state dimension.
    pub agent_dim: usize,
    /// Sample times.
    pub times: Vec<f64>,
    /// Stacked positions per sample, length `N * n`.
    pub positions: Vec<DVector<f64>>,
    /// Stacked velocities per sample.
    pub velocities: Vec<DVector<f64>>,
    /// Stacked relative positions per sample, length `L * n`.
    pub edge_positions: Vec<DVector<f64>>,
    /// Stacked relative velocities per sample.
    pub edge_velocities: Vec<DVector<f64>>,
    /// Tree block of the relative positions, length `(N - 1) * n`.
    pub tree_positions: Vec<DVector<f64>>,
    /// Tree block of the relative velocities.
    pub tree_velocities: Vec<DVector<f64>>,
    /// `sqrt(|x_T|^2 + |v_T|^2)` per sample.
    pub tree_norms: Vec<f64>,
    /// Whether any integrator stage observed a quantizer level change
    /// between the previous recorded sample and this one. Always false
    /// for the first sample and under exact measurements.
    pub switch_flags: Vec<bool>,
}

impl Trajectory {
    /// Number of recorded samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Whether nothing was recorded.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest tree-state norm over the trailing `fraction` of samples,
    /// or `None` when the trajectory is empty or `fraction` is not in
    /// `(0, 1]`.
    pub fn steady_state_error(&self, fraction: f64) -> Option<f64> {
        if self.tree_norms.is_empty() || !(fraction > 0.0 && fraction <= 1.0) {
            return None;
        }
        let len = self.tree_norms.len();
        let window = ((fraction * len as f64).ceil() as usize).clamp(1, len);
        self.tree_norms[len - window..]
            .iter()
            .copied()
            .max_by(f64::total_cmp)
    }
}

/// Result of checking a trajectory against the reduced tree dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsCheck {
    /// Largest max-abs residual between the centered difference of the
    /// tree state and the reduced right-hand side.
    pub max_residual: f64,
    /// Interior samples that entered the residual.
    pub checked: usize,
    /// Interior samples skipped because the quantizer switched levels
    /// inside the difference stencil.
    pub masked: usize,
}

fn quantize_edge_states(
    decomposition: &EdgeDecomposition,
    quantizer: QuantizerSpec,
    n: usize,
    x: &DVector<f64>,
    v: &DVector<f64>,
    qx: &mut DVector<f64>,
    qv: &mut DVector<f64>,
) {
    for k in 0..decomposition.num_edges() {
        let tail = decomposition.tails[k] * n;
        let head = decomposition.heads[k] * n;
        for d in 0..n {
            qx[k * n + d] = quantizer.quantize(x[tail + d] - x[head + d]);
            qv[k * n + d] = quantizer.quantize(v[tail + d] - v[head + d]);
        }
    }
}

fn add_control(
    decomposition: &EdgeDecomposition,
    sigma: f64,
    n: usize,
    qx: &DVector<f64>,
    qv: &DVector<f64>,
    out: &mut DVector<f64>,
) {
    let s2 = sigma.powi(2);
    let s3 = sigma.powi(3);
    for k in 0..decomposition.num_edges() {
        let head = decomposition.heads[k] * n;
        let w = decomposition.weights[k];
        for d in 0..n {
            out[head + d] += w * (s2 * qx[k * n + d] + s3 * qv[k * n + d]);
        }
    }
}

/// Writes the quantized relative-feedback control `u` for the stacked
/// state `(x, v)` into `out` (length `N * n`, overwritten).
///
/// # Errors
///
/// [`SimError::DimensionMismatch`] when any slice has the wrong length
/// and [`SimError::Quantizer`] for an invalid quantizer.
pub fn control_input(
    decomposition: &EdgeDecomposition,
    sigma: f64,
    quantizer: QuantizerSpec,
    n: usize,
    x: &[f64],
    v: &[f64],
    out: &mut [f64],
) -> Result<(), SimError> {
    quantizer.validate()?;
    let len = decomposition.num_nodes() * n;
    for (found, context) in [(x.len(), "positions"), (v.len(), "velocities"), (out.len(), "control buffer")] {
        if found != len {
            return Err(SimError::DimensionMismatch { context, expected: len, found });
        }
    }
    let xv = DVector::from_column_slice(x);
    let vv = DVector::from_column_slice(v);
    let edge_len = decomposition.num_edges() * n;
    let mut qx = DVector::zeros(edge_len);
    let mut qv = DVector::zeros(edge_len);
    quantize_edge_states(decomposition, quantizer, n, &xv, &vv, &mut qx, &mut qv);
    let mut u = DVector::zeros(len);
    add_control(decomposition, sigma, n, &qx, &qv, &mut u);
    out.copy_from_slice(u.as_slice());
    Ok(())
}

struct Rhs<'a> {
    decomposition: &'a EdgeDecomposition,
    sigma: f64,
    quantizer: QuantizerSpec,
    drift: &'a dyn Drift,
    n: usize,
    drift_buf: Vec<f64>,
    // Quantized edge states of the most recent stage evaluation.
    qx: DVector<f64>,
    qv: DVector<f64>,
}

impl Rhs<'_> {
    fn eval(
        &mut self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        t: f64,
        dx: &mut DVector<f64>,
        dv: &mut DVector<f64>,
    ) {
        dx.copy_from(v);
        let n = self.n;
        for i in 0..self.decomposition.num_nodes() {
            self.drift.eval(
                &x.as_slice()[i * n..(i + 1) * n],
                &v.as_slice()[i * n..(i + 1) * n],
                t,
                &mut self.drift_buf,
            );
            dv.as_mut_slice()[i * n..(i + 1) * n].copy_from_slice(&self.drift_buf);
        }
        quantize_edge_states(
            self.decomposition,
            self.quantizer,
            n,
            x,
            v,
            &mut self.qx,
            &mut self.qv,
        );
        add_control(self.decomposition, self.sigma, n, &self.qx, &self.qv, dv);
    }
}

fn edge_states(
    decomposition: &EdgeDecomposition,
    n: usize,
    x: &DVector<f64>,
) -> DVector<f64> {
    let mut out = DVector::zeros(decomposition.num_edges() * n);
    for k in 0..decomposition.num_edges() {
        let tail = decomposition.tails[k] * n;
        let head = decomposition.heads[k] * n;
        for d in 0..n {
            out[k * n + d] = x[tail + d] - x[head + d];
        }
    }
    out
}

/// Integrates the closed loop and records a sampled trajectory.
///
/// Time advances as `t_k = k * dt` for `round(horizon / dt)` steps;
/// samples are recorded at step multiples of `sample_every`, starting
/// with the initial state.
///
/// # Errors
///
/// Validation errors for malformed inputs and
/// [`SimError::NonFiniteState`] when the state diverges.
pub fn simulate(
    decomposition: &EdgeDecomposition,
    sigma: f64,
    quantizer: QuantizerSpec,
    drift: &dyn Drift,
    initial: &InitialState,
    n: usize,
    params: SimParams,
) -> Result<Trajectory, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter { name: "n" });
    }
    if let Some(required) = drift.required_dim() {
        if required != n {
            return Err(SimError::DimensionMismatch {
                context: "drift state dimension",
                expected: required,
                found: n,
            });
        }
    }
    quantizer.validate()?;
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(SimError::InvalidParameter { name: "sigma" });
    }
    if !params.horizon.is_finite() || params.horizon <= 0.0 {
        return Err(SimError::InvalidParameter { name: "horizon" });
    }
    if !params.dt.is_finite() || params.dt <= 0.0 || params.dt > params.horizon {
        return Err(SimError::InvalidParameter { name: "dt" });
    }
    if params.sample_every == 0 {
        return Err(SimError::InvalidParameter { name: "sample_every" });
    }

    let num_nodes = decomposition.num_nodes();
    let tree_len = decomposition.tree_count() * n;
    let (mut x, mut v) = initial.realize(num_nodes, n)?;
    let steps = (params.horizon / params.dt).round() as usize;
    if steps == 0 {
        return Err(SimError::InvalidParameter { name: "horizon" });
    }

    let edge_len = decomposition.num_edges() * n;
    let mut rhs = Rhs {
        decomposition,
        sigma,
        quantizer,
        drift,
        n,
        drift_buf: vec![0.0; n],
        qx: DVector::zeros(edge_len),
        qv: DVector::zeros(edge_len),
    };

    let len = num_nodes * n;
    let mut k1x = DVector::zeros(len);
    let mut k1v = DVector::zeros(len);
    let mut k2x = DVector::zeros(len);
    let mut k2v = DVector::zeros(len);
    let mut k3x = DVector::zeros(len);
    let mut k3v = DVector::zeros(len);
    let mut k4x = DVector::zeros(len);
    let mut k4v = DVector::zeros(len);
    let mut xa = DVector::zeros(len);
    let mut va = DVector::zeros(len);

    let mut trajectory = Trajectory {
        agent_dim: n,
        times: Vec::new(),
        positions: Vec::new(),
        velocities: Vec::new(),
        edge_positions: Vec::new(),
        edge_velocities: Vec::new(),
        tree_positions: Vec::new(),
        tree_velocities: Vec::new(),
        tree_norms: Vec::new(),
        switch_flags: Vec::new(),
    };
    let record = |t: f64, x: &DVector<f64>, v: &DVector<f64>, switched: bool, traj: &mut Trajectory| {
        let ex = edge_states(decomposition, n, x);
        let ev = edge_states(decomposition, n, v);
        let tx = ex.rows(0, tree_len).into_owned();
        let tv = ev.rows(0, tree_len).into_owned();
        let norm = (tx.norm_squared() + tv.norm_squared()).sqrt();
        traj.times.push(t);
        traj.positions.push(x.clone());
        traj.velocities.push(v.clone());
        traj.edge_positions.push(ex);
        traj.edge_velocities.push(ev);
        traj.tree_positions.push(tx);
        traj.tree_velocities.push(tv);
        traj.tree_norms.push(norm);
        traj.switch_flags.push(switched);
    };

    // Switch detection: the discrete trajectory depends only on the
    // quantized values the stages observed, so comparing each stage
    // against the first stage of the step, and first stages across
    // steps, detects every level change that influenced it. Exact
    // measurements have no levels and are never flagged.
    let track_switches = !matches!(quantizer, QuantizerSpec::None);
    let mut first_qx = DVector::zeros(edge_len);
    let mut first_qv = DVector::zeros(edge_len);
    let mut prev_qx = DVector::zeros(edge_len);
    let mut prev_qv = DVector::zeros(edge_len);
    let mut have_prev = false;
    let mut switched = false;

    let h = params.dt;
    for k in 0..=steps {
        let t = k as f64 * h;
        if k % params.sample_every == 0 {
            record(t, &x, &v, switched, &mut trajectory);
            switched = false;
        }
        if k == steps {
            break;
        }

        rhs.eval(&x, &v, t, &mut k1x, &mut k1v);
        if track_switches {
            first_qx.copy_from(&rhs.qx);
            first_qv.copy_from(&rhs.qv);
            if have_prev && (first_qx != prev_qx || first_qv != prev_qv) {
                switched = true;
            }
            prev_qx.copy_from(&first_qx);
            prev_qv.copy_from(&first_qv);
            have_prev = true;
        }

        xa.copy_from(&x);
        xa.axpy(0.5 * h, &k1x, 1.0);
        va.copy_from(&v);
        va.axpy(0.5 * h, &k1v, 1.0);
        rhs.eval(&xa, &va, t + 0.5 * h, &mut k2x, &mut k2v);
        switched |= track_switches && (rhs.qx != first_qx || rhs.qv != first_qv);

        xa.copy_from(&x);
        xa.axpy(0.5 * h, &k2x, 1.0);
        va.copy_from(&v);
        va.axpy(0.5 * h, &k2v, 1.0);
        rhs.eval(&xa, &va, t + 0.5 * h, &mut k3x, &mut k3v);
        switched |= track_switches && (rhs.qx != first_qx || rhs.qv != first_qv);

        xa.copy_from(&x);
        xa.axpy(h, &k3x, 1.0);
        va.copy_from(&v);
        va.axpy(h, &k3v, 1.0);
        rhs.eval(&xa, &va, t + h, &mut k4x, &mut k4v);
        switched |= track_switches && (rhs.qx != first_qx || rhs.qv != first_qv);

        let w = h / 6.0;
        x.axpy(w, &k1x, 1.0);
        x.axpy(2.0 * w, &k2x, 1.0);
        x.axpy(2.0 * w, &k3x, 1.0);
        x.axpy(w, &k4x, 1.0);
        v.axpy(w, &k1v, 1.0);
        v.axpy(2.0 * w, &k2v, 1.0);
        v.axpy(2.0 * w, &k3v, 1.0);
        v.axpy(w, &k4v, 1.0);

        if !(x.iter().all(|c| c.is_finite()) && v.iter().all(|c| c.is_finite())) {
            return Err(SimError::NonFiniteState { time: (k + 1) as f64 * h });
        }
    }
    Ok(trajectory)
}

/// Checks a recorded trajectory against the reduced tree dynamics
///
/// ```text
/// x_T' = v_T
/// v_T' = (E_T^T ⊗ I_n) F - sigma^2 (A ⊗ I_n) x_T - sigma^3 (A ⊗ I_n) v_T
///        - sigma^2 (B ⊗ I_n) w_x - sigma^3 (B ⊗ I_n) w_v
/// ```
///
/// where `A` is the essential edge Laplacian, `B` the tree coupling
/// matrix, `F` the stacked drift, and `w = q(z_e) - z_e` the
/// quantization error on the edge states. Derivatives are approximated
/// by centered differences over the recorded samples, so the residual
/// shrinks as `O(dt^2)` wherever the right-hand side is smooth; interior
/// samples are masked out when the quantized edge states differ anywhere
/// in the three-point stencil or the integrator flagged a stage-level
/// switch inside it ([`Trajectory::switch_flags`]), since the difference
/// quotient straddles a switching surface there.
///
/// # Errors
///
/// [`SimError::InsufficientSamples`] for fewer than three samples,
/// [`SimError::NonUniformSampling`] for irregular sample times, and
/// [`SimError::Quantizer`] for an invalid quantizer.
pub fn reduced_rhs_check(
    decomposition: &EdgeDecomposition,
    sigma: f64,
    quantizer: QuantizerSpec,
    drift: &dyn Drift,
    trajectory: &Trajectory,
) -> Result<RhsCheck, SimError> {
    quantizer.validate()?;
    let len = trajectory.len();
    if len < 3 {
        return Err(SimError::InsufficientSamples { found: len });
    }
    let dt = trajectory.times[1] - trajectory.times[0];
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::NonUniformSampling);
    }
    for i in 1..len {
        let gap = trajectory.times[i] - trajectory.times[i - 1];
        if (gap - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(SimError::NonUniformSampling);
        }
    }

    let n = trajectory.agent_dim;
    let num_nodes = decomposition.num_nodes();
    let s2 = sigma.powi(2);
    let s3 = sigma.powi(3);
    let et_t = decomposition.tree_incidence.transpose();
    let a = &decomposition.essential_edge_laplacian;
    let b = &decomposition.tree_in_incidence;

    let quantized: Vec<(DVector<f64>, DVector<f64>)> = (0..len)
        .map(|i| {
            (
                quantizer.quantize_vector(&trajectory.edge_positions[i]),
                quantizer.quantize_vector(&trajectory.edge_velocities[i]),
            )
        })
        .collect();

    let mut drift_buf = vec![0.0; n];
    let mut fstack = DVector::zeros(num_nodes * n);
    let mut max_residual = 0.0_f64;
    let mut checked = 0;
    let mut masked = 0;

    for i in 1..len - 1 {
        let switches = !matches!(quantizer, QuantizerSpec::None)
            && ([i - 1, i + 1].iter().any(|&j| {
                quantized[j].0 != quantized[i].0 || quantized[j].1 != quantized[i].1
            }) || trajectory.switch_flags.get(i).copied().unwrap_or(false)
                || trajectory.switch_flags.get(i + 1).copied().unwrap_or(false));
        if switches {
            masked += 1;
            continue;
        }

        let two_dt = trajectory.times[i + 1] - trajectory.times[i - 1];
        let dx_t = (&trajectory.tree_positions[i + 1] - &trajectory.tree_positions[i - 1]) / two_dt;
        let dv_t = (&trajectory.tree_velocities[i + 1] - &trajectory.tree_velocities[i - 1]) / two_dt;

        let x = &trajectory.positions[i];
        let v = &trajectory.velocities[i];
        for agent in 0..num_nodes {
            drift.eval(
                &x.as_slice()[agent * n..(agent + 1) * n],
                &v.as_slice()[agent * n..(agent + 1) * n],
                trajectory.times[i],
                &mut drift_buf,
            );
            fstack.as_mut_slice()[agent * n..(agent + 1) * n].copy_from_slice(&drift_buf);
        }

        let omega_x = &quantized[i].0 - &trajectory.edge_positions[i];
        let omega_v = &quantized[i].1 - &trajectory.edge_velocities[i];

        let mut rhs_v = linalg::block_apply(&et_t, &fstack, n);
        rhs_v.axpy(-s2, &linalg::block_apply(a, &trajectory.tree_positions[i], n), 1.0);
        rhs_v.axpy(-s3, &linalg::block_apply(a, &trajectory.tree_velocities[i], n), 1.0);
        rhs_v.axpy(-s2, &linalg::block_apply(b, &omega_x, n), 1.0);
        rhs_v.axpy(-s3, &linalg::block_apply(b, &omega_v, n), 1.0);

        let res_x = (&dx_t - &trajectory.tree_velocities[i]).abs().max();
        let res_v = (&dv_t - &rhs_v).abs().max();
        max_residual = max_residual.max(res_x).max(res_v);
        checked += 1;
    }

    if checked == 0 {
        return Err(SimError::InsufficientSamples { found: 0 });
    }
    Ok(RhsCheck { max_residual, checked, masked })
}
