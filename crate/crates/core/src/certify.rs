//! Lyapunov stability certificates for the quantized relative-feedback
//! protocol.
//!
//! Given the essential edge Laplacian `A` of a decomposed digraph (all of
//! whose eigenvalues have positive real part) and a controller gain
//! `sigma > 1`, the certificate is assembled as follows:
//!
//! 1. Solve `H A + A^T H = I` for the symmetric positive definite `H`
//!    ([`solve_lyapunov`], a dense vectorized solve).
//! 2. Form the composite Lyapunov matrix `P = [[sigma H, H], [H, sigma H]]`
//!    and the reduced closed-loop operator
//!    `LT = [[0, I], [-sigma^2 A, -sigma^3 A]]`, together with the
//!    disturbance input map `LT1 = [[0, 0], [-sigma^2 B, -sigma^3 B]]`
//!    where `B` is the tree coupling matrix.
//! 3. The dissipation matrix `Q = -(P LT + LT^T P)` has the closed form
//!    `[[sigma^2 I, sigma^3 I - sigma H], [sigma^3 I - sigma H,
//!    sigma^4 I - 2 H]]` and is positive definite exactly when
//!    `sigma > sigma_min = sqrt(lambda_max(H) / 2 + 1)`, witnessed by the
//!    Schur complement identity
//!    `Q3 - Q2^T Q1^{-1} Q2 = H (2 (sigma^2 - 1) I - H)`.
//! 4. Drift uncertainty enters through Lipschitz bounds `(xi1, xi2)`:
//!    `margin = lambda_min(Q) - 2 max(xi1, xi2) ||P||`.
//!
//! A feasible certificate (positive margin) yields:
//!
//! - a steady-state radius under uniform quantization with step `delta_u`:
//!   `2 sqrt(2 n L) delta_u ||P LT1|| / margin`,
//! - an admissible relative-quantization range `delta_l <` [`delta_l_max`]
//!   `= margin / (2 ||P LT1|| ||R^T||)` with exponential decay constant
//!   `pi(delta_l) = margin - 2 delta_l ||P LT1|| ||R^T||`, and
//! - an exponential [`Envelope`] `|z_T(t)| <= prefactor exp(-rate t)
//!   |z_T(0)|` on the tree state.
//!
//! All norms are spectral (largest singular value).
//!
//! [`delta_l_max`]: StabilityCertificate::delta_l_max

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::decomposition::EdgeDecomposition;
use crate::dynamics::Drift;
use crate::linalg;

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Largest acceptable max-abs residual of `H A + A^T H - I`.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;

/// Errors from certificate construction and evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifyError {
    /// The gain must be finite and strictly greater than 1.
    #[error("gain sigma must be finite and > 1, got {sigma}")]
    InvalidGain {
        /// Offending gain.
        sigma: f64,
    },
    /// Lipschitz bounds must be finite and nonnegative.
    #[error("Lipschitz bounds must be finite and >= 0, got xi1={xi1}, xi2={xi2}")]
    InvalidLipschitz {
        /// Position-coupling bound.
        xi1: f64,
        /// Velocity-coupling bound.
        xi2: f64,
    },
    /// The state dimension must be at least 1.
    #[error("state dimension n must be >= 1, got {n}")]
    InvalidDimension {
        /// Offending dimension.
        n: usize,
    },
    /// A quantizer step must be finite and strictly positive.
    #[error("quantizer step must be finite and > 0, got {delta}")]
    InvalidDelta {
        /// Offending step.
        delta: f64,
    },
    /// A target radius must be finite and strictly positive.
    #[error("target radius must be finite and > 0, got {radius}")]
    InvalidRadius {
        /// Offending radius.
        radius: f64,
    },
    /// An initial norm must be finite and nonnegative.
    #[error("initial norm must be finite and >= 0, got {norm}")]
    InvalidNorm {
        /// Offending norm.
        norm: f64,
    },
    /// A sampling box must be a nonempty finite interval.
    #[error("sample box must satisfy lo < hi with finite bounds, got [{lo}, {hi}]")]
    InvalidSampleBox {
        /// Lower bound.
        lo: f64,
        /// Upper bound.
        hi: f64,
    },
    /// Lipschitz estimation needs at least two sample pairs.
    #[error("Lipschitz estimation requires at least 2 samples, got {samples}")]
    InvalidSamples {
        /// Requested sample count.
        samples: usize,
    },
    /// The essential edge Laplacian has an eigenvalue with nonpositive
    /// real part, so no positive definite Lyapunov solution exists.
    #[error("matrix is not positive stable: eigenvalue real part {min_real_part} <= 0")]
    NotPositiveStable {
        /// Smallest real part found.
        min_real_part: f64,
    },
    /// An iterative eigensolver failed to converge.
    #[error("eigenvalue computation failed to converge for {context}")]
    EigenFailure {
        /// Which matrix was being factored.
        context: &'static str,
    },
    /// A dense linear solve failed.
    #[error("singular linear system while solving {context}")]
    SingularSystem {
        /// Which system failed.
        context: &'static str,
    },
    /// The Lyapunov residual exceeded [`LYAPUNOV_RESIDUAL_TOL`].
    #[error("Lyapunov residual {residual} exceeds tolerance {tol}")]
    ResidualTooLarge {
        /// Measured max-abs residual.
        residual: f64,
        /// The tolerance it exceeded.
        tol: f64,
    },
    /// The Lyapunov solution is not positive definite.
    #[error("Lyapunov solution is not positive definite: lambda_min = {lambda_min}")]
    NotPositiveDefinite {
        /// Smallest eigenvalue of the solution.
        lambda_min: f64,
    },
    /// The gain does not exceed the certified threshold.
    #[error("infeasible gain: sigma = {sigma} <= sigma_min = {sigma_min}")]
    InfeasibleGain {
        /// Requested gain.
        sigma: f64,
        /// Required threshold.
        sigma_min: f64,
    },
    /// The Lipschitz terms consume the whole dissipation margin.
    #[error("infeasible margin: {margin} <= 0")]
    InfeasibleMargin {
        /// The nonpositive margin.
        margin: f64,
    },
    /// The relative quantization level is outside the certified range.
    #[error("infeasible relative quantization: delta_l = {delta_l} >= delta_l_max = {delta_l_max}")]
    InfeasibleDelta {
        /// Requested level.
        delta_l: f64,
        /// Certified exclusive upper bound.
        delta_l_max: f64,
    },
    /// The requested radius is already met at `t = 0`.
    #[error("target radius {radius} is not below the initial envelope {initial_bound}")]
    RadiusTooLarge {
        /// Requested radius.
        radius: f64,
        /// Envelope value at `t = 0`.
        initial_bound: f64,
    },
}

/// Lipschitz bounds on the drift: `|f(x,v,t) - f(y,w,t)| <= xi1 |x - y| +
/// xi2 |v - w|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBounds {
    /// Position-coupling bound, finite and nonnegative.
    pub xi1: f64,
    /// Velocity-coupling bound, finite and nonnegative.
    pub xi2: f64,
}

impl LipschitzBounds {
    /// Bounds for a drift with no state coupling.
    pub fn zero() -> Self {
        Self { xi1: 0.0, xi2: 0.0 }
    }

    fn validate(&self) -> Result<(), CertifyError> {
        if !self.xi1.is_finite() || self.xi1 < 0.0 || !self.xi2.is_finite() || self.xi2 < 0.0 {
            return Err(CertifyError::InvalidLipschitz { xi1: self.xi1, xi2: self.xi2 });
        }
        Ok(())
    }
}

/// Why a certificate failed to certify stability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// `sigma <= sigma_min`: the dissipation matrix is not positive
    /// definite.
    GainBelowThreshold {
        /// Requested gain.
        sigma: f64,
        /// Required threshold.
        sigma_min: f64,
    },
    /// The Lipschitz terms consume the whole dissipation margin.
    NonPositiveMargin {
        /// The nonpositive margin.
        margin: f64,
    },
}

impl core::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::GainBelowThreshold { sigma, sigma_min } => {
                write!(f, "gain below threshold: sigma = {sigma} <= sigma_min = {sigma_min}")
            }
            Self::NonPositiveMargin { margin } => {
                write!(f, "nonpositive margin: {margin}")
            }
        }
    }
}

/// Which closed-form envelope constants to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeVariant {
    /// Tight constants implied by the quadratic form:
    /// prefactor `sqrt(lambda_max(P) / lambda_min(P))`, rate
    /// `pi / (2 lambda_max(P))`.
    Rigorous,
    /// The looser constants often quoted alongside this construction in
    /// the consensus literature: prefactor `lambda_max(P) / lambda_min(P)`,
    /// rate `pi / lambda_max(P)`. Kept for comparison; it decays faster
    /// but starts higher.
    Reference,
}

/// An exponential bound `t -> prefactor * exp(-rate * t) * z0_norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    /// Multiplier on the initial norm, at least 1.
    pub prefactor: f64,
    /// Exponential decay rate, strictly positive.
    pub rate: f64,
}

impl Envelope {
    /// Evaluates the bound at time `t >= 0` for initial norm `z0_norm`.
    pub fn bound(&self, t: f64, z0_norm: f64) -> f64 {
        self.prefactor * (-self.rate * t).exp() * z0_norm
    }

    /// Smallest `t` with `bound(t, z0_norm) <= r`, in closed form.
    ///
    /// # Errors
    ///
    /// [`CertifyError::InvalidRadius`] and [`CertifyError::InvalidNorm`]
    /// for malformed inputs; [`CertifyError::RadiusTooLarge`] when the
    /// envelope already satisfies `r` at `t = 0` (the infimum is 0 and no
    /// positive crossing time exists).
    pub fn convergence_time(&self, r: f64, z0_norm: f64) -> Result<f64, CertifyError> {
        if !r.is_finite() || r <= 0.0 {
            return Err(CertifyError::InvalidRadius { radius: r });
        }
        if !z0_norm.is_finite() || z0_norm < 0.0 {
            return Err(CertifyError::InvalidNorm { norm: z0_norm });
        }
        let initial_bound = self.prefactor * z0_norm;
        if r >= initial_bound {
            return Err(CertifyError::RadiusTooLarge { radius: r, initial_bound });
        }
        Ok((initial_bound / r).ln() / self.rate)
    }
}

/// A fully evaluated stability certificate for one decomposed digraph,
/// gain, and Lipschitz assumption.
///
/// Scalar fields are independent of the agent state dimension `n`; only
/// [`Self::radius`] depends on it, through the `sqrt(2 n L)` disturbance
/// aggregation factor.
#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    /// Controller gain.
    pub sigma: f64,
    /// Assumed drift Lipschitz bounds.
    pub lipschitz: LipschitzBounds,
    /// Number of tree coordinates `N - 1`.
    pub num_tree_coords: usize,
    /// Number of edges `L`.
    pub num_edges: usize,
    /// The essential edge Laplacian the certificate was built from.
    pub essential_edge_laplacian: DMatrix<f64>,
    /// Lyapunov solution `H`, symmetric positive definite.
    pub h: DMatrix<f64>,
    /// Composite Lyapunov matrix `P`, `2(N-1)` square.
    pub p: DMatrix<f64>,
    /// Dissipation matrix `Q = -(P LT + LT^T P)`, symmetrized.
    pub q: DMatrix<f64>,
    /// Reduced closed-loop operator `LT`.
    pub lt: DMatrix<f64>,
    /// Disturbance input map `LT1`, `2(N-1) x 2L`.
    pub lt1: DMatrix<f64>,
    /// Smallest eigenvalue of `H`.
    pub lambda_min_h: f64,
    /// Largest eigenvalue of `H`.
    pub lambda_max_h: f64,
    /// Gain threshold `sqrt(lambda_max(H) / 2 + 1)`.
    pub sigma_min: f64,
    /// Smallest eigenvalue of `Q`.
    pub lambda_min_q: f64,
    /// Smallest eigenvalue of `P`.
    pub lambda_min_p: f64,
    /// Largest eigenvalue of `P`.
    pub lambda_max_p: f64,
    /// Spectral norm of `P` (equals `lambda_max_p` for feasible gains).
    pub norm_p: f64,
    /// Spectral norm of `P LT1`.
    pub norm_p_lt1: f64,
    /// Spectral norm of `R^T`.
    pub norm_r_transpose: f64,
    /// Dissipation margin `lambda_min(Q) - 2 max(xi1, xi2) ||P||`.
    pub margin: f64,
    /// Exclusive upper bound on admissible `delta_l`; negative when the
    /// certificate is infeasible.
    pub delta_l_max: f64,
    /// Whether the certificate proves exponential convergence.
    pub feasible: bool,
    /// Why not, when `feasible` is false.
    pub infeasibility: Option<Infeasibility>,
}

impl StabilityCertificate {
    /// Certified steady-state radius on the tree state under uniform
    /// quantization with step `delta_u`, for agents of dimension `n`:
    /// `2 sqrt(2 n L) delta_u ||P LT1|| / margin`.
    ///
    /// # Errors
    ///
    /// Infeasibility errors when the certificate does not certify;
    /// [`CertifyError::InvalidDelta`] and [`CertifyError::InvalidDimension`]
    /// for malformed inputs.
    pub fn radius(&self, delta_u: f64, n: usize) -> Result<f64, CertifyError> {
        self.require_feasible()?;
        if !delta_u.is_finite() || delta_u <= 0.0 {
            return Err(CertifyError::InvalidDelta { delta: delta_u });
        }
        if n == 0 {
            return Err(CertifyError::InvalidDimension { n });
        }
        let aggregation = (2.0 * n as f64 * self.num_edges as f64).sqrt();
        Ok(2.0 * aggregation * delta_u * self.norm_p_lt1 / self.margin)
    }

    /// Certified exponential decay constant `pi(delta_l) = margin -
    /// 2 delta_l ||P LT1|| ||R^T||` under relative quantization error
    /// `delta_l`.
    ///
    /// # Errors
    ///
    /// Infeasibility errors when the certificate does not certify;
    /// [`CertifyError::InfeasibleDelta`] when `delta_l` is not strictly
    /// below [`Self::delta_l_max`] (nonnegative and finite required).
    pub fn decay_constant(&self, delta_l: f64) -> Result<f64, CertifyError> {
        self.require_feasible()?;
        if !delta_l.is_finite() || delta_l < 0.0 || delta_l >= self.delta_l_max {
            return Err(CertifyError::InfeasibleDelta {
                delta_l,
                delta_l_max: self.delta_l_max,
            });
        }
        Ok(self.margin - 2.0 * delta_l * self.norm_p_lt1 * self.norm_r_transpose)
    }

    /// The exponential envelope on `|z_T(t)|` under relative quantization
    /// error `delta_l` (use `0` for exact measurements).
    ///
    /// # Errors
    ///
    /// Same conditions as [`Self::decay_constant`].
    pub fn envelope(
        &self,
        delta_l: f64,
        variant: EnvelopeVariant,
    ) -> Result<Envelope, CertifyError> {
        let pi = self.decay_constant(delta_l)?;
        let ratio = self.lambda_max_p / self.lambda_min_p;
        Ok(match variant {
            EnvelopeVariant::Rigorous => Envelope {
                prefactor: ratio.sqrt(),
                rate: pi / (2.0 * self.lambda_max_p),
            },
            EnvelopeVariant::Reference => Envelope {
                prefactor: ratio,
                rate: pi / self.lambda_max_p,
            },
        })
    }

    /// Max-abs residual of `H A + A^T H - I`.
    pub fn lyapunov_residual(&self) -> f64 {
        let m = self.num_tree_coords;
        let a = &self.essential_edge_laplacian;
        let res = &self.h * a + a.transpose() * &self.h - DMatrix::<f64>::identity(m, m);
        linalg::max_abs(&res)
    }

    /// Max-abs residual between `Q` and its closed form
    /// `[[sigma^2 I, sigma^3 I - sigma H], [sigma^3 I - sigma H,
    /// sigma^4 I - 2 H]]`.
    pub fn q_closed_form_residual(&self) -> f64 {
        let m = self.num_tree_coords;
        let s = self.sigma;
        let identity = DMatrix::<f64>::identity(m, m);
        let off = &identity * s.powi(3) - &self.h * s;
        let mut expected = DMatrix::zeros(2 * m, 2 * m);
        expected
            .view_mut((0, 0), (m, m))
            .copy_from(&(&identity * s.powi(2)));
        expected.view_mut((0, m), (m, m)).copy_from(&off);
        expected.view_mut((m, 0), (m, m)).copy_from(&off);
        expected
            .view_mut((m, m), (m, m))
            .copy_from(&(&identity * s.powi(4) - &self.h * 2.0));
        linalg::max_abs(&(&self.q - expected))
    }

    /// Max-abs residual of the Schur complement identity
    /// `Q3 - Q2^T Q1^{-1} Q2 = H (2 (sigma^2 - 1) I - H)`.
    pub fn schur_complement_residual(&self) -> f64 {
        let m = self.num_tree_coords;
        let q1 = self.q.view((0, 0), (m, m)).into_owned();
        let q2 = self.q.view((0, m), (m, m)).into_owned();
        let q3 = self.q.view((m, m), (m, m)).into_owned();
        let q1_inv_q2 = match q1.lu().solve(&q2) {
            Some(x) => x,
            None => return f64::INFINITY,
        };
        let complement = q3 - q2.transpose() * q1_inv_q2;
        let identity = DMatrix::<f64>::identity(m, m);
        let expected = &self.h * (identity * (2.0 * (self.sigma.powi(2) - 1.0)) - &self.h);
        linalg::max_abs(&(complement - expected))
    }

    fn require_feasible(&self) -> Result<(), CertifyError> {
        match self.infeasibility {
            None => Ok(()),
            Some(Infeasibility::GainBelowThreshold { sigma, sigma_min }) => {
                Err(CertifyError::InfeasibleGain { sigma, sigma_min })
            }
            Some(Infeasibility::NonPositiveMargin { margin }) => {
                Err(CertifyError::InfeasibleMargin { margin })
            }
        }
    }
}

/// Solves `H A + A^T H = I` for symmetric positive definite `H` by a
/// dense solve of the vectorized system
/// `(A^T ⊗ I + I ⊗ A^T) vec(H) = vec(I)`.
///
/// # Errors
///
/// [`CertifyError::NotPositiveStable`] when some eigenvalue of `A` has
/// nonpositive real part; numerical variants when the solve fails or the
/// result violates the residual or definiteness checks.
pub fn solve_lyapunov(a: &DMatrix<f64>) -> Result<DMatrix<f64>, CertifyError> {
    assert_eq!(a.nrows(), a.ncols(), "Lyapunov input must be square");
    let m = a.nrows();
    if m == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let eigs = linalg::complex_eigenvalues(a)
        .ok_or(CertifyError::EigenFailure { context: "essential edge Laplacian" })?;
    let min_real_part = eigs.iter().map(|lam| lam.re).fold(f64::INFINITY, f64::min);
    if min_real_part <= 0.0 {
        return Err(CertifyError::NotPositiveStable { min_real_part });
    }

    let identity = DMatrix::<f64>::identity(m, m);
    let at = a.transpose();
    let system = at.kronecker(&identity) + identity.kronecker(&at);
    let rhs = DVector::from_column_slice(identity.as_slice());
    let vec_h = system
        .lu()
        .solve(&rhs)
        .ok_or(CertifyError::SingularSystem { context: "vectorized Lyapunov equation" })?;
    let raw = DMatrix::from_column_slice(m, m, vec_h.as_slice());
    let h = (&raw + raw.transpose()) * 0.5;

    let residual = linalg::max_abs(&(&h * a + a.transpose() * &h - identity));
    if residual > LYAPUNOV_RESIDUAL_TOL {
        return Err(CertifyError::ResidualTooLarge {
            residual,
            tol: LYAPUNOV_RESIDUAL_TOL,
        });
    }
    let (lambda_min, _) = linalg::symmetric_eigen_range(&h);
    if lambda_min <= 0.0 {
        return Err(CertifyError::NotPositiveDefinite { lambda_min });
    }
    Ok(h)
}

/// Builds the full certificate for a decomposed digraph.
///
/// The certificate is returned even when infeasible (with
/// [`StabilityCertificate::feasible`] false and the reason recorded) so
/// callers can report why; hard errors are reserved for invalid inputs
/// and numerical failures.
///
/// # Errors
///
/// [`CertifyError::InvalidGain`] for `sigma <= 1`,
/// [`CertifyError::InvalidLipschitz`] for malformed bounds, and the
/// [`solve_lyapunov`] errors.
pub fn build_certificate(
    decomposition: &EdgeDecomposition,
    sigma: f64,
    lipschitz: LipschitzBounds,
) -> Result<StabilityCertificate, CertifyError> {
    if !sigma.is_finite() || sigma <= 1.0 {
        return Err(CertifyError::InvalidGain { sigma });
    }
    lipschitz.validate()?;

    let a = &decomposition.essential_edge_laplacian;
    let b = &decomposition.tree_in_incidence;
    let m = decomposition.tree_count();
    let l = decomposition.num_edges();

    let h = solve_lyapunov(a)?;
    let (lambda_min_h, lambda_max_h) = linalg::symmetric_eigen_range(&h);
    let sigma_min = (lambda_max_h / 2.0 + 1.0).sqrt();

    let mut p = DMatrix::zeros(2 * m, 2 * m);
    p.view_mut((0, 0), (m, m)).copy_from(&(&h * sigma));
    p.view_mut((0, m), (m, m)).copy_from(&h);
    p.view_mut((m, 0), (m, m)).copy_from(&h);
    p.view_mut((m, m), (m, m)).copy_from(&(&h * sigma));

    let mut lt = DMatrix::zeros(2 * m, 2 * m);
    lt.view_mut((0, m), (m, m))
        .copy_from(&DMatrix::<f64>::identity(m, m));
    lt.view_mut((m, 0), (m, m)).copy_from(&(a * -sigma.powi(2)));
    lt.view_mut((m, m), (m, m)).copy_from(&(a * -sigma.powi(3)));

    let mut lt1 = DMatrix::zeros(2 * m, 2 * l);
    lt1.view_mut((m, 0), (m, l)).copy_from(&(b * -sigma.powi(2)));
    lt1.view_mut((m, l), (m, l)).copy_from(&(b * -sigma.powi(3)));

    let q_raw = -(&p * &lt + lt.transpose() * &p);
    let q = (&q_raw + q_raw.transpose()) * 0.5;

    let (lambda_min_q, _) = linalg::symmetric_eigen_range(&q);
    let (lambda_min_p, lambda_max_p) = linalg::symmetric_eigen_range(&p);
    let norm_p = linalg::spectral_norm(&p);
    let norm_p_lt1 = linalg::spectral_norm(&(&p * &lt1));
    let norm_r_transpose = linalg::spectral_norm(&decomposition.cut_basis.transpose());

    let margin = lambda_min_q - 2.0 * lipschitz.xi1.max(lipschitz.xi2) * norm_p;
    let delta_l_max = margin / (2.0 * norm_p_lt1 * norm_r_transpose);

    let infeasibility = if sigma <= sigma_min {
        Some(Infeasibility::GainBelowThreshold { sigma, sigma_min })
    } else if margin <= 0.0 {
        Some(Infeasibility::NonPositiveMargin { margin })
    } else {
        None
    };

    Ok(StabilityCertificate {
        sigma,
        lipschitz,
        num_tree_coords: m,
        num_edges: l,
        essential_edge_laplacian: a.clone(),
        h,
        p,
        q,
        lt,
        lt1,
        lambda_min_h,
        lambda_max_h,
        sigma_min,
        lambda_min_q,
        lambda_min_p,
        lambda_max_p,
        norm_p,
        norm_p_lt1,
        norm_r_transpose,
        margin,
        delta_l_max,
        feasible: infeasibility.is_none(),
        infeasibility,
    })
}

/// Empirically estimates drift Lipschitz bounds by sampling state pairs.
///
/// Draws `samples` pairs that differ only in position and `samples` pairs
/// that differ only in velocity, uniformly from the box
/// `sample_box.0 <= coordinate <= sample_box.1` (componentwise, with the
/// evaluation time drawn from `[0, 1]`), and returns the largest observed
/// ratios `|f(x,v,t) - f(y,v,t)| / |x - y|` and
/// `|f(x,v,t) - f(x,w,t)| / |v - w|`.
///
/// The result is a statistical lower bound on the true constants; it is
/// deterministic for a fixed `seed`.
///
/// # Errors
///
/// [`CertifyError::InvalidDimension`], [`CertifyError::InvalidSampleBox`],
/// and [`CertifyError::InvalidSamples`] for malformed inputs.
pub fn estimate_lipschitz(
    drift: &dyn Drift,
    n: usize,
    sample_box: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<LipschitzBounds, CertifyError> {
    if n == 0 {
        return Err(CertifyError::InvalidDimension { n });
    }
    let (lo, hi) = sample_box;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(CertifyError::InvalidSampleBox { lo, hi });
    }
    if samples < 2 {
        return Err(CertifyError::InvalidSamples { samples });
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha12Rng| -> alloc::vec::Vec<f64> {
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    };
    let norm = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };

    let mut fa = alloc::vec![0.0; n];
    let mut fb = alloc::vec![0.0; n];
    let mut xi1 = 0.0_f64;
    let mut xi2 = 0.0_f64;
    for _ in 0..samples {
        let t = rng.random_range(0.0..1.0);
        let x1 = draw(&mut rng);
        let x2 = draw(&mut rng);
        let v = draw(&mut rng);
        let dx = norm(&x1, &x2);
        if dx > 1e-12 {
            drift.eval(&x1, &v, t, &mut fa);
            drift.eval(&x2, &v, t, &mut fb);
            xi1 = xi1.max(norm(&fa, &fb) / dx);
        }

        let t = rng.random_range(0.0..1.0);
        let x = draw(&mut rng);
        let v1 = draw(&mut rng);
        let v2 = draw(&mut rng);
        let dv = norm(&v1, &v2);
        if dv > 1e-12 {
            drift.eval(&x, &v1, t, &mut fa);
            drift.eval(&x, &v2, t, &mut fb);
            xi2 = xi2.max(norm(&fa, &fb) / dv);
        }
    }
    Ok(LipschitzBounds { xi1, xi2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::graph::{Digraph, Edge};
    use alloc::vec;

    fn two_node() -> EdgeDecomposition {
        let g = Digraph::new(2, vec![Edge::new(1, 2, 1.0)]).unwrap();
        decompose(&g).unwrap()
    }

    fn five_node() -> EdgeDecomposition {
        let g = Digraph::new(
            5,
            vec![
                Edge::new(1, 2, 0.12),
                Edge::new(2, 3, 0.24),
                Edge::new(3, 4, 0.44),
                Edge::new(3, 5, 0.43),
                Edge::new(5, 1, 0.09),
            ],
        )
        .unwrap();
        decompose(&g).unwrap()
    }

    #[test]
    fn scalar_lyapunov_solution_is_exact() {
        let a = DMatrix::from_element(1, 1, 4.0);
        let h = solve_lyapunov(&a).unwrap();
        assert!((h[(0, 0)] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_rejects_unstable_matrices() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0]);
        assert!(matches!(
            solve_lyapunov(&a).unwrap_err(),
            CertifyError::NotPositiveStable { .. }
        ));
    }

    #[test]
    fn two_node_certificate_matches_hand_computation() {
        let cert = build_certificate(&two_node(), 2.0, LipschitzBounds::zero()).unwrap();
        assert!((cert.h[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((cert.sigma_min - 1.25_f64.sqrt()).abs() < 1e-14);

        let expected_q = DMatrix::from_row_slice(2, 2, &[4.0, 7.0, 7.0, 15.0]);
        assert!(linalg::max_abs(&(&cert.q - expected_q)) < 1e-12);
        let expected_lambda = (19.0 - 317.0_f64.sqrt()) / 2.0;
        assert!((cert.lambda_min_q - expected_lambda).abs() < 1e-12);

        assert!((cert.lambda_min_p - 0.5).abs() < 1e-12);
        assert!((cert.lambda_max_p - 1.5).abs() < 1e-12);
        assert!((cert.norm_p_lt1 - 10.0).abs() < 1e-10);
        assert!((cert.norm_r_transpose - 1.0).abs() < 1e-14);

        assert!(cert.feasible);
        assert!((cert.margin - expected_lambda).abs() < 1e-12);
        assert!((cert.delta_l_max - expected_lambda / 20.0).abs() < 1e-12);

        assert!(cert.lyapunov_residual() < 1e-14);
        assert!(cert.q_closed_form_residual() < 1e-12);
        assert!(cert.schur_complement_residual() < 1e-12);
    }

    #[test]
    fn gain_threshold_is_sharp_in_both_directions() {
        let d = two_node();
        let eps = 1e-3;
        let above = build_certificate(&d, 1.25_f64.sqrt() + eps, LipschitzBounds::zero()).unwrap();
        assert!(above.lambda_min_q > 0.0);
        assert!(above.feasible);

        let below = build_certificate(&d, 1.25_f64.sqrt() - eps, LipschitzBounds::zero()).unwrap();
        assert!(below.lambda_min_q < 0.0);
        assert!(!below.feasible);
        assert!(matches!(
            below.infeasibility,
            Some(Infeasibility::GainBelowThreshold { .. })
        ));
        assert!(matches!(
            below.radius(0.1, 1).unwrap_err(),
            CertifyError::InfeasibleGain { .. }
        ));
    }

    #[test]
    fn large_lipschitz_terms_kill_the_margin() {
        let cert = build_certificate(
            &two_node(),
            2.0,
            LipschitzBounds { xi1: 0.0, xi2: 10.0 },
        )
        .unwrap();
        assert!(!cert.feasible);
        assert!(matches!(
            cert.infeasibility,
            Some(Infeasibility::NonPositiveMargin { .. })
        ));
        assert!(matches!(
            cert.decay_constant(0.0).unwrap_err(),
            CertifyError::InfeasibleMargin { .. }
        ));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let d = two_node();
        assert!(matches!(
            build_certificate(&d, 1.0, LipschitzBounds::zero()).unwrap_err(),
            CertifyError::InvalidGain { .. }
        ));
        assert!(matches!(
            build_certificate(&d, f64::NAN, LipschitzBounds::zero()).unwrap_err(),
            CertifyError::InvalidGain { .. }
        ));
        assert!(matches!(
            build_certificate(&d, 2.0, LipschitzBounds { xi1: -1.0, xi2: 0.0 }).unwrap_err(),
            CertifyError::InvalidLipschitz { .. }
        ));

        let cert = build_certificate(&d, 2.0, LipschitzBounds::zero()).unwrap();
        assert!(matches!(
            cert.radius(0.0, 3).unwrap_err(),
            CertifyError::InvalidDelta { .. }
        ));
        assert!(matches!(
            cert.radius(0.1, 0).unwrap_err(),
            CertifyError::InvalidDimension { .. }
        ));
        assert!(matches!(
            cert.decay_constant(cert.delta_l_max).unwrap_err(),
            CertifyError::InfeasibleDelta { .. }
        ));
        assert!(matches!(
            cert.decay_constant(-0.1).unwrap_err(),
            CertifyError::InfeasibleDelta { .. }
        ));
    }

    #[test]
    fn radius_scales_with_dimension_and_step() {
        let cert = build_certificate(&two_node(), 2.0, LipschitzBounds::zero()).unwrap();
        let r1 = cert.radius(0.1, 1).unwrap();
        let r3 = cert.radius(0.1, 3).unwrap();
        assert!((r3 / r1 - 3.0_f64.sqrt()).abs() < 1e-12);
        let r2 = cert.radius(0.2, 1).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-12);

        let expected = 2.0 * (2.0_f64).sqrt() * 0.1 * cert.norm_p_lt1 / cert.margin;
        assert!((r1 - expected).abs() < 1e-12);
    }

    #[test]
    fn five_node_certificate_matches_frozen_oracle() {
        let cert = build_certificate(&five_node(), 1.64, LipschitzBounds {
            xi1: 0.0,
            xi2: 4.3871e-3,
        })
        .unwrap();
        assert!(cert.feasible);
        assert!((cert.lambda_max_h - 3.0674138576020145).abs() < 1e-9);
        assert!((cert.sigma_min - 1.5917622086232).abs() < 1e-9);
        assert!((cert.lambda_min_q - 0.8782555390453007).abs() < 1e-9);
        assert!((cert.lambda_min_p - 0.6156871119886156).abs() < 1e-9);
        assert!((cert.lambda_max_p - 8.097972584069318).abs() < 1e-9);
        assert!((cert.norm_p_lt1 - 6.712144302118363).abs() < 1e-9);
        assert!((cert.norm_r_transpose - 2.0).abs() < 1e-12);
        assert!((cert.margin - 0.8072023079981597).abs() < 1e-9);
        assert!((cert.delta_l_max - 0.03006499382557246).abs() < 1e-9);
        assert!((cert.decay_constant(0.01).unwrap() - 0.5387165359134252).abs() < 1e-9);

        let frozen_h = [
            2.474922, 0.164448, 0.071805, -0.26421, //
            0.164448, 2.857681, 0.388944, 0.447071, //
            0.071805, 0.388944, 1.136364, -0.007428, //
            -0.26421, 0.447071, -0.007428, 1.21809,
        ];
        let expected_h = DMatrix::from_row_slice(4, 4, &frozen_h);
        assert!(linalg::max_abs(&(&cert.h - expected_h)) < 1e-6);

        assert!(cert.lyapunov_residual() < 1e-12);
        assert!(cert.q_closed_form_residual() < 1e-12);
        assert!(cert.schur_complement_residual() < 1e-12);
    }

    #[test]
    fn five_node_radius_table_matches_frozen_oracle() {
        let cert = build_certificate(&five_node(), 1.64, LipschitzBounds {
            xi1: 0.0,
            xi2: 4.3871e-3,
        })
        .unwrap();
        let expected = [
            (0.01, 0.9108975053892883),
            (0.1, 9.108975053892884),
            (1.0, 91.08975053892883),
            (2.0, 182.17950107785765),
            (3.0, 273.26925161678645),
        ];
        for &(delta_u, want) in &expected {
            let got = cert.radius(delta_u, 3).unwrap();
            assert!(
                (got - want).abs() <= 1e-9 * want,
                "radius({delta_u}) = {got}, expected {want}"
            );
        }
    }

    #[test]
    fn envelope_variants_match_frozen_oracle() {
        let cert = build_certificate(&five_node(), 1.64, LipschitzBounds {
            xi1: 0.0,
            xi2: 4.3871e-3,
        })
        .unwrap();
        let rig = cert.envelope(0.01, EnvelopeVariant::Rigorous).unwrap();
        assert!((rig.prefactor - 3.626670667137688).abs() < 1e-9);
        assert!((rig.rate - 0.0332624326842753).abs() < 1e-9);

        let loose = cert.envelope(0.01, EnvelopeVariant::Reference).unwrap();
        assert!((loose.prefactor - 13.152740127876925).abs() < 1e-8);
        assert!((loose.rate - 0.0665248653685506).abs() < 1e-9);

        // At t = 0 the bound starts at prefactor * z0.
        assert!((rig.bound(0.0, 2.0) - 2.0 * rig.prefactor).abs() < 1e-12);
        // Unquantized measurements decay at the full margin rate.
        let exact = cert.envelope(0.0, EnvelopeVariant::Rigorous).unwrap();
        assert!(exact.rate > rig.rate);
    }

    #[test]
    fn convergence_time_matches_bisection() {
        let cert = build_certificate(&five_node(), 1.64, LipschitzBounds {
            xi1: 0.0,
            xi2: 4.3871e-3,
        })
        .unwrap();
        let env = cert.envelope(0.01, EnvelopeVariant::Rigorous).unwrap();
        let z0 = 9.0;
        let r = 1e-3;
        let t_closed = env.convergence_time(r, z0).unwrap();

        let mut hi = 1.0;
        while env.bound(hi, z0) > r {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if env.bound(mid, z0) > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((t_closed - lo).abs() < 1e-9 * (1.0 + t_closed));

        assert!(matches!(
            env.convergence_time(1e9, z0).unwrap_err(),
            CertifyError::RadiusTooLarge { .. }
        ));
        assert!(matches!(
            env.convergence_time(-1.0, z0).unwrap_err(),
            CertifyError::InvalidRadius { .. }
        ));
        assert!(matches!(
            env.convergence_time(r, -1.0).unwrap_err(),
            CertifyError::InvalidNorm { .. }
        ));
    }

    #[test]
    fn lipschitz_estimate_recovers_linear_drift() {
        struct HalfVelocity;
        impl Drift for HalfVelocity {
            fn eval(&self, _x: &[f64], v: &[f64], _t: f64, out: &mut [f64]) {
                for (o, &vi) in out.iter_mut().zip(v.iter()) {
                    *o = 0.5 * vi;
                }
            }
        }
        let est = estimate_lipschitz(&HalfVelocity, 3, (-2.0, 2.0), 200, 7).unwrap();
        assert!(est.xi1 < 1e-12);
        assert!((est.xi2 - 0.5).abs() < 1e-12);

        assert!(matches!(
            estimate_lipschitz(&HalfVelocity, 3, (2.0, -2.0), 10, 7).unwrap_err(),
            CertifyError::InvalidSampleBox { .. }
        ));
        assert!(matches!(
            estimate_lipschitz(&HalfVelocity, 3, (-2.0, 2.0), 1, 7).unwrap_err(),
            CertifyError::InvalidSamples { .. }
        ));
    }
}
