//! Uniform and logarithmic quantizers with their error contracts.
//!
//! The uniform quantizer with step `delta_u > 0` maps `x` to the midpoint
//! of its cell, `delta_u * (floor(x / delta_u) + 1/2)`, and satisfies the
//! absolute contract `|q(x) - x| <= delta_u / 2` for every finite `x`.
//!
//! The logarithmic quantizer applies the uniform quantizer in log space:
//! `q(x) = exp(q_u(ln x))` for `x > 0`, `q(0) = 0`, and odd extension for
//! `x < 0`. It satisfies the relative contract `|q(x) - x| <= delta_l |x|`
//! with `delta_l = 1 - exp(-delta_u)`. The contract is only valid for
//! `delta_u <=` [`LOG_DELTA_U_MAX`]: the worst-case relative error
//! `exp(delta_u / 2) - 1` crosses `delta_l` just above 0.9, so larger
//! steps are rejected.
//!
//! Both quantizers are odd, monotone nondecreasing, and piecewise
//! constant; `QuantizerSpec::None` is the identity for unquantized runs.

use nalgebra::DVector;

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

/// Largest uniform step for which the logarithmic relative-error contract
/// `|q(x) - x| <= (1 - exp(-delta_u)) |x|` holds.
pub const LOG_DELTA_U_MAX: f64 = 0.9;

/// Configuration errors for quantizers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantizerError {
    /// The step must be finite and strictly positive.
    #[error("quantizer step delta_u must be finite and > 0, got {delta_u}")]
    NonPositiveDelta {
        /// Offending step.
        delta_u: f64,
    },
    /// The logarithmic contract fails for steps above [`LOG_DELTA_U_MAX`].
    #[error(
        "logarithmic quantizer requires delta_u <= {max} for its relative-error contract, got {delta_u}"
    )]
    DeltaTooLargeForLogarithmic {
        /// Offending step.
        delta_u: f64,
        /// The admissible maximum.
        max: f64,
    },
}

/// A quantizer family with its step parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantizerSpec {
    /// Identity: exact relative measurements.
    None,
    /// Midpoint uniform quantizer with step `delta_u`.
    Uniform {
        /// Cell width, finite and strictly positive.
        delta_u: f64,
    },
    /// Logarithmic quantizer driven by a uniform step in log space.
    Logarithmic {
        /// Log-space cell width, in `(0,` [`LOG_DELTA_U_MAX`]`]`.
        delta_u: f64,
    },
}

impl QuantizerSpec {
    /// The identity quantizer.
    pub fn none() -> Self {
        Self::None
    }

    /// A validated uniform quantizer.
    ///
    /// # Errors
    ///
    /// [`QuantizerError::NonPositiveDelta`] unless `delta_u` is finite and
    /// strictly positive.
    pub fn uniform(delta_u: f64) -> Result<Self, QuantizerError> {
        let spec = Self::Uniform { delta_u };
        spec.validate()?;
        Ok(spec)
    }

    /// A validated logarithmic quantizer.
    ///
    /// # Errors
    ///
    /// [`QuantizerError::NonPositiveDelta`] for non-positive steps and
    /// [`QuantizerError::DeltaTooLargeForLogarithmic`] for steps above
    /// [`LOG_DELTA_U_MAX`].
    pub fn logarithmic(delta_u: f64) -> Result<Self, QuantizerError> {
        let spec = Self::Logarithmic { delta_u };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the parameter invariants of this quantizer.
    ///
    /// # Errors
    ///
    /// See [`Self::uniform`] and [`Self::logarithmic`].
    pub fn validate(&self) -> Result<(), QuantizerError> {
        match *self {
            Self::None => Ok(()),
            Self::Uniform { delta_u } => {
                if !delta_u.is_finite() || delta_u <= 0.0 {
                    return Err(QuantizerError::NonPositiveDelta { delta_u });
                }
                Ok(())
            }
            Self::Logarithmic { delta_u } => {
                if !delta_u.is_finite() || delta_u <= 0.0 {
                    return Err(QuantizerError::NonPositiveDelta { delta_u });
                }
                if delta_u > LOG_DELTA_U_MAX {
                    return Err(QuantizerError::DeltaTooLargeForLogarithmic {
                        delta_u,
                        max: LOG_DELTA_U_MAX,
                    });
                }
                Ok(())
            }
        }
    }

    /// Family name for reports.
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Uniform { .. } => "uniform",
            Self::Logarithmic { .. } => "logarithmic",
        }
    }

    /// The relative contract constant `delta_l`: `0` for the identity,
    /// `1 - exp(-delta_u)` for the logarithmic family, absent for the
    /// uniform family (whose contract is absolute).
    pub fn delta_l(&self) -> Option<f64> {
        match *self {
            Self::None => Some(0.0),
            Self::Uniform { .. } => None,
            Self::Logarithmic { delta_u } => Some(1.0 - (-delta_u).exp()),
        }
    }

    /// The absolute contract constant: `0` for the identity,
    /// `delta_u / 2` for the uniform family, absent for the logarithmic
    /// family (whose contract is relative).
    pub fn absolute_error_bound(&self) -> Option<f64> {
        match *self {
            Self::None => Some(0.0),
            Self::Uniform { delta_u } => Some(delta_u / 2.0),
            Self::Logarithmic { .. } => None,
        }
    }

    /// Quantizes one scalar. Non-finite inputs propagate unchanged in
    /// sign; contracts only apply to finite inputs.
    pub fn quantize(&self, x: f64) -> f64 {
        match *self {
            Self::None => x,
            Self::Uniform { delta_u } => uniform_midpoint(x, delta_u),
            Self::Logarithmic { delta_u } => {
                if x == 0.0 {
                    0.0
                } else if x > 0.0 {
                    uniform_midpoint(x.ln(), delta_u).exp()
                } else {
                    -self.quantize(-x)
                }
            }
        }
    }

    /// Quantizes a vector componentwise into `out` (same length as `x`).
    pub fn quantize_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        debug_assert_eq!(x.len(), out.len());
        for (o, &xi) in out.iter_mut().zip(x.iter()) {
            *o = self.quantize(xi);
        }
    }

    /// Quantizes a vector componentwise.
    pub fn quantize_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        self.quantize_into(x, &mut out);
        out
    }
}

fn uniform_midpoint(x: f64, delta_u: f64) -> f64 {
    delta_u * ((x / delta_u).floor() + 0.5)
}
