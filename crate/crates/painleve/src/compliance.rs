//! Compliant spring-damper regularisation of the unilateral contact.
//!
//! Instead of a rigid constraint, penetration `y < 0` is resisted by a stiff
//! unilateral spring-damper with normal force
//!
//! ```text
//! F_N(y, w) = (1/eps) [ h(y/eps, w) ],       [x] = max(x, 0),
//! ```
//!
//! and `F_N = 0` whenever `y > 0`. The restoring law `h` is linear by
//! default, `h(yh, w) = -yh - delta w`, i.e. stiffness `eps^-2` and damping
//! `delta / eps`; nonlinear laws are accepted if they reduce to the same
//! linearisation at the origin (checked numerically at construction). The
//! bracket is applied exactly, with no smoothing, so the force is continuous
//! but only piecewise smooth; the integrator treats its kinks as events.
//!
//! In the stretched variable `yh = y/eps` the force scales as
//! `Fh_N(yh, w) = eps F_N(eps yh, w) = [h(yh, w)]`, which is the form used by
//! the fast-time charts.

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplianceError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must be nonnegative and finite, got {0}")]
    InvalidDelta(f64),
    #[error("law violates h(0,0) = 0 (got {0})")]
    NonzeroAtOrigin(f64),
    #[error("law violates dh/dyh(0,0) = -1 (got {0})")]
    WrongStiffnessSlope(f64),
    #[error("law violates dh/dw(0,0) = -delta (got {got}, expected {expected})")]
    WrongDampingSlope { got: f64, expected: f64 },
}

/// Positive part, `[x] = max(x, 0)`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Stiffness and damping scales of the regularisation: stiffness `eps^-2`,
/// damping `delta/eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplianceParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl ComplianceParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, ComplianceError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(ComplianceError::InvalidEpsilon(epsilon));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(ComplianceError::InvalidDelta(delta));
        }
        Ok(Self { epsilon, delta })
    }
}

/// Restoring law `h(yh, w)` in stretched penetration `yh` and normal rate `w`.
///
/// Required behaviour at the origin: `h(0,0) = 0`, `dh/dyh = -1`,
/// `dh/dw = -delta`.
pub trait ComplianceLaw: Send + Sync {
    fn h(&self, y_hat: f64, w: f64) -> f64;
    fn delta(&self) -> f64;
    fn is_linear(&self) -> bool {
        false
    }
}

/// The default law `h = -yh - delta w`.
#[derive(Debug, Clone, Copy)]
pub struct LinearLaw {
    pub delta: f64,
}

impl ComplianceLaw for LinearLaw {
    #[inline]
    fn h(&self, y_hat: f64, w: f64) -> f64 {
        -y_hat - self.delta * w
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// A user-supplied restoring law, validated against the required
/// linearisation by central finite differences at the origin.
pub struct CustomLaw<F: Fn(f64, f64) -> f64 + Send + Sync> {
    f: F,
    delta: f64,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> CustomLaw<F> {
    pub fn new(f: F, delta: f64) -> Result<Self, ComplianceError> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(ComplianceError::InvalidDelta(delta));
        }
        let at_origin = f(0.0, 0.0);
        if at_origin.abs() > 1e-9 {
            return Err(ComplianceError::NonzeroAtOrigin(at_origin));
        }
        let step = 1e-6;
        let d_yh = (f(step, 0.0) - f(-step, 0.0)) / (2.0 * step);
        if (d_yh + 1.0).abs() > 1e-5 {
            return Err(ComplianceError::WrongStiffnessSlope(d_yh));
        }
        let d_w = (f(0.0, step) - f(0.0, -step)) / (2.0 * step);
        if (d_w + delta).abs() > 1e-5 * delta.max(1.0) {
            return Err(ComplianceError::WrongDampingSlope {
                got: d_w,
                expected: -delta,
            });
        }
        Ok(Self { f, delta })
    }
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> ComplianceLaw for CustomLaw<F> {
    fn h(&self, y_hat: f64, w: f64) -> f64 {
        (self.f)(y_hat, w)
    }
    fn delta(&self) -> f64 {
        self.delta
    }
}

/// A compliance model ready for force evaluation: the scale `eps` plus a law.
#[derive(Clone)]
pub struct Compliance {
    pub epsilon: f64,
    law: Arc<dyn ComplianceLaw>,
}

impl std::fmt::Debug for Compliance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Compliance")
            .field("epsilon", &self.epsilon)
            .field("delta", &self.delta())
            .field("linear", &self.is_linear())
            .finish()
    }
}

impl Compliance {
    pub fn linear(params: ComplianceParams) -> Self {
        Self {
            epsilon: params.epsilon,
            law: Arc::new(LinearLaw { delta: params.delta }),
        }
    }

    pub fn with_law(epsilon: f64, law: Arc<dyn ComplianceLaw>) -> Result<Self, ComplianceError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(ComplianceError::InvalidEpsilon(epsilon));
        }
        Ok(Self { epsilon, law })
    }

    pub fn delta(&self) -> f64 {
        self.law.delta()
    }

    pub fn is_linear(&self) -> bool {
        self.law.is_linear()
    }

    /// Raw law value `h(yh, w)`, before bracket and penetration gating.
    /// Its sign changes are the force activation/loss events.
    #[inline]
    pub fn law_value(&self, y_hat: f64, w: f64) -> f64 {
        self.law.h(y_hat, w)
    }

    /// Normal force in the physical variables; zero out of contact (`y > 0`)
    /// and wherever the bracket clamps, never negative.
    #[inline]
    pub fn normal_force(&self, y: f64, w: f64) -> f64 {
        if y > 0.0 {
            0.0
        } else {
            bracket(self.law.h(y / self.epsilon, w)) / self.epsilon
        }
    }

    /// Normal force in the stretched variable, `eps F_N(eps yh, w) = [h(yh, w)]`
    /// (exact for the linear law).
    #[inline]
    pub fn scaled_normal_force(&self, y_hat: f64, w: f64) -> f64 {
        if y_hat > 0.0 {
            0.0
        } else {
            bracket(self.law.h(y_hat, w))
        }
    }

    /// Stored elastic energy of the linear spring, `min(y,0)^2 / (2 eps^2)`.
    /// Only defined for the linear law.
    pub fn spring_potential(&self, y: f64) -> Option<f64> {
        if !self.is_linear() {
            return None;
        }
        let pen = y.min(0.0);
        Some(pen * pen / (2.0 * self.epsilon * self.epsilon))
    }
}

/// Free-function form of the stretched force for a bare law.
pub fn scaled_normal_force(y_hat: f64, w: f64, law: &dyn ComplianceLaw) -> f64 {
    if y_hat > 0.0 {
        0.0
    } else {
        bracket(law.h(y_hat, w))
    }
}
