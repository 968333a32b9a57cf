//! Coefficient algebra for a rigid rod slipping on a rough surface.
//!
//! Everything is nondimensional: lengths are scaled by the rod half-length,
//! time by the gravitational fall time, so gravity and the half-length are 1.
//! The configuration enters through the attitude angle `theta` (measured from
//! the surface), its rate `phi = theta'`, and the tangential velocity `v` of
//! the contact end. Eliminating the centre of mass leaves contact-end
//! dynamics of the form
//!
//! ```text
//! y'' = b(theta, phi) + p(theta) F_N,
//! v'  = a(theta, phi) + q(theta) F_N,
//! ```
//!
//! where `F_N >= 0` is the normal contact force and Coulomb friction
//! `F_T = mu sign(v) F_N` has already been substituted. The coefficients
//! therefore come in `+`/`-` pairs for slip to the right (`v > 0`) and left
//! (`v < 0`):
//!
//! ```text
//! a = -phi^2 cos(theta)                   b = -1 + phi^2 sin(theta)
//! q± = alpha sin cos ∓ mu (1 + alpha sin^2)
//! p± = 1 + alpha cos^2 ∓ mu alpha sin cos
//! c± = -alpha (cos ∓ mu sin)              (phi' = c± F_N)
//! ```
//!
//! `alpha = m l^2 / I` is the inertia ratio (3 for a uniform slender rod).
//! The interesting regime is `p+ < 0`: there the rigid-body constraint force
//! `-b/p+` either fails to exist (`b < 0`, inconsistent) or fails to be
//! unique (`b > 0`, indeterminate). `p+(theta)` has roots iff
//! `mu > mu_P(alpha) = 2 sqrt(1+alpha) / alpha`, and then is negative exactly
//! on `(theta_1, theta_2)`.
//!
//! When the contact end sticks (`v = 0`) the dynamics slide on the switching
//! surface; the sliding field replaces `p±`, `c±` by the convex combinations
//! `S_w`, `S_phi` computed by [`sliding_coeffs`].

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactModelError {
    #[error("inertia ratio alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("friction coefficient mu must be nonnegative and finite, got {0}")]
    InvalidMu(f64),
    #[error("mu = {mu} does not exceed the critical friction mu_P = {mu_crit}; p+ has no sign change")]
    NoParadox { mu: f64, mu_crit: f64 },
    #[error("slip branches coincide at theta = {theta} (q- = q+); sliding coefficients undefined")]
    DegenerateBranches { theta: f64 },
    #[error("p+ vanishes at theta = {theta}; rigid constraint force is unbounded")]
    VanishingPPlus { theta: f64 },
}

/// Mass geometry and friction of the body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    /// Inertia ratio `m l^2 / I`; 3 for a uniform slender rod.
    pub alpha: f64,
    /// Coulomb friction coefficient.
    pub mu: f64,
}

impl BodyParams {
    pub fn new(alpha: f64, mu: f64) -> Result<Self, ContactModelError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ContactModelError::InvalidAlpha(alpha));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(ContactModelError::InvalidMu(mu));
        }
        Ok(Self { alpha, mu })
    }
}

/// Which Coulomb branch is active: `Pos` for slip with `v > 0`, `Neg` for `v < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlipBranch {
    Pos,
    Neg,
}

/// All eight coefficients evaluated at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    pub a: f64,
    pub b: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl Coeffs {
    pub fn q(&self, branch: SlipBranch) -> f64 {
        match branch {
            SlipBranch::Pos => self.q_plus,
            SlipBranch::Neg => self.q_minus,
        }
    }
    pub fn p(&self, branch: SlipBranch) -> f64 {
        match branch {
            SlipBranch::Pos => self.p_plus,
            SlipBranch::Neg => self.p_minus,
        }
    }
    pub fn c(&self, branch: SlipBranch) -> f64 {
        match branch {
            SlipBranch::Pos => self.c_plus,
            SlipBranch::Neg => self.c_minus,
        }
    }
}

/// Contact-end dynamics coefficients of a rigid body on a rough line.
///
/// `a`, `b` drive the force-free drift; `q±`, `p±`, `c±` multiply the normal
/// force in the tangential, normal, and angular equations for each slip branch.
pub trait BodyCoefficients {
    fn a(&self, theta: f64, phi: f64) -> f64;
    fn b(&self, theta: f64, phi: f64) -> f64;
    fn q_plus(&self, theta: f64) -> f64;
    fn q_minus(&self, theta: f64) -> f64;
    fn p_plus(&self, theta: f64) -> f64;
    fn p_minus(&self, theta: f64) -> f64;
    fn c_plus(&self, theta: f64) -> f64;
    fn c_minus(&self, theta: f64) -> f64;

    fn eval(&self, theta: f64, phi: f64) -> Coeffs {
        Coeffs {
            a: self.a(theta, phi),
            b: self.b(theta, phi),
            q_plus: self.q_plus(theta),
            q_minus: self.q_minus(theta),
            p_plus: self.p_plus(theta),
            p_minus: self.p_minus(theta),
            c_plus: self.c_plus(theta),
            c_minus: self.c_minus(theta),
        }
    }

    fn q(&self, theta: f64, branch: SlipBranch) -> f64 {
        match branch {
            SlipBranch::Pos => self.q_plus(theta),
            SlipBranch::Neg => self.q_minus(theta),
        }
    }
    fn p(&self, theta: f64, branch: SlipBranch) -> f64 {
        match branch {
            SlipBranch::Pos => self.p_plus(theta),
            SlipBranch::Neg => self.p_minus(theta),
        }
    }
    fn c(&self, theta: f64, branch: SlipBranch) -> f64 {
        match branch {
            SlipBranch::Pos => self.c_plus(theta),
            SlipBranch::Neg => self.c_minus(theta),
        }
    }
}

/// The uniform slender rod with endpoint contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalRod {
    pub params: BodyParams,
}

impl ClassicalRod {
    pub fn new(params: BodyParams) -> Self {
        Self { params }
    }

    /// Closed form of the sliding normal coefficient, `(1+alpha)/(1+alpha sin^2)`.
    /// Friction drops out of the convex combination for this body.
    pub fn s_w_closed(&self, theta: f64) -> f64 {
        let alpha = self.params.alpha;
        (1.0 + alpha) / (1.0 + alpha * theta.sin().powi(2))
    }

    /// Closed form of the sliding angular coefficient, `-alpha cos/(1+alpha sin^2)`.
    pub fn s_phi_closed(&self, theta: f64) -> f64 {
        let alpha = self.params.alpha;
        -alpha * theta.cos() / (1.0 + alpha * theta.sin().powi(2))
    }
}

impl BodyCoefficients for ClassicalRod {
    fn a(&self, theta: f64, phi: f64) -> f64 {
        -phi * phi * theta.cos()
    }
    fn b(&self, theta: f64, phi: f64) -> f64 {
        -1.0 + phi * phi * theta.sin()
    }
    fn q_plus(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let BodyParams { alpha, mu } = self.params;
        alpha * s * c - mu * (1.0 + alpha * s * s)
    }
    fn q_minus(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let BodyParams { alpha, mu } = self.params;
        alpha * s * c + mu * (1.0 + alpha * s * s)
    }
    fn p_plus(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let BodyParams { alpha, mu } = self.params;
        1.0 + alpha * c * c - mu * alpha * s * c
    }
    fn p_minus(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let BodyParams { alpha, mu } = self.params;
        1.0 + alpha * c * c + mu * alpha * s * c
    }
    fn c_plus(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let BodyParams { alpha, mu } = self.params;
        -alpha * (c - mu * s)
    }
    fn c_minus(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let BodyParams { alpha, mu } = self.params;
        -alpha * (c + mu * s)
    }
}

/// Convenience: all rod coefficients at `(theta, phi)`.
pub fn classical_coeffs(params: BodyParams, theta: f64, phi: f64) -> Coeffs {
    ClassicalRod::new(params).eval(theta, phi)
}

/// Sliding (stick) coefficients from the convex combination of the two slip
/// branches, `S_w = (q- p+ - q+ p-)/(q- - q+)` and the analogous `S_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingCoeffs {
    pub s_w: f64,
    pub s_phi: f64,
}

pub fn sliding_coeffs(
    body: &dyn BodyCoefficients,
    theta: f64,
) -> Result<SlidingCoeffs, ContactModelError> {
    let q_p = body.q_plus(theta);
    let q_m = body.q_minus(theta);
    let den = q_m - q_p;
    let scale = q_m.abs().max(q_p.abs()).max(1.0);
    if den.abs() <= 1e-14 * scale {
        return Err(ContactModelError::DegenerateBranches { theta });
    }
    let p_p = body.p_plus(theta);
    let p_m = body.p_minus(theta);
    let c_p = body.c_plus(theta);
    let c_m = body.c_minus(theta);
    Ok(SlidingCoeffs {
        s_w: (q_m * p_p - q_p * p_m) / den,
        s_phi: (q_m * c_p - q_p * c_m) / den,
    })
}

/// Least friction at which `p+` can change sign: `mu_P = 2 sqrt(1+alpha)/alpha`.
pub fn mu_critical(alpha: f64) -> f64 {
    2.0 * (1.0 + alpha).sqrt() / alpha
}

/// The interval `(theta_1, theta_2)` on which `p+(theta) < 0`, from
/// `tan(theta) = (mu alpha ∓ sqrt(mu^2 alpha^2 - 4(1+alpha)))/2`.
///
/// At `mu = mu_P` exactly the interval degenerates to the double root
/// `arctan(mu alpha / 2)`, which is still returned; only `mu < mu_P` errors.
pub fn theta_range(params: BodyParams) -> Result<(f64, f64), ContactModelError> {
    let BodyParams { alpha, mu } = params;
    let ma = mu * alpha;
    let disc = ma * ma - 4.0 * (1.0 + alpha);
    let scale = ma * ma + 4.0 * (1.0 + alpha);
    // clamp round-off so that mu == mu_P in floating point yields the double root
    let disc = if disc.abs() <= 1e-12 * scale { 0.0 } else { disc };
    if disc < 0.0 {
        return Err(ContactModelError::NoParadox {
            mu,
            mu_crit: mu_critical(alpha),
        });
    }
    let root = disc.sqrt();
    Ok((((ma - root) / 2.0).atan(), ((ma + root) / 2.0).atan()))
}

/// Existence/uniqueness regime of the rigid-body contact problem, read off
/// the signs of the free acceleration `b` and the force coefficient `p+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeLabel {
    /// `b < 0`, `p+ > 0`: consistent slipping contact, `F_N = -b/p+ > 0`.
    Slipping,
    /// `b > 0`, `p+ > 0`: the free motion leaves the surface, `F_N = 0`.
    LiftOff,
    /// `b < 0`, `p+ < 0`: no nonnegative constraint force exists.
    Inconsistent,
    /// `b > 0`, `p+ < 0`: both lift-off and contact with `F_N > 0` are consistent.
    Indeterminate,
    /// `|b|` or `|p+|` below tolerance.
    Boundary,
}

pub const DEFAULT_REGIME_TOL: f64 = 1e-9;

pub fn classify_regime(
    body: &dyn BodyCoefficients,
    theta: f64,
    phi: f64,
    tol: f64,
) -> RegimeLabel {
    let b = body.b(theta, phi);
    let p_p = body.p_plus(theta);
    if b.abs() < tol || p_p.abs() < tol {
        RegimeLabel::Boundary
    } else {
        match (b > 0.0, p_p > 0.0) {
            (false, true) => RegimeLabel::Slipping,
            (true, true) => RegimeLabel::LiftOff,
            (false, false) => RegimeLabel::Inconsistent,
            (true, false) => RegimeLabel::Indeterminate,
        }
    }
}

/// Rigid-body normal force `-b/p+` that holds the contact end on the surface
/// while slipping with `v > 0`. Only meaningful where the regime is
/// [`RegimeLabel::Slipping`]; errors where `p+` vanishes.
pub fn constraint_normal_force(
    body: &dyn BodyCoefficients,
    theta: f64,
    phi: f64,
) -> Result<f64, ContactModelError> {
    let p_p = body.p_plus(theta);
    if p_p.abs() < 1e-12 {
        return Err(ContactModelError::VanishingPPlus { theta });
    }
    Ok(-body.b(theta, phi) / p_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rod(alpha: f64, mu: f64) -> ClassicalRod {
        ClassicalRod::new(BodyParams::new(alpha, mu).unwrap())
    }

    const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

    #[test]
    fn params_validation() {
        assert!(BodyParams::new(3.0, 0.0).is_ok());
        assert!(matches!(
            BodyParams::new(0.0, 1.0),
            Err(ContactModelError::InvalidAlpha(_))
        ));
        assert!(matches!(
            BodyParams::new(-3.0, 1.0),
            Err(ContactModelError::InvalidAlpha(_))
        ));
        assert!(matches!(
            BodyParams::new(3.0, -0.1),
            Err(ContactModelError::InvalidMu(_))
        ));
        assert!(BodyParams::new(3.0, f64::NAN).is_err());
    }

    #[test]
    fn vertical_rod_coefficients() {
        // theta = pi/2: sin = 1, cos = 0
        let c = rod(3.0, 1.4).eval(FRAC_PI_2, 0.0);
        assert_relative_eq!(c.a, 0.0);
        assert_relative_eq!(c.b, -1.0);
        assert_relative_eq!(c.p_plus, 1.0, max_relative = 1e-15);
        assert_relative_eq!(c.p_minus, 1.0, max_relative = 1e-15);
        assert_relative_eq!(c.q_plus, -5.6, max_relative = 1e-15);
        assert_relative_eq!(c.q_minus, 5.6, max_relative = 1e-15);
        assert_relative_eq!(c.c_plus, 4.2, max_relative = 1e-15);
        assert_relative_eq!(c.c_minus, -4.2, max_relative = 1e-15);
    }

    // Expected values below were computed independently at 50-digit precision
    // from the defining algebra and frozen here.

    #[test]
    fn coefficients_inside_the_negative_band() {
        let c = rod(3.0, 1.4).eval(1.0, 0.0);
        assert_relative_eq!(c.p_plus, -0.033744851154645141, max_relative = 1e-13);
        assert_relative_eq!(c.q_plus, -3.0099622165104765, max_relative = 1e-13);
        assert_relative_eq!(c.q_minus, 5.7378544969875216, max_relative = 1e-13);
        assert_relative_eq!(c.p_minus, 3.7853043415132180, max_relative = 1e-13);
    }

    #[test]
    fn grazing_point_coefficients() {
        let c = rod(3.0, 3.0).eval(0.9463, 1.6654);
        assert_relative_eq!(c.b, 1.2500696425076080, max_relative = 1e-13);
        assert_relative_eq!(c.p_plus, -2.2434164835605385, max_relative = 1e-13);
        assert_relative_eq!(c.q_plus, -7.5002519646318789, max_relative = 1e-13);
        assert_relative_eq!(c.a, -1.6216676366176119, max_relative = 1e-13);
        // 4-digit reference anchors
        assert!((c.b - 1.2500).abs() < 1e-2);
        assert!((c.p_plus - -2.243).abs() < 1e-2);
    }

    #[test]
    fn branch_pair_identities() {
        // q- - q+ = 2 mu (1 + alpha sin^2), p- - p+ = 2 mu alpha sin cos
        for &(alpha, mu) in &[(3.0, 1.4), (3.0, 3.0), (8.0, 0.9), (1.0, 2.5)] {
            let r = rod(alpha, mu);
            for i in 0..60 {
                let theta = 0.05 + 3.0 * i as f64 / 60.0;
                let c = r.eval(theta, 0.7);
                let (s, co) = theta.sin_cos();
                assert_relative_eq!(
                    c.q_minus - c.q_plus,
                    2.0 * mu * (1.0 + alpha * s * s),
                    max_relative = 1e-13
                );
                assert_relative_eq!(
                    c.p_minus - c.p_plus,
                    2.0 * mu * alpha * s * co,
                    max_relative = 1e-12,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn sliding_matches_closed_form() {
        for &mu in &[1.4, 2.0, 3.0] {
            let r = rod(3.0, mu);
            for i in 1..100 {
                let theta = 3.1 * i as f64 / 100.0;
                let s = sliding_coeffs(&r, theta).unwrap();
                assert_relative_eq!(s.s_w, r.s_w_closed(theta), max_relative = 1e-13);
                assert_relative_eq!(
                    s.s_phi,
                    r.s_phi_closed(theta),
                    max_relative = 1e-12,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn sliding_values_at_reference_angles() {
        let r = rod(3.0, 3.0);
        // theta = 0: S_w = 1 + alpha, S_phi = -alpha
        let s0 = sliding_coeffs(&r, 0.0).unwrap();
        assert_relative_eq!(s0.s_w, 4.0, max_relative = 1e-14);
        assert_relative_eq!(s0.s_phi, -3.0, max_relative = 1e-14);
        // theta = pi/2: S_w = 1, S_phi = 0
        let s1 = sliding_coeffs(&r, FRAC_PI_2).unwrap();
        assert_relative_eq!(s1.s_w, 1.0, max_relative = 1e-14);
        assert!(s1.s_phi.abs() < 1e-15);
        // frozen high-precision values at the grazing angle; the last check
        // anchors only 4 digits since the angle itself is a 4-digit rounding
        let s = sliding_coeffs(&r, 0.9463).unwrap();
        assert_relative_eq!(s.s_w, 1.3448012434972628, max_relative = 1e-13);
        assert_relative_eq!(s.s_phi, -0.58971760679234526, max_relative = 1e-13);
        assert!((s.s_w - 1.3458).abs() < 2e-3);
    }

    #[test]
    fn sliding_requires_friction() {
        let r = rod(3.0, 0.0);
        assert!(matches!(
            sliding_coeffs(&r, 1.0),
            Err(ContactModelError::DegenerateBranches { .. })
        ));
    }

    #[test]
    fn critical_friction() {
        assert_relative_eq!(mu_critical(3.0), 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(mu_critical(8.0), 0.75, max_relative = 1e-15);
        assert_relative_eq!(mu_critical(1.0), 2.0 * 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn theta_band_endpoints() {
        let (t1, t2) = theta_range(BodyParams::new(3.0, 1.4).unwrap()).unwrap();
        assert_relative_eq!(t1, 0.97015541598827918, max_relative = 1e-13);
        assert_relative_eq!(t2, 1.2208903967894389, max_relative = 1e-13);
        // 4-digit reference anchors
        assert!((t1 - 0.9702).abs() < 2e-3);
        assert!((t2 - 1.2203).abs() < 2e-3);
        // p+ vanishes at both endpoints
        let r = rod(3.0, 1.4);
        assert!(r.p_plus(t1).abs() < 1e-12);
        assert!(r.p_plus(t2).abs() < 1e-12);
        // and is negative strictly inside
        assert!(r.p_plus(0.5 * (t1 + t2)) < 0.0);
    }

    #[test]
    fn theta_band_at_exact_critical_friction() {
        let (t1, t2) = theta_range(BodyParams::new(3.0, 4.0 / 3.0).unwrap()).unwrap();
        assert_relative_eq!(t1, 2.0f64.atan(), max_relative = 1e-12);
        assert_relative_eq!(t2, 2.0f64.atan(), max_relative = 1e-12);
    }

    #[test]
    fn theta_band_below_critical_friction() {
        assert!(matches!(
            theta_range(BodyParams::new(3.0, 1.0).unwrap()),
            Err(ContactModelError::NoParadox { .. })
        ));
        // the critical value is the exact threshold
        assert!(theta_range(BodyParams::new(3.0, 4.0 / 3.0 + 1e-6).unwrap()).is_ok());
        assert!(theta_range(BodyParams::new(3.0, 4.0 / 3.0 - 1e-6).unwrap()).is_err());
    }

    #[test]
    fn regime_quadrants() {
        let r = rod(3.0, 1.4);
        let tol = DEFAULT_REGIME_TOL;
        // b < 0, p+ < 0
        assert_eq!(classify_regime(&r, 1.0, 0.5, tol), RegimeLabel::Inconsistent);
        // b > 0, p+ < 0
        assert_eq!(classify_regime(&r, 1.0, 2.0, tol), RegimeLabel::Indeterminate);
        // 0.9463 lies left of theta_1, so p+ > 0; phi = 2 makes b > 0
        assert_eq!(classify_regime(&r, 0.9463, 2.0, tol), RegimeLabel::LiftOff);
        // same angle with phi = 0: b = -1 < 0
        assert_eq!(classify_regime(&r, 0.9463, 0.0, tol), RegimeLabel::Slipping);
        // b = 0 exactly: phi^2 sin(theta) = 1
        let theta = 1.1_f64;
        let phi = 1.0 / theta.sin().sqrt();
        assert_eq!(classify_regime(&r, theta, phi, 1e-9), RegimeLabel::Boundary);
        // p+ = 0 exactly (at theta_1)
        let (t1, _) = theta_range(r.params).unwrap();
        assert_eq!(classify_regime(&r, t1, 0.1, 1e-9), RegimeLabel::Boundary);
    }

    #[test]
    fn regime_is_even_in_phi() {
        let r = rod(3.0, 1.4);
        for i in 0..40 {
            let theta = 0.1 + 3.0 * i as f64 / 40.0;
            for j in 0..10 {
                let phi = -2.0 + 4.0 * j as f64 / 10.0;
                assert_eq!(
                    classify_regime(&r, theta, phi, 1e-9),
                    classify_regime(&r, theta, -phi, 1e-9)
                );
            }
        }
    }

    #[test]
    fn rigid_constraint_force() {
        let r = rod(3.0, 1.4);
        // vertical rod at rest: F_N = -(-1)/1 = 1
        assert_relative_eq!(
            constraint_normal_force(&r, FRAC_PI_2, 0.0).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        let (t1, _) = theta_range(r.params).unwrap();
        assert!(matches!(
            constraint_normal_force(&r, t1, 0.0),
            Err(ContactModelError::VanishingPPlus { .. })
        ));
    }
}
