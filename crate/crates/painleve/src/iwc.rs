//! Closed-form analysis of impact without collision, and an independent
//! numerical route through the same map for cross-validation.
//!
//! In the indeterminate regime a tangentially grazing contact is captured:
//! slip compresses the spring along the unstable direction of the contact
//! layer, the slip speed reaches zero, the contact sticks, and the stored
//! compression is released until the normal force shuts off. The rod leaves
//! the surface with a normal velocity proportional to the slip speed it
//! arrived with, even though it arrived with no approach speed at all. The
//! whole episode collapses to an instantaneous impact law as the compliance
//! stiffens.
//!
//! Everything here works in the stretched layer variables at the limiting
//! inclination, where the slip phase is governed by
//!
//! ```text
//! yh' = w,   w' = p F,   v' = q F,   phi' = c F,   F = [-yh - delta w],
//! ```
//!
//! a linear saddle with eigenvalues `lambda_pm` (for `p < 0`), and the stick
//! phase by the sliding combination with `S_w` in place of `p` (a stable
//! focus or node with eigenvalues `xi_pm`). Matching the two phases yields
//! the restitution map [`impact_map`]; [`impact_map_numeric`] reproduces it
//! by direct integration of the layer equations and serves as the oracle.
//!
//! The same layer, blown up once more (`yh = eps y1`, `w = eps w1`), decides
//! which near-grazing flights are captured in the first place: the stable
//! manifold of the saddle at `y1 = b/p` crosses the surface at the critical
//! approach speed [`separatrix_w1`], and [`classify_entry`] integrates the
//! chart field to sort entries into escape and capture.

use crate::compliance::bracket;
use crate::contact::{sliding_coeffs, BodyCoefficients, ContactModelError};
use crate::dynamics::kappa1_field;
use crate::ode::{self, CrossingDirection, EventChannel, OdeError, StepControl};
use crate::contact::SlipBranch;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Half-width of the `delta` window around the critical damping in which the
/// eigenvalue formulas lose precision (the discriminant is a difference of
/// like-sized terms) and the propagator path takes over. At the window edge
/// the formula path still carries about nine accurate digits.
const CONFLUENT_WINDOW: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum IwcError {
    #[error(transparent)]
    Contact(#[from] ContactModelError),
    #[error("theta = {theta}: p_plus = {p_plus:.6} is not negative; no impact-without-collision regime here")]
    NotParadoxical { theta: f64, p_plus: f64 },
    #[error("delta must be nonnegative and finite, got {0}")]
    InvalidDelta(f64),
    #[error("b = {b:.6} is not positive; grazing flights here are not attracted to the surface")]
    NotIndeterminate { b: f64 },
    #[error("layer integration failed: {0}")]
    Numeric(#[from] OdeError),
    #[error("layer trajectory did not resolve within tau = {tau_max}")]
    Unresolved { tau_max: f64 },
}

/// Branch coefficients of the contact layer at a fixed inclination, the
/// complete input to the impact map.
#[derive(Debug, Clone, Copy)]
pub struct ContactLinearization {
    pub theta: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub s_w: f64,
    pub s_phi: f64,
}

/// Extract the layer coefficients at `theta`, requiring `p_plus < 0`.
pub fn linearization(
    body: &dyn BodyCoefficients,
    theta: f64,
) -> Result<ContactLinearization, IwcError> {
    let co = body.eval(theta, 0.0);
    if !(co.p_plus < 0.0) {
        return Err(IwcError::NotParadoxical {
            theta,
            p_plus: co.p_plus,
        });
    }
    let sl = sliding_coeffs(body, theta)?;
    Ok(ContactLinearization {
        theta,
        p_plus: co.p_plus,
        p_minus: co.p_minus,
        q_plus: co.q_plus,
        q_minus: co.q_minus,
        c_plus: co.c_plus,
        c_minus: co.c_minus,
        s_w: sl.s_w,
        s_phi: sl.s_phi,
    })
}

fn check_delta(delta: f64) -> Result<(), IwcError> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(IwcError::InvalidDelta(delta));
    }
    Ok(())
}

/// Saddle eigenvalues of the slip layer, `lambda^2 + delta p lambda + p = 0`
/// with `p < 0`: returns `(lambda_plus > 0, lambda_minus < 0)`.
pub fn lambda_pm(p_plus: f64, delta: f64) -> (f64, f64) {
    debug_assert!(p_plus < 0.0);
    let disc = delta * delta * p_plus * p_plus - 4.0 * p_plus;
    let lp = 0.5 * (-delta * p_plus + disc.sqrt());
    (lp, p_plus / lp)
}

/// Stick-layer eigenvalues, `xi^2 + delta S_w xi + S_w = 0` with `S_w > 0`:
/// a complex pair below the critical damping, two negative reals above.
/// Returns `(xi_plus, xi_minus)` ordered by real part (conjugates when
/// complex).
pub fn xi_pm(s_w: f64, delta: f64) -> (Complex64, Complex64) {
    debug_assert!(s_w > 0.0);
    let disc = delta * delta * s_w * s_w - 4.0 * s_w;
    if disc >= 0.0 {
        // the minus root is cancellation-free; recover the other from the
        // product xi_plus xi_minus = S_w
        let xm = 0.5 * (-delta * s_w - disc.sqrt());
        (Complex64::new(s_w / xm, 0.0), Complex64::new(xm, 0.0))
    } else {
        let om = 0.5 * (-disc).sqrt();
        (
            Complex64::new(-0.5 * delta * s_w, om),
            Complex64::new(-0.5 * delta * s_w, -om),
        )
    }
}

/// Damping that makes the stick layer critically damped: `2 / sqrt(S_w)`.
pub fn delta_crit(s_w: f64) -> f64 {
    debug_assert!(s_w > 0.0);
    2.0 / s_w.sqrt()
}

/// State of the layer at the end of compression (slip speed reaches zero),
/// per unit entry slip speed and relative entry spin.
#[derive(Debug, Clone, Copy)]
pub struct CompressionEndpoint {
    pub y_hat: f64,
    pub w: f64,
    pub phi_gain: f64,
}

pub fn compression_endpoint(lin: &ContactLinearization, delta: f64) -> CompressionEndpoint {
    let (lp, _) = lambda_pm(lin.p_plus, delta);
    CompressionEndpoint {
        y_hat: -lin.p_plus / (lin.q_plus * lp),
        w: -lin.p_plus / lin.q_plus,
        phi_gain: -lin.c_plus / lin.q_plus,
    }
}

/// The closed-form impact map at one `(theta, delta)`.
#[derive(Debug, Clone, Copy)]
pub struct ImpactMap {
    /// Rebound normal speed per unit entry slip speed.
    pub e: f64,
    /// Duration of the stick phase in stretched time.
    pub tau_stick: f64,
    pub lambda: (f64, f64),
    pub xi: (Complex64, Complex64),
    pub delta_crit: f64,
    pub compression: CompressionEndpoint,
    /// Spin change over the whole episode per unit entry slip speed.
    pub phi_gain: f64,
}

/// `(cosh(sqrt(d) tau), sinh(sqrt(d) tau)/(sqrt(d) tau))` continued evenly
/// through `d <= 0`, where it becomes `(cos, sin x / x)`.
fn cosh_sinch(d: f64, tau: f64) -> (f64, f64) {
    let x = d * tau * tau;
    if x.abs() < 1e-8 {
        let c = 1.0 + x / 2.0 + x * x / 24.0;
        let s = 1.0 + x / 6.0 + x * x / 120.0;
        (c, s)
    } else if d > 0.0 {
        let a = d.sqrt() * tau;
        (a.cosh(), a.sinh() / a)
    } else {
        let a = (-d).sqrt() * tau;
        (a.cos(), a.sin() / a)
    }
}

/// Stick phase near critical damping, evaluated through the propagator
/// `exp(M tau) = exp(rho tau) [cosh(eta tau) I + tau sinch(eta tau) (M - rho I)]`
/// with `eta^2 = d` of either sign, followed by a Newton solve for the force
/// zero. Accurate uniformly across the eigenvalue collision.
fn stick_exit_near_critical(lin: &ContactLinearization, delta: f64) -> (f64, f64) {
    let s_w = lin.s_w;
    let (lp, _) = lambda_pm(lin.p_plus, delta);
    let rho = -0.5 * delta * s_w;
    let d = 0.25 * delta * delta * s_w * s_w - s_w;
    // initial stick state per yh0 = 1: z0 = (1, lp)
    let w0 = lp;
    // (M z0)_w - rho w0
    let k_w = (-s_w - delta * s_w * lp) - rho * lp;

    // scaled force-zero function g(tau) = w'(tau) exp(-rho tau)
    let g = |tau: f64| {
        let (c, s) = cosh_sinch(d, tau);
        (rho * c + d * tau * s) * w0 + (c + rho * tau * s) * k_w
    };
    let dg = |tau: f64| {
        let (c, s) = cosh_sinch(d, tau);
        (rho * d * tau * s + d * c) * w0 + (d * tau * s + rho * c) * k_w
    };

    // seed from the exactly confluent solution
    let mut tau = delta - 1.0 / (lp - rho);
    for _ in 0..100 {
        let step = g(tau) / dg(tau);
        tau -= step;
        if step.abs() <= 1e-14 * tau.abs().max(1.0) {
            break;
        }
    }

    let (c, s) = cosh_sinch(d, tau);
    let w_unit = (rho * tau).exp() * (c * w0 + tau * s * k_w);
    // rescale from yh0 = 1 to the true compression depth
    let e = w_unit * (-lin.p_plus / (lin.q_plus * lp));
    (e, tau)
}

/// Evaluate the closed-form impact map.
pub fn impact_map(lin: &ContactLinearization, delta: f64) -> Result<ImpactMap, IwcError> {
    check_delta(delta)?;
    let (lp, lm) = lambda_pm(lin.p_plus, delta);
    let (xp, xm) = xi_pm(lin.s_w, delta);
    let dc = delta_crit(lin.s_w);
    let compression = compression_endpoint(lin, delta);

    let (e, tau_stick) = if (delta - dc).abs() < CONFLUENT_WINDOW {
        stick_exit_near_critical(lin, delta)
    } else {
        let lpc = Complex64::new(lp, 0.0);
        let tau = if delta > dc {
            // two real decay rates: the force zero solves a real exponential
            // balance
            let ratio = ((xm * xm * (lpc - xp)) / (xp * xp * (lpc - xm))).re;
            ratio.ln() / (xp.re - xm.re)
        } else {
            // damped rotation: force zeros are spaced pi apart in phase;
            // take the first positive one
            ((lpc - xp) * xm * xm).arg().rem_euclid(PI) / xp.im
        };
        let e = ((xp / xm) * (lpc - xm) * (xp * tau).exp()).re * lin.p_plus / (lin.q_plus * lp);
        (e, tau)
    };

    let phi_gain =
        -lin.c_plus / lin.q_plus + (lin.s_phi / lin.s_w) * (e + lin.p_plus / lin.q_plus);

    Ok(ImpactMap {
        e,
        tau_stick,
        lambda: (lp, lm),
        xi: (xp, xm),
        delta_crit: dc,
        compression,
        phi_gain,
    })
}

/// Restitution alone.
pub fn restitution(lin: &ContactLinearization, delta: f64) -> Result<f64, IwcError> {
    impact_map(lin, delta).map(|m| m.e)
}

/// Undamped restitution in closed form, `-sqrt(p (p - S_w)) / q`.
pub fn restitution_undamped(lin: &ContactLinearization) -> f64 {
    -(lin.p_plus * (lin.p_plus - lin.s_w)).sqrt() / lin.q_plus
}

/// Leading-order restitution for strong damping, `K / delta^2` with
/// `K = (p_minus - p_plus) / (q_minus p_plus - q_plus p_minus)`.
pub fn restitution_large_delta(lin: &ContactLinearization, delta: f64) -> f64 {
    let k = (lin.p_minus - lin.p_plus) / (lin.q_minus * lin.p_plus - lin.q_plus * lin.p_minus);
    k / (delta * delta)
}

/// First-order expansion of the restitution for weak damping:
/// `e(0) (1 - S_w tau0 delta / 2)` where `tau0` is the undamped stick time.
pub fn restitution_small_delta(lin: &ContactLinearization, delta: f64) -> f64 {
    let e0 = (lin.p_plus * (lin.p_minus - lin.p_plus) / (lin.q_plus * (lin.q_minus - lin.q_plus)))
        .sqrt();
    let tau0 = (PI - (-lin.s_w / lin.p_plus).sqrt().atan()) / lin.s_w.sqrt();
    e0 * (1.0 - 0.5 * lin.s_w * tau0 * delta)
}

/// Rod state after an impact-without-collision episode, to leading order in
/// the compliance scale.
#[derive(Debug, Clone, Copy)]
pub struct PostImpactState {
    pub w: f64,
    pub theta: f64,
    pub phi: f64,
    pub v: f64,
}

pub fn post_impact_state(
    lin: &ContactLinearization,
    delta: f64,
    phi0: f64,
    v0: f64,
) -> Result<PostImpactState, IwcError> {
    let map = impact_map(lin, delta)?;
    Ok(PostImpactState {
        w: map.e * v0,
        theta: lin.theta,
        phi: phi0 + map.phi_gain * v0,
        v: 0.0,
    })
}

/// Observables of the independently integrated layer episode.
#[derive(Debug, Clone, Copy)]
pub struct NumericImpactMap {
    pub e: f64,
    pub tau_stick: f64,
    pub compression: CompressionEndpoint,
    pub phi_gain: f64,
}

/// Integrate the layer equations through one grazing episode (slip
/// compression to the sticking point, then sticking to force shutoff) and
/// read the restitution off the trajectory. Shares no algebra with
/// [`impact_map`] beyond the entry direction of the slip saddle, so it
/// cross-validates the closed form.
pub fn impact_map_numeric(
    lin: &ContactLinearization,
    delta: f64,
) -> Result<NumericImpactMap, IwcError> {
    check_delta(delta)?;
    let (lp, _) = lambda_pm(lin.p_plus, delta);
    let ctrl = StepControl {
        rtol: 1e-12,
        atol: 1e-14,
        event_time_tol: 1e-13,
        max_steps: 200_000,
        ..Default::default()
    };
    const TAU_MAX: f64 = 1e3;

    // Slip compression, entered halfway along the saddle's unstable
    // direction (the episode is invariant along it): [yh, w, v, phi].
    let depth = -lin.p_plus / (lin.q_plus * lp);
    let y0 = 0.5 * depth;
    let s0 = [
        y0,
        lp * y0,
        1.0 + (lin.q_plus / lin.p_plus) * lp * y0,
        (lin.c_plus / lin.p_plus) * lp * y0,
    ];
    let (p, q, c) = (lin.p_plus, lin.q_plus, lin.c_plus);
    let mut slip = |_t: f64, s: &[f64; 4], ds: &mut [f64; 4]| {
        let f = if s[0] > 0.0 {
            0.0
        } else {
            bracket(-s[0] - delta * s[1])
        };
        ds[0] = s[1];
        ds[1] = p * f;
        ds[2] = q * f;
        ds[3] = c * f;
    };
    let stop_slip = EventChannel::new(|_t, s: &[f64; 4]| s[2], CrossingDirection::Down, 1e-12);
    let sol1 = ode::integrate(&mut slip, 0.0, s0, TAU_MAX, &ctrl, &[stop_slip])?;
    let hit1 = sol1.event.ok_or(IwcError::Unresolved { tau_max: TAU_MAX })?;
    let compression = CompressionEndpoint {
        y_hat: hit1.y[0],
        w: hit1.y[1],
        phi_gain: hit1.y[3],
    };

    // Sticking release: [yh, w, phi] under the sliding combination, until
    // the force law crosses zero from above.
    let (s_w, s_phi) = (lin.s_w, lin.s_phi);
    let mut stick = |_t: f64, s: &[f64; 3], ds: &mut [f64; 3]| {
        let f = if s[0] > 0.0 {
            0.0
        } else {
            bracket(-s[0] - delta * s[1])
        };
        ds[0] = s[1];
        ds[1] = s_w * f;
        ds[2] = s_phi * f;
    };
    let stop_stick = EventChannel::new(
        move |_t, s: &[f64; 3]| -s[0] - delta * s[1],
        CrossingDirection::Down,
        1e-12,
    );
    let s1 = [hit1.y[0], hit1.y[1], hit1.y[3]];
    let sol2 = ode::integrate(&mut stick, 0.0, s1, TAU_MAX, &ctrl, &[stop_stick])?;
    let hit2 = sol2.event.ok_or(IwcError::Unresolved { tau_max: TAU_MAX })?;

    Ok(NumericImpactMap {
        e: hit2.y[1],
        tau_stick: hit2.t,
        compression,
        phi_gain: hit2.y[2],
    })
}

/// Critical approach speed in the entry chart: the stable manifold of the
/// saddle at `y1 = b / p` meets the surface at `w1 = -lambda_minus b / p`.
/// Entries slower than this (in magnitude) escape; faster ones are captured.
pub fn separatrix_w1(p_plus: f64, b: f64, delta: f64) -> f64 {
    let (_, lm) = lambda_pm(p_plus, delta);
    -lm * b / p_plus
}

/// Closed-form separatrix from a body state.
pub fn separatrix_from_state(
    body: &dyn BodyCoefficients,
    theta: f64,
    phi: f64,
    delta: f64,
) -> Result<f64, IwcError> {
    check_delta(delta)?;
    let co = body.eval(theta, phi);
    if !(co.p_plus < 0.0) {
        return Err(IwcError::NotParadoxical {
            theta,
            p_plus: co.p_plus,
        });
    }
    if !(co.b > 0.0) {
        return Err(IwcError::NotIndeterminate { b: co.b });
    }
    Ok(separatrix_w1(co.p_plus, co.b, delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryOutcome {
    /// The trajectory returned to the surface and left the layer.
    Escape,
    /// The trajectory ran away past the saddle: captured into the impact.
    Capture,
}

/// Integrate the entry chart at frozen angles (`eps = 0`) from a surface
/// point with approach speed `w1_entry < 0` and classify the outcome.
pub fn classify_entry(
    body: &dyn BodyCoefficients,
    theta: f64,
    phi: f64,
    delta: f64,
    w1_entry: f64,
) -> Result<EntryOutcome, IwcError> {
    check_delta(delta)?;
    let co = body.eval(theta, phi);
    if !(co.p_plus < 0.0) {
        return Err(IwcError::NotParadoxical {
            theta,
            p_plus: co.p_plus,
        });
    }
    if !(co.b > 0.0) {
        return Err(IwcError::NotIndeterminate { b: co.b });
    }
    let saddle_depth = co.b / co.p_plus;
    let floor = 10.0 * saddle_depth;
    let ctrl = StepControl {
        rtol: 1e-11,
        atol: 1e-13,
        event_time_tol: 1e-12,
        max_steps: 200_000,
        ..Default::default()
    };
    const TAU_MAX: f64 = 1e4;
    let mut field = |_t: f64, s: &[f64; 5], ds: &mut [f64; 5]| {
        kappa1_field(body, SlipBranch::Pos, delta, 0.0, s, ds)
    };
    let escape = EventChannel::new(|_t, s: &[f64; 5]| s[0], CrossingDirection::Up, 1e-11);
    let capture = EventChannel::new(
        move |_t, s: &[f64; 5]| s[0] - floor,
        CrossingDirection::Down,
        1e-11,
    );
    let s0 = [0.0, w1_entry, theta, phi, 0.0];
    let sol = ode::integrate(&mut field, 0.0, s0, TAU_MAX, &ctrl, &[escape, capture])?;
    match sol.event {
        Some(hit) if hit.channel == 0 => Ok(EntryOutcome::Escape),
        Some(_) => Ok(EntryOutcome::Capture),
        None => Err(IwcError::Unresolved { tau_max: TAU_MAX }),
    }
}

/// Locate the escape/capture boundary by bisection on the entry speed,
/// independently of the closed form. `rel_tol` is on the bracket width.
pub fn separatrix_w1_numeric(
    body: &dyn BodyCoefficients,
    theta: f64,
    phi: f64,
    delta: f64,
    rel_tol: f64,
) -> Result<f64, IwcError> {
    let mut lo = -1e-3; // gentle entries always escape
    if classify_entry(body, theta, phi, delta, lo)? != EntryOutcome::Escape {
        lo = -1e-6;
        if classify_entry(body, theta, phi, delta, lo)? != EntryOutcome::Escape {
            return Err(IwcError::Unresolved { tau_max: 0.0 });
        }
    }
    let mut hi = -1.0;
    let mut guard = 0;
    while classify_entry(body, theta, phi, delta, hi)? == EntryOutcome::Escape {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(IwcError::Unresolved { tau_max: 0.0 });
        }
    }
    while (hi - lo).abs() > rel_tol * hi.abs() {
        let mid = 0.5 * (hi + lo);
        match classify_entry(body, theta, phi, delta, mid)? {
            EntryOutcome::Escape => lo = mid,
            EntryOutcome::Capture => hi = mid,
        }
    }
    Ok(0.5 * (hi + lo))
}

/// Which invariant line of the entry-chart saddle to trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldBranch {
    Stable,
    Unstable,
}

/// Points `(y1, w1)` along an invariant manifold of the entry-chart saddle,
/// from the saddle out to the surface.
pub fn entry_manifold(
    p_plus: f64,
    b: f64,
    delta: f64,
    branch: ManifoldBranch,
    n: usize,
) -> Vec<(f64, f64)> {
    let (lp, lm) = lambda_pm(p_plus, delta);
    let rate = match branch {
        ManifoldBranch::Stable => lm,
        ManifoldBranch::Unstable => lp,
    };
    let base = b / p_plus;
    (0..=n)
        .map(|i| {
            let s = -base * i as f64 / n as f64;
            (base + s, rate * s)
        })
        .collect()
}

/// Least-squares line fit, returning `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{BodyParams, ClassicalRod};
    use approx::assert_relative_eq;

    fn rod(mu: f64, alpha: f64) -> ClassicalRod {
        ClassicalRod::new(BodyParams::new(alpha, mu).unwrap())
    }

    // Expected values in this module were computed independently at 50-digit
    // precision from the defining algebra and frozen here.

    #[test]
    fn saddle_eigenvalues() {
        let (lp, lm) = lambda_pm(-2.2434164835605385, 1.0);
        assert_relative_eq!(lp, 2.9929767589199986, max_relative = 1e-13);
        assert_relative_eq!(lm, -0.74956027535946008, max_relative = 1e-13);
        // defining identity lambda^2 = -p (1 + delta lambda)
        for &p in &[-5.0, -2.0, -0.7, -0.033744851154645141] {
            for &delta in &[0.0, 0.3, 1.0, 4.0, 20.0] {
                let (a, b) = lambda_pm(p, delta);
                for l in [a, b] {
                    assert_relative_eq!(l * l, -p * (1.0 + delta * l), max_relative = 1e-12);
                }
                assert!(a > 0.0 && b < 0.0);
            }
        }
    }

    #[test]
    fn stick_eigenvalues_and_critical_damping() {
        assert_relative_eq!(
            delta_crit(1.3448012434972628),
            1.7246498884543545,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            delta_crit(1.280319463337434861),
            1.7675463939655767,
            max_relative = 1e-14
        );
        let s_w = 1.2803194633374349;
        for &delta in &[0.0, 1.0, 1.7675, 1.768, 5.0] {
            let (xp, xm) = xi_pm(s_w, delta);
            // trace and determinant of the stick layer matrix
            assert_relative_eq!((xp + xm).re, -delta * s_w, max_relative = 1e-12, epsilon = 1e-14);
            assert!((xp + xm).im.abs() < 1e-14);
            let prod = xp * xm;
            assert_relative_eq!(prod.re, s_w, max_relative = 1e-12);
            assert!(prod.im.abs() < 1e-12);
        }
    }

    #[test]
    fn restitution_curve_reference_values() {
        let body = rod(1.4, 3.0);
        let lin = linearization(&body, 1.0).unwrap();
        let table = [
            (0.0, 0.069960197230461412, 1.530464759246886874),
            (0.5, 0.045774718805481764, 1.3252771168826954),
            (1.0, 0.032846389191565539, 1.181087486618849227),
            (2.0, 0.019735907110494381, 0.988414870631659422),
            (5.0, 0.0073131639226414379, 0.70552718527682957),
            (10.0, 0.0026511470616593870, 0.51126834563669260),
        ];
        for (delta, e_expect, tau_expect) in table {
            let map = impact_map(&lin, delta).unwrap();
            assert_relative_eq!(map.e, e_expect, max_relative = 1e-12);
            assert_relative_eq!(map.tau_stick, tau_expect, max_relative = 1e-12);
        }
        assert_relative_eq!(
            restitution_undamped(&lin),
            0.069960197230461412,
            max_relative = 1e-13
        );
    }

    #[test]
    fn restitution_at_the_display_point() {
        let body = rod(3.0, 3.0);
        let lin = linearization(&body, 0.9463).unwrap();
        let map = impact_map(&lin, 1.0).unwrap();
        assert_relative_eq!(map.e, 0.11671814373407424, max_relative = 1e-12);
        assert_relative_eq!(map.tau_stick, 1.74878546695707518, max_relative = 1e-12);
        assert_relative_eq!(map.compression.w, -0.29911214905040167, max_relative = 1e-12);
        assert_relative_eq!(
            map.compression.y_hat,
            -0.09993801260198721,
            max_relative = 1e-12
        );
        // full-episode spin change, stated for unit entry speed
        assert_relative_eq!(
            1.6654 + map.phi_gain,
            2.22266044768299738,
            max_relative = 1e-10
        );
    }

    #[test]
    fn closed_form_is_smooth_through_critical_damping() {
        let body = rod(1.4, 3.0);
        let lin = linearization(&body, 1.0).unwrap();
        let dc = delta_crit(lin.s_w);
        let e_at = restitution(&lin, dc).unwrap();
        // no kink where the propagator window hands over to the eigenvalue
        // formulas: three points straddling the seam stay collinear to the
        // curvature scale (a path disagreement would show as a jump)
        for sign in [-1.0, 1.0] {
            let h = sign * 2e-6;
            let e1 = restitution(&lin, dc + 4.5 * h).unwrap(); // inside
            let e2 = restitution(&lin, dc + 5.5 * h).unwrap(); // outside
            let e3 = restitution(&lin, dc + 6.5 * h).unwrap(); // outside
            assert!((e1 - 2.0 * e2 + e3).abs() < 2e-9);
            assert_relative_eq!(e_at, e1, max_relative = 1e-4);
        }
        // and the map decreases through the collision point
        let below = restitution(&lin, dc - 1e-3).unwrap();
        let above = restitution(&lin, dc + 1e-3).unwrap();
        assert!(below > e_at && e_at > above);
    }

    #[test]
    fn numeric_route_matches_closed_form() {
        let body = rod(1.4, 3.0);
        let lin = linearization(&body, 1.0).unwrap();
        let dc = delta_crit(lin.s_w);
        for delta in [0.0, 0.7, dc - 0.5e-5, dc, dc + 0.5e-5, 3.0] {
            let cf = impact_map(&lin, delta).unwrap();
            let num = impact_map_numeric(&lin, delta).unwrap();
            assert_relative_eq!(num.e, cf.e, max_relative = 1e-9, epsilon = 1e-11);
            assert_relative_eq!(num.tau_stick, cf.tau_stick, max_relative = 1e-8);
            assert_relative_eq!(
                num.compression.w,
                cf.compression.w,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                num.compression.y_hat,
                cf.compression.y_hat,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                num.compression.phi_gain,
                cf.compression.phi_gain,
                max_relative = 1e-10
            );
            assert_relative_eq!(num.phi_gain, cf.phi_gain, max_relative = 1e-8, epsilon = 1e-11);
        }
    }

    #[test]
    fn asymptotic_regimes() {
        let body = rod(1.4, 3.0);
        let lin = linearization(&body, 1.0).unwrap();
        // strong damping: e delta^2 approaches the closed-form constant
        let k = restitution_large_delta(&lin, 1.0);
        assert_relative_eq!(k, 0.34098653505963064, max_relative = 1e-13);
        let e1000 = restitution(&lin, 1000.0).unwrap();
        assert_relative_eq!(e1000 * 1e6, k, max_relative = 2e-2);
        // weak damping: tangent line at delta = 0
        assert_relative_eq!(
            restitution_small_delta(&lin, 0.0),
            restitution_undamped(&lin),
            max_relative = 1e-13
        );
        let d = 1e-3;
        let err = (restitution(&lin, d).unwrap() - restitution_small_delta(&lin, d)).abs();
        assert!(err < 1e-4 * restitution_undamped(&lin));
        // and the slope itself is right: finite difference vs formula
        let fd = (restitution(&lin, 1e-6).unwrap() - restitution(&lin, 0.0).unwrap()) / 1e-6;
        let slope = (restitution_small_delta(&lin, 1.0) - restitution_small_delta(&lin, 0.0))
            / 1.0;
        assert_relative_eq!(fd, slope, max_relative = 1e-4);
    }

    #[test]
    fn post_impact_state_fields() {
        let body = rod(3.0, 3.0);
        let lin = linearization(&body, 0.9463).unwrap();
        let post = post_impact_state(&lin, 1.0, 1.6654, 1.0).unwrap();
        assert_relative_eq!(post.w, 0.11671814373407424, max_relative = 1e-12);
        assert_relative_eq!(post.phi, 2.22266044768299738, max_relative = 1e-10);
        assert_eq!(post.theta, 0.9463);
        assert_eq!(post.v, 0.0);
    }

    #[test]
    fn separatrix_closed_form_and_classification() {
        let body = rod(3.0, 3.0);
        let (theta, phi, delta) = (0.9463, 1.6654, 1.0);
        let w1 = separatrix_from_state(&body, theta, phi, delta).unwrap();
        assert_relative_eq!(w1, -0.41766767442547387, max_relative = 1e-12);
        assert_eq!(
            classify_entry(&body, theta, phi, delta, 0.9 * w1).unwrap(),
            EntryOutcome::Escape
        );
        assert_eq!(
            classify_entry(&body, theta, phi, delta, 1.1 * w1).unwrap(),
            EntryOutcome::Capture
        );
        let num = separatrix_w1_numeric(&body, theta, phi, delta, 1e-4).unwrap();
        assert_relative_eq!(num, w1, max_relative = 1e-2);
    }

    #[test]
    fn entry_manifold_geometry() {
        let body = rod(3.0, 3.0);
        let co = body.eval(0.9463, 1.6654);
        let pts = entry_manifold(co.p_plus, co.b, 1.0, ManifoldBranch::Stable, 16);
        assert_eq!(pts.len(), 17);
        // starts at the saddle, ends at the surface crossing
        assert_relative_eq!(pts[0].0, co.b / co.p_plus, max_relative = 1e-14);
        assert!(pts[0].1.abs() < 1e-14);
        assert!(pts[16].0.abs() < 1e-14);
        assert_relative_eq!(
            pts[16].1,
            separatrix_w1(co.p_plus, co.b, 1.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn domain_errors() {
        let body = rod(1.4, 3.0);
        // outside the inconsistency band p_plus is positive
        assert!(matches!(
            linearization(&body, 0.2),
            Err(IwcError::NotParadoxical { .. })
        ));
        let lin = linearization(&body, 1.0).unwrap();
        assert!(matches!(
            restitution(&lin, -0.5),
            Err(IwcError::InvalidDelta(_))
        ));
        // spinning too slowly for the indeterminate regime: b < 0
        assert!(matches!(
            separatrix_from_state(&body, 1.0, 0.1, 1.0),
            Err(IwcError::NotIndeterminate { .. })
        ));
    }

    #[test]
    fn restitution_decreases_with_damping() {
        let body = rod(1.4, 3.0);
        let lin = linearization(&body, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..=100 {
            let delta = 10.0 * i as f64 / 100.0;
            let e = restitution(&lin, delta).unwrap();
            assert!(e > 0.0 && e < last);
            last = e;
        }
    }

    #[test]
    fn fit_helper_recovers_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.1, 5.1, 7.1, 9.1];
        let (m, b, r2) = linear_fit(&xs, &ys);
        assert_relative_eq!(m, 2.0, max_relative = 1e-12);
        assert_relative_eq!(b, 1.1, max_relative = 1e-12);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-12);
    }
}
