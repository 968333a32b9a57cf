//! Vector fields of the compliantly supported rod in all dynamical modes.
//!
//! The simulation state is `[y, w, theta, phi, v, x]`: contact-point height
//! and its rate, inclination and angular rate, tangential contact-point
//! velocity and position. In slow (physical) time the contact modes read
//!
//! ```text
//! y' = w,   w' = b + p F_N,   theta' = phi,   phi' = c F_N,
//! v' = a + q F_N,             x' = v,
//! ```
//!
//! with the branch coefficients of the active slip direction, or the sliding
//! combination of both branches while the contact point sticks. The same
//! fields are provided in the stretched time `tau = t / eps` with the
//! penetration scaled as `yh = y / eps`, which is the numerically robust
//! formulation when the compliance is stiff.
//!
//! A further rescaling `yh = eps yh1`, `w = eps w1` (same stretched time)
//! isolates the entry dynamics of the indeterminate regime; its field is
//! [`kappa1_field`]. In that chart the angles freeze as `eps -> 0` and the
//! surviving planar system decides between contact escape and capture.

use crate::compliance::{bracket, Compliance};
use crate::contact::{BodyCoefficients, Coeffs, SlipBranch};

/// Dimension of the simulation state `[y, w, theta, phi, v, x]`.
pub const STATE_DIM: usize = 6;

pub const IY: usize = 0;
pub const IW: usize = 1;
pub const ITHETA: usize = 2;
pub const IPHI: usize = 3;
pub const IV: usize = 4;
pub const IX: usize = 5;

/// Ballistic field: both contact forces vanish (separated, or penetrating
/// with the force bracket clamped at zero).
pub fn free_field<B: BodyCoefficients + ?Sized>(body: &B, s: &[f64; 6], ds: &mut [f64; 6]) {
    let co = body.eval(s[ITHETA], s[IPHI]);
    ds[IY] = s[IW];
    ds[IW] = co.b;
    ds[ITHETA] = s[IPHI];
    ds[IPHI] = 0.0;
    ds[IV] = co.a;
    ds[IX] = s[IV];
}

/// Slow-time field while the contact point slides in the given direction.
pub fn slip_field<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    branch: SlipBranch,
    s: &[f64; 6],
    ds: &mut [f64; 6],
) {
    let co = body.eval(s[ITHETA], s[IPHI]);
    let f_n = comp.normal_force(s[IY], s[IW]);
    ds[IY] = s[IW];
    ds[IW] = co.b + co.p(branch) * f_n;
    ds[ITHETA] = s[IPHI];
    ds[IPHI] = co.c(branch) * f_n;
    ds[IV] = co.a + co.q(branch) * f_n;
    ds[IX] = s[IV];
}

/// Sliding-mode coefficients: the convex combination of the two slip branches
/// that freezes the tangential velocity, split into the force multipliers
/// (`s_w`, `s_phi`) and the drift multipliers (`t_w`, `t_phi`) of `a`.
#[derive(Debug, Clone, Copy)]
pub struct StickCoeffs {
    pub s_w: f64,
    pub s_phi: f64,
    pub t_w: f64,
    pub t_phi: f64,
}

pub fn stick_coeffs(co: &Coeffs) -> StickCoeffs {
    let dq = co.q_minus - co.q_plus;
    StickCoeffs {
        s_w: (co.q_minus * co.p_plus - co.q_plus * co.p_minus) / dq,
        s_phi: (co.q_minus * co.c_plus - co.q_plus * co.c_minus) / dq,
        t_w: (co.p_plus - co.p_minus) / dq,
        t_phi: (co.c_plus - co.c_minus) / dq,
    }
}

/// Slow-time sliding field: tangential velocity held at zero, normal and
/// angular dynamics driven by the Filippov combination of the two branches.
pub fn stick_field<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    s: &[f64; 6],
    ds: &mut [f64; 6],
) {
    let co = body.eval(s[ITHETA], s[IPHI]);
    let sc = stick_coeffs(&co);
    let f_n = comp.normal_force(s[IY], s[IW]);
    ds[IY] = s[IW];
    ds[IW] = co.b + sc.s_w * f_n + co.a * sc.t_w;
    ds[ITHETA] = s[IPHI];
    ds[IPHI] = sc.s_phi * f_n + co.a * sc.t_phi;
    ds[IV] = 0.0;
    ds[IX] = s[IV];
}

/// Stretched-time ballistic field on the state `[yh, w, theta, phi, v, x]`.
pub fn free_field_fast<B: BodyCoefficients + ?Sized>(
    body: &B,
    epsilon: f64,
    s: &[f64; 6],
    ds: &mut [f64; 6],
) {
    let co = body.eval(s[ITHETA], s[IPHI]);
    ds[IY] = s[IW];
    ds[IW] = epsilon * co.b;
    ds[ITHETA] = epsilon * s[IPHI];
    ds[IPHI] = 0.0;
    ds[IV] = epsilon * co.a;
    ds[IX] = epsilon * s[IV];
}

/// Stretched-time slip field on `[yh, w, theta, phi, v, x]`; the force enters
/// through its scaled form `Fh = eps F_N`.
pub fn slip_field_fast<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    branch: SlipBranch,
    epsilon: f64,
    s: &[f64; 6],
    ds: &mut [f64; 6],
) {
    let co = body.eval(s[ITHETA], s[IPHI]);
    let fh = comp.scaled_normal_force(s[IY], s[IW]);
    ds[IY] = s[IW];
    ds[IW] = epsilon * co.b + co.p(branch) * fh;
    ds[ITHETA] = epsilon * s[IPHI];
    ds[IPHI] = co.c(branch) * fh;
    ds[IV] = epsilon * co.a + co.q(branch) * fh;
    ds[IX] = epsilon * s[IV];
}

/// Stretched-time sliding field on `[yh, w, theta, phi, v, x]`.
pub fn stick_field_fast<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    epsilon: f64,
    s: &[f64; 6],
    ds: &mut [f64; 6],
) {
    let co = body.eval(s[ITHETA], s[IPHI]);
    let sc = stick_coeffs(&co);
    let fh = comp.scaled_normal_force(s[IY], s[IW]);
    ds[IY] = s[IW];
    ds[IW] = epsilon * (co.b + co.a * sc.t_w) + sc.s_w * fh;
    ds[ITHETA] = epsilon * s[IPHI];
    ds[IPHI] = sc.s_phi * fh + epsilon * co.a * sc.t_phi;
    ds[IV] = 0.0;
    ds[IX] = epsilon * s[IV];
}

/// Entry-chart field on `[y1, w1, theta, phi, v]` with the linear force law.
///
/// Here `y1 = yh / eps`, `w1 = w / eps`, time is the stretched time, and
/// `F1 = [-y1 - delta w1]` (gated off for `y1 > 0`). At `eps = 0` the angles
/// and tangential velocity freeze and the planar `(y1, w1)` system remains.
pub fn kappa1_field<B: BodyCoefficients + ?Sized>(
    body: &B,
    branch: SlipBranch,
    delta: f64,
    epsilon: f64,
    s: &[f64; 5],
    ds: &mut [f64; 5],
) {
    let co = body.eval(s[2], s[3]);
    let f1 = if s[0] > 0.0 {
        0.0
    } else {
        bracket(-s[0] - delta * s[1])
    };
    ds[0] = s[1];
    ds[1] = co.b + co.p(branch) * f1;
    ds[2] = epsilon * s[3];
    ds[3] = epsilon * co.c(branch) * f1;
    ds[4] = epsilon * (co.a + co.q(branch) * f1);
}

/// Tangential accelerations that the two slip branches would impose at the
/// current normal force: `(a + q_plus F_N, a + q_minus F_N)`.
///
/// The contact point can stick iff the first is nonpositive and the second
/// nonnegative; the sign pattern also selects the released slip direction.
pub fn stick_guards<B: BodyCoefficients + ?Sized>(
    body: &B,
    theta: f64,
    phi: f64,
    f_n: f64,
) -> (f64, f64) {
    let co = body.eval(theta, phi);
    (co.a + co.q_plus * f_n, co.a + co.q_minus * f_n)
}

/// Closed-form sticking test at a given normal force.
pub fn sticking_condition<B: BodyCoefficients + ?Sized>(
    body: &B,
    theta: f64,
    phi: f64,
    f_n: f64,
) -> bool {
    let (u_plus, u_minus) = stick_guards(body, theta, phi, f_n);
    u_plus <= 0.0 && u_minus >= 0.0
}

/// Mechanical energy of the rod in simulation-state coordinates, including
/// the stored energy of the linear contact spring when in penetration.
///
/// The centre of mass sits at `(x - cos theta, y + sin theta)` with velocity
/// `(v + phi sin theta, w + phi cos theta)`; `alpha` is the squared ratio of
/// the contact arm to the gyration radius, so the spin term is
/// `phi^2 / (2 alpha)`. Only meaningful with the linear force law.
pub fn rod_energy(alpha: f64, s: &[f64; 6], comp: Option<&Compliance>) -> f64 {
    let (sin_t, cos_t) = s[ITHETA].sin_cos();
    let vx = s[IV] + s[IPHI] * sin_t;
    let vy = s[IW] + s[IPHI] * cos_t;
    let spring = match comp {
        Some(c) => c
            .spring_potential(s[IY])
            .expect("energy bookkeeping needs the linear force law"),
        None => 0.0,
    };
    0.5 * (vx * vx + vy * vy) + s[IPHI] * s[IPHI] / (2.0 * alpha) + s[IY] + sin_t + spring
}
