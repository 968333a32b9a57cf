//! Explicit Dormand-Prince 5(4) integration with dense output and event
//! location.
//!
//! The solver advances an autonomous-or-not ODE `y' = f(t, y)` with embedded
//! 4th-order error estimation, PI-free standard step control, and the
//! classical 4th-order continuous extension. Every accepted step yields a
//! [`DenseStep`] valid on its whole interval, so trajectories can be sampled
//! anywhere without re-integration.
//!
//! Event channels watch scalar guard functions `g(t, y)` for sign changes on
//! accepted steps. Detected crossings are refined on the dense interpolant by
//! Brent's method down to a time tolerance, and integration stops at the
//! earliest crossing. Channels carry an arming threshold: a channel whose
//! guard starts inside the band `|g| <= arm_threshold` is inactive until the
//! guard leaves the band. That hysteresis lets a caller restart integration
//! exactly on an event surface without retriggering the same event.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state or derivative at t = {t}")]
    NonFinite { t: f64 },
    #[error("exceeded {max_steps} accepted steps at t = {t}")]
    MaxSteps { t: f64, max_steps: usize },
}

// Butcher tableau of the Dormand-Prince 5(4) pair.
const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Weights of the 4th-order continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size and accuracy controls.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on the step size; `f64::INFINITY` disables it.
    pub h_max: f64,
    /// Starting step; `None` selects one automatically.
    pub h_init: Option<f64>,
    pub max_steps: usize,
    /// Absolute time tolerance for event refinement.
    pub event_time_tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 500_000,
            event_time_tol: 1e-12,
        }
    }
}

/// One accepted step's continuous extension, a quartic in the normalised
/// offset `s = (t - t0)/h`, exact at both endpoints.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * self.h.abs().max(1.0);
        t >= self.t0 - slack && t <= self.t1() + slack
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        self.eval_s(s)
    }

    /// Evaluate at normalised offset `s` in `[0, 1]`.
    pub fn eval_s(&self, s: f64) -> [f64; N] {
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = [
                self.rcont[0][i],
                self.rcont[1][i],
                self.rcont[2][i],
                self.rcont[3][i],
                self.rcont[4][i],
            ];
            out[i] = r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])));
        }
        out
    }
}

/// Which sign changes of a guard fire the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingDirection {
    /// Negative to positive.
    Up,
    /// Positive to negative.
    Down,
    Any,
}

/// A scalar guard watched for zero crossings during integration.
pub struct EventChannel<'a, const N: usize> {
    pub guard: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    pub direction: CrossingDirection,
    /// Hysteresis half-width: the channel stays inactive while `|g|` has not
    /// yet exceeded this since the start (or since its last disarming).
    pub arm_threshold: f64,
}

impl<'a, const N: usize> EventChannel<'a, N> {
    pub fn new(
        guard: impl Fn(f64, &[f64; N]) -> f64 + 'a,
        direction: CrossingDirection,
        arm_threshold: f64,
    ) -> Self {
        Self {
            guard: Box::new(guard),
            direction,
            arm_threshold,
        }
    }
}

/// A located event: channel index (into the slice passed to [`integrate`]),
/// refined crossing time and interpolated state there.
#[derive(Debug, Clone)]
pub struct EventHit<const N: usize> {
    pub channel: usize,
    pub t: f64,
    pub y: [f64; N],
}

/// Result of one integration run: final time and state, the event that ended
/// it (if any), and the dense steps covering `[t0, t]`.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub event: Option<EventHit<N>>,
    pub steps: Vec<DenseStep<N>>,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl<const N: usize> Solution<N> {
    /// Sample the stored dense output at `t`; clamps to the covered range.
    pub fn sample(&self, t: f64) -> Option<[f64; N]> {
        let step = self
            .steps
            .iter()
            .find(|s| s.contains(t))
            .or_else(|| self.steps.last())?;
        Some(step.eval(t.clamp(step.t0, step.t1())))
    }
}

fn scaled_err_norm<const N: usize>(e: &[f64; N], y0: &[f64; N], y1: &[f64; N], ctrl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = ctrl.atol + ctrl.rtol * y0[i].abs().max(y1[i].abs());
        let r = e[i] / sc;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

/// Automatic initial step selection (order-5 variant of the usual two-stage
/// estimate: first from the size of `f`, then from a crude second derivative).
fn initial_step<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    t_end: f64,
    ctrl: &StepControl,
) -> f64
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..N {
        let sc = ctrl.atol + ctrl.rtol * y0[i].abs();
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min((t_end - t0).abs());
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let mut f1 = [0.0; N];
    f(t0 + h0, &y1, &mut f1);
    let mut d2 = 0.0f64;
    for i in 0..N {
        let sc = ctrl.atol + ctrl.rtol * y0[i].abs();
        let diff = (f1[i] - f0[i]) / sc;
        d2 += diff * diff;
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctrl.h_max).min((t_end - t0).abs())
}

/// Brent root refinement on `[a, b]` with `f(a)`, `f(b)` of opposite sign.
/// Returns the abscissa once the bracket is narrower than `xtol`.
pub fn brent_root(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64, max_iter: usize) -> f64 {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa * fb < 0.0, "brent_root requires a sign change");
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = b - a;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            // b is the best estimate; ensure |f(b)| <= |f(c)|
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() < tol || fa.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fa;
            let (p, q) = if a == c {
                // secant
                (2.0 * m * s, 1.0 - s)
            } else {
                // inverse quadratic
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            let (p, q) = if p > 0.0 { (p, -q) } else { (-p, q) };
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min(e.abs() * q.abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol {
            d
        } else if m > 0.0 {
            tol
        } else {
            -tol
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = b - a;
        }
    }
    b
}

struct ChannelState {
    armed: bool,
    last_g: f64,
}

fn crossing_fires(dir: CrossingDirection, g0: f64, g1: f64) -> bool {
    match dir {
        CrossingDirection::Up => g0 < 0.0 && g1 >= 0.0,
        CrossingDirection::Down => g0 > 0.0 && g1 <= 0.0,
        CrossingDirection::Any => (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0),
    }
}

/// Integrate `y' = f(t, y)` from `(t0, y0)` towards `t_end > t0`, stopping at
/// the earliest event crossing if any channel fires.
pub fn integrate<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    ctrl: &StepControl,
    channels: &[EventChannel<'_, N>],
) -> Result<Solution<N>, OdeError>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    assert!(t_end > t0, "integration runs forward in time");
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    f(t, &y, &mut k1);
    if !k1.iter().all(|v| v.is_finite()) {
        return Err(OdeError::NonFinite { t });
    }

    let mut chan_state: Vec<ChannelState> = channels
        .iter()
        .map(|ch| {
            let g = (ch.guard)(t0, &y0);
            ChannelState {
                armed: g.abs() > ch.arm_threshold,
                last_g: g,
            }
        })
        .collect();

    let mut h = ctrl
        .h_init
        .unwrap_or_else(|| initial_step(f, t0, &y0, &k1, t_end, ctrl))
        .min(ctrl.h_max);
    let mut steps: Vec<DenseStep<N>> = Vec::new();
    let mut n_accepted = 0usize;
    let mut n_rejected = 0usize;
    let mut just_rejected = false;

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        ([0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N]);
    let mut ytmp = [0.0; N];

    while t < t_end {
        if n_accepted >= ctrl.max_steps {
            return Err(OdeError::MaxSteps {
                t,
                max_steps: ctrl.max_steps,
            });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        for i in 0..N {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..N {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..N {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..N {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..N {
            ytmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, &mut k6);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y1, &mut k7);

        if !y1.iter().all(|v| v.is_finite()) || !k7.iter().all(|v| v.is_finite()) {
            return Err(OdeError::NonFinite { t });
        }

        let mut errv = [0.0; N];
        for i in 0..N {
            errv[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = scaled_err_norm(&errv, &y, &y1, ctrl);

        if err > 1.0 {
            n_rejected += 1;
            just_rejected = true;
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            continue;
        }

        // Accepted: build the continuous extension.
        let mut rcont = [[0.0; N]; 5];
        for i in 0..N {
            let dy = y1[i] - y[i];
            let bspl = h * k1[i] - dy;
            rcont[0][i] = y[i];
            rcont[1][i] = dy;
            rcont[2][i] = bspl;
            rcont[3][i] = dy - h * k7[i] - bspl;
            rcont[4][i] = h
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let dense = DenseStep { t0: t, h, rcont };
        let t1 = t + h;
        n_accepted += 1;

        // Event scan on a refinement of the step, so that a crossing that
        // enters and leaves within one step is still caught.
        const SCAN: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mut best: Option<(usize, f64)> = None;
        for (ci, ch) in channels.iter().enumerate() {
            let st = &mut chan_state[ci];
            let mut g_prev = st.last_g;
            let mut armed = st.armed;
            let mut fired_at: Option<f64> = None;
            for &s in &SCAN[1..] {
                let ts = if s >= 1.0 { t1 } else { t + s * h };
                let ys = if s >= 1.0 { y1 } else { dense.eval_s(s) };
                let g = (ch.guard)(ts, &ys);
                if armed && crossing_fires(ch.direction, g_prev, g) {
                    let s_lo = SCAN[SCAN.iter().position(|&x| x == s).unwrap() - 1];
                    let t_lo = t + s_lo * h;
                    let t_star = if g == 0.0 {
                        ts
                    } else {
                        brent_root(
                            |tt| (ch.guard)(tt, &dense.eval(tt)),
                            t_lo,
                            ts,
                            ctrl.event_time_tol,
                            200,
                        )
                    };
                    fired_at = Some(t_star);
                    break;
                }
                if !armed && g.abs() > ch.arm_threshold {
                    armed = true;
                }
                g_prev = g;
            }
            st.armed = armed;
            st.last_g = (ch.guard)(t1, &y1);
            if let Some(ts) = fired_at {
                let earlier = match best {
                    None => true,
                    // strict <, so ties go to the lowest channel index
                    Some((_, tb)) => ts < tb - ctrl.event_time_tol,
                };
                if earlier {
                    best = Some((ci, ts));
                }
            }
        }

        steps.push(dense);

        if let Some((ci, t_star)) = best {
            let y_star = steps.last().unwrap().eval(t_star);
            return Ok(Solution {
                t: t_star,
                y: y_star,
                event: Some(EventHit {
                    channel: ci,
                    t: t_star,
                    y: y_star,
                }),
                steps,
                n_accepted,
                n_rejected,
            });
        }

        t = t1;
        y = y1;
        k1 = k7;
        let facmax = if just_rejected { 1.0 } else { 10.0 };
        just_rejected = false;
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, facmax);
        h = (h * fac).min(ctrl.h_max);
    }

    Ok(Solution {
        t,
        y,
        event: None,
        steps,
        n_accepted,
        n_rejected,
    })
}
