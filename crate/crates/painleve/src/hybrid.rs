//! Event-driven simulation of the rod with compliant frictional contact.
//!
//! The flow switches between four modes: ballistic flight, slipping contact
//! (either direction), sticking contact, and penetration with the force
//! bracket clamped to zero (the spring-damper pulls instead of pushes, so the
//! unilateral force shuts off while the geometry still overlaps). Mode
//! changes are located as zero crossings of guard functions on the dense
//! integrator output, the state is handed across the transition, and
//! integration resumes, so every accepted step belongs to exactly one mode.
//!
//! Stiff compliance separates time scales. For small `eps` the contact modes
//! are integrated in the stretched variables (`yh = y/eps`, `tau = t/eps`)
//! where the contact dynamics is order one, and segments record which clock
//! they used so sampling can convert back to physical variables.

use crate::compliance::Compliance;
use crate::contact::{BodyCoefficients, SlipBranch};
use crate::dynamics::{
    free_field, free_field_fast, slip_field, slip_field_fast, stick_field, stick_field_fast,
    stick_guards, IPHI, ITHETA, IV, IW, IX, IY,
};
use crate::ode::{self, CrossingDirection, DenseStep, EventChannel, OdeError, StepControl};
use thiserror::Error;

/// Touching band: `|y|` below this counts as on the surface.
const SEP_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("integration failed in {mode:?} at t = {t}: {source}")]
    Ode {
        mode: Mode,
        t: f64,
        #[source]
        source: OdeError,
    },
    #[error("event cascade: exceeded {max} mode changes (last at t = {t})")]
    EventStorm { t: f64, max: usize },
    #[error("invalid initial state: {0}")]
    InvalidInitial(String),
}

/// Full simulation state in physical variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState {
    pub t: f64,
    pub y: f64,
    pub w: f64,
    pub theta: f64,
    pub phi: f64,
    pub v: f64,
    pub x: f64,
}

impl HybridState {
    pub fn new(t: f64, y: f64, w: f64, theta: f64, phi: f64, v: f64, x: f64) -> Self {
        Self {
            t,
            y,
            w,
            theta,
            phi,
            v,
            x,
        }
    }

    pub fn from_array(t: f64, s: &[f64; 6]) -> Self {
        Self {
            t,
            y: s[IY],
            w: s[IW],
            theta: s[ITHETA],
            phi: s[IPHI],
            v: s[IV],
            x: s[IX],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.y, self.w, self.theta, self.phi, self.v, self.x]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.t.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    FreeFlight,
    ContactSlip(SlipBranch),
    ContactStick,
    /// Penetrating, but the unilateral bracket holds the force at zero.
    ClampedContact,
}

impl Mode {
    /// True while the geometry overlaps the surface (force on or clamped).
    pub fn in_contact(&self) -> bool {
        !matches!(self, Mode::FreeFlight)
    }

    /// True while the normal force is active.
    pub fn force_on(&self) -> bool {
        matches!(self, Mode::ContactSlip(_) | Mode::ContactStick)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Flight reached the surface with approach speed.
    ContactOnset,
    /// The force law crossed zero from above; the normal force shut off.
    ContactLoss,
    /// Penetration closed from below; the rod is airborne again.
    Separation,
    /// The force law crossed zero from below during clamped penetration.
    ForceReactivation,
    /// Slip speed reached zero inside the sticking band.
    StickOnset,
    /// Slip speed crossed zero and the opposite branch took over.
    SlipReversal,
    /// Slip speed touched zero but the same branch resumed.
    Graze,
    /// A sticking-band boundary was crossed; slip released.
    FoldExit,
    /// The user section was reached (terminal).
    Section,
}

#[derive(Debug, Clone)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub mode_before: Mode,
    pub mode_after: Mode,
    /// State just after the transition (normalised, physical variables).
    pub state: HybridState,
}

/// Which time variable a segment was integrated in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    Slow,
    Fast { epsilon: f64 },
}

/// One mode's worth of dense output. In the fast clock the stored steps are
/// in `(tau, yh)` variables with `tau = 0` at the segment start.
#[derive(Debug, Clone)]
pub struct Segment {
    pub mode: Mode,
    pub clock: Clock,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: Vec<DenseStep<6>>,
}

impl Segment {
    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * self.t_end.abs().max(1.0);
        t >= self.t_start - slack && t <= self.t_end + slack
    }

    /// Sample in physical variables.
    pub fn sample(&self, t: f64) -> Option<[f64; 6]> {
        let var = match self.clock {
            Clock::Slow => t,
            Clock::Fast { epsilon } => (t - self.t_start) / epsilon,
        };
        let step = self
            .steps
            .iter()
            .find(|s| s.contains(var))
            .or_else(|| self.steps.last())?;
        let mut s = step.eval(var.clamp(step.t0.min(step.t1()), step.t0.max(step.t1())));
        if let Clock::Fast { epsilon } = self.clock {
            s[IY] *= epsilon;
        }
        Some(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TimeEnd,
    Section,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: HybridState,
    pub final_state: HybridState,
    pub final_mode: Mode,
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
    pub warnings: Vec<String>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn sample(&self, t: f64) -> Option<HybridState> {
        let seg = self.segments.iter().find(|s| s.contains(t))?;
        seg.sample(t).map(|a| HybridState::from_array(t, &a))
    }

    pub fn mode_at(&self, t: f64) -> Option<Mode> {
        self.segments.iter().find(|s| s.contains(t)).map(|s| s.mode)
    }

    /// Maximal time intervals spent in contact (force on or clamped).
    pub fn contact_episodes(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for seg in &self.segments {
            if !seg.mode.in_contact() {
                continue;
            }
            match out.last_mut() {
                Some(last) if (seg.t_start - last.1).abs() <= 1e-9 * seg.t_end.abs().max(1.0) => {
                    last.1 = seg.t_end;
                }
                _ => out.push((seg.t_start, seg.t_end)),
            }
        }
        out
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Absolute tolerance on event times, in the active integration clock.
    pub event_time_tol: f64,
    /// Slip speeds below this can be captured into stick.
    pub stick_band: f64,
    /// Arming band for all other guards.
    pub guard_band: f64,
    /// Contact modes switch to the stretched clock when `eps` is below this.
    pub fast_time_threshold: f64,
    pub max_steps_per_segment: usize,
    pub max_events: usize,
    /// Terminate when flight crosses this height upward.
    pub section_y_up: Option<f64>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            event_time_tol: 1e-12,
            stick_band: 1e-10,
            guard_band: 1e-11,
            fast_time_threshold: 1e-3,
            max_steps_per_segment: 500_000,
            max_events: 10_000,
            section_y_up: None,
        }
    }
}

/// What a fired guard means in the active mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GuardTag {
    SurfaceDown,
    SectionUp,
    ForceDown,
    SlipZero,
    FoldUp,
    FoldDown,
    SurfaceUp,
    ForceUp,
}

fn mode_clock(mode: Mode, epsilon: f64, cfg: &IntegrationConfig) -> Clock {
    if mode.in_contact() && epsilon < cfg.fast_time_threshold {
        Clock::Fast { epsilon }
    } else {
        Clock::Slow
    }
}

/// Normal force reconstructed from an integration-variable state.
fn force_at<B: BodyCoefficients + ?Sized>(
    _body: &B,
    comp: &Compliance,
    clock: Clock,
    s: &[f64; 6],
) -> f64 {
    match clock {
        Clock::Slow => comp.normal_force(s[IY], s[IW]),
        Clock::Fast { epsilon } => comp.scaled_normal_force(s[IY], s[IW]) / epsilon,
    }
}

/// Decide the contact mode for a state on (or beneath) the surface with the
/// force law active or about to activate. May zero `v` (stick capture).
fn contact_entry<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    s: &mut [f64; 6],
    cfg: &IntegrationConfig,
    warnings: &mut Vec<String>,
    t: f64,
) -> Mode {
    if s[IV] > cfg.stick_band {
        return Mode::ContactSlip(SlipBranch::Pos);
    }
    if s[IV] < -cfg.stick_band {
        return Mode::ContactSlip(SlipBranch::Neg);
    }
    let f_n = comp.normal_force(s[IY].min(0.0), s[IW]);
    let (u_plus, u_minus) = stick_guards(body, s[ITHETA], s[IPHI], f_n);
    s[IV] = 0.0;
    if u_plus <= 0.0 && u_minus >= 0.0 {
        // Entry close to a sticking-band boundary: probe whether the sliding
        // flow immediately pushes back out; if so, release the slip now.
        if u_plus > -cfg.guard_band || u_minus < cfg.guard_band {
            if let Some(branch) = fold_probe(body, comp, s) {
                return Mode::ContactSlip(branch);
            }
        }
        if u_plus == 0.0 && u_minus == 0.0 && f_n == 0.0 {
            warnings.push(format!(
                "t = {t}: tangentially degenerate contact entry (zero force and zero drift), capturing into stick"
            ));
        }
        Mode::ContactStick
    } else if u_plus > 0.0 {
        Mode::ContactSlip(SlipBranch::Pos)
    } else {
        Mode::ContactSlip(SlipBranch::Neg)
    }
}

/// Finite-difference probe of the sticking-band guards along the sliding
/// flow, in stretched variables so the force time scale is order one.
fn fold_probe<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    s: &[f64; 6],
) -> Option<SlipBranch> {
    let eps = comp.epsilon;
    let mut sf = *s;
    sf[IY] /= eps;
    let mut ds = [0.0; 6];
    stick_field_fast(body, comp, eps, &sf, &mut ds);
    let dtau = 1e-7;
    let mut s2 = sf;
    for i in 0..6 {
        s2[i] += dtau * ds[i];
    }
    let f0 = comp.scaled_normal_force(sf[IY], sf[IW]) / eps;
    let f1 = comp.scaled_normal_force(s2[IY], s2[IW]) / eps;
    let (up0, um0) = stick_guards(body, sf[ITHETA], sf[IPHI], f0);
    let (up1, um1) = stick_guards(body, s2[ITHETA], s2[IPHI], f1);
    if up0 > -1e-9 && up1 > up0 {
        return Some(SlipBranch::Pos);
    }
    if um0 < 1e-9 && um1 < um0 {
        return Some(SlipBranch::Neg);
    }
    None
}

/// Initial mode classification from an arbitrary user state.
fn initial_mode<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    s: &mut [f64; 6],
    cfg: &IntegrationConfig,
    warnings: &mut Vec<String>,
    t: f64,
) -> Mode {
    if s[IY] > SEP_TOL {
        return Mode::FreeFlight;
    }
    if s[IY] < -SEP_TOL {
        let h = comp.law_value(s[IY] / comp.epsilon, s[IW]);
        if h <= 0.0 {
            return Mode::ClampedContact;
        }
        return contact_entry(body, comp, s, cfg, warnings, t);
    }
    // touching the surface: departing states are flight, the rest enter
    // contact (any activation lag is below the integration tolerance)
    if s[IW] > 1e-6 {
        Mode::FreeFlight
    } else {
        contact_entry(body, comp, s, cfg, warnings, t)
    }
}

struct SegmentRun {
    solution: ode::Solution<6>,
    clock: Clock,
    t_end: f64,
    tags: Vec<GuardTag>,
}

fn run_segment<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    mode: Mode,
    t0: f64,
    s_phys: &[f64; 6],
    t_stop: f64,
    cfg: &IntegrationConfig,
) -> Result<SegmentRun, HybridError> {
    let clock = mode_clock(mode, comp.epsilon, cfg);
    let eps = comp.epsilon;
    let (var0, var_end, mut s0) = match clock {
        Clock::Slow => (t0, t_stop, *s_phys),
        Clock::Fast { epsilon } => {
            let mut s = *s_phys;
            s[IY] /= epsilon;
            (0.0, (t_stop - t0) / epsilon, s)
        }
    };
    let ctrl = StepControl {
        rtol: cfg.rtol,
        atol: cfg.atol,
        h_max: f64::INFINITY,
        h_init: None,
        max_steps: cfg.max_steps_per_segment,
        event_time_tol: cfg.event_time_tol,
    };

    let mut tags: Vec<GuardTag> = Vec::new();
    let mut channels: Vec<EventChannel<'_, 6>> = Vec::new();
    match mode {
        Mode::FreeFlight => {
            tags.push(GuardTag::SurfaceDown);
            channels.push(EventChannel::new(
                |_t, s: &[f64; 6]| s[IY],
                CrossingDirection::Down,
                cfg.guard_band,
            ));
            if let Some(ys) = cfg.section_y_up {
                tags.push(GuardTag::SectionUp);
                channels.push(EventChannel::new(
                    move |_t, s: &[f64; 6]| s[IY] - ys,
                    CrossingDirection::Up,
                    cfg.guard_band,
                ));
            }
        }
        Mode::ContactSlip(branch) => {
            tags.push(GuardTag::ForceDown);
            match clock {
                Clock::Slow => channels.push(EventChannel::new(
                    move |_t, s: &[f64; 6]| comp.law_value(s[IY] / eps, s[IW]),
                    CrossingDirection::Down,
                    cfg.guard_band,
                )),
                Clock::Fast { .. } => channels.push(EventChannel::new(
                    move |_t, s: &[f64; 6]| comp.law_value(s[IY], s[IW]),
                    CrossingDirection::Down,
                    cfg.guard_band,
                )),
            }
            tags.push(GuardTag::SlipZero);
            let dir = match branch {
                SlipBranch::Pos => CrossingDirection::Down,
                SlipBranch::Neg => CrossingDirection::Up,
            };
            channels.push(EventChannel::new(
                |_t, s: &[f64; 6]| s[IV],
                dir,
                cfg.stick_band,
            ));
        }
        Mode::ContactStick => {
            tags.push(GuardTag::ForceDown);
            match clock {
                Clock::Slow => channels.push(EventChannel::new(
                    move |_t, s: &[f64; 6]| comp.law_value(s[IY] / eps, s[IW]),
                    CrossingDirection::Down,
                    cfg.guard_band,
                )),
                Clock::Fast { .. } => channels.push(EventChannel::new(
                    move |_t, s: &[f64; 6]| comp.law_value(s[IY], s[IW]),
                    CrossingDirection::Down,
                    cfg.guard_band,
                )),
            }
            tags.push(GuardTag::FoldUp);
            channels.push(EventChannel::new(
                move |_t, s: &[f64; 6]| {
                    stick_guards(body, s[ITHETA], s[IPHI], force_at(body, comp, clock, s)).0
                },
                CrossingDirection::Up,
                cfg.guard_band,
            ));
            tags.push(GuardTag::FoldDown);
            channels.push(EventChannel::new(
                move |_t, s: &[f64; 6]| {
                    stick_guards(body, s[ITHETA], s[IPHI], force_at(body, comp, clock, s)).1
                },
                CrossingDirection::Down,
                cfg.guard_band,
            ));
        }
        Mode::ClampedContact => {
            tags.push(GuardTag::SurfaceUp);
            channels.push(EventChannel::new(
                |_t, s: &[f64; 6]| s[IY],
                CrossingDirection::Up,
                cfg.guard_band,
            ));
            tags.push(GuardTag::ForceUp);
            match clock {
                Clock::Slow => channels.push(EventChannel::new(
                    move |_t, s: &[f64; 6]| comp.law_value(s[IY] / eps, s[IW]),
                    CrossingDirection::Up,
                    cfg.guard_band,
                )),
                Clock::Fast { .. } => channels.push(EventChannel::new(
                    move |_t, s: &[f64; 6]| comp.law_value(s[IY], s[IW]),
                    CrossingDirection::Up,
                    cfg.guard_band,
                )),
            }
        }
    }

    // Entering contact through the surface leaves an out-of-band positive y
    // of event-tolerance size; pull it onto the surface so the stretched
    // charts start on the correct side.
    if mode.force_on() && s0[IY] > 0.0 && s0[IY] < SEP_TOL.max(ctrl.event_time_tol) {
        s0[IY] = 0.0;
    }

    let mut field: Box<dyn FnMut(f64, &[f64; 6], &mut [f64; 6])> = match (mode, clock) {
        (Mode::FreeFlight | Mode::ClampedContact, Clock::Slow) => {
            Box::new(move |_t, s, ds| free_field(body, s, ds))
        }
        (Mode::FreeFlight | Mode::ClampedContact, Clock::Fast { epsilon }) => {
            Box::new(move |_t, s, ds| free_field_fast(body, epsilon, s, ds))
        }
        (Mode::ContactSlip(br), Clock::Slow) => {
            Box::new(move |_t, s, ds| slip_field(body, comp, br, s, ds))
        }
        (Mode::ContactSlip(br), Clock::Fast { epsilon }) => {
            Box::new(move |_t, s, ds| slip_field_fast(body, comp, br, epsilon, s, ds))
        }
        (Mode::ContactStick, Clock::Slow) => {
            Box::new(move |_t, s, ds| stick_field(body, comp, s, ds))
        }
        (Mode::ContactStick, Clock::Fast { epsilon }) => {
            Box::new(move |_t, s, ds| stick_field_fast(body, comp, epsilon, s, ds))
        }
    };

    let solution = ode::integrate(&mut field, var0, s0, var_end, &ctrl, &channels).map_err(
        |source| {
            let t_err = match clock {
                Clock::Slow => match &source {
                    OdeError::StepUnderflow { t, .. }
                    | OdeError::NonFinite { t }
                    | OdeError::MaxSteps { t, .. } => *t,
                },
                Clock::Fast { epsilon } => match &source {
                    OdeError::StepUnderflow { t, .. }
                    | OdeError::NonFinite { t }
                    | OdeError::MaxSteps { t, .. } => t0 + epsilon * t,
                },
            };
            HybridError::Ode {
                mode,
                t: t_err,
                source,
            }
        },
    )?;

    let t_end = match clock {
        Clock::Slow => solution.t,
        Clock::Fast { epsilon } => t0 + epsilon * solution.t,
    };
    Ok(SegmentRun {
        solution,
        clock,
        t_end,
        tags,
    })
}

/// Simulate from `init` until `t_end`, a section crossing, or an error.
pub fn simulate<B: BodyCoefficients + ?Sized>(
    body: &B,
    comp: &Compliance,
    init: HybridState,
    t_end: f64,
    cfg: &IntegrationConfig,
) -> Result<Trajectory, HybridError> {
    if !init.is_finite() {
        return Err(HybridError::InvalidInitial(format!(
            "non-finite component in {init:?}"
        )));
    }
    if !(t_end > init.t) {
        return Err(HybridError::InvalidInitial(format!(
            "t_end = {t_end} does not lie after t0 = {}",
            init.t
        )));
    }

    let mut warnings = Vec::new();
    let mut s_phys = init.to_array();
    let mut t = init.t;
    let mut mode = initial_mode(body, comp, &mut s_phys, cfg, &mut warnings, t);
    let mut segments: Vec<Segment> = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut termination = Termination::TimeEnd;

    let time_slack = 1e-14 * t_end.abs().max(1.0);
    while t < t_end - time_slack {
        let run = run_segment(body, comp, mode, t, &s_phys, t_end, cfg)?;
        let mut s_next = run.solution.y;
        if let Clock::Fast { epsilon } = run.clock {
            s_next[IY] *= epsilon;
        }
        segments.push(Segment {
            mode,
            clock: run.clock,
            t_start: t,
            t_end: run.t_end,
            steps: run.solution.steps.clone(),
        });
        t = run.t_end;

        let hit = match &run.solution.event {
            None => {
                s_phys = s_next;
                break;
            }
            Some(h) => h,
        };
        let tag = run.tags[hit.channel];
        let mode_before = mode;
        let kind;
        match (mode, tag) {
            (Mode::FreeFlight, GuardTag::SurfaceDown) => {
                kind = EventKind::ContactOnset;
                s_next[IY] = s_next[IY].min(0.0);
                mode = contact_entry(body, comp, &mut s_next, cfg, &mut warnings, t);
            }
            (Mode::FreeFlight, GuardTag::SectionUp) => {
                kind = EventKind::Section;
                termination = Termination::Section;
            }
            (Mode::ContactSlip(_) | Mode::ContactStick, GuardTag::ForceDown) => {
                kind = EventKind::ContactLoss;
                if s_next[IY] >= -SEP_TOL {
                    s_next[IY] = s_next[IY].max(0.0);
                    mode = Mode::FreeFlight;
                } else {
                    mode = Mode::ClampedContact;
                }
            }
            (Mode::ContactSlip(branch), GuardTag::SlipZero) => {
                s_next[IV] = 0.0;
                let new_mode = contact_entry(body, comp, &mut s_next, cfg, &mut warnings, t);
                kind = match new_mode {
                    Mode::ContactStick => EventKind::StickOnset,
                    Mode::ContactSlip(b) if b == branch => EventKind::Graze,
                    _ => EventKind::SlipReversal,
                };
                mode = new_mode;
            }
            (Mode::ContactStick, GuardTag::FoldUp) => {
                kind = EventKind::FoldExit;
                mode = Mode::ContactSlip(SlipBranch::Pos);
            }
            (Mode::ContactStick, GuardTag::FoldDown) => {
                kind = EventKind::FoldExit;
                mode = Mode::ContactSlip(SlipBranch::Neg);
            }
            (Mode::ClampedContact, GuardTag::SurfaceUp) => {
                kind = EventKind::Separation;
                s_next[IY] = s_next[IY].max(0.0);
                mode = Mode::FreeFlight;
            }
            (Mode::ClampedContact, GuardTag::ForceUp) => {
                kind = EventKind::ForceReactivation;
                mode = contact_entry(body, comp, &mut s_next, cfg, &mut warnings, t);
            }
            (m, g) => unreachable!("guard {g:?} cannot fire in mode {m:?}"),
        }
        events.push(Event {
            t,
            kind,
            mode_before,
            mode_after: mode,
            state: HybridState::from_array(t, &s_next),
        });
        s_phys = s_next;
        if kind == EventKind::Section {
            break;
        }
        if events.len() >= cfg.max_events {
            return Err(HybridError::EventStorm {
                t,
                max: cfg.max_events,
            });
        }
    }

    Ok(Trajectory {
        initial: init,
        final_state: HybridState::from_array(t, &s_phys),
        final_mode: mode,
        segments,
        events,
        warnings,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compliance::ComplianceParams;
    use crate::contact::{BodyParams, ClassicalRod};
    use crate::dynamics::rod_energy;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn rod(mu: f64, alpha: f64) -> ClassicalRod {
        ClassicalRod::new(BodyParams::new(alpha, mu).unwrap())
    }

    fn energy_is_nonincreasing(body_alpha: f64, comp: &Compliance, traj: &Trajectory, n: usize) {
        let t0 = traj.initial.t;
        let t1 = traj.final_state.t;
        let mut last = f64::INFINITY;
        for i in 0..=n {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            let Some(s) = traj.sample(t) else { continue };
            let e = rod_energy(body_alpha, &s.to_array(), Some(comp));
            assert!(
                e <= last + 1e-7 * last.abs().max(1.0),
                "energy rose to {e} from {last} at t = {t}"
            );
            last = e;
        }
    }

    #[test]
    fn vertical_drop_elastic_bounce() {
        // undamped vertical rod: symmetric contact, no spin-up, and the
        // stretched contact phase is a half-period of a unit oscillator
        let body = rod(3.0, 3.0);
        for eps in [1e-2, 1e-4] {
            let comp = Compliance::linear(ComplianceParams::new(eps, 0.0).unwrap());
            let init = HybridState::new(0.0, 1.0, 0.0, FRAC_PI_2, 0.0, 0.0, 0.0);
            let traj = simulate(&body, &comp, init, 2.2, &IntegrationConfig::default()).unwrap();
            let sqrt2 = std::f64::consts::SQRT_2;

            let onset = traj
                .events_of(EventKind::ContactOnset)
                .next()
                .expect("an impact");
            assert_relative_eq!(onset.t, sqrt2, max_relative = 1e-7);
            assert_relative_eq!(onset.state.w, -sqrt2, max_relative = 1e-6);

            let loss = traj
                .events_of(EventKind::ContactLoss)
                .next()
                .expect("an elastic rebound");
            assert_relative_eq!(loss.state.w, sqrt2, max_relative = 1e-5);
            assert!(loss.state.v.abs() < 1e-8);
            assert_relative_eq!(loss.state.theta, FRAC_PI_2, max_relative = 1e-9);
            // contact lasts about pi in stretched time
            assert_relative_eq!(loss.t - onset.t, std::f64::consts::PI * eps, max_relative = 1e-2);

            assert_eq!(traj.final_mode, Mode::FreeFlight);
            // back near the apex at the mirrored time
            let t_apex = loss.t + sqrt2;
            if t_apex < 2.2 {
                let apex = traj.sample(t_apex).unwrap();
                assert_relative_eq!(apex.y, 1.0, max_relative = 1e-4);
            }
            energy_is_nonincreasing(3.0, &comp, &traj, 200);
        }
    }

    #[test]
    fn inclined_impact_without_collision() {
        // grazing slip in the inconsistent band captures into stick and the
        // contact rebounds near the restitution predicted by the layer theory
        // (the finite-stiffness correction at this eps is about 0.014)
        let body = rod(1.4, 3.0);
        let eps = 1e-3;
        let comp = Compliance::linear(ComplianceParams::new(eps, 1.0).unwrap());
        let init = HybridState::new(0.0, 0.0, -eps, 1.0, 0.5, 1.0, 0.0);
        let traj = simulate(&body, &comp, init, 0.05, &IntegrationConfig::default()).unwrap();

        assert!(traj.events_of(EventKind::StickOnset).next().is_some());
        assert!(traj.events_of(EventKind::FoldExit).next().is_some());
        let loss = traj
            .events_of(EventKind::ContactLoss)
            .next()
            .expect("contact must end");
        assert_relative_eq!(loss.state.w, 0.0328, epsilon = 0.02);
        assert!(loss.state.w > 0.02);
        assert!(loss.state.v.abs() < 0.05);
        assert!((loss.state.theta - 1.0).abs() < 0.05);
        assert_eq!(traj.final_mode, Mode::FreeFlight);

        let episodes = traj.contact_episodes();
        assert_eq!(episodes.len(), 1);
        assert!(episodes[0].1 - episodes[0].0 < 0.02);
        energy_is_nonincreasing(3.0, &comp, &traj, 300);
    }

    #[test]
    fn clamped_penetration_separates() {
        let body = rod(3.0, 3.0);
        let comp = Compliance::linear(ComplianceParams::new(1e-2, 1.0).unwrap());
        // retracting fast inside shallow penetration: force stays clamped
        let init = HybridState::new(0.0, -1e-5, 0.5, FRAC_PI_2, 0.0, 0.0, 0.0);
        let traj = simulate(&body, &comp, init, 0.05, &IntegrationConfig::default()).unwrap();
        let sep = traj
            .events_of(EventKind::Separation)
            .next()
            .expect("clean separation");
        assert!(sep.t < 1e-3);
        assert_eq!(traj.mode_at(init.t + 1e-6).unwrap(), Mode::ClampedContact);
        assert_eq!(traj.final_mode, Mode::FreeFlight);
    }

    #[test]
    fn clamped_penetration_can_reactivate() {
        let body = rod(3.0, 3.0);
        let comp = Compliance::linear(ComplianceParams::new(1e-2, 20.0).unwrap());
        // deep penetration, retracting, but heavily damped: the force law
        // reactivates before the surface is reached
        let init = HybridState::new(0.0, -0.05, 0.3, FRAC_PI_2, 0.0, 0.0, 0.0);
        let traj = simulate(&body, &comp, init, 0.6, &IntegrationConfig::default()).unwrap();
        assert!(traj.events_of(EventKind::ForceReactivation).next().is_some());
        assert!(
            traj.events_of(EventKind::Separation)
                .next()
                .map(|e| e.t)
                .unwrap_or(f64::INFINITY)
                > traj.events_of(EventKind::ForceReactivation).next().unwrap().t
        );
    }

    #[test]
    fn section_terminates_flight() {
        let body = rod(3.0, 3.0);
        let comp = Compliance::linear(ComplianceParams::new(1e-2, 0.0).unwrap());
        let init = HybridState::new(0.0, 1.0, 0.0, FRAC_PI_2, 0.0, 0.0, 0.0);
        let cfg = IntegrationConfig {
            section_y_up: Some(0.5),
            ..Default::default()
        };
        let traj = simulate(&body, &comp, init, 10.0, &cfg).unwrap();
        assert_eq!(traj.termination, Termination::Section);
        assert_relative_eq!(traj.final_state.y, 0.5, epsilon = 1e-8);
        assert!(traj.final_state.w > 0.0);
    }

    #[test]
    fn sampling_is_continuous_across_segments() {
        let body = rod(1.4, 3.0);
        let eps = 1e-3;
        let comp = Compliance::linear(ComplianceParams::new(eps, 1.0).unwrap());
        let init = HybridState::new(0.0, 0.0, -eps, 1.0, 0.5, 1.0, 0.0);
        let traj = simulate(&body, &comp, init, 0.05, &IntegrationConfig::default()).unwrap();
        assert!(traj.segments.len() >= 3);
        for pair in traj.segments.windows(2) {
            let tb = pair[0].t_end;
            let left = pair[0].sample(tb).unwrap();
            let right = pair[1].sample(tb).unwrap();
            for i in 0..6 {
                // v is clamped to zero at stick capture
                let tol = 1e-7_f64.max(1e-7 * left[i].abs());
                assert!(
                    (left[i] - right[i]).abs() <= tol.max(1e-9),
                    "component {i} jumps from {} to {} at t = {tb}",
                    left[i],
                    right[i]
                );
            }
        }
    }

    #[test]
    fn determinism() {
        let body = rod(1.4, 3.0);
        let eps = 1e-3;
        let comp = Compliance::linear(ComplianceParams::new(eps, 1.0).unwrap());
        let init = HybridState::new(0.0, 0.0, -eps, 1.0, 0.5, 1.0, 0.0);
        let a = simulate(&body, &comp, init, 0.05, &IntegrationConfig::default()).unwrap();
        let b = simulate(&body, &comp, init, 0.05, &IntegrationConfig::default()).unwrap();
        assert_eq!(a.final_state.w.to_bits(), b.final_state.w.to_bits());
        assert_eq!(a.final_state.theta.to_bits(), b.final_state.theta.to_bits());
        assert_eq!(a.events.len(), b.events.len());
    }

    #[test]
    fn event_cap_is_enforced() {
        let body = rod(1.4, 3.0);
        let eps = 1e-3;
        let comp = Compliance::linear(ComplianceParams::new(eps, 1.0).unwrap());
        let init = HybridState::new(0.0, 0.0, -eps, 1.0, 0.5, 1.0, 0.0);
        let cfg = IntegrationConfig {
            max_events: 1,
            ..Default::default()
        };
        assert!(matches!(
            simulate(&body, &comp, init, 0.05, &cfg),
            Err(HybridError::EventStorm { .. })
        ));
    }

    #[test]
    fn rejects_bad_initial_data() {
        let body = rod(1.4, 3.0);
        let comp = Compliance::linear(ComplianceParams::new(1e-2, 1.0).unwrap());
        let init = HybridState::new(0.0, f64::NAN, 0.0, 1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            simulate(&body, &comp, init, 1.0, &IntegrationConfig::default()),
            Err(HybridError::InvalidInitial(_))
        ));
        let init2 = HybridState::new(1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            simulate(&body, &comp, init2, 0.5, &IntegrationConfig::default()),
            Err(HybridError::InvalidInitial(_))
        ));
    }
}
