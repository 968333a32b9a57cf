//! CSV output for trajectories and event logs.
//!
//! Floats are written with 17 significant digits so that parsing the file
//! back reproduces every value bit for bit.

use crate::compliance::Compliance;
use crate::hybrid::{Event, EventKind, Mode, Trajectory};
use crate::contact::SlipBranch;
use std::io::{self, Write};

pub const TRAJECTORY_HEADER: &str = "t,y,w,theta,phi,v,x,mode,f_n";
pub const EVENT_HEADER: &str = "t,kind,mode_before,mode_after,y,w,theta,phi,v,x";

/// Stable text label for a dynamical mode.
pub fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::FreeFlight => "free",
        Mode::ContactSlip(SlipBranch::Pos) => "slip_pos",
        Mode::ContactSlip(SlipBranch::Neg) => "slip_neg",
        Mode::ContactStick => "stick",
        Mode::ClampedContact => "clamped",
    }
}

/// Stable text label for an event kind.
pub fn event_label(kind: EventKind) -> &'static str {
    match kind {
        EventKind::ContactOnset => "contact_onset",
        EventKind::ContactLoss => "contact_loss",
        EventKind::Separation => "separation",
        EventKind::ForceReactivation => "force_reactivation",
        EventKind::StickOnset => "stick_onset",
        EventKind::SlipReversal => "slip_reversal",
        EventKind::Graze => "graze",
        EventKind::FoldExit => "fold_exit",
        EventKind::Section => "section",
    }
}

fn num(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Write `n` uniformly spaced samples of a trajectory. The normal force
/// column is evaluated through the compliance law and is zero out of
/// contact and during clamped retraction.
pub fn write_trajectory<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    comp: &Compliance,
    n: usize,
) -> io::Result<()> {
    assert!(n >= 2, "need at least two samples");
    writeln!(out, "{}", TRAJECTORY_HEADER)?;
    let t0 = traj.initial.t;
    let t1 = traj.final_state.t;
    for i in 0..n {
        let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
        let (s, mode) = match (traj.sample(t), traj.mode_at(t)) {
            (Some(s), Some(m)) => (s, m),
            _ => continue,
        };
        let f_n = if mode == Mode::FreeFlight {
            0.0
        } else {
            comp.normal_force(s.y, s.w)
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(s.t),
            num(s.y),
            num(s.w),
            num(s.theta),
            num(s.phi),
            num(s.v),
            num(s.x),
            mode_label(mode),
            num(f_n),
        )?;
    }
    Ok(())
}

/// Write an event log, one row per transition.
pub fn write_events<W: Write>(out: &mut W, events: &[Event]) -> io::Result<()> {
    writeln!(out, "{}", EVENT_HEADER)?;
    for ev in events {
        let s = &ev.state;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            num(ev.t),
            event_label(ev.kind),
            mode_label(ev.mode_before),
            mode_label(ev.mode_after),
            num(s.y),
            num(s.w),
            num(s.theta),
            num(s.phi),
            num(s.v),
            num(s.x),
        )?;
    }
    Ok(())
}
