//! The seven experiment commands.
//!
//! Each command loads its inputs, runs the library, writes CSV (and
//! optionally SVG) into the output directory and prints a short summary to
//! stdout. Per-point failures inside sweeps become NaN rows with a warning
//! on stderr; failures of the whole command map to typed exit codes through
//! [`CliError`].

use crate::config::{self, ScenarioConfig, SweepConfig, SweepKind, TwoRodConfig};
use crate::error::CliError;
use crate::svg::{self, Axes, Marker, Series};
use clap::{Args, ValueEnum};
use painleve::compliance::{Compliance, ComplianceParams};
use painleve::contact::{
    classify_regime, mu_critical, theta_range, BodyCoefficients, BodyParams, ClassicalRod,
    RegimeLabel, SlipBranch, DEFAULT_REGIME_TOL,
};
use painleve::csv_io;
use painleve::hybrid::{simulate, Event, EventKind, HybridState, IntegrationConfig, Trajectory};
use painleve::iwc::{self, EntryOutcome, ManifoldBranch};
use painleve::ode::{self, CrossingDirection, EventChannel, StepControl};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
    pub fn svg(self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::Both)
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct GlobalOpts {
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    /// Integration rtol override; atol follows as `tol * 1e-3`.
    pub tol: Option<f64>,
}

impl GlobalOpts {
    fn write(&self, name: &str, content: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        fs::write(&path, content)?;
        Ok(path)
    }
}

fn num(x: f64) -> String {
    format!("{:.16e}", x)
}

fn require_config(config: Option<&Path>) -> Result<&Path, CliError> {
    config.ok_or_else(|| CliError::Config("this command needs --config <file>".into()))
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
];

// ---------------------------------------------------------------------------
// simulate

pub fn simulate_cmd(opts: &GlobalOpts, config: Option<&Path>) -> Result<(), CliError> {
    let path = require_config(config)?;
    let cfg: ScenarioConfig = config::load(path)?;
    let body = cfg.body()?;
    let comp = cfg.compliance()?;
    let traj = simulate(&body, &comp, cfg.initial(), cfg.integration.t_end, &cfg.integration(opts.tol))?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }

    if opts.format.csv() {
        let mut buf = Vec::new();
        csv_io::write_trajectory(&mut buf, &traj, &comp, cfg.output.samples)?;
        opts.write("trajectory.csv", &String::from_utf8(buf).unwrap())?;
        let mut buf = Vec::new();
        csv_io::write_events(&mut buf, &traj.events)?;
        opts.write("events.csv", &String::from_utf8(buf).unwrap())?;
    }
    if opts.format.svg() {
        let n = 1200;
        let (t0, t1) = (traj.initial.t, traj.final_state.t);
        let mut ys = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        let mut vs = Vec::with_capacity(n);
        for i in 0..n {
            let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
            if let Some(s) = traj.sample(t) {
                ys.push((t, s.y));
                ws.push((t, s.w));
                vs.push((t, s.v));
            }
        }
        let chart = svg::line_chart(
            "contact-point height and velocities",
            "t",
            "state",
            &[
                Series { label: "y", points: &ys, color: PALETTE[0], dashed: false },
                Series { label: "w", points: &ws, color: PALETTE[1], dashed: false },
                Series { label: "v", points: &vs, color: PALETTE[2], dashed: true },
            ],
            Axes::default(),
        );
        opts.write("simulate.svg", &chart)?;
    }

    let summary = scenario_summary(path, &cfg, &body, &traj);
    print!("{summary}");
    opts.write("summary.txt", &summary)?;
    Ok(())
}

/// Human-readable run report, including the impact-without-collision
/// comparison for every contact episode entered at positive slip speed.
fn scenario_summary(
    path: &Path,
    cfg: &ScenarioConfig,
    body: &ClassicalRod,
    traj: &Trajectory,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", path.display());
    let _ = writeln!(
        out,
        "termination: {:?} at t = {:.6e}, final mode {}",
        traj.termination,
        traj.final_state.t,
        csv_io::mode_label(traj.final_mode)
    );
    let kinds: Vec<&str> = traj.events.iter().map(|e| csv_io::event_label(e.kind)).collect();
    let _ = writeln!(out, "events: {} ({})", traj.events.len(), kinds.join(" "));
    let f = &traj.final_state;
    let _ = writeln!(
        out,
        "final state: y {:.6e}, w {:.6e}, theta {:.6e}, phi {:.6e}, v {:.6e}",
        f.y, f.w, f.theta, f.phi, f.v
    );

    // Episodes come from the mode segments, not from onset events, so a run
    // that begins on the surface still reports its first episode.
    let losses: Vec<&Event> = traj.events_of(EventKind::ContactLoss).collect();
    for (i, &(t0, t1)) in traj.contact_episodes().iter().enumerate() {
        let Some(s) = traj.sample(t0) else { continue };
        let loss = losses.iter().find(|l| l.t > t0 && l.t <= t1 + 1e-12);
        let open = loss.is_none() && traj.final_mode.in_contact();
        let _ = writeln!(
            out,
            "contact episode {}: t in [{:.6e}, {:.6e}], duration {:.6e}{}",
            i + 1,
            t0,
            t1,
            t1 - t0,
            if open { " (still in contact at t_end)" } else { "" }
        );
        let _ = writeln!(
            out,
            "  entry: theta {:.6}, phi {:.6}, v {:.6}, w {:.3e}",
            s.theta, s.phi, s.v, s.w
        );
        if s.v <= 1e-9 {
            let _ = writeln!(out, "  (entry at v <= 0: outside the positive-slip impact map)");
            continue;
        }
        match iwc::linearization(body, s.theta) {
            Err(e) => {
                let _ = writeln!(out, "  (no impact-map prediction: {e})");
            }
            Ok(lin) => match iwc::impact_map(&lin, cfg.compliance.delta) {
                Err(e) => {
                    let _ = writeln!(out, "  (no impact-map prediction: {e})");
                }
                Ok(map) => {
                    let _ = writeln!(
                        out,
                        "  predicted impact without collision: e = {:.6e}, w_out = {:.6e}, phi_out = {:.6e}",
                        map.e,
                        map.e * s.v,
                        s.phi + map.phi_gain * s.v
                    );
                    if let Some(l) = loss {
                        let ls = &l.state;
                        let _ = writeln!(
                            out,
                            "  measured at contact loss: w/v0 = {:.6e}, phi = {:.6e}, |theta - theta0| = {:.3e}, |v| = {:.3e}",
                            ls.w / s.v,
                            ls.phi,
                            (ls.theta - s.theta).abs(),
                            ls.v.abs()
                        );
                        let _ = writeln!(
                            out,
                            "  gap |w/v0 - e| = {:.3e} (finite-stiffness correction)",
                            (ls.w / s.v - map.e).abs()
                        );
                    }
                }
            },
        }
    }
    out
}

// ---------------------------------------------------------------------------
// sweep-e

struct SweepRow {
    x: f64,
    e_cf: f64,
    e_num: f64,
    e_small: f64,
    e_large: f64,
    warn: Option<String>,
}

fn sweep_point(body: &ClassicalRod, theta: f64, delta: f64, x: f64) -> SweepRow {
    let nan = f64::NAN;
    match iwc::linearization(body, theta) {
        Err(e) => SweepRow {
            x,
            e_cf: nan,
            e_num: nan,
            e_small: nan,
            e_large: nan,
            warn: Some(e.to_string()),
        },
        Ok(lin) => {
            let e_small = iwc::restitution_small_delta(&lin, delta);
            let e_large = iwc::restitution_large_delta(&lin, delta);
            let (e_cf, mut warn) = match iwc::restitution(&lin, delta) {
                Ok(v) => (v, None),
                Err(e) => (nan, Some(e.to_string())),
            };
            let e_num = match iwc::impact_map_numeric(&lin, delta) {
                Ok(m) => m.e,
                Err(e) => {
                    warn.get_or_insert(e.to_string());
                    nan
                }
            };
            SweepRow { x, e_cf, e_num, e_small, e_large, warn }
        }
    }
}

pub const SWEEP_HEADER: &str = "abscissa,e_closed_form,e_numeric,e_small_delta,e_large_delta";

pub fn sweep_e_cmd(opts: &GlobalOpts, config: Option<&Path>) -> Result<(), CliError> {
    let path = require_config(config)?;
    let cfg: SweepConfig = config::load(path)?;
    let body = cfg.body()?;
    let grid = cfg.grid()?;

    // Points are independent; computed in parallel and gathered by index so
    // the output ordering never depends on scheduling.
    let rows: Vec<SweepRow> = match cfg.sweep.kind {
        SweepKind::Theta => {
            let delta = cfg.sweep.delta.ok_or_else(|| {
                CliError::Config("a theta sweep needs sweep.delta".into())
            })?;
            if !(delta.is_finite() && delta >= 0.0) {
                return Err(CliError::Config(format!("invalid sweep.delta {delta}")));
            }
            grid.par_iter().map(|&th| sweep_point(&body, th, delta, th)).collect()
        }
        SweepKind::Delta => {
            let theta0 = cfg.sweep.theta0.ok_or_else(|| {
                CliError::Config("a delta sweep needs sweep.theta0".into())
            })?;
            // fail the whole sweep if the fixed inclination is out of domain
            iwc::linearization(&body, theta0)?;
            grid.par_iter().map(|&d| sweep_point(&body, theta0, d, d)).collect()
        }
    };

    for row in &rows {
        if let Some(w) = &row.warn {
            eprintln!("warning: abscissa {:.6e}: {w}", row.x);
        }
    }

    if opts.format.csv() {
        let mut text = String::with_capacity(rows.len() * 120);
        text.push_str(SWEEP_HEADER);
        text.push('\n');
        for r in &rows {
            let _ = writeln!(
                text,
                "{},{},{},{},{}",
                num(r.x),
                num(r.e_cf),
                num(r.e_num),
                num(r.e_small),
                num(r.e_large)
            );
        }
        opts.write("sweep_e.csv", &text)?;
    }

    if opts.format.svg() {
        // asymptote branches leave the plotted band quickly; mask them so the
        // e curves keep a readable scale
        let e_max = rows
            .iter()
            .flat_map(|r| [r.e_cf, r.e_num])
            .filter(|v| v.is_finite())
            .fold(0.0f64, f64::max);
        let band = |v: f64| if (0.0..=1.3 * e_max).contains(&v) { v } else { f64::NAN };
        let cf: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, r.e_cf)).collect();
        let nm: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, r.e_num)).collect();
        let sm: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, band(r.e_small))).collect();
        let lg: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, band(r.e_large))).collect();
        let (x_label, log) = match cfg.sweep.kind {
            SweepKind::Theta => ("theta0", false),
            SweepKind::Delta => ("delta", cfg.sweep.log),
        };
        let chart = svg::line_chart(
            "restitution sweep",
            x_label,
            "e",
            &[
                Series { label: "closed form", points: &cf, color: PALETTE[0], dashed: false },
                Series { label: "numeric", points: &nm, color: PALETTE[1], dashed: false },
                Series { label: "small-delta", points: &sm, color: PALETTE[2], dashed: true },
                Series { label: "large-delta", points: &lg, color: PALETTE[3], dashed: true },
            ],
            Axes { log_x: log, log_y: log },
        );
        opts.write("sweep_e.svg", &chart)?;
    }

    let valid = rows.iter().filter(|r| r.e_cf.is_finite() && r.e_num.is_finite());
    let (mut n_valid, mut max_gap) = (0usize, 0.0f64);
    for r in valid {
        n_valid += 1;
        max_gap = max_gap.max((r.e_cf - r.e_num).abs());
    }
    println!(
        "sweep: {} points ({} valid), max |closed - numeric| = {:.3e}",
        rows.len(),
        n_valid,
        max_gap
    );
    if let Some(peak) = rows
        .iter()
        .filter(|r| r.e_cf.is_finite())
        .max_by(|a, b| a.e_cf.total_cmp(&b.e_cf))
    {
        println!("max e = {:.6e} at abscissa {:.6e}", peak.e_cf, peak.x);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// phase-map

#[derive(Debug, Clone, Args)]
pub struct PhaseMapArgs {
    /// Squared length-to-gyration-radius ratio of the rod.
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Coulomb friction coefficient.
    #[arg(long, default_value_t = 1.4)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.3)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi_min: f64,
    #[arg(long, default_value_t = 2.5)]
    pub phi_max: f64,
    #[arg(long, default_value_t = 161)]
    pub theta_count: usize,
    #[arg(long, default_value_t = 121)]
    pub phi_count: usize,
}

fn regime_name(r: RegimeLabel) -> &'static str {
    match r {
        RegimeLabel::Slipping => "slipping",
        RegimeLabel::LiftOff => "lift_off",
        RegimeLabel::Inconsistent => "inconsistent",
        RegimeLabel::Indeterminate => "indeterminate",
        RegimeLabel::Boundary => "boundary",
    }
}

fn regime_color(r: RegimeLabel) -> &'static str {
    match r {
        RegimeLabel::Slipping => "#a6cee3",
        RegimeLabel::LiftOff => "#f4f4f4",
        RegimeLabel::Inconsistent => "#fb9a99",
        RegimeLabel::Indeterminate => "#fdbf6f",
        RegimeLabel::Boundary => "#888888",
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn phase_map_cmd(opts: &GlobalOpts, args: &PhaseMapArgs) -> Result<(), CliError> {
    let params = BodyParams::new(args.alpha, args.mu)?;
    let body = ClassicalRod::new(params);
    // the overlays only exist above the critical friction; below it the
    // request is a domain error
    let (th1, th2) = theta_range(params)?;
    if args.theta_count < 2 || args.phi_count < 2 {
        return Err(CliError::Config("phase map needs at least a 2x2 grid".into()));
    }
    if !(args.theta_max > args.theta_min) || !(args.phi_max > args.phi_min) {
        return Err(CliError::Config("phase map ranges must be increasing".into()));
    }
    if args.theta_min <= 0.0 || args.theta_max >= std::f64::consts::PI {
        return Err(CliError::Config(
            "theta range must stay inside (0, pi) so csc(theta) exists".into(),
        ));
    }

    let thetas = linspace(args.theta_min, args.theta_max, args.theta_count);
    let phis = linspace(args.phi_min, args.phi_max, args.phi_count);
    let labels: Vec<Vec<RegimeLabel>> = thetas
        .iter()
        .map(|&th| {
            phis.iter()
                .map(|&ph| classify_regime(&body, th, ph, DEFAULT_REGIME_TOL))
                .collect()
        })
        .collect();

    if opts.format.csv() {
        let mut text = String::with_capacity(thetas.len() * phis.len() * 48);
        text.push_str("theta,phi,regime\n");
        for (i, &th) in thetas.iter().enumerate() {
            for (j, &ph) in phis.iter().enumerate() {
                let _ = writeln!(text, "{},{},{}", num(th), num(ph), regime_name(labels[i][j]));
            }
        }
        opts.write("phase_map.csv", &text)?;
    }

    if opts.format.svg() {
        // b = 0 along phi^2 sin(theta) = 1
        let b_zero_pos: Vec<(f64, f64)> = linspace(args.theta_min, args.theta_max, 400)
            .into_iter()
            .map(|th| (th, (1.0 / th.sin()).sqrt()))
            .collect();
        let b_zero_neg: Vec<(f64, f64)> =
            b_zero_pos.iter().map(|&(th, ph)| (th, -ph)).collect();
        let v1 = [(th1, args.phi_min), (th1, args.phi_max)];
        let v2 = [(th2, args.phi_min), (th2, args.phi_max)];
        let overlays = [
            Series { label: "b = 0", points: &b_zero_pos, color: "#006d2c", dashed: false },
            Series { label: "b = 0", points: &b_zero_neg, color: "#006d2c", dashed: false },
            Series { label: "theta1", points: &v1, color: "#333333", dashed: true },
            Series { label: "theta2", points: &v2, color: "#333333", dashed: true },
        ];
        let p_marker = Marker {
            x: th1,
            y: (1.0 / th1.sin()).sqrt(),
            label: "P",
        };
        let chart = svg::category_raster(
            "contact regimes of the slipping rod",
            "theta",
            "phi",
            &thetas,
            &phis,
            |i, j| regime_color(labels[i][j]),
            &[
                ("slipping", regime_color(RegimeLabel::Slipping)),
                ("lift-off", regime_color(RegimeLabel::LiftOff)),
                ("inconsistent", regime_color(RegimeLabel::Inconsistent)),
                ("indeterminate", regime_color(RegimeLabel::Indeterminate)),
            ],
            &overlays,
            &[p_marker],
        );
        opts.write("phase_map.svg", &chart)?;
    }

    let mut counts = [0usize; 5];
    for row in &labels {
        for &l in row {
            let k = match l {
                RegimeLabel::Slipping => 0,
                RegimeLabel::LiftOff => 1,
                RegimeLabel::Inconsistent => 2,
                RegimeLabel::Indeterminate => 3,
                RegimeLabel::Boundary => 4,
            };
            counts[k] += 1;
        }
    }
    println!(
        "mu_crit = {:.6}, paradoxical band theta in ({:.6}, {:.6})",
        mu_critical(args.alpha),
        th1,
        th2
    );
    println!(
        "cells: slipping {}, lift-off {}, inconsistent {}, indeterminate {}, boundary {}",
        counts[0], counts[1], counts[2], counts[3], counts[4]
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// kappa1

#[derive(Debug, Clone, Args)]
pub struct Kappa1Args {
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    pub mu: f64,
    /// Inclination of the frozen entry point.
    #[arg(long, default_value_t = 0.9463)]
    pub theta: f64,
    /// Angular rate of the frozen entry point.
    #[arg(long, default_value_t = 1.6654)]
    pub phi: f64,
    /// Damping ratio of the contact law.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Entry speeds w1 < 0 on the surface; default brackets the separatrix
    /// at 0.9x and 1.1x when it exists.
    #[arg(long = "entry")]
    pub entries: Vec<f64>,
    /// Cap on the layer time per orbit.
    #[arg(long, default_value_t = 40.0)]
    pub tau_max: f64,
}

/// One orbit of the entry chart at frozen angles, sampled uniformly in the
/// layer time. Backward orbits integrate the negated field; their `tau`
/// column is negative.
fn entry_orbit(
    body: &ClassicalRod,
    delta: f64,
    start: [f64; 5],
    backward: bool,
    tau_max: f64,
    floor: f64,
    top: f64,
) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let sign = if backward { -1.0 } else { 1.0 };
    let mut field = |_t: f64, s: &[f64; 5], ds: &mut [f64; 5]| {
        painleve::dynamics::kappa1_field(body, SlipBranch::Pos, delta, 0.0, s, ds);
        if backward {
            for d in ds.iter_mut() {
                *d = -*d;
            }
        }
    };
    let leave_top = EventChannel::new(
        move |_t, s: &[f64; 5]| s[0] - top,
        CrossingDirection::Up,
        1e-11,
    );
    let dive = EventChannel::new(
        move |_t, s: &[f64; 5]| s[0] - floor,
        CrossingDirection::Down,
        1e-11,
    );
    let ctrl = StepControl {
        rtol: 1e-10,
        atol: 1e-12,
        ..Default::default()
    };
    let sol = ode::integrate(&mut field, 0.0, start, tau_max, &ctrl, &[leave_top, dive])?;
    let n = 601;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let tau = sol.t * i as f64 / (n - 1) as f64;
        if let Some(s) = sol.sample(tau) {
            out.push((sign * tau, s[0], s[1]));
        }
    }
    Ok(out)
}

pub fn kappa1_cmd(opts: &GlobalOpts, args: &Kappa1Args) -> Result<(), CliError> {
    let body = ClassicalRod::new(BodyParams::new(args.alpha, args.mu)?);
    // p+ < 0 is required for the layer to have its runaway structure
    iwc::linearization(&body, args.theta)?;
    if !(args.delta.is_finite() && args.delta >= 0.0) {
        return Err(CliError::Config(format!("invalid delta {}", args.delta)));
    }
    let co = body.eval(args.theta, args.phi);
    let has_saddle = co.b > 0.0;

    let entries: Vec<f64> = if args.entries.is_empty() {
        if has_saddle {
            let w1s = iwc::separatrix_w1(co.p_plus, co.b, args.delta);
            vec![0.9 * w1s, 1.1 * w1s]
        } else {
            vec![-0.3, -0.8]
        }
    } else {
        if args.entries.iter().any(|&w| !(w < 0.0)) {
            return Err(CliError::Config("entry speeds must be negative".into()));
        }
        args.entries.clone()
    };

    let depth = (co.b / co.p_plus).abs().max(0.5);
    let floor = -10.0 * depth;
    let top = 1.5 * depth.max(0.4);

    let mut orbits: Vec<(usize, &'static str, Vec<(f64, f64, f64)>)> = Vec::new();
    for (i, &w1) in entries.iter().enumerate() {
        let start = [0.0, w1, args.theta, args.phi, 0.0];
        orbits.push((
            i + 1,
            "forward",
            entry_orbit(&body, args.delta, start, false, args.tau_max, floor, top)?,
        ));
        orbits.push((
            i + 1,
            "backward",
            entry_orbit(&body, args.delta, start, true, args.tau_max, floor, top)?,
        ));
    }

    if opts.format.csv() {
        let mut text = String::from("orbit,direction,tau,y1,w1\n");
        for (idx, dir, pts) in &orbits {
            for &(tau, y1, w1) in pts {
                let _ = writeln!(text, "{idx},{dir},{},{},{}", num(tau), num(y1), num(w1));
            }
        }
        opts.write("kappa1.csv", &text)?;
    }

    if opts.format.svg() {
        let orbit_pts: Vec<Vec<(f64, f64)>> = orbits
            .iter()
            .map(|(_, _, pts)| pts.iter().map(|&(_, y1, w1)| (y1, w1)).collect())
            .collect();
        let mut series: Vec<Series> = Vec::new();
        for (k, (idx, dir, _)) in orbits.iter().enumerate() {
            series.push(Series {
                label: if *dir == "forward" { "orbit" } else { "history" },
                points: &orbit_pts[k],
                color: PALETTE[(idx - 1) % PALETTE.len()],
                dashed: *dir == "backward",
            });
        }
        // force-activation boundary -y1 = delta w1 in the retraction quadrant
        let w_top: f64 = 2.0 * depth;
        let f_zero: Vec<(f64, f64)> = (0..=100)
            .map(|i| {
                let w1 = w_top * i as f64 / 100.0;
                (-args.delta * w1, w1)
            })
            .collect();
        series.push(Series { label: "F = 0", points: &f_zero, color: "#999999", dashed: true });
        let (gu, gs);
        let mut markers = vec![];
        if has_saddle {
            gu = iwc::entry_manifold(co.p_plus, co.b, args.delta, ManifoldBranch::Unstable, 200);
            gs = iwc::entry_manifold(co.p_plus, co.b, args.delta, ManifoldBranch::Stable, 200);
            series.push(Series { label: "unstable", points: &gu, color: "#000000", dashed: false });
            series.push(Series { label: "stable", points: &gs, color: "#000000", dashed: true });
            markers.push(Marker { x: co.b / co.p_plus, y: 0.0, label: "C1" });
            markers.push(Marker {
                x: 0.0,
                y: iwc::separatrix_w1(co.p_plus, co.b, args.delta),
                label: "w1*",
            });
        }
        // reuse the line chart; markers become one-point series is too subtle,
        // so draw crosses by short two-point segments
        let mut cross_pts: Vec<[(f64, f64); 2]> = Vec::new();
        for m in &markers {
            let dx = 0.03 * depth;
            cross_pts.push([(m.x - dx, m.y), (m.x + dx, m.y)]);
        }
        for (k, m) in markers.iter().enumerate() {
            series.push(Series {
                label: m.label,
                points: &cross_pts[k],
                color: "#000000",
                dashed: false,
            });
        }
        let chart = svg::line_chart(
            "entry-layer phase portrait",
            "y1",
            "w1",
            &series,
            Axes::default(),
        );
        opts.write("kappa1.svg", &chart)?;
    }

    println!(
        "entry chart at theta {:.6}, phi {:.6}: b = {:.6e} ({})",
        args.theta,
        args.phi,
        co.b,
        if has_saddle { "indeterminate: saddle present" } else { "inconsistent: no critical set in the force region" }
    );
    if has_saddle {
        println!(
            "separatrix w1* = {:.6e}",
            iwc::separatrix_w1(co.p_plus, co.b, args.delta)
        );
    }
    for &w1 in &entries {
        if has_saddle {
            let outcome = iwc::classify_entry(&body, args.theta, args.phi, args.delta, w1)?;
            println!(
                "entry w1 = {:.6e}: {}",
                w1,
                match outcome {
                    EntryOutcome::Escape => "direct lift-off",
                    EntryOutcome::Capture => "impact without collision",
                }
            );
        } else {
            println!("entry w1 = {:.6e}: impact without collision (b < 0)", w1);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// separatrix

#[derive(Debug, Clone, Args)]
pub struct SeparatrixArgs {
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.9463)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.6654)]
    pub phi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Relative width of the bisection bracket.
    #[arg(long, default_value_t = 1e-4)]
    pub rel_tol: f64,
}

pub fn separatrix_cmd(opts: &GlobalOpts, args: &SeparatrixArgs) -> Result<(), CliError> {
    let body = ClassicalRod::new(BodyParams::new(args.alpha, args.mu)?);
    let closed = iwc::separatrix_from_state(&body, args.theta, args.phi, args.delta)?;
    let below = iwc::classify_entry(&body, args.theta, args.phi, args.delta, 0.9 * closed)?;
    let above = iwc::classify_entry(&body, args.theta, args.phi, args.delta, 1.1 * closed)?;
    let numeric =
        iwc::separatrix_w1_numeric(&body, args.theta, args.phi, args.delta, args.rel_tol)?;
    let rel = (numeric - closed).abs() / closed.abs();

    println!("closed-form separatrix w1* = {:.9e}", closed);
    println!("bisected threshold        = {:.9e} (relative gap {:.3e})", numeric, rel);
    println!(
        "0.9 w1* -> {}",
        match below {
            EntryOutcome::Escape => "direct lift-off",
            EntryOutcome::Capture => "impact without collision",
        }
    );
    println!(
        "1.1 w1* -> {}",
        match above {
            EntryOutcome::Escape => "direct lift-off",
            EntryOutcome::Capture => "impact without collision",
        }
    );
    if opts.format.csv() {
        let mut text = String::from("theta,phi,delta,w1_closed,w1_numeric,rel_diff\n");
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            num(args.theta),
            num(args.phi),
            num(args.delta),
            num(closed),
            num(numeric),
            num(rel)
        );
        opts.write("separatrix.csv", &text)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// converge

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.4)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub phi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Compliance scales to test, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub t_end: f64,
}

struct ConvergeRow {
    eps: f64,
    w_over_v0: f64,
    err_e: f64,
    theta_err: f64,
    v_abs: f64,
    duration: f64,
}

pub fn converge_cmd(opts: &GlobalOpts, args: &ConvergeArgs) -> Result<(), CliError> {
    let body = ClassicalRod::new(BodyParams::new(args.alpha, args.mu)?);
    let lin = iwc::linearization(&body, args.theta)?;
    let e_cf = iwc::restitution(&lin, args.delta)?;
    let mut icfg = IntegrationConfig::default();
    if let Some(tol) = opts.tol {
        icfg.rtol = tol;
        icfg.atol = tol * 1e-3;
    }

    let mut rows: Vec<ConvergeRow> = Vec::with_capacity(args.eps.len());
    for &eps in &args.eps {
        let comp = Compliance::linear(ComplianceParams::new(eps, args.delta)?);
        let init = HybridState::new(0.0, 0.0, -eps, args.theta, args.phi, args.v0, 0.0);
        let traj = simulate(&body, &comp, init, args.t_end, &icfg)?;
        let t_on = traj
            .events_of(EventKind::ContactOnset)
            .next()
            .map_or(0.0, |e| e.t);
        let found = traj.events_of(EventKind::ContactLoss).find(|e| e.t >= t_on);
        match found {
            Some(loss) => {
                let s = &loss.state;
                rows.push(ConvergeRow {
                    eps,
                    w_over_v0: s.w / args.v0,
                    err_e: (s.w / args.v0 - e_cf).abs(),
                    theta_err: (s.theta - args.theta).abs(),
                    v_abs: s.v.abs(),
                    duration: loss.t - t_on,
                });
            }
            None => {
                eprintln!("warning: eps = {eps:.3e}: no contact loss before t_end; row is NaN");
                rows.push(ConvergeRow {
                    eps,
                    w_over_v0: f64::NAN,
                    err_e: f64::NAN,
                    theta_err: f64::NAN,
                    v_abs: f64::NAN,
                    duration: f64::NAN,
                });
            }
        }
    }

    if opts.format.csv() {
        let mut text = String::from("eps,w_over_v0,err_e,theta_err,v_abs,duration\n");
        for r in &rows {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{}",
                num(r.eps),
                num(r.w_over_v0),
                num(r.err_e),
                num(r.theta_err),
                num(r.v_abs),
                num(r.duration)
            );
        }
        opts.write("converge.csv", &text)?;
    }

    println!("reference e({:.3}, {:.3}) = {:.9e}", args.delta, args.theta, e_cf);
    for r in &rows {
        println!(
            "eps {:.3e}: w/v0 {:.6e}, |w/v0 - e| {:.3e}, |theta - theta0| {:.3e}, |v| {:.3e}, duration {:.6e}",
            r.eps, r.w_over_v0, r.err_e, r.theta_err, r.v_abs, r.duration
        );
    }

    // one-parameter fit T = C eps ln(1/eps) through the origin
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.duration.is_finite())
        .map(|r| (r.eps * (1.0 / r.eps).ln(), r.duration))
        .collect();
    let fit = if pairs.len() >= 2 {
        let sxx: f64 = pairs.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = pairs.iter().map(|(x, t)| x * t).sum();
        let c = sxy / sxx;
        let mean = pairs.iter().map(|(_, t)| t).sum::<f64>() / pairs.len() as f64;
        let ss_res: f64 = pairs.iter().map(|(x, t)| (t - c * x) * (t - c * x)).sum();
        let ss_tot: f64 = pairs.iter().map(|(_, t)| (t - mean) * (t - mean)).sum();
        let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
        println!("duration model T = C eps ln(1/eps): C = {c:.6}, R^2 = {r2:.6}");
        Some((c, r2))
    } else {
        println!("duration model: not enough valid rows to fit");
        None
    };
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.duration.is_finite() && b.duration.is_finite() {
            let scaling = (b.eps * (1.0 / b.eps).ln()) / (a.eps * (1.0 / a.eps).ln());
            println!(
                "duration ratio T({:.0e})/T({:.0e}) = {:.4} (pure-scaling reference {:.4})",
                b.eps,
                a.eps,
                b.duration / a.duration,
                scaling
            );
        }
    }

    if opts.format.svg() {
        let measured: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.duration)).collect();
        let model: Vec<(f64, f64)> = match fit {
            Some((c, _)) => {
                let lo = args.eps.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = args.eps.iter().cloned().fold(0.0f64, f64::max);
                (0..=100)
                    .map(|i| {
                        let e = (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 100.0).exp();
                        (e, c * e * (1.0 / e).ln())
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        let chart = svg::line_chart(
            "impact duration vs compliance scale",
            "eps",
            "duration",
            &[
                Series { label: "measured", points: &measured, color: PALETTE[0], dashed: false },
                Series { label: "C eps ln(1/eps)", points: &model, color: PALETTE[1], dashed: true },
            ],
            Axes { log_x: true, log_y: true },
        );
        opts.write("converge.svg", &chart)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// two-rod

pub fn two_rod_cmd(opts: &GlobalOpts, config: Option<&Path>) -> Result<(), CliError> {
    let path = require_config(config)?;
    let cfg: TwoRodConfig = config::load(path)?;
    let body = cfg.body()?;
    let comp = cfg.compliance()?;
    let g = &cfg.grazing;
    if !(g.lift > 0.0) {
        return Err(CliError::Config("grazing.lift must be positive".into()));
    }
    if !(g.separation > g.lift) {
        return Err(CliError::Config(
            "grazing.separation must exceed grazing.lift or the lower rod also misses".into(),
        ));
    }

    let release = cfg.release_state();
    let mut upper = release;
    upper.y += g.lift;
    let mut lower = release;
    lower.y += g.lift - g.separation;

    let icfg = cfg.integration(opts.tol);
    let traj_up = simulate(&body, &comp, upper, cfg.integration.t_end, &icfg)?;
    let traj_lo = simulate(&body, &comp, lower, cfg.integration.t_end, &icfg)?;
    for w in traj_up.warnings.iter().chain(&traj_lo.warnings) {
        eprintln!("warning: {w}");
    }

    if opts.format.csv() {
        for (traj, name, ev_name) in [
            (&traj_up, "two_rod_upper.csv", "two_rod_upper_events.csv"),
            (&traj_lo, "two_rod_lower.csv", "two_rod_lower_events.csv"),
        ] {
            let mut buf = Vec::new();
            csv_io::write_trajectory(&mut buf, traj, &comp, cfg.output.samples)?;
            opts.write(name, &String::from_utf8(buf).unwrap())?;
            let mut buf = Vec::new();
            csv_io::write_events(&mut buf, &traj.events)?;
            opts.write(ev_name, &String::from_utf8(buf).unwrap())?;
        }
    }

    // closest approach of the upper rod, from dense samples
    let n = 4001;
    let mut min_y = f64::INFINITY;
    let mut min_t = 0.0;
    for i in 0..n {
        let t = cfg.integration.t_end * i as f64 / (n - 1) as f64;
        if let Some(s) = traj_up.sample(t) {
            if s.y < min_y {
                min_y = s.y;
                min_t = t;
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "two-rod release: {}", path.display());
    let _ = writeln!(
        out,
        "release state: y {:.9e}, w {:.9e}, theta {:.9e}, phi {:.9e}, v {:.9e}",
        release.y, release.w, release.theta, release.phi, release.v
    );
    let _ = writeln!(
        out,
        "upper rod: min y = {:.6e} at t = {:.6}, contact episodes: {}",
        min_y,
        min_t,
        traj_up.contact_episodes().len()
    );
    let onset = traj_lo.events_of(EventKind::ContactOnset).next();
    let loss = traj_lo.events_of(EventKind::ContactLoss).next();
    match (onset, loss) {
        (Some(on), Some(off)) => {
            let s = &on.state;
            let ls = &off.state;
            let _ = writeln!(
                out,
                "lower rod: contact on t in [{:.6}, {:.6}] entered at theta {:.6}, w {:.3e}, v {:.6}",
                on.t, off.t, s.theta, s.w, s.v
            );
            match iwc::linearization(&body, s.theta) {
                Ok(lin) => {
                    let map = iwc::impact_map(&lin, cfg.compliance.delta)?;
                    let _ = writeln!(
                        out,
                        "  impact without collision: predicted w_out {:.6e} (e = {:.6e}), phi_out {:.6e}",
                        map.e * s.v,
                        map.e,
                        s.phi + map.phi_gain * s.v
                    );
                    let _ = writeln!(
                        out,
                        "  measured: w_out {:.6e}, phi_out {:.6e}, |v| {:.3e}",
                        ls.w, ls.phi, ls.v.abs()
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "  (no impact-map prediction: {e})");
                }
            }
        }
        _ => {
            let _ = writeln!(out, "lower rod: no complete contact episode before t_end");
        }
    }
    let (fu, fl) = (&traj_up.final_state, &traj_lo.final_state);
    let _ = writeln!(
        out,
        "final separation |y_upper - y_lower| = {:.6e} (initial {:.3e})",
        (fu.y - fl.y).abs(),
        g.separation
    );
    let _ = writeln!(
        out,
        "final states: upper w {:.6e} theta {:.6}, lower w {:.6e} theta {:.6}",
        fu.w, fu.theta, fl.w, fl.theta
    );
    print!("{out}");
    opts.write("two_rod_summary.txt", &out)?;

    if opts.format.svg() {
        let n = 1200;
        let mut up = Vec::with_capacity(n);
        let mut lo = Vec::with_capacity(n);
        for i in 0..n {
            let t = cfg.integration.t_end * i as f64 / (n - 1) as f64;
            if let Some(s) = traj_up.sample(t) {
                up.push((t, s.y));
            }
            if let Some(s) = traj_lo.sample(t) {
                lo.push((t, s.y));
            }
        }
        let chart = svg::line_chart(
            "two released rods: height of the contact point",
            "t",
            "y",
            &[
                Series { label: "upper (grazes)", points: &up, color: PALETTE[0], dashed: false },
                Series { label: "lower (strikes)", points: &lo, color: PALETTE[1], dashed: false },
            ],
            Axes::default(),
        );
        opts.write("two_rod.svg", &chart)?;
    }
    Ok(())
}
