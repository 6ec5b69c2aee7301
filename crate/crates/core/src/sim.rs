//! 2D playground for a compiled vehicle: a differential-drive body chasing or
//! fleeing a scripted mate. Each control window the loop senses the mate in
//! the vehicle frame, classifies its motion, replays the class stimulus
//! through the spiking circuit, booleanizes the outputs, looks up the wheel
//! command, and nudges the wheels; integration advances every tick in
//! between. Everything is deterministic: same scenario + same vehicle ⇒ the
//! same trajectory, byte for byte.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::actuation::{apply, booleanize, ActuationError, OutputBits, SpeedBounds, WheelCommand};
use crate::golden;
use crate::parse::{err, meaningful_lines, split_sections, split_tokens, ParseError};
use crate::perception::{
    classify_window, encode, ClassifierConfig, MotionClass, PerceptionError, RelativeSample,
};
use crate::pipeline::VehicleConfig;
use crate::snn::{run_episode, EngineError};

/// Normalize an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Pose and wheel speeds of the differential-drive body.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub vl: f64,
    pub vr: f64,
    pub wheelbase: f64,
}

impl VehicleState {
    /// One explicit Euler step of the unicycle model: linear speed is the
    /// wheel mean, angular speed the wheel difference over the wheelbase.
    pub fn integrate(&mut self, dt: f64) {
        assert!(dt > 0.0, "integration step must be positive");
        assert!(self.wheelbase > 0.0, "wheelbase must be positive");
        let v = (self.vl + self.vr) / 2.0;
        let omega = (self.vr - self.vl) / self.wheelbase;
        self.x += v * self.theta.cos() * dt;
        self.y += v * self.theta.sin() * dt;
        self.theta = wrap_angle(self.theta + omega * dt);
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// One leg of a waypoint path: head for `to` at constant `speed`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLeg {
    pub to: (f64, f64),
    pub speed: f64,
}

/// Closed-form script for the mate's motion; positions are a pure function
/// of time, so runs cannot drift.
#[derive(Debug, Clone, PartialEq)]
pub enum MateScript {
    /// Piecewise-linear waypoints at per-leg speeds; parks at the last point.
    Path { start: (f64, f64), legs: Vec<PathLeg> },
    /// Uniform circular motion: `center + radius·(cos, sin)(phase + omega·t)`.
    Circle { center: (f64, f64), radius: f64, omega: f64, phase: f64 },
    /// Straight constant-speed motion from an origin along a heading.
    Ray { origin: (f64, f64), heading: f64, speed: f64 },
}

impl MateScript {
    /// Mate position at `time` (same unit as `omega`/speeds, i.e. tick·dt).
    pub fn position(&self, time: f64) -> (f64, f64) {
        match self {
            MateScript::Path { start, legs } => {
                let mut at = *start;
                let mut remaining = time;
                for leg in legs {
                    let (dx, dy) = (leg.to.0 - at.0, leg.to.1 - at.1);
                    let length = dx.hypot(dy);
                    let duration = length / leg.speed;
                    if remaining < duration {
                        let f = remaining / duration;
                        return (at.0 + f * dx, at.1 + f * dy);
                    }
                    remaining -= duration;
                    at = leg.to;
                }
                at
            }
            MateScript::Circle { center, radius, omega, phase } => {
                let a = phase + omega * time;
                (center.0 + radius * a.cos(), center.1 + radius * a.sin())
            }
            MateScript::Ray { origin, heading, speed } => (
                origin.0 + speed * time * heading.cos(),
                origin.1 + speed * time * heading.sin(),
            ),
        }
    }
}

/// Control constants: wheel nudge per decision, speed bounds, and the
/// classifier settings (window length and dead-band thresholds).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlConfig {
    pub delta: f64,
    pub bounds: SpeedBounds,
    pub classifier: ClassifierConfig,
}

/// A named tick interval `[start, end)` used by trajectory properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub name: String,
    pub start: u64,
    pub end: u64,
}

/// A property the scenario's golden run is expected to satisfy; evaluation
/// lives in the analysis module.
#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    /// Mean vehicle speed over the phase exceeds the mate's by `margin`
    /// (fraction of the mate speed).
    Escape { phase: String, margin: f64 },
    /// Mean vehicle speed over the phase stays below the mate's by `margin`.
    Caution { phase: String, margin: f64 },
    /// Within `windows` control windows of the phase start, the heading comes
    /// within `tolerance_deg` of the bearing to the mate.
    Realign { phase: String, windows: u64, tolerance_deg: f64 },
    /// Final vehicle–mate distance is smaller than the initial one.
    Closer,
    /// Every motion class is observed at least once during the phase.
    Coverage { phase: String },
    /// Every window classified as an approach commands both wheels down.
    RetreatRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub duration: u64,
    pub dt: f64,
    pub start: VehicleState,
    pub mate: MateScript,
    pub control: ControlConfig,
    pub phases: Vec<Phase>,
    pub expectations: Vec<Expectation>,
}

impl Scenario {
    pub fn phase(&self, name: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.name == name)
    }

    /// Parse a scenario document. See the golden files for the format:
    /// header `scenario NAME`, `duration TICKS`, `dt STEP`, then sections
    /// `[vehicle]`, `[mate]`, `[control]`, `[phases]`, `[expect]`.
    pub fn parse(text: &str) -> Result<Scenario, ParseError> {
        let lines = meaningful_lines(text);
        let Some(&(header_no, header)) = lines.first() else {
            return err(1, 1, "empty document: expected `scenario NAME`");
        };
        let name = match split_tokens(header)[..] {
            [(_, "scenario"), (_, name)] => name.to_string(),
            _ => return err(header_no, 1, "expected header `scenario NAME`"),
        };
        let duration = match lines.get(1).map(|&(no, l)| (no, split_tokens(l))) {
            Some((no, tokens)) => match tokens[..] {
                [(_, "duration"), (col, value)] => match value.parse::<u64>() {
                    Ok(v) if v > 0 => v,
                    _ => return err(no, col, format!("invalid duration `{value}`")),
                },
                _ => return err(no, 1, "expected `duration TICKS`"),
            },
            None => return err(header_no, 1, "expected `duration TICKS` after the header"),
        };
        let dt = match lines.get(2).map(|&(no, l)| (no, split_tokens(l))) {
            Some((no, tokens)) => match tokens[..] {
                [(_, "dt"), (col, value)] => match value.parse::<f64>() {
                    Ok(v) if v > 0.0 => v,
                    _ => return err(no, col, format!("invalid dt `{value}`")),
                },
                _ => return err(no, 1, "expected `dt STEP`"),
            },
            None => return err(header_no, 1, "expected `dt STEP` after the duration"),
        };

        let mut pose: Option<(f64, f64, f64)> = None;
        let mut speeds: Option<(f64, f64)> = None;
        let mut wheelbase: Option<f64> = None;
        let mut mate: Option<MateScript> = None;
        let mut delta: Option<f64> = None;
        let mut bounds: Option<SpeedBounds> = None;
        let mut window: Option<u64> = None;
        let mut eps: Option<(f64, f64)> = None;
        let mut phases: Vec<Phase> = Vec::new();
        let mut expectations: Vec<Expectation> = Vec::new();

        fn number(line_no: usize, col: usize, token: &str) -> Result<f64, ParseError> {
            token
                .parse::<f64>()
                .map_err(|_| ParseError {
                    line: line_no,
                    column: col,
                    message: format!("invalid number `{token}`"),
                })
        }

        for (section_no, section, body) in split_sections(&lines, 3)? {
            match section.as_str() {
                "vehicle" => {
                    for (line_no, line) in body {
                        let tokens = split_tokens(line);
                        match tokens[..] {
                            [(_, "pose"), (c1, x), (c2, y), (c3, th)] => {
                                pose = Some((
                                    number(line_no, c1, x)?,
                                    number(line_no, c2, y)?,
                                    number(line_no, c3, th)?,
                                ));
                            }
                            [(_, "speeds"), (c1, vl), (c2, vr)] => {
                                speeds =
                                    Some((number(line_no, c1, vl)?, number(line_no, c2, vr)?));
                            }
                            [(_, "wheelbase"), (c1, w)] => {
                                let w = number(line_no, c1, w)?;
                                if w <= 0.0 {
                                    return err(line_no, c1, "wheelbase must be positive");
                                }
                                wheelbase = Some(w);
                            }
                            _ => return err(line_no, 1, "expected pose|speeds|wheelbase line"),
                        }
                    }
                }
                "mate" => {
                    for (line_no, line) in body {
                        let tokens = split_tokens(line);
                        match tokens[..] {
                            [(_, "path"), (_, "start"), (c1, x), (c2, y)] => {
                                if mate.is_some() {
                                    return err(line_no, 1, "mate script already declared");
                                }
                                mate = Some(MateScript::Path {
                                    start: (number(line_no, c1, x)?, number(line_no, c2, y)?),
                                    legs: Vec::new(),
                                });
                            }
                            [(_, "to"), (c1, x), (c2, y), (_, "speed"), (c3, s)] => {
                                let Some(MateScript::Path { legs, .. }) = mate.as_mut() else {
                                    return err(line_no, 1, "`to` before `path start`");
                                };
                                let speed = number(line_no, c3, s)?;
                                if speed <= 0.0 {
                                    return err(line_no, c3, "leg speed must be positive");
                                }
                                legs.push(PathLeg {
                                    to: (number(line_no, c1, x)?, number(line_no, c2, y)?),
                                    speed,
                                });
                            }
                            [(_, "circle"), (_, "center"), (c1, x), (c2, y), (_, "radius"), (c3, r), (_, "omega"), (c4, o), (_, "phase"), (c5, p)] =>
                            {
                                if mate.is_some() {
                                    return err(line_no, 1, "mate script already declared");
                                }
                                let radius = number(line_no, c3, r)?;
                                if radius <= 0.0 {
                                    return err(line_no, c3, "radius must be positive");
                                }
                                mate = Some(MateScript::Circle {
                                    center: (number(line_no, c1, x)?, number(line_no, c2, y)?),
                                    radius,
                                    omega: number(line_no, c4, o)?,
                                    phase: number(line_no, c5, p)?,
                                });
                            }
                            [(_, "ray"), (_, "origin"), (c1, x), (c2, y), (_, "heading"), (c3, h), (_, "speed"), (c4, s)] =>
                            {
                                if mate.is_some() {
                                    return err(line_no, 1, "mate script already declared");
                                }
                                let speed = number(line_no, c4, s)?;
                                if speed < 0.0 {
                                    return err(line_no, c4, "ray speed must be nonnegative");
                                }
                                mate = Some(MateScript::Ray {
                                    origin: (number(line_no, c1, x)?, number(line_no, c2, y)?),
                                    heading: number(line_no, c3, h)?,
                                    speed,
                                });
                            }
                            _ => return err(line_no, 1, "expected path|to|circle|ray line"),
                        }
                    }
                }
                "control" => {
                    for (line_no, line) in body {
                        let tokens = split_tokens(line);
                        match tokens[..] {
                            [(_, "delta"), (c1, d)] => {
                                let d = number(line_no, c1, d)?;
                                if d <= 0.0 {
                                    return err(line_no, c1, "delta must be positive");
                                }
                                delta = Some(d);
                            }
                            [(_, "bounds"), (c1, min), (c2, max)] => {
                                let (min, max) =
                                    (number(line_no, c1, min)?, number(line_no, c2, max)?);
                                if min >= max {
                                    return err(line_no, c1, "bounds must satisfy MIN < MAX");
                                }
                                bounds = Some(SpeedBounds { min, max });
                            }
                            [(_, "window"), (c1, w)] => match w.parse::<u64>() {
                                Ok(w) if w >= 2 => window = Some(w),
                                _ => return err(line_no, c1, "window must be an integer ≥ 2"),
                            },
                            [(_, "eps"), (c1, h), (c2, r)] => {
                                let (h, r) = (number(line_no, c1, h)?, number(line_no, c2, r)?);
                                if h <= 0.0 || r <= 0.0 {
                                    return err(line_no, c1, "eps thresholds must be positive");
                                }
                                eps = Some((h, r));
                            }
                            _ => return err(line_no, 1, "expected delta|bounds|window|eps line"),
                        }
                    }
                }
                "phases" => {
                    for (line_no, line) in body {
                        let tokens = split_tokens(line);
                        let [(_, pname), (c1, start), (c2, end)] = tokens[..] else {
                            return err(line_no, 1, "expected `NAME START END`");
                        };
                        let Ok(start) = start.parse::<u64>() else {
                            return err(line_no, c1, format!("invalid tick `{start}`"));
                        };
                        let Ok(end) = end.parse::<u64>() else {
                            return err(line_no, c2, format!("invalid tick `{end}`"));
                        };
                        if start >= end || end > duration {
                            return err(line_no, c1, "phase must satisfy START < END ≤ duration");
                        }
                        if phases.iter().any(|p| p.name == pname) {
                            return err(line_no, 1, format!("phase `{pname}` declared twice"));
                        }
                        phases.push(Phase { name: pname.to_string(), start, end });
                    }
                }
                "expect" => {
                    for (line_no, line) in body {
                        let tokens = split_tokens(line);
                        let expectation = match tokens[..] {
                            [(_, "escape"), (_, phase), (_, "margin"), (c, m)] => {
                                Expectation::Escape {
                                    phase: phase.to_string(),
                                    margin: number(line_no, c, m)?,
                                }
                            }
                            [(_, "caution"), (_, phase), (_, "margin"), (c, m)] => {
                                Expectation::Caution {
                                    phase: phase.to_string(),
                                    margin: number(line_no, c, m)?,
                                }
                            }
                            [(_, "realign"), (_, phase), (_, "windows"), (c1, w), (_, "tolerance"), (c2, tol)] =>
                            {
                                let Ok(windows) = w.parse::<u64>() else {
                                    return err(line_no, c1, format!("invalid window count `{w}`"));
                                };
                                Expectation::Realign {
                                    phase: phase.to_string(),
                                    windows,
                                    tolerance_deg: number(line_no, c2, tol)?,
                                }
                            }
                            [(_, "closer")] => Expectation::Closer,
                            [(_, "coverage"), (_, phase)] => {
                                Expectation::Coverage { phase: phase.to_string() }
                            }
                            [(_, "retreat-rule")] => Expectation::RetreatRule,
                            _ => {
                                return err(
                                    line_no,
                                    1,
                                    "expected escape|caution|realign|closer|coverage|retreat-rule",
                                )
                            }
                        };
                        let named_phase = match &expectation {
                            Expectation::Escape { phase, .. }
                            | Expectation::Caution { phase, .. }
                            | Expectation::Realign { phase, .. }
                            | Expectation::Coverage { phase } => Some(phase.clone()),
                            _ => None,
                        };
                        if let Some(p) = named_phase {
                            if !phases.iter().any(|ph| ph.name == p) {
                                return err(line_no, 1, format!("unknown phase `{p}`"));
                            }
                        }
                        expectations.push(expectation);
                    }
                }
                other => return err(section_no, 1, format!("unknown section `[{other}]`")),
            }
        }

        let Some((x, y, theta)) = pose else {
            return err(header_no, 1, "missing `pose` in [vehicle]");
        };
        let Some((vl, vr)) = speeds else {
            return err(header_no, 1, "missing `speeds` in [vehicle]");
        };
        let Some(wheelbase) = wheelbase else {
            return err(header_no, 1, "missing `wheelbase` in [vehicle]");
        };
        let Some(mate) = mate else {
            return err(header_no, 1, "missing mate script in [mate]");
        };
        if let MateScript::Path { legs, .. } = &mate {
            if legs.is_empty() {
                return err(header_no, 1, "mate path needs at least one `to` leg");
            }
        }
        let (Some(delta), Some(bounds), Some(window), Some((eps_h, eps_r))) =
            (delta, bounds, window, eps)
        else {
            return err(header_no, 1, "missing delta/bounds/window/eps in [control]");
        };
        if vl < bounds.min || vl > bounds.max || vr < bounds.min || vr > bounds.max {
            return err(header_no, 1, "initial speeds must lie within bounds");
        }

        Ok(Scenario {
            name,
            duration,
            dt,
            start: VehicleState { x, y, theta, vl, vr, wheelbase },
            mate,
            control: ControlConfig {
                delta,
                bounds,
                classifier: ClassifierConfig { window, eps_h, eps_r },
            },
            phases,
            expectations,
        })
    }

    /// Canonical text form; `parse` of the result reproduces the scenario.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario {}\n", self.name));
        out.push_str(&format!("duration {}\n", self.duration));
        out.push_str(&format!("dt {}\n", self.dt));
        out.push_str("\n[vehicle]\n");
        out.push_str(&format!("pose {} {} {}\n", self.start.x, self.start.y, self.start.theta));
        out.push_str(&format!("speeds {} {}\n", self.start.vl, self.start.vr));
        out.push_str(&format!("wheelbase {}\n", self.start.wheelbase));
        out.push_str("\n[mate]\n");
        match &self.mate {
            MateScript::Path { start, legs } => {
                out.push_str(&format!("path start {} {}\n", start.0, start.1));
                for leg in legs {
                    out.push_str(&format!("to {} {} speed {}\n", leg.to.0, leg.to.1, leg.speed));
                }
            }
            MateScript::Circle { center, radius, omega, phase } => {
                out.push_str(&format!(
                    "circle center {} {} radius {} omega {} phase {}\n",
                    center.0, center.1, radius, omega, phase
                ));
            }
            MateScript::Ray { origin, heading, speed } => {
                out.push_str(&format!(
                    "ray origin {} {} heading {} speed {}\n",
                    origin.0, origin.1, heading, speed
                ));
            }
        }
        out.push_str("\n[control]\n");
        out.push_str(&format!("delta {}\n", self.control.delta));
        out.push_str(&format!("bounds {} {}\n", self.control.bounds.min, self.control.bounds.max));
        out.push_str(&format!("window {}\n", self.control.classifier.window));
        out.push_str(&format!(
            "eps {} {}\n",
            self.control.classifier.eps_h, self.control.classifier.eps_r
        ));
        out.push_str("\n[phases]\n");
        for phase in &self.phases {
            out.push_str(&format!("{} {} {}\n", phase.name, phase.start, phase.end));
        }
        out.push_str("\n[expect]\n");
        for expectation in &self.expectations {
            match expectation {
                Expectation::Escape { phase, margin } => {
                    out.push_str(&format!("escape {phase} margin {margin}\n"));
                }
                Expectation::Caution { phase, margin } => {
                    out.push_str(&format!("caution {phase} margin {margin}\n"));
                }
                Expectation::Realign { phase, windows, tolerance_deg } => {
                    out.push_str(&format!("realign {phase} windows {windows} tolerance {tolerance_deg}\n"));
                }
                Expectation::Closer => out.push_str("closer\n"),
                Expectation::Coverage { phase } => out.push_str(&format!("coverage {phase}\n")),
                Expectation::RetreatRule => out.push_str("retreat-rule\n"),
            }
        }
        out
    }
}

/// The three golden scenarios shipped with the toolkit.
pub fn scenario_library() -> Vec<Scenario> {
    [golden::SUSPICIOUS_SCENARIO, golden::FOLLOWING_SCENARIO, golden::WANDERING_SCENARIO]
        .iter()
        .map(|text| Scenario::parse(text).expect("golden scenario parses"))
        .collect()
}

/// Mate samples over the trailing `window` ticks, in the vehicle's current
/// frame (bearing left-positive, zero dead ahead). Empty when the history is
/// still shorter than the window.
pub fn sense(vehicle: &VehicleState, history: &[(f64, f64)], window: u64) -> Vec<RelativeSample> {
    let window = window as usize;
    if history.len() < window {
        return Vec::new();
    }
    let base = history.len() - window;
    history[base..]
        .iter()
        .enumerate()
        .map(|(i, &(mx, my))| {
            let (dx, dy) = (mx - vehicle.x, my - vehicle.y);
            RelativeSample {
                t: (base + i) as u64,
                bearing: wrap_angle(dy.atan2(dx) - vehicle.theta),
                range: dx.hypot(dy),
            }
        })
        .collect()
}

/// One tick of the log: pose at tick start, mate position, wheel speeds in
/// force during the tick, and the latest booleanized outputs and command.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub mate_x: f64,
    pub mate_y: f64,
    pub vl: f64,
    pub vr: f64,
    pub bits: OutputBits,
    pub cmd: WheelCommand,
}

impl StepRecord {
    pub fn vehicle_position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn mate_position(&self) -> (f64, f64) {
        (self.mate_x, self.mate_y)
    }

    pub fn distance(&self) -> f64 {
        (self.mate_x - self.x).hypot(self.mate_y - self.y)
    }
}

/// One control decision: the window's classification and the command issued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub tick: u64,
    pub class: Option<MotionClass>,
    pub bits: OutputBits,
    pub command: WheelCommand,
}

/// A complete deterministic run: one record per tick plus the decision list.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub scenario: String,
    pub records: Vec<StepRecord>,
    pub decisions: Vec<Decision>,
}

pub const CSV_HEADER: &str = "t,xv,yv,theta,xm,ym,vl,vr,a,b,c,d,cmd";

impl TrajectoryLog {
    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }
}

pub fn records_to_csv(records: &[StepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let b = |v: bool| u8::from(v);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.x,
            r.y,
            r.theta,
            r.mate_x,
            r.mate_y,
            r.vl,
            r.vr,
            b(r.bits.a),
            b(r.bits.b),
            b(r.bits.c),
            b(r.bits.d),
            r.cmd
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<StepRecord>, ParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => return err(1, 1, format!("expected header `{CSV_HEADER}`")),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return err(line_no, 1, format!("expected 13 fields, got {}", fields.len()));
        }
        let int = |f: &str| f.parse::<u64>();
        let float = |f: &str| f.parse::<f64>();
        let flag = |f: &str| match f {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(()),
        };
        let record = (|| -> Result<StepRecord, ()> {
            Ok(StepRecord {
                t: int(fields[0]).map_err(|_| ())?,
                x: float(fields[1]).map_err(|_| ())?,
                y: float(fields[2]).map_err(|_| ())?,
                theta: float(fields[3]).map_err(|_| ())?,
                mate_x: float(fields[4]).map_err(|_| ())?,
                mate_y: float(fields[5]).map_err(|_| ())?,
                vl: float(fields[6]).map_err(|_| ())?,
                vr: float(fields[7]).map_err(|_| ())?,
                bits: OutputBits::new(
                    flag(fields[8])?,
                    flag(fields[9])?,
                    flag(fields[10])?,
                    flag(fields[11])?,
                ),
                cmd: fields[12].parse().map_err(|_| ())?,
            })
        })();
        match record {
            Ok(r) => records.push(r),
            Err(()) => return err(line_no, 1, "malformed record"),
        }
    }
    Ok(records)
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
}

/// Run a scenario against a compiled vehicle.
///
/// Per tick: the mate's position is computed and appended to history; on the
/// last tick of each control window the vehicle senses the window, classifies
/// it, replays the class stimulus through the circuit, booleanizes the output
/// spikes, looks the command up in the law, and nudges the wheels; then the
/// tick is logged (pose at tick start, speeds in force) and the pose
/// integrates forward by dt.
pub fn run(scenario: &Scenario, config: &VehicleConfig) -> Result<TrajectoryLog, SimError> {
    let window = scenario.control.classifier.window;
    let mut state = scenario.start.clone();
    let mut history: Vec<(f64, f64)> = Vec::with_capacity(scenario.duration as usize);
    let mut bits = OutputBits::ZERO;
    let mut command = WheelCommand::BOTH_UP;
    let mut records = Vec::with_capacity(scenario.duration as usize);
    let mut decisions = Vec::new();

    for t in 0..scenario.duration {
        let (mate_x, mate_y) = scenario.mate.position(t as f64 * scenario.dt);
        history.push((mate_x, mate_y));

        if (t + 1) % window == 0 {
            let samples = sense(&state, &history, window);
            let class = classify_window(&samples, &scenario.control.classifier)?;
            let episode = encode(&samples, &scenario.control.classifier)?;
            let activation = run_episode(&config.circuit, &episode, episode.duration())?;
            bits = booleanize(&activation)?;
            command = config.law.command(bits);
            let (vl, vr) = apply(
                command,
                (state.vl, state.vr),
                scenario.control.delta,
                scenario.control.bounds,
            );
            state.vl = vl;
            state.vr = vr;
            decisions.push(Decision { tick: t, class, bits, command });
        }

        records.push(StepRecord {
            t,
            x: state.x,
            y: state.y,
            theta: state.theta,
            mate_x,
            mate_y,
            vl: state.vl,
            vr: state.vr,
            bits,
            cmd: command,
        });
        state.integrate(scenario.dt);
    }

    Ok(TrajectoryLog { scenario: scenario.name.clone(), records, decisions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;
    use crate::pipeline::{compile, EmbeddedSources};

    fn vehicle(x: f64, y: f64, theta: f64) -> VehicleState {
        VehicleState { x, y, theta, vl: 0.0, vr: 0.0, wheelbase: 1.0 }
    }

    #[test]
    fn equal_wheels_drive_straight() {
        let mut state = vehicle(0.0, 0.0, 0.0);
        state.vl = 1.0;
        state.vr = 1.0;
        state.integrate(1.0);
        assert_eq!((state.x, state.y, state.theta), (1.0, 0.0, 0.0));
    }

    #[test]
    fn opposite_wheels_rotate_in_place() {
        let mut state = vehicle(2.0, 3.0, 0.5);
        state.vl = -0.4;
        state.vr = 0.4;
        state.wheelbase = 0.8;
        state.integrate(0.1);
        assert_eq!((state.x, state.y), (2.0, 3.0));
        assert!((state.theta - (0.5 + 0.8 / 0.8 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn euler_integration_tracks_the_constant_curvature_arc() {
        let mut state = vehicle(0.0, 0.0, 0.0);
        state.vl = 1.0;
        state.vr = 2.0;
        for _ in 0..100 {
            state.integrate(0.01);
        }
        // v = 1.5, ω = 1: after T = 1 the exact pose is
        // (ρ·sin T, ρ·(1 − cos T), T) with ρ = v/ω = 1.5.
        let rho = 1.5f64;
        let exact = (rho * 1.0f64.sin(), rho * (1.0 - 1.0f64.cos()), 1.0f64);
        assert!((state.x - exact.0).abs() / exact.0.abs() < 0.02, "x = {}", state.x);
        assert!((state.y - exact.1).abs() / exact.1.abs() < 0.02, "y = {}", state.y);
        assert!((state.theta - exact.2).abs() / exact.2 < 0.02, "theta = {}", state.theta);
    }

    #[test]
    fn wrap_angle_lands_in_the_half_open_interval() {
        assert!((wrap_angle(3.0 * PI / 2.0) - (-PI / 2.0)).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(-3.0 * PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn sense_reports_the_mate_in_the_vehicle_frame() {
        let history = vec![(3.0, 0.0); 4];
        let samples = sense(&vehicle(0.0, 0.0, 0.0), &history, 4);
        assert_eq!(samples.len(), 4);
        assert_eq!(samples[3].bearing, 0.0);
        assert_eq!(samples[3].range, 3.0);
        assert_eq!(samples[0].t, 0);

        // Mate dead left: positive bearing.
        let samples = sense(&vehicle(0.0, 0.0, 0.0), &vec![(0.0, 3.0); 4], 4);
        assert!((samples[3].bearing - PI / 2.0).abs() < 1e-12);

        // Vehicle rotated to face north, mate north: dead ahead again.
        let samples = sense(&vehicle(0.0, 0.0, PI / 2.0), &vec![(0.0, 5.0); 4], 4);
        assert_eq!(samples[3].bearing, 0.0);

        // Not enough history yet.
        assert!(sense(&vehicle(0.0, 0.0, 0.0), &[(1.0, 1.0)], 4).is_empty());
    }

    #[test]
    fn path_script_walks_legs_and_parks_at_the_end() {
        let mate = MateScript::Path {
            start: (0.0, 0.0),
            legs: vec![
                PathLeg { to: (4.0, 0.0), speed: 2.0 },
                PathLeg { to: (4.0, 3.0), speed: 1.0 },
            ],
        };
        assert_eq!(mate.position(0.0), (0.0, 0.0));
        assert_eq!(mate.position(1.0), (2.0, 0.0));
        assert_eq!(mate.position(2.0), (4.0, 0.0));
        assert_eq!(mate.position(3.5), (4.0, 1.5));
        assert_eq!(mate.position(99.0), (4.0, 3.0));
    }

    #[test]
    fn circle_and_ray_scripts_are_closed_form() {
        let circle =
            MateScript::Circle { center: (1.0, 2.0), radius: 3.0, omega: 0.5, phase: 0.0 };
        assert_eq!(circle.position(0.0), (4.0, 2.0));
        let (x, y) = circle.position(PI);
        assert!((x - 1.0).abs() < 1e-12 && (y - 5.0).abs() < 1e-12);

        let ray = MateScript::Ray { origin: (0.0, 1.0), heading: 0.0, speed: 2.0 };
        assert_eq!(ray.position(1.5), (3.0, 1.0));
    }

    #[test]
    fn golden_scenarios_parse_with_their_declared_shapes() {
        let library = scenario_library();
        let names: Vec<&str> = library.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["suspicious", "following", "wandering"]);

        let suspicious = &library[0];
        assert_eq!(suspicious.duration, 1700);
        assert!(matches!(suspicious.mate, MateScript::Path { .. }));
        assert_eq!(suspicious.phases.len(), 2);
        assert_eq!(suspicious.phase("approach").unwrap().end, 816);
        assert_eq!(suspicious.expectations.len(), 3);

        let wandering = &library[2];
        assert!(matches!(wandering.mate, MateScript::Circle { .. }));
    }

    #[test]
    fn scenarios_round_trip_through_the_file_format() {
        for scenario in scenario_library() {
            let text = scenario.serialize();
            let reparsed = Scenario::parse(&text).unwrap();
            assert_eq!(reparsed, scenario, "{}", scenario.name);
        }
    }

    #[test]
    fn scenario_parse_errors_carry_positions() {
        let text = "scenario s\nduration 10\ndt 0.05\n[mate]\nray origin 0 0 heading 0 speed -1\n";
        let error = Scenario::parse(text).unwrap_err();
        assert_eq!((error.line, error.column), (5, 32));

        let text = "scenario s\nduration 10\ndt 0.05\n[phases]\np 5 20\n";
        let error = Scenario::parse(text).unwrap_err();
        assert!(error.to_string().contains("END ≤ duration"), "{error}");

        let text = golden::SUSPICIOUS_SCENARIO.replace("escape approach", "escape nowhere");
        let error = Scenario::parse(&text).unwrap_err();
        assert!(error.to_string().contains("unknown phase"), "{error}");
    }

    fn truncated(mut scenario: Scenario, duration: u64) -> Scenario {
        scenario.duration = duration;
        scenario.phases = Vec::new();
        scenario.expectations = Vec::new();
        scenario
    }

    #[test]
    fn zero_duration_scenario_yields_an_empty_log() {
        let config = compile(golden::OPPORTUNIST_BEHAVIOR, &EmbeddedSources).unwrap();
        let scenario = truncated(scenario_library().remove(0), 0);
        let log = run(&scenario, &config).unwrap();
        assert!(log.records.is_empty());
        assert!(log.decisions.is_empty());
    }

    #[test]
    fn runs_are_deterministic_and_fully_logged() {
        let config = compile(golden::OPPORTUNIST_BEHAVIOR, &EmbeddedSources).unwrap();
        let scenario = truncated(scenario_library().remove(0), 96);
        let first = run(&scenario, &config).unwrap();
        let second = run(&scenario, &config).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.to_csv(), second.to_csv());

        assert_eq!(first.records.len(), 96);
        assert!(first.records.windows(2).all(|w| w[1].t == w[0].t + 1));
        assert_eq!(first.decisions.len(), 96 / 8);
        let bounds = scenario.control.bounds;
        assert!(first
            .records
            .iter()
            .all(|r| r.vl >= bounds.min && r.vl <= bounds.max && r.vr >= bounds.min && r.vr <= bounds.max));
    }

    #[test]
    fn csv_round_trips_byte_for_byte() {
        let config = compile(golden::OPPORTUNIST_BEHAVIOR, &EmbeddedSources).unwrap();
        let scenario = truncated(scenario_library().remove(0), 64);
        let log = run(&scenario, &config).unwrap();
        let csv = log.to_csv();
        assert!(csv.starts_with("t,xv,yv,theta,xm,ym,vl,vr,a,b,c,d,cmd\n"));
        let records = records_from_csv(&csv).unwrap();
        assert_eq!(records, log.records);
        assert_eq!(records_to_csv(&records), csv);
    }

    #[test]
    fn malformed_csv_is_rejected_with_positions() {
        assert!(records_from_csv("nope\n").is_err());
        let error = records_from_csv("t,xv,yv,theta,xm,ym,vl,vr,a,b,c,d,cmd\n1,2\n").unwrap_err();
        assert_eq!(error.line, 2);
        let error =
            records_from_csv("t,xv,yv,theta,xm,ym,vl,vr,a,b,c,d,cmd\n0,0,0,0,0,0,0,0,2,0,0,0,L+R+\n")
                .unwrap_err();
        assert_eq!(error.line, 2);
    }
}
