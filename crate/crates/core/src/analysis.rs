//! Regression and property checks over circuits and trajectory logs: the
//! golden activation table, cumulative-potential and burst-budget metrics,
//! and the per-scenario trajectory expectations.
//!
//! Everything here is report-based: a check returns a [`PropertyReport`] whose
//! lines say what was measured and against which tolerance, so a failing run
//! can be read without re-running it. Trajectory verdicts are derived from the
//! step records alone — the decision list in a log is ignored — which lets the
//! same checks run on a log reloaded from CSV.

use std::collections::BTreeSet;
use std::fmt;

use crate::perception::{
    classify_window, template, ClassifierConfig, MotionClass, PerceptionError,
};
use crate::sim::{
    sense, wrap_angle, Expectation, Phase, Scenario, StepRecord, TrajectoryLog, VehicleState,
};
use crate::snn::{
    run_episode, step, ActivationTable, CircuitState, EngineError, NeuronId, OutputLabel,
    SpikingCircuit, StimulusEpisode,
};
use crate::actuation::WheelCommand;

/// One evaluated property: verdict, what was measured, and the tolerance the
/// verdict used. `measured` and `tolerance` never contain commas, so the
/// machine rendering stays a four-field line.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyLine {
    pub name: String,
    pub pass: bool,
    pub measured: String,
    pub tolerance: String,
}

impl PropertyLine {
    /// The machine-readable form: `property,pass|fail,measured,tolerance`.
    pub fn machine(&self) -> String {
        let verdict = if self.pass { "pass" } else { "fail" };
        format!("{},{},{},{}", self.name, verdict, self.measured, self.tolerance)
    }
}

/// An ordered set of evaluated properties; each name appears exactly once.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub lines: Vec<PropertyLine>,
}

impl PropertyReport {
    fn push(&mut self, name: String, pass: bool, measured: String, tolerance: String) {
        debug_assert!(!measured.contains(',') && !tolerance.contains(','));
        self.lines.push(PropertyLine { name, pass, measured, tolerance });
    }

    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|line| line.pass)
    }

    pub fn line(&self, name: &str) -> Option<&PropertyLine> {
        self.lines.iter().find(|line| line.name == name)
    }

    /// One `property,pass|fail,measured,tolerance` line per property.
    pub fn machine(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.machine());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            let verdict = if line.pass { "PASS" } else { "FAIL" };
            writeln!(f, "[{verdict}] {}: {} (tolerance {})", line.name, line.measured, line.tolerance)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("the trajectory log is empty")]
    EmptyLog,
    #[error("expectation names phase `{0}` but the scenario declares no such phase")]
    UnknownPhase(String),
    #[error("phase `{0}` extends past the end of the log")]
    PhaseOutsideLog(String),
    #[error("phase `{0}` is shorter than the speed estimator's stencil")]
    PhaseTooShort(String),
    #[error("a burst budget must be at least one spike per tick")]
    ZeroBudget,
    #[error("property `{0}` was evaluated more than once")]
    DuplicateProperty(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}

/// Canonical column order of the golden activation table.
pub const TABLE_COLUMNS: [&str; 11] = ["1", "2", "3", "4", "5", "6", "7", "A", "B", "C", "D"];

/// Expected fire counts per canonical column for one episode class.
const GOLDEN_ROWS: [(MotionClass, [u64; 11]); 6] = [
    (MotionClass::RLD, [0, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1]),
    (MotionClass::RLS, [1, 1, 0, 0, 1, 0, 1, 0, 1, 0, 1]),
    (MotionClass::RLA, [2, 1, 0, 0, 2, 1, 1, 1, 2, 1, 1]),
    (MotionClass::LRD, [0, 1, 1, 1, 0, 0, 1, 1, 0, 0, 1]),
    (MotionClass::LRS, [0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0]),
    (MotionClass::LRA, [1, 0, 1, 1, 1, 2, 0, 1, 1, 2, 0]),
];

/// The golden row for one class, in [`TABLE_COLUMNS`] order.
pub fn golden_row(class: MotionClass) -> [u64; 11] {
    GOLDEN_ROWS
        .iter()
        .find(|(c, _)| *c == class)
        .map(|(_, row)| *row)
        .expect("every class has a golden row")
}

/// Resolve a canonical column name against a tallied run. Letters go through
/// the output map; digits match a neuron id exactly or as a unique `…/digit`
/// suffix, so merged circuits with prefixed partitions still line up.
fn resolve_column(table: &ActivationTable, column: &str) -> Option<NeuronId> {
    if let Some(label) = column.chars().next().and_then(OutputLabel::from_char) {
        if column.len() == 1 {
            return table.outputs.get(&label).cloned();
        }
    }
    let suffix = format!("/{column}");
    let mut matches = table
        .counts
        .keys()
        .filter(|id| id.as_str() == column || id.as_str().ends_with(&suffix));
    let first = matches.next()?;
    if matches.next().is_some() {
        return None;
    }
    Some(first.clone())
}

/// Replay all six canonical templates against `circuit` and compare every
/// fire count with the golden table. Exact integer equality, zero tolerance;
/// a row that cannot run (missing channels) simply fails.
pub fn table_regression(circuit: &SpikingCircuit) -> PropertyReport {
    let mut report = PropertyReport::default();
    for class in MotionClass::ALL {
        let name = format!("row-{}", class.code());
        let episode = template(class);
        let table = match run_episode(circuit, episode, episode.duration()) {
            Ok(table) => table,
            Err(error) => {
                report.push(name, false, format!("run failed: {error}"), "exact".into());
                continue;
            }
        };
        let golden = golden_row(class);
        let mut mismatches = Vec::new();
        for (column, want) in TABLE_COLUMNS.iter().zip(golden) {
            match resolve_column(&table, column) {
                Some(id) => {
                    let got = table.count(&id);
                    if got != want {
                        mismatches.push(format!("{column}={got} want {want}"));
                    }
                }
                None => mismatches.push(format!("{column}=missing want {want}")),
            }
        }
        if mismatches.is_empty() {
            report.push(name, true, "exact".into(), "exact".into());
        } else {
            report.push(name, false, mismatches.join("; "), "exact".into());
        }
    }
    report
}

/// Total fire count of a tallied run — the row sum of the activation table.
pub fn cumulative_potential(table: &ActivationTable) -> u64 {
    table.counts.values().sum()
}

/// Default ceiling on simultaneous spikes per tick: one above the reference
/// circuit's measured peak, so the shipped design passes with headroom.
pub const DEFAULT_BURST_BUDGET: u64 = 4;

/// Drive `circuit` with `episode` and check that no tick fires more than
/// `budget` spikes at once. Activity is measured over the episode's duration,
/// the same horizon the activation tally uses.
pub fn seizure_check(
    circuit: &SpikingCircuit,
    episode: &StimulusEpisode,
    budget: u64,
) -> Result<PropertyReport, AnalysisError> {
    if budget == 0 {
        return Err(AnalysisError::ZeroBudget);
    }
    let mut state = CircuitState::new(circuit);
    let mut peak = 0u64;
    let mut peak_tick = 0u64;
    for t in 0..episode.duration() {
        let fired = step(circuit, &mut state, &episode.spikes_at(t))?;
        let total: u64 = fired.values().sum();
        if total > peak {
            peak = total;
            peak_tick = t;
        }
    }
    let mut report = PropertyReport::default();
    report.push(
        "burst".into(),
        peak <= budget,
        format!("peak {peak} at tick {peak_tick}"),
        format!("budget {budget}"),
    );
    Ok(report)
}

/// Decision ticks with their window classifications, re-derived from the step
/// records exactly as the control loop produced them: the pose logged at a
/// decision tick is the sensing pose, and the trailing mate positions are the
/// classifier's window.
fn derive_decisions(
    records: &[StepRecord],
    config: &ClassifierConfig,
) -> Result<Vec<(u64, Option<MotionClass>)>, AnalysisError> {
    let mates: Vec<(f64, f64)> = records.iter().map(StepRecord::mate_position).collect();
    let mut decisions = Vec::new();
    for (t, record) in records.iter().enumerate() {
        if (t as u64 + 1) % config.window != 0 {
            continue;
        }
        let pose = VehicleState {
            x: record.x,
            y: record.y,
            theta: record.theta,
            vl: record.vl,
            vr: record.vr,
            wheelbase: 1.0,
        };
        let samples = sense(&pose, &mates[..=t], config.window);
        let class =
            if samples.is_empty() { None } else { classify_window(&samples, config)? };
        decisions.push((t as u64, class));
    }
    Ok(decisions)
}

/// Mean finite-difference speed of one tracked point over a phase, using
/// central differences with a stencil of one control window on each side.
fn mean_speed(
    points: &[(f64, f64)],
    phase: &Phase,
    window: u64,
    dt: f64,
) -> Result<f64, AnalysisError> {
    let n = points.len() as u64;
    let lo = phase.start.max(window);
    let hi = phase.end.min(n.saturating_sub(window));
    if lo >= hi {
        return Err(AnalysisError::PhaseTooShort(phase.name.clone()));
    }
    let mut sum = 0.0;
    for t in lo..hi {
        let (bx, by) = points[(t - window) as usize];
        let (fx, fy) = points[(t + window) as usize];
        sum += (fx - bx).hypot(fy - by) / (2.0 * window as f64 * dt);
    }
    Ok(sum / (hi - lo) as f64)
}

/// Evaluate every expectation the scenario declares against a logged run.
/// One report line per expectation, in declaration order; verdicts come from
/// the step records alone.
pub fn behavior_properties(
    log: &TrajectoryLog,
    scenario: &Scenario,
) -> Result<PropertyReport, AnalysisError> {
    let records = &log.records;
    if records.is_empty() {
        return Err(AnalysisError::EmptyLog);
    }
    let n = records.len() as u64;
    let config = &scenario.control.classifier;
    let window = config.window;
    let dt = scenario.dt;

    let lookup_phase = |name: &str| -> Result<&Phase, AnalysisError> {
        let phase =
            scenario.phase(name).ok_or_else(|| AnalysisError::UnknownPhase(name.to_string()))?;
        if phase.end > n {
            return Err(AnalysisError::PhaseOutsideLog(name.to_string()));
        }
        Ok(phase)
    };

    let vehicle: Vec<(f64, f64)> = records.iter().map(StepRecord::vehicle_position).collect();
    let mate: Vec<(f64, f64)> = records.iter().map(StepRecord::mate_position).collect();
    let decisions = derive_decisions(records, config)?;

    let mut report = PropertyReport::default();
    for expectation in &scenario.expectations {
        match expectation {
            Expectation::Escape { phase, margin } => {
                let phase = lookup_phase(phase)?;
                let veh = mean_speed(&vehicle, phase, window, dt)?;
                let mat = mean_speed(&mate, phase, window, dt)?;
                report.push(
                    format!("escape({})", phase.name),
                    veh > mat * (1.0 + margin),
                    format!("veh {veh:.4} mate {mat:.4}"),
                    format!("margin {margin}"),
                );
            }
            Expectation::Caution { phase, margin } => {
                let phase = lookup_phase(phase)?;
                let veh = mean_speed(&vehicle, phase, window, dt)?;
                let mat = mean_speed(&mate, phase, window, dt)?;
                report.push(
                    format!("caution({})", phase.name),
                    veh < mat * (1.0 - margin),
                    format!("veh {veh:.4} mate {mat:.4}"),
                    format!("margin {margin}"),
                );
            }
            Expectation::Realign { phase, windows, tolerance_deg } => {
                let phase = lookup_phase(phase)?;
                let hi = (phase.start + windows * window).min(phase.end);
                let mut min_deg = f64::INFINITY;
                for record in &records[phase.start as usize..hi as usize] {
                    let bearing =
                        (record.mate_y - record.y).atan2(record.mate_x - record.x);
                    let off = wrap_angle(bearing - record.theta).abs().to_degrees();
                    min_deg = min_deg.min(off);
                }
                report.push(
                    format!("realign({})", phase.name),
                    min_deg <= *tolerance_deg,
                    format!("min {min_deg:.1} deg"),
                    format!("{tolerance_deg} deg within {windows} windows"),
                );
            }
            Expectation::Closer => {
                let first = records[0].distance();
                let last = records[records.len() - 1].distance();
                report.push(
                    "closer".into(),
                    last < first,
                    format!("first {first:.3} last {last:.3}"),
                    "strict".into(),
                );
            }
            Expectation::Coverage { phase } => {
                let phase = lookup_phase(phase)?;
                let seen: BTreeSet<&str> = decisions
                    .iter()
                    .filter(|(t, _)| phase.start <= *t && *t < phase.end)
                    .filter_map(|(_, class)| class.map(MotionClass::code))
                    .collect();
                let missing: Vec<&str> = MotionClass::ALL
                    .iter()
                    .map(|c| c.code())
                    .filter(|code| !seen.contains(code))
                    .collect();
                report.push(
                    format!("coverage({})", phase.name),
                    missing.is_empty(),
                    if missing.is_empty() {
                        format!("{} of 6 classes", seen.len())
                    } else {
                        format!("missing {}", missing.join(" "))
                    },
                    "all 6 classes".into(),
                );
            }
            Expectation::RetreatRule => {
                let mut approaches = 0u64;
                let mut violations = 0u64;
                for (t, class) in &decisions {
                    let approaching = matches!(
                        class,
                        Some(c) if *c == MotionClass::RLA || *c == MotionClass::LRA
                    );
                    if approaching {
                        approaches += 1;
                        if records[*t as usize].cmd != WheelCommand::BOTH_DOWN {
                            violations += 1;
                        }
                    }
                }
                report.push(
                    "retreat-rule".into(),
                    violations == 0,
                    format!("{violations} violations in {approaches} approach windows"),
                    "0 violations".into(),
                );
            }
        }
    }

    let mut names = BTreeSet::new();
    for line in &report.lines {
        if !names.insert(line.name.clone()) {
            return Err(AnalysisError::DuplicateProperty(line.name.clone()));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::build_opportunist;
    use crate::pipeline::{compile, EmbeddedSources};
    use crate::sim::{run, MateScript};
    use crate::snn::Neuron;

    fn shipped_config() -> crate::pipeline::VehicleConfig {
        let behavior = crate::golden::by_name("opportunist.behavior").expect("embedded");
        compile(behavior, &EmbeddedSources).expect("golden behavior compiles")
    }

    fn scenario(name: &str) -> Scenario {
        crate::sim::scenario_library()
            .into_iter()
            .find(|s| s.name == name)
            .expect("library scenario")
    }

    #[test]
    fn golden_rows_pass_on_the_shipped_circuit() {
        let report = table_regression(&build_opportunist());
        assert_eq!(report.lines.len(), 6);
        for line in &report.lines {
            assert!(line.pass, "{} failed: {}", line.name, line.measured);
        }
        assert!(report.all_pass());
    }

    #[test]
    fn golden_rows_pass_on_the_compiled_merge_through_suffix_resolution() {
        let report = table_regression(&shipped_config().circuit);
        assert!(report.all_pass(), "{report}");
    }

    #[test]
    fn raised_threshold_breaks_the_distancing_rows() {
        let mut circuit = build_opportunist();
        let id = NeuronId::from("4");
        let neuron = circuit.neurons.get_mut(&id).expect("neuron 4 exists");
        *neuron = Neuron { threshold: neuron.threshold + 1, ..neuron.clone() };

        let report = table_regression(&circuit);
        assert!(!report.all_pass());
        let rld = report.line("row-RLD").expect("row present");
        assert!(!rld.pass);
        assert!(rld.measured.contains("4=0 want 1"), "measured: {}", rld.measured);
        // Rows where neuron 4 never fires anyway are untouched.
        assert!(report.line("row-RLS").unwrap().pass);
        assert!(report.line("row-RLA").unwrap().pass);
    }

    #[test]
    fn foreign_circuit_fails_every_row() {
        let text = "circuit stub partition\n[neurons]\nx 1 output\n[inputs]\nright -> x\n[outputs]\nA -> x\n";
        let circuit = crate::circuits::parse_circuit(text).expect("parses");
        let report = table_regression(&circuit);
        assert_eq!(report.lines.len(), 6);
        assert!(report.lines.iter().all(|line| !line.pass));
    }

    #[test]
    fn quiet_row_sums_are_pinned() {
        let circuit = build_opportunist();
        let expect = [
            (MotionClass::RLD, 5),
            (MotionClass::RLS, 6),
            (MotionClass::LRD, 6),
            (MotionClass::LRS, 5),
        ];
        for (class, want) in expect {
            let episode = template(class);
            let table = run_episode(&circuit, episode, episode.duration()).unwrap();
            assert_eq!(cumulative_potential(&table), want, "{}", class.code());
        }
    }

    #[test]
    fn approach_row_sums_are_pinned() {
        // The approach rows are the busiest; their totals are pinned so any
        // drift in the engine or the templates is caught immediately.
        let circuit = build_opportunist();
        for (class, want) in [(MotionClass::RLA, 12), (MotionClass::LRA, 10)] {
            let episode = template(class);
            let table = run_episode(&circuit, episode, episode.duration()).unwrap();
            assert_eq!(cumulative_potential(&table), want, "{}", class.code());
        }
    }

    #[test]
    fn burst_check_reports_the_peak_and_respects_the_budget() {
        let circuit = build_opportunist();
        let episode = template(MotionClass::RLA);

        let tight = seizure_check(&circuit, episode, 2).unwrap();
        let line = tight.line("burst").unwrap();
        assert!(!line.pass);
        assert!(line.measured.starts_with("peak 3"), "measured: {}", line.measured);

        assert!(seizure_check(&circuit, episode, DEFAULT_BURST_BUDGET).unwrap().all_pass());
        assert!(seizure_check(&circuit, episode, 11).unwrap().all_pass());
        assert_eq!(seizure_check(&circuit, episode, 0), Err(AnalysisError::ZeroBudget));
    }

    #[test]
    fn burst_verdict_is_monotone_in_the_budget() {
        let circuit = build_opportunist();
        let episode = template(MotionClass::LRA);
        let verdicts: Vec<bool> = (1..=6)
            .map(|budget| seizure_check(&circuit, episode, budget).unwrap().all_pass())
            .collect();
        for pair in verdicts.windows(2) {
            assert!(!pair[0] || pair[1], "a pass must persist as the budget grows");
        }
    }

    #[test]
    fn logged_run_satisfies_the_scenario_expectations() {
        let config = shipped_config();
        let scenario = scenario("suspicious");
        let log = run(&scenario, &config).expect("runs");
        let report = behavior_properties(&log, &scenario).expect("evaluates");
        assert!(report.all_pass(), "{report}");
        assert_eq!(report.lines.len(), scenario.expectations.len());

        // Re-derivation fidelity: the classes recovered from the records are
        // exactly the classes the control loop acted on.
        let derived = derive_decisions(&log.records, &scenario.control.classifier).unwrap();
        let lived: Vec<(u64, Option<MotionClass>)> =
            log.decisions.iter().map(|d| (d.tick, d.class)).collect();
        assert_eq!(derived, lived);
    }

    #[test]
    fn straight_ahead_pilot_fails_the_escape_property() {
        let scenario = scenario("suspicious");
        let mut state = scenario.start.clone();
        let mut records = Vec::new();
        for t in 0..scenario.duration {
            let (mx, my) = match &scenario.mate {
                script @ MateScript::Path { .. } => script.position(t as f64 * scenario.dt),
                script => script.position(t as f64 * scenario.dt),
            };
            records.push(StepRecord {
                t,
                x: state.x,
                y: state.y,
                theta: state.theta,
                mate_x: mx,
                mate_y: my,
                vl: state.vl,
                vr: state.vr,
                bits: crate::actuation::OutputBits::default(),
                cmd: WheelCommand::BOTH_UP,
            });
            state.integrate(scenario.dt);
        }
        let log = TrajectoryLog { scenario: scenario.name.clone(), records, decisions: Vec::new() };
        let report = behavior_properties(&log, &scenario).expect("evaluates");
        let escape = report.line("escape(approach)").expect("line present");
        assert!(!escape.pass, "a constant pilot cannot outrun the approach");
    }

    #[test]
    fn truncated_log_is_rejected() {
        let config = shipped_config();
        let scenario = scenario("suspicious");
        let mut log = run(&scenario, &config).expect("runs");
        log.records.truncate(500);
        assert_eq!(
            behavior_properties(&log, &scenario),
            Err(AnalysisError::PhaseOutsideLog("approach".into()))
        );
        log.records.clear();
        assert_eq!(behavior_properties(&log, &scenario), Err(AnalysisError::EmptyLog));
    }

    #[test]
    fn report_renders_both_faces() {
        let circuit = build_opportunist();
        let episode = template(MotionClass::RLA);
        let report = seizure_check(&circuit, episode, 2).unwrap();
        let machine = report.machine();
        let line = machine.lines().next().unwrap();
        assert_eq!(line.split(',').count(), 4);
        assert!(line.starts_with("burst,fail,peak 3"));
        assert!(line.ends_with("budget 2"));
        let text = report.to_string();
        assert!(text.contains("[FAIL] burst"));
    }
}
