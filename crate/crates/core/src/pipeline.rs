//! Behavior compiler: turns a behavior description — intended reaction per
//! motion class, circuit partitions realizing the output labels, an action
//! table, and per-class activation signatures — into a runnable vehicle
//! configuration. Compilation fails loudly whenever the parts disagree: a
//! label no partition provides, a signature the merged circuit does not
//! reproduce, or a class whose reaction the table cannot deliver.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::actuation::{
    booleanize, ActionTable, ActuationError, FlatLaw, OutputBits, Pattern, Trit, WheelCommand,
};
use crate::circuits::{parse_circuit, serialize_circuit, validate_circuit};
use crate::golden;
use crate::parse::{err, meaningful_lines, split_sections, split_tokens, ParseError};
use crate::perception::{template, MotionClass};
use crate::snn::{
    run_episode, CircuitGrade, EngineError, NeuronId, OutputLabel, SpikingCircuit, Synapse,
};

/// Resolves the external sources a behavior names (partition circuits, the
/// action table) to their text.
pub trait SourceLoader {
    fn load(&self, name: &str) -> Option<String>;
}

/// Loader backed by the built-in reference documents.
pub struct EmbeddedSources;

impl SourceLoader for EmbeddedSources {
    fn load(&self, name: &str) -> Option<String> {
        golden::by_name(name).map(str::to_string)
    }
}

impl<F: Fn(&str) -> Option<String>> SourceLoader for F {
    fn load(&self, name: &str) -> Option<String> {
        self(name)
    }
}

/// The motion axis a partition claims responsibility for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Radial,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Horizontal => "horizontal",
            Axis::Radial => "radial",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One `[define]` line: the wheel reaction a motion class must produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinedReaction {
    pub class: MotionClass,
    pub command: WheelCommand,
    pub note: String,
}

/// One partition: its axis, the circuit source realizing it, and the output
/// labels it provides to the merged vehicle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub name: String,
    pub axis: Axis,
    pub source: String,
    pub outputs: Vec<OutputLabel>,
}

/// A parsed behavior document, not yet checked against the circuits it names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorSpec {
    pub name: String,
    pub reactions: Vec<DefinedReaction>,
    pub partitions: Vec<PartitionPlan>,
    pub actions_source: String,
    /// Per class: the exact nonzero spike counts the merged circuit must show.
    pub contract: Vec<(MotionClass, Vec<(String, u64)>)>,
}

impl BehaviorSpec {
    pub fn reaction(&self, class: MotionClass) -> Option<&DefinedReaction> {
        self.reactions.iter().find(|r| r.class == class)
    }
}

pub fn parse_behavior(text: &str) -> Result<BehaviorSpec, ParseError> {
    let lines = meaningful_lines(text);
    let Some(&(header_no, header)) = lines.first() else {
        return err(1, 1, "empty document: expected `behavior NAME`");
    };
    let tokens = split_tokens(header);
    let name = match tokens[..] {
        [(_, "behavior"), (_, name)] => name.to_string(),
        _ => return err(header_no, 1, "expected header `behavior NAME`"),
    };

    let mut reactions: Vec<DefinedReaction> = Vec::new();
    let mut axes: Vec<(String, Axis)> = Vec::new();
    let mut realizations: Vec<(String, String, Vec<OutputLabel>)> = Vec::new();
    let mut actions_source: Option<String> = None;
    let mut contract: Vec<(MotionClass, Vec<(String, u64)>)> = Vec::new();

    for (section_no, section, body) in split_sections(&lines, 1)? {
        match section.as_str() {
            "define" => {
                for (line_no, line) in body {
                    let tokens = split_tokens(line);
                    let [(_, class), (col2, "->"), (cmd_col, command), ..] = tokens[..] else {
                        return err(line_no, 1, "expected `CLASS -> COMMAND note`");
                    };
                    let class: MotionClass = match class.parse() {
                        Ok(c) => c,
                        Err(e) => return err(line_no, 1, e),
                    };
                    let command: WheelCommand = match command.parse() {
                        Ok(c) => c,
                        Err(e) => return err(line_no, cmd_col, e),
                    };
                    let _ = col2;
                    if reactions.iter().any(|r| r.class == class) {
                        return err(line_no, 1, format!("scenario {class} defined twice"));
                    }
                    let note = tokens
                        .get(3)
                        .map(|&(col, _)| line[col - 1..].trim().to_string())
                        .unwrap_or_default();
                    reactions.push(DefinedReaction { class, command, note });
                }
            }
            "partitions" => {
                for (line_no, line) in body {
                    let tokens = split_tokens(line);
                    let [(_, pname), (_, "covers"), (col3, axis)] = tokens[..] else {
                        return err(line_no, 1, "expected `NAME covers horizontal|radial`");
                    };
                    let axis = match axis {
                        "horizontal" => Axis::Horizontal,
                        "radial" => Axis::Radial,
                        other => {
                            return err(
                                line_no,
                                col3,
                                format!("unknown axis `{other}` (horizontal|radial)"),
                            )
                        }
                    };
                    if axes.iter().any(|(n, _)| n == pname) {
                        return err(line_no, 1, format!("partition `{pname}` declared twice"));
                    }
                    axes.push((pname.to_string(), axis));
                }
            }
            "realize" => {
                for (line_no, line) in body {
                    let tokens = split_tokens(line);
                    let [(_, pname), (_, "uses"), (_, source), (_, "outputs"), labels @ ..] =
                        &tokens[..]
                    else {
                        return err(line_no, 1, "expected `NAME uses SOURCE outputs LABEL...`");
                    };
                    if labels.is_empty() {
                        return err(line_no, 1, "a partition must provide at least one output");
                    }
                    let mut outputs = Vec::new();
                    for &(col, token) in labels {
                        let label = token
                            .chars()
                            .next()
                            .filter(|_| token.len() == 1)
                            .and_then(OutputLabel::from_char);
                        let Some(label) = label else {
                            return err(line_no, col, format!("unknown output label `{token}`"));
                        };
                        if outputs.contains(&label) {
                            return err(line_no, col, format!("output {label} listed twice"));
                        }
                        outputs.push(label);
                    }
                    if realizations.iter().any(|(n, _, _)| n == *pname) {
                        return err(line_no, 1, format!("partition `{pname}` realized twice"));
                    }
                    realizations.push((pname.to_string(), source.to_string(), outputs));
                }
            }
            "actuate" => {
                for (line_no, line) in body {
                    let tokens = split_tokens(line);
                    let [(_, "table"), (_, source)] = tokens[..] else {
                        return err(line_no, 1, "expected `table SOURCE`");
                    };
                    if actions_source.is_some() {
                        return err(line_no, 1, "action table named twice");
                    }
                    actions_source = Some(source.to_string());
                }
            }
            "contract" => {
                for (line_no, line) in body {
                    let tokens = split_tokens(line);
                    let [(_, class), pairs @ ..] = &tokens[..] else {
                        unreachable!("meaningful lines are non-empty");
                    };
                    let class: MotionClass = match class.parse() {
                        Ok(c) => c,
                        Err(e) => return err(line_no, 1, e),
                    };
                    if contract.iter().any(|(c, _)| *c == class) {
                        return err(line_no, 1, format!("scenario {class} listed twice"));
                    }
                    if pairs.is_empty() {
                        return err(line_no, 1, "expected at least one `NEURON:COUNT` pair");
                    }
                    let mut row = Vec::new();
                    for &(col, pair) in pairs {
                        let Some((id, count)) = pair.split_once(':') else {
                            return err(line_no, col, format!("expected `NEURON:COUNT`, got `{pair}`"));
                        };
                        let Ok(count) = count.parse::<u64>() else {
                            return err(line_no, col, format!("bad spike count in `{pair}`"));
                        };
                        if id.is_empty() || count == 0 {
                            return err(
                                line_no,
                                col,
                                "signature entries need a neuron id and a nonzero count",
                            );
                        }
                        if row.iter().any(|(existing, _)| existing == id) {
                            return err(line_no, col, format!("neuron `{id}` listed twice"));
                        }
                        row.push((id.to_string(), count));
                    }
                    contract.push((class, row));
                }
            }
            other => {
                return err(section_no, 1, format!("unknown section `[{other}]`"));
            }
        }
    }

    for class in MotionClass::ALL {
        if !reactions.iter().any(|r| r.class == class) {
            return err(header_no, 1, format!("scenario {class} has no defined reaction"));
        }
        if !contract.iter().any(|(c, _)| *c == class) {
            return err(header_no, 1, format!("scenario {class} has no activation signature"));
        }
    }
    let Some(actions_source) = actions_source else {
        return err(header_no, 1, "missing [actuate] section");
    };
    if axes.is_empty() {
        return err(header_no, 1, "missing [partitions] section");
    }

    let mut partitions = Vec::new();
    for (pname, axis) in &axes {
        let Some((_, source, outputs)) = realizations.iter().find(|(n, _, _)| n == pname) else {
            return err(header_no, 1, format!("partition `{pname}` has no [realize] line"));
        };
        partitions.push(PartitionPlan {
            name: pname.clone(),
            axis: *axis,
            source: source.clone(),
            outputs: outputs.clone(),
        });
    }
    for (pname, _, _) in &realizations {
        if !axes.iter().any(|(n, _)| n == pname) {
            return err(header_no, 1, format!("partition `{pname}` realized but not declared"));
        }
    }

    Ok(BehaviorSpec { name, reactions, partitions, actions_source, contract })
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("in {name}: {error}")]
    Parse { name: String, error: ParseError },
    #[error("source `{0}` not found")]
    MissingSource(String),
    #[error("partition `{name}` document `{document}` is not partition-grade")]
    NotAPartition { name: String, document: String },
    #[error("partition `{name}` does not define output {label}")]
    DeclaredOutputMissing { name: String, label: OutputLabel },
    #[error("output {label} provided by both `{first}` and `{second}`")]
    DuplicateOutput { label: OutputLabel, first: String, second: String },
    #[error("the action table constrains output {0} but no partition provides it")]
    UnprovidedLabel(OutputLabel),
    #[error("no partition provides output {0}")]
    MissingOutput(OutputLabel),
    #[error("merged circuit is invalid: {}", .0.join("; "))]
    InvalidCircuit(Vec<String>),
    #[error("signature for {class} names `{id}` which matches no merged neuron")]
    UnknownContractId { class: MotionClass, id: String },
    #[error("signature for {class} names `{id}` which is ambiguous in the merged circuit")]
    AmbiguousContractId { class: MotionClass, id: String },
    #[error("scenario {class}: neuron `{id}` spiked {got} times, signature says {want}")]
    ContractMismatch { class: MotionClass, id: String, want: u64, got: u64 },
    #[error("scenario {class}: neuron `{id}` spiked {got} times but is absent from the signature")]
    UnlistedActivity { class: MotionClass, id: String, got: u64 },
    #[error("scenario {class} falls through to the table default; no explicit row claims {bits}")]
    DefaultFallthrough { class: MotionClass, bits: OutputBits },
    #[error("scenario {class} expects {want} but the law yields {got}")]
    WrongCommand { class: MotionClass, want: WheelCommand, got: WheelCommand },
    #[error(transparent)]
    Actuation(#[from] ActuationError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Where an output label comes from and which motion classes raise it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub partition: String,
    pub classes: Vec<MotionClass>,
}

/// A compiled, fully checked vehicle: the merged circuit, the flattened
/// actuation law, and the traceability records tying outputs back to the
/// scenarios and partitions they serve.
#[derive(Debug, Clone)]
pub struct VehicleConfig {
    pub name: String,
    pub circuit: SpikingCircuit,
    pub table: ActionTable,
    pub law: FlatLaw,
    pub reactions: Vec<DefinedReaction>,
    /// Output bits each motion class produces under its canonical window.
    pub signatures: BTreeMap<MotionClass, OutputBits>,
    pub traces: BTreeMap<OutputLabel, TraceEntry>,
    /// Table rows no motion class exercises (candidates for deletion).
    pub unused_rows: Vec<Pattern>,
}

impl VehicleConfig {
    pub fn trace(&self, label: OutputLabel) -> &TraceEntry {
        &self.traces[&label]
    }

    /// The wheel command a class elicits end to end.
    pub fn command_for(&self, class: MotionClass) -> WheelCommand {
        self.law.command(self.signatures[&class])
    }

    /// Serialized form of the merged circuit, for writing compile output.
    pub fn circuit_text(&self) -> String {
        serialize_circuit(&self.circuit)
    }
}

fn prefixed(partition: &str, id: &NeuronId) -> NeuronId {
    NeuronId::new(format!("{partition}/{}", id.as_str()))
}

fn merge_partitions(
    name: &str,
    parts: &[(PartitionPlan, SpikingCircuit)],
) -> Result<SpikingCircuit, CompileError> {
    let mut merged = SpikingCircuit {
        name: name.to_string(),
        grade: CircuitGrade::Vehicle,
        neurons: BTreeMap::new(),
        synapses: Vec::new(),
        inputs: Vec::new(),
        outputs: BTreeMap::new(),
    };
    let mut providers: BTreeMap<OutputLabel, String> = BTreeMap::new();
    for (plan, circuit) in parts {
        for (id, neuron) in &circuit.neurons {
            let new_id = prefixed(&plan.name, id);
            let mut neuron = neuron.clone();
            neuron.id = new_id.clone();
            merged.neurons.insert(new_id, neuron);
        }
        for synapse in &circuit.synapses {
            merged.synapses.push(Synapse {
                pre: prefixed(&plan.name, &synapse.pre),
                post: prefixed(&plan.name, &synapse.post),
                ..synapse.clone()
            });
        }
        for (channel, neuron) in &circuit.inputs {
            merged.inputs.push((channel.clone(), prefixed(&plan.name, neuron)));
        }
        for &label in &plan.outputs {
            let Some(neuron) = circuit.outputs.get(&label) else {
                return Err(CompileError::DeclaredOutputMissing { name: plan.name.clone(), label });
            };
            if let Some(first) = providers.get(&label) {
                return Err(CompileError::DuplicateOutput {
                    label,
                    first: first.clone(),
                    second: plan.name.clone(),
                });
            }
            providers.insert(label, plan.name.clone());
            merged.outputs.insert(label, prefixed(&plan.name, neuron));
        }
    }
    Ok(merged)
}

/// Resolve a signature id against the merged circuit: single letters go
/// through the output map, anything else must match exactly one neuron by
/// full id or by its unqualified name.
fn resolve_id(
    circuit: &SpikingCircuit,
    class: MotionClass,
    id: &str,
) -> Result<NeuronId, CompileError> {
    if id.len() == 1 {
        if let Some(label) = id.chars().next().and_then(OutputLabel::from_char) {
            if let Some(neuron) = circuit.outputs.get(&label) {
                return Ok(neuron.clone());
            }
        }
    }
    let suffix = format!("/{id}");
    let matches: Vec<&NeuronId> = circuit
        .neurons
        .keys()
        .filter(|n| n.as_str() == id || n.as_str().ends_with(&suffix))
        .collect();
    match matches[..] {
        [one] => Ok(one.clone()),
        [] => Err(CompileError::UnknownContractId { class, id: id.to_string() }),
        _ => Err(CompileError::AmbiguousContractId { class, id: id.to_string() }),
    }
}

/// Compile a behavior document into a checked [`VehicleConfig`].
///
/// Checks, in order: every named source loads and parses; partitions are
/// partition-grade and provide disjoint output labels; every label the action
/// table constrains is provided, and all four labels are present; the merged
/// circuit passes validation; per class, the canonical stimulus window
/// reproduces the activation signature exactly (unlisted neurons stay
/// silent), an explicit table row claims the resulting bits, and the law
/// yields the defined reaction.
pub fn compile(text: &str, loader: &dyn SourceLoader) -> Result<VehicleConfig, CompileError> {
    let spec = parse_behavior(text)
        .map_err(|error| CompileError::Parse { name: "behavior".into(), error })?;

    let mut parts = Vec::new();
    for plan in &spec.partitions {
        let source = loader
            .load(&plan.source)
            .ok_or_else(|| CompileError::MissingSource(plan.source.clone()))?;
        let circuit = parse_circuit(&source)
            .map_err(|error| CompileError::Parse { name: plan.source.clone(), error })?;
        if circuit.grade != CircuitGrade::Partition {
            return Err(CompileError::NotAPartition {
                name: plan.name.clone(),
                document: plan.source.clone(),
            });
        }
        parts.push((plan.clone(), circuit));
    }
    let circuit = merge_partitions(&spec.name, &parts)?;

    let table_text = loader
        .load(&spec.actions_source)
        .ok_or_else(|| CompileError::MissingSource(spec.actions_source.clone()))?;
    let table = ActionTable::parse(&table_text)
        .map_err(|error| CompileError::Parse { name: spec.actions_source.clone(), error })?;

    for label in OutputLabel::ALL {
        let demanded = table.rows.iter().any(|row| row.pattern.0[label.index()] != Trit::Any);
        if demanded && !circuit.outputs.contains_key(&label) {
            return Err(CompileError::UnprovidedLabel(label));
        }
    }
    for label in OutputLabel::ALL {
        if !circuit.outputs.contains_key(&label) {
            return Err(CompileError::MissingOutput(label));
        }
    }

    let report = validate_circuit(&circuit);
    if !report.is_valid() {
        return Err(CompileError::InvalidCircuit(report.violations));
    }

    let law = table.flatten()?;

    let mut signatures = BTreeMap::new();
    for class in MotionClass::ALL {
        let episode = template(class);
        let activation = run_episode(&circuit, episode, episode.duration())?;

        let row = &spec.contract.iter().find(|(c, _)| *c == class).expect("checked in parse").1;
        let mut listed: BTreeMap<NeuronId, (String, u64)> = BTreeMap::new();
        for (id, want) in row.iter() {
            let neuron = resolve_id(&circuit, class, id)?;
            listed.insert(neuron, (id.clone(), *want));
        }
        for neuron in circuit.neurons.keys() {
            let got = activation.count(neuron);
            match listed.get(neuron) {
                Some((id, want)) if got != *want => {
                    return Err(CompileError::ContractMismatch {
                        class,
                        id: id.clone(),
                        want: *want,
                        got,
                    });
                }
                Some(_) => {}
                None if got != 0 => {
                    return Err(CompileError::UnlistedActivity {
                        class,
                        id: neuron.as_str().to_string(),
                        got,
                    });
                }
                None => {}
            }
        }

        let bits = booleanize(&activation)?;
        if law.sources[bits.index()].is_none() {
            return Err(CompileError::DefaultFallthrough { class, bits });
        }
        let got = law.command(bits);
        let want = spec.reaction(class).expect("checked in parse").command;
        if got != want {
            return Err(CompileError::WrongCommand { class, want, got });
        }
        signatures.insert(class, bits);
    }

    let mut traces = BTreeMap::new();
    for (plan, _) in &parts {
        for &label in &plan.outputs {
            let classes = MotionClass::ALL
                .into_iter()
                .filter(|class| signatures[class].get(label))
                .collect();
            traces.insert(label, TraceEntry { partition: plan.name.clone(), classes });
        }
    }

    let unused_rows = (0..table.rows.len())
        .filter(|&i| !signatures.values().any(|bits| law.sources[bits.index()] == Some(i)))
        .map(|i| table.rows[i].pattern)
        .collect();

    Ok(VehicleConfig {
        name: spec.name,
        circuit,
        table,
        law,
        reactions: spec.reactions,
        signatures,
        traces,
        unused_rows,
    })
}
