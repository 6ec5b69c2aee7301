//! The circuit file format and the reference Opportunist circuit.
//!
//! Circuit files are line oriented. `#` starts a comment, blank lines are
//! ignored, and the first meaningful line is the header:
//!
//! ```text
//! circuit NAME vehicle|partition
//!
//! [neurons]
//! ID THRESHOLD input|hidden|output
//!
//! [synapses]
//! PRE -> POST exc|inh [w=MAGNITUDE] [d=DELAY]     # defaults w=1 d=1
//!
//! [inputs]
//! CHANNEL -> NEURON          # order kept; one channel may fan out
//!
//! [outputs]
//! A|B|C|D -> NEURON
//! ```
//!
//! Parsing resolves references and reports positions; [`validate_circuit`]
//! checks the semantic rules (positive thresholds and magnitudes, endpoint
//! kinds, grade completeness, no zero-delay cycles) and is also usable on
//! circuits built in code.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::parse::{err, meaningful_lines, split_sections, split_tokens, ParseError};
use crate::snn::{
    ChannelId, CircuitGrade, Neuron, NeuronId, NeuronKind, OutputLabel, Polarity, SpikingCircuit,
    Synapse,
};

/// Parse a circuit document into a [`SpikingCircuit`].
pub fn parse_circuit(text: &str) -> Result<SpikingCircuit, ParseError> {
    let lines = meaningful_lines(text);
    let Some(&(header_no, header)) = lines.first() else {
        return err(1, 1, "empty document: expected `circuit NAME vehicle|partition`");
    };

    let tokens = split_tokens(header);
    if tokens.len() != 3 || tokens[0].1 != "circuit" {
        return err(header_no, tokens.first().map_or(1, |t| t.0), "expected header `circuit NAME vehicle|partition`");
    }
    let name = tokens[1].1.to_string();
    let grade = match tokens[2].1 {
        "vehicle" => CircuitGrade::Vehicle,
        "partition" => CircuitGrade::Partition,
        other => return err(header_no, tokens[2].0, format!("unknown circuit grade `{other}` (vehicle|partition)")),
    };

    let sections = split_sections(&lines, 1)?;
    let mut neurons_body = None;
    let mut synapses_body = None;
    let mut inputs_body = None;
    let mut outputs_body = None;
    for (line_no, section, body) in sections {
        let slot = match section.as_str() {
            "neurons" => &mut neurons_body,
            "synapses" => &mut synapses_body,
            "inputs" => &mut inputs_body,
            "outputs" => &mut outputs_body,
            other => return err(line_no, 1, format!("unknown section `[{other}]`")),
        };
        if slot.is_some() {
            return err(line_no, 1, format!("duplicate section `[{section}]`"));
        }
        *slot = Some(body);
    }

    // Neurons first regardless of section order, so references always resolve.
    let mut neurons: BTreeMap<NeuronId, Neuron> = BTreeMap::new();
    for (line_no, line) in neurons_body.unwrap_or_default() {
        let tokens = split_tokens(line);
        let [(id_col, id), (thr_col, thr), (kind_col, kind)] = tokens[..] else {
            return err(line_no, 1, "expected `ID THRESHOLD input|hidden|output`");
        };
        let threshold: i64 = match thr.parse() {
            Ok(v) => v,
            Err(_) => return err(line_no, thr_col, format!("invalid threshold `{thr}`")),
        };
        let kind = match kind {
            "input" => NeuronKind::Input,
            "hidden" => NeuronKind::Hidden,
            "output" => NeuronKind::Output,
            other => return err(line_no, kind_col, format!("unknown neuron kind `{other}`")),
        };
        let id = NeuronId::new(id);
        if neurons.contains_key(&id) {
            return err(line_no, id_col, format!("duplicate neuron id `{id}`"));
        }
        neurons.insert(id.clone(), Neuron { id, threshold, kind });
    }

    let mut synapses = Vec::new();
    for (line_no, line) in synapses_body.unwrap_or_default() {
        let tokens = split_tokens(line);
        if tokens.len() < 4 || tokens[1].1 != "->" {
            return err(line_no, 1, "expected `PRE -> POST exc|inh [w=N] [d=N]`");
        }
        let (pre_col, pre) = tokens[0];
        let (post_col, post) = tokens[2];
        let (pol_col, pol) = tokens[3];
        let pre = NeuronId::new(pre);
        let post = NeuronId::new(post);
        if !neurons.contains_key(&pre) {
            return err(line_no, pre_col, format!("synapse references unknown neuron `{pre}`"));
        }
        if !neurons.contains_key(&post) {
            return err(line_no, post_col, format!("synapse references unknown neuron `{post}`"));
        }
        let polarity = match pol {
            "exc" => Polarity::Excitatory,
            "inh" => Polarity::Inhibitory,
            other => return err(line_no, pol_col, format!("unknown polarity `{other}` (exc|inh)")),
        };
        let mut magnitude = 1i64;
        let mut delay = 1u64;
        for &(col, tok) in &tokens[4..] {
            if let Some(v) = tok.strip_prefix("w=") {
                magnitude = match v.parse() {
                    Ok(v) => v,
                    Err(_) => return err(line_no, col, format!("invalid magnitude `{tok}`")),
                };
            } else if let Some(v) = tok.strip_prefix("d=") {
                delay = match v.parse() {
                    Ok(v) => v,
                    Err(_) => return err(line_no, col, format!("invalid delay `{tok}`")),
                };
            } else {
                return err(line_no, col, format!("unexpected token `{tok}` (w=N or d=N)"));
            }
        }
        synapses.push(Synapse { pre, post, polarity, magnitude, delay });
    }

    let mut inputs = Vec::new();
    for (line_no, line) in inputs_body.unwrap_or_default() {
        let tokens = split_tokens(line);
        let [(_, channel), (_, arrow), (id_col, id)] = tokens[..] else {
            return err(line_no, 1, "expected `CHANNEL -> NEURON`");
        };
        if arrow != "->" {
            return err(line_no, 1, "expected `CHANNEL -> NEURON`");
        }
        let id = NeuronId::new(id);
        if !neurons.contains_key(&id) {
            return err(line_no, id_col, format!("input references unknown neuron `{id}`"));
        }
        inputs.push((ChannelId::new(channel), id));
    }

    let mut outputs = BTreeMap::new();
    for (line_no, line) in outputs_body.unwrap_or_default() {
        let tokens = split_tokens(line);
        let [(label_col, label), (_, arrow), (id_col, id)] = tokens[..] else {
            return err(line_no, 1, "expected `A|B|C|D -> NEURON`");
        };
        if arrow != "->" {
            return err(line_no, 1, "expected `A|B|C|D -> NEURON`");
        }
        let label = match label.chars().next().filter(|_| label.len() == 1).and_then(OutputLabel::from_char) {
            Some(l) => l,
            None => return err(line_no, label_col, format!("unknown output label `{label}` (A|B|C|D)")),
        };
        let id = NeuronId::new(id);
        if !neurons.contains_key(&id) {
            return err(line_no, id_col, format!("output references unknown neuron `{id}`"));
        }
        if outputs.contains_key(&label) {
            return err(line_no, label_col, format!("duplicate output label `{label}`"));
        }
        outputs.insert(label, id);
    }

    Ok(SpikingCircuit { name, grade, neurons, synapses, inputs, outputs })
}

/// Canonical text form of a circuit. Neurons and outputs are emitted in
/// sorted order, synapses and inputs in declaration order; parsing the result
/// reproduces the circuit field for field.
pub fn serialize_circuit(circuit: &SpikingCircuit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "circuit {} {}", circuit.name, circuit.grade.as_str());
    let _ = writeln!(s, "\n[neurons]");
    for (id, n) in &circuit.neurons {
        let _ = writeln!(s, "{id} {} {}", n.threshold, n.kind.as_str());
    }
    let _ = writeln!(s, "\n[synapses]");
    for syn in &circuit.synapses {
        let _ = writeln!(
            s,
            "{} -> {} {} w={} d={}",
            syn.pre,
            syn.post,
            syn.polarity.as_str(),
            syn.magnitude,
            syn.delay
        );
    }
    let _ = writeln!(s, "\n[inputs]");
    for (channel, id) in &circuit.inputs {
        let _ = writeln!(s, "{channel} -> {id}");
    }
    let _ = writeln!(s, "\n[outputs]");
    for (label, id) in &circuit.outputs {
        let _ = writeln!(s, "{label} -> {id}");
    }
    s
}

/// Semantic check result. An empty violation list means the circuit is sound.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the semantic rules a parsed or hand-built circuit must satisfy.
pub fn validate_circuit(circuit: &SpikingCircuit) -> ValidationReport {
    let mut violations = Vec::new();

    for (key, neuron) in &circuit.neurons {
        if key != &neuron.id {
            violations.push(format!("neuron keyed `{key}` carries id `{}`", neuron.id));
        }
        if neuron.threshold < 1 {
            violations.push(format!("neuron `{key}`: threshold {} < 1", neuron.threshold));
        }
    }

    for syn in &circuit.synapses {
        if !circuit.neurons.contains_key(&syn.pre) {
            violations.push(format!("synapse `{} -> {}`: unknown presynaptic neuron", syn.pre, syn.post));
        }
        if !circuit.neurons.contains_key(&syn.post) {
            violations.push(format!("synapse `{} -> {}`: unknown postsynaptic neuron", syn.pre, syn.post));
        }
        if syn.magnitude < 1 {
            violations.push(format!("synapse `{} -> {}`: magnitude {} < 1", syn.pre, syn.post, syn.magnitude));
        }
    }

    let mut seen_taps = BTreeSet::new();
    for (channel, id) in &circuit.inputs {
        match circuit.neurons.get(id) {
            None => violations.push(format!("input `{channel} -> {id}`: unknown neuron")),
            Some(n) if n.kind != NeuronKind::Input => {
                violations.push(format!("input `{channel} -> {id}`: neuron is {}, not input", n.kind.as_str()))
            }
            _ => {}
        }
        if !seen_taps.insert((channel.clone(), id.clone())) {
            violations.push(format!("duplicate input tap `{channel} -> {id}`"));
        }
    }

    for (label, id) in &circuit.outputs {
        match circuit.neurons.get(id) {
            None => violations.push(format!("output `{label} -> {id}`: unknown neuron")),
            Some(n) if n.kind != NeuronKind::Output => {
                violations.push(format!("output `{label} -> {id}`: neuron is {}, not output", n.kind.as_str()))
            }
            _ => {}
        }
    }

    match circuit.grade {
        CircuitGrade::Vehicle => {
            for label in OutputLabel::ALL {
                if !circuit.outputs.contains_key(&label) {
                    violations.push(format!("vehicle-grade circuit is missing output label `{label}`"));
                }
            }
        }
        CircuitGrade::Partition => {
            if circuit.outputs.is_empty() {
                violations.push("partition-grade circuit provides no output labels".to_string());
            }
        }
    }

    if let Some(cycle) = zero_delay_cycle(circuit) {
        violations.push(format!("zero-delay cycle: {}", cycle.join(" -> ")));
    }

    ValidationReport { violations }
}

/// Find a directed cycle using only zero-delay synapses, if any. Such a cycle
/// can keep a tick alive forever once driven, so the validator flags it even
/// though the engine would also stop it at run time.
fn zero_delay_cycle(circuit: &SpikingCircuit) -> Option<Vec<String>> {
    let mut edges: BTreeMap<&NeuronId, Vec<&NeuronId>> = BTreeMap::new();
    for syn in circuit.synapses.iter().filter(|s| s.delay == 0) {
        edges.entry(&syn.pre).or_default().push(&syn.post);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks: BTreeMap<&NeuronId, Mark> = circuit.neurons.keys().map(|id| (id, Mark::New)).collect();
    let mut stack: Vec<&NeuronId> = Vec::new();

    fn visit<'a>(
        node: &'a NeuronId,
        edges: &BTreeMap<&'a NeuronId, Vec<&'a NeuronId>>,
        marks: &mut BTreeMap<&'a NeuronId, Mark>,
        stack: &mut Vec<&'a NeuronId>,
    ) -> Option<Vec<String>> {
        marks.insert(node, Mark::Active);
        stack.push(node);
        for &next in edges.get(node).into_iter().flatten() {
            match marks.get(next).copied().unwrap_or(Mark::New) {
                Mark::Active => {
                    let from = stack.iter().position(|n| *n == next).unwrap_or(0);
                    let mut cycle: Vec<String> = stack[from..].iter().map(|n| n.to_string()).collect();
                    cycle.push(next.to_string());
                    return Some(cycle);
                }
                Mark::New => {
                    if let Some(cycle) = visit(next, edges, marks, stack) {
                        return Some(cycle);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks.insert(node, Mark::Done);
        None
    }

    let ids: Vec<&NeuronId> = circuit.neurons.keys().collect();
    for id in ids {
        if marks[&id] == Mark::New {
            if let Some(cycle) = visit(id, &edges, &mut marks, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}

/// The reference Opportunist circuit, parsed from the embedded golden file.
pub fn build_opportunist() -> SpikingCircuit {
    parse_circuit(crate::golden::OPPORTUNIST_CIRCUIT).expect("embedded reference circuit parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;
    use crate::snn::{run_episode, StimulusEpisode};

    #[test]
    fn reference_circuit_parses_with_eleven_neurons() {
        let circuit = build_opportunist();
        assert_eq!(circuit.name, "opportunist");
        assert_eq!(circuit.grade, CircuitGrade::Vehicle);
        assert_eq!(circuit.neurons.len(), 11);
        for id in ["1", "2", "3", "4", "5", "6", "7", "A", "B", "C", "D"] {
            assert!(circuit.neurons.contains_key(&NeuronId::from(id)), "missing neuron {id}");
        }
        assert_eq!(circuit.synapses.len(), 8);
        assert_eq!(circuit.channels().len(), 4);
    }

    #[test]
    fn golden_circuits_validate_clean() {
        for text in [golden::OPPORTUNIST_CIRCUIT, golden::HORIZONTAL_CIRCUIT, golden::DEPTH_CIRCUIT] {
            let circuit = parse_circuit(text).unwrap();
            let report = validate_circuit(&circuit);
            assert!(report.is_valid(), "{}: {:?}", circuit.name, report.violations);
        }
    }

    #[test]
    fn parse_serialize_round_trip_is_identity() {
        for text in [golden::OPPORTUNIST_CIRCUIT, golden::HORIZONTAL_CIRCUIT, golden::DEPTH_CIRCUIT] {
            let first = parse_circuit(text).unwrap();
            let reparsed = parse_circuit(&serialize_circuit(&first)).unwrap();
            assert_eq!(first, reparsed);
        }
    }

    #[test]
    fn serialized_form_is_a_fixpoint() {
        let circuit = build_opportunist();
        let once = serialize_circuit(&circuit);
        let twice = serialize_circuit(&parse_circuit(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn reference_circuit_reproduces_the_distancing_signature() {
        // right and far spiking together at tick 0: the canonical
        // right-to-left distancing window.
        let circuit = build_opportunist();
        let mut episode = StimulusEpisode::new(8);
        episode.add_spike(ChannelId::from("right"), 0);
        episode.add_spike(ChannelId::from("far"), 0);
        let table = run_episode(&circuit, &episode, 8).unwrap();

        let expected: BTreeMap<NeuronId, u64> =
            [("2", 1), ("4", 1), ("7", 1), ("A", 1), ("D", 1)].into_iter().map(|(id, n)| (NeuronId::from(id), n)).collect();
        for (id, _) in &circuit.neurons {
            assert_eq!(table.count(id), expected.get(id).copied().unwrap_or(0), "neuron {id}");
        }
    }

    #[test]
    fn duplicate_neuron_id_is_an_error_with_position() {
        let text = "circuit t partition\n[neurons]\nx 1 input\nx 2 hidden\n";
        let e = parse_circuit(text).unwrap_err();
        assert_eq!((e.line, e.column), (4, 1));
        assert!(e.message.contains("duplicate neuron id `x`"), "{}", e.message);
    }

    #[test]
    fn dangling_synapse_endpoint_is_an_error() {
        let text = "circuit t partition\n[neurons]\nx 1 input\n[synapses]\nx -> y exc\n";
        let e = parse_circuit(text).unwrap_err();
        assert_eq!(e.line, 5);
        assert_eq!(e.column, 6);
        assert!(e.message.contains("unknown neuron `y`"), "{}", e.message);
    }

    #[test]
    fn header_and_section_errors_are_reported() {
        assert!(parse_circuit("").unwrap_err().message.contains("empty document"));
        assert!(parse_circuit("network t vehicle\n").unwrap_err().message.contains("expected header"));
        assert!(parse_circuit("circuit t half\n").unwrap_err().message.contains("unknown circuit grade"));
        assert!(parse_circuit("circuit t vehicle\n[wires]\n").unwrap_err().message.contains("unknown section"));
        let dup = parse_circuit("circuit t vehicle\n[neurons]\n[neurons]\n").unwrap_err();
        assert!(dup.message.contains("duplicate section"), "{}", dup.message);
    }

    #[test]
    fn malformed_fields_are_rejected_where_they_sit() {
        let e = parse_circuit("circuit t partition\n[neurons]\nx one input\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 3));
        let e = parse_circuit("circuit t partition\n[neurons]\nx 1 relay\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 5));
        let e = parse_circuit("circuit t partition\n[neurons]\nx 1 input\ny 1 output\n[synapses]\nx -> y exc w=big\n").unwrap_err();
        assert!(e.message.contains("invalid magnitude"), "{}", e.message);
        let e = parse_circuit("circuit t partition\n[neurons]\nx 1 output\n[outputs]\nE -> x\n").unwrap_err();
        assert!(e.message.contains("unknown output label"), "{}", e.message);
    }

    #[test]
    fn validator_flags_semantic_violations() {
        let mut circuit = parse_circuit(
            "circuit t partition\n[neurons]\nx 0 input\ny 1 hidden\n[synapses]\nx -> y exc w=0 d=1\n[inputs]\nc -> y\n[outputs]\n",
        )
        .unwrap();
        circuit.outputs.clear();
        let report = validate_circuit(&circuit);
        let text = report.violations.join("\n");
        assert!(text.contains("threshold 0 < 1"), "{text}");
        assert!(text.contains("magnitude 0 < 1"), "{text}");
        assert!(text.contains("not input"), "{text}");
        assert!(text.contains("provides no output labels"), "{text}");
    }

    #[test]
    fn validator_flags_vehicle_grade_gaps_and_zero_delay_cycles() {
        let mut circuit = parse_circuit(golden::OPPORTUNIST_CIRCUIT).unwrap();
        circuit.outputs.remove(&OutputLabel::D);
        let report = validate_circuit(&circuit);
        assert!(report.violations.iter().any(|v| v.contains("missing output label `D`")), "{:?}", report.violations);

        let cyclic = parse_circuit(
            "circuit t partition\n[neurons]\np 1 input\nq 1 output\n[synapses]\np -> q exc d=0\nq -> p exc d=0\n[inputs]\nc -> p\n[outputs]\nA -> q\n",
        )
        .unwrap();
        let report = validate_circuit(&cyclic);
        assert!(report.violations.iter().any(|v| v.contains("zero-delay cycle")), "{:?}", report.violations);
    }

    #[test]
    fn validator_accepts_plain_recurrence() {
        // Cycles with real delays are legitimate; only zero-delay loops are flagged.
        let circuit = parse_circuit(
            "circuit t partition\n[neurons]\np 1 input\nq 1 output\n[synapses]\np -> q exc d=1\nq -> p exc d=2\n[inputs]\nc -> p\n[outputs]\nA -> q\n",
        )
        .unwrap();
        assert!(validate_circuit(&circuit).is_valid());
    }

    #[test]
    fn mismatched_key_and_id_is_flagged() {
        let mut circuit = build_opportunist();
        let stray = Neuron { id: NeuronId::from("8"), threshold: 1, kind: NeuronKind::Input };
        circuit.neurons.insert(NeuronId::from("9"), stray);
        let report = validate_circuit(&circuit);
        assert!(report.violations.iter().any(|v| v.contains("keyed `9` carries id `8`")), "{:?}", report.violations);
    }
}
