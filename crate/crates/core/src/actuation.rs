//! Actuation: from activation tables to wheel commands.
//!
//! A window run leaves per-output spike counts; [`booleanize`] collapses them
//! to four bits (fired or not). The built-in law [`decide`] maps bits to one
//! of four wheel commands through prioritized cases; the same law can be
//! stated as a pattern table ([`ActionTable`]), flattened to a total function
//! over all sixteen inputs, and re-synthesized as a minimal sum-of-products
//! expression ([`synthesize`]) for inspection.
//!
//! Commands never set wheel speeds directly: [`apply`] nudges each wheel by
//! ±δ and clamps to the configured bounds, so a vehicle accelerates and
//! brakes over several windows rather than jumping.

mod synth;

pub use synth::{synthesize, OverlapNote, SopExpression, SynthesisResult};

use std::fmt;
use std::str::FromStr;

use crate::parse::{err, meaningful_lines, split_tokens, ParseError};
use crate::snn::{ActivationTable, OutputLabel};

/// The four output bits, A through D. Bit order in text form is `ABCD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OutputBits {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub d: bool,
}

impl OutputBits {
    pub const ZERO: OutputBits = OutputBits { a: false, b: false, c: false, d: false };

    pub fn new(a: bool, b: bool, c: bool, d: bool) -> Self {
        OutputBits { a, b, c, d }
    }

    /// Index in the 16-row truth table, A as the most significant bit.
    pub fn index(self) -> usize {
        ((self.a as usize) << 3) | ((self.b as usize) << 2) | ((self.c as usize) << 1) | (self.d as usize)
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < 16, "truth table index {index} out of range");
        OutputBits {
            a: index & 0b1000 != 0,
            b: index & 0b0100 != 0,
            c: index & 0b0010 != 0,
            d: index & 0b0001 != 0,
        }
    }

    pub fn get(self, label: OutputLabel) -> bool {
        match label {
            OutputLabel::A => self.a,
            OutputLabel::B => self.b,
            OutputLabel::C => self.c,
            OutputLabel::D => self.d,
        }
    }

    /// All sixteen bit patterns in truth-table order.
    pub fn all() -> impl Iterator<Item = OutputBits> {
        (0..16).map(OutputBits::from_index)
    }
}

impl fmt::Display for OutputBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in [self.a, self.b, self.c, self.d] {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for OutputBits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit `{other}` in `{s}`")),
            })
            .collect::<Result<_, _>>()?;
        let [a, b, c, d] = bits[..] else {
            return Err(format!("expected four bits, got `{s}`"));
        };
        Ok(OutputBits { a, b, c, d })
    }
}

/// Direction a wheel speed is nudged: up (+δ) or down (−δ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WheelSign {
    Down,
    Up,
}

impl WheelSign {
    pub fn factor(self) -> f64 {
        match self {
            WheelSign::Down => -1.0,
            WheelSign::Up => 1.0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            WheelSign::Down => '-',
            WheelSign::Up => '+',
        }
    }
}

/// A wheel command: one sign per wheel, written `L±R±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WheelCommand {
    pub left: WheelSign,
    pub right: WheelSign,
}

impl WheelCommand {
    pub const BOTH_DOWN: WheelCommand = WheelCommand { left: WheelSign::Down, right: WheelSign::Down };
    pub const LEFT_DOWN_RIGHT_UP: WheelCommand = WheelCommand { left: WheelSign::Down, right: WheelSign::Up };
    pub const LEFT_UP_RIGHT_DOWN: WheelCommand = WheelCommand { left: WheelSign::Up, right: WheelSign::Down };
    pub const BOTH_UP: WheelCommand = WheelCommand { left: WheelSign::Up, right: WheelSign::Up };

    pub const ALL: [WheelCommand; 4] =
        [Self::BOTH_DOWN, Self::LEFT_DOWN_RIGHT_UP, Self::LEFT_UP_RIGHT_DOWN, Self::BOTH_UP];
}

impl fmt::Display for WheelCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}R{}", self.left.as_char(), self.right.as_char())
    }
}

impl FromStr for WheelCommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WheelCommand::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| format!("unknown wheel command `{s}` (L-R-|L-R+|L+R-|L+R+)"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActuationError {
    #[error("activation table maps no neuron to output `{0}`")]
    MissingLabel(OutputLabel),
    #[error("patterns `{first}` and `{second}` both match `{input}` with different commands and no priority is declared")]
    Conflict { first: String, second: String, input: String },
}

/// Collapse an activation table to output bits: a bit is set when the neuron
/// behind its label fired at least once during the window.
pub fn booleanize(table: &ActivationTable) -> Result<OutputBits, ActuationError> {
    let bit = |label| {
        table.output_count(label).map(|n| n >= 1).ok_or(ActuationError::MissingLabel(label))
    };
    Ok(OutputBits { a: bit(OutputLabel::A)?, b: bit(OutputLabel::B)?, c: bit(OutputLabel::C)?, d: bit(OutputLabel::D)? })
}

/// The guarded cases of the built-in law, in priority order. `BothUp` is the
/// unguarded remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawCase {
    BothDown,
    LeftDownRightUp,
    LeftUpRightDown,
    BothUp,
}

impl LawCase {
    pub fn command(self) -> WheelCommand {
        match self {
            LawCase::BothDown => WheelCommand::BOTH_DOWN,
            LawCase::LeftDownRightUp => WheelCommand::LEFT_DOWN_RIGHT_UP,
            LawCase::LeftUpRightDown => WheelCommand::LEFT_UP_RIGHT_DOWN,
            LawCase::BothUp => WheelCommand::BOTH_UP,
        }
    }
}

/// Every guarded case whose condition holds for `bits`, in priority order.
/// More than one entry means the guards overlap there and priority decides.
pub fn active_guards(bits: OutputBits) -> Vec<LawCase> {
    let OutputBits { a, b, c, d } = bits;
    let mut hits = Vec::new();
    if a && b && c {
        hits.push(LawCase::BothDown);
    }
    if !c && d && (a ^ b) {
        hits.push(LawCase::LeftDownRightUp);
    }
    if a && !b && (c ^ d) {
        hits.push(LawCase::LeftUpRightDown);
    }
    hits
}

/// The built-in wheel law: both wheels down on a close approach; left down
/// and right up on a lateral cue with no straight-range conflict; left up
/// and right down on the mirrored cue; both up otherwise. Cases are evaluated
/// in that order, so the one genuine overlap resolves to the earlier case.
pub fn decide(bits: OutputBits) -> WheelCommand {
    active_guards(bits).first().copied().unwrap_or(LawCase::BothUp).command()
}

/// Projection of [`decide`] onto the left wheel.
pub fn left_wheel_sign(bits: OutputBits) -> WheelSign {
    decide(bits).left
}

/// Projection of [`decide`] onto the right wheel.
pub fn right_wheel_sign(bits: OutputBits) -> WheelSign {
    decide(bits).right
}

/// Closed wheel-speed interval commands are clamped to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedBounds {
    pub min: f64,
    pub max: f64,
}

impl SpeedBounds {
    pub fn clamp(self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

/// Nudge both wheel speeds by ±`delta` per the command and clamp to bounds.
/// `delta` must be positive and the bounds non-empty.
pub fn apply(command: WheelCommand, speeds: (f64, f64), delta: f64, bounds: SpeedBounds) -> (f64, f64) {
    assert!(delta > 0.0, "delta must be positive, got {delta}");
    assert!(bounds.min < bounds.max, "empty speed bounds [{}, {}]", bounds.min, bounds.max);
    (
        bounds.clamp(speeds.0 + command.left.factor() * delta),
        bounds.clamp(speeds.1 + command.right.factor() * delta),
    )
}

/// One position of a row pattern: fixed bit or don't-care.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trit {
    Zero,
    One,
    Any,
}

/// A four-position pattern over the output bits, e.g. `1-01`. Doubles as a
/// product term: fixed positions are literals, don't-cares drop out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern(pub [Trit; 4]);

impl Pattern {
    pub const ANY: Pattern = Pattern([Trit::Any; 4]);

    pub fn matches(self, bits: OutputBits) -> bool {
        let values = [bits.a, bits.b, bits.c, bits.d];
        self.0.iter().zip(values).all(|(trit, bit)| match trit {
            Trit::Zero => !bit,
            Trit::One => bit,
            Trit::Any => true,
        })
    }

    /// Number of fixed positions (product-term literal count).
    pub fn literal_count(self) -> usize {
        self.0.iter().filter(|t| **t != Trit::Any).count()
    }

    /// Product-term notation: a letter per fixed position, overbarred when
    /// negated; the empty product prints as `1`.
    pub fn literals(self) -> String {
        let mut s = String::new();
        for (trit, letter) in self.0.iter().zip(['A', 'B', 'C', 'D']) {
            match trit {
                Trit::One => s.push(letter),
                Trit::Zero => {
                    s.push(letter);
                    s.push('\u{0304}');
                }
                Trit::Any => {}
            }
        }
        if s.is_empty() {
            s.push('1');
        }
        s
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for trit in self.0 {
            f.write_str(match trit {
                Trit::Zero => "0",
                Trit::One => "1",
                Trit::Any => "-",
            })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trits: Vec<Trit> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(Trit::Zero),
                '1' => Ok(Trit::One),
                '-' => Ok(Trit::Any),
                other => Err(format!("invalid pattern position `{other}` in `{s}`")),
            })
            .collect::<Result<_, _>>()?;
        let trits: [Trit; 4] =
            trits.try_into().map_err(|_| format!("expected four positions, got `{s}`"))?;
        Ok(Pattern(trits))
    }
}

/// Whether earlier rows win overlaps or overlaps are an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorityMode {
    Ordered,
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRow {
    pub pattern: Pattern,
    pub command: WheelCommand,
}

/// A pattern table over the output bits with a default command, parsed from:
///
/// ```text
/// table NAME
/// priority ordered          # omit or `priority none` for unordered
/// default L+R+
/// row 111- L-R-
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTable {
    pub name: String,
    pub priority: PriorityMode,
    pub default: WheelCommand,
    pub rows: Vec<ActionRow>,
}

/// An action table flattened to a total function: per truth-table input, the
/// winning command and the index of the row that claimed it (`None` for the
/// default).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatLaw {
    pub commands: [WheelCommand; 16],
    pub sources: [Option<usize>; 16],
}

impl FlatLaw {
    pub fn command(&self, bits: OutputBits) -> WheelCommand {
        self.commands[bits.index()]
    }
}

impl ActionTable {
    pub fn parse(text: &str) -> Result<ActionTable, ParseError> {
        let lines = meaningful_lines(text);
        let Some(&(header_no, header)) = lines.first() else {
            return err(1, 1, "empty document: expected `table NAME`");
        };
        let tokens = split_tokens(header);
        if tokens.len() != 2 || tokens[0].1 != "table" {
            return err(header_no, tokens.first().map_or(1, |t| t.0), "expected header `table NAME`");
        }
        let name = tokens[1].1.to_string();

        let mut priority = None;
        let mut default = None;
        let mut rows = Vec::new();
        for &(line_no, line) in &lines[1..] {
            let tokens = split_tokens(line);
            match tokens[0].1 {
                "priority" => {
                    let [(_, _), (col, mode)] = tokens[..] else {
                        return err(line_no, 1, "expected `priority ordered|none`");
                    };
                    if priority.is_some() {
                        return err(line_no, 1, "duplicate `priority` line");
                    }
                    priority = Some(match mode {
                        "ordered" => PriorityMode::Ordered,
                        "none" => PriorityMode::Unordered,
                        other => return err(line_no, col, format!("unknown priority mode `{other}`")),
                    });
                }
                "default" => {
                    let [(_, _), (col, cmd)] = tokens[..] else {
                        return err(line_no, 1, "expected `default COMMAND`");
                    };
                    if default.is_some() {
                        return err(line_no, 1, "duplicate `default` line");
                    }
                    default = Some(cmd.parse::<WheelCommand>().map_err(|e| ParseError {
                        line: line_no,
                        column: col,
                        message: e,
                    })?);
                }
                "row" => {
                    let [(_, _), (pat_col, pattern), (cmd_col, cmd)] = tokens[..] else {
                        return err(line_no, 1, "expected `row PATTERN COMMAND`");
                    };
                    let pattern = pattern.parse::<Pattern>().map_err(|e| ParseError {
                        line: line_no,
                        column: pat_col,
                        message: e,
                    })?;
                    let command = cmd.parse::<WheelCommand>().map_err(|e| ParseError {
                        line: line_no,
                        column: cmd_col,
                        message: e,
                    })?;
                    rows.push(ActionRow { pattern, command });
                }
                other => return err(line_no, tokens[0].0, format!("expected `priority`, `default`, or `row`, found `{other}`")),
            }
        }

        let Some(default) = default else {
            return err(header_no, 1, "the law must be total: a `default COMMAND` line is required");
        };
        Ok(ActionTable { name, priority: priority.unwrap_or(PriorityMode::Unordered), default, rows })
    }

    pub fn serialize(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "table {}", self.name);
        let _ = writeln!(
            s,
            "priority {}",
            match self.priority {
                PriorityMode::Ordered => "ordered",
                PriorityMode::Unordered => "none",
            }
        );
        let _ = writeln!(s, "default {}", self.default);
        for row in &self.rows {
            let _ = writeln!(s, "row {} {}", row.pattern, row.command);
        }
        s
    }

    /// Resolve every input to a command. Under ordered priority the first
    /// matching row wins; unordered tables are rejected if two rows with
    /// different commands share an input.
    pub fn flatten(&self) -> Result<FlatLaw, ActuationError> {
        let mut commands = [self.default; 16];
        let mut sources = [None; 16];
        for bits in OutputBits::all() {
            let matching: Vec<usize> =
                (0..self.rows.len()).filter(|&i| self.rows[i].pattern.matches(bits)).collect();
            if self.priority == PriorityMode::Unordered {
                for pair in matching.windows(2) {
                    let (i, j) = (pair[0], pair[1]);
                    if self.rows[i].command != self.rows[j].command {
                        return Err(ActuationError::Conflict {
                            first: self.rows[i].pattern.to_string(),
                            second: self.rows[j].pattern.to_string(),
                            input: bits.to_string(),
                        });
                    }
                }
            }
            if let Some(&winner) = matching.first() {
                commands[bits.index()] = self.rows[winner].command;
                sources[bits.index()] = Some(winner);
            }
        }
        Ok(FlatLaw { commands, sources })
    }

    /// The built-in law as the shipped table, parsed from the golden file.
    pub fn builtin() -> ActionTable {
        ActionTable::parse(crate::golden::OPPORTUNIST_ACTIONS).expect("embedded action table parses")
    }
}
