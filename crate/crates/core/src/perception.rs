//! Perception: motion classes, canonical stimulus templates, and the window
//! classifier that turns relative mate samples into circuit input.
//!
//! A sensed window is summarized by two rates. The lateral rate is measured
//! on the rightward-positive lateral coordinate `-range * sin(bearing)`
//! (bearing is left-positive), so a mate sliding right-to-left shows a
//! negative lateral rate. The radial rate is the range change per tick. Each
//! rate is compared against a dead-band: below `-eps_h` is right-to-left,
//! above `+eps_h` left-to-right, inside the band no horizontal motion and the
//! window classifies to nothing at all. The radial side maps to distancing,
//! straight, or approaching the same way.
//!
//! Classification feeds the circuit through canonical templates rather than
//! raw samples: every class owns one golden stimulus episode, and [`encode`]
//! replays that episode shifted to the window start. The circuit therefore
//! always sees one of six spike patterns — its activation table per class is
//! a checkable contract, not an emergent property.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::parse::{err, meaningful_lines, split_sections, split_tokens, ParseError};
use crate::snn::{ChannelId, StimulusEpisode};

/// Which way the mate crosses the field of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Horizontal {
    RightToLeft,
    LeftToRight,
}

/// How the mate's range evolves over the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Radial {
    Distancing,
    Straight,
    Approaching,
}

/// One of the six relative-motion classes (RLD, RLS, RLA, LRD, LRS, LRA).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MotionClass {
    pub horizontal: Horizontal,
    pub radial: Radial,
}

impl MotionClass {
    pub const RLD: MotionClass = MotionClass { horizontal: Horizontal::RightToLeft, radial: Radial::Distancing };
    pub const RLS: MotionClass = MotionClass { horizontal: Horizontal::RightToLeft, radial: Radial::Straight };
    pub const RLA: MotionClass = MotionClass { horizontal: Horizontal::RightToLeft, radial: Radial::Approaching };
    pub const LRD: MotionClass = MotionClass { horizontal: Horizontal::LeftToRight, radial: Radial::Distancing };
    pub const LRS: MotionClass = MotionClass { horizontal: Horizontal::LeftToRight, radial: Radial::Straight };
    pub const LRA: MotionClass = MotionClass { horizontal: Horizontal::LeftToRight, radial: Radial::Approaching };

    /// All six classes in presentation order.
    pub const ALL: [MotionClass; 6] =
        [Self::RLD, Self::RLS, Self::RLA, Self::LRD, Self::LRS, Self::LRA];

    pub fn code(self) -> &'static str {
        match (self.horizontal, self.radial) {
            (Horizontal::RightToLeft, Radial::Distancing) => "RLD",
            (Horizontal::RightToLeft, Radial::Straight) => "RLS",
            (Horizontal::RightToLeft, Radial::Approaching) => "RLA",
            (Horizontal::LeftToRight, Radial::Distancing) => "LRD",
            (Horizontal::LeftToRight, Radial::Straight) => "LRS",
            (Horizontal::LeftToRight, Radial::Approaching) => "LRA",
        }
    }

    /// The same class seen in a mirror: horizontal direction flipped,
    /// radial evolution untouched.
    pub fn mirrored(self) -> MotionClass {
        let horizontal = match self.horizontal {
            Horizontal::RightToLeft => Horizontal::LeftToRight,
            Horizontal::LeftToRight => Horizontal::RightToLeft,
        };
        MotionClass { horizontal, radial: self.radial }
    }
}

impl fmt::Display for MotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for MotionClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MotionClass::ALL
            .into_iter()
            .find(|c| c.code() == s)
            .ok_or_else(|| format!("unknown motion class `{s}`"))
    }
}

/// One relative observation of the mate, in the vehicle frame at the moment
/// of sampling: `bearing` is left-positive radians off the heading, `range`
/// the planar distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeSample {
    pub t: u64,
    pub bearing: f64,
    pub range: f64,
}

/// Classifier knobs: window length in ticks and the two dead-bands, both in
/// length units per tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub window: u64,
    pub eps_h: f64,
    pub eps_r: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { window: 8, eps_h: 0.05, eps_r: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerceptionError {
    #[error("a window needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample ticks must increase strictly ({prev} then {next})")]
    NonMonotonicSamples { prev: u64, next: u64 },
    #[error("no template for class {0}")]
    MissingTemplate(MotionClass),
}

/// Rightward-positive lateral coordinate of a sample.
fn lateral(sample: &RelativeSample) -> f64 {
    -sample.range * sample.bearing.sin()
}

/// Classify a window of samples, `Ok(None)` when the lateral rate sits inside
/// the dead-band (no horizontal motion to react to).
pub fn classify_window(
    samples: &[RelativeSample],
    config: &ClassifierConfig,
) -> Result<Option<MotionClass>, PerceptionError> {
    if samples.len() < 2 {
        return Err(PerceptionError::TooFewSamples(samples.len()));
    }
    for pair in samples.windows(2) {
        if pair[1].t <= pair[0].t {
            return Err(PerceptionError::NonMonotonicSamples { prev: pair[0].t, next: pair[1].t });
        }
    }

    let first = &samples[0];
    let last = &samples[samples.len() - 1];
    let span = (last.t - first.t) as f64;
    let lateral_rate = (lateral(last) - lateral(first)) / span;
    let radial_rate = (last.range - first.range) / span;

    let horizontal = if lateral_rate < -config.eps_h {
        Horizontal::RightToLeft
    } else if lateral_rate > config.eps_h {
        Horizontal::LeftToRight
    } else {
        return Ok(None);
    };
    let radial = if radial_rate < -config.eps_r {
        Radial::Approaching
    } else if radial_rate > config.eps_r {
        Radial::Distancing
    } else {
        Radial::Straight
    };
    Ok(Some(MotionClass { horizontal, radial }))
}

/// Turn a sensed window into circuit input: the canonical template of its
/// class, on the episode's own local timeline (each window is replayed to a
/// fresh circuit, so tick 0 is the window start). A window with no horizontal
/// motion encodes to an empty episode — the circuit stays silent and the
/// actuation default applies.
pub fn encode(
    samples: &[RelativeSample],
    config: &ClassifierConfig,
) -> Result<StimulusEpisode, PerceptionError> {
    match classify_window(samples, config)? {
        None => Ok(StimulusEpisode::new(0)),
        Some(class) => Ok(template(class).clone()),
    }
}

/// A parsed stimulus bank: one canonical episode per motion class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateBank {
    pub name: String,
    templates: BTreeMap<MotionClass, StimulusEpisode>,
}

impl TemplateBank {
    /// Parse a stimulus document:
    ///
    /// ```text
    /// stimuli NAME
    /// duration TICKS
    ///
    /// [RLD]
    /// CHANNEL TICK [TICK ...]
    /// ```
    pub fn parse(text: &str) -> Result<TemplateBank, ParseError> {
        let lines = meaningful_lines(text);
        let Some(&(header_no, header)) = lines.first() else {
            return err(1, 1, "empty document: expected `stimuli NAME`");
        };
        let tokens = split_tokens(header);
        if tokens.len() != 2 || tokens[0].1 != "stimuli" {
            return err(header_no, tokens.first().map_or(1, |t| t.0), "expected header `stimuli NAME`");
        }
        let name = tokens[1].1.to_string();

        let Some(&(dur_no, dur_line)) = lines.get(1) else {
            return err(header_no, 1, "expected `duration TICKS` after the header");
        };
        let dur_tokens = split_tokens(dur_line);
        let duration: u64 = match dur_tokens[..] {
            [(_, "duration"), (col, value)] => match value.parse() {
                Ok(v) => v,
                Err(_) => return err(dur_no, col, format!("invalid duration `{value}`")),
            },
            _ => return err(dur_no, 1, "expected `duration TICKS`"),
        };

        let mut templates = BTreeMap::new();
        for (line_no, section, body) in split_sections(&lines, 2)? {
            let class: MotionClass = match section.parse() {
                Ok(c) => c,
                Err(e) => return err(line_no, 1, e),
            };
            if templates.contains_key(&class) {
                return err(line_no, 1, format!("duplicate template `[{class}]`"));
            }
            let mut episode = StimulusEpisode::new(duration);
            for (body_no, line) in body {
                let tokens = split_tokens(line);
                if tokens.len() < 2 {
                    return err(body_no, 1, "expected `CHANNEL TICK [TICK ...]`");
                }
                let channel = ChannelId::new(tokens[0].1);
                for &(col, tick) in &tokens[1..] {
                    let tick: u64 = match tick.parse() {
                        Ok(v) => v,
                        Err(_) => return err(body_no, col, format!("invalid tick `{tick}`")),
                    };
                    if tick >= duration {
                        return err(body_no, col, format!("tick {tick} outside duration {duration}"));
                    }
                    episode.add_spike(channel.clone(), tick);
                }
            }
            templates.insert(class, episode);
        }
        Ok(TemplateBank { name, templates })
    }

    pub fn get(&self, class: MotionClass) -> Option<&StimulusEpisode> {
        self.templates.get(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = MotionClass> + '_ {
        self.templates.keys().copied()
    }

    /// Lookup that reports the missing class instead of returning an option.
    pub fn require(&self, class: MotionClass) -> Result<&StimulusEpisode, PerceptionError> {
        self.get(class).ok_or(PerceptionError::MissingTemplate(class))
    }
}

/// The canonical bank shipped with the toolkit, covering all six classes.
pub fn default_bank() -> &'static TemplateBank {
    static BANK: OnceLock<TemplateBank> = OnceLock::new();
    BANK.get_or_init(|| {
        TemplateBank::parse(crate::golden::OPPORTUNIST_STIMULI).expect("embedded stimulus bank parses")
    })
}

/// Canonical stimulus window for a class, from the default bank.
pub fn template(class: MotionClass) -> &'static StimulusEpisode {
    default_bank().get(class).expect("default bank covers all six classes")
}
