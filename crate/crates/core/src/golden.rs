//! Golden data shipped with the toolkit: the reference circuits, the
//! canonical stimulus bank, the actuation law, the behavior description they
//! all hang off, and the three benchmark scenarios. Embedded so the library
//! and its tests never depend on a working directory.

pub const OPPORTUNIST_CIRCUIT: &str = include_str!("../data/opportunist.circuit");
pub const HORIZONTAL_CIRCUIT: &str = include_str!("../data/horizontal.circuit");
pub const DEPTH_CIRCUIT: &str = include_str!("../data/depth.circuit");
pub const OPPORTUNIST_STIMULI: &str = include_str!("../data/opportunist.stimuli");
pub const OPPORTUNIST_ACTIONS: &str = include_str!("../data/opportunist.actions");
pub const OPPORTUNIST_BEHAVIOR: &str = include_str!("../data/opportunist.behavior");
pub const SUSPICIOUS_SCENARIO: &str = include_str!("../data/suspicious.scenario");
pub const FOLLOWING_SCENARIO: &str = include_str!("../data/following.scenario");
pub const WANDERING_SCENARIO: &str = include_str!("../data/wandering.scenario");

/// The golden files by their reference names, for loaders that resolve
/// behavior-file references without touching the filesystem.
pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "opportunist.circuit" => Some(OPPORTUNIST_CIRCUIT),
        "horizontal.circuit" => Some(HORIZONTAL_CIRCUIT),
        "depth.circuit" => Some(DEPTH_CIRCUIT),
        "opportunist.stimuli" => Some(OPPORTUNIST_STIMULI),
        "opportunist.actions" => Some(OPPORTUNIST_ACTIONS),
        "opportunist.behavior" => Some(OPPORTUNIST_BEHAVIOR),
        "suspicious.scenario" => Some(SUSPICIOUS_SCENARIO),
        "following.scenario" => Some(FOLLOWING_SCENARIO),
        "wandering.scenario" => Some(WANDERING_SCENARIO),
        _ => None,
    }
}
