//! Sum-of-products synthesis for action tables: Quine–McCluskey prime
//! implicants per command, then an exact minimum cover (fewest terms, then
//! fewest literals, then lexicographic, so the result is deterministic).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ActionTable, ActuationError, OutputBits, Pattern, Trit, WheelCommand};

/// A minimized sum-of-products form of a total law: per command, the product
/// terms whose union is exactly that command's preimage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SopExpression {
    pub terms: BTreeMap<WheelCommand, Vec<Pattern>>,
}

impl SopExpression {
    /// Commands whose term sets cover `bits`. A synthesized expression yields
    /// exactly one entry for every input.
    pub fn commands_matching(&self, bits: OutputBits) -> Vec<WheelCommand> {
        WheelCommand::ALL
            .into_iter()
            .filter(|cmd| {
                self.terms.get(cmd).map(|terms| terms.iter().any(|t| t.matches(bits))).unwrap_or(false)
            })
            .collect()
    }

    /// The command covering `bits`, when exactly one does.
    pub fn eval(&self, bits: OutputBits) -> Option<WheelCommand> {
        match self.commands_matching(bits)[..] {
            [cmd] => Some(cmd),
            _ => None,
        }
    }
}

impl fmt::Display for SopExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cmd in WheelCommand::ALL {
            let Some(terms) = self.terms.get(&cmd) else { continue };
            let rhs = if terms.is_empty() {
                "0".to_string()
            } else {
                terms.iter().map(|t| t.literals()).collect::<Vec<_>>().join(" + ")
            };
            writeln!(f, "{cmd} = {rhs}")?;
        }
        Ok(())
    }
}

/// Two rows matching a common input. Under ordered priority the earlier row
/// wins; the note keeps an example input so the shadowing is inspectable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapNote {
    pub first: Pattern,
    pub second: Pattern,
    pub example: OutputBits,
}

impl fmt::Display for OverlapNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "`{}` and `{}` both match `{}`; the earlier row wins",
            self.first, self.second, self.example
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisResult {
    pub sop: SopExpression,
    /// Pairs of rows sharing at least one input, in row order.
    pub overlaps: Vec<OverlapNote>,
    /// Rows that win no input at all (fully shadowed by earlier rows).
    pub shadowed_rows: Vec<Pattern>,
}

/// Flatten a table and synthesize the minimal sum-of-products expression of
/// the resulting total function, with overlap diagnostics. Unordered tables
/// with conflicting overlaps are rejected by the flatten step.
pub fn synthesize(table: &ActionTable) -> Result<SynthesisResult, ActuationError> {
    let flat = table.flatten()?;

    let mut terms = BTreeMap::new();
    for cmd in WheelCommand::ALL {
        let minterms: BTreeSet<u8> =
            (0..16u8).filter(|&i| flat.commands[i as usize] == cmd).collect();
        let cover = if minterms.is_empty() {
            Vec::new()
        } else {
            minimum_cover(&minterms, &prime_implicants(&minterms))
        };
        terms.insert(cmd, cover);
    }

    let mut overlaps = Vec::new();
    for i in 0..table.rows.len() {
        for j in i + 1..table.rows.len() {
            let example = OutputBits::all()
                .find(|&b| table.rows[i].pattern.matches(b) && table.rows[j].pattern.matches(b));
            if let Some(example) = example {
                overlaps.push(OverlapNote {
                    first: table.rows[i].pattern,
                    second: table.rows[j].pattern,
                    example,
                });
            }
        }
    }

    let shadowed_rows = (0..table.rows.len())
        .filter(|i| !flat.sources.iter().any(|s| s.as_ref() == Some(i)))
        .map(|i| table.rows[i].pattern)
        .collect();

    Ok(SynthesisResult { sop: SopExpression { terms }, overlaps, shadowed_rows })
}

/// An implicant as (value, mask): mask bits are don't-cares, value bits are
/// the fixed positions (zero under the mask). Bit 3 is A, bit 0 is D.
fn to_pattern(value: u8, mask: u8) -> Pattern {
    let mut trits = [Trit::Any; 4];
    for (pos, trit) in trits.iter_mut().enumerate() {
        let bit = 1u8 << (3 - pos);
        if mask & bit == 0 {
            *trit = if value & bit != 0 { Trit::One } else { Trit::Zero };
        }
    }
    Pattern(trits)
}

fn covers(value: u8, mask: u8, minterm: u8) -> bool {
    minterm & !mask == value
}

/// Quine–McCluskey combining pass: merge implicants differing in one fixed
/// bit until nothing merges; whatever never merged is prime.
fn prime_implicants(minterms: &BTreeSet<u8>) -> Vec<(u8, u8)> {
    let mut current: BTreeSet<(u8, u8)> = minterms.iter().map(|&m| (m, 0u8)).collect();
    let mut primes = BTreeSet::new();
    while !current.is_empty() {
        let items: Vec<(u8, u8)> = current.iter().copied().collect();
        let mut merged: BTreeSet<(u8, u8)> = BTreeSet::new();
        let mut next = BTreeSet::new();
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let (v1, m1) = items[i];
                let (v2, m2) = items[j];
                if m1 == m2 && (v1 ^ v2).count_ones() == 1 {
                    let diff = v1 ^ v2;
                    next.insert((v1 & !diff, m1 | diff));
                    merged.insert(items[i]);
                    merged.insert(items[j]);
                }
            }
        }
        for item in items {
            if !merged.contains(&item) {
                primes.insert(item);
            }
        }
        current = next;
    }
    primes.into_iter().collect()
}

/// Exact minimum cover of `minterms` by `primes`: essential primes first,
/// then branch-and-bound over the residue with cost (terms, literals,
/// lexicographic patterns).
fn minimum_cover(minterms: &BTreeSet<u8>, primes: &[(u8, u8)]) -> Vec<Pattern> {
    // Order primes by their pattern so every tie-break below is stable.
    let mut primes: Vec<(u8, u8)> = primes.to_vec();
    primes.sort_by_key(|&(v, m)| to_pattern(v, m));

    let minterm_list: Vec<u8> = minterms.iter().copied().collect();
    let full: u32 = (1u32 << minterm_list.len()) - 1;
    let cover_mask = |(v, m): (u8, u8)| -> u32 {
        minterm_list
            .iter()
            .enumerate()
            .filter(|&(_, &mt)| covers(v, m, mt))
            .fold(0u32, |acc, (i, _)| acc | (1 << i))
    };
    let masks: Vec<u32> = primes.iter().map(|&p| cover_mask(p)).collect();

    // Essential primes: sole cover of some minterm. Forced into any cover.
    let mut chosen: Vec<usize> = Vec::new();
    let mut covered: u32 = 0;
    loop {
        let mut forced = None;
        for (i, _) in minterm_list.iter().enumerate() {
            if covered & (1 << i) != 0 {
                continue;
            }
            let covering: Vec<usize> = (0..primes.len()).filter(|&p| masks[p] & (1 << i) != 0).collect();
            if let [only] = covering[..] {
                if !chosen.contains(&only) {
                    forced = Some(only);
                    break;
                }
            }
        }
        match forced {
            Some(p) => {
                chosen.push(p);
                covered |= masks[p];
            }
            None => break,
        }
    }

    struct Search<'a> {
        primes: &'a [(u8, u8)],
        masks: &'a [u32],
        full: u32,
        best: Option<(usize, usize, Vec<Pattern>)>,
    }

    impl Search<'_> {
        fn cost(&self, chosen: &[usize]) -> (usize, usize, Vec<Pattern>) {
            let mut patterns: Vec<Pattern> =
                chosen.iter().map(|&p| to_pattern(self.primes[p].0, self.primes[p].1)).collect();
            patterns.sort();
            let literals = patterns.iter().map(|p| p.literal_count()).sum();
            (patterns.len(), literals, patterns)
        }

        fn run(&mut self, covered: u32, chosen: &mut Vec<usize>) {
            if covered == self.full {
                let candidate = self.cost(chosen);
                if self.best.as_ref().map(|b| candidate < *b).unwrap_or(true) {
                    self.best = Some(candidate);
                }
                return;
            }
            if let Some((best_len, _, _)) = &self.best {
                if chosen.len() >= *best_len {
                    return;
                }
            }
            // Branch on the uncovered minterm with the fewest covering primes.
            let mut pick: Option<(u32, Vec<usize>)> = None;
            for i in 0..32 {
                let bit = 1u32 << i;
                if self.full & bit != 0 && covered & bit == 0 {
                    let covering: Vec<usize> =
                        (0..self.primes.len()).filter(|&p| self.masks[p] & bit != 0).collect();
                    if pick.as_ref().map(|(_, c)| covering.len() < c.len()).unwrap_or(true) {
                        pick = Some((bit, covering));
                    }
                }
            }
            let Some((_, covering)) = pick else { return };
            for p in covering {
                chosen.push(p);
                self.run(covered | self.masks[p], chosen);
                chosen.pop();
            }
        }
    }

    let mut search = Search { primes: &primes, masks: &masks, full, best: None };
    search.run(covered, &mut chosen);
    search.best.expect("primes cover every minterm by construction").2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::decide;

    fn pattern(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    #[test]
    fn builtin_law_synthesizes_to_the_expected_terms() {
        let result = synthesize(&ActionTable::builtin()).unwrap();
        assert_eq!(result.sop.terms[&WheelCommand::BOTH_DOWN], vec![pattern("111-")]);
        assert_eq!(
            result.sop.terms[&WheelCommand::LEFT_DOWN_RIGHT_UP],
            vec![pattern("0101"), pattern("1001")]
        );
        assert_eq!(result.sop.terms[&WheelCommand::LEFT_UP_RIGHT_DOWN], vec![pattern("1010")]);
        assert!(result.overlaps.is_empty(), "{:?}", result.overlaps);
        assert!(result.shadowed_rows.is_empty());
    }

    #[test]
    fn synthesized_expression_partitions_all_sixteen_inputs() {
        let result = synthesize(&ActionTable::builtin()).unwrap();
        let flat = ActionTable::builtin().flatten().unwrap();
        for bits in OutputBits::all() {
            assert_eq!(result.sop.commands_matching(bits).len(), 1, "at {bits}");
            assert_eq!(result.sop.eval(bits), Some(flat.command(bits)), "at {bits}");
            assert_eq!(result.sop.eval(bits), Some(decide(bits)), "at {bits}");
        }
    }

    #[test]
    fn no_term_can_drop_a_literal() {
        let result = synthesize(&ActionTable::builtin()).unwrap();
        let flat = ActionTable::builtin().flatten().unwrap();
        for (&cmd, terms) in &result.sop.terms {
            for (ti, term) in terms.iter().enumerate() {
                for pos in 0..4 {
                    if term.0[pos] == Trit::Any {
                        continue;
                    }
                    // Widen this literal away and check the cover leaks.
                    let mut widened = *term;
                    widened.0[pos] = Trit::Any;
                    let leaks = OutputBits::all().any(|bits| {
                        let in_modified = terms
                            .iter()
                            .enumerate()
                            .any(|(i, t)| if i == ti { widened.matches(bits) } else { t.matches(bits) });
                        in_modified != (flat.command(bits) == cmd)
                    });
                    assert!(leaks, "{cmd}: dropping a literal from {term} changed nothing");
                }
            }
        }
    }

    #[test]
    fn shadowed_rows_and_overlaps_are_reported() {
        let text = "table t\npriority ordered\ndefault L+R+\nrow 10-1 L-R+\nrow 1001 L+R-\n";
        let result = synthesize(&ActionTable::parse(text).unwrap()).unwrap();
        assert_eq!(result.shadowed_rows, vec![pattern("1001")]);
        assert_eq!(result.overlaps.len(), 1);
        assert_eq!(result.overlaps[0].first, pattern("10-1"));
        assert_eq!(result.overlaps[0].example, "1001".parse().unwrap());
        // The shadowed row contributes nothing: 1001 synthesizes with L-R+.
        assert_eq!(result.sop.eval("1001".parse().unwrap()), Some(WheelCommand::LEFT_DOWN_RIGHT_UP));
    }

    #[test]
    fn a_catch_all_row_synthesizes_to_the_empty_product() {
        let text = "table t\npriority ordered\ndefault L+R+\nrow ---- L-R-\n";
        let result = synthesize(&ActionTable::parse(text).unwrap()).unwrap();
        assert_eq!(result.sop.terms[&WheelCommand::BOTH_DOWN], vec![Pattern::ANY]);
        assert_eq!(result.sop.terms[&WheelCommand::BOTH_UP], Vec::new());
        assert_eq!(result.sop.terms[&WheelCommand::BOTH_DOWN][0].literals(), "1");
    }

    #[test]
    fn parity_law_needs_all_eight_minterms() {
        // Odd parity of ABCD cannot merge any pair of minterms: the cover is
        // the eight minterms themselves. Exercises the search away from the
        // easy dense cases.
        let mut text = String::from("table parity\npriority ordered\ndefault L+R+\n");
        for bits in OutputBits::all() {
            if bits.index().count_ones() % 2 == 1 {
                text.push_str(&format!("row {bits} L-R-\n"));
            }
        }
        let result = synthesize(&ActionTable::parse(&text).unwrap()).unwrap();
        let terms = &result.sop.terms[&WheelCommand::BOTH_DOWN];
        assert_eq!(terms.len(), 8);
        assert!(terms.iter().all(|t| t.literal_count() == 4));
        let flat = ActionTable::parse(&text).unwrap().flatten().unwrap();
        for bits in OutputBits::all() {
            assert_eq!(result.sop.eval(bits), Some(flat.command(bits)));
        }
    }

    #[test]
    fn display_uses_product_term_notation() {
        let result = synthesize(&ActionTable::builtin()).unwrap();
        let printed = result.sop.to_string();
        assert!(printed.contains("L-R- = ABC"), "{printed}");
        assert!(printed.contains("L-R+ = A\u{0304}BC\u{0304}D + AB\u{0304}C\u{0304}D"), "{printed}");
        assert!(printed.contains("L+R- = AB\u{0304}CD\u{0304}"), "{printed}");
    }
}
