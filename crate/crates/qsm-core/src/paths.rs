//! Word-path decomposition of the evolution.
//!
//! The step operator splits as a sum of two pieces: one acting on states
//! whose lattice site two behind the head (site 1 while the head is on
//! sites 1 or 2) is a spacer, and one acting on the complement. Expanding
//! the n-fold step over the two pieces indexes the evolution by
//! *compositions*: alternating runs of spacer/word projections whose
//! lengths sum to n. Each terminal configuration receives amplitude from
//! exactly one composition, and grouping terminal configurations by the
//! segmentation of their frozen tape yields the word paths.
//!
//! The module computes the decomposition both ways — operator-split
//! products and terminal-tape segmentation — and [`verify_pathsum`]
//! cross-checks them against direct evolution.

use crate::evolve::{evolve, expand_term, EngineError, SparseState};
use crate::language::{decompose, SegmentDecomposition, Symbol, Word};
use crate::evolve::Configuration;
use crate::machine::RuleTable;
use num_complex::Complex64;
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Composition-size guard for [`verify_pathsum`].
pub const PATHSUM_MAX_STEPS: usize = 8;

/// Which piece of the split step operator to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitBranch {
    /// Project on the watched site being a spacer, then step.
    Zero,
    /// Project on the watched site holding a word symbol, then step.
    NonZero,
}

/// The site the split projector watches for a state at a given step
/// count: two behind the head, or site 1 while the head is on site 2.
fn watched_site(step_count: usize) -> usize {
    if step_count == 0 {
        1
    } else {
        step_count
    }
}

/// Applies one piece of the split step operator.
pub fn split_step(
    state: &SparseState,
    table: &RuleTable,
    branch: SplitBranch,
) -> Result<SparseState, EngineError> {
    let site = watched_site(state.step_count());
    let mut acc = BTreeMap::new();
    for (config, amp) in state.terms() {
        let spacer_behind = config.symbol_at(site) == Symbol::Zero;
        let keep = match branch {
            SplitBranch::Zero => spacer_behind,
            SplitBranch::NonZero => !spacer_behind,
        };
        if keep {
            expand_term(config, *amp, table, &mut acc)?;
        }
    }
    acc.retain(|_, a| a.norm() > table.eps_amp);
    Ok(SparseState::from_terms(state.step_count() + 1, acc))
}

/// An alternating spacer/word composition: run types start at `nu1`
/// (0 = spacer, 1 = word) and flip with every run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Composition {
    pub nu1: u8,
    pub lengths: Vec<usize>,
}

impl Composition {
    pub fn total(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn t(&self) -> usize {
        self.lengths.len()
    }

    /// Run type of the j-th factor (1-based).
    pub fn nu(&self, j: usize) -> u8 {
        if j % 2 == 1 {
            self.nu1
        } else {
            1 - self.nu1
        }
    }
}

/// The factors applied by [`composition_evolve`] and the resulting
/// (generally sub-normalized) state.
#[derive(Debug, Clone)]
pub struct OperatorSplitTrace {
    pub factors: Vec<(u8, usize)>,
    pub state: SparseState,
}

/// Applies the split pieces per an alternating composition: `lengths[0]`
/// steps of type `nu1`, then `lengths[1]` steps of the opposite type, and
/// so on.
pub fn composition_evolve(
    table: &RuleTable,
    nu1: u8,
    lengths: &[usize],
) -> Result<OperatorSplitTrace, EngineError> {
    assert!(lengths.iter().all(|&h| h >= 1), "factor lengths are >= 1");
    let mut state = crate::evolve::initial_state(table);
    let mut factors = Vec::new();
    let mut nu = nu1;
    for &h in lengths {
        let branch = if nu == 0 {
            SplitBranch::Zero
        } else {
            SplitBranch::NonZero
        };
        for _ in 0..h {
            state = split_step(&state, table, branch)?;
        }
        factors.push((nu, h));
        nu = 1 - nu;
    }
    Ok(OperatorSplitTrace { factors, state })
}

/// All alternating compositions with factor lengths summing to `n`.
pub fn enumerate_compositions(n: usize) -> Vec<Composition> {
    if n == 0 {
        return vec![Composition {
            nu1: 0,
            lengths: Vec::new(),
        }];
    }
    let mut parts = Vec::new();
    let mut current = Vec::new();
    fn rec(remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        for h in 1..=remaining {
            current.push(h);
            rec(remaining - h, current, out);
            current.pop();
        }
    }
    rec(n, &mut current, &mut parts);
    let mut out = Vec::new();
    for nu1 in [0u8, 1u8] {
        for lengths in &parts {
            out.push(Composition {
                nu1,
                lengths: lengths.clone(),
            });
        }
    }
    out
}

/// The unique composition whose operator-split product feeds a terminal
/// configuration: run-lengths of the watched-site sequence along its
/// history. The k-th application watches site k-1 (site 1 for the first),
/// and those sites are already frozen when watched, so the sequence reads
/// off the frozen tape.
pub fn composition_signature(config: &Configuration) -> Composition {
    let n = config.step_count();
    if n == 0 {
        return Composition {
            nu1: 0,
            lengths: Vec::new(),
        };
    }
    let mut seq = Vec::with_capacity(n);
    // the first application watches site 1 before anything was written
    seq.push(false);
    for site in 1..n {
        seq.push(config.symbol_at(site) != Symbol::Zero);
    }
    let nu1 = u8::from(seq[0]);
    let mut lengths = Vec::new();
    let mut run_val = seq[0];
    let mut run_len = 0usize;
    for &v in &seq {
        if v == run_val {
            run_len += 1;
        } else {
            lengths.push(run_len);
            run_val = v;
            run_len = 1;
        }
    }
    lengths.push(run_len);
    Composition { nu1, lengths }
}

/// One word path: the terminal configurations whose frozen tapes share a
/// segmentation, with their amplitudes.
#[derive(Debug, Clone)]
pub struct WordPath {
    pub decomposition: SegmentDecomposition,
    pub members: Vec<(Configuration, Complex64)>,
    pub probability: f64,
}

impl WordPath {
    pub fn words(&self) -> Vec<&Word> {
        self.decomposition.words()
    }
}

/// Groups the support of `evolve(table, n)` by the segmentation of the
/// frozen tape over sites `1..=n`.
///
/// The in-flight symbol on site `n+1` is excluded from path identity
/// because the head may still rewrite it. At `n = 0` the single stored
/// spacer site stands in, giving the one-spacer path.
pub fn enumerate_word_paths(table: &RuleTable, n: usize) -> Result<Vec<WordPath>, EngineError> {
    let state = evolve(table, n)?;
    word_paths_of(&state)
}

/// As [`enumerate_word_paths`] but over an already-evolved state.
pub fn word_paths_of(state: &SparseState) -> Result<Vec<WordPath>, EngineError> {
    let n = state.step_count();
    let mut groups: BTreeMap<SegmentDecomposition, Vec<(Configuration, Complex64)>> =
        BTreeMap::new();
    for (config, amp) in state.terms() {
        let frozen = &config.tape[..n.max(1)];
        let decomposition = decompose(frozen).expect("frozen slice is nonempty");
        groups
            .entry(decomposition)
            .or_default()
            .push((config.clone(), *amp));
    }
    Ok(groups
        .into_iter()
        .map(|(decomposition, members)| {
            let probability = members.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>() + 0.0;
            WordPath {
                decomposition,
                members,
                probability,
            }
        })
        .collect())
}

/// Sums every composition product and compares against direct evolution.
///
/// Returns the largest termwise residual. Also checks that each
/// composition's support carries exactly that composition's signature;
/// a mismatch reports an infinite residual.
pub fn verify_pathsum(table: &RuleTable, n: usize) -> Result<f64, EngineError> {
    if n > PATHSUM_MAX_STEPS {
        return Err(EngineError::SizeLimit {
            requested: n,
            limit: PATHSUM_MAX_STEPS,
        });
    }
    let direct = evolve(table, n)?;
    let mut total = SparseState::empty(n);
    let mut signature_ok = true;
    for comp in enumerate_compositions(n) {
        let trace = composition_evolve(table, comp.nu1, &comp.lengths)?;
        for config in trace.state.terms().keys() {
            if composition_signature(config) != comp {
                signature_ok = false;
            }
        }
        total = total.add(&trace.state);
    }
    let residual = total.max_diff(&direct);
    if signature_ok {
        Ok(residual)
    } else {
        Ok(f64::INFINITY)
    }
}

// ---------------------------------------------------------------------------
// Path-tree export
// ---------------------------------------------------------------------------

/// A word event on a path: the word, its site interval, and the step at
/// which its trailing spacer froze (`None` while the segment is still
/// adjacent to the head's wake).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WordEvent {
    pub word: Word,
    pub start_site: usize,
    pub end_site: usize,
    pub frozen_step: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: usize,
    pub event: Option<WordEvent>,
    pub children: Vec<usize>,
    /// Total probability of the paths terminating at this node.
    pub leaf_probability: Option<f64>,
}

/// Prefix tree of word events across all word paths at one horizon.
#[derive(Debug, Clone)]
pub struct PathTree {
    pub horizon: usize,
    pub nodes: Vec<TreeNode>,
}

fn events_of(path: &WordPath, horizon: usize) -> Vec<WordEvent> {
    let mut events = Vec::new();
    let mut site = 1usize;
    for segment in path.decomposition.segments() {
        let len = segment.len();
        if let crate::language::Segment::Word(word) = segment {
            let start_site = site;
            let end_site = site + len - 1;
            let frozen_step = if end_site < horizon {
                Some(end_site + 1)
            } else {
                None
            };
            events.push(WordEvent {
                word: word.clone(),
                start_site,
                end_site,
                frozen_step,
            });
        }
        site += len;
    }
    events
}

/// Builds the word-event prefix tree for the evolution at horizon `n`.
pub fn path_tree(table: &RuleTable, n: usize) -> Result<PathTree, EngineError> {
    let paths = enumerate_word_paths(table, n)?;
    let mut nodes = vec![TreeNode {
        id: 0,
        event: None,
        children: Vec::new(),
        leaf_probability: None,
    }];
    for path in &paths {
        let mut at = 0usize;
        for event in events_of(path, n) {
            let found = nodes[at].children.iter().copied().find(|&c| {
                nodes[c].event.as_ref() == Some(&event)
            });
            at = match found {
                Some(c) => c,
                None => {
                    let id = nodes.len();
                    nodes.push(TreeNode {
                        id,
                        event: Some(event),
                        children: Vec::new(),
                        leaf_probability: None,
                    });
                    nodes[at].children.push(id);
                    id
                }
            };
        }
        let slot = &mut nodes[at].leaf_probability;
        *slot = Some(slot.unwrap_or(0.0) + path.probability);
    }
    Ok(PathTree { horizon: n, nodes })
}

impl PathTree {
    fn node_label(&self, node: &TreeNode) -> String {
        let mut label = match &node.event {
            None => format!("start (n={})", self.horizon),
            Some(e) => {
                let status = match e.frozen_step {
                    Some(step) => format!("sealed at step {step}"),
                    None => "open".to_string(),
                };
                format!("{} [{}..{}] {}", e.word, e.start_site, e.end_site, status)
            }
        };
        if let Some(p) = node.leaf_probability {
            let _ = write!(label, " p={p:.6}");
        }
        label
    }

    /// DOT digraph with one node per word event and edges for path descent.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph word_paths {\n  rankdir=BT;\n");
        for node in &self.nodes {
            let label = self.node_label(node).replace('"', "\\\"");
            let _ = writeln!(out, "  n{} [label=\"{}\"];", node.id, label);
        }
        for node in &self.nodes {
            for &child in &node.children {
                let _ = writeln!(out, "  n{} -> n{};", node.id, child);
            }
        }
        out.push_str("}\n");
        out
    }

    /// JSON mirror of the tree.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|node| {
                json!({
                    "id": node.id,
                    "word": node.event.as_ref().map(|e| e.word.to_string()),
                    "start_site": node.event.as_ref().map(|e| e.start_site),
                    "end_site": node.event.as_ref().map(|e| e.end_site),
                    "frozen_step": node.event.as_ref().and_then(|e| e.frozen_step),
                    "children": node.children,
                    "leaf_probability": node.leaf_probability,
                })
            })
            .collect();
        json!({ "horizon": self.horizon, "nodes": nodes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{evolve, initial_state, step};
    use crate::machine::{builtin, Builtin};

    #[test]
    fn split_of_initial_state() {
        let table = builtin(Builtin::ClassicalEnumerator);
        let init = initial_state(&table);
        let zero = split_step(&init, &table, SplitBranch::Zero).unwrap();
        let nonzero = split_step(&init, &table, SplitBranch::NonZero).unwrap();
        let full = step(&init, &table).unwrap();
        assert_eq!(zero, full);
        assert!(nonzero.is_empty());
    }

    #[test]
    fn split_pieces_sum_to_step() {
        for which in Builtin::ALL {
            let table = builtin(which);
            let mut state = initial_state(&table);
            for n in 0..10 {
                let zero = split_step(&state, &table, SplitBranch::Zero).unwrap();
                let nonzero = split_step(&state, &table, SplitBranch::NonZero).unwrap();
                let full = step(&state, &table).unwrap();
                let sum = zero.add(&nonzero);
                assert!(
                    sum.max_diff(&full) <= 1e-14,
                    "{} at n={n}",
                    which.name()
                );
                state = full;
            }
        }
    }

    #[test]
    fn one_step_split_identity() {
        let table = builtin(Builtin::BranchingPrinter);
        let a = composition_evolve(&table, 0, &[1]).unwrap().state;
        let b = composition_evolve(&table, 1, &[1]).unwrap().state;
        let direct = evolve(&table, 1).unwrap();
        assert!(a.add(&b).max_diff(&direct) <= 1e-14);
        assert!(b.is_empty());
    }

    #[test]
    fn deterministic_machine_has_one_realized_composition() {
        let table = builtin(Builtin::ClassicalEnumerator);
        let n = 6;
        let direct = evolve(&table, n).unwrap();
        let expected = composition_signature(direct.terms().keys().next().unwrap());
        let mut nonzero = 0;
        for comp in enumerate_compositions(n) {
            let trace = composition_evolve(&table, comp.nu1, &comp.lengths).unwrap();
            if !trace.state.is_empty() {
                nonzero += 1;
                assert_eq!(comp, expected);
                assert!((trace.state.norm_sqr() - 1.0).abs() < 1e-12);
                let total: usize = trace.factors.iter().map(|&(_, h)| h).sum();
                assert_eq!(total, n);
            }
        }
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn pathsum_reproduces_evolution() {
        for which in Builtin::ALL {
            let table = builtin(which);
            for n in 0..=5 {
                let residual = verify_pathsum(&table, n).unwrap();
                assert!(residual <= 1e-10, "{} at n={n}: {residual}", which.name());
            }
        }
    }

    #[test]
    fn pathsum_size_guard() {
        let table = builtin(Builtin::ClassicalEnumerator);
        assert!(matches!(
            verify_pathsum(&table, 9),
            Err(EngineError::SizeLimit { .. })
        ));
    }

    #[test]
    fn word_paths_at_zero() {
        let table = builtin(Builtin::BranchingPrinter);
        let paths = enumerate_word_paths(&table, 0).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].decomposition.t(), 1);
        assert_eq!(paths[0].decomposition.nu1(), 0);
        assert!((paths[0].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_word_path_at_nine() {
        let table = builtin(Builtin::ClassicalEnumerator);
        let paths = enumerate_word_paths(&table, 9).unwrap();
        assert_eq!(paths.len(), 1);
        let words: Vec<String> = paths[0].words().iter().map(|w| w.to_string()).collect();
        assert_eq!(words, vec!["P(PP)".to_string(), "PP".to_string()]);
    }

    #[test]
    fn branching_has_two_word_paths() {
        let table = builtin(Builtin::BranchingPrinter);
        for n in [9, 12] {
            let paths = enumerate_word_paths(&table, n).unwrap();
            assert_eq!(paths.len(), 2, "n={n}");
            for path in &paths {
                assert!((path.probability - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn path_probabilities_exhaust_the_norm() {
        for which in Builtin::ALL {
            let table = builtin(which);
            for n in [0usize, 5, 11] {
                let total: f64 = enumerate_word_paths(&table, n)
                    .unwrap()
                    .iter()
                    .map(|p| p.probability)
                    .sum();
                let norm = evolve(&table, n).unwrap().norm_sqr();
                assert!(
                    (total - norm).abs() <= 1e-10,
                    "{} n={n}: {total} vs {norm}",
                    which.name()
                );
            }
        }
    }

    #[test]
    fn word_count_parity() {
        for which in Builtin::ALL {
            let table = builtin(which);
            for n in [3usize, 7, 11] {
                for path in enumerate_word_paths(&table, n).unwrap() {
                    let t = path.decomposition.t();
                    let nu1 = path.decomposition.nu1();
                    let expected = if t % 2 == 0 {
                        t / 2
                    } else if nu1 == 0 {
                        (t - 1) / 2
                    } else {
                        t.div_ceil(2)
                    };
                    assert_eq!(path.decomposition.word_count(), expected);
                }
            }
        }
    }

    #[test]
    fn signature_classifies_support_deterministically() {
        for which in Builtin::ALL {
            let table = builtin(which);
            for n in 0..=6 {
                let direct = evolve(&table, n).unwrap();
                for config in direct.terms().keys() {
                    let sig = composition_signature(config);
                    assert_eq!(sig.total(), n);
                    let trace =
                        composition_evolve(&table, sig.nu1, &sig.lengths).unwrap();
                    let amp = trace.state.amplitude(config).unwrap();
                    let direct_amp = direct.amplitude(config).unwrap();
                    assert!(
                        (amp - direct_amp).norm() < 1e-12,
                        "{} n={n} {}",
                        which.name(),
                        config.digest()
                    );
                }
            }
        }
    }

    #[test]
    fn tree_shapes() {
        let table = builtin(Builtin::BranchingPrinter);
        let tree = path_tree(&table, 12).unwrap();
        let leaves: Vec<&TreeNode> = tree
            .nodes
            .iter()
            .filter(|n| n.leaf_probability.is_some())
            .collect();
        assert_eq!(leaves.len(), 2);
        let dot = tree.to_dot();
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches('{').count(), dot.matches('}').count());

        let trivial = path_tree(&table, 0).unwrap();
        assert_eq!(trivial.nodes.len(), 1);
        assert_eq!(trivial.nodes[0].leaf_probability, Some(1.0));
    }
}
