//! Step-operator rule tables: validation, builtins, random machines, I/O.
//!
//! The step operator acts locally: with the head on site `j` it reads the
//! symbols at `j` and `j-1`, rewrites both, moves to `j+1` and changes its
//! internal label. A rule table lists every nonzero matrix element as
//! `(label, cur, prev) -> [(label', cur', prev', amplitude), ...]`, one
//! table for all positions. Tables are expected to be *total*: inputs
//! absent from the table are treated as annihilated and flagged by
//! [`RuleTable::validate`] as isometry defects.

use crate::language::{Mode, Symbol};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Amplitudes with magnitude at or below this are treated as zero.
pub const DEFAULT_EPS_AMP: f64 = 1e-12;

/// Column-orthonormality defect above which a table is not isometric.
pub const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error("unknown builtin machine {0:?}")]
    UnknownName(String),
    #[error("bad machine spec: {0}")]
    BadSpec(String),
}

/// A list of rules keyed by their input triple.
pub type RuleList = Vec<(RuleKey, Vec<RuleOutput>)>;

/// Input side of a rule: head label, symbol under the head, symbol behind it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleKey {
    pub label: String,
    pub cur: Symbol,
    pub prev: Symbol,
}

impl RuleKey {
    pub fn new(label: &str, cur: Symbol, prev: Symbol) -> RuleKey {
        RuleKey {
            label: label.to_string(),
            cur,
            prev,
        }
    }
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.label,
            self.cur.to_char(),
            self.prev.to_char()
        )
    }
}

/// Output side of a rule with its amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleOutput {
    pub label: String,
    pub cur: Symbol,
    pub prev: Symbol,
    pub amp: Complex64,
}

impl RuleOutput {
    pub fn new(label: &str, cur: Symbol, prev: Symbol, amp: Complex64) -> RuleOutput {
        RuleOutput {
            label: label.to_string(),
            cur,
            prev,
            amp,
        }
    }

    fn triple(&self) -> (String, Symbol, Symbol) {
        (self.label.clone(), self.cur, self.prev)
    }
}

/// The step operator as a finite table of local nonzero matrix elements.
#[derive(Debug, Clone)]
pub struct RuleTable {
    pub mode: Mode,
    pub head_states: Vec<String>,
    pub initial: String,
    entries: BTreeMap<RuleKey, Vec<RuleOutput>>,
    /// Pruning threshold for amplitudes, overridable per table.
    pub eps_amp: f64,
}

/// Column-orthonormality report for a rule table.
#[derive(Debug, Clone)]
pub struct IsometryReport {
    pub is_isometric: bool,
    pub max_column_defect: f64,
    pub offending_pairs: Vec<(RuleKey, RuleKey)>,
}

impl RuleTable {
    pub fn from_rules(
        mode: Mode,
        head_states: Vec<String>,
        initial: String,
        rules: Vec<(RuleKey, Vec<RuleOutput>)>,
    ) -> Result<RuleTable, MachineError> {
        let label_set: BTreeSet<&String> = head_states.iter().collect();
        if label_set.len() != head_states.len() {
            return Err(MachineError::MalformedTable(
                "duplicate head state labels".into(),
            ));
        }
        if !label_set.contains(&initial) {
            return Err(MachineError::MalformedTable(format!(
                "initial label {initial:?} not in head_states"
            )));
        }
        let mut entries = BTreeMap::new();
        for (key, outputs) in rules {
            if !label_set.contains(&key.label) {
                return Err(MachineError::MalformedTable(format!(
                    "rule input references unknown label {:?}",
                    key.label
                )));
            }
            if !key.cur.in_mode(mode) || !key.prev.in_mode(mode) {
                return Err(MachineError::MalformedTable(format!(
                    "rule input {key} uses a symbol outside the {mode:?} alphabet"
                )));
            }
            for out in &outputs {
                if !label_set.contains(&out.label) {
                    return Err(MachineError::MalformedTable(format!(
                        "rule output references unknown label {:?}",
                        out.label
                    )));
                }
                if !out.cur.in_mode(mode) || !out.prev.in_mode(mode) {
                    return Err(MachineError::MalformedTable(format!(
                        "rule output for {key} uses a symbol outside the {mode:?} alphabet"
                    )));
                }
                if out.amp.norm() <= DEFAULT_EPS_AMP {
                    return Err(MachineError::MalformedTable(format!(
                        "rule output for {key} has amplitude below {DEFAULT_EPS_AMP}"
                    )));
                }
            }
            if entries.insert(key.clone(), outputs).is_some() {
                return Err(MachineError::MalformedTable(format!(
                    "duplicate rule input {key}"
                )));
            }
        }
        Ok(RuleTable {
            mode,
            head_states,
            initial,
            entries,
            eps_amp: DEFAULT_EPS_AMP,
        })
    }

    pub fn outputs(&self, label: &str, cur: Symbol, prev: Symbol) -> Option<&[RuleOutput]> {
        self.entries
            .get(&RuleKey::new(label, cur, prev))
            .map(|v| v.as_slice())
    }

    pub fn entries(&self) -> &BTreeMap<RuleKey, Vec<RuleOutput>> {
        &self.entries
    }

    /// All inputs of the table's matrix in canonical order.
    pub fn input_space(&self) -> Vec<RuleKey> {
        let mut keys = Vec::new();
        for label in &self.head_states {
            for &cur in self.mode.alphabet() {
                for &prev in self.mode.alphabet() {
                    keys.push(RuleKey::new(label, cur, prev));
                }
            }
        }
        keys
    }

    /// Every input has exactly one output of unit magnitude.
    pub fn is_deterministic(&self) -> bool {
        self.entries
            .values()
            .all(|outs| outs.len() == 1 && (outs[0].amp.norm() - 1.0).abs() <= 1e-9)
    }

    /// Checks that the columns of the step matrix are orthonormal.
    ///
    /// The matrix maps `(label, cur, prev)` inputs to `(label', cur',
    /// prev')` outputs; its dimension is `|labels| * |alphabet|^2`. Inputs
    /// with no rule give zero columns and are reported as defects.
    pub fn validate(&self) -> Result<IsometryReport, MachineError> {
        let label_set: BTreeSet<&String> = self.head_states.iter().collect();
        for (key, outputs) in &self.entries {
            if !label_set.contains(&key.label) {
                return Err(MachineError::MalformedTable(format!(
                    "dangling input label {:?}",
                    key.label
                )));
            }
            for out in outputs {
                if !label_set.contains(&out.label) {
                    return Err(MachineError::MalformedTable(format!(
                        "dangling output label {:?}",
                        out.label
                    )));
                }
            }
        }

        let inputs = self.input_space();
        // bucket column entries by output triple so only overlapping
        // columns are compared
        let mut buckets: HashMap<(String, Symbol, Symbol), Vec<(usize, Complex64)>> =
            HashMap::new();
        for (idx, key) in inputs.iter().enumerate() {
            if let Some(outs) = self.entries.get(key) {
                for out in outs {
                    buckets
                        .entry(out.triple())
                        .or_default()
                        .push((idx, out.amp));
                }
            }
        }
        let mut gram: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for entries in buckets.values() {
            for (pos, &(i, a)) in entries.iter().enumerate() {
                for &(j, b) in &entries[pos..] {
                    let (lo, hi, x, y) = if i <= j { (i, j, a, b) } else { (j, i, b, a) };
                    *gram
                        .entry((lo, hi))
                        .or_insert_with(|| Complex64::new(0.0, 0.0)) += x.conj() * y;
                }
            }
        }
        let mut max_defect: f64 = 0.0;
        let mut offending = Vec::new();
        for (idx, key) in inputs.iter().enumerate() {
            let norm = gram
                .get(&(idx, idx))
                .copied()
                .unwrap_or_else(|| Complex64::new(0.0, 0.0));
            let defect = (norm - Complex64::new(1.0, 0.0)).norm();
            if defect > ISOMETRY_TOL {
                offending.push((key.clone(), key.clone()));
            }
            max_defect = max_defect.max(defect);
        }
        for (&(i, j), &val) in &gram {
            if i == j {
                continue;
            }
            let defect = val.norm();
            if defect > ISOMETRY_TOL {
                offending.push((inputs[i].clone(), inputs[j].clone()));
            }
            max_defect = max_defect.max(defect);
        }
        Ok(IsometryReport {
            is_isometric: max_defect <= ISOMETRY_TOL,
            max_column_defect: max_defect,
            offending_pairs: offending,
        })
    }
}

// ---------------------------------------------------------------------------
// JSON machine-spec format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MachineSpecJson {
    mode: Mode,
    head_states: Vec<String>,
    initial: String,
    rules: Vec<RuleJson>,
}

#[derive(Serialize, Deserialize)]
struct RuleJson {
    l: String,
    cur: String,
    prev: String,
    out: Vec<OutJson>,
}

#[derive(Serialize, Deserialize)]
struct OutJson {
    l: String,
    cur: String,
    prev: String,
    amp: [f64; 2],
}

fn sym_from_field(s: &str) -> Result<Symbol, MachineError> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => {
            Symbol::from_char(c).map_err(|e| MachineError::BadSpec(e.to_string()))
        }
        _ => Err(MachineError::BadSpec(format!(
            "symbol field must be a single character, got {s:?}"
        ))),
    }
}

impl RuleTable {
    pub fn from_json(text: &str) -> Result<RuleTable, MachineError> {
        let spec: MachineSpecJson =
            serde_json::from_str(text).map_err(|e| MachineError::BadSpec(e.to_string()))?;
        let mut rules = Vec::new();
        for rule in spec.rules {
            let key = RuleKey {
                label: rule.l,
                cur: sym_from_field(&rule.cur)?,
                prev: sym_from_field(&rule.prev)?,
            };
            let mut outs = Vec::new();
            for o in rule.out {
                outs.push(RuleOutput {
                    label: o.l,
                    cur: sym_from_field(&o.cur)?,
                    prev: sym_from_field(&o.prev)?,
                    amp: Complex64::new(o.amp[0], o.amp[1]),
                });
            }
            rules.push((key, outs));
        }
        RuleTable::from_rules(spec.mode, spec.head_states, spec.initial, rules)
    }

    pub fn to_json(&self) -> String {
        let rules = self
            .entries
            .iter()
            .map(|(key, outs)| RuleJson {
                l: key.label.clone(),
                cur: key.cur.to_char().to_string(),
                prev: key.prev.to_char().to_string(),
                out: outs
                    .iter()
                    .map(|o| OutJson {
                        l: o.label.clone(),
                        cur: o.cur.to_char().to_string(),
                        prev: o.prev.to_char().to_string(),
                        amp: [o.amp.re, o.amp.im],
                    })
                    .collect(),
            })
            .collect();
        let spec = MachineSpecJson {
            mode: self.mode,
            head_states: self.head_states.clone(),
            initial: self.initial.clone(),
            rules,
        };
        serde_json::to_string_pretty(&spec).expect("machine spec serializes")
    }
}

// ---------------------------------------------------------------------------
// Table construction helpers
// ---------------------------------------------------------------------------

/// Completes a partial rule map to a total isometric table by pairing every
/// unmapped input with an unhit output, injectively, in canonical order.
fn complete_to_permutation(
    mode: Mode,
    head_states: Vec<String>,
    initial: &str,
    core: Vec<(RuleKey, Vec<RuleOutput>)>,
) -> RuleTable {
    let mut used_inputs: BTreeSet<RuleKey> = BTreeSet::new();
    let mut hit_outputs: BTreeSet<(String, Symbol, Symbol)> = BTreeSet::new();
    for (key, outs) in &core {
        used_inputs.insert(key.clone());
        for out in outs {
            hit_outputs.insert(out.triple());
        }
    }
    let mut rules = core;
    let mut free_outputs = Vec::new();
    for label in &head_states {
        for &cur in mode.alphabet() {
            for &prev in mode.alphabet() {
                if !hit_outputs.contains(&(label.clone(), cur, prev)) {
                    free_outputs.push((label.clone(), cur, prev));
                }
            }
        }
    }
    let mut next_free = free_outputs.into_iter();
    for label in head_states.clone() {
        for &cur in mode.alphabet() {
            for &prev in mode.alphabet() {
                let key = RuleKey::new(&label, cur, prev);
                if used_inputs.contains(&key) {
                    continue;
                }
                let (l, c, p) = next_free.next().expect("free outputs cover free inputs");
                rules.push((key, vec![RuleOutput::new(&l, c, p, Complex64::new(1.0, 0.0))]));
            }
        }
    }
    RuleTable::from_rules(mode, head_states, initial.to_string(), rules)
        .expect("generated table is well-formed")
}

/// Rebuilds a table over the extended alphabet, completing the new
/// `N`-involving inputs injectively. Reachable behavior is unchanged.
pub fn extend_alphabet(table: &RuleTable) -> RuleTable {
    let core = table
        .entries
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let mut extended = complete_to_permutation(
        Mode::Extended,
        table.head_states.clone(),
        &table.initial,
        core,
    );
    extended.eps_amp = table.eps_amp;
    extended
}

/// Deterministic printer rules emitting `chain[1..]` once and then
/// `cycle` forever. `chain[0]` is the symbol the caller's entry rule
/// already emits; the returned entry label continues from position 1.
///
/// The chain/cycle join is collision free as long as the last chain
/// symbol differs from the symbol the cycle emits when wrapping around,
/// which the builtin tapes are chosen to guarantee.
fn printer_rules(
    prefix: &str,
    chain: &[Symbol],
    cycle: &[Symbol],
) -> (Vec<String>, String, RuleList) {
    let one = Complex64::new(1.0, 0.0);
    let chain_labels: Vec<String> = (1..chain.len()).map(|k| format!("{prefix}c{k}")).collect();
    let cycle_labels: Vec<String> = (0..cycle.len()).map(|k| format!("{prefix}l{k}")).collect();
    let mut labels = chain_labels.clone();
    labels.extend(cycle_labels.clone());
    let entry = chain_labels
        .first()
        .unwrap_or(&cycle_labels[0])
        .clone();
    let mut rules = Vec::new();
    for k in 1..chain.len() {
        let next = if k + 1 < chain.len() {
            chain_labels[k].clone()
        } else {
            cycle_labels[0].clone()
        };
        rules.push((
            RuleKey::new(&chain_labels[k - 1], Symbol::Zero, Symbol::Zero),
            vec![RuleOutput::new(&next, Symbol::Zero, chain[k], one)],
        ));
    }
    for k in 0..cycle.len() {
        let next = cycle_labels[(k + 1) % cycle.len()].clone();
        rules.push((
            RuleKey::new(&cycle_labels[k], Symbol::Zero, Symbol::Zero),
            vec![RuleOutput::new(&next, Symbol::Zero, cycle[k], one)],
        ));
    }
    (labels, entry, rules)
}

/// Purely periodic deterministic printer cycling through the initial label.
fn periodic_machine(mode: Mode, pattern: &[Symbol]) -> RuleTable {
    let one = Complex64::new(1.0, 0.0);
    let mut labels = vec!["i".to_string()];
    labels.extend((1..pattern.len()).map(|k| format!("q{k}")));
    let mut rules = Vec::new();
    for k in 0..pattern.len() {
        let next = labels[(k + 1) % pattern.len()].clone();
        rules.push((
            RuleKey::new(&labels[k], Symbol::Zero, Symbol::Zero),
            vec![RuleOutput::new(&next, Symbol::Zero, pattern[k], one)],
        ));
    }
    complete_to_permutation(mode, labels, "i", rules)
}

/// The four example machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// Prints the periodic tape `0P(PP)0PP` forever: valid, consistent,
    /// incomplete.
    ClassicalEnumerator,
    /// One amplitude-1/sqrt(2) branch at step 1. Branch A prints
    /// `0P(PP)0PP` then repeats it after one extra spacer; branch B
    /// prints `0~P(PP)` once, then spacers forever, and never prints a
    /// delimited `PP`.
    BranchingPrinter,
    /// Prints the periodic tape `0~P(PP)0PP`, putting `~P(PP)` and a
    /// delimited `PP` on the same path.
    InvalidPrinter,
    /// Extended mode; prints the periodic tape `0~PN(~PN)`, realizing the
    /// self-referential sentence.
    IncompleteLiar,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::ClassicalEnumerator,
        Builtin::BranchingPrinter,
        Builtin::InvalidPrinter,
        Builtin::IncompleteLiar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::ClassicalEnumerator => "classical-enumerator",
            Builtin::BranchingPrinter => "branching-printer",
            Builtin::InvalidPrinter => "invalid-printer",
            Builtin::IncompleteLiar => "incomplete-liar",
        }
    }
}

impl FromStr for Builtin {
    type Err = MachineError;

    fn from_str(s: &str) -> Result<Builtin, MachineError> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| MachineError::UnknownName(s.to_string()))
    }
}

fn syms(text: &str) -> Vec<Symbol> {
    crate::language::parse_tape(text).expect("builtin patterns are well-formed")
}

/// Constructs one of the builtin machines; the result is always isometric.
pub fn builtin(which: Builtin) -> RuleTable {
    match which {
        Builtin::ClassicalEnumerator => periodic_machine(Mode::Base, &syms("0P(PP)0PP")),
        Builtin::InvalidPrinter => periodic_machine(Mode::Base, &syms("0~P(PP)0PP")),
        Builtin::IncompleteLiar => periodic_machine(Mode::Extended, &syms("0~PN(~PN)")),
        Builtin::BranchingPrinter => {
            let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
            // Branch A tape: "0P(PP)0PP" plus one extra spacer, then
            // periodic "0P(PP)0PP". Branch B tape: "0~P(PP)" once, then
            // spacers forever. The chain/cycle joins are collision free
            // because the last chain symbol differs from the symbol the
            // cycle emits when wrapping. The first symbol of each chain
            // (site 1, a spacer) is emitted by the branching rule itself.
            let (labels_a, entry_a, rules_a) =
                printer_rules("a", &syms("0P(PP)0PP0"), &syms("0P(PP)0PP"));
            let (labels_b, entry_b, rules_b) = printer_rules("b", &syms("0~P(PP)"), &syms("0"));
            let mut labels = vec!["i".to_string()];
            labels.extend(labels_a);
            labels.extend(labels_b);
            let mut rules = vec![
                (
                    RuleKey::new("i", Symbol::Zero, Symbol::Zero),
                    vec![
                        RuleOutput::new(&entry_a, Symbol::Zero, Symbol::Zero, r),
                        RuleOutput::new(&entry_b, Symbol::Zero, Symbol::Zero, r),
                    ],
                ),
                // orthogonal partner column so the branch block is unitary
                (
                    RuleKey::new("i", Symbol::Zero, Symbol::P),
                    vec![
                        RuleOutput::new(&entry_a, Symbol::Zero, Symbol::Zero, r),
                        RuleOutput::new(&entry_b, Symbol::Zero, Symbol::Zero, -r),
                    ],
                ),
            ];
            rules.extend(rules_a);
            rules.extend(rules_b);
            complete_to_permutation(Mode::Base, labels, "i", rules)
        }
    }
}

pub fn builtin_by_name(name: &str) -> Result<RuleTable, MachineError> {
    name.parse::<Builtin>().map(builtin)
}

/// Random isometric table: a seeded permutation of the input space with
/// one Hadamard-style branching block wired to the first-step input.
pub fn random_isometric(seed: u64) -> RuleTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_labels = rng.gen_range(2..=4usize);
    let mut labels = vec!["i".to_string()];
    labels.extend((1..num_labels).map(|k| format!("q{k}")));
    let mode = Mode::Base;
    let mut inputs = Vec::new();
    for label in &labels {
        for &cur in mode.alphabet() {
            for &prev in mode.alphabet() {
                inputs.push(RuleKey::new(label, cur, prev));
            }
        }
    }
    let mut outputs: Vec<(String, Symbol, Symbol)> = inputs
        .iter()
        .map(|k| (k.label.clone(), k.cur, k.prev))
        .collect();
    outputs.shuffle(&mut rng);

    let start = inputs
        .iter()
        .position(|k| k.label == "i" && k.cur == Symbol::Zero && k.prev == Symbol::Zero)
        .unwrap();
    let mut partner = rng.gen_range(0..inputs.len());
    while partner == start {
        partner = rng.gen_range(0..inputs.len());
    }
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut rules = Vec::new();
    for (idx, key) in inputs.iter().enumerate() {
        let (l, c, p) = outputs[idx].clone();
        if idx == start || idx == partner {
            let (l1, c1, p1) = outputs[start].clone();
            let (l2, c2, p2) = outputs[partner].clone();
            let sign = if idx == start { r } else { -r };
            rules.push((
                key.clone(),
                vec![
                    RuleOutput::new(&l1, c1, p1, r),
                    RuleOutput::new(&l2, c2, p2, sign),
                ],
            ));
        } else {
            rules.push((
                key.clone(),
                vec![RuleOutput::new(&l, c, p, Complex64::new(1.0, 0.0))],
            ));
        }
    }
    RuleTable::from_rules(mode, labels, "i".to_string(), rules)
        .expect("random isometric table is well-formed")
}

/// Random total deterministic table; not isometric in general.
pub fn random_deterministic(seed: u64) -> RuleTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_labels = rng.gen_range(2..=4usize);
    let mut labels = vec!["i".to_string()];
    labels.extend((1..num_labels).map(|k| format!("q{k}")));
    let mode = Mode::Base;
    let alphabet = mode.alphabet();
    let mut rules = Vec::new();
    for label in &labels {
        for &cur in alphabet {
            for &prev in alphabet {
                let l = labels[rng.gen_range(0..labels.len())].clone();
                let c = alphabet[rng.gen_range(0..alphabet.len())];
                let p = alphabet[rng.gen_range(0..alphabet.len())];
                rules.push((
                    RuleKey::new(label, cur, prev),
                    vec![RuleOutput::new(&l, c, p, Complex64::new(1.0, 0.0))],
                ));
            }
        }
    }
    RuleTable::from_rules(mode, labels, "i".to_string(), rules)
        .expect("random deterministic table is well-formed")
}
