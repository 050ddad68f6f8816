//! Finite-horizon logic: printability, truth, validity, consistency,
//! completeness, and the self-referential incompleteness construction.
//!
//! The underlying definitions quantify over unbounded time, which no
//! finite run can decide. The engine therefore reports a three-valued
//! status per sentence, justified by the frozen-tape property: words
//! sealed behind the head never disappear, so a `Violated` verdict is
//! permanent while `HoldsSoFar`/`Open` may still flip as the horizon
//! grows. A positive sentence can never be definitively false at a finite
//! horizon; only negated sentences admit a violation witness.

use crate::evolve::{evolve, step, Configuration, EngineError, SparseState};
use crate::language::{
    classify, contained_words, is_sentence, sentence_word, Mode, SentenceForm, SentenceKind,
    Symbol, Word,
};
use crate::machine::RuleTable;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

/// Printability probabilities at or below this count as unprintable.
pub const EPS_PRINTABLE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("word {0:?} is not a sentence")]
    NotASentence(String),
    #[error("operation requires an extended-mode table")]
    NotExtendedMode,
    #[error("sentence length bound must be at least 5, got {0}")]
    MaxLenTooSmall(usize),
    #[error("placement [{a}, {b}] is not frozen at step {step}")]
    PlacementNotFrozen { a: usize, b: usize, step: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Three-valued finite-horizon status, plus the empty-domain marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthStatus {
    HoldsSoFar,
    Open,
    Violated,
    NoDomainYet,
}

impl fmt::Display for TruthStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TruthStatus::HoldsSoFar => "holds-so-far",
            TruthStatus::Open => "open",
            TruthStatus::Violated => "violated",
            TruthStatus::NoDomainYet => "no-domain-yet",
        };
        f.write_str(s)
    }
}

/// Which reading of the sentences to use.
///
/// Path-local truth restricts a sentence's claim to the paths containing
/// it; global truth lets `P(X)` assert that `X` appears on any path and
/// `~P(X)` that it appears on none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    PathLocal,
    Global,
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Semantics, String> {
        match s {
            "path-local" => Ok(Semantics::PathLocal),
            "global" => Ok(Semantics::Global),
            other => Err(format!("unknown semantics {other:?}")),
        }
    }
}

/// Per-configuration contained-word sets with probabilities.
fn containment_cache(state: &SparseState) -> Vec<(&Configuration, BTreeSet<Word>, f64)> {
    state
        .terms()
        .iter()
        .map(|(config, amp)| {
            let words = contained_words(&config.tape, config.head_pos());
            (config, words, amp.norm_sqr())
        })
        .collect()
}

/// Probability mass of configurations containing the word, sealed and
/// spacer-delimited, at the state's horizon.
pub fn printability_on(state: &SparseState, word: &Word) -> f64 {
    // adding 0.0 normalizes the empty sum's negative zero
    state
        .terms()
        .iter()
        .filter(|(config, _)| {
            contained_words(&config.tape, config.head_pos()).contains(word)
        })
        .map(|(_, amp)| amp.norm_sqr())
        .sum::<f64>()
        + 0.0
}

/// Printability of a word after `n` steps.
pub fn printability(table: &RuleTable, word: &Word, n: usize) -> Result<f64, LogicError> {
    Ok(printability_on(&evolve(table, n)?, word))
}

/// Probability mass per contained word across the whole support.
pub fn word_probabilities(state: &SparseState) -> BTreeMap<Word, f64> {
    let mut map = BTreeMap::new();
    for (config, amp) in state.terms() {
        let p = amp.norm_sqr();
        for word in contained_words(&config.tape, config.head_pos()) {
            *map.entry(word).or_insert(0.0) += p;
        }
    }
    map
}

/// Expectation of the single-placement projector: probability that sites
/// `a ..= a+len(X)+1` hold the spacer-delimited word with the trailing
/// spacer at least two sites behind the head.
pub fn placement_expectation(
    state: &SparseState,
    word: &Word,
    a: usize,
) -> Result<f64, LogicError> {
    assert!(a >= 1);
    let b = a + word.len() + 1;
    if state.step_count() < b {
        return Err(LogicError::PlacementNotFrozen {
            a,
            b,
            step: state.step_count(),
        });
    }
    let mut pattern = vec![Symbol::Zero];
    pattern.extend_from_slice(word.symbols());
    pattern.push(Symbol::Zero);
    Ok(state
        .terms()
        .iter()
        .filter(|(config, _)| (a..=b).all(|site| config.symbol_at(site) == pattern[site - a]))
        .map(|(_, amp)| amp.norm_sqr())
        .sum::<f64>()
        + 0.0)
}

fn classify_sentence(word: &Word, mode: Mode) -> Result<(SentenceKind, Word), LogicError> {
    match classify(word, mode) {
        SentenceForm::Sentence { kind, target, .. } => Ok((kind, target)),
        SentenceForm::Plain => Err(LogicError::NotASentence(word.to_string())),
    }
}

/// Finite-horizon truth status of a sentence over an evolved state, with
/// witness configuration digests.
pub fn truth_status_on(
    state: &SparseState,
    mode: Mode,
    sentence: &Word,
    semantics: Semantics,
) -> Result<(TruthStatus, Vec<String>), LogicError> {
    let (kind, target) = classify_sentence(sentence, mode)?;
    match semantics {
        Semantics::Global => {
            let p_target = printability_on(state, &target);
            let status = if kind.is_negative() {
                if p_target > EPS_PRINTABLE {
                    TruthStatus::Violated
                } else {
                    TruthStatus::HoldsSoFar
                }
            } else if p_target > EPS_PRINTABLE {
                TruthStatus::HoldsSoFar
            } else {
                TruthStatus::Open
            };
            Ok((status, Vec::new()))
        }
        Semantics::PathLocal => {
            let cache = containment_cache(state);
            let domain: Vec<_> = cache
                .iter()
                .filter(|(_, words, _)| words.contains(sentence))
                .collect();
            if domain.is_empty() {
                return Ok((TruthStatus::NoDomainYet, Vec::new()));
            }
            if kind.is_negative() {
                let violators: Vec<String> = domain
                    .iter()
                    .filter(|(_, words, _)| words.contains(&target))
                    .map(|(config, _, _)| config.digest())
                    .collect();
                if violators.is_empty() {
                    Ok((TruthStatus::HoldsSoFar, Vec::new()))
                } else {
                    Ok((TruthStatus::Violated, violators))
                }
            } else {
                let missing: Vec<String> = domain
                    .iter()
                    .filter(|(_, words, _)| !words.contains(&target))
                    .map(|(config, _, _)| config.digest())
                    .collect();
                if missing.is_empty() {
                    Ok((TruthStatus::HoldsSoFar, Vec::new()))
                } else {
                    Ok((TruthStatus::Open, missing))
                }
            }
        }
    }
}

/// Truth status after `n` steps.
pub fn truth_status(
    table: &RuleTable,
    sentence: &Word,
    n: usize,
    semantics: Semantics,
) -> Result<TruthStatus, LogicError> {
    let state = evolve(table, n)?;
    Ok(truth_status_on(&state, table.mode, sentence, semantics)?.0)
}

/// Projector-arithmetic form of the truth conditions.
///
/// Projects the state onto the configurations containing the sentence,
/// evolves `m` further steps and measures the mass on (for positive
/// sentences) or off (for negative ones) the target word. Truth at the
/// horizon corresponds to `lhs == rhs`; a strict `<` witnesses falsity
/// for negated sentences. Returns `(lhs, rhs)`.
pub fn truth_matrix_elements_from(
    state: &SparseState,
    table: &RuleTable,
    sentence: &Word,
    m: usize,
) -> Result<(f64, f64), LogicError> {
    let (kind, target) = classify_sentence(sentence, table.mode)?;
    let phi = state.project(|config| {
        contained_words(&config.tape, config.head_pos()).contains(sentence)
    });
    let rhs = phi.norm_sqr();
    let mut evolved = phi;
    for _ in 0..m {
        evolved = step(&evolved, table)?;
    }
    let target_mass = evolved
        .project(|config| contained_words(&config.tape, config.head_pos()).contains(&target))
        .norm_sqr();
    let lhs = if kind.is_negative() {
        evolved.norm_sqr() - target_mass
    } else {
        target_mass
    };
    Ok((lhs, rhs))
}

pub fn truth_matrix_elements(
    table: &RuleTable,
    sentence: &Word,
    n: usize,
    m: usize,
) -> Result<(f64, f64), LogicError> {
    let state = evolve(table, n)?;
    truth_matrix_elements_from(&state, table, sentence, m)
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// All words over the mode's non-spacer symbols up to a rendered length.
pub fn words_up_to(mode: Mode, max_len: usize) -> Vec<Word> {
    let alphabet = mode.word_alphabet();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Symbol>> = vec![Vec::new()];
    for _ in 1..=max_len {
        let mut next = Vec::new();
        for stem in &frontier {
            for &sym in alphabet {
                let mut word = stem.clone();
                word.push(sym);
                next.push(word);
            }
        }
        for syms in &next {
            out.push(Word::new(syms.clone()).expect("word alphabet excludes the spacer"));
        }
        frontier = next;
    }
    out
}

/// All sentences with rendered length at most `max_len`.
pub fn enumerate_sentences(mode: Mode, max_len: usize) -> Vec<Word> {
    words_up_to(mode, max_len)
        .into_iter()
        .filter(|w| w.len() <= max_len && is_sentence(w, mode))
        .collect()
}

/// The self-referential sentence of extended mode, `~PN(~PN)`.
pub fn liar_word() -> Word {
    "~PN(~PN)".parse().expect("liar word parses")
}

/// Its positive counterpart, `PN(~PN)`.
pub fn asserter_word() -> Word {
    "PN(~PN)".parse().expect("asserter word parses")
}

// ---------------------------------------------------------------------------
// Machine report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SentenceReport {
    pub sentence: String,
    pub status: TruthStatus,
    pub probability: f64,
    pub witnesses: Vec<String>,
}

/// Horizon-wide verdict summary for one machine.
#[derive(Debug, Clone, Serialize)]
pub struct MachineReport {
    pub horizon: usize,
    pub max_sentence_len: usize,
    pub semantics: Semantics,
    pub mode: Mode,
    pub sentences: Vec<SentenceReport>,
    pub consistent_so_far: bool,
    pub inconsistency_witnesses: Vec<String>,
    pub valid_so_far: bool,
    pub cannot_be_valid: bool,
    pub completeness_hits: usize,
    pub completeness_total: usize,
    pub completeness_coverage: f64,
    pub maximal_completeness_coverage: f64,
    pub coexisting_pairs: Vec<String>,
}

/// Evaluates the full report over an already-evolved state.
///
/// In extended mode the two self-referential sentences are always
/// evaluated, whatever the length bound, so that a violated liar blocks
/// `valid_so_far` even when it is longer than the enumerated sentences.
pub fn machine_report_on(
    state: &SparseState,
    mode: Mode,
    max_sentence_len: usize,
    semantics: Semantics,
) -> Result<MachineReport, LogicError> {
    if max_sentence_len < 5 {
        return Err(LogicError::MaxLenTooSmall(max_sentence_len));
    }
    let cache = containment_cache(state);
    let word_probs = word_probabilities(state);
    let printable = |w: &Word| word_probs.get(w).copied().unwrap_or(0.0) > EPS_PRINTABLE;

    let enumerated = enumerate_sentences(mode, max_sentence_len);
    let mut sentence_words = enumerated.clone();
    if mode == Mode::Extended {
        for extra in [liar_word(), asserter_word()] {
            if !sentence_words.contains(&extra) {
                sentence_words.push(extra);
            }
        }
    }

    let mut sentences = Vec::new();
    let mut violated_any = false;
    for word in &sentence_words {
        let (status, witnesses) = truth_status_on(state, mode, word, semantics)?;
        if status == TruthStatus::Violated {
            violated_any = true;
        }
        sentences.push(SentenceReport {
            sentence: word.to_string(),
            status,
            probability: word_probs.get(word).copied().unwrap_or(0.0),
            witnesses,
        });
    }

    // consistency: no single configuration contains a sentence and its negation
    let mut inconsistency_witnesses = Vec::new();
    for (config, words, _) in &cache {
        for word in words.iter() {
            if let SentenceForm::Sentence { kind, argument, .. } = classify(word, mode) {
                let negated_kind = match kind {
                    SentenceKind::PositiveP => Some(SentenceKind::NegativeP),
                    SentenceKind::PositivePN => Some(SentenceKind::NegativePN),
                    _ => None,
                };
                if let Some(neg) = negated_kind {
                    let negation = sentence_word(neg, &argument);
                    if words.contains(&negation) {
                        inconsistency_witnesses
                            .push(format!("{}: {} & {}", config.digest(), word, negation));
                    }
                }
            }
        }
    }
    let consistent_so_far = inconsistency_witnesses.is_empty();
    let cannot_be_valid = violated_any || !consistent_so_far;
    let valid_so_far = !cannot_be_valid;

    // completeness over non-sentence arguments
    let mut completeness_total = 0usize;
    let mut completeness_hits = 0usize;
    let mut coexisting = BTreeSet::new();
    for x in words_up_to(mode, max_sentence_len) {
        if is_sentence(&x, mode) {
            continue;
        }
        completeness_total += 1;
        let pos = sentence_word(SentenceKind::PositiveP, &x);
        let neg = sentence_word(SentenceKind::NegativeP, &x);
        let pos_printable = printable(&pos);
        let neg_printable = printable(&neg);
        if pos_printable || neg_printable {
            completeness_hits += 1;
        }
        if pos_printable && neg_printable {
            coexisting.insert(x.to_string());
        }
    }
    let completeness_coverage = if completeness_total == 0 {
        0.0
    } else {
        completeness_hits as f64 / completeness_total as f64
    };

    // maximal completeness over sentences, minus the excluded pair
    let excluded: BTreeSet<Word> = if mode == Mode::Extended {
        [liar_word(), asserter_word()].into_iter().collect()
    } else {
        BTreeSet::new()
    };
    let denominator: Vec<&Word> = enumerated
        .iter()
        .filter(|w| !excluded.contains(w))
        .collect();
    let printable_sentences = denominator.iter().filter(|w| printable(w)).count();
    let maximal_completeness_coverage = if denominator.is_empty() {
        0.0
    } else {
        printable_sentences as f64 / denominator.len() as f64
    };

    Ok(MachineReport {
        horizon: state.step_count(),
        max_sentence_len,
        semantics,
        mode,
        sentences,
        consistent_so_far,
        inconsistency_witnesses,
        valid_so_far,
        cannot_be_valid,
        completeness_hits,
        completeness_total,
        completeness_coverage,
        maximal_completeness_coverage,
        coexisting_pairs: coexisting.into_iter().collect(),
    })
}

/// Full report for a machine after `n` steps.
pub fn machine_report(
    table: &RuleTable,
    n: usize,
    max_sentence_len: usize,
    semantics: Semantics,
) -> Result<MachineReport, LogicError> {
    let state = evolve(table, n)?;
    machine_report_on(&state, table.mode, max_sentence_len, semantics)
}

impl MachineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable verdict lines.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "horizon n={} | sentence length <= {} | {:?} mode",
            self.horizon, self.max_sentence_len, self.mode
        );
        if self.cannot_be_valid {
            let _ = writeln!(out, "verdict: CANNOT BE VALID");
            for report in self.sentences.iter().filter(|s| s.status == TruthStatus::Violated) {
                let witness = report
                    .witnesses
                    .first()
                    .map(String::as_str)
                    .unwrap_or("-");
                let _ = writeln!(
                    out,
                    "  violated: {} (p={:.6}) witness {}",
                    report.sentence, report.probability, witness
                );
            }
            for witness in &self.inconsistency_witnesses {
                let _ = writeln!(out, "  inconsistent path: {witness}");
            }
        } else {
            let _ = writeln!(out, "verdict: valid-so-far");
        }
        let _ = writeln!(
            out,
            "consistent-so-far: {}",
            if self.consistent_so_far { "yes" } else { "no" }
        );
        if !self.coexisting_pairs.is_empty() && self.consistent_so_far {
            let _ = writeln!(
                out,
                "both P(X) and ~P(X) printable on disjoint paths for X in {{{}}}",
                self.coexisting_pairs.join(", ")
            );
        }
        let _ = writeln!(
            out,
            "completeness coverage: {}/{} non-sentence words (maximal-completeness {:.6})",
            self.completeness_hits, self.completeness_total, self.maximal_completeness_coverage
        );
        let printed: Vec<&SentenceReport> = self
            .sentences
            .iter()
            .filter(|s| s.probability > EPS_PRINTABLE)
            .collect();
        for report in printed {
            let _ = writeln!(
                out,
                "  {} p={:.6} {}",
                report.sentence, report.probability, report.status
            );
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Incompleteness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncompletenessOutcome {
    UnprintableSoFar,
    /// Printable and self-contradictory: every path containing the word
    /// contains it.
    ViolatedSelfContradiction,
    /// Printable, but its truth would require a word that cannot keep its
    /// meaning; false or meaningless on every containing path.
    ViolatedRequiresImpossible,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncompletenessReport {
    pub horizon: usize,
    pub liar: String,
    pub liar_probability: f64,
    pub liar_outcome: IncompletenessOutcome,
    pub liar_witnesses: Vec<String>,
    pub asserter: String,
    pub asserter_probability: f64,
    pub asserter_outcome: IncompletenessOutcome,
    pub cannot_be_valid: bool,
}

/// Evaluates the two self-referential sentences of extended mode.
pub fn incompleteness_check(
    table: &RuleTable,
    n: usize,
) -> Result<IncompletenessReport, LogicError> {
    if table.mode != Mode::Extended {
        return Err(LogicError::NotExtendedMode);
    }
    let state = evolve(table, n)?;
    let liar = liar_word();
    let asserter = asserter_word();
    let liar_probability = printability_on(&state, &liar);
    let asserter_probability = printability_on(&state, &asserter);
    let liar_witnesses: Vec<String> = state
        .terms()
        .keys()
        .filter(|config| contained_words(&config.tape, config.head_pos()).contains(&liar))
        .map(|config| config.digest())
        .collect();
    let liar_outcome = if liar_probability > EPS_PRINTABLE {
        IncompletenessOutcome::ViolatedSelfContradiction
    } else {
        IncompletenessOutcome::UnprintableSoFar
    };
    let asserter_outcome = if asserter_probability > EPS_PRINTABLE {
        IncompletenessOutcome::ViolatedRequiresImpossible
    } else {
        IncompletenessOutcome::UnprintableSoFar
    };
    Ok(IncompletenessReport {
        horizon: n,
        liar: liar.to_string(),
        liar_probability,
        liar_outcome,
        liar_witnesses,
        asserter: asserter.to_string(),
        asserter_probability,
        asserter_outcome,
        cannot_be_valid: liar_probability > EPS_PRINTABLE,
    })
}
