//! Exact sparse evolution of the machine state.
//!
//! The head starts on site 2 with every lattice site in the spacer state.
//! It moves right one site per step, so after `n` steps it sits on site
//! `n + 2` and can have written only sites `1..=n+1`. A configuration
//! therefore stores just the label and the tape over sites `1..=n+1`; the
//! head position is derived, and sites at least two behind the head are
//! frozen for the rest of the evolution.

pub mod dense;

use crate::language::{render_tape, Symbol};
use crate::machine::RuleTable;
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("no rule for input ({label}, {cur}, {prev})")]
    MissingRule { label: String, cur: char, prev: char },
    #[error("table is not deterministic at input ({label}, {cur}, {prev})")]
    NotDeterministic { label: String, cur: char, prev: char },
    #[error("requested size exceeds the {limit}-step guard (got {requested})")]
    SizeLimit { requested: usize, limit: usize },
    #[error("configuration is at step {config_step} but the state is at step {state_step}")]
    StepMismatch {
        config_step: usize,
        state_step: usize,
    },
}

/// One basis term: head label plus the tape over sites `1..=n+1`.
///
/// The step count `n` is the tape length minus one and the head sits on
/// site `n + 2`; all later sites are implicitly in the spacer state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub label: String,
    pub tape: Vec<Symbol>,
}

impl Configuration {
    pub fn new(label: &str, tape: Vec<Symbol>) -> Configuration {
        assert!(!tape.is_empty(), "configuration tape covers site 1 at least");
        Configuration {
            label: label.to_string(),
            tape,
        }
    }

    pub fn step_count(&self) -> usize {
        self.tape.len() - 1
    }

    pub fn head_pos(&self) -> usize {
        self.tape.len() + 1
    }

    /// Symbol at a 1-based site; sites beyond the stored tape are spacers.
    pub fn symbol_at(&self, site: usize) -> Symbol {
        assert!(site >= 1);
        self.tape.get(site - 1).copied().unwrap_or(Symbol::Zero)
    }

    pub fn digest(&self) -> String {
        format!("{}@{}", self.label, render_tape(&self.tape))
    }
}

// Canonical order: lexicographic tape, then label. State dumps and all
// deterministic outputs rely on this.
impl Ord for Configuration {
    fn cmp(&self, other: &Configuration) -> Ordering {
        self.tape
            .cmp(&other.tape)
            .then_with(|| self.label.cmp(&other.label))
    }
}

impl PartialOrd for Configuration {
    fn partial_cmp(&self, other: &Configuration) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A finite superposition of configurations sharing one step count.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    step: usize,
    terms: BTreeMap<Configuration, Complex64>,
}

impl SparseState {
    pub fn from_terms(step: usize, terms: BTreeMap<Configuration, Complex64>) -> SparseState {
        debug_assert!(terms.keys().all(|c| c.step_count() == step));
        SparseState { step, terms }
    }

    /// The empty state (everything annihilated) at a given step count.
    pub fn empty(step: usize) -> SparseState {
        SparseState {
            step,
            terms: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn terms(&self) -> &BTreeMap<Configuration, Complex64> {
        &self.terms
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        // adding 0.0 normalizes the empty sum's negative zero
        self.terms.values().map(|a| a.norm_sqr()).sum::<f64>() + 0.0
    }

    /// Stored amplitude of a configuration, or exact zero.
    pub fn amplitude(&self, config: &Configuration) -> Result<Complex64, EngineError> {
        if config.step_count() != self.step {
            return Err(EngineError::StepMismatch {
                config_step: config.step_count(),
                state_step: self.step,
            });
        }
        Ok(self
            .terms
            .get(config)
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0)))
    }

    /// Termwise sum of two states at the same step count.
    pub fn add(&self, other: &SparseState) -> SparseState {
        assert_eq!(self.step, other.step, "states must share a step count");
        let mut terms = self.terms.clone();
        for (config, amp) in &other.terms {
            *terms
                .entry(config.clone())
                .or_insert_with(|| Complex64::new(0.0, 0.0)) += *amp;
        }
        SparseState {
            step: self.step,
            terms,
        }
    }

    /// Largest termwise amplitude difference between two states.
    pub fn max_diff(&self, other: &SparseState) -> f64 {
        let mut max = 0.0f64;
        for (config, amp) in &self.terms {
            let other_amp = other
                .terms
                .get(config)
                .copied()
                .unwrap_or_else(|| Complex64::new(0.0, 0.0));
            max = max.max((amp - other_amp).norm());
        }
        for (config, amp) in &other.terms {
            if !self.terms.contains_key(config) {
                max = max.max(amp.norm());
            }
        }
        max
    }

    /// Keeps only terms satisfying the predicate (a diagonal projection).
    pub fn project<F: Fn(&Configuration) -> bool>(&self, keep: F) -> SparseState {
        SparseState {
            step: self.step,
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| keep(c))
                .map(|(c, a)| (c.clone(), *a))
                .collect(),
        }
    }

    /// Canonical dump: one `amp_re amp_im label tape` line per term,
    /// ordered by tape then label.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (config, amp) in &self.terms {
            let re = if amp.re == 0.0 { 0.0 } else { amp.re };
            let im = if amp.im == 0.0 { 0.0 } else { amp.im };
            out.push_str(&format!(
                "{} {} {} {}\n",
                re,
                im,
                config.label,
                render_tape(&config.tape)
            ));
        }
        out
    }
}

/// The time-zero state: initial label, head on site 2, all sites spacers.
pub fn initial_state(table: &RuleTable) -> SparseState {
    let mut terms = BTreeMap::new();
    terms.insert(
        Configuration::new(&table.initial, vec![Symbol::Zero]),
        Complex64::new(1.0, 0.0),
    );
    SparseState { step: 0, terms }
}

/// Expands one term through the rule table into an accumulator.
///
/// The site under the head has never been visited, so it reads as a
/// spacer; the rule rewrites the site behind the head (freezing it) and
/// deposits the new in-flight symbol under the head.
pub(crate) fn expand_term(
    config: &Configuration,
    amp: Complex64,
    table: &RuleTable,
    acc: &mut BTreeMap<Configuration, Complex64>,
) -> Result<(), EngineError> {
    let cur = Symbol::Zero;
    let prev = *config.tape.last().expect("tape is nonempty");
    let outputs =
        table
            .outputs(&config.label, cur, prev)
            .ok_or_else(|| EngineError::MissingRule {
                label: config.label.clone(),
                cur: cur.to_char(),
                prev: prev.to_char(),
            })?;
    for out in outputs {
        let mut tape = config.tape.clone();
        *tape.last_mut().unwrap() = out.prev;
        tape.push(out.cur);
        let successor = Configuration::new(&out.label, tape);
        *acc.entry(successor)
            .or_insert_with(|| Complex64::new(0.0, 0.0)) += amp * out.amp;
    }
    Ok(())
}

/// Applies the step operator once: merge duplicate successors first, then
/// drop amplitudes at or below the table's pruning threshold.
pub fn step(state: &SparseState, table: &RuleTable) -> Result<SparseState, EngineError> {
    let mut acc = BTreeMap::new();
    for (config, amp) in &state.terms {
        expand_term(config, *amp, table, &mut acc)?;
    }
    acc.retain(|_, a| a.norm() > table.eps_amp);
    Ok(SparseState {
        step: state.step + 1,
        terms: acc,
    })
}

/// `n`-fold step from the initial state.
pub fn evolve(table: &RuleTable, n: usize) -> Result<SparseState, EngineError> {
    let mut state = initial_state(table);
    for _ in 0..n {
        state = step(&state, table)?;
    }
    Ok(state)
}

/// Runs a deterministic table as a classical automaton and returns the
/// length-`n+1` tape. Amplitudes never enter; this is an independent
/// check on the quantum engine for single-path machines.
pub fn classical_emulate(table: &RuleTable, n: usize) -> Result<Vec<Symbol>, EngineError> {
    let mut label = table.initial.clone();
    let mut tape = vec![Symbol::Zero];
    for _ in 0..n {
        let prev = *tape.last().unwrap();
        let outputs = table.outputs(&label, Symbol::Zero, prev).ok_or_else(|| {
            EngineError::MissingRule {
                label: label.clone(),
                cur: Symbol::Zero.to_char(),
                prev: prev.to_char(),
            }
        })?;
        if outputs.len() != 1 || (outputs[0].amp.norm() - 1.0).abs() > 1e-9 {
            return Err(EngineError::NotDeterministic {
                label: label.clone(),
                cur: Symbol::Zero.to_char(),
                prev: prev.to_char(),
            });
        }
        let out = &outputs[0];
        *tape.last_mut().unwrap() = out.prev;
        tape.push(out.cur);
        label = out.label.clone();
    }
    Ok(tape)
}
