//! Brute-force dense oracle: explicit matrix-on-vector evolution over the
//! complete `(label, tape)` basis. Exponential in the step count and
//! guarded accordingly; used to cross-check the sparse engine.

use super::{Configuration, EngineError, SparseState};
use crate::language::Symbol;
use crate::machine::RuleTable;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Step-count guard for the dense oracle.
pub const DENSE_MAX_STEPS: usize = 6;

/// A full amplitude vector over every `(label, tape)` basis state at a
/// fixed step count. Tapes are encoded little-endian in the symbol order:
/// site 1 is the least significant digit.
#[derive(Debug, Clone)]
pub struct DenseVector {
    labels: Vec<String>,
    alphabet: Vec<Symbol>,
    sites: usize,
    data: Vec<Complex64>,
}

impl DenseVector {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn step_count(&self) -> usize {
        self.sites - 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn tape_space(&self) -> usize {
        self.alphabet.len().pow(self.sites as u32)
    }

    fn encode(&self, label_idx: usize, tape: &[Symbol]) -> usize {
        let base = self.alphabet.len();
        let mut tape_idx = 0usize;
        for (site, sym) in tape.iter().enumerate().rev() {
            tape_idx = tape_idx * base + sym.index();
            let _ = site;
        }
        label_idx * self.tape_space() + tape_idx
    }

    fn decode(&self, idx: usize) -> (usize, Vec<Symbol>) {
        let base = self.alphabet.len();
        let label_idx = idx / self.tape_space();
        let mut tape_idx = idx % self.tape_space();
        let mut tape = Vec::with_capacity(self.sites);
        for _ in 0..self.sites {
            tape.push(Symbol::from_index(tape_idx % base).unwrap());
            tape_idx /= base;
        }
        (label_idx, tape)
    }

    /// Amplitude of a configuration in the dense vector.
    pub fn amplitude_of(&self, config: &Configuration) -> Result<Complex64, EngineError> {
        if config.tape.len() != self.sites {
            return Err(EngineError::StepMismatch {
                config_step: config.step_count(),
                state_step: self.step_count(),
            });
        }
        let label_idx = self
            .labels
            .iter()
            .position(|l| *l == config.label)
            .expect("configuration label belongs to the table");
        Ok(self.data[self.encode(label_idx, &config.tape)])
    }

    /// Converts to a sparse state, keeping amplitudes above `tol`.
    pub fn to_sparse(&self, tol: f64) -> SparseState {
        let mut terms = BTreeMap::new();
        for (idx, amp) in self.data.iter().enumerate() {
            if amp.norm() > tol {
                let (label_idx, tape) = self.decode(idx);
                terms.insert(Configuration::new(&self.labels[label_idx], tape), *amp);
            }
        }
        SparseState::from_terms(self.step_count(), terms)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() + 0.0
    }
}

/// Evolves `n` steps by explicit application of the step matrix over the
/// complete basis. Errors with `SizeLimit` for `n > 6`.
pub fn dense_oracle_evolve(table: &RuleTable, n: usize) -> Result<DenseVector, EngineError> {
    if n > DENSE_MAX_STEPS {
        return Err(EngineError::SizeLimit {
            requested: n,
            limit: DENSE_MAX_STEPS,
        });
    }
    let alphabet = table.mode.alphabet().to_vec();
    let base = alphabet.len();
    let labels = table.head_states.clone();
    let label_count = labels.len();

    // step 0: one site, all spacers, initial label
    let mut vec = DenseVector {
        labels: labels.clone(),
        alphabet: alphabet.clone(),
        sites: 1,
        data: vec![Complex64::new(0.0, 0.0); label_count * base],
    };
    let init_label = labels
        .iter()
        .position(|l| *l == table.initial)
        .expect("initial label present");
    let init_idx = vec.encode(init_label, &[Symbol::Zero]);
    vec.data[init_idx] = Complex64::new(1.0, 0.0);

    for _ in 0..n {
        let sites = vec.sites;
        let mut next = DenseVector {
            labels: labels.clone(),
            alphabet: alphabet.clone(),
            sites: sites + 1,
            data: vec![Complex64::new(0.0, 0.0); label_count * base.pow(sites as u32 + 1)],
        };
        for idx in 0..vec.data.len() {
            let amp = vec.data[idx];
            if amp.norm() == 0.0 {
                continue;
            }
            let (label_idx, tape) = vec.decode(idx);
            let prev = *tape.last().unwrap();
            let label = &labels[label_idx];
            let outputs = table.outputs(label, Symbol::Zero, prev).ok_or_else(|| {
                EngineError::MissingRule {
                    label: label.clone(),
                    cur: Symbol::Zero.to_char(),
                    prev: prev.to_char(),
                }
            })?;
            for out in outputs {
                let mut new_tape = tape.clone();
                *new_tape.last_mut().unwrap() = out.prev;
                new_tape.push(out.cur);
                let out_label = labels
                    .iter()
                    .position(|l| *l == out.label)
                    .expect("output label present");
                let out_idx = next.encode(out_label, &new_tape);
                next.data[out_idx] += amp * out.amp;
            }
        }
        vec = next;
    }
    Ok(vec)
}
