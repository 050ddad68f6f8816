//! Observer basis changes: rotated projectors, the transformed dynamics,
//! and the joint amplitudes that witness basis dependence of validity.
//!
//! A single-site unitary `u` defines the observer's reading basis. The
//! corresponding state transform applies `u` around the head: either at
//! the head site and the site behind it (the local variant) or at every
//! site up to the head (the cumulative variant). The transformed dynamics
//! `V` conjugates the step operator by that transform; iterating the
//! conjugated step from the transformed initial state must agree with
//! transforming the untransformed evolution, and the cumulative variant
//! carries every verdict over exactly.

use crate::evolve::{evolve, initial_state, step, Configuration, EngineError, SparseState};
use crate::language::{sentence_word, Mode, SentenceKind, Symbol, Word};
use crate::logic::{machine_report_on, LogicError, MachineReport, Semantics, TruthStatus};
use crate::machine::RuleTable;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RotateError {
    #[error("matrix is not unitary (defect {0})")]
    NotUnitary(f64),
    #[error("bad unitary spec: {0}")]
    BadMatrix(String),
    #[error("unknown unitary preset {0:?}")]
    UnknownPreset(String),
    #[error("unitary alphabet does not match the table mode")]
    ModeMismatch,
    #[error("placement [{a}, {b}] is outside the frozen region at step {step}")]
    PlacementOutOfFrozenRegion { a: usize, b: usize, step: usize },
    #[error("interval [{a}, {b}] is not frozen under the given n, m")]
    IntervalNotFrozen { a: usize, b: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// A site-independent unitary on the symbol space of one lattice site.
#[derive(Debug, Clone)]
pub struct SiteUnitary {
    mode: Mode,
    dim: usize,
    /// Row-major `dim x dim`.
    mat: Vec<Complex64>,
}

impl SiteUnitary {
    fn from_matrix(mode: Mode, mat: Vec<Complex64>) -> Result<SiteUnitary, RotateError> {
        let dim = mode.alphabet_size();
        if mat.len() != dim * dim {
            return Err(RotateError::BadMatrix(format!(
                "expected a {dim}x{dim} matrix, got {} entries",
                mat.len()
            )));
        }
        let u = SiteUnitary { mode, dim, mat };
        let defect = u.unitarity_defect();
        if defect > 1e-12 {
            return Err(RotateError::NotUnitary(defect));
        }
        Ok(u)
    }

    pub fn identity(mode: Mode) -> SiteUnitary {
        let dim = mode.alphabet_size();
        let mut mat = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            mat[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        SiteUnitary { mode, dim, mat }
    }

    /// Rotation by `theta` in the spacer/P plane, identity elsewhere.
    pub fn rot_0p(mode: Mode, theta: f64) -> SiteUnitary {
        let mut u = SiteUnitary::identity(mode);
        let (zero, p) = (Symbol::Zero.index(), Symbol::P.index());
        let (c, s) = (theta.cos(), theta.sin());
        u.mat[zero * u.dim + zero] = Complex64::new(c, 0.0);
        u.mat[zero * u.dim + p] = Complex64::new(-s, 0.0);
        u.mat[p * u.dim + zero] = Complex64::new(s, 0.0);
        u.mat[p * u.dim + p] = Complex64::new(c, 0.0);
        u
    }

    /// Named presets: `identity` or `rot-0P(theta)`.
    pub fn from_preset(name: &str, mode: Mode) -> Result<SiteUnitary, RotateError> {
        if name == "identity" {
            return Ok(SiteUnitary::identity(mode));
        }
        if let Some(rest) = name.strip_prefix("rot-0P(") {
            if let Some(arg) = rest.strip_suffix(')') {
                let theta: f64 = arg
                    .parse()
                    .map_err(|_| RotateError::UnknownPreset(name.to_string()))?;
                return Ok(SiteUnitary::rot_0p(mode, theta));
            }
        }
        Err(RotateError::UnknownPreset(name.to_string()))
    }

    /// Row-major JSON matrix of `[re, im]` pairs.
    pub fn from_json(text: &str, mode: Mode) -> Result<SiteUnitary, RotateError> {
        let rows: Vec<Vec<[f64; 2]>> =
            serde_json::from_str(text).map_err(|e| RotateError::BadMatrix(e.to_string()))?;
        let mut mat = Vec::new();
        for row in &rows {
            if row.len() != rows.len() {
                return Err(RotateError::BadMatrix("matrix is not square".into()));
            }
            for entry in row {
                mat.push(Complex64::new(entry[0], entry[1]));
            }
        }
        SiteUnitary::from_matrix(mode, mat)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Matrix element `<row|u|col>`.
    pub fn entry(&self, row: Symbol, col: Symbol) -> Complex64 {
        assert!(
            row.index() < self.dim && col.index() < self.dim,
            "symbol outside the unitary's alphabet"
        );
        self.mat[row.index() * self.dim + col.index()]
    }

    pub fn unitarity_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.dim {
                    acc += self.mat[k * self.dim + i].conj() * self.mat[k * self.dim + j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((acc - Complex64::new(expected, 0.0)).norm());
            }
        }
        defect
    }

    /// Nonzero entries of the column for `col`: the expansion of
    /// `u|col>` (or `u†|col>`) in the symbol basis.
    fn column(&self, col: Symbol, dagger: bool) -> Vec<(Symbol, Complex64)> {
        let mut out = Vec::new();
        for r in 0..self.dim {
            let row = Symbol::from_index(r).unwrap();
            let coeff = if dagger {
                self.entry(col, row).conj()
            } else {
                self.entry(row, col)
            };
            if coeff.norm() > 0.0 {
                out.push((row, coeff));
            }
        }
        out
    }
}

/// Which sites the state transform rotates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaVariant {
    /// `u` at the head site and the site just behind it.
    Local,
    /// `u` at every site from 1 up to the head.
    Cumulative,
}

impl FromStr for OmegaVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<OmegaVariant, String> {
        match s {
            "local" => Ok(OmegaVariant::Local),
            "cumulative" => Ok(OmegaVariant::Cumulative),
            other => Err(format!("unknown omega variant {other:?}")),
        }
    }
}

/// A basis term outside the canonical head-derived representation: the
/// head position is explicit and the tape stores sites `1..=head`, so the
/// site under the head may hold any symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GeneralConfig {
    pub label: String,
    pub head: usize,
    pub tape: Vec<Symbol>,
}

impl GeneralConfig {
    pub fn symbol_at(&self, site: usize) -> Symbol {
        assert!(site >= 1);
        self.tape.get(site - 1).copied().unwrap_or(Symbol::Zero)
    }
}

/// A superposition of general configurations with a shared head position.
#[derive(Debug, Clone)]
pub struct GeneralState {
    terms: BTreeMap<GeneralConfig, Complex64>,
}

impl GeneralState {
    pub fn terms(&self) -> &BTreeMap<GeneralConfig, Complex64> {
        &self.terms
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum::<f64>() + 0.0
    }

    pub fn max_diff(&self, other: &GeneralState) -> f64 {
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
}

/// Embeds a canonical state: tape padded to the head site with spacers.
pub fn lift(state: &SparseState) -> GeneralState {
    let mut terms = BTreeMap::new();
    for (config, amp) in state.terms() {
        let head = config.head_pos();
        let mut tape = config.tape.clone();
        tape.resize(head, Symbol::Zero);
        terms.insert(
            GeneralConfig {
                label: config.label.clone(),
                head,
                tape,
            },
            *amp,
        );
    }
    GeneralState { terms }
}

/// The basis-change state transform (or its adjoint with `dagger`).
///
/// Rotates one site at a time across the whole state, merging between
/// sites; adjoint-after-transform then collapses per site instead of
/// expanding the full product basis.
pub fn apply_omega(
    state: &GeneralState,
    u: &SiteUnitary,
    variant: OmegaVariant,
    dagger: bool,
    eps: f64,
) -> GeneralState {
    let Some(first) = state.terms.keys().next() else {
        return GeneralState {
            terms: BTreeMap::new(),
        };
    };
    let head = first.head;
    debug_assert!(state
        .terms
        .keys()
        .all(|c| c.head == head && c.tape.len() == head));
    let (lo, hi) = match variant {
        OmegaVariant::Local => (head - 1, head),
        OmegaVariant::Cumulative => (1, head),
    };
    let mut terms = state.terms.clone();
    for site in lo..=hi {
        let mut next: BTreeMap<GeneralConfig, Complex64> = BTreeMap::new();
        for (config, amp) in &terms {
            for (sym, factor) in u.column(config.tape[site - 1], dagger) {
                let mut tape = config.tape.clone();
                tape[site - 1] = sym;
                let key = GeneralConfig {
                    label: config.label.clone(),
                    head: config.head,
                    tape,
                };
                *next
                    .entry(key)
                    .or_insert_with(|| Complex64::new(0.0, 0.0)) += *amp * factor;
            }
        }
        next.retain(|_, a| a.norm() > eps);
        terms = next;
    }
    GeneralState { terms }
}

/// One step of the untransformed dynamics on a general state. Unlike the
/// canonical engine, the site under the head may hold any symbol here.
pub fn general_step(state: &GeneralState, table: &RuleTable) -> Result<GeneralState, EngineError> {
    let mut acc: BTreeMap<GeneralConfig, Complex64> = BTreeMap::new();
    for (config, amp) in &state.terms {
        let j = config.head;
        let cur = config.symbol_at(j);
        let prev = config.symbol_at(j - 1);
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
            tape.resize(j + 1, Symbol::Zero);
            tape[j - 1] = out.cur;
            tape[j - 2] = out.prev;
            let key = GeneralConfig {
                label: out.label.clone(),
                head: j + 1,
                tape,
            };
            *acc.entry(key)
                .or_insert_with(|| Complex64::new(0.0, 0.0)) += amp * out.amp;
        }
    }
    acc.retain(|_, a| a.norm() > table.eps_amp);
    Ok(GeneralState { terms: acc })
}

/// One step of the transformed dynamics: adjoint transform, step, transform.
pub fn v_step(
    state: &GeneralState,
    table: &RuleTable,
    u: &SiteUnitary,
    variant: OmegaVariant,
) -> Result<GeneralState, RotateError> {
    if u.mode() != table.mode {
        return Err(RotateError::ModeMismatch);
    }
    let back = apply_omega(state, u, variant, true, table.eps_amp);
    let stepped = general_step(&back, table)?;
    Ok(apply_omega(&stepped, u, variant, false, table.eps_amp))
}

/// The transformed initial state.
pub fn transformed_initial(
    table: &RuleTable,
    u: &SiteUnitary,
    variant: OmegaVariant,
) -> GeneralState {
    apply_omega(
        &lift(&initial_state(table)),
        u,
        variant,
        false,
        table.eps_amp,
    )
}

/// `n` conjugated steps from the transformed initial state.
pub fn v_evolve(
    table: &RuleTable,
    u: &SiteUnitary,
    variant: OmegaVariant,
    n: usize,
) -> Result<GeneralState, RotateError> {
    let mut state = transformed_initial(table, u, variant);
    for _ in 0..n {
        state = v_step(&state, table, u, variant)?;
    }
    Ok(state)
}

/// Transform applied at readout: the algebraically equal route to
/// [`v_evolve`].
pub fn omega_of_evolved(
    table: &RuleTable,
    u: &SiteUnitary,
    variant: OmegaVariant,
    n: usize,
) -> Result<GeneralState, RotateError> {
    if u.mode() != table.mode {
        return Err(RotateError::ModeMismatch);
    }
    Ok(apply_omega(
        &lift(&evolve(table, n)?),
        u,
        variant,
        false,
        table.eps_amp,
    ))
}

/// Evolution handle for the conjugated dynamics.
///
/// Iterating [`TransformedDynamics::evolve`] applies the conjugated step
/// directly; [`TransformedDynamics::evolve_via_readout`] instead evolves
/// with the untransformed step and applies the basis transform at
/// readout. The two routes are algebraically equal and cross-checked in
/// the tests.
pub struct TransformedDynamics<'a> {
    table: &'a RuleTable,
    u: &'a SiteUnitary,
    variant: OmegaVariant,
}

impl<'a> TransformedDynamics<'a> {
    pub fn new(
        table: &'a RuleTable,
        u: &'a SiteUnitary,
        variant: OmegaVariant,
    ) -> Result<TransformedDynamics<'a>, RotateError> {
        if u.mode() != table.mode {
            return Err(RotateError::ModeMismatch);
        }
        Ok(TransformedDynamics { table, u, variant })
    }

    /// The transformed initial state.
    pub fn initial(&self) -> GeneralState {
        transformed_initial(self.table, self.u, self.variant)
    }

    /// One conjugated step.
    pub fn step(&self, state: &GeneralState) -> Result<GeneralState, RotateError> {
        v_step(state, self.table, self.u, self.variant)
    }

    /// `n` conjugated steps from the transformed initial state.
    pub fn evolve(&self, n: usize) -> Result<GeneralState, RotateError> {
        v_evolve(self.table, self.u, self.variant, n)
    }

    /// Untransformed evolution with the transform applied at readout.
    pub fn evolve_via_readout(&self, n: usize) -> Result<GeneralState, RotateError> {
        omega_of_evolved(self.table, self.u, self.variant, n)
    }
}

/// Largest one-step deviation between the transformed and untransformed
/// dynamics along the evolution; zero exactly when they commute.
pub fn commutation_defect(
    table: &RuleTable,
    u: &SiteUnitary,
    variant: OmegaVariant,
    probe_steps: usize,
) -> Result<f64, RotateError> {
    let mut worst = 0.0f64;
    for n in 0..=probe_steps {
        let probe = lift(&evolve(table, n)?);
        let via_v = v_step(&probe, table, u, variant)?;
        let via_u = general_step(&probe, table)?;
        worst = worst.max(via_v.max_diff(&via_u));
    }
    Ok(worst)
}

/// Undoes the per-site rotation on every stored site and re-canonicalizes.
///
/// Terms whose head site fails to return to the spacer state cannot be
/// represented canonically; their probability mass is returned as the
/// residual instead of being silently dropped.
pub fn back_rotate_to_canonical(
    state: &GeneralState,
    u: &SiteUnitary,
    eps: f64,
) -> (SparseState, f64) {
    let rotated = apply_omega(state, u, OmegaVariant::Cumulative, true, eps);
    let mut terms = BTreeMap::new();
    let mut residual = 0.0f64;
    let mut step_count = 0usize;
    for (config, amp) in &rotated.terms {
        step_count = config.head - 2;
        if *config.tape.last().unwrap() != Symbol::Zero {
            residual += amp.norm_sqr();
            continue;
        }
        let mut tape = config.tape.clone();
        tape.pop();
        *terms
            .entry(Configuration::new(&config.label, tape))
            .or_insert_with(|| Complex64::new(0.0, 0.0)) += *amp;
    }
    (SparseState::from_terms(step_count, terms), residual)
}

/// Expectation of the observer-rotated spacer-delimited-word projector at
/// a fixed placement: the pattern `0 X 0` over sites `a ..= a+len(X)+1`,
/// read in the basis `u`.
pub fn observer_projector_expectation(
    state: &SparseState,
    u: &SiteUnitary,
    word: &Word,
    a: usize,
) -> Result<f64, RotateError> {
    assert!(a >= 1);
    let b = a + word.len() + 1;
    if state.step_count() < b {
        return Err(RotateError::PlacementOutOfFrozenRegion {
            a,
            b,
            step: state.step_count(),
        });
    }
    let mut pattern = vec![Symbol::Zero];
    pattern.extend_from_slice(word.symbols());
    pattern.push(Symbol::Zero);

    // group coherently over everything outside the placement window
    let mut groups: BTreeMap<(String, Vec<Symbol>), Complex64> = BTreeMap::new();
    for (config, amp) in state.terms() {
        let mut overlap = Complex64::new(1.0, 0.0);
        for site in a..=b {
            overlap *= u.entry(config.symbol_at(site), pattern[site - a]).conj();
        }
        if overlap.norm() == 0.0 {
            continue;
        }
        let mut outside = config.tape.clone();
        outside.drain(a - 1..b.min(outside.len()));
        *groups
            .entry((config.label.clone(), outside))
            .or_insert_with(|| Complex64::new(0.0, 0.0)) += amp * overlap;
    }
    Ok(groups.values().map(|acc| acc.norm_sqr()).sum::<f64>() + 0.0)
}

/// Magnitude of the amplitude for finding `X` in the rotated basis at
/// sites `c ..= c+len(X)+1`, `m` steps after finding `~P(X)` in the
/// rotated basis at sites `a ..= a+len(X)+5`, starting from step `n`.
///
/// Projects the evolved state onto the rotated sentence pattern without
/// renormalizing, expands the collapsed window in the computational
/// basis, evolves `m` further steps, and contracts against the rotated
/// target pattern, summing coherently within each residual class.
pub fn rotated_joint_amplitude(
    table: &RuleTable,
    u: &SiteUnitary,
    word: &Word,
    a: usize,
    c: usize,
    n: usize,
    m: usize,
) -> Result<f64, RotateError> {
    assert!(a >= 1 && c >= 1, "lattice sites are 1-based");
    if u.mode() != table.mode {
        return Err(RotateError::ModeMismatch);
    }
    let sentence = sentence_word(SentenceKind::NegativeP, word);
    let b = a + sentence.len() + 1;
    let d = c + word.len() + 1;
    if n <= b + 2 {
        return Err(RotateError::IntervalNotFrozen { a, b });
    }
    if n + m <= d + 2 {
        return Err(RotateError::IntervalNotFrozen { a: c, b: d });
    }

    let mut pattern1 = vec![Symbol::Zero];
    pattern1.extend_from_slice(sentence.symbols());
    pattern1.push(Symbol::Zero);
    let mut pattern2 = vec![Symbol::Zero];
    pattern2.extend_from_slice(word.symbols());
    pattern2.push(Symbol::Zero);

    let state = evolve(table, n)?;
    let mut projected: BTreeMap<Configuration, Complex64> = BTreeMap::new();
    for (config, amp) in state.terms() {
        let mut overlap = Complex64::new(1.0, 0.0);
        for site in a..=b {
            overlap *= u.entry(config.symbol_at(site), pattern1[site - a]).conj();
        }
        if overlap.norm() == 0.0 {
            continue;
        }
        // collapse the window onto the rotated pattern, expanded in the
        // computational basis
        let mut partial: Vec<(Vec<Symbol>, Complex64)> =
            vec![(config.tape.clone(), amp * overlap)];
        for site in a..=b {
            let mut next = Vec::with_capacity(partial.len());
            for (tape, coeff) in &partial {
                for (sym, factor) in u.column(pattern1[site - a], false) {
                    let mut new_tape = tape.clone();
                    new_tape[site - 1] = sym;
                    next.push((new_tape, coeff * factor));
                }
            }
            partial = next;
        }
        for (tape, coeff) in partial {
            *projected
                .entry(Configuration::new(&config.label, tape))
                .or_insert_with(|| Complex64::new(0.0, 0.0)) += coeff;
        }
    }
    let mut evolved = SparseState::from_terms(n, projected);
    for _ in 0..m {
        evolved = step(&evolved, table)?;
    }

    let mut groups: BTreeMap<(String, Vec<Symbol>), Complex64> = BTreeMap::new();
    for (config, amp) in evolved.terms() {
        let mut overlap = Complex64::new(1.0, 0.0);
        for site in c..=d {
            overlap *= u.entry(config.symbol_at(site), pattern2[site - c]).conj();
        }
        if overlap.norm() == 0.0 {
            continue;
        }
        let mut outside = config.tape.clone();
        outside.drain(c - 1..d.min(outside.len()));
        *groups
            .entry((config.label.clone(), outside))
            .or_insert_with(|| Complex64::new(0.0, 0.0)) += amp * overlap;
    }
    Ok((groups.values().map(|acc| acc.norm_sqr()).sum::<f64>() + 0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Validity transport
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TransportMismatch {
    pub sentence: String,
    pub standard: TruthStatus,
    pub observer: TruthStatus,
}

/// Comparison of standard-basis verdicts against observer-basis verdicts
/// of the transformed dynamics.
#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub variant: OmegaVariant,
    pub horizon: usize,
    pub max_sentence_len: usize,
    pub agreement: bool,
    pub mismatches: Vec<TransportMismatch>,
    /// Probability mass that failed to return to the canonical
    /// representation when reading back; numerical dust in practice.
    pub residual_off_canonical: f64,
    pub standard: MachineReport,
    pub observer: MachineReport,
}

/// Evaluates the machine report for the transformed dynamics with
/// observer projectors and the transformed initial state, and compares it
/// with the standard-basis report, sentence for sentence.
///
/// Observer projectors are the per-site conjugates of the standard ones,
/// so their expectations on the transformed state equal standard
/// expectations on the back-rotated state; the report is evaluated there.
/// With the cumulative variant the back-rotation inverts the transform
/// exactly and every verdict must carry over; with the local variant the
/// frozen region was never rotated and discrepancies are expected.
pub fn validity_transport_check(
    table: &RuleTable,
    u: &SiteUnitary,
    variant: OmegaVariant,
    n: usize,
    max_sentence_len: usize,
) -> Result<TransportReport, RotateError> {
    if u.mode() != table.mode {
        return Err(RotateError::ModeMismatch);
    }
    let standard = machine_report_on(
        &evolve(table, n)?,
        table.mode,
        max_sentence_len,
        Semantics::PathLocal,
    )?;
    let transformed = omega_of_evolved(table, u, variant, n)?;
    let (read_back, residual) = back_rotate_to_canonical(&transformed, u, table.eps_amp);
    let observer = machine_report_on(
        &read_back,
        table.mode,
        max_sentence_len,
        Semantics::PathLocal,
    )?;

    let mut mismatches = Vec::new();
    for (std_sentence, obs_sentence) in standard.sentences.iter().zip(&observer.sentences) {
        debug_assert_eq!(std_sentence.sentence, obs_sentence.sentence);
        if std_sentence.status != obs_sentence.status {
            mismatches.push(TransportMismatch {
                sentence: std_sentence.sentence.clone(),
                standard: std_sentence.status,
                observer: obs_sentence.status,
            });
        }
    }
    let agreement = mismatches.is_empty()
        && standard.valid_so_far == observer.valid_so_far
        && standard.consistent_so_far == observer.consistent_so_far;
    Ok(TransportReport {
        variant,
        horizon: n,
        max_sentence_len,
        agreement,
        mismatches,
        residual_off_canonical: residual,
        standard,
        observer,
    })
}
