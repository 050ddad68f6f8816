//! Simulator and logic-analysis toolkit for a quantum symbol-printing machine.
//!
//! A multistate head moves rightward along a half-infinite lattice of
//! five-state systems (six in extended mode), one site per step, rewriting
//! the site under it and the site just behind it. Iterating the step
//! operator from the all-spacer initial state produces a superposition of
//! tape configurations; every configuration splits into alternating
//! spacer/word segments, and the amplitude flowing into each segmentation
//! is one *word path* of the evolution.
//!
//! Words of the form `P(X)` and `~P(X)` are read as sentences asserting
//! that the word `X` does or does not get printed. The [`logic`] module
//! evaluates printability, truth, validity, consistency and completeness
//! of a machine at a finite horizon; [`rotate`] probes how those verdicts
//! depend on the symbol basis used to read the tape.
//!
//! Module map:
//!
//! - [`language`] — alphabet, words, sentence grammar, tape segmentation
//! - [`machine`] — step-operator rule tables, isometry validation, builtins
//! - [`evolve`] — exact sparse evolution plus dense and classical oracles
//! - [`paths`] — operator-split word-path decomposition and path trees
//! - [`logic`] — finite-horizon truth/validity/consistency/completeness
//! - [`rotate`] — observer basis changes and the transformed dynamics
//!
//! ```
//! use qsm_core::{builtin, machine_report, printability, Builtin, Semantics, Word};
//!
//! let machine = builtin(Builtin::BranchingPrinter);
//! let word: Word = "PP".parse().unwrap();
//! // the word PP is sealed on the P(PP)-printing branch only
//! let p = printability(&machine, &word, 14).unwrap();
//! assert!((p - 0.5).abs() < 1e-12);
//!
//! let report = machine_report(&machine, 20, 6, Semantics::PathLocal).unwrap();
//! assert!(report.valid_so_far && report.consistent_so_far);
//! ```

pub mod evolve;
pub mod language;
pub mod logic;
pub mod machine;
pub mod paths;
pub mod rotate;

pub use evolve::{
    classical_emulate, evolve, initial_state, step, Configuration, EngineError, SparseState,
};
pub use language::{
    classify, contained_words, decompose, parse_word, LanguageError, Mode, SegmentDecomposition,
    SentenceForm, SentenceKind, Symbol, Word,
};
pub use logic::{
    incompleteness_check, machine_report, printability, truth_status, LogicError, MachineReport,
    Semantics, TruthStatus,
};
pub use machine::{builtin, builtin_by_name, Builtin, IsometryReport, MachineError, RuleTable};
pub use paths::{
    composition_evolve, enumerate_word_paths, split_step, verify_pathsum, Composition,
    SplitBranch, WordPath,
};
pub use rotate::{
    observer_projector_expectation, rotated_joint_amplitude, validity_transport_check,
    OmegaVariant, RotateError, SiteUnitary, TransformedDynamics,
};
