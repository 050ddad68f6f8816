//! Symbols, words, the sentence grammar, and tape segmentation.
//!
//! The tape alphabet is `0 P ~ ( )` in base mode plus `N` in extended mode.
//! `0` is the spacer: it separates words and never occurs inside one. A
//! *word* is a nonempty spacer-free symbol string. Words of the shape
//! `P(X)` / `~P(X)` (and `PN(X)` / `~PN(X)` in extended mode) are
//! *sentences*; everything else is a plain word.
//!
//! All functions here are pure and operate on immutable values.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LanguageError {
    #[error("empty input")]
    EmptyInput,
    #[error("string contains the spacer symbol 0")]
    ContainsSpacer,
    #[error("unknown symbol character {0:?}")]
    UnknownSymbol(char),
}

/// One tape symbol. Declaration order is the canonical symbol order used
/// for state dumps and dense-vector indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Zero,
    P,
    Tilde,
    LParen,
    RParen,
    N,
}

impl Symbol {
    pub const BASE_ALPHABET: [Symbol; 5] = [
        Symbol::Zero,
        Symbol::P,
        Symbol::Tilde,
        Symbol::LParen,
        Symbol::RParen,
    ];
    pub const EXTENDED_ALPHABET: [Symbol; 6] = [
        Symbol::Zero,
        Symbol::P,
        Symbol::Tilde,
        Symbol::LParen,
        Symbol::RParen,
        Symbol::N,
    ];

    pub fn to_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::P => 'P',
            Symbol::Tilde => '~',
            Symbol::LParen => '(',
            Symbol::RParen => ')',
            Symbol::N => 'N',
        }
    }

    pub fn from_char(c: char) -> Result<Symbol, LanguageError> {
        match c {
            '0' => Ok(Symbol::Zero),
            'P' => Ok(Symbol::P),
            '~' => Ok(Symbol::Tilde),
            '(' => Ok(Symbol::LParen),
            ')' => Ok(Symbol::RParen),
            'N' => Ok(Symbol::N),
            other => Err(LanguageError::UnknownSymbol(other)),
        }
    }

    /// Position in the canonical symbol order (dense-vector digit).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Symbol> {
        Symbol::EXTENDED_ALPHABET.get(i).copied()
    }

    pub fn in_mode(self, mode: Mode) -> bool {
        self != Symbol::N || mode == Mode::Extended
    }
}

/// Alphabet mode: base has five symbols, extended adds `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Base,
    Extended,
}

impl Mode {
    pub fn alphabet(self) -> &'static [Symbol] {
        match self {
            Mode::Base => &Symbol::BASE_ALPHABET,
            Mode::Extended => &Symbol::EXTENDED_ALPHABET,
        }
    }

    /// Number of symbols in this mode's alphabet.
    pub fn alphabet_size(self) -> usize {
        self.alphabet().len()
    }

    /// The non-spacer symbols words are built from.
    pub fn word_alphabet(self) -> &'static [Symbol] {
        &self.alphabet()[1..]
    }
}

/// A nonempty spacer-free symbol string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    /// Builds a word, rejecting empty input and any spacer symbol.
    pub fn new(symbols: Vec<Symbol>) -> Result<Word, LanguageError> {
        if symbols.is_empty() {
            return Err(LanguageError::EmptyInput);
        }
        if symbols.contains(&Symbol::Zero) {
            return Err(LanguageError::ContainsSpacer);
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = LanguageError;

    fn from_str(s: &str) -> Result<Word, LanguageError> {
        let syms = s
            .chars()
            .map(Symbol::from_char)
            .collect::<Result<Vec<_>, _>>()?;
        Word::new(syms)
    }
}

/// Parses a symbol sequence as a single word.
pub fn parse_word(symbols: &[Symbol]) -> Result<Word, LanguageError> {
    Word::new(symbols.to_vec())
}

/// Renders an arbitrary symbol string (spacers allowed) as text.
pub fn render_tape(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.to_char()).collect()
}

/// Parses an arbitrary symbol string (spacers allowed) from text.
pub fn parse_tape(text: &str) -> Result<Vec<Symbol>, LanguageError> {
    text.chars().map(Symbol::from_char).collect()
}

/// The sentence kinds of the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SentenceKind {
    PositiveP,
    NegativeP,
    PositivePN,
    NegativePN,
}

impl SentenceKind {
    fn prefix(self) -> &'static [Symbol] {
        match self {
            SentenceKind::PositiveP => &[Symbol::P, Symbol::LParen],
            SentenceKind::NegativeP => &[Symbol::Tilde, Symbol::P, Symbol::LParen],
            SentenceKind::PositivePN => &[Symbol::P, Symbol::N, Symbol::LParen],
            SentenceKind::NegativePN => &[Symbol::Tilde, Symbol::P, Symbol::N, Symbol::LParen],
        }
    }

    pub fn is_negative(self) -> bool {
        matches!(self, SentenceKind::NegativeP | SentenceKind::NegativePN)
    }

    pub fn is_pn(self) -> bool {
        matches!(self, SentenceKind::PositivePN | SentenceKind::NegativePN)
    }
}

/// Result of classifying a word against the sentence grammar.
///
/// For `P(X)` / `~P(X)` the target equals the argument `X`; for `PN(X)` /
/// `~PN(X)` the sentence refers to the word `X(X)`, so the target is that
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceForm {
    Plain,
    Sentence {
        kind: SentenceKind,
        argument: Word,
        target: Word,
    },
}

impl SentenceForm {
    pub fn is_sentence(&self) -> bool {
        matches!(self, SentenceForm::Sentence { .. })
    }
}

/// Renders a sentence of the given kind over the given argument.
pub fn sentence_word(kind: SentenceKind, argument: &Word) -> Word {
    let mut syms = kind.prefix().to_vec();
    syms.extend_from_slice(argument.symbols());
    syms.push(Symbol::RParen);
    Word(syms)
}

/// The word a sentence talks about: `X` for P-forms, `X(X)` for PN-forms.
pub fn sentence_target(kind: SentenceKind, argument: &Word) -> Word {
    if kind.is_pn() {
        let mut syms = argument.symbols().to_vec();
        syms.push(Symbol::LParen);
        syms.extend_from_slice(argument.symbols());
        syms.push(Symbol::RParen);
        Word(syms)
    } else {
        argument.clone()
    }
}

/// Matches `prefix` + nonempty middle + `)` and returns the middle.
fn match_form(symbols: &[Symbol], prefix: &[Symbol]) -> Option<Vec<Symbol>> {
    if symbols.len() < prefix.len() + 2 {
        return None;
    }
    if !symbols.starts_with(prefix) {
        return None;
    }
    if *symbols.last().unwrap() != Symbol::RParen {
        return None;
    }
    Some(symbols[prefix.len()..symbols.len() - 1].to_vec())
}

/// Classifies a word against the sentence grammar.
///
/// `P(X)` and `~P(X)` require the argument `X` to not itself be a
/// sentence; the PN forms of extended mode accept any expression. The
/// closing `)` must be the last symbol; interior parentheses are
/// uninterpreted data. In base mode any word containing `N` is plain.
pub fn classify(word: &Word, mode: Mode) -> SentenceForm {
    let s = word.symbols();
    if mode == Mode::Base && s.contains(&Symbol::N) {
        return SentenceForm::Plain;
    }
    if mode == Mode::Extended {
        for kind in [SentenceKind::NegativePN, SentenceKind::PositivePN] {
            if let Some(middle) = match_form(s, kind.prefix()) {
                let argument = Word(middle);
                let target = sentence_target(kind, &argument);
                return SentenceForm::Sentence {
                    kind,
                    argument,
                    target,
                };
            }
        }
    }
    for kind in [SentenceKind::NegativeP, SentenceKind::PositiveP] {
        if let Some(middle) = match_form(s, kind.prefix()) {
            let argument = Word(middle);
            if classify(&argument, mode).is_sentence() {
                return SentenceForm::Plain;
            }
            let target = argument.clone();
            return SentenceForm::Sentence {
                kind,
                argument,
                target,
            };
        }
    }
    SentenceForm::Plain
}

pub fn is_sentence(word: &Word, mode: Mode) -> bool {
    classify(word, mode).is_sentence()
}

/// One maximal segment of a tape: a spacer run or a word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Spacer(usize),
    Word(Word),
}

impl Segment {
    pub fn len(&self) -> usize {
        match self {
            Segment::Spacer(len) => *len,
            Segment::Word(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_word(&self) -> bool {
        matches!(self, Segment::Word(_))
    }
}

/// A tape split into maximal alternating spacer/word segments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentDecomposition {
    segments: Vec<Segment>,
}

impl SegmentDecomposition {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of alternating segments.
    pub fn t(&self) -> usize {
        self.segments.len()
    }

    /// 1 if the first segment is a word, 0 if it is a spacer run.
    pub fn nu1(&self) -> u8 {
        if self.segments[0].is_word() {
            1
        } else {
            0
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.len()).collect()
    }

    pub fn word_count(&self) -> usize {
        self.segments.iter().filter(|s| s.is_word()).count()
    }

    pub fn words(&self) -> Vec<&Word> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Word(w) => Some(w),
                Segment::Spacer(_) => None,
            })
            .collect()
    }

    /// Rebuilds the original symbol string.
    pub fn reconcat(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for seg in &self.segments {
            match seg {
                Segment::Spacer(len) => out.extend(std::iter::repeat_n(Symbol::Zero, *len)),
                Segment::Word(w) => out.extend_from_slice(w.symbols()),
            }
        }
        out
    }
}

/// Splits a tape into its maximal alternating spacer/word segments.
pub fn decompose(tape: &[Symbol]) -> Result<SegmentDecomposition, LanguageError> {
    if tape.is_empty() {
        return Err(LanguageError::EmptyInput);
    }
    let mut segments = Vec::new();
    let mut i = 0;
    while i < tape.len() {
        let is_spacer = tape[i] == Symbol::Zero;
        let start = i;
        while i < tape.len() && (tape[i] == Symbol::Zero) == is_spacer {
            i += 1;
        }
        if is_spacer {
            segments.push(Segment::Spacer(i - start));
        } else {
            segments.push(Segment::Word(Word(tape[start..i].to_vec())));
        }
    }
    Ok(SegmentDecomposition { segments })
}

/// Maximal word runs that are spacer-delimited on both sides and whose
/// trailing spacer lies at least two sites behind the head.
///
/// Returns `(start_site, end_site, word)` triples with 1-based sites.
/// Sites beyond the stored tape count as spacers, so a run ending at the
/// last stored site has its trailing spacer in the implicit padding. A run
/// starting at site 1 has no room for a leading spacer and never counts.
pub fn contained_word_runs(tape: &[Symbol], head_pos: usize) -> Vec<(usize, usize, Word)> {
    let mut out = Vec::new();
    let bound = head_pos.saturating_sub(2);
    let mut i = 0;
    while i < tape.len() {
        if tape[i] == Symbol::Zero {
            i += 1;
            continue;
        }
        let start = i;
        while i < tape.len() && tape[i] != Symbol::Zero {
            i += 1;
        }
        // 1-based sites: run occupies start+1 ..= i; the trailing
        // spacer sits at end_site + 1 and must lie within the bound
        let start_site = start + 1;
        let end_site = i;
        if start_site >= 2 && end_site < bound {
            out.push((start_site, end_site, Word(tape[start..i].to_vec())));
        }
    }
    out
}

/// The set of words contained on a tape per [`contained_word_runs`].
pub fn contained_words(tape: &[Symbol], head_pos: usize) -> BTreeSet<Word> {
    contained_word_runs(tape, head_pos)
        .into_iter()
        .map(|(_, _, w)| w)
        .collect()
}
