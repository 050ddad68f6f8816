//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured margin (visible with `--nocapture`).

use qsm_core::evolve::dense::dense_oracle_evolve;
use qsm_core::evolve::{classical_emulate, evolve, initial_state, step};
use qsm_core::language::{classify, Mode, SentenceForm, Word};
use qsm_core::logic::{
    asserter_word, enumerate_sentences, incompleteness_check, liar_word, machine_report,
    placement_expectation, printability, printability_on, truth_matrix_elements_from,
    truth_status, truth_status_on, IncompletenessOutcome, Semantics, TruthStatus, EPS_PRINTABLE,
};
use qsm_core::machine::{
    builtin, extend_alphabet, random_deterministic, random_isometric, Builtin,
};
use qsm_core::paths::verify_pathsum;
use qsm_core::rotate::{
    commutation_defect, lift, omega_of_evolved, rotated_joint_amplitude, transformed_initial,
    v_evolve, v_step, validity_transport_check, OmegaVariant, SiteUnitary,
};
use std::time::Instant;

fn w(text: &str) -> Word {
    text.parse().unwrap()
}

fn machine_set() -> Vec<(String, qsm_core::RuleTable)> {
    let mut machines: Vec<(String, qsm_core::RuleTable)> = Builtin::ALL
        .into_iter()
        .map(|b| (b.name().to_string(), builtin(b)))
        .collect();
    for seed in [1u64, 2, 3] {
        let table = random_isometric(seed);
        assert!(table.validate().unwrap().is_isometric);
        machines.push((format!("random-isometric-{seed}"), table));
    }
    machines
}

#[test]
fn criterion_01_oracle_equivalence() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (name, table) in machine_set() {
        for n in 0..=5 {
            let sparse = evolve(&table, n).unwrap();
            let dense = dense_oracle_evolve(&table, n).unwrap();
            let mut max_diff = (dense.norm_sqr() - sparse.norm_sqr()).abs();
            for (config, amp) in sparse.terms() {
                max_diff = max_diff.max((dense.amplitude_of(config).unwrap() - amp).norm());
            }
            assert!(max_diff <= 1e-12, "{name} at n={n}: {max_diff}");
            worst = worst.max(max_diff);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "acceptance 01 oracle-equivalence: PASS (max |diff| = {worst:.3e}, {:.2}s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_02_pathsum_identity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (name, table) in machine_set() {
        for n in 0..=8 {
            let residual = verify_pathsum(&table, n).unwrap();
            assert!(residual <= 1e-10, "{name} at n={n}: {residual}");
            worst = worst.max(residual);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "acceptance 02 pathsum-identity: PASS (max residual = {worst:.3e}, {:.2}s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_03_norm_conservation() {
    let mut worst = 0.0f64;
    for (name, table) in machine_set() {
        let mut state = initial_state(&table);
        for n in 0..=12 {
            let defect = (state.norm_sqr() - 1.0).abs();
            assert!(defect <= 1e-12, "{name} at n={n}: {defect}");
            worst = worst.max(defect);
            state = step(&state, &table).unwrap();
        }
    }
    println!("acceptance 03 norm-conservation: PASS (max |norm^2 - 1| = {worst:.3e})");
}

#[test]
fn criterion_04_stabilization() {
    let table = builtin(Builtin::BranchingPrinter);
    let mut worst = 0.0f64;
    for (word, a) in [(w("P(PP)"), 1), (w("~P(PP)"), 1), (w("PP"), 7)] {
        let b = a + word.len() + 1;
        let reference =
            placement_expectation(&evolve(&table, b + 2).unwrap(), &word, a).unwrap();
        for n in b + 2..=b + 10 {
            let value = placement_expectation(&evolve(&table, n).unwrap(), &word, a).unwrap();
            let drift = (value - reference).abs();
            assert!(drift <= 1e-12, "{word} at n={n}: {drift}");
            worst = worst.max(drift);
        }
    }
    println!("acceptance 04 stabilization: PASS (max drift = {worst:.3e})");
}

#[test]
fn criterion_05_classical_degeneracy() {
    let table = builtin(Builtin::ClassicalEnumerator);
    let expected = classical_emulate(&table, 200).unwrap();
    let mut state = initial_state(&table);
    for n in 1..=200 {
        state = step(&state, &table).unwrap();
        assert_eq!(state.support_len(), 1, "n={n}");
    }
    let config = state.terms().keys().next().unwrap();
    assert_eq!(config.tape, expected);
    println!("acceptance 05 classical-degeneracy: PASS (200 steps, single-configuration support)");
}

#[test]
fn criterion_06_logic_verdicts() {
    let n = 20;
    let max_len = 6;

    let enumerator = builtin(Builtin::ClassicalEnumerator);
    let report = machine_report(&enumerator, n, max_len, Semantics::PathLocal).unwrap();
    assert!(report.valid_so_far && report.consistent_so_far);

    let branching = builtin(Builtin::BranchingPrinter);
    let report = machine_report(&branching, n, max_len, Semantics::PathLocal).unwrap();
    assert!(report.consistent_so_far);
    let p_pos = printability(&branching, &w("P(PP)"), n).unwrap();
    let p_neg = printability(&branching, &w("~P(PP)"), n).unwrap();
    assert!((p_pos - 0.5).abs() <= 1e-12, "P(PP): {p_pos}");
    assert!((p_neg - 0.5).abs() <= 1e-12, "~P(PP): {p_neg}");
    // disjoint paths: no single configuration carries both sentences
    let state = evolve(&branching, n).unwrap();
    for config in state.terms().keys() {
        let words =
            qsm_core::language::contained_words(&config.tape, config.head_pos());
        assert!(!(words.contains(&w("P(PP)")) && words.contains(&w("~P(PP)"))));
    }

    let invalid = builtin(Builtin::InvalidPrinter);
    // first freezing horizon of the delimited PP is n = 11
    assert_ne!(
        truth_status(&invalid, &w("~P(PP)"), 10, Semantics::PathLocal).unwrap(),
        TruthStatus::Violated
    );
    assert_eq!(
        truth_status(&invalid, &w("~P(PP)"), 11, Semantics::PathLocal).unwrap(),
        TruthStatus::Violated
    );
    let report = machine_report(&invalid, n, max_len, Semantics::PathLocal).unwrap();
    assert!(report.cannot_be_valid && !report.valid_so_far);
    assert!(report
        .sentences
        .iter()
        .any(|s| s.sentence == "~P(PP)"
            && s.status == TruthStatus::Violated
            && !s.witnesses.is_empty()));

    println!(
        "acceptance 06 logic-verdicts: PASS (P(PP)/~P(PP) at {p_pos:.12}/{p_neg:.12} on disjoint paths)"
    );
}

#[test]
fn criterion_07_validity_implies_consistency() {
    let mut checked = 0usize;
    for (name, table) in machine_set() {
        for n in [5usize, 10, 15] {
            let report = machine_report(&table, n, 6, Semantics::PathLocal).unwrap();
            assert!(
                !(report.valid_so_far && !report.consistent_so_far),
                "{name} at n={n}"
            );
            checked += 1;
        }
    }
    for seed in 100..150u64 {
        let table = random_deterministic(seed);
        let report = machine_report(&table, 15, 6, Semantics::PathLocal).unwrap();
        assert!(
            !(report.valid_so_far && !report.consistent_so_far),
            "seed {seed}"
        );
        checked += 1;
    }
    println!("acceptance 07 validity-implies-consistency: PASS ({checked} reports)");
}

#[test]
fn criterion_08_truth_definition_equivalence() {
    // (a) the literal dense-oracle sweep: n <= 5, m <= 5
    for which in Builtin::ALL {
        let table = builtin(which);
        for n in 0..=5 {
            let dense_state = dense_oracle_evolve(&table, n).unwrap().to_sparse(0.0);
            for sentence in enumerate_sentences(table.mode, 6) {
                let status =
                    truth_status_on(&dense_state, table.mode, &sentence, Semantics::PathLocal)
                        .unwrap()
                        .0;
                for m in 0..=5 {
                    let (lhs, rhs) =
                        truth_matrix_elements_from(&dense_state, &table, &sentence, m).unwrap();
                    // no sentence window fits in five frozen sites: both
                    // sides vanish and the status must be no-domain-yet
                    assert!(lhs <= 1e-15 && rhs <= 1e-15);
                    assert_eq!(status, TruthStatus::NoDomainYet);
                }
            }
        }
    }
    // (b) the same equivalence where domains are inhabited, with the
    // exact sparse state standing in for the (infeasible) dense vector
    let mut checked = 0usize;
    for which in Builtin::ALL {
        let table = builtin(which);
        let sentences: Vec<Word> = match which {
            Builtin::IncompleteLiar => vec![liar_word(), asserter_word()],
            _ => vec![w("P(PP)"), w("~P(PP)")],
        };
        for n in 6..=12 {
            let state = evolve(&table, n).unwrap();
            for sentence in &sentences {
                let negative = match classify(sentence, table.mode) {
                    SentenceForm::Sentence { kind, .. } => kind.is_negative(),
                    SentenceForm::Plain => unreachable!(),
                };
                let status =
                    truth_status_on(&state, table.mode, sentence, Semantics::PathLocal)
                        .unwrap()
                        .0;
                let (lhs, rhs) =
                    truth_matrix_elements_from(&state, &table, sentence, 0).unwrap();
                match (negative, status) {
                    (_, TruthStatus::NoDomainYet) => assert!(rhs <= 1e-15),
                    (_, TruthStatus::HoldsSoFar) => assert!((lhs - rhs).abs() <= 1e-12),
                    (true, TruthStatus::Violated) | (false, TruthStatus::Open) => {
                        assert!(lhs < rhs - 1e-12)
                    }
                    (neg, other) => panic!("{} {sentence}: {neg} {other:?}", which.name()),
                }
                checked += 1;
            }
        }
    }
    println!("acceptance 08 truth-definition-equivalence: PASS ({checked} inhabited checks)");
}

#[test]
fn criterion_09_basis_dependence() {
    let branching = builtin(Builtin::BranchingPrinter);
    let rot = SiteUnitary::rot_0p(Mode::Base, 0.3);
    let id = SiteUnitary::identity(Mode::Base);

    // rotated joint amplitude for (~P(PP), PP): zero in the original
    // basis, nonzero under the 0/P rotation
    let original = rotated_joint_amplitude(&branching, &id, &w("PP"), 1, 9, 12, 3).unwrap();
    let rotated = rotated_joint_amplitude(&branching, &rot, &w("PP"), 1, 9, 12, 3).unwrap();
    assert!(original <= 1e-12, "original basis: {original}");
    assert!(rotated > 1e-6, "rotated basis: {rotated}");

    // conjugated evolution equals transform-at-readout at every n <= 10
    let mut worst = 0.0f64;
    for which in Builtin::ALL {
        let table = builtin(which);
        let u = SiteUnitary::rot_0p(table.mode, 0.3);
        for variant in [OmegaVariant::Local, OmegaVariant::Cumulative] {
            let mut state = transformed_initial(&table, &u, variant);
            for n in 0..=10 {
                let direct = omega_of_evolved(&table, &u, variant, n).unwrap();
                let diff = state.max_diff(&direct);
                assert!(diff <= 1e-12, "{} {variant:?} n={n}: {diff}", which.name());
                worst = worst.max(diff);
                if n < 10 {
                    state = v_step(&state, &table, &u, variant).unwrap();
                }
            }
        }
    }

    // cumulative transport preserves every verdict
    for which in Builtin::ALL {
        let table = builtin(which);
        let u = SiteUnitary::rot_0p(table.mode, 0.3);
        for n in [4usize, 7, 10] {
            let report =
                validity_transport_check(&table, &u, OmegaVariant::Cumulative, n, 6).unwrap();
            assert!(
                report.agreement,
                "{} n={n}: {:?}",
                which.name(),
                report.mismatches
            );
            assert!(report.residual_off_canonical <= 1e-12);
        }
    }

    // the identity gives back the untransformed dynamics exactly
    for variant in [OmegaVariant::Local, OmegaVariant::Cumulative] {
        assert!(commutation_defect(&branching, &id, variant, 5).unwrap() <= 1e-14);
        let via_v = v_evolve(&branching, &id, variant, 8).unwrap();
        assert!(via_v.max_diff(&lift(&evolve(&branching, 8).unwrap())) <= 1e-14);
    }

    println!(
        "acceptance 09 basis-dependence: PASS (joint {original:.1e} -> {rotated:.3e}, conjugation residual {worst:.3e})"
    );
}

#[test]
fn criterion_10_incompleteness() {
    let liar_machine = builtin(Builtin::IncompleteLiar);
    for n in [11usize, 15, 20] {
        let report = incompleteness_check(&liar_machine, n).unwrap();
        assert!(report.liar_probability > EPS_PRINTABLE, "n={n}");
        assert_eq!(
            report.liar_outcome,
            IncompletenessOutcome::ViolatedSelfContradiction
        );
        assert!(report.cannot_be_valid);
        assert_eq!(
            truth_status(&liar_machine, &liar_word(), n, Semantics::PathLocal).unwrap(),
            TruthStatus::Violated
        );
        let machine = machine_report(&liar_machine, n, 6, Semantics::PathLocal).unwrap();
        assert!(machine.cannot_be_valid && !machine.valid_so_far);
    }

    // every machine reported valid so far in extended mode leaves the
    // liar unprintable
    let mut extended_machines = vec![("incomplete-liar".to_string(), liar_machine)];
    for which in [
        Builtin::ClassicalEnumerator,
        Builtin::BranchingPrinter,
        Builtin::InvalidPrinter,
    ] {
        extended_machines.push((
            format!("{}-extended", which.name()),
            extend_alphabet(&builtin(which)),
        ));
    }
    for (name, table) in extended_machines {
        let report = machine_report(&table, 15, 6, Semantics::PathLocal).unwrap();
        if report.valid_so_far {
            let state = evolve(&table, 15).unwrap();
            assert!(
                printability_on(&state, &liar_word()) <= EPS_PRINTABLE,
                "{name}"
            );
        }
    }
    println!("acceptance 10 incompleteness: PASS");
}

#[test]
fn criterion_11_parser_conformance() {
    match classify(&w("P(~(PP)"), Mode::Base) {
        SentenceForm::Sentence { argument, .. } => assert_eq!(argument, w("~(PP")),
        SentenceForm::Plain => panic!("P(~(PP) must classify as a sentence"),
    }
    match classify(&w("~P()P)~()"), Mode::Base) {
        SentenceForm::Sentence { argument, .. } => assert_eq!(argument, w(")P)~(")),
        SentenceForm::Plain => panic!("~P()P)~() must classify as a sentence"),
    }
    assert_eq!(classify(&w("P(P(PP))"), Mode::Base), SentenceForm::Plain);
    println!("acceptance 11 parser-conformance: PASS");
}
