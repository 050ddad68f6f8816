//! Command-line driver: load machine specs, run evolutions, emit verdict
//! reports, path trees, and basis-experiment results.
//!
//! Exit codes: 0 success, 1 logical finding of invalidity (the analysis
//! itself succeeded), 2 input error.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use qsm_core::language::sentence_word;
use qsm_core::logic::{incompleteness_check, machine_report, Semantics, EPS_PRINTABLE};
use qsm_core::machine::{builtin_by_name, RuleTable, DEFAULT_EPS_AMP};
use qsm_core::paths::path_tree;
use qsm_core::rotate::{rotated_joint_amplitude, validity_transport_check, OmegaVariant, SiteUnitary};
use qsm_core::{classify, evolve, Mode, SentenceForm, SentenceKind};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qsm",
    about = "Simulate a quantum symbol-printing machine and analyze its logic",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Builtin machine name (classical-enumerator, branching-printer,
    /// invalid-printer, incomplete-liar) or a path to a machine spec JSON.
    #[arg(long)]
    machine: String,
    /// Number of evolution steps.
    #[arg(long, default_value_t = 12)]
    steps: usize,
    /// Output path; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve and write the canonical state dump.
    Simulate(CommonArgs),
    /// Evaluate the logic verdicts and emit the machine report.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Rendered-length bound for enumerated sentences.
        #[arg(long, default_value_t = 6)]
        max_sentence_len: usize,
        /// Sentence reading: path-local or global.
        #[arg(long, default_value = "path-local")]
        semantics: Semantics2,
    },
    /// Export the word-path tree as DOT (and JSON with --out).
    Paths(CommonArgs),
    /// Run the basis-change experiments.
    Rotate {
        #[command(flatten)]
        common: CommonArgs,
        /// Unitary preset ("identity", "rot-0P(0.3)") or a JSON matrix file.
        #[arg(long, default_value = "identity")]
        unitary: String,
        /// State-transform variant: local or cumulative.
        #[arg(long, default_value = "cumulative")]
        omega: Omega2,
        #[arg(long, default_value_t = 6)]
        max_sentence_len: usize,
    },
}

// clap-friendly wrappers for core enums
#[derive(Clone, Copy)]
struct Semantics2(Semantics);

impl std::str::FromStr for Semantics2 {
    type Err = String;
    fn from_str(s: &str) -> Result<Semantics2, String> {
        s.parse().map(Semantics2)
    }
}

#[derive(Clone, Copy)]
struct Omega2(OmegaVariant);

impl std::str::FromStr for Omega2 {
    type Err = String;
    fn from_str(s: &str) -> Result<Omega2, String> {
        s.parse().map(Omega2)
    }
}

fn load_machine(spec: &str) -> Result<RuleTable> {
    let mut table = if let Ok(table) = builtin_by_name(spec) {
        table
    } else {
        let text = std::fs::read_to_string(spec)
            .with_context(|| format!("cannot read machine spec {spec:?}"))?;
        RuleTable::from_json(&text).with_context(|| format!("invalid machine spec {spec:?}"))?
    };
    if let Ok(eps) = std::env::var("QSM_EPS_AMP") {
        table.eps_amp = eps
            .parse()
            .map_err(|_| anyhow!("QSM_EPS_AMP must be a float, got {eps:?}"))?;
    } else {
        table.eps_amp = DEFAULT_EPS_AMP;
    }
    let report = table
        .validate()
        .map_err(|e| anyhow!("machine validation failed: {e}"))?;
    if !report.is_isometric {
        eprintln!(
            "warning: table is not isometric (max column defect {:.3e})",
            report.max_column_defect
        );
    }
    Ok(table)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_simulate(args: &CommonArgs) -> Result<ExitCode> {
    let table = load_machine(&args.machine)?;
    let state = evolve(&table, args.steps)?;
    write_output(&args.out, &state.dump())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(
    common: &CommonArgs,
    max_sentence_len: usize,
    semantics: Semantics,
) -> Result<ExitCode> {
    let table = load_machine(&common.machine)?;
    let report = machine_report(&table, common.steps, max_sentence_len, semantics)?;
    let mut doc = serde_json::to_value(&report)?;
    let mut summary = report.summary();
    if table.mode == Mode::Extended {
        let inc = incompleteness_check(&table, common.steps)?;
        summary.push_str(&format!(
            "self-reference: {} p={:.6} ({:?}); {} p={:.6} ({:?})\n",
            inc.liar,
            inc.liar_probability,
            inc.liar_outcome,
            inc.asserter,
            inc.asserter_probability,
            inc.asserter_outcome
        ));
        doc["incompleteness"] = serde_json::to_value(&inc)?;
    }
    let json_text = serde_json::to_string_pretty(&doc)?;
    match &common.out {
        Some(path) => {
            std::fs::write(path, json_text)
                .with_context(|| format!("cannot write {}", path.display()))?;
            print!("{summary}");
        }
        None => {
            println!("{json_text}");
            eprint!("{summary}");
        }
    }
    if report.cannot_be_valid {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_paths(args: &CommonArgs) -> Result<ExitCode> {
    let table = load_machine(&args.machine)?;
    let tree = path_tree(&table, args.steps)?;
    match &args.out {
        Some(path) => {
            let dot_path = path.with_extension("dot");
            let json_path = path.with_extension("json");
            std::fs::write(&dot_path, tree.to_dot())
                .with_context(|| format!("cannot write {}", dot_path.display()))?;
            std::fs::write(&json_path, serde_json::to_string_pretty(&tree.to_json())?)
                .with_context(|| format!("cannot write {}", json_path.display()))?;
            println!("{}", dot_path.display());
            println!("{}", json_path.display());
        }
        None => print!("{}", tree.to_dot()),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_unitary(spec: &str, mode: Mode) -> Result<SiteUnitary> {
    if Path::new(spec).exists() {
        let text = std::fs::read_to_string(spec)
            .with_context(|| format!("cannot read unitary {spec:?}"))?;
        return Ok(SiteUnitary::from_json(&text, mode)?);
    }
    Ok(SiteUnitary::from_preset(spec, mode)?)
}

fn cmd_rotate(
    common: &CommonArgs,
    unitary: &str,
    omega: OmegaVariant,
    max_sentence_len: usize,
) -> Result<ExitCode> {
    let table = load_machine(&common.machine)?;
    let u = load_unitary(unitary, table.mode)?;
    let transport = validity_transport_check(&table, &u, omega, common.steps, max_sentence_len)?;

    // joint amplitudes for every printable negated sentence, contracted
    // against the first frozen placement of its target elsewhere
    let state = evolve(&table, common.steps)?;
    let mut joint = Vec::new();
    for report in &transport.standard.sentences {
        if report.probability <= EPS_PRINTABLE {
            continue;
        }
        let word: qsm_core::Word = report.sentence.parse().expect("sentence renders round-trip");
        let form = classify(&word, table.mode);
        let SentenceForm::Sentence {
            kind: SentenceKind::NegativeP,
            argument,
            ..
        } = form
        else {
            continue;
        };
        let sentence_block = sentence_word(SentenceKind::NegativeP, &argument);
        let b_len = sentence_block.len() + 1;
        // first placement of the sentence pattern
        let mut a_site = None;
        'outer: for config in state.terms().keys() {
            // the sentence window must satisfy n > b + 2
            for a in 1..=common.steps.saturating_sub(b_len + 3) {
                let ok = (0..=b_len).all(|k| {
                    let expected = if k == 0 || k == b_len {
                        qsm_core::Symbol::Zero
                    } else {
                        sentence_block.symbols()[k - 1]
                    };
                    config.symbol_at(a + k) == expected
                });
                if ok {
                    a_site = Some(a);
                    break 'outer;
                }
            }
        }
        let Some(a) = a_site else { continue };
        let d_len = argument.len() + 1;
        let c = a + b_len + 1;
        let needed = (c + d_len + 3).saturating_sub(common.steps);
        let m = needed.max(1);
        match rotated_joint_amplitude(&table, &u, &argument, a, c, common.steps, m) {
            Ok(value) => joint.push(json!({
                "sentence": report.sentence,
                "target": argument.to_string(),
                "a": a,
                "c": c,
                "n": common.steps,
                "m": m,
                "joint_amplitude": value,
            })),
            Err(e) => joint.push(json!({
                "sentence": report.sentence,
                "error": e.to_string(),
            })),
        }
    }

    let doc = json!({
        "transport": serde_json::to_value(&transport)?,
        "joint_amplitudes": joint,
    });
    let json_text = serde_json::to_string_pretty(&doc)?;
    let mut summary = String::new();
    summary.push_str(&format!(
        "omega variant: {:?}; verdicts {}\n",
        transport.variant,
        if transport.agreement {
            "preserved"
        } else {
            "DIVERGED"
        }
    ));
    for mismatch in &transport.mismatches {
        summary.push_str(&format!(
            "  {}: standard {} vs observer {}\n",
            mismatch.sentence, mismatch.standard, mismatch.observer
        ));
    }
    for entry in &joint {
        if let Some(value) = entry.get("joint_amplitude") {
            summary.push_str(&format!(
                "joint amplitude {} -> {} at [a={}, c={}]: {}\n",
                entry["sentence"].as_str().unwrap_or("?"),
                entry["target"].as_str().unwrap_or("?"),
                entry["a"],
                entry["c"],
                value
            ));
        }
    }
    match &common.out {
        Some(path) => {
            std::fs::write(path, json_text)
                .with_context(|| format!("cannot write {}", path.display()))?;
            print!("{summary}");
        }
        None => {
            println!("{json_text}");
            eprint!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Check {
            common,
            max_sentence_len,
            semantics,
        } => cmd_check(common, *max_sentence_len, semantics.0),
        Command::Paths(args) => cmd_paths(args),
        Command::Rotate {
            common,
            unitary,
            omega,
            max_sentence_len,
        } => cmd_rotate(common, unitary, omega.0, *max_sentence_len),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
