//! End-to-end runs of the binary: exit codes, RESULT lines, and emitted
//! artifacts.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_commact"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("commact-cli-{}-{name}", std::process::id()))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn result_token(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text
        .lines()
        .rev()
        .find(|l| l.starts_with("RESULT: "))
        .unwrap_or_else(|| panic!("no RESULT line in:\n{text}"));
    line.trim_start_matches("RESULT: ").to_string()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn prove_derivable_and_emitted_proof_rechecks() {
    let proof = tmp("axiom.proof");
    let out = run(&[
        "prove",
        "a . b |- b . a",
        "--emit",
        proof.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(result_token(&out), "derivable");

    let check = run(&["check", proof.to_str().unwrap(), "--calculus", "omega-fin"]);
    assert_eq!(exit_code(&check), 0);
    assert_eq!(result_token(&check), "valid");
    std::fs::remove_file(proof).ok();
}

#[test]
fn prove_underivable() {
    let out = run(&["prove", "a |- b"]);
    assert_eq!(exit_code(&out), 1);
    assert_eq!(result_token(&out), "not-derivable");
}

#[test]
fn prove_refuses_negative_star() {
    let out = run(&["prove", "a^* |- a"]);
    assert_eq!(exit_code(&out), 2);
    assert_eq!(result_token(&out), "refused");
}

#[test]
fn prove_reads_sequent_from_file() {
    let path = tmp("seq.txt");
    std::fs::write(&path, "a, a -o b |- b\n").unwrap();
    let arg = format!("@{}", path.display());
    let out = run(&["prove", &arg]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(result_token(&out), "derivable");
    std::fs::remove_file(path).ok();
}

#[test]
fn parse_errors_exit_with_usage_code() {
    let out = run(&["prove", "a |- "]);
    assert_eq!(exit_code(&out), 3);
    assert_eq!(result_token(&out), "error");

    let out = run(&["nonsense-subcommand"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn refute_finds_witness_for_halting_machine_target() {
    // target sequent of the one-increment machine: the machine halts, so
    // some approximation must be underivable
    let encode = run(&[
        "encode",
        data("halt_inc.machine").to_str().unwrap(),
        "--input",
        "0",
    ]);
    assert_eq!(exit_code(&encode), 0);
    let text = String::from_utf8_lossy(&encode.stdout);
    let target = text
        .lines()
        .find(|l| l.contains("|-"))
        .expect("encode prints the target sequent");

    let out = run(&["refute", target, "--max-n", "3"]);
    assert_eq!(exit_code(&out), 1);
    assert!(result_token(&out).starts_with("refuted n="));
}

#[test]
fn approx_strips_negative_stars() {
    let out = run(&["approx", "a^* |- b", "-n", "2"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("1 \\/ (a \\/ a . a) |- b"), "got:\n{text}");
}

#[test]
fn minsky_classify_tokens() {
    let looping = run(&[
        "minsky",
        "classify",
        data("inc_loop.machine").to_str().unwrap(),
        "--input",
        "0",
    ]);
    assert_eq!(exit_code(&looping), 0);
    assert!(result_token(&looping).starts_with("circular prefix="));

    let halting = run(&[
        "minsky",
        "classify",
        data("halt_inc.machine").to_str().unwrap(),
        "--input",
        "0",
    ]);
    assert_eq!(exit_code(&halting), 0);
    assert_eq!(result_token(&halting), "halted steps=1");
}

#[test]
fn synth_kstep_emits_checkable_proof() {
    let proof = tmp("kstep.proof");
    let out = run(&[
        "synth",
        "kstep",
        data("inc_loop.machine").to_str().unwrap(),
        "--config",
        "p,0,0,0",
        "-k",
        "4",
        "--emit",
        proof.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(result_token(&out), "ok");

    let check = run(&["check", proof.to_str().unwrap(), "--calculus", "omega-fin"]);
    assert_eq!(result_token(&check), "valid");
    std::fs::remove_file(proof).ok();
}

#[test]
fn synth_circular_emits_checkable_proofs_in_both_styles() {
    let inductive = tmp("circ.proof");
    let out = run(&[
        "synth",
        "circular",
        data("self_jz.machine").to_str().unwrap(),
        "--input",
        "0",
        "--emit",
        inductive.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let check = run(&["check", inductive.to_str().unwrap(), "--calculus", "commact"]);
    assert_eq!(result_token(&check), "valid");
    std::fs::remove_file(inductive).ok();

    let witness = tmp("circ-witness.proof");
    let out = run(&[
        "synth",
        "circular",
        data("self_jz.machine").to_str().unwrap(),
        "--input",
        "0",
        "--witness",
        "--emit",
        witness.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let check = run(&["check", witness.to_str().unwrap(), "--calculus", "circ"]);
    assert_eq!(result_token(&check), "valid");
    std::fs::remove_file(witness).ok();
}

#[test]
fn synth_circular_rejects_halting_run() {
    let out = run(&[
        "synth",
        "circular",
        data("halt_inc.machine").to_str().unwrap(),
        "--input",
        "0",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert_eq!(result_token(&out), "not-applicable");
}

#[test]
fn cutelim_produces_cut_free_proof() {
    // hand-written proof with a cut on b
    let src = tmp("with-cut.proof");
    std::fs::write(
        &src,
        r#"(proof omega-fin
  (node Cut "a -o b, a |- b" (cutf "b")
    (node ImpL "a -o b, a |- b"
      (node Id "a |- a")
      (node Id "b |- b"))
    (node Id "b |- b")))
"#,
    )
    .unwrap();
    let check = run(&["check", src.to_str().unwrap(), "--calculus", "omega-fin"]);
    assert_eq!(result_token(&check), "valid");

    let dst = tmp("cut-free.proof");
    let out = run(&[
        "cutelim",
        src.to_str().unwrap(),
        "--emit",
        dst.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(result_token(&out), "ok");
    let text = std::fs::read_to_string(&dst).unwrap();
    assert!(!text.contains("Cut"));
    let recheck = run(&["check", dst.to_str().unwrap(), "--calculus", "omega-fin"]);
    assert_eq!(result_token(&recheck), "valid");
    std::fs::remove_file(src).ok();
    std::fs::remove_file(dst).ok();
}

#[test]
fn model_check_eval_and_soundness() {
    let lattice = data("b2.lattice");
    let out = run(&["model", "check", lattice.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(result_token(&out), "valid");

    let out = run(&[
        "model",
        "eval",
        lattice.to_str().unwrap(),
        "--formula",
        "(p -o q) \\/ p^*",
        "--valuation",
        "p=1,q=0",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.trim() == "1"), "got:\n{text}");

    let proof = tmp("sound.proof");
    let emit = run(&[
        "prove",
        "a, a -o b |- b",
        "--emit",
        proof.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&emit), 0);
    let out = run(&[
        "model",
        "soundness",
        lattice.to_str().unwrap(),
        "--proof",
        proof.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(result_token(&out), "ok");
    std::fs::remove_file(proof).ok();
}

#[test]
fn verify_lemma_on_small_machine() {
    let out = run(&[
        "verify",
        "lemma",
        data("halt_inc.machine").to_str().unwrap(),
        "--max-k",
        "2",
        "--max-counter",
        "1",
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(result_token(&out), "agree");
}
