//! Shared helpers for driving the `scd` binary from integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

/// Runs the binary from the crate root so relative fixture paths in
/// arguments (and any echoed in output) are stable.
pub fn scd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scd"))
        .args(args)
        .current_dir(manifest_dir())
        .output()
        .expect("scd binary runs")
}

pub struct Golden {
    pub name: &'static str,
    pub args: &'static [&'static str],
}

pub const GOLDEN: &[Golden] = &[
    Golden {
        name: "align_table.txt",
        args: &["align", "--ref", "tests/fixtures/ref.txt", "--hyp", "tests/fixtures/hyp.txt"],
    },
    Golden {
        name: "align_machine.jsonl",
        args: &[
            "align", "--ref", "tests/fixtures/ref.txt", "--hyp", "tests/fixtures/hyp.txt",
            "--k", "2.5", "--format", "machine",
        ],
    },
    Golden {
        name: "risk_table.txt",
        args: &["risk", "--nbest", "tests/fixtures/nbest.jsonl", "--nll", "2"],
    },
    Golden {
        name: "risk_machine.jsonl",
        args: &[
            "risk", "--nbest", "tests/fixtures/nbest.jsonl", "--risk-kind", "word",
            "--format", "machine",
        ],
    },
    Golden {
        name: "score_table.txt",
        args: &["score", "--ref", "tests/fixtures/meeting.rttm", "--hyp", "tests/fixtures/meeting.stamps"],
    },
    Golden {
        name: "score_machine.jsonl",
        args: &[
            "score", "--ref", "tests/fixtures/meeting.rttm", "--hyp", "tests/fixtures/meeting.stamps",
            "--collar", "0.5", "--format", "machine",
        ],
    },
    Golden {
        name: "segment.tsv",
        args: &["segment", "--ref", "tests/fixtures/meeting.rttm", "--target", "8"],
    },
    Golden {
        name: "train_toy.jsonl",
        args: &["train-toy", "--steps", "5"],
    },
];

pub fn golden_path(name: &str) -> PathBuf {
    manifest_dir().join("tests/golden").join(name)
}

/// Stdout of a golden case. Set `SCD_UPDATE_GOLDEN=1` to rewrite the files.
pub fn run_golden(case: &Golden) -> Result<(), String> {
    let out = scd(case.args);
    if !out.status.success() {
        return Err(format!(
            "{}: exit {:?}: {}",
            case.name,
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let path = golden_path(case.name);
    if std::env::var_os("SCD_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &out.stdout).map_err(|e| e.to_string())?;
    }
    let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected != out.stdout {
        return Err(format!(
            "{} differs from golden:\n{}",
            case.name,
            String::from_utf8_lossy(&out.stdout)
        ));
    }
    let again = scd(case.args);
    if again.stdout != out.stdout {
        return Err(format!("{}: output differs between runs", case.name));
    }
    Ok(())
}
