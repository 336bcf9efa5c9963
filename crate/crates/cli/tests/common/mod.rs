#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn qtrack(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtrack"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("qtrack binary runs")
}

/// Runs `qtrack` and panics with its stderr unless it exits 0.
pub fn ok(args: &[&str], cwd: &Path) -> String {
    let out = qtrack(args, cwd);
    assert!(
        out.status.success(),
        "qtrack {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}
