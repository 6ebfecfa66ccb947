//! Builds a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "moyal.h"

int main(void) {
    MoyalState *g = NULL;
    if (moyal_ground_state(64, 1.0, &g) != MOYAL_STATUS_OK) return 10;
    MoyalBetaThresholds t;
    if (moyal_beta_thresholds(&t) != MOYAL_STATUS_OK) return 11;
    double q = 0.0;
    if (moyal_quantum_length_squared(g, g, &q) != MOYAL_STATUS_OK) return 12;
    MoyalState *bad = NULL;
    if (moyal_eigenstate(500, 64, 1.0, &bad) != MOYAL_STATUS_OUT_OF_RANGE) return 13;
    if (moyal_last_error_message()[0] == '\0') return 14;
    MoyalEstimate *e = NULL;
    if (moyal_double_distance(g, 1, g, 2, 4.0, false, 0.0, 0.0, NULL, &e) != MOYAL_STATUS_OK) return 15;
    printf("%.12f %.12f %.12f\n", t.beta1, q, moyal_estimate_lower(e));
    moyal_estimate_free(e);
    moyal_state_free(g);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn find_cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = find_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = target_dir().join("libmoyal_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "compile failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "program exited with {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    let v: Vec<f64> = text.split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert!((v[0] - 0.2012007429157587).abs() < 1e-12);
    assert!((v[1] - 2.0).abs() < 1e-12);
    assert!((v[2] - 0.25).abs() < 1e-12);
}
