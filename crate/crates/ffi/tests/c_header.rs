//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler or archive is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "kdv_ffi.h"

int main(void) {
    KdvSolver *h = NULL;
    double g = 6.0;
    if (kdv_solver_new(-6.0, 6.0, 32, 64, 1.0, KDV_ADVECTION_CONSTANT, &g, 1, &h) != KDV_STATUS_OK) return 1;
    if (kdv_solver_initialize_gaussian(h, 0.0, 1.0) != KDV_STATUS_OK) return 2;
    if (kdv_solver_advance(h, 64) != KDV_STATUS_OK) return 3;
    if (kdv_solver_advance(h, 1) != KDV_STATUS_FINISHED) return 4;
    double x = 0.0, u = 0.0;
    if (kdv_solver_evaluate(h, &x, 1, 0, &u) != KDV_STATUS_OK) return 5;
    kdv_solver_free(h);
    if (kdv_solver_new(-6.0, 6.0, 2, 64, 1.0, KDV_ADVECTION_CONSTANT, &g, 1, &h) != KDV_STATUS_INVALID_ARGUMENT) return 6;
    char buf[256];
    size_t n = kdv_last_error_message(buf, sizeof buf);
    if (n == 0) return 7;
    printf("%.6f %s\n", u, buf);
    return isfinite(u) ? 0 : 8;
}
"#;

fn artifact_dir() -> PathBuf {
    // target/<profile>/deps/<test-binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

fn have(cmd: &str) -> bool {
    Command::new(cmd).arg("--version").output().is_ok()
}

#[test]
fn header_compiles_and_links() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("kdv_ffi.h").exists(), "header not generated");
    let lib = artifact_dir().join("libkdv_ffi.a");
    if !have("cc") || !lib.exists() {
        eprintln!("skipping: cc or {} missing", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "cc failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stdout));
    assert!(String::from_utf8_lossy(&run.stdout).contains("N must be at least 8"));
}
