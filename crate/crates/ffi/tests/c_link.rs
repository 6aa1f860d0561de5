// SPDX-License-Identifier: Apache-2.0
//! Compiles a C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn static_lib() -> Option<PathBuf> {
    // tests/ binaries live in target/<profile>/deps; the library sits one level up
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libscript_intent_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib() else {
        eprintln!("static library not built; skipping");
        return;
    };
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile_path("si_smoke");
    let status = Command::new(&cc)
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("compiler runs");
    assert!(status.success());
    let run = Command::new(&out).output().expect("program runs");
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "2 /hierarchy/LinearLayout/Button");
    let _ = std::fs::remove_file(out);
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
