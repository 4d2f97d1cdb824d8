//! Compile and run tests/smoke.c against the generated header and the
//! built cdylib, proving the C ABI end to end.

use std::path::PathBuf;
use std::process::Command;

fn target_debug_dir() -> PathBuf {
    // .../target/debug/deps/c_smoke-<hash> -> .../target/debug
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn find_cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|&cc| Command::new(cc)
            .arg("--version")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)).map(|v| v as _)
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = find_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = target_debug_dir();
    assert!(
        lib_dir.join("libfastckpt_ffi.so").exists(),
        "cdylib not found in {}",
        lib_dir.display()
    );

    let scratch = tempfile::tempdir().unwrap();
    let exe = scratch.path().join("smoke");
    let compile = Command::new(cc)
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .args(["-lfastckpt_ffi", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe)
        .arg(scratch.path())
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "smoke run failed (code {:?}): {}{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c smoke ok"));
}
