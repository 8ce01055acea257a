//! The checked-in header must compile as C and C++, and a C caller linked
//! against the shared library must work.

use std::path::{Path, PathBuf};
use std::process::Command;

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn header_is_valid_c_and_cxx() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    for lang in ["c", "c++"] {
        let status = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(header_dir().join("shsverify.h"))
            .status()
            .unwrap();
        assert!(status.success(), "{lang}");
    }
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include "shsverify.h"

int main(void) {
    ShsHamiltonian *h = NULL;
    if (shs_hamiltonian_blowup(1.0, 0.1, &h) != SHS_STATUS_OK) return 1;
    size_t hy = 0, el = 0, de = 0;
    if (shs_fixed_point_counts(h, 0.3, 61, &hy, &el, &de) != SHS_STATUS_OK) return 2;
    shs_hamiltonian_free(h);
    uint64_t iota = 0;
    if (shs_slope_intersection(3, 1, 17, 7, &iota) != SHS_STATUS_OK) return 3;
    if (shs_slope_intersection(0, 0, 1, 1, &iota) != SHS_STATUS_INVALID_ARGUMENT) return 4;
    char msg[256];
    shs_last_error_message(msg, sizeof msg);
    printf("%zu %zu %zu %llu %s\n", hy, el, de, (unsigned long long)iota, shs_version());
    return msg[0] == 0 ? 5 : 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    // target/<profile>/deps/<this test> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libshsverify_ffi.so");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(cc)
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg(&lib)
        .arg(format!("-Wl,-rpath,{}", profile_dir.display()))
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let line = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        line.trim(),
        format!("2 1 0 4 {}", env!("CARGO_PKG_VERSION"))
    );
}
