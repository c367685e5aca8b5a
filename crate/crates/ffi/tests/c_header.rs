use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "pdmplab.h"

int main(void) {
    double rows[4] = {-1.0, 1.0, 1.0, -1.0};
    double a[2] = {1.0, -1.0};
    PdmplabRateMatrix *q = NULL;
    if (pdmplab_rate_matrix_new(rows, 2, &q) != PDMPLAB_STATUS_OK) return 1;
    double l = 0.0;
    if (pdmplab_moment_growth_rate(q, a, 2, 1.0, &l) != PDMPLAB_STATUS_OK) return 2;
    pdmplab_rate_matrix_free(q);
    if (fabs(l - (-1.0 + sqrt(2.0))) > 1e-10) return 3;

    PdmplabGene *g = NULL;
    if (pdmplab_gene_new(2.0, 1.0, 5.0, 2.0, 1.0, 1.0, &g) != PDMPLAB_STATUS_CONFIG) return 4;
    if (g != NULL || pdmplab_last_error() == NULL) return 5;
    printf("%s %.12f\n", pdmplab_version(), l);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let dir = target_dir();
    let lib = dir.join(format!("{}pdmplab_ffi{}", std::env::consts::DLL_PREFIX, std::env::consts::DLL_SUFFIX));
    assert!(lib.exists(), "{} not built", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let bin = tmp.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let st = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&dir)
        .args(["-lpdmplab_ffi", "-lm"])
        .output()
        .expect("C compiler");
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let run = Command::new(&bin).env("LD_LIBRARY_PATH", &dir).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let out = String::from_utf8(run.stdout).unwrap();
    assert!(out.starts_with(env!("CARGO_PKG_VERSION")), "{out}");
}
