//! Exercises the C ABI from Rust (the extern functions are plain
//! callables) and, when a C compiler is available, through an actual C
//! translation unit against the generated header.

use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use sparsenet_ffi::*;

fn build(
    kind: SnnConstruction,
    k: usize,
    seed: Option<u64>,
    n: usize,
    m: usize,
) -> *mut SnnTopology {
    let mut out = ptr::null_mut();
    let status =
        unsafe { snn_topology_build(kind, k, seed.is_some(), seed.unwrap_or(0), n, m, &mut out) };
    assert_eq!(status, SnnStatus::Ok);
    assert!(!out.is_null());
    out
}

#[test]
fn topology_round_trip_through_the_abi() {
    let t = build(SnnConstruction::RegularRotating, 2, None, 3, 4);
    unsafe {
        assert_eq!(snn_topology_left_count(t), 3);
        assert_eq!(snn_topology_right_count(t), 4);
        assert_eq!(snn_topology_edge_count(t), 6);
        assert!((snn_topology_density(t) - 0.5).abs() < 1e-15);

        let mut deg = 0usize;
        assert_eq!(snn_topology_row_degree(t, 1, &mut deg), SnnStatus::Ok);
        assert_eq!(deg, 2);

        let mut buf = [0usize; 4];
        let mut written = 0usize;
        assert_eq!(
            snn_topology_copy_row(t, 2, buf.as_mut_ptr(), 4, &mut written),
            SnnStatus::Ok
        );
        assert_eq!(&buf[..written], &[2, 3]);

        // capacity 1 is too small for a degree-2 row
        assert_eq!(
            snn_topology_copy_row(t, 2, buf.as_mut_ptr(), 1, &mut written),
            SnnStatus::BufferTooSmall
        );
        snn_topology_free(t);
    }
}

#[test]
fn error_paths_set_messages() {
    let mut out = ptr::null_mut();
    unsafe {
        // k out of range
        let status = snn_topology_build(
            SnnConstruction::RegularRotating,
            9,
            false,
            0,
            3,
            4,
            &mut out,
        );
        assert_eq!(status, SnnStatus::InvalidDegree);
        let msg = CStr::from_ptr(snn_last_error_message()).to_str().unwrap();
        assert!(msg.contains("invalid degree"), "{msg}");

        // random construction without a seed
        let status = snn_topology_build(SnnConstruction::RandomEdge, 2, false, 0, 3, 4, &mut out);
        assert_eq!(status, SnnStatus::MissingSeed);

        // null out-pointer
        let status = snn_topology_build(
            SnnConstruction::FullyConnected,
            0,
            false,
            0,
            2,
            2,
            ptr::null_mut(),
        );
        assert_eq!(status, SnnStatus::NullPointer);

        // unreadable path
        let bad = CString::new("/definitely/not/here.txt").unwrap();
        let status = snn_topology_read_edge_list(bad.as_ptr(), &mut out);
        assert_eq!(status, SnnStatus::IoError);
    }
}

#[test]
fn spectral_metrics_match_the_k23_closed_form() {
    let t = build(SnnConstruction::FullyConnected, 0, None, 2, 3);
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(snn_spectral_analyze(t, &mut report), SnnStatus::Ok);
        assert!((snn_spectral_lambda2(report) - 2.0).abs() < 1e-8);
        assert!((snn_spectral_largest_nonzero(report) - 5.0).abs() < 1e-8);
        assert!((snn_spectral_second_largest_nonzero(report) - 3.0).abs() < 1e-8);
        assert_eq!(snn_spectral_component_count(report), 1);
        assert_eq!(snn_spectral_eigenvalue_count(report), 5);
        assert!(snn_spectral_zero_tolerance(report) > 0.0);

        let mut eig = [0.0f64; 5];
        let mut written = 0usize;
        assert_eq!(
            snn_spectral_copy_eigenvalues(report, eig.as_mut_ptr(), 5, &mut written),
            SnnStatus::Ok
        );
        assert_eq!(written, 5);
        for (a, b) in eig.iter().zip([0.0, 2.0, 2.0, 3.0, 5.0]) {
            assert!((a - b).abs() < 1e-8);
        }
        snn_spectral_free(report);
        snn_topology_free(t);
    }
}

#[test]
fn edge_list_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("topo.txt");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let t = build(SnnConstruction::RandomDRegular, 3, Some(11), 5, 7);
    unsafe {
        assert_eq!(
            snn_topology_write_edge_list(t, cpath.as_ptr()),
            SnnStatus::Ok
        );
        let mut back = ptr::null_mut();
        assert_eq!(
            snn_topology_read_edge_list(cpath.as_ptr(), &mut back),
            SnnStatus::Ok
        );
        assert_eq!(snn_topology_edge_count(back), snn_topology_edge_count(t));
        assert_eq!(snn_topology_left_count(back), 5);
        // the construction tag, degree and seed survive the file
        assert_eq!(
            snn_topology_construction(back),
            SnnConstruction::RandomDRegular
        );
        assert_eq!(snn_topology_k(back), 3);
        let mut seed = 0u64;
        assert!(snn_topology_seed(back, &mut seed));
        assert_eq!(seed, 11);
        snn_topology_free(back);
        snn_topology_free(t);
    }
}

#[test]
fn train_file_runs_a_tiny_job() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("train.toml");
    std::fs::write(
        &config,
        r#"
[dataset]
kind = "synthetic"
classes = 2
dim = 6
train_per_class = 30
test_per_class = 10
separation = 0.7

[network]
layer_sizes = [6, 5, 2]
epochs = 2
batch_size = 8
learning_rate = 0.05

[train]
constructions = ["regular-rotating", "fully-connected"]
degrees = [3, 0]
seed = 5
checkpoint = "model.snnc"
"#,
    )
    .unwrap();

    let cfg = CString::new(config.to_str().unwrap()).unwrap();
    let profile = CString::new("desk").unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut acc = f64::NAN;
    let status = unsafe {
        snn_train_file(
            cfg.as_ptr(),
            profile.as_ptr(),
            out_dir.as_ptr(),
            42,
            &mut acc,
        )
    };
    assert_eq!(status, SnnStatus::Ok);
    assert!((0.0..=1.0).contains(&acc));
    assert!(dir.path().join("model.snnc").exists());

    // bad profile string is rejected
    let bad = CString::new("warehouse").unwrap();
    let status =
        unsafe { snn_train_file(cfg.as_ptr(), bad.as_ptr(), out_dir.as_ptr(), 42, &mut acc) };
    assert_eq!(status, SnnStatus::ParseError);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(snn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compile and run a C client against the generated header and the
/// built cdylib. Skips quietly when no C compiler is installed.
#[test]
fn c_client_links_and_runs() {
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = cc else {
        eprintln!("skipping C client test: no C compiler found");
        return;
    };

    // target/<profile>/deps/<test-bin> -> target/<profile>
    let mut lib_dir = std::env::current_exe().unwrap();
    lib_dir.pop();
    if lib_dir.ends_with("deps") {
        lib_dir.pop();
    }
    let lib = lib_dir.join("libsparsenet_ffi.so");
    if !lib.exists() {
        eprintln!("skipping C client test: {} not built", lib.display());
        return;
    }
    let include_dir = concat!(env!("CARGO_MANIFEST_DIR"), "/include");

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "sparsenet.h"

int main(void) {
    SnnTopology *t = NULL;
    if (snn_topology_build(SNN_CONSTRUCTION_FIBONACCI_ROTATING, 5, false, 0, 1, 16, &t)
        != SNN_STATUS_OK) {
        fprintf(stderr, "build failed: %s\n", snn_last_error_message());
        return 1;
    }
    size_t row[16];
    size_t got = 0;
    if (snn_topology_copy_row(t, 0, row, 16, &got) != SNN_STATUS_OK || got != 5) {
        return 2;
    }
    /* base offsets of the Fibonacci construction at m=16, k=5 */
    size_t expect[5] = {0, 1, 2, 3, 5};
    for (size_t i = 0; i < 5; i++) {
        if (row[i] != expect[i]) return 3;
    }
    SnnSpectralReport *r = NULL;
    if (snn_spectral_analyze(t, &r) != SNN_STATUS_OK) return 4;
    /* one connected blob plus the 11 untouched right vertices */
    if (snn_spectral_component_count(r) != 12) return 5;
    if (snn_spectral_eigenvalue_count(r) != 17) return 6;
    snn_spectral_free(r);
    snn_topology_free(t);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();

    let exe = dir.path().join("client");
    let compile = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lsparsenet_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("compiler invocation");
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = Command::new(&exe).output().expect("client run");
    assert!(run.status.success(), "client exited {:?}", run.status);
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
