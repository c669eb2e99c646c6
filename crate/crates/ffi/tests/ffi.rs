use std::f64::consts::PI;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use dmkp_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        dmkp_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn grid(nx: usize, ny: usize) -> *mut DmkpGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { dmkp_grid_new(nx, ny, 2.0 * PI, 2.0 * PI, &mut g) }, DmkpStatus::Ok);
    g
}

fn samples(nx: usize, ny: usize) -> Vec<f64> {
    (0..nx * ny)
        .map(|i| {
            let x = (i % nx) as f64 * 2.0 * PI / nx as f64;
            let y = (i / nx) as f64 * 2.0 * PI / ny as f64;
            0.3 * (x + y).cos() + 0.1 * (2.0 * x).sin()
        })
        .collect()
}

#[test]
fn field_round_trip_and_norm() {
    unsafe {
        let g = grid(16, 8);
        let mut len = 0;
        assert_eq!(dmkp_grid_len(g, &mut len), DmkpStatus::Ok);
        assert_eq!(len, 128);
        let data = samples(16, 8);
        let mut f = ptr::null_mut();
        assert_eq!(dmkp_field_from_real(g, data.as_ptr(), data.len(), &mut f), DmkpStatus::Ok);
        let mut back = vec![0.0; 128];
        assert_eq!(dmkp_field_to_real(f, back.as_mut_ptr(), back.len()), DmkpStatus::Ok);
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut norm = 0.0;
        assert_eq!(dmkp_field_sobolev_norm(f, 0.0, 0.0, &mut norm), DmkpStatus::Ok);
        let l2 = (data.iter().map(|v| v * v).sum::<f64>() * (2.0 * PI / 16.0) * (2.0 * PI / 8.0)).sqrt();
        assert!((norm - 2.0 * PI * l2).abs() < 1e-12);
        assert_eq!(
            dmkp_field_to_real(f, back.as_mut_ptr(), 5),
            DmkpStatus::InvalidArgument
        );
        assert!(last_error().contains("size mismatch"));
        dmkp_field_free(f);
        dmkp_grid_free(g);
    }
}

#[test]
fn null_pointers_and_bad_arguments_are_reported() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(dmkp_grid_new(15, 8, 1.0, 1.0, &mut g), DmkpStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(last_error().contains("nx = 15"));
        assert_eq!(dmkp_grid_new(16, 8, 1.0, 1.0, ptr::null_mut()), DmkpStatus::NullPointer);
        let mut norm = 0.0;
        assert_eq!(dmkp_field_sobolev_norm(ptr::null(), 0.0, 0.0, &mut norm), DmkpStatus::NullPointer);
        let mut p = ptr::null_mut();
        assert_eq!(
            dmkp_params_new(1.0, 1.0, 0.5, DmkpDissipation::Dmkp, &mut p),
            DmkpStatus::InvalidArgument
        );
        // freeing null is a no-op
        dmkp_grid_free(ptr::null_mut());
        dmkp_field_free(ptr::null_mut());
        dmkp_params_free(ptr::null_mut());
        let v = CStr::from_ptr(dmkp_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn simulate_matches_the_core_library() {
    unsafe {
        let g = grid(32, 1);
        let data: Vec<f64> = (0..32).map(|i| 0.2 * (i as f64 * 2.0 * PI / 32.0).sin()).collect();
        let mut f = ptr::null_mut();
        assert_eq!(dmkp_field_from_real(g, data.as_ptr(), 32, &mut f), DmkpStatus::Ok);
        let mut p = ptr::null_mut();
        assert_eq!(dmkp_params_new(1.0, 1.0, 1.0, DmkpDissipation::Dmkp, &mut p), DmkpStatus::Ok);
        let mut u = ptr::null_mut();
        assert_eq!(dmkp_simulate(f, p, 0.1, 0.01, &mut u), DmkpStatus::Ok);
        let mut out = vec![0.0; 32];
        assert_eq!(dmkp_field_to_real(u, out.as_mut_ptr(), 32), DmkpStatus::Ok);

        let cg = dmkp_core::spectral::SpectralGrid::new(32, 1, 2.0 * PI, 2.0 * PI).unwrap();
        let phi = dmkp_core::spectral::forward(&dmkp_core::spectral::RealField::new(cg, data).unwrap());
        let params = dmkp_core::symbols::ModelParams::default();
        let expect = dmkp_core::propagator::simulate(&phi, 0.1, 0.01, &params, usize::MAX, |_| {}).unwrap();
        let expect = dmkp_core::spectral::inverse(&expect.field);
        assert_eq!(out.as_slice(), expect.data());

        let mut bad = ptr::null_mut();
        assert_eq!(dmkp_simulate(f, p, 0.1, 0.03, &mut bad), DmkpStatus::InvalidArgument);
        assert!(bad.is_null());
        for h in [u, f] {
            dmkp_field_free(h);
        }
        dmkp_params_free(p);
        dmkp_grid_free(g);
    }
}

#[test]
fn illposed_norm_through_the_abi() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(dmkp_params_new(1.0, 1.0, 1.0, DmkpDissipation::Dmkp, &mut p), DmkpStatus::Ok);
        let mut v = 0.0;
        assert_eq!(dmkp_illposed_iterate_norm(16.0, -0.75, 0.1, 8, p, &mut v), DmkpStatus::Ok);
        let cfg = dmkp_core::illposed::ScanConfig::default();
        let expect = dmkp_core::illposed::iterate_norm(16.0, -0.75, &dmkp_core::symbols::ModelParams::default(), &cfg).unwrap();
        assert_eq!(v, expect);
        assert_eq!(dmkp_illposed_iterate_norm(16.0, -0.75, 0.1, 4, p, &mut v), DmkpStatus::InvalidArgument);
        dmkp_params_free(p);
    }
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.fld").to_str().unwrap()).unwrap();
    unsafe {
        let g = grid(8, 8);
        let data = samples(8, 8);
        let mut f = ptr::null_mut();
        assert_eq!(dmkp_field_from_real(g, data.as_ptr(), 64, &mut f), DmkpStatus::Ok);
        assert_eq!(dmkp_snapshot_write(f, 1.25, path.as_ptr()), DmkpStatus::Ok);
        let (mut g2, mut f2, mut t) = (ptr::null_mut(), ptr::null_mut(), 0.0);
        assert_eq!(dmkp_snapshot_read(path.as_ptr(), &mut g2, &mut f2, &mut t), DmkpStatus::Ok);
        assert_eq!(t, 1.25);
        let mut back = vec![0.0; 64];
        assert_eq!(dmkp_field_to_real(f2, back.as_mut_ptr(), 64), DmkpStatus::Ok);
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        let missing = CString::new(dir.path().join("none.fld").to_str().unwrap()).unwrap();
        assert_eq!(dmkp_snapshot_read(missing.as_ptr(), &mut g2, &mut f2, &mut t), DmkpStatus::Io);
        dmkp_field_free(f);
        dmkp_field_free(f2);
        dmkp_grid_free(g);
        dmkp_grid_free(g2);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dmkp.h")).unwrap();
    for name in [
        "typedef struct DmkpGrid DmkpGrid;",
        "typedef struct DmkpField DmkpField;",
        "typedef struct DmkpParams DmkpParams;",
        "DMKP_STATUS_OK = 0",
        "DMKP_STATUS_PANIC = 5",
        "dmkp_grid_new",
        "dmkp_field_from_real",
        "dmkp_field_sobolev_norm",
        "dmkp_simulate",
        "dmkp_illposed_iterate_norm",
        "dmkp_snapshot_read",
        "dmkp_last_error_message",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Compiles and runs a small C program against the header and static library
/// when a C compiler is on the path.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "dmkp.h"
int main(void) {
    DmkpGrid *g = NULL;
    if (dmkp_grid_new(8, 8, 6.283185307179586, 6.283185307179586, &g) != DMKP_STATUS_OK) return 1;
    double data[64];
    for (int i = 0; i < 64; i++) data[i] = (i % 8 == 1) ? 1.0 : 0.0;
    DmkpField *f = NULL;
    if (dmkp_field_from_real(g, data, 64, &f) != DMKP_STATUS_OK) return 2;
    double n = 0.0;
    if (dmkp_field_sobolev_norm(f, 0.0, 0.0, &n) != DMKP_STATUS_OK) return 3;
    DmkpGrid *bad = NULL;
    if (dmkp_grid_new(7, 8, 1.0, 1.0, &bad) != DMKP_STATUS_INVALID_ARGUMENT) return 4;
    char msg[256];
    dmkp_last_error_message(msg, sizeof msg);
    printf("%.6f %s\n", n, msg);
    dmkp_field_free(f);
    dmkp_grid_free(g);
    return 0;
}
"#,
    )
    .unwrap();
    let lib_dir = build_static_lib();
    let exe = dir.path().join("main");
    let status = std::process::Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(lib_dir.join("libdmkp_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("nx = 7"), "{text}");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}

/// Builds the static library into a scratch target directory and returns
/// the directory holding `libdmkp_ffi.a`. `cargo test` does not produce it.
fn build_static_lib() -> std::path::PathBuf {
    let target = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("staticlib");
    let status = std::process::Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "-p", "dmkp-ffi", "--target-dir"])
        .arg(&target)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .status()
        .unwrap();
    assert!(status.success());
    target.join("debug")
}
