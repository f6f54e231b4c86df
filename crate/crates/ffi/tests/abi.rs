use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lolab_ffi::*;

fn last() -> String {
    unsafe { CStr::from_ptr(lolab_last_error()) }.to_string_lossy().into_owned()
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { lolab_string_free(s) };
    out
}

#[test]
fn multiset_and_rho() {
    let vals = [1i64, 2, 3];
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { lolab_multiset_new(vals.as_ptr(), 3, &mut m) }, LolabStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { lolab_multiset_len(m, &mut n) }, LolabStatus::Ok);
    assert_eq!(n, 3);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lolab_rho(m, ptr::null(), &mut out) }, LolabStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["rho"], "1/4");

    let lazy = CString::new(r#"{"label":"lazy","mu":"1/2"}"#).unwrap();
    assert_eq!(unsafe { lolab_rho(m, lazy.as_ptr(), &mut out) }, LolabStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    let eta = lolab::EtaSpec::lazy(lolab::rational::ratio(1, 2)).unwrap();
    let want = lolab::walks::rho(&lolab::StepMultiset::new(vals).unwrap(), &eta).unwrap();
    assert_eq!(v["rho"], lolab::rational::format(&want.rho));

    let bad = CString::new("{").unwrap();
    assert_eq!(unsafe { lolab_rho(m, bad.as_ptr(), &mut out) }, LolabStatus::InvalidInput);
    assert!(last().contains("eta"));
    unsafe { lolab_multiset_free(m) };
}

#[test]
fn null_and_empty_arguments() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { lolab_multiset_new(ptr::null(), 0, &mut m) }, LolabStatus::InvalidInput);
    assert_eq!(unsafe { lolab_multiset_new(ptr::null(), 2, &mut m) }, LolabStatus::NullPointer);
    assert!(last().contains("values"));
    let mut n = 0usize;
    assert_eq!(unsafe { lolab_multiset_len(ptr::null(), &mut n) }, LolabStatus::NullPointer);
    unsafe {
        lolab_multiset_free(ptr::null_mut());
        lolab_gap_free(ptr::null_mut());
        lolab_string_free(ptr::null_mut());
    }
}

#[test]
fn gap_handle() {
    let (gens, bounds) = ([3i64, 10], [2i64, 1]);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { lolab_gap_symmetric(gens.as_ptr(), bounds.as_ptr(), 2, &mut g) }, LolabStatus::Ok);
    let mut vol = 0u64;
    assert_eq!(unsafe { lolab_gap_volume(g, &mut vol) }, LolabStatus::Ok);
    assert_eq!(vol, 15);
    let members: Vec<i64> = (-20..=20)
        .filter(|&x| {
            let mut b = false;
            assert_eq!(unsafe { lolab_gap_contains(g, x, &mut b) }, LolabStatus::Ok);
            b
        })
        .collect();
    assert_eq!(members, [-16, -13, -10, -7, -6, -4, -3, 0, 3, 4, 6, 7, 10, 13, 16]);
    let mut proper = false;
    assert_eq!(unsafe { lolab_gap_is_proper(g, &mut proper) }, LolabStatus::Ok);
    assert!(proper);
    unsafe { lolab_gap_free(g) };
}

#[test]
fn invert_reports_json() {
    let vals = vec![1i64; 60];
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { lolab_multiset_new(vals.as_ptr(), vals.len(), &mut m) }, LolabStatus::Ok);
    let eps = CString::new("1/10").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lolab_invert(m, eps.as_ptr(), 1.5, &mut out) }, LolabStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert!(v["rank"].as_u64().unwrap() <= 1);
    assert!(v["constants"]["inverse_k"].is_number());
    let eps = CString::new("2").unwrap();
    assert_eq!(unsafe { lolab_invert(m, eps.as_ptr(), 1.5, &mut out) }, LolabStatus::InvalidInput);
    unsafe { lolab_multiset_free(m) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(lolab_version()) }.to_str().unwrap();
    assert_eq!(v, lolab::VERSION);
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/lolab.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 12);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

/// Compiles the C smoke test against the header and the static library.
#[test]
fn c_program_links() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    // target/<profile>/deps/abi-* -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("liblolab_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new(&cc)
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
