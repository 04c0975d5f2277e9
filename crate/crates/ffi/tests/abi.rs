use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use repairbench_ffi::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    rb_string_free(p);
    s
}

unsafe fn last_error() -> String {
    CStr::from_ptr(rb_last_error_message()).to_str().unwrap().to_string()
}

#[test]
fn clean_and_match() {
    unsafe {
        let mut out = ptr::null_mut();
        let raw = cs("```java\nreturn x ;\n```");
        assert_eq!(rb_clean(raw.as_ptr(), &mut out), RbStatus::Ok);
        assert_eq!(take(out), "return x ;");

        let mut m = -1;
        assert_eq!(rb_exact_match(cs("a  b").as_ptr(), cs("a b").as_ptr(), &mut m), RbStatus::Ok);
        assert_eq!(m, 1);
        assert_eq!(rb_exact_match(ptr::null(), cs("a").as_ptr(), &mut m), RbStatus::NullPointer);
        assert!(last_error().contains("prediction"));

        let bad = [0xffu8, 0];
        assert_eq!(rb_clean(bad.as_ptr().cast(), &mut out), RbStatus::InvalidUtf8);
    }
}

#[test]
fn scores() {
    unsafe {
        let h = [cs("int x = 1 ;"), cs("return y ;")];
        let hp: Vec<*const c_char> = h.iter().map(|s| s.as_ptr()).collect();
        let mut bleu = 0.0;
        assert_eq!(rb_bleu4(hp.as_ptr(), hp.as_ptr(), 2, &mut bleu), RbStatus::Ok);
        assert!((bleu - 100.0).abs() < 1e-9);

        let mut cb = 0.0;
        let mut failed = -1;
        assert_eq!(rb_codebleu(h[0].as_ptr(), h[0].as_ptr(), &mut cb, &mut failed), RbStatus::Ok);
        assert_eq!((cb, failed), (100.0, 0));
        assert_eq!(rb_codebleu(cs("{{{").as_ptr(), h[0].as_ptr(), &mut cb, ptr::null_mut()), RbStatus::Ok);
        assert!((0.0..100.0).contains(&cb));

        let mut n = 0;
        assert_eq!(rb_sample_size(1719, 0.95, 0.05, &mut n), RbStatus::Ok);
        assert_eq!(n, 314);
        assert_eq!(rb_sample_size(0, 0.95, 0.05, &mut n), RbStatus::InvalidArgument);
        assert!(!last_error().is_empty());

        let (a, b) = ([1u8, 0, 1, 0], [1u8, 0, 0, 1]);
        let mut k = 9.0;
        assert_eq!(rb_cohen_kappa(a.as_ptr(), b.as_ptr(), 4, &mut k), RbStatus::Ok);
        assert_eq!(k, 0.0);
        let c = [2u8, 0, 0, 0];
        assert_eq!(rb_cohen_kappa(c.as_ptr(), b.as_ptr(), 4, &mut k), RbStatus::InvalidArgument);
    }
}

#[test]
fn index_handle() {
    unsafe {
        let ids = [cs("a"), cs("b"), cs("c")];
        let reviews = [cs("rename this variable"), cs("remove the debug print"), cs("add a null check")];
        let ip: Vec<_> = ids.iter().map(|s| s.as_ptr()).collect();
        let rp: Vec<_> = reviews.iter().map(|s| s.as_ptr()).collect();
        let mut index = ptr::null_mut();
        assert_eq!(rb_index_new(ip.as_ptr(), rp.as_ptr(), 3, &mut index), RbStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(rb_index_top_k(index, reviews[1].as_ptr(), 1, &mut out), RbStatus::Ok);
        let hits: Vec<(String, f64)> = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(hits[0].0, "b");
        assert!((hits[0].1 - 1.0).abs() < 1e-9);
        rb_index_free(index);
        rb_index_free(ptr::null_mut());

        let mut empty = ptr::null_mut();
        assert_eq!(rb_index_new(ptr::null(), ptr::null(), 0, &mut empty), RbStatus::InvalidArgument);
        assert_eq!(rb_index_top_k(ptr::null(), reviews[0].as_ptr(), 1, &mut out), RbStatus::NullPointer);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/repairbench.h")).unwrap();
    for f in [
        "rb_clean",
        "rb_exact_match",
        "rb_bleu4",
        "rb_codebleu",
        "rb_sample_size",
        "rb_cohen_kappa",
        "rb_index_new",
        "rb_index_top_k",
        "rb_index_free",
        "rb_string_free",
        "rb_last_error_message",
        "rb_version",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f}");
    }
    assert!(header.contains("typedef struct RbTfidfIndex RbTfidfIndex;"));
}

/// Compile and run a small C program against the header and static library.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("librepairbench_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src: PathBuf = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "repairbench.h"
int main(void) {
    uint64_t n = 0;
    if (rb_sample_size(2955, 0.95, 0.05, &n) != RB_STATUS_OK || n != 340) return 1;
    char *out = NULL;
    if (rb_clean("Fixed Code:\n```\nreturn 1 ;\n```", &out) != RB_STATUS_OK) return 2;
    if (strcmp(out, "return 1 ;") != 0) return 3;
    rb_string_free(out);
    if (rb_clean(NULL, &out) != RB_STATUS_NULL_POINTER) return 4;
    if (strlen(rb_last_error_message()) == 0) return 5;
    printf("%s\n", rb_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I", include])
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
