use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use hsdlab_ffi::*;

fn last_error() -> String {
    let p = hsd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn clean_returns_json_tokens() {
    unsafe {
        let mut pre = ptr::null_mut();
        assert_eq!(hsd_preprocessor_new(&mut pre), HsdStatus::Ok);
        let text = CString::new("@USER Great!!! 😂 #BanHate").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(hsd_clean(pre, text.as_ptr(), &mut out), HsdStatus::Ok);
        let json = CStr::from_ptr(out).to_str().unwrap().to_string();
        assert_eq!(json, r#"["great","!","face_with_tears_of_joy","ban","hate"]"#);
        hsd_string_free(out);

        assert_eq!(hsd_clean(pre, ptr::null(), &mut out), HsdStatus::NullPointer);
        assert!(last_error().contains("text"));
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(hsd_clean(pre, bad.as_ptr().cast(), &mut out), HsdStatus::InvalidUtf8);
        hsd_preprocessor_free(pre);
        hsd_preprocessor_free(ptr::null_mut());
    }
}

#[test]
fn split_and_score() {
    unsafe {
        let mut folds = [0u32; 10];
        assert_eq!(hsd_kfold_split(10, 5, 2023, folds.as_mut_ptr()), HsdStatus::Ok);
        assert_eq!(folds, [3, 4, 4, 0, 1, 3, 0, 2, 1, 2]);
        assert_eq!(hsd_kfold_split(3, 5, 2023, folds.as_mut_ptr()), HsdStatus::Argument);

        let preds = [0u8, 0, 1, 1];
        let golds = [0u8, 1, 1, 1];
        let mut m = HsdMetrics::default();
        assert_eq!(hsd_score(preds.as_ptr(), golds.as_ptr(), 4, &mut m), HsdStatus::Ok);
        assert!((m.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
        assert_eq!(m.n, 4);
        let bad = [2u8];
        assert_eq!(hsd_score(bad.as_ptr(), golds.as_ptr(), 1, &mut m), HsdStatus::Argument);
        assert_eq!(hsd_score(preds.as_ptr(), golds.as_ptr(), 0, &mut m), HsdStatus::Argument);
    }
}

#[test]
fn model_round_trip() {
    use hsdlab::fixtures::{generate, write_fixture, FixtureConfig};
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    write_fixture(&generate(&FixtureConfig { n: 40, ..Default::default() }, "t").unwrap(), &csv).unwrap();
    let run = dir.path().join("run");
    let args = [
        "hsdlab", "train", "--train-csv", csv.to_str().unwrap(), "--out-dir", run.to_str().unwrap(),
        "--epochs", "1", "--k", "2", "--embed-dim", "4", "--hidden-dim", "4", "--attention-dim", "4", "--dense-dim", "4",
    ];
    assert_eq!(hsdlab::cli::run(args, None, &mut Vec::new(), &mut Vec::new()), 0);

    unsafe {
        let path = CString::new(run.to_str().unwrap()).unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(hsd_model_open(path.as_ptr(), &mut model), HsdStatus::Ok);
        assert_eq!(hsd_model_num_folds(model), 2);
        let text = CString::new("you idiot 😂").unwrap();
        let (mut prob, mut label) = (0.0, -1);
        assert_eq!(hsd_model_predict(model, text.as_ptr(), 0.5, &mut prob, &mut label), HsdStatus::Ok);
        assert!(prob > 0.0 && prob < 1.0);
        assert_eq!(label, i32::from(prob >= 0.5));
        assert_eq!(hsd_model_predict(model, text.as_ptr(), 0.0, &mut prob, &mut label), HsdStatus::Ok);
        assert_eq!(label, 1);
        hsd_model_free(model);

        let missing = CString::new(dir.path().join("nope").to_str().unwrap()).unwrap();
        assert_eq!(hsd_model_open(missing.as_ptr(), &mut model), HsdStatus::Io);
        assert!(last_error().contains("config.json"));
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(hsd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/hsdlab.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["hsd_model_open", "hsd_model_predict", "hsd_clean", "hsd_score", "HSD_STATUS_CHECKPOINT", "typedef struct HsdModel HsdModel"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        return;
    };
    if !cc.status.success() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"hsdlab.h\"\nint main(void) { HsdModel *m = 0; double p; int32_t l;\n  return hsd_model_predict(m, \"x\", 0.5, &p, &l) == HSD_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}
