use std::ffi::{c_char, CString};
use std::ptr;

use typedmood_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { tm_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn bin_mood_thresholds() {
    let mut c = 99u32;
    for (score, want) in [(0, 0), (33, 0), (34, 1), (66, 1), (67, 2), (100, 2)] {
        assert_eq!(unsafe { tm_bin_mood(score, &mut c) }, TmStatus::Ok);
        assert_eq!(c, want, "score {score}");
    }
    assert_eq!(unsafe { tm_bin_mood(101, &mut c) }, TmStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { tm_bin_mood(5, ptr::null_mut()) }, TmStatus::NullPointer);
}

#[test]
fn macro_f1_and_absent_class() {
    let y = [0u32, 0, 1, 1];
    let mut f = 0.0;
    assert_eq!(unsafe { tm_macro_f1(y.as_ptr(), y.as_ptr(), 4, 2, &mut f) }, TmStatus::Ok);
    assert!((f - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { tm_macro_f1(y.as_ptr(), y.as_ptr(), 4, 3, &mut f) }, TmStatus::Ok);
    assert!((f - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn rank_sum_small_exact() {
    let (a, b) = ([1.0, 2.0], [3.0, 4.0]);
    let mut r = TmRankSum::default();
    assert_eq!(unsafe { tm_wilcoxon_rank_sum(a.as_ptr(), 2, b.as_ptr(), 2, &mut r) }, TmStatus::Ok);
    assert!(r.exact);
    assert!((r.p_less - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn signed_rank_all_positive() {
    let a = [2.0, 3.0, 4.0, 5.0, 6.0];
    let b = [1.0; 5];
    let mut r = TmSignedRank::default();
    assert_eq!(unsafe { tm_wilcoxon_signed_rank(a.as_ptr(), b.as_ptr(), 5, &mut r) }, TmStatus::Ok);
    assert_eq!(r.w_plus, 15.0);
    assert!((r.p_greater - 1.0 / 32.0).abs() < 1e-12);
}

#[test]
fn compute_r_cases() {
    let (mut r, mut neg) = (0.0, false);
    assert_eq!(unsafe { tm_compute_r(0.9, 0.5, 0.6, 0.5, &mut r, &mut neg) }, TmStatus::Ok);
    assert!((r - 4.0).abs() < 1e-9);
    assert!(!neg);
    unsafe { tm_compute_r(0.9, 0.5, 0.6, 0.6, &mut r, &mut neg) };
    assert!(r.is_infinite());
}

#[test]
fn pareto_mask_small() {
    let t = [0.5, 0.6, 0.4];
    let s = [0.3, 0.5, 0.6];
    let mut m = [false; 3];
    assert_eq!(unsafe { tm_pareto_front(t.as_ptr(), s.as_ptr(), 3, m.as_mut_ptr()) }, TmStatus::Ok);
    assert_eq!(m, [true, true, false]);
}

#[test]
fn dataset_roundtrip_and_features() {
    let mut cfg = unsafe { std::mem::zeroed::<TmGenConfig>() };
    assert_eq!(unsafe { tm_gen_config_default(&mut cfg) }, TmStatus::Ok);
    cfg.n_users = 3;
    cfg.n_days_per_user = 20;
    cfg.total_days = 0;
    let mut ds: *mut TmDataset = ptr::null_mut();
    assert_eq!(unsafe { tm_generate(&cfg, &mut ds) }, TmStatus::Ok, "{}", last_error());
    let (mut n, mut users, mut dim) = (0usize, 0usize, 0usize);
    let code = CString::new("tka").unwrap();
    unsafe {
        assert_eq!(tm_dataset_len(ds, &mut n), TmStatus::Ok);
        assert_eq!(tm_dataset_n_users(ds, &mut users), TmStatus::Ok);
        assert_eq!(tm_dataset_input_dim(ds, code.as_ptr(), &mut dim), TmStatus::Ok);
    }
    assert_eq!(n, 60);
    assert_eq!(users, 3);
    let mut x = vec![0.0; n * dim];
    assert_eq!(unsafe { tm_dataset_features(ds, code.as_ptr(), x.as_mut_ptr(), x.len() - 1) }, TmStatus::BufferTooSmall);
    assert_eq!(unsafe { tm_dataset_features(ds, code.as_ptr(), x.as_mut_ptr(), x.len()) }, TmStatus::Ok);
    assert!(x.iter().all(|v| v.is_finite()));
    let (mut moods, mut uid) = (vec![9u32; n], vec![9u32; n]);
    assert_eq!(unsafe { tm_dataset_labels(ds, moods.as_mut_ptr(), uid.as_mut_ptr(), n) }, TmStatus::Ok);
    assert!(moods.iter().all(|&m| m < 3));
    assert!(uid.iter().all(|&u| u < 3));

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.tsv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tm_dataset_save(ds, path.as_ptr()) }, TmStatus::Ok, "{}", last_error());
    let mut back: *mut TmDataset = ptr::null_mut();
    assert_eq!(unsafe { tm_dataset_load(path.as_ptr(), &mut back) }, TmStatus::Ok, "{}", last_error());
    let mut x2 = vec![0.0; n * dim];
    assert_eq!(unsafe { tm_dataset_features(back, code.as_ptr(), x2.as_mut_ptr(), x2.len()) }, TmStatus::Ok);
    for (a, b) in x.iter().zip(&x2) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
    unsafe {
        tm_dataset_free(ds);
        tm_dataset_free(back);
        tm_dataset_free(ptr::null_mut());
    }
}

#[test]
fn bad_paths_and_codes() {
    let mut ds: *mut TmDataset = ptr::null_mut();
    let p = CString::new("/nonexistent/dataset.tsv").unwrap();
    assert_eq!(unsafe { tm_dataset_load(p.as_ptr(), &mut ds) }, TmStatus::Io);
    assert!(ds.is_null());
    let mut m: *mut TmModel = ptr::null_mut();
    assert_eq!(unsafe { tm_model_load(ptr::null(), &mut m) }, TmStatus::NullPointer);
}

#[test]
fn model_predicts_through_handle() {
    use typedmood::artifact::{Artifact, Model};
    let model = Model::Majority { model: typedmood::nnet::majority_baseline(&[1, 1, 2]).unwrap() };
    let art = Artifact::new(model, 0, "mood", "tka", "fp", 4, 3, None);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    art.save(&path).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut h: *mut TmModel = ptr::null_mut();
    assert_eq!(unsafe { tm_model_load(c.as_ptr(), &mut h) }, TmStatus::Ok, "{}", last_error());
    let (mut d, mut k) = (0, 0);
    unsafe {
        tm_model_input_dim(h, &mut d);
        tm_model_n_classes(h, &mut k);
    }
    assert_eq!((d, k), (4, 3));
    let x = [0.0; 8];
    let mut out = [9u32; 2];
    assert_eq!(unsafe { tm_model_predict(h, x.as_ptr(), 2, 4, out.as_mut_ptr()) }, TmStatus::Ok);
    assert_eq!(out, [1, 1]);
    assert_eq!(unsafe { tm_model_predict(h, x.as_ptr(), 2, 3, out.as_mut_ptr()) }, TmStatus::DimensionMismatch);
    unsafe { tm_model_free(h) };
}
