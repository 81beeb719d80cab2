use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pedrisk::dataset::TargetKind;
use pedrisk::ensemble::{BoostParams, BoostedModel, ForestModel, ForestParams, Model, ModelFile};
use pedrisk::geo::{boundaries_to_geojson, grid_districts, BoundaryLayout};
use pedrisk::tree::Tree;
use pedrisk_ffi::*;

fn forest_file() -> ModelFile {
    let model = Model::Forest(ForestModel {
        trees: vec![Tree::stump(1, 0.5, (0.2, 4.0), (0.9, 2.0)), Tree::stump(0, 3.0, (0.4, 3.0), (0.6, 3.0))],
        params: ForestParams::default(),
        seed: 7,
        n_features: 2,
    });
    ModelFile::new(model, TargetKind::Pedestrian, vec!["a".into(), "b".into()])
}

fn boosted_file() -> ModelFile {
    let model = Model::Boosted(BoostedModel {
        trees: vec![Tree::stump(0, 1.5, (-0.8, 5.0), (1.1, 5.0))],
        learning_rate: 0.3,
        l2_lambda: 1.0,
        base_score: -0.25,
        positive_weight: 1.0,
        n_rounds: 1,
        params: BoostParams::default(),
        seed: 7,
        n_features: 2,
        train_loss: Vec::new(),
    });
    ModelFile::new(model, TargetKind::OverSerious, vec!["a".into(), "b".into()])
}

fn load(file: &ModelFile) -> *mut PedriskModel {
    let json = CString::new(file.to_json().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pedrisk_model_from_json(json.as_ptr(), &mut h) }, PedriskStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let p = pedrisk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn predict_matches_the_library() {
    let file = forest_file();
    let h = load(&file);
    assert_eq!(unsafe { pedrisk_model_n_features(h) }, 2);
    let rows = [0.0, 0.0, 5.0, 1.0, 3.0, 0.5];
    let mut out = [0.0; 3];
    let s = unsafe { pedrisk_model_predict(h, rows.as_ptr(), 3, 2, out.as_mut_ptr()) };
    assert_eq!(s, PedriskStatus::Ok);
    for (r, o) in rows.chunks(2).zip(out) {
        assert_eq!(o, file.model.predict_row(r).unwrap());
    }
    unsafe { pedrisk_model_free(h) };
}

#[test]
fn shap_reconstructs_the_output() {
    for (file, log_odds) in [(forest_file(), 0), (boosted_file(), 1)] {
        let h = load(&file);
        let row = [2.0, 0.7];
        let mut phi = [f64::NAN; 2];
        let mut base = f64::NAN;
        let mut scale = -1;
        let s = unsafe { pedrisk_model_shap(h, row.as_ptr(), 2, phi.as_mut_ptr(), &mut base, &mut scale) };
        assert_eq!(s, PedriskStatus::Ok);
        assert_eq!(scale, log_odds);
        let p = file.model.predict_row(&row).unwrap();
        let out = if log_odds == 1 { pedrisk::math::logit(p) } else { p };
        assert!((base + phi[0] + phi[1] - out).abs() < 1e-9);
        unsafe { pedrisk_model_free(h) };
    }
}

#[test]
fn narrow_rows_are_rejected() {
    let h = load(&forest_file());
    let rows = [0.0, 1.0];
    let mut out = [0.0; 2];
    let s = unsafe { pedrisk_model_predict(h, rows.as_ptr(), 2, 1, out.as_mut_ptr()) };
    assert_eq!(s, PedriskStatus::InvalidArgument);
    assert!(last_error().contains("columns"));
    unsafe { pedrisk_model_free(h) };
}

#[test]
fn load_from_disk_and_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    forest_file().save(&path).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pedrisk_model_load(c.as_ptr(), &mut h) }, PedriskStatus::Ok);
    unsafe { pedrisk_model_free(h) };

    let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pedrisk_model_load(missing.as_ptr(), &mut h) }, PedriskStatus::Io);
    assert!(h.is_null());
    assert!(last_error().contains("nope.json"));

    let doc = forest_file().to_json().unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    let c = CString::new(doc).unwrap();
    assert_eq!(unsafe { pedrisk_model_from_json(c.as_ptr(), &mut h) }, PedriskStatus::Parse);
    assert!(last_error().contains("99"));

    assert_eq!(unsafe { pedrisk_model_load(ptr::null(), &mut h) }, PedriskStatus::NullPointer);
    let bad = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { pedrisk_model_load(bad.as_ptr().cast(), &mut h) }, PedriskStatus::InvalidUtf8);
    unsafe { pedrisk_model_free(ptr::null_mut()) };
    assert_eq!(unsafe { pedrisk_model_n_features(ptr::null()) }, 0);
}

#[test]
fn roc_auc_with_ties() {
    let labels = [0u8, 0, 1, 1];
    let scores = [0.1, 0.5, 0.5, 0.9];
    let mut auc = 0.0;
    let s = unsafe { pedrisk_roc_auc(labels.as_ptr(), scores.as_ptr(), 4, &mut auc) };
    assert_eq!(s, PedriskStatus::Ok);
    assert_eq!(auc, 0.875);

    let one = [1u8, 1];
    let s = unsafe { pedrisk_roc_auc(one.as_ptr(), scores.as_ptr(), 2, &mut auc) };
    assert_eq!(s, PedriskStatus::InvalidArgument);
}

#[test]
fn districts_locate_points() {
    let polys = grid_districts(100.0, 2, 2).unwrap();
    let text = CString::new(boundaries_to_geojson(&polys, &BoundaryLayout::default()).unwrap()).unwrap();
    let mut d = ptr::null_mut();
    let s = unsafe { pedrisk_districts_from_geojson(text.as_ptr(), ptr::null(), ptr::null(), &mut d) };
    assert_eq!(s, PedriskStatus::Ok);
    assert_eq!(unsafe { pedrisk_districts_len(d) }, 4);
    for (k, p) in polys.iter().enumerate() {
        let id = unsafe { CStr::from_ptr(pedrisk_districts_id(d, k)) };
        assert_eq!(id.to_str().unwrap(), p.district_id);
        let c = [(p.bbox.min[0] + p.bbox.max[0]) / 2.0, (p.bbox.min[1] + p.bbox.max[1]) / 2.0];
        let mut idx = -2;
        assert_eq!(unsafe { pedrisk_districts_locate(d, c[0], c[1], &mut idx) }, PedriskStatus::Ok);
        assert_eq!(idx, k as i64);
    }
    assert!(unsafe { pedrisk_districts_id(d, 4) }.is_null());
    let mut idx = 0;
    assert_eq!(unsafe { pedrisk_districts_locate(d, -5.0, 1.0, &mut idx) }, PedriskStatus::Ok);
    assert_eq!(idx, -1);
    assert_eq!(unsafe { pedrisk_districts_locate(d, f64::NAN, 1.0, &mut idx) }, PedriskStatus::InvalidArgument);
    unsafe { pedrisk_districts_free(d) };

    let bad = CString::new(r#"{"type":"FeatureCollection","features":[{"properties":{},"geometry":null}]}"#).unwrap();
    let mut d = ptr::null_mut();
    let s = unsafe { pedrisk_districts_from_geojson(bad.as_ptr(), ptr::null(), ptr::null(), &mut d) };
    assert_eq!(s, PedriskStatus::Geometry);
    assert!(d.is_null());
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pedrisk.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pedrisk_last_error",
        "pedrisk_model_load",
        "pedrisk_model_predict",
        "pedrisk_model_shap",
        "pedrisk_roc_auc",
        "pedrisk_districts_locate",
        "PEDRISK_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).status() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
