//! C ABI over the pedrisk toolkit.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `_free` function. Every fallible call returns a
//! [`PedriskStatus`]; on failure the message is available from
//! [`pedrisk_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pedrisk::ensemble::ModelFile;
use pedrisk::geo::{self, BoundaryLayout, DistrictPolygon};
use pedrisk::shap::{shap_ensemble, OutputScale};
use pedrisk::{metrics, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PedriskStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    Model = 6,
    Explain = 7,
    Geometry = 8,
    Panic = 9,
}

/// A loaded model document.
pub struct PedriskModel {
    file: ModelFile,
}

/// District polygons sorted by id.
pub struct PedriskDistricts {
    polygons: Vec<DistrictPolygon>,
    ids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PedriskStatus {
    match err {
        Error::Io { .. } => PedriskStatus::Io,
        Error::Json(_) | Error::Csv(_) | Error::SchemaVersion(_) => PedriskStatus::Parse,
        Error::LengthMismatch { .. } | Error::FeatureOutOfRange { .. } | Error::SingleClassLabels => {
            PedriskStatus::InvalidArgument
        }
        Error::MissingCover(_) => PedriskStatus::Explain,
        Error::InvalidRing { .. } | Error::Geometry(_) | Error::UnknownDistrict(_) => PedriskStatus::Geometry,
        _ => PedriskStatus::Model,
    }
}

fn fail(status: PedriskStatus, msg: impl Into<String>) -> PedriskStatus {
    set_last_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), PedriskStatus>) -> PedriskStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PedriskStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PedriskStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: pedrisk::Result<T>) -> Result<T, PedriskStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PedriskStatus> {
    if p.is_null() {
        return Err(fail(PedriskStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(PedriskStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), PedriskStatus> {
    if p.is_null() {
        Err(fail(PedriskStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pedrisk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_model_load(path: *const c_char, out: *mut *mut PedriskModel) -> PedriskStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = c_str(path, "path")?;
        let file = lift(ModelFile::load(Path::new(path)))?;
        *out = Box::into_raw(Box::new(PedriskModel { file }));
        Ok(())
    })
}

/// Parses a model from an in-memory JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_model_from_json(json: *const c_char, out: *mut *mut PedriskModel) -> PedriskStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = c_str(json, "json")?;
        let file = lift(ModelFile::from_json(text))?;
        *out = Box::into_raw(Box::new(PedriskModel { file }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a `pedrisk_model_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_model_free(model: *mut PedriskModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of input columns the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_model_n_features(model: *const PedriskModel) -> usize {
    model.as_ref().map_or(0, |m| m.file.model.n_features())
}

/// Positive-class probabilities for `n_rows` row-major rows of width `n_cols`.
///
/// # Safety
/// `rows` must hold `n_rows * n_cols` doubles and `out` room for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_model_predict(
    model: *const PedriskModel,
    rows: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> PedriskStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(PedriskStatus::NullPointer, "model is null"))?;
        if n_rows == 0 {
            return Ok(());
        }
        non_null(rows, "rows")?;
        non_null(out, "out")?;
        let want = m.file.model.n_features();
        if n_cols < want {
            return Err(fail(
                PedriskStatus::InvalidArgument,
                format!("rows have {n_cols} columns; model needs {want}"),
            ));
        }
        let data = std::slice::from_raw_parts(rows, n_rows * n_cols);
        let out = std::slice::from_raw_parts_mut(out, n_rows);
        for (row, o) in data.chunks_exact(n_cols).zip(out.iter_mut()) {
            *o = lift(m.file.model.predict_row(row))?;
        }
        Ok(())
    })
}

/// Per-feature SHAP values for one row. `out_contrib` receives `n_cols`
/// values; `out_base` the expected value. `out_log_odds` (optional) is set to
/// 1 when attributions are on the log-odds scale and 0 for probability.
///
/// # Safety
/// `row` must hold `n_cols` doubles, `out_contrib` room for `n_cols`.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_model_shap(
    model: *const PedriskModel,
    row: *const f64,
    n_cols: usize,
    out_contrib: *mut f64,
    out_base: *mut f64,
    out_log_odds: *mut i32,
) -> PedriskStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(PedriskStatus::NullPointer, "model is null"))?;
        non_null(row, "row")?;
        non_null(out_contrib, "out_contrib")?;
        non_null(out_base, "out_base")?;
        let want = m.file.model.n_features();
        if n_cols < want {
            return Err(fail(PedriskStatus::InvalidArgument, format!("row has {n_cols} columns; model needs {want}")));
        }
        let row = std::slice::from_raw_parts(row, n_cols);
        let ex = lift(shap_ensemble(&m.file.model, row))?;
        let out = std::slice::from_raw_parts_mut(out_contrib, n_cols);
        out.fill(0.0);
        out[..ex.contributions.len()].copy_from_slice(&ex.contributions);
        *out_base = ex.base_value;
        if !out_log_odds.is_null() {
            *out_log_odds = i32::from(ex.scale == OutputScale::LogOdds);
        }
        Ok(())
    })
}

/// ROC-AUC of `scores` against 0/1 `labels`, ties at midrank.
///
/// # Safety
/// `labels` and `scores` must each hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_roc_auc(
    labels: *const u8,
    scores: *const f64,
    n: usize,
    out: *mut f64,
) -> PedriskStatus {
    guard(|| {
        non_null(labels, "labels")?;
        non_null(scores, "scores")?;
        non_null(out, "out")?;
        let labels = std::slice::from_raw_parts(labels, n);
        let scores = std::slice::from_raw_parts(scores, n);
        *out = lift(metrics::roc_auc(labels, scores))?;
        Ok(())
    })
}

/// Parses a GeoJSON FeatureCollection. Null property names fall back to
/// `district_id` and `name`.
///
/// # Safety
/// String arguments must be NUL-terminated or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_districts_from_geojson(
    geojson: *const c_char,
    id_property: *const c_char,
    name_property: *const c_char,
    out: *mut *mut PedriskDistricts,
) -> PedriskStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = c_str(geojson, "geojson")?;
        let mut layout = BoundaryLayout::default();
        if !id_property.is_null() {
            layout.id_property = c_str(id_property, "id_property")?.to_owned();
        }
        if !name_property.is_null() {
            layout.name_property = c_str(name_property, "name_property")?.to_owned();
        }
        let polygons = lift(geo::parse_boundaries(text, &layout))?;
        let ids = polygons.iter().map(|p| CString::new(p.district_id.replace('\0', " ")).unwrap_or_default()).collect();
        *out = Box::into_raw(Box::new(PedriskDistricts { polygons, ids }));
        Ok(())
    })
}

/// # Safety
/// `districts` must come from `pedrisk_districts_from_geojson` or be null.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_districts_free(districts: *mut PedriskDistricts) {
    if !districts.is_null() {
        drop(Box::from_raw(districts));
    }
}

/// # Safety
/// `districts` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_districts_len(districts: *const PedriskDistricts) -> usize {
    districts.as_ref().map_or(0, |d| d.polygons.len())
}

/// Id of district `index`, owned by the handle. Null when out of range.
///
/// # Safety
/// `districts` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_districts_id(districts: *const PedriskDistricts, index: usize) -> *const c_char {
    districts.as_ref().and_then(|d| d.ids.get(index)).map_or(ptr::null(), |c| c.as_ptr())
}

/// Index of the first district (by id) containing the point, or -1.
/// Boundary points count as inside.
///
/// # Safety
/// `districts` must be a live handle; `out_index` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedrisk_districts_locate(
    districts: *const PedriskDistricts,
    x: f64,
    y: f64,
    out_index: *mut i64,
) -> PedriskStatus {
    guard(|| {
        let d = districts.as_ref().ok_or_else(|| fail(PedriskStatus::NullPointer, "districts is null"))?;
        non_null(out_index, "out_index")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(fail(PedriskStatus::InvalidArgument, "coordinates must be finite"));
        }
        let hit = d.polygons.iter().position(|p| geo::point_in_polygon([x, y], p));
        *out_index = hit.map_or(-1, |k| k as i64);
        Ok(())
    })
}
