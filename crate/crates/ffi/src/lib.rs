//! C ABI over `dvd-core`.
//!
//! Images cross the boundary as contiguous `N×H×W×3` `float` buffers with
//! values in `[0, 1]`. The caller owns inputs; outputs are allocated here and
//! must be released with [`dvd_buffer_free`]. Every function returns a
//! [`DvdStatus`]; on failure [`dvd_last_error_message`] describes the error
//! for the calling thread.
//!
//! A [`DvdHandle`] is an immutable snapshot of a configuration and its
//! schedules, safe to share between threads. Ages are passed per call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dvd_core::degradations::{
    corrupt, perturb, AttackKind, CorruptionKind, CorruptionSpec, NoiseAttackSpec,
};
use dvd_core::schedules::{AgeMonths, AnchorDocument, ScheduleSet};
use dvd_core::transforms::DvdConfig;
use dvd_core::{DvdEngine, Error, Image};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidArgument = 3,
    ShapeMismatch = 4,
    NumericalIntegrity = 5,
    Io = 6,
    Panic = 7,
    Internal = 8,
}

/// Opaque engine handle.
pub struct DvdHandle {
    engine: DvdEngine,
    fingerprint: CString,
}

/// Library-allocated `float` array.
#[repr(C)]
pub struct DvdBuffer {
    pub data: *mut f32,
    pub len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut msg = msg.into();
    msg.retain(|c| c != '\0');
    let c = CString::new(msg).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(DvdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidConfig { .. } | Error::Schedule(_) | Error::Json(_) => {
                DvdStatus::InvalidConfig
            }
            Error::InvalidArgument(_) | Error::EmptyImage => DvdStatus::InvalidArgument,
            Error::DimensionMismatch(_) => DvdStatus::ShapeMismatch,
            Error::NumericalIntegrity { .. } => DvdStatus::NumericalIntegrity,
            Error::Io { .. } | Error::Decode { .. } => DvdStatus::Io,
            _ => DvdStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: DvdStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DvdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DvdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DvdStatus::Panic
        }
    }
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(Some(s)),
        Err(_) => fail(DvdStatus::InvalidArgument, format!("{what} is not valid UTF-8")),
    }
}

unsafe fn req_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    match opt_str(p, what)? {
        Some(s) => Ok(s),
        None => fail(DvdStatus::NullPointer, format!("{what} is NULL")),
    }
}

fn make_handle(config: Option<&str>, anchors: Option<&str>) -> Result<Box<DvdHandle>, Failure> {
    let config = match config {
        Some(text) => DvdConfig::from_json(text)?,
        None => DvdConfig::default(),
    };
    let schedules = match anchors {
        Some(text) => ScheduleSet::fit(&AnchorDocument::from_json(text).map_err(Error::from)?)
            .map_err(Error::from)?,
        None => ScheduleSet::builtin().clone(),
    };
    let engine = DvdEngine::new(config, schedules)?;
    let fingerprint = CString::new(engine.fingerprint()).expect("hex has no NUL");
    Ok(Box::new(DvdHandle {
        engine,
        fingerprint,
    }))
}

/// Creates a handle from a JSON config and optional JSON anchor document.
/// NULL `config_json` selects the default config; NULL `anchors_json` the
/// built-in schedules.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dvd_handle_new(
    config_json: *const c_char,
    anchors_json: *const c_char,
    out: *mut *mut DvdHandle,
) -> DvdStatus {
    guard(|| {
        if out.is_null() {
            return fail(DvdStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let config = opt_str(config_json, "config_json")?;
        let anchors = opt_str(anchors_json, "anchors_json")?;
        *out = Box::into_raw(make_handle(config, anchors)?);
        Ok(())
    })
}

/// Creates a handle from a JSON config file with the built-in schedules.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dvd_handle_new_from_file(
    path: *const c_char,
    out: *mut *mut DvdHandle,
) -> DvdStatus {
    guard(|| {
        if out.is_null() {
            return fail(DvdStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let path = req_str(path, "path")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure(DvdStatus::Io, format!("reading {path}: {e}")))?;
        *out = Box::into_raw(make_handle(Some(&text), None)?);
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `handle` must come from a `dvd_handle_new*` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dvd_handle_free(handle: *mut DvdHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Hex SHA-256 fingerprint of the handle's config and schedules; owned by
/// the handle. NULL for a NULL handle.
///
/// # Safety
/// `handle` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn dvd_handle_fingerprint(handle: *const DvdHandle) -> *const c_char {
    match handle.as_ref() {
        Some(h) => h.fingerprint.as_ptr(),
        None => ptr::null(),
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dvd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn dvd_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(
        concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes(),
    ) {
        Ok(s) => s,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Releases a buffer's storage and zeroes it. NULL is ignored.
///
/// # Safety
/// `buffer` must be NULL or a buffer filled by this library.
#[no_mangle]
pub unsafe extern "C" fn dvd_buffer_free(buffer: *mut DvdBuffer) {
    let Some(b) = buffer.as_mut() else { return };
    if !b.data.is_null() {
        drop(Vec::from_raw_parts(b.data, b.len, b.len));
    }
    b.data = ptr::null_mut();
    b.len = 0;
}

struct Batch<'a> {
    data: &'a [f32],
    n: usize,
    height: usize,
    width: usize,
}

impl Batch<'_> {
    fn image_len(&self) -> usize {
        self.height * self.width * 3
    }

    fn image(&self, i: usize) -> Result<Image, Failure> {
        let len = self.image_len();
        let src = &self.data[i * len..(i + 1) * len];
        if let Some(bad) = src.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return fail(
                DvdStatus::InvalidArgument,
                format!("image {i}: value {bad} outside [0, 1]"),
            );
        }
        Ok(Image::new(self.width, self.height, src.iter().map(|&v| v as f64).collect())?)
    }
}

unsafe fn batch<'a>(
    images: *const f32,
    n: usize,
    height: usize,
    width: usize,
) -> Result<Batch<'a>, Failure> {
    if height == 0 || width == 0 {
        return fail(DvdStatus::ShapeMismatch, "height and width must be positive");
    }
    let total = n
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .and_then(|v| v.checked_mul(3))
        .ok_or_else(|| Failure(DvdStatus::ShapeMismatch, "batch size overflows".into()))?;
    let data = if total == 0 {
        &[][..]
    } else if images.is_null() {
        return fail(DvdStatus::NullPointer, "images is NULL");
    } else {
        std::slice::from_raw_parts(images, total)
    };
    Ok(Batch {
        data,
        n,
        height,
        width,
    })
}

unsafe fn emit(out: *mut DvdBuffer, data: Vec<f32>) {
    let mut data = data.into_boxed_slice();
    let len = data.len();
    let p = data.as_mut_ptr();
    std::mem::forget(data);
    *out = DvdBuffer { data: p, len };
}

unsafe fn map_batch(
    images: *const f32,
    n: usize,
    height: usize,
    width: usize,
    out: *mut DvdBuffer,
    f: impl Fn(usize, &Image) -> Result<Image, Failure>,
) -> Result<(), Failure> {
    if out.is_null() {
        return fail(DvdStatus::NullPointer, "out is NULL");
    }
    *out = DvdBuffer {
        data: ptr::null_mut(),
        len: 0,
    };
    let b = batch(images, n, height, width)?;
    let mut result = Vec::with_capacity(b.data.len());
    for i in 0..b.n {
        let img = b.image(i)?;
        let y = f(i, &img)?;
        result.extend(y.data().iter().map(|&v| v as f32));
    }
    emit(out, result);
    Ok(())
}

fn age(months: f64) -> Result<AgeMonths, Failure> {
    AgeMonths::new(months).map_err(|e| Failure(DvdStatus::InvalidArgument, e.to_string()))
}

/// Applies the diet at `age_months` to each of `n` images of `height×width×3`.
///
/// # Safety
/// `images` must hold `n·height·width·3` floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dvd_transform_batch(
    handle: *const DvdHandle,
    images: *const f32,
    n: usize,
    height: usize,
    width: usize,
    age_months: f64,
    out: *mut DvdBuffer,
) -> DvdStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            return fail(DvdStatus::NullPointer, "handle is NULL");
        };
        let t = age(age_months)?;
        map_batch(images, n, height, width, out, |_, img| Ok(h.engine.transform(img, t)?))
    })
}

unsafe fn image_ids<'a>(ids: *const *const c_char, n: usize) -> Result<Vec<String>, Failure> {
    if ids.is_null() {
        return Ok((0..n).map(|i| i.to_string()).collect());
    }
    (0..n)
        .map(|i| req_str(*ids.add(i), "image id").map(str::to_owned))
        .collect()
}

/// Applies one corruption to each image. `image_ids` keys the noise; NULL
/// uses the decimal batch index, otherwise it must hold `n` strings.
///
/// # Safety
/// As [`dvd_transform_batch`]; `kind` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dvd_corrupt_batch(
    images: *const f32,
    n: usize,
    height: usize,
    width: usize,
    kind: *const c_char,
    severity: u8,
    seed: u64,
    image_ids: *const *const c_char,
    out: *mut DvdBuffer,
) -> DvdStatus {
    guard(|| {
        let kind: CorruptionKind = req_str(kind, "kind")?.parse()?;
        let spec = CorruptionSpec::new(kind, severity)?;
        let ids = self::image_ids(image_ids, n)?;
        map_batch(images, n, height, width, out, |i, img| {
            Ok(corrupt(img, &spec, seed, &ids[i])?)
        })
    })
}

/// Applies one black-box noise attack to each image. `image_ids` as in
/// [`dvd_corrupt_batch`].
///
/// # Safety
/// As [`dvd_corrupt_batch`].
#[no_mangle]
pub unsafe extern "C" fn dvd_perturb_batch(
    images: *const f32,
    n: usize,
    height: usize,
    width: usize,
    attack: *const c_char,
    amplitude: u32,
    seed: u64,
    image_ids: *const *const c_char,
    out: *mut DvdBuffer,
) -> DvdStatus {
    guard(|| {
        let kind: AttackKind = req_str(attack, "attack")?.parse()?;
        let spec = NoiseAttackSpec::new(kind, amplitude, seed)?;
        let ids = self::image_ids(image_ids, n)?;
        map_batch(images, n, height, width, out, |i, img| {
            Ok(perturb(img, &spec, &ids[i])?)
        })
    })
}

unsafe fn lookup(
    handle: *const DvdHandle,
    out: *mut f64,
    f: impl FnOnce(&DvdHandle) -> Result<f64, Failure>,
) -> DvdStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            return fail(DvdStatus::NullPointer, "handle is NULL");
        };
        if out.is_null() {
            return fail(DvdStatus::NullPointer, "out is NULL");
        }
        *out = f(h)?;
        Ok(())
    })
}

/// Acuity as MAR (1 = 20/20) at `age_months`.
///
/// # Safety
/// `handle` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dvd_acuity_at(
    handle: *const DvdHandle,
    age_months: f64,
    out: *mut f64,
) -> DvdStatus {
    lookup(handle, out, |h| Ok(h.engine.schedules().acuity_at(age(age_months)?)))
}

/// Contrast sensitivity in `[0, 1]` at `age_months`.
///
/// # Safety
/// `handle` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dvd_contrast_sensitivity_at(
    handle: *const DvdHandle,
    age_months: f64,
    out: *mut f64,
) -> DvdStatus {
    lookup(handle, out, |h| {
        Ok(h.engine.schedules().contrast_sensitivity_at(age(age_months)?))
    })
}

/// Chromatic sensitivity in `[0, 1]` at `age_months`.
///
/// # Safety
/// `handle` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dvd_chromatic_sensitivity_at(
    handle: *const DvdHandle,
    age_months: f64,
    out: *mut f64,
) -> DvdStatus {
    lookup(handle, out, |h| {
        Ok(h.engine.schedules().chromatic_sensitivity_at(age(age_months)?))
    })
}

/// Age in months for a training epoch under the handle's `alpha`.
///
/// # Safety
/// `handle` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dvd_epoch_to_age(
    handle: *const DvdHandle,
    epoch: u64,
    out: *mut f64,
) -> DvdStatus {
    lookup(handle, out, |h| Ok(h.engine.clock().epoch_to_age(epoch).value()))
}
