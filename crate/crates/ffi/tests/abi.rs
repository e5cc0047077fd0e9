use std::ffi::{CStr, CString};
use std::ptr;

use dvd_core::degradations::{corrupt, perturb, AttackKind, CorruptionKind, CorruptionSpec, NoiseAttackSpec};
use dvd_core::schedules::AgeMonths;
use dvd_core::transforms::DvdConfig;
use dvd_core::{DvdEngine, Image};
use dvd_ffi::*;

/// splitmix64 stream mapped to 8-bit levels in [0, 1].
fn random_batch(seed: u64, n: usize, h: usize, w: usize) -> Vec<f32> {
    let mut s = seed;
    (0..n * h * w * 3)
        .map(|_| {
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z % 256) as f32 / 255.0
        })
        .collect()
}

fn to_image(data: &[f32], h: usize, w: usize) -> Image {
    Image::new(w, h, data.iter().map(|&v| v as f64).collect()).unwrap()
}

fn to_f32(img: &Image) -> Vec<f32> {
    img.data().iter().map(|&v| v as f32).collect()
}

fn last_error() -> String {
    let p = dvd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handle(*mut DvdHandle);

impl Handle {
    fn new(config: Option<&str>) -> Result<Handle, (DvdStatus, String)> {
        let c = config.map(|s| CString::new(s).unwrap());
        let mut h = ptr::null_mut();
        let status = unsafe {
            dvd_handle_new(c.as_ref().map_or(ptr::null(), |c| c.as_ptr()), ptr::null(), &mut h)
        };
        if status == DvdStatus::Ok {
            Ok(Handle(h))
        } else {
            assert!(h.is_null());
            Err((status, last_error()))
        }
    }

    fn fingerprint(&self) -> String {
        unsafe { CStr::from_ptr(dvd_handle_fingerprint(self.0)) }
            .to_str()
            .unwrap()
            .to_owned()
    }

    fn transform(&self, data: &[f32], n: usize, h: usize, w: usize, age: f64) -> Vec<f32> {
        let mut buf = DvdBuffer { data: ptr::null_mut(), len: 0 };
        let st = unsafe { dvd_transform_batch(self.0, data.as_ptr(), n, h, w, age, &mut buf) };
        assert_eq!(st, DvdStatus::Ok, "{}", last_error());
        take(&mut buf)
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { dvd_handle_free(self.0) }
    }
}

fn take(buf: &mut DvdBuffer) -> Vec<f32> {
    let v = unsafe { std::slice::from_raw_parts(buf.data, buf.len) }.to_vec();
    unsafe { dvd_buffer_free(buf) };
    assert!(buf.data.is_null());
    v
}

fn corrupt_ffi(data: &[f32], n: usize, h: usize, w: usize, kind: &str, sev: u8, seed: u64) -> Result<Vec<f32>, DvdStatus> {
    let kind = CString::new(kind).unwrap();
    let mut buf = DvdBuffer { data: ptr::null_mut(), len: 0 };
    let st = unsafe {
        dvd_corrupt_batch(data.as_ptr(), n, h, w, kind.as_ptr(), sev, seed, ptr::null(), &mut buf)
    };
    if st == DvdStatus::Ok {
        Ok(take(&mut buf))
    } else {
        Err(st)
    }
}

#[test]
fn default_handle_fingerprint_matches_core_engine() {
    let h = Handle::new(None).unwrap();
    let engine = DvdEngine::with_builtin_schedules(DvdConfig::default()).unwrap();
    assert_eq!(h.fingerprint(), engine.fingerprint());
    let json = serde_json_config(&DvdConfig::default());
    assert_eq!(Handle::new(Some(&json)).unwrap().fingerprint(), engine.fingerprint());
}

fn serde_json_config(cfg: &DvdConfig) -> String {
    format!(
        r#"{{"alpha": {}, "beta": {}, "lambda": {}}}"#,
        cfg.alpha, cfg.beta, cfg.lambda
    )
}

#[test]
fn transform_matches_core_bitwise() {
    let h = Handle::new(None).unwrap();
    let engine = DvdEngine::with_builtin_schedules(DvdConfig::default()).unwrap();
    let (n, hh, w) = (10, 12, 16);
    let data = random_batch(1, n, hh, w);
    for age in [0.0, 6.0, 24.0, 120.0, 300.0] {
        let got = h.transform(&data, n, hh, w, age);
        let per = hh * w * 3;
        for i in 0..n {
            let img = to_image(&data[i * per..(i + 1) * per], hh, w);
            let want = to_f32(&engine.transform(&img, AgeMonths::new(age).unwrap()).unwrap());
            assert_eq!(&got[i * per..(i + 1) * per], &want[..], "age {age} image {i}");
        }
    }
}

#[test]
fn batch_equals_single_calls() {
    let h = Handle::new(None).unwrap();
    let (n, hh, w) = (6, 9, 11);
    let data = random_batch(2, n, hh, w);
    let per = hh * w * 3;
    let batch = h.transform(&data, n, hh, w, 30.0);
    for i in 0..n {
        let single = h.transform(&data[i * per..(i + 1) * per], 1, hh, w, 30.0);
        assert_eq!(single, batch[i * per..(i + 1) * per]);
    }
    let cb = corrupt_ffi(&data, n, hh, w, "gaussian_noise", 3, 5).unwrap();
    // Default ids are batch indices, so single calls must pass the matching id.
    for i in 0..n {
        let id = CString::new(i.to_string()).unwrap();
        let ids = [id.as_ptr()];
        let kind = CString::new("gaussian_noise").unwrap();
        let mut buf = DvdBuffer { data: ptr::null_mut(), len: 0 };
        let st = unsafe {
            dvd_corrupt_batch(data[i * per..].as_ptr(), 1, hh, w, kind.as_ptr(), 3, 5, ids.as_ptr(), &mut buf)
        };
        assert_eq!(st, DvdStatus::Ok);
        assert_eq!(take(&mut buf), cb[i * per..(i + 1) * per]);
    }
}

#[test]
fn corrupt_and_perturb_match_core() {
    let (n, hh, w) = (4, 16, 16);
    let data = random_batch(3, n, hh, w);
    let per = hh * w * 3;
    for (kind, sev) in [("snow", 2u8), ("jpeg_compression", 5), ("motion_blur", 3), ("rain", 4), ("pixelate", 1)] {
        let got = corrupt_ffi(&data, n, hh, w, kind, sev, 9).unwrap();
        let spec = CorruptionSpec::new(kind.parse::<CorruptionKind>().unwrap(), sev).unwrap();
        for i in 0..n {
            let img = to_image(&data[i * per..(i + 1) * per], hh, w);
            let want = to_f32(&corrupt(&img, &spec, 9, &i.to_string()).unwrap());
            assert_eq!(&got[i * per..(i + 1) * per], &want[..], "{kind}");
        }
    }
    let attack = CString::new("l2_gaussian").unwrap();
    let mut buf = DvdBuffer { data: ptr::null_mut(), len: 0 };
    let st = unsafe {
        dvd_perturb_batch(data.as_ptr(), n, hh, w, attack.as_ptr(), 50, 4, ptr::null(), &mut buf)
    };
    assert_eq!(st, DvdStatus::Ok);
    let got = take(&mut buf);
    let spec = NoiseAttackSpec::new(AttackKind::L2Gaussian, 50, 4).unwrap();
    let img = to_image(&data[..per], hh, w);
    assert_eq!(got[..per], to_f32(&perturb(&img, &spec, "0").unwrap())[..]);
}

#[test]
fn config_errors_name_the_field() {
    let (st, msg) = Handle::new(Some(r#"{"alpha": 2, "lambda": 100}"#)).err().unwrap();
    assert_eq!(st, DvdStatus::InvalidConfig);
    assert!(msg.contains("beta"), "{msg}");
    let (st, msg) = Handle::new(Some(r#"{"alpha": 2, "beta": 1e-4, "lambda": -5}"#)).err().unwrap();
    assert_eq!(st, DvdStatus::InvalidConfig);
    assert!(msg.contains("lambda"), "{msg}");
}

#[test]
fn bad_inputs_are_rejected_before_work() {
    let h = Handle::new(None).unwrap();
    let mut buf = DvdBuffer { data: ptr::null_mut(), len: 0 };
    let st = unsafe { dvd_transform_batch(h.0, ptr::null(), 2, 4, 4, 0.0, &mut buf) };
    assert_eq!(st, DvdStatus::NullPointer);
    let st = unsafe { dvd_transform_batch(h.0, [0.0f32; 3].as_ptr(), 1, 0, 1, 0.0, &mut buf) };
    assert_eq!(st, DvdStatus::ShapeMismatch);
    let data = vec![1.5f32; 12];
    let st = unsafe { dvd_transform_batch(h.0, data.as_ptr(), 1, 2, 2, 0.0, &mut buf) };
    assert_eq!(st, DvdStatus::InvalidArgument);
    let st = unsafe { dvd_transform_batch(h.0, [0.0f32; 12].as_ptr(), 1, 2, 2, -1.0, &mut buf) };
    assert_eq!(st, DvdStatus::InvalidArgument);
    assert!(buf.data.is_null());
    assert_eq!(corrupt_ffi(&[0.5; 12], 1, 2, 2, "fog", 1, 0), Err(DvdStatus::InvalidArgument));
    assert!(last_error().contains("gaussian_noise"));
    assert_eq!(corrupt_ffi(&[0.5; 12], 1, 2, 2, "snow", 6, 0), Err(DvdStatus::InvalidArgument));
}

#[test]
fn schedule_lookups() {
    let h = Handle::new(None).unwrap();
    let mut v = 0.0;
    unsafe {
        assert_eq!(dvd_epoch_to_age(h.0, 10, &mut v), DvdStatus::Ok);
        assert_eq!(v, 20.0);
        assert_eq!(dvd_epoch_to_age(h.0, 150, &mut v), DvdStatus::Ok);
        assert_eq!(v, 300.0);
        assert_eq!(dvd_acuity_at(h.0, 300.0, &mut v), DvdStatus::Ok);
        assert!((v - 1.0).abs() < 1e-6);
        assert_eq!(dvd_chromatic_sensitivity_at(h.0, 0.0, &mut v), DvdStatus::Ok);
        assert!(v <= 0.05);
        assert_eq!(dvd_contrast_sensitivity_at(ptr::null(), 0.0, &mut v), DvdStatus::NullPointer);
    }
}

#[test]
fn handles_are_shareable_across_threads() {
    let h = Handle::new(None).unwrap();
    let (n, hh, w) = (2, 8, 8);
    let data = random_batch(7, n, hh, w);
    let want = h.transform(&data, n, hh, w, 12.0);
    let addr = h.0 as usize;
    std::thread::scope(|s| {
        for _ in 0..4 {
            let data = &data;
            let want = &want;
            s.spawn(move || {
                let mut buf = DvdBuffer { data: ptr::null_mut(), len: 0 };
                let st = unsafe {
                    dvd_transform_batch(addr as *const DvdHandle, data.as_ptr(), n, hh, w, 12.0, &mut buf)
                };
                assert_eq!(st, DvdStatus::Ok);
                assert_eq!(&take(&mut buf), want);
            });
        }
    });
}

/// Compiles a small C program against the generated header and the static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn header_compiles_and_links_from_c() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let Some(target) = manifest.ancestors().nth(2).map(|root| {
        std::env::var_os("CARGO_TARGET_DIR")
            .map(std::path::PathBuf::from)
            .unwrap_or_else(|| root.join("target"))
    }) else {
        return;
    };
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    // The test binary links the rlib; rebuild the static library so it is
    // never stale.
    let mut build = std::process::Command::new(env!("CARGO"));
    build.args(["build", "-q", "-p", "dvd-ffi", "--lib"]);
    if !cfg!(debug_assertions) {
        build.arg("--release");
    }
    let built = build.status().map(|s| s.success()).unwrap_or(false);
    let lib = target.join(profile).join("libdvd_ffi.a");
    if !built || !lib.exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile_dir();
    let exe = dir.join("smoke");
    let status = std::process::Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let engine = DvdEngine::with_builtin_schedules(DvdConfig::default()).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), engine.fingerprint());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("dvd-ffi-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn handle_from_file() {
    let dir = tempfile_dir();
    let path = dir.join("config.json");
    std::fs::write(&path, r#"{"alpha": 4, "beta": 2e-4, "lambda": 50}"#).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { dvd_handle_new_from_file(c.as_ptr(), &mut h) }, DvdStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { dvd_epoch_to_age(h, 10, &mut v) }, DvdStatus::Ok);
    assert_eq!(v, 40.0);
    unsafe { dvd_handle_free(h) };
    let missing = CString::new(dir.join("nope.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { dvd_handle_new_from_file(missing.as_ptr(), &mut h) }, DvdStatus::Io);
}
