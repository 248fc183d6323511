use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use fddpred::channel::los_coefficient;
use fddpred::nn::build_los_net;
use fddpred::predictor::{NnAdapter, NnLayout, NnPredictor, Predictor};
use fddpred_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { fdd_last_error(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert!(n >= s.len());
    s
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn dataset_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let file = cpath(&dir.path().join("los.fddcsi"));
    let mut ds: *mut FddDataset = ptr::null_mut();
    unsafe {
        assert_eq!(fdd_dataset_generate_los(1.25e9, 1.275e9, 2.5, 12, 7, &mut ds), FddStatus::Ok);
        assert_eq!(fdd_dataset_len(ds), 12);
        let (mut m, mut n) = (0, 0);
        assert_eq!(fdd_dataset_dims(ds, &mut m, &mut n), FddStatus::Ok);
        assert_eq!((m, n), (1, 1));
        assert_eq!(fdd_dataset_save(ds, file.as_ptr()), FddStatus::Ok);

        let mut back: *mut FddDataset = ptr::null_mut();
        assert_eq!(fdd_dataset_load(file.as_ptr(), &mut back), FddStatus::Ok);
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        let (mut c, mut d) = ([0.0; 2], [0.0; 2]);
        for i in 0..12 {
            assert_eq!(fdd_dataset_sample(ds, i, a.as_mut_ptr(), b.as_mut_ptr()), FddStatus::Ok);
            assert_eq!(fdd_dataset_sample(back, i, c.as_mut_ptr(), d.as_mut_ptr()), FddStatus::Ok);
            // The file stores f32.
            let f32s = |x: [f64; 2]| x.map(|v| v as f32);
            assert_eq!((f32s(a), f32s(b)), (f32s(c), f32s(d)));
        }
        assert_eq!(fdd_dataset_sample(ds, 12, a.as_mut_ptr(), ptr::null_mut()), FddStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        fdd_dataset_free(ds);
        fdd_dataset_free(back);
        fdd_dataset_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut ds: *mut FddDataset = ptr::null_mut();
    unsafe {
        let missing = cpath(&dir.path().join("none.fddcsi"));
        assert_eq!(fdd_dataset_load(missing.as_ptr(), &mut ds), FddStatus::Io);
        assert!(ds.is_null());
        assert!(!last_error().is_empty());

        let junk = dir.path().join("junk.fddcsi");
        std::fs::write(&junk, b"FDDCSI99 garbage").unwrap();
        assert_eq!(fdd_dataset_load(cpath(&junk).as_ptr(), &mut ds), FddStatus::Format);

        assert_eq!(fdd_dataset_load(ptr::null(), &mut ds), FddStatus::NullPointer);
        assert_eq!(fdd_dataset_generate_los(1.25e9, 1.26e9, 2.5, 3, 0, ptr::null_mut()), FddStatus::NullPointer);
        assert_eq!(fdd_dataset_len(ptr::null()), 0);

        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(fdd_los_coefficient(-1.0, 1e9, 2.0, &mut re, &mut im), FddStatus::InvalidArgument);
        assert_eq!(fdd_los_coefficient(150.0, 1.25e9, 2.5, &mut re, &mut im), FddStatus::Ok);
        assert!(last_error().is_empty());
        let h = los_coefficient(150.0, 1.25e9, 2.5).unwrap();
        assert_eq!((re, im), (h.re, h.im));
    }
}

#[test]
fn metrics_match_the_library() {
    let truth = [1.0, 0.0, 0.0, 2.0];
    let pred = [1.0, 0.5, 0.0, 1.5];
    let (mut e, mut r) = (0.0, 0.0);
    unsafe {
        assert_eq!(fdd_nmse(pred.as_ptr(), truth.as_ptr(), 2, &mut e), FddStatus::Ok);
        assert_eq!(fdd_corr_coeff(pred.as_ptr(), truth.as_ptr(), 2, &mut r), FddStatus::Ok);
        // |d|^2 = 0.25 + 0.25, |truth|^2 = 5.
        assert!((e - 0.1).abs() < 1e-15);
        assert!(r > 0.9 && r <= 1.0);
        let zeros = [0.0; 4];
        assert_eq!(fdd_nmse(pred.as_ptr(), zeros.as_ptr(), 2, &mut e), FddStatus::InvalidArgument);
        assert_eq!(fdd_nmse(ptr::null(), truth.as_ptr(), 2, &mut e), FddStatus::NullPointer);
    }
}

#[test]
fn model_predicts_like_the_rust_api() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("los.fddnn");
    let ul: Vec<_> = (0..8)
        .map(|i| fddpred::CsiMatrix::scalar(los_coefficient(100.0 + 10.0 * i as f64, 1.25e9, 2.5).unwrap()))
        .collect();
    let adapter = NnAdapter::fit(&ul, &ul, NnLayout::Flat, false).unwrap();
    let nn = NnPredictor::new(build_los_net().with_init(3), adapter).unwrap();
    nn.save(&path).unwrap();
    let expected = NnPredictor::load(&path).unwrap().predict_batch(&ul).unwrap();

    let input: Vec<f64> = ul.iter().flat_map(|h| [h.get(0, 0).re, h.get(0, 0).im]).collect();
    let mut output = vec![0.0; input.len()];
    let mut model: *mut FddModel = ptr::null_mut();
    unsafe {
        assert_eq!(fdd_model_load(cpath(&path).as_ptr(), &mut model), FddStatus::Ok);
        assert_eq!(fdd_model_predict(model, input.as_ptr(), 8, 1, 1, output.as_mut_ptr()), FddStatus::Ok);
        assert_eq!(fdd_model_predict(model, input.as_ptr(), 4, 1, 2, output.as_mut_ptr()), FddStatus::Shape);
        fdd_model_free(model);
    }
    for (i, e) in expected.iter().enumerate() {
        assert_eq!(output[2 * i], e.get(0, 0).re);
        assert_eq!(output[2 * i + 1], e.get(0, 0).im);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(fdd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fddpred.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "fdd_last_error",
        "fdd_version",
        "fdd_dataset_load",
        "fdd_dataset_generate_los",
        "fdd_dataset_save",
        "fdd_dataset_len",
        "fdd_dataset_dims",
        "fdd_dataset_sample",
        "fdd_dataset_free",
        "fdd_model_load",
        "fdd_model_predict",
        "fdd_model_free",
        "fdd_nmse",
        "fdd_corr_coeff",
        "fdd_los_coefficient",
        "typedef struct FddDataset FddDataset",
        "FDD_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // Syntax-check the header with the system C compiler when there is one.
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, "#include \"fddpred.h\"\nint main(void) { return FDD_STATUS_OK; }\n").unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; skipped the compile check"),
    }
}
