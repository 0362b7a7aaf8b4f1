use std::fs;
use std::path::Path;

use serde_json::Value;
use tactag::persist::*;
use tactag::shapemetrics::{generate_library, LibraryConfig, PatternLibrary};
use tactag::Error;

fn saved(dir: &Path) -> PatternLibrary<f64> {
    let mut lib = generate_library(
        LibraryConfig {
            seed: 80,
            ..Default::default()
        },
        6,
    )
    .unwrap();
    lib.set_label(4, "gear.stl").unwrap();
    save_library(&lib, dir).unwrap();
    lib
}

fn edit(dir: &Path, f: impl FnOnce(&mut Value)) {
    let p = dir.join(MANIFEST_FILE);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    f(&mut v);
    fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn save_load_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let lib = saved(dir.path());
    let m = read_manifest(dir.path()).unwrap();
    assert_eq!(m.entries.len(), lib.len());
    assert_eq!(m.entries[4].label, "gear.stl");
    let names: Vec<_> = m.entries.iter().map(|e| e.mask.file.clone()).collect();
    assert_eq!(names[0], "p0000.png");
    assert_eq!(
        load_library::<f64>(dir.path(), LoadCheck::Strict).unwrap(),
        lib
    );
    assert_eq!(
        load_library::<f64>(dir.path(), LoadCheck::Fast).unwrap(),
        lib
    );
}

#[test]
fn f32_library_roundtrips() {
    let lib = generate_library(
        LibraryConfig::<f32> {
            seed: 81,
            ..Default::default()
        },
        3,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_library(&lib, dir.path()).unwrap();
    assert_eq!(
        load_library::<f32>(dir.path(), LoadCheck::Strict).unwrap(),
        lib
    );
}

#[test]
fn duplicate_label_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    edit(dir.path(), |v| {
        v["entries"][1]["label"] = v["entries"][0]["label"].clone()
    });
    let err = load_library::<f64>(dir.path(), LoadCheck::Fast).unwrap_err();
    assert!(matches!(err, Error::DuplicateLabel(_)));
    assert!(err.to_string().contains("duplicate label"));
}

#[test]
fn edited_hu_is_caught_on_strict_load() {
    let dir = tempfile::tempdir().unwrap();
    let lib = saved(dir.path());
    let original = lib.entries[2].hu.h[3];
    edit(dir.path(), |v| {
        v["entries"][2]["hu"][3] = Value::from(original + 1e-6)
    });
    match load_library::<f64>(dir.path(), LoadCheck::Strict) {
        Err(Error::HuMismatch { label, delta }) => {
            assert_eq!(label, lib.entries[2].label);
            assert!((delta - 1e-6).abs() < 1e-9);
        }
        other => panic!("expected HuMismatch, got {other:?}"),
    }
    let fast = load_library::<f64>(dir.path(), LoadCheck::Fast).unwrap();
    assert_eq!(fast.entries[2].hu.h[3], original + 1e-6);
}

#[test]
fn tightened_alpha_breaks_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    edit(dir.path(), |v| v["generation"]["alpha"] = Value::from(1e6));
    assert!(matches!(
        load_library::<f64>(dir.path(), LoadCheck::Strict),
        Err(Error::Dispersion { .. })
    ));
    assert!(load_library::<f64>(dir.path(), LoadCheck::Fast).is_ok());
}

#[test]
fn damaged_files_have_distinct_errors() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    fs::write(dir.path().join("p0001.png"), b"garbage").unwrap();
    assert!(matches!(
        load_library::<f64>(dir.path(), LoadCheck::Fast),
        Err(Error::Corrupt { .. })
    ));

    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    fs::write(dir.path().join("p0003.ply"), "ply\nformat ascii 1.0\nelement vertex 9\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n").unwrap();
    assert!(matches!(
        load_library::<f64>(dir.path(), LoadCheck::Fast),
        Err(Error::Corrupt { .. })
    ));

    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    fs::remove_file(dir.path().join("p0005.stl")).unwrap();
    assert!(matches!(
        load_library::<f64>(dir.path(), LoadCheck::Fast),
        Err(Error::MissingFile(_))
    ));

    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    edit(dir.path(), |v| v["version"] = Value::from("7"));
    assert!(matches!(
        load_library::<f64>(dir.path(), LoadCheck::Fast),
        Err(Error::Version { .. })
    ));

    let dir = tempfile::tempdir().unwrap();
    saved(dir.path());
    fs::write(dir.path().join(MANIFEST_FILE), "{ not json").unwrap();
    assert!(matches!(
        load_library::<f64>(dir.path(), LoadCheck::Fast),
        Err(Error::Corrupt { .. })
    ));
}

#[test]
fn masks_are_eight_bit_grayscale() {
    let dir = tempfile::tempdir().unwrap();
    let lib = saved(dir.path());
    let bytes = fs::read(dir.path().join("p0000.png")).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
    // IHDR: bit depth 8, colour type 0.
    assert_eq!((bytes[24], bytes[25]), (8, 0));
    let w = u32::from_be_bytes(bytes[16..20].try_into().unwrap()) as usize;
    assert_eq!(w, lib.entries[0].mask.width);
    let text = fs::read_to_string(dir.path().join("p0000.ply")).unwrap();
    assert!(text.starts_with("ply\nformat ascii 1.0\n"));
}
