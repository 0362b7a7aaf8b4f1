use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mask_io::{read_mask_image, write_mask_png};
use super::ply::{read_ply, write_ply};
use crate::error::{Error, Result};
use crate::meshcloud::export_stl;
use crate::patterngen::{AnnealSchedule, Pattern};
use crate::scalar::Scalar;
use crate::shapemetrics::{
    hu_signature, symmetric_hu_distance, HuSignature, LibraryConfig, PatternLibrary,
};

pub const MANIFEST_VERSION: &str = "1";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Largest accepted difference between stored and recomputed Hu values.
pub const HU_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub divisions: usize,
    pub extent: f64,
    /// Vertex triples, kept so a changed triangulation is caught on load.
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub n_min: usize,
    pub n_max: usize,
    pub alpha: f64,
    pub seed: u64,
    pub schedule: AnnealSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub scale_mm: f64,
    pub depth_mm: f64,
    pub pitch_mm: f64,
    pub dilation_radius_px: usize,
    pub margin_px: usize,
    pub subdivision: f64,
    pub voxel_mm: f64,
    pub full_prism_cloud: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRef {
    pub file: String,
    pub width: usize,
    pub height: usize,
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub triangle_ids: Vec<usize>,
    pub hu: [f64; 7],
    pub mask: MaskRef,
    pub cloud: String,
    pub stl: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryManifest {
    pub version: String,
    pub grid: GridSpec,
    pub generation: GenerationSpec,
    pub geometry: GeometrySpec,
    pub entries: Vec<ManifestEntry>,
}

impl LibraryManifest {
    pub fn from_library<T: Scalar>(lib: &PatternLibrary<T>) -> Self {
        let c = &lib.config;
        let entries = lib
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let stem = file_stem(i);
                ManifestEntry {
                    label: e.label.clone(),
                    triangle_ids: e.pattern.triangle_ids().to_vec(),
                    hu: e.hu.h.map(|v| v.as_f64()),
                    mask: MaskRef {
                        file: format!("{stem}.png"),
                        width: e.mask.width,
                        height: e.mask.height,
                        origin: e.mask.origin.map(|v| v.as_f64()),
                    },
                    cloud: format!("{stem}.ply"),
                    stl: format!("{stem}.stl"),
                }
            })
            .collect();
        Self {
            version: MANIFEST_VERSION.to_owned(),
            grid: GridSpec {
                divisions: c.divisions,
                extent: c.extent.as_f64(),
                triangles: lib.grid.triangles.clone(),
            },
            generation: GenerationSpec {
                n_min: c.n_min,
                n_max: c.n_max,
                alpha: c.alpha.as_f64(),
                seed: c.seed,
                schedule: c.schedule,
            },
            geometry: GeometrySpec {
                scale_mm: c.scale_mm.as_f64(),
                depth_mm: c.depth_mm.as_f64(),
                pitch_mm: c.pitch_mm.as_f64(),
                dilation_radius_px: c.dilation_radius_px,
                margin_px: c.margin_px,
                subdivision: c.subdivision.as_f64(),
                voxel_mm: c.voxel_mm.as_f64(),
                full_prism_cloud: c.full_prism_cloud,
            },
            entries,
        }
    }

    pub fn config<T: Scalar>(&self) -> LibraryConfig<T> {
        let (g, m) = (&self.generation, &self.geometry);
        LibraryConfig {
            divisions: self.grid.divisions,
            extent: T::lit(self.grid.extent),
            n_min: g.n_min,
            n_max: g.n_max,
            alpha: T::lit(g.alpha),
            seed: g.seed,
            schedule: g.schedule,
            scale_mm: T::lit(m.scale_mm),
            depth_mm: T::lit(m.depth_mm),
            pitch_mm: T::lit(m.pitch_mm),
            dilation_radius_px: m.dilation_radius_px,
            margin_px: m.margin_px,
            subdivision: T::lit(m.subdivision),
            voxel_mm: T::lit(m.voxel_mm),
            full_prism_cloud: m.full_prism_cloud,
        }
    }
}

pub fn file_stem(index: usize) -> String {
    format!("p{index:04}")
}

/// Writes `manifest.json` and per-entry `p{index:04}.png/.ply/.stl` into `dir`.
pub fn save_library<T: Scalar>(lib: &PatternLibrary<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = LibraryManifest::from_library(lib);
    for (e, m) in lib.entries.iter().zip(&manifest.entries) {
        write_mask_png(&e.mask, dir.join(&m.mask.file))?;
        write_ply(&e.cloud, dir.join(&m.cloud))?;
        export_stl(&e.mesh, dir.join(&m.stl))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadCheck {
    /// Recompute Hu signatures and verify the dispersion invariant.
    #[default]
    Strict,
    /// Trust stored signatures.
    Fast,
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<LibraryManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::corrupt(&path, e.to_string()))?;
    match value.get("version").and_then(|v| v.as_str()) {
        Some(MANIFEST_VERSION) => {}
        Some(v) => {
            return Err(Error::Version {
                found: v.to_owned(),
                expected: MANIFEST_VERSION.to_owned(),
            })
        }
        None => return Err(Error::corrupt(&path, "no version field")),
    }
    serde_json::from_value(value).map_err(|e| Error::corrupt(&path, e.to_string()))
}

fn existing(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::MissingFile(p))
    }
}

/// Loads a library saved by [`save_library`]. Meshes and templates are
/// regenerated from the patterns; masks and clouds are read from disk.
pub fn load_library<T: Scalar>(
    dir: impl AsRef<Path>,
    check: LoadCheck,
) -> Result<PatternLibrary<T>> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut lib = PatternLibrary::new(manifest.config::<T>())?;
    if lib.grid.triangles != manifest.grid.triangles {
        return Err(Error::corrupt(
            &manifest_path,
            "stored grid triangulation differs from the rebuilt grid",
        ));
    }
    let mut labels = HashSet::new();
    for m in &manifest.entries {
        if !labels.insert(m.label.as_str()) {
            return Err(Error::DuplicateLabel(m.label.clone()));
        }
    }

    let pitch = lib.config.pitch_mm;
    for m in &manifest.entries {
        let mask_path = existing(dir, &m.mask.file)?;
        let cloud_path = existing(dir, &m.cloud)?;
        existing(dir, &m.stl)?;

        let pattern = Pattern::new(m.triangle_ids.clone(), &lib.grid)?;
        let mask = read_mask_image(&mask_path, pitch, Some(m.mask.origin.map(T::lit)))?;
        if (mask.width, mask.height) != (m.mask.width, m.mask.height) {
            return Err(Error::DimensionMismatch(
                mask.width,
                mask.height,
                m.mask.width,
                m.mask.height,
            ));
        }
        let hu = HuSignature {
            h: m.hu.map(T::lit),
        };
        if check == LoadCheck::Strict {
            let fresh = hu_signature(&mask)?;
            let delta = fresh
                .h
                .iter()
                .zip(&hu.h)
                .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
                .fold(0.0, f64::max);
            if !(delta <= HU_TOLERANCE) {
                return Err(Error::HuMismatch {
                    label: m.label.clone(),
                    delta,
                });
            }
        }
        let cloud = read_ply(&cloud_path)?;
        let entry = lib.assemble_entry(pattern, m.label.clone(), mask, hu, cloud)?;
        lib.entries.push(entry);
    }

    if check == LoadCheck::Strict {
        verify_dispersion(&lib)?;
    }
    Ok(lib)
}

/// Brute-force check that every pair of entries is more than `alpha` apart.
pub fn verify_dispersion<T: Scalar>(lib: &PatternLibrary<T>) -> Result<()> {
    let alpha = lib.config.alpha;
    for (a, ea) in lib.entries.iter().enumerate() {
        for (b, eb) in lib.entries.iter().enumerate().skip(a + 1) {
            let d = symmetric_hu_distance(&ea.hu, &eb.hu);
            if !(d > alpha) {
                return Err(Error::Dispersion {
                    a,
                    b,
                    distance: d.as_f64(),
                    alpha: alpha.as_f64(),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapemetrics::generate_library;

    fn small() -> PatternLibrary<f64> {
        let mut lib = generate_library(
            LibraryConfig {
                seed: 5,
                ..Default::default()
            },
            4,
        )
        .unwrap();
        lib.set_label(2, "bracket.stl").unwrap();
        lib
    }

    #[test]
    fn roundtrip_is_identity() {
        let lib = small();
        let dir = tempfile::tempdir().unwrap();
        save_library(&lib, dir.path()).unwrap();
        let back: PatternLibrary<f64> = load_library(dir.path(), LoadCheck::Strict).unwrap();
        assert_eq!(back.config, lib.config);
        assert_eq!(back.grid, lib.grid);
        for (a, b) in back.entries.iter().zip(&lib.entries) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.pattern, b.pattern);
            assert_eq!(a.mask, b.mask);
            assert_eq!(a.hu, b.hu);
            assert_eq!(a.template, b.template);
            assert_eq!(a.mesh, b.mesh);
            assert_eq!(a.cloud, b.cloud);
        }
        assert_eq!(back, lib);
        assert_eq!(read_manifest(dir.path()).unwrap().entries.len(), lib.len());
        assert!(dir.path().join("p0003.stl").is_file());
    }

    #[test]
    fn future_version_refuses() {
        let dir = tempfile::tempdir().unwrap();
        save_library(&small(), dir.path()).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&p)
            .unwrap()
            .replace("\"version\": \"1\"", "\"version\": \"2\"");
        fs::write(&p, text).unwrap();
        assert!(matches!(
            load_library::<f64>(dir.path(), LoadCheck::Fast),
            Err(Error::Version { .. })
        ));
    }

    #[test]
    fn missing_pieces() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_library::<f64>(dir.path(), LoadCheck::Fast),
            Err(Error::MissingFile(_))
        ));
        save_library(&small(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("p0001.ply")).unwrap();
        match load_library::<f64>(dir.path(), LoadCheck::Fast) {
            Err(Error::MissingFile(p)) => assert!(p.ends_with("p0001.ply")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unwritable_target_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = save_library(&small(), blocker.join("lib")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
