use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hu::{hu_signature, symmetric_hu_distance, HuSignature};
use super::iou::Template;
use super::mask::{dilate, rasterize_with_margin, Mask};
use crate::error::{Error, Result};
use crate::meshcloud::{pattern_cloud, pattern_to_mesh, CloudSpec, PointCloud, TriMesh};
use crate::patterngen::{
    anneal_pattern_with_rng, build_staggered_grid, sample_generation_params, AnnealSchedule,
    Pattern, TriGrid,
};
use crate::scalar::Scalar;

/// Everything needed to regenerate a library deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryConfig<T> {
    pub divisions: usize,
    /// Grid side in grid units; the default gives unit column pitch.
    pub extent: T,
    pub n_min: usize,
    pub n_max: usize,
    /// Dispersion threshold on the symmetrised Hu distance.
    pub alpha: T,
    pub seed: u64,
    pub schedule: AnnealSchedule,
    pub scale_mm: T,
    pub depth_mm: T,
    pub pitch_mm: T,
    pub dilation_radius_px: usize,
    pub margin_px: usize,
    /// Maximum mesh edge after subdivision, in grid units.
    pub subdivision: T,
    pub voxel_mm: T,
    pub full_prism_cloud: bool,
}

impl<T: Scalar> Default for LibraryConfig<T> {
    fn default() -> Self {
        Self {
            divisions: 4,
            extent: T::lit(4.0),
            n_min: 10,
            n_max: 20,
            alpha: T::lit(0.1),
            seed: 0,
            schedule: AnnealSchedule::default(),
            scale_mm: T::lit(5.0),
            depth_mm: T::lit(1.0),
            pitch_mm: T::lit(0.05),
            dilation_radius_px: 2,
            margin_px: 8,
            subdivision: T::lit(0.1),
            voxel_mm: T::lit(0.2),
            full_prism_cloud: false,
        }
    }
}

impl<T: Scalar> LibraryConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::invalid(format!(
                "pattern size range [{}, {}] is empty",
                self.n_min, self.n_max
            )));
        }
        if !(self.alpha >= T::zero()) {
            return Err(Error::invalid("alpha must be non-negative"));
        }
        if self.margin_px <= self.dilation_radius_px {
            return Err(Error::invalid(
                "raster margin must exceed the dilation radius",
            ));
        }
        self.schedule.validate()
    }

    pub fn cloud_spec(&self) -> CloudSpec<T> {
        CloudSpec {
            scale_mm: self.scale_mm,
            depth_mm: self.depth_mm,
            subdivision: self.subdivision,
            voxel_mm: self.voxel_mm,
            full_prism: self.full_prism_cloud,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry<T> {
    pub label: String,
    pub pattern: Pattern,
    /// Undilated raster in the pattern's centred millimetre frame.
    pub mask: Mask<T>,
    pub hu: HuSignature<T>,
    /// Dilated raster used for classification.
    pub template: Template<T>,
    pub mesh: TriMesh<T>,
    /// Registration source cloud.
    pub cloud: PointCloud<T>,
}

/// Ordered set of mutually dissimilar patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternLibrary<T> {
    pub config: LibraryConfig<T>,
    pub grid: TriGrid<T>,
    pub entries: Vec<LibraryEntry<T>>,
}

/// Admission test result for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admission {
    Admitted,
    Duplicate,
    /// First existing entry within `alpha` of the candidate.
    TooSimilar {
        index: usize,
    },
}

impl<T: Scalar> PatternLibrary<T> {
    pub fn new(config: LibraryConfig<T>) -> Result<Self> {
        config.validate()?;
        let grid = build_staggered_grid(config.divisions, config.extent)?;
        Ok(Self {
            config,
            grid,
            entries: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, label: &str) -> Result<&LibraryEntry<T>> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    pub fn set_label(&mut self, index: usize, label: impl Into<String>) -> Result<()> {
        let label = label.into();
        if self
            .entries
            .iter()
            .enumerate()
            .any(|(i, e)| i != index && e.label == label)
        {
            return Err(Error::DuplicateLabel(label));
        }
        let entry = self
            .entries
            .get_mut(index)
            .ok_or_else(|| Error::invalid(format!("no entry {index}")))?;
        entry.label = label;
        Ok(())
    }

    pub fn raster(&self, pattern: &Pattern) -> Result<Mask<T>> {
        let c = &self.config;
        rasterize_with_margin(pattern, &self.grid, c.scale_mm, c.pitch_mm, c.margin_px)
    }

    /// Derives every cached artefact of an entry from its pattern.
    pub fn build_entry(&self, pattern: Pattern, label: String) -> Result<LibraryEntry<T>> {
        let mask = self.raster(&pattern)?;
        let hu = hu_signature(&mask)?;
        self.complete_entry(pattern, label, mask, hu)
    }

    fn complete_entry(
        &self,
        pattern: Pattern,
        label: String,
        mask: Mask<T>,
        hu: HuSignature<T>,
    ) -> Result<LibraryEntry<T>> {
        let cloud = pattern_cloud(&pattern, &self.grid, &self.config.cloud_spec())?;
        self.assemble_entry(pattern, label, mask, hu, cloud)
    }

    /// Rebuilds the derived artefacts of an entry around stored raster data.
    pub fn assemble_entry(
        &self,
        pattern: Pattern,
        label: String,
        mask: Mask<T>,
        hu: HuSignature<T>,
        cloud: PointCloud<T>,
    ) -> Result<LibraryEntry<T>> {
        let c = &self.config;
        let template = Template::new(dilate(&mask, c.dilation_radius_px))?;
        let mesh = pattern_to_mesh(&pattern, &self.grid, c.scale_mm, c.depth_mm)?;
        Ok(LibraryEntry {
            label,
            pattern,
            mask,
            hu,
            template,
            mesh,
            cloud,
        })
    }

    /// Checks a candidate signature against the dispersion threshold.
    pub fn admission(&self, pattern: &Pattern, hu: &HuSignature<T>) -> Admission {
        if self.entries.iter().any(|e| e.pattern == *pattern) {
            return Admission::Duplicate;
        }
        for (i, e) in self.entries.iter().enumerate() {
            if !(symmetric_hu_distance(hu, &e.hu) > self.config.alpha) {
                return Admission::TooSimilar { index: i };
            }
        }
        Admission::Admitted
    }

    /// Appends the candidate when its symmetrised Hu distance to every entry
    /// exceeds `alpha`. The label defaults to the entry index.
    pub fn admit(&mut self, candidate: Pattern) -> Result<bool> {
        let label = self.entries.len().to_string();
        self.admit_labeled(candidate, label)
    }

    pub fn admit_labeled(&mut self, candidate: Pattern, label: String) -> Result<bool> {
        if candidate.grid_id() != self.grid.id() {
            return Err(Error::invalid(format!(
                "pattern from grid {} offered to library on {}",
                candidate.grid_id(),
                self.grid.id()
            )));
        }
        if self.entries.iter().any(|e| e.label == label) {
            return Err(Error::DuplicateLabel(label));
        }
        let mask = self.raster(&candidate)?;
        let hu = hu_signature(&mask)?;
        if self.admission(&candidate, &hu) != Admission::Admitted {
            return Ok(false);
        }
        let entry = self.complete_entry(candidate, label, mask, hu)?;
        self.entries.push(entry);
        Ok(true)
    }

    /// Smallest symmetrised Hu distance over all entry pairs, by brute force.
    pub fn min_dispersion(&self) -> Option<(T, usize, usize)> {
        let mut best: Option<(T, usize, usize)> = None;
        for i in 0..self.entries.len() {
            for j in (i + 1)..self.entries.len() {
                let d = symmetric_hu_distance(&self.entries[i].hu, &self.entries[j].hu);
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, i, j));
                }
            }
        }
        best
    }
}

/// Progress information passed to [`generate_library_with`].
#[derive(Debug, Clone, Copy)]
pub struct GenerationProgress {
    pub attempts: usize,
    pub admitted: usize,
    pub rejected_similar: usize,
    pub rejected_duplicate: usize,
    pub unreached_target: usize,
}

/// Generates `count` patterns; candidate `i` uses its own RNG stream so the
/// result depends only on the configuration.
pub fn generate_library<T: Scalar>(
    config: LibraryConfig<T>,
    count: usize,
) -> Result<PatternLibrary<T>> {
    generate_library_with(config, count, 200, |_| {})
}

pub fn generate_library_with<T: Scalar>(
    config: LibraryConfig<T>,
    count: usize,
    attempts_per_pattern: usize,
    mut progress: impl FnMut(&GenerationProgress),
) -> Result<PatternLibrary<T>> {
    let mut lib = PatternLibrary::new(config)?;
    let max_attempts = count.saturating_mul(attempts_per_pattern.max(1)).max(1);
    let mut stats = GenerationProgress {
        attempts: 0,
        admitted: 0,
        rejected_similar: 0,
        rejected_duplicate: 0,
        unreached_target: 0,
    };
    let n_range = lib.config.n_min..=lib.config.n_max.min(lib.grid.triangle_count());
    let mut seen: HashSet<Vec<usize>> = HashSet::new();

    while lib.len() < count {
        if stats.attempts >= max_attempts {
            return Err(Error::GenerationStalled {
                attempts: stats.attempts,
                admitted: lib.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(lib.config.seed);
        rng.set_stream(stats.attempts as u64);
        stats.attempts += 1;

        let (n, target) = sample_generation_params(&mut rng, n_range.clone());
        let outcome =
            anneal_pattern_with_rng(&lib.grid, n, target, &lib.config.schedule, &mut rng)?;
        if !outcome.reached_target {
            stats.unreached_target += 1;
            continue;
        }
        if !seen.insert(outcome.pattern.triangle_ids().to_vec()) {
            stats.rejected_duplicate += 1;
            continue;
        }
        let mask = lib.raster(&outcome.pattern)?;
        let hu = hu_signature(&mask)?;
        match lib.admission(&outcome.pattern, &hu) {
            Admission::Admitted => {
                let label = lib.len().to_string();
                let entry = lib.complete_entry(outcome.pattern, label, mask, hu)?;
                lib.entries.push(entry);
                stats.admitted += 1;
            }
            Admission::Duplicate => stats.rejected_duplicate += 1,
            Admission::TooSimilar { .. } => stats.rejected_similar += 1,
        }
        progress(&stats);
    }
    Ok(lib)
}
