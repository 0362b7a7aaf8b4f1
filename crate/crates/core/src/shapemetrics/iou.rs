use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::library::PatternLibrary;
use super::mask::{Mask, PixelBox};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IouLoss<T> {
    /// `1 - |i ∩ p| / |i ∪ p|`.
    pub loss: T,
    /// Both masks were empty; `loss` is then 1 by convention.
    pub empty_union: bool,
}

impl<T: Scalar> IouLoss<T> {
    fn from_counts(inter: usize, union: usize) -> Self {
        if union == 0 {
            return Self {
                loss: T::one(),
                empty_union: true,
            };
        }
        Self {
            loss: T::one() - T::from_usize_lossy(inter) / T::from_usize_lossy(union),
            empty_union: false,
        }
    }
}

/// IoU loss of two masks on the same pixel lattice.
pub fn iou_loss<T: Scalar>(i: &Mask<T>, p: &Mask<T>) -> Result<IouLoss<T>> {
    if i.width != p.width || i.height != p.height {
        return Err(Error::DimensionMismatch(
            i.width, i.height, p.width, p.height,
        ));
    }
    if !i.same_pitch(p) {
        return Err(Error::PitchMismatch(i.pitch.as_f64(), p.pitch.as_f64()));
    }
    let (mut inter, mut union) = (0, 0);
    for (&a, &b) in i.bits.iter().zip(&p.bits) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(IouLoss::from_counts(inter, union))
}

/// Dilated library raster with the summary statistics classification needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Template<T> {
    pub mask: Mask<T>,
    pub count: usize,
    pub bbox: PixelBox,
}

impl<T: Scalar> Template<T> {
    pub fn new(mask: Mask<T>) -> Result<Self> {
        let bbox = mask.bounding_box().ok_or(Error::EmptyMask)?;
        let count = mask.count();
        Ok(Self { mask, count, bbox })
    }
}

/// Set pixels of an imprint together with its bounding box.
#[derive(Debug, Clone)]
pub struct Imprint {
    pixels: Vec<(i64, i64)>,
    bbox: PixelBox,
}

impl Imprint {
    pub fn new<T: Scalar>(mask: &Mask<T>) -> Result<Self> {
        let bbox = mask.bounding_box().ok_or(Error::EmptyMask)?;
        let pixels = mask
            .set_pixels()
            .map(|(x, y)| (x as i64, y as i64))
            .collect();
        Ok(Self { pixels, bbox })
    }

    /// Integer shift moving this imprint's bounding-box centre onto the template's.
    pub fn shift_to<T>(&self, t: &Template<T>) -> (i64, i64) {
        let (ix, iy) = self.bbox.doubled_center();
        let (tx, ty) = t.bbox.doubled_center();
        let half_round = |d: i64| (d as f64 / 2.0).round() as i64;
        (half_round(tx - ix), half_round(ty - iy))
    }

    /// IoU loss after bounding-box-centre alignment.
    pub fn aligned_loss<T: Scalar>(&self, t: &Template<T>) -> IouLoss<T> {
        let (sx, sy) = self.shift_to(t);
        let (w, h) = (t.mask.width as i64, t.mask.height as i64);
        let inter = self
            .pixels
            .iter()
            .filter(|&&(x, y)| {
                let (nx, ny) = (x + sx, y + sy);
                nx >= 0 && ny >= 0 && nx < w && ny < h && t.mask.get(nx as usize, ny as usize)
            })
            .count();
        IouLoss::from_counts(inter, self.pixels.len() + t.count - inter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult<T> {
    pub index: usize,
    pub label: String,
    pub loss: T,
    /// Loss gap to the second-best entry; `None` for a single-entry library.
    pub runner_up_margin: Option<T>,
}

/// Assigns the imprint to the library entry with minimum IoU loss against its
/// dilated template. Ties go to the lowest index.
pub fn classify<T: Scalar>(
    imprint: &Mask<T>,
    library: &PatternLibrary<T>,
) -> Result<ClassificationResult<T>> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if !imprint.same_pitch(&library.entries[0].template.mask) {
        return Err(Error::PitchMismatch(
            imprint.pitch.as_f64(),
            library.config.pitch_mm.as_f64(),
        ));
    }
    let shot = Imprint::new(imprint)?;
    let losses: Vec<T> = library
        .entries
        .par_iter()
        .map(|e| shot.aligned_loss(&e.template).loss)
        .collect();

    let better = |a: (T, usize), b: (T, usize)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    let mut best = (losses[0], 0);
    let mut second: Option<(T, usize)> = None;
    for (i, &l) in losses.iter().enumerate().skip(1) {
        if better((l, i), best) {
            second = Some(best);
            best = (l, i);
        } else if second.is_none_or(|s| better((l, i), s)) {
            second = Some((l, i));
        }
    }
    Ok(ClassificationResult {
        index: best.1,
        label: library.entries[best.1].label.clone(),
        loss: best.0,
        runner_up_margin: second.map(|s| s.0 - best.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(width: usize, xs: &[usize]) -> Mask<f64> {
        let mut m = Mask::new(width, 1, 1.0, [0.0; 2]).unwrap();
        for &x in xs {
            m.set(x, 0, true);
        }
        m
    }

    #[test]
    fn identical_masks_have_zero_loss() {
        let a = strip(5, &[1, 2, 3]);
        assert_eq!(iou_loss(&a, &a).unwrap().loss, 0.0);
    }

    #[test]
    fn disjoint_masks_have_unit_loss() {
        let a = strip(5, &[0, 1]);
        let b = strip(5, &[3, 4]);
        assert_eq!(iou_loss(&a, &b).unwrap().loss, 1.0);
    }

    #[test]
    fn shifted_strip() {
        let a = strip(4, &[0, 1]);
        let b = strip(4, &[1, 2]);
        let l = iou_loss(&a, &b).unwrap().loss;
        assert!((l - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_pair_is_flagged() {
        let a = strip(4, &[]);
        let l = iou_loss(&a, &a).unwrap();
        assert!(l.empty_union);
        assert_eq!(l.loss, 1.0);
    }

    #[test]
    fn mismatched_masks_are_rejected() {
        let a = strip(4, &[0]);
        let b = strip(5, &[0]);
        assert!(matches!(
            iou_loss(&a, &b),
            Err(Error::DimensionMismatch(..))
        ));
        let c = Mask::new(4, 1, 2.0, [0.0; 2]).unwrap();
        assert!(matches!(iou_loss(&a, &c), Err(Error::PitchMismatch(..))));
    }

    #[test]
    fn alignment_ignores_translation() {
        let mut a = Mask::new(20, 20, 1.0f64, [0.0; 2]).unwrap();
        let mut b = Mask::new(30, 25, 1.0f64, [0.0; 2]).unwrap();
        for (x, y) in [(2, 2), (3, 2), (3, 3), (5, 6)] {
            a.set(x, y, true);
            b.set(x + 11, y + 9, true);
        }
        let t = Template::new(b).unwrap();
        let l = Imprint::new(&a).unwrap().aligned_loss(&t);
        assert_eq!(l.loss, 0.0);
    }
}
