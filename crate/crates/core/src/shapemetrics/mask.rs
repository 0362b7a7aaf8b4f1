use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterngen::{pattern_triangles_mm, Pattern, TriGrid};
use crate::scalar::{cross2, Point2, Scalar};

/// Binary raster in a millimetre frame.
///
/// Pixel `(ix, iy)` covers `origin + [ix, ix + 1) * pitch` by
/// `origin + [iy, iy + 1) * pitch`; `iy` grows with `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask<T> {
    pub width: usize,
    pub height: usize,
    /// Millimetres per pixel.
    pub pitch: T,
    /// Lower-left corner of pixel (0, 0) in millimetres.
    pub origin: Point2<T>,
    /// Row-major occupancy, row `iy` at `iy * width`.
    pub bits: Vec<bool>,
}

/// Inclusive pixel bounding box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelBox {
    /// Twice the box centre, kept integral.
    pub fn doubled_center(&self) -> (i64, i64) {
        ((self.x0 + self.x1) as i64, (self.y0 + self.y1) as i64)
    }
}

impl<T: Scalar> Mask<T> {
    pub fn new(width: usize, height: usize, pitch: T, origin: Point2<T>) -> Result<Self> {
        if !(pitch > T::zero()) {
            return Err(Error::invalid("mask pitch must be positive"));
        }
        Ok(Self {
            width,
            height,
            pitch,
            origin,
            bits: vec![false; width * height],
        })
    }

    /// Wraps existing bits, checking `width * height == bits.len()`.
    pub fn from_bits(
        width: usize,
        height: usize,
        pitch: T,
        origin: Point2<T>,
        bits: Vec<bool>,
    ) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        let mut m = Self::new(0, 0, pitch, origin)?;
        m.width = width;
        m.height = height;
        m.bits = bits;
        Ok(m)
    }

    /// Mask whose frame is centred on the origin, as produced by a sensor.
    pub fn centered(width: usize, height: usize, pitch: T) -> Result<Self> {
        let half = T::lit(0.5);
        let origin = [
            -T::from_usize_lossy(width) * pitch * half,
            -T::from_usize_lossy(height) * pitch * half,
        ];
        Self::new(width, height, pitch, origin)
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.bits[iy * self.width + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, value: bool) {
        self.bits[iy * self.width + ix] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn set_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn pixel_center(&self, ix: usize, iy: usize) -> Point2<T> {
        let half = T::lit(0.5);
        [
            self.origin[0] + (T::from_usize_lossy(ix) + half) * self.pitch,
            self.origin[1] + (T::from_usize_lossy(iy) + half) * self.pitch,
        ]
    }

    /// Pixel containing a millimetre position, if inside the raster.
    pub fn pixel_at(&self, p: Point2<T>) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin[0]) / self.pitch).floor();
        let fy = ((p[1] - self.origin[1]) / self.pitch).floor();
        if fx < T::zero() || fy < T::zero() {
            return None;
        }
        let (ix, iy) = (fx.to_usize()?, fy.to_usize()?);
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    pub fn bounding_box(&self) -> Option<PixelBox> {
        let mut bbox: Option<PixelBox> = None;
        for (x, y) in self.set_pixels() {
            let b = bbox.get_or_insert(PixelBox {
                x0: x,
                y0: y,
                x1: x,
                y1: y,
            });
            b.x0 = b.x0.min(x);
            b.x1 = b.x1.max(x);
            b.y0 = b.y0.min(y);
            b.y1 = b.y1.max(y);
        }
        bbox
    }

    /// Centre of the bounding box of set pixels, in millimetres.
    pub fn bbox_center_mm(&self) -> Option<Point2<T>> {
        let b = self.bounding_box()?;
        let lo = self.pixel_center(b.x0, b.y0);
        let hi = self.pixel_center(b.x1, b.y1);
        let half = T::lit(0.5);
        Some([(lo[0] + hi[0]) * half, (lo[1] + hi[1]) * half])
    }

    pub fn same_pitch(&self, other: &Mask<T>) -> bool {
        (self.pitch - other.pitch).abs() <= self.pitch * T::lit(1e-9)
    }
}

/// Pixel-centre coverage of a set of triangles, inclusive of edges.
pub fn rasterize_triangles<T: Scalar>(triangles: &[[Point2<T>; 3]], mask: &mut Mask<T>) {
    let eps = T::lit(1e-9) * mask.pitch * mask.pitch;
    for tri in triangles {
        let (mut lo, mut hi) = (tri[0], tri[0]);
        for p in &tri[1..] {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let to_px = |v: T, o: T, limit: usize| -> (usize, usize) {
            let f = (v - o) / mask.pitch - T::lit(0.5);
            let clamp = |x: T| {
                x.max(T::zero())
                    .min(T::from_usize_lossy(limit))
                    .to_usize()
                    .unwrap()
            };
            (clamp(f.floor()), clamp(f.ceil() + T::one()))
        };
        let (x_lo, _) = to_px(lo[0], mask.origin[0], mask.width);
        let (_, x_hi) = to_px(hi[0], mask.origin[0], mask.width);
        let (y_lo, _) = to_px(lo[1], mask.origin[1], mask.height);
        let (_, y_hi) = to_px(hi[1], mask.origin[1], mask.height);
        let orient = cross2(tri[0], tri[1], tri[2]).signum();
        for iy in y_lo..y_hi {
            for ix in x_lo..x_hi {
                let c = mask.pixel_center(ix, iy);
                let inside = (0..3).all(|k| cross2(tri[k], tri[(k + 1) % 3], c) * orient >= -eps);
                if inside {
                    mask.set(ix, iy, true);
                }
            }
        }
    }
}

/// Default border, in pixels, left around a library raster so dilation never clips.
pub const DEFAULT_MARGIN_PX: usize = 8;

pub fn rasterize<T: Scalar>(
    pattern: &Pattern,
    grid: &TriGrid<T>,
    scale_mm: T,
    pitch: T,
) -> Result<Mask<T>> {
    rasterize_with_margin(pattern, grid, scale_mm, pitch, DEFAULT_MARGIN_PX)
}

/// Rasterizes a pattern in its centred millimetre frame. The raster covers
/// the full grid square plus `margin_px` on every side.
pub fn rasterize_with_margin<T: Scalar>(
    pattern: &Pattern,
    grid: &TriGrid<T>,
    scale_mm: T,
    pitch: T,
    margin_px: usize,
) -> Result<Mask<T>> {
    if !(pitch > T::zero()) || pitch > scale_mm / T::lit(16.0) {
        return Err(Error::invalid(format!(
            "pitch {pitch} must be positive and at most scale/16"
        )));
    }
    let tris = pattern_triangles_mm(pattern, grid, scale_mm)?;
    let core = (scale_mm / pitch).ceil().to_usize().unwrap();
    let side = core + 2 * margin_px;
    let half = T::from_usize_lossy(side) * pitch / T::lit(2.0);
    let mut mask = Mask::new(side, side, pitch, [-half, -half])?;
    rasterize_triangles(&tris, &mut mask);
    if mask.is_empty() {
        return Err(Error::EmptyPattern);
    }
    Ok(mask)
}

/// Offsets of the elliptical (circular on square pixels) structuring element.
pub fn ellipse_kernel(radius_px: usize) -> Vec<(isize, isize)> {
    let r = radius_px as isize;
    let mut k = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                k.push((dx, dy));
            }
        }
    }
    k
}

/// Morphological dilation by [`ellipse_kernel`]. Pixels stamped beyond the
/// raster border are dropped.
pub fn dilate<T: Scalar>(mask: &Mask<T>, radius_px: usize) -> Mask<T> {
    let kernel = ellipse_kernel(radius_px);
    let mut out = mask.clone();
    let (w, h) = (mask.width as isize, mask.height as isize);
    for (x, y) in mask.set_pixels() {
        for &(dx, dy) in &kernel {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                out.set(nx as usize, ny as usize, true);
            }
        }
    }
    out
}
