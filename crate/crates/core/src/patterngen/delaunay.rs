//! Bowyer-Watson Delaunay triangulation for small planar point sets.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::{cross2, Point2, Scalar};

/// Strict in-circumcircle predicate for a counter-clockwise triangle.
///
/// Cocircular points are reported as outside, so whichever triangle was
/// created first survives a tie.
pub(crate) fn in_circumcircle<T: Scalar>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
    eps: T,
) -> bool {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    let det =
        adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
    det > eps
}

/// Triangulates `points`, returning counter-clockwise vertex triples sorted
/// by their smallest-first rotation.
///
/// Points are inserted in lexicographic (x, y) order which fixes the outcome
/// for cocircular configurations.
pub fn delaunay<T: Scalar>(points: &[Point2<T>]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "{n} points cannot be triangulated"
        )));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if span <= T::zero() {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let cx = (lo[0] + hi[0]) / T::lit(2.0);
    let cy = (lo[1] + hi[1]) / T::lit(2.0);
    let big = span * T::lit(64.0);

    let mut verts: Vec<Point2<T>> = points.to_vec();
    verts.push([cx - big, cy - big]);
    verts.push([cx + big, cy - big]);
    verts.push([cx, cy + big]);

    // Relative tolerance on the incircle determinant, which scales with span^4.
    let eps = T::epsilon() * T::lit(64.0) * span.powi(4);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (p, q) = (points[i], points[j]);
        p[0].partial_cmp(&q[0])
            .unwrap()
            .then(p[1].partial_cmp(&q[1]).unwrap())
    });

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for &pi in &order {
        let p = verts[pi];
        let (bad, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) = tris
            .into_iter()
            .partition(|t| in_circumcircle(verts[t[0]], verts[t[1]], verts[t[2]], p, eps));
        tris = keep;

        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &bad {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for t in &bad {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if edge_count[&(a.min(b), a.max(b))] == 1 {
                    let tri = [a, b, pi];
                    if cross2(verts[a], verts[b], p) > T::zero() {
                        tris.push(tri);
                    }
                }
            }
        }
    }

    let mut out: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .map(canonical_rotation)
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Rotates a triangle so its smallest vertex index comes first, preserving winding.
pub(crate) fn canonical_rotation(t: [usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| t[k]).unwrap();
    [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_yields_two_triangles() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.1], [0.0, 1.0]];
        let tris = delaunay(&pts).unwrap();
        assert_eq!(tris.len(), 2);
        for t in &tris {
            assert!(cross2(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.0);
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(delaunay(&[[0.0, 0.0], [1.0, 1.0]]).is_err());
        assert!(delaunay(&[[1.0f64, 1.0]; 4]).is_err());
    }
}
