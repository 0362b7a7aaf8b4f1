use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterngen::{Pattern, TriGrid};
use crate::scalar::{cross3, dot3, norm3, sub3, Point3, Scalar};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriMesh<T> {
    /// Millimetres.
    pub vertices: Vec<Point3<T>>,
    /// Counter-clockwise when seen from outside.
    pub faces: Vec<[usize; 3]>,
}

impl<T: Scalar> TriMesh<T> {
    pub fn face_points(&self, f: usize) -> [Point3<T>; 3] {
        self.faces[f].map(|i| self.vertices[i])
    }

    pub fn face_normal(&self, f: usize) -> Point3<T> {
        let [a, b, c] = self.face_points(f);
        cross3(sub3(b, a), sub3(c, a))
    }

    pub fn face_area(&self, f: usize) -> T {
        norm3(self.face_normal(f)) / T::lit(2.0)
    }

    pub fn surface_area(&self) -> T {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed volume by the divergence theorem; positive for outward winding.
    pub fn volume(&self) -> T {
        let six = T::lit(6.0);
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.face_points(f);
                dot3(a, cross3(b, c)) / six
            })
            .sum()
    }

    /// Every directed edge is matched by its reverse.
    pub fn is_closed(&self) -> bool {
        let mut balance: HashMap<(usize, usize), i64> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a < b {
                    *balance.entry((a, b)).or_default() += 1;
                } else {
                    *balance.entry((b, a)).or_default() -= 1;
                }
            }
        }
        !self.faces.is_empty() && balance.values().all(|&v| v == 0)
    }

    pub fn max_edge_length(&self) -> T {
        self.faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k], f[(k + 1) % 3])))
            .map(|(a, b)| norm3(sub3(self.vertices[a], self.vertices[b])))
            .fold(T::zero(), T::max)
    }

    pub fn min_face_area(&self) -> Option<T> {
        (0..self.faces.len())
            .map(|f| self.face_area(f))
            .reduce(T::min)
    }
}

/// Extrudes the selected triangles into a closed solid of height `depth_mm`.
///
/// Shared grid vertices are merged, so interior edges between selected
/// triangles carry no walls and the result is the union of the prisms.
pub fn pattern_to_mesh<T: Scalar>(
    pattern: &Pattern,
    grid: &TriGrid<T>,
    scale_mm: T,
    depth_mm: T,
) -> Result<TriMesh<T>> {
    if !(scale_mm > T::zero()) || !(depth_mm > T::zero()) {
        return Err(Error::invalid("scale and depth must be positive"));
    }
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let k = scale_mm / grid.extent;
    let half = scale_mm / T::lit(2.0);

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut mesh = TriMesh::default();
    // Grid point -> (bottom, top) vertex pair.
    let mut vertex = |gi: usize, mesh: &mut TriMesh<T>| -> (usize, usize) {
        let base = *remap.entry(gi).or_insert_with(|| {
            let p = grid.points[gi];
            let (x, y) = (p[0] * k - half, p[1] * k - half);
            mesh.vertices.push([x, y, T::zero()]);
            mesh.vertices.push([x, y, depth_mm]);
            mesh.vertices.len() - 2
        });
        (base, base + 1)
    };

    let mut selected = vec![false; grid.triangle_count()];
    for &t in pattern.triangle_ids() {
        grid.check_index(t)?;
        selected[t] = true;
    }
    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
    for &t in pattern.triangle_ids() {
        let tri = grid.triangles[t];
        for j in 0..3 {
            let (a, b) = (tri[j], tri[(j + 1) % 3]);
            *edge_owner.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }

    for &t in pattern.triangle_ids() {
        let [a, b, c] = grid.triangles[t];
        let (a0, a1) = vertex(a, &mut mesh);
        let (b0, b1) = vertex(b, &mut mesh);
        let (c0, c1) = vertex(c, &mut mesh);
        mesh.faces.push([a1, b1, c1]);
        mesh.faces.push([a0, c0, b0]);
        for (u, v, u0, u1, v0, v1) in [
            (a, b, a0, a1, b0, b1),
            (b, c, b0, b1, c0, c1),
            (c, a, c0, c1, a0, a1),
        ] {
            if edge_owner[&(u.min(v), u.max(v))] == 1 {
                mesh.faces.push([u0, v0, v1]);
                mesh.faces.push([u0, v1, u1]);
            }
        }
    }
    Ok(mesh)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EdgeKey<T> {
    len: T,
    a: usize,
    b: usize,
}

impl<T: PartialOrd> Eq for EdgeKey<T> where T: PartialEq {}

impl<T: PartialOrd> PartialOrd for EdgeKey<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for EdgeKey<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .partial_cmp(&other.len)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

/// Longest-edge midpoint bisection until no edge exceeds `max_edge`.
///
/// Edges are split globally in decreasing length order, so both faces of a
/// shared edge are bisected together and the mesh stays conforming.
pub fn subdivide<T: Scalar>(mesh: &TriMesh<T>, max_edge: T) -> Result<TriMesh<T>> {
    if !(max_edge > T::zero()) {
        return Err(Error::invalid("max edge length must be positive"));
    }
    let mut vertices = mesh.vertices.clone();
    let mut faces: Vec<Option<[usize; 3]>> = mesh.faces.iter().copied().map(Some).collect();
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut heap = BinaryHeap::new();

    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let length = |v: &[Point3<T>], a: usize, b: usize| norm3(sub3(v[a], v[b]));

    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let e = key(f[k], f[(k + 1) % 3]);
            let owners = by_edge.entry(e).or_default();
            if owners.is_empty() {
                let len = length(&vertices, e.0, e.1);
                if len > max_edge {
                    heap.push(EdgeKey {
                        len,
                        a: e.0,
                        b: e.1,
                    });
                }
            }
            owners.push(fi);
        }
    }

    while let Some(EdgeKey { a, b, .. }) = heap.pop() {
        let Some(owners) = by_edge.remove(&(a, b)) else {
            continue;
        };
        let m = vertices.len();
        let (pa, pb) = (vertices[a], vertices[b]);
        let half = T::lit(0.5);
        vertices.push([0, 1, 2].map(|k| (pa[k] + pb[k]) * half));

        for fi in owners {
            let f = faces[fi].take().expect("live face");
            let k = (0..3)
                .find(|&k| key(f[k], f[(k + 1) % 3]) == (a, b))
                .expect("face owns edge");
            let (p, q, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            for e in [key(q, c), key(c, p)] {
                let owners = by_edge.get_mut(&e).expect("edge present");
                owners.retain(|&o| o != fi);
            }
            for nf in [[p, m, c], [m, q, c]] {
                let idx = faces.len();
                faces.push(Some(nf));
                for j in 0..3 {
                    let e = key(nf[j], nf[(j + 1) % 3]);
                    let owners = by_edge.entry(e).or_default();
                    if owners.is_empty() && (e.0 == m || e.1 == m) {
                        let len = length(&vertices, e.0, e.1);
                        if len > max_edge {
                            heap.push(EdgeKey {
                                len,
                                a: e.0,
                                b: e.1,
                            });
                        }
                    }
                    owners.push(idx);
                }
            }
        }
    }

    Ok(TriMesh {
        vertices,
        faces: faces.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterngen::build_staggered_grid;

    fn grid() -> TriGrid<f64> {
        build_staggered_grid(4, 4.0).unwrap()
    }

    fn prism_volume(g: &TriGrid<f64>, ids: &[usize], scale: f64, depth: f64) -> f64 {
        let k = scale / g.extent;
        ids.iter()
            .map(|&t| g.triangle_area(t) * k * k * depth)
            .sum()
    }

    #[test]
    fn single_triangle_prism() {
        let g = grid();
        let p = Pattern::new(vec![11], &g).unwrap();
        let m = pattern_to_mesh(&p, &g, 5.0, 1.0).unwrap();
        assert_eq!(m.faces.len(), 8);
        assert_eq!(m.vertices.len(), 6);
        assert!(m.is_closed());
        assert!((m.volume() - prism_volume(&g, &[11], 5.0, 1.0)).abs() < 1e-6);
    }

    #[test]
    fn adjacent_prisms_do_not_double_count() {
        let g = grid();
        let nb = g.adjacency[11][0];
        let p = Pattern::new(vec![11, nb], &g).unwrap();
        let m = pattern_to_mesh(&p, &g, 5.0, 1.0).unwrap();
        assert!(m.is_closed());
        // 4 caps + 4 boundary edges as walls.
        assert_eq!(m.faces.len(), 4 + 8);
        assert!((m.volume() - prism_volume(&g, &[11, nb], 5.0, 1.0)).abs() < 1e-6);
    }

    #[test]
    fn rejects_flat_or_empty() {
        let g = grid();
        let p = Pattern::new(vec![1], &g).unwrap();
        assert!(pattern_to_mesh(&p, &g, 5.0, 0.0).is_err());
        let e = Pattern::new(vec![], &g).unwrap();
        assert!(matches!(
            pattern_to_mesh(&e, &g, 5.0, 1.0),
            Err(Error::EmptyPattern)
        ));
    }

    #[test]
    fn subdivide_fixpoint() {
        let g = grid();
        let p = Pattern::new(vec![3, 4], &g).unwrap();
        let m = pattern_to_mesh(&p, &g, 5.0, 1.0).unwrap();
        let bound = m.max_edge_length();
        assert_eq!(subdivide(&m, bound).unwrap(), m);
    }

    #[test]
    fn subdivide_right_triangle() {
        let m = TriMesh::<f64> {
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            faces: vec![[0, 1, 2]],
        };
        let s = subdivide(&m, 0.5).unwrap();
        assert!(s.max_edge_length() <= 0.5);
        assert!((s.surface_area() - 0.5).abs() < 1e-9);
        assert!(s
            .vertices
            .iter()
            .all(|v| v[2] == 0.0 && v[0] + v[1] <= 1.0 + 1e-12));
    }

    #[test]
    fn subdivide_preserves_closed_prism() {
        let g = grid();
        let p = Pattern::new(vec![5, 6, 7, 15, 20], &g).unwrap();
        let m = pattern_to_mesh(&p, &g, 5.0, 1.0).unwrap();
        let s = subdivide(&m, 0.125).unwrap();
        assert!(s.is_closed());
        assert!(s.max_edge_length() <= 0.125);
        assert!(((s.volume() - m.volume()) / m.volume()).abs() < 1e-9);
        assert!(((s.surface_area() - m.surface_area()) / m.surface_area()).abs() < 1e-9);
        assert!(s.min_face_area().unwrap() > 1e-9);
    }
}
