//! Query structure over a triangle mesh: AABB tree for nearest-point
//! queries, vertex/triangle adjacency, and angle-weighted pseudo-normals
//! for robust inside/outside classification.

use std::collections::HashMap;
use std::sync::Arc;

use super::geometry::{aabb_distance2, closest_point_on_triangle, Feature};
use crate::mesh::TriMesh;
use crate::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: `count > 0`, triangles `order[start..start + count]`.
    /// Inner: `count == 0`, children at `start` and `start + 1`.
    start: usize,
    count: usize,
}

/// Nearest surface point to a query position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub triangle: usize,
    pub bary: [f64; 3],
    pub point: Vec3,
    pub distance2: f64,
    pub feature: Feature,
}

impl SurfaceHit {
    fn better_than(&self, other: &SurfaceHit) -> bool {
        self.distance2 < other.distance2
            || (self.distance2 == other.distance2 && self.triangle < other.triangle)
    }
}

pub struct Surface {
    mesh: Arc<TriMesh>,
    face_normals: Vec<Vec3>,
    vertex_pseudo: Vec<Vec3>,
    edge_pseudo: HashMap<(usize, usize), Vec3>,
    vertex_triangles: Vec<Vec<usize>>,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Surface {
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        let face_normals: Vec<Vec3> = (0..mesh.triangle_count())
            .map(|t| mesh.face_normal(t))
            .collect();

        let mut vertex_triangles = vec![Vec::new(); mesh.vertex_count()];
        let mut vertex_acc = vec![Vec3::zeros(); mesh.vertex_count()];
        let mut edge_acc: HashMap<(usize, usize), Vec3> = HashMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let n = face_normals[t];
            for k in 0..3 {
                let v = tri[k];
                vertex_triangles[v].push(t);
                let e1 = mesh.vertices[tri[(k + 1) % 3]] - mesh.vertices[v];
                let e2 = mesh.vertices[tri[(k + 2) % 3]] - mesh.vertices[v];
                let angle = e1.angle(&e2);
                vertex_acc[v] += n * angle;
                let (a, b) = (v, tri[(k + 1) % 3]);
                *edge_acc.entry((a.min(b), a.max(b))).or_insert_with(Vec3::zeros) += n;
            }
        }
        let unit = |v: Vec3| {
            let len = v.norm();
            if len > 0.0 {
                v / len
            } else {
                Vec3::zeros()
            }
        };
        let vertex_pseudo = vertex_acc.into_iter().map(unit).collect();
        let edge_pseudo = edge_acc.into_iter().map(|(k, v)| (k, unit(v))).collect();

        let mut surface = Surface {
            mesh,
            face_normals,
            vertex_pseudo,
            edge_pseudo,
            vertex_triangles,
            nodes: Vec::new(),
            order: Vec::new(),
        };
        surface.build_tree();
        surface
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn face_normal(&self, t: usize) -> Vec3 {
        self.face_normals[t]
    }

    fn tri_bounds(&self, t: usize) -> (Vec3, Vec3) {
        let [a, b, c] = self.mesh.triangle_vertices(t);
        (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
    }

    fn build_tree(&mut self) {
        let n = self.mesh.triangle_count();
        self.order = (0..n).collect();
        let centroids: Vec<Vec3> = (0..n)
            .map(|t| {
                let [a, b, c] = self.mesh.triangle_vertices(t);
                (a + b + c) / 3.0
            })
            .collect();
        self.nodes.push(Node {
            lo: Vec3::zeros(),
            hi: Vec3::zeros(),
            start: 0,
            count: n,
        });
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            let (start, count) = (self.nodes[idx].start, self.nodes[idx].count);
            let mut lo = Vec3::repeat(f64::INFINITY);
            let mut hi = Vec3::repeat(f64::NEG_INFINITY);
            for &t in &self.order[start..start + count] {
                let (tl, th) = self.tri_bounds(t);
                lo = lo.inf(&tl);
                hi = hi.sup(&th);
            }
            self.nodes[idx].lo = lo;
            self.nodes[idx].hi = hi;
            if count <= LEAF_SIZE {
                continue;
            }
            let mut clo = Vec3::repeat(f64::INFINITY);
            let mut chi = Vec3::repeat(f64::NEG_INFINITY);
            for &t in &self.order[start..start + count] {
                clo = clo.inf(&centroids[t]);
                chi = chi.sup(&centroids[t]);
            }
            let axis = (chi - clo).imax();
            let slice = &mut self.order[start..start + count];
            let mid = count / 2;
            slice.select_nth_unstable_by(mid, |&a, &b| {
                centroids[a][axis]
                    .total_cmp(&centroids[b][axis])
                    .then(a.cmp(&b))
            });
            let left = self.nodes.len();
            self.nodes.push(Node {
                lo,
                hi,
                start,
                count: mid,
            });
            self.nodes.push(Node {
                lo,
                hi,
                start: start + mid,
                count: count - mid,
            });
            self.nodes[idx].start = left;
            self.nodes[idx].count = 0;
            stack.push(left);
            stack.push(left + 1);
        }
    }

    pub fn closest_on(&self, t: usize, p: &Vec3) -> SurfaceHit {
        let [a, b, c] = self.mesh.triangle_vertices(t);
        let cp = closest_point_on_triangle(*p, a, b, c);
        let mut bary = cp.bary.map(|w| w.max(0.0));
        let sum: f64 = bary.iter().sum();
        bary.iter_mut().for_each(|w| *w /= sum);
        SurfaceHit {
            triangle: t,
            bary,
            point: cp.point,
            distance2: (cp.point - p).norm_squared(),
            feature: cp.feature,
        }
    }

    /// Exhaustive scan; ties go to the smallest triangle index.
    pub fn nearest_brute(&self, p: &Vec3) -> SurfaceHit {
        let mut best = self.closest_on(0, p);
        for t in 1..self.mesh.triangle_count() {
            let hit = self.closest_on(t, p);
            if hit.better_than(&best) {
                best = hit;
            }
        }
        best
    }

    /// Tree query, optionally primed with a known candidate to prune early.
    /// Returns the same hit as [`Surface::nearest_brute`].
    pub fn nearest(&self, p: &Vec3, seed: Option<SurfaceHit>) -> SurfaceHit {
        let mut best = seed.unwrap_or(SurfaceHit {
            triangle: usize::MAX,
            bary: [1.0, 0.0, 0.0],
            point: Vec3::zeros(),
            distance2: f64::INFINITY,
            feature: Feature::Face,
        });
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if aabb_distance2(p, &node.lo, &node.hi) > best.distance2 {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let hit = self.closest_on(t, p);
                    if hit.better_than(&best) {
                        best = hit;
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let dl = aabb_distance2(p, &self.nodes[l].lo, &self.nodes[l].hi);
                let dr = aabb_distance2(p, &self.nodes[r].lo, &self.nodes[r].hi);
                // push the farther child first so the nearer one is visited first
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }

    /// Triangles sharing at least one vertex with `t`, including `t`, ascending.
    pub fn neighborhood(&self, t: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.mesh.triangles[t]
            .iter()
            .flat_map(|&v| self.vertex_triangles[v].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Outward pseudo-normal of the feature holding the hit point.
    pub fn pseudo_normal(&self, hit: &SurfaceHit) -> Vec3 {
        let tri = self.mesh.triangles[hit.triangle];
        match hit.feature {
            Feature::Face => self.face_normals[hit.triangle],
            Feature::Edge(i, j) => {
                let (a, b) = (tri[i], tri[j]);
                self.edge_pseudo[&(a.min(b), a.max(b))]
            }
            Feature::Vertex(i) => self.vertex_pseudo[tri[i]],
        }
    }

    /// Signed distance, negative inside.
    pub fn signed_distance(&self, p: &Vec3, hit: &SurfaceHit) -> f64 {
        let d = hit.distance2.sqrt();
        if (p - hit.point).dot(&self.pseudo_normal(hit)) < 0.0 {
            -d
        } else {
            d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::icosphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tree_matches_brute_force() {
        let surface = Surface::new(Arc::new(icosphere(3, 0.1)));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let p = Vec3::new(
                rng.gen_range(-0.15..0.15),
                rng.gen_range(-0.15..0.15),
                rng.gen_range(-0.15..0.15),
            );
            let brute = surface.nearest_brute(&p);
            assert_eq!(surface.nearest(&p, None), brute);
            let seed = surface.closest_on(rng.gen_range(0..surface.mesh().triangle_count()), &p);
            assert_eq!(surface.nearest(&p, Some(seed)), brute);
        }
    }

    #[test]
    fn sign_is_negative_inside_sphere() {
        let surface = Surface::new(Arc::new(icosphere(2, 0.1)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let dir = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            // The polyhedron is inscribed in the sphere: stay clear of the chord gap.
            for (r, inside) in [(0.05, true), (0.13, false)] {
                let p = dir * r;
                let hit = surface.nearest(&p, None);
                assert_eq!(surface.signed_distance(&p, &hit) < 0.0, inside);
            }
        }
    }

    #[test]
    fn neighborhood_contains_self_and_ring() {
        let surface = Surface::new(Arc::new(icosphere(1, 1.0)));
        let ring = surface.neighborhood(0);
        assert!(ring.contains(&0));
        // every interior vertex has valence 5 or 6: one-ring of a triangle has 10-13 faces
        assert!((10..=13).contains(&ring.len()), "{}", ring.len());
    }
}
