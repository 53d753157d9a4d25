use crate::Vec3;

/// Region of a triangle containing the closest point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Face,
    /// Local corner indices, ascending.
    Edge(usize, usize),
    Vertex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub bary: [f64; 3],
    pub feature: Feature,
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> ClosestPoint {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return vertex(a, 0);
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return vertex(b, 1);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return ClosestPoint {
            point: a + ab * v,
            bary: [1.0 - v, v, 0.0],
            feature: Feature::Edge(0, 1),
        };
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return vertex(c, 2);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return ClosestPoint {
            point: a + ac * w,
            bary: [1.0 - w, 0.0, w],
            feature: Feature::Edge(0, 2),
        };
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return ClosestPoint {
            point: b + (c - b) * w,
            bary: [0.0, 1.0 - w, w],
            feature: Feature::Edge(1, 2),
        };
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    ClosestPoint {
        point: a + ab * v + ac * w,
        bary: [1.0 - v - w, v, w],
        feature: Feature::Face,
    }
}

fn vertex(p: Vec3, i: usize) -> ClosestPoint {
    let mut bary = [0.0; 3];
    bary[i] = 1.0;
    ClosestPoint {
        point: p,
        bary,
        feature: Feature::Vertex(i),
    }
}

/// Squared distance from `p` to the box `[lo, hi]`.
pub fn aabb_distance2(p: &Vec3, lo: &Vec3, hi: &Vec3) -> f64 {
    let mut d2 = 0.0;
    for i in 0..3 {
        let v = p[i];
        let excess = if v < lo[i] {
            lo[i] - v
        } else if v > hi[i] {
            v - hi[i]
        } else {
            0.0
        };
        d2 += excess * excess;
    }
    d2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tri() -> [Vec3; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn regions() {
        let [a, b, c] = tri();
        let cp = closest_point_on_triangle(Vec3::new(0.25, 0.25, -1.0), a, b, c);
        assert_eq!(cp.feature, Feature::Face);
        assert_eq!(cp.point, Vec3::new(0.25, 0.25, 0.0));
        let cp = closest_point_on_triangle(Vec3::new(-1.0, -1.0, 0.3), a, b, c);
        assert_eq!(cp.feature, Feature::Vertex(0));
        let cp = closest_point_on_triangle(Vec3::new(0.5, -2.0, 0.0), a, b, c);
        assert_eq!(cp.feature, Feature::Edge(0, 1));
        assert_eq!(cp.point, Vec3::new(0.5, 0.0, 0.0));
        let cp = closest_point_on_triangle(Vec3::new(1.0, 1.0, 0.0), a, b, c);
        assert_eq!(cp.feature, Feature::Edge(1, 2));
        assert!((cp.point - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    proptest! {
        // Brute-force oracle: densely sampled barycentric grid never beats the closed form.
        #[test]
        fn never_beaten_by_sampling(px in -1.0f64..2.0, py in -1.0f64..2.0, pz in -1.0f64..1.0) {
            let [a, b, c] = tri();
            let p = Vec3::new(px, py, pz);
            let cp = closest_point_on_triangle(p, a, b, c);
            let best = (cp.point - p).norm();
            let n = 60;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                    let q = a * (1.0 - u - v) + b * u + c * v;
                    prop_assert!(best <= (q - p).norm() + 1e-12);
                }
            }
            let s: f64 = cp.bary.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(cp.bary.iter().all(|w| *w >= 0.0));
            let recon = a * cp.bary[0] + b * cp.bary[1] + c * cp.bary[2];
            prop_assert!((recon - cp.point).norm() < 1e-12);
        }
    }
}
