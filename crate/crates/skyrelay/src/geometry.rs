//! Points, segments, axis-aligned boxes and the line-of-sight predicate.
//!
//! All coordinates are metres in a fixed East-North-Up frame; the ground is
//! the z = 0 plane. Obstruction tests treat boxes as closed sets, so a ray
//! that grazes a face or an edge counts as blocked.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    /// Two points that must be distinct coincide, e.g. a link with zero length.
    #[error("degenerate link: endpoints coincide")]
    DegenerateLink,
}

/// A point or displacement in 3-space, serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3 { x: a[0], y: a[1], z: a[2] }
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Length of the projection onto the ground plane.
    pub fn horizontal_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Linear interpolation, `t = 0` at `self` and `t = 1` at `o`.
    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Euclidean distance between two points in metres.
pub fn distance(a: Vec3, b: Vec3) -> f64 {
    (b - a).norm()
}

/// Directed straight-line segment from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec3,
    pub b: Vec3,
}

impl Segment {
    pub const fn new(a: Vec3, b: Vec3) -> Self {
        Segment { a, b }
    }

    pub fn point_at(&self, t: f64) -> Vec3 {
        self.a.lerp(self.b, t)
    }
}

/// Closed axis-aligned box, the footprint-and-height model of one building.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    /// min <= max on every axis.
    pub fn is_well_formed(&self) -> bool {
        self.min.is_finite()
            && self.max.is_finite()
            && self.min.x <= self.max.x
            && self.min.y <= self.max.y
            && self.min.z <= self.max.z
    }

    /// Closed-set membership: faces, edges and corners belong to the box.
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &Aabb) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    /// Box grown by `r` on every face. Used as a conservative stand-in for
    /// the exact sphere-box test when checking candidate sphere clearance.
    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb::new(
            self.min - Vec3::new(r, r, r),
            self.max + Vec3::new(r, r, r),
        )
    }

    /// Signed distance to the box surface: negative inside, positive outside.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(p.z - self.max.z);
        if dx <= 0.0 && dy <= 0.0 && dz <= 0.0 {
            // Inside: distance to the nearest face, negated.
            dx.max(dy).max(dz)
        } else {
            let ox = dx.max(0.0);
            let oy = dy.max(0.0);
            let oz = dz.max(0.0);
            (ox * ox + oy * oy + oz * oz).sqrt()
        }
    }
}

/// Slab test for a segment against a closed box.
///
/// The segment parameter interval `[0, 1]` is intersected with the parameter
/// interval the segment spends inside each axis slab; the segment hits the
/// box iff the common interval is non-empty. Touching contact counts as an
/// intersection because the box is closed.
pub fn segment_intersects_aabb(seg: &Segment, b: &Aabb) -> bool {
    let d = seg.b - seg.a;
    let mut t_lo: f64 = 0.0;
    let mut t_hi: f64 = 1.0;
    for axis in 0..3 {
        let (a0, dir, lo, hi) = match axis {
            0 => (seg.a.x, d.x, b.min.x, b.max.x),
            1 => (seg.a.y, d.y, b.min.y, b.max.y),
            _ => (seg.a.z, d.z, b.min.z, b.max.z),
        };
        if dir == 0.0 {
            // Parallel to the slab: either always inside it or never.
            if a0 < lo || a0 > hi {
                return false;
            }
        } else {
            let mut t0 = (lo - a0) / dir;
            let mut t1 = (hi - a0) / dir;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_lo = t_lo.max(t0);
            t_hi = t_hi.min(t1);
            if t_lo > t_hi {
                return false;
            }
        }
    }
    true
}

/// True iff the straight path from `a` to `b` clears every box.
///
/// Symmetric in its endpoints. Grazing contact with any box blocks the link.
pub fn los_clear(a: Vec3, b: Vec3, boxes: &[Aabb]) -> bool {
    let seg = Segment::new(a, b);
    !boxes.iter().any(|bx| segment_intersects_aabb(&seg, bx))
}

/// Cosine of the vertical arrival angle seen along the link `from -> to`:
/// horizontal separation over straight-line distance, in `[0, 1]`.
fn link_angle_cosine(from: Vec3, to: Vec3) -> Result<f64, GeometryError> {
    let d = to - from;
    let r = d.norm();
    if r == 0.0 {
        return Err(GeometryError::DegenerateLink);
    }
    Ok(d.horizontal_norm() / r)
}

/// Arrival-angle cosine at the relay for the uplink from the base station.
pub fn aoa_cosine(bs: Vec3, uav: Vec3) -> Result<f64, GeometryError> {
    link_angle_cosine(bs, uav)
}

/// Departure-angle cosine at the relay for the downlink to the terminal.
pub fn aod_cosine(uav: Vec3, mt: Vec3) -> Result<f64, GeometryError> {
    link_angle_cosine(uav, mt)
}

/// Optional orientation test: both endpoints must lie strictly on the side
/// the relay's heading direction `(cos h, sin h, 0)` points to. Off by
/// default in the planner because a panel can be mounted to face either way.
pub fn same_side_check(bs: Vec3, uav: Vec3, heading: f64, mt: Vec3) -> bool {
    let facing = Vec3::new(heading.cos(), heading.sin(), 0.0);
    (bs - uav).dot(facing) > 0.0 && (mt - uav).dot(facing) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn distance_pythagorean_triple() {
        let d = distance(Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 6.0, 15.0));
        assert_eq!(d, 13.0);
    }

    #[test]
    fn aoa_cosine_three_four_five() {
        let c = aoa_cosine(Vec3::new(0.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 4.0)).unwrap();
        assert_close(c, 0.6);
    }

    #[test]
    fn aod_cosine_ground_terminal() {
        let c = aod_cosine(Vec3::new(0.0, 0.0, 40.0), Vec3::new(30.0, 0.0, 0.0)).unwrap();
        assert_close(c, 0.6);
    }

    #[test]
    fn angle_cosine_rejects_coincident_points() {
        let p = Vec3::new(5.0, 5.0, 5.0);
        assert_eq!(aoa_cosine(p, p), Err(GeometryError::DegenerateLink));
        assert_eq!(aod_cosine(p, p), Err(GeometryError::DegenerateLink));
    }

    #[test]
    fn segment_through_box_hits() {
        let b = Aabb::new(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
        let s = Segment::new(Vec3::new(-2.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0));
        assert!(segment_intersects_aabb(&s, &b));
    }

    #[test]
    fn segment_beside_box_misses() {
        let b = Aabb::new(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
        let s = Segment::new(Vec3::new(-2.0, 2.0, 0.0), Vec3::new(2.0, 2.0, 0.0));
        assert!(!segment_intersects_aabb(&s, &b));
    }

    #[test]
    fn grazing_face_counts_as_hit() {
        let b = Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 2.0, 2.0));
        // Runs exactly along the top face plane.
        let s = Segment::new(Vec3::new(-1.0, 1.0, 2.0), Vec3::new(3.0, 1.0, 2.0));
        assert!(segment_intersects_aabb(&s, &b));
        assert!(!los_clear(s.a, s.b, &[b]));
    }

    #[test]
    fn grazing_corner_counts_as_hit() {
        let b = Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 2.0, 2.0));
        let s = Segment::new(Vec3::new(2.0, 2.0, 2.0), Vec3::new(5.0, 5.0, 5.0));
        assert!(segment_intersects_aabb(&s, &b));
    }

    #[test]
    fn zero_length_segment_is_point_membership() {
        let b = Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0));
        let inside = Segment::new(Vec3::new(0.5, 0.5, 0.5), Vec3::new(0.5, 0.5, 0.5));
        let outside = Segment::new(Vec3::new(2.0, 0.5, 0.5), Vec3::new(2.0, 0.5, 0.5));
        assert!(segment_intersects_aabb(&inside, &b));
        assert!(!segment_intersects_aabb(&outside, &b));
    }

    #[test]
    fn los_open_sky() {
        assert!(los_clear(
            Vec3::new(0.0, 0.0, 10.0),
            Vec3::new(100.0, 50.0, 60.0),
            &[],
        ));
    }

    #[test]
    fn los_blocked_by_one_of_many() {
        let far = Aabb::new(Vec3::new(500.0, 500.0, 0.0), Vec3::new(510.0, 510.0, 30.0));
        let wall = Aabb::new(Vec3::new(40.0, -10.0, 0.0), Vec3::new(50.0, 10.0, 80.0));
        let a = Vec3::new(0.0, 0.0, 10.0);
        let b = Vec3::new(100.0, 0.0, 10.0);
        assert!(!los_clear(a, b, &[far, wall]));
        assert!(los_clear(a, b, &[far]));
    }

    #[test]
    fn same_side_split() {
        let uav = Vec3::new(0.0, 0.0, 50.0);
        // Facing +x: both endpoints ahead.
        assert!(same_side_check(
            Vec3::new(10.0, 5.0, 0.0),
            uav,
            0.0,
            Vec3::new(30.0, -5.0, 0.0),
        ));
        // Terminal behind the panel.
        assert!(!same_side_check(
            Vec3::new(10.0, 5.0, 0.0),
            uav,
            0.0,
            Vec3::new(-30.0, -5.0, 0.0),
        ));
    }

    #[test]
    fn signed_distance_inside_and_out() {
        let b = Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(10.0, 10.0, 10.0));
        assert_close(b.signed_distance(Vec3::new(5.0, 5.0, 9.0)), -1.0);
        assert_close(b.signed_distance(Vec3::new(13.0, 14.0, 5.0)), 5.0);
    }

    /// Sampling stand-in for the slab test: closed-box membership probed at
    /// a uniform grid plus the midpoints between consecutive face-plane
    /// crossings, so any crossing chord of positive length is observed.
    fn sampled_hit(seg: &Segment, b: &Aabb, n: usize) -> bool {
        let mut params: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let d = seg.b - seg.a;
        let mut crossings = vec![0.0, 1.0];
        for (a0, dir, lo, hi) in [
            (seg.a.x, d.x, b.min.x, b.max.x),
            (seg.a.y, d.y, b.min.y, b.max.y),
            (seg.a.z, d.z, b.min.z, b.max.z),
        ] {
            if dir != 0.0 {
                for plane in [lo, hi] {
                    let t = (plane - a0) / dir;
                    if (0.0..=1.0).contains(&t) {
                        crossings.push(t);
                    }
                }
            }
        }
        crossings.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for w in crossings.windows(2) {
            params.push(0.5 * (w[0] + w[1]));
        }
        params.extend_from_slice(&crossings);
        params.iter().any(|&t| b.contains(seg.point_at(t)))
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64, az in -50.0..50.0f64,
            bx in -50.0..50.0f64, by in -50.0..50.0f64, bz in -50.0..50.0f64,
            cx in -50.0..50.0f64, cy in -50.0..50.0f64, cz in -50.0..50.0f64,
        ) {
            let a = Vec3::new(ax, ay, az);
            let b = Vec3::new(bx, by, bz);
            let c = Vec3::new(cx, cy, cz);
            prop_assert!(distance(a, b) >= 0.0);
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert_eq!(distance(a, a), 0.0);
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        }

        #[test]
        fn angle_cosine_in_unit_interval(
            ax in -100.0..100.0f64, ay in -100.0..100.0f64, az in 0.0..200.0f64,
            bx in -100.0..100.0f64, by in -100.0..100.0f64, bz in 0.0..200.0f64,
        ) {
            let a = Vec3::new(ax, ay, az);
            let b = Vec3::new(bx, by, bz);
            prop_assume!(distance(a, b) > 0.0);
            let c = aoa_cosine(a, b).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
            // The link cosine does not depend on direction of travel.
            prop_assert_eq!(c, aod_cosine(b, a).unwrap());
        }

        #[test]
        fn los_is_symmetric(
            ax in -50.0..150.0f64, ay in -50.0..150.0f64, az in 0.0..120.0f64,
            bx in -50.0..150.0f64, by in -50.0..150.0f64, bz in 0.0..120.0f64,
            mx in 0.0..100.0f64, my in 0.0..100.0f64,
            wx in 5.0..40.0f64, wy in 5.0..40.0f64, h in 5.0..80.0f64,
        ) {
            let boxes = [Aabb::new(
                Vec3::new(mx, my, 0.0),
                Vec3::new(mx + wx, my + wy, h),
            )];
            let a = Vec3::new(ax, ay, az);
            let b = Vec3::new(bx, by, bz);
            prop_assert_eq!(los_clear(a, b, &boxes), los_clear(b, a, &boxes));
        }

        #[test]
        fn slab_matches_sampling(
            ax in 0.0..10.0f64, ay in 0.0..10.0f64, az in 0.0..10.0f64,
            bx in 0.0..10.0f64, by in 0.0..10.0f64, bz in 0.0..10.0f64,
            px in 0.0..10.0f64, py in 0.0..10.0f64, pz in 0.0..10.0f64,
            qx in 0.0..10.0f64, qy in 0.0..10.0f64, qz in 0.0..10.0f64,
        ) {
            let b = Aabb::new(
                Vec3::new(px.min(qx), py.min(qy), pz.min(qz)),
                Vec3::new(px.max(qx), py.max(qy), pz.max(qz)),
            );
            let seg = Segment::new(Vec3::new(ax, ay, az), Vec3::new(bx, by, bz));
            // Skip decisions within float noise of tangency.
            let probes = 512;
            let extreme = (0..=probes)
                .map(|i| b.signed_distance(seg.point_at(i as f64 / probes as f64)))
                .fold(f64::INFINITY, f64::min);
            prop_assume!(extreme.abs() > 1e-6);
            prop_assert_eq!(segment_intersects_aabb(&seg, &b), sampled_hit(&seg, &b, 10_000));
        }
    }
}
