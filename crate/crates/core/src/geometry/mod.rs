//! Rotated-rectangle geometry.
//!
//! Boxes use the `(x, y, w, h, theta)` parameterization: center, side lengths
//! along the box's local axes, and a counter-clockwise rotation in radians.
//! Angles are kept in `(-pi/2, pi/2]`; a rectangle is unchanged by a rotation of
//! `pi`, so that range covers every orientation once.
//!
//! The canonical ("long-edge") form additionally requires `w >= h`. Labels that
//! follow the 90-degree periodic convention (`theta` in `[-pi/2, 0)` with `w`
//! and `h` free) must be renormalized with [`OrientedBox::canonical`] before
//! being compared field-wise against boxes produced here.

mod clip;
mod hull;
mod nms;

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use clip::{convex_intersection_area, polygon_area, polygon_intersection_area};
pub use hull::{convex_hull, min_area_rect};
pub use nms::rotated_nms;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

impl Sub for Point {
    type Output = Point;

    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Add for Point {
    type Output = Point;

    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

/// Four vertices of a convex quadrilateral in counter-clockwise order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad(pub [Point; 4]);

impl Quad {
    pub fn vertices(&self) -> &[Point] {
        &self.0
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.0)
    }
}

/// A rotated rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    /// Radians, counter-clockwise, in `(-pi/2, pi/2]` for boxes built by [`OrientedBox::new`].
    pub theta: f64,
}

/// Wraps an angle into `(-pi/2, pi/2]`.
///
/// Angles already inside the range are returned bit-for-bit unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -FRAC_PI_2 && theta <= FRAC_PI_2 {
        return theta;
    }
    let mut t = theta;
    if t.abs() > 64.0 * PI {
        t %= PI;
    }
    while t > FRAC_PI_2 {
        t -= PI;
    }
    while t <= -FRAC_PI_2 {
        t += PI;
    }
    t
}

impl OrientedBox {
    /// Builds a validated box with its angle wrapped into `(-pi/2, pi/2]`.
    pub fn new(x: f64, y: f64, w: f64, h: f64, theta: f64) -> Result<Self> {
        let b = Self { x, y, w, h, theta };
        b.validate()?;
        Ok(b.normalized())
    }

    /// Axis-aligned box (`theta == 0`).
    pub fn axis_aligned(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x, y, w, h, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x, self.y, self.w, self.h, self.theta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "non-positive size {}x{}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Same box with the angle wrapped into `(-pi/2, pi/2]`.
    pub fn normalized(self) -> Self {
        Self {
            theta: normalize_angle(self.theta),
            ..self
        }
    }

    /// Long-edge form: `w >= h`, angle in `(-pi/2, pi/2]`. Squares keep their angle.
    pub fn canonical(self) -> Self {
        let b = if self.w < self.h {
            Self {
                w: self.h,
                h: self.w,
                theta: self.theta + FRAC_PI_2,
                ..self
            }
        } else {
            self
        };
        b.normalized()
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Corners in counter-clockwise order, starting from the local `(-w/2, -h/2)` corner.
    pub fn to_polygon(&self) -> Quad {
        let (s, c) = self.theta.sin_cos();
        let hw = 0.5 * self.w;
        let hh = 0.5 * self.h;
        let local = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)];
        Quad(local.map(|(lx, ly)| Point::new(self.x + lx * c - ly * s, self.y + lx * s + ly * c)))
    }

    /// Axis-aligned bounds as `(min, max)`.
    pub fn aabb(&self) -> (Point, Point) {
        let (s, c) = self.theta.sin_cos();
        let ex = 0.5 * (self.w * c.abs() + self.h * s.abs());
        let ey = 0.5 * (self.w * s.abs() + self.h * c.abs());
        (
            Point::new(self.x - ex, self.y - ey),
            Point::new(self.x + ex, self.y + ey),
        )
    }

    /// Point-in-rectangle test in the box's local frame (boundary inclusive).
    pub fn contains(&self, p: Point) -> bool {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        let lx = dx * c + dy * s;
        let ly = -dx * s + dy * c;
        lx.abs() <= 0.5 * self.w && ly.abs() <= 0.5 * self.h
    }

    /// Applies a rotation by `angle` about the origin followed by a translation.
    pub fn rigid_transform(&self, angle: f64, tx: f64, ty: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            x: self.x * c - self.y * s + tx,
            y: self.x * s + self.y * c + ty,
            theta: self.theta + angle,
            ..*self
        }
        .normalized()
    }

    fn key(&self) -> [f64; 5] {
        [self.x, self.y, self.w, self.h, self.theta]
    }
}

/// Free-function form of [`OrientedBox::to_polygon`].
pub fn to_polygon(b: &OrientedBox) -> Quad {
    b.to_polygon()
}

fn aabb_disjoint(a: &OrientedBox, b: &OrientedBox) -> bool {
    let (amin, amax) = a.aabb();
    let (bmin, bmax) = b.aabb();
    amax.x < bmin.x || bmax.x < amin.x || amax.y < bmin.y || bmax.y < amin.y
}

/// Area of the intersection of two rotated rectangles.
///
/// The result does not depend on argument order: the pair is put into a fixed
/// order before clipping, so `f(a, b)` and `f(b, a)` are bitwise equal.
pub fn intersection_area(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if aabb_disjoint(a, b) {
        return 0.0;
    }
    let (a, b) = order_pair(a, b);
    // Work relative to a's center to keep cross products well conditioned.
    let origin = a.center();
    let pa = a.to_polygon().0.map(|p| p - origin);
    let pb = b.to_polygon().0.map(|p| p - origin);
    let scale = a.w.max(a.h).max(b.w).max(b.h);
    let area = clip::clipped_area(&pa, &pb, scale);
    area.min(a.area()).min(b.area())
}

fn order_pair<'a>(a: &'a OrientedBox, b: &'a OrientedBox) -> (&'a OrientedBox, &'a OrientedBox) {
    let ka = a.key();
    let kb = b.key();
    for (x, y) in ka.iter().zip(kb.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return (a, b),
            std::cmp::Ordering::Greater => return (b, a),
            std::cmp::Ordering::Equal => {}
        }
    }
    (a, b)
}

/// Intersection-over-union of two rotated rectangles, in `[0, 1]`.
pub fn rotated_iou(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if a.key() == b.key() {
        return 1.0;
    }
    let inter = intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn same_corner_set(q: &Quad, expected: &[(f64, f64)], tol: f64) -> bool {
        expected.iter().all(|&(ex, ey)| {
            q.0.iter()
                .any(|p| (p.x - ex).abs() <= tol && (p.y - ey).abs() <= tol)
        })
    }

    #[test]
    fn polygon_axis_aligned() {
        let b = OrientedBox::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        let q = b.to_polygon();
        assert!(same_corner_set(
            &q,
            &[(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)],
            1e-12
        ));
        assert!(q.area() > 0.0);
    }

    #[test]
    fn polygon_quarter_turn_square() {
        let b = OrientedBox::new(0.0, 0.0, 2.0, 2.0, FRAC_PI_2).unwrap();
        assert!(same_corner_set(
            &b.to_polygon(),
            &[(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)],
            1e-12
        ));
    }

    #[test]
    fn polygon_diamond() {
        let b = OrientedBox::new(1.0, 1.0, SQRT_2, SQRT_2, FRAC_PI_4).unwrap();
        let q = b.to_polygon();
        assert!(same_corner_set(
            &q,
            &[(1.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 1.0)],
            1e-12
        ));
        assert!((q.area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn angle_normalization() {
        assert_eq!(normalize_angle(FRAC_PI_2), FRAC_PI_2);
        assert!((normalize_angle(-FRAC_PI_2) - FRAC_PI_2).abs() < 1e-15);
        assert!((normalize_angle(3.0 * PI / 4.0) + FRAC_PI_4).abs() < 1e-15);
        assert_eq!(normalize_angle(0.3), 0.3);
        assert!((normalize_angle(1000.0 * PI + 0.25) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn canonical_swaps_short_edge() {
        let b = OrientedBox::new(0.0, 0.0, 2.0, 4.0, 0.0)
            .unwrap()
            .canonical();
        assert_eq!((b.w, b.h), (4.0, 2.0));
        assert!((b.theta - FRAC_PI_2).abs() < 1e-15);
        let sq = OrientedBox::new(0.0, 0.0, 2.0, 2.0, 0.3)
            .unwrap()
            .canonical();
        assert_eq!(sq.theta, 0.3);
    }

    #[test]
    fn rejects_invalid() {
        assert!(OrientedBox::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(OrientedBox::new(0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(OrientedBox::new(f64::NAN, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(OrientedBox::new(0.0, 0.0, 1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = OrientedBox::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        assert_eq!(rotated_iou(&a, &a), 1.0);
        let b = OrientedBox::new(1.0, 0.0, 2.0, 2.0, 0.0).unwrap();
        assert!((rotated_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);

        let u = OrientedBox::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let r = OrientedBox::new(0.0, 0.0, 1.0, 1.0, FRAC_PI_4).unwrap();
        let octagon = 2.0 * (SQRT_2 - 1.0);
        assert!((intersection_area(&u, &r) - octagon).abs() < 1e-12);
        assert!((rotated_iou(&u, &r) - octagon / (2.0 - octagon)).abs() < 1e-12);
        assert!((rotated_iou(&u, &r) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn shared_edge_is_zero() {
        let a = OrientedBox::new(0.5, 0.5, 1.0, 1.0, 0.0).unwrap();
        let b = OrientedBox::new(1.5, 0.5, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(intersection_area(&a, &b), 0.0);
        assert_eq!(rotated_iou(&a, &b), 0.0);
        // Corner contact.
        let c = OrientedBox::new(1.5, 1.5, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(rotated_iou(&a, &c), 0.0);
    }

    #[test]
    fn containment() {
        let big = OrientedBox::new(0.0, 0.0, 10.0, 4.0, 0.2).unwrap();
        let small = OrientedBox::new(0.5, 0.2, 2.0, 1.0, 0.2).unwrap();
        assert!((intersection_area(&big, &small) - 2.0).abs() < 1e-9);
        assert!((rotated_iou(&big, &small) - 2.0 / 40.0).abs() < 1e-9);
    }

    #[test]
    fn contains_matches_polygon() {
        let b = OrientedBox::new(3.0, -1.0, 4.0, 1.0, 0.7).unwrap();
        assert!(b.contains(b.center()));
        for p in b.to_polygon().0 {
            // Nudge corners inward.
            let inside = p + (b.center() - p).scale(1e-9);
            assert!(b.contains(inside));
            let outside = p + (p - b.center()).scale(1e-6);
            assert!(!b.contains(outside));
        }
    }
}
