//! Convex polygon clipping (Sutherland-Hodgman) and shoelace areas.

use super::{Point, Quad};

/// Relative tolerance for the half-plane test, in units of `scale^2`.
const SIDE_EPS: f64 = 1e-12;

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, p) in poly.iter().enumerate() {
        let q = poly[(i + 1) % poly.len()];
        acc += p.cross(q);
    }
    0.5 * acc
}

/// Clips `subject` against the half-plane to the left of `start -> end`.
/// Vertices within `eps` of the line count as inside.
fn clip_half_plane(subject: &[Point], start: Point, end: Point, eps: f64, out: &mut Vec<Point>) {
    out.clear();
    let n = subject.len();
    if n == 0 {
        return;
    }
    let edge = end - start;
    let side = |p: Point| edge.cross(p - start);
    let mut prev = subject[n - 1];
    let mut prev_d = side(prev);
    for &cur in subject {
        let cur_d = side(cur);
        let cur_in = cur_d >= -eps;
        let prev_in = prev_d >= -eps;
        if cur_in {
            if !prev_in {
                out.push(crossing(prev, cur, prev_d, cur_d));
            }
            out.push(cur);
        } else if prev_in {
            out.push(crossing(prev, cur, prev_d, cur_d));
        }
        prev = cur;
        prev_d = cur_d;
    }
}

#[inline]
fn crossing(s: Point, e: Point, ds: f64, de: f64) -> Point {
    let t = ds / (ds - de);
    s + (e - s).scale(t)
}

/// Area of `subject ∩ clip` for convex CCW polygons whose size is on the order of
/// `scale`. Overlaps thinner than the tolerance, including shared edges and
/// corners, have area zero.
pub(crate) fn clipped_area(subject: &[Point], clip: &[Point], scale: f64) -> f64 {
    let eps = SIDE_EPS * scale * scale;
    let mut cur: Vec<Point> = subject.to_vec();
    let mut next = Vec::with_capacity(subject.len() + clip.len());
    for (i, &start) in clip.iter().enumerate() {
        let end = clip[(i + 1) % clip.len()];
        clip_half_plane(&cur, start, end, eps, &mut next);
        std::mem::swap(&mut cur, &mut next);
        if cur.len() < 3 {
            return 0.0;
        }
    }
    let area = polygon_area(&cur);
    if area <= eps {
        0.0
    } else {
        area
    }
}

/// Intersection area of two convex counter-clockwise polygons.
pub fn convex_intersection_area(a: &[Point], b: &[Point]) -> f64 {
    if a.len() < 3 || b.len() < 3 {
        return 0.0;
    }
    let origin = a[0];
    let (mut lo, mut hi) = (origin, origin);
    for p in a.iter().chain(b.iter()) {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let scale = (hi.x - lo.x).max(hi.y - lo.y);
    let pa: Vec<Point> = a.iter().map(|p| *p - origin).collect();
    let pb: Vec<Point> = b.iter().map(|p| *p - origin).collect();
    clipped_area(&pa, &pb, scale)
}

pub fn polygon_intersection_area(a: &Quad, b: &Quad) -> f64 {
    convex_intersection_area(&a.0, &b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::OrientedBox;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn unit_square(dx: f64, dy: f64) -> Quad {
        Quad([
            Point::new(dx, dy),
            Point::new(dx + 1.0, dy),
            Point::new(dx + 1.0, dy + 1.0),
            Point::new(dx, dy + 1.0),
        ])
    }

    #[test]
    fn self_intersection() {
        let q = unit_square(0.0, 0.0);
        assert!((polygon_intersection_area(&q, &q) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_edge() {
        let a = unit_square(0.0, 0.0);
        let b = unit_square(1.0, 0.0);
        assert_eq!(polygon_intersection_area(&a, &b), 0.0);
    }

    #[test]
    fn octagon() {
        let a = OrientedBox::new(0.5, 0.5, 1.0, 1.0, 0.0)
            .unwrap()
            .to_polygon();
        let b = OrientedBox::new(0.5, 0.5, 1.0, 1.0, FRAC_PI_4)
            .unwrap()
            .to_polygon();
        let expected = 2.0 * (SQRT_2 - 1.0);
        assert!((polygon_intersection_area(&a, &b) - expected).abs() < 1e-12);
        assert!((polygon_intersection_area(&b, &a) - expected).abs() < 1e-12);
    }

    #[test]
    fn disjoint() {
        let a = unit_square(0.0, 0.0);
        let b = unit_square(5.0, 5.0);
        assert_eq!(polygon_intersection_area(&a, &b), 0.0);
    }

    #[test]
    fn shoelace_orientation() {
        let q = unit_square(2.0, 3.0);
        assert!((polygon_area(&q.0) - 1.0).abs() < 1e-15);
        let mut rev = q.0;
        rev.reverse();
        assert!((polygon_area(&rev) + 1.0).abs() < 1e-15);
        assert_eq!(polygon_area(&q.0[..2]), 0.0);
    }
}
