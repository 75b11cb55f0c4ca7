//! Convex hull and minimum-area enclosing rectangle.

use super::{polygon_area, OrientedBox, Point};
use crate::error::{Error, Result};

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// collinear vertices.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| (a - o).cross(b - o);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Smallest-area rotated rectangle enclosing `points`, in canonical form.
///
/// Some optimal rectangle has a side flush with a hull edge, so it is enough to
/// try each hull edge direction once. Ties keep the first edge in hull order.
pub fn min_area_rect(points: &[Point]) -> Result<OrientedBox> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::DegenerateInput("non-finite point".into()));
    }
    let hull = convex_hull(points);
    let extent = hull.iter().fold(0.0f64, |m, p| {
        m.max((p.x - hull[0].x).abs()).max((p.y - hull[0].y).abs())
    });
    if hull.len() < 3 || polygon_area(&hull) <= 1e-12 * extent * extent {
        return Err(Error::DegenerateInput("points are collinear".into()));
    }

    let mut best: Option<(f64, OrientedBox)> = None;
    for (i, &origin) in hull.iter().enumerate() {
        let next = hull[(i + 1) % hull.len()];
        let d = next - origin;
        let len = d.dot(d).sqrt();
        let u = d.scale(1.0 / len);
        let v = Point::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for p in &hull {
            let r = *p - origin;
            let pu = r.dot(u);
            let pv = r.dot(v);
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let w = umax - umin;
        let h = vmax - vmin;
        let area = w * h;
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let c = origin + u.scale(0.5 * (umin + umax)) + v.scale(0.5 * (vmin + vmax));
            let b = OrientedBox {
                x: c.x,
                y: c.y,
                w,
                h,
                theta: u.y.atan2(u.x),
            };
            best = Some((area, b));
        }
    }
    let (_, b) = best.expect("hull has at least three edges");
    b.validate()?;
    Ok(b.canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn axis_aligned_rectangle() {
        let b = min_area_rect(&pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (0.0, 2.0)])).unwrap();
        assert_eq!((b.x, b.y, b.w, b.h, b.theta), (2.0, 1.0, 4.0, 2.0, 0.0));
    }

    #[test]
    fn diamond() {
        let b = min_area_rect(&pts(&[(1.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 1.0)])).unwrap();
        assert!((b.x - 1.0).abs() < 1e-12 && (b.y - 1.0).abs() < 1e-12);
        assert!((b.w - SQRT_2).abs() < 1e-12 && (b.h - SQRT_2).abs() < 1e-12);
        // A square at 45 degrees: pi/4 and -pi/4 describe the same rectangle.
        assert!((b.theta.abs() - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn collinear_is_degenerate() {
        let err = min_area_rect(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
        assert!(min_area_rect(&pts(&[(0.0, 0.0), (1.0, 1.0)])).is_err());
        assert!(min_area_rect(&pts(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)])).is_err());
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let h = convex_hull(&pts(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (0.0, 2.0),
            (1.0, 1.0),
        ]));
        assert_eq!(h.len(), 4);
        assert!(polygon_area(&h) > 0.0);
    }

    #[test]
    fn irregular_points() {
        let b = min_area_rect(&pts(&[
            (0.0, 0.0),
            (3.0, 0.5),
            (3.5, 2.0),
            (0.2, 1.7),
            (1.5, 1.0),
        ]))
        .unwrap();
        for p in pts(&[(0.0, 0.0), (3.0, 0.5), (3.5, 2.0), (0.2, 1.7)]) {
            let grown = OrientedBox {
                w: b.w + 1e-9,
                h: b.h + 1e-9,
                ..b
            };
            assert!(grown.contains(p));
        }
        assert!(b.w >= b.h);
    }
}
