//! Box <-> regression-offset encoding.
//!
//! Offsets are measured relative to an anchor: center shifts normalized by the
//! anchor size, log size ratios, and the tangent of the angle residual. The
//! residual is wrapped into `(-pi/2, pi/2)` before taking the tangent; targets
//! whose residual lands within [`ANGLE_EPS`] of `±pi/2` are rejected rather than
//! clamped.

use std::f64::consts::FRAC_PI_2;
use std::ops::Sub;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, OrientedBox};

/// Minimum distance (radians) between an angle residual and `±pi/2`.
pub const ANGLE_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Offsets {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
    pub ttheta: f64,
}

impl Offsets {
    pub const ZERO: Offsets = Offsets {
        tx: 0.0,
        ty: 0.0,
        tw: 0.0,
        th: 0.0,
        ttheta: 0.0,
    };

    pub fn new(tx: f64, ty: f64, tw: f64, th: f64, ttheta: f64) -> Self {
        Self {
            tx,
            ty,
            tw,
            th,
            ttheta,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.tx, self.ty, self.tw, self.th, self.ttheta]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }
}

impl Sub for Offsets {
    type Output = Offsets;

    fn sub(self, o: Offsets) -> Offsets {
        Offsets::new(
            self.tx - o.tx,
            self.ty - o.ty,
            self.tw - o.tw,
            self.th - o.th,
            self.ttheta - o.ttheta,
        )
    }
}

/// Wraps an angle residual into `(-pi/2, pi/2]`.
pub fn angle_residual(theta: f64, theta_anchor: f64) -> f64 {
    normalize_angle(theta - theta_anchor)
}

pub fn encode(target: &OrientedBox, anchor: &OrientedBox) -> Result<Offsets> {
    let residual = angle_residual(target.theta, anchor.theta);
    if FRAC_PI_2 - residual.abs() < ANGLE_EPS {
        return Err(Error::AngleSingularity {
            residual,
            epsilon: ANGLE_EPS,
        });
    }
    Ok(Offsets {
        tx: (target.x - anchor.x) / anchor.w,
        ty: (target.y - anchor.y) / anchor.h,
        tw: (target.w / anchor.w).ln(),
        th: (target.h / anchor.h).ln(),
        ttheta: residual.tan(),
    })
}

/// Inverse of [`encode`]. The angle of the result is wrapped into
/// `(-pi/2, pi/2]`; width and height are not reordered, so zero offsets give
/// back the anchor itself.
pub fn decode(offsets: &Offsets, anchor: &OrientedBox) -> OrientedBox {
    OrientedBox {
        x: offsets.tx * anchor.w + anchor.x,
        y: offsets.ty * anchor.h + anchor.y,
        w: anchor.w * offsets.tw.exp(),
        h: anchor.h * offsets.th.exp(),
        theta: normalize_angle(anchor.theta + offsets.ttheta.atan()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn bx(x: f64, y: f64, w: f64, h: f64, t: f64) -> OrientedBox {
        OrientedBox::new(x, y, w, h, t).unwrap()
    }

    #[test]
    fn identity_encodes_to_zero() {
        let a = bx(3.0, -2.0, 5.0, 1.5, 0.4);
        assert_eq!(encode(&a, &a).unwrap(), Offsets::ZERO);
    }

    #[test]
    fn shift_example() {
        let o = encode(
            &bx(12.0, 11.0, 4.0, 2.0, 0.0),
            &bx(10.0, 10.0, 4.0, 2.0, 0.0),
        )
        .unwrap();
        assert_eq!(o, Offsets::new(0.5, 0.5, 0.0, 0.0, 0.0));
    }

    #[test]
    fn angle_example() {
        let o = encode(
            &bx(0.0, 0.0, 2.0, 2.0, FRAC_PI_4),
            &bx(0.0, 0.0, 2.0, 2.0, 0.0),
        )
        .unwrap();
        assert_eq!((o.tx, o.ty, o.tw, o.th), (0.0, 0.0, 0.0, 0.0));
        assert!((o.ttheta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_residual() {
        let anchor = bx(0.0, 0.0, 4.0, 2.0, 0.0);
        let t = bx(0.0, 0.0, 4.0, 2.0, FRAC_PI_2 - 5e-5);
        assert!(matches!(
            encode(&t, &anchor),
            Err(Error::AngleSingularity { .. })
        ));
        let t = bx(0.0, 0.0, 4.0, 2.0, FRAC_PI_2);
        assert!(encode(&t, &anchor).is_err());
        let ok = bx(0.0, 0.0, 4.0, 2.0, FRAC_PI_2 - 2e-4);
        assert!(encode(&ok, &anchor).is_ok());
    }

    #[test]
    fn residual_wraps_across_pi() {
        // 80 degrees vs -80 degrees differ by 20 degrees as rectangles.
        let a = bx(0.0, 0.0, 4.0, 2.0, -80f64.to_radians());
        let t = bx(0.0, 0.0, 4.0, 2.0, 80f64.to_radians());
        let o = encode(&t, &a).unwrap();
        assert!((o.ttheta - (-20f64).to_radians().tan()).abs() < 1e-12);
    }

    #[test]
    fn decode_examples() {
        let anchor = bx(10.0, 10.0, 4.0, 2.0, 0.0);
        assert_eq!(decode(&Offsets::ZERO, &anchor), anchor);
        let tall = bx(1.0, 2.0, 1.0, 3.0, 0.0);
        assert_eq!(decode(&Offsets::ZERO, &tall), tall);

        let d = decode(&Offsets::new(0.5, 0.5, 0.0, 0.0, 0.0), &anchor);
        assert_eq!(d, bx(12.0, 11.0, 4.0, 2.0, 0.0));

        let unit = bx(0.0, 0.0, 1.0, 1.0, 0.0);
        let d = decode(&Offsets::new(0.0, 0.0, 2f64.ln(), 2f64.ln(), 0.0), &unit);
        assert!((d.w - 2.0).abs() < 1e-12 && (d.h - 2.0).abs() < 1e-12);
        assert_eq!((d.x, d.y, d.theta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn translation_equivariance() {
        let a = bx(10.0, 20.0, 6.0, 3.0, 0.0);
        let t = bx(13.0, 18.5, 8.0, 2.0, 0.6);
        let o1 = encode(&t, &a).unwrap();
        let shift = |b: OrientedBox| OrientedBox {
            x: b.x + 123.25,
            y: b.y - 77.5,
            ..b
        };
        let o2 = encode(&shift(t), &shift(a)).unwrap();
        assert!((o1.tx - o2.tx).abs() <= 1e-12);
        assert!((o1.ty - o2.ty).abs() <= 1e-12);
        assert_eq!((o1.tw, o1.th, o1.ttheta), (o2.tw, o2.th, o2.ttheta));
    }
}
