//! Axis-aligned bounding boxes in continuous pixel coordinates (top-left
//! origin), including the three-way IoU used by the consistency reward.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `(x1, y1)`–`(x2, y2)` with `x1 <= x2`, `y1 <= y2`.
///
/// Serializes as a 4-element array `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    /// Builds a box, rejecting negative extents and non-finite coordinates.
    /// Zero-area boxes are allowed.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let finite = x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite();
        if !finite || x1 > x2 || y1 > y2 {
            return Err(Error::InvalidBox { x1, y1, x2, y2 });
        }
        Ok(BBox { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Overlap rectangle, or `None` when the overlap has zero or negative
    /// extent along either axis.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let x1 = self.x1.max(other.x1);
        let y1 = self.y1.max(other.y1);
        let x2 = self.x2.min(other.x2);
        let y2 = self.y2.min(other.y2);
        if x2 > x1 && y2 > y1 {
            Some(BBox { x1, y1, x2, y2 })
        } else {
            None
        }
    }

    /// Multiplies x coordinates by `sx` and y coordinates by `sy`.
    pub fn scale(&self, sx: f64, sy: f64) -> Result<BBox> {
        if !(sx > 0.0 && sy > 0.0) || !sx.is_finite() || !sy.is_finite() {
            return Err(Error::NonPositiveScale { sx, sy });
        }
        Ok(BBox {
            x1: self.x1 * sx,
            y1: self.y1 * sy,
            x2: self.x2 * sx,
            y2: self.y2 * sy,
        })
    }

    /// Clamps all corners into `[0, width] x [0, height]`.
    pub fn clamp_to(&self, width: f64, height: f64) -> BBox {
        BBox {
            x1: self.x1.clamp(0.0, width),
            y1: self.y1.clamp(0.0, height),
            x2: self.x2.clamp(0.0, width),
            y2: self.y2.clamp(0.0, height),
        }
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 4]>::deserialize(deserializer)?;
        BBox::try_from(v).map_err(serde::de::Error::custom)
    }
}

pub fn area(b: &BBox) -> f64 {
    b.area()
}

pub fn intersect(a: &BBox, b: &BBox) -> Option<BBox> {
    a.intersect(b)
}

fn overlap_area(a: &BBox, b: &BBox) -> f64 {
    a.intersect(b).map_or(0.0, |r| r.area())
}

/// Pairwise intersection-over-union; 0 when the union has zero area.
pub fn iou2(a: &BBox, b: &BBox) -> f64 {
    let inter = overlap_area(a, b);
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Three-way IoU: `|A∩B∩C| / |A∪B∪C|` with the union taken by
/// inclusion-exclusion. 0 when the union has zero area.
pub fn iou3(a: &BBox, b: &BBox, c: &BBox) -> f64 {
    let ab = a.intersect(b);
    let triple = ab.and_then(|r| r.intersect(c)).map_or(0.0, |r| r.area());
    let union = a.area() + b.area() + c.area()
        - ab.map_or(0.0, |r| r.area())
        - overlap_area(a, c)
        - overlap_area(b, c)
        + triple;
    if union > 0.0 {
        (triple / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn scale_bbox(b: &BBox, sx: f64, sy: f64) -> Result<BBox> {
    b.scale(sx, sy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    /// Counts unit cells covered by each region on an integer grid.
    fn raster_counts(boxes: &[BBox; 3]) -> (u64, u64) {
        let (mut triple, mut union) = (0, 0);
        for y in 0..64 {
            for x in 0..64 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                let hits = boxes
                    .iter()
                    .filter(|r| cx > r.x1 && cx < r.x2 && cy > r.y1 && cy < r.y2)
                    .count();
                if hits == 3 {
                    triple += 1;
                }
                if hits > 0 {
                    union += 1;
                }
            }
        }
        (triple, union)
    }

    #[test]
    fn area_examples() {
        assert_eq!(area(&b(0.0, 0.0, 10.0, 10.0)), 100.0);
        assert_eq!(area(&b(5.0, 5.0, 5.0, 9.0)), 0.0);
        assert_eq!(area(&b(0.0, 0.0, 3.0, 7.0)), 21.0);
    }

    #[test]
    fn rejects_negative_extent() {
        assert!(BBox::new(5.0, 0.0, 1.0, 1.0).is_err());
        assert!(BBox::new(0.0, 2.0, 1.0, 1.0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn intersect_examples() {
        let r = intersect(&b(0.0, 0.0, 10.0, 10.0), &b(5.0, 5.0, 15.0, 15.0));
        assert_eq!(r, Some(b(5.0, 5.0, 10.0, 10.0)));
        assert_eq!(
            intersect(&b(0.0, 0.0, 1.0, 1.0), &b(2.0, 2.0, 3.0, 3.0)),
            None
        );
        assert_eq!(
            intersect(&b(0.0, 0.0, 4.0, 4.0), &b(0.0, 0.0, 4.0, 4.0)),
            Some(b(0.0, 0.0, 4.0, 4.0))
        );
        // touching edges have zero-width overlap
        assert_eq!(
            intersect(&b(0.0, 0.0, 1.0, 1.0), &b(1.0, 0.0, 2.0, 1.0)),
            None
        );
    }

    #[test]
    fn iou3_examples() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou3(&a, &a, &a), 1.0);
        let (p, q, r) = (
            b(0.0, 0.0, 1.0, 1.0),
            b(2.0, 2.0, 3.0, 3.0),
            b(4.0, 4.0, 5.0, 5.0),
        );
        assert_eq!(iou3(&p, &q, &r), 0.0);

        let boxes = [a, b(2.0, 2.0, 12.0, 12.0), b(4.0, 4.0, 14.0, 14.0)];
        let (triple, union) = raster_counts(&boxes);
        assert_eq!((triple, union), (36, 172));
        assert!((iou3(&boxes[0], &boxes[1], &boxes[2]) - 36.0 / 172.0).abs() < 1e-15);
    }

    #[test]
    fn iou2_examples() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou2(&a, &a), 1.0);
        assert_eq!(iou2(&a, &b(20.0, 20.0, 30.0, 30.0)), 0.0);
        assert_eq!(iou2(&a, &b(0.0, 0.0, 5.0, 10.0)), 0.5);
    }

    #[test]
    fn degenerate_union_is_zero_not_nan() {
        let p = b(3.0, 3.0, 3.0, 3.0);
        assert_eq!(iou2(&p, &p), 0.0);
        assert_eq!(iou3(&p, &p, &p), 0.0);
    }

    #[test]
    fn scale_examples() {
        let s = scale_bbox(&b(10.0, 20.0, 110.0, 220.0), 0.5, 0.5).unwrap();
        assert_eq!(s, b(5.0, 10.0, 55.0, 110.0));
        let x = b(1.5, 2.0, 7.25, 9.0);
        assert_eq!(scale_bbox(&x, 1.0, 1.0).unwrap(), x);
        assert_eq!(
            scale_bbox(&b(0.0, 0.0, 3.0, 3.0), 2.0, 3.0).unwrap(),
            b(0.0, 0.0, 6.0, 9.0)
        );
        assert!(scale_bbox(&x, 0.0, 1.0).is_err());
        assert!(scale_bbox(&x, 1.0, -2.0).is_err());
    }

    #[test]
    fn serializes_as_array() {
        let x = b(1.0, 2.0, 3.0, 4.5);
        assert_eq!(serde_json::to_string(&x).unwrap(), "[1.0,2.0,3.0,4.5]");
        let back: BBox = serde_json::from_str("[1,2,3,4.5]").unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<BBox>("[3,0,1,1]").is_err());
    }

    fn int_box() -> impl Strategy<Value = BBox> {
        (0u32..=64, 0u32..=64, 0u32..=64, 0u32..=64).prop_map(|(a, c, bx, d)| {
            let (x1, x2) = (a.min(bx) as f64, a.max(bx) as f64);
            let (y1, y2) = (c.min(d) as f64, c.max(d) as f64);
            BBox::new(x1, y1, x2, y2).unwrap()
        })
    }

    proptest! {
        #[test]
        fn iou3_matches_rasterization(a in int_box(), bb in int_box(), c in int_box()) {
            let (triple, union) = raster_counts(&[a, bb, c]);
            let expect = if union == 0 { 0.0 } else { triple as f64 / union as f64 };
            prop_assert!((iou3(&a, &bb, &c) - expect).abs() <= 1e-12);
        }

        #[test]
        fn iou3_symmetric_and_bounded(a in int_box(), bb in int_box(), c in int_box()) {
            let v = iou3(&a, &bb, &c);
            for w in [iou3(&a, &c, &bb), iou3(&bb, &a, &c), iou3(&bb, &c, &a), iou3(&c, &a, &bb), iou3(&c, &bb, &a)] {
                prop_assert!((v - w).abs() <= 1e-12);
            }
            let bound = iou2(&a, &bb).min(iou2(&a, &c)).min(iou2(&bb, &c));
            prop_assert!(v <= bound + 1e-12);
            if a.area() > 0.0 {
                prop_assert_eq!(iou3(&a, &a, &a), 1.0);
            }
        }

        #[test]
        fn iou2_scale_invariant(a in int_box(), bb in int_box(), s in 0.01f64..50.0) {
            let sa = scale_bbox(&a, s, s).unwrap();
            let sb = scale_bbox(&bb, s, s).unwrap();
            prop_assert!((iou2(&sa, &sb) - iou2(&a, &bb)).abs() <= 1e-9);
        }
    }
}
