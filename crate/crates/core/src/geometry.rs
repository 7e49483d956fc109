//! Points, affine matrices and axis-aligned boxes in PostScript points.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// A 2×3 affine matrix in PostScript order `[a b c d e f]`, mapping
/// `(x, y)` to `(a·x + c·y + e, b·x + d·y + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ctm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Default for Ctm {
    fn default() -> Self {
        Ctm::IDENTITY
    }
}

impl Ctm {
    pub const IDENTITY: Ctm = Ctm {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        e: 0.0,
        f: 0.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Ctm { a, b, c, d, e, f }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Ctm::new(1.0, 0.0, 0.0, 1.0, tx, ty)
    }

    pub fn scaling(sx: f64, sy: f64) -> Self {
        Ctm::new(sx, 0.0, 0.0, sy, 0.0, 0.0)
    }

    /// Counter-clockwise rotation by `deg` degrees.
    pub fn rotation(deg: f64) -> Self {
        let (s, c) = exact_sin_cos(deg);
        Ctm::new(c, s, -s, c, 0.0, 0.0)
    }

    pub fn apply(&self, p: Point) -> Point {
        Point {
            x: self.a * p.x + self.c * p.y + self.e,
            y: self.b * p.x + self.d * p.y + self.f,
        }
    }

    /// Applies only the linear part (no translation).
    pub fn apply_vector(&self, v: Point) -> Point {
        Point {
            x: self.a * v.x + self.c * v.y,
            y: self.b * v.x + self.d * v.y,
        }
    }

    /// Returns `self ∘ inner`: the matrix that applies `inner` first, then `self`.
    pub fn compose(&self, inner: &Ctm) -> Ctm {
        Ctm {
            a: self.a * inner.a + self.c * inner.b,
            b: self.b * inner.a + self.d * inner.b,
            c: self.a * inner.c + self.c * inner.d,
            d: self.b * inner.c + self.d * inner.d,
            e: self.a * inner.e + self.c * inner.f + self.e,
            f: self.b * inner.e + self.d * inner.f + self.f,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn invert(&self) -> Option<Ctm> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let a = self.d / det;
        let b = -self.b / det;
        let c = -self.c / det;
        let d = self.a / det;
        Some(Ctm {
            a,
            b,
            c,
            d,
            e: -(a * self.e + c * self.f),
            f: -(b * self.e + d * self.f),
        })
    }

    /// Angle of the transformed x-axis, in degrees within `[0, 360)`.
    pub fn slope_deg(&self) -> f64 {
        normalize_deg(self.b.atan2(self.a).to_degrees())
    }

    /// Length of the transformed unit x-vector.
    pub fn x_scale(&self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }
}

impl fmt::Display for Ctm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{} {} {} {} {} {}]",
            self.a, self.b, self.c, self.d, self.e, self.f
        )
    }
}

pub fn ctm_apply(m: &Ctm, p: Point) -> Point {
    m.apply(p)
}

/// Maps any angle in degrees into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid rounds up to 360 for tiny negative inputs
    if r >= 360.0 || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub(crate) fn exact_sin_cos(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        deg.to_radians().sin_cos()
    }
}

/// Axis-aligned box with `llx ≤ urx` and `lly ≤ ury`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub llx: f64,
    pub lly: f64,
    pub urx: f64,
    pub ury: f64,
}

impl BBox {
    /// Returns `None` when the corners are inverted or not finite.
    pub fn new(llx: f64, lly: f64, urx: f64, ury: f64) -> Option<Self> {
        let ok = [llx, lly, urx, ury].iter().all(|v| v.is_finite()) && llx <= urx && lly <= ury;
        ok.then_some(BBox { llx, lly, urx, ury })
    }

    /// Smallest box containing every point; `None` for an empty iterator.
    pub fn hull<I: IntoIterator<Item = Point>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BBox {
            llx: first.x,
            lly: first.y,
            urx: first.x,
            ury: first.y,
        };
        for p in it {
            b.llx = b.llx.min(p.x);
            b.lly = b.lly.min(p.y);
            b.urx = b.urx.max(p.x);
            b.ury = b.ury.max(p.y);
        }
        Some(b)
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            llx: self.llx.min(other.llx),
            lly: self.lly.min(other.lly),
            urx: self.urx.max(other.urx),
            ury: self.ury.max(other.ury),
        }
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        self.llx <= other.llx && self.lly <= other.lly && self.urx >= other.urx && self.ury >= other.ury
    }

    pub fn width(&self) -> f64 {
        self.urx - self.llx
    }

    pub fn height(&self) -> f64 {
        self.ury - self.lly
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.llx, self.lly),
            Point::new(self.urx, self.lly),
            Point::new(self.urx, self.ury),
            Point::new(self.llx, self.ury),
        ]
    }

    /// Smallest integer box enclosing this one, as written in `%%BoundingBox`.
    pub fn rounded_out(&self) -> BBox {
        BBox {
            llx: self.llx.floor(),
            lly: self.lly.floor(),
            urx: self.urx.ceil(),
            ury: self.ury.ceil(),
        }
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.llx, self.lly, self.urx, self.ury)
    }
}
