//! Small fixed-size linear algebra for planar maps.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix [[a, b], [c, d]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(self) -> f64 {
        self.a + self.d
    }

    pub fn mul_vec(self, v: Point) -> Point {
        Point::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Eigenvalues as roots of g^2 - tr g + det. Real pair returned in
    /// decreasing order of modulus; complex pair returned as None.
    pub fn real_eigenvalues(self) -> Option<(f64, f64)> {
        let tr = self.trace();
        let disc = tr * tr - 4.0 * self.det();
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // stable quadratic formula
        let g1 = if tr >= 0.0 { (tr + s) / 2.0 } else { (tr - s) / 2.0 };
        let g2 = if g1 != 0.0 { self.det() / g1 } else { (tr - s) / 2.0 };
        if g1.abs() >= g2.abs() {
            Some((g1, g2))
        } else {
            Some((g2, g1))
        }
    }

    /// An eigenvector for eigenvalue `g`, unit length, sign fixed so the
    /// first nonzero component is positive.
    pub fn eigenvector(self, g: f64) -> Point {
        // (A - gI) v = 0; pick the better-conditioned row.
        let r1 = Point::new(self.a - g, self.b);
        let r2 = Point::new(self.c, self.d - g);
        let v = if r1.norm() >= r2.norm() {
            Point::new(-r1.y, r1.x)
        } else {
            Point::new(-r2.y, r2.x)
        };
        let v = v.normalized();
        normalize_sign(v)
    }

    pub fn spectral_radius(self) -> f64 {
        match self.real_eigenvalues() {
            Some((g1, _)) => g1.abs(),
            None => self.det().abs().sqrt(),
        }
    }
}

pub fn normalize_sign(v: Point) -> Point {
    if v.x != 0.0 {
        if v.x > 0.0 {
            v
        } else {
            -v
        }
    } else if v.y > 0.0 {
        v
    } else {
        -v
    }
}

/// Proper crossing of open segments [p1,p2] and [q1,q2].
/// Returns (point, t, u, angle) with the crossing angle in (0, pi/2].
pub fn segment_crossing(p1: Point, p2: Point, q1: Point, q2: Point) -> Option<(Point, f64, f64, f64)> {
    let r = p2 - p1;
    let s = q2 - q1;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let t = (q1 - p1).cross(s) / denom;
    let u = (q1 - p1).cross(r) / denom;
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&u) {
        return None;
    }
    let pt = p1 + r * t;
    let cosang = (r.dot(s) / (r.norm() * s.norm())).clamp(-1.0, 1.0);
    let mut angle = cosang.acos();
    if angle > std::f64::consts::FRAC_PI_2 {
        angle = std::f64::consts::PI - angle;
    }
    Some((pt, t, u, angle))
}

/// Closest pair of points between two segments.
pub fn segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> (f64, Point, Point) {
    if let Some((pt, _, _, _)) = segment_crossing(p1, p2, q1, q2) {
        return (0.0, pt, pt);
    }
    let mut best = (f64::INFINITY, p1, q1);
    let mut consider = |a: Point, b: Point| {
        let d = a.dist(b);
        if d < best.0 {
            best = (d, a, b);
        }
    };
    let cp = |a: Point, s1: Point, s2: Point| -> Point {
        let d = s2 - s1;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return s1;
        }
        let t = ((a - s1).dot(d) / len2).clamp(0.0, 1.0);
        s1 + d * t
    };
    consider(p1, cp(p1, q1, q2));
    consider(p2, cp(p2, q1, q2));
    consider(cp(q1, p1, p2), q1);
    consider(cp(q2, p1, p2), q2);
    (best.0, best.1, best.2)
}

/// Signed distance of `p` from the line through `origin` with direction
/// `dir`; positive on the side pointed to by `positive_side`.
pub fn signed_line_distance(p: Point, origin: Point, dir: Point, positive_side: Point) -> f64 {
    let n = Point::new(-dir.y, dir.x).normalized();
    let n = if n.dot(positive_side) >= 0.0 { n } else { -n };
    n.dot(p - origin)
}
