//! Piecewise-smooth continuous planar maps: pieces, regions, itineraries,
//! orbits and Jacobians along orbits.
//!
//! A map is a finite list of smooth pieces together with switching
//! functions whose signs carve the plane into closed regions. Points on a
//! switching curve belong to every adjacent region; deterministic orbits
//! use the lexicographically smallest label.

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Default absolute tolerance for continuity / closure checks.
pub const CONTINUITY_TOL: f64 = 1e-10;
/// Default escape radius for orbit iteration.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

/// Bivariate polynomial of total degree <= 3, stored as sparse monomials
/// (i, j, c) meaning c * x^i * y^j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly2(pub Vec<(u8, u8, f64)>);

impl Poly2 {
    pub fn constant(c: f64) -> Self {
        Poly2(vec![(0, 0, c)])
    }

    /// a*x + b*y + c
    pub fn linear(a: f64, b: f64, c: f64) -> Self {
        Poly2(vec![(1, 0, a), (0, 1, b), (0, 0, c)])
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.0
            .iter()
            .map(|&(i, j, c)| c * p.x.powi(i as i32) * p.y.powi(j as i32))
            .sum()
    }

    pub fn gradient(&self, p: Point) -> Point {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for &(i, j, c) in &self.0 {
            if i > 0 {
                gx += c * i as f64 * p.x.powi(i as i32 - 1) * p.y.powi(j as i32);
            }
            if j > 0 {
                gy += c * j as f64 * p.x.powi(i as i32) * p.y.powi(j as i32 - 1);
            }
        }
        Point::new(gx, gy)
    }

    pub fn max_degree(&self) -> u8 {
        self.0.iter().map(|&(i, j, _)| i + j).max().unwrap_or(0)
    }
}

/// One smooth piece of the map, with its evaluation and Jacobian rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PieceMap {
    Affine { m: Mat2, b: Point },
    Polynomial { fx: Poly2, fy: Poly2 },
}

impl PieceMap {
    pub fn eval(&self, p: Point) -> Point {
        match self {
            PieceMap::Affine { m, b } => m.mul_vec(p) + *b,
            PieceMap::Polynomial { fx, fy } => Point::new(fx.eval(p), fy.eval(p)),
        }
    }

    pub fn jacobian(&self, p: Point) -> Mat2 {
        match self {
            PieceMap::Affine { m, .. } => *m,
            PieceMap::Polynomial { fx, fy } => {
                let gx = fx.gradient(p);
                let gy = fy.gradient(p);
                Mat2::new(gx.x, gx.y, gy.x, gy.y)
            }
        }
    }

    pub fn as_affine(&self) -> Option<(Mat2, Point)> {
        match self {
            PieceMap::Affine { m, b } => Some((*m, *b)),
            PieceMap::Polynomial { .. } => None,
        }
    }
}

/// Which side of a switching function a region occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideOf {
    #[serde(rename = "le")]
    NonPositive,
    #[serde(rename = "ge")]
    NonNegative,
}

impl SideOf {
    /// > 0 inside, 0 on the boundary, < 0 outside.
    pub fn oriented(self, h: f64) -> f64 {
        match self {
            SideOf::NonPositive => -h,
            SideOf::NonNegative => h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub map: PieceMap,
    /// Closed-region membership: all listed switching functions must have
    /// the indicated sign.
    pub region: Vec<(usize, SideOf)>,
}

/// A continuous planar map made of finitely many smooth pieces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PwsMapSpec {
    pub pieces: Vec<Piece>,
    pub switching: Vec<Poly2>,
    /// Named parameter values, kept for provenance and serialisation.
    pub params: BTreeMap<String, f64>,
    pub kind: String,
}

/// A finite word over piece labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Itinerary(pub Vec<usize>);

impl Itinerary {
    /// Parse a word like "LLRL" (two-piece maps) or "0121" (general).
    pub fn from_word(word: &str) -> Result<Itinerary> {
        let mut labels = Vec::with_capacity(word.len());
        for ch in word.chars() {
            let label = match ch {
                'L' | 'l' => 0,
                'R' | 'r' => 1,
                d if d.is_ascii_digit() => d as usize - '0' as usize,
                _ => return Err(Error::Config(format!("bad itinerary symbol {ch:?}"))),
            };
            labels.push(label);
        }
        if labels.is_empty() {
            return Err(Error::Config("empty itinerary".into()));
        }
        Ok(Itinerary(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rotated(&self, by: usize) -> Itinerary {
        let n = self.0.len();
        Itinerary((0..n).map(|i| self.0[(i + by) % n]).collect())
    }
}

impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            match l {
                0 => write!(f, "L")?,
                1 => write!(f, "R")?,
                other => write!(f, "{other}")?,
            }
        }
        Ok(())
    }
}

/// A computed forward orbit.
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    /// points[0] is the initial condition; points has n+1 entries for a
    /// full n-step orbit (fewer on escape).
    pub points: Vec<Point>,
    pub realized_itinerary: Itinerary,
    /// Index at which the orbit left the escape radius, if it did.
    pub escaped: Option<usize>,
}

impl PwsMapSpec {
    /// All labels whose closed region contains `p`.
    pub fn labels_of(&self, p: Point) -> Vec<usize> {
        let mut out = Vec::new();
        for (idx, piece) in self.pieces.iter().enumerate() {
            if piece
                .region
                .iter()
                .all(|&(s, side)| side.oriented(self.switching[s].eval(p)) >= 0.0)
            {
                out.push(idx);
            }
        }
        out
    }

    /// Deterministic label: the lexicographically smallest containing region.
    pub fn tie_break_label(&self, p: Point) -> Result<usize> {
        self.labels_of(p)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Precondition(format!("point ({}, {}) carries no label", p.x, p.y)))
    }

    /// Signed distance of `p` into the closed region of `label`
    /// (positive inside, negative outside), normalised by the switching
    /// gradient so it approximates Euclidean distance.
    pub fn margin_of(&self, label: usize, p: Point) -> f64 {
        let piece = &self.pieces[label];
        piece
            .region
            .iter()
            .map(|&(s, side)| {
                let h = self.switching[s].eval(p);
                let g = self.switching[s].gradient(p).norm().max(f64::MIN_POSITIVE);
                side.oriented(h) / g
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval_piece(&self, label: usize, p: Point) -> Result<Point> {
        let piece = self
            .pieces
            .get(label)
            .ok_or(Error::BadLabel(label, self.pieces.len()))?;
        Ok(piece.map.eval(p))
    }

    pub fn jacobian_piece(&self, label: usize, p: Point) -> Result<Mat2> {
        let piece = self
            .pieces
            .get(label)
            .ok_or(Error::BadLabel(label, self.pieces.len()))?;
        Ok(piece.map.jacobian(p))
    }

    /// One step of the map with the tie-break region rule.
    pub fn evaluate(&self, p: Point) -> Result<(Point, usize)> {
        if !p.is_finite() {
            return Err(Error::InvalidPoint(p.x, p.y));
        }
        let label = self.tie_break_label(p)?;
        Ok((self.pieces[label].map.eval(p), label))
    }

    /// Composition along an itinerary, with the chain-rule Jacobian.
    /// Does not check that the orbit actually visits the listed regions.
    pub fn compose_along(&self, itin: &Itinerary, p: Point) -> Result<(Point, Mat2)> {
        let mut q = p;
        let mut jac = Mat2::identity();
        for &label in &itin.0 {
            let j = self.jacobian_piece(label, q)?;
            q = self.eval_piece(label, q)?;
            jac = j.mul(jac);
        }
        Ok((q, jac))
    }

    /// Forward orbit of n steps, stopping early on escape.
    pub fn iterate(&self, p: Point, n: usize, escape_radius: f64) -> Result<OrbitSegment> {
        if !p.is_finite() {
            return Err(Error::InvalidPoint(p.x, p.y));
        }
        let mut points = Vec::with_capacity(n + 1);
        let mut word = Vec::with_capacity(n);
        let mut cur = p;
        points.push(cur);
        for i in 0..n {
            if cur.norm() > escape_radius {
                return Ok(OrbitSegment {
                    points,
                    realized_itinerary: Itinerary(word),
                    escaped: Some(i),
                });
            }
            let (next, label) = self.evaluate(cur)?;
            word.push(label);
            points.push(next);
            cur = next;
        }
        Ok(OrbitSegment {
            points,
            realized_itinerary: Itinerary(word),
            escaped: None,
        })
    }

    /// Largest Lyapunov exponent by norm-growth averaging of tangent
    /// vectors with per-step renormalisation.
    pub fn lyapunov_exponent(
        &self,
        p: Point,
        n_transient: usize,
        n_sample: usize,
        escape_radius: f64,
    ) -> Result<f64> {
        let mut cur = p;
        for i in 0..n_transient {
            if cur.norm() > escape_radius {
                return Err(Error::Escape(escape_radius, i));
            }
            cur = self.evaluate(cur)?.0;
        }
        let mut v = Point::new(1.0, 0.0);
        let mut sum = 0.0;
        for i in 0..n_sample {
            if cur.norm() > escape_radius {
                return Err(Error::Escape(escape_radius, n_transient + i));
            }
            let label = self.tie_break_label(cur)?;
            let jac = self.pieces[label].map.jacobian(cur);
            v = jac.mul_vec(v);
            let n = v.norm();
            if n == 0.0 || !n.is_finite() {
                return Err(Error::Precondition("tangent vector degenerated".into()));
            }
            sum += n.ln();
            v = v * (1.0 / n);
            cur = self.pieces[label].map.eval(cur);
        }
        Ok(sum / n_sample as f64)
    }

    /// A random point on switching curve `s` found by bisecting a random
    /// chord of [-range, range]^2 with a sign change. Used by the
    /// continuity check.
    pub fn sample_boundary_point<R: Rng>(&self, s: usize, range: f64, rng: &mut R) -> Option<Point> {
        let h = &self.switching[s];
        for _ in 0..64 {
            let a = Point::new(rng.gen_range(-range..range), rng.gen_range(-range..range));
            let b = Point::new(rng.gen_range(-range..range), rng.gen_range(-range..range));
            let (ha, hb) = (h.eval(a), h.eval(b));
            if ha == 0.0 {
                return Some(a);
            }
            if ha * hb < 0.0 {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let mut flo = ha;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let fm = h.eval(a.lerp(b, mid));
                    if fm == 0.0 {
                        return Some(a.lerp(b, mid));
                    }
                    if flo * fm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                return Some(a.lerp(b, 0.5 * (lo + hi)));
            }
        }
        None
    }

    /// Worst continuity defect over `n` random boundary points: for every
    /// boundary point carrying several labels, all piece images must agree.
    pub fn continuity_defect<R: Rng>(&self, n: usize, range: f64, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.switching.len() {
            for _ in 0..n {
                if let Some(p) = self.sample_boundary_point(s, range, rng) {
                    let labels = self.labels_of(p);
                    let images: Vec<Point> =
                        labels.iter().map(|&l| self.pieces[l].map.eval(p)).collect();
                    for w in images.windows(2) {
                        worst = worst.max(w[0].dist(w[1]));
                    }
                }
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// JSON map-spec documents

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MapSpecJson {
    #[serde(rename = "bcnf")]
    Bcnf {
        #[serde(rename = "tau_L")]
        tau_l: f64,
        #[serde(rename = "delta_L")]
        delta_l: f64,
        #[serde(rename = "tau_R")]
        tau_r: f64,
        #[serde(rename = "delta_R")]
        delta_r: f64,
        mu: f64,
    },
    #[serde(rename = "polynomial")]
    Polynomial {
        pieces: Vec<PieceJson>,
        switching: Vec<Vec<(u8, u8, f64)>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceJson {
    pub fx: Vec<(u8, u8, f64)>,
    pub fy: Vec<(u8, u8, f64)>,
    pub region: Vec<(usize, SideOf)>,
}

impl PwsMapSpec {
    pub fn to_json(&self) -> MapSpecJson {
        if self.kind == "bcnf" {
            let g = |k: &str| self.params.get(k).copied().unwrap_or(f64::NAN);
            return MapSpecJson::Bcnf {
                tau_l: g("tau_L"),
                delta_l: g("delta_L"),
                tau_r: g("tau_R"),
                delta_r: g("delta_R"),
                mu: g("mu"),
            };
        }
        MapSpecJson::Polynomial {
            pieces: self
                .pieces
                .iter()
                .map(|p| {
                    let (fx, fy) = match &p.map {
                        PieceMap::Affine { m, b } => (
                            Poly2::linear(m.a, m.b, b.x).0,
                            Poly2::linear(m.c, m.d, b.y).0,
                        ),
                        PieceMap::Polynomial { fx, fy } => (fx.0.clone(), fy.0.clone()),
                    };
                    PieceJson {
                        fx,
                        fy,
                        region: p.region.clone(),
                    }
                })
                .collect(),
            switching: self.switching.iter().map(|h| h.0.clone()).collect(),
        }
    }

    pub fn from_json(doc: &MapSpecJson) -> Result<PwsMapSpec> {
        match doc {
            MapSpecJson::Bcnf {
                tau_l,
                delta_l,
                tau_r,
                delta_r,
                mu,
            } => Ok(crate::normal_form::NormalFormParams {
                tau_l: *tau_l,
                delta_l: *delta_l,
                tau_r: *tau_r,
                delta_r: *delta_r,
                mu: *mu,
            }
            .to_map()),
            MapSpecJson::Polynomial { pieces, switching } => {
                let spec = PwsMapSpec {
                    pieces: pieces
                        .iter()
                        .map(|p| Piece {
                            map: PieceMap::Polynomial {
                                fx: Poly2(p.fx.clone()),
                                fy: Poly2(p.fy.clone()),
                            },
                            region: p.region.clone(),
                        })
                        .collect(),
                    switching: switching.iter().map(|h| Poly2(h.clone())).collect(),
                    params: BTreeMap::new(),
                    kind: "polynomial".into(),
                };
                for (i, p) in spec.pieces.iter().enumerate() {
                    if let PieceMap::Polynomial { fx, fy } = &p.map {
                        if fx.max_degree() > 3 || fy.max_degree() > 3 {
                            return Err(Error::DegeneratePiece(
                                i,
                                "polynomial pieces limited to total degree 3".into(),
                            ));
                        }
                    }
                    for &(s, _) in &p.region {
                        if s >= spec.switching.len() {
                            return Err(Error::Config(format!(
                                "piece {i} references unknown switching function {s}"
                            )));
                        }
                    }
                }
                Ok(spec)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::NormalFormParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nf(tau_r: f64, delta_r: f64) -> PwsMapSpec {
        NormalFormParams::new(2.0, 0.75, tau_r, delta_r, 1.0).to_map()
    }

    #[test]
    fn evaluate_on_switching_manifold_uses_tie_break() {
        let map = nf(-0.6, 1.35);
        let (img, label) = map.evaluate(Point::new(0.0, 5.0)).unwrap();
        assert_eq!(label, 0);
        assert!((img.x - 6.0).abs() < 1e-15);
        assert!(img.y.abs() < 1e-15);
    }

    #[test]
    fn left_fixed_point_is_invariant() {
        let map = nf(-0.6, 1.35);
        let (img, label) = map.evaluate(Point::new(-4.0, 3.0)).unwrap();
        assert_eq!(label, 0);
        assert!(img.dist(Point::new(-4.0, 3.0)) < 1e-14);
    }

    #[test]
    fn right_piece_hand_evaluation() {
        let map = nf(-0.6, 1.35);
        let (img, label) = map.evaluate(Point::new(2.0, 0.0)).unwrap();
        assert_eq!(label, 1);
        assert!(img.dist(Point::new(-0.2, -2.7)) < 1e-14);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let map = nf(-0.6, 1.35);
        assert!(map.evaluate(Point::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn compose_along_single_left_letter() {
        let map = nf(-0.6, 1.35);
        let itin = Itinerary::from_word("L").unwrap();
        let (q, j) = map.compose_along(&itin, Point::new(-4.0, 3.0)).unwrap();
        assert!(q.dist(Point::new(-4.0, 3.0)) < 1e-14);
        assert_eq!(j, Mat2::new(2.0, 1.0, -0.75, 0.0));
    }

    #[test]
    fn compose_along_is_associative() {
        let map = nf(-0.6, 1.35);
        let one = Itinerary::from_word("L").unwrap();
        let p = Point::new(-1.3, 0.7);
        let (q1, _) = map.compose_along(&one, p).unwrap();
        let (q2, _) = map.compose_along(&one, q1).unwrap();
        let (q12, _) = map.compose_along(&Itinerary::from_word("LL").unwrap(), p).unwrap();
        assert!(q2.dist(q12) < 1e-15);
    }

    #[test]
    fn compose_along_follows_the_itinerary_not_the_regions() {
        // (0,1) -> right piece -> (2,0); (2,0) lies in the right region but
        // the itinerary says left, and compose_along obeys the itinerary.
        let map = nf(-0.6, 1.35);
        let itin = Itinerary::from_word("RL").unwrap();
        let (q, _) = map.compose_along(&itin, Point::new(0.0, 1.0)).unwrap();
        assert!(q.dist(Point::new(5.0, -1.5)) < 1e-14);
        // the realized itinerary of the true orbit differs
        let orbit = map.iterate(Point::new(0.0, 1.0), 2, 1e6).unwrap();
        assert_eq!(orbit.realized_itinerary.0, vec![0, 1]);
    }

    #[test]
    fn fixed_point_orbit_is_constant() {
        let map = nf(-0.6, 1.35);
        let orbit = map.iterate(Point::new(-4.0, 3.0), 50, 1e6).unwrap();
        assert!(orbit.escaped.is_none());
        for p in &orbit.points {
            assert!(p.dist(Point::new(-4.0, 3.0)) < 1e-12);
        }
    }

    #[test]
    fn orbit_escapes_past_the_corner() {
        let map = nf(-0.6, 1.45);
        let orbit = map.iterate(Point::new(0.0, 0.0), 10_000, 1e6).unwrap();
        assert!(orbit.escaped.is_some());
    }

    #[test]
    fn orbit_bounded_at_the_corner() {
        let map = nf(-0.6, 1.35);
        let orbit = map.iterate(Point::new(0.0, 0.0), 10_000, 1e3).unwrap();
        assert!(orbit.escaped.is_none());
    }

    #[test]
    fn iterate_restarts_bitwise() {
        let map = nf(-0.6, 1.35);
        let a = map.iterate(Point::new(0.1, -0.2), 40, 1e6).unwrap();
        let b1 = map.iterate(Point::new(0.1, -0.2), 15, 1e6).unwrap();
        let b2 = map.iterate(*b1.points.last().unwrap(), 25, 1e6).unwrap();
        let mut joined = b1.points.clone();
        joined.extend_from_slice(&b2.points[1..]);
        assert_eq!(a.points, joined);
        let mut word = b1.realized_itinerary.0.clone();
        word.extend_from_slice(&b2.realized_itinerary.0);
        assert_eq!(a.realized_itinerary.0, word);
    }

    #[test]
    fn lyapunov_negative_at_stable_fixed_point() {
        // left piece with both eigenvalues inside the unit circle
        let map = NormalFormParams::new(0.5, 0.2, 0.5, 0.2, -1.0).to_map();
        // fixed point x = mu/(1 - tau + delta) = -1/0.7 < 0, stable
        let le = map
            .lyapunov_exponent(Point::new(-1.0 / 0.7, 0.2 / 0.7), 100, 1000, 1e6)
            .unwrap();
        assert!(le < 0.0);
    }

    #[test]
    fn lyapunov_errors_on_escape() {
        let map = nf(-0.6, 1.45);
        assert!(map
            .lyapunov_exponent(Point::new(0.0, 0.0), 1000, 100_000, 1e6)
            .is_err());
    }

    #[test]
    fn continuity_on_random_boundary_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let map = nf(
                rng.gen_range(-1.5..1.5),
                rng.gen_range(0.0..1.6),
            );
            assert!(map.continuity_defect(100, 5.0, &mut rng) < 1e-10);
        }
    }

    #[test]
    fn chain_rule_matches_per_step_jacobians() {
        let map = nf(-0.6, 1.35);
        let p = Point::new(0.3, -0.8);
        let itin = Itinerary::from_word("RLLRL").unwrap();
        let (_, jac) = map.compose_along(&itin, p).unwrap();
        let mut q = p;
        let mut acc = Mat2::identity();
        for &l in &itin.0 {
            acc = map.jacobian_piece(l, q).unwrap().mul(acc);
            q = map.eval_piece(l, q).unwrap();
        }
        for (x, y) in [(jac.a, acc.a), (jac.b, acc.b), (jac.c, acc.c), (jac.d, acc.d)] {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn json_round_trip_bcnf_and_polynomial() {
        let map = nf(-0.6, 1.35);
        let doc = map.to_json();
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"kind\":\"bcnf\""));
        let back = PwsMapSpec::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        let p = Point::new(0.37, -1.1);
        assert_eq!(map.evaluate(p).unwrap().0, back.evaluate(p).unwrap().0);

        // force the polynomial representation
        let mut poly = map.clone();
        poly.kind = "general".into();
        let doc2 = poly.to_json();
        let back2 = PwsMapSpec::from_json(&doc2).unwrap();
        assert!(map.evaluate(p).unwrap().0.dist(back2.evaluate(p).unwrap().0) < 1e-12);
    }
}
