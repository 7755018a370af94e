//! Closed-form facilities for the two-dimensional border-collision normal
//! form: per-piece fixed points and eigen-data, piece inverses, and the
//! one-dimensional skew-tent reduction.

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point};
use crate::pws::{Piece, PieceMap, Poly2, PwsMapSpec, SideOf};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormParams {
    pub tau_l: f64,
    pub delta_l: f64,
    pub tau_r: f64,
    pub delta_r: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn label(self) -> usize {
        match self {
            Side::L => 0,
            Side::R => 1,
        }
    }
}

impl NormalFormParams {
    pub fn new(tau_l: f64, delta_l: f64, tau_r: f64, delta_r: f64, mu: f64) -> Self {
        NormalFormParams {
            tau_l,
            delta_l,
            tau_r,
            delta_r,
            mu,
        }
    }

    pub fn trace_det(&self, side: Side) -> (f64, f64) {
        match side {
            Side::L => (self.tau_l, self.delta_l),
            Side::R => (self.tau_r, self.delta_r),
        }
    }

    pub fn matrix(&self, side: Side) -> Mat2 {
        let (tau, delta) = self.trace_det(side);
        Mat2::new(tau, 1.0, -delta, 0.0)
    }

    pub fn offset(&self) -> Point {
        Point::new(self.mu, 0.0)
    }

    /// The normal form as a two-piece map with switching line x = 0;
    /// piece 0 applies for x <= 0, piece 1 for x >= 0.
    pub fn to_map(&self) -> PwsMapSpec {
        let mut params = BTreeMap::new();
        params.insert("tau_L".into(), self.tau_l);
        params.insert("delta_L".into(), self.delta_l);
        params.insert("tau_R".into(), self.tau_r);
        params.insert("delta_R".into(), self.delta_r);
        params.insert("mu".into(), self.mu);
        PwsMapSpec {
            pieces: vec![
                Piece {
                    map: PieceMap::Affine {
                        m: self.matrix(Side::L),
                        b: self.offset(),
                    },
                    region: vec![(0, SideOf::NonPositive)],
                },
                Piece {
                    map: PieceMap::Affine {
                        m: self.matrix(Side::R),
                        b: self.offset(),
                    },
                    region: vec![(0, SideOf::NonNegative)],
                },
            ],
            switching: vec![Poly2::linear(1.0, 0.0, 0.0)],
            params,
            kind: "bcnf".into(),
        }
    }
}

/// A saddle fixed point of one affine piece, with normalised eigen-data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleData {
    pub point: Point,
    /// Stable eigenvalue, |lambda| < 1.
    pub lambda: f64,
    /// Unstable eigenvalue, |sigma| > 1.
    pub sigma: f64,
    pub v_s: Point,
    pub v_u: Point,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FixedPointClass {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    Nonhyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceFixedPoint {
    pub point: Point,
    pub class: FixedPointClass,
    /// Real eigenvalue pair, or the common modulus of a complex pair.
    pub eigenvalues: Option<(f64, f64)>,
    pub modulus: f64,
    /// Left fixed point requires x <= 0, right requires x >= 0.
    pub admissible: bool,
    pub saddle: Option<SaddleData>,
}

/// Fixed point of one affine piece: x = tau x + y + mu, y = -delta x.
pub fn piece_fixed_point(params: &NormalFormParams, side: Side) -> Result<PieceFixedPoint> {
    let (tau, delta) = params.trace_det(side);
    let denom = 1.0 - tau + delta;
    if denom == 0.0 {
        return Err(Error::DegeneratePiece(
            side.label(),
            "1 - tau + delta = 0, no unique fixed point".into(),
        ));
    }
    let x = params.mu / denom;
    let point = Point::new(x, -delta * x);
    let m = params.matrix(side);
    let admissible = match side {
        Side::L => x <= 0.0,
        Side::R => x >= 0.0,
    };
    match m.real_eigenvalues() {
        Some((big, small)) => {
            let (abig, asmall) = (big.abs(), small.abs());
            let class = if abig > 1.0 && asmall < 1.0 {
                FixedPointClass::Saddle
            } else if abig < 1.0 {
                FixedPointClass::StableNode
            } else if asmall > 1.0 {
                FixedPointClass::UnstableNode
            } else {
                FixedPointClass::Nonhyperbolic
            };
            let saddle = if class == FixedPointClass::Saddle {
                Some(SaddleData {
                    point,
                    lambda: small,
                    sigma: big,
                    v_s: m.eigenvector(small),
                    v_u: m.eigenvector(big),
                    side,
                })
            } else {
                None
            };
            Ok(PieceFixedPoint {
                point,
                class,
                eigenvalues: Some((big, small)),
                modulus: abig,
                admissible,
                saddle,
            })
        }
        None => {
            let modulus = delta.abs().sqrt();
            let class = if modulus < 1.0 {
                FixedPointClass::StableFocus
            } else if modulus > 1.0 {
                FixedPointClass::UnstableFocus
            } else {
                FixedPointClass::Nonhyperbolic
            };
            Ok(PieceFixedPoint {
                point,
                class,
                eigenvalues: None,
                modulus,
                admissible,
                saddle: None,
            })
        }
    }
}

/// Convenience: the saddle of the given side, or an error.
pub fn saddle_of(params: &NormalFormParams, side: Side) -> Result<SaddleData> {
    piece_fixed_point(params, side)?
        .saddle
        .ok_or_else(|| Error::NotASaddle(format!("{side:?} fixed point is not a saddle")))
}

/// The admissible saddle of the map, searching both pieces (left first).
pub fn find_saddle(params: &NormalFormParams) -> Result<SaddleData> {
    for side in [Side::L, Side::R] {
        if let Ok(fp) = piece_fixed_point(params, side) {
            if fp.admissible {
                if let Some(s) = fp.saddle {
                    return Ok(s);
                }
            }
        }
    }
    Err(Error::NotASaddle("no admissible saddle on either piece".into()))
}

/// A parametrised eigenline p(t) = origin + t * dir, clipped to t_range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenLine {
    pub origin: Point,
    pub dir: Point,
    pub t_range: (f64, f64),
}

impl EigenLine {
    pub fn point_at(&self, t: f64) -> Point {
        self.origin + self.dir * t
    }

    /// Parameter at which the line crosses x = 0, if it does within range.
    pub fn switching_crossing(&self) -> Option<(f64, Point)> {
        if self.dir.x == 0.0 {
            return None;
        }
        let t = -self.origin.x / self.dir.x;
        if t >= self.t_range.0 && t <= self.t_range.1 {
            Some((t, self.point_at(t)))
        } else {
            None
        }
    }
}

/// Local stable/unstable eigenlines through a saddle, each clipped to the
/// maximal segment on the saddle's own side of x = 0.
pub fn saddle_eigenlines(s: &SaddleData) -> (EigenLine, EigenLine) {
    let clip = |dir: Point| -> (f64, f64) {
        if dir.x == 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let t_cross = -s.point.x / dir.x;
        if t_cross >= 0.0 {
            (f64::NEG_INFINITY, t_cross)
        } else {
            (t_cross, f64::INFINITY)
        }
    };
    let stable = EigenLine {
        origin: s.point,
        dir: s.v_s,
        t_range: clip(s.v_s),
    };
    let unstable = EigenLine {
        origin: s.point,
        dir: s.v_u,
        t_range: clip(s.v_u),
    };
    (stable, unstable)
}

/// Inverse of one affine piece: p with A p + (mu, 0) = q.
pub fn invert_piece(params: &NormalFormParams, side: Side, q: Point) -> Result<Point> {
    let (tau, delta) = params.trace_det(side);
    if delta == 0.0 {
        return Err(Error::NonInvertible(side.label(), delta));
    }
    let x = -q.y / delta;
    Ok(Point::new(x, q.x - params.mu - tau * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewTentParams {
    pub slope_left: f64,
    pub slope_right: f64,
    pub offset: f64,
}

/// Iterate x -> slope*x + offset with the slope chosen by the sign of x;
/// x = 0 uses the left slope, matching the planar tie-break.
pub fn skew_tent_iterate(params: &SkewTentParams, x0: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut x = x0;
    out.push(x);
    for _ in 0..n {
        let slope = if x <= 0.0 { params.slope_left } else { params.slope_right };
        x = slope * x + params.offset;
        out.push(x);
    }
    out
}

/// Fixed points of the two tent branches, with admissibility flags.
pub fn skew_tent_fixed_points(params: &SkewTentParams) -> [(Option<f64>, bool); 2] {
    let branch = |slope: f64, left: bool| -> (Option<f64>, bool) {
        if slope == 1.0 {
            return (None, false);
        }
        let x = params.offset / (1.0 - slope);
        let admissible = if left { x <= 0.0 } else { x >= 0.0 };
        (Some(x), admissible)
    };
    [
        branch(params.slope_left, true),
        branch(params.slope_right, false),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::normalize_sign;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> NormalFormParams {
        NormalFormParams::new(2.0, 0.75, -0.6, 1.35, 1.0)
    }

    #[test]
    fn left_saddle_matches_hand_solution() {
        let fp = piece_fixed_point(&params(), Side::L).unwrap();
        assert!(fp.point.dist(Point::new(-4.0, 3.0)) < 1e-13);
        let (big, small) = fp.eigenvalues.unwrap();
        assert!((big - 1.5).abs() < 1e-13);
        assert!((small - 0.5).abs() < 1e-13);
        assert!(fp.admissible);
        assert_eq!(fp.class, FixedPointClass::Saddle);
    }

    #[test]
    fn zero_mu_fixed_point_at_origin() {
        let p = NormalFormParams::new(2.0, 0.75, -0.6, 1.35, 0.0);
        let fp = piece_fixed_point(&p, Side::L).unwrap();
        assert!(fp.point.norm() < 1e-15);
    }

    #[test]
    fn right_fixed_point_is_unstable_focus() {
        let fp = piece_fixed_point(&params(), Side::R).unwrap();
        assert!(fp.point.dist(Point::new(1.0 / 2.95, -1.35 / 2.95)) < 1e-12);
        assert!((fp.point.x - 0.33898).abs() < 1e-5);
        assert!((fp.point.y + 0.45763).abs() < 1e-5);
        assert_eq!(fp.class, FixedPointClass::UnstableFocus);
        assert!((fp.modulus - 1.35f64.sqrt()).abs() < 1e-14);
        assert!(fp.admissible);
        assert!(fp.saddle.is_none());
    }

    #[test]
    fn degenerate_piece_errors() {
        let p = NormalFormParams::new(2.0, 1.0, 0.0, 0.0, 1.0);
        assert!(piece_fixed_point(&p, Side::L).is_err());
    }

    #[test]
    fn eigenlines_directions_and_crossing() {
        let s = saddle_of(&params(), Side::L).unwrap();
        let (stable, unstable) = saddle_eigenlines(&s);
        assert!((unstable.dir.y / unstable.dir.x + 0.5).abs() < 1e-12);
        assert!((stable.dir.y / stable.dir.x + 1.5).abs() < 1e-12);
        let (_, crossing) = unstable.switching_crossing().unwrap();
        assert!(crossing.dist(Point::new(0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn mu_reflection_negates_fixed_point_keeps_directions() {
        let p = params();
        let n = NormalFormParams { mu: -1.0, ..p };
        let sp = saddle_of(&p, Side::L).unwrap();
        let sn = saddle_of(&n, Side::L).unwrap();
        assert!((sp.point + sn.point).norm() < 1e-13);
        assert_eq!(sp.v_s, sn.v_s);
        assert_eq!(sp.v_u, sn.v_u);
    }

    #[test]
    fn invert_piece_hand_case_and_round_trip() {
        let p = params();
        let q = invert_piece(&p, Side::L, Point::new(6.0, 0.0)).unwrap();
        assert!(q.dist(Point::new(0.0, 5.0)) < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let pt = Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            for side in [Side::L, Side::R] {
                let img = p.matrix(side).mul_vec(pt) + p.offset();
                let back = invert_piece(&p, side, img).unwrap();
                assert!(back.dist(pt) < 1e-10);
            }
        }
    }

    #[test]
    fn zero_determinant_is_not_invertible() {
        let p = NormalFormParams::new(2.0, 0.75, -0.6, 0.0, 1.0);
        assert!(invert_piece(&p, Side::R, Point::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn eigen_residuals_over_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 10_000 {
            let tau = rng.gen_range(-3.0..3.0);
            let delta = rng.gen_range(-2.0..2.0);
            let m = Mat2::new(tau, 1.0, -delta, 0.0);
            let Some((g1, g2)) = m.real_eigenvalues() else { continue };
            if (g1 - g2).abs() < 1e-6 {
                continue;
            }
            for g in [g1, g2] {
                let v = m.eigenvector(g);
                let r = m.mul_vec(v) - v * g;
                assert!(r.norm() <= 1e-12 * g.abs().max(1.0));
            }
            checked += 1;
        }
    }

    #[test]
    fn eigenvector_sign_convention() {
        let s = saddle_of(&params(), Side::L).unwrap();
        assert!((s.v_s.norm() - 1.0).abs() < 1e-14);
        assert!((s.v_u.norm() - 1.0).abs() < 1e-14);
        assert!(s.v_s.x > 0.0);
        assert!(s.v_u.x > 0.0);
        assert_eq!(normalize_sign(s.v_s), s.v_s);
    }

    #[test]
    fn skew_tent_fixed_points_of_the_steep_example() {
        let t = SkewTentParams {
            slope_left: -4.0,
            slope_right: 4.0,
            offset: -1.0,
        };
        let [(l, la), (r, ra)] = skew_tent_fixed_points(&t);
        assert!((l.unwrap() + 0.2).abs() < 1e-14);
        assert!((r.unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(la && ra);
        // both unstable: |slope| > 1
        assert!(t.slope_left.abs() > 1.0 && t.slope_right.abs() > 1.0);
    }

    #[test]
    fn skew_tent_zero_offset_fixes_origin() {
        let t = SkewTentParams {
            slope_left: -4.0,
            slope_right: 4.0,
            offset: 0.0,
        };
        let orbit = skew_tent_iterate(&t, 0.0, 20);
        assert!(orbit.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_determinant_planar_orbit_shadows_the_tent_exactly() {
        // with both determinants zero the second coordinate decouples and
        // the x-coordinates follow the skew tent map
        let t = SkewTentParams {
            slope_left: -4.0,
            slope_right: 4.0,
            offset: -1.0,
        };
        let map = NormalFormParams::new(-4.0, 0.0, 4.0, 0.0, -1.0).to_map();
        let x0 = 0.3;
        let tent = skew_tent_iterate(&t, x0, 30);
        let orbit = map.iterate(Point::new(x0, 0.0), 30, 1e12).unwrap();
        for (a, b) in tent.iter().zip(orbit.points.iter()) {
            assert_eq!(*a, b.x);
        }
    }

    #[test]
    fn small_determinant_shadowing_deviation_is_linear() {
        // bounded skew tent (contracting left branch); the planar orbit's
        // x-coordinates track it with O(d) error in the determinants
        let t = SkewTentParams {
            slope_left: 0.9,
            slope_right: -1.5,
            offset: 1.0,
        };
        let tent = skew_tent_iterate(&t, 0.3, 50);
        let max_dev = |d: f64| -> f64 {
            let map = NormalFormParams::new(0.9, d, -1.5, d, 1.0).to_map();
            let orbit = map.iterate(Point::new(0.3, 0.0), 50, 1e9).unwrap();
            tent.iter()
                .zip(orbit.points.iter())
                .map(|(a, b)| (a - b.x).abs())
                .fold(0.0, f64::max)
        };
        let mut prev = max_dev(1e-6);
        for d in [5e-7, 2.5e-7] {
            let dev = max_dev(d);
            assert!(dev <= 0.6 * prev, "deviation {dev} vs {prev} at d={d}");
            prev = dev;
        }
    }
}
