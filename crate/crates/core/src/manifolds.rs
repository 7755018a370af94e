//! Invariant manifolds of piecewise-affine saddles, grown as polylines.
//!
//! The unstable manifold is the forward orbit of a fundamental segment on
//! the unstable eigenline; the stable manifold is the unstable manifold of
//! the inverse map. Where a frontier segment crosses a switching manifold
//! it is split exactly, and the image of the split point is a kink. Kinks
//! age by one generation every time the frontier is mapped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_crossing, segment_distance, Point};
use crate::normal_form::{find_saddle, invert_piece, NormalFormParams, SaddleData, Side};
use crate::pws::{Piece, PieceMap, Poly2, PwsMapSpec, SideOf};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthBudget {
    pub max_generations: usize,
    pub max_points: usize,
    pub escape_radius: f64,
    /// Distance of the seed point from the saddle along the eigenline.
    pub seed_distance: f64,
}

impl Default for GrowthBudget {
    fn default() -> Self {
        GrowthBudget {
            max_generations: 60,
            max_points: 20_000,
            escape_radius: 1e3,
            seed_distance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldSide {
    Unstable,
    Stable,
}

/// A vertex of a manifold polyline. `kink_generation` is 0 for smooth
/// vertices; a kink created in the latest mapping step has generation 1.
#[derive(Debug, Clone, Copy)]
pub struct Vertex {
    pub point: Point,
    pub kink_generation: u32,
}

impl Vertex {
    pub fn is_kink(&self) -> bool {
        self.kink_generation > 0
    }
}

/// One polyline chain (one half-branch of the manifold).
#[derive(Debug, Clone, Default)]
pub struct Chain {
    pub vertices: Vec<Vertex>,
}

impl Chain {
    pub fn kinks(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().filter(|v| v.is_kink())
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldPolyline {
    pub side: ManifoldSide,
    pub saddle: SaddleData,
    /// Two chains, one per half-branch (+v and -v from the saddle).
    pub chains: Vec<Chain>,
    pub generations: usize,
    pub truncated: bool,
}

impl ManifoldPolyline {
    pub fn kinks(&self) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self
            .chains
            .iter()
            .flat_map(|c| c.kinks().copied())
            .collect();
        out.sort_by(|a, b| b.kink_generation.cmp(&a.kink_generation));
        out
    }

    pub fn total_points(&self) -> usize {
        self.chains.iter().map(|c| c.vertices.len()).sum()
    }
}

/// Find all switching crossings interior to segment [a, b], as parameters
/// t in (0, 1) sorted ascending. Exact linear solve for affine switching
/// functions; sampling plus bisection otherwise.
fn switching_splits(map: &PwsMapSpec, a: Point, b: Point) -> Vec<f64> {
    let mut ts: Vec<f64> = Vec::new();
    for h in &map.switching {
        let ha = h.eval(a);
        let hb = h.eval(b);
        if h.max_degree() <= 1 {
            // h along the segment is affine in t
            if ha == 0.0 || hb == 0.0 || ha.signum() == hb.signum() {
                continue;
            }
            let t = ha / (ha - hb);
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        } else {
            const N: usize = 32;
            let mut prev_t = 0.0;
            let mut prev_h = ha;
            for i in 1..=N {
                let t = i as f64 / N as f64;
                let hv = h.eval(a.lerp(b, t));
                if prev_h != 0.0 && hv != 0.0 && prev_h.signum() != hv.signum() {
                    let (mut lo, mut hi, mut flo) = (prev_t, t, prev_h);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        let fm = h.eval(a.lerp(b, mid));
                        if fm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if fm.signum() == flo.signum() {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    let r = 0.5 * (lo + hi);
                    if r > 0.0 && r < 1.0 {
                        ts.push(r);
                    }
                }
                prev_t = t;
                prev_h = hv;
            }
        }
    }
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    ts
}

fn grow_half_branch(
    map: &PwsMapSpec,
    saddle: Point,
    dir: Point,
    growth_rate: f64,
    budget: &GrowthBudget,
) -> Result<(Chain, usize, bool)> {
    let p0 = saddle + dir * budget.seed_distance;
    let p1 = saddle + dir * (budget.seed_distance * growth_rate);
    // frontier: the newest fundamental segment, split-refined
    let mut frontier: Vec<Vertex> = vec![
        Vertex { point: p0, kink_generation: 0 },
        Vertex { point: p1, kink_generation: 0 },
    ];
    let mut chain = Chain { vertices: frontier.clone() };
    let mut truncated = false;
    let mut generations = 0;
    for g in 0..budget.max_generations {
        generations = g;
        // split frontier segments at switching crossings
        let mut refined: Vec<(Vertex, bool)> = Vec::with_capacity(frontier.len());
        for w in frontier.windows(2) {
            refined.push((w[0], false));
            for t in switching_splits(map, w[0].point, w[1].point) {
                refined.push((
                    Vertex {
                        point: w[0].point.lerp(w[1].point, t),
                        kink_generation: 0,
                    },
                    true,
                ));
            }
        }
        refined.push((*frontier.last().unwrap(), false));
        // map every vertex; fresh splits become kinks of generation 1
        let mut next: Vec<Vertex> = Vec::with_capacity(refined.len());
        let mut escaped = false;
        for (v, fresh) in &refined {
            let label = map.tie_break_label(v.point)?;
            let q = map.pieces[label].map.eval(v.point);
            if !q.is_finite() || q.norm() > budget.escape_radius {
                escaped = true;
            }
            let gen = if *fresh {
                1
            } else if v.kink_generation > 0 {
                v.kink_generation + 1
            } else {
                0
            };
            next.push(Vertex { point: q, kink_generation: gen });
        }
        if escaped {
            truncated = true;
            break;
        }
        // a split whose image keeps the polyline straight is not a kink
        // (both pieces act identically along the crossing)
        for i in 1..next.len().saturating_sub(1) {
            if next[i].kink_generation == 1 && refined[i].1 {
                let a = next[i].point - next[i - 1].point;
                let b = next[i + 1].point - next[i].point;
                if a.cross(b).abs() <= 1e-10 * a.norm() * b.norm() {
                    next[i].kink_generation = 0;
                }
            }
        }
        // the image of the frontier continues the chain: its first vertex
        // coincides with the chain's last (image of previous frontier end)
        chain.vertices.extend_from_slice(&next[1..]);
        frontier = next;
        if chain.vertices.len() >= budget.max_points {
            truncated = true;
            break;
        }
    }
    if generations + 1 >= budget.max_generations {
        generations = budget.max_generations;
    } else {
        generations += 1;
    }
    Ok((chain, generations, truncated))
}

/// Grow the unstable manifold of `saddle` under `map` as two polyline
/// chains (one per half-branch).
pub fn grow_unstable_of(
    map: &PwsMapSpec,
    saddle: &SaddleData,
    budget: &GrowthBudget,
) -> Result<ManifoldPolyline> {
    let mut chains = Vec::with_capacity(2);
    let mut generations = 0;
    let mut truncated = false;
    for dir in [saddle.v_u, -saddle.v_u] {
        let (c, g, t) = grow_half_branch(map, saddle.point, dir, saddle.sigma.abs(), budget)?;
        generations = generations.max(g);
        truncated |= t;
        chains.push(c);
    }
    Ok(ManifoldPolyline {
        side: ManifoldSide::Unstable,
        saddle: *saddle,
        chains,
        generations,
        truncated,
    })
}

pub fn grow_unstable(params: &NormalFormParams, budget: &GrowthBudget) -> Result<ManifoldPolyline> {
    let saddle = find_saddle(params)?;
    grow_unstable_of(&params.to_map(), &saddle, budget)
}

/// The inverse of an invertible normal-form map as a piecewise-affine map
/// switching on y = 0. Requires both determinants nonzero with the same
/// sign; otherwise the forward pieces' images overlap and the map has no
/// global single-valued inverse.
pub fn inverse_normal_form_map(params: &NormalFormParams) -> Result<PwsMapSpec> {
    let (dl, dr) = (params.delta_l, params.delta_r);
    if dl == 0.0 || dr == 0.0 || dl.signum() != dr.signum() {
        return Err(Error::Precondition(format!(
            "map is not globally invertible (determinants {dl}, {dr})"
        )));
    }
    // y' = -delta x, so f_L maps {x <= 0} onto {y >= 0} for delta_L > 0,
    // and f_R maps {x >= 0} onto {y <= 0}
    let mut pieces = Vec::with_capacity(2);
    for side in [Side::L, Side::R] {
        let m = params.matrix(side);
        let minv = m.inverse().ok_or(Error::NonInvertible(side.label(), m.det()))?;
        let shift = minv.mul_vec(params.offset());
        let delta = match side {
            Side::L => dl,
            Side::R => dr,
        };
        let nonneg = (delta > 0.0) == (side == Side::L);
        let region_side = if nonneg {
            SideOf::NonNegative
        } else {
            SideOf::NonPositive
        };
        pieces.push(Piece {
            map: PieceMap::Affine { m: minv, b: -shift },
            region: vec![(0, region_side)],
        });
    }
    Ok(PwsMapSpec {
        pieces,
        switching: vec![Poly2::linear(0.0, 1.0, 0.0)],
        params: std::collections::BTreeMap::new(),
        kind: "bcnf-inverse".into(),
    })
}

/// Grow the stable manifold by growing the unstable manifold of the
/// inverse map (expansion rate 1/lambda).
pub fn grow_stable(params: &NormalFormParams, budget: &GrowthBudget) -> Result<ManifoldPolyline> {
    let saddle = find_saddle(params)?;
    let inv = inverse_normal_form_map(params)?;
    let mut inv_saddle = saddle;
    inv_saddle.lambda = 1.0 / saddle.sigma;
    inv_saddle.sigma = 1.0 / saddle.lambda;
    std::mem::swap(&mut inv_saddle.v_s, &mut inv_saddle.v_u);
    let mut grown = grow_unstable_of(&inv, &inv_saddle, budget)?;
    grown.side = ManifoldSide::Stable;
    grown.saddle = saddle;
    Ok(grown)
}

/// Minimum distance between two manifold polylines, with the realizing
/// point pair. Zero when they cross.
pub fn polyline_min_distance(a: &ManifoldPolyline, b: &ManifoldPolyline) -> (f64, Point, Point) {
    let mut best = (f64::INFINITY, Point::new(0.0, 0.0), Point::new(0.0, 0.0));
    for ca in &a.chains {
        for cb in &b.chains {
            for wa in ca.vertices.windows(2) {
                // bounding interval prefilter on the candidate segment
                let (ax_lo, ax_hi) = minmax(wa[0].point.x, wa[1].point.x);
                let (ay_lo, ay_hi) = minmax(wa[0].point.y, wa[1].point.y);
                for wb in cb.vertices.windows(2) {
                    let (bx_lo, bx_hi) = minmax(wb[0].point.x, wb[1].point.x);
                    let (by_lo, by_hi) = minmax(wb[0].point.y, wb[1].point.y);
                    let gap_x = (bx_lo - ax_hi).max(ax_lo - bx_hi).max(0.0);
                    let gap_y = (by_lo - ay_hi).max(ay_lo - by_hi).max(0.0);
                    if gap_x.hypot(gap_y) >= best.0 {
                        continue;
                    }
                    let (d, pa, pb) =
                        segment_distance(wa[0].point, wa[1].point, wb[0].point, wb[1].point);
                    if d < best.0 {
                        best = (d, pa, pb);
                    }
                }
            }
        }
    }
    best
}

/// As [`polyline_min_distance`], but ignoring segments that lie entirely
/// within `radius` of `center`. Both manifolds pass through the saddle, so
/// the unrestricted minimum is always on the order of the seed distance;
/// excluding a saddle neighbourhood measures the actual separation.
pub fn polyline_min_distance_outside(
    a: &ManifoldPolyline,
    b: &ManifoldPolyline,
    center: Point,
    radius: f64,
) -> (f64, Point, Point) {
    let keep = |w: &[Vertex]| w[0].point.dist(center) > radius || w[1].point.dist(center) > radius;
    let mut best = (f64::INFINITY, Point::new(0.0, 0.0), Point::new(0.0, 0.0));
    for ca in &a.chains {
        for cb in &b.chains {
            for wa in ca.vertices.windows(2).filter(|w| keep(w)) {
                for wb in cb.vertices.windows(2).filter(|w| keep(w)) {
                    let (d, pa, pb) =
                        segment_distance(wa[0].point, wa[1].point, wb[0].point, wb[1].point);
                    if d < best.0 {
                        best = (d, pa, pb);
                    }
                }
            }
        }
    }
    best
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A transverse crossing between two manifold polylines.
#[derive(Debug, Clone, Copy)]
pub struct Crossing {
    pub point: Point,
    pub angle: f64,
}

/// All proper segment crossings between the polylines with crossing angle
/// above `angle_tol` (filters near-tangent grazes and shared endpoints).
pub fn transverse_intersections(
    a: &ManifoldPolyline,
    b: &ManifoldPolyline,
    angle_tol: f64,
) -> Vec<Crossing> {
    let mut out = Vec::new();
    for ca in &a.chains {
        for cb in &b.chains {
            for wa in ca.vertices.windows(2) {
                for wb in cb.vertices.windows(2) {
                    if let Some((pt, t, u, ang)) =
                        segment_crossing(wa[0].point, wa[1].point, wb[0].point, wb[1].point)
                    {
                        let interior = t > 1e-9 && t < 1.0 - 1e-9 && u > 1e-9 && u < 1.0 - 1e-9;
                        if interior && ang > angle_tol {
                            out.push(Crossing { point: pt, angle: ang });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Forward orbit of the oldest kink of the unstable manifold (images of the
/// primary switching crossing). Convenience for corner diagnostics.
pub fn primary_kink(manifold: &ManifoldPolyline) -> Option<Vertex> {
    manifold
        .chains
        .iter()
        .flat_map(|c| c.kinks())
        .max_by_key(|v| v.kink_generation)
        .copied()
}

/// Preimage of a point under the saddle-side piece, exposed for callers
/// reconstructing where a kink came from.
pub fn kink_preimage(params: &NormalFormParams, side: Side, kink: Point) -> Result<Point> {
    invert_piece(params, side, kink)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_study(delta_r: f64) -> NormalFormParams {
        NormalFormParams::new(2.0, 0.75, -0.6, delta_r, 1.0)
    }

    #[test]
    fn unstable_manifold_follows_the_eigenline_near_the_saddle() {
        let p = case_study(1.35);
        let m = grow_unstable(&p, &GrowthBudget { max_generations: 20, ..Default::default() }).unwrap();
        let s = find_saddle(&p).unwrap();
        for chain in &m.chains {
            for v in chain.vertices.iter().take(10) {
                let d = v.point - s.point;
                // collinear with v_u
                assert!(d.cross(s.v_u).abs() < 1e-9 * d.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn first_kink_is_the_image_of_the_switching_crossing() {
        let p = case_study(1.35);
        let m = grow_unstable(&p, &GrowthBudget::default()).unwrap();
        let oldest = primary_kink(&m).expect("manifold long enough to cross the switching line");
        // walk the kink orbit back with the inverse map
        let inv = inverse_normal_form_map(&p).unwrap();
        let mut q = oldest.point;
        for _ in 1..oldest.kink_generation {
            let label = inv.tie_break_label(q).unwrap();
            q = inv.pieces[label].map.eval(q);
        }
        // q is the first kink, f(0, 1) = (2, 0)
        assert!((q.x - 2.0).abs() < 1e-6 && q.y.abs() < 1e-6, "first kink at ({}, {})", q.x, q.y);
        // its own preimage sits on the switching line
        let label = inv.tie_break_label(q).unwrap();
        let pre = inv.pieces[label].map.eval(q);
        assert!(pre.x.abs() < 1e-6 && (pre.y - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_kinks_when_both_pieces_coincide() {
        let p = NormalFormParams::new(2.0, 0.75, 2.0, 0.75, 1.0);
        let m = grow_unstable(&p, &GrowthBudget { max_generations: 45, ..Default::default() }).unwrap();
        assert!(m.kinks().is_empty());
    }

    #[test]
    fn kink_count_grows_with_generations() {
        let p = case_study(1.45);
        let short = grow_unstable(&p, &GrowthBudget { max_generations: 42, ..Default::default() }).unwrap();
        let long = grow_unstable(&p, &GrowthBudget { max_generations: 46, ..Default::default() }).unwrap();
        assert!(long.kinks().len() > short.kinks().len());
    }

    #[test]
    fn chain_vertices_are_invariant_under_the_map() {
        let p = case_study(1.35);
        let map = p.to_map();
        let m = grow_unstable(&p, &GrowthBudget { max_generations: 44, ..Default::default() }).unwrap();
        // every interior vertex's image lies on the polyline (within tol)
        let chain = &m.chains[0];
        let on_polyline = |q: Point| -> f64 {
            chain
                .vertices
                .windows(2)
                .map(|w| segment_distance(q, q, w[0].point, w[1].point).0)
                .fold(f64::INFINITY, f64::min)
        };
        // the newest generation's images extend past the polyline's end,
        // so only earlier vertices are checked
        for v in chain.vertices.iter().take(chain.vertices.len() / 3).step_by(5) {
            let label = map.tie_break_label(v.point).unwrap();
            let q = map.pieces[label].map.eval(v.point);
            assert!(on_polyline(q) < 1e-6, "image ({}, {}) off the polyline", q.x, q.y);
        }
    }

    #[test]
    fn stable_manifold_contains_the_eigenline_crossing() {
        let p = case_study(1.35);
        let m = grow_stable(&p, &GrowthBudget { max_generations: 40, ..Default::default() }).unwrap();
        assert_eq!(m.side, ManifoldSide::Stable);
        // E^s hits the switching line at (0, -3)
        let target = Point::new(0.0, -3.0);
        let d = m
            .chains
            .iter()
            .flat_map(|c| c.vertices.windows(2))
            .map(|w| segment_distance(target, target, w[0].point, w[1].point).0)
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-9, "distance to (0, -3): {d}");
    }

    #[test]
    fn inverse_map_round_trips_forward_orbits() {
        let p = case_study(1.45);
        let fwd = p.to_map();
        let inv = inverse_normal_form_map(&p).unwrap();
        let mut q = Point::new(0.37, -0.81);
        for _ in 0..12 {
            let label = fwd.tie_break_label(q).unwrap();
            let image = fwd.pieces[label].map.eval(q);
            let back_label = inv.tie_break_label(image).unwrap();
            let back = inv.pieces[back_label].map.eval(image);
            assert!(back.dist(q) < 1e-9, "round trip drift {}", back.dist(q));
            q = image;
        }
    }

    #[test]
    fn opposite_sign_determinants_are_not_invertible() {
        let p = NormalFormParams::new(2.0, 0.75, -0.6, -0.5, 1.0);
        assert!(inverse_normal_form_map(&p).is_err());
    }

    #[test]
    fn manifolds_are_disjoint_before_the_corner_and_cross_after() {
        let budget = GrowthBudget { max_generations: 48, max_points: 6000, ..Default::default() };
        let before = case_study(1.25);
        let wu = grow_unstable(&before, &budget).unwrap();
        let ws = grow_stable(&before, &budget).unwrap();
        let saddle = wu.saddle.point;
        let (d, _, _) = polyline_min_distance_outside(&wu, &ws, saddle, 0.5);
        assert!(d > 0.01, "manifolds too close before the corner: {d}");
        assert!(transverse_intersections(&wu, &ws, 1e-6).is_empty());

        let after = case_study(1.45);
        let wu = grow_unstable(&after, &budget).unwrap();
        let ws = grow_stable(&after, &budget).unwrap();
        let crossings = transverse_intersections(&wu, &ws, 1e-6);
        assert!(!crossings.is_empty(), "no homoclinic crossing found after the corner");
        let (d, _, _) = polyline_min_distance_outside(&wu, &ws, saddle, 0.5);
        assert_eq!(d, 0.0);
    }
}
