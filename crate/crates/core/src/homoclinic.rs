//! Homoclinic corners: signed distance of the kink orbit from the stable
//! manifold, corner location in a one-parameter family, continuation of
//! the corner curve, and an interval-free crossing certificate for the
//! reduced normal form.

use crate::error::{Error, Result};
use crate::geom::{segment_crossing, signed_line_distance, Point};
use crate::normal_form::{find_saddle, NormalFormParams, Side};
use serde::{Deserialize, Serialize};

/// The signed distance of a kink-orbit point from the stable eigenline.
#[derive(Debug, Clone)]
pub struct CornerDistance {
    /// Index of the kink along the unstable manifold: 0 is the image of
    /// the primary switching crossing, i its i-th forward image.
    pub kink_index: usize,
    /// Signed distance of the measured orbit point from E^s; positive on
    /// the side of E^s pointed to by the unstable eigenvector.
    pub distance: f64,
    /// Orbit point at which the distance is measured: the first iterate of
    /// the kink that lands in the saddle's region.
    pub measured_at: Point,
    /// Iterates taken from the kink to the measured point.
    pub steps: usize,
    /// Whether the orbit stayed in the saddle's region for all the extra
    /// confirmation iterates requested.
    pub confirmed: bool,
}

/// Primary switching crossing of the unstable eigenline and its image, the
/// first kink of the unstable manifold.
pub fn primary_crossing(params: &NormalFormParams) -> Result<(Point, Point)> {
    let saddle = find_saddle(params)?;
    if saddle.v_u.x == 0.0 {
        return Err(Error::Precondition(
            "unstable eigenvector is parallel to the switching line".into(),
        ));
    }
    let t = -saddle.point.x / saddle.v_u.x;
    let crossing = saddle.point + saddle.v_u * t;
    let map = params.to_map();
    let label = map.tie_break_label(crossing)?;
    let kink = map.eval_piece(label, crossing)?;
    Ok((crossing, kink))
}

/// Follow the orbit of the `kink_index`-th kink until it first enters the
/// saddle's region, and measure its signed distance from the stable
/// eigenline there. `confirm_iterates` further steps are taken to record
/// whether the orbit stays on the saddle side (reported, not required).
pub fn corner_distance(
    params: &NormalFormParams,
    kink_index: usize,
    confirm_iterates: usize,
) -> Result<CornerDistance> {
    let saddle = find_saddle(params)?;
    let map = params.to_map();
    let (_, mut p) = primary_crossing(params)?;
    for _ in 0..kink_index {
        let label = map.tie_break_label(p)?;
        p = map.eval_piece(label, p)?;
    }
    let on_saddle_side = |q: Point| match saddle.side {
        Side::L => q.x <= 0.0,
        Side::R => q.x >= 0.0,
    };
    let mut steps = 0;
    let mut q = p;
    // iterate until the orbit first enters the saddle's region
    while !on_saddle_side(q) {
        if steps > 256 {
            return Err(Error::Budget(
                "kink orbit did not return to the saddle side within 256 steps".into(),
            ));
        }
        let label = map.tie_break_label(q)?;
        q = map.eval_piece(label, q)?;
        if !q.is_finite() || q.norm() > 1e9 {
            return Err(Error::Escape(1e9, steps));
        }
        steps += 1;
    }
    let distance = signed_line_distance(q, saddle.point, saddle.v_s, saddle.v_u);
    let mut confirmed = true;
    let mut r = q;
    for _ in 0..confirm_iterates {
        let label = map.tie_break_label(r)?;
        r = map.eval_piece(label, r)?;
        if !r.is_finite() || r.norm() > 1e9 || !on_saddle_side(r) {
            confirmed = false;
            break;
        }
    }
    Ok(CornerDistance {
        kink_index,
        distance,
        measured_at: q,
        steps,
        confirmed,
    })
}

/// Locate the homoclinic corner in a one-parameter family: the zero of the
/// corner distance as `set(params, s)` varies s over [lo, hi]. Bisection
/// with secant acceleration to |delta s| <= 1e-10.
pub fn locate_corner<F>(
    base: &NormalFormParams,
    set: F,
    lo: f64,
    hi: f64,
    kink_index: usize,
) -> Result<f64>
where
    F: Fn(&NormalFormParams, f64) -> NormalFormParams,
{
    let dist = |s: f64| -> Result<f64> {
        corner_distance(&set(base, s), kink_index, 0).map(|c| c.distance)
    };
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = dist(lo)?;
    let fhi = dist(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket(lo, hi));
    }
    let mut fhi = fhi;
    for _ in 0..200 {
        if hi - lo <= 1e-10 {
            break;
        }
        let mut mid = if fhi != flo {
            lo - flo * (hi - lo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        let pad = 0.01 * (hi - lo);
        if !(mid > lo + pad && mid < hi - pad) {
            mid = 0.5 * (lo + hi);
        }
        let fm = dist(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One resolved point on the corner curve in the (tau_R, delta_R) plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CornerCurvePoint {
    pub tau_r: f64,
    pub delta_r: f64,
    /// Corner distance at the resolved point (zero up to the solve tol).
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct CornerCurve {
    pub points: Vec<CornerCurvePoint>,
    /// Set when continuation stopped early because a step failed to
    /// re-bracket the corner.
    pub stalled: bool,
}

/// Continue the corner curve over tau_R in [tau_lo, tau_hi] with `steps`
/// equal parameter steps, re-solving delta_R at each step from the
/// previous solution. Stalls (records and stops) if a step loses the
/// bracket even after shrinking.
pub fn trace_corner_curve(
    base: &NormalFormParams,
    tau_lo: f64,
    tau_hi: f64,
    steps: usize,
    delta_guess: f64,
    kink_index: usize,
) -> Result<CornerCurve> {
    if steps < 1 {
        return Err(Error::Precondition("need at least one step".into()));
    }
    let mut points = Vec::with_capacity(steps + 1);
    let mut stalled = false;
    let mut guess = delta_guess;
    for i in 0..=steps {
        let tau_r = tau_lo + (tau_hi - tau_lo) * i as f64 / steps as f64;
        let set = |b: &NormalFormParams, d: f64| {
            let mut p = *b;
            p.tau_r = tau_r;
            p.delta_r = d;
            p
        };
        let mut width = 0.1;
        let mut solved = None;
        for _ in 0..10 {
            match locate_corner(base, &set, guess - width, guess + width, kink_index) {
                Ok(d) => {
                    solved = Some(d);
                    break;
                }
                Err(Error::Bracket(..)) => width *= 2.0,
                Err(e) => return Err(e),
            }
        }
        match solved {
            Some(delta_r) => {
                let residual = corner_distance(&set(base, delta_r), kink_index, 0)?.distance;
                points.push(CornerCurvePoint { tau_r, delta_r, residual });
                guess = delta_r;
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    Ok(CornerCurve { points, stalled })
}

/// Crossing certificate for a normal-form map at a fixed parameter:
/// verifies, by explicit construction, that a single-round homoclinic
/// connection exists, i.e. that the continuation of the local unstable
/// segment through the switching line comes back across the local stable
/// segment. The construction is homogeneous of degree one in mu, so one
/// certificate covers the whole parameter ray of its sign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingCertificate {
    pub params: NormalFormParams,
    /// Fixed point used: the admissible direct saddle (both eigenvalues
    /// positive).
    pub fixed_point: Point,
    pub side: Side,
    pub gamma_s: f64,
    pub gamma_u: f64,
    /// Stable eigenline's crossing of the switching line.
    pub z_minus_1: Point,
    /// Image of the unstable eigenline's switching crossing.
    pub z_1: Point,
    /// Second image, taken with the piece on the other side.
    pub z_2: Point,
    /// Where [fixed_point, z_minus_1] and [z_1, z_2] cross, if they do.
    pub crossing_point: Option<Point>,
    pub crossing: bool,
}

/// Build the crossing certificate for `params` at its own mu.
pub fn crossing_certificate(params: &NormalFormParams) -> Result<CrossingCertificate> {
    use crate::normal_form::piece_fixed_point;
    let mut chosen = None;
    for side in [Side::L, Side::R] {
        let fp = piece_fixed_point(params, side)?;
        if !fp.admissible {
            continue;
        }
        if let Some((gu, gs)) = fp.eigenvalues {
            // direct saddle only: both eigenvalues positive
            if gu > 1.0 && gs > 0.0 && gs < 1.0 {
                chosen = Some((side, fp.point, gu, gs));
                break;
            }
        }
    }
    let (side, fp, gamma_u, gamma_s) = chosen.ok_or_else(|| {
        Error::NotASaddle("no admissible direct saddle on either piece".into())
    })?;
    let (tau, _delta) = params.trace_det(side);
    // eigenvector of [[tau,1],[-delta,0]] for eigenvalue g: (1, g - tau)
    let vs = Point::new(1.0, gamma_s - tau);
    let vu = Point::new(1.0, gamma_u - tau);
    let step = |q: Point, s: Side| params.matrix(s).mul_vec(q) + params.offset();
    // stable eigenline crossing of x = 0
    let z_minus_1 = fp + vs * (-fp.x / vs.x);
    // unstable eigenline crossing of x = 0, then one step with the
    // saddle's own piece (the crossing is on the boundary of both)
    let w0 = fp + vu * (-fp.x / vu.x);
    let z_1 = step(w0, side);
    // next step uses the piece on the other side of the switching line
    let other = match side {
        Side::L => Side::R,
        Side::R => Side::L,
    };
    let z_2 = step(z_1, other);
    let crossing_point = segment_crossing(fp, z_minus_1, z_1, z_2).map(|(pt, _, _, _)| pt);
    Ok(CrossingCertificate {
        params: *params,
        fixed_point: fp,
        side,
        gamma_s,
        gamma_u,
        z_minus_1,
        z_1,
        z_2,
        crossing_point,
        crossing: crossing_point.is_some(),
    })
}
