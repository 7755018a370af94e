//! Periodic orbits of piecewise-affine maps: direct solves from symbolic
//! itineraries, admissibility, stability, and border-collision location.

use crate::error::{Error, Result};
use crate::geom::{Mat2, Point};
use crate::normal_form::{find_saddle, NormalFormParams};
use crate::pws::{Itinerary, PieceMap, PwsMapSpec};
use rayon::prelude::*;
use std::collections::BTreeSet;

/// A periodic orbit obtained by solving the affine composition along a
/// prescribed itinerary.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub itinerary: Itinerary,
    pub points: Vec<Point>,
    pub trace: f64,
    pub det: f64,
    /// Real eigenvalue pair of the composed linear part, if real.
    pub eigenvalues: Option<(f64, f64)>,
    /// Minimum over the orbit of the margin of each point in its assigned
    /// piece; nonnegative iff the orbit is admissible.
    pub admissibility_margin: f64,
    pub stable: bool,
}

impl PeriodicOrbit {
    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn admissible(&self) -> bool {
        self.admissibility_margin >= 0.0
    }

    pub fn spectral_radius(&self) -> f64 {
        match self.eigenvalues {
            Some((g1, _)) => g1.abs(),
            None => self.det.abs().sqrt(),
        }
    }
}

/// Both eigenvalues strictly inside the unit circle, via the Jury
/// conditions |det| < 1 and |trace| < 1 + det.
pub fn is_stable(trace: f64, det: f64) -> bool {
    det.abs() < 1.0 && trace.abs() < 1.0 + det
}

fn affine_of(map: &PwsMapSpec, label: usize) -> Result<(Mat2, Point)> {
    let piece = map
        .pieces
        .get(label)
        .ok_or(Error::BadLabel(label, map.pieces.len()))?;
    match &piece.map {
        PieceMap::Affine { m, b } => Ok((*m, *b)),
        PieceMap::Polynomial { .. } => Err(Error::NotAffine(label)),
    }
}

/// Solve the fixed point of the affine composition along `itin` and return
/// the full orbit with stability and admissibility data. Region membership
/// is *checked* (recorded as the admissibility margin) but not enforced.
pub fn solve_periodic(map: &PwsMapSpec, itin: &Itinerary) -> Result<PeriodicOrbit> {
    if itin.0.is_empty() {
        return Err(Error::Precondition("empty itinerary".into()));
    }
    let mut m = Mat2::identity();
    let mut v = Point::new(0.0, 0.0);
    for &label in &itin.0 {
        let (a, b) = affine_of(map, label)?;
        m = a.mul(m);
        v = a.mul_vec(v) + b;
    }
    // (I - M) x = v
    let imm = Mat2::new(1.0 - m.a, -m.b, -m.c, 1.0 - m.d);
    let inv = imm.inverse().ok_or(Error::NonUniqueOrbit)?;
    let x0 = inv.mul_vec(v);
    if !x0.is_finite() {
        return Err(Error::NonUniqueOrbit);
    }
    let mut points = Vec::with_capacity(itin.0.len());
    let mut margin = f64::INFINITY;
    let mut p = x0;
    for &label in &itin.0 {
        margin = margin.min(map.margin_of(label, p));
        points.push(p);
        let (a, b) = affine_of(map, label)?;
        p = a.mul_vec(p) + b;
    }
    Ok(PeriodicOrbit {
        itinerary: itin.clone(),
        points,
        trace: m.trace(),
        det: m.det(),
        eigenvalues: m.real_eigenvalues(),
        admissibility_margin: margin,
        stable: is_stable(m.trace(), m.det()),
    })
}

/// The excursion of a single-round homoclinic itinerary: the finite word
/// the orbit realizes while outside a neighborhood of the saddle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcursionWord {
    pub letters: Vec<usize>,
    /// Index (into `letters`) of the step whose letter gets toggled to form
    /// the second branch of the pair.
    pub split_index: usize,
    pub saddle_letter: usize,
}

impl ExcursionWord {
    /// r + s: steps after leaving the unstable eigenline until returning
    /// along the stable one.
    pub fn length(&self) -> usize {
        self.letters.len()
    }
}

/// Identify the excursion for a normal-form saddle whose unstable manifold
/// crosses the switching line. Starts one step before the eigenline's
/// switching crossing and follows the orbit until it first re-enters the
/// saddle's half-plane after leaving the saddle piece. The split index is
/// the step closest to the switching manifold: the point that collides
/// with the boundary at the bifurcation, whose symbol distinguishes the
/// two branches of the pair.
pub fn extract_excursion(params: &NormalFormParams) -> Result<ExcursionWord> {
    let saddle = find_saddle(params)?;
    let map = params.to_map();
    let saddle_label = saddle.side.label();
    // unstable eigenline crossing with the switching manifold x = 0
    let t = -saddle.point.x / saddle.v_u.x;
    if !t.is_finite() {
        return Err(Error::Precondition(
            "unstable eigenvector is parallel to the switching line".into(),
        ));
    }
    let crossing = saddle.point + saddle.v_u * t;
    // one preimage along the saddle piece: last point of the excursion's
    // approach that still carries the saddle symbol unambiguously
    let pre = crate::normal_form::invert_piece(params, saddle.side, crossing)?;
    let on_saddle_side = |p: Point| match saddle.side {
        crate::normal_form::Side::L => p.x <= 0.0,
        crate::normal_form::Side::R => p.x >= 0.0,
    };
    let mut letters = Vec::new();
    let mut split_index = 0;
    let mut best = f64::INFINITY;
    let mut left_saddle = false;
    let mut p = pre;
    for step in 0..64 {
        if left_saddle && on_saddle_side(p) {
            return Ok(ExcursionWord {
                letters,
                split_index,
                saddle_letter: saddle_label,
            });
        }
        let label = map.tie_break_label(p)?;
        if p.x.abs() < best {
            best = p.x.abs();
            split_index = step;
        }
        if label != saddle_label {
            left_saddle = true;
        }
        letters.push(label);
        p = map.pieces[label].map.eval(p);
    }
    Err(Error::Budget("excursion did not close within 64 steps".into()))
}

/// The two single-round branches born together at a border-collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    X,
    Y,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::X => "X",
            Branch::Y => "Y",
        }
    }
}

/// Single-round itinerary of period `n`: `k` saddle letters followed by the
/// excursion. Branch Y toggles the letter at the excursion's split index.
pub fn single_round_itinerary(exc: &ExcursionWord, n: usize, branch: Branch) -> Result<Itinerary> {
    let len = exc.length();
    if n <= len {
        return Err(Error::Precondition(format!(
            "period {n} is too short for an excursion of length {len}"
        )));
    }
    let k = n - len;
    let mut letters = vec![exc.saddle_letter; k];
    let mut body = exc.letters.clone();
    if branch == Branch::Y {
        let l = body[exc.split_index];
        body[exc.split_index] = 1 - l;
    }
    letters.extend(body);
    Ok(Itinerary(letters))
}

/// Border-collision bifurcation of a single-round branch: the parameter
/// value at which the orbit's admissibility margin vanishes.
#[derive(Debug, Clone)]
pub struct BcbPoint {
    pub n: usize,
    pub branch: Branch,
    pub xi: f64,
    /// Orbit point closest to the switching manifold at the collision.
    pub x_on_switching: Point,
    pub trace: f64,
    pub det: f64,
}

/// Locate a zero of `margin(xi)` by bracket expansion from `xi0` followed
/// by bisection with secant acceleration, to |delta xi| <= 1e-12.
pub fn locate_bcb<F>(margin: F, xi0: f64, step0: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    locate_bcb_directed(margin, xi0, step0, 0.0)
}

/// As [`locate_bcb`], but when `direction` is nonzero the bracket only
/// expands toward its sign, so the nearest root on that side is found.
pub fn locate_bcb_directed<F>(
    mut margin: F,
    xi0: f64,
    step0: f64,
    direction: f64,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = margin(xi0)?;
    if f0 == 0.0 {
        return Ok(xi0);
    }
    let mut step = step0;
    let (mut lo, mut hi, mut flo, mut fhi) = {
        let mut found = None;
        for _ in 0..64 {
            let mut candidates = Vec::with_capacity(2);
            if direction <= 0.0 {
                candidates.push(xi0 - step);
            }
            if direction >= 0.0 {
                candidates.push(xi0 + step);
            }
            for xi in candidates {
                if let Ok(f) = margin(xi) {
                    if f == 0.0 {
                        return Ok(xi);
                    }
                    if f.signum() != f0.signum() && found.is_none() {
                        found = Some(if xi < xi0 {
                            (xi, xi0, f, f0)
                        } else {
                            (xi0, xi, f0, f)
                        });
                    }
                }
            }
            if found.is_some() {
                break;
            }
            step *= 2.0;
        }
        found.ok_or(Error::Bracket(xi0 - step, xi0 + step))?
    };
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        // secant proposal, guarded to stay within the bracket interior
        let mut mid = if fhi != flo {
            lo - flo * (hi - lo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        let pad = 0.01 * (hi - lo);
        if !(mid > lo + pad && mid < hi - pad) {
            mid = 0.5 * (lo + hi);
        }
        let fm = margin(mid)?;
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

/// Locate the border-collision of the single-round branch of period `n` as
/// `delta_R` varies, for the normal form. Other parameters are held fixed.
/// (`mu` only rescales the normal form, so it cannot serve as the
/// bifurcation parameter.)
pub fn locate_single_round_bcb(
    base: &NormalFormParams,
    exc: &ExcursionWord,
    n: usize,
    branch: Branch,
) -> Result<BcbPoint> {
    let itin = single_round_itinerary(exc, n, branch)?;
    let orbit_at = |delta_r: f64| -> Result<PeriodicOrbit> {
        let mut p = *base;
        p.delta_r = delta_r;
        solve_periodic(&p.to_map(), &itin)
    };
    // the branch is admissible at the base parameters; its birth is the
    // nearest margin zero below
    let xi = locate_bcb_directed(
        |d| orbit_at(d).map(|o| o.admissibility_margin),
        base.delta_r,
        1e-3,
        -1.0,
    )?;
    let orbit = orbit_at(xi)?;
    let x_on_switching = orbit
        .points
        .iter()
        .copied()
        .min_by(|a, b| a.x.abs().partial_cmp(&b.x.abs()).unwrap())
        .unwrap();
    Ok(BcbPoint {
        n,
        branch,
        xi,
        x_on_switching,
        trace: orbit.trace,
        det: orbit.det,
    })
}

/// A report row from the instability scan.
#[derive(Debug, Clone)]
pub struct OrbitReport {
    pub itinerary: Itinerary,
    pub period: usize,
    pub spectral_radius: f64,
    pub admissibility_margin: f64,
    pub point: Point,
}


/// Solve, filter to admissible, and sort a list of candidate words.
fn solve_and_report(map: &PwsMapSpec, words: &[Itinerary]) -> Vec<OrbitReport> {
    let mut reports: Vec<OrbitReport> = words
        .par_iter()
        .filter_map(|itin| {
            let orbit = solve_periodic(map, itin).ok()?;
            if !orbit.admissible() {
                return None;
            }
            Some(OrbitReport {
                itinerary: itin.clone(),
                period: orbit.period(),
                spectral_radius: orbit.spectral_radius(),
                admissibility_margin: orbit.admissibility_margin,
                point: orbit.points[0],
            })
        })
        .collect();
    reports.sort_by(|a, b| {
        a.period
            .cmp(&b.period)
            .then_with(|| a.itinerary.0.cmp(&b.itinerary.0))
    });
    reports
}

/// Enumerate canonical two-letter words with at most `max_rounds` maximal
/// R-blocks per cyclic period, up to `max_period`. A "round" is one
/// excursion through the non-saddle piece, so round counts of 1 and 2
/// cover single- and double-round orbits without the exponential cost of
/// a full word enumeration.
pub fn enumerate_round_words(max_period: usize, max_rounds: usize) -> Vec<Itinerary> {
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut words = Vec::new();
    let mut push = |letters: Vec<usize>| {
        let q = letters.len();
        // primitive words only (skip powers of a shorter word)
        if (1..q).any(|p| {
            q % p == 0
                && letters
                    .iter()
                    .cycle()
                    .take(q)
                    .eq(letters.iter().cycle().skip(p).take(q))
        }) {
            return;
        }
        let canon = (0..q)
            .map(|r| {
                let mut rot = letters[r..].to_vec();
                rot.extend_from_slice(&letters[..r]);
                rot
            })
            .min()
            .unwrap();
        if seen.insert(canon.clone()) {
            words.push(Itinerary(canon));
        }
    };
    // fixed points of each piece
    push(vec![0]);
    push(vec![1]);
    if max_rounds >= 1 {
        for n in 2..=max_period {
            for b in 1..n {
                let mut w = vec![0usize; n - b];
                w.extend(std::iter::repeat(1).take(b));
                push(w);
            }
        }
    }
    if max_rounds >= 2 {
        for n in 4..=max_period {
            for a1 in 1..n {
                for b1 in 1..n - a1 {
                    for a2 in 1..n - a1 - b1 {
                        let b2 = n - a1 - b1 - a2;
                        let mut w = vec![0usize; a1];
                        w.extend(std::iter::repeat(1).take(b1));
                        w.extend(std::iter::repeat(0).take(a2));
                        w.extend(std::iter::repeat(1).take(b2));
                        push(w);
                    }
                }
            }
        }
    }
    words
}

/// Instability scan over single- and multi-round words up to `max_rounds`
/// excursions and period `max_period`.
pub fn scan_round_instability(
    map: &PwsMapSpec,
    max_period: usize,
    max_rounds: usize,
) -> Result<Vec<OrbitReport>> {
    let words = enumerate_round_words(max_period, max_rounds);
    Ok(solve_and_report(map, &words))
}

/// Enumerate all admissible periodic orbits of period <= `max_q` (one
/// representative per cyclic class) and report their spectral radii.
pub fn scan_periodic_instability(map: &PwsMapSpec, max_q: usize) -> Result<Vec<OrbitReport>> {
    let n_pieces = map.pieces.len();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut words: Vec<Itinerary> = Vec::new();
    for q in 1..=max_q {
        let total = n_pieces.pow(q as u32);
        for code in 0..total {
            let mut w = Vec::with_capacity(q);
            let mut c = code;
            for _ in 0..q {
                w.push(c % n_pieces);
                c /= n_pieces;
            }
            // primitive words only; one representative per cyclic class
            if (1..q).any(|p| q % p == 0 && w.iter().cycle().take(q).eq(w.iter().cycle().skip(p).take(q))) {
                continue;
            }
            let canon = (0..q)
                .map(|r| {
                    let mut rot = w[r..].to_vec();
                    rot.extend_from_slice(&w[..r]);
                    rot
                })
                .min()
                .unwrap();
            if seen.insert(canon.clone()) {
                words.push(Itinerary(canon));
            }
        }
    }
    Ok(solve_and_report(map, &words))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_study(delta_r: f64) -> NormalFormParams {
        NormalFormParams::new(2.0, 0.75, -0.6, delta_r, 1.0)
    }

    #[test]
    fn fixed_point_as_period_one_orbit() {
        let map = case_study(1.45).to_map();
        let orbit = solve_periodic(&map, &Itinerary::from_word("L").unwrap()).unwrap();
        assert!((orbit.points[0].x + 4.0).abs() < 1e-12);
        assert!((orbit.points[0].y - 3.0).abs() < 1e-12);
        assert!(orbit.admissible());
        assert!(!orbit.stable);
    }

    #[test]
    fn cyclic_rotation_gives_the_same_orbit() {
        let map = case_study(1.45).to_map();
        let itin = Itinerary::from_word("LLLLLRLR").unwrap();
        let a = solve_periodic(&map, &itin).unwrap();
        let b = solve_periodic(&map, &itin.rotated(3)).unwrap();
        assert!((a.trace - b.trace).abs() < 1e-9);
        assert!((a.det - b.det).abs() < 1e-12);
        // b's orbit is a's orbit shifted by 3
        assert!(a.points[3].dist(b.points[0]) < 1e-8);
    }

    #[test]
    fn determinant_is_the_product_of_piece_determinants() {
        let map = case_study(1.45).to_map();
        let itin = Itinerary::from_word("LLRLRRL").unwrap();
        let orbit = solve_periodic(&map, &itin).unwrap();
        // 4 L's and 3 R's
        let expect = 0.75f64.powi(4) * 1.45f64.powi(3);
        assert!((orbit.det - expect).abs() < 1e-10 * expect.abs().max(1.0));
    }

    #[test]
    fn eigenvalue_one_composition_is_rejected() {
        // identity pieces: I - M singular
        let p = NormalFormParams::new(0.0, -1.0, 0.0, -1.0, 0.0);
        // M^2 = -I... use a crafted case: tau=2, delta=1 gives eigenvalue 1
        let p2 = NormalFormParams::new(2.0, 1.0, 2.0, 1.0, 0.5);
        let err = solve_periodic(&p2.to_map(), &Itinerary::from_word("L").unwrap());
        assert!(matches!(err, Err(Error::NonUniqueOrbit)));
        let _ = p;
    }

    #[test]
    fn excursion_of_the_case_study() {
        let exc = extract_excursion(&case_study(1.45)).unwrap();
        assert_eq!(exc.saddle_letter, 0);
        assert_eq!(exc.letters, vec![0, 0, 1]);
        // the split is at the eigenline's switching crossing
        assert_eq!(exc.split_index, 1);
    }

    #[test]
    fn single_round_pair_of_period_eight() {
        let exc = extract_excursion(&case_study(1.45)).unwrap();
        let x = single_round_itinerary(&exc, 8, Branch::X).unwrap();
        let y = single_round_itinerary(&exc, 8, Branch::Y).unwrap();
        assert_eq!(x.to_string(), "LLLLLLLR");
        assert_eq!(y.to_string(), "LLLLLLRR");
    }

    #[test]
    fn period_eight_pair_exists_and_is_unstable_at_delta_145() {
        let map = case_study(1.45).to_map();
        for word in ["LLLLLLLR", "LLLLLLRR"] {
            let orbit = solve_periodic(&map, &Itinerary::from_word(word).unwrap()).unwrap();
            assert!(orbit.admissible(), "{word} inadmissible: {}", orbit.admissibility_margin);
            assert!(orbit.spectral_radius() > 1.0, "{word} not unstable");
        }
    }

    #[test]
    fn bcb_location_brackets_and_converges() {
        // margin linear in xi with root at 0.3
        let xi = locate_bcb(|x| Ok(x - 0.3), 0.0, 1e-3).unwrap();
        assert!((xi - 0.3).abs() < 1e-11);
        // decreasing margin
        let xi = locate_bcb(|x| Ok(2.0 - x * x), 0.0, 1e-3).unwrap();
        assert!((xi.abs() - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn single_round_bcbs_accumulate_on_the_corner() {
        let base = case_study(1.45);
        let exc = extract_excursion(&base).unwrap();
        let b8 = locate_single_round_bcb(&base, &exc, 8, Branch::X).unwrap();
        let b9 = locate_single_round_bcb(&base, &exc, 9, Branch::X).unwrap();
        // the collision point sits on the switching manifold
        assert!(b8.x_on_switching.x.abs() < 1e-7, "x = {}", b8.x_on_switching.x);
        assert!(b9.x_on_switching.x.abs() < 1e-7, "x = {}", b9.x_on_switching.x);
        // births approach the corner value 1.35 from below: the pair of
        // period n + 1 appears later (closer to the corner) than period n
        assert!(b8.xi < b9.xi && b9.xi < 1.35, "b8 {} b9 {}", b8.xi, b9.xi);
        // the gaps to the corner shrink roughly geometrically
        let r = (1.35 - b8.xi) / (1.35 - b9.xi);
        assert!(r > 1.1 && r < 1.6, "gap ratio {r}");
    }

    #[test]
    fn instability_scan_finds_only_unstable_orbits_at_delta_145() {
        let map = case_study(1.45).to_map();
        let reports = scan_periodic_instability(&map, 12).unwrap();
        assert!(reports.len() >= 10, "only {} admissible orbits", reports.len());
        for r in &reports {
            assert!(
                r.spectral_radius > 1.0,
                "{} has spectral radius {}",
                r.itinerary,
                r.spectral_radius
            );
        }
    }

    #[test]
    fn scan_is_deterministic_across_thread_counts() {
        let map = case_study(1.45).to_map();
        let a = scan_periodic_instability(&map, 8).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let b = pool.install(|| scan_periodic_instability(&map, 8).unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.itinerary.0, y.itinerary.0);
            assert_eq!(x.spectral_radius.to_bits(), y.spectral_radius.to_bits());
        }
    }
    #[test]
    fn round_word_enumeration_is_canonical_and_complete() {
        let words = enumerate_round_words(6, 2);
        // all canonical (minimal rotation), primitive, and distinct
        let mut seen = std::collections::BTreeSet::new();
        for w in &words {
            for r in 1..w.len() {
                assert!(w.0 <= w.rotated(r).0, "not canonical: {w}");
            }
            assert!(seen.insert(w.0.clone()));
        }
        // single-round words L^(n-b) R^b for n <= 6 all present
        for n in 2..=6usize {
            for b in 1..n {
                let mut v = vec![0; n - b];
                v.extend(std::iter::repeat(1).take(b));
                let canon = (0..n)
                    .map(|r| Itinerary(v.clone()).rotated(r).0)
                    .min()
                    .unwrap();
                assert!(seen.contains(&canon), "missing {canon:?}");
            }
        }
        // restricted scan at the corner params agrees with the full scan
        // at small periods (every word there has at most two R-blocks)
        let map = case_study(1.35).to_map();
        let full = scan_periodic_instability(&map, 6).unwrap();
        let restricted = scan_round_instability(&map, 6, 2).unwrap();
        let f: Vec<_> = full.iter().map(|r| r.itinerary.0.clone()).collect();
        for w in f {
            let blocks = {
                let v = &w;
                let n = v.len();
                (0..n).filter(|&i| v[i] == 1 && v[(i + n - 1) % n] == 0).count()
            };
            if blocks <= 2 {
                assert!(
                    restricted.iter().any(|r| r.itinerary.0 == w),
                    "restricted scan missing {w:?}"
                );
            }
        }
        assert!(!restricted.is_empty());
    }

}
