//! Two-parameter scan of mode-locking tongues of the border-collision
//! normal form over the right-piece parameters (tau_R, delta_R).
//!
//! Rotational periodic solutions are coded by the rigid-rotation (Sturmian)
//! convention: for rotation number m/n in lowest terms, letter `i` of the
//! word is R exactly when `floor((i+1)m/n) > floor(i*m/n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::{Mat2, Point};
use crate::normal_form::{NormalFormParams, Side};
use crate::periodic::is_stable;
use crate::pws::Itinerary;

/// A rotational symbol sequence with rotation number `m / n` (coprime).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationalWord {
    pub m: usize,
    pub n: usize,
    pub word: Itinerary,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Builds the Sturmian word for rotation number `m / n`.
pub fn rotational_word(m: usize, n: usize) -> RotationalWord {
    let letters = (0..n)
        .map(|i| usize::from((i + 1) * m / n > i * m / n))
        .collect();
    RotationalWord {
        m,
        n,
        word: Itinerary(letters),
    }
}

/// Enumerates all rotational words with `1 <= m < n <= period_cap` and
/// `gcd(m, n) = 1`, in order of increasing period then numerator.
pub fn enumerate_rotational(period_cap: usize) -> Vec<RotationalWord> {
    let mut out = Vec::new();
    for n in 2..=period_cap {
        for m in 1..n {
            if gcd(m, n) == 1 {
                out.push(rotational_word(m, n));
            }
        }
    }
    out
}

/// One cell of a tongue scan: the parameter pair plus the mode-locked
/// orbit recorded there, if any.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TongueCell {
    pub i: usize,
    pub j: usize,
    pub tau_r: f64,
    pub delta_r: f64,
    /// Primitive period of the recorded stable rotational orbit (0 = none).
    pub period: usize,
    /// Numerator of the recorded rotation number (0 = none).
    pub numerator: usize,
    /// Admissibility margin of the recorded orbit.
    pub margin: f64,
    /// Spectral radius of the recorded orbit's multiplier matrix.
    pub spectral_radius: f64,
    /// One point of the recorded orbit (the word's starting phase).
    pub orbit_point: Point,
}

/// A rectangular scan over `(tau_R, delta_R)` with fixed left piece and mu.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TongueGrid {
    pub tau_range: (f64, f64),
    pub delta_range: (f64, f64),
    pub n_tau: usize,
    pub n_delta: usize,
    pub period_cap: usize,
    pub base: NormalFormParams,
    /// Row-major: index `j * n_tau + i` with `i` along tau_R.
    pub cells: Vec<TongueCell>,
}

impl TongueGrid {
    pub fn cell(&self, i: usize, j: usize) -> &TongueCell {
        &self.cells[j * self.n_tau + i]
    }

    /// Cells where a stable rotational orbit was recorded.
    pub fn occupied(&self) -> impl Iterator<Item = &TongueCell> {
        self.cells.iter().filter(|c| c.period > 0)
    }
}

/// Scan settings; `base` supplies `tau_l`, `delta_l`, `mu`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TongueScanSettings {
    pub tau_range: (f64, f64),
    pub delta_range: (f64, f64),
    pub n_tau: usize,
    pub n_delta: usize,
    pub period_cap: usize,
    /// Also test the single-round block words `L^(n-2) R R`.  The stable
    /// regions accumulating on the homoclinic corner point belong to this
    /// family, which the Sturmian floor rule does not generate (its two R
    /// letters are adjacent rather than evenly spread).
    pub include_single_round: bool,
}

impl Default for TongueScanSettings {
    fn default() -> Self {
        Self {
            tau_range: (-1.5, 1.5),
            delta_range: (0.0, 1.6),
            n_tau: 801,
            n_delta: 601,
            period_cap: 30,
            include_single_round: true,
        }
    }
}

/// Word list for a scan: all rotational words up to the cap, optionally
/// followed by the single-round block words `L^(n-2) R R` (from period 4;
/// the period-3 block word equals the Sturmian word for 2/3).
pub fn scan_word_list(period_cap: usize, include_single_round: bool) -> Vec<RotationalWord> {
    let mut words = enumerate_rotational(period_cap);
    if include_single_round {
        for n in 4..=period_cap {
            let mut letters = vec![0usize; n];
            letters[n - 2] = 1;
            letters[n - 1] = 1;
            words.push(RotationalWord {
                m: 2,
                n,
                word: Itinerary(letters),
            });
        }
    }
    words
}

/// Result of scanning one parameter pair against the word list.
fn scan_cell(
    base: &NormalFormParams,
    tau_r: f64,
    delta_r: f64,
    words: &[RotationalWord],
) -> (usize, usize, f64, f64, Point) {
    let params = NormalFormParams::new(base.tau_l, base.delta_l, tau_r, delta_r, base.mu);
    let m_l = params.matrix(Side::L);
    let m_r = params.matrix(Side::R);
    let b = params.offset();

    let mut best: Option<(usize, usize, f64, f64, Point)> = None;
    for rw in words {
        // Overlapping tongues display the highest period, so a shorter word
        // already recorded never blocks testing longer ones.
        let n = rw.n;
        let det = params.delta_l.powi((n - rw.m) as i32) * delta_r.powi(rw.m as i32);
        if det.abs() >= 1.0 {
            continue;
        }
        // Compose the affine map along the word: q -> M q + v.
        let mut mat = Mat2::identity();
        let mut v = Point::new(0.0, 0.0);
        for &letter in &rw.word.0 {
            let a = if letter == 0 { m_l } else { m_r };
            mat = a.mul(mat);
            v = a.mul_vec(v) + b;
        }
        if !is_stable(mat.trace(), mat.det()) {
            continue;
        }
        // Fixed point of the composition.
        let idm = Mat2::new(1.0 - mat.a, -mat.b, -mat.c, 1.0 - mat.d);
        let Some(inv) = idm.inverse() else { continue };
        let q0 = inv.mul_vec(v);
        if !q0.is_finite() {
            continue;
        }
        // Admissibility: each point must lie on its letter's side.
        let mut margin = f64::INFINITY;
        let mut q = q0;
        for &letter in &rw.word.0 {
            let m = if letter == 0 { -q.x } else { q.x };
            margin = margin.min(m);
            if margin < 0.0 {
                break;
            }
            let a = if letter == 0 { m_l } else { m_r };
            q = a.mul_vec(q) + b;
        }
        if margin < 0.0 {
            continue;
        }
        let rho = mat.spectral_radius();
        match best {
            Some((bn, _, _, _, _)) if bn >= n => {}
            _ => best = Some((n, rw.m, margin, rho, q0)),
        }
    }
    best.unwrap_or((0, 0, f64::NAN, f64::NAN, Point::new(f64::NAN, f64::NAN)))
}

/// Scans the `(tau_R, delta_R)` grid for stable rotational periodic orbits.
///
/// Cells are processed row-by-row in parallel; output ordering is by
/// `(row, column)` regardless of worker count.
pub fn scan_tongues(base: &NormalFormParams, settings: &TongueScanSettings) -> Result<TongueGrid> {
    let words = scan_word_list(settings.period_cap, settings.include_single_round);
    let (t0, t1) = settings.tau_range;
    let (d0, d1) = settings.delta_range;
    let nt = settings.n_tau.max(2);
    let nd = settings.n_delta.max(2);

    let rows: Vec<Vec<TongueCell>> = (0..nd)
        .into_par_iter()
        .map(|j| {
            let delta_r = d0 + (d1 - d0) * j as f64 / (nd - 1) as f64;
            (0..nt)
                .map(|i| {
                    let tau_r = t0 + (t1 - t0) * i as f64 / (nt - 1) as f64;
                    let (period, numerator, margin, rho, q0) =
                        scan_cell(base, tau_r, delta_r, &words);
                    TongueCell {
                        i,
                        j,
                        tau_r,
                        delta_r,
                        period,
                        numerator,
                        margin,
                        spectral_radius: rho,
                        orbit_point: q0,
                    }
                })
                .collect()
        })
        .collect();

    Ok(TongueGrid {
        tau_range: settings.tau_range,
        delta_range: settings.delta_range,
        n_tau: nt,
        n_delta: nd,
        period_cap: settings.period_cap,
        base: *base,
        cells: rows.into_iter().flatten().collect(),
    })
}

/// Checks a recorded cell by direct simulation: iterate the map for a
/// transient, then measure the distance from the final point to the
/// recorded orbit over one period.
pub fn verify_cell_by_simulation(
    base: &NormalFormParams,
    cell: &TongueCell,
    transient: usize,
    tol: f64,
) -> bool {
    if cell.period == 0 {
        return false;
    }
    let params = NormalFormParams::new(
        base.tau_l,
        base.delta_l,
        cell.tau_r,
        cell.delta_r,
        base.mu,
    );
    let m_l = params.matrix(Side::L);
    let m_r = params.matrix(Side::R);
    let b = params.offset();
    let step = |q: Point| -> Point {
        let a = if q.x <= 0.0 { m_l } else { m_r };
        a.mul_vec(q) + b
    };
    // Seed slightly off the orbit so convergence is genuinely tested; the
    // offset stays below the admissibility margin so the seed cannot start
    // on the wrong side of the switching manifold.
    let eps = (0.1 * cell.margin).clamp(1e-9, 1e-3);
    let mut q = cell.orbit_point + Point::new(eps, -eps);
    for _ in 0..transient {
        q = step(q);
        if !q.is_finite() || q.norm() > 1e6 {
            return false;
        }
    }
    // Distance to the recorded orbit: min over one period of the cycle.
    let mut p = cell.orbit_point;
    let mut dist = f64::INFINITY;
    for _ in 0..cell.period {
        dist = dist.min(q.dist(p));
        p = step(p);
    }
    dist < tol
}
