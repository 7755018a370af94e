//! CSV / JSON / SVG emission and the run manifest.
//!
//! CSV uses '.' decimal and full 17-significant-digit floats so outputs
//! are bitwise reproducible. SVG output is deliberately minimal
//! (polylines, point clouds, raster rects) so it diffs cleanly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::geom::Point;
use crate::homoclinic::CornerCurve;
use crate::manifolds::ManifoldPolyline;
use crate::modelock::TongueGrid;
use crate::periodic::BcbPoint;
use crate::pws::OrbitSegment;

/// Full-precision float formatting: 17 significant digits, '.' decimal.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Hex-encoded SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Orbit CSV with header `i,x,y,label`.
pub fn orbit_csv(orbit: &OrbitSegment) -> String {
    let mut s = String::from("i,x,y,label\n");
    let labels = &orbit.realized_itinerary.0;
    for (i, p) in orbit.points.iter().enumerate() {
        // the final point has no applied-piece label; reuse the last one
        let label = labels
            .get(i)
            .or(labels.last())
            .copied()
            .unwrap_or_default();
        writeln!(s, "{i},{},{},{label}", fmt_float(p.x), fmt_float(p.y)).unwrap();
    }
    s
}

/// Manifold polyline CSV with header `idx,x,y,is_kink,generation`;
/// `idx` restarts at 0 for each half-branch chain.
pub fn manifold_csv(manifold: &ManifoldPolyline) -> String {
    let mut s = String::from("idx,x,y,is_kink,generation\n");
    for chain in &manifold.chains {
        for (idx, v) in chain.vertices.iter().enumerate() {
            writeln!(
                s,
                "{idx},{},{},{},{}",
                fmt_float(v.point.x),
                fmt_float(v.point.y),
                u8::from(v.is_kink()),
                v.kink_generation
            )
            .unwrap();
        }
    }
    s
}

/// Bifurcation-diagram CSV with header `n,xi_bcb,branch,x_on_switching,trace,det`.
pub fn bifdiag_csv(points: &[BcbPoint]) -> String {
    let mut s = String::from("n,xi_bcb,branch,x_on_switching,trace,det\n");
    for p in points {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            p.n,
            fmt_float(p.xi),
            p.branch.label(),
            fmt_float(p.x_on_switching.x),
            fmt_float(p.trace),
            fmt_float(p.det)
        )
        .unwrap();
    }
    s
}

/// Corner-curve CSV with header `tau_R,delta_R,residual`.
pub fn corner_curve_csv(curve: &CornerCurve) -> String {
    let mut s = String::from("tau_R,delta_R,residual\n");
    for p in &curve.points {
        writeln!(
            s,
            "{},{},{}",
            fmt_float(p.tau_r),
            fmt_float(p.delta_r),
            fmt_float(p.residual)
        )
        .unwrap();
    }
    s
}

/// Tongue-grid CSV with header `i,j,tau_R,delta_R,period`; only occupied
/// cells are listed, in (row, column) order.
pub fn tongue_csv(grid: &TongueGrid) -> String {
    let mut s = String::from("i,j,tau_R,delta_R,period\n");
    for c in grid.occupied() {
        writeln!(
            s,
            "{},{},{},{},{}",
            c.i,
            c.j,
            fmt_float(c.tau_r),
            fmt_float(c.delta_r),
            c.period
        )
        .unwrap();
    }
    s
}

/// Minimal SVG canvas mapping a world rectangle onto a pixel viewport.
pub struct SvgCanvas {
    width: f64,
    height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

impl SvgCanvas {
    pub fn new(width: f64, height: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        SvgCanvas {
            width,
            height,
            x_range,
            y_range,
            body: String::new(),
        }
    }

    fn sx(&self, x: f64) -> f64 {
        (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * self.width
    }

    fn sy(&self, y: f64) -> f64 {
        // SVG y grows downward
        (self.y_range.1 - y) / (self.y_range.1 - self.y_range.0) * self.height
    }

    pub fn polyline(&mut self, points: &[Point], color: &str, stroke_width: f64) {
        if points.len() < 2 {
            return;
        }
        let mut attr = String::new();
        for p in points {
            write!(attr, "{:.2},{:.2} ", self.sx(p.x), self.sy(p.y)).unwrap();
        }
        writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{stroke_width}\"/>",
            attr.trim_end()
        )
        .unwrap();
    }

    pub fn points(&mut self, points: &[Point], color: &str, radius: f64) {
        for p in points {
            writeln!(
                self.body,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{radius}\" fill=\"{color}\"/>",
                self.sx(p.x),
                self.sy(p.y)
            )
            .unwrap();
        }
    }

    /// Filled rectangle in world coordinates (for raster cells).
    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, color: &str) {
        let x0 = self.sx(x);
        let y0 = self.sy(y + h);
        let pw = self.sx(x + w) - x0;
        let ph = self.sy(y) - y0;
        writeln!(
            self.body,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{pw:.2}\" height=\"{ph:.2}\" fill=\"{color}\"/>"
        )
        .unwrap();
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, content: &str) {
        writeln!(
            self.body,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"{size}\" font-family=\"monospace\">{content}</text>",
            self.sx(x),
            self.sy(y)
        )
        .unwrap();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// Deterministic palette mapping a period to a colour.
pub fn period_color(period: usize) -> String {
    // golden-angle hue stepping keeps adjacent periods distinguishable
    let hue = (period as f64 * 137.508) % 360.0;
    format!("hsl({hue:.1},75%,50%)")
}

/// Renders a tongue grid as a raster of coloured cells with a legend.
pub fn tongue_svg(grid: &TongueGrid) -> String {
    let mut canvas = SvgCanvas::new(
        800.0,
        600.0,
        grid.tau_range,
        (grid.delta_range.0, grid.delta_range.1 * 1.08),
    );
    let cw = (grid.tau_range.1 - grid.tau_range.0) / (grid.n_tau - 1) as f64;
    let ch = (grid.delta_range.1 - grid.delta_range.0) / (grid.n_delta - 1) as f64;
    let mut periods_seen = std::collections::BTreeSet::new();
    for c in grid.occupied() {
        canvas.rect(
            c.tau_r - 0.5 * cw,
            c.delta_r - 0.5 * ch,
            cw,
            ch,
            &period_color(c.period),
        );
        periods_seen.insert(c.period);
    }
    // legend along the top margin
    let y = grid.delta_range.1 * 1.04;
    let span = grid.tau_range.1 - grid.tau_range.0;
    for (k, period) in periods_seen.iter().enumerate() {
        let x = grid.tau_range.0 + span * k as f64 / (periods_seen.len().max(1) as f64);
        canvas.rect(x, y, span * 0.012, ch * 4.0, &period_color(*period));
        canvas.text(x + span * 0.015, y, 11.0, &period.to_string());
    }
    canvas.finish()
}

/// Status of one task inside a run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    Failed,
    Partial,
}

/// Record of a run: what was asked, what was produced, and checksums for
/// every emitted artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub wall_time_s: f64,
    pub tasks: BTreeMap<String, TaskStatus>,
    /// artifact path -> SHA-256 of its bytes
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config_bytes: &[u8]) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(config_bytes),
            wall_time_s: 0.0,
            tasks: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Writes `content` to `dir/name`, recording its checksum.
    pub fn write_output(&mut self, dir: &Path, name: &str, content: &[u8]) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), content)?;
        self.outputs.insert(name.to_string(), sha256_hex(content));
        Ok(())
    }

    pub fn record_task(&mut self, name: &str, status: TaskStatus) {
        self.tasks.insert(name.to_string(), status);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::NormalFormParams;

    #[test]
    fn float_formatting_round_trips_exactly() {
        for x in [
            0.0,
            -1.0,
            1.35,
            std::f64::consts::PI,
            1.0e-300,
            -3.897366596101028,
            f64::MAX,
        ] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(!s.contains(','));
        }
    }

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn orbit_csv_has_header_and_one_row_per_point() {
        let params = NormalFormParams::new(2.0, 0.75, -0.6, 1.2, 1.0);
        let orbit = params.to_map().iterate(Point::new(0.0, 0.0), 10, 1e6).unwrap();
        let csv = orbit_csv(&orbit);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "i,x,y,label");
        assert_eq!(lines.len(), 1 + orbit.points.len());
        // zero iterations: header only
        let empty = params.to_map().iterate(Point::new(0.0, 0.0), 0, 1e6).unwrap();
        let csv = orbit_csv(&empty);
        assert_eq!(csv.lines().count(), 1 + empty.points.len());
    }

    #[test]
    fn svg_canvas_emits_wellformed_minimal_svg() {
        let mut c = SvgCanvas::new(100.0, 80.0, (0.0, 1.0), (0.0, 1.0));
        c.polyline(
            &[Point::new(0.0, 0.0), Point::new(1.0, 1.0)],
            "black",
            1.0,
        );
        c.points(&[Point::new(0.5, 0.5)], "red", 2.0);
        c.rect(0.1, 0.1, 0.2, 0.2, "blue");
        c.text(0.0, 0.9, 10.0, "legend");
        let svg = c.finish();
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        for tag in ["<polyline", "<circle", "<rect", "<text"] {
            assert!(svg.contains(tag), "missing {tag}");
        }
    }

    #[test]
    fn manifest_records_outputs_with_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new(b"{}");
        m.write_output(dir.path(), "a.csv", b"i,x\n0,1\n").unwrap();
        m.record_task("iterate", TaskStatus::Ok);
        assert_eq!(m.outputs["a.csv"], sha256_hex(b"i,x\n0,1\n"));
        let json = m.to_json();
        let back: RunManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.outputs, m.outputs);
        assert_eq!(back.tasks["iterate"], TaskStatus::Ok);
    }
}
