//! `corner-unfold`: analysis of homoclinic corners in piecewise-smooth
//! continuous planar maps.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 partial
//! results. `CORNER_UNFOLD_SEED` overrides the config seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use corner_unfold::config::{CurveSpec, ExperimentConfig};
use corner_unfold::emit::{
    self, RunManifest, SvgCanvas, TaskStatus,
};
use corner_unfold::error::{Error, Result};
use corner_unfold::geom::Point;
use corner_unfold::homoclinic::{corner_distance, locate_corner, trace_corner_curve};
use corner_unfold::manifolds::{grow_stable, grow_unstable};
use corner_unfold::modelock::scan_tongues;
use corner_unfold::normal_form::{find_saddle, skew_tent_fixed_points, skew_tent_iterate};
use corner_unfold::periodic::{
    extract_excursion, locate_single_round_bcb, solve_periodic, Branch,
};
use corner_unfold::pws::Itinerary;
use corner_unfold::unfolding::run_validation_suite;
use corner_unfold::NormalFormParams;

#[derive(Parser)]
#[command(name = "corner-unfold", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread count (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Also emit SVG plots
    #[arg(long, global = true)]
    plot: bool,
    /// Output directory (default "out")
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Forward orbit with transient removal
    Iterate,
    /// Orbit cloud plus invariant manifolds and marked periodic orbits
    Portrait,
    /// Single-round border-collision bifurcation values and scaling table
    Bifdiag,
    /// Tongue scan composed with homoclinic corner curves
    Sweep,
    /// Locate a homoclinic corner (and optionally continue its curve)
    Corner,
    /// Seeded validation of the unfolding asymptotics
    Validate,
    /// Mode-locking tongue scan only
    Tongues,
    /// Skew-tent reduction iteration
    Tent,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) => 2,
        Error::Budget(_) => 4,
        _ => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    let start = Instant::now();
    let config_path = cli.config.clone().unwrap_or_else(|| {
        eprintln!("error: --config <file> is required");
        std::process::exit(2);
    });
    let config_text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            std::process::exit(2);
        }
    };
    let config = match ExperimentConfig::from_json(&config_text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    if let Some(n) = cli.workers.or(config.workers) {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: worker pool: {e}");
            std::process::exit(2);
        }
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut manifest = RunManifest::new(config_text.as_bytes());

    let result = run(cli.command, &config, &out_dir, cli.plot, &mut manifest);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let manifest_json = manifest.to_json();
    if std::fs::create_dir_all(&out_dir)
        .and_then(|_| std::fs::write(out_dir.join("manifest.json"), &manifest_json))
        .is_err()
    {
        eprintln!("error: cannot write manifest");
        std::process::exit(2);
    }
    match result {
        Ok(true) => {}
        Ok(false) => std::process::exit(4),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

/// Runs one command; `Ok(true)` = complete, `Ok(false)` = partial results.
fn run(
    command: Command,
    config: &ExperimentConfig,
    out: &Path,
    plot: bool,
    manifest: &mut RunManifest,
) -> Result<bool> {
    match command {
        Command::Iterate => cmd_iterate(config, out, plot, manifest),
        Command::Portrait => cmd_portrait(config, out, plot, manifest),
        Command::Bifdiag => cmd_bifdiag(config, out, manifest),
        Command::Sweep => cmd_sweep(config, out, plot, manifest),
        Command::Corner => cmd_corner(config, out, manifest),
        Command::Validate => cmd_validate(config, out, manifest),
        Command::Tongues => cmd_tongues(config, out, plot, manifest),
        Command::Tent => cmd_tent(config, out, manifest),
    }
}

fn cmd_iterate(
    config: &ExperimentConfig,
    out: &Path,
    plot: bool,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config.iterate.clone().unwrap_or_default();
    let map = config.map_spec()?;
    let start = Point::new(settings.start.0, settings.start.1);
    let mut orbit = map.iterate(start, settings.steps, settings.escape_radius)?;
    let escaped = orbit.escaped.is_some();
    let keep = settings.transient.min(orbit.points.len().saturating_sub(1));
    orbit.points.drain(..keep);
    orbit.realized_itinerary.0.drain(..keep.min(orbit.realized_itinerary.0.len()));
    manifest.write_output(out, "orbit.csv", emit::orbit_csv(&orbit).as_bytes())?;
    if plot {
        let svg = orbit_svg(&orbit.points);
        manifest.write_output(out, "orbit.svg", svg.as_bytes())?;
    }
    let status = if escaped { TaskStatus::Partial } else { TaskStatus::Ok };
    manifest.record_task("iterate", status);
    Ok(!escaped)
}

fn orbit_svg(points: &[Point]) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (-1.0f64, 1.0f64, -1.0f64, 1.0f64);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let mut c = SvgCanvas::new(800.0, 600.0, (x0, x1), (y0, y1));
    c.points(points, "black", 0.8);
    c.finish()
}

fn cmd_portrait(
    config: &ExperimentConfig,
    out: &Path,
    plot: bool,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config.portrait.clone().unwrap_or_default();
    let params = config.normal_form()?;
    let map = config.map_spec()?;
    let start = Point::new(settings.orbit.start.0, settings.orbit.start.1);
    let mut orbit = map.iterate(start, settings.orbit.steps, settings.orbit.escape_radius)?;
    let escaped = orbit.escaped.is_some();
    let keep = settings
        .orbit
        .transient
        .min(orbit.points.len().saturating_sub(1));
    orbit.points.drain(..keep);
    orbit.realized_itinerary.0.drain(..keep.min(orbit.realized_itinerary.0.len()));
    manifest.write_output(out, "orbit.csv", emit::orbit_csv(&orbit).as_bytes())?;

    let unstable = grow_unstable(&params, &settings.budget)?;
    let stable = grow_stable(&params, &settings.budget)?;
    manifest.write_output(
        out,
        "manifold_unstable.csv",
        emit::manifold_csv(&unstable).as_bytes(),
    )?;
    manifest.write_output(
        out,
        "manifold_stable.csv",
        emit::manifold_csv(&stable).as_bytes(),
    )?;

    let mut marked: Vec<(String, Vec<Point>)> = Vec::new();
    for word in &settings.mark_orbits {
        let itin = Itinerary::from_word(word)?;
        let po = solve_periodic(&map, &itin)?;
        marked.push((word.clone(), po.points.clone()));
    }
    if !marked.is_empty() {
        let mut csv = String::from("word,i,x,y\n");
        for (word, pts) in &marked {
            for (i, p) in pts.iter().enumerate() {
                csv.push_str(&format!(
                    "{word},{i},{},{}\n",
                    emit::fmt_float(p.x),
                    emit::fmt_float(p.y)
                ));
            }
        }
        manifest.write_output(out, "marked_orbits.csv", csv.as_bytes())?;
    }

    if plot {
        let saddle = find_saddle(&params)?;
        let mut c = SvgCanvas::new(800.0, 600.0, (-10.0, 6.0), (-6.0, 8.0));
        c.points(&orbit.points, "black", 0.7);
        for m in [&unstable, &stable] {
            let color = if std::ptr::eq(m, &unstable) { "red" } else { "blue" };
            for chain in &m.chains {
                let pts: Vec<Point> = chain.vertices.iter().map(|v| v.point).collect();
                c.polyline(&pts, color, 1.0);
            }
        }
        for (_, pts) in &marked {
            c.points(pts, "green", 2.5);
        }
        c.points(&[saddle.point], "purple", 3.0);
        manifest.write_output(out, "portrait.svg", c.finish().as_bytes())?;
    }
    let status = if escaped { TaskStatus::Partial } else { TaskStatus::Ok };
    manifest.record_task("portrait", status);
    Ok(!escaped)
}

fn cmd_bifdiag(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config
        .bifdiag
        .clone()
        .ok_or_else(|| Error::Config("missing \"bifdiag\" block".into()))?;
    let base = config.normal_form()?;
    let corner = match settings.corner_delta {
        Some(d) => d,
        None => {
            let (lo, hi) = settings.corner_bracket.unwrap_or((1.25, 1.45));
            locate_corner(
                &base,
                |p, d| NormalFormParams::new(p.tau_l, p.delta_l, p.tau_r, d, p.mu),
                lo,
                hi,
                0,
            )?
        }
    };
    let at_corner = NormalFormParams::new(base.tau_l, base.delta_l, base.tau_r, corner, base.mu);
    let exc = extract_excursion(&at_corner)?;
    let (n_lo, n_hi) = settings.n_range;
    let mut points = Vec::new();
    let mut failures = 0usize;
    for n in n_lo..=n_hi {
        for branch in [Branch::X, Branch::Y] {
            match locate_single_round_bcb(&base, &exc, n, branch) {
                Ok(p) => points.push(p),
                Err(_) => failures += 1,
            }
        }
    }
    manifest.write_output(out, "bifdiag.csv", emit::bifdiag_csv(&points).as_bytes())?;

    // scaling table against the corner value
    let mut csv = String::from("n,branch,delta_n,gap,ratio\n");
    for branch in [Branch::X, Branch::Y] {
        let seq: Vec<_> = points.iter().filter(|p| p.branch == branch).collect();
        for w in seq.windows(2) {
            let gap = (w[0].xi - corner).abs();
            let next = (w[1].xi - corner).abs();
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                w[0].n,
                branch.label(),
                emit::fmt_float(w[0].xi),
                emit::fmt_float(gap),
                emit::fmt_float(gap / next)
            ));
        }
    }
    manifest.write_output(out, "scaling.csv", csv.as_bytes())?;
    let status = if failures == 0 { TaskStatus::Ok } else { TaskStatus::Partial };
    manifest.record_task("bifdiag", status);
    Ok(failures == 0)
}

fn trace_curves(
    base: &NormalFormParams,
    curves: &[CurveSpec],
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<(Vec<Vec<Point>>, bool)> {
    let mut polylines = Vec::new();
    let mut complete = true;
    for (idx, spec) in curves.iter().enumerate() {
        let curve = trace_corner_curve(
            base,
            spec.tau_range.0,
            spec.tau_range.1,
            spec.steps,
            spec.delta_guess,
            spec.kink_index,
        )?;
        complete &= !curve.stalled;
        manifest.write_output(
            out,
            &format!("corner_curve_{idx}.csv"),
            emit::corner_curve_csv(&curve).as_bytes(),
        )?;
        polylines.push(
            curve
                .points
                .iter()
                .map(|p| Point::new(p.tau_r, p.delta_r))
                .collect(),
        );
    }
    Ok((polylines, complete))
}

fn cmd_sweep(
    config: &ExperimentConfig,
    out: &Path,
    plot: bool,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("missing \"sweep\" block".into()))?;
    let base = config.normal_form()?;
    let grid = scan_tongues(&base, &settings.tongues)?;
    manifest.write_output(out, "tongues.csv", emit::tongue_csv(&grid).as_bytes())?;
    let (curves, complete) = trace_curves(&base, &settings.curves, out, manifest)?;
    if plot {
        let mut svg = emit::tongue_svg(&grid);
        // overlay the corner curves on the tongue raster
        let mut c = SvgCanvas::new(
            800.0,
            600.0,
            grid.tau_range,
            (grid.delta_range.0, grid.delta_range.1 * 1.08),
        );
        for pts in &curves {
            c.polyline(pts, "black", 1.5);
        }
        let overlay = c.finish();
        let body = overlay
            .splitn(3, '\n')
            .nth(2)
            .unwrap_or("")
            .replace("</svg>", "");
        svg = svg.replace("</svg>", &format!("{body}</svg>"));
        manifest.write_output(out, "sweep.svg", svg.as_bytes())?;
    }
    let status = if complete { TaskStatus::Ok } else { TaskStatus::Partial };
    manifest.record_task("sweep", status);
    Ok(complete)
}

fn cmd_corner(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config
        .corner
        .clone()
        .ok_or_else(|| Error::Config("missing \"corner\" block".into()))?;
    let base = config.normal_form()?;
    let delta = locate_corner(
        &base,
        |p, d| NormalFormParams::new(p.tau_l, p.delta_l, p.tau_r, d, p.mu),
        settings.bracket.0,
        settings.bracket.1,
        settings.kink_index,
    )?;
    let at = NormalFormParams::new(base.tau_l, base.delta_l, base.tau_r, delta, base.mu);
    let residual = corner_distance(&at, settings.kink_index, 0)?.distance;
    let report = serde_json::json!({
        "tau_R": base.tau_r,
        "delta_R_corner": delta,
        "kink_index": settings.kink_index,
        "residual": residual,
    });
    manifest.write_output(
        out,
        "corner.json",
        serde_json::to_string_pretty(&report).unwrap().as_bytes(),
    )?;
    let (_, complete) = trace_curves(&base, &settings.curves, out, manifest)?;
    let status = if complete { TaskStatus::Ok } else { TaskStatus::Partial };
    manifest.record_task("corner", status);
    Ok(complete)
}

fn cmd_validate(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config.validate.clone().unwrap_or_default();
    let report = run_validation_suite(
        config.effective_seed(),
        settings.draws,
        (settings.k_range.0 as u32, settings.k_range.1 as u32),
        settings.quadratic,
    )?;
    manifest.write_output(
        out,
        "validate.json",
        serde_json::to_string_pretty(&report).unwrap().as_bytes(),
    )?;
    // for normal-form configs also emit the transverse-crossing certificate
    if let Ok(params) = config.normal_form() {
        let cert = corner_unfold::homoclinic::crossing_certificate(&params)?;
        manifest.write_output(
            out,
            "certificate.json",
            serde_json::to_string_pretty(&cert).unwrap().as_bytes(),
        )?;
    }
    let status = if report.passed { TaskStatus::Ok } else { TaskStatus::Failed };
    manifest.record_task("validate", status);
    if !report.passed {
        return Err(Error::Precondition("validation suite failed".into()));
    }
    Ok(true)
}

fn cmd_tongues(
    config: &ExperimentConfig,
    out: &Path,
    plot: bool,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config.tongues.clone().unwrap_or_default();
    let base = config.normal_form()?;
    let grid = scan_tongues(&base, &settings)?;
    manifest.write_output(out, "tongues.csv", emit::tongue_csv(&grid).as_bytes())?;
    if plot {
        manifest.write_output(out, "tongues.svg", emit::tongue_svg(&grid).as_bytes())?;
    }
    manifest.record_task("tongues", TaskStatus::Ok);
    Ok(true)
}

fn cmd_tent(
    config: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let settings = config
        .tent
        .clone()
        .ok_or_else(|| Error::Config("missing \"tent\" block".into()))?;
    let xs = skew_tent_iterate(&settings.params, settings.x0, settings.steps);
    let mut csv = String::from("i,x\n");
    for (i, x) in xs.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", emit::fmt_float(*x)));
    }
    manifest.write_output(out, "tent.csv", csv.as_bytes())?;
    let fps = skew_tent_fixed_points(&settings.params);
    let report = serde_json::json!({
        "fixed_points": fps
            .iter()
            .map(|(x, adm)| serde_json::json!({"x": x, "admissible": adm}))
            .collect::<Vec<_>>(),
    });
    manifest.write_output(
        out,
        "tent.json",
        serde_json::to_string_pretty(&report).unwrap().as_bytes(),
    )?;
    manifest.record_task("tent", TaskStatus::Ok);
    Ok(true)
}
