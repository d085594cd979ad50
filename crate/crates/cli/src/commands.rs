//! One function per pipeline. Each validates its inputs, computes everything
//! in memory, and only then are files written, so a failed run leaves nothing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use wds_core::angle::Angle;
use wds_core::circle::DenjoyMap;
use wds_core::error::WdsError;
use wds_core::horseshoe::containment::theorem_run;
use wds_core::horseshoe::embed::{embed_wds, Coder};
use wds_core::horseshoe::manifold::ManifoldKind;
use wds_core::horseshoe::{build_horseshoe, saddle_charts, HorseshoeCertificate, HorseshoeParams};
use wds_core::symbolic::{complexity, estimate_rotation_interval, factor_set, sturmian_window, word_to_string};
use wds_core::twist::{
    assemble_am_set, hyperbolicity_report, minimize_periodic_seeded, periodic_points, standard_family, Branch, Role,
};
use wds_core::wds::{build_wds, cylinder_order, gap_orbit_count, graph_hausdorff, rotation_class};

use crate::config::{parse_rational, RunConfig};
use crate::error::{compute, CliError};
use crate::manifest::{report, ArtifactWriter, Check, RunManifest, Summary, VERSION};
use crate::svg::{Svg, View};

/// Files and checks produced by a pipeline, not yet on disk.
#[derive(Default)]
pub struct Output {
    files: Vec<(String, Vec<u8>)>,
    pub checks: Vec<Check>,
}

impl Output {
    fn text(&mut self, name: &str, s: String) {
        self.files.push((name.to_string(), s.into_bytes()));
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Format { path: name.into(), message: e.to_string() })?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Format { path: name.into(), message: e.to_string() })?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Format { path: name.into(), message: e.to_string() })?;
        self.text(name, s + "\n");
        Ok(())
    }

    fn check(&mut self, name: &str, passed: bool, value: f64, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, value, detail));
    }
}

fn invalid(cfg: &RunConfig, key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}.{key}: {msg}", cfg.command))
}

/// Runs the configured pipeline and writes its artifacts and manifest.
pub fn run(cfg: &RunConfig) -> Result<(PathBuf, RunManifest), CliError> {
    let start = Instant::now();
    let out = match cfg.command.as_str() {
        "sturmian" => sturmian(cfg)?,
        "denjoy" => denjoy(cfg)?,
        "wds-family" => wds_family(cfg)?,
        "am-compute" => am_compute(cfg)?,
        "horseshoe-build" => horseshoe(cfg)?,
        "verify-containment" => containment(cfg)?,
        other => return Err(CliError::Validation(format!("unknown command {other}"))),
    };
    let mut w = ArtifactWriter::create(&cfg.out)?;
    for (name, bytes) in &out.files {
        w.write(name, bytes)?;
    }
    w.finish(RunManifest {
        command: cfg.command.clone(),
        version: VERSION.to_string(),
        config: cfg.raw.clone(),
        seed: cfg.seed,
        files: Vec::new(),
        checks: out.checks,
        duration_secs: start.elapsed().as_secs_f64(),
    })
}

/// Verifies `manifests` and writes `summary.md` and `index.svg` into `out`.
pub fn run_report(manifests: &[PathBuf], out: &Path) -> Result<(PathBuf, Summary), CliError> {
    let start = Instant::now();
    let summary = report(manifests)?;
    let mut w = ArtifactWriter::create(out)?;
    w.write("summary.md", summary.to_text())?;
    w.write("index.svg", summary.to_svg())?;
    w.write_json("summary.json", &summary)?;
    let config = manifests.iter().enumerate().map(|(i, p)| (format!("manifest.{i}"), p.display().to_string())).collect();
    let (path, _) = w.finish(RunManifest {
        command: "report".into(),
        version: VERSION.to_string(),
        config,
        seed: 0,
        files: Vec::new(),
        checks: Vec::new(),
        duration_secs: start.elapsed().as_secs_f64(),
    })?;
    Ok((path, summary))
}

#[derive(Serialize)]
struct FactorRow {
    n: usize,
    word: String,
}

#[derive(Serialize)]
struct ComplexityRow {
    n: usize,
    complexity: usize,
    expected: usize,
    matches: bool,
}

fn sturmian(cfg: &RunConfig) -> Result<Output, CliError> {
    let alpha = cfg.angle("alpha")?;
    let theta = cfg.angle("theta")?;
    let radius = cfg.count("radius")?;
    if radius == 0 {
        return Err(invalid(cfg, "radius", "must be positive"));
    }
    let max_len = cfg.count("max-len")?.clamp(1, 2 * radius + 1);

    let window = sturmian_window(&alpha, &theta, radius).map_err(compute("symbolic-core"))?;
    let mut factors = Vec::new();
    let mut table = Vec::new();
    for n in 1..=max_len {
        let set = factor_set(&window, n).map_err(compute("symbolic-core"))?;
        factors.extend(set.members.iter().map(|w| FactorRow { n, word: word_to_string(w) }));
        let c = complexity(&window, n).map_err(compute("symbolic-core"))?;
        table.push(ComplexityRow { n, complexity: c, expected: n + 1, matches: c == n + 1 });
    }
    let mut out = Output::default();
    out.text("window.txt", window.to_text());
    out.csv("factors.csv", &factors)?;
    out.csv("complexity.csv", &table)?;
    let bad = table.iter().filter(|r| !r.matches).count();
    out.check("complexity_n_plus_1", bad == 0, max_len as f64, format!("n <= {max_len}, {bad} mismatches"));
    match estimate_rotation_interval(&window) {
        Ok(iv) => {
            out.check("interval_contains_alpha", iv.contains(&alpha), iv.width(), format!("[{}, {}]", iv.lower, iv.upper))
        }
        Err(e) => out.check("interval_contains_alpha", false, f64::NAN, e.to_string()),
    }
    Ok(out)
}

#[derive(Serialize)]
struct OrbitRow {
    k: usize,
    x: f64,
    rotation_coordinate: f64,
}

const ROTATION_ITERATES: usize = 100_000;
const ITINERARY_RADIUS: usize = 1000;

fn denjoy(cfg: &RunConfig) -> Result<Output, CliError> {
    let x0 = cfg.real("x0")?;
    let iterates = cfg.count("iterates")?;
    let map = match cfg.path("map")? {
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| invalid(cfg, "map", format!("{}: {e}", p.display())))?;
            DenjoyMap::from_text(&text).map_err(|e| invalid(cfg, "map", e))?
        }
        None => DenjoyMap::build(cfg.angle("alpha")?, cfg.count("cutoff")?).map_err(|e| invalid(cfg, "alpha", e))?,
    };
    if !(0.0..1.0).contains(&x0) {
        return Err(invalid(cfg, "x0", "must lie in [0, 1)"));
    }
    let alpha = map.alpha().clone();
    let orbit = map.orbit(x0, iterates);
    let rows: Vec<OrbitRow> =
        orbit.iter().enumerate().map(|(k, &x)| OrbitRow { k, x, rotation_coordinate: map.semi_conjugacy(x) }).collect();

    let mut out = Output::default();
    out.text("denjoy_map.txt", map.to_text());
    out.csv("orbit.csv", &rows)?;
    out.text("cantor.svg", cantor_svg(&map, &orbit));

    let err = (map.rotation_estimate(x0, ROTATION_ITERATES) - alpha.value()).abs();
    out.check("rotation_number", err <= 2e-5, err, format!("{ROTATION_ITERATES} iterates"));
    let itin = map.itinerary(map.b_point(), ITINERARY_RADIUS).map_err(compute("circle-dynamics"))?;
    match sturmian_window(&alpha, &Angle::zero(), ITINERARY_RADIUS) {
        Ok(w) => {
            let diff = w.symbols().iter().zip(itin.symbols()).filter(|(a, b)| a != b).count();
            out.check("itinerary_is_sturmian", diff == 0, diff as f64, format!("|k| <= {ITINERARY_RADIUS}"));
        }
        Err(e) => out.check("itinerary_is_sturmian", false, f64::NAN, e.to_string()),
    }
    Ok(out)
}

fn cantor_svg(map: &DenjoyMap, orbit: &[f64]) -> String {
    let (w, h) = (900.0, 140.0);
    let view = View::new([0.0, 1.0], [0.0, 1.0], w, h);
    let mut svg = Svg::new(w, h);
    let a = view.map([0.0, 0.7]);
    let b = view.map([1.0, 0.5]);
    svg.rect(a[0], a[1], b[0] - a[0], b[1] - a[1], "#222");
    let shown = map.cutoff().min(400) as i64;
    for n in -shown..=shown {
        if let Some((l, r)) = map.gap(n) {
            let (l, r) = (view.map([l, 0.7]), view.map([r.min(1.0), 0.5]));
            svg.rect(l[0], l[1], (r[0] - l[0]).max(0.2), r[1] - l[1], "#fff");
        }
    }
    for &x in orbit.iter().take(500) {
        svg.line(view.map([x, 0.4]), view.map([x, 0.3]), "#c0392b", 0.5);
    }
    svg.text(10.0, 14.0, &format!("Denjoy minimal set, alpha = {}", map.alpha()), "#000");
    svg.finish()
}

#[derive(Serialize)]
struct FamilyRow {
    alpha: String,
    value: f64,
    class_lower: String,
    class_upper: String,
    class_contains_alpha: bool,
    gap_orbits: usize,
    cylinders: usize,
}

#[derive(Serialize)]
struct DistanceRow {
    first: String,
    second: String,
    distance: f64,
    truncated: bool,
}

fn wds_family(cfg: &RunConfig) -> Result<Output, CliError> {
    let depth = cfg.count("depth")?;
    if depth == 0 {
        return Err(invalid(cfg, "depth", "must be positive"));
    }
    let path = cfg.path("alpha-list")?.ok_or_else(|| invalid(cfg, "alpha-list", "empty path"))?;
    let text = fs::read_to_string(&path).map_err(|e| invalid(cfg, "alpha-list", format!("{}: {e}", path.display())))?;
    let mut alphas = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let a: Angle = line.parse().map_err(|e| invalid(cfg, "alpha-list", format!("line {}: {e}", i + 1)))?;
        alphas.push((line.to_string(), a));
    }

    let mut rows = Vec::new();
    let mut graphs = Vec::new();
    for (name, a) in &alphas {
        let w = build_wds(a, depth).map_err(|e| match e {
            WdsError::AlphaOutOfRange(_) | WdsError::RationalAlpha(_) => invalid(cfg, "alpha-list", format!("{name}: {e}")),
            e => compute("wds-family")(e),
        })?;
        let class = rotation_class(&w).map_err(compute("wds-family"))?;
        let g = cylinder_order(&w).map_err(compute("wds-family"))?;
        rows.push(FamilyRow {
            alpha: name.clone(),
            value: a.value(),
            class_lower: class.lower.to_string(),
            class_upper: class.upper.to_string(),
            class_contains_alpha: class.contains(a),
            gap_orbits: gap_orbit_count(&w),
            cylinders: g.len(),
        });
        graphs.push(g);
    }
    let mut dists = Vec::new();
    for i in 0..graphs.len() {
        for j in i + 1..graphs.len() {
            let d = graph_hausdorff(&graphs[i], &graphs[j]).map_err(compute("wds-family"))?;
            dists.push(DistanceRow {
                first: alphas[i].0.clone(),
                second: alphas[j].0.clone(),
                distance: d.to_f64(),
                truncated: d.truncated,
            });
        }
    }

    let mut out = Output::default();
    let ok = rows.iter().filter(|r| r.class_contains_alpha).count();
    out.check("classes_contain_alpha", ok == rows.len(), ok as f64, format!("{ok}/{} rotation numbers", rows.len()));
    let one_gap = rows.iter().filter(|r| r.gap_orbits == 1).count();
    out.check("one_gap_orbit", one_gap == rows.len(), one_gap as f64, format!("depth {depth}"));
    out.csv("family.csv", &rows)?;
    out.csv("distances.csv", &dists)?;

    let (w, row_h) = (900.0, 40.0);
    let mut svg = Svg::new(w, row_h * graphs.len() as f64 + 30.0);
    let palette = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];
    for (i, g) in graphs.iter().enumerate() {
        let y = 20.0 + row_h * i as f64;
        let (x0, span) = (140.0, w - 160.0);
        for (j, arc) in g.arcs().iter().enumerate() {
            let fill = palette[j % palette.len()];
            let start = arc.start.rem_euclid(1.0);
            let end = start + arc.len;
            svg.rect(x0 + start.min(1.0) * span, y, (end.min(1.0) - start) * span, row_h * 0.6, fill);
            if end > 1.0 {
                svg.rect(x0, y, (end - 1.0) * span, row_h * 0.6, fill);
            }
        }
        svg.text(6.0, y + row_h * 0.45, &alphas[i].0, "#000");
    }
    out.text("strip.svg", svg.finish());
    Ok(out)
}

#[derive(Serialize)]
struct PhaseRow {
    index: usize,
    role: &'static str,
    x: f64,
    y: f64,
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Periodic => "periodic",
        Role::HeteroclinicPlus => "heteroclinic_plus",
        Role::HeteroclinicMinus => "heteroclinic_minus",
    }
}

fn rotation_data(cfg: &RunConfig) -> Result<(f64, i64, usize), CliError> {
    let k = cfg.real("k")?;
    let p = cfg.int("p")?;
    let q = cfg.int("q")?;
    if q < 1 {
        return Err(invalid(cfg, "q", "must be at least 1"));
    }
    if k <= 0.0 {
        return Err(invalid(cfg, "k", "must be positive"));
    }
    Ok((k, p, q as usize))
}

fn am_compute(cfg: &RunConfig) -> Result<Output, CliError> {
    let (k, p, q) = rotation_data(cfg)?;
    let branch: Branch = cfg.text("branch")?.parse().map_err(|e| invalid(cfg, "branch", e))?;
    let radius = cfg.real("cone-radius")?;
    if radius <= 0.0 {
        return Err(invalid(cfg, "cone-radius", "must be positive"));
    }
    let (gf, tm) = standard_family(k).map_err(|e| invalid(cfg, "k", e))?;
    let am = assemble_am_set(&gf, p, q, branch).map_err(compute("twist-variational"))?;
    let cfg_orbit = minimize_periodic_seeded(&gf, p, q, cfg.seed).map_err(compute("twist-variational"))?;
    let orbit = periodic_points(&gf, &cfg_orbit);
    let hyp = hyperbolicity_report(&tm, &orbit, radius).map_err(compute("twist-variational"))?;

    let rows: Vec<PhaseRow> = am
        .points
        .iter()
        .zip(&am.roles)
        .enumerate()
        .map(|(index, (z, r))| PhaseRow { index, role: role_name(*r), x: z[0], y: z[1] })
        .collect();
    let mut out = Output::default();
    out.csv("orbit.csv", &rows)?;
    out.json("hyperbolicity.json", &hyp)?;

    let view = View::new([0.0, 1.0], [-1.0, 1.0], 700.0, 700.0);
    let mut svg = Svg::new(700.0, 700.0);
    for r in &rows {
        let (color, size) = match r.role {
            "periodic" => ("#c0392b", 3.0),
            _ => ("#2c3e50", 1.2),
        };
        let y = (r.y + 1.0).rem_euclid(2.0) - 1.0;
        svg.circle(view.map([r.x.rem_euclid(1.0), y]), size, color);
    }
    svg.text(10.0, 14.0, &format!("K = {k}, rotation {p}/{q}, {} branch", cfg.text("branch")?), "#000");
    out.text("phase.svg", svg.finish());

    let lm = (hyp.lambda * hyp.mu - 1.0).abs();
    out.check("eigenvalue_product", lm <= 1e-8, lm, "|lambda mu - 1|");
    out.check("saddle", hyp.lambda > 1.0, hyp.lambda, "unstable eigenvalue");
    out.check(
        "cones",
        hyp.invariance_ok && hyp.forward_ok && hyp.backward_ok,
        hyp.invariance_margin.min(hyp.forward_margin).min(hyp.backward_margin),
        format!("grid radius {radius}"),
    );
    out.check("partial_graph", am.partial_graph, am.lipschitz, "Lipschitz constant");
    Ok(out)
}

#[derive(Serialize)]
struct PolylineRow {
    r#box: usize,
    strip: usize,
    side: &'static str,
    index: usize,
    x: f64,
    y: f64,
}

fn horseshoe(cfg: &RunConfig) -> Result<Output, CliError> {
    let (k, p, q) = rotation_data(cfg)?;
    let budget = cfg.real("budget")?;
    let cap = cfg.count("cap")?;
    if budget <= 0.0 {
        return Err(invalid(cfg, "budget", "must be positive"));
    }
    if cap == 0 {
        return Err(invalid(cfg, "cap", "must be positive"));
    }
    let params = HorseshoeParams { budget, cap, ..HorseshoeParams::default() };
    let build = build_horseshoe(k, p, q, &params).map_err(compute("horseshoe-builder"))?;
    let cert = &build.certificate;

    let mut rows = Vec::new();
    for r in &build.rectangles {
        let sides = [
            ("stable_left", &r.stable_sides[0]),
            ("stable_right", &r.stable_sides[1]),
            ("unstable_bottom", &r.unstable_sides[0]),
            ("unstable_top", &r.unstable_sides[1]),
        ];
        for (side, pts) in sides {
            rows.extend(pts.iter().enumerate().map(|(index, z)| PolylineRow {
                r#box: r.label.0,
                strip: r.label.1,
                side,
                index,
                x: z[0],
                y: z[1],
            }));
        }
    }

    let mut out = Output::default();
    out.json("certificate.json", cert)?;
    out.csv("rectangles.csv", &rows)?;

    let embedding = cert.sigma2.as_ref().map(|s2| {
        let coder = Coder { geo: build.geometry(), matrix: &cert.matrix, strips: &cert.strips, sigma2: s2 };
        embed_wds(&coder, &Angle::golden(), 6)
    });

    let manifolds = build.manifolds(2.0, 0.01);
    let mut pts: Vec<[f64; 2]> = build.rectangles.iter().flat_map(|r| r.outline()).collect();
    pts.extend(build.charts.iter().map(|c| c.saddle_f64()));
    let core = View::fit(&pts, 1.0, 1.0);
    let (wx, wy) = (core.x[1] - core.x[0], core.y[1] - core.y[0]);
    let view = View::new([core.x[0] - wx, core.x[1] + wx], [core.y[0] - wy, core.y[1] + wy], 800.0, 800.0);
    let inside = |z: &[f64; 2]| z[0] >= view.x[0] && z[0] <= view.x[1] && z[1] >= view.y[0] && z[1] <= view.y[1];
    let mut svg = Svg::new(800.0, 800.0);
    for m in &manifolds {
        let color = if m.kind == ManifoldKind::Unstable { "#c0392b" } else { "#2471a3" };
        for run in m.points.split(|z| !inside(z)) {
            svg.polyline(&view.map_all(run), color, 0.8);
        }
    }
    for r in &build.rectangles {
        svg.polygon(&view.map_all(&r.outline()), "#f5b041", "#7e5109");
    }
    if let Some(Ok(e)) = &embedding {
        for b in &e.boxes {
            let c = b.cell.center;
            svg.circle(view.map([c[0].to_f64(), c[1].to_f64()]), 2.0, "#117a65");
        }
    }
    for c in &build.charts {
        svg.circle(view.map(c.saddle_f64()), 3.5, "#000");
    }
    svg.text(10.0, 14.0, &format!("K = {k}, saddle {p}/{q}, N = {}", cert.n), "#000");
    out.text("overlay.svg", svg.finish());

    certificate_checks(&mut out, cert);
    match embedding {
        Some(Ok(e)) => out.check(
            "golden_embedding",
            e.disjoint() && e.equivariant(),
            e.min_separation,
            format!("{} boxes at depth 6", e.boxes.len()),
        ),
        Some(Err(err)) => out.check("golden_embedding", false, f64::NAN, err.to_string()),
        None => out.check("golden_embedding", false, f64::NAN, "no full 2-shift"),
    }
    Ok(out)
}

fn certificate_checks(out: &mut Output, cert: &HorseshoeCertificate) {
    out.check("full_two_shift", cert.sigma2.is_some(), cert.matrix.size() as f64, format!("N = {}", cert.n));
    let m = cert.min_margin.min(cert.resampled_margin);
    out.check("margins_positive", m > 0.0, m, "boundary disjointness, both samplings");
    let target = std::f64::consts::LN_2 - 1e-6;
    out.check("entropy", cert.sigma2_entropy >= target, cert.sigma2_entropy, "log 2 - 1e-6");
    out.check("contraction", cert.lambda_obs < 1.0, cert.lambda_obs, "observed shrink per step");
}

#[derive(Serialize)]
struct ContainmentRow {
    omega: String,
    value: f64,
    points: usize,
    contained: bool,
    margin: f64,
    avoids_separating_set: bool,
}

fn containment(cfg: &RunConfig) -> Result<Output, CliError> {
    let path = cfg.path("certificate")?.ok_or_else(|| invalid(cfg, "certificate", "empty path"))?;
    let text = fs::read_to_string(&path).map_err(|e| invalid(cfg, "certificate", format!("{}: {e}", path.display())))?;
    let cert: HorseshoeCertificate = serde_json::from_str(&text).map_err(|e| invalid(cfg, "certificate", e))?;
    let mut omegas = Vec::new();
    for item in cfg.text("omegas")?.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (p, q) = parse_rational(item).ok_or_else(|| invalid(cfg, "omegas", format!("expected p/q, got `{item}`")))?;
        omegas.push((p, q as usize));
    }
    if omegas.is_empty() {
        return Err(invalid(cfg, "omegas", "empty list"));
    }

    let (_, tm) = standard_family(cert.k).map_err(compute("twist-variational"))?;
    let charts = saddle_charts(&tm, cert.p, cert.q).map_err(compute("horseshoe-builder"))?;
    let rep = theorem_run(&tm, &charts, &cert, &omegas);
    let rows: Vec<ContainmentRow> = rep
        .rows
        .iter()
        .map(|r| ContainmentRow {
            omega: format!("{}/{}", r.p, r.q),
            value: r.omega,
            points: r.points,
            contained: r.contained,
            margin: r.margin,
            avoids_separating_set: r.avoids_separating_set,
        })
        .collect();

    let mut out = Output::default();
    out.csv("report.csv", &rows)?;
    out.json("containment.json", &rep)?;
    for r in &rep.rows {
        out.check(&format!("contained_{}_{}", r.p, r.q), r.contained && r.avoids_separating_set, r.margin, "");
    }
    out.check("separating_set", rep.separation_ok, rep.separation_min, format!("{} points", rep.separation_tested));
    let bad = rep.jacobi.iter().filter(|j| !j.ok).count();
    out.check("jacobi", rep.jacobi_ok() && !rep.jacobi.is_empty(), bad as f64, format!("{} words", rep.jacobi.len()));
    out.check("epsilon", rep.epsilon > 0.0, rep.epsilon, "largest contained omega - r");
    Ok(out)
}
