//! One function per subcommand. Each validates its whole input before the
//! first expensive step and returns its outputs in memory.

use colombeau::bichar::{integrate_bichar, BicharCurve, BicharOptions, CoeffField};
use colombeau::genfun::embed;
use colombeau::io::NetExpr;
use colombeau::scale::{classify, estimate_valuation, is_slow_scale, ultra_norm};
use colombeau::symbols::{check_symbol_class, micro_elliptic};
use colombeau::transport::{
    ellipticity_at_singular, flow_vs_wf, hs_kink, hs_wf_scan, region_checks,
    smooth_propagation_case, CauchySpec, HsScanSetup,
};
use colombeau::wavefront::{default_band, directions_2d, wf_scan, WfReport};
use colombeau::{GridFn, SpatialGrid};
use serde_json::json;

use crate::config::{ExperimentConfig, HsConfig, WfInput};
use crate::svg::{ramp, Plot};
use crate::{Artifacts, Check, CliError, Command};

/// Longest side of a heatmap after block averaging.
const HEATMAP_CELLS: usize = 128;

pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match cmd {
        Command::Val => val(cfg),
        Command::Wf => wf(cfg),
        Command::Hs => hs(cfg),
        Command::Bichar => bichar(cfg),
        Command::Symbol => symbol(cfg),
        Command::Prop => prop(cfg),
    }
}

fn block<'a, T>(b: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    b.as_ref()
        .ok_or_else(|| CliError::Config(format!("missing `{name}` block")))
}

/// Shortest round-trip formatting keeps the CSV byte-stable.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Table { w })
    }

    fn row(&mut self, r: &[String]) -> Result<(), CliError> {
        Ok(self.w.write_record(r)?)
    }

    fn finish(self) -> Result<Vec<u8>, CliError> {
        self.w
            .into_inner()
            .map_err(|e| CliError::Config(format!("csv buffer: {e}")))
    }
}

fn val(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let v = block(&cfg.val, "val")?;
    let eps = cfg.eps_grid()?;
    if v.nets.is_empty() {
        return Err(CliError::Config("`val.nets` is empty".into()));
    }
    let exprs = v
        .nets
        .iter()
        .map(|n| {
            NetExpr::parse(&n.expr).map_err(|e| CliError::Config(format!("net `{}`: {e}", n.name)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut art = Artifacts::new(cfg)?;
    let mut t = Table::new(&[
        "name",
        "expr",
        "b_hat",
        "fit_residual",
        "ultra_norm",
        "class",
        "slow_scale",
    ])?;
    let mut rows = Vec::new();
    for (n, e) in v.nets.iter().zip(&exprs) {
        let u = e.net(&eps)?;
        let est = estimate_valuation(&u, v.tail_fraction)?;
        let norm = ultra_norm(&u)?;
        let class = classify(&u, v.n_max, v.q_max)?;
        let slow = match is_slow_scale(&u, v.slow_tol) {
            Ok(s) => s,
            Err(colombeau::Error::NotPositive { .. }) => false,
            Err(e) => return Err(e.into()),
        };
        t.row(&[
            n.name.clone(),
            n.expr.clone(),
            num(est.b_hat),
            num(est.fit_residual),
            num(norm),
            class.to_string(),
            slow.to_string(),
        ])?;
        if let Some(b) = n.expect_b {
            let pass = (est.b_hat - b).abs() <= v.b_tol;
            art.checks.push(Check::new(
                format!("{}: b_hat", n.name),
                pass,
                format!("{} vs {b} +- {}", est.b_hat, v.b_tol),
            ));
        }
        if let Some(s) = n.expect_slow {
            art.checks.push(Check::new(
                format!("{}: slow_scale", n.name),
                slow == s,
                format!("{slow}, expected {s}"),
            ));
        }
        rows.push(json!({"name": n.name, "b_hat": est.b_hat, "class": class, "slow_scale": slow}));
    }
    art.add("val.csv", t.finish()?);
    art.summary = json!({ "nets": rows });
    Ok(art)
}

fn angle_deg(d: &[f64]) -> f64 {
    match d.len() {
        1 => {
            if d[0] >= 0.0 {
                0.0
            } else {
                180.0
            }
        }
        _ => d[1].atan2(d[0]).to_degrees().rem_euclid(360.0),
    }
}

fn verdict(s: Option<bool>) -> &'static str {
    match s {
        Some(true) => "singular",
        Some(false) => "regular",
        None => "untested",
    }
}

fn wf_csv(r: &WfReport) -> Result<Vec<u8>, CliError> {
    let two = r.base_points.first().is_some_and(|p| p.len() == 2);
    let mut header = vec!["x0"];
    if two {
        header.push("x1");
    }
    header.extend(["angle_deg", "verdict", "slope", "retest_slope"]);
    let mut t = Table::new(&header)?;
    for e in &r.entries {
        let mut row: Vec<String> = e.x0.iter().map(|&v| num(v)).collect();
        row.extend([
            num(angle_deg(&e.direction)),
            verdict(e.singular).into(),
            opt(e.slope),
            opt(e.retest_slope),
        ]);
        t.row(&row)?;
    }
    t.finish()
}

/// Base points coloured by verdict, with a tick per singular direction.
fn wf_svg(r: &WfReport, grid: &SpatialGrid, title: &str) -> String {
    let a = grid.axis(0);
    let two = grid.dim() == 2;
    let (yl, yr) = if two {
        let b = grid.axis(1);
        ("t", (b.min, b.max))
    } else {
        ("", (-1.0, 1.0))
    };
    let mut p = Plot::new(title, "x", yl, (a.min, a.max), yr);
    let nd = r.directions.len();
    for (b, x0) in r.base_points.iter().enumerate() {
        let (x, y) = (x0[0], if two { x0[1] } else { 0.0 });
        let entries: Vec<_> = (0..nd).map(|d| r.entry(b, d)).collect();
        let color = if entries.iter().any(|e| e.singular == Some(true)) {
            "rgb(200,30,30)"
        } else if entries.iter().any(|e| e.singular.is_none()) {
            "rgb(230,150,0)"
        } else {
            "rgb(150,150,150)"
        };
        for e in entries.iter().filter(|e| e.singular == Some(true)) {
            let d = &e.direction;
            p.tick(
                x,
                y,
                (d[0], if two { d[1] } else { 0.0 }),
                14.0,
                "rgb(200,30,30)",
            );
        }
        p.marker(x, y, 3.0, color);
    }
    p.render()
}

fn wf(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let w = block(&cfg.wf, "wf")?;
    let eps = cfg.eps_grid()?;
    let grid = cfg.spatial_grid()?;
    let scale = cfg.scale_fn();
    let dim = grid.dim();
    if w.base_points.is_empty() {
        return Err(CliError::Config("`wf.base_points` is empty".into()));
    }
    if w.base_points.iter().any(|p| p.len() != dim) {
        return Err(CliError::Config(format!(
            "base points must have {dim} coordinates"
        )));
    }
    if w.params.scale != scale {
        return Err(CliError::Config(
            "`wf.params.scale` must equal `scale`".into(),
        ));
    }
    let dirs = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        _ if w.n_dirs >= 4 => directions_2d(w.n_dirs),
        _ => return Err(CliError::Config("`wf.n_dirs` must be at least 4".into())),
    };
    let mut params = w.params.clone();
    params.band.get_or_insert_with(|| default_band(&grid));
    let mut resolved = cfg.clone();
    if let Some(rw) = resolved.wf.as_mut() {
        rw.params = params.clone();
    }
    let u: GridFn = match &w.input {
        WfInput::Embed { spec } => embed(spec, &cfg.mollifier(), scale, &grid, &eps)?,
        WfInput::HurdSattinger { s0 } => {
            if dim != 2 {
                return Err(CliError::Config(
                    "hurd_sattinger input needs a 2-D (x, t) grid".into(),
                ));
            }
            let mut spec = CauchySpec::hurd_sattinger(*s0, scale, grid.clone(), eps.clone());
            spec.mollifier = cfg.mollifier();
            if let CoeffField::Theta(th) = &mut spec.coeff {
                th.mollifier = cfg.mollifier();
            }
            colombeau::transport::solve_characteristics(&spec)?.field
        }
    };
    let report = wf_scan(&u, &w.base_points, &dirs, &params)?;
    let mut art = Artifacts::new(&resolved)?;
    art.add("wf.csv", wf_csv(&report)?);
    art.add("wf.svg", wf_svg(&report, &grid, "wave front scan"));
    let nd = dirs.len();
    let singular_at: Vec<bool> = (0..report.base_points.len())
        .map(|b| (0..nd).any(|d| report.entry(b, d).singular == Some(true)))
        .collect();
    let untested = report
        .entries
        .iter()
        .filter(|e| e.singular.is_none())
        .count();
    if let Some(expect) = &w.expect_singular {
        let close = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()))
        };
        let mismatched: Vec<String> = report
            .base_points
            .iter()
            .zip(&singular_at)
            .filter(|(p, &s)| s != expect.iter().any(|q| close(p, q)))
            .map(|(p, _)| format!("{p:?}"))
            .collect();
        art.checks.push(Check::new(
            "singular base points",
            mismatched.is_empty() && untested == 0,
            if mismatched.is_empty() {
                format!("{untested} untested pairs")
            } else {
                format!("mismatch at {}", mismatched.join(", "))
            },
        ));
    }
    art.summary = json!({
        "singular_pairs": report.singular().count(),
        "untested_pairs": untested,
        "singular_base_points": report.base_points.iter().zip(&singular_at)
            .filter(|(_, &s)| s).map(|(p, _)| p.clone()).collect::<Vec<_>>(),
    });
    Ok(art)
}

fn bichar_csv(c: &BicharCurve, coeff: &CoeffField, every: usize) -> Result<Vec<u8>, CliError> {
    let mut t = Table::new(&["eps", "t", "x", "xi", "tau", "residual"])?;
    for (k, &e) in c.eps.iter().enumerate() {
        let n = c.x[k].len();
        for i in (0..n).filter(|&i| i % every == 0 || i + 1 == n) {
            let (tt, x, xi, tau) = (c.times[i], c.x[k][i], c.xi[k][i], c.tau[k][i]);
            t.row(&[
                num(e),
                num(tt),
                num(x),
                num(xi),
                num(tau),
                num(coeff.q1(e, x, tt, xi, tau)),
            ])?;
        }
    }
    t.finish()
}

/// Per-eps `x_eps(t)` curves, `x` across and `t` up, plus an optional thick
/// limit curve.
fn fan_svg(c: &BicharCurve, limit: Option<&[(f64, f64)]>, title: &str) -> String {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in c.x.iter().flatten().filter(|v| v.is_finite()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let t_max = c.times.last().copied().unwrap_or(1.0);
    let mut p = Plot::new(title, "x", "t", (lo, hi), (c.times[0], t_max));
    let n = c.eps.len();
    for k in 0..n {
        let pts: Vec<(f64, f64)> = c.x[k].iter().zip(&c.times).map(|(&x, &t)| (x, t)).collect();
        p.polyline(&pts, &ramp(k, n), 1.0);
    }
    if let Some(l) = limit {
        p.polyline(l, "black", 3.0);
    }
    p.render()
}

fn guard_of(c: &BicharCurve) -> Option<String> {
    let hits: Vec<String> = c
        .eps
        .iter()
        .zip(&c.truncated_at)
        .filter_map(|(e, t)| t.map(|t| format!("eps {e} at t {t}")))
        .collect();
    (!hits.is_empty()).then(|| {
        format!(
            "|xi| passed {:e}; curves truncated: {}",
            colombeau::bichar::BLOW_UP,
            hits.join(", ")
        )
    })
}

fn bichar(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let b = block(&cfg.bichar, "bichar")?;
    let eps = cfg.eps_grid()?;
    if b.every == 0 {
        return Err(CliError::Config("`bichar.every` must be positive".into()));
    }
    let tau0 = b
        .tau0
        .unwrap_or_else(|| -b.coeff.a(eps.get(0), b.x0, 0.0) * b.xi0);
    let mut resolved = cfg.clone();
    if let Some(rb) = resolved.bichar.as_mut() {
        rb.tau0 = Some(tau0);
    }
    let opts = BicharOptions {
        waive_nullity: b.waive_nullity,
        step_halving: b.step_halving,
    };
    let c = integrate_bichar(
        &b.coeff,
        &eps,
        b.x0,
        b.xi0,
        tau0,
        (0.0, b.t_end),
        b.dt,
        opts,
    )?;
    let mut art = Artifacts::new(&resolved)?;
    art.add("bichar.csv", bichar_csv(&c, &b.coeff, b.every)?);
    art.add("fan.svg", fan_svg(&c, None, "bicharacteristics"));
    art.guard = guard_of(&c);
    art.summary = json!({
        "tau0": tau0,
        "derivatives": c.derivatives,
        "truncated_at": c.truncated_at,
        "halving_error": c.halving_error,
        "null_residual": colombeau::bichar::null_residual(&c, &b.coeff),
    });
    Ok(art)
}

fn symbol(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let s = block(&cfg.symbol, "symbol")?;
    let eps = cfg.eps_grid()?;
    let rep = micro_elliptic(
        &s.symbol,
        &eps,
        &s.x0,
        &s.xi0,
        s.u_radius,
        s.cone_angle,
        s.band,
    )?;
    let class = match &s.class {
        Some(c) => Some(check_symbol_class(
            &s.symbol,
            &eps,
            &c.k,
            c.alpha_max,
            c.beta_max,
        )?),
        None => None,
    };
    let mut art = Artifacts::new(cfg)?;
    let mut t = Table::new(&["eps", "r", "s"])?;
    for (k, &e) in eps.values().iter().enumerate() {
        t.row(&[num(e), opt(rep.r[k]), opt(rep.s[k])])?;
    }
    art.add("ellipticity.csv", t.finish()?);
    if let Some(want) = s.expect_elliptic {
        art.checks.push(Check::new(
            "elliptic",
            rep.elliptic == want,
            format!("{}, expected {want}", rep.elliptic),
        ));
    }
    art.summary = json!({
        "symbol": s.symbol.to_string(),
        "elliptic": rep.elliptic,
        "r_slow": rep.r_slow,
        "s_slow": rep.s_slow,
        "diagnostic": rep.diagnostic,
        "in_class": class.as_ref().map(|c| c.in_class),
        "majorant": class.as_ref().map(|c| c.majorant.clone()),
    });
    Ok(art)
}

fn prop(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let p = block(&cfg.prop, "prop")?;
    if p.times.is_empty() {
        return Err(CliError::Config("`prop.times` is empty".into()));
    }
    let slices = smooth_propagation_case(&p.coeff, &p.g, &p.times, &p.setup)?;
    let mut art = Artifacts::new(cfg)?;
    let mut t = Table::new(&["t", "kind", "x", "lo", "hi", "xi"])?;
    for s in &slices {
        for &(x, xi) in &s.flow_points {
            t.row(&[
                num(s.t),
                "flow".into(),
                num(x),
                String::new(),
                String::new(),
                num(xi),
            ])?;
        }
        for c in &s.wf {
            let dirs: Vec<String> = c.directions.iter().map(|&d| num(d)).collect();
            t.row(&[
                num(s.t),
                "wf".into(),
                num(c.center),
                num(c.lo),
                num(c.hi),
                dirs.join(" "),
            ])?;
        }
    }
    art.add("prop.csv", t.finish()?);
    for s in &slices {
        art.checks.push(Check::new(
            format!("t = {}", s.t),
            s.base_match && s.direction_match,
            format!(
                "base {}, direction {}, max offset {} cells",
                s.base_match, s.direction_match, s.max_offset_cells
            ),
        ));
    }
    art.summary = json!({ "slices": slices });
    Ok(art)
}

/// The standard setup with top-level `eps`, `scale`, `mollifier` and a 2-D
/// `grid` applied; an explicit `hs.setup` excludes them.
pub fn resolve_hs(cfg: &ExperimentConfig, h: &HsConfig) -> Result<HsScanSetup, CliError> {
    let top =
        cfg.eps.is_some() || cfg.scale.is_some() || cfg.mollifier.is_some() || cfg.grid.is_some();
    let mut s = match &h.setup {
        Some(s) if top => {
            let _ = s;
            return Err(CliError::Config(
                "`hs.setup` excludes top-level eps, scale, mollifier and grid".into(),
            ));
        }
        Some(s) => s.clone(),
        None => {
            let mut s = HsScanSetup::standard(h.s0)?;
            if cfg.eps.is_some() {
                s.eps = cfg.eps_grid()?;
            }
            if let Some(sc) = cfg.scale {
                s.scale = sc;
                s.wf.scale = sc;
            }
            if let Some(m) = &cfg.mollifier {
                s.mollifier = m.clone();
            }
            if let Some(g) = &cfg.grid {
                if g.dim() != 2 {
                    return Err(CliError::Config("hs grid must be 2-D (x, t)".into()));
                }
                s.x_axis = *g.axis(0);
                s.t_axis = *g.axis(1);
            }
            s
        }
    };
    if h.s0 != s.s0 && h.setup.is_some() {
        return Err(CliError::Config(
            "`hs.s0` differs from `hs.setup.s0`".into(),
        ));
    }
    s.validate()?;
    let grid = s.grid()?;
    s.wf.band.get_or_insert_with(|| default_band(&grid));
    Ok(s)
}

fn block_average(u: &GridFn, k: usize) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let g = u.grid();
    let (ax, at) = (g.axis(0), g.axis(1));
    let fx = ax.n.div_ceil(HEATMAP_CELLS);
    let ft = at.n.div_ceil(HEATMAP_CELLS);
    let (mx, mt) = (ax.n / fx, at.n / ft);
    let s = u.sample(k);
    let vals = (0..mt)
        .map(|j| {
            (0..mx)
                .map(|i| {
                    let mut acc = 0.0;
                    for jj in j * ft..(j + 1) * ft {
                        for ii in i * fx..(i + 1) * fx {
                            acc += s[ii + ax.n * jj].re;
                        }
                    }
                    acc / (fx * ft) as f64
                })
                .collect()
        })
        .collect();
    let centre = |a: &colombeau::Axis, f: usize, m: usize| -> Vec<f64> {
        (0..m)
            .map(|i| 0.5 * (a.node(i * f) + a.node((i + 1) * f - 1)))
            .collect()
    };
    (centre(ax, fx, mx), centre(at, ft, mt), vals)
}

fn heatmap_svg(u: &GridFn, k: usize) -> String {
    let g = u.grid();
    let (ax, at) = (g.axis(0), g.axis(1));
    let (xs, ts, vals) = block_average(u, k);
    let vmax = vals.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    let title = format!("u at eps = {:e}", u.eps().get(k));
    let mut p = Plot::new(&title, "x", "t", (ax.min, ax.max), (at.min, at.max));
    p.heatmap(&xs, &ts, &vals, vmax);
    p.render()
}

fn hs(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let h = cfg.hs.clone().unwrap_or_default();
    if h.heatmap_every == 0 || h.bichar_every == 0 {
        return Err(CliError::Config(
            "`heatmap_every` and `bichar_every` must be positive".into(),
        ));
    }
    let setup = resolve_hs(cfg, &h)?;
    let mut resolved = ExperimentConfig {
        out: cfg.out.clone(),
        jobs: cfg.jobs,
        ..Default::default()
    };
    resolved.hs = Some(HsConfig {
        s0: setup.s0,
        setup: Some(setup.clone()),
        ..h.clone()
    });

    let kink = hs_kink(&setup)?;
    let (sol, scan) = hs_wf_scan(&setup)?;
    let regions = region_checks(&scan);
    let flow = flow_vs_wf(&scan, &kink)?;
    let elliptic = if h.ellipticity {
        Some(ellipticity_at_singular(&scan)?)
    } else {
        None
    };
    let coeff = CoeffField::Theta(setup.theta());
    let opts = BicharOptions {
        waive_nullity: false,
        step_halving: false,
    };
    let curves = integrate_bichar(
        &coeff,
        &setup.eps,
        -setup.s0,
        kink.xi0,
        kink.tau0,
        (0.0, setup.t_axis.max),
        setup.dt,
        opts,
    )?;

    let mut art = Artifacts::new(&resolved)?;
    art.guard = guard_of(&curves);

    let mut t = Table::new(&["eps", "gamma", "t_eps", "xdot"])?;
    for k in 0..kink.t.eps.len() {
        t.row(&[
            num(kink.t.eps[k]),
            num(kink.t.gamma[k]),
            num(kink.t.t_eps[k]),
            num(kink.t.xdot[k]),
        ])?;
    }
    art.add("t_eps.csv", t.finish()?);

    let mut t = Table::new(&[
        "eps",
        "xi_at_s0",
        "lower",
        "upper",
        "bound_holds",
        "xi_before",
        "xi_after",
    ])?;
    for (k, &e) in kink.t.eps.iter().enumerate() {
        t.row(&[
            num(e),
            num(kink.xi_at_s0[k]),
            num(kink.xi0.abs()),
            num(2.0 * kink.tau0.abs()),
            kink.bound_holds[k].to_string(),
            num(kink.xi_before[k]),
            num(kink.xi_after[k]),
        ])?;
    }
    art.add("xi_bound.csv", t.finish()?);

    let mut t = Table::new(&["tau0", "eps", "xi_at_s0", "max_null_residual"])?;
    for c in &kink.conventions {
        for (k, &e) in kink.t.eps.iter().enumerate() {
            t.row(&[
                num(c.tau0),
                num(e),
                num(c.xi_at_s0[k]),
                num(c.max_null_residual),
            ])?;
        }
    }
    art.add("conventions.csv", t.finish()?);

    art.add("bichar.csv", bichar_csv(&curves, &coeff, h.bichar_every)?);
    let s0 = setup.s0;
    let t_max = setup.t_axis.max;
    let limit = [(-s0, 0.0), (0.0, s0), (0.0, t_max.max(s0))];
    art.add(
        "fan.svg",
        fan_svg(&curves, Some(&limit), "characteristic fan and its limit"),
    );

    art.add("wf.csv", wf_csv(&scan.report)?);
    art.add(
        "wf.svg",
        wf_svg(
            &scan.report,
            &setup.grid()?,
            "wave front set of the solution",
        ),
    );
    let mut text = serde_json::to_string_pretty(&regions)?;
    text.push('\n');
    art.add("regions.json", text);

    let mut t = Table::new(&[
        "angle_deg",
        "dir_x",
        "dir_t",
        "singular_at_kink",
        "in_flow_cone",
        "near_flow",
    ])?;
    for r in &flow.rows {
        t.row(&[
            num(r.angle_deg),
            num(r.direction[0]),
            num(r.direction[1]),
            r.singular_at_kink.to_string(),
            r.in_flow_cone.to_string(),
            r.near_flow.to_string(),
        ])?;
    }
    art.add("flow_vs_wf.csv", t.finish()?);

    if let Some(rows) = &elliptic {
        let mut t = Table::new(&[
            "x",
            "t",
            "angle_deg",
            "region",
            "elliptic",
            "r_slow",
            "s_slow",
        ])?;
        for r in rows {
            t.row(&[
                num(r.x0[0]),
                num(r.x0[1]),
                num(angle_deg(&r.direction)),
                serde_json::to_value(r.region)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                r.elliptic.to_string(),
                r.report.r_slow.to_string(),
                r.report.s_slow.to_string(),
            ])?;
        }
        art.add("ellipticity.csv", t.finish()?);
    }

    let n = setup.eps.len();
    for k in (0..n).filter(|&k| k % h.heatmap_every == 0 || k + 1 == n) {
        art.add(format!("heat_eps_{k:02}.svg"), heatmap_svg(&sol.field, k));
    }
    if h.save_fields {
        art.fields.push(("fields".into(), sol.field.clone()));
    }

    let all_bounds = kink.bound_holds.iter().all(|&b| b);
    art.checks.extend([
        Check::new(
            "xi bound at s0",
            all_bounds,
            format!(
                "{} of {n} rows hold",
                kink.bound_holds.iter().filter(|&&b| b).count()
            ),
        ),
        Check::new(
            "xi = xi0 before s0",
            kink.threshold_before.is_some(),
            format!("threshold {:?}", kink.threshold_before),
        ),
        Check::new(
            "|xi| >= 10 |xi0| after s0",
            kink.threshold_after.is_some(),
            format!("threshold {:?}", kink.threshold_after),
        ),
        Check::new(
            "t_eps monotone",
            kink.t.monotone,
            format!("fit r2 {}", kink.t.fit_r2),
        ),
        Check::new(
            "wf incoming line",
            regions.incoming_pass,
            format!("{} points", regions.incoming.len()),
        ),
        Check::new(
            "wf kink",
            regions.kink_pass,
            regions
                .kink
                .as_ref()
                .map(|k| k.note.clone())
                .unwrap_or_else(|| "kink not among base points".into()),
        ),
        Check::new(
            "wf stuck line",
            regions.stuck_pass,
            format!("{} points", regions.stuck.len()),
        ),
        Check::new(
            "flow misses part of the kink wave front",
            flow.pass(4),
            format!(
                "flow in cone {}, {} deficient directions",
                flow.flow_in_cone, flow.deficient
            ),
        ),
    ]);
    if let Some(rows) = &elliptic {
        let bad = rows.iter().filter(|r| r.elliptic).count();
        art.checks.push(Check::new(
            "no ellipticity at singular pairs",
            bad == 0,
            format!("{bad} of {} singular pairs elliptic", rows.len()),
        ));
    }
    art.summary = json!({
        "s0": s0,
        "base_points": scan.report.base_points.len(),
        "singular_pairs": scan.report.singular().count(),
        "other_singular": regions.other_singular,
        "mass_drift": scan.mass_drift,
        "solver": sol.solver,
        "t_eps_fit": {"c": kink.t.fit_c, "c0": kink.t.fit_c0, "r2": kink.t.fit_r2},
        "threshold_before": kink.threshold_before,
        "threshold_after": kink.threshold_after,
        "flow_directions": flow.flow_directions,
        "deficient_directions": flow.deficient,
    });
    Ok(art)
}
