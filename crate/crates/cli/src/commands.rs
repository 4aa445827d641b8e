//! One function per subcommand. Each builds a list of independent tasks;
//! the tasks run on the thread pool and their entries are concatenated in
//! declaration order, so the report does not depend on scheduling.

use mixsmooth_core::embedding::{
    check_holder_norm, check_p_to_1_limit, check_pointwise, check_trace, convergence_study, counterexample_run,
    limit_tolerance, CheckOptions, Mollifier,
};
use mixsmooth_core::gnl::{verify_box, BoxOutcome, GnlOptions};
use mixsmooth_core::norms::{
    holder_norm, holder_seminorm, lp_norm, s1p_norm, sup_norm, ws_norm, NormOptions, NormReport,
};
use mixsmooth_core::quadrature::{GridSpec, MAX_ORDER};
use mixsmooth_core::rect::enumerate_subsets;
use mixsmooth_core::report::{QuadratureInfo, SamplerInfo};
use mixsmooth_core::sampler::{random_boxes, PairSampler};
use mixsmooth_core::{gallery, Error, Rectangle, Verdict};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Map, Value};

use crate::cli::{
    EmbeddingArgs, EmbeddingKind, FnArgs, GalleryArgs, GnlArgs, NormChoice, NormsArgs, OutArgs, QuadArgs, Study,
    TraceArgs,
};
use crate::config::{load_function, number_list, p_list, positive, rect_arg, usage, CliError, LoadedFunction};
use crate::output::{num, opt_num, rect_json, Entry, Envelope};

type Task<'a> = Box<dyn Fn() -> Result<Vec<Entry>, CliError> + Send + Sync + 'a>;

fn run_tasks(pool: &ThreadPool, tasks: Vec<Task<'_>>) -> Result<Vec<Entry>, CliError> {
    let results: Vec<_> = pool.install(|| tasks.par_iter().map(|t| t()).collect());
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Numerical breakdowns become INCONCLUSIVE entries; argument errors stay
/// usage errors.
fn settle(r: Result<Vec<Entry>, Error>, kind: &'static str, name: String) -> Result<Vec<Entry>, CliError> {
    match r {
        Ok(v) => Ok(v),
        Err(e @ (Error::Eval(_) | Error::Quadrature(_) | Error::Face { .. })) => {
            let mut entry = Entry::new(kind, name, Verdict::Inconclusive);
            entry.notes.push(e.to_string());
            Ok(vec![entry])
        }
        Err(e) => Err(e.into()),
    }
}

fn grid(q: &QuadArgs, default_cells: usize) -> Result<GridSpec, CliError> {
    if !(1..=MAX_ORDER).contains(&q.order) {
        return Err(usage(format!("--order must be in 1..={MAX_ORDER}, got {}", q.order)));
    }
    GridSpec::new(q.order, vec![q.cells.unwrap_or(default_cells)]).map_err(|e| usage(format!("--cells: {e}")))
}

fn norm_options(q: &QuadArgs) -> Result<NormOptions, CliError> {
    let d = NormOptions::default();
    Ok(NormOptions {
        grid: grid(q, d.grid.cells[0])?,
        tol: positive(q.quad_tol.unwrap_or(d.tol), "--quad-tol")?,
        max_level: q.max_level.unwrap_or(d.max_level),
        ..d
    })
}

fn quad_config(m: &mut Map<String, Value>, o: &NormOptions) {
    m.insert("order".into(), json!(o.grid.order));
    m.insert("cells".into(), json!(o.grid.cells[0]));
    m.insert("quad_tol".into(), num(o.tol));
    m.insert("max_level".into(), json!(o.max_level));
}

fn base_config(f: &FnArgs, u: &LoadedFunction, out: &OutArgs) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("function".into(), json!(f.function));
    m.insert("origin".into(), json!(u.origin));
    m.insert("expression".into(), json!(u.expr.to_string()));
    m.insert("n".into(), json!(u.n));
    m.insert("format".into(), json!(out.format.as_str()));
    m.insert(
        "output".into(),
        out.output
            .as_ref()
            .map_or(Value::Null, |p| json!(p.display().to_string())),
    );
    m
}

fn p_json(ps: &[f64]) -> Value {
    ps.iter().copied().map(num).collect()
}

fn envelope(command: &'static str, config: Map<String, Value>, entries: Vec<Entry>) -> Envelope {
    Envelope {
        command,
        config,
        entries,
        wall_time: None,
        table: None,
    }
}

pub fn verify_gnl(a: &GnlArgs, pool: &ThreadPool) -> Result<Envelope, CliError> {
    let u = load_function(&a.f.function, a.f.n)?;
    let n = u.n;
    let tol = positive(a.tol, "--tol")?;
    let d = GnlOptions::default();
    let opts = GnlOptions {
        grid: grid(&a.quad, d.grid.cells[0])?,
        quad_tol: positive(a.quad.quad_tol.unwrap_or(d.quad_tol), "--quad-tol")?,
        max_level: a.quad.max_level.unwrap_or(d.max_level),
    };
    let mode = a.boxes.clone().unwrap_or_else(|| {
        if a.rects.is_empty() {
            "unit".into()
        } else {
            "explicit".into()
        }
    });
    let mut sampler = None;
    let bounds = match &a.bounds {
        Some(s) => rect_arg(s, n, "--bounds")?,
        None => Rectangle::cube(n, -1.0, 1.0).expect("valid cube"),
    };
    let rects: Vec<Rectangle> = match mode.as_str() {
        "unit" => vec![Rectangle::unit(n).expect("valid cube")],
        "explicit" => {
            if a.rects.is_empty() {
                return Err(usage("--boxes explicit needs at least one --box"));
            }
            a.rects
                .iter()
                .map(|s| rect_arg(s, n, "--box"))
                .collect::<Result<_, _>>()?
        }
        m => {
            let count = m
                .strip_prefix("random:")
                .and_then(|c| c.parse::<usize>().ok())
                .filter(|&c| c > 0)
                .ok_or_else(|| usage(format!("--boxes must be unit, random:N (N > 0) or explicit, got '{m}'")))?;
            let w = positive(a.min_width, "--min-width")?;
            if (0..n).any(|i| bounds.width(i) < w) {
                return Err(usage("--min-width exceeds a side of --bounds"));
            }
            sampler = Some(SamplerInfo { seed: a.seed, count });
            random_boxes(&bounds, count, a.seed, w)
        }
    };
    let mut config = base_config(&a.f, &u, &a.out);
    config.insert("boxes".into(), json!(mode));
    config.insert("bounds".into(), rect_json(&bounds));
    config.insert("seed".into(), json!(a.seed));
    config.insert("tol".into(), num(tol));
    config.insert("order".into(), json!(opts.grid.order));
    config.insert("cells".into(), json!(opts.grid.cells[0]));
    config.insert("quad_tol".into(), num(opts.quad_tol));
    config.insert("max_level".into(), json!(opts.max_level));

    let tasks: Vec<Task> = rects
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (u, opts) = (&u.expr, &opts);
            Box::new(move || Ok(vec![gnl_entry(i, verify_box(u, r, tol, opts), tol, sampler)])) as Task
        })
        .collect();
    Ok(envelope("verify-gnl", config, run_tasks(pool, tasks)?))
}

fn gnl_entry(i: usize, b: BoxOutcome, tol: f64, sampler: Option<SamplerInfo>) -> Entry {
    let mut e = Entry::new("gnl", format!("box{i}"), b.verdict).input("box", rect_json(&b.rect));
    e.sampler = sampler;
    if let Some(bd) = &b.breakdown {
        let rel = bd.relative_residual();
        e.value = Some(rel);
        e.margin = Some(tol - rel);
        e.values = vec![
            ("lhs", bd.lhs),
            ("rhs", bd.rhs),
            ("residual", bd.residual),
            ("relative_residual", rel),
        ];
        // the face with most points carries the finest grid
        let finest = bd.records.iter().max_by_key(|r| r.grid.points(r.subset.len()));
        e.quadrature = finest.map(|r| QuadratureInfo {
            order: r.grid.order,
            cells: vec![r.grid.cells_on(0); r.subset.len()],
            error_estimate: bd.max_error_estimate(),
            evaluations: bd.evaluations(),
            converged: true,
        });
    }
    if let Some(reason) = b.reason {
        e.notes.push(reason);
    }
    if b.reverified {
        e.notes.push("first pass failed; passed at doubled order".into());
    }
    e
}

fn check_options(q: &QuadArgs, tol: f64) -> Result<CheckOptions, CliError> {
    Ok(CheckOptions {
        norm: norm_options(q)?,
        tol: positive(tol, "--tol")?,
        reverify: true,
    })
}

pub fn check_embedding(a: &EmbeddingArgs, pool: &ThreadPool) -> Result<Envelope, CliError> {
    let u = load_function(&a.f.function, a.f.n)?;
    let n = u.n;
    let ps = p_list(&a.p, false)?;
    let opts = check_options(&a.quad, a.tol)?;
    let rect = match (&a.rect, &u.support) {
        (Some(s), _) => rect_arg(s, n, "--box")?,
        (None, Some(support)) => support.clone(),
        (None, None) => Rectangle::cube(n, -1.0, 1.0).expect("valid cube"),
    };
    if a.pairs == 0 {
        return Err(usage("--pairs must be positive"));
    }
    let sampler = PairSampler::new(a.seed, a.pairs);
    let mut config = base_config(&a.f, &u, &a.out);
    config.insert("p".into(), p_json(&ps));
    config.insert("box".into(), rect_json(&rect));
    config.insert(
        "kinds".into(),
        json!(a
            .kinds
            .iter()
            .map(|k| format!("{k:?}").to_lowercase())
            .collect::<Vec<_>>()),
    );
    config.insert("pairs".into(), json!(a.pairs));
    config.insert("seed".into(), json!(a.seed));
    config.insert("tol".into(), num(opts.tol));
    quad_config(&mut config, &opts.norm);

    let mut tasks: Vec<Task> = Vec::new();
    let (expr, rect, opts, sampler) = (&u.expr, &rect, &opts, &sampler);
    for &p in &ps {
        let input = move |mut e: Entry| {
            e.name = format!("{}(p={p})", e.name);
            e.input("p", num(p)).input("box", rect_json(rect))
        };
        if a.kinds.contains(&EmbeddingKind::Pointwise) {
            tasks.push(Box::new(move || {
                let r = check_pointwise(expr, p, sampler, rect, opts)
                    .map(|r| vec![input(Entry::from_inequality("pointwise", r))]);
                settle(r, "pointwise", format!("pointwise(p={p})"))
            }));
        }
        if a.kinds.contains(&EmbeddingKind::Holder) {
            tasks.push(Box::new(move || {
                let r = check_holder_norm(expr, p, rect, sampler, opts)
                    .map(|r| vec![input(Entry::from_inequality("holder_norm", r))]);
                settle(r, "holder_norm", format!("holder_norm(p={p})"))
            }));
        }
    }
    if a.kinds.contains(&EmbeddingKind::Limit) {
        tasks.push(Box::new(move || {
            let ps = [1.1, 1.01, 1.001, 1.0001];
            let r = check_p_to_1_limit(n, 1.0, &ps, limit_tolerance(n))?;
            let tol = r.tol.unwrap_or(f64::INFINITY);
            let mut e = Entry::new("p_to_1_limit", format!("limit(n={n})"), r.verdict)
                .input("n", json!(n))
                .input("d", num(r.d))
                .input("p", p_json(&ps));
            e.value = Some(r.final_error);
            e.margin = Some(tol - r.final_error);
            e.values = vec![
                ("limit", r.limit),
                ("final_factor", r.trace[r.trace.len() - 1].1),
                ("tol", tol),
            ];
            Ok(vec![e])
        }));
    }
    Ok(envelope("check-embedding", config, run_tasks(pool, tasks)?))
}

pub fn check_trace_cmd(a: &TraceArgs, pool: &ThreadPool) -> Result<Envelope, CliError> {
    let u = load_function(&a.f.function, a.f.n)?;
    let n = u.n;
    if n < 2 {
        return Err(usage(
            "check-trace needs n ≥ 2: faces have n - 1 axes, and a 0-dimensional face has no trace to bound",
        ));
    }
    let ps = p_list(&a.p, false)?;
    let opts = check_options(&a.quad, a.tol)?;
    let rect = match &a.rect {
        Some(s) => rect_arg(s, n, "--box")?,
        None => Rectangle::unit(n).expect("valid cube"),
    };
    let faces: Vec<_> = enumerate_subsets(n)
        .expect("n was validated")
        .into_iter()
        .filter(|s| s.len() == n - 1)
        .collect();
    let mut config = base_config(&a.f, &u, &a.out);
    config.insert("p".into(), p_json(&ps));
    config.insert("box".into(), rect_json(&rect));
    config.insert("tol".into(), num(opts.tol));
    quad_config(&mut config, &opts.norm);

    let mut tasks: Vec<Task> = Vec::new();
    let (expr, rect, opts) = (&u.expr, &rect, &opts);
    for &p in &ps {
        for face in &faces {
            tasks.push(Box::new(move || {
                let normal = face.complement().and_then(|c| c.axes().next()).expect("one axis left") + 1;
                let r = check_trace(expr, rect, face, p, opts).map(|r| {
                    let mut e = Entry::from_inequality("trace", r);
                    e.name = format!("{}(p={p})", e.name);
                    vec![e
                        .input("face", json!(face.indices()))
                        .input("normal_axis", json!(normal))
                        .input("p", num(p))]
                });
                settle(r, "trace", format!("trace{:?}(p={p})", face.indices()))
            }));
        }
    }
    Ok(envelope("check-trace", config, run_tasks(pool, tasks)?))
}

/// `2^-4, ..., 2^-12`.
pub fn default_radii() -> Vec<f64> {
    (4..=12).map(|k| 0.5f64.powi(k)).collect()
}

const MOLLIFIER_EPS: [f64; 5] = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125];
const MOLLIFIER_MIN_ORDER: f64 = 1.8;
const MOLLIFIER_MASS_TOL: f64 = 1e-10;

pub fn gallery_cmd(a: &GalleryArgs, pool: &ThreadPool) -> Result<Envelope, CliError> {
    let radii = match &a.radii {
        Some(s) => number_list(s, "--radii")?,
        None => default_radii(),
    };
    if !(1..=2).contains(&a.n) {
        return Err(usage(format!("--n must be 1 or 2, got {}", a.n)));
    }
    let mut config = Map::new();
    config.insert("n".into(), json!(a.n));
    config.insert("radii".into(), p_json(&radii));
    config.insert(
        "studies".into(),
        json!(a
            .studies
            .iter()
            .map(|s| format!("{s:?}").to_lowercase())
            .collect::<Vec<_>>()),
    );
    config.insert("format".into(), json!(a.out.format.as_str()));
    config.insert(
        "output".into(),
        a.out
            .output
            .as_ref()
            .map_or(Value::Null, |p| json!(p.display().to_string())),
    );

    let run_counter = a.studies.contains(&Study::Counterexample);
    // validate before spending time on the other study
    let report = if run_counter {
        Some(counterexample_run(a.n, &radii)?)
    } else {
        None
    };
    let mut tasks: Vec<Task> = Vec::new();
    if a.studies.contains(&Study::Mollifier) {
        tasks.push(Box::new(|| {
            settle(mollifier_study(), "mollifier", "mollifier(bump2d)".into())
        }));
    }
    let mut entries = Vec::new();
    let mut table = None;
    if let Some(r) = &report {
        let inc = r.w12_increments();
        let mut e = Entry::new("counterexample", format!("loglog(n={})", r.n), r.verdict)
            .input("n", json!(r.n))
            .input("radii", p_json(&radii));
        e.value = Some(r.sup_growth());
        e.values = vec![
            ("sup_growth", r.sup_growth()),
            ("s12_growth", r.s12_growth()),
            ("last_w12_increment", inc.last().copied().unwrap_or(0.0)),
            ("quadrature_difference", r.quadrature_difference),
        ];
        if !r.sup_strictly_increasing() {
            e.notes.push("sup is not strictly increasing".into());
        }
        entries.push(e);
        for row in &r.rows {
            let mut e =
                Entry::new("counterexample_row", format!("r0={}", row.r0), Verdict::Pass).input("r0", num(row.r0));
            e.value = Some(row.sup);
            e.values = vec![("sup", row.sup), ("w12", row.w12), ("s12", row.s12)];
            entries.push(e);
        }
        table = Some(
            r.rows
                .iter()
                .map(|row| vec![row.r0, row.sup, row.w12, row.s12])
                .collect(),
        );
    }
    entries.extend(run_tasks(pool, tasks)?);
    let mut env = envelope("gallery", config, entries);
    env.table = table;
    Ok(env)
}

/// Kernel mass and self-convergence of `bump2d * ρ_ε`.
fn mollifier_study() -> Result<Vec<Entry>, Error> {
    let mol = Mollifier::new(2, MOLLIFIER_MASS_TOL)?;
    let u = gallery::lookup("bump2d").expect("gallery id").expr;
    let rect = Rectangle::cube(2, -1.5, 1.5)?;
    let s = convergence_study(&u, &mol, &rect, 21, &MOLLIFIER_EPS)?;
    let order = s.min_order();
    let mass_err = (mol.mass - 1.0).abs();
    let verdict = if order >= MOLLIFIER_MIN_ORDER && mass_err <= MOLLIFIER_MASS_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut e = Entry::new("mollifier", "mollifier(bump2d)", verdict)
        .input("eps", p_json(&MOLLIFIER_EPS))
        .input("box", rect_json(&rect))
        .input("points", json!(s.points));
    e.value = Some(order);
    e.margin = Some(order - MOLLIFIER_MIN_ORDER);
    e.values = vec![
        ("min_order", order),
        ("kernel_mass", mol.mass),
        ("nodes", mol.len() as f64),
    ];
    for (k, o) in s.orders.iter().enumerate() {
        e.notes.push(format!(
            "order between eps {} and {}: {o:.4}",
            MOLLIFIER_EPS[k + 1],
            MOLLIFIER_EPS[k + 2]
        ));
    }
    Ok(vec![e])
}

pub fn norms_cmd(a: &NormsArgs, pool: &ThreadPool) -> Result<Envelope, CliError> {
    let u = load_function(&a.f.function, a.f.n)?;
    let n = u.n;
    let ps = p_list(&a.p, true)?;
    let opts = norm_options(&a.quad)?;
    let rect = match &a.rect {
        Some(s) => rect_arg(s, n, "--box")?,
        None => Rectangle::unit(n).expect("valid cube"),
    };
    if let Some(g) = a.gamma {
        if !(g > 0.0 && g <= 1.0) {
            return Err(usage(format!("--gamma must lie in (0, 1], got {g}")));
        }
    }
    let needs_pairs = a
        .kinds
        .iter()
        .any(|k| matches!(k, NormChoice::Holder | NormChoice::HolderNorm));
    if needs_pairs && a.pairs == 0 {
        return Err(usage("--pairs must be positive"));
    }
    let sampler = PairSampler::new(a.seed, a.pairs);
    let mut config = base_config(&a.f, &u, &a.out);
    config.insert("p".into(), p_json(&ps));
    config.insert("box".into(), rect_json(&rect));
    config.insert(
        "kinds".into(),
        json!(a.kinds.iter().map(|k| choice_name(*k)).collect::<Vec<_>>()),
    );
    config.insert("gamma".into(), opt_num(a.gamma));
    config.insert("pairs".into(), json!(a.pairs));
    config.insert("seed".into(), json!(a.seed));
    quad_config(&mut config, &opts);

    let mut tasks: Vec<Task> = Vec::new();
    let (expr, rect, opts, sampler) = (&u.expr, &rect, &opts, &sampler);
    for &kind in &a.kinds {
        if kind == NormChoice::C0 {
            tasks.push(Box::new(move || {
                settle(
                    sup_norm(expr, rect, opts).map(|r| vec![norm_entry(r)]),
                    "norm",
                    "c0".into(),
                )
            }));
            continue;
        }
        for &p in &ps {
            match kind {
                NormChoice::Lp => tasks.push(Box::new(move || {
                    settle(
                        lp_norm(expr, rect, p, opts).map(|r| vec![norm_entry(r)]),
                        "norm",
                        format!("lp(p={p})"),
                    )
                })),
                NormChoice::S1p => tasks.push(Box::new(move || {
                    settle(
                        s1p_norm(expr, rect, p, opts).map(|r| vec![norm_entry(r)]),
                        "norm",
                        format!("s1p(p={p})"),
                    )
                })),
                NormChoice::Ws => {
                    for axis in 1..=n {
                        tasks.push(Box::new(move || {
                            let r = ws_norm(expr, rect, axis, p, opts).map(|r| vec![norm_entry(r)]);
                            settle(r, "norm", format!("ws(p={p},axis={axis})"))
                        }));
                    }
                }
                NormChoice::Holder | NormChoice::HolderNorm => {
                    let gamma = match a.gamma {
                        Some(g) => g,
                        None if p > 1.0 => {
                            if p.is_infinite() {
                                1.0
                            } else {
                                (p - 1.0) / p
                            }
                        }
                        None => return Err(usage("holder norms at p = 1 need an explicit --gamma")),
                    };
                    let semi = kind == NormChoice::Holder;
                    tasks.push(Box::new(move || {
                        let r = if semi {
                            holder_seminorm(expr, rect, gamma, sampler)
                        } else {
                            holder_norm(expr, rect, gamma, sampler, opts)
                        };
                        let name = format!("{}(gamma={gamma})", if semi { "holder" } else { "holder_norm" });
                        settle(r.map(|r| vec![norm_entry(r).input("p", num(p))]), "norm", name)
                    }));
                }
                NormChoice::C0 => unreachable!(),
            }
        }
    }
    Ok(envelope("norms", config, run_tasks(pool, tasks)?))
}

fn choice_name(k: NormChoice) -> &'static str {
    match k {
        NormChoice::Lp => "lp",
        NormChoice::S1p => "s1p",
        NormChoice::Ws => "ws",
        NormChoice::C0 => "c0",
        NormChoice::Holder => "holder",
        NormChoice::HolderNorm => "holder-norm",
    }
}

fn norm_entry(r: NormReport) -> Entry {
    let mut name = r.kind.as_str().to_string();
    let mut params = Vec::new();
    if !matches!(r.kind.as_str(), "c0" | "holder_seminorm" | "holder_norm") {
        params.push(format!("p={}", r.p));
    }
    if let Some(axis) = r.axis {
        params.push(format!("axis={axis}"));
    }
    if let Some(g) = r.gamma {
        params.push(format!("gamma={g}"));
    }
    if !params.is_empty() {
        name = format!("{name}({})", params.join(","));
    }
    let verdict = if r.converged || r.sampled_lower_bound {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    let mut e = Entry::new("norm", name, verdict)
        .input("norm", json!(r.kind.as_str()))
        .input("p", num(r.p))
        .input("box", rect_json(&r.rect));
    if let Some(axis) = r.axis {
        e = e.input("axis", json!(axis));
    }
    if let Some(g) = r.gamma {
        e = e.input("gamma", num(g));
    }
    e.value = Some(r.value);
    e.values = vec![("value", r.value)];
    if let Some(v) = r.local_value {
        e.values.push(("local", v));
    }
    if let Some(v) = r.global_value {
        e.values.push(("global", v));
    }
    e.sampler = r.sampler;
    e.quadrature = r.quadrature.clone();
    if r.sampled_lower_bound {
        e.notes.push("sampled lower bound".into());
    }
    if !r.converged && !r.sampled_lower_bound {
        e.notes.push(format!(
            "refinement did not converge; last difference {:e}",
            r.error_estimate()
        ));
    }
    e
}
