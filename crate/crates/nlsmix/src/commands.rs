//! The shooting-based commands: ground-state, scan, sweep and reduce.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use nlsmix_core::continuation::{
    assemble, compare_tlogt_model, derivative_identity_check, fit_exponent, log_grid, ratio_grid, SweepResult,
    SweepSample, Threshold,
};
use nlsmix_core::functionals::bubble_level;
use nlsmix_core::ode::Tolerances;
use nlsmix_core::params::{critical_exponent, gamma};
use nlsmix_core::reduction::{solve_normalized, ReductionCurve};
use nlsmix_core::shooting::{
    find_positive_solutions, shoot_ground_state, ScanOptions, ShootingOptions, ShotClass, SolutionKind,
    SolutionRecord,
};
use nlsmix_core::ProblemParams;

use crate::cache::{Cache, CacheKey};
use crate::cli::{GroundStateArgs, ProblemArgs, ReduceArgs, ScanArgs, ShootArgs, SweepArgs};
use crate::error::CliError;
use crate::table::{num, Cell, Table};

pub struct Context {
    pub cache: Option<Cache>,
    pub pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(cache: Option<Cache>, threads: usize) -> Context {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        Context { cache, pool }
    }
}

/// What a command hands back for the envelope, the CSV files and the console.
#[derive(Debug, Default)]
pub struct Outcome {
    pub records: serde_json::Value,
    pub tables: Vec<Table>,
    pub lines: Vec<String>,
    pub errors: Vec<String>,
    /// Set by `verify` when a check fails.
    pub failed_checks: usize,
}

pub(crate) fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Invalid(msg()))
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    check(x > 0.0 && x.is_finite(), || format!("{name} must be positive and finite, got {x}"))
}

fn validate_problem(dim: u32, q: f64, critical: bool) -> Result<(), CliError> {
    check(dim >= 3, || format!("N must be at least 3, got {dim}"))?;
    let c = critical_exponent(dim);
    if critical {
        check(q > 2.0 && q < c, || format!("q must lie in (2, {c}) for N = {dim}, got {q}"))
    } else {
        check(q > 2.0 && q.is_finite(), || format!("q must exceed 2, got {q}"))
    }
}

fn validate_shoot(s: &ShootArgs) -> Result<(), CliError> {
    positive("rtol", s.rtol)?;
    positive("atol", s.atol)?;
    if let Some(r) = s.r_max {
        positive("r-max", r)?;
    }
    if let Some(d) = s.d_min {
        positive("d-min", d)?;
    }
    if let Some(d) = s.d_max {
        positive("d-max", d)?;
    }
    if let (Some(a), Some(b)) = (s.d_min, s.d_max) {
        check(a < b, || format!("d-min {a} must be below d-max {b}"))?;
    }
    check(s.n_scan >= 100, || format!("n-scan must be at least 100, got {}", s.n_scan))
}

fn validate_grid(lo: f64, hi: f64, points: usize, min_points: usize) -> Result<(), CliError> {
    positive("t-min", lo)?;
    positive("t-max", hi)?;
    check(lo < hi, || format!("t-min {lo} must be below t-max {hi}"))?;
    check(points >= min_points, || format!("need at least {min_points} grid points, got {points}"))
}

fn problem_params(p: &ProblemArgs, t: f64) -> Result<ProblemParams, CliError> {
    validate_problem(p.dim, p.q, !p.no_crit)?;
    check(t >= 0.0 && t.is_finite(), || format!("t must be finite and nonnegative, got {t}"))?;
    check(p.lambda > 0.0 && p.lambda.is_finite(), || format!("lambda must be positive, got {}", p.lambda))?;
    let params = ProblemParams { dim: p.dim, q: p.q, t, lambda: p.lambda, critical: !p.no_crit };
    params.validate()?;
    Ok(params)
}

fn shooting_options(s: &ShootArgs) -> (ScanOptions, ShootingOptions) {
    let scan = ScanOptions { d_min: s.d_min, d_max: s.d_max, n_scan: s.n_scan };
    let opts = ShootingOptions { tol: Tolerances { rel: s.rtol, abs: s.atol }, r_max: s.r_max, ..Default::default() };
    (scan, opts)
}

/// A height scan as stored in the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredScan {
    pub heights: Vec<f64>,
    pub classes: Vec<ShotClass>,
    pub solutions: Vec<SolutionRecord>,
}

pub fn cached_scan(
    ctx: &Context,
    params: &ProblemParams,
    scan: &ScanOptions,
    opts: &ShootingOptions,
) -> Result<StoredScan, nlsmix_core::Error> {
    let key = CacheKey::new("scan", &(params, scan, opts));
    if let Some(hit) = ctx.cache.as_ref().and_then(|c| c.lookup::<StoredScan>(&key)) {
        return Ok(hit);
    }
    let rep = find_positive_solutions(params, scan, opts)?;
    let stored = StoredScan { heights: rep.heights, classes: rep.classes, solutions: rep.solutions };
    if let Some(c) = &ctx.cache {
        c.store(&key, &stored);
    }
    Ok(stored)
}

fn kind_name(k: SolutionKind) -> &'static str {
    match k {
        SolutionKind::GroundState => "ground_state",
        SolutionKind::Excited => "excited",
        SolutionKind::BlowUpBranch => "blow_up_branch",
    }
}

fn class_name(c: ShotClass) -> &'static str {
    match c {
        ShotClass::CrossesZero => "crosses_zero",
        ShotClass::BlowsUp => "blows_up",
        ShotClass::Decays => "decays",
    }
}

fn solution_summary(s: &SolutionRecord) -> serde_json::Value {
    let c = &s.certificate;
    let g = c.norms.grad;
    json!({
        "kind": kind_name(s.kind),
        "height": s.height,
        "height_error": s.height_error,
        "energy": c.energy,
        "level_gap": c.level_gap,
        "nehari_rel": c.nehari_res / g,
        "pohozaev_rel": c.pohozaev_res / g,
        "energy_identity_rel": c.energy_identity_res / g,
        "norms": c.norms,
        "grid_points": s.profile.grid.len(),
        "r_last": s.profile.r_last(),
        "tail": s.profile.tail,
    })
}

const SOLUTION_COLUMNS: [&str; 12] = [
    "index", "kind", "height", "height_error", "energy", "level_gap", "nehari_rel", "pohozaev_rel", "mass", "grad",
    "lq", "crit",
];

fn solution_row(i: usize, s: &SolutionRecord) -> Vec<Cell> {
    let c = &s.certificate;
    let n = c.norms;
    vec![
        i.into(),
        kind_name(s.kind).into(),
        s.height.into(),
        s.height_error.into(),
        c.energy.into(),
        c.level_gap.into(),
        (c.nehari_res / n.grad).into(),
        (c.pohozaev_res / n.grad).into(),
        n.mass.into(),
        n.grad.into(),
        n.lq.into(),
        n.crit.into(),
    ]
}

fn profile_table(name: String, s: &SolutionRecord) -> Table {
    let mut t = Table::new(name, &["r", "u", "du"]);
    let p = &s.profile;
    for i in 0..p.grid.len() {
        t.push(vec![p.grid[i].into(), p.values[i].into(), p.slopes[i].into()]);
    }
    t
}

fn solution_line(i: usize, s: &SolutionRecord) -> String {
    format!(
        "solution {i}: {} height {} energy {} residual {:.3e}",
        kind_name(s.kind),
        num(s.height),
        num(s.energy()),
        s.certificate.relative_residual()
    )
}

fn solutions_outcome(solutions: &[SolutionRecord], out: &mut Outcome) {
    let mut table = Table::new("solutions", &SOLUTION_COLUMNS);
    for (i, s) in solutions.iter().enumerate() {
        table.push(solution_row(i, s));
        out.tables.push(profile_table(format!("profile_{i}"), s));
        out.lines.push(solution_line(i, s));
    }
    out.tables.insert(0, table);
}

pub fn ground_state(ctx: &Context, a: &GroundStateArgs) -> Result<Outcome, CliError> {
    let params = problem_params(&a.problem, a.t)?;
    validate_shoot(&a.shoot)?;
    let (scan, opts) = shooting_options(&a.shoot);
    if let (Some(lo), Some(hi)) = (a.d_lo, a.d_hi) {
        positive("d-lo", lo)?;
        positive("d-hi", hi)?;
    }
    let mut out = Outcome::default();
    let found = match (a.d_lo, a.d_hi) {
        (Some(lo), Some(hi)) => shoot_ground_state(&params, lo, hi, &opts).map(Some),
        _ => cached_scan(ctx, &params, &scan, &opts)
            .map(|s| s.solutions.into_iter().find(|s| s.kind == SolutionKind::GroundState)),
    };
    match found {
        Ok(Some(gs)) => {
            out.records = json!({ "params": params, "ground_state": solution_summary(&gs) });
            solutions_outcome(std::slice::from_ref(&gs), &mut out);
        }
        Ok(None) => {
            out.records = json!({ "params": params, "ground_state": null });
            out.errors.push(format!("no ground state found for {params:?}"));
        }
        Err(e) => {
            out.records = json!({ "params": params, "ground_state": null });
            out.errors.push(e.to_string());
        }
    }
    Ok(out)
}

pub fn scan(ctx: &Context, a: &ScanArgs) -> Result<Outcome, CliError> {
    let params = problem_params(&a.problem, a.t)?;
    validate_shoot(&a.shoot)?;
    let (scan, opts) = shooting_options(&a.shoot);
    let mut out = Outcome::default();
    match cached_scan(ctx, &params, &scan, &opts) {
        Ok(s) => {
            let mut grid = Table::new("scan", &["d", "class"]);
            for (d, c) in s.heights.iter().zip(&s.classes) {
                grid.push(vec![(*d).into(), class_name(*c).into()]);
            }
            let level = bubble_level(params.dim);
            let below = s.solutions.iter().filter(|x| x.energy() < level).count();
            out.records = json!({
                "params": params,
                "bubble_level": level,
                "n_solutions": s.solutions.len(),
                "n_below_level": below,
                "solutions": s.solutions.iter().map(solution_summary).collect::<Vec<_>>(),
            });
            out.lines.push(format!("{} solutions, {below} below the bubble level {}", s.solutions.len(), num(level)));
            solutions_outcome(&s.solutions, &mut out);
            out.tables.push(grid);
        }
        Err(e) => {
            out.records = json!({ "params": params, "solutions": [] });
            out.errors.push(e.to_string());
        }
    }
    Ok(out)
}

fn t_grid(lo: f64, hi: f64, points: usize, ratio: Option<f64>) -> Vec<f64> {
    match ratio {
        Some(r) => ratio_grid(lo, hi, r),
        None => log_grid(lo, hi, points),
    }
}

fn sweep_samples(ctx: &Context, dim: u32, q: f64, grid: &[f64], shoot: &ShootArgs) -> Vec<SweepSample> {
    let (scan, opts) = shooting_options(shoot);
    ctx.pool.install(|| {
        grid.par_iter()
            .map(|&t| match cached_scan(ctx, &ProblemParams::new(dim, q, t), &scan, &opts) {
                Ok(s) => SweepSample::from_solutions(t, dim, &s.solutions),
                Err(e) => SweepSample::failed(t, dim, &e),
            })
            .collect()
    })
}

fn threshold_json(t: &Threshold) -> serde_json::Value {
    match *t {
        Threshold::Bracket { lo, hi } => json!({ "kind": "bracket", "lo": lo, "hi": hi }),
        Threshold::BelowGrid { hi } => json!({ "kind": "below_grid", "lo": 0.0, "hi": hi }),
        Threshold::NotFound => json!({ "kind": "not_found" }),
    }
}

fn threshold_line(t: &Threshold) -> String {
    match *t {
        Threshold::Bracket { lo, hi } => format!("threshold bracket [{}, {}]", num(lo), num(hi)),
        Threshold::BelowGrid { hi } => format!("ground states down to the first grid point: bracket [0, {}]", num(hi)),
        Threshold::NotFound => "no ground state below the bubble level on this grid".into(),
    }
}

/// Default fit window: half a decade above the threshold up to the grid end.
fn fit_window(sw: &SweepResult, t_max: f64, fit_min: Option<f64>, fit_max: Option<f64>) -> (f64, f64) {
    let start = match sw.threshold {
        Threshold::Bracket { hi, .. } | Threshold::BelowGrid { hi } => hi * 10f64.sqrt(),
        Threshold::NotFound => 0.0,
    };
    (fit_min.unwrap_or(start), fit_max.unwrap_or(t_max))
}

pub fn sweep(ctx: &Context, a: &SweepArgs) -> Result<Outcome, CliError> {
    validate_problem(a.dim, a.q, true)?;
    validate_shoot(&a.shoot)?;
    validate_grid(a.t_min, a.t_max, a.points, 2)?;
    positive("cert-tol", a.cert_tol)?;
    if let Some(r) = a.ratio {
        check(r > 1.0 && r.is_finite(), || format!("ratio must exceed 1, got {r}"))?;
    }
    let grid = t_grid(a.t_min, a.t_max, a.points, a.ratio);
    let samples = sweep_samples(ctx, a.dim, a.q, &grid, &a.shoot);
    let mut sw = assemble(a.dim, a.q, samples, a.cert_tol);
    let window = fit_window(&sw, a.t_max, a.fit_min, a.fit_max);

    let mut out = Outcome::default();
    let mut fit_notes = Vec::new();
    let quantities: [(&str, fn(&SweepSample) -> Option<f64>); 4] = [
        ("m", |s| Some(s.m)),
        ("vq_norm", |s| s.vq()),
        ("sup_norm_1", |s| s.lowest_height()),
        ("sup_norm_2", |s| s.highest_height()),
    ];
    for (name, f) in quantities {
        match fit_exponent(&sw.series(f), window) {
            Ok(mut fit) => {
                fit.quantity = name.into();
                out.lines.push(format!("fit {name}: exponent {} stderr {:.3e} over {} points", num(fit.exponent), fit.stderr, fit.n));
                sw.fits.push(fit);
            }
            Err(e) => fit_notes.push(format!("{name}: {e}")),
        }
    }
    let tlogt = if (a.q - 3.0).abs() < 1e-12 {
        compare_tlogt_model(&sw.series(|s| s.highest_height()), window).ok()
    } else {
        None
    };
    if let Some(c) = &tlogt {
        out.lines.push(format!(
            "sup_norm_2 t log t model rms {:.3e} vs power rms {:.3e}",
            c.tlogt_rms, c.power_rms
        ));
    }
    let derivative = derivative_identity_check(&sw);
    if let Some(d) = &derivative {
        out.lines.push(format!("derivative identity max violation {:.3e}", d.max_violation));
    }
    let violations = sw.invariant_violations(1e-9);
    let scaled = sw.scaled_energy_violations(window, 0.02);
    for v in violations.iter().chain(&scaled) {
        out.lines.push(format!("invariant violation: {v}"));
    }
    out.lines.insert(0, threshold_line(&sw.threshold));
    for s in sw.samples.iter().filter(|s| s.failure.is_some()) {
        out.errors.push(format!("t = {}: {}", num(s.t), s.failure.as_deref().unwrap_or("")));
    }
    let g = gamma(a.dim, a.q);
    let large_t = a.dim as f64 / (a.q * g);

    let mut m_of_t = Table::new("m_of_t", &["t", "m", "vq_norm", "n_solutions", "sup_norm_1", "sup_norm_2"]);
    let mut b1 = Table::new("sup_norm_branch_1", &["t", "sup_norm"]);
    let mut b2 = Table::new("sup_norm_branch_2", &["t", "sup_norm"]);
    for s in &sw.samples {
        if s.failure.is_some() {
            m_of_t.push(vec![s.t.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
            continue;
        }
        let vq = s.least.map(|l| l.norms.lq);
        let h1 = s.heights.first().copied();
        m_of_t.push(vec![s.t.into(), s.m.into(), vq.into(), s.n_solutions.into(), h1.into(), s.highest_height().into()]);
        if let Some(h) = h1 {
            b1.push(vec![s.t.into(), h.into()]);
        }
        if let Some(h) = s.highest_height() {
            b2.push(vec![s.t.into(), h.into()]);
        }
    }
    out.records = json!({
        "sweep": sw,
        "threshold": threshold_json(&sw.threshold),
        "fit_window": [window.0, window.1],
        "fit_notes": fit_notes,
        "expected_large_t_exponents": { "m": -large_t, "vq_norm": -large_t - 1.0 },
        "tlogt_comparison": tlogt,
        "derivative_identity": derivative,
        "invariant_violations": violations,
        "scaled_energy_violations": scaled,
    });
    out.tables = vec![m_of_t, b1, b2];
    Ok(out)
}

pub fn reduce(ctx: &Context, a: &ReduceArgs) -> Result<Outcome, CliError> {
    validate_problem(a.dim, a.q, true)?;
    validate_shoot(&a.shoot)?;
    validate_grid(a.t_min, a.t_max, a.points, 2)?;
    positive("a", a.a)?;
    positive("mu", a.mu)?;
    let grid = log_grid(a.t_min, a.t_max, a.points);
    let samples = sweep_samples(ctx, a.dim, a.q, &grid, &a.shoot);
    let sw = assemble(a.dim, a.q, samples, 1e-5);
    let mut out = Outcome::default();
    for s in sw.samples.iter().filter(|s| s.failure.is_some()) {
        out.errors.push(format!("t = {}: {}", num(s.t), s.failure.as_deref().unwrap_or("")));
    }
    let pts = sw.series(|s| s.vq());
    let curve = match ReductionCurve::from_samples(a.dim, a.q, a.a, &pts) {
        Ok(c) => c,
        Err(e) => {
            out.errors.push(format!("no usable reduction curve: {e}"));
            out.records = json!({ "curve": null, "report": null });
            return Ok(out);
        }
    };
    let mut curve_table = Table::new("mu_of_t", &["t", "mu", "lambda", "vq_norm"]);
    for p in &curve.points {
        curve_table.push(vec![p.t.into(), p.mu.into(), p.lambda.into(), p.vq.into()]);
    }
    out.tables.push(curve_table);
    let (scan, opts) = shooting_options(&a.shoot);
    let level = bubble_level(a.dim);
    let solve_v = |t: f64| -> nlsmix_core::Result<SolutionRecord> {
        let s = cached_scan(ctx, &ProblemParams::new(a.dim, a.q, t), &scan, &opts)?;
        s.solutions
            .into_iter()
            .filter(|s| s.energy() < level)
            .min_by(|x, y| x.energy().total_cmp(&y.energy()))
            .ok_or_else(|| nlsmix_core::Error::InvalidData(format!("no ground state at t = {t}")))
    };
    let (t_sup, mu_sup) = curve.sup();
    out.lines.push(format!("sup mu_t = {} at t = {}", num(mu_sup), num(t_sup)));
    match solve_normalized(a.mu, &curve, solve_v) {
        Ok(rep) => {
            let mut table = Table::new(
                "normalized",
                &["index", "t", "lambda", "mu", "action", "height", "mass_rel", "mass_identity_rel", "ground_state"],
            );
            for (i, s) in rep.solutions.iter().enumerate() {
                table.push(vec![
                    i.into(),
                    s.point.t.into(),
                    s.point.lambda.into(),
                    s.point.mu.into(),
                    s.action.into(),
                    s.profile.height().into(),
                    s.mass_rel.into(),
                    s.mass_identity_rel.into(),
                    s.ground_state.into(),
                ]);
                let mut prof = Table::new(format!("normalized_profile_{i}"), &["r", "u", "du"]);
                for k in 0..s.profile.grid.len() {
                    prof.push(vec![s.profile.grid[k].into(), s.profile.values[k].into(), s.profile.slopes[k].into()]);
                }
                out.tables.push(prof);
                out.lines.push(format!(
                    "solution {i}: t = {} lambda = {} action = {} mass identity {:.3e}{}",
                    num(s.point.t),
                    num(s.point.lambda),
                    num(s.action),
                    s.mass_identity_rel,
                    if s.ground_state { " (ground state)" } else { "" }
                ));
            }
            if rep.nonexistence() {
                out.lines.push(format!("nonexistence at this μ (μ = {} > sup μ_t = {})", num(rep.mu), num(rep.sup_mu)));
            } else if rep.solutions.is_empty() {
                out.lines.push(format!(
                    "no solution on the sampled curve for μ = {} (sup μ_t = {}); widen the t range",
                    num(rep.mu),
                    num(rep.sup_mu)
                ));
            }
            out.tables.insert(1, table);
            let summaries: Vec<_> = rep
                .solutions
                .iter()
                .map(|s| {
                    json!({
                        "point": s.point,
                        "action": s.action,
                        "height": s.profile.height(),
                        "norms": s.profile.norms,
                        "mass_rel": s.mass_rel,
                        "mass_identity_rel": s.mass_identity_rel,
                        "ground_state": s.ground_state,
                    })
                })
                .collect();
            out.records = json!({
                "curve": curve,
                "sup_mu": rep.sup_mu,
                "t_at_sup": rep.t_at_sup,
                "mu": rep.mu,
                "nonexistence": rep.nonexistence(),
                "solutions": summaries,
            });
        }
        Err(e) => {
            out.errors.push(e.to_string());
            out.records = json!({ "curve": curve, "sup_mu": mu_sup, "t_at_sup": t_sup, "solutions": [] });
        }
    }
    Ok(out)
}
