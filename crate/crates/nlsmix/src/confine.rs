//! The `confine` command: large-t continuation, the small-t mass law and the
//! normalized solutions recovered by rescaling.

use rayon::prelude::*;
use serde_json::json;

use nlsmix_core::confinement::{
    distance_to_limit, fibering_tau, mass_exponent, multiplier_law, solve_extrapolated, solve_w_infty,
    uniqueness_probe, warm_sweep, ConfinedSolution, FlowOptions, Start,
};
use nlsmix_core::continuation::{fit_exponent, log_grid, FitRecord};
use nlsmix_core::shooting::ShootingOptions;

use crate::cli::ConfineArgs;
use crate::commands::{check, Context, Outcome};
use crate::error::CliError;
use crate::table::{num, Cell, Table};

fn validate(a: &ConfineArgs) -> Result<(), CliError> {
    check(a.p > 10.0 / 3.0 && a.p < 6.0, || format!("p must lie in (10/3, 6), got {}", a.p))?;
    check(a.t_min > 0.0 && a.t_min < a.t_max && a.t_max.is_finite(), || {
        format!("need 0 < t-min < t-max, got [{}, {}]", a.t_min, a.t_max)
    })?;
    check(a.points >= 2, || format!("need at least 2 large-t points, got {}", a.points))?;
    if a.small_points > 0 {
        check(a.small_t_min > 0.0 && a.small_t_min < a.small_t_max, || {
            format!("need 0 < small-t-min < small-t-max, got [{}, {}]", a.small_t_min, a.small_t_max)
        })?;
    }
    check(a.nodes % 2 == 1 && a.nodes >= 17, || format!("nodes must be odd and at least 17, got {}", a.nodes))?;
    check(a.flow_tol > 0.0, || format!("flow-tol must be positive, got {}", a.flow_tol))?;
    check(a.max_iter > 0, || "max-iter must be positive".into())
}

fn fit(name: &str, pts: &[(f64, f64)], notes: &mut Vec<String>) -> Option<FitRecord> {
    match fit_exponent(pts, (0.0, f64::INFINITY)) {
        Ok(mut f) => {
            f.quantity = name.into();
            Some(f)
        }
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    }
}

pub fn confine(ctx: &Context, a: &ConfineArgs) -> Result<Outcome, CliError> {
    validate(a)?;
    let p = a.p;
    let opts = FlowOptions { tol: a.flow_tol, max_iter: a.max_iter, ..Default::default() };
    let mut out = Outcome::default();
    let w_inf = solve_w_infty(p, &ShootingOptions::default())?;
    let lp_inf = w_inf.lq();
    out.lines.push(format!("w_inf height {} lp norm {}", num(w_inf.height), num(lp_inf)));

    let mut ts = log_grid(a.t_min, a.t_max, a.points);
    ts.reverse();
    let large = match warm_sweep(&ts, p, a.nodes, &opts, Some(&w_inf.profile)) {
        Ok(v) => v,
        Err(e) => {
            out.errors.push(format!("large-t continuation: {e}"));
            Vec::new()
        }
    };
    let small_ts = if a.small_points > 0 { log_grid(a.small_t_min, a.small_t_max, a.small_points) } else { Vec::new() };
    let small: Vec<(f64, Result<ConfinedSolution, nlsmix_core::Error>)> = ctx.pool.install(|| {
        small_ts.par_iter().map(|&t| (t, solve_extrapolated(t, p, a.nodes, &opts, Start::Cold(None)))).collect()
    });

    let mut notes = Vec::new();
    let mut states = Vec::new();
    let mut confined = Table::new(
        "confined",
        &["t", "mass", "grad", "lp", "pot", "energy", "mesh_change", "distance_to_limit", "pot_over_t2", "iterations"],
    );
    let mut normalized = Table::new(
        "normalized_confined",
        &["t", "r", "lambda", "mass_rel", "pohozaev_rel", "fibering_d1_rel", "fibering_d2"],
    );
    let mut lambda_of_r = Table::new("lambda_of_r", &["r", "lambda", "law"]);
    let mut lr = Vec::new();
    let mut diag = Vec::new();
    for sol in large.iter().rev() {
        let t = sol.t();
        let n = sol.norms;
        let dist = distance_to_limit(&sol.fine, &w_inf.profile);
        let pot_t2 = n.pot / (t * t);
        confined.push(vec![
            t.into(),
            n.mass.into(),
            n.grad.into(),
            n.lp.into(),
            n.pot.into(),
            sol.energy().into(),
            sol.mesh_change().into(),
            dist.into(),
            pot_t2.into(),
            sol.fine.iterations.into(),
        ]);
        let nc = match sol.normalized() {
            Ok(nc) => nc,
            Err(e) => {
                out.errors.push(format!("t = {}: {e}", num(t)));
                states.push(json!({ "t": t, "norms": n, "normalized": null }));
                continue;
            }
        };
        let f = fibering_tau(&nc.norms, p, 1.0);
        let law = multiplier_law(nc.r, p, lp_inf);
        normalized.push(vec![
            t.into(),
            nc.r.into(),
            nc.lambda.into(),
            nc.mass_rel.into(),
            nc.pohozaev_rel.into(),
            (f.d1 / nc.norms.grad).into(),
            f.d2.into(),
        ]);
        lambda_of_r.push(vec![nc.r.into(), nc.lambda.into(), law.into()]);
        lr.push((nc.r, nc.lambda));
        diag.push((nc.r, f.d1 / nc.norms.grad, f.d2));
        states.push(json!({
            "t": t,
            "nodes": a.nodes,
            "extent": sol.fine.mesh.s(sol.fine.mesh.ns - 1),
            "norms": n,
            "fine_norms": sol.fine.norms,
            "coarse_norms": sol.coarse_norms,
            "energy": sol.energy(),
            "mesh_change": sol.mesh_change(),
            "iterations": sol.fine.iterations,
            "residual": sol.fine.residual,
            "boundary_fraction": sol.fine.boundary_fraction,
            "monotone": sol.fine.is_monotone(),
            "distance_to_limit": dist,
            "pot_over_t2": pot_t2,
            "normalized": nc,
            "fibering_at_one": f,
            "fibering_d1_rel": f.d1 / nc.norms.grad,
            "multiplier_law": law,
        }));
    }
    lr.sort_by(|x, y| x.0.total_cmp(&y.0));
    diag.sort_by(|x, y| x.0.total_cmp(&y.0));
    let lambda_fit = fit("lambda_of_r", &lr, &mut notes);

    let mut small_table = Table::new("small_t_mass", &["t", "mass", "mesh_change"]);
    let mut small_pts = Vec::new();
    let mut small_states = Vec::new();
    for (t, r) in &small {
        match r {
            Ok(sol) => {
                small_table.push(vec![(*t).into(), sol.norms.mass.into(), sol.mesh_change().into()]);
                small_pts.push((*t, sol.norms.mass));
                small_states.push(json!({
                    "t": t,
                    "extent": sol.fine.mesh.s(sol.fine.mesh.ns - 1),
                    "norms": sol.norms,
                    "energy": sol.energy(),
                    "mesh_change": sol.mesh_change(),
                    "iterations": sol.fine.iterations,
                }));
            }
            Err(e) => {
                small_table.push(vec![(*t).into(), Cell::Empty, Cell::Empty]);
                out.errors.push(format!("small t = {}: {e}", num(*t)));
            }
        }
    }
    let mass_fit = if small_pts.is_empty() { None } else { fit("small_t_mass", &small_pts, &mut notes) };

    let uniqueness = if a.uniqueness && !large.is_empty() {
        let cold: Result<Vec<ConfinedSolution>, _> = ctx.pool.install(|| {
            large
                .par_iter()
                .map(|s| solve_extrapolated(s.t(), p, a.nodes, &opts, Start::Cold(Some(&w_inf.profile))))
                .collect()
        });
        match cold.and_then(|c| uniqueness_probe(&large, &c, 1e-3)) {
            Ok(u) => {
                let line = match u.agree_from {
                    Some(t) => format!("warm and cold solves agree from t = {}", num(t)),
                    None => "warm and cold solves disagree at the largest t".into(),
                };
                out.lines.push(line);
                Some(u)
            }
            Err(e) => {
                out.errors.push(format!("uniqueness probe: {e}"));
                None
            }
        }
    } else {
        None
    };

    if let Some(f) = &lambda_fit {
        out.lines.push(format!("lambda vs r slope {} (law {})", num(f.exponent), num(-4.0 * (p - 2.0) / (3.0 * p - 10.0))));
    }
    if let Some(f) = &mass_fit {
        out.lines.push(format!("small-t mass exponent {} (law {})", num(f.exponent), num(-mass_exponent(p))));
    }
    for &(r, d1, d2) in diag.iter().take(3) {
        out.lines.push(format!("r = {}: fibering d1/grad {:.3e} d2 {}", num(r), d1, num(d2)));
    }
    out.records = json!({
        "p": p,
        "w_inf": { "height": w_inf.height, "norms": w_inf.certificate.norms, "residual": w_inf.certificate.relative_residual() },
        "large_t": states,
        "small_t": small_states,
        "fits": [lambda_fit, mass_fit],
        "expected": {
            "lambda_of_r": -4.0 * (p - 2.0) / (3.0 * p - 10.0),
            "small_t_mass": -mass_exponent(p),
        },
        "fit_notes": notes,
        "uniqueness": uniqueness,
    });
    out.tables = vec![confined, normalized, lambda_of_r, small_table];
    Ok(out)
}
