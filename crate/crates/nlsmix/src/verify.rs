//! Built-in certificate suite run by `verify`.

use serde::Serialize;
use serde_json::json;

use nlsmix_core::confinement::{cold_guess, default_mesh, solve_confined, solve_w_infty, FlowOptions};
use nlsmix_core::functionals::{bubble_level, sobolev_constant, sobolev_constant_closed_form};
use nlsmix_core::ode::Tolerances;
use nlsmix_core::reduction::{from_unit_frequency, mu_of_t, relative_reduction_residual, to_unit_frequency};
use nlsmix_core::shooting::{bubble_profile, find_positive_solutions, ScanOptions, ShootingOptions, SolutionKind};
use nlsmix_core::ProblemParams;

use crate::commands::Outcome;

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn below(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult { name, pass: value.abs() < tolerance, value, tolerance, detail: detail.into() }
}

fn failed(name: &'static str, e: impl std::fmt::Display) -> CheckResult {
    CheckResult { name, pass: false, value: f64::NAN, tolerance: 0.0, detail: e.to_string() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn run_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let worst = (3..=6)
        .map(|n| rel(sobolev_constant(n), sobolev_constant_closed_form(n)))
        .fold(0.0, f64::max);
    out.push(below("sobolev_constant", worst, 1e-6, "quadrature vs closed form, N = 3..6"));

    match bubble_profile(3, 3f64.powf(0.25), 1e3, Tolerances::default().scaled(1e-2)) {
        Ok(b) => {
            out.push(below("bubble_residual", b.certificate.relative_residual(), 1e-8, "Nehari and Pohozaev, N = 3"));
            out.push(below("bubble_energy", rel(b.energy(), bubble_level(3)), 1e-8, "energy vs S^{3/2}/3"));
        }
        Err(e) => out.push(failed("bubble_residual", e)),
    }

    match solve_w_infty(4.0, &ShootingOptions::default()) {
        Ok(w) => {
            let c = &w.certificate;
            out.push(below("soliton_residual", c.relative_residual(), 1e-8, "-Δw + w = w³"));
            out.push(below("soliton_height", w.height - 4.3374, 1e-4, format!("w(0) = {}", w.height)));
            out.push(below("soliton_energy_identity", c.energy_identity_res / c.norms.grad, 1e-8, "‖∇w‖² = 3E"));
        }
        Err(e) => out.push(failed("soliton_residual", e)),
    }

    let params = ProblemParams::new(3, 3.0, 50.0);
    let gs = find_positive_solutions(&params, &ScanOptions::default(), &ShootingOptions::default())
        .map_err(|e| e.to_string())
        .and_then(|r| r.solutions.into_iter().find(|s| s.kind == SolutionKind::GroundState).ok_or("none".into()));
    match gs {
        Ok(v) => {
            out.push(below("ground_state_certificate", v.certificate.relative_residual(), 1e-5, "N = 3, q = 3, t = 50"));
            let gap = v.energy() - bubble_level(3);
            out.push(CheckResult {
                name: "ground_state_below_level",
                pass: gap < 0.0,
                value: gap,
                tolerance: 0.0,
                detail: "energy - S^{3/2}/3".into(),
            });
            let mut worst = 0.0f64;
            for &mu in &[1.0, 10.0, 100.0] {
                match from_unit_frequency(&v.profile, 50.0, mu).and_then(|(u, lam)| to_unit_frequency(&u, lam, mu)) {
                    Ok((back, t)) => {
                        worst = worst.max(rel(t, 50.0)).max(back.norms.max_rel_diff(&v.profile.norms));
                    }
                    Err(_) => worst = f64::INFINITY,
                }
            }
            out.push(below("unit_frequency_round_trip", worst, 1e-12, "mu = 1, 10, 100"));
            let mu = mu_of_t(3, 3.0, 50.0, v.lq(), 1.0);
            out.push(below("reduction_residual", relative_reduction_residual(3, 3.0, 50.0, v.lq(), 1.0, mu), 1e-12, "F(t, mu_t)"));
        }
        Err(e) => out.push(failed("ground_state_certificate", e)),
    }

    let confined = solve_w_infty(4.0, &ShootingOptions::default()).and_then(|w| {
        let mesh = default_mesh(10.0, 65)?;
        let init = cold_guess(&mesh, 10.0, 4.0, Some(&w.profile));
        solve_confined(10.0, 4.0, &mesh, &init, &FlowOptions::default())
    });
    match confined {
        Ok(s) => {
            out.push(below("confined_nehari", s.norms.nehari_rel(10.0), 1e-8, "t = 10, 65 nodes"));
            let decreasing = s.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs());
            out.push(CheckResult {
                name: "confined_flow_monotone",
                pass: decreasing && s.is_monotone(),
                value: s.iterations as f64,
                tolerance: 0.0,
                detail: "energy decreases and the state stays monotone".into(),
            });
        }
        Err(e) => out.push(failed("confined_nehari", e)),
    }
    out
}

pub fn verify() -> Outcome {
    let checks = run_checks();
    let mut out = Outcome::default();
    for c in &checks {
        out.lines.push(format!(
            "{} {}: {:.3e} (tolerance {:.1e}) {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.detail
        ));
    }
    out.failed_checks = checks.iter().filter(|c| !c.pass).count();
    out.records = json!({ "checks": checks, "failed": out.failed_checks });
    out
}
