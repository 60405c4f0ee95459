//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line; the
//! process exits nonzero if any fails. Criteria run on their own threads.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde_json::Value;

use nlsmix_core::confinement::solve_w_infty;
use nlsmix_core::continuation::{
    assemble, compare_tlogt_model, derivative_identity_check, fit_exponent, log_grid, ratio_grid, sweep_point,
    SweepOptions, SweepResult, Threshold,
};
use nlsmix_core::functionals::{bubble_level, sobolev_constant, sobolev_constant_closed_form};
use nlsmix_core::ode::Tolerances;
use nlsmix_core::params::gamma;
use nlsmix_core::shooting::{bubble_profile, find_positive_solutions, ScanOptions, ShootingOptions};
use nlsmix_core::ProblemParams;

type Verdict = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn par_sweep(dim: u32, q: f64, grid: &[f64]) -> SweepResult {
    let opts = SweepOptions::default();
    let samples = grid.par_iter().map(|&t| sweep_point(dim, q, t, &opts)).collect();
    assemble(dim, q, samples, opts.cert_tol)
}

fn require(ok: bool, fails: &mut Vec<String>, msg: String) {
    if !ok {
        fails.push(msg);
    }
}

fn finish(fails: Vec<String>, summary: String) -> Verdict {
    if fails.is_empty() {
        Ok(summary)
    } else {
        Err(fails.join("; "))
    }
}

fn exact_solutions() -> Verdict {
    let mut fails = Vec::new();
    let b = bubble_profile(3, 3f64.powf(0.25), 1e3, Tolerances::default().scaled(1e-2)).map_err(|e| e.to_string())?;
    let br = b.certificate.relative_residual();
    require(br < 1e-8, &mut fails, format!("bubble residual {br:e}"));
    let w = solve_w_infty(4.0, &ShootingOptions::default()).map_err(|e| e.to_string())?;
    let wr = w.certificate.relative_residual();
    require(wr < 1e-8, &mut fails, format!("soliton residual {wr:e}"));
    let s = rel(sobolev_constant(3), sobolev_constant_closed_form(3));
    require(s < 1e-6, &mut fails, format!("Sobolev constant off by {s:e}"));
    finish(fails, format!("bubble {br:.1e}, soliton {wr:.1e}, S {s:.1e}"))
}

fn two_solutions() -> Verdict {
    let cases: Vec<(f64, f64)> =
        [2.5, 3.0, 3.5].iter().flat_map(|&q| [1e3, 1e4, 1e-2].map(|t| (q, t))).collect();
    let found: Vec<(f64, f64, Result<(usize, usize), String>)> = cases
        .par_iter()
        .map(|&(q, t)| {
            let params = ProblemParams::new(3, q, t);
            let r = find_positive_solutions(&params, &ScanOptions::default(), &ShootingOptions::default())
                .map(|rep| (rep.solutions.len(), rep.solutions.iter().filter(|s| s.energy() < bubble_level(3)).count()))
                .map_err(|e| e.to_string());
            (q, t, r)
        })
        .collect();
    let mut fails = Vec::new();
    let mut counts = Vec::new();
    for (q, t, r) in found {
        match r {
            Ok((n, _)) if t > 1.0 => {
                require(n >= 2, &mut fails, format!("q = {q}, t = {t}: {n} solutions"));
                counts.push(n.to_string());
            }
            Ok((_, below_level)) => {
                require(below_level == 0, &mut fails, format!("q = {q}, t = {t}: {below_level} below the level"));
            }
            Err(e) => fails.push(format!("q = {q}, t = {t}: {e}")),
        }
    }
    finish(fails, format!("solution counts at t = 1e3, 1e4: [{}]; none below the level at t = 1e-2", counts.join(", ")))
}

fn blowup_exponents() -> Verdict {
    let grid = log_grid(1e3, 1e5, 11);
    let window = (1e3, 1e5);
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for q in [2.5, 3.0, 3.5] {
        let sw = par_sweep(3, q, &grid);
        let top = sw.series(|s| s.highest_height());
        let low = sw.series(|s| s.lowest_height());
        let b1 = fit_exponent(&low, window).map_err(|e| format!("q = {q} branch 1: {e}"))?;
        let want1 = -1.0 / (q - 2.0);
        require(rel(b1.exponent, want1) < 0.1, &mut fails, format!("q = {q} branch 1 slope {}", b1.exponent));
        if q == 3.0 {
            let cmp = compare_tlogt_model(&top, window).map_err(|e| format!("q = 3 branch 2: {e}"))?;
            require(
                cmp.prefers_tlogt(),
                &mut fails,
                format!("t log t rms {:e} vs power rms {:e}", cmp.tlogt_rms, cmp.power_rms),
            );
            parts.push(format!("q = 3: t log t rms {:.1e} < power {:.1e}", cmp.tlogt_rms, cmp.power_rms));
        } else {
            let b2 = fit_exponent(&top, window).map_err(|e| format!("q = {q} branch 2: {e}"))?;
            let want2 = if q > 3.0 { 1.0 / (4.0 - q) } else { 1.0 / (q - 2.0) };
            require(rel(b2.exponent, want2) < 0.1, &mut fails, format!("q = {q} branch 2 slope {}", b2.exponent));
            parts.push(format!("q = {q}: slopes {:.4} / {:.4}", b2.exponent, b1.exponent));
        }
    }
    finish(fails, parts.join(", "))
}

fn threshold_structure() -> Verdict {
    let grid = log_grid(1e-2, 1e3, 31);
    let level = bubble_level(3);
    let tol = 3.0 * SweepOptions::default().cert_tol * level;
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for q in [2.5, 3.0, 3.5, 4.0] {
        let sw = par_sweep(3, q, &grid);
        let (lo, hi) = match sw.threshold {
            Threshold::Bracket { lo, hi } => (lo, hi),
            other => {
                fails.push(format!("q = {q}: {other:?}"));
                continue;
            }
        };
        require(lo > 0.0 && hi.is_finite(), &mut fails, format!("q = {q}: bracket [{lo}, {hi}]"));
        for s in &sw.samples {
            if s.failure.is_some() {
                fails.push(format!("q = {q}, t = {}: {:?}", s.t, s.failure));
            } else if s.t <= lo {
                require((s.m - level).abs() <= tol, &mut fails, format!("q = {q}: m({}) = {} off the level", s.t, s.m));
            } else if s.t >= hi {
                require(s.m < level, &mut fails, format!("q = {q}: m({}) = {} not below the level", s.t, s.m));
            }
        }
        let v = sw.invariant_violations(1e-9);
        require(v.is_empty(), &mut fails, format!("q = {q}: {}", v.join(", ")));
        parts.push(format!("q = {q}: [{lo:.3}, {hi:.3}]"));
    }
    finish(fails, parts.join(", "))
}

fn derivative_identity() -> Verdict {
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for (dim, a, b) in [(4, 0.5, 2.0), (3, 3.0, 12.0)] {
        let check = |ratio: f64| {
            derivative_identity_check(&par_sweep(dim, 3.0, &ratio_grid(a, b, ratio)))
                .map(|c| c.max_violation)
                .ok_or_else(|| format!("N = {dim}: no interior nodes"))
        };
        let coarse = check(1.05)?;
        let fine = check(1.025)?;
        require(coarse < 0.05, &mut fails, format!("N = {dim}: violation {coarse:e} at ratio 1.05"));
        require(fine <= 0.5 * coarse, &mut fails, format!("N = {dim}: {coarse:e} -> {fine:e} under refinement"));
        parts.push(format!("N = {dim}, q = 3: {coarse:.1e} -> {fine:.1e}"));
    }
    finish(fails, parts.join(", "))
}

fn large_t_asymptotics() -> Verdict {
    let grid = log_grid(1e2, 1e5, 13);
    let window = (1e3, 1e5);
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for (dim, q) in [(3, 2.5), (4, 3.0)] {
        let sw = par_sweep(dim, q, &grid);
        let e = dim as f64 / (q * gamma(dim, q));
        let m = fit_exponent(&sw.series(|s| Some(s.m)), window).map_err(|err| err.to_string())?;
        let v = fit_exponent(&sw.series(|s| s.vq()), window).map_err(|err| err.to_string())?;
        require(rel(m.exponent, -e) < 0.15, &mut fails, format!("({dim}, {q}): m slope {}", m.exponent));
        require(rel(v.exponent, -e - 1.0) < 0.15, &mut fails, format!("({dim}, {q}): vq slope {}", v.exponent));
        parts.push(format!("({dim}, {q}): {:.4} / {:.4} vs {} / {}", m.exponent, v.exponent, -e, -e - 1.0));
    }
    finish(fails, parts.join(", "))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nlsmix")
}

/// Runs the binary; returns the exit code.
fn run_cli(args: &[&str], out: &Path, cache: Option<&Path>, threads: usize) -> Result<i32, String> {
    let mut cmd = Command::new(bin());
    cmd.args(args).arg("--out").arg(out).arg("--threads").arg(threads.to_string());
    match cache {
        Some(c) => cmd.arg("--cache-dir").arg(c),
        None => cmd.arg("--no-cache"),
    };
    let o = cmd.output().map_err(|e| e.to_string())?;
    o.status.code().ok_or_else(|| format!("{args:?} was killed"))
}

fn envelope(dir: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(dir.join("envelope.json")).map_err(|e| format!("{}: {e}", dir.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn normalized_reduction(scratch: &Path) -> Verdict {
    let cache = scratch.join("cache");
    let reduce = |mu: f64, tag: &str| -> Result<Value, String> {
        let out = scratch.join(tag);
        let mu = mu.to_string();
        let args = ["reduce", "--N", "3", "--q", "2.5", "--a", "1", "--mu", &mu, "--t-min", "1", "--t-max", "1e3", "--points", "40"];
        let code = run_cli(&args, &out, Some(&cache), 4)?;
        if code != 0 {
            return Err(format!("reduce --mu {mu} exited {code}"));
        }
        Ok(envelope(&out)?["records"].clone())
    };
    let probe = reduce(1.0, "probe")?;
    let sup = f(&probe["sup_mu"]);
    if !(sup.is_finite() && sup > 0.0) {
        return Err(format!("supremum {sup}"));
    }
    let mut fails = Vec::new();
    let low = reduce(0.1 * sup, "low")?;
    let sols = low["solutions"].as_array().cloned().unwrap_or_default();
    require(!sols.is_empty(), &mut fails, "no solutions at 10% of the supremum".into());
    let worst = sols.iter().map(|s| f(&s["mass_identity_rel"]).abs()).fold(0.0, f64::max);
    require(worst < 1e-5, &mut fails, format!("mass identity {worst:e}"));
    let high = reduce(2.0 * sup, "high")?;
    require(high["nonexistence"] == Value::Bool(true), &mut fails, "no certified nonexistence at 200%".into());
    finish(
        fails,
        format!("sup mu = {sup:.4} at t = {:.3}, {} solution(s) at 10% (mass identity {worst:.1e}), none at 200%", f(&probe["t_at_sup"]), sols.len()),
    )
}

fn confinement(scratch: &Path) -> Verdict {
    let out = scratch.join("confine");
    let code = run_cli(&["confine"], &out, None, 8)?;
    if code != 0 {
        return Err(format!("confine exited {code}"));
    }
    let rec = envelope(&out)?["records"].clone();
    let large = rec["large_t"].as_array().cloned().unwrap_or_default();
    let at = large.iter().find(|s| rel(f(&s["t"]), 1e3) < 1e-9).ok_or("no sample at t = 1e3")?;
    let (dist, pot) = (f(&at["distance_to_limit"]), f(&at["pot_over_t2"]));
    let mut fails = Vec::new();
    require(dist < 0.02, &mut fails, format!("distance to the limit {dist:e}"));
    require(pot < 1e-4, &mut fails, format!("potential term {pot:e}"));
    let slope = f(&rec["fits"][0]["exponent"]);
    let mass = f(&rec["fits"][1]["exponent"]);
    require(rel(slope, -4.0) < 0.1, &mut fails, format!("lambda vs r slope {slope}"));
    require(rel(mass, 0.5) < 0.15, &mut fails, format!("small-t mass exponent {mass}"));
    let mut by_r: Vec<(f64, f64, f64)> = large
        .iter()
        .map(|s| (f(&s["normalized"]["r"]), f(&s["fibering_d1_rel"]), f(&s["fibering_at_one"]["d2"])))
        .collect();
    by_r.sort_by(|a, b| a.0.total_cmp(&b.0));
    if by_r.len() < 3 {
        fails.push(format!("only {} normalized samples", by_r.len()));
    }
    for &(r, d1, d2) in by_r.iter().take(3) {
        require(d1.abs() < 1e-3 && d2 < 0.0, &mut fails, format!("r = {r}: fibering {d1:e}, {d2:e}"));
    }
    finish(fails, format!("distance {dist:.2e}, potential {pot:.1e}, slope {slope:.4}, mass exponent {mass:.4}"))
}

fn files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))? {
        let p = e.map_err(|e| e.to_string())?.path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        out.insert(name, fs::read(&p).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Differences between two output directories, ignoring envelope stats.
fn compare_runs(a: &Path, b: &Path) -> Result<Vec<String>, String> {
    let (fa, fb) = (files(a)?, files(b)?);
    let mut diffs = Vec::new();
    if fa.keys().ne(fb.keys()) {
        diffs.push(format!("file sets differ: {:?} vs {:?}", fa.keys(), fb.keys()));
    }
    for (name, bytes) in &fa {
        let Some(other) = fb.get(name) else { continue };
        if name == "envelope.json" {
            let mut ea: Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
            let mut eb: Value = serde_json::from_slice(other).map_err(|e| e.to_string())?;
            ea.as_object_mut().map(|o| o.remove("stats"));
            eb.as_object_mut().map(|o| o.remove("stats"));
            if ea != eb {
                diffs.push("envelope differs outside stats".into());
            }
        } else if bytes != other {
            diffs.push(format!("{name} differs"));
        }
    }
    Ok(diffs)
}

fn determinism(scratch: &Path) -> Verdict {
    let commands: [&[&str]; 6] = [
        &["ground-state", "--q", "3", "--t", "50"],
        &["scan", "--q", "3", "--t", "100"],
        &["sweep", "--N", "3", "--q", "3", "--t-min", "1", "--t-max", "100", "--points", "8"],
        &["reduce", "--q", "2.5", "--mu", "5", "--t-min", "1", "--t-max", "100", "--points", "16"],
        &["confine", "--t-min", "10", "--t-max", "100", "--points", "2", "--small-points", "2", "--nodes", "33"],
        &["verify"],
    ];
    let mut fails = Vec::new();
    for args in commands {
        let dir = scratch.join(args[0]);
        let cache = dir.join("cache");
        // Fresh single-threaded, fresh multi-threaded, then from the cache.
        let runs = [("a", Some(&cache), 1), ("b", None, 4), ("c", Some(&cache), 4)];
        let mut outs = Vec::new();
        for (tag, c, threads) in runs {
            let out = dir.join(tag);
            let code = run_cli(args, &out, c.map(PathBuf::as_path), threads)?;
            if code != 0 {
                fails.push(format!("{} run {tag} exited {code}", args[0]));
            }
            outs.push(out);
        }
        for other in &outs[1..] {
            for d in compare_runs(&outs[0], other)? {
                fails.push(format!("{}: {d}", args[0]));
            }
        }
    }
    finish(fails, "six commands identical across threads and cache state".into())
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let root = scratch.path();
    let verdicts: Vec<Verdict> = std::thread::scope(|s| {
        let jobs: Vec<Box<dyn FnOnce() -> Verdict + Send + '_>> = vec![
            Box::new(exact_solutions),
            Box::new(two_solutions),
            Box::new(blowup_exponents),
            Box::new(threshold_structure),
            Box::new(derivative_identity),
            Box::new(move || normalized_reduction(&root.join("reduce"))),
            Box::new(large_t_asymptotics),
            Box::new(move || confinement(&root.join("confine"))),
            Box::new(move || determinism(&root.join("determinism"))),
        ];
        let handles: Vec<_> = jobs.into_iter().map(|j| s.spawn(j)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>()))))
            .collect()
    });
    let mut failed = 0;
    for (k, v) in verdicts.iter().enumerate() {
        match v {
            Ok(msg) => println!("PASS criterion {}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {}: {msg}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
