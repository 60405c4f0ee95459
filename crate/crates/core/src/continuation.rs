//! Sweeps in the coupling `t`: least energies, the ground-state threshold,
//! exponent fits and the derivative identity `m'(t) = -‖v_t‖_q^q / q`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functionals::bubble_level;
use crate::math::{self, linear_fit};
use crate::params::{gamma, ProblemParams};
use crate::profile::Norms;
use crate::shooting::{find_positive_solutions, ScanOptions, ShootingOptions, SolutionKind, SolutionRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepOptions {
    pub scan: ScanOptions,
    pub shooting: ShootingOptions,
    /// Relative certificate tolerance; the threshold detector uses three times it.
    pub cert_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { scan: ScanOptions::default(), shooting: ShootingOptions::default(), cert_tol: 1e-5 }
    }
}

/// The least-energy solution at one `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeastEnergy {
    pub energy: f64,
    pub height: f64,
    pub norms: Norms,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepSample {
    pub t: f64,
    /// Least energy, capped at the bubble level when nothing lies below it.
    pub m: f64,
    pub least: Option<LeastEnergy>,
    pub n_solutions: usize,
    pub heights: Vec<f64>,
    pub energies: Vec<f64>,
    pub failure: Option<String>,
}

impl SweepSample {
    pub fn from_solutions(t: f64, dim: u32, solutions: &[SolutionRecord]) -> SweepSample {
        let level = bubble_level(dim);
        let least = solutions
            .iter()
            .min_by(|a, b| a.energy().total_cmp(&b.energy()))
            .map(|s| LeastEnergy {
                energy: s.energy(),
                height: s.height,
                norms: s.certificate.norms,
                residual: s.certificate.relative_residual(),
            });
        SweepSample {
            t,
            m: least.map_or(level, |l| l.energy.min(level)),
            least,
            n_solutions: solutions.len(),
            heights: solutions.iter().map(|s| s.height).collect(),
            energies: solutions.iter().map(|s| s.energy()).collect(),
            failure: None,
        }
    }

    pub fn failed(t: f64, dim: u32, err: &Error) -> SweepSample {
        SweepSample {
            t,
            m: bubble_level(dim),
            least: None,
            n_solutions: 0,
            heights: Vec::new(),
            energies: Vec::new(),
            failure: Some(err.to_string()),
        }
    }

    /// Whether a solution lies strictly below `level - guard`.
    pub fn below(&self, level: f64, guard: f64) -> bool {
        self.failure.is_none() && self.least.is_some_and(|l| l.energy < level - guard)
    }

    /// `‖v_t‖_q^q` of the least-energy solution.
    pub fn vq(&self) -> Option<f64> {
        self.least.map(|l| l.norms.lq)
    }

    pub fn lowest_height(&self) -> Option<f64> {
        self.heights.first().copied()
    }

    pub fn highest_height(&self) -> Option<f64> {
        if self.heights.len() >= 2 {
            self.heights.last().copied()
        } else {
            None
        }
    }
}

/// Where the ground-state threshold lies on the sampled grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Threshold {
    /// Last `t` without and first `t` with a solution below the bubble level.
    Bracket { lo: f64, hi: f64 },
    /// Ground states already at the first grid point: `[0, t_0]`.
    BelowGrid { hi: f64 },
    /// No solution below the bubble level anywhere on the grid.
    NotFound,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitRecord {
    pub quantity: String,
    pub exponent: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub dim: u32,
    pub q: f64,
    pub level: f64,
    pub samples: Vec<SweepSample>,
    pub threshold: Threshold,
    pub fits: Vec<FitRecord>,
}

/// Solutions at a single `t`, recorded as a sample. Failures are kept.
pub fn sweep_point(dim: u32, q: f64, t: f64, opts: &SweepOptions) -> SweepSample {
    let params = ProblemParams::new(dim, q, t);
    match find_positive_solutions(&params, &opts.scan, &opts.shooting) {
        Ok(rep) => SweepSample::from_solutions(t, dim, &rep.solutions),
        Err(e) => SweepSample::failed(t, dim, &e),
    }
}

/// Sequential sweep; the CLI runs `sweep_point` on a worker pool and calls
/// [`assemble`] itself.
pub fn sweep(dim: u32, q: f64, t_grid: &[f64], opts: &SweepOptions) -> SweepResult {
    let samples = t_grid.iter().map(|&t| sweep_point(dim, q, t, opts)).collect();
    assemble(dim, q, samples, opts.cert_tol)
}

pub fn assemble(dim: u32, q: f64, mut samples: Vec<SweepSample>, cert_tol: f64) -> SweepResult {
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    let level = bubble_level(dim);
    let guard = 3.0 * cert_tol * level;
    let first = samples.iter().position(|s| s.below(level, guard));
    let threshold = match first {
        None => Threshold::NotFound,
        Some(0) => Threshold::BelowGrid { hi: samples[0].t },
        Some(k) => {
            let lo = samples[..k].iter().rposition(|s| s.failure.is_none()).map(|i| samples[i].t);
            match lo {
                Some(lo) => Threshold::Bracket { lo, hi: samples[k].t },
                None => Threshold::BelowGrid { hi: samples[k].t },
            }
        }
    };
    SweepResult { dim, q, level, samples, threshold, fits: Vec::new() }
}

impl SweepResult {
    /// Monotonicity and ceiling of `m(t)`, with absolute slack `tol · level`.
    pub fn invariant_violations(&self, tol: f64) -> Vec<String> {
        let slack = tol * self.level;
        let mut out = Vec::new();
        let ok: Vec<&SweepSample> = self.samples.iter().filter(|s| s.failure.is_none()).collect();
        for s in &ok {
            if s.m > self.level + slack {
                out.push(alloc::format!("m({}) = {} exceeds the bubble level {}", s.t, s.m, self.level));
            }
        }
        for w in ok.windows(2) {
            if w[1].m > w[0].m + slack {
                out.push(alloc::format!(
                    "m increases from {} at t = {} to {} at t = {}",
                    w[0].m, w[0].t, w[1].m, w[1].t
                ));
            }
        }
        out
    }

    /// `(t, y)` pairs of samples with a solution below the bubble level.
    pub fn series(&self, f: impl Fn(&SweepSample) -> Option<f64>) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.below(self.level, 0.0))
            .filter_map(|s| f(s).map(|y| (s.t, y)))
            .collect()
    }

    /// Checks that `m(t) t^{N/(qγ_q)}` does not decrease by more than `tol`
    /// (relative) between consecutive samples in `window`.
    pub fn scaled_energy_violations(&self, window: (f64, f64), tol: f64) -> Vec<String> {
        let e = self.dim as f64 / (self.q * gamma(self.dim, self.q));
        let pts: Vec<(f64, f64)> = self
            .series(|s| Some(s.m))
            .into_iter()
            .filter(|(t, _)| *t >= window.0 && *t <= window.1)
            .map(|(t, m)| (t, m * math::pow(t, e)))
            .collect();
        let mut out = Vec::new();
        for w in pts.windows(2) {
            if w[1].1 < w[0].1 * (1.0 - tol) {
                out.push(alloc::format!("m t^{e} drops from {} to {} at t = {}", w[0].1, w[1].1, w[1].0));
            }
        }
        out
    }
}

/// Narrows a threshold bracket by bisection on the sign of
/// `least energy - bubble level`; `t` without solutions counts as above.
pub fn refine_threshold(
    dim: u32,
    q: f64,
    lo: f64,
    hi: f64,
    rel_width: f64,
    opts: &SweepOptions,
) -> Result<(f64, f64)> {
    let level = bubble_level(dim);
    let below = |t: f64| -> Result<bool> {
        let params = ProblemParams::new(dim, q, t);
        let rep = find_positive_solutions(&params, &opts.scan, &opts.shooting)?;
        Ok(rep.solutions.iter().any(|s| s.energy() < level))
    };
    let (mut lo, mut hi) = (lo, hi);
    if below(lo)? || !below(hi)? {
        return Err(Error::InvalidData("threshold bracket does not straddle the bubble level".into()));
    }
    while hi - lo > rel_width * hi {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Least-squares power law `y ≈ C t^e` over `window`.
pub fn fit_exponent(samples: &[(f64, f64)], window: (f64, f64)) -> Result<FitRecord> {
    let pts: Vec<(f64, f64)> =
        samples.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    if pts.len() < 6 {
        return Err(Error::InvalidData(alloc::format!("{} samples in window, need 6", pts.len())));
    }
    if pts.iter().any(|(t, y)| !(*y > 0.0) || !(*t > 0.0)) {
        return Err(Error::InvalidData("nonpositive value in fit window".into()));
    }
    let x: Vec<f64> = pts.iter().map(|(t, _)| math::ln(*t)).collect();
    let y: Vec<f64> = pts.iter().map(|(_, y)| math::ln(*y)).collect();
    let (a, b, se, _) = linear_fit(&x, &y).ok_or_else(|| Error::InvalidData("degenerate window".into()))?;
    Ok(FitRecord {
        quantity: String::new(),
        exponent: b,
        prefactor: math::exp(a),
        window,
        stderr: se,
        n: pts.len(),
    })
}

/// Fit of `y ≈ t (C ln t + c0)` against a pure power law, both judged by the
/// root-mean-square residual of `ln y`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogModelComparison {
    pub c: f64,
    pub c0: f64,
    pub tlogt_rms: f64,
    pub power_exponent: f64,
    pub power_rms: f64,
}

impl LogModelComparison {
    pub fn prefers_tlogt(&self) -> bool {
        self.tlogt_rms < self.power_rms
    }
}

pub fn compare_tlogt_model(samples: &[(f64, f64)], window: (f64, f64)) -> Result<LogModelComparison> {
    let power = fit_exponent(samples, window)?;
    let pts: Vec<(f64, f64)> =
        samples.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    let x: Vec<f64> = pts.iter().map(|(t, _)| math::ln(*t)).collect();
    let z: Vec<f64> = pts.iter().map(|(t, y)| y / t).collect();
    let (c0, c, _, _) = linear_fit(&x, &z).ok_or_else(|| Error::InvalidData("degenerate window".into()))?;
    let rms = |f: &dyn Fn(f64) -> f64| {
        let s: f64 = pts
            .iter()
            .map(|(t, y)| {
                let m = f(*t);
                if m > 0.0 { math::ln(y / m) } else { f64::INFINITY }
            })
            .map(|r| r * r)
            .sum();
        math::sqrt(s / pts.len() as f64)
    };
    let tlogt_rms = rms(&|t| t * (c * math::ln(t) + c0));
    let power_rms = rms(&|t| power.prefactor * math::pow(t, power.exponent));
    Ok(LogModelComparison { c, c0, tlogt_rms, power_exponent: power.exponent, power_rms })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivativeCheck {
    pub max_violation: f64,
    /// `(t, m'(t) by differences, -vq/q, relative violation)` per interior node.
    pub nodes: Vec<(f64, f64, f64, f64)>,
}

/// Compares three-point differences of `m` with `-‖v_t‖_q^q / q` at interior
/// nodes whose neighbours all carry a solution below the bubble level.
pub fn derivative_identity_check(sweep: &SweepResult) -> Option<DerivativeCheck> {
    let pts: Vec<(f64, f64, f64)> = sweep
        .samples
        .iter()
        .map(|s| (s.t, s.m, if s.below(sweep.level, 0.0) { s.vq().unwrap_or(f64::NAN) } else { f64::NAN }))
        .collect();
    derivative_identity_from(&pts, sweep.q)
}

/// Same check on raw `(t, m, vq)` triples; `vq = NaN` marks invalid nodes.
pub fn derivative_identity_from(pts: &[(f64, f64, f64)], q: f64) -> Option<DerivativeCheck> {
    let mut nodes = Vec::new();
    for i in 1..pts.len().saturating_sub(1) {
        let (t0, m0, v0) = pts[i - 1];
        let (t1, m1, v1) = pts[i];
        let (t2, m2, v2) = pts[i + 1];
        if v0.is_nan() || v1.is_nan() || v2.is_nan() {
            continue;
        }
        let (h1, h2) = (t1 - t0, t2 - t1);
        let dm = -h2 / (h1 * (h1 + h2)) * m0 + (h2 - h1) / (h1 * h2) * m1 + h1 / (h2 * (h1 + h2)) * m2;
        let expect = -v1 / q;
        let scale = expect.abs().max(dm.abs());
        let viol = if scale > 0.0 { (dm - expect).abs() / scale } else { 0.0 };
        nodes.push((t1, dm, expect, viol));
    }
    if nodes.is_empty() {
        return None;
    }
    let max_violation = nodes.iter().fold(0.0f64, |m, n| m.max(n.3));
    Some(DerivativeCheck { max_violation, nodes })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NearThreshold {
    NotApplicable(String),
    Report {
        /// `(t_k - t*, vq)` pairs.
        samples: Vec<(f64, f64)>,
        min: f64,
        max: f64,
        ratio: f64,
        bounded: bool,
    },
}

/// Evaluates `vq_of_t` on `t* + δ_k`, `δ_k` geometric from `1e-1 t*` down to
/// `1e-4 t*`, and flags a max/min ratio above 10. `t_star` is the upper end
/// of a refined bracket of width `width`.
pub fn near_threshold_norms(
    dim: u32,
    q: f64,
    t_star: f64,
    width: f64,
    points: usize,
    mut vq_of_t: impl FnMut(f64) -> Result<f64>,
) -> Result<NearThreshold> {
    if dim != 3 || !(q > 2.0 && q < 4.0) {
        return Ok(NearThreshold::NotApplicable(alloc::format!(
            "threshold attainment applies to N = 3, 2 < q < 4 (got N = {dim}, q = {q})"
        )));
    }
    let (d_hi, d_lo) = (1e-1 * t_star, 1e-4 * t_star);
    if width > d_lo / 10.0 {
        return Err(Error::InvalidData(alloc::format!(
            "threshold bracket width {width:e} is too wide for offsets down to {d_lo:e}"
        )));
    }
    let n = points.max(2);
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let d = d_hi * math::pow(d_lo / d_hi, k as f64 / (n - 1) as f64);
        samples.push((d, vq_of_t(t_star + d)?));
    }
    let min = samples.iter().fold(f64::INFINITY, |m, s| m.min(s.1));
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.1));
    let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(NearThreshold::Report { samples, min, max, ratio, bounded: ratio <= 10.0 })
}

/// `vq` of the least-energy solution at `t`, for [`near_threshold_norms`].
pub fn least_energy_vq(dim: u32, q: f64, t: f64, opts: &SweepOptions) -> Result<f64> {
    let params = ProblemParams::new(dim, q, t);
    let rep = find_positive_solutions(&params, &opts.scan, &opts.shooting)?;
    rep.solutions
        .iter()
        .filter(|s| s.kind == SolutionKind::GroundState)
        .map(|s| s.lq())
        .next()
        .ok_or_else(|| Error::InvalidData(alloc::format!("no ground state at t = {t}")))
}

/// Geometric grid with `n` points from `a` to `b`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![a];
    }
    let r = math::ln(b / a);
    (0..n).map(|i| a * math::exp(r * i as f64 / (n - 1) as f64)).collect()
}

/// Geometric grid from `a` up to at most `b` with a fixed ratio.
pub fn ratio_grid(a: f64, b: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = a;
    let mut i = 0;
    while t <= b * (1.0 + 1e-12) {
        out.push(t);
        i += 1;
        t = a * math::pow(ratio, i as f64);
    }
    out
}
