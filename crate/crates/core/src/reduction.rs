//! Scaling dictionary between mass-constrained and fixed-frequency solutions.
//!
//! A normalized pair `(u, λ)` with `‖u‖₂² = a²` and coupling `μ` corresponds
//! to a unit-frequency solution `v` at coupling `t = μ λ^{(qγ_q - q)/2}`, and
//! the mass constraint collapses to the scalar equation `F(t, μ) = 0`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functionals::bubble_level;
use crate::math::{self, pow};
use crate::params::{critical_exponent, gamma, ProblemParams};
use crate::profile::RadialProfile;
use crate::shooting::{find_positive_solutions, ScanOptions, ShootingOptions, SolutionRecord};

/// `qγ_q - q`, negative for every admissible `q`.
fn exponent(dim: u32, q: f64) -> f64 {
    q * gamma(dim, q) - q
}

/// `v(x) = λ^{-(N-2)/4} u(λ^{-1/2} x)` and `t = μ λ^{(qγ_q - q)/2}`.
pub fn to_unit_frequency(u: &RadialProfile, lambda: f64, mu: f64) -> Result<(RadialProfile, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(alloc::format!("frequency must be positive, got {lambda}")));
    }
    let n = u.dim as f64;
    let v = u.rescale(pow(lambda, -(n - 2.0) / 4.0), math::sqrt(lambda));
    let t = mu * pow(lambda, exponent(u.dim, u.q) / 2.0);
    Ok((v, t))
}

/// `λ = (t/μ)^{2/(qγ_q - q)}` and `u(x) = λ^{(N-2)/4} v(λ^{1/2} x)`.
pub fn from_unit_frequency(v: &RadialProfile, t: f64, mu: f64) -> Result<(RadialProfile, f64)> {
    if !(t > 0.0 && mu > 0.0) {
        return Err(Error::Domain(alloc::format!("need t > 0 and mu > 0, got t = {t}, mu = {mu}")));
    }
    let lambda = lambda_of(v.dim, v.q, t, mu);
    let n = v.dim as f64;
    let u = v.rescale(pow(lambda, (n - 2.0) / 4.0), 1.0 / math::sqrt(lambda));
    Ok((u, lambda))
}

pub fn lambda_of(dim: u32, q: f64, t: f64, mu: f64) -> f64 {
    pow(t / mu, 2.0 / exponent(dim, q))
}

/// The coupling `μ_t` with `F(t, μ_t) = 0`.
pub fn mu_of_t(dim: u32, q: f64, t: f64, vq: f64, a: f64) -> f64 {
    let k = -exponent(dim, q);
    let g = gamma(dim, q);
    pow(a, -k) * pow((1.0 - g) * vq * pow(t, (k + 2.0) / k), k / 2.0)
}

/// `F(t, μ) = t^{2/(qγ_q - q) - 1} - (1 - γ_q) ‖v_t‖_q^q / (a² μ^{2/(q - qγ_q)})`.
pub fn reduction_residual(dim: u32, q: f64, t: f64, vq: f64, a: f64, mu: f64) -> f64 {
    let e = exponent(dim, q);
    let g = gamma(dim, q);
    pow(t, 2.0 / e - 1.0) - (1.0 - g) * vq / (a * a * pow(mu, -2.0 / e))
}

/// Same as [`reduction_residual`] divided by the size of its first term.
pub fn relative_reduction_residual(dim: u32, q: f64, t: f64, vq: f64, a: f64, mu: f64) -> f64 {
    let e = exponent(dim, q);
    reduction_residual(dim, q, t, vq, a, mu) / pow(t, 2.0 / e - 1.0)
}

/// `w = t^{1/(q-2)} v`, which solves
/// `-Δw + w = |w|^{q-2}w + t^{-(2*-2)/(q-2)} |w|^{2*-2}w`.
pub fn rescale_unit_coefficient(v: &RadialProfile, t: f64) -> Result<RadialProfile> {
    if !(t > 0.0) {
        return Err(Error::Domain(alloc::format!("t must be positive, got {t}")));
    }
    Ok(v.rescale(pow(t, 1.0 / (v.q - 2.0)), 1.0))
}

/// Coefficient of the critical term after [`rescale_unit_coefficient`].
pub fn unit_coefficient_critical_weight(dim: u32, q: f64, t: f64) -> f64 {
    pow(t, -(critical_exponent(dim) - 2.0) / (q - 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReductionPoint {
    pub t: f64,
    pub lambda: f64,
    pub mu: f64,
    pub a: f64,
    pub vq: f64,
    pub f: f64,
}

impl ReductionPoint {
    pub fn new(dim: u32, q: f64, t: f64, vq: f64, a: f64, mu: f64) -> ReductionPoint {
        ReductionPoint {
            t,
            lambda: lambda_of(dim, q, t, mu),
            mu,
            a,
            vq,
            f: reduction_residual(dim, q, t, vq, a, mu),
        }
    }
}

/// Sampled `t ↦ μ_t` over the ground-state range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReductionCurve {
    pub dim: u32,
    pub q: f64,
    pub a: f64,
    /// Points on the curve, increasing in `t`; `f` is zero by construction.
    pub points: Vec<ReductionPoint>,
}

impl ReductionCurve {
    /// Builds the curve from `(t, ‖v_t‖_q^q)` samples.
    pub fn from_samples(dim: u32, q: f64, a: f64, samples: &[(f64, f64)]) -> Result<ReductionCurve> {
        if !(a > 0.0) {
            return Err(Error::Domain(alloc::format!("mass must be positive, got {a}")));
        }
        let mut s: Vec<(f64, f64)> = samples.to_vec();
        s.sort_by(|x, y| x.0.total_cmp(&y.0));
        if s.len() < 2 {
            return Err(Error::CurveTooCoarse("need at least two samples".into()));
        }
        let mut points = Vec::with_capacity(s.len());
        for &(t, vq) in &s {
            if !(t > 0.0 && vq > 0.0) {
                return Err(Error::InvalidData(alloc::format!("bad curve sample t = {t}, vq = {vq}")));
            }
            let mu = mu_of_t(dim, q, t, vq, a);
            points.push(ReductionPoint::new(dim, q, t, vq, a, mu));
        }
        Ok(ReductionCurve { dim, q, a, points })
    }

    /// Largest sampled `μ_t` and where it sits.
    pub fn sup(&self) -> (f64, f64) {
        self.points.iter().fold((f64::NAN, 0.0), |m, p| if p.mu > m.1 { (p.t, p.mu) } else { m })
    }

    /// Errors when adjacent samples differ by more than a factor `max_ratio`
    /// in `μ`, where monotonicity between them cannot be taken for granted.
    pub fn check_resolution(&self, max_ratio: f64) -> Result<()> {
        for w in self.points.windows(2) {
            let r = w[1].mu / w[0].mu;
            if r > max_ratio || r < 1.0 / max_ratio {
                return Err(Error::CurveTooCoarse(alloc::format!(
                    "mu jumps from {} to {} between t = {} and t = {}",
                    w[0].mu, w[1].mu, w[0].t, w[1].t
                )));
            }
        }
        Ok(())
    }
}

/// Roots of `g(t) = target` bracketed by sign changes of the sampled values.
/// Each bracket is refined with the Illinois variant of regula falsi in
/// `ln t`, calling `g` afresh. Errors with `CurveTooCoarse` when a refinement
/// leaves its bracket or stalls.
pub fn bracketed_roots(
    ts: &[f64],
    gs: &[f64],
    target: f64,
    mut g: impl FnMut(f64) -> Result<f64>,
    rel_tol: f64,
) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    for i in 0..ts.len().saturating_sub(1) {
        let (fa, fb) = (gs[i] - target, gs[i + 1] - target);
        if fa == 0.0 {
            roots.push(ts[i]);
            continue;
        }
        if fa * fb >= 0.0 {
            if i + 2 == ts.len() && fb == 0.0 {
                roots.push(ts[i + 1]);
            }
            continue;
        }
        roots.push(illinois(math::ln(ts[i]), math::ln(ts[i + 1]), fa, fb, |x| Ok(g(math::exp(x))? - target), rel_tol)?);
    }
    Ok(roots)
}

fn illinois(
    mut xa: f64,
    mut xb: f64,
    mut fa: f64,
    mut fb: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
    rel_tol: f64,
) -> Result<f64> {
    let mut side = 0i8;
    for _ in 0..200 {
        let x = (xa * fb - xb * fa) / (fb - fa);
        if !(x >= xa.min(xb) && x <= xa.max(xb)) {
            return Err(Error::CurveTooCoarse(alloc::format!("refinement left the bracket at ln t = {x}")));
        }
        if (xb - xa).abs() < rel_tol {
            return Ok(math::exp(x));
        }
        let fx = f(x)?;
        if !fx.is_finite() {
            return Err(Error::CurveTooCoarse(alloc::format!("non-finite value at ln t = {x}")));
        }
        if fx == 0.0 {
            return Ok(math::exp(x));
        }
        if fx * fb < 0.0 {
            xa = xb;
            fa = fb;
            xb = x;
            fb = fx;
            side = 0;
        } else {
            xb = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if (xb - xa).abs() < rel_tol {
            return Ok(math::exp(xb));
        }
    }
    Err(Error::CurveTooCoarse("root refinement did not converge".into()))
}

/// A mass-constrained solution recovered from a unit-frequency one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizedSolution {
    pub point: ReductionPoint,
    pub profile: RadialProfile,
    /// `½‖∇u‖² - μ/q ‖u‖_q^q - 1/2* ‖u‖_{2*}^{2*}`.
    pub action: f64,
    /// `(λa² - (1-γ_q)μ‖u‖_q^q) / λa²`.
    pub mass_identity_rel: f64,
    /// `(‖u‖₂² - a²) / a²`.
    pub mass_rel: f64,
    pub ground_state: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizedReport {
    pub mu: f64,
    pub a: f64,
    pub sup_mu: f64,
    pub t_at_sup: f64,
    pub solutions: Vec<NormalizedSolution>,
}

impl NormalizedReport {
    /// No solution because `μ` exceeds every sampled `μ_t`.
    pub fn nonexistence(&self) -> bool {
        self.solutions.is_empty() && self.mu > self.sup_mu
    }
}

/// All `t` with `μ_t = μ` on `curve`, each back-transformed to `(u, λ)`.
/// `solve_v(t)` returns the unit-frequency ground state at `t`.
pub fn solve_normalized(
    mu: f64,
    curve: &ReductionCurve,
    mut solve_v: impl FnMut(f64) -> Result<SolutionRecord>,
) -> Result<NormalizedReport> {
    if !(mu > 0.0) {
        return Err(Error::Domain(alloc::format!("mu must be positive, got {mu}")));
    }
    curve.check_resolution(4.0)?;
    let (dim, q, a) = (curve.dim, curve.q, curve.a);
    let (t_at_sup, sup_mu) = curve.sup();
    let ts: Vec<f64> = curve.points.iter().map(|p| p.t).collect();
    // Compare in ln μ: the curve spans many decades.
    let lm: Vec<f64> = curve.points.iter().map(|p| math::ln(p.mu)).collect();
    let roots = bracketed_roots(
        &ts,
        &lm,
        math::ln(mu),
        |t| Ok(math::ln(mu_of_t(dim, q, t, solve_v(t)?.lq(), a))),
        1e-10,
    )?;
    let mut solutions = Vec::with_capacity(roots.len());
    for t in roots {
        let v = solve_v(t)?;
        solutions.push(back_transform(&v, t, mu, a)?);
    }
    if let Some(best) = solutions.iter().enumerate().min_by(|x, y| x.1.action.total_cmp(&y.1.action)).map(|x| x.0) {
        solutions[best].ground_state = true;
    }
    Ok(NormalizedReport { mu, a, sup_mu, t_at_sup, solutions })
}

pub fn back_transform(v: &SolutionRecord, t: f64, mu: f64, a: f64) -> Result<NormalizedSolution> {
    let (dim, q) = (v.params.dim, v.params.q);
    let (u, lambda) = from_unit_frequency(&v.profile, t, mu)?;
    let g = gamma(dim, q);
    let c = critical_exponent(dim);
    let n = u.norms;
    let action = 0.5 * n.grad - mu / q * n.lq - n.crit / c;
    let lhs = lambda * a * a;
    Ok(NormalizedSolution {
        point: ReductionPoint::new(dim, q, t, v.lq(), a, mu),
        profile: u,
        action,
        mass_identity_rel: (lhs - (1.0 - g) * mu * n.lq) / lhs,
        mass_rel: (n.mass - a * a) / (a * a),
        ground_state: false,
    })
}

/// Least-energy unit-frequency solution at `t`, accepted only below the
/// bubble level when the critical term is on.
pub fn ground_state_at(
    dim: u32,
    q: f64,
    t: f64,
    scan: &ScanOptions,
    opts: &ShootingOptions,
) -> Result<SolutionRecord> {
    let params = ProblemParams::new(dim, q, t);
    let rep = find_positive_solutions(&params, scan, opts)?;
    let level = bubble_level(dim);
    rep.solutions
        .into_iter()
        .filter(|s| s.energy() < level)
        .min_by(|x, y| x.energy().total_cmp(&y.energy()))
        .ok_or_else(|| Error::InvalidData(alloc::format!("no ground state below the bubble level at t = {t}")))
}
