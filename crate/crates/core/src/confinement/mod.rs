//! Ground states of `-Δw + w + t^{-2}(x₁² + x₂²) w = |w|^{p-2} w` in `R³`
//! and the mass-constrained solutions they generate.
//!
//! The solver works on an axisymmetric mesh ([`mesh`]) and runs a
//! Nehari-projected descent preconditioned by the exact inverse of the linear
//! part. Each iterate is kept nonnegative, nonincreasing in `s` and in `|z|`.

pub mod mesh;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functionals::FiberingValue;
use crate::math::{self, pos_pow, pow, sqrt};
use crate::params::ProblemParams;
use crate::profile::RadialProfile;
use crate::shooting::{find_positive_solutions, ScanOptions, ShootingOptions, SolutionKind, SolutionRecord};

pub use mesh::{Mesh, SeparableSolver};

/// Discrete `(‖w‖₂², ‖∇w‖₂², ‖w‖_p^p, ∫ V w²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfinedNorms {
    pub mass: f64,
    pub grad: f64,
    pub lp: f64,
    pub pot: f64,
}

impl ConfinedNorms {
    pub fn of(mesh: &Mesh, w: &[f64], p: f64) -> ConfinedNorms {
        ConfinedNorms {
            mass: mesh.integrate(w, |_, _, v| v * v),
            grad: mesh.dirichlet_form(w),
            lp: mesh.power_sum(w, p),
            pot: mesh.integrate(w, |s, _, v| s * s * v * v),
        }
    }

    /// `N_h + (N_h - N_{2h}) / 3` for a second-order scheme.
    pub fn richardson(fine: &ConfinedNorms, coarse: &ConfinedNorms) -> ConfinedNorms {
        let x = |f: f64, c: f64| f + (f - c) / 3.0;
        ConfinedNorms {
            mass: x(fine.mass, coarse.mass),
            grad: x(fine.grad, coarse.grad),
            lp: x(fine.lp, coarse.lp),
            pot: x(fine.pot, coarse.pot),
        }
    }

    /// `𝒥_t`.
    pub fn energy(&self, t: f64, p: f64) -> f64 {
        0.5 * (self.grad + self.mass + self.pot / (t * t)) - self.lp / p
    }

    /// `(‖∇w‖² + ‖w‖² + t^{-2}∫Vw² - ‖w‖_p^p) / ‖w‖_p^p`.
    pub fn nehari_rel(&self, t: f64) -> f64 {
        (self.grad + self.mass + self.pot / (t * t) - self.lp) / self.lp
    }

    pub fn max_rel_diff(&self, other: &ConfinedNorms) -> f64 {
        let d = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        d(self.mass, other.mass).max(d(self.grad, other.grad)).max(d(self.lp, other.lp)).max(d(self.pot, other.pot))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowOptions {
    /// Stop when `‖w - A⁻¹(W w^{p-1})‖_A / ‖w‖_A` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest tolerated share of `‖w‖₂²` in the outer sixteenth of the mesh.
    pub boundary_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-9, max_iter: 3000, boundary_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfinedState {
    pub t: f64,
    pub p: f64,
    pub mesh: Mesh,
    /// Nodal values, row `i` (in `s`) major.
    pub w: Vec<f64>,
    pub norms: ConfinedNorms,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `𝒥_t` after every accepted step, starting with the projected guess.
    pub energy_history: Vec<f64>,
    pub boundary_fraction: f64,
}

impl ConfinedState {
    pub fn value(&self, s: f64, z: f64) -> f64 {
        self.mesh.interpolate(&self.w, s, z)
    }

    pub fn height(&self) -> f64 {
        self.w.first().copied().unwrap_or(0.0)
    }

    /// Whether the stored values are nonincreasing in `s` and in `z`.
    pub fn is_monotone(&self) -> bool {
        let (ns, nz) = (self.mesh.ns, self.mesh.nz);
        for i in 0..ns {
            for j in 0..nz {
                let v = self.w[i * nz + j];
                if v < 0.0 || (i > 0 && v > self.w[(i - 1) * nz + j]) || (j > 0 && v > self.w[i * nz + j - 1]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Half-width of the default mesh: 16 for `t ≥ 1`, `16 √t` below.
pub fn default_extent(t: f64) -> f64 {
    if t >= 1.0 { 16.0 } else { 16.0 * sqrt(t) }
}

pub fn default_mesh(t: f64, nodes: usize) -> Result<Mesh> {
    let e = default_extent(t);
    Mesh::new(nodes, e, e)
}

/// The positive ground state of `-Δw + w = |w|^{p-2} w` in `R³`.
pub fn solve_w_infty(p: f64, opts: &ShootingOptions) -> Result<SolutionRecord> {
    if !(p > 2.0 && p < 6.0) {
        return Err(Error::Domain(alloc::format!("exponent must lie in (2, 6), got {p}")));
    }
    let params = ProblemParams::new(3, p, 1.0).subcritical_only();
    let rep = find_positive_solutions(&params, &ScanOptions::default(), opts)?;
    rep.solutions
        .into_iter()
        .find(|s| s.kind == SolutionKind::GroundState)
        .ok_or_else(|| Error::InvalidData(alloc::format!("no positive solution found for p = {p}")))
}

/// `w_∞(|x|)` on the mesh, used as the large-`t` starting point.
pub fn radial_guess(mesh: &Mesh, profile: &RadialProfile) -> Vec<f64> {
    mesh.sample(|s, z| profile.eval(sqrt(s * s + z * z)).max(0.0))
}

/// `t^{-1/(p-2)} e^{-|x|²/(2t)}`, the small-`t` starting point.
pub fn gaussian_guess(mesh: &Mesh, t: f64, p: f64) -> Vec<f64> {
    let a = pow(t, -1.0 / (p - 2.0));
    mesh.sample(|s, z| a * math::exp(-(s * s + z * z) / (2.0 * t)))
}

/// Bilinear transfer of a converged state onto another mesh.
pub fn transfer(state: &ConfinedState, mesh: &Mesh) -> Vec<f64> {
    mesh.sample(|s, z| state.value(s, z))
}

fn project_monotone(mesh: &Mesh, w: &mut [f64]) {
    let (ns, nz) = (mesh.ns, mesh.nz);
    for v in w.iter_mut() {
        if !(*v > 0.0) {
            *v = 0.0;
        }
    }
    for i in 1..ns {
        for j in 0..nz {
            let up = w[(i - 1) * nz + j];
            let v = &mut w[i * nz + j];
            if *v > up {
                *v = up;
            }
        }
    }
    for i in 0..ns {
        for j in 1..nz {
            let prev = w[i * nz + j - 1];
            let v = &mut w[i * nz + j];
            if *v > prev {
                *v = prev;
            }
        }
    }
}

/// Scales `w` onto the discrete Nehari set and returns its norms.
fn project_nehari(mesh: &Mesh, w: &mut [f64], t: f64, p: f64) -> Result<ConfinedNorms> {
    let n = ConfinedNorms::of(mesh, w, p);
    let quad = n.grad + n.mass + n.pot / (t * t);
    if !(n.lp > 0.0 && quad > 0.0) {
        return Err(Error::InvalidData("iterate vanished on the mesh".into()));
    }
    let s = pow(quad / n.lp, 1.0 / (p - 2.0));
    for v in w.iter_mut() {
        *v *= s;
    }
    Ok(ConfinedNorms {
        mass: n.mass * s * s,
        grad: n.grad * s * s,
        lp: n.lp * pow(s, p),
        pot: n.pot * s * s,
    })
}

/// Nehari-projected descent on `𝒥_t` from `init`.
///
/// One step is `w ← P(w - τ (w - A⁻¹ W w^{p-1}))`, `A` the linear part and
/// `P` the positivity, monotonicity and Nehari projections. `τ` starts at
/// one and is halved until `𝒥_t` does not increase.
pub fn solve_confined(t: f64, p: f64, mesh: &Mesh, init: &[f64], opts: &FlowOptions) -> Result<ConfinedState> {
    if !(t > 0.0) || !(p > 2.0 && p < 6.0) {
        return Err(Error::Domain(alloc::format!("need t > 0 and 2 < p < 6, got t = {t}, p = {p}")));
    }
    if init.len() != mesh.len() {
        return Err(Error::InvalidData("initial guess does not match the mesh".into()));
    }
    let inv_t2 = 1.0 / (t * t);
    let solver = SeparableSolver::new(mesh, 1.0, inv_t2);
    let mut w = init.to_vec();
    project_monotone(mesh, &mut w);
    let mut norms = project_nehari(mesh, &mut w, t, p)?;
    let mut energy = norms.energy(t, p);
    let mut history = alloc::vec![energy];
    let mut tau: f64 = 1.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut buf = Vec::with_capacity(w.len());
    while iterations < opts.max_iter {
        let mut rhs = Vec::with_capacity(w.len());
        for i in 0..mesh.ns {
            for j in 0..mesh.nz {
                rhs.push(mesh.weight(i, j) * pos_pow(w[i * mesh.nz + j], p - 1.0));
            }
        }
        let x = solver.solve(&rhs);
        let g: Vec<f64> = w.iter().zip(&x).map(|(a, b)| a - b).collect();
        let gn = mesh.energy_norm(&g, 1.0, inv_t2);
        residual = sqrt(gn.max(0.0) / norms.lp);
        if residual < opts.tol {
            break;
        }
        // Near convergence the decrease (~ residual² 𝒥) drops below the
        // rounding noise of the mesh sums; below this floor the test is moot.
        let slack = 1e-12 * energy.abs();
        loop {
            buf.clear();
            buf.extend(w.iter().zip(&g).map(|(a, b)| a - tau * b));
            project_monotone(mesh, &mut buf);
            let cand = project_nehari(mesh, &mut buf, t, p)?;
            let e = cand.energy(t, p);
            if e <= energy + slack {
                core::mem::swap(&mut w, &mut buf);
                norms = cand;
                energy = e;
                history.push(e);
                break;
            }
            tau *= 0.5;
            if tau < 1e-8 {
                return Err(Error::NoConvergence { iterations, residual });
            }
        }
        tau = (2.0 * tau).min(1.0);
        iterations += 1;
    }
    if !(residual < opts.tol) {
        return Err(Error::NoConvergence { iterations, residual });
    }
    let band = (mesh.ns / 16).max(1);
    let boundary_fraction = mesh.boundary_fraction(&w, band);
    if boundary_fraction > opts.boundary_tol {
        return Err(Error::BoundaryContamination { fraction: boundary_fraction });
    }
    Ok(ConfinedState {
        t,
        p,
        mesh: mesh.clone(),
        w,
        norms,
        energy,
        residual,
        iterations,
        energy_history: history,
        boundary_fraction,
    })
}

/// Cold start: `w_∞` for `t ≥ 1` (when given), the Gaussian otherwise.
pub fn cold_guess(mesh: &Mesh, t: f64, p: f64, w_inf: Option<&RadialProfile>) -> Vec<f64> {
    match w_inf {
        Some(prof) if t >= 1.0 => radial_guess(mesh, prof),
        _ => gaussian_guess(mesh, t, p),
    }
}

/// A fine solve, its half-resolution companion and the extrapolated norms.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfinedSolution {
    pub fine: ConfinedState,
    pub coarse_norms: ConfinedNorms,
    pub coarse_energy: f64,
    /// Richardson-extrapolated norms; every reported quantity derives from these.
    pub norms: ConfinedNorms,
}

impl ConfinedSolution {
    pub fn t(&self) -> f64 {
        self.fine.t
    }

    pub fn energy(&self) -> f64 {
        self.norms.energy(self.fine.t, self.fine.p)
    }

    /// `|𝒥_h - 𝒥_{2h}| / |𝒥_h|`.
    pub fn mesh_change(&self) -> f64 {
        (self.fine.energy - self.coarse_energy).abs() / self.fine.energy.abs()
    }

    pub fn normalized(&self) -> Result<NormalizedConfined> {
        normalized_from_norms(self.fine.t, self.fine.p, &self.norms)
    }
}

/// Where a solve starts.
#[derive(Clone, Copy)]
pub enum Start<'a> {
    /// `w_∞` for `t ≥ 1` when given, otherwise the Gaussian.
    Cold(Option<&'a RadialProfile>),
    Warm(&'a ConfinedState),
}

impl Start<'_> {
    fn guess(&self, mesh: &Mesh, t: f64, p: f64) -> Vec<f64> {
        match *self {
            Start::Cold(w_inf) => cold_guess(mesh, t, p, w_inf),
            Start::Warm(prev) => transfer(prev, mesh),
        }
    }
}

/// Solves on `nodes` and `(nodes + 1) / 2` per side and extrapolates.
pub fn solve_extrapolated(
    t: f64,
    p: f64,
    nodes: usize,
    opts: &FlowOptions,
    start: Start<'_>,
) -> Result<ConfinedSolution> {
    if nodes % 2 == 0 {
        return Err(Error::Domain(alloc::format!("node count must be odd, got {nodes}")));
    }
    let coarse_mesh = default_mesh(t, nodes.div_ceil(2))?;
    let coarse = solve_confined(t, p, &coarse_mesh, &start.guess(&coarse_mesh, t, p), opts)?;
    let fine_mesh = default_mesh(t, nodes)?;
    // The fine solve starts from the fine guess, not from the coarse answer,
    // so warm and cold runs stay distinguishable.
    let fine = solve_confined(t, p, &fine_mesh, &start.guess(&fine_mesh, t, p), opts)?;
    Ok(ConfinedSolution {
        norms: ConfinedNorms::richardson(&fine.norms, &coarse.norms),
        coarse_norms: coarse.norms,
        coarse_energy: coarse.energy,
        fine,
    })
}

/// Solves at every `t` in order, each from the previous fine solution.
pub fn warm_sweep(
    ts: &[f64],
    p: f64,
    nodes: usize,
    opts: &FlowOptions,
    w_inf: Option<&RadialProfile>,
) -> Result<Vec<ConfinedSolution>> {
    let mut out: Vec<ConfinedSolution> = Vec::with_capacity(ts.len());
    for &t in ts {
        let sol = match out.last() {
            Some(prev) => solve_extrapolated(t, p, nodes, opts, Start::Warm(&prev.fine))?,
            None => solve_extrapolated(t, p, nodes, opts, Start::Cold(w_inf))?,
        };
        out.push(sol);
    }
    Ok(out)
}

/// Energy change of the fine solve when both spacings halve once more.
pub fn refinement_change(sol: &ConfinedSolution, opts: &FlowOptions) -> Result<f64> {
    let st = &sol.fine;
    let nodes = 2 * st.mesh.ns + 1;
    let mesh = default_mesh(st.t, nodes)?;
    let finer = solve_confined(st.t, st.p, &mesh, &transfer(st, &mesh), opts)?;
    Ok((finer.energy - st.energy).abs() / finer.energy.abs())
}

/// Relative discrete `H¹` distance `‖a - b‖ / ‖b‖`, both on `mesh`.
pub fn h1_distance(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    sqrt(mesh.energy_norm(&d, 1.0, 0.0) / mesh.energy_norm(b, 1.0, 0.0))
}

/// Distance of a state from `w_∞` sampled on its mesh.
pub fn distance_to_limit(state: &ConfinedState, w_inf: &RadialProfile) -> f64 {
    let reference = radial_guess(&state.mesh, w_inf);
    h1_distance(&state.mesh, &state.w, &reference)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniquenessProbe {
    /// `(t, relative H¹ distance between warm and cold solutions)`.
    pub distances: Vec<(f64, f64)>,
    /// Smallest sampled `t` above which all warm and cold solves agree.
    pub agree_from: Option<f64>,
}

pub fn uniqueness_probe(warm: &[ConfinedSolution], cold: &[ConfinedSolution], tol: f64) -> Result<UniquenessProbe> {
    let mut distances = Vec::with_capacity(warm.len());
    for (a, b) in warm.iter().zip(cold).map(|(a, b)| (&a.fine, &b.fine)) {
        if a.mesh != b.mesh || a.t != b.t {
            return Err(Error::InvalidData("warm and cold states differ in t or mesh".into()));
        }
        distances.push((a.t, h1_distance(&a.mesh, &a.w, &b.w)));
    }
    distances.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut agree_from = None;
    for &(t, d) in distances.iter().rev() {
        if d < tol {
            agree_from = Some(t);
        } else {
            break;
        }
    }
    Ok(UniquenessProbe { distances, agree_from })
}

/// Exponent of `t` in `r_t² = t^e (...)`: `(10 - 3p) / (2(p - 2))`.
pub fn mass_exponent(p: f64) -> f64 {
    (10.0 - 3.0 * p) / (2.0 * (p - 2.0))
}

/// `(6-p)/(2p) ‖w‖_p^p - 2 t^{-2} ∫ V w²`.
pub fn reduction_bracket(norms: &ConfinedNorms, t: f64, p: f64) -> f64 {
    (6.0 - p) / (2.0 * p) * norms.lp - 2.0 * norms.pot / (t * t)
}

/// `f(r, t) = r² - t^{(10-3p)/(2(p-2))} (bracket)`.
pub fn f_of(r: f64, t: f64, p: f64, norms: &ConfinedNorms) -> f64 {
    r * r - pow(t, mass_exponent(p)) * reduction_bracket(norms, t, p)
}

/// The unique `r_t > 0` with `f(r_t, t) = 0`.
pub fn r_of_t(t: f64, p: f64, norms: &ConfinedNorms) -> Result<f64> {
    let b = reduction_bracket(norms, t, p);
    if !(b > 0.0) {
        return Err(Error::BracketNonPositive { t, value: b });
    }
    Ok(sqrt(pow(t, mass_exponent(p)) * b))
}

/// `λ_{r,2} ≈ [(6-p)‖w_∞‖_p^p / (2p r²)]^{2(p-2)/(3p-10)}`.
pub fn multiplier_law(r: f64, p: f64, lp_inf: f64) -> f64 {
    pow((6.0 - p) * lp_inf / (2.0 * p * r * r), 2.0 * (p - 2.0) / (3.0 * p - 10.0))
}

/// Mass-constrained solution `u(x) = t^{1/(p-2)} w(√t x)` with `λ = t`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizedConfined {
    pub t: f64,
    pub lambda: f64,
    pub r: f64,
    /// Norms of `u`, exact rescalings of the mesh norms of `w`.
    pub norms: ConfinedNorms,
    /// `(‖u‖₂² - r_t²) / r_t²`.
    pub mass_rel: f64,
    /// `(λ‖u‖₂² - (6-p)/(2p)‖u‖_p^p + 2∫V u²) / (λ r²)`.
    pub pohozaev_rel: f64,
    /// `u = amplitude · w(x / length)`.
    pub amplitude: f64,
    pub length: f64,
}

impl NormalizedConfined {
    pub fn u_at(&self, state: &ConfinedState, s: f64, z: f64) -> f64 {
        self.amplitude * state.value(s / self.length, z / self.length)
    }
}

/// Norms of `u(x) = t^{1/(p-2)} w(√t x)` from those of `w`.
pub fn scale_norms(n: &ConfinedNorms, t: f64, p: f64) -> ConfinedNorms {
    let a = 2.0 / (p - 2.0);
    ConfinedNorms {
        mass: pow(t, a - 1.5) * n.mass,
        grad: pow(t, a - 0.5) * n.grad,
        lp: pow(t, p / (p - 2.0) - 1.5) * n.lp,
        pot: pow(t, a - 2.5) * n.pot,
    }
}

pub fn normalized_from_norms(t: f64, p: f64, w_norms: &ConfinedNorms) -> Result<NormalizedConfined> {
    let r = r_of_t(t, p, w_norms)?;
    let u = scale_norms(w_norms, t, p);
    let lam_r2 = t * r * r;
    Ok(NormalizedConfined {
        t,
        lambda: t,
        r,
        norms: u,
        mass_rel: (u.mass - r * r) / (r * r),
        pohozaev_rel: (t * u.mass - (6.0 - p) / (2.0 * p) * u.lp + 2.0 * u.pot) / lam_r2,
        amplitude: pow(t, 1.0 / (p - 2.0)),
        length: 1.0 / sqrt(t),
    })
}

pub fn normalized_from_confined(state: &ConfinedState) -> Result<NormalizedConfined> {
    normalized_from_norms(state.t, state.p, &state.norms)
}

/// `γ_p = 3(p-2)/(2p)`.
pub fn gamma_p(p: f64) -> f64 {
    3.0 * (p - 2.0) / (2.0 * p)
}

/// `𝒯(τ) = τ²/2 ‖∇u‖² + 1/(2τ²) ∫V u² - τ^{pγ_p}/p ‖u‖_p^p` and two derivatives.
pub fn fibering_tau(u: &ConfinedNorms, p: f64, tau: f64) -> FiberingValue {
    let g = gamma_p(p);
    let e = p * g;
    let (a, v, l) = (u.grad, u.pot, u.lp);
    FiberingValue {
        value: 0.5 * tau * tau * a + v / (2.0 * tau * tau) - pow(tau, e) / p * l,
        d1: tau * a - v / (tau * tau * tau) - g * pow(tau, e - 1.0) * l,
        d2: a + 3.0 * v / (tau * tau * tau * tau) - g * (e - 1.0) * pow(tau, e - 2.0) * l,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibering_tau_derivatives_match_differences() {
        let u = ConfinedNorms { mass: 1.0, grad: 2.0, lp: 3.0, pot: 0.7 };
        for &p in &[4.0, 5.0] {
            for &tau in &[0.5, 1.0, 1.7] {
                let h = 1e-5;
                let f = |x: f64| fibering_tau(&u, p, x);
                let d1 = (f(tau + h).value - f(tau - h).value) / (2.0 * h);
                let d2 = (f(tau + h).d1 - f(tau - h).d1) / (2.0 * h);
                assert!((d1 - f(tau).d1).abs() < 1e-8, "p={p} tau={tau}");
                assert!((d2 - f(tau).d2).abs() < 1e-7, "p={p} tau={tau}");
            }
        }
        assert!(fibering_tau(&u, 4.0, 1e-4).value > 1e6);
    }

    #[test]
    fn pohozaev_scaled_profile_is_stationary_in_tau() {
        // ‖∇u‖² - ∫Vu² = γ_p ‖u‖_p^p makes τ = 1 critical.
        let p = 4.0;
        let (grad, pot) = (5.0, 0.1);
        let u = ConfinedNorms { mass: 1.0, grad, lp: (grad - pot) / gamma_p(p), pot };
        let f = fibering_tau(&u, p, 1.0);
        assert!(f.d1.abs() < 1e-14);
        assert!(f.d2 < 0.0);
    }

    #[test]
    fn r_of_t_zeroes_f_and_rejects_negative_bracket() {
        let n = ConfinedNorms { mass: 1.0, grad: 1.0, lp: 4.0, pot: 3.0 };
        let r = r_of_t(10.0, 4.0, &n).unwrap();
        assert!(f_of(r, 10.0, 4.0, &n).abs() < 1e-15);
        assert!(matches!(r_of_t(0.5, 4.0, &n), Err(Error::BracketNonPositive { .. })));
    }

    #[test]
    fn p4_exponents() {
        assert_eq!(mass_exponent(4.0), -0.5);
        assert_eq!(gamma_p(4.0), 0.75);
        // λ = (lp / (4 r²))² for p = 4.
        let (r, lp) = (0.3, 75.0);
        let expect = (lp / (4.0 * r * r)) * (lp / (4.0 * r * r));
        assert!((multiplier_law(r, 4.0, lp) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn scaled_norms_match_rescaled_quadrature() {
        // u = t^{1/(p-2)} w(√t x) for a Gaussian w; the rescaled sample is again a
        // Gaussian, integrated on a mesh shrunk by √t.
        let (t, p) = (4.0, 4.0);
        let mw = Mesh::new(129, 8.0, 8.0).unwrap();
        let w = mw.sample(|s, z| math::exp(-(s * s + z * z)));
        let mu = Mesh::new(129, 8.0 / sqrt(t), 8.0 / sqrt(t)).unwrap();
        let u = mu.sample(|s, z| pow(t, 1.0 / (p - 2.0)) * math::exp(-t * (s * s + z * z)));
        let nw = ConfinedNorms::of(&mw, &w, p);
        let nu = ConfinedNorms::of(&mu, &u, p);
        assert!(scale_norms(&nw, t, p).max_rel_diff(&nu) < 1e-12);
    }

    #[test]
    fn richardson_removes_quadratic_error() {
        let exact = ConfinedNorms { mass: 1.0, grad: 2.0, lp: 3.0, pot: 4.0 };
        let c = 0.37;
        let at = |h: f64| ConfinedNorms {
            mass: 1.0 + c * h * h,
            grad: 2.0 - c * h * h,
            lp: 3.0 + 2.0 * c * h * h,
            pot: 4.0 + c * h * h,
        };
        let r = ConfinedNorms::richardson(&at(0.1), &at(0.2));
        assert!(r.max_rel_diff(&exact) < 1e-14);
    }

    #[test]
    fn flow_on_coarse_mesh_is_monotone_and_converges() {
        let (t, p) = (2.0, 4.0);
        let mesh = Mesh::new(65, 12.0, 12.0).unwrap();
        let init = gaussian_guess(&mesh, 1.0, p);
        let st = solve_confined(t, p, &mesh, &init, &FlowOptions::default()).unwrap();
        assert!(st.residual < 1e-9);
        assert!(st.is_monotone());
        assert!(st.norms.nehari_rel(t).abs() < 1e-12);
        for w in st.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
        assert!(st.energy_history[0] > *st.energy_history.last().unwrap());
    }

    #[test]
    fn discrete_euler_lagrange_residual_is_small() {
        let (t, p) = (3.0, 4.0);
        let mesh = Mesh::new(65, 12.0, 12.0).unwrap();
        let st = solve_confined(t, p, &mesh, &gaussian_guess(&mesh, 1.0, p), &FlowOptions::default()).unwrap();
        let aw = mesh.apply(&st.w, 1.0, 1.0 / (t * t));
        let mut worst: f64 = 0.0;
        for i in 0..mesh.ns {
            for j in 0..mesh.nz {
                let k = i * mesh.nz + j;
                let rhs = mesh.weight(i, j) * pos_pow(st.w[k], p - 1.0);
                worst = worst.max((aw[k] - rhs).abs() / mesh.weight(i, j));
            }
        }
        assert!(worst < 1e-6 * pow(st.height(), p - 1.0), "{worst}");
    }

    #[test]
    fn boundary_contamination_is_reported() {
        let mesh = Mesh::new(33, 2.0, 2.0).unwrap();
        let init = gaussian_guess(&mesh, 1.0, 4.0);
        let r = solve_confined(1.0, 4.0, &mesh, &init, &FlowOptions::default());
        assert!(matches!(r, Err(Error::BoundaryContamination { .. })), "{r:?}");
    }
}
