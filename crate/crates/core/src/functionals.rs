//! Energy, Nehari and Pohozaev bookkeeping, the fibering map, and the
//! Aubin-Talenti bubble with its Sobolev constant.

use core::f64::consts::PI;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::math::{self, pow};
use crate::params::{critical_exponent, ProblemParams};
use crate::profile::{Norms, RadialProfile};

/// Variational bookkeeping for one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Certificate {
    pub energy: f64,
    /// `‖∇u‖² + λ‖u‖² - t‖u‖_q^q - ‖u‖_{2*}^{2*}`.
    pub nehari_res: f64,
    /// `‖∇u‖² - γ_q t‖u‖_q^q - ‖u‖_{2*}^{2*}`.
    pub pohozaev_res: f64,
    /// `λ‖u‖² - (1 - γ_q) t‖u‖_q^q`.
    pub mass_identity_res: f64,
    /// `‖∇u‖² - N E`.
    pub energy_identity_res: f64,
    /// `E - S^{N/2}/N`.
    pub level_gap: f64,
    pub norms: Norms,
}

impl Certificate {
    /// Largest of the Nehari and Pohozaev residuals relative to `‖∇u‖²`.
    pub fn relative_residual(&self) -> f64 {
        let g = self.norms.grad.abs().max(f64::MIN_POSITIVE);
        (self.nehari_res.abs() / g).max(self.pohozaev_res.abs() / g)
    }

    pub fn accepted(&self, tol: f64) -> bool {
        self.relative_residual() < tol
    }
}

/// Energy and identity residuals of `profile` for the equation in `params`.
pub fn energy(profile: &RadialProfile, params: &ProblemParams) -> Result<Certificate> {
    if profile.tail.is_none() {
        return Err(Error::MissingTail);
    }
    if (profile.q - params.q).abs() > 1e-12 * params.q {
        return Err(Error::InvalidData("profile was integrated for another exponent q".into()));
    }
    Ok(certificate_from_norms(&profile.norms, params))
}

pub fn certificate_from_norms(n: &Norms, params: &ProblemParams) -> Certificate {
    let (t, q, lam) = (params.t, params.q, params.lambda);
    let c = params.critical_exponent();
    let crit = if params.critical { n.crit } else { 0.0 };
    // Zero frequency leaves the mass out even when it diverges.
    let lam_mass = if lam == 0.0 { 0.0 } else { lam * n.mass };
    let energy = 0.5 * (n.grad + lam_mass) - t / q * n.lq - crit / c;
    let g = params.gamma_q();
    Certificate {
        energy,
        nehari_res: n.grad + lam_mass - t * n.lq - crit,
        pohozaev_res: n.grad - g * t * n.lq - crit,
        mass_identity_res: lam_mass - (1.0 - g) * t * n.lq,
        energy_identity_res: n.grad - params.dim as f64 * energy,
        level_gap: energy - bubble_level(params.dim),
        norms: *n,
    }
}

/// Value and first two derivatives of `s -> E(s u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiberingValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn fibering_map(n: &Norms, params: &ProblemParams, s: f64) -> FiberingValue {
    let (t, q, lam) = (params.t, params.q, params.lambda);
    let c = params.critical_exponent();
    let crit = if params.critical { n.crit } else { 0.0 };
    let a = n.grad + if lam == 0.0 { 0.0 } else { lam * n.mass };
    FiberingValue {
        value: 0.5 * s * s * a - t * pow(s, q) / q * n.lq - pow(s, c) / c * crit,
        d1: s * a - t * pow(s, q - 1.0) * n.lq - pow(s, c - 1.0) * crit,
        d2: a - t * (q - 1.0) * pow(s, q - 2.0) * n.lq - (c - 1.0) * pow(s, c - 2.0) * crit,
    }
}

/// The unique positive critical point of the fibering map.
pub fn fibering_max(n: &Norms, params: &ProblemParams) -> Result<f64> {
    let (t, q, lam) = (params.t, params.q, params.lambda);
    let c = params.critical_exponent();
    let crit = if params.critical { n.crit } else { 0.0 };
    let a = n.grad + if lam == 0.0 { 0.0 } else { lam * n.mass };
    if !(a > 0.0) || !(t * n.lq + crit > 0.0) {
        return Err(Error::InvalidData("fibering map has no interior maximum".into()));
    }
    // a = t s^{q-2} |u|_q^q + s^{2*-2} |u|_{2*}^{2*}; the right side increases in s.
    let f = |ls: f64| {
        let s = math::exp(ls);
        t * pow(s, q - 2.0) * n.lq + pow(s, c - 2.0) * crit - a
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while f(lo) > 0.0 {
        lo *= 2.0;
        if lo < -700.0 {
            return Err(Error::InvalidData("fibering maximum out of range".into()));
        }
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::InvalidData("fibering maximum out of range".into()));
        }
    }
    let ls = math::bisect(f, lo, hi, 1e-15).expect("bracket checked above");
    Ok(math::exp(ls))
}

/// `[N(N-2)]^{(N-2)/4} (ε / (ε² + r²))^{(N-2)/2}`.
pub fn aubin_talenti(dim: u32, eps: f64, r: f64) -> f64 {
    let n = dim as f64;
    pow(n * (n - 2.0), (n - 2.0) / 4.0) * pow(eps / (eps * eps + r * r), (n - 2.0) / 2.0)
}

/// Radial derivative of the bubble.
pub fn aubin_talenti_slope(dim: u32, eps: f64, r: f64) -> f64 {
    let n = dim as f64;
    -(n - 2.0) * r / (eps * eps + r * r) * aubin_talenti(dim, eps, r)
}

/// Concentration parameter with bubble height `d`.
pub fn bubble_eps(dim: u32, d: f64) -> f64 {
    let n = dim as f64;
    pow(pow(n * (n - 2.0), (n - 2.0) / 4.0) / d, 2.0 / (n - 2.0))
}

static SOBOLEV_CACHE: [AtomicU64; 16] = [const { AtomicU64::new(0) }; 16];

/// Best Sobolev constant `S` in `R^N`, computed once per dimension by
/// quadrature of the bubble's gradient and critical norms.
pub fn sobolev_constant(dim: u32) -> f64 {
    let slot = SOBOLEV_CACHE.get(dim as usize);
    if let Some(slot) = slot {
        let bits = slot.load(Ordering::Relaxed);
        if bits != 0 {
            return f64::from_bits(bits);
        }
    }
    let s = sobolev_by_quadrature(dim);
    if let Some(slot) = slot {
        let _ = slot.compare_exchange(0, s.to_bits(), Ordering::Relaxed, Ordering::Relaxed);
        return f64::from_bits(slot.load(Ordering::Relaxed));
    }
    s
}

fn sobolev_by_quadrature(dim: u32) -> f64 {
    let c = critical_exponent(dim);
    let (grad, crit) = bubble_norms_by_quadrature(dim);
    grad / pow(crit, 2.0 / c).max(f64::MIN_POSITIVE)
}

/// `(‖∇U‖², ‖U‖_{2*}^{2*})` of the unit bubble. With `r = tan θ` both
/// integrands are smooth on `[0, π/2]`, so Gauss-Legendre converges fast.
pub fn bubble_norms_by_quadrature(dim: u32) -> (f64, f64) {
    let n = dim as f64;
    let amp = pow(n * (n - 2.0), (n - 2.0) / 4.0);
    let c = critical_exponent(dim);
    let area = math::sphere_area(dim);
    let crit = area
        * pow(amp, c)
        * math::integrate_gl(
            |th| pow(libm::sin(th), n - 1.0) * pow(libm::cos(th), n - 1.0),
            0.0,
            PI / 2.0,
            8,
            24,
        );
    let grad = area
        * (n - 2.0)
        * (n - 2.0)
        * amp
        * amp
        * math::integrate_gl(
            |th| pow(libm::sin(th), n + 1.0) * pow(libm::cos(th), n - 3.0),
            0.0,
            PI / 2.0,
            8,
            24,
        );
    (grad, crit)
}

/// `π N (N-2) (Γ(N/2) / Γ(N))^{2/N}`, used to cross-check the quadrature.
pub fn sobolev_constant_closed_form(dim: u32) -> f64 {
    let n = dim as f64;
    PI * n * (n - 2.0) * pow(math::gamma_half(dim) / math::gamma_half(2 * dim), 2.0 / n)
}

/// `S^{N/2} / N`, the energy of the bubble.
pub fn bubble_level(dim: u32) -> f64 {
    let n = dim as f64;
    pow(sobolev_constant(dim), n / 2.0) / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobolev_constant_agrees_with_closed_form() {
        for dim in 3..=8 {
            let a = sobolev_constant(dim);
            let b = sobolev_constant_closed_form(dim);
            assert!((a - b).abs() < 1e-12 * b, "N = {dim}: {a} vs {b}");
        }
    }

    #[test]
    fn sobolev_constant_is_cached() {
        let a = sobolev_constant(3);
        let b = sobolev_constant(3);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn bubble_level_three_dimensions() {
        // S^{3/2} = 3^{3/2} π² / 4 in three dimensions.
        let expect = pow(3.0, 1.5) * PI * PI / 12.0;
        assert!((bubble_level(3) - expect).abs() < 1e-12);
        assert!((bubble_level(3) - 4.2737).abs() < 1e-4);
        assert!((sobolev_constant(3) - 5.4779).abs() < 1e-4);
    }

    #[test]
    fn bubble_norms_are_equal() {
        for dim in 3..=6 {
            let (g, c) = bubble_norms_by_quadrature(dim);
            assert!((g - c).abs() < 1e-12 * g, "N = {dim}");
        }
    }

    #[test]
    fn bubble_height_and_eps_are_inverse() {
        for dim in 3..=5 {
            for &d in &[1e-3, 1.0, 7.5, 1e8] {
                let eps = bubble_eps(dim, d);
                assert!((aubin_talenti(dim, eps, 0.0) - d).abs() < 1e-12 * d);
            }
        }
    }

    #[test]
    fn fibering_max_of_unit_nehari_profile_is_one() {
        let params = ProblemParams::new(3, 3.0, 2.0);
        // Norms chosen so that s = 1 is the critical point.
        let lq = 1.3;
        let crit = 0.7;
        let grad = 2.5;
        let mass = 2.0 * lq + crit - grad;
        let n = Norms { mass, grad, lq, crit };
        let s = fibering_max(&n, &params).unwrap();
        assert!((s - 1.0).abs() < 1e-13);
        let f = fibering_map(&n, &params, s);
        assert!(f.d1.abs() < 1e-12 && f.d2 < 0.0);
    }
}
