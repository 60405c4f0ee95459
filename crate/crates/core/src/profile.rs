//! Radial profiles on a nonuniform grid with an analytic far-field tail.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, integrate_gl, pos_pow};

/// Far-field model attached beyond the last grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Tail {
    /// `A r^{-(N-1)/2} e^{-κ r}`.
    Exponential { amplitude: f64, kappa: f64 },
    /// `A r^{-(N-2)}`, the zero-frequency decay.
    Algebraic { amplitude: f64 },
}

/// Integrals over `R^N`: `∫u²`, `∫|∇u|²`, `∫u^q`, `∫u^{2*}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Norms {
    pub mass: f64,
    pub grad: f64,
    pub lq: f64,
    pub crit: f64,
}

impl Norms {
    pub fn max_rel_diff(&self, other: &Norms) -> f64 {
        let rd = |a: f64, b: f64| {
            if a.is_infinite() && b.is_infinite() {
                0.0
            } else {
                (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
            }
        };
        rd(self.mass, other.mass)
            .max(rd(self.grad, other.grad))
            .max(rd(self.lq, other.lq))
            .max(rd(self.crit, other.crit))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialProfile {
    pub dim: u32,
    /// Exponent used for the `lq` integral.
    pub q: f64,
    /// Exponent used for the `crit` integral (`2*`).
    pub crit_exp: f64,
    /// Frequency of the linear part; the tail decays at `sqrt(lambda)`.
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub curvatures: Vec<f64>,
    pub tail: Option<Tail>,
    /// Integrals accumulated alongside the ODE, tail included once attached.
    pub norms: Norms,
}

impl RadialProfile {
    pub fn height(&self) -> f64 {
        self.values[0]
    }

    pub fn r_last(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Value at `r` by cubic Hermite interpolation, tail beyond the grid.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.grid.len();
        if r <= self.grid[0] {
            return self.values[0];
        }
        if r >= self.grid[n - 1] {
            return match self.tail {
                Some(tail) => tail_value(tail, self.dim, r),
                None => self.values[n - 1],
            };
        }
        let i = self.grid.partition_point(|&g| g <= r) - 1;
        hermite(
            self.grid[i],
            self.grid[i + 1],
            self.values[i],
            self.values[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            r,
        )
    }

    /// Returns `α u(r / ℓ)` as a new profile. Norms are rescaled exactly.
    pub fn rescale(&self, alpha: f64, ell: f64) -> RadialProfile {
        let n = self.dim as f64;
        let tail = self.tail.map(|t| match t {
            Tail::Exponential { amplitude, kappa } => Tail::Exponential {
                amplitude: alpha * amplitude * math::pow(ell, (n - 1.0) / 2.0),
                kappa: kappa / ell,
            },
            Tail::Algebraic { amplitude } => Tail::Algebraic {
                amplitude: alpha * amplitude * math::pow(ell, n - 2.0),
            },
        });
        let ln = math::pow(ell, n);
        RadialProfile {
            dim: self.dim,
            q: self.q,
            crit_exp: self.crit_exp,
            lambda: self.lambda / (ell * ell),
            grid: self.grid.iter().map(|r| r * ell).collect(),
            values: self.values.iter().map(|u| u * alpha).collect(),
            slopes: self.slopes.iter().map(|u| u * alpha / ell).collect(),
            curvatures: self.curvatures.iter().map(|u| u * alpha / (ell * ell)).collect(),
            tail,
            norms: Norms {
                mass: alpha * alpha * ln * self.norms.mass,
                grad: alpha * alpha * ln / (ell * ell) * self.norms.grad,
                lq: math::pow(alpha, self.q) * ln * self.norms.lq,
                crit: math::pow(alpha, self.crit_exp) * ln * self.norms.crit,
            },
        }
    }

    /// Recomputes the norms from the stored grid with the end-corrected
    /// trapezoid rule, plus the analytic tail.
    pub fn posthoc_norms(&self) -> Result<Norms> {
        let tail = self.tail.ok_or(Error::MissingTail)?;
        let n = self.dim as f64;
        let area = math::sphere_area(self.dim);
        let (q, c) = (self.q, self.crit_exp);
        let mut acc = Norms::default();
        for i in 0..self.grid.len() - 1 {
            let (ra, rb) = (self.grid[i], self.grid[i + 1]);
            let h = rb - ra;
            let pa = Point { r: ra, u: self.values[i], du: self.slopes[i], ddu: self.curvatures[i] };
            let pb = Point {
                r: rb,
                u: self.values[i + 1],
                du: self.slopes[i + 1],
                ddu: self.curvatures[i + 1],
            };
            let seg = |f: &dyn Fn(&Point) -> (f64, f64)| {
                let (fa, da) = f(&pa);
                let (fb, db) = f(&pb);
                0.5 * h * (fa + fb) + h * h / 12.0 * (da - db)
            };
            acc.mass += seg(&|p| power_integrand(p, 2.0, n));
            acc.grad += seg(&|p| {
                let w = math::pow(p.r, n - 1.0);
                let dw = (n - 1.0) * math::pow(p.r, n - 2.0);
                (p.du * p.du * w, 2.0 * p.du * p.ddu * w + p.du * p.du * dw)
            });
            acc.lq += seg(&|p| power_integrand(p, q, n));
            acc.crit += seg(&|p| power_integrand(p, c, n));
        }
        // The grid starts at a tiny radius; the missing ball is negligible but
        // the leading term is kept for consistency with the co-integrated sums.
        let (r0, u0) = (self.grid[0], self.values[0]);
        let ball = math::pow(r0, n) / n;
        acc.mass += u0 * u0 * ball;
        acc.lq += pos_pow(u0, q) * ball;
        acc.crit += pos_pow(u0, c) * ball;
        let t = tail_norms(tail, self.dim, q, c, self.r_last());
        Ok(Norms {
            mass: area * acc.mass + t.mass,
            grad: area * acc.grad + t.grad,
            lq: area * acc.lq + t.lq,
            crit: area * acc.crit + t.crit,
        })
    }

    /// Largest pointwise residual of `u'' + (N-1)u'/r - λu + a u^{q-1} + b u^{2*-1}`
    /// relative to the size of the individual terms.
    pub fn equation_residual(&self, lambda: f64, coef_q: f64, coef_crit: f64) -> f64 {
        let n = self.dim as f64;
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            let (r, u, du, ddu) = (self.grid[i], self.values[i], self.slopes[i], self.curvatures[i]);
            let terms = [
                ddu,
                (n - 1.0) * du / r,
                -lambda * u,
                coef_q * pos_pow(u, self.q - 1.0),
                coef_crit * pos_pow(u, self.crit_exp - 1.0),
            ];
            let scale = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
            }
        }
        worst
    }
}

struct Point {
    r: f64,
    u: f64,
    du: f64,
    ddu: f64,
}

fn power_integrand(p: &Point, e: f64, n: f64) -> (f64, f64) {
    let w = math::pow(p.r, n - 1.0);
    let dw = (n - 1.0) * math::pow(p.r, n - 2.0);
    let up = pos_pow(p.u, e);
    let dup = e * pos_pow(p.u, e - 1.0) * p.du;
    (up * w, dup * w + up * dw)
}

pub(crate) fn hermite(ra: f64, rb: f64, ua: f64, ub: f64, da: f64, db: f64, r: f64) -> f64 {
    let h = rb - ra;
    let s = (r - ra) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * ua
        + (s3 - 2.0 * s2 + s) * h * da
        + (-2.0 * s3 + 3.0 * s2) * ub
        + (s3 - s2) * h * db
}

pub fn tail_value(tail: Tail, dim: u32, r: f64) -> f64 {
    let n = dim as f64;
    match tail {
        Tail::Exponential { amplitude, kappa } => {
            amplitude * math::pow(r, -(n - 1.0) / 2.0) * math::exp(-kappa * r)
        }
        Tail::Algebraic { amplitude } => amplitude * math::pow(r, -(n - 2.0)),
    }
}

pub fn tail_slope(tail: Tail, dim: u32, r: f64) -> f64 {
    let n = dim as f64;
    let u = tail_value(tail, dim, r);
    match tail {
        Tail::Exponential { kappa, .. } => -u * ((n - 1.0) / (2.0 * r) + kappa),
        Tail::Algebraic { .. } => -(n - 2.0) * u / r,
    }
}

/// Norm contributions of the tail on `[r, ∞)`, surface factor included.
pub fn tail_norms(tail: Tail, dim: u32, q: f64, crit_exp: f64, r: f64) -> Norms {
    let n = dim as f64;
    let area = math::sphere_area(dim);
    match tail {
        Tail::Exponential { kappa, .. } => {
            let integral = |f: &dyn Fn(f64) -> f64, e: f64| {
                let len = 40.0 / (e * kappa);
                area * integrate_gl(f, r, r + len, 16, 12)
            };
            let w = |s: f64| math::pow(s, n - 1.0);
            Norms {
                mass: integral(&|s| sq(tail_value(tail, dim, s)) * w(s), 2.0),
                grad: integral(&|s| sq(tail_slope(tail, dim, s)) * w(s), 2.0),
                lq: integral(&|s| pos_pow(tail_value(tail, dim, s), q) * w(s), q),
                crit: integral(&|s| pos_pow(tail_value(tail, dim, s), crit_exp) * w(s), crit_exp),
            }
        }
        Tail::Algebraic { amplitude: a } => {
            let m = n - 2.0;
            let power = |e: f64| {
                // ∫_r^∞ a^e s^{-m e + n - 1} ds, finite only when m e > n.
                if m * e > n {
                    area * math::pow(a, e) * math::pow(r, n - m * e) / (m * e - n)
                } else {
                    f64::INFINITY
                }
            };
            Norms {
                mass: power(2.0),
                grad: area * m * a * a * math::pow(r, 2.0 - n),
                lq: power(q),
                crit: power(crit_exp),
            }
        }
    }
}

fn sq(x: f64) -> f64 {
    x * x
}
