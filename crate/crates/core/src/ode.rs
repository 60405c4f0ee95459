//! Dormand-Prince 5(4) with the standard continuous extension.
//!
//! The driver hands every accepted step to a callback together with its dense
//! output, so callers can locate events and decide whether to continue.

use crate::error::{Error, Result};

pub trait OdeSystem<const D: usize> {
    fn rhs(&self, r: f64, y: &[f64; D], dy: &mut [f64; D]);

    /// Natural magnitude of each component at `r`. The absolute tolerance is
    /// applied relative to these, so components with very different sizes are
    /// controlled on their own scale.
    fn magnitude(&self, _r: f64, y: &[f64; D], out: &mut [f64; D]) {
        for (o, v) in out.iter_mut().zip(y) {
            *o = v.abs();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-8, abs: 1e-10 }
    }
}

impl Tolerances {
    pub fn scaled(self, factor: f64) -> Self {
        Tolerances { rel: self.rel * factor, abs: self.abs * factor }
    }
}

/// One accepted step with its interpolant.
pub struct Step<const D: usize> {
    pub r0: f64,
    pub h: f64,
    pub y0: [f64; D],
    pub y1: [f64; D],
    pub dy0: [f64; D],
    pub dy1: [f64; D],
    cont: [[f64; D]; 5],
}

impl<const D: usize> Step<D> {
    pub fn r1(&self) -> f64 {
        self.r0 + self.h
    }

    /// State at `r0 + theta h`, `theta` in `[0, 1]`.
    pub fn dense(&self, theta: f64) -> [f64; D] {
        let t1 = 1.0 - theta;
        let mut out = [0.0; D];
        for i in 0..D {
            let c = &self.cont;
            out[i] = c[0][i] + theta * (c[1][i] + t1 * (c[2][i] + theta * (c[3][i] + t1 * c[4][i])));
        }
        out
    }

    pub fn dense_at(&self, r: f64) -> [f64; D] {
        self.dense(((r - self.r0) / self.h).clamp(0.0, 1.0))
    }

    /// Locates `f(r, state) = 0` inside the step by bisection on the
    /// interpolant. `f` must change sign between the endpoints.
    pub fn locate(&self, f: impl Fn(f64, &[f64; D]) -> f64) -> f64 {
        let (mut a, mut b) = (0.0, 1.0);
        let fa = f(self.r0, &self.y0);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let fm = f(self.r0 + m * self.h, &self.dense(m));
            if (fm > 0.0) == (fa > 0.0) && fm != 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        self.r0 + 0.5 * (a + b) * self.h
    }
}

pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_h: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tol: Tolerances,
    pub max_steps: usize,
    pub h_max: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Dopri5 { tol, max_steps: 200_000, h_max: f64::INFINITY }
    }

    /// Integrates from `r0` towards `r_end` starting with step `h0`, calling
    /// `on_step` after each accepted step.
    pub fn integrate<const D: usize, S: OdeSystem<D>>(
        &self,
        sys: &S,
        r0: f64,
        y0: [f64; D],
        r_end: f64,
        h0: f64,
        mut on_step: impl FnMut(&Step<D>) -> Control,
    ) -> Result<Stats> {
        let mut stats = Stats::default();
        let mut r = r0;
        let mut y = y0;
        let mut k1 = [0.0; D];
        sys.rhs(r, &y, &mut k1);
        let mut h = h0.min(self.h_max).min(r_end - r0);
        let mut mag = [0.0; D];
        let mut last_rejected = false;

        while r < r_end {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepLimit { r });
            }
            let mut final_step = false;
            if r + h >= r_end {
                h = r_end - r;
                final_step = true;
            }
            if h <= 4.0 * f64::EPSILON * r.abs() || h <= 0.0 {
                return Err(Error::StepUnderflow { r });
            }

            let mut yt = [0.0; D];
            let mut k2 = [0.0; D];
            let mut k3 = [0.0; D];
            let mut k4 = [0.0; D];
            let mut k5 = [0.0; D];
            let mut k6 = [0.0; D];
            let mut k7 = [0.0; D];
            for i in 0..D {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            sys.rhs(r + C2 * h, &yt, &mut k2);
            for i in 0..D {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            sys.rhs(r + C3 * h, &yt, &mut k3);
            for i in 0..D {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            sys.rhs(r + C4 * h, &yt, &mut k4);
            for i in 0..D {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            sys.rhs(r + C5 * h, &yt, &mut k5);
            for i in 0..D {
                yt[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let r_new = if final_step { r_end } else { r + h };
            sys.rhs(r_new, &yt, &mut k6);
            let mut y_new = [0.0; D];
            for i in 0..D {
                y_new[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            sys.rhs(r_new, &y_new, &mut k7);

            sys.magnitude(r, &y, &mut mag);
            let mut err = 0.0;
            let mut finite = true;
            for i in 0..D {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.abs * mag[i]
                    + self.tol.rel * y[i].abs().max(y_new[i].abs())
                    + f64::MIN_POSITIVE;
                let z = e / sc;
                err += z * z;
                finite &= y_new[i].is_finite();
            }
            err = libm::sqrt(err / D as f64);
            if !finite || !err.is_finite() {
                if h < 1e-300 {
                    return Err(Error::NonFinite { r });
                }
                h *= 0.1;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }

            if err <= 1.0 {
                let mut cont = [[0.0; D]; 5];
                for i in 0..D {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    cont[0][i] = y[i];
                    cont[1][i] = dy;
                    cont[2][i] = bspl;
                    cont[3][i] = dy - h * k7[i] - bspl;
                    cont[4][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let step = Step { r0: r, h, y0: y, y1: y_new, dy0: k1, dy1: k7, cont };
                stats.accepted += 1;
                stats.last_h = h;
                r = r_new;
                y = y_new;
                k1 = k7;
                if let Control::Stop = on_step(&step) {
                    return Ok(stats);
                }
                let mut fac = 0.9 * libm::pow(err.max(1e-10), -0.2);
                fac = fac.clamp(0.2, 5.0);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                h = (h * fac).min(self.h_max);
                last_rejected = false;
            } else {
                let fac = (0.9 * libm::pow(err, -0.2)).max(0.1);
                h *= fac;
                stats.rejected += 1;
                last_rejected = true;
            }
        }
        Ok(stats)
    }
}
