//! Shooting on the initial height for positive radial solutions.
//!
//! With the critical term on, the integration starts in a bubble frame: the
//! unknown is the offset `φ = u - U_ε` from the exact critical bubble of the
//! same height. The offset carries the whole effect of the frequency and the
//! subcritical term, which for very tall profiles is far below the rounding
//! level of `u` itself. Once `|φ|` reaches a fixed fraction of `U_ε` the
//! integrator switches to `u` directly.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::functionals::{self, aubin_talenti, aubin_talenti_slope, bubble_eps, Certificate};
use crate::math::{self, pos_pow, sqrt};
use crate::ode::{Control, Dopri5, OdeSystem, Step, Tolerances};
use crate::params::ProblemParams;
use crate::profile::{hermite, tail_norms, Norms, RadialProfile, Tail};

/// How a single shot ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ShotClass {
    /// `u` reaches zero while decreasing: the height overshoots.
    CrossesZero,
    /// `u` turns back up at a positive minimum, or grows past the guard.
    BlowsUp,
    /// `u` reaches `r_max` positive and in the decaying mode.
    Decays,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShootingOptions {
    pub tol: Tolerances,
    /// End of the integration interval. `None` picks `50/sqrt(λ)`, or `1e4`
    /// at zero frequency.
    pub r_max: Option<f64>,
    /// Growth past this multiple of the height classifies as blow-up.
    pub growth_guard: f64,
    /// Allowed mismatch of the log-derivative against the decaying mode,
    /// relative to the decay rate.
    pub decay_slope_tol: f64,
    /// Leave the bubble frame once `|φ| > switch_ratio U_ε`.
    pub switch_ratio: f64,
    /// Start radius relative to the local length scale at the origin.
    pub start_factor: f64,
    pub max_steps: usize,
    /// Relative gap between the bracketing shots at which the profile is cut.
    pub cut_gap: f64,
    /// Re-solve at a tenth of the tolerance to estimate the height error.
    pub estimate_height_error: bool,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            tol: Tolerances::default(),
            r_max: None,
            growth_guard: 10.0,
            decay_slope_tol: 0.2,
            switch_ratio: 0.1,
            start_factor: 1e-6,
            max_steps: 400_000,
            cut_gap: 1e-4,
            estimate_height_error: false,
        }
    }
}

impl ShootingOptions {
    pub fn with_tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    fn r_max_for(&self, params: &ProblemParams) -> f64 {
        self.r_max.unwrap_or(if params.lambda > 0.0 { 50.0 / sqrt(params.lambda) } else { 1e4 })
    }
}

/// Grid points of one shot. `quad` holds the running integrals of
/// `r^{N-1}` times `u²`, `|u'|²`, `u^q`, `u^{2*}` (no surface factor).
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub ddu: Vec<f64>,
    pub quad: Vec<[f64; 4]>,
    /// Radius where the bubble frame was left, if it was used.
    pub r_switch: Option<f64>,
}

impl Trajectory {
    fn push(&mut self, r: f64, u: f64, du: f64, ddu: f64, q: [f64; 4]) {
        self.r.push(r);
        self.u.push(u);
        self.du.push(du);
        self.ddu.push(ddu);
        self.quad.push(q);
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Hermite interpolation of `u`; `None` outside the stored range.
    pub fn eval(&self, r: f64) -> Option<f64> {
        let n = self.r.len();
        if n == 0 || r < self.r[0] || r > self.r[n - 1] {
            return None;
        }
        let i = (self.r.partition_point(|&g| g <= r)).clamp(1, n - 1) - 1;
        Some(hermite(self.r[i], self.r[i + 1], self.u[i], self.u[i + 1], self.du[i], self.du[i + 1], r))
    }

    /// Profile made of the first `len` points, without a tail.
    pub fn to_profile(&self, params: &ProblemParams, len: usize) -> RadialProfile {
        let area = math::sphere_area(params.dim);
        let q = self.quad[len - 1];
        RadialProfile {
            dim: params.dim,
            q: params.q,
            crit_exp: params.critical_exponent(),
            lambda: params.lambda,
            grid: self.r[..len].to_vec(),
            values: self.u[..len].to_vec(),
            slopes: self.du[..len].to_vec(),
            curvatures: self.ddu[..len].to_vec(),
            tail: None,
            norms: Norms { mass: area * q[0], grad: area * q[1], lq: area * q[2], crit: area * q[3] },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Shot {
    pub height: f64,
    pub class: ShotClass,
    pub r_event: f64,
    pub trajectory: Trajectory,
}

/// Right-hand side in either frame. State: `[y, y', Q_mass, Q_grad, Q_q, Q_crit]`
/// with `y = φ` in the bubble frame and `y = u` otherwise.
struct Radial {
    dim: u32,
    nm1: f64,
    lambda: f64,
    t: f64,
    q: f64,
    c: f64,
    critical: bool,
    bubble_eps: Option<f64>,
}

impl Radial {
    fn bubble(&self, r: f64) -> (f64, f64) {
        match self.bubble_eps {
            Some(eps) => (aubin_talenti(self.dim, eps, r), aubin_talenti_slope(self.dim, eps, r)),
            None => (0.0, 0.0),
        }
    }

    fn u_du(&self, r: f64, y: &[f64; 6]) -> (f64, f64) {
        let (ub, dub) = self.bubble(r);
        (ub + y[0], dub + y[1])
    }

    /// `u''` from the full equation, given `u` and `u'`.
    fn curvature(&self, r: f64, u: f64, du: f64) -> f64 {
        let up = u.max(0.0);
        let crit = if self.critical { pos_pow(up, self.c - 1.0) } else { 0.0 };
        -self.nm1 / r * du + self.lambda * u - self.t * pos_pow(up, self.q - 1.0) - crit
    }
}

impl OdeSystem<6> for Radial {
    fn rhs(&self, r: f64, y: &[f64; 6], dy: &mut [f64; 6]) {
        let (ub, dub) = self.bubble(r);
        let u = ub + y[0];
        let du = dub + y[1];
        let up = u.max(0.0);
        let sub = self.lambda * u - self.t * pos_pow(up, self.q - 1.0);
        let crit = if self.bubble_eps.is_some() {
            // u^{2*-1} - U^{2*-1}, accurate when φ/U is tiny.
            let x = y[0] / ub;
            let ubc = pos_pow(ub, self.c - 1.0);
            if x > -1.0 {
                ubc * math::expm1((self.c - 1.0) * math::ln1p(x))
            } else {
                -ubc
            }
        } else if self.critical {
            pos_pow(up, self.c - 1.0)
        } else {
            0.0
        };
        dy[0] = y[1];
        dy[1] = -self.nm1 / r * y[1] + sub - crit;
        let w = math::pow(r, self.nm1);
        dy[2] = w * u * u;
        dy[3] = w * du * du;
        dy[4] = w * pos_pow(up, self.q);
        dy[5] = w * pos_pow(up, self.c);
    }

    fn magnitude(&self, r: f64, y: &[f64; 6], out: &mut [f64; 6]) {
        out[0] = y[0].abs();
        out[1] = y[1].abs().max(y[0].abs() / r);
        for i in 2..6 {
            out[i] = y[i].abs();
        }
    }
}

/// Smallest height from which a zero crossing is possible: the positive zero
/// of `G(u) = t u^q/q + u^{2*}/2* - λu²/2`.
pub fn crossing_threshold(params: &ProblemParams) -> f64 {
    let (t, q, lam) = (params.t, params.q, params.lambda);
    let c = params.critical_exponent();
    if lam <= 0.0 {
        return 0.0;
    }
    let crit = if params.critical { 1.0 } else { 0.0 };
    // λ/2 = t z^{q-2}/q + z^{2*-2}/2*, increasing in z.
    let f = |lz: f64| {
        let z = math::exp(lz);
        t * math::pow(z, q - 2.0) / q + crit * math::pow(z, c - 2.0) / c - lam / 2.0
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(lo) > 0.0 && lo > -700.0 {
        lo *= 2.0;
    }
    while f(hi) < 0.0 && hi < 700.0 {
        hi *= 2.0;
    }
    math::exp(math::bisect(f, lo, hi, 1e-15).unwrap_or(lo))
}

/// Integrates from the origin with `u(0) = d`, `u'(0) = 0` and classifies the
/// outcome.
pub fn integrate_radial(params: &ProblemParams, d: f64, opts: &ShootingOptions) -> Result<Shot> {
    params.validate()?;
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(alloc::format!("height d = {d} must be positive")));
    }
    let dim = params.dim;
    let n = dim as f64;
    let (t, q, lam) = (params.t, params.q, params.lambda);
    let c = params.critical_exponent();
    let crit = if params.critical { 1.0 } else { 0.0 };
    let r_max = opts.r_max_for(params);

    let g = lam * d - t * math::pow(d, q - 1.0) - crit * math::pow(d, c - 1.0);
    let scale = if g != 0.0 { sqrt(2.0 * n * d / g.abs()) } else { 1.0 };
    let r0 = opts.start_factor * scale.min(1.0);
    let sub = lam * d - t * math::pow(d, q - 1.0);
    let q0 = [
        d * d * math::pow(r0, n) / n,
        (g / n) * (g / n) * math::pow(r0, n + 2.0) / (n + 2.0),
        math::pow(d, q) * math::pow(r0, n) / n,
        math::pow(d, c) * math::pow(r0, n) / n,
    ];

    let mut sys = Radial {
        dim,
        nm1: n - 1.0,
        lambda: lam,
        t,
        q,
        c,
        critical: params.critical,
        bubble_eps: if params.critical { Some(bubble_eps(dim, d)) } else { None },
    };
    let mut y0 = if sys.bubble_eps.is_some() {
        [sub * r0 * r0 / (2.0 * n), sub * r0 / n, q0[0], q0[1], q0[2], q0[3]]
    } else {
        [d + g * r0 * r0 / (2.0 * n), g * r0 / n, q0[0], q0[1], q0[2], q0[3]]
    };

    let mut traj = Trajectory::default();
    {
        let (u, du) = sys.u_du(r0, &y0);
        traj.push(r0, u, du, sys.curvature(r0, u, du), q0);
    }
    let mut solver = Dopri5::new(opts.tol);
    solver.max_steps = opts.max_steps;
    solver.h_max = if lam > 0.0 { 0.5 / sqrt(lam) } else { f64::INFINITY };

    let mut r_start = r0;
    let mut h0 = 0.5 * r0;
    let mut descended = false;
    let mut outcome: Option<(ShotClass, f64)> = None;

    loop {
        let mut switch_at: Option<(f64, [f64; 6])> = None;
        let stats = solver.integrate(&sys, r_start, y0, r_max, h0, |step: &Step<6>| {
            let r1 = step.r1();
            let (u, du) = sys.u_du(r1, &step.y1);
            if u <= 0.0 {
                let re = step.locate(|r, y| sys.u_du(r, y).0);
                let ye = step.dense_at(re);
                let (_, due) = sys.u_du(re, &ye);
                traj.push(re, 0.0, due, sys.curvature(re, 0.0, due), quad_of(&ye));
                outcome = Some((ShotClass::CrossesZero, re));
                return Control::Stop;
            }
            if du > 0.0 && (descended || u > opts.growth_guard * d) {
                let re = if descended { step.locate(|r, y| sys.u_du(r, y).1) } else { r1 };
                let ye = step.dense_at(re);
                let (ue, due) = sys.u_du(re, &ye);
                traj.push(re, ue, due, sys.curvature(re, ue, due), quad_of(&ye));
                outcome = Some((ShotClass::BlowsUp, re));
                return Control::Stop;
            }
            if du < 0.0 {
                descended = true;
            }
            traj.push(r1, u, du, sys.curvature(r1, u, du), quad_of(&step.y1));
            if r1 >= r_max {
                outcome = Some((classify_at_end(params, opts, r1, u, du), r1));
                return Control::Stop;
            }
            if sys.bubble_eps.is_some() {
                let (ub, _) = sys.bubble(r1);
                if step.y1[0].abs() > opts.switch_ratio * ub {
                    switch_at = Some((r1, step.y1));
                    return Control::Stop;
                }
            }
            Control::Continue
        })?;
        if outcome.is_some() {
            break;
        }
        match switch_at {
            Some((r, y)) => {
                let (u, du) = sys.u_du(r, &y);
                y0 = [u, du, y[2], y[3], y[4], y[5]];
                sys.bubble_eps = None;
                r_start = r;
                h0 = stats.last_h;
                traj.r_switch = Some(r);
            }
            None => {
                // The integrator reached r_max without the callback seeing it.
                let i = traj.len() - 1;
                let class = classify_at_end(params, opts, traj.r[i], traj.u[i], traj.du[i]);
                outcome = Some((class, traj.r[i]));
                break;
            }
        }
    }
    let (class, r_event) = outcome.expect("loop exits with an outcome");
    Ok(Shot { height: d, class, r_event, trajectory: traj })
}

fn quad_of(y: &[f64; 6]) -> [f64; 4] {
    [y[2], y[3], y[4], y[5]]
}

fn classify_at_end(params: &ProblemParams, opts: &ShootingOptions, r: f64, u: f64, du: f64) -> ShotClass {
    let n = params.dim as f64;
    if u <= 0.0 || du >= 0.0 {
        return ShotClass::BlowsUp;
    }
    let ok = if params.lambda > 0.0 {
        let k = sqrt(params.lambda);
        let expect = -k - (n - 1.0) / (2.0 * r);
        (du / u - expect).abs() < opts.decay_slope_tol * k
    } else {
        (r * du / u + (n - 2.0)).abs() < opts.decay_slope_tol * (n - 2.0)
    };
    if ok {
        ShotClass::Decays
    } else {
        ShotClass::BlowsUp
    }
}

/// Result of fitting the exponential far field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub amplitude_fit: f64,
    pub kappa_fit: f64,
    pub rms_log_residual: f64,
    /// Amplitude matched at the last grid point with `κ = sqrt(λ)`.
    pub amplitude: f64,
}

/// Fits `A r^{-(N-1)/2} e^{-κr}` on the last decade of the profile, checks it,
/// and attaches the tail with `κ = sqrt(λ)` and the norms of `[R, ∞)`.
pub fn extend_tail(profile: &RadialProfile, params: &ProblemParams) -> Result<(RadialProfile, TailFit)> {
    if !(params.lambda > 0.0) {
        return Err(Error::TailFit("zero frequency has no exponential decay".into()));
    }
    let n = params.dim as f64;
    let k = sqrt(params.lambda);
    let len = profile.grid.len();
    let (r_end, u_end) = (profile.r_last(), profile.values[len - 1]);
    if !(u_end > 0.0) {
        return Err(Error::TailFit("profile is not positive at its end".into()));
    }
    let nonlinear = params.t * pos_pow(u_end, params.q - 2.0)
        + if params.critical { pos_pow(u_end, params.critical_exponent() - 2.0) } else { 0.0 };
    if nonlinear > 0.01 * params.lambda {
        return Err(Error::TailFit(alloc::format!(
            "end point r = {r_end:.3} is not in the linear regime"
        )));
    }
    let m = (n - 1.0) / 2.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in (0..len).rev() {
        let u = profile.values[i];
        if u > 10.0 * u_end && xs.len() >= 4 {
            break;
        }
        let r = profile.grid[i];
        xs.push(r);
        ys.push(math::ln(u) + m * math::ln(r));
    }
    let (a, b, _, rms) = math::linear_fit(&xs, &ys)
        .ok_or_else(|| Error::TailFit("not enough points in the last decade".into()))?;
    let kappa_fit = -b;
    if (kappa_fit - k).abs() > 0.05 * k {
        return Err(Error::TailFit(alloc::format!(
            "fitted decay rate {kappa_fit:.4} differs from sqrt(lambda) = {k:.4}"
        )));
    }
    if rms > 1e-2 {
        return Err(Error::TailFit(alloc::format!("log residual {rms:.3e} too large")));
    }
    let amplitude = u_end * math::pow(r_end, m) * math::exp(k * r_end);
    let tail = Tail::Exponential { amplitude, kappa: k };
    let extra = tail_norms(tail, params.dim, profile.q, profile.crit_exp, r_end);
    let mut out = profile.clone();
    out.tail = Some(tail);
    out.norms = Norms {
        mass: profile.norms.mass + extra.mass,
        grad: profile.norms.grad + extra.grad,
        lq: profile.norms.lq + extra.lq,
        crit: profile.norms.crit + extra.crit,
    };
    Ok((out, TailFit { amplitude_fit: math::exp(a), kappa_fit, rms_log_residual: rms, amplitude }))
}

/// Attaches `A r^{-(N-2)}` for zero-frequency profiles such as the bubble.
pub fn attach_algebraic_tail(profile: &RadialProfile) -> RadialProfile {
    let n = profile.dim as f64;
    let r_end = profile.r_last();
    let u_end = *profile.values.last().unwrap();
    let tail = Tail::Algebraic { amplitude: u_end * math::pow(r_end, n - 2.0) };
    let extra = tail_norms(tail, profile.dim, profile.q, profile.crit_exp, r_end);
    let mut out = profile.clone();
    out.tail = Some(tail);
    out.norms = Norms {
        mass: profile.norms.mass + extra.mass,
        grad: profile.norms.grad + extra.grad,
        lq: profile.norms.lq + extra.lq,
        crit: profile.norms.crit + extra.crit,
    };
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SolutionKind {
    GroundState,
    Excited,
    BlowUpBranch,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolutionRecord {
    pub params: ProblemParams,
    pub profile: RadialProfile,
    pub certificate: Certificate,
    pub height: f64,
    pub height_error: f64,
    pub kind: SolutionKind,
}

impl SolutionRecord {
    pub fn energy(&self) -> f64 {
        self.certificate.energy
    }

    pub fn lq(&self) -> f64 {
        self.certificate.norms.lq
    }
}

/// Bisects on the height inside a bracket whose ends classify differently,
/// then assembles the decaying profile with tail and certificate.
pub fn shoot_ground_state(
    params: &ProblemParams,
    lo: f64,
    hi: f64,
    opts: &ShootingOptions,
) -> Result<SolutionRecord> {
    let (lo_shot, hi_shot, width) = bisect_height(params, lo, hi, opts)?;
    let mut record = assemble(params, &lo_shot, &hi_shot, opts)?;
    record.height_error = width;
    if opts.estimate_height_error {
        let fine = ShootingOptions { tol: opts.tol.scaled(0.1), ..*opts };
        let d = record.height;
        let mut f = 1e-6;
        let refined = loop {
            match bisect_height(params, d * (1.0 - f), d * (1.0 + f), &fine) {
                Ok((a, b, _)) => break Some(0.5 * (a.height + b.height)),
                Err(Error::BracketNotStraddling { .. }) if f < 0.1 => f *= 10.0,
                Err(e) => return Err(e),
            }
        };
        if let Some(dfine) = refined {
            record.height_error = width + (dfine - d).abs();
        }
    }
    Ok(record)
}

/// Returns the two final shots and the bracket width.
fn bisect_height(params: &ProblemParams, lo: f64, hi: f64, opts: &ShootingOptions) -> Result<(Shot, Shot, f64)> {
    let (mut lo, mut hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
    let mut a = integrate_radial(params, lo, opts)?;
    let mut b = integrate_radial(params, hi, opts)?;
    if a.class == ShotClass::Decays {
        return Ok((a.clone(), a, 0.0));
    }
    if b.class == ShotClass::Decays {
        return Ok((b.clone(), b, 0.0));
    }
    if a.class == b.class {
        return Err(Error::BracketNotStraddling { lo, hi });
    }
    loop {
        let mid = if hi > 1.5 * lo { sqrt(lo * hi) } else { 0.5 * (lo + hi) };
        if !(mid > lo && mid < hi) {
            break;
        }
        let m = integrate_radial(params, mid, opts)?;
        if m.class == ShotClass::Decays {
            return Ok((m.clone(), m, hi - lo));
        }
        if m.class == a.class {
            lo = mid;
            a = m;
        } else {
            hi = mid;
            b = m;
        }
    }
    Ok((a, b, hi - lo))
}

/// Builds the decaying profile from the two bracketing shots. The truth lies
/// between them, so the profile is cut where their relative gap reaches
/// `cut_gap`, and the exponential tail takes over from there.
fn assemble(params: &ProblemParams, a: &Shot, b: &Shot, opts: &ShootingOptions) -> Result<SolutionRecord> {
    let (under, over) = if a.class == ShotClass::CrossesZero { (b, a) } else { (a, b) };
    let tu = &under.trajectory;
    let mut cut = tu.len();
    if !core::ptr::eq(under, over) {
        let to = &over.trajectory;
        for i in 0..tu.len() {
            // Start radii differ slightly between heights.
            if tu.r[i] < to.r[0] {
                continue;
            }
            let gap = match to.eval(tu.r[i]) {
                Some(v) => (tu.u[i] - v).abs() / tu.u[i].abs(),
                None => f64::INFINITY,
            };
            if !(gap <= opts.cut_gap) || (i > 0 && tu.du[i] >= 0.0) {
                cut = i;
                break;
            }
        }
    }
    if cut < 8 {
        return Err(Error::TailFit("bracketing shots separate immediately".into()));
    }
    let raw = tu.to_profile(params, cut);
    let profile = if params.lambda > 0.0 {
        extend_tail(&raw, params)?.0
    } else {
        attach_algebraic_tail(&raw)
    };
    let certificate = functionals::energy(&profile, params)?;
    let height = profile.height();
    Ok(SolutionRecord {
        params: *params,
        profile,
        certificate,
        height,
        height_error: 0.0,
        kind: if certificate.level_gap < 0.0 || !params.critical {
            SolutionKind::GroundState
        } else {
            SolutionKind::Excited
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanOptions {
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub n_scan: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { d_min: None, d_max: None, n_scan: 160 }
    }
}

/// Expected growth of the tallest solution in `t` for three dimensions with
/// `2 < q < 4`; otherwise one.
pub fn blowup_scale(params: &ProblemParams) -> f64 {
    let (t, q) = (params.t, params.q);
    if !params.critical || params.dim != 3 || q >= 4.0 || t <= 1.0 {
        return 1.0;
    }
    if (q - 3.0).abs() < 1e-12 {
        t * math::ln(t).max(1.0)
    } else if q > 3.0 {
        math::pow(t, 1.0 / (4.0 - q))
    } else {
        math::pow(t, 1.0 / (q - 2.0))
    }
}

pub fn default_d_max(params: &ProblemParams) -> f64 {
    let sub = if params.t > 0.0 { math::pow(params.t, -1.0 / (params.q - 2.0)) } else { 1.0 };
    1e3 * blowup_scale(params).max(sub).max(1.0)
}

/// Outcome of a height scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub heights: Vec<f64>,
    pub classes: Vec<ShotClass>,
    pub solutions: Vec<SolutionRecord>,
}

/// Scans heights on a log grid, bisects every classification change and
/// returns all distinct solutions sorted by height.
pub fn find_positive_solutions(
    params: &ProblemParams,
    scan: &ScanOptions,
    opts: &ShootingOptions,
) -> Result<ScanReport> {
    params.validate()?;
    let d_min = scan.d_min.unwrap_or_else(|| {
        let z = crossing_threshold(params);
        if z > 0.0 { z * (1.0 + 1e-9) } else { 1e-6 }
    });
    let d_max = scan.d_max.unwrap_or_else(|| default_d_max(params));
    if !(d_max > d_min) || scan.n_scan < 2 {
        return Err(Error::Domain(alloc::format!("empty scan range [{d_min:e}, {d_max:e}]")));
    }
    let n = scan.n_scan;
    let ratio = math::ln(d_max / d_min);
    let heights: Vec<f64> =
        (0..n).map(|i| d_min * math::exp(ratio * i as f64 / (n - 1) as f64)).collect();
    let mut classes = Vec::with_capacity(n);
    for &d in &heights {
        classes.push(integrate_radial(params, d, opts)?.class);
    }
    let mut solutions: Vec<SolutionRecord> = Vec::new();
    for i in 0..n - 1 {
        let (ca, cb) = (classes[i], classes[i + 1]);
        let bracket = if ca == ShotClass::Decays {
            Some((heights[i], heights[i]))
        } else if ca != cb && cb != ShotClass::Decays {
            Some((heights[i], heights[i + 1]))
        } else {
            None
        };
        if let Some((lo, hi)) = bracket {
            let rec = shoot_ground_state(params, lo, hi, opts)?;
            let dup = solutions.iter().any(|s| (s.height - rec.height).abs() <= 1e-8 * rec.height);
            if !dup {
                solutions.push(rec);
            }
        }
    }
    if classes[n - 1] == ShotClass::Decays {
        let rec = shoot_ground_state(params, heights[n - 1], heights[n - 1], opts)?;
        if !solutions.iter().any(|s| (s.height - rec.height).abs() <= 1e-8 * rec.height) {
            solutions.push(rec);
        }
    }
    solutions.sort_by(|a, b| a.height.total_cmp(&b.height));
    classify(params, &mut solutions);
    Ok(ScanReport { heights, classes, solutions })
}

/// Marks the least-energy solution below the bubble level as the ground state
/// and the tallest of the others as the blow-up branch.
pub fn classify(params: &ProblemParams, solutions: &mut [SolutionRecord]) {
    let level = functionals::bubble_level(params.dim);
    let gs = solutions
        .iter()
        .enumerate()
        .filter(|(_, s)| !params.critical || s.energy() < level)
        .min_by(|a, b| a.1.energy().total_cmp(&b.1.energy()))
        .map(|(i, _)| i);
    let tallest_other = solutions
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != gs)
        .max_by(|a, b| a.1.height.total_cmp(&b.1.height))
        .map(|(i, _)| i);
    let taller_than_gs = match (gs, tallest_other) {
        (Some(g), Some(o)) => solutions[o].height > solutions[g].height,
        _ => false,
    };
    for (i, s) in solutions.iter_mut().enumerate() {
        s.kind = if Some(i) == gs {
            SolutionKind::GroundState
        } else if params.critical && Some(i) == tallest_other && taller_than_gs {
            SolutionKind::BlowUpBranch
        } else {
            SolutionKind::Excited
        };
    }
}

/// The critical bubble of height `d` integrated to `r_max` with its
/// algebraic tail attached.
pub fn bubble_profile(dim: u32, d: f64, r_max: f64, tol: Tolerances) -> Result<SolutionRecord> {
    let q = 0.5 * (2.0 + crate::params::critical_exponent(dim));
    let params = ProblemParams { dim, q, t: 0.0, lambda: 0.0, critical: true };
    let opts = ShootingOptions { tol, r_max: Some(r_max), ..Default::default() };
    let shot = integrate_radial(&params, d, &opts)?;
    if shot.class != ShotClass::Decays {
        return Err(Error::TailFit("bubble shot did not decay".into()));
    }
    let raw = shot.trajectory.to_profile(&params, shot.trajectory.len());
    let profile = attach_algebraic_tail(&raw);
    let certificate = functionals::energy(&profile, &params)?;
    Ok(SolutionRecord {
        params,
        height: d,
        height_error: 0.0,
        kind: SolutionKind::GroundState,
        certificate,
        profile,
    })
}
