//! Parameters of the fixed-frequency problem `-Δu + λu = t u^{q-1} + u^{2*-1}`.

use alloc::format;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemParams {
    /// Space dimension `N >= 3`.
    pub dim: u32,
    /// Subcritical exponent `q`.
    pub q: f64,
    /// Coupling in front of `u^{q-1}`.
    pub t: f64,
    /// Frequency.
    pub lambda: f64,
    /// Whether the Sobolev-critical term `u^{2*-1}` is present.
    pub critical: bool,
}

impl ProblemParams {
    pub fn new(dim: u32, q: f64, t: f64) -> Self {
        ProblemParams { dim, q, t, lambda: 1.0, critical: true }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn subcritical_only(mut self) -> Self {
        self.critical = false;
        self
    }

    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.dim)
    }

    pub fn gamma_q(&self) -> f64 {
        gamma(self.dim, self.q)
    }

    /// Checks the ranges the solvers rely on.
    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(Error::Domain(format!("dimension {} < 3", self.dim)));
        }
        let crit = self.critical_exponent();
        if !(self.q > 2.0 && self.q < crit) {
            return Err(Error::Domain(format!(
                "q = {} outside (2, {crit})",
                self.q
            )));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::Domain(format!("t = {} must be finite and >= 0", self.t)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Domain(format!("lambda = {} must be finite and >= 0", self.lambda)));
        }
        if !self.critical && self.t == 0.0 {
            return Err(Error::Domain("no nonlinearity: t = 0 with the critical term off".into()));
        }
        Ok(())
    }
}

/// `2* = 2N / (N - 2)`.
pub fn critical_exponent(dim: u32) -> f64 {
    2.0 * dim as f64 / (dim as f64 - 2.0)
}

/// `N (q - 2) / (2q)`.
pub fn gamma(dim: u32, q: f64) -> f64 {
    dim as f64 * (q - 2.0) / (2.0 * q)
}
