//! Model parameters and the radial curvature profile `K`.

use crate::error::{Error, Result};

/// Dimension, curvature profile and norm exponents of one model instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub m: f64,
    pub c0: f64,
    pub delta: f64,
    pub k: usize,
    pub tau: f64,
    pub eps1: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::with_k(5, 2.0, 0.4, 0.25, 12, 0.01)
    }
}

impl ModelParams {
    /// Builds a parameter set with `tau` placed at the midpoint of its interval.
    pub fn with_k(n: usize, m: f64, c0: f64, delta: f64, k: usize, eps1: f64) -> Self {
        let tau = default_tau(n, m, eps1);
        Self {
            n,
            m,
            c0,
            delta,
            k,
            tau,
            eps1,
        }
    }

    /// Validated constructor.
    pub fn new(n: usize, m: f64, c0: f64, delta: f64, k: usize, eps1: f64) -> Result<Self> {
        let p = Self::with_k(n, m, c0, delta, k, eps1);
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let nf = self.n as f64;
        if self.n < 5 {
            return bad(format!("N = {} must be at least 5", self.n));
        }
        if !self.m.is_finite() || self.m >= nf - 2.0 {
            return bad(format!("m = {} must lie below N-2 = {}", self.m, nf - 2.0));
        }
        if self.n <= 6 && self.m < 2.0 {
            return bad(format!("m = {} must be at least 2 for N = {}", self.m, self.n));
        }
        if self.n >= 7 && self.m <= (nf - 2.0) / 2.0 {
            return bad(format!(
                "m = {} must exceed (N-2)/2 = {} for N = {}",
                self.m,
                (nf - 2.0) / 2.0,
                self.n
            ));
        }
        if self.k < 2 {
            return bad(format!("k = {} must be at least 2", self.k));
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return bad(format!("c0 = {} must be positive", self.c0));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} must lie in (0, 1)", self.delta));
        }
        if self.c0 * saturation_limit(self.m, self.delta) >= 1.0 {
            return bad(format!(
                "c0 * sup(phi) = {} must stay below 1 so that K > 0",
                self.c0 * saturation_limit(self.m, self.delta)
            ));
        }
        if !(self.eps1 > 0.0) {
            return bad(format!("eps1 = {} must be positive", self.eps1));
        }
        let lo = (nf - 2.0 - self.m) / (nf - 2.0);
        if !(self.tau > lo && self.tau < lo + self.eps1) {
            return bad(format!(
                "tau = {} must lie strictly inside ({}, {})",
                self.tau,
                lo,
                lo + self.eps1
            ));
        }
        Ok(())
    }

    /// Critical Sobolev exponent `2N/(N-2)`.
    pub fn two_star(&self) -> f64 {
        two_star(self.n)
    }

    /// Ring radius scale `k^{(N-2)/(N-2-m)}`.
    pub fn rhat(&self) -> f64 {
        rhat(self.n, self.m, self.k)
    }

    /// Same parameters with a different bubble count.
    pub fn at_k(&self, k: usize) -> Self {
        Self { k, ..*self }
    }

    /// Radial curvature `K(s)`.
    pub fn k_profile(&self, s: f64) -> f64 {
        k_profile(s, self)
    }
}

/// Midpoint of the admissible `tau` interval.
pub fn default_tau(n: usize, m: f64, eps1: f64) -> f64 {
    let nf = n as f64;
    (nf - 2.0 - m) / (nf - 2.0) + eps1 / 2.0
}

pub fn two_star(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf / (nf - 2.0)
}

pub fn rhat(n: usize, m: f64, k: usize) -> f64 {
    let nf = n as f64;
    (k as f64).powf((nf - 2.0) / (nf - 2.0 - m))
}

/// Bubble normalisation `c_N = [N(N-2)]^{(N-2)/4}`.
pub fn c_n(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0)
}

/// Profile dip `phi(t)`: exactly `t^m` up to `delta`, then a C1 tanh cap.
pub fn phi(t: f64, m: f64, delta: f64) -> f64 {
    if t <= delta {
        t.powf(m)
    } else {
        delta.powf(m) + m * delta.powf(m - 1.0) * delta * ((t - delta) / delta).tanh()
    }
}

/// `sup phi = delta^m (1 + m)`.
pub fn saturation_limit(m: f64, delta: f64) -> f64 {
    delta.powf(m) * (1.0 + m)
}

/// `K(s) = 1 - c0 phi(|s - 1|)`.
pub fn k_profile(s: f64, params: &ModelParams) -> f64 {
    1.0 - params.c0 * phi((s - 1.0).abs(), params.m, params.delta)
}

/// Curvature used inside energy and error integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature {
    /// `K = 1` everywhere.
    Flat,
    /// The capped power-law profile evaluated at `|y| / rhat`.
    Profile { params: ModelParams, rhat: f64 },
}

impl Curvature {
    pub fn of(params: &ModelParams) -> Self {
        Curvature::Profile {
            params: *params,
            rhat: params.rhat(),
        }
    }

    /// `K(|y| / rhat)` given `|y|`.
    #[inline]
    pub fn at_radius(&self, radius: f64) -> f64 {
        match self {
            Curvature::Flat => 1.0,
            Curvature::Profile { params, rhat } => k_profile(radius / rhat, params),
        }
    }
}
