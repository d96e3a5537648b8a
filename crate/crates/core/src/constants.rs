//! Expansion constants: interaction coefficients `B`, self-energy and
//! curvature moments `A`, and the derived `Lambda0`, `B'`, `B6`, `B7`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numeric::{integrate_to_infinity, sphere_area, zeta_to_tol, Estimate, Tolerance};
use crate::params::{c_n, two_star, ModelParams};

/// Whether bubble-integral constants carry the `c_N^{2*}` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Normalization {
    /// Integrals of the unnormalised profile `(1+|y|^2)^{-(N-2)/2}`.
    Paper,
    /// Integrals of the true bubble `U_{0,1}`.
    #[default]
    Bubble,
}

impl Normalization {
    /// Factor applied to bubble-integral constants, `c_N^{2*}` or 1.
    pub fn factor(self, n: usize) -> f64 {
        match self {
            Normalization::Paper => 1.0,
            Normalization::Bubble => bubble_factor(n),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Paper => "paper",
            Normalization::Bubble => "bubble",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Normalization::Paper),
            "bubble" => Ok(Normalization::Bubble),
            _ => Err(Error::InvalidParams(format!(
                "normalization '{s}' is neither 'paper' nor 'bubble'"
            ))),
        }
    }
}

/// `c_N^{2*} = [N(N-2)]^{N/2}`.
pub fn bubble_factor(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf - 2.0)).powf(nf / 2.0)
}

fn quad_tol(tol: f64) -> Tolerance {
    Tolerance {
        abs: tol * 1e-3,
        rel: tol,
        max_intervals: 4000,
    }
}

/// `int_{R^N} (1+|z|^2)^{-(N+2)/2}` by radial quadrature, optionally times `c_N^{2*}`.
pub fn compute_b0(n: usize, normalization: Normalization, tol: f64) -> Result<Estimate> {
    check_dim(n)?;
    let nf = n as f64;
    let radial = integrate_to_infinity(
        |r: f64| r.powf(nf - 1.0) * (1.0 + r * r).powf(-(nf + 2.0) / 2.0),
        0.0,
        1.0,
        &[],
        &quad_tol(tol),
    )?;
    let s = sphere_area(n - 1) * normalization.factor(n);
    Ok(Estimate {
        value: s * radial.value,
        err: s * radial.err,
    })
}

/// `2 zeta(N-2) / (2 pi)^{N-2}`, with the series tail bounded by `tol`.
pub fn compute_b1(n: usize, tol: f64) -> Result<Estimate> {
    check_dim(n)?;
    let p = n as f64 - 2.0;
    let pre = 2.0 / (2.0 * PI).powf(p);
    let (z, tail, _) = zeta_to_tol(p, tol, 200_000_000)?;
    Ok(Estimate {
        value: pre * z,
        err: pre * tail + 4.0 * f64::EPSILON * pre * z,
    })
}

/// `(1 / (2^{N-3} pi)) int_0^inf (1+s^2)^{-(N-2)/2} ds`.
pub fn compute_b2(n: usize, tol: f64) -> Result<Estimate> {
    check_dim(n)?;
    let nf = n as f64;
    let integral = integrate_to_infinity(
        |s: f64| (1.0 + s * s).powf(-(nf - 2.0) / 2.0),
        0.0,
        1.0,
        &[],
        &quad_tol(tol),
    )?;
    let pre = 1.0 / (2f64.powf(nf - 3.0) * PI);
    Ok(Estimate {
        value: pre * integral.value,
        err: pre * integral.err,
    })
}

/// `int_{S^{N-1}} |w_1|^p dw = 2 pi^{(N-1)/2} Gamma((p+1)/2) / Gamma((N+p)/2)`.
pub fn angular_moment(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    2.0 * PI.powf((nf - 1.0) / 2.0) * gamma((p + 1.0) / 2.0) / gamma((nf + p) / 2.0)
}

/// `int_{R^N} |y_1|^p U_{0,1}^{2*}` via the angular moment and a radial quadrature.
pub fn bubble_moment(n: usize, p: f64, normalization: Normalization, tol: f64) -> Result<Estimate> {
    check_dim(n)?;
    let nf = n as f64;
    let radial = integrate_to_infinity(
        |r: f64| r.powf(nf - 1.0 + p) * (1.0 + r * r).powf(-nf),
        0.0,
        1.0,
        &[],
        &quad_tol(tol),
    )?;
    let s = angular_moment(n, p) * normalization.factor(n);
    Ok(Estimate {
        value: s * radial.value,
        err: s * radial.err,
    })
}

/// The three curvature-expansion constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AConstants {
    pub a1: Estimate,
    pub a2: Estimate,
    pub a3: Estimate,
}

pub fn compute_a_constants(
    params: &ModelParams,
    normalization: Normalization,
    tol: f64,
) -> Result<AConstants> {
    params.validate()?;
    let n = params.n;
    let ts = two_star(n);
    let m0 = bubble_moment(n, 0.0, normalization, tol)?;
    let mm = bubble_moment(n, params.m, normalization, tol)?;
    let mm2 = bubble_moment(n, params.m - 2.0, normalization, tol)?;
    let scale = |e: Estimate, c: f64| Estimate {
        value: c * e.value,
        err: c * e.err,
    };
    Ok(AConstants {
        a1: scale(m0, 1.0 - 2.0 / ts),
        a2: scale(mm, 2.0 * params.c0 / ts),
        a3: scale(mm2, params.c0 * params.m * (params.m - 1.0) / ts),
    })
}

/// Every expansion constant for one `(N, m, c0)` in one normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsTable {
    pub n: usize,
    pub m: f64,
    pub normalization: Normalization,
    pub cn: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b4: f64,
    pub b5: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub lambda0: f64,
    pub bprime: f64,
    pub b6: f64,
    pub b7: f64,
    /// Absolute error bound per constant name.
    pub err: BTreeMap<&'static str, f64>,
}

/// The base constants from which a table is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseConstants {
    pub b0: Estimate,
    pub b1: Estimate,
    pub b2: Estimate,
    pub a1: Estimate,
    pub a2: Estimate,
    pub a3: Estimate,
}

impl ConstantsTable {
    /// Assembles the derived constants from the base ones.
    pub fn assemble(n: usize, m: f64, normalization: Normalization, base: BaseConstants) -> Self {
        let nf = n as f64;
        let BaseConstants {
            b0,
            b1,
            b2,
            a1,
            a2,
            a3,
        } = base;
        let b4 = b0.value * b1.value;
        let b5 = b0.value * b2.value;
        let lambda0 = ((nf - 2.0) * b4 / (a2.value * m)).powf(1.0 / (nf - 2.0 - m));
        let bprime = ((nf - 3.0) * b5 / ((nf - 2.0) * b4)).powf(1.0 / (nf - 1.0));
        let t6a = (nf - 2.0) * b4 * bprime * bprime / 2.0;
        let t6b = b5 / bprime.powf(nf - 3.0);
        let b6 = t6a + t6b;
        let t7a = (nf - 2.0) / 2.0 * b4 * bprime * bprime;
        let t7b = (nf - 2.0) / 2.0 * (nf - 3.0) * b5 / bprime.powf(nf - 3.0);
        let b7 = t7a + t7b;

        let rel_b4 = b0.rel_err() + b1.rel_err();
        let rel_b5 = b0.rel_err() + b2.rel_err();
        let rel_l0 = (rel_b4 + a2.rel_err()) / (nf - 2.0 - m);
        let rel_bp = (rel_b4 + rel_b5) / (nf - 1.0);
        let err6 = t6a * (rel_b4 + 2.0 * rel_bp) + t6b * (rel_b5 + (nf - 3.0) * rel_bp);
        let err7 = t7a * (rel_b4 + 2.0 * rel_bp) + t7b * (rel_b5 + (nf - 3.0) * rel_bp);
        let mut err = BTreeMap::new();
        err.insert("cN", 0.0);
        err.insert("B0", b0.err);
        err.insert("B1", b1.err);
        err.insert("B2", b2.err);
        err.insert("B4", b4 * rel_b4);
        err.insert("B5", b5 * rel_b5);
        err.insert("A1", a1.err);
        err.insert("A2", a2.err);
        err.insert("A3", a3.err);
        err.insert("Lambda0", lambda0 * rel_l0);
        err.insert("Bprime", bprime * rel_bp);
        err.insert("B6", err6);
        err.insert("B7", err7);
        Self {
            n,
            m,
            normalization,
            cn: c_n(n),
            b0: b0.value,
            b1: b1.value,
            b2: b2.value,
            b4,
            b5,
            a1: a1.value,
            a2: a2.value,
            a3: a3.value,
            lambda0,
            bprime,
            b6,
            b7,
            err,
        }
    }

    /// `(name, value)` in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("cN", self.cn),
            ("B0", self.b0),
            ("B1", self.b1),
            ("B2", self.b2),
            ("B4", self.b4),
            ("B5", self.b5),
            ("A1", self.a1),
            ("A2", self.a2),
            ("A3", self.a3),
            ("Lambda0", self.lambda0),
            ("Bprime", self.bprime),
            ("B6", self.b6),
            ("B7", self.b7),
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries().into_iter().find(|(k, _)| *k == name).map(|(_, v)| v)
    }

    /// `hhat = B' / k^{(N-3)/(N-1)}`.
    pub fn hhat(&self, k: usize) -> f64 {
        crate::geometry::hhat(self.n, k, self.bprime)
    }
}

/// Computes the base constants and assembles the full table.
pub fn derive_table(
    params: &ModelParams,
    normalization: Normalization,
    tol: f64,
) -> Result<ConstantsTable> {
    Ok(ConstantsTable::assemble(
        params.n,
        params.m,
        normalization,
        base_constants(params, normalization, tol)?,
    ))
}

pub fn base_constants(
    params: &ModelParams,
    normalization: Normalization,
    tol: f64,
) -> Result<BaseConstants> {
    params.validate()?;
    let a = compute_a_constants(params, normalization, tol)?;
    Ok(BaseConstants {
        b0: compute_b0(params.n, normalization, tol)?,
        b1: compute_b1(params.n, tol)?,
        b2: compute_b2(params.n, tol)?,
        a1: a.a1,
        a2: a.a2,
        a3: a.a3,
    })
}

fn check_dim(n: usize) -> Result<()> {
    if n < 5 {
        Err(Error::InvalidParams(format!("N = {n} must be at least 5")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a / b - 1.0).abs() <= rel
    }

    #[test]
    fn b0_closed_forms() {
        let b5 = compute_b0(5, Normalization::Paper, 1e-12).unwrap();
        assert!(close(b5.value, 8.0 * PI * PI / 15.0, 1e-10));
        let b6 = compute_b0(6, Normalization::Paper, 1e-12).unwrap();
        assert!(close(b6.value, PI.powi(3) / 6.0, 1e-10));
        for n in 5..=10 {
            let q = compute_b0(n, Normalization::Paper, 1e-12).unwrap();
            let nf = n as f64;
            let closed = PI.powf(nf / 2.0) / gamma(nf / 2.0 + 1.0);
            assert!((q.value - closed).abs() <= q.err.max(1e-10 * closed), "N={n}");
            let bub = compute_b0(n, Normalization::Bubble, 1e-12).unwrap();
            assert!(close(bub.value, q.value * bubble_factor(n), 1e-14));
        }
    }

    #[test]
    fn b1_closed_forms() {
        let b = compute_b1(6, 1e-13).unwrap();
        assert!((b.value - 1.0 / 720.0).abs() <= b.err);
        assert!(close(b.value, 1.0 / 720.0, 1e-10));
        let b = compute_b1(5, 1e-12).unwrap();
        let apery = 1.202_056_903_159_594_2;
        let want = 2.0 * apery / (2.0 * PI).powi(3);
        assert!((b.value - want).abs() <= b.err);
        assert!((b.value - 0.0096920449).abs() < 1e-10);
    }

    #[test]
    fn b2_closed_forms() {
        let b = compute_b2(5, 1e-12).unwrap();
        assert!(close(b.value, 1.0 / (4.0 * PI), 1e-10));
        for n in 5..=10 {
            let nf = n as f64;
            let q = compute_b2(n, 1e-12).unwrap();
            let integral = PI.sqrt() * gamma((nf - 3.0) / 2.0) / (2.0 * gamma((nf - 2.0) / 2.0));
            let closed = integral / (2f64.powf(nf - 3.0) * PI);
            assert!(close(q.value, closed, 1e-10), "N={n}");
        }
    }

    #[test]
    fn b1_b2_decrease_in_n() {
        let b1: Vec<f64> = (5..=9).map(|n| compute_b1(n, 1e-12).unwrap().value).collect();
        let b2: Vec<f64> = (5..=9).map(|n| compute_b2(n, 1e-12).unwrap().value).collect();
        assert!(b1.windows(2).all(|w| w[1] < w[0]));
        assert!(b2.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn moments_match_beta_identity() {
        for (n, p) in [(5, 0.0), (5, 2.0), (6, 2.5), (7, 3.0), (9, 4.5)] {
            let q = bubble_moment(n, p, Normalization::Paper, 1e-12).unwrap();
            let nf = n as f64;
            let radial = 0.5 * beta((nf + p) / 2.0, (nf - p) / 2.0);
            assert!(close(q.value, angular_moment(n, p) * radial, 1e-10), "N={n} p={p}");
        }
        let q = bubble_moment(5, 2.0, Normalization::Paper, 1e-12).unwrap();
        assert!(close(q.value, PI.powi(3) / 96.0, 1e-10));
    }

    #[test]
    fn a_constants_m2() {
        let p = ModelParams::with_k(5, 2.0, 1.0, 0.25, 12, 0.01);
        let a = compute_a_constants(&p, Normalization::Paper, 1e-12).unwrap();
        let ts = two_star(5);
        assert!(close(a.a3.value, (2.0 / ts) * a.a1.value / (1.0 - 2.0 / ts), 1e-12));
        assert!(close(a.a2.value, 0.6 * PI.powi(3) / 96.0, 1e-10));
    }

    #[test]
    fn synthetic_assembly() {
        let e = Estimate::exact;
        let t = ConstantsTable::assemble(
            5,
            2.0,
            Normalization::Paper,
            BaseConstants {
                b0: e(2.0),
                b1: e(1.0),
                b2: e(1.0),
                a1: e(1.0),
                a2: e(3.0),
                a3: e(1.0),
            },
        );
        assert!((t.lambda0 - 1.0).abs() < 1e-15);
        assert!((t.bprime - (2.0f64 / 3.0).powf(0.25)).abs() < 1e-15);
        assert!((t.bprime - 0.90360).abs() < 1e-5);
    }

    #[test]
    fn table_invariants() {
        for norm in [Normalization::Paper, Normalization::Bubble] {
            let t = derive_table(&ModelParams::default(), norm, 1e-12).unwrap();
            assert!(t.entries().iter().all(|(_, v)| *v > 0.0));
            assert_eq!(t.b4, t.b0 * t.b1);
            assert_eq!(t.b5, t.b0 * t.b2);
            let b6 = 1.5 * t.b4 * t.bprime.powi(2) + t.b5 / t.bprime.powi(2);
            let b7 = 1.5 * (t.b4 * t.bprime.powi(2) + 2.0 * t.b5 / t.bprime.powi(2));
            assert!(close(t.b6, b6, 1e-14) && close(t.b7, b7, 1e-14));
        }
    }

    #[test]
    fn normalization_coherence() {
        let p = ModelParams::default();
        let a = derive_table(&p, Normalization::Paper, 1e-12).unwrap();
        let b = derive_table(&p, Normalization::Bubble, 1e-12).unwrap();
        let f = bubble_factor(5);
        assert!(close(b.b0, a.b0 * f, 1e-13));
        for (x, y) in [(a.a1, b.a1), (a.a2, b.a2), (a.a3, b.a3)] {
            assert!(close(y, x * f, 1e-13));
        }
        assert!(close(a.lambda0, b.lambda0, 1e-10));
        assert!(close(a.bprime, b.bprime, 1e-10));
        assert!((a.bprime - 1.52958).abs() < 1e-4);
        let unit = derive_table(
            &ModelParams::with_k(5, 2.0, 1.0, 0.25, 12, 0.01),
            Normalization::Paper,
            1e-12,
        )
        .unwrap();
        assert!((unit.lambda0 - 0.39489).abs() < 1e-4);
        assert!((unit.b4 - 0.0510169).abs() < 1e-6 && (unit.b5 - 0.418879).abs() < 1e-6);
    }
}
