//! Numerical plumbing: compensated summation, adaptive Gauss-Kronrod
//! quadrature, zeta partial sums and small least-squares fits.

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// A value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, err: 0.0 }
    }

    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            self.err
        } else {
            self.err / self.value.abs()
        }
    }
}

/// Absolute and relative targets plus a subdivision cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

/// 21-point Kronrod rule with the embedded 10-point Gauss estimate.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kron.abs();
    let mut fv = [(0.0, 0.0); 10];
    for (j, item) in fv.iter_mut().enumerate() {
        let x = hl * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        *item = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for (j, (f1, f2)) in fv.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let ahl = hl.abs();
    res_abs *= ahl;
    res_asc *= ahl;
    let mut err = ((kron - gauss) * hl).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment {
        a,
        b,
        value: kron * hl,
        err,
    }
}

/// Adaptive bisection on `[a, b]` split first at the sorted interior `breaks`.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: &Tolerance,
) -> Result<Estimate> {
    let mut knots = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    knots.extend(inner);
    knots.push(b);
    let mut segs: Vec<Segment> = knots.windows(2).map(|w| gk21(&f, w[0], w[1])).collect();
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature {
                achieved: f64::INFINITY,
                requested: tol.target(0.0),
            });
        }
        if err <= tol.target(total) {
            return Ok(Estimate { value: total, err });
        }
        let (idx, worst) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, s)| (i, *s))
            .expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = !(mid > worst.a && mid < worst.b);
        if segs.len() >= tol.max_intervals || too_narrow {
            return Err(Error::Quadrature {
                achieved: err,
                requested: tol.target(total),
            });
        }
        segs[idx] = gk21(&f, worst.a, mid);
        segs.push(gk21(&f, mid, worst.b));
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate> {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// `int_a^inf f` through `x = a + scale t / (1 - t)`; `breaks` are given in `x`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    breaks: &[f64],
    tol: &Tolerance,
) -> Result<Estimate> {
    let g = |t: f64| {
        let u = 1.0 - t;
        let v = f(a + scale * t / u);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (u * u)
        }
    };
    let tb: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > a)
        .map(|&x| {
            let u = (x - a) / scale;
            u / (1.0 + u)
        })
        .collect();
    integrate_with_breaks(g, 0.0, 1.0, &tb, tol)
}

/// Partial sum `sum_{n<=terms} n^-p` (smallest terms first, compensated)
/// and the integral-test bound `terms^{1-p} / (p - 1)` on the tail.
pub fn zeta_partial(p: f64, terms: u64) -> (f64, f64) {
    let s: CompensatedSum = (1..=terms).rev().map(|n| (n as f64).powf(-p)).collect();
    let nf = terms as f64;
    (s.value(), nf.powf(1.0 - p) / (p - 1.0))
}

/// Zeta series truncated once the tail bound drops below `tol`.
pub fn zeta_to_tol(p: f64, tol: f64, max_terms: u64) -> Result<(f64, f64, u64)> {
    if p <= 1.0 {
        return Err(Error::Domain(format!("zeta series diverges for p = {p}")));
    }
    let need = ((tol * (p - 1.0)).powf(-1.0 / (p - 1.0))).ceil();
    if !need.is_finite() || need > max_terms as f64 {
        let bound = (max_terms as f64).powf(1.0 - p) / (p - 1.0);
        return Err(Error::Series {
            achieved: bound,
            requested: tol,
            terms: max_terms,
        });
    }
    let terms = (need as u64).max(1);
    let (s, b) = zeta_partial(p, terms);
    Ok((s, b, terms))
}

/// Surface area of the unit sphere `S^d` in `R^{d+1}`, by the dimension recursion.
pub fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * sphere_area(d - 2),
    }
}

/// Least-squares fit `y ~ X beta` with a leading intercept column added.
/// Returns coefficients and the residual vector.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    use nalgebra::{DMatrix, DVector};
    let n = y.len();
    let p = columns.len() + 1;
    if n < p {
        return Err(Error::Fit { needed: p, got: n });
    }
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&yv, 1e-14)
        .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
    let resid = &yv - &x * &beta;
    Ok((beta.iter().copied().collect(), resid.iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn compensated_beats_naive() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() / 1e-13 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gk_polynomial_and_infinite() {
        let tol = Tolerance::new(1e-14, 1e-13);
        let v = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, &tol).unwrap();
        assert!((v.value - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
        let g = integrate_to_infinity(|x| (-x * x).exp(), 0.0, 1.0, &[], &tol).unwrap();
        assert!((g.value - PI.sqrt() / 2.0).abs() < 1e-13);
        let c = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0, 1.0, &[], &tol).unwrap();
        assert!((c.value - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn gk_kink_with_break() {
        let tol = Tolerance::new(1e-14, 1e-13);
        let v = integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], &tol).unwrap();
        assert!((v.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn gk_reports_failure() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 1e-15,
            max_intervals: 3,
        };
        let r = integrate(|x: f64| x.abs().sqrt().recip(), -1.0, 1.0, &tol);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn zeta_tail_bounds() {
        let (a, ba) = zeta_partial(3.0, 10);
        let (b, _) = zeta_partial(3.0, 1_000_000);
        assert!(b - a > 0.0 && b - a < ba);
        let apery = 1.202_056_903_159_594_2;
        let (z, bound, _) = zeta_to_tol(3.0, 1e-12, 10_000_000).unwrap();
        assert!(bound <= 1e-12);
        assert!(apery - z >= 0.0 && apery - z <= bound);
        assert!(zeta_to_tol(3.0, 1e-12, 100).is_err());
    }

    #[test]
    fn sphere_areas() {
        for d in 0..8usize {
            let nf = d as f64 + 1.0;
            let want = 2.0 * PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0);
            assert!((sphere_area(d) / want - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn line_fit() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (b, r) = least_squares(&[x], &y).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] + 0.5).abs() < 1e-12);
        assert!(r.iter().all(|e| e.abs() < 1e-12));
    }
}
