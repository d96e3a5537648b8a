//! The ansatz residual `l_k`, the weighted sup norms `||.||_*`, `||.||_**`
//! and the decay fit of `||l_k||_**` in `k`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::fit::{fit_power_law, FitReport};
use crate::geometry::{reduce, BubbleSet, Configuration};
use crate::numeric::CompensatedSum;
use crate::params::{phi, Curvature, ModelParams};

/// `K - 1` at `|y|`, without forming `K`.
fn curvature_defect(curv: &Curvature, radius: f64) -> f64 {
    match curv {
        Curvature::Flat => 0.0,
        Curvature::Profile { params, rhat } => {
            -params.c0 * phi((radius / rhat - 1.0).abs(), params.m, params.delta)
        }
    }
}

/// `K(|y|/rhat) W^{2*-1} - sum_j U_j^{2*-1}` for an explicit bubble set.
pub fn lk_of_bubbles(bubbles: &BubbleSet, curv: &Curvature, y: &[f64]) -> f64 {
    let n = bubbles.n;
    let p = (n as f64 + 2.0) / (n as f64 - 2.0);
    let (y3, tail2) = reduce(y);
    let vals: Vec<f64> = bubbles
        .dist2(&y3, tail2)
        .map(|d2| crate::geometry::bubble_profile(d2, bubbles.lambda, n))
        .collect();
    let Some((imax, &umax)) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
    else {
        return 0.0;
    };
    let rest: CompensatedSum = vals.iter().enumerate().filter(|(i, _)| *i != imax).map(|(_, v)| *v).collect();
    let rest_p: CompensatedSum = vals
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != imax)
        .map(|(_, v)| v.powf(p))
        .collect();
    let up = umax.powf(p);
    let ratio = rest.value() / umax;
    // W^p - U_max^p, then minus the other powers.
    let spread = up * (p * ratio.ln_1p()).exp_m1() - rest_p.value();
    let radius = (y3.iter().map(|v| v * v).sum::<f64>() + tail2).sqrt();
    let w_p = up * (p * ratio.ln_1p()).exp();
    curvature_defect(curv, radius) * w_p + spread
}

/// `l_k` at `y` for the doubled-ring configuration.
pub fn lk_eval(cfg: &Configuration, y: &[f64]) -> f64 {
    lk_of_bubbles(&cfg.bubbles(), &Curvature::of(&cfg.params), y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Exponent `(N-2)/2 + tau`.
    Star,
    /// Exponent `(N+2)/2 + tau`.
    StarStar,
}

impl WeightKind {
    pub fn exponent(self, n: usize, tau: f64) -> f64 {
        let nf = n as f64;
        match self {
            WeightKind::Star => (nf - 2.0) / 2.0 + tau,
            WeightKind::StarStar => (nf + 2.0) / 2.0 + tau,
        }
    }
}

/// `sum_j (1 + |y - x_j|)^{-e}` over all `2k` centres.
pub fn weight_eval(kind: WeightKind, cfg: &Configuration, y: &[f64]) -> f64 {
    let e = kind.exponent(cfg.params.n, cfg.params.tau);
    let (y3, tail2) = reduce(y);
    let s: CompensatedSum = cfg
        .bubbles()
        .dist2(&y3, tail2)
        .map(|d2| (1.0 + d2.sqrt()).powf(-e))
        .collect();
    s.value()
}

/// Sample points standing in for the sup in the weighted norms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSampleSet {
    pub points: Vec<Vec<f64>>,
    pub strategy: String,
}

impl WeightedSampleSet {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// Dyadic shells about the first upper and lower centres (radii `2^-6`
    /// up to `r`, plus `r/k`, `r/sqrt(k)`, `r`), a lattice in the first
    /// upper sector and 16 far-field rays.
    pub fn structured(cfg: &Configuration) -> Self {
        let n = cfg.params.n;
        let k = cfg.params.k as f64;
        let r = cfg.r;
        let centres = cfg.centers();
        let lower = centres[cfg.params.k];
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for axis in 0..n.min(4) {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[axis] = sign;
                dirs.push(d);
            }
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(s, s), (s, -s), (-s, s), (-s, -s)] {
            let mut d = vec![0.0; n];
            d[0] = a;
            d[2] = b;
            dirs.push(d);
        }
        let mut radii = vec![0.0];
        let mut rho = 2f64.powi(-6);
        while rho < r {
            radii.push(rho);
            rho *= 2.0;
        }
        radii.extend([r / k, r / k.sqrt(), r]);
        let mut points = Vec::new();
        for c in [centres[0], lower] {
            for &rho in &radii {
                for d in &dirs {
                    let mut y = vec![0.0; n];
                    for i in 0..3 {
                        y[i] = c[i] + rho * d[i];
                    }
                    for i in 3..n {
                        y[i] = rho * d[i];
                    }
                    points.push(y);
                    if rho == 0.0 {
                        break;
                    }
                }
            }
        }
        let z = r * cfg.h;
        for &fr in &[0.5, 0.75, 0.9, 1.0, 1.1, 1.5] {
            for &ft in &[0.0, 0.25, 0.5, 0.75, 0.99] {
                for &fz in &[0.0, 0.5, 1.0, 2.0] {
                    let th = ft * PI / k;
                    let mut y = vec![0.0; n];
                    y[0] = fr * r * th.cos();
                    y[1] = fr * r * th.sin();
                    y[2] = fz * z;
                    points.push(y);
                }
            }
        }
        for i in 0..16 {
            let a = 2.0 * PI * i as f64 / 16.0;
            for &fr in &[2.0, 10.0, 100.0] {
                let mut y = vec![0.0; n];
                y[0] = fr * r * a.cos();
                let other = if n > 3 && i % 2 == 1 { 3 } else { 2 };
                y[other] = fr * r * a.sin();
                points.push(y);
            }
        }
        Self {
            points,
            strategy: "dyadic shells about both reference centres, sector lattice, 16 far rays".into(),
        }
    }
}

/// `max |f(y)| / weight(y)` over the samples.
pub fn norm_estimate<F>(kind: WeightKind, cfg: &Configuration, f: F, samples: &WeightedSampleSet) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    samples
        .points
        .par_iter()
        .map(|y| f(y).abs() / weight_eval(kind, cfg, y))
        .reduce(|| 0.0, f64::max)
}

/// Branches of the decay exponent of `||l_k||_**`:
/// `(m/(N-2-m))((N+2)/2 - (N-2-m)/(N-2) - eps1)` and
/// `((N-2)/(N-2-m)) min{m, (m+3)/2}`; the exponent is minus their minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkExponent {
    pub branch_a: f64,
    pub branch_b: f64,
    pub exponent: f64,
}

pub fn theoretical_lk_exponent(n: usize, m: f64, eps1: f64) -> LkExponent {
    let nf = n as f64;
    let g = nf - 2.0 - m;
    let branch_a = (m / g) * ((nf + 2.0) / 2.0 - g / (nf - 2.0) - eps1);
    let branch_b = ((nf - 2.0) / g) * m.min((m + 3.0) / 2.0);
    LkExponent {
        branch_a,
        branch_b,
        exponent: -branch_a.min(branch_b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkNormRow {
    pub k: usize,
    pub norm: f64,
    pub samples: usize,
}

/// `||l_k||_**` at `(rhat, hhat, Lambda0)` for one `k`.
pub fn lk_norm_at(params: &ModelParams, table: &ConstantsTable, k: usize) -> Result<LkNormRow> {
    let p = params.at_k(k);
    let cfg = Configuration::new(p.rhat(), table.hhat(k), table.lambda0, p)?;
    let samples = WeightedSampleSet::structured(&cfg);
    let bubbles = cfg.bubbles();
    let curv = Curvature::of(&p);
    let norm = norm_estimate(
        WeightKind::StarStar,
        &cfg,
        |y| lk_of_bubbles(&bubbles, &curv, y),
        &samples,
    );
    Ok(LkNormRow {
        k,
        norm,
        samples: samples.count(),
    })
}

/// Log-log fit of norm rows against `k`, with the theoretical exponent attached.
pub fn fit_lk_rows(params: &ModelParams, rows: &[LkNormRow]) -> Result<FitReport> {
    let x: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let th = theoretical_lk_exponent(params.n, params.m, params.eps1);
    Ok(fit_power_law(&x, &y, 0.0)?.with_expected(th.exponent))
}

/// [`lk_norm_at`] for each `k`, fitted against `log k`.
pub fn lk_decay_fit(
    params: &ModelParams,
    table: &ConstantsTable,
    k_list: &[usize],
) -> Result<(FitReport, Vec<LkNormRow>)> {
    if k_list.len() < 5 || k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "k list must be strictly increasing with at least 5 entries".into(),
        ));
    }
    let rows: Vec<LkNormRow> = k_list
        .iter()
        .map(|&k| lk_norm_at(params, table, k))
        .collect::<Result<_>>()?;
    Ok((fit_lk_rows(params, &rows)?, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive_table, Normalization};
    use crate::params::c_n;

    fn cfg(k: usize) -> Configuration {
        let p = ModelParams::default().at_k(k);
        let t = derive_table(&p, Normalization::Bubble, 1e-12).unwrap();
        Configuration::new(p.rhat(), t.hhat(k), t.lambda0, p).unwrap()
    }

    #[test]
    fn exponent_n5_m2() {
        let e = theoretical_lk_exponent(5, 2.0, 0.01);
        assert!((e.branch_a - 2.0 * (3.5 - 1.0 / 3.0 - 0.01)).abs() < 1e-14);
        assert_eq!(e.branch_b, 6.0);
        assert_eq!(e.exponent, -6.0);
    }

    #[test]
    fn single_flat_bubble_is_exact() {
        let b = BubbleSet::new(vec![[0.3, -1.0, 2.0]], 1.7, 5);
        for y in [[0.0; 5], [0.3, -1.0, 2.0, 0.0, 0.0], [5.0, 1.0, -2.0, 0.5, 3.0]] {
            assert_eq!(lk_of_bubbles(&b, &Curvature::Flat, &y), 0.0);
        }
    }

    #[test]
    fn two_bubble_binomial() {
        let b = BubbleSet::new(vec![[0.0; 3], [40.0, 0.0, 0.0]], 1.0, 5);
        let p = 7.0 / 3.0;
        let y = [0.1, 0.2, 0.0, 0.0, 0.0];
        let u1 = crate::geometry::bubble_eval(&[0.0; 3], 1.0, &y[..3], 5);
        let u2 = crate::geometry::bubble_eval(&[40.0, 0.0, 0.0], 1.0, &y[..3], 5);
        let approx = p * u1.powf(p - 1.0) * u2 + p * (p - 1.0) / 2.0 * u1.powf(p - 2.0) * u2 * u2
            - u2.powf(p);
        let v = lk_of_bubbles(&b, &Curvature::Flat, &y);
        assert!(v > 0.0);
        assert!((v / approx - 1.0).abs() < 1e-6, "{v} {approx}");
    }

    #[test]
    fn closed_form_at_centre() {
        let p = ModelParams::default().at_k(2);
        let c = Configuration::new(1.0, 0.5, 1.0, p).unwrap();
        let y = [3f64.sqrt() / 2.0, 0.0, 0.5, 0.0, 0.0];
        let cn = c_n(5);
        let d2 = [0.0f64, 3.0, 1.0, 4.0];
        let w: f64 = d2.iter().map(|d| cn * (1.0 + d).powf(-1.5)).sum();
        let sum_p: f64 = d2.iter().map(|d| (cn * (1.0 + d).powf(-1.5)).powf(7.0 / 3.0)).sum();
        let s = 1.0 / p.rhat();
        let kk = 1.0 - p.c0 * (0.0625 + 0.125 * ((1.0 - s - 0.25) / 0.25f64).tanh());
        let want = kk * w.powf(7.0 / 3.0) - sum_p;
        let got = lk_eval(&c, &y);
        assert!((got / want - 1.0).abs() < 1e-13, "{got} {want}");
    }

    #[test]
    fn far_field_vanishes() {
        let c = cfg(8);
        let near = lk_eval(&c, &[c.r * 1.5, 0.0, 0.0, 0.0, 0.0]).abs();
        let far = lk_eval(&c, &[1e4 * c.r, 0.0, 0.0, 0.0, 0.0]).abs();
        assert!(far < near * 1e-20);
    }

    #[test]
    fn weight_at_centre_and_far() {
        let c = cfg(6);
        let x = c.centers()[0];
        let y = [x[0], x[1], x[2], 0.0, 0.0];
        assert!(weight_eval(WeightKind::Star, &c, &y) > 1.0);
        let small = Configuration { r: 1.0, ..c };
        let far = [0.0, 0.0, 0.0, 1e3, 0.0];
        let ratio =
            weight_eval(WeightKind::StarStar, &small, &far) / weight_eval(WeightKind::Star, &small, &far);
        let dmin = small
            .centers()
            .iter()
            .map(|q| (q.iter().map(|v| v * v).sum::<f64>() + 1e6).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!((ratio * (1.0 + dmin).powi(2) - 1.0).abs() < 1e-2, "{ratio}");
    }

    #[test]
    fn norm_of_weight_is_one() {
        let c = cfg(8);
        let s = WeightedSampleSet::structured(&c);
        let one = norm_estimate(WeightKind::Star, &c, |y| weight_eval(WeightKind::Star, &c, y), &s);
        assert!((one - 1.0).abs() < 1e-15);
        let two = norm_estimate(WeightKind::Star, &c, |y| 2.0 * weight_eval(WeightKind::Star, &c, y), &s);
        assert!((two - 2.0).abs() < 1e-15);
    }

    #[test]
    fn samples_cover_required_points() {
        let c = cfg(16);
        let s = WeightedSampleSet::structured(&c);
        let cs = c.centers();
        let dist = |y: &[f64], x: &[f64; 3]| {
            ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2) + (y[2] - x[2]).powi(2)
                + y[3..].iter().map(|v| v * v).sum::<f64>())
            .sqrt()
        };
        for x in [cs[0], cs[16]] {
            assert!(s.points.iter().any(|y| dist(y, &x) <= 1.0));
        }
        for want in [c.r / 16.0, c.r / 4.0, c.r] {
            assert!(s.points.iter().any(|y| (dist(y, &cs[0]) / want - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn lk_norm_positive_k16() {
        let c = cfg(16);
        let s = WeightedSampleSet::structured(&c);
        let v = norm_estimate(WeightKind::StarStar, &c, |y| lk_eval(&c, y), &s);
        assert!(v > 0.0 && v.is_finite());
    }
}
