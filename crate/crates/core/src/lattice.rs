//! Same-ring and cross-ring interaction sums and their asymptotic laws.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::fit::{fit_power_law, FitReport, NOISE_FLOOR};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumKind {
    Ring,
    Cross,
}

impl fmt::Display for SumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SumKind::Ring => "ring",
            SumKind::Cross => "cross",
        })
    }
}

/// Exact sum against its leading asymptotic term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumReport {
    pub kind: SumKind,
    pub exact: f64,
    pub asymptotic: f64,
    pub ratio: f64,
    pub k: usize,
    pub r: f64,
    pub h: f64,
    pub p: f64,
}

fn check(k: usize, p: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::Domain(format!("k = {k} must be at least 2")));
    }
    if !(p > 1.0) {
        return Err(Error::Domain(format!("exponent p = {p} must exceed 1")));
    }
    Ok(())
}

/// Zero-based offsets `0..k` ordered from the farthest neighbour inwards,
/// so that terms are accumulated smallest first.
fn outward_order(k: usize) -> impl Iterator<Item = usize> {
    (0..=k / 2).rev().flat_map(move |i| {
        let j = k - i;
        let pair = if i != 0 && j != i && j < k { Some(j) } else { None };
        std::iter::once(i).chain(pair)
    })
}

/// `sum_{i=1}^{k-1} (2 r sqrt(1-h^2) sin(i pi / k))^{-p}`.
pub fn ring_sum_exact(r: f64, h: f64, k: usize, p: f64) -> Result<f64> {
    check(k, p)?;
    if !(0.0..1.0).contains(&h) {
        return Err(Error::Domain(format!("h = {h} must lie in [0, 1)")));
    }
    let base = 2.0 * r * (1.0 - h * h).sqrt();
    let kf = k as f64;
    let s: CompensatedSum = outward_order(k)
        .filter(|&i| i != 0)
        .map(|i| (base * (i as f64 * PI / kf).sin()).powf(-p))
        .collect();
    Ok(s.value())
}

/// `sum_{i=1}^{k} (2 r [(1-h^2) sin^2((i-1) pi / k) + h^2]^{1/2})^{-p}`.
pub fn cross_sum_exact(r: f64, h: f64, k: usize, p: f64) -> Result<f64> {
    check(k, p)?;
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!(
            "h = {h} must lie in (0, 1); h = 0 puts the rings on top of each other"
        )));
    }
    let s2 = 1.0 - h * h;
    let kf = k as f64;
    let s: CompensatedSum = outward_order(k)
        .map(|j| {
            let sn = (j as f64 * PI / kf).sin();
            (2.0 * r * (s2 * sn * sn + h * h).sqrt()).powf(-p)
        })
        .collect();
    Ok(s.value())
}

/// Leading asymptotic term of the ring or cross sum, with `p = N - 2`.
pub fn sum_asymptotic(
    kind: SumKind,
    r: f64,
    h: f64,
    k: usize,
    n: usize,
    table: &ConstantsTable,
) -> Result<f64> {
    let nf = n as f64;
    let s = (1.0 - h * h).sqrt();
    let kf = k as f64;
    match kind {
        SumKind::Ring => Ok((kf / (r * s)).powf(nf - 2.0) * table.b1),
        SumKind::Cross => {
            if !(h > 0.0) {
                return Err(Error::Domain("cross asymptotic needs h > 0".into()));
            }
            Ok(table.b2 * kf / (r.powf(nf - 2.0) * h.powf(nf - 3.0) * s))
        }
    }
}

pub fn sum_report(
    kind: SumKind,
    r: f64,
    h: f64,
    k: usize,
    n: usize,
    table: &ConstantsTable,
) -> Result<SumReport> {
    let p = n as f64 - 2.0;
    let exact = match kind {
        SumKind::Ring => ring_sum_exact(r, h, k, p)?,
        SumKind::Cross => cross_sum_exact(r, h, k, p)?,
    };
    let asymptotic = sum_asymptotic(kind, r, h, k, n, table)?;
    Ok(SumReport {
        kind,
        exact,
        asymptotic,
        ratio: exact / asymptotic,
        k,
        r,
        h,
        p,
    })
}

/// Slope of `log|exact/asymptotic - 1|`: against `log k` for ring sums
/// (with a `log log k` corrected companion fit) and against `log(hk)` for
/// cross sums. The expected slope is attached.
pub fn fit_error_order(
    kind: SumKind,
    n: usize,
    h: f64,
    k_list: &[usize],
    table: &ConstantsTable,
) -> Result<(FitReport, Vec<SumReport>)> {
    if k_list.len() < 4 || k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "k list must be strictly increasing with at least 4 entries".into(),
        ));
    }
    let reports: Vec<SumReport> = k_list
        .par_iter()
        .map(|&k| sum_report(kind, 1.0, h, k, n, table))
        .collect::<Result<_>>()?;
    let resid: Vec<f64> = reports.iter().map(|s| s.ratio - 1.0).collect();
    let fit = match kind {
        SumKind::Ring => {
            let x: Vec<f64> = k_list.iter().map(|&k| k as f64).collect();
            fit_power_law(&x, &resid, NOISE_FLOOR)?
                .with_log_correction(|k| k)?
                .with_expected(-2.0)
        }
        SumKind::Cross => {
            let x: Vec<f64> = k_list.iter().map(|&k| h * k as f64).collect();
            fit_power_law(&x, &resid, NOISE_FLOOR)?.with_expected(-1.0)
        }
    };
    Ok((fit, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive_table, Normalization};
    use crate::params::ModelParams;

    #[test]
    fn order_visits_each_offset_once() {
        for k in 2..40 {
            let mut v: Vec<usize> = outward_order(k).collect();
            v.sort();
            assert_eq!(v, (0..k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn ring_examples() {
        assert!((ring_sum_exact(1.0, 0.0, 2, 3.0).unwrap() - 0.125).abs() < 1e-16);
        let want = 2.0 * 2f64.sqrt().powi(-3) + 0.125;
        assert!((ring_sum_exact(1.0, 0.0, 4, 3.0).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.832107).abs() < 1e-6);
        let big = ring_sum_exact(1.0, 0.0, 512, 4.0).unwrap();
        assert!((big / (512f64.powi(4) / 720.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn cross_examples() {
        assert!((cross_sum_exact(1.0, 0.5, 2, 3.0).unwrap() - 1.125).abs() < 1e-15);
        assert!(cross_sum_exact(1.0, 0.0, 4, 3.0).is_err());
        let p = 3.0;
        let first = (2.0 * 0.7 * 0.2f64).powf(-p);
        let all = cross_sum_exact(0.7, 0.2, 1000, p).unwrap();
        assert!(first < all);
    }

    #[test]
    fn asymptotic_examples() {
        let t6 = derive_table(&ModelParams::with_k(6, 2.0, 1.0, 0.25, 8, 0.01), Normalization::Paper, 1e-12)
            .unwrap();
        let v = sum_asymptotic(SumKind::Ring, 1.0, 0.0, 10, 6, &t6).unwrap();
        assert!((v / (1e4 / 720.0) - 1.0).abs() < 1e-10);
        let a = sum_asymptotic(SumKind::Ring, 1.0, 0.1, 10, 6, &t6).unwrap();
        assert!((a / v - 0.99f64.powf(-2.0)).abs() < 1e-12);
        let t5 = derive_table(&ModelParams::default(), Normalization::Paper, 1e-12).unwrap();
        let c = sum_asymptotic(SumKind::Cross, 1.0, 0.3, 100, 5, &t5).unwrap();
        let want = (1.0 / (4.0 * PI)) * 100.0 / (0.09 * 0.91f64.sqrt());
        assert!((c / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn naive_order_agrees() {
        for k in [7usize, 64, 1001] {
            let kf = k as f64;
            let naive: f64 = (1..k).map(|i| (2.0 * (i as f64 * PI / kf).sin()).powf(-3.0)).sum();
            let c = ring_sum_exact(1.0, 0.0, k, 3.0).unwrap();
            assert!((naive / c - 1.0).abs() < 1e-13);
        }
    }
}
