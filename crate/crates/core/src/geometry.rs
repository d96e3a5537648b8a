//! Doubled-equator geometry: ring points, bubbles, kernels and sectors.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{c_n, ModelParams};

/// Ring radius, height fraction and concentration of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    pub r: f64,
    pub h: f64,
    pub lambda: f64,
    pub params: ModelParams,
}

impl Configuration {
    pub fn new(r: f64, h: f64, lambda: f64, params: ModelParams) -> Result<Self> {
        let cfg = Self {
            r,
            h,
            lambda,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(Error::Domain(format!("h = {} must lie in (0, 1)", self.h)));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::Domain(format!("r = {} must be positive", self.r)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Domain(format!(
                "Lambda = {} must be positive",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn rhat(&self) -> f64 {
        self.params.rhat()
    }

    /// `sqrt(1 - h^2)`.
    pub fn planar_factor(&self) -> f64 {
        (1.0 - self.h * self.h).sqrt()
    }

    /// All `2k` centres, upper ring first, as their three non-zero coordinates.
    pub fn centers(&self) -> Vec<[f64; 3]> {
        let k = self.params.k;
        let s = self.planar_factor();
        let mut out = Vec::with_capacity(2 * k);
        for sign in [1.0, -1.0] {
            for j in 0..k {
                let th = ring_angle(j, k);
                out.push([
                    self.r * s * th.cos(),
                    self.r * s * th.sin(),
                    sign * self.r * self.h,
                ]);
            }
        }
        out
    }

    pub fn bubbles(&self) -> BubbleSet {
        BubbleSet::new(self.centers(), self.lambda, self.params.n)
    }
}

/// `hhat = B' / k^{(N-3)/(N-1)}`.
pub fn hhat(n: usize, k: usize, bprime: f64) -> f64 {
    let nf = n as f64;
    bprime / (k as f64).powf((nf - 3.0) / (nf - 1.0))
}

/// Angle `2 j pi / k` of the zero-based ring index `j`.
#[inline]
pub fn ring_angle(j: usize, k: usize) -> f64 {
    2.0 * j as f64 * PI / k as f64
}

/// Half-widths of an admissible box around `(rhat, hhat, Lambda0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleBox {
    pub r_half: f64,
    /// Half-width of `h / hhat` around 1.
    pub h_rel_half: f64,
    pub lambda_half: f64,
}

impl AdmissibleBox {
    /// Fixed box of half-width `sigma_hat` in every coordinate.
    pub fn fixed(sigma_hat: f64) -> Self {
        Self {
            r_half: sigma_hat,
            h_rel_half: sigma_hat,
            lambda_half: sigma_hat,
        }
    }

    /// Shrinking box `|r - rhat| <= k^-tb`, `|Lambda - Lambda0| <= k^{-3tb/2}`, `|1 - h/hhat| <= k^-tb`.
    pub fn shrinking(k: usize, theta_bar: f64) -> Self {
        let kf = k as f64;
        Self {
            r_half: kf.powf(-theta_bar),
            h_rel_half: kf.powf(-theta_bar),
            lambda_half: kf.powf(-1.5 * theta_bar),
        }
    }

    pub fn contains(&self, r: f64, h: f64, lambda: f64, rhat: f64, hhat: f64, lambda0: f64) -> bool {
        (r - rhat).abs() <= self.r_half
            && (1.0 - h / hhat).abs() <= self.h_rel_half
            && (lambda - lambda0).abs() <= self.lambda_half
    }
}

/// Which ring a centre sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ring {
    Upper,
    Lower,
}

impl Ring {
    fn sign(self) -> f64 {
        match self {
            Ring::Upper => 1.0,
            Ring::Lower => -1.0,
        }
    }
}

/// The two lists of ring points as full `N`-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RingPoints {
    pub upper: Vec<Vec<f64>>,
    pub lower: Vec<Vec<f64>>,
}

pub fn ring_points(cfg: &Configuration) -> Result<RingPoints> {
    cfg.validate()?;
    let n = cfg.params.n;
    let lift = |c: &[f64; 3]| {
        let mut v = vec![0.0; n];
        v[..3].copy_from_slice(c);
        v
    };
    let centers = cfg.centers();
    let k = cfg.params.k;
    Ok(RingPoints {
        upper: centers[..k].iter().map(lift).collect(),
        lower: centers[k..].iter().map(lift).collect(),
    })
}

/// `c_N (Lambda / (1 + Lambda^2 |y - x|^2))^{(N-2)/2}`.
pub fn bubble_eval(x: &[f64], lambda: f64, y: &[f64], n: usize) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    bubble_profile(d2, lambda, n)
}

/// Bubble value as a function of the squared distance to its centre.
#[inline]
pub fn bubble_profile(d2: f64, lambda: f64, n: usize) -> f64 {
    let e = (n as f64 - 2.0) / 2.0;
    c_n(n) * (lambda / (1.0 + lambda * lambda * d2)).powf(e)
}

/// Equal-concentration bubbles whose centres have zero coordinates beyond the third.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleSet {
    pub centers: Vec<[f64; 3]>,
    pub lambda: f64,
    pub n: usize,
    cn: f64,
}

impl BubbleSet {
    pub fn new(centers: Vec<[f64; 3]>, lambda: f64, n: usize) -> Self {
        Self {
            centers,
            lambda,
            n,
            cn: c_n(n),
        }
    }

    /// Squared distances from `y` (given by its first three coordinates and
    /// the squared norm of the rest) to every centre.
    #[inline]
    pub fn dist2(&self, y3: &[f64; 3], tail2: f64) -> impl Iterator<Item = f64> + '_ {
        let y3 = *y3;
        self.centers.iter().map(move |c| {
            let a = y3[0] - c[0];
            let b = y3[1] - c[1];
            let d = y3[2] - c[2];
            a * a + b * b + d * d + tail2
        })
    }

    /// `sum_j U_j^p` at a point in reduced coordinates; `p = 1` gives `W`.
    pub fn power_sum(&self, y3: &[f64; 3], tail2: f64, p: f64) -> f64 {
        let e = (self.n as f64 - 2.0) / 2.0;
        let scale = (self.cn * self.lambda.powf(e)).powf(p);
        let l2 = self.lambda * self.lambda;
        let mut acc = 0.0;
        for d2 in self.dist2(y3, tail2) {
            acc += (1.0 + l2 * d2).powf(-e * p);
        }
        scale * acc
    }

    pub fn w_reduced(&self, y3: &[f64; 3], tail2: f64) -> f64 {
        self.power_sum(y3, tail2, 1.0)
    }

    pub fn w(&self, y: &[f64]) -> f64 {
        let (y3, t2) = reduce(y);
        self.w_reduced(&y3, t2)
    }
}

/// Splits an `N`-vector into its first three coordinates and the squared norm of the rest.
#[inline]
pub fn reduce(y: &[f64]) -> ([f64; 3], f64) {
    let tail2 = y[3..].iter().map(|v| v * v).sum();
    ([y[0], y[1], y[2]], tail2)
}

/// Sum of all `2k` bubbles at `y`.
pub fn w_eval(cfg: &Configuration, y: &[f64]) -> f64 {
    cfg.bubbles().w(y)
}

/// Parameter selected by a kernel function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelVar {
    R,
    H,
    Lambda,
}

impl KernelVar {
    pub fn from_ell(ell: u8) -> Result<Self> {
        match ell {
            1 => Ok(KernelVar::R),
            2 => Ok(KernelVar::H),
            3 => Ok(KernelVar::Lambda),
            _ => Err(Error::Domain(format!("kernel index ell = {ell} not in 1..=3"))),
        }
    }
}

/// `(ell, ring, j)` with `j` one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelIndex {
    pub var: KernelVar,
    pub ring: Ring,
    pub j: usize,
}

/// Centre of bubble `j` (one-based) on `ring` as a full `N`-vector.
pub fn center_of(cfg: &Configuration, ring: Ring, j: usize) -> Vec<f64> {
    let th = ring_angle(j - 1, cfg.params.k);
    let s = cfg.planar_factor();
    let mut x = vec![0.0; cfg.params.n];
    x[0] = cfg.r * s * th.cos();
    x[1] = cfg.r * s * th.sin();
    x[2] = ring.sign() * cfg.r * cfg.h;
    x
}

/// Derivative of `U_{x_j(r,h), Lambda}(y)` with respect to `r`, `h` or `Lambda`.
pub fn kernel_eval(idx: KernelIndex, cfg: &Configuration, y: &[f64]) -> Result<f64> {
    cfg.validate()?;
    let k = cfg.params.k;
    if idx.j == 0 || idx.j > k {
        return Err(Error::Domain(format!("kernel index j = {} not in 1..={k}", idx.j)));
    }
    let n = cfg.params.n;
    let nf = n as f64;
    let lam = cfg.lambda;
    let x = center_of(cfg, idx.ring, idx.j);
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let q = 1.0 + lam * lam * d2;
    let cn = c_n(n);
    if idx.var == KernelVar::Lambda {
        return Ok(cn * 0.5 * (nf - 2.0) * lam.powf((nf - 4.0) / 2.0) * (1.0 - lam * lam * d2)
            * q.powf(-nf / 2.0));
    }
    // dU/dx_i = -(N-2) c_N Lambda^{(N+2)/2} q^{-N/2} (x_i - y_i)
    let g = -(nf - 2.0) * cn * lam.powf((nf + 2.0) / 2.0) * q.powf(-nf / 2.0);
    let th = ring_angle(idx.j - 1, k);
    let dx: [f64; 3] = match idx.var {
        KernelVar::R => [x[0] / cfg.r, x[1] / cfg.r, x[2] / cfg.r],
        KernelVar::H => {
            let s = cfg.planar_factor();
            let f = -cfg.r * cfg.h / s;
            [f * th.cos(), f * th.sin(), idx.ring.sign() * cfg.r]
        }
        KernelVar::Lambda => unreachable!(),
    };
    Ok(g * (0..3).map(|i| (x[i] - y[i]) * dx[i]).sum::<f64>())
}

/// Upper (`y3 >= 0`) or lower half of a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

/// One-based sector index and side of `y`; ties on sector boundaries go to the smaller index.
pub fn sector_of(y: &[f64], k: usize) -> Result<(usize, Side)> {
    if y[0] == 0.0 && y[1] == 0.0 {
        return Err(Error::Domain("sector of a point on the symmetry axis".into()));
    }
    let side = if y[2] >= 0.0 { Side::Plus } else { Side::Minus };
    let kf = k as f64;
    let mut x = y[1].atan2(y[0]) / (2.0 * PI / kf);
    if x < 0.0 {
        x += kf;
    }
    // sector j-1 covers x in [j-1-1/2, j-1+1/2]; ceil(x - 1/2) picks the lower one on a tie
    let j0 = if x == kf - 0.5 {
        0
    } else {
        ((x - 0.5).ceil() as usize) % k
    };
    Ok((j0 + 1, side))
}

/// `true` when `y` lies in the closed half-sector around the first upper centre.
#[inline]
pub fn in_first_upper_sector(y3: &[f64; 3], k: usize) -> bool {
    if y3[2] < 0.0 || (y3[0] == 0.0 && y3[1] == 0.0) {
        return false;
    }
    y3[1].atan2(y3[0]).abs() <= PI / k as f64
}

/// Direction of the rescaling between the original and the scaled problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleDirection {
    /// `v(z) = rhat^{(N-2)/2} u(rhat z)`.
    ToSphereSide,
    /// `u(y) = rhat^{-(N-2)/2} v(y / rhat)`.
    ToScaledSide,
}

/// Rescales a function of an `N`-vector; the two directions are mutually inverse.
pub fn scale_transform<'a, F>(
    f: F,
    rhat: f64,
    direction: ScaleDirection,
) -> impl Fn(&[f64]) -> f64 + 'a
where
    F: Fn(&[f64]) -> f64 + 'a,
{
    move |y: &[f64]| {
        let e = (y.len() as f64 - 2.0) / 2.0;
        let (factor, amp) = match direction {
            ScaleDirection::ToSphereSide => (rhat, rhat.powf(e)),
            ScaleDirection::ToScaledSide => (1.0 / rhat, rhat.powf(-e)),
        };
        let z: Vec<f64> = y.iter().map(|v| v * factor).collect();
        amp * f(&z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(r: f64, h: f64, k: usize) -> Configuration {
        let p = ModelParams {
            k,
            ..ModelParams::default()
        };
        Configuration::new(r, h, 1.0, p).unwrap()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn ring_point_examples() {
        let c = cfg(1.0, 0.5, 4);
        let rp = ring_points(&c).unwrap();
        let x1 = &rp.upper[0];
        assert!((x1[0] - 0.75f64.sqrt()).abs() < 1e-15);
        assert!(x1[1].abs() < 1e-15);
        assert_eq!(x1[2], 0.5);
        assert!((dist(&rp.upper[0], &rp.lower[0]) - 1.0).abs() < 1e-15);
        for p in rp.upper.iter().chain(&rp.lower) {
            assert!((dist(p, &[0.0; 5]) - 1.0).abs() < 1e-14);
            assert!(p[3..].iter().all(|&v| v == 0.0));
        }
        let p = ModelParams {
            k: 4,
            ..ModelParams::default()
        };
        let flat = Configuration {
            r: 1.0,
            h: 0.0,
            lambda: 1.0,
            params: p,
        };
        assert!(ring_points(&flat).is_err());
        let c = flat.centers();
        assert!((dist(&c[0], &c[1]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bubble_examples() {
        let x = [0.3, -0.2, 0.1, 0.0, 0.5];
        let cn = c_n(5);
        assert!((bubble_eval(&x, 2.0, &x, 5) - cn * 2f64.powf(1.5)).abs() < 1e-12);
        let y = [1.3, -0.2, 0.1, 0.0, 0.5];
        let want = 15f64.powf(0.75) * 2f64.powf(-1.5);
        assert!((bubble_eval(&x, 1.0, &y, 5) - want).abs() < 1e-13);
        let far = [1e6, 0.0, 0.0, 0.0, 0.0];
        let v = bubble_eval(&[0.0; 5], 2.0, &far, 5) * 1e18;
        assert!((v / (cn * 2f64.powf(-1.5)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn w_at_origin() {
        let c = cfg(3.0, 0.4, 6);
        let want = 12.0 * bubble_profile(9.0, 1.0, 5);
        assert!((w_eval(&c, &[0.0; 5]) / want - 1.0).abs() < 1e-14);
    }

    #[test]
    fn w_near_isolated_centre() {
        let c = cfg(1e4, 0.3, 4);
        let x1 = center_of(&c, Ring::Upper, 1);
        let self_term = bubble_eval(&x1, 1.0, &x1, 5);
        let rp = ring_points(&c).unwrap();
        let others: f64 = rp
            .upper
            .iter()
            .chain(&rp.lower)
            .skip(1)
            .map(|x| bubble_eval(x, 1.0, &x1, 5))
            .sum();
        let w = w_eval(&c, &x1);
        assert!((w / (self_term + others) - 1.0).abs() < 1e-14);
        assert!(w / self_term - 1.0 < 1e-10);
    }

    #[test]
    fn kernel_lambda_at_centre() {
        let c = Configuration {
            lambda: 1.7,
            ..cfg(2.0, 0.3, 5)
        };
        let x = center_of(&c, Ring::Lower, 3);
        let idx = KernelIndex {
            var: KernelVar::Lambda,
            ring: Ring::Lower,
            j: 3,
        };
        let want = c_n(5) * 1.5 * 1.7f64.powf(0.5);
        assert!((kernel_eval(idx, &c, &x).unwrap() / want - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_h_scales_with_r() {
        let idx = KernelIndex {
            var: KernelVar::H,
            ring: Ring::Upper,
            j: 2,
        };
        let offset = [0.4, -0.3, 0.2, 0.1, 0.0];
        let val = |r: f64| {
            let c = cfg(r, 0.3, 4);
            let x = center_of(&c, Ring::Upper, 2);
            let y: Vec<f64> = x.iter().zip(offset).map(|(a, b)| a + b).collect();
            kernel_eval(idx, &c, &y).unwrap()
        };
        assert!((val(20.0) / val(10.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sector_examples() {
        assert_eq!(sector_of(&[1.0, 0.0, 1.0, 0.0, 0.0], 4).unwrap(), (1, Side::Plus));
        assert_eq!(sector_of(&[0.0, 1.0, -1.0, 0.0, 0.0], 4).unwrap(), (2, Side::Minus));
        assert_eq!(sector_of(&[1.0, 1.0, 0.0, 0.0, 0.0], 4).unwrap(), (1, Side::Plus));
        assert_eq!(sector_of(&[-1.0, 1.0, 0.0, 0.0, 0.0], 4).unwrap(), (2, Side::Plus));
        assert_eq!(sector_of(&[1.0, -1.0, 0.0, 0.0, 0.0], 4).unwrap(), (1, Side::Plus));
        assert_eq!(sector_of(&[-1.0, -1.0, 0.0, 0.0, 0.0], 4).unwrap(), (3, Side::Plus));
        assert!(sector_of(&[0.0, 0.0, 1.0, 0.0, 0.0], 4).is_err());
    }

    #[test]
    fn scale_transform_bubble() {
        let x = [3.0, 1.0, -2.0, 0.5, 0.0];
        let lam = 0.7;
        let rhat = 8.0;
        let u = |y: &[f64]| bubble_eval(&x, lam, y, 5);
        let v = scale_transform(u, rhat, ScaleDirection::ToSphereSide);
        let xs: Vec<f64> = x.iter().map(|c| c / rhat).collect();
        for i in 0..20 {
            let z = [0.1 * i as f64, -0.05 * i as f64, 0.2, 0.01 * i as f64, 0.3];
            let want = bubble_eval(&xs, rhat * lam, &z, 5);
            assert!((v(&z) / want - 1.0).abs() < 1e-13);
        }
        let back = scale_transform(&v, rhat, ScaleDirection::ToScaledSide);
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((back(&y) / u(&y) - 1.0).abs() < 1e-12);
        let id = scale_transform(u, 1.0, ScaleDirection::ToSphereSide);
        assert_eq!(id(&y), u(&y));
    }
}
