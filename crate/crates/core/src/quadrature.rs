//! Symmetry-reduced integrals: pairwise bubble interactions, shifted
//! curvature moments and the energy `I(W)` of a bubble configuration.
//!
//! The gradient part of the energy never touches `|grad W|^2` directly.
//! Since `-Delta U = U^{2*-1}`, `int grad U_a . grad U_b` equals the
//! interaction integral of the pair, which depends only on their distance.
//! The potential part is a stratified Monte Carlo estimate.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::geometry::{in_first_upper_sector, BubbleSet, Configuration};
use crate::numeric::{
    integrate_to_infinity, integrate_with_breaks, sphere_area, CompensatedSum, Estimate, Tolerance,
};
use crate::params::{c_n, two_star, Curvature};

/// How the potential part of the energy is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadMethod {
    /// Nested adaptive quadrature; only for centres on one axis with `K = 1`.
    AdaptiveGrid,
    #[default]
    MonteCarlo,
}

/// Stratified sampling plan around each reference centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strata {
    /// Radius of the inner ball in units of `1 / Lambda`.
    pub inner_radius: f64,
    /// Share of the samples drawn in the inner ball.
    pub inner_fraction: f64,
    /// Independent tasks per stratum.
    pub batches: usize,
}

impl Default for Strata {
    fn default() -> Self {
        Self {
            inner_radius: 10.0,
            inner_fraction: 0.5,
            batches: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub method: QuadMethod,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Cap on adaptive subintervals per one-dimensional integral.
    pub max_evals: usize,
    pub seed: u64,
    pub samples: usize,
    pub strata: Strata,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: QuadMethod::MonteCarlo,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_evals: 2000,
            seed: 0x5EED,
            samples: 2_000_000,
            strata: Strata::default(),
        }
    }
}

impl QuadratureSpec {
    fn outer(&self) -> Tolerance {
        Tolerance {
            abs: self.abs_tol,
            rel: self.rel_tol,
            max_intervals: self.max_evals,
        }
    }

    fn inner(&self) -> Tolerance {
        Tolerance {
            abs: f64::MIN_POSITIVE,
            rel: 0.1 * self.rel_tol,
            max_intervals: self.max_evals,
        }
    }
}

/// Integral over `R^N` of a function of the axial coordinate `t` and the
/// distance `s` to the `e_1` axis, with `s` from `s_breaks(t)`.
fn cylindrical<F, B>(
    f: F,
    s_scale: impl Fn(f64) -> f64 + Sync,
    s_breaks: B,
    t_breaks: &[f64],
    n: usize,
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
    B: Fn(f64) -> Vec<f64> + Sync,
{
    let w = sphere_area(n - 2);
    let nf = n as f64;
    let inner_tol = spec.inner();
    let failure = std::sync::Mutex::new(None);
    let g = |t: f64| -> f64 {
        let radial = |s: f64| {
            if s == 0.0 {
                0.0
            } else {
                s.powf(nf - 2.0) * f(t, s)
            }
        };
        match integrate_to_infinity(radial, 0.0, s_scale(t), &s_breaks(t), &inner_tol) {
            Ok(e) => e.value,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let mut knots: Vec<f64> = t_breaks.to_vec();
    knots.sort_by(|a, b| a.total_cmp(b));
    knots.dedup();
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    let outer = spec.outer();
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    let mut pieces = vec![
        integrate_to_infinity(|u| g(lo - u), 0.0, 1.0, &[], &outer),
        integrate_to_infinity(&g, hi, 1.0, &[], &outer),
    ];
    if hi > lo {
        pieces.push(integrate_with_breaks(&g, lo, hi, &knots[1..knots.len() - 1], &outer));
    }
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    for p in pieces {
        let p = p?;
        total.add(p.value);
        err += p.err;
    }
    let value = w * total.value();
    Ok(Estimate {
        value,
        err: w * err + spec.inner().rel * value.abs(),
    })
}

/// `int U_{0,1}^{pa} U_{d e_1,1}^{pb}` for true bubbles.
pub fn pair_integral(d: f64, n: usize, pa: f64, pb: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("distance d = {d} must be non-negative")));
    }
    let nf = n as f64;
    let e = (nf - 2.0) / 2.0;
    let amp = c_n(n).powf(pa + pb);
    let f = |t: f64, s: f64| {
        let s2 = s * s;
        amp * (1.0 + t * t + s2).powf(-e * pa) * (1.0 + (t - d) * (t - d) + s2).powf(-e * pb)
    };
    let scale = |t: f64| (1.0 + t.abs().min((t - d).abs()).powi(2)).sqrt();
    let edge = d.min(2.0) / 2.0;
    let t_breaks = if d > 0.0 {
        vec![0.0, edge, d / 2.0, d - edge, d]
    } else {
        vec![0.0]
    };
    cylindrical(f, scale, |_| Vec::new(), &t_breaks, n, spec)
}

/// `int U_{0,Lambda}^{2*-1} U_{d e_1, Lambda}`; equals the `Lambda = 1` value at `Lambda d`.
pub fn interaction_integral(d: f64, lambda: f64, n: usize, spec: &QuadratureSpec) -> Result<Estimate> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("Lambda = {lambda} must be positive")));
    }
    pair_integral(lambda * d, n, two_star(n) - 1.0, 1.0, spec)
}

/// `int ||y + shift e_1| - rhat|^m U_{0,Lambda}^{2*} dy`.
pub fn moment_integral(
    shift: f64,
    rhat: f64,
    m: f64,
    lambda: f64,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    if !(shift > 0.0 && rhat > 0.0 && lambda > 0.0) {
        return Err(Error::Domain(
            "shift, rhat and Lambda must all be positive".into(),
        ));
    }
    let nf = n as f64;
    let amp = c_n(n).powf(two_star(n));
    // z = Lambda y, so |y + shift e_1| = |(t / Lambda + shift, s / Lambda)|
    let f = |t: f64, s: f64| {
        let a = t / lambda + shift;
        let b = s / lambda;
        let w = ((a * a + b * b).sqrt() - rhat).abs();
        let w = if m == 0.0 { 1.0 } else { w.powf(m) };
        amp * w * (1.0 + t * t + s * s).powf(-nf)
    };
    let s_breaks = |t: f64| {
        let a = t / lambda + shift;
        let q = rhat * rhat - a * a;
        if q > 0.0 {
            vec![lambda * q.sqrt()]
        } else {
            Vec::new()
        }
    };
    let t_breaks = vec![
        0.0,
        lambda * (rhat - shift),
        lambda * (-rhat - shift),
    ];
    cylindrical(f, |t| (1.0 + t * t).sqrt(), s_breaks, &t_breaks, n, spec)
}

/// One distinct pair distance in the gradient part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub distance: f64,
    /// How many partners of a reference bubble sit at this distance.
    pub multiplicity: usize,
    pub value: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    /// `(1/2) int |grad W|^2`.
    pub gradient_part: f64,
    /// `(1/2*) int K W^{2*}`.
    pub potential_part: f64,
    pub total: f64,
    /// Monte Carlo standard error of `potential_part` (zero for grid quadrature).
    pub stderr: f64,
    /// Quadrature error bound of `gradient_part`.
    pub gradient_err: f64,
    /// Self term first, then the distinct partner distances.
    pub pairs: Vec<PairTerm>,
    pub samples: usize,
    pub warning: Option<String>,
}

impl EnergyBreakdown {
    fn new(gradient: Estimate, potential: Estimate, pairs: Vec<PairTerm>, samples: usize) -> Self {
        Self {
            gradient_part: gradient.value,
            potential_part: potential.value,
            total: gradient.value - potential.value,
            stderr: potential.err,
            gradient_err: gradient.err,
            pairs,
            samples,
            warning: None,
        }
    }
}

/// Distinct same-ring and cross-ring partner distances of `x_1` with multiplicities.
pub fn partner_distances(cfg: &Configuration) -> Vec<(f64, usize)> {
    let k = cfg.params.k;
    let kf = k as f64;
    let s = cfg.planar_factor();
    let (r, h) = (cfg.r, cfg.h);
    let mut out = Vec::new();
    for i in 1..=k / 2 {
        let mult = if 2 * i == k { 1 } else { 2 };
        out.push((2.0 * r * s * (i as f64 * PI / kf).sin(), mult));
    }
    for j in 0..=k / 2 {
        let mult = if j == 0 || 2 * j == k { 1 } else { 2 };
        let sn = (j as f64 * PI / kf).sin();
        out.push((2.0 * r * (s * s * sn * sn + h * h).sqrt(), mult));
    }
    out
}

/// Energy of the `2k`-bubble configuration with the model curvature.
pub fn energy_total(cfg: &Configuration, spec: &QuadratureSpec) -> Result<EnergyBreakdown> {
    energy_total_with(cfg, Curvature::of(&cfg.params), spec)
}

pub fn energy_total_with(
    cfg: &Configuration,
    curvature: Curvature,
    spec: &QuadratureSpec,
) -> Result<EnergyBreakdown> {
    cfg.validate()?;
    let n = cfg.params.n;
    let k = cfg.params.k;
    let lam = cfg.lambda;
    let mut jobs = vec![(0.0, 1usize)];
    jobs.extend(partner_distances(cfg));
    let pairs: Vec<PairTerm> = jobs
        .par_iter()
        .map(|&(d, mult)| {
            interaction_integral(d, lam, n, spec).map(|e| PairTerm {
                distance: d,
                multiplicity: mult,
                value: e.value,
                err: e.err,
            })
        })
        .collect::<Result<_>>()?;
    let per_bubble: CompensatedSum = pairs.iter().map(|p| p.multiplicity as f64 * p.value).collect();
    let per_err: f64 = pairs.iter().map(|p| p.multiplicity as f64 * p.err).sum();
    let kf = k as f64;
    let gradient = Estimate {
        value: kf * per_bubble.value(),
        err: kf * per_err,
    };
    let bubbles = cfg.bubbles();
    let first = bubbles.centers[0];
    let region = |y3: &[f64; 3]| in_first_upper_sector(y3, k);
    let pot = match spec.method {
        QuadMethod::MonteCarlo => {
            mc_potential(&bubbles, &[first], curvature, Some(&region), spec)?
        }
        QuadMethod::AdaptiveGrid => {
            return Err(Error::Domain(
                "grid quadrature of the potential needs centres on one axis with K = 1".into(),
            ))
        }
    };
    let scale = 2.0 * kf / two_star(n);
    let potential = Estimate {
        value: scale * pot.value,
        err: scale * pot.err,
    };
    Ok(finish(gradient, potential, pairs, spec))
}

/// Energy of an explicit list of equal-concentration bubbles.
pub fn energy_of_centers(
    centers: &[[f64; 3]],
    lambda: f64,
    n: usize,
    curvature: Curvature,
    spec: &QuadratureSpec,
) -> Result<EnergyBreakdown> {
    if centers.is_empty() {
        return Err(Error::Domain("no bubble centres given".into()));
    }
    let mut dists: Vec<f64> = vec![0.0];
    for (a, ca) in centers.iter().enumerate() {
        for cb in &centers[a + 1..] {
            dists.push((0..3).map(|i| (ca[i] - cb[i]).powi(2)).sum::<f64>().sqrt());
        }
    }
    let vals: Vec<Estimate> = dists
        .par_iter()
        .map(|&d| interaction_integral(d, lambda, n, spec))
        .collect::<Result<_>>()?;
    let mcount = centers.len() as f64;
    // 1/2 sum_{a,b}: the self term M times, each unordered pair twice
    let mut g = CompensatedSum::new();
    g.add(0.5 * mcount * vals[0].value);
    let mut gerr = 0.5 * mcount * vals[0].err;
    for v in &vals[1..] {
        g.add(v.value);
        gerr += v.err;
    }
    let pairs = dists
        .iter()
        .zip(&vals)
        .map(|(&d, v)| PairTerm {
            distance: d,
            multiplicity: 1,
            value: v.value,
            err: v.err,
        })
        .collect();
    let bubbles = BubbleSet::new(centers.to_vec(), lambda, n);
    let pot = match spec.method {
        QuadMethod::MonteCarlo => mc_potential(&bubbles, centers, curvature, None, spec)?,
        QuadMethod::AdaptiveGrid => grid_potential(&bubbles, curvature, spec)?,
    };
    let ts = two_star(n);
    let potential = Estimate {
        value: pot.value / ts,
        err: pot.err / ts,
    };
    let gradient = Estimate {
        value: g.value(),
        err: gerr,
    };
    Ok(finish(gradient, potential, pairs, spec))
}

fn finish(gradient: Estimate, potential: Estimate, pairs: Vec<PairTerm>, spec: &QuadratureSpec) -> EnergyBreakdown {
    let samples = match spec.method {
        QuadMethod::MonteCarlo => spec.samples,
        QuadMethod::AdaptiveGrid => 0,
    };
    let mut out = EnergyBreakdown::new(gradient, potential, pairs, samples);
    let target = spec.abs_tol.max(spec.rel_tol * out.potential_part.abs());
    if spec.method == QuadMethod::MonteCarlo && out.stderr > target {
        out.warning = Some(format!(
            "Monte Carlo stderr {:.3e} above tolerance {:.3e}",
            out.stderr, target
        ));
    }
    out
}

/// `int W^{2*}` by cylindrical quadrature for centres on the `e_1` axis.
fn grid_potential(bubbles: &BubbleSet, curvature: Curvature, spec: &QuadratureSpec) -> Result<Estimate> {
    if curvature != Curvature::Flat || bubbles.centers.iter().any(|c| c[1] != 0.0 || c[2] != 0.0) {
        return Err(Error::Domain(
            "grid quadrature of the potential needs centres on one axis with K = 1".into(),
        ));
    }
    let ts = two_star(bubbles.n);
    let f = |t: f64, s: f64| bubbles.w_reduced(&[t, s, 0.0], 0.0).powf(ts);
    let mut t_breaks: Vec<f64> = bubbles.centers.iter().map(|c| c[0]).collect();
    let (lo, hi) = t_breaks
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    t_breaks.push(0.5 * (lo + hi));
    let lam = bubbles.lambda;
    let centers: Vec<f64> = bubbles.centers.iter().map(|c| c[0]).collect();
    let scale = move |t: f64| {
        let d = centers.iter().map(|c| (t - c).abs()).fold(f64::INFINITY, f64::min);
        (1.0 + (lam * d).powi(2)).sqrt() / lam
    };
    cylindrical(f, scale, |_| Vec::new(), &t_breaks, bubbles.n, spec)
}

/// Radial law of `t = Lambda |y - c|` in the two strata.
struct Proposal {
    n: usize,
    lambda: f64,
    r_in: f64,
    alpha_in: f64,
    /// `omega_{N-1} int_0^{r_in} t^{N-1} (1+t^2)^{-N} dt`.
    mass_in: f64,
    omega: f64,
    beta_cut: f64,
}

impl Proposal {
    fn new(n: usize, lambda: f64, strata: &Strata) -> Self {
        let half = n as f64 / 2.0;
        let r_in = strata.inner_radius;
        let beta_cut = r_in * r_in / (1.0 + r_in * r_in);
        let omega = sphere_area(n - 1);
        let mass_in = omega * 0.5 * ln_beta(half, half).exp() * beta_reg(half, half, beta_cut);
        Self {
            n,
            lambda,
            r_in,
            alpha_in: strata.inner_fraction,
            mass_in,
            omega,
            beta_cut,
        }
    }

    /// Mixture density of one centre's two strata at scaled radius `t`.
    #[inline]
    fn density(&self, t: f64) -> f64 {
        let nf = self.n as f64;
        let ln = self.lambda.powf(nf);
        if t <= self.r_in {
            self.alpha_in * ln * (1.0 + t * t).powf(-nf) / self.mass_in
        } else {
            (1.0 - self.alpha_in) * nf * self.r_in.powf(nf) * ln * t.powf(-2.0 * nf) / self.omega
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.count == 0.0 {
            return o;
        }
        if o.count == 0.0 {
            return self;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
        }
    }

    fn variance(&self) -> f64 {
        if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        }
    }
}

type Region<'a> = Option<&'a (dyn Fn(&[f64; 3]) -> bool + Sync)>;

/// `int_region K W^{2*}` by stratified importance sampling around `anchors`.
///
/// Each anchor owns an inner ball (exact bubble radial law) and an outer
/// shell (Pareto tail matching `t^{-2N}`); the estimator divides by the
/// full mixture density, so overlapping anchors stay unbiased.
fn mc_potential(
    bubbles: &BubbleSet,
    anchors: &[[f64; 3]],
    curvature: Curvature,
    region: Region<'_>,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let n = bubbles.n;
    let strata = spec.strata;
    if !(strata.inner_fraction > 0.0 && strata.inner_fraction < 1.0) || strata.batches == 0 {
        return Err(Error::Domain("invalid stratification plan".into()));
    }
    let lam = bubbles.lambda;
    let prop = Proposal::new(n, lam, &strata);
    let ts = two_star(n);
    let nanchor = anchors.len();
    let per_anchor = spec.samples / nanchor.max(1);
    let n_in = ((per_anchor as f64) * strata.inner_fraction).round() as usize;
    let n_out = per_anchor - n_in;
    if n_in < 2 * strata.batches || n_out < 2 * strata.batches {
        return Err(Error::Domain(format!(
            "{} samples are too few for {} batches per stratum",
            spec.samples, strata.batches
        )));
    }
    let half = n as f64 / 2.0;
    let beta = Beta::new(half, half).map_err(|e| Error::Domain(e.to_string()))?;
    let unit = Uniform::new(0.0f64, 1.0).map_err(|e| Error::Domain(e.to_string()))?;

    // task = (anchor, stratum, batch), enumerated in a fixed order
    let tasks: Vec<(usize, bool, usize)> = (0..nanchor)
        .flat_map(|a| {
            [true, false]
                .into_iter()
                .flat_map(move |inner| (0..strata.batches).map(move |b| (a, inner, b)))
        })
        .collect();
    let results: Vec<Moments> = tasks
        .par_iter()
        .enumerate()
        .map(|(task, &(a, inner, b))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ task as u64);
            let total = if inner { n_in } else { n_out };
            let count = total / strata.batches + usize::from(b < total % strata.batches);
            let c = anchors[a];
            let mut dir = vec![0.0; n];
            let mut mom = Moments::default();
            for _ in 0..count {
                let t = if inner {
                    loop {
                        let s: f64 = beta.sample(&mut rng);
                        if s <= prop.beta_cut && s < 1.0 {
                            break (s / (1.0 - s)).sqrt();
                        }
                    }
                } else {
                    let u: f64 = 1.0 - unit.sample(&mut rng);
                    prop.r_in * u.powf(-1.0 / n as f64)
                };
                let mut norm2 = 0.0f64;
                for v in dir.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                    norm2 += *v * *v;
                }
                let rho = t / lam / norm2.sqrt();
                let y3 = [c[0] + rho * dir[0], c[1] + rho * dir[1], c[2] + rho * dir[2]];
                let tail2 = rho * rho * dir[3..].iter().map(|v| v * v).sum::<f64>();
                let inside = region.map_or(true, |f| f(&y3));
                let val = if inside {
                    let radius = (y3[0] * y3[0] + y3[1] * y3[1] + y3[2] * y3[2] + tail2).sqrt();
                    let fy = curvature.at_radius(radius) * bubbles.w_reduced(&y3, tail2).powf(ts);
                    let q: f64 = anchors
                        .iter()
                        .map(|ca| {
                            let d2 = (y3[0] - ca[0]).powi(2)
                                + (y3[1] - ca[1]).powi(2)
                                + (y3[2] - ca[2]).powi(2)
                                + tail2;
                            prop.density(lam * d2.sqrt())
                        })
                        .sum::<f64>()
                        / nanchor as f64;
                    fy / q
                } else {
                    0.0
                };
                mom.push(val);
            }
            mom
        })
        .collect();

    // strata: per (anchor, inner/outer), merged in task order
    let mut value = CompensatedSum::new();
    let mut var = 0.0;
    let ntot = (nanchor * per_anchor) as f64;
    for chunk in results.chunks(strata.batches) {
        let m = chunk.iter().fold(Moments::default(), |acc, x| acc.merge(*x));
        let w = m.count / ntot;
        value.add(w * m.mean);
        var += w * w * m.variance() / m.count;
    }
    Ok(Estimate {
        value: value.value(),
        err: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{bubble_moment, compute_b0, Normalization};
    use crate::numeric::integrate;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn self_interaction_is_bubble_norm() {
        let j0 = interaction_integral(0.0, 1.0, 5, &spec()).unwrap();
        let m0 = bubble_moment(5, 0.0, Normalization::Bubble, 1e-13).unwrap();
        assert!((j0.value / m0.value - 1.0).abs() < 1e-9, "{} {}", j0.value, m0.value);
    }

    #[test]
    fn interaction_far_field_and_scaling() {
        let b0 = compute_b0(5, Normalization::Bubble, 1e-12).unwrap().value;
        let j = interaction_integral(50.0, 1.0, 5, &spec()).unwrap();
        let ratio = j.value * 50f64.powi(3) / b0;
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
        let a = interaction_integral(7.0, 2.5, 5, &spec()).unwrap();
        let b = interaction_integral(17.5, 1.0, 5, &spec()).unwrap();
        assert!((a.value / b.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interaction_swap_symmetry() {
        let ts = two_star(6);
        for d in [0.5, 3.0, 20.0] {
            let a = pair_integral(d, 6, ts - 1.0, 1.0, &spec()).unwrap();
            let b = pair_integral(d, 6, 1.0, ts - 1.0, &spec()).unwrap();
            assert!((a.value / b.value - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn moment_limits() {
        let n = 5;
        let m0 = bubble_moment(n, 0.0, Normalization::Bubble, 1e-13).unwrap().value;
        let flat = moment_integral(40.0, 30.0, 0.0, 1.0, n, &spec()).unwrap();
        assert!((flat.value / m0 - 1.0).abs() < 1e-9);
        let a2 = bubble_moment(n, 2.0, Normalization::Bubble, 1e-13).unwrap().value;
        let big = moment_integral(1e3, 1e3, 2.0, 1.0, n, &spec()).unwrap();
        assert!((big.value / a2 - 1.0).abs() < 0.01, "{} {}", big.value, a2);
        // second difference in rhat at shift = 1e3
        let e = 0.5;
        let f = |dr: f64| moment_integral(1e3, 1e3 + dr, 2.0, 1.0, n, &spec()).unwrap().value;
        let second = (f(e) - 2.0 * f(0.0) + f(-e)) / (e * e);
        assert!((second / (2.0 * m0) - 1.0).abs() < 0.05, "{second}");
    }

    #[test]
    fn proposal_mass_matches_quadrature() {
        let s = Strata::default();
        let p = Proposal::new(5, 1.0, &s);
        let q = integrate(|t: f64| t.powi(4) * (1.0 + t * t).powi(-5), 0.0, 10.0, &Tolerance::new(1e-15, 1e-13))
            .unwrap();
        assert!((p.mass_in / (sphere_area(4) * q.value) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partner_distance_counts() {
        let params = crate::params::ModelParams::default();
        for k in [2usize, 3, 7, 12] {
            let cfg = Configuration::new(5.0, 0.3, 1.0, params.at_k(k)).unwrap();
            let total: usize = partner_distances(&cfg).iter().map(|p| p.1).sum();
            assert_eq!(total, 2 * k - 1);
        }
    }
}
