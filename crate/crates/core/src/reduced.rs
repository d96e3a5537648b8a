//! The leading-order reduced energy `F1(r, h, Lambda)`, its gradient, the
//! height function `G(h)`, the critical-point solver and the boundary sign
//! checks that keep the minimax flow inside the shrinking box.

use nalgebra::{Matrix3, Vector3};

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::geometry::{AdmissibleBox, Configuration};
use crate::numeric::least_squares;
use crate::params::ModelParams;

/// Additive pieces of `F1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedEnergyTerms {
    pub a1_term: f64,
    pub ring_term: f64,
    pub cross_term: f64,
    pub a2_term: f64,
    pub a3_term: f64,
    pub total: f64,
}

fn check_table(params: &ModelParams, table: &ConstantsTable) -> Result<()> {
    if params.n != table.n || params.m != table.m {
        return Err(Error::InvalidParams(format!(
            "constants for (N, m) = ({}, {}) used with ({}, {})",
            table.n, table.m, params.n, params.m
        )));
    }
    Ok(())
}

/// `F1 = kA1 - (k/L^{N-2})[B4 k^{N-2}/(r s)^{N-2} + B5 k/(r^{N-2} h^{N-3} s)]
///     + k[A2/(L^m rhat^m) + A3 (rhat-r)^2/(L^{m-2} rhat^m)]`, `s = sqrt(1-h^2)`.
pub fn f1_eval(cfg: &Configuration, table: &ConstantsTable) -> Result<ReducedEnergyTerms> {
    cfg.validate()?;
    check_table(&cfg.params, table)?;
    let nf = cfg.params.n as f64;
    let m = cfg.params.m;
    let kf = cfg.params.k as f64;
    let rhat = cfg.rhat();
    let (r, h, lam) = (cfg.r, cfg.h, cfg.lambda);
    let s = cfg.planar_factor();
    let pre = kf / lam.powf(nf - 2.0);
    let ring_term = pre * table.b4 * kf.powf(nf - 2.0) / (r * s).powf(nf - 2.0);
    let cross_term = pre * table.b5 * kf / (r.powf(nf - 2.0) * h.powf(nf - 3.0) * s);
    let rm = rhat.powf(m);
    let a1_term = kf * table.a1;
    let a2_term = kf * table.a2 / (lam.powf(m) * rm);
    let a3_term = kf * table.a3 * (rhat - r).powi(2) / (lam.powf(m - 2.0) * rm);
    Ok(ReducedEnergyTerms {
        a1_term,
        ring_term,
        cross_term,
        a2_term,
        a3_term,
        total: a1_term - ring_term - cross_term + a2_term + a3_term,
    })
}

/// Closed-form `(dF1/dr, dF1/dh, dF1/dLambda)`.
pub fn grad_f1(cfg: &Configuration, table: &ConstantsTable) -> Result<[f64; 3]> {
    grad_with_offset(cfg, table, cfg.rhat() - cfg.r)
}

/// As [`grad_f1`] with `rhat - r` supplied, which keeps full precision
/// when `rhat` is large.
fn grad_with_offset(cfg: &Configuration, table: &ConstantsTable, offset: f64) -> Result<[f64; 3]> {
    let mut t = f1_eval(cfg, table)?;
    let nf = cfg.params.n as f64;
    let m = cfg.params.m;
    let kf = cfg.params.k as f64;
    let rhat = cfg.rhat();
    let (r, h, lam) = (cfg.r, cfg.h, cfg.lambda);
    let q = 1.0 - h * h;
    t.a3_term = kf * table.a3 * offset * offset / (lam.powf(m - 2.0) * rhat.powf(m));
    let inter = t.ring_term + t.cross_term;
    let dr = (nf - 2.0) * inter / r
        - 2.0 * kf * table.a3 * offset / (lam.powf(m - 2.0) * rhat.powf(m));
    let dh = -t.ring_term * (nf - 2.0) * h / q - t.cross_term * (h / q - (nf - 3.0) / h);
    let dl = ((nf - 2.0) * inter - m * t.a2_term - (m - 2.0) * t.a3_term) / lam;
    Ok([dr, dh, dl])
}

/// `G(h)` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValues {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
}

/// `G(h) = B4 k^{N-2} (1-h^2)^{-(N-2)/2} + B5 k h^{-(N-3)} (1-h^2)^{-1/2}`.
pub fn g_eval(h: f64, k: usize, table: &ConstantsTable) -> Result<GValues> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("h = {h} must lie in (0, 1)")));
    }
    let nf = table.n as f64;
    let kf = k as f64;
    let q = 1.0 - h * h;
    let a = table.b4 * kf.powf(nf - 2.0);
    let b = table.b5 * kf;
    let g = a * q.powf(-(nf - 2.0) / 2.0) + b * h.powf(-(nf - 3.0)) * q.powf(-0.5);
    let dg = (nf - 2.0) * a * h * q.powf(-nf / 2.0) - (nf - 3.0) * b * h.powf(-(nf - 2.0)) * q.powf(-0.5)
        + b * h.powf(-(nf - 4.0)) * q.powf(-1.5);
    let d2g = (nf - 2.0) * a * (q.powf(-nf / 2.0) + nf * h * h * q.powf(-nf / 2.0 - 1.0))
        + (nf - 3.0) * (nf - 2.0) * b * h.powf(-(nf - 1.0)) * q.powf(-0.5)
        - (nf - 3.0) * b * h.powf(-(nf - 3.0)) * q.powf(-1.5)
        - (nf - 4.0) * b * h.powf(-(nf - 3.0)) * q.powf(-1.5)
        + 3.0 * b * h.powf(-(nf - 5.0)) * q.powf(-2.5);
    Ok(GValues { g, dg, d2g })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    Newton,
    /// Explicit flow descending in `r` and ascending in `h` and `Lambda`.
    GradientFlow,
}

/// Which box decides `in_box`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxChoice {
    /// Half-widths `sigma_hat` in `r`, `h/hhat` and `Lambda`.
    Fixed(f64),
    /// The `k^{-theta_bar}` box.
    Shrinking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSpec {
    pub method: SolverMethod,
    /// Target for the sup norm of the scaled gradient.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Initial flow step in scaled coordinates.
    pub flow_step: f64,
    pub box_choice: BoxChoice,
    pub theta_bar: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            method: SolverMethod::Newton,
            tol: 1e-10,
            max_iter: 100,
            armijo: 1e-4,
            max_halvings: 30,
            flow_step: 0.1,
            box_choice: BoxChoice::Shrinking,
            theta_bar: 0.05,
        }
    }
}

impl SolverSpec {
    pub fn admissible_box(&self, k: usize) -> AdmissibleBox {
        match self.box_choice {
            BoxChoice::Fixed(s) => AdmissibleBox::fixed(s),
            BoxChoice::Shrinking => AdmissibleBox::shrinking(k, self.theta_bar),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub k: usize,
    pub r_star: f64,
    pub h_star: f64,
    pub lambda_star: f64,
    /// Sup norm of the scaled gradient at the returned point.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub in_box: bool,
    /// `true` when Newton handed over to the flow.
    pub fell_back: bool,
}

impl CriticalPoint {
    /// `h* k^{(N-3)/(N-1)}`, which tends to `B'`.
    pub fn h_scaled(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.h_star * (self.k as f64).powf((nf - 3.0) / (nf - 1.0))
    }
}

/// Gradient in coordinates `(r - rhat, h / hhat, Lambda)`, divided by `k A2 / rhat^m`.
struct Scaled<'a> {
    params: ModelParams,
    table: &'a ConstantsTable,
    rhat: f64,
    hhat: f64,
    unit: f64,
}

impl<'a> Scaled<'a> {
    fn new(params: ModelParams, table: &'a ConstantsTable) -> Self {
        let rhat = params.rhat();
        Self {
            params,
            table,
            rhat,
            hhat: table.hhat(params.k),
            unit: params.k as f64 * table.a2 / rhat.powf(params.m),
        }
    }

    fn cfg(&self, x: &Vector3<f64>) -> Configuration {
        Configuration {
            r: self.rhat + x[0],
            h: x[1] * self.hhat,
            lambda: x[2],
            params: self.params,
        }
    }

    fn valid(&self, x: &Vector3<f64>) -> bool {
        self.cfg(x).validate().is_ok() && x.iter().all(|v| v.is_finite())
    }

    fn grad(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let g = grad_with_offset(&self.cfg(x), self.table, -x[0])?;
        Ok(Vector3::new(g[0], g[1] * self.hhat, g[2]) / self.unit)
    }

    fn jacobian(&self, x: &Vector3<f64>) -> Result<Matrix3<f64>> {
        let mut j = Matrix3::zeros();
        for c in 0..3 {
            let step = 1e-6 * x[c].abs().max(1.0);
            let mut xp = *x;
            let mut xm = *x;
            xp[c] += step;
            xm[c] -= step;
            let col = (self.grad(&xp)? - self.grad(&xm)?) / (2.0 * step);
            j.set_column(c, &col);
        }
        Ok(j)
    }
}

/// Damped Newton (or the signed flow) from `(rhat, hhat, Lambda0)`.
pub fn solve_critical(
    k: usize,
    params: &ModelParams,
    table: &ConstantsTable,
    spec: &SolverSpec,
) -> Result<CriticalPoint> {
    let p = params.at_k(k);
    let start = (p.rhat(), table.hhat(k), table.lambda0);
    solve_critical_from(k, params, table, spec, start)
}

/// As [`solve_critical`] from an explicit `(r, h, Lambda)`.
pub fn solve_critical_from(
    k: usize,
    params: &ModelParams,
    table: &ConstantsTable,
    spec: &SolverSpec,
    start: (f64, f64, f64),
) -> Result<CriticalPoint> {
    let p = params.at_k(k);
    p.validate()?;
    check_table(&p, table)?;
    if !(spec.tol > 0.0) {
        return Err(Error::InvalidParams("solver tolerance must be positive".into()));
    }
    let sc = Scaled::new(p, table);
    let mut x = Vector3::new(start.0 - sc.rhat, start.1 / sc.hhat, start.2);
    if !sc.valid(&x) {
        return Err(Error::Domain("solver start lies outside the domain".into()));
    }
    let mut g = sc.grad(&x)?;
    let mut method = spec.method;
    let mut fell_back = false;
    let mut eta = spec.flow_step;
    let mut iterations = 0;
    let signs = Vector3::new(-1.0, 1.0, 1.0);
    while iterations < spec.max_iter && g.amax() > spec.tol {
        iterations += 1;
        match method {
            SolverMethod::Newton => {
                let step = sc.jacobian(&x)?.lu().solve(&(-g)).filter(|d| d.iter().all(|v| v.is_finite()));
                let Some(d) = step else {
                    method = SolverMethod::GradientFlow;
                    fell_back = true;
                    continue;
                };
                let phi0 = 0.5 * g.norm_squared();
                let mut alpha = 1.0;
                let mut accepted = None;
                for _ in 0..=spec.max_halvings {
                    let xt = x + d * alpha;
                    if sc.valid(&xt) {
                        let gt = sc.grad(&xt)?;
                        if 0.5 * gt.norm_squared() <= (1.0 - 2.0 * spec.armijo * alpha) * phi0 {
                            accepted = Some((xt, gt));
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                match accepted {
                    Some((xt, gt)) => {
                        x = xt;
                        g = gt;
                    }
                    None => {
                        method = SolverMethod::GradientFlow;
                        fell_back = true;
                    }
                }
            }
            SolverMethod::GradientFlow => {
                let xt = x + signs.component_mul(&g) * eta;
                let gt = if sc.valid(&xt) { Some(sc.grad(&xt)?) } else { None };
                match gt {
                    Some(gt) if gt.norm() < g.norm() => {
                        x = xt;
                        g = gt;
                        eta = (eta * 1.5).min(spec.flow_step * 16.0);
                    }
                    _ => {
                        eta *= 0.5;
                        if eta < 1e-14 {
                            break;
                        }
                    }
                }
            }
        }
    }
    let cfg = sc.cfg(&x);
    let bx = spec.admissible_box(k);
    Ok(CriticalPoint {
        k,
        r_star: cfg.r,
        h_star: cfg.h,
        lambda_star: cfg.lambda,
        residual_norm: g.amax(),
        iterations,
        converged: g.amax() <= spec.tol,
        in_box: bx.contains(cfg.r, cfg.h, cfg.lambda, sc.rhat, sc.hhat, table.lambda0),
        fell_back,
    })
}

/// The two energy levels of the minimax argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Levels {
    pub t1: f64,
    pub t2: f64,
}

/// `t1 = k(-A1 - (A2/L0^m - B4/L0^{N-2}) k^{-a} - k^{-a - 5 tb/2})`, `t2 = k(-A1 + A1/10)`,
/// with `a = (N-2)m/(N-2-m)`.
pub fn levels(k: usize, n: usize, m: f64, table: &ConstantsTable, theta_bar: f64) -> Levels {
    let nf = n as f64;
    let kf = k as f64;
    let a = (nf - 2.0) * m / (nf - 2.0 - m);
    let l0 = table.lambda0;
    let t1 = kf
        * (-table.a1
            - (table.a2 / l0.powf(m) - table.b4 / l0.powf(nf - 2.0)) / kf.powf(a)
            - 1.0 / kf.powf(a + 2.5 * theta_bar));
    Levels {
        t1,
        t2: kf * (-table.a1 + table.a1 / 10.0),
    }
}

/// One boundary condition of the flow argument.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub name: &'static str,
    /// The evaluated quantity (a derivative of `-F1`, or `-F1 - t1`).
    pub value: f64,
    /// Required sign of `value`.
    pub want_positive: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub k: usize,
    pub theta_bar: f64,
    pub conditions: Vec<BoundaryCondition>,
    pub levels: Levels,
    /// `d(-F1)/dh` at `(rhat, hhat, Lambda0)`.
    pub interior_dh: f64,
    pub interior_below_boundaries: bool,
}

impl BoundaryReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

/// Signs of `-F1`'s derivatives on the faces of the shrinking box and the
/// level condition on its `r` faces.
pub fn boundary_sign_check(
    k: usize,
    params: &ModelParams,
    table: &ConstantsTable,
    spec: &SolverSpec,
) -> Result<BoundaryReport> {
    let p = params.at_k(k);
    check_table(&p, table)?;
    let tb = spec.theta_bar;
    let kf = k as f64;
    let (rhat, hhat, l0) = (p.rhat(), table.hhat(k), table.lambda0);
    let dh = kf.powf(-tb);
    let dl = kf.powf(-1.5 * tb);
    let at = |r: f64, h: f64, lambda: f64| Configuration {
        r,
        h,
        lambda,
        params: p,
    };
    let grad_bar = |c: Configuration| -> Result<[f64; 3]> {
        let g = grad_f1(&c, table)?;
        Ok([-g[0], -g[1], -g[2]])
    };
    let lv = levels(k, p.n, p.m, table, tb);
    let mut conditions = Vec::new();
    let mut push = |name, value: f64, want_positive: bool| {
        let passed = value.is_finite() && if want_positive { value > 0.0 } else { value < 0.0 };
        conditions.push(BoundaryCondition {
            name,
            value,
            want_positive,
            passed,
        });
    };
    push("h_lower", grad_bar(at(rhat, hhat * (1.0 - dh), l0))?[1], false);
    push("h_upper", grad_bar(at(rhat, hhat * (1.0 + dh), l0))?[1], true);
    push("lambda_upper", grad_bar(at(rhat, hhat, l0 + dl))?[2], true);
    let lower = at(rhat, hhat, l0 - dl);
    let v = if lower.validate().is_ok() {
        grad_bar(lower)?[2]
    } else {
        f64::NAN
    };
    push("lambda_lower", v, false);
    let fbar = |r: f64| -> Result<f64> { Ok(-f1_eval(&at(r, hhat, l0), table)?.total) };
    let worst = (fbar(rhat + dh)? - lv.t1).max(fbar(rhat - dh)? - lv.t1);
    push("r_level", worst, false);
    let interior_dh = grad_bar(at(rhat, hhat, l0))?[1];
    let bound = conditions[0].value.abs().min(conditions[1].value.abs());
    Ok(BoundaryReport {
        k,
        theta_bar: tb,
        conditions,
        levels: lv,
        interior_dh,
        interior_below_boundaries: interior_dh.abs() < bound,
    })
}

/// `F` rewritten around `(rhat, hhat)` with `B6`, `B7`:
/// `kA1 - (k/L^{N-2})[B4 k^{-a} + (B6 + B7 (1-h/hhat)^2) k^{-a-b}] + k[A2/(L^m k^a) + A3 (rhat-r)^2/(L^{m-2} k^a)]`,
/// `a = (N-2)m/(N-2-m)`, `b = 2(N-3)/(N-1)`. Returns this minus `F1`.
/// Only the interaction parts differ (`rhat^m = k^a`), so the difference is
/// taken there to avoid cancelling against `kA1`.
pub fn taylor_form_eval(cfg: &Configuration, table: &ConstantsTable) -> Result<f64> {
    let f1 = f1_eval(cfg, table)?;
    let p = &cfg.params;
    let nf = p.n as f64;
    let kf = p.k as f64;
    let a = (nf - 2.0) * p.m / (nf - 2.0 - p.m);
    let b = 2.0 * (nf - 3.0) / (nf - 1.0);
    let delta = 1.0 - cfg.h / table.hhat(p.k);
    let inter = (table.b4 / kf.powf(a) + (table.b6 + table.b7 * delta * delta) / kf.powf(a + b))
        / cfg.lambda.powf(nf - 2.0);
    Ok((f1.ring_term + f1.cross_term) - kf * inter)
}

/// Least-squares cubic through `(x, y)`; returns coefficients and `R^2`.
pub fn cubic_fit(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let cols: Vec<Vec<f64>> = (1..=3).map(|p| x.iter().map(|v| v.powi(p)).collect()).collect();
    let (beta, resid) = least_squares(&cols, y)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = resid.iter().map(|e| e * e).sum();
    Ok((beta, if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 }))
}
