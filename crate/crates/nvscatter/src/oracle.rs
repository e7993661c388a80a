//! Direct pseudospectral integration of mNV and NV, used to corroborate the
//! inverse-scattering pipelines at short times, plus strong and weak
//! residuals of candidate trajectories.
//!
//! mNV:  u_t = -(d^3 + dbar^3) u - NL(u),
//!   NL(u) = -3/4 [du S(|u|^2) + dbar u Sb(|u|^2) + u S(conj(u) du) + u Sb(conj(u) dbar u)]
//! NV:   q_t = -(d^3 + dbar^3) q + 3/4 [d(q S q) + dbar(q Sb q)]
//! with S = d dbar^{-1} and Sb = dbar d^{-1}.

use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::Grid;
use crate::spectral::{dealiased_mul, Spectral, Symbol};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    Mnv,
    Nv,
}

/// Which inverse of dbar/d sits inside S and Sb.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernels {
    /// Truncated-kernel planar transforms (decaying data).
    Plane,
    /// Periodic transforms with the zero mode removed.
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Model {
    pub equation: Equation,
    pub kernels: Kernels,
    pub dealias: bool,
    /// With false the flow is purely linear.
    pub nonlinear: bool,
}

impl Model {
    pub fn new(equation: Equation) -> Self {
        Model { equation, kernels: Kernels::Plane, dealias: true, nonlinear: true }
    }

    fn mul(&self, f: &ComplexField, g: &ComplexField) -> ComplexField {
        if self.dealias {
            dealiased_mul(f, g)
        } else {
            f * g
        }
    }

    fn s(&self, f: &ComplexField) -> ComplexField {
        let sym = match self.kernels {
            Kernels::Plane => Symbol::BeurlingPlane,
            Kernels::Periodic => Symbol::Beurling,
        };
        Spectral::for_grid(f.grid()).apply(f, sym)
    }

    fn sb(&self, f: &ComplexField) -> ComplexField {
        let sym = match self.kernels {
            Kernels::Plane => Symbol::BeurlingBarPlane,
            Kernels::Periodic => Symbol::BeurlingBar,
        };
        Spectral::for_grid(f.grid()).apply(f, sym)
    }

    /// The nonlinear part N of u_t = L u + N(u).
    pub fn nonlinear(&self, u: &ComplexField) -> ComplexField {
        if !self.nonlinear {
            return ComplexField::zeros(*u.grid());
        }
        let sp = Spectral::for_grid(u.grid());
        match self.equation {
            Equation::Mnv => nl_mnv(self, u).scale_re(-1.0),
            Equation::Nv => {
                let a = self.mul(u, &self.s(u));
                let b = self.mul(u, &self.sb(u));
                (sp.apply(&a, Symbol::D) + sp.apply(&b, Symbol::Dbar)).scale_re(0.75)
            }
        }
    }

    /// -(d^3 + dbar^3) u + N(u).
    pub fn rhs(&self, u: &ComplexField) -> ComplexField {
        linear(u) + &self.nonlinear(u)
    }

    /// Multiplier of the linear part on the transposed spectrum.
    fn linear_symbol(grid: &Grid) -> Vec<C64> {
        let sp = Spectral::for_grid(grid);
        sp.symbol(Symbol::D)
            .iter()
            .zip(sp.symbol(Symbol::Dbar))
            .map(|(b, a)| -(b * b * b + a * a * a))
            .collect()
    }
}

fn nl_mnv(m: &Model, u: &ComplexField) -> ComplexField {
    let sp = Spectral::for_grid(u.grid());
    let du = sp.apply(u, Symbol::D);
    let dbu = sp.apply(u, Symbol::Dbar);
    let ub = u.conj();
    let a2 = m.mul(u, &ub);
    let t1 = m.mul(&du, &m.s(&a2));
    let t2 = m.mul(&dbu, &m.sb(&a2));
    let t3 = m.mul(u, &m.s(&m.mul(&ub, &du)));
    let t4 = m.mul(u, &m.sb(&m.mul(&ub, &dbu)));
    (t1 + &t2 + &t3 + &t4).scale_re(-0.75)
}

/// -(d^3 + dbar^3) u.
pub fn linear(u: &ComplexField) -> ComplexField {
    let sp = Spectral::for_grid(u.grid());
    let d3 = sp.apply_chain(u, &[Symbol::D, Symbol::D, Symbol::D]);
    let db3 = sp.apply_chain(u, &[Symbol::Dbar, Symbol::Dbar, Symbol::Dbar]);
    (d3 + &db3).scale_re(-1.0)
}

/// NL(u) of mNV with planar kernels and dealiased products.
pub fn eval_nl_mnv(u: &ComplexField) -> ComplexField {
    nl_mnv(&Model::new(Equation::Mnv), u)
}

pub fn eval_nl_mnv_with(u: &ComplexField, kernels: Kernels) -> ComplexField {
    nl_mnv(&Model { kernels, ..Model::new(Equation::Mnv) }, u)
}

/// q_t of NV.
pub fn eval_rhs_nv(q: &ComplexField) -> ComplexField {
    Model::new(Equation::Nv).rhs(q)
}

pub fn eval_rhs_nv_with(q: &ComplexField, kernels: Kernels) -> ComplexField {
    Model { kernels, ..Model::new(Equation::Nv) }.rhs(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    EtdRk4,
    Rk4IntegratingFactor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
}

impl StepperConfig {
    /// Enforces dt max|k_spec|^3 <= 1 with |k_spec| = |xi|/2, the modulus
    /// of the d and dbar symbols.
    pub fn new(dt: f64, scheme: Scheme, dealias: bool, grid: &Grid) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Invalid(format!("time step {dt} must be positive")));
        }
        let kmax = max_symbol(grid);
        if dt * kmax.powi(3) > 1.0 {
            return Err(Error::StepTooLarge { dt, kmax });
        }
        Ok(StepperConfig { dt, scheme, dealias })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Largest admissible step on `grid`.
    pub fn max_dt(grid: &Grid) -> f64 {
        1.0 / max_symbol(grid).powi(3)
    }
}

fn max_symbol(grid: &Grid) -> f64 {
    let xi = grid.wavenumbers().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    0.5 * std::f64::consts::SQRT_2 * xi
}

fn spectrum(u: &ComplexField) -> Vec<C64> {
    let sp = Spectral::for_grid(u.grid());
    let mut buf = u.data().to_vec();
    let mut scratch = sp.scratch();
    sp.forward(&mut buf, &mut scratch);
    buf
}

fn physical(grid: &Grid, mut s: Vec<C64>) -> ComplexField {
    let sp = Spectral::for_grid(grid);
    let mut scratch = sp.scratch();
    sp.inverse(&mut s, &mut scratch);
    ComplexField::from_vec(*grid, s)
}

/// Mean of f over M points on the unit circle around c.
fn contour_mean(c: C64, f: impl Fn(C64) -> C64) -> C64 {
    const M: usize = 64;
    (0..M)
        .map(|j| f(c + C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / M as f64)))
        .sum::<C64>()
        / M as f64
}

struct Etd {
    e: Vec<C64>,
    e2: Vec<C64>,
    q: Vec<C64>,
    f1: Vec<C64>,
    f2: Vec<C64>,
    f3: Vec<C64>,
}

impl Etd {
    fn new(lsym: &[C64], h: f64) -> Self {
        let mut s = Etd { e: vec![], e2: vec![], q: vec![], f1: vec![], f2: vec![], f3: vec![] };
        for l in lsym {
            let c = l * h;
            s.e.push(c.exp());
            s.e2.push((c * 0.5).exp());
            s.q.push(contour_mean(c, |r| ((r * 0.5).exp() - 1.0) / r) * h);
            s.f1.push(contour_mean(c, |r| (-4.0 - r + r.exp() * (4.0 - 3.0 * r + r * r)) / (r * r * r)) * h);
            s.f2.push(contour_mean(c, |r| (2.0 + r + r.exp() * (r - 2.0)) / (r * r * r)) * h);
            s.f3.push(contour_mean(c, |r| (-4.0 - 3.0 * r - r * r + r.exp() * (4.0 - r)) / (r * r * r)) * h);
        }
        s
    }
}

fn l2_of(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates u_t = L u + N(u) from 0 to t_end with steps of at most cfg.dt.
pub fn step(u0: &ComplexField, model: &Model, cfg: &StepperConfig, t_end: f64) -> Result<ComplexField> {
    let grid = *u0.grid();
    StepperConfig::new(cfg.dt, cfg.scheme, cfg.dealias, &grid)?;
    if !(t_end >= 0.0) {
        return Err(Error::Invalid(format!("t_end = {t_end} must be nonnegative")));
    }
    if t_end == 0.0 {
        return Ok(u0.clone());
    }
    let model = Model { dealias: cfg.dealias, ..*model };
    let steps = (t_end / cfg.dt).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let lsym = Model::linear_symbol(&grid);
    let nl = |v: &[C64]| spectrum(&model.nonlinear(&physical(&grid, v.to_vec())));
    let mut v = spectrum(u0);
    let norm0 = l2_of(&v).max(f64::MIN_POSITIVE);
    let len = v.len();
    let combine = |a: &[C64], x: &[C64], b: &[C64], y: &[C64]| -> Vec<C64> { (0..len).map(|i| a[i] * x[i] + b[i] * y[i]).collect() };
    match cfg.scheme {
        Scheme::EtdRk4 => {
            let c = Etd::new(&lsym, h);
            for s in 0..steps {
                let nv = nl(&v);
                let a = combine(&c.e2, &v, &c.q, &nv);
                let na = nl(&a);
                let b = combine(&c.e2, &v, &c.q, &na);
                let nb = nl(&b);
                let two_nb_nv: Vec<C64> = nb.iter().zip(&nv).map(|(x, y)| 2.0 * x - y).collect();
                let cc = combine(&c.e2, &a, &c.q, &two_nb_nv);
                let nc = nl(&cc);
                for i in 0..len {
                    v[i] = c.e[i] * v[i] + nv[i] * c.f1[i] + 2.0 * (na[i] + nb[i]) * c.f2[i] + nc[i] * c.f3[i];
                }
                guard(&v, norm0, (s + 1) as f64 * h)?;
            }
        }
        Scheme::Rk4IntegratingFactor => {
            let e: Vec<C64> = lsym.iter().map(|l| (l * h).exp()).collect();
            let e2: Vec<C64> = lsym.iter().map(|l| (l * h * 0.5).exp()).collect();
            for s in 0..steps {
                let k1: Vec<C64> = nl(&v).iter().map(|x| x * h).collect();
                let a: Vec<C64> = (0..len).map(|i| e2[i] * (v[i] + 0.5 * k1[i])).collect();
                let k2: Vec<C64> = nl(&a).iter().map(|x| x * h).collect();
                let b: Vec<C64> = (0..len).map(|i| e2[i] * v[i] + 0.5 * k2[i]).collect();
                let k3: Vec<C64> = nl(&b).iter().map(|x| x * h).collect();
                let c: Vec<C64> = (0..len).map(|i| e[i] * v[i] + e2[i] * k3[i]).collect();
                let k4: Vec<C64> = nl(&c).iter().map(|x| x * h).collect();
                for i in 0..len {
                    v[i] = e[i] * v[i] + (e[i] * k1[i] + 2.0 * e2[i] * (k2[i] + k3[i]) + k4[i]) / 6.0;
                }
                guard(&v, norm0, (s + 1) as f64 * h)?;
            }
        }
    }
    Ok(physical(&grid, v))
}

fn guard(v: &[C64], norm0: f64, t: f64) -> Result<()> {
    let growth = l2_of(v) / norm0;
    if !(growth <= 10.0) {
        return Err(Error::Unstable { t, growth });
    }
    Ok(())
}

pub fn step_mnv(u0: &ComplexField, cfg: &StepperConfig, t_end: f64) -> Result<ComplexField> {
    step(u0, &Model::new(Equation::Mnv), cfg, t_end)
}

pub fn step_nv(q0: &ComplexField, cfg: &StepperConfig, t_end: f64) -> Result<ComplexField> {
    step(q0, &Model::new(Equation::Nv), cfg, t_end)
}

/// Exact solution of the linear flow u_t = -(d^3 + dbar^3) u.
pub fn linear_flow(u0: &ComplexField, t: f64) -> ComplexField {
    let lsym = Model::linear_symbol(u0.grid());
    let v: Vec<C64> = spectrum(u0).iter().zip(&lsym).map(|(v, l)| v * (l * t).exp()).collect();
    physical(u0.grid(), v)
}

fn uniform_spacing(traj: &[(f64, ComplexField)]) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::Invalid("a residual needs at least three time points".into()));
    }
    let dt = traj[1].0 - traj[0].0;
    if !(dt > 0.0) || traj.windows(2).any(|w| ((w[1].0 - w[0].0) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::Invalid("trajectory times must be uniformly spaced".into()));
    }
    Ok(dt)
}

/// max over interior times of ||central u_t - L u - N(u)|| / (||N(u)|| + ||d^3 u||).
pub fn strong_residual(traj: &[(f64, ComplexField)], model: &Model) -> Result<f64> {
    let dt = uniform_spacing(traj)?;
    let mut worst: f64 = 0.0;
    for w in traj.windows(3) {
        let u = &w[1].1;
        let ut = (&w[2].1 - &w[0].1).scale_re(0.5 / dt);
        let n = model.nonlinear(u);
        let res = &ut - &(linear(u) + &n);
        let d3 = Spectral::for_grid(u.grid()).apply_chain(u, &[Symbol::D, Symbol::D, Symbol::D]);
        let scale = n.l2() + d3.l2();
        if scale > 0.0 {
            worst = worst.max(res.l2() / scale);
        } else if res.l2() > 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

/// Time profile sin^4 on [t0, t1], zero outside. All its odd derivatives
/// vanish at both ends, which keeps the trapezoid rule high order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBump {
    pub t0: f64,
    pub t1: f64,
}

impl TimeBump {
    /// (theta(t), theta'(t)).
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if t <= self.t0 || t >= self.t1 {
            return (0.0, 0.0);
        }
        let w = PI / (self.t1 - self.t0);
        let (s, c) = (w * (t - self.t0)).sin_cos();
        (s.powi(4), 4.0 * w * s.powi(3) * c)
    }
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub space: ComplexField,
    pub time: TimeBump,
}

/// Max over the family of |weak pairing| / (sum of the magnitudes of its
/// three terms). Plain bilinear L2 pairing; time integral by the trapezoid
/// rule.
pub fn weak_residual(traj: &[(f64, ComplexField)], model: &Model, family: &[TestFunction]) -> Result<f64> {
    let dt = uniform_spacing(traj)?;
    let mut worst: f64 = 0.0;
    let nl: Vec<ComplexField> = traj.iter().map(|(_, u)| model.nonlinear(u)).collect();
    for tf in family {
        let phi = &tf.space;
        // int theta phi (u_t - L u - N) = A + B + C after moving every
        // derivative onto phi; L = -(d^3 + dbar^3) is anti-self-adjoint
        // under (f, g) = int f g.
        let lphi = linear(phi);
        let (mut a, mut b, mut c) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (i, (t, u)) in traj.iter().enumerate() {
            let wgt = if i == 0 || i + 1 == traj.len() { 0.5 * dt } else { dt };
            let (th, dth) = tf.time.eval(*t);
            a -= phi.pair(u) * (dth * wgt);
            b += lphi.pair(u) * (th * wgt);
            c -= phi.pair(&nl[i]) * (th * wgt);
        }
        let total = a + b + c;
        // a test function orthogonal to the whole trajectory (by symmetry,
        // say) has all three terms at rounding level; the floor keeps the
        // ratio from reporting noise/noise
        let span = traj[traj.len() - 1].0 - traj[0].0;
        let floor = 1e-12 * phi.l2() * traj.iter().map(|(_, u)| u.l2()).fold(0.0, f64::max) * span.max(dt);
        let scale = (a.norm() + b.norm() + c.norm()).max(floor);
        if scale > 0.0 {
            worst = worst.max(total.norm() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miura::Generator;
    use rustfft::FftPlanner;

    fn sample(g: Grid, amp: f64) -> ComplexField {
        ComplexField::from_fn(g, |z| {
            C64::new(amp, 0.5 * amp) * (-(z - C64::new(0.5, 0.3)).norm_sqr()).exp()
                + amp * 0.7 * (-(z + C64::new(0.0, 0.8)).norm_sqr() / 0.8).exp() * C64::new(0.0, z.re).exp()
        })
    }

    #[test]
    fn zero_input() {
        let g = Grid::space(32, 8.0).unwrap();
        let z = ComplexField::zeros(g);
        assert_eq!(eval_nl_mnv(&z).max_abs(), 0.0);
        assert_eq!(eval_rhs_nv(&z).max_abs(), 0.0);
        let cfg = StepperConfig::new(0.01, Scheme::EtdRk4, true, &g).unwrap();
        assert_eq!(step_mnv(&z, &cfg, 0.05).unwrap().max_abs(), 0.0);
        assert_eq!(step_nv(&z, &cfg, 0.05).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn nonlinearity_is_cubic() {
        let g = Grid::space(64, 8.0).unwrap();
        let u = sample(g, 1.0);
        let base = eval_nl_mnv(&u);
        for lam in [0.3, -1.7, 2.5] {
            let diff = (eval_nl_mnv(&u.scale_re(lam)) - &base.scale_re(lam * lam * lam)).l2();
            assert!(diff <= 1e-10 * base.l2() * lam.abs().powi(3), "{lam}: {diff:e}");
        }
    }

    #[test]
    fn nv_rhs_real_for_real_q() {
        let g = Grid::space(128, 8.0).unwrap();
        let q = Generator::Gaussian { amplitude: 0.6, width: 1.0 }.datum(&g).unwrap().q.re();
        for k in [Kernels::Plane, Kernels::Periodic] {
            let rhs = eval_rhs_nv_with(&q, k);
            assert!(rhs.max_im() <= 1e-10 * rhs.max_abs(), "{k:?}");
        }
    }

    fn spectral_dx(v: &[C64], l: f64) -> Vec<C64> {
        let n = v.len();
        let mut planner = FftPlanner::new();
        let (f, b) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
        let mut s = v.to_vec();
        f.process(&mut s);
        for (j, c) in s.iter_mut().enumerate() {
            let m = if j < n / 2 { j as f64 } else if j == n / 2 { 0.0 } else { j as f64 - n as f64 };
            *c *= C64::new(0.0, m * PI / l) / n as f64;
        }
        b.process(&mut s);
        s
    }

    #[test]
    fn kdv_reduction() {
        // y-independent q: d = dbar = dx/2, S q = q - mean, so
        // q_t = -1/4 q_xxx + 3/4 (q (q - mean))_x
        let (n, l) = (64, 8.0);
        let g = Grid::space(n, l).unwrap();
        let prof = |x: f64| 0.8 * (-(x - 0.3) * (x - 0.3) / 1.5).exp() - 0.3 * (-(x + 1.0) * (x + 1.0)).exp();
        let q = ComplexField::from_real_fn(g, |z| prof(z.re));
        let rhs = eval_rhs_nv_with(&q, Kernels::Periodic);
        let x: Vec<C64> = g.coords().iter().map(|&x| C64::new(prof(x), 0.0)).collect();
        let mean = x.iter().sum::<C64>() / n as f64;
        let q3 = spectral_dx(&spectral_dx(&spectral_dx(&x, l), l), l);
        let prod: Vec<C64> = x.iter().map(|v| v * (v - mean)).collect();
        let dprod = spectral_dx(&prod, l);
        let oracle: Vec<C64> = (0..n).map(|i| -0.25 * q3[i] + 0.75 * dprod[i]).collect();
        let scale = oracle.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for iy in 0..n {
            for ix in 0..n {
                assert!((rhs.at(iy, ix) - oracle[ix]).norm() <= 1e-8 * scale, "{} {}", rhs.at(iy, ix), oracle[ix]);
            }
        }
    }

    #[test]
    fn cfl_guard() {
        let g = Grid::space(128, 8.0).unwrap();
        let max = StepperConfig::max_dt(&g);
        assert!(max > 1.5e-4 && max < 2e-4, "{max}");
        assert!(StepperConfig::new(max * 0.99, Scheme::EtdRk4, true, &g).is_ok());
        assert!(matches!(StepperConfig::new(max * 1.01, Scheme::EtdRk4, true, &g), Err(Error::StepTooLarge { .. })));
        assert!(StepperConfig::new(-1.0, Scheme::EtdRk4, true, &g).is_err());
    }

    #[test]
    fn linear_regime_matches_exact_flow() {
        let g = Grid::space(32, 8.0).unwrap();
        let u0 = sample(g, 1e-6);
        let exact = linear_flow(&u0, 0.1);
        for scheme in [Scheme::EtdRk4, Scheme::Rk4IntegratingFactor] {
            let cfg = StepperConfig::new(0.01, scheme, true, &g).unwrap();
            let u = step_mnv(&u0, &cfg, 0.1).unwrap();
            assert!(u.rel_l2_error(&exact) <= 1e-8, "{scheme:?}");
        }
    }

    #[test]
    fn fourth_order() {
        let g = Grid::space(32, 8.0).unwrap();
        let u0 = sample(g, 1.0);
        for scheme in [Scheme::EtdRk4, Scheme::Rk4IntegratingFactor] {
            let run = |dt: f64| step_mnv(&u0, &StepperConfig::new(dt, scheme, true, &g).unwrap(), 0.2).unwrap();
            let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
            let ratio = (&a - &b).l2() / (&b - &c).l2();
            assert!((12.0..=20.0).contains(&ratio), "{scheme:?}: {ratio}");
        }
    }

    #[test]
    fn mass_conserved() {
        let g = Grid::space(128, 8.0).unwrap();
        let u0 = Generator::TwoBump { amplitude: 0.5, width: 0.9, separation: 1.6 }.datum(&g).unwrap().u;
        let cfg = StepperConfig::new(StepperConfig::max_dt(&g), Scheme::EtdRk4, true, &g).unwrap();
        let t = 0.05;
        let u = step_mnv(&u0, &cfg, t).unwrap();
        let drift = (u.integral() - u0.integral()).norm();
        assert!(drift <= 1e-8 * t * u0.l1().max(1.0), "{drift:e}");
    }

    #[test]
    fn unstable_detected() {
        let g = Grid::space(32, 8.0).unwrap();
        let u0 = sample(g, 40.0);
        let cfg = StepperConfig::new(0.01, Scheme::Rk4IntegratingFactor, false, &g).unwrap();
        assert!(matches!(step_mnv(&u0, &cfg, 1.0), Err(Error::Unstable { .. })));
    }

    #[test]
    fn strong_residual_of_linear_flow_is_second_order() {
        let g = Grid::space(32, 8.0).unwrap();
        let u0 = sample(g, 1.0);
        let model = Model { nonlinear: false, ..Model::new(Equation::Mnv) };
        let traj = |dt: f64| (0..3).map(|i| (0.05 + i as f64 * dt, linear_flow(&u0, 0.05 + i as f64 * dt))).collect::<Vec<_>>();
        let a = strong_residual(&traj(0.01), &model).unwrap();
        let b = strong_residual(&traj(0.005), &model).unwrap();
        assert!((3.5..=4.5).contains(&(a / b)), "{a} {b}");
        let zero: Vec<_> = (0..3).map(|i| (i as f64, ComplexField::zeros(g))).collect();
        assert_eq!(strong_residual(&zero, &Model::new(Equation::Mnv)).unwrap(), 0.0);
        assert!(strong_residual(&zero[..2], &model).is_err());
    }

    #[test]
    fn weak_residual_of_stepped_solution() {
        let g = Grid::space(32, 8.0).unwrap();
        let u0 = sample(g, 0.8);
        let model = Model::new(Equation::Mnv);
        let cfg = StepperConfig::new(0.0025, Scheme::EtdRk4, true, &g).unwrap();
        let dt = 0.005;
        let mut traj = vec![(0.0, u0.clone())];
        for i in 1..=20 {
            let u = step(&traj[i - 1].1, &model, &cfg, dt).unwrap();
            traj.push((i as f64 * dt, u));
        }
        let family: Vec<TestFunction> = [C64::new(0.0, 0.0), C64::new(1.0, 0.5), C64::new(-0.7, 0.2)]
            .iter()
            .map(|&c| TestFunction {
                space: ComplexField::from_real_fn(g, |z| (-(z - c).norm_sqr() / 0.6).exp()),
                time: TimeBump { t0: 0.0, t1: 0.1 },
            })
            .collect();
        let weak = weak_residual(&traj, &model, &family).unwrap();
        let strong = strong_residual(&traj, &model).unwrap();
        assert!(weak <= 1e-4, "{weak:e}");
        assert!(weak <= 10.0 * strong.max(1e-12), "{weak:e} {strong:e}");
        // a wrong equation is detected
        let wrong = weak_residual(&traj, &Model { nonlinear: false, ..model }, &family).unwrap();
        assert!(wrong > 100.0 * weak);
        let zero: Vec<_> = (0..3).map(|i| (i as f64, ComplexField::zeros(g))).collect();
        assert_eq!(weak_residual(&zero, &model, &family).unwrap(), 0.0);
    }
}
