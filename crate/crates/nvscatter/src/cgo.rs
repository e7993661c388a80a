//! Antilinear dbar systems for CGO solutions.
//!
//! Both the z-plane system for (mu1, mu2) and the k-plane system for
//! (nu1, nu2) have the form  dbar w1 = 1/2 c conj(w2),  dbar w2 = 1/2 c conj(w1)
//! with w -> (1, 0).  Writing T psi = 1/2 P(c conj psi) this is
//! w1 = 1 + T^2 w1, w2 = T w1.
//!
//! P is the truncated-kernel Cauchy transform, which is the planar inverse
//! of dbar on the region where the solution is consumed.

use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::Grid;
use crate::krylov::gmres;
use crate::spectral::{ek_phase, Spectral, Symbol};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Neumann,
    /// Restarted GMRES on the realified system.
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: Strategy,
    /// Largest |t(k)/conj(k)| tolerated next to k = 0 in the Schrodinger
    /// dbar problem.
    pub small_k_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, max_iter: 200, strategy: Strategy::Neumann, small_k_bound: 1e4 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.small_k_bound > 0.0) {
            return Err(Error::Invalid(format!(
                "solver tol = {}, max_iter = {} and small_k_bound = {} must be positive",
                self.tol, self.max_iter, self.small_k_bound
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgoKind {
    /// z-plane solution at spectral parameter k.
    Mu,
    /// k-plane solution at spatial point z.
    Nu,
}

#[derive(Clone, Debug)]
pub struct CgoSolution {
    pub kind: CgoKind,
    pub param: C64,
    pub first: ComplexField,
    pub second: ComplexField,
    pub iterations: usize,
    pub residual: f64,
}

/// psi -> scale * P(coef * conj(psi)) with the truncated-kernel P.
pub struct Kernel {
    sp: Arc<Spectral>,
    coef: Vec<C64>,
    factor: C64,
    zero: bool,
}

impl Kernel {
    pub fn new(grid: &Grid, coef: Vec<C64>, scale: f64) -> Kernel {
        let zero = coef.iter().all(|c| *c == C64::new(0.0, 0.0));
        Kernel { sp: Spectral::for_grid(grid), coef, factor: C64::new(scale, 0.0), zero }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn apply(&self, psi: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        if self.zero {
            out.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
            return;
        }
        for ((o, c), p) in out.iter_mut().zip(&self.coef).zip(psi) {
            *o = c * p.conj();
        }
        self.sp.apply_in_place(out, Symbol::InvDbarPlane, self.factor, scratch);
    }
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Outcome of w = 1 + L w.
pub struct FixedPoint {
    pub w: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves w = 1 + L(w) for a real-linear L, Neumann first with fallback to
/// GMRES when the defect shrinks by less than 5% per sweep.
pub fn solve_fixed_point<F>(mut lop: F, len: usize, cfg: &SolverConfig, param: C64) -> Result<FixedPoint>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let one = C64::new(1.0, 0.0);
    let mut w = vec![one; len];
    let mut lw = vec![C64::new(0.0, 0.0); len];
    let mut iterations = 0;
    if cfg.strategy == Strategy::Neumann {
        let mut last = f64::INFINITY;
        let mut slow = 0;
        loop {
            lop(&w, &mut lw);
            iterations += 1;
            // defect of the current iterate: 1 + L w - w
            let mut dnorm = 0.0;
            for (wi, li) in w.iter_mut().zip(&lw) {
                let next = one + li;
                dnorm += (next - *wi).norm_sqr();
                *wi = next;
            }
            let res = dnorm.sqrt() / l2(&w).max(1e-300);
            if res <= cfg.tol {
                return Ok(FixedPoint { w, iterations, residual: res });
            }
            if !res.is_finite() {
                return Err(Error::NonConvergence { param, iterations, residual: res });
            }
            slow = if res > 0.95 * last { slow + 1 } else { 0 };
            last = res;
            if slow >= 3 || iterations >= cfg.max_iter {
                if iterations >= cfg.max_iter {
                    return Err(Error::NonConvergence { param, iterations, residual: res });
                }
                break;
            }
        }
    }
    let rhs = vec![one; len];
    let budget = cfg.max_iter.saturating_sub(iterations).max(1);
    let out = gmres(
        |v, o| {
            lop(v, o);
            for (oi, vi) in o.iter_mut().zip(v) {
                *oi = vi - *oi;
            }
        },
        &rhs,
        &mut w,
        cfg.tol * 0.5,
        40,
        budget,
    );
    iterations += out.iterations;
    // report the fixed-point defect in the same normalisation as Neumann
    lop(&w, &mut lw);
    let mut dnorm = 0.0;
    for (wi, li) in w.iter().zip(&lw) {
        dnorm += (one + li - wi).norm_sqr();
    }
    let res = dnorm.sqrt() / l2(&w).max(1e-300);
    if res <= cfg.tol * 10.0 && out.converged {
        Ok(FixedPoint { w, iterations, residual: res })
    } else {
        Err(Error::NonConvergence { param, iterations, residual: res })
    }
}

/// Solves the two-component system for coefficient `coef` on `grid`.
/// With `want_second` false only w1 is returned (second left at zero).
pub fn solve_system(
    grid: &Grid,
    coef: Vec<C64>,
    cfg: &SolverConfig,
    param: C64,
    want_second: bool,
) -> Result<(Vec<C64>, Vec<C64>, usize, f64)> {
    cfg.validate()?;
    let len = grid.len();
    let t = Kernel::new(grid, coef, 0.5);
    if t.is_zero() {
        return Ok((vec![C64::new(1.0, 0.0); len], vec![C64::new(0.0, 0.0); len], 1, 0.0));
    }
    let mut scratch = Spectral::for_grid(grid).scratch();
    let mut mid = vec![C64::new(0.0, 0.0); len];
    let fp = solve_fixed_point(
        |v, o| {
            t.apply(v, &mut mid, &mut scratch);
            t.apply(&mid, o, &mut scratch);
        },
        len,
        cfg,
        param,
    )?;
    let mut second = vec![C64::new(0.0, 0.0); len];
    let mut residual = fp.residual;
    if want_second {
        t.apply(&fp.w, &mut second, &mut scratch);
        let mut tt = vec![C64::new(0.0, 0.0); len];
        t.apply(&second, &mut tt, &mut scratch);
        let d: f64 = fp
            .w
            .iter()
            .zip(&tt)
            .map(|(w, x)| (w - C64::new(1.0, 0.0) - x).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residual = d / l2(&fp.w);
    }
    Ok((fp.w, second, fp.iterations, residual))
}

/// T psi = 1/2 P(e_k u conj(psi)).
pub fn apply_t(u: &ComplexField, k: C64, psi: &ComplexField) -> ComplexField {
    let g = *u.grid();
    let coef = (&ek_phase(&g, k) * u).into_data();
    let t = Kernel::new(&g, coef, 0.5);
    let mut out = vec![C64::new(0.0, 0.0); g.len()];
    let mut scratch = Spectral::for_grid(&g).scratch();
    t.apply(psi.data(), &mut out, &mut scratch);
    ComplexField::from_vec(g, out)
}

/// Coefficient e_k u of the z-plane system.
pub fn mu_coefficient(u: &ComplexField, k: C64) -> Vec<C64> {
    (&ek_phase(u.grid(), k) * u).into_data()
}

/// Coefficient -e_k(z) conj(r) of the k-plane system.
pub fn nu_coefficient(r: &ComplexField, z: C64) -> Vec<C64> {
    let e = ek_phase(r.grid(), z);
    e.data().iter().zip(r.data()).map(|(e, r)| -e * r.conj()).collect()
}

/// (mu1, mu2) at spectral parameter k for potential u.
pub fn solve_mu(u: &ComplexField, k: C64, cfg: &SolverConfig) -> Result<CgoSolution> {
    let g = *u.grid();
    let (a, b, iterations, residual) = solve_system(&g, mu_coefficient(u, k), cfg, k, true)?;
    Ok(CgoSolution {
        kind: CgoKind::Mu,
        param: k,
        first: ComplexField::from_vec(g, a),
        second: ComplexField::from_vec(g, b),
        iterations,
        residual,
    })
}

/// (nu1, nu2) at spatial point z for scattering data r on a k-grid.
pub fn solve_nu(r: &ComplexField, z: C64, cfg: &SolverConfig) -> Result<CgoSolution> {
    let g = *r.grid();
    let (a, b, iterations, residual) = solve_system(&g, nu_coefficient(r, z), cfg, z, true)?;
    Ok(CgoSolution {
        kind: CgoKind::Nu,
        param: z,
        first: ComplexField::from_vec(g, a),
        second: ComplexField::from_vec(g, b),
        iterations,
        residual,
    })
}

/// Leading 1/w coefficients of first - 1 and second, from
/// first - 1 ~ (1/(2 pi w)) Int c conj(second),  second ~ (1/(2 pi w)) Int c conj(first).
/// `potential` is u for Mu solutions and r for Nu solutions.
pub fn large_param_check(sol: &CgoSolution, potential: &ComplexField) -> (C64, C64) {
    let coef = match sol.kind {
        CgoKind::Mu => mu_coefficient(potential, sol.param),
        CgoKind::Nu => nu_coefficient(potential, sol.param),
    };
    let coef = ComplexField::from_vec(*potential.grid(), coef);
    let s = 1.0 / (2.0 * std::f64::consts::PI);
    (coef.pair(&sol.second.conj()) * s, coef.pair(&sol.first.conj()) * s)
}

/// Least-squares fit of f ~ sum_{j=1..terms} a_j / w^j on the annulus
/// rin <= |w| <= rout; returns a_1.
pub fn fit_inverse_powers(f: &ComplexField, rin: f64, rout: f64, terms: usize) -> C64 {
    let g = f.grid();
    let mut rows: Vec<Vec<C64>> = Vec::new();
    let mut rhs = Vec::new();
    for (i, v) in f.data().iter().enumerate() {
        let w = g.point_at(i);
        let r = w.norm();
        if r >= rin && r <= rout {
            rows.push((1..=terms).map(|j| w.powi(-(j as i32))).collect());
            rhs.push(*v);
        }
    }
    // normal equations, tiny system
    let m = terms;
    let mut a = vec![vec![C64::new(0.0, 0.0); m]; m];
    let mut b = vec![C64::new(0.0, 0.0); m];
    for (row, y) in rows.iter().zip(&rhs) {
        for i in 0..m {
            b[i] += row[i].conj() * y;
            for j in 0..m {
                a[i][j] += row[i].conj() * row[j];
            }
        }
    }
    solve_dense(a, b)[0]
}

/// Gaussian elimination with partial pivoting (small dense systems).
pub fn solve_dense(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Vec<C64> {
    let m = b.len();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..m {
            let f = a[r][c] / a[c][c];
            for k in c..m {
                let t = a[c][k];
                a[r][k] -= f * t;
            }
            let t = b[c];
            b[r] -= f * t;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); m];
    for r in (0..m).rev() {
        let mut s = b[r];
        for k in (r + 1)..m {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    x
}

/// max |first - 1| and max |second| on the outermost ring of nodes.
pub fn boundary_defect(sol: &CgoSolution) -> (f64, f64) {
    let one = C64::new(1.0, 0.0);
    let a = sol.first.boundary_frame().iter().fold(0.0f64, |m, c| m.max((c - one).norm()));
    let b = sol.second.boundary_frame().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{cauchy_plane, dbar};

    fn bump(g: Grid, amp: f64) -> ComplexField {
        // u = 2 dbar(phi) plus a non-symmetric complex part
        let phi = ComplexField::from_real_fn(g, |z| amp * (-(z - C64::new(0.3, -0.2)).norm_sqr() / 1.2).exp());
        dbar(&phi) * 2.0
            + ComplexField::from_fn(g, |z| C64::new(0.0, 0.5 * amp) * (-(z + 0.5).norm_sqr()).exp())
    }

    #[test]
    fn apply_t_trivial_and_antilinear() {
        let g = Grid::space(32, 4.0).unwrap();
        let u = bump(g, 0.5);
        let k = C64::new(0.4, -0.3);
        let zero = ComplexField::zeros(g);
        let psi = ComplexField::from_fn(g, |z| C64::new(z.re.cos(), z.im.sin()));
        assert_eq!(apply_t(&u, k, &zero).max_abs(), 0.0);
        assert_eq!(apply_t(&zero, k, &psi).max_abs(), 0.0);
        let i = C64::new(0.0, 1.0);
        let lhs = apply_t(&u, k, &psi.scale(i));
        let rhs = apply_t(&u, k, &psi).scale(-i);
        assert!((lhs - rhs).max_abs() < 1e-14);
    }

    #[test]
    fn zero_potential_gives_identity_solution() {
        let g = Grid::space(32, 4.0).unwrap();
        let s = solve_mu(&ComplexField::zeros(g), C64::new(1.0, 2.0), &SolverConfig::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.first.data().iter().all(|c| *c == C64::new(1.0, 0.0)));
        assert_eq!(s.second.max_abs(), 0.0);
        let kg = Grid::spectral(32, 4.0).unwrap();
        let s = solve_nu(&ComplexField::zeros(kg), C64::new(0.5, 0.0), &SolverConfig::default()).unwrap();
        assert_eq!(s.second.max_abs(), 0.0);
    }

    #[test]
    fn fixed_point_defect_within_tolerance() {
        let g = Grid::space(64, 8.0).unwrap();
        let u = bump(g, 1.0);
        let cfg = SolverConfig::default();
        for k in [C64::new(0.0, 0.0), C64::new(0.7, 0.2), C64::new(-1.5, 2.0)] {
            let s = solve_mu(&u, k, &cfg).unwrap();
            assert!(s.residual <= 10.0 * cfg.tol, "residual {}", s.residual);
            let t2 = apply_t(&u, k, &apply_t(&u, k, &s.first));
            let defect = (&s.first - &t2).map(|c| c - 1.0).l2() / s.first.l2();
            assert!(defect <= 10.0 * cfg.tol);
            assert!((apply_t(&u, k, &s.first) - &s.second).max_abs() < 1e-14);
        }
    }

    #[test]
    fn small_potential_matches_first_neumann_term() {
        let g = Grid::space(64, 8.0).unwrap();
        let u = bump(g, 1e-3);
        let k = C64::new(0.3, 0.1);
        let s = solve_mu(&u, k, &SolverConfig::default()).unwrap();
        let t1 = cauchy_plane(&(&ek_phase(&g, k) * &u)) * 0.5;
        assert!(s.second.rel_l2_error(&t1) < 1e-2);
        let kg = Grid::spectral(64, 6.0).unwrap();
        let r = ComplexField::from_fn(kg, |k| C64::new(1e-3, 5e-4) * (-k.norm_sqr()).exp());
        let z = C64::new(0.5, -0.25);
        let s = solve_nu(&r, z, &SolverConfig::default()).unwrap();
        let c = ComplexField::from_vec(kg, nu_coefficient(&r, z));
        assert!(s.second.rel_l2_error(&(cauchy_plane(&c) * 0.5)) < 1e-2);
    }

    fn dense_solve_real(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Vec<f64> {
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs())).unwrap();
            if p != c {
                for k in 0..n {
                    a.swap(c * n + k, p * n + k);
                }
                b.swap(c, p);
            }
            let piv = a[c * n + c];
            for r in (c + 1)..n {
                let f = a[r * n + c] / piv;
                if f == 0.0 {
                    continue;
                }
                for k in c..n {
                    a[r * n + k] -= f * a[c * n + k];
                }
                b[r] -= f * b[c];
            }
        }
        for r in (0..n).rev() {
            let mut s = b[r];
            for k in (r + 1)..n {
                s -= a[r * n + k] * b[k];
            }
            b[r] = s / a[r * n + r];
        }
        b
    }

    #[test]
    fn agrees_with_dense_realified_solve() {
        let g = Grid::space(32, 8.0).unwrap();
        let u = bump(g, 1.5);
        let k = C64::new(0.4, 0.3);
        let n = g.len();
        let t = Kernel::new(&g, mu_coefficient(&u, k), 0.5);
        let mut scratch = Spectral::for_grid(&g).scratch();
        let dim = 2 * n;
        // column j of (I - T^2) in the real basis (re_0.., im_0..)
        let mut a = vec![0.0; dim * dim];
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut mid = vec![C64::new(0.0, 0.0); n];
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..dim {
            e.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
            e[j % n] = if j < n { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
            t.apply(&e, &mut mid, &mut scratch);
            t.apply(&mid, &mut out, &mut scratch);
            for i in 0..n {
                let v = e[i] - out[i];
                a[i * dim + j] = v.re;
                a[(i + n) * dim + j] = v.im;
            }
        }
        let mut b = vec![0.0; dim];
        b[..n].iter_mut().for_each(|x| *x = 1.0);
        let x = dense_solve_real(a, b, dim);
        let dense = ComplexField::from_vec(g, (0..n).map(|i| C64::new(x[i], x[i + n])).collect());
        for strategy in [Strategy::Neumann, Strategy::Krylov] {
            let cfg = SolverConfig { strategy, ..Default::default() };
            let s = solve_mu(&u, k, &cfg).unwrap();
            assert!(s.first.rel_l2_error(&dense) < 1e-6);
        }
    }

    #[test]
    fn strategies_agree() {
        let g = Grid::space(64, 8.0).unwrap();
        let u = bump(g, 1.0);
        let k = C64::new(-0.2, 0.6);
        let a = solve_mu(&u, k, &SolverConfig::default()).unwrap();
        let b = solve_mu(&u, k, &SolverConfig { strategy: Strategy::Krylov, ..Default::default() }).unwrap();
        assert!((&a.first - &b.first).l2() / a.first.l2() <= 10.0 * 1e-10);
    }

    #[test]
    fn deterministic() {
        let g = Grid::space(32, 6.0).unwrap();
        let u = bump(g, 1.0);
        let a = solve_mu(&u, C64::new(0.5, 0.5), &SolverConfig::default()).unwrap();
        let b = solve_mu(&u, C64::new(0.5, 0.5), &SolverConfig::default()).unwrap();
        assert_eq!(a.first, b.first);
        assert_eq!(a.second, b.second);
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = Grid::space(32, 6.0).unwrap();
        let u = bump(g, 1.0);
        let cfg = SolverConfig { max_iter: 2, tol: 1e-14, ..Default::default() };
        match solve_mu(&u, C64::new(0.0, 0.0), &cfg) {
            Err(Error::NonConvergence { iterations, .. }) => assert!(iterations >= 2),
            other => panic!("expected NonConvergence, got {:?}", other.map(|s| s.iterations)),
        }
    }

    #[test]
    fn second_component_decays_along_rays() {
        let g = Grid::space(64, 8.0).unwrap();
        let u = bump(g, 1.0);
        let cfg = SolverConfig::default();
        let mut last = f64::INFINITY;
        for s in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let m = solve_mu(&u, C64::from_polar(s, 0.7), &cfg).unwrap().second.max_abs();
            assert!(m <= 1.1 * last, "|k| = {s}: {m} vs {last}");
            last = m;
        }
    }

    #[test]
    fn large_parameter_coefficients() {
        let g = Grid::space(32, 4.0).unwrap();
        let s = solve_mu(&ComplexField::zeros(g), C64::new(1.0, 0.0), &SolverConfig::default()).unwrap();
        assert_eq!(large_param_check(&s, &ComplexField::zeros(g)), (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));

        // wide domain so that the fit annulus sits where the planar kernel is exact
        let g = Grid::space(256, 40.0).unwrap();
        let u = ComplexField::from_fn(g, |z| C64::new(0.8, 0.3) * (-z.norm_sqr() / 0.8).exp() * (1.0 + 0.3 * z.re));
        let k = C64::new(0.3, -0.2);
        let sol = solve_mu(&u, k, &SolverConfig::default()).unwrap();
        let (c1, c2) = large_param_check(&sol, &u);
        let l = g.l();
        let f1 = sol.first.map(|c| c - 1.0);
        let fit1 = fit_inverse_powers(&f1, 0.6 * l, 0.9 * l, 3);
        let fit2 = fit_inverse_powers(&sol.second, 0.6 * l, 0.9 * l, 3);
        assert!((fit1 - c1).norm() <= 5e-2 * c1.norm(), "{fit1} vs {c1}");
        assert!((fit2 - c2).norm() <= 5e-2 * c2.norm(), "{fit2} vs {c2}");
        // second ~ -r(k)/(2z): compare with the quadrature of the scattering integral
        let r = -(&ek_phase(&g, k) * &u).pair(&sol.first.conj()) / std::f64::consts::PI;
        assert!((c2 + r / 2.0).norm() < 1e-12);
    }

    #[test]
    fn boundary_frame_carries_the_inverse_power_tail() {
        // mu - 1 ~ c1/z, so the frame defect is |c1|/L in size, never 1e-6
        let g = Grid::space(128, 8.0).unwrap();
        let u = ComplexField::from_fn(g, |z| C64::new(0.6, 0.2) * (-z.norm_sqr()).exp());
        let sol = solve_mu(&u, C64::new(0.5, 0.4), &SolverConfig::default()).unwrap();
        let (c1, c2) = large_param_check(&sol, &u);
        let (a, b) = boundary_defect(&sol);
        let l = g.l();
        assert!(a > 1e-3, "{a:e}");
        assert!(a >= 0.5 * c1.norm() / (l * std::f64::consts::SQRT_2) && a <= 2.0 * c1.norm() / l, "{a:e} vs {:e}", c1.norm() / l);
        assert!(b >= 0.5 * c2.norm() / (l * std::f64::consts::SQRT_2) && b <= 2.0 * c2.norm() / l, "{b:e} vs {:e}", c2.norm() / l);
        let zero = solve_mu(&ComplexField::zeros(g), C64::new(1.0, 0.0), &SolverConfig::default()).unwrap();
        assert_eq!(boundary_defect(&zero), (0.0, 0.0));
    }
}
