//! Zero-energy Schrodinger scattering: t = T q through the CGO solutions
//! m(z, k) = e^{-ikz} psi, and the reconstruction q = Q t from the k-plane
//! dbar problem for m. Parameters sit on the variety zeta = (k, ik).

use crate::cgo::{solve_fixed_point, solve_mu, CgoKind, CgoSolution, Kernel, SolverConfig};
use crate::dsii::{farm_mu, ScatteringData, ScatteringKind, SourceNorms};
use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::{Grid, Role};
use crate::miura::miura_map;
use crate::spectral::{d, dbar, dbar_windowed, window};
use rayon::prelude::*;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgoOrigin {
    /// Assembled from the DSII solution at ik; a field over z.
    FromMiuraPair,
    /// Solved from t in the k-plane; a field over k.
    FromTDbar,
}

#[derive(Clone, Debug)]
pub struct SchrodingerCgo {
    /// k for `FromMiuraPair`, z for `FromTDbar`.
    pub param: C64,
    pub m: ComplexField,
    pub origin: CgoOrigin,
}

/// kz + conj(kz) = 2 Re(kz).
fn phase(k: C64, z: C64) -> f64 {
    2.0 * (k * z).re
}

/// m = mu1(z, ik) + exp(-i(kz + conj(kz))) conj(mu2(z, ik)).
pub fn m_from_miura_pair(musol: &CgoSolution, k: C64) -> Result<SchrodingerCgo> {
    if musol.kind != CgoKind::Mu || (musol.param - I * k).norm() > 1e-12 * (1.0 + k.norm()) {
        return Err(Error::Invalid(format!("need the z-plane solution at ik = {}, got {}", I * k, musol.param)));
    }
    let g = *musol.first.grid();
    let m = ComplexField::from_vec(
        g,
        (0..g.len())
            .map(|i| musol.first.data()[i] + C64::from_polar(1.0, -phase(k, g.point_at(i))) * musol.second.data()[i].conj())
            .collect(),
    );
    Ok(SchrodingerCgo { param: k, m, origin: CgoOrigin::FromMiuraPair })
}

/// Solves the DSII system at ik and assembles m(., k).
pub fn schrodinger_m(u: &ComplexField, k: C64, cfg: &SolverConfig) -> Result<SchrodingerCgo> {
    m_from_miura_pair(&solve_mu(u, I * k, cfg)?, k)
}

/// ||-4 d dbar m - 4ik dbar m + q m|| / (||q|| max|m|) on |z| <= L/2, where
/// the truncated Cauchy kernel is exact for potentials supported in the
/// same disc. Equivalent to (-Lap + q)(e^{ikz} m) = 0.
pub fn schrodinger_residual(q: &ComplexField, cgo: &SchrodingerCgo) -> f64 {
    let g = *cgo.m.grid();
    let (chi, _) = window(&g, 0.5 * g.l());
    let tail = cgo.m.map(|v| v - 1.0) * &chi;
    let mb = dbar(&tail);
    let lap = d(&mb).scale_re(4.0);
    let res = q * &cgo.m - &lap - &(mb * (4.0 * I * cgo.param));
    let keep = |z: C64| z.norm() <= 0.5 * g.l();
    res.masked(keep).l2() / (q.l2() * cgo.m.max_abs()).max(f64::MIN_POSITIVE)
}

fn t_value(u: &ComplexField, q: &ComplexField, k: C64, m1: &[C64], m2: &[C64]) -> C64 {
    let g = u.grid();
    // e^{i phi} q (mu1 + e^{-i phi} conj mu2)
    let s: C64 = (0..g.len())
        .map(|i| {
            let z = g.point_at(i);
            q.data()[i] * (C64::from_polar(1.0, phase(k, z)) * m1[i] + m2[i].conj())
        })
        .sum();
    s * g.cell()
}

fn check_space(u: &ComplexField) -> Result<()> {
    if u.grid().role() != Role::Space {
        return Err(Error::GridMismatch("potential must live on a z-grid".into()));
    }
    Ok(())
}

/// t(k) = Int e^{i(kz + conj(kz))} q m dA with q = M(u).
pub fn forward_t(u: &ComplexField, kgrid: &Grid, cfg: &SolverConfig) -> Result<ScatteringData> {
    check_space(u)?;
    let q = miura_map(u);
    if u.max_abs() == 0.0 {
        cfg.validate()?;
        return ScatteringData::new(ComplexField::zeros(*kgrid), ScatteringKind::SchrodingerT, SourceNorms::of(&q));
    }
    let ks: Vec<C64> = (0..kgrid.len()).map(|i| kgrid.point_at(i)).collect();
    let vals = t_at(u, &q, &ks, cfg)?;
    ScatteringData::new(ComplexField::from_vec(*kgrid, vals), ScatteringKind::SchrodingerT, SourceNorms::of(&q))
}

fn t_at(u: &ComplexField, q: &ComplexField, ks: &[C64], cfg: &SolverConfig) -> Result<Vec<C64>> {
    cfg.validate()?;
    ks.par_iter()
        .map(|&k| {
            let s = solve_mu(u, I * k, cfg)?;
            Ok(t_value(u, q, k, s.first.data(), s.second.data()))
        })
        .collect()
}

/// (r, t) in one pass: the solve at grid node k also serves t at -ik,
/// which is again a grid node except on the row wrapped by the periodic
/// grid; that row is solved separately.
pub fn forward_pair(u: &ComplexField, kgrid: &Grid, cfg: &SolverConfig) -> Result<(ScatteringData, ScatteringData)> {
    if u.max_abs() == 0.0 {
        return Ok((crate::dsii::forward_r(u, kgrid, cfg)?, forward_t(u, kgrid, cfg)?));
    }
    check_space(u)?;
    let q = miura_map(u);
    let n = kgrid.n();
    let cell = u.grid().cell();
    let pairs = farm_mu(u, kgrid, cfg, true, |idx, k, m1, m2| {
        let e = crate::spectral::ek_phase(u.grid(), k);
        let s: C64 = e.data().iter().zip(u.data()).zip(m1).map(|((e, u), m)| e * u * m.conj()).sum();
        let r = -s * cell / PI;
        let (iy, ix) = (idx / n, idx % n);
        let t = if ix == 0 { C64::new(0.0, 0.0) } else { t_value(u, &q, -I * k, m1, m2) };
        (r, t, kgrid.reflect_index(ix) * n + iy)
    })?;
    let mut r = vec![C64::new(0.0, 0.0); kgrid.len()];
    let mut t = vec![C64::new(0.0, 0.0); kgrid.len()];
    for (idx, (rv, tv, tidx)) in pairs.into_iter().enumerate() {
        r[idx] = rv;
        t[tidx] = tv;
    }
    // row iy = 0 of t comes from ix = 0, where -ik wraps around
    let edge: Vec<C64> = (0..n).map(|ix| kgrid.point(0, ix)).collect();
    for (ix, v) in t_at(u, &q, &edge, cfg)?.into_iter().enumerate() {
        t[ix] = v;
    }
    let rn = SourceNorms::of(u);
    Ok((
        ScatteringData::new(ComplexField::from_vec(*kgrid, r), ScatteringKind::DsiiR, rn)?,
        ScatteringData::new(ComplexField::from_vec(*kgrid, t), ScatteringKind::SchrodingerT, SourceNorms::of(&q))?,
    ))
}

/// t(k) = 2 pi i conj(k) conj(r(ik)), node by node. The node ik of the row
/// iy = 0 wraps around the periodic k-grid, so that row is only accurate
/// when r is negligible at |k| = K.
pub fn intertwine(r: &ScatteringData) -> Result<ScatteringData> {
    if r.kind != ScatteringKind::DsiiR {
        return Err(Error::Invalid("intertwine needs dsii_r data".into()));
    }
    let g = *r.field.grid();
    let n = g.n();
    let vals = (0..g.len())
        .map(|idx| {
            let (iy, ix) = (idx / n, idx % n);
            let k = g.point(iy, ix);
            // ik = -y + ix: column reflect(iy), row ix
            let rik = r.field.at(ix, g.reflect_index(iy));
            2.0 * PI * I * k.conj() * rik.conj()
        })
        .collect();
    ScatteringData::new(ComplexField::from_vec(g, vals), ScatteringKind::SchrodingerT, r.source_norms)
}

/// t(k)/(4 pi conj k), with 0 at k = 0; errors if the ratio is large near 0.
fn t_over_kbar(t: &ScatteringData, cfg: &SolverConfig) -> Result<Vec<C64>> {
    if t.kind != ScatteringKind::SchrodingerT {
        return Err(Error::Invalid("expected schrodinger_t data".into()));
    }
    let g = t.field.grid();
    let near = 3.0 * g.h();
    let mut out = Vec::with_capacity(g.len());
    for (i, v) in t.field.data().iter().enumerate() {
        let k = g.point_at(i);
        if k.norm() == 0.0 {
            out.push(C64::new(0.0, 0.0));
            continue;
        }
        let ratio = v / k.conj();
        if k.norm() <= near && ratio.norm() > cfg.small_k_bound {
            return Err(Error::SingularSmallK { k, value: ratio.norm() });
        }
        out.push(ratio / (4.0 * PI));
    }
    Ok(out)
}

fn solve_m_with(tk: &[C64], kg: &Grid, z: C64, cfg: &SolverConfig) -> Result<Vec<C64>> {
    let coef: Vec<C64> = tk
        .iter()
        .enumerate()
        .map(|(i, c)| c * C64::from_polar(1.0, -phase(kg.point_at(i), z)))
        .collect();
    let kernel = Kernel::new(kg, coef, 1.0);
    if kernel.is_zero() {
        return Ok(vec![C64::new(1.0, 0.0); kg.len()]);
    }
    let mut scratch = crate::spectral::Spectral::for_grid(kg).scratch();
    Ok(solve_fixed_point(|v, o| kernel.apply(v, o, &mut scratch), kg.len(), cfg, z)?.w)
}

/// m(z, .) from dbar_k m = (t/(4 pi conj k)) e^{-i(kz + conj(kz))} conj(m), m -> 1.
pub fn solve_m_from_t(t: &ScatteringData, z: C64, cfg: &SolverConfig) -> Result<SchrodingerCgo> {
    cfg.validate()?;
    let tk = t_over_kbar(t, cfg)?;
    let kg = *t.field.grid();
    let m = solve_m_with(&tk, &kg, z, cfg)?;
    Ok(SchrodingerCgo { param: z, m: ComplexField::from_vec(kg, m), origin: CgoOrigin::FromTDbar })
}

/// Half-width of the square on which `inverse_q` is exact.
pub fn q_window(zgrid: &Grid) -> f64 {
    0.5 * zgrid.l()
}

/// q = (i/pi^2) dbar F, F(z) = Int (t/conj k) e^{-i(kz + conj(kz))} conj(m) dA(k).
/// F has a 1/z tail, so dbar is taken through a window; the result is
/// chi q with chi = 1 on the square |x_i| <= L/2.
pub fn inverse_q(t: &ScatteringData, zgrid: &Grid, cfg: &SolverConfig) -> Result<ComplexField> {
    if zgrid.role() != Role::Space {
        return Err(Error::GridMismatch("target grid must be a z-grid".into()));
    }
    cfg.validate()?;
    let tk = t_over_kbar(t, cfg)?;
    if t.field.max_abs() == 0.0 {
        return Ok(ComplexField::zeros(*zgrid));
    }
    let kg = *t.field.grid();
    let inner = q_window(zgrid);
    let cell = kg.cell();
    let vals: Result<Vec<C64>> = (0..zgrid.len())
        .into_par_iter()
        .map(|idx| {
            let z = zgrid.point_at(idx);
            let m = solve_m_with(&tk, &kg, z, cfg)?;
            let s: C64 = tk
                .iter()
                .zip(&m)
                .enumerate()
                .map(|(i, (c, m))| c * C64::from_polar(1.0, -phase(kg.point_at(i), z)) * m.conj())
                .sum();
            // tk carries 1/(4 pi)
            Ok(s * (4.0 * PI * cell))
        })
        .collect();
    let f = ComplexField::from_vec(*zgrid, vals?);
    Ok(dbar_windowed(&f, inner).scale(I / (PI * PI)))
}
