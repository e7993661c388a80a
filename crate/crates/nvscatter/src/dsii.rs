//! Davey-Stewartson II scattering pair: r = R u and u = I r.

use crate::cgo::{mu_coefficient, nu_coefficient, solve_system, SolverConfig};
use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::{Grid, Role};
use crate::spectral::{norm, SobolevWeights};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScatteringKind {
    DsiiR,
    SchrodingerT,
}

impl ScatteringKind {
    pub fn name(self) -> &'static str {
        match self {
            ScatteringKind::DsiiR => "dsii_r",
            ScatteringKind::SchrodingerT => "schrodinger_t",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dsii_r" => Some(ScatteringKind::DsiiR),
            "schrodinger_t" => Some(ScatteringKind::SchrodingerT),
            _ => None,
        }
    }
}

/// Norms of the potential that produced a set of scattering data.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SourceNorms {
    pub l2: f64,
    pub l1: f64,
    pub h11: f64,
    pub h21: f64,
}

impl SourceNorms {
    pub fn of(u: &ComplexField) -> Self {
        SourceNorms {
            l2: u.l2(),
            l1: u.l1(),
            h11: norm(u, SobolevWeights { m: 1, nweight: 1 }),
            h21: norm(u, SobolevWeights { m: 2, nweight: 1 }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScatteringData {
    pub field: ComplexField,
    pub kind: ScatteringKind,
    pub source_norms: SourceNorms,
}

impl ScatteringData {
    pub fn new(field: ComplexField, kind: ScatteringKind, source_norms: SourceNorms) -> Result<Self> {
        if field.grid().role() != Role::Spectral {
            return Err(Error::GridMismatch("scattering data must live on a k-grid".into()));
        }
        Ok(ScatteringData { field, kind, source_norms })
    }

    pub fn k_cutoff(&self) -> f64 {
        self.field.grid().l()
    }

    pub fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("kind".into(), self.kind.name().into()),
            ("k_max".into(), format!("{}", self.k_cutoff())),
            ("source_l2".into(), format!("{:e}", self.source_norms.l2)),
            ("source_l1".into(), format!("{:e}", self.source_norms.l1)),
            ("source_h11".into(), format!("{:e}", self.source_norms.h11)),
            ("source_h21".into(), format!("{:e}", self.source_norms.h21)),
            ("decay_diagnostic".into(), format!("{:e}", decay_diagnostic(self))),
        ]
    }
}

fn require_role(g: &Grid, role: Role, what: &str) -> Result<()> {
    if g.role() != role {
        return Err(Error::GridMismatch(format!("{what} has role {:?}", g.role())));
    }
    Ok(())
}

/// Solves the z-plane system at every k-grid node and hands
/// (node index, k, mu1, mu2) to `f`.
pub(crate) fn farm_mu<T, F>(u: &ComplexField, kgrid: &Grid, cfg: &SolverConfig, want_second: bool, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, C64, &[C64], &[C64]) -> T + Sync,
{
    cfg.validate()?;
    let zg = *u.grid();
    (0..kgrid.len())
        .into_par_iter()
        .map(|idx| {
            let k = kgrid.point_at(idx);
            let (m1, m2, _, _) = solve_system(&zg, mu_coefficient(u, k), cfg, k, want_second)?;
            Ok(f(idx, k, &m1, &m2))
        })
        .collect()
}

/// r(k) = -(1/pi) Int e_k u conj(mu1) dA.
pub fn forward_r(u: &ComplexField, kgrid: &Grid, cfg: &SolverConfig) -> Result<ScatteringData> {
    require_role(u.grid(), Role::Space, "potential")?;
    if u.max_abs() == 0.0 {
        cfg.validate()?;
        return ScatteringData::new(ComplexField::zeros(*kgrid), ScatteringKind::DsiiR, SourceNorms::of(u));
    }
    let cell = u.grid().cell();
    let vals = farm_mu(u, kgrid, cfg, false, |_, k, m1, _| {
        let e = crate::spectral::ek_phase(u.grid(), k);
        let s: C64 = e.data().iter().zip(u.data()).zip(m1).map(|((e, u), m)| e * u * m.conj()).sum();
        -s * cell / PI
    })?;
    ScatteringData::new(ComplexField::from_vec(*kgrid, vals), ScatteringKind::DsiiR, SourceNorms::of(u))
}

/// u(z) = -(1/pi) Int conj(e_k(z)) r(k) nu1(z, k) dA(k).
pub fn inverse_i(r: &ScatteringData, zgrid: &Grid, cfg: &SolverConfig) -> Result<ComplexField> {
    inverse_i_within(r, zgrid, cfg, None)
}

/// As `inverse_i`, but nodes with |z| > radius are set to zero without a
/// solve (the potential is negligible there by the margin contract).
pub fn inverse_i_within(r: &ScatteringData, zgrid: &Grid, cfg: &SolverConfig, radius: Option<f64>) -> Result<ComplexField> {
    if r.kind != ScatteringKind::DsiiR {
        return Err(Error::Invalid("inverse_i needs dsii_r data".into()));
    }
    require_role(zgrid, Role::Space, "target grid")?;
    cfg.validate()?;
    if r.field.max_abs() == 0.0 {
        return Ok(ComplexField::zeros(*zgrid));
    }
    let kg = *r.field.grid();
    let cell = kg.cell();
    let vals: Result<Vec<C64>> = (0..zgrid.len())
        .into_par_iter()
        .map(|idx| {
            let z = zgrid.point_at(idx);
            if radius.is_some_and(|rad| z.norm() > rad) {
                return Ok(C64::new(0.0, 0.0));
            }
            let coef = nu_coefficient(&r.field, z);
            // conj(e_k(z)) r = -conj(coef)
            let coef_conj: Vec<C64> = coef.iter().map(|c| c.conj()).collect();
            let (n1, _, _, _) = solve_system(&kg, coef, cfg, z, false)?;
            let s: C64 = coef_conj.iter().zip(&n1).map(|(c, n)| c * n).sum();
            Ok(s * cell / PI)
        })
        .collect();
    Ok(ComplexField::from_vec(*zgrid, vals?))
}

/// ||k|^2 r||_2 over the k-grid.
pub fn decay_diagnostic(r: &ScatteringData) -> f64 {
    r.field.map_with_point(|k, v| v * k.norm_sqr()).l2()
}

/// max |r| on the outer annulus |k| >= 0.9 K relative to max |r|.
pub fn outer_annulus_ratio(r: &ScatteringData) -> f64 {
    let kmax = r.k_cutoff();
    let outer = r
        .field
        .data()
        .iter()
        .enumerate()
        .filter(|(i, _)| r.field.grid().point_at(*i).norm() >= 0.9 * kmax)
        .fold(0.0f64, |m, (_, v)| m.max(v.norm()));
    outer / r.field.max_abs().max(1e-300)
}

/// Born approximation of R: -(1/pi) Int e_k u dA.
pub fn born_forward(u: &ComplexField, kgrid: &Grid) -> ComplexField {
    ComplexField::from_fn(*kgrid, |k| {
        -(&crate::spectral::ek_phase(u.grid(), k) * u).integral() / PI
    })
}

/// Born approximation of I: -(1/pi) Int conj(e_k(z)) r dA(k).
pub fn born_inverse(r: &ComplexField, zgrid: &Grid) -> ComplexField {
    ComplexField::from_fn(*zgrid, |z| {
        -(&crate::spectral::ek_phase(r.grid(), z).conj() * r).integral() / PI
    })
}
