//! Linear evolution of scattering data and the inverse-scattering solution
//! pipelines for mNV and NV.

use crate::cgo::SolverConfig;
use crate::dsii::{forward_r, inverse_i_within, ScatteringData, ScatteringKind};
use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::Grid;
use crate::io::write_field;
use crate::miura::{check_domain, miura_map};
use crate::schrodinger::{forward_t, inverse_q};
use crate::spectral::d;
use std::f64::consts::PI;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    MnvCubic,
    NvSchrodingerCubic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionPlan {
    t_values: Vec<f64>,
    pub flavor: Flavor,
}

impl EvolutionPlan {
    pub fn new(t_values: Vec<f64>, flavor: Flavor) -> Result<Self> {
        if t_values.is_empty() {
            return Err(Error::Invalid("empty evolution plan".into()));
        }
        if t_values.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Invalid("times must be finite and nonnegative".into()));
        }
        if t_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("times must be strictly increasing".into()));
        }
        Ok(EvolutionPlan { t_values, flavor })
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }
}

/// r -> exp(t (conj(k)^3 - k^3)) r.
pub fn evolve_r(r: &ScatteringData, t: f64) -> Result<ScatteringData> {
    if r.kind != ScatteringKind::DsiiR {
        return Err(Error::Invalid("evolve_r needs dsii_r data".into()));
    }
    // conj(k)^3 - k^3 = -2i Im(k^3)
    Ok(multiply(r, |k| C64::from_polar(1.0, -2.0 * t * (k * k * k).im)))
}

/// t -> exp(-i t (k^3 + conj(k)^3)) t. This sign makes the flow commute
/// with the intertwining t(k) = 2 pi i conj(k) conj(r(ik)).
pub fn evolve_t_schrodinger(data: &ScatteringData, t: f64) -> Result<ScatteringData> {
    if data.kind != ScatteringKind::SchrodingerT {
        return Err(Error::Invalid("evolve_t_schrodinger needs schrodinger_t data".into()));
    }
    // k^3 + conj(k)^3 = 2 Re(k^3)
    Ok(multiply(data, |k| C64::from_polar(1.0, -2.0 * t * (k * k * k).re)))
}

fn multiply(data: &ScatteringData, phase: impl Fn(C64) -> C64) -> ScatteringData {
    ScatteringData { field: data.field.map_with_point(|k, v| v * phase(k)), ..data.clone() }
}

/// h_k max |grad theta| over the active support of the data, where theta is
/// the evolution phase at time t; |grad theta| = 6 t |k|^2 for both flows.
pub fn phase_ratio(data: &ScatteringData, t: f64, threshold: f64) -> (f64, f64) {
    let g = data.field.grid();
    let cut = threshold * data.field.max_abs();
    let kmax2 = data
        .field
        .data()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() >= cut && v.norm() > 0.0)
        .map(|(i, _)| g.point_at(i).norm_sqr())
        .fold(0.0, f64::max);
    (g.h() * 6.0 * t * kmax2, kmax2.sqrt())
}

/// Errors with PhaseUnderresolved if the sampling criterion
/// h_k max|grad theta| <= pi/4 fails on the active support.
pub fn check_phase(data: &ScatteringData, t: f64, threshold: f64) -> Result<()> {
    let (ratio, kact) = phase_ratio(data, t, threshold);
    if ratio <= PI / 4.0 {
        return Ok(());
    }
    let g = data.field.grid();
    let h_needed = PI / 4.0 / (6.0 * t * kact * kact);
    let required_nk = (2.0 * g.l() / h_needed).ceil() as usize;
    Err(Error::PhaseUnderresolved { t, ratio, required_nk: required_nk + required_nk % 2 })
}

#[derive(Clone, Copy, Debug)]
pub struct IstConfig {
    pub kgrid: Grid,
    pub solver: SolverConfig,
    /// Fraction of max|r| defining the active support in the phase check.
    pub phase_threshold: f64,
    /// Skip inverse solves at |z| > radius (potential assumed negligible).
    pub inverse_radius: Option<f64>,
    /// Reject NV input outside the Miura domain.
    pub require_domain: bool,
}

impl IstConfig {
    pub fn new(kgrid: Grid) -> Self {
        IstConfig {
            kgrid,
            solver: SolverConfig::default(),
            phase_threshold: 1e-3,
            inverse_radius: None,
            require_domain: true,
        }
    }
}

/// u(t_i) = I(exp(t_i (conj(k)^3 - k^3)) R u0).
pub fn solve_mnv(u0: &ComplexField, plan: &EvolutionPlan, cfg: &IstConfig) -> Result<Vec<ComplexField>> {
    let r = forward_r(u0, &cfg.kgrid, &cfg.solver)?;
    solve_mnv_from(&r, u0.grid(), plan, cfg)
}

/// As `solve_mnv` with the forward transform already done.
pub fn solve_mnv_from(r: &ScatteringData, zgrid: &Grid, plan: &EvolutionPlan, cfg: &IstConfig) -> Result<Vec<ComplexField>> {
    for &t in plan.t_values() {
        check_phase(r, t, cfg.phase_threshold)?;
    }
    plan.t_values()
        .iter()
        .map(|&t| inverse_i_within(&evolve_r(r, t)?, zgrid, &cfg.solver, cfg.inverse_radius))
        .collect()
}

fn require_domain(u0: &ComplexField, cfg: &IstConfig) -> Result<()> {
    if !cfg.require_domain {
        return Ok(());
    }
    let (mean, defect) = check_domain(u0);
    let du = d(u0).max_abs();
    if defect > 1e-8 * du || mean.norm() > 1e-8 * u0.l1() {
        return Err(Error::Invalid(format!(
            "initial data outside the Miura domain: mean {mean:e}, symmetry defect {defect:e}"
        )));
    }
    Ok(())
}

/// q(t_i) = M(u(t_i)) with u from `solve_mnv`.
pub fn solve_nv(u0: &ComplexField, plan: &EvolutionPlan, cfg: &IstConfig) -> Result<Vec<ComplexField>> {
    require_domain(u0, cfg)?;
    Ok(solve_mnv(u0, plan, cfg)?.iter().map(miura_map).collect())
}

/// q(t_i) = Q(exp(-i t_i (k^3 + conj(k)^3)) T q0).
pub fn nv_via_schrodinger(u0: &ComplexField, plan: &EvolutionPlan, cfg: &IstConfig) -> Result<Vec<ComplexField>> {
    require_domain(u0, cfg)?;
    let t = forward_t(u0, &cfg.kgrid, &cfg.solver)?;
    nv_via_schrodinger_from(&t, u0.grid(), plan, cfg)
}

pub fn nv_via_schrodinger_from(
    t: &ScatteringData,
    zgrid: &Grid,
    plan: &EvolutionPlan,
    cfg: &IstConfig,
) -> Result<Vec<ComplexField>> {
    for &time in plan.t_values() {
        check_phase(t, time, cfg.phase_threshold)?;
    }
    plan.t_values()
        .iter()
        .map(|&time| inverse_q(&evolve_t_schrodinger(t, time)?, zgrid, &cfg.solver))
        .collect()
}

/// One manifest line per time point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub file: String,
    pub l2: f64,
    pub mass: C64,
    pub symmetry_defect: f64,
}

impl TrajectoryRow {
    pub fn of(t: f64, file: String, f: &ComplexField) -> Self {
        let (mass, symmetry_defect) = check_domain(f);
        TrajectoryRow { t, file, l2: f.l2(), mass, symmetry_defect }
    }
}

/// Writes `prefix_<i>.nvf` per time and `manifest.txt`; returns the rows.
pub fn write_trajectory(dir: &Path, prefix: &str, times: &[f64], fields: &[ComplexField]) -> Result<Vec<TrajectoryRow>> {
    std::fs::create_dir_all(dir)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut manifest = String::from("# t file l2 mass_re mass_im symmetry_defect\n");
    for (i, (t, f)) in times.iter().zip(fields).enumerate() {
        let file = format!("{prefix}_{i:04}.nvf");
        write_field(&dir.join(&file), f)?;
        let row = TrajectoryRow::of(*t, file, f);
        manifest.push_str(&format!(
            "{:.16e} {} {:.16e} {:.16e} {:.16e} {:.16e}\n",
            row.t, row.file, row.l2, row.mass.re, row.mass.im, row.symmetry_defect
        ));
        rows.push(row);
    }
    std::fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(rows)
}
