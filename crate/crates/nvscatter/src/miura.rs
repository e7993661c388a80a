//! The Miura-type map q = 2 du + |u|^2, conductivity-type data and the
//! domain conditions for the NV pipelines.

use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::Grid;
use crate::spectral::{cauchy_p, d, dbar, laplacian};

/// Default lower bound for a conductivity.
pub const POSITIVITY_MARGIN: f64 = 1e-3;
/// Relative tolerance of the q = gamma^{-1/2} Lap gamma^{1/2} check.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct MiuraDatum {
    pub u: ComplexField,
    pub q: ComplexField,
    /// u = 2 dbar(phi).
    pub phi: ComplexField,
    pub gamma: Option<ComplexField>,
    pub mean_u: C64,
    pub symmetry_defect: f64,
    /// Relative L2 distance between q and gamma^{-1/2} Lap gamma^{1/2}.
    pub consistency: Option<f64>,
}

impl MiuraDatum {
    /// Datum for an arbitrary u, phi taken as half the Cauchy transform.
    pub fn from_u(u: ComplexField) -> Self {
        let (mean_u, symmetry_defect) = check_domain(&u);
        MiuraDatum {
            q: miura_map(&u),
            phi: cauchy_p(&u).scale_re(0.5),
            u,
            gamma: None,
            mean_u,
            symmetry_defect,
            consistency: None,
        }
    }

    /// The Miura-domain conditions at the default relative tolerance.
    pub fn in_domain(&self) -> bool {
        let du = d(&self.u).max_abs();
        self.symmetry_defect <= 1e-8 * du.max(f64::MIN_POSITIVE) && self.mean_u.norm() <= 1e-8 * self.u.l1()
    }
}

pub fn miura_map(u: &ComplexField) -> ComplexField {
    d(u).scale_re(2.0) + u.abs2()
}

/// (integral of u, max |du - conj(du)|).
pub fn check_domain(u: &ComplexField) -> (C64, f64) {
    let du = d(u);
    let defect = du.data().iter().map(|c| 2.0 * c.im.abs()).fold(0.0, f64::max);
    (u.integral(), defect)
}

/// phi = 1/2 log gamma, u = 2 dbar phi, q = M(u).
pub fn conductivity_to_u(gamma: &ComplexField) -> Result<MiuraDatum> {
    conductivity_to_u_with(gamma, POSITIVITY_MARGIN, CONSISTENCY_TOL)
}

pub fn conductivity_to_u_with(gamma: &ComplexField, positivity: f64, consistency_tol: f64) -> Result<MiuraDatum> {
    let g = *gamma.grid();
    let scale = gamma.max_abs().max(1.0);
    if gamma.max_im() > 1e-12 * scale {
        return Err(Error::Invalid(format!("conductivity has imaginary part {:e}", gamma.max_im())));
    }
    let min = gamma.data().iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    if min <= positivity {
        return Err(Error::NotPositive { min });
    }
    let margin = 0.25 * g.l();
    let defect = gamma
        .data()
        .iter()
        .enumerate()
        .filter(|(i, _)| in_margin(&g, *i, margin))
        .map(|(_, c)| (c.re - 1.0).abs())
        .fold(0.0, f64::max);
    if defect > 1e-12 {
        return Err(Error::NotUnitAtBoundary { defect });
    }
    let phi = gamma.map(|c| C64::new(0.5 * c.re.ln(), 0.0));
    let u = dbar(&phi).scale_re(2.0);
    let q = miura_map(&u);
    let root = gamma.map(|c| C64::new(c.re.sqrt(), 0.0));
    let reference = laplacian(&root).zip(&root, |a, b| a / b);
    let consistency = q.rel_l2_error(&reference);
    if consistency > consistency_tol {
        return Err(Error::Invalid(format!(
            "conductivity under-resolved: q and gamma^-1/2 Lap gamma^1/2 differ by {consistency:e}"
        )));
    }
    let (mean_u, symmetry_defect) = check_domain(&u);
    Ok(MiuraDatum { u, q, phi, gamma: Some(gamma.clone()), mean_u, symmetry_defect, consistency: Some(consistency) })
}

/// int |grad f|^2 + q |f|^2 for real f, nonnegative for conductivity-type q.
pub fn quadratic_form(q: &ComplexField, f: &ComplexField) -> f64 {
    let grad = d(f).abs2().scale_re(4.0);
    (grad + &(q * &f.abs2())).integral().re
}

fn in_margin(g: &Grid, idx: usize, margin: f64) -> bool {
    let z = g.point_at(idx);
    z.re.abs() >= g.l() - margin || z.im.abs() >= g.l() - margin
}

/// Built-in conductivities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    /// gamma = 1 + amplitude exp(-1/(1 - |z|^2/radius^2)) on |z| < radius.
    RadialBump { amplitude: f64, radius: f64 },
    /// gamma = exp(2 phi), phi = amplitude exp(-|z|^2/width^2). Equal to 1
    /// to machine precision in the boundary margin for width << L.
    Gaussian { amplitude: f64, width: f64 },
    /// Non-radial: two Gaussian lumps of opposite sign in phi.
    TwoBump { amplitude: f64, width: f64, separation: f64 },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::RadialBump { .. } => "radial-bump",
            Generator::Gaussian { .. } => "gaussian",
            Generator::TwoBump { .. } => "two-bump",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Generator::RadialBump { amplitude, radius } => amplitude > -1.0 && radius > 0.0,
            Generator::Gaussian { width, .. } => width > 0.0,
            Generator::TwoBump { width, separation, .. } => width > 0.0 && separation >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("bad generator parameters {self:?}")))
        }
    }

    pub fn conductivity(&self, grid: &Grid) -> ComplexField {
        match *self {
            Generator::RadialBump { amplitude, radius } => ComplexField::from_real_fn(*grid, |z| {
                let s2 = z.norm_sqr() / (radius * radius);
                if s2 < 1.0 {
                    1.0 + amplitude * (-1.0 / (1.0 - s2)).exp()
                } else {
                    1.0
                }
            }),
            Generator::Gaussian { amplitude, width } => ComplexField::from_real_fn(*grid, |z| {
                (2.0 * amplitude * (-z.norm_sqr() / (width * width)).exp()).exp()
            }),
            Generator::TwoBump { amplitude, width, separation } => {
                let c = C64::from_polar(0.5 * separation, 0.6);
                ComplexField::from_real_fn(*grid, |z| {
                    let g1 = (-(z - c).norm_sqr() / (width * width)).exp();
                    let g2 = (-(z + c).norm_sqr() / (width * width)).exp();
                    (2.0 * amplitude * (g1 - 0.6 * g2)).exp()
                })
            }
        }
    }

    pub fn datum(&self, grid: &Grid) -> Result<MiuraDatum> {
        self.validate()?;
        conductivity_to_u(&self.conductivity(grid))
    }
}
