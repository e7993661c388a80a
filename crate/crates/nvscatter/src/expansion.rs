//! Large-k expansion of the k-plane CGO solution nu and of its sharp
//! counterpart, and the residue formula for the mNV time derivative:
//!   u_t = 2 ( T1 + conj(T2) ),
//!   T1 = nu#_{2,3} + nu#_{2,2} nu_{1,0} + nu#_{2,1} nu_{1,1} + nu#_{2,0} nu_{1,2},
//!   T2 = nu_{2,3} + nu_{2,2} nu#_{1,0} + nu_{2,1} nu#_{1,1} + nu_{2,0} nu#_{1,2}.
//! Every coefficient is kept split by homogeneous degree in u, so the
//! cancellation of the fifth- and seventh-degree parts can be measured.

use crate::cgo::{nu_coefficient, solve_system, SolverConfig};
use crate::dsii::{ScatteringData, ScatteringKind};
use crate::error::{Error, Result};
use crate::field::{ComplexField, C64};
use crate::grid::Grid;
use crate::oracle::Kernels;
use crate::spectral::{dealiased_mul, Spectral, Symbol};
use std::f64::consts::PI;

/// Orders carried: nu_{1,l} and nu_{2,l} for l = 0..=3.
pub const ORDERS: usize = 4;
const DEGREES: usize = 2 * ORDERS + 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionOptions {
    pub kernels: Kernels,
    /// Extra zero mode of every dbar^{-1} output, as a multiple of the input mean.
    pub zero_mode: C64,
    pub dealias: bool,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions { kernels: Kernels::Plane, zero_mode: C64::new(0.0, 0.0), dealias: true }
    }
}

struct Ops {
    opts: ExpansionOptions,
    sp: std::sync::Arc<Spectral>,
}

impl Ops {
    fn new(grid: &Grid, opts: ExpansionOptions) -> Self {
        Ops { opts, sp: Spectral::for_grid(grid) }
    }

    fn mul(&self, f: &ComplexField, g: &ComplexField) -> ComplexField {
        if self.opts.dealias {
            dealiased_mul(f, g)
        } else {
            f * g
        }
    }

    fn dinv(&self, f: &ComplexField) -> ComplexField {
        let out = match self.opts.kernels {
            Kernels::Plane => self.sp.apply(f, Symbol::InvDbarPlane),
            Kernels::Periodic => self.sp.apply(f, Symbol::InvDbar),
        };
        if self.opts.zero_mode == C64::new(0.0, 0.0) {
            return out;
        }
        let shift = f.mean() * self.opts.zero_mode;
        out.map(|v| v + shift)
    }

    fn d(&self, f: &ComplexField) -> ComplexField {
        self.sp.apply(f, Symbol::D)
    }
}

/// A field split by homogeneous degree in u (index = degree).
#[derive(Clone, Debug)]
pub struct Graded {
    parts: Vec<Option<ComplexField>>,
    grid: Grid,
}

impl Graded {
    fn zero(grid: Grid) -> Self {
        Graded { parts: vec![None; DEGREES], grid }
    }

    fn single(deg: usize, f: ComplexField) -> Self {
        let mut g = Graded::zero(*f.grid());
        g.parts[deg] = Some(f);
        g
    }

    pub fn part(&self, deg: usize) -> ComplexField {
        self.parts.get(deg).cloned().flatten().unwrap_or_else(|| ComplexField::zeros(self.grid))
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.parts.len()).filter(|d| self.parts[*d].is_some()).collect()
    }

    pub fn total(&self) -> ComplexField {
        self.parts.iter().flatten().fold(ComplexField::zeros(self.grid), |acc, f| acc + f)
    }

    fn add_to(&mut self, deg: usize, f: ComplexField) {
        if deg >= self.parts.len() {
            self.parts.resize(deg + 1, None);
        }
        self.parts[deg] = Some(match self.parts[deg].take() {
            Some(g) => g + &f,
            None => f,
        });
    }

    fn map(&self, shift: usize, f: impl Fn(&ComplexField) -> ComplexField) -> Graded {
        let mut out = Graded::zero(self.grid);
        for d in self.degrees() {
            out.add_to(d + shift, f(self.parts[d].as_ref().unwrap()));
        }
        out
    }

    fn plus(mut self, other: &Graded) -> Graded {
        for d in other.degrees() {
            self.add_to(d, other.parts[d].clone().unwrap());
        }
        self
    }

    fn times(&self, other: &Graded, ops: &Ops) -> Graded {
        let mut out = Graded::zero(self.grid);
        for a in self.degrees() {
            for b in other.degrees() {
                out.add_to(a + b, ops.mul(self.parts[a].as_ref().unwrap(), other.parts[b].as_ref().unwrap()));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ExpansionCoefficients {
    pub nu1: Vec<Graded>,
    pub nu2: Vec<Graded>,
    pub sharp: bool,
}

impl ExpansionCoefficients {
    pub fn nu1(&self, l: usize) -> ComplexField {
        self.nu1[l].total()
    }

    pub fn nu2(&self, l: usize) -> ComplexField {
        self.nu2[l].total()
    }
}

/// nu_{2,0} = b/2, nu_{2,l} = b nu_{1,l-1}/2 - s d nu_{2,l-1},
/// nu_{1,l} = s dbar^{-1}(a nu_{2,l})/2, with (a, b, s) = (u, conj u, 1)
/// for nu and (-conj u, -u, -1) for nu#.
fn recurrence(u: &ComplexField, sharp: bool, ops: &Ops) -> ExpansionCoefficients {
    let (a, b, s) = if sharp { (u.conj().scale_re(-1.0), u.scale_re(-1.0), -1.0) } else { (u.clone(), u.conj(), 1.0) };
    let mut nu1: Vec<Graded> = Vec::with_capacity(ORDERS);
    let mut nu2: Vec<Graded> = Vec::with_capacity(ORDERS);
    for l in 0..ORDERS {
        let n2 = if l == 0 {
            Graded::single(1, b.scale_re(0.5))
        } else {
            let first = nu1[l - 1].map(1, |f| ops.mul(&b, f).scale_re(0.5));
            let second = nu2[l - 1].map(0, |f| ops.d(f).scale_re(-s));
            first.plus(&second)
        };
        let n1 = n2.map(1, |f| ops.dinv(&ops.mul(&a, f)).scale_re(0.5 * s));
        nu1.push(n1);
        nu2.push(n2);
    }
    ExpansionCoefficients { nu1, nu2, sharp }
}

pub fn nu_coeffs(u: &ComplexField) -> ExpansionCoefficients {
    nu_coeffs_with(u, ExpansionOptions::default())
}

pub fn nu_coeffs_with(u: &ComplexField, opts: ExpansionOptions) -> ExpansionCoefficients {
    recurrence(u, false, &Ops::new(u.grid(), opts))
}

/// Coefficients of nu# evaluated at -z, by the substitution rules
/// u -> -conj u, conj u -> -u, d -> -d, dbar^{-1} -> -dbar^{-1}.
pub fn nu_sharp_coeffs(u: &ComplexField) -> ExpansionCoefficients {
    nu_sharp_coeffs_with(u, ExpansionOptions::default())
}

pub fn nu_sharp_coeffs_with(u: &ComplexField, opts: ExpansionOptions) -> ExpansionCoefficients {
    recurrence(u, true, &Ops::new(u.grid(), opts))
}

/// The two bracket sums split by degree.
pub struct ResidueTerms {
    /// Summands of T1 and T2, each split by degree.
    pub t1: Vec<Graded>,
    pub t2: Vec<Graded>,
}

impl ResidueTerms {
    pub fn new(u: &ComplexField, opts: ExpansionOptions) -> Self {
        let ops = Ops::new(u.grid(), opts);
        let p = recurrence(u, false, &ops);
        let s = recurrence(u, true, &ops);
        let t1 = vec![
            s.nu2[3].clone(),
            s.nu2[2].times(&p.nu1[0], &ops),
            s.nu2[1].times(&p.nu1[1], &ops),
            s.nu2[0].times(&p.nu1[2], &ops),
        ];
        let t2 = vec![
            p.nu2[3].clone(),
            p.nu2[2].times(&s.nu1[0], &ops),
            p.nu2[1].times(&s.nu1[1], &ops),
            p.nu2[0].times(&s.nu1[2], &ops),
        ];
        ResidueTerms { t1, t2 }
    }

    fn sum(terms: &[Graded]) -> ComplexField {
        terms.iter().map(|g| g.total()).reduce(|a, b| a + &b).unwrap()
    }

    pub fn rhs(&self) -> ComplexField {
        (Self::sum(&self.t1) + &Self::sum(&self.t2).conj()).scale_re(2.0)
    }

    /// ||sum of the degree-`deg` parts|| / max ||member||, for T1 and T2.
    pub fn cancellation(&self, deg: usize) -> (f64, f64) {
        let ratio = |terms: &[Graded]| {
            let parts: Vec<ComplexField> = terms.iter().map(|g| g.part(deg)).collect();
            let largest = parts.iter().map(|p| p.l2()).fold(0.0, f64::max);
            let total = parts.into_iter().reduce(|a, b| a + &b).unwrap();
            if largest == 0.0 {
                0.0
            } else {
                total.l2() / largest
            }
        };
        (ratio(&self.t1), ratio(&self.t2))
    }
}

/// u_t from the residue formula.
pub fn residue_rhs(u: &ComplexField) -> ComplexField {
    residue_rhs_with(u, ExpansionOptions::default())
}

pub fn residue_rhs_with(u: &ComplexField, opts: ExpansionOptions) -> ComplexField {
    ResidueTerms::new(u, opts).rhs()
}

/// nu_2(z, k) for |k| outside the support of r, by direct quadrature of
/// nu_2 = (1/2) P_k(c conj nu_1) after solving nu_1 on the k-grid.
pub fn nu2_off_grid(r: &ScatteringData, z: C64, ks: &[C64], cfg: &SolverConfig) -> Result<Vec<C64>> {
    if r.kind != ScatteringKind::DsiiR {
        return Err(Error::Invalid("large-k fit needs dsii_r data".into()));
    }
    let kg = *r.field.grid();
    let coef = nu_coefficient(&r.field, z);
    let (n1, _, _, _) = solve_system(&kg, coef.clone(), cfg, z, false)?;
    let dens: Vec<C64> = coef.iter().zip(&n1).map(|(c, n)| c * n.conj()).collect();
    let w = kg.cell() / (2.0 * PI);
    Ok(ks
        .iter()
        .map(|&k| {
            (0..kg.len())
                .map(|i| dens[i] / (k - kg.point_at(i)))
                .sum::<C64>()
                * w
        })
        .collect())
}

/// Fits nu_2(z, k) ~ sum_{l < terms} a_l k^{-l-1} on circles |k| = radii
/// (`angles` samples each) and returns a_0, the estimate of nu_{2,0}(z).
pub fn large_k_fit(r: &ScatteringData, z: C64, radii: &[f64], angles: usize, terms: usize, cfg: &SolverConfig) -> Result<C64> {
    // r must be negligible near |k| = K, so circles beyond K only meet
    // quadrature nodes where the density vanishes
    let kmax = r.k_cutoff();
    if radii.iter().any(|&rad| rad <= kmax) {
        return Err(Error::Invalid(format!("fit radii must exceed k_max = {kmax}")));
    }
    let ks: Vec<C64> = radii
        .iter()
        .flat_map(|&rad| (0..angles).map(move |j| C64::from_polar(rad, 2.0 * PI * (j as f64 + 0.25) / angles as f64)))
        .collect();
    let vals = nu2_off_grid(r, z, &ks, cfg)?;
    // normal equations of the least-squares problem
    let rows: Vec<Vec<C64>> = ks.iter().map(|k| (0..terms).map(|l| k.powi(-(l as i32) - 1)).collect()).collect();
    let mut a = vec![vec![C64::new(0.0, 0.0); terms]; terms];
    let mut b = vec![C64::new(0.0, 0.0); terms];
    for (row, v) in rows.iter().zip(&vals) {
        for i in 0..terms {
            b[i] += row[i].conj() * v;
            for j in 0..terms {
                a[i][j] += row[i].conj() * row[j];
            }
        }
    }
    Ok(crate::cgo::solve_dense(a, b)[0])
}
