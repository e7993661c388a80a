use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub type C64 = Complex64;

/// Floor used by every relative error in the crate.
pub const REL_FLOOR: f64 = 1e-14;

/// Samples of a complex function on a grid, row-major (iy, ix).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    data: Vec<C64>,
}

impl ComplexField {
    pub fn new(grid: Grid, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for an {}^2 grid",
                data.len(),
                grid.n()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Invalid("field contains NaN or Inf".into()));
        }
        Ok(ComplexField { grid, data })
    }

    /// Builds a field without the finiteness scan; callers guarantee the length.
    pub(crate) fn from_vec(grid: Grid, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        ComplexField { grid, data }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, C64::new(0.0, 0.0))
    }

    pub fn constant(grid: Grid, c: C64) -> Self {
        ComplexField { grid, data: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(C64) -> C64) -> Self {
        let n = grid.n();
        let xs = grid.coords();
        let mut data = Vec::with_capacity(grid.len());
        for iy in 0..n {
            for ix in 0..n {
                data.push(f(C64::new(xs[ix], xs[iy])));
            }
        }
        ComplexField { grid, data }
    }

    pub fn from_real_fn(grid: Grid, mut f: impl FnMut(C64) -> f64) -> Self {
        Self::from_fn(grid, |z| C64::new(f(z), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn at(&self, iy: usize, ix: usize) -> C64 {
        self.data[iy * self.grid.n() + ix]
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        ComplexField::from_vec(self.grid, self.data.iter().map(|&c| f(c)).collect())
    }

    pub fn map_with_point(&self, f: impl Fn(C64, C64) -> C64) -> Self {
        let g = self.grid;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &c)| f(g.point_at(i), c))
            .collect();
        ComplexField::from_vec(g, data)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        self.check_same(other);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        ComplexField::from_vec(self.grid, data)
    }

    fn check_same(&self, other: &Self) {
        assert!(
            self.grid.same_shape(&other.grid),
            "fields live on different grids"
        );
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    pub fn re(&self) -> Self {
        self.map(|c| C64::new(c.re, 0.0))
    }

    pub fn abs2(&self) -> Self {
        self.map(|c| C64::new(c.norm_sqr(), 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|c| c * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|c| c * s)
    }

    /// f(-z) on the same grid.
    pub fn reflect(&self) -> Self {
        let g = self.grid;
        let n = g.n();
        let mut out = vec![C64::new(0.0, 0.0); g.len()];
        for iy in 0..n {
            let ry = g.reflect_index(iy);
            for ix in 0..n {
                out[ry * n + g.reflect_index(ix)] = self.data[iy * n + ix];
            }
        }
        ComplexField::from_vec(g, out)
    }

    /// Trapezoid-rule integral over the periodic cell.
    pub fn integral(&self) -> C64 {
        self.data.iter().sum::<C64>() * self.grid.cell()
    }

    pub fn mean(&self) -> C64 {
        self.data.iter().sum::<C64>() / self.data.len() as f64
    }

    pub fn l2(&self) -> f64 {
        (self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn l1(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).sum::<f64>() * self.grid.cell()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn max_im(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }

    /// ||self - reference|| / max(||reference||, floor) in L^2.
    pub fn rel_l2_error(&self, reference: &Self) -> f64 {
        let diff = (self - reference).l2();
        diff / reference.l2().max(REL_FLOOR)
    }

    /// Same relative error restricted to nodes where `mask` holds.
    pub fn rel_l2_error_on(&self, reference: &Self, mask: impl Fn(C64) -> bool) -> f64 {
        self.check_same(reference);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, (a, b)) in self.data.iter().zip(&reference.data).enumerate() {
            if mask(self.grid.point_at(i)) {
                num += (a - b).norm_sqr();
                den += b.norm_sqr();
            }
        }
        num.sqrt() / den.sqrt().max(REL_FLOOR)
    }

    /// Zeroes every node where `keep` is false.
    pub fn masked(&self, keep: impl Fn(C64) -> bool) -> Self {
        self.map_with_point(|z, c| if keep(z) { c } else { C64::new(0.0, 0.0) })
    }

    /// Values on the outermost ring of nodes.
    pub fn boundary_frame(&self) -> Vec<C64> {
        let n = self.grid.n();
        let mut out = Vec::with_capacity(4 * n);
        for iy in 0..n {
            for ix in 0..n {
                if iy == 0 || ix == 0 || iy == n - 1 || ix == n - 1 {
                    out.push(self.data[iy * n + ix]);
                }
            }
        }
        out
    }

    /// Pairing sum f*g dA without conjugation.
    pub fn pair(&self, other: &Self) -> C64 {
        self.check_same(other);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<C64>() * self.grid.cell()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl<'a, 'b> $tr<&'b ComplexField> for &'a ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: &'b ComplexField) -> ComplexField {
                self.zip(rhs, |a, b| a $op b)
            }
        }
        impl $tr<ComplexField> for ComplexField {
            type Output = ComplexField;
            fn $m(mut self, rhs: ComplexField) -> ComplexField {
                self.check_same(&rhs);
                for (a, b) in self.data.iter_mut().zip(rhs.data) {
                    *a = *a $op b;
                }
                self
            }
        }
        impl<'b> $tr<&'b ComplexField> for ComplexField {
            type Output = ComplexField;
            fn $m(mut self, rhs: &'b ComplexField) -> ComplexField {
                self.check_same(rhs);
                for (a, b) in self.data.iter_mut().zip(&rhs.data) {
                    *a = *a $op *b;
                }
                self
            }
        }
        impl<'a> $tr<ComplexField> for &'a ComplexField {
            type Output = ComplexField;
            fn $m(self, rhs: ComplexField) -> ComplexField {
                self.zip(&rhs, |a, b| a $op b)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<C64> for &ComplexField {
    type Output = ComplexField;
    fn mul(self, s: C64) -> ComplexField {
        self.scale(s)
    }
}

impl Mul<C64> for ComplexField {
    type Output = ComplexField;
    fn mul(mut self, s: C64) -> ComplexField {
        self.data.iter_mut().for_each(|c| *c *= s);
        self
    }
}

impl Mul<f64> for &ComplexField {
    type Output = ComplexField;
    fn mul(self, s: f64) -> ComplexField {
        self.scale_re(s)
    }
}

impl Mul<f64> for ComplexField {
    type Output = ComplexField;
    fn mul(mut self, s: f64) -> ComplexField {
        self.data.iter_mut().for_each(|c| *c *= s);
        self
    }
}

impl Neg for &ComplexField {
    type Output = ComplexField;
    fn neg(self) -> ComplexField {
        self.map(|c| -c)
    }
}

impl Neg for ComplexField {
    type Output = ComplexField;
    fn neg(mut self) -> ComplexField {
        self.data.iter_mut().for_each(|c| *c = -*c);
        self
    }
}
