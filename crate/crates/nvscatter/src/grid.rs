use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which plane a grid samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Space,
    Spectral,
}

impl Role {
    pub fn code(self) -> u8 {
        match self {
            Role::Space => 0,
            Role::Spectral => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Role> {
        match c {
            0 => Some(Role::Space),
            1 => Some(Role::Spectral),
            _ => None,
        }
    }
}

/// Uniform periodic lattice over [-L, L)^2 with n points per side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    l: f64,
    role: Role,
}

impl Grid {
    pub fn new(n: usize, l: f64, role: Role) -> Result<Grid> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 16")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid(format!("L = {l} must be positive")));
        }
        Ok(Grid { n, l, role })
    }

    pub fn space(n: usize, l: f64) -> Result<Grid> {
        Grid::new(n, l, Role::Space)
    }

    pub fn spectral(n: usize, l: f64) -> Result<Grid> {
        Grid::new(n, l, Role::Spectral)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    /// Area element of the trapezoid rule.
    pub fn cell(&self) -> f64 {
        self.h() * self.h()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    pub fn point(&self, iy: usize, ix: usize) -> Complex64 {
        Complex64::new(self.coord(ix), self.coord(iy))
    }

    pub fn point_at(&self, idx: usize) -> Complex64 {
        self.point(idx / self.n, idx % self.n)
    }

    /// Index of the node at -z (periodic wrap for the leftmost column).
    pub fn reflect_index(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Angular wavenumbers in FFT order with the Nyquist entry set to zero.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        let dk = PI / self.l;
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64 * dk
                } else if j == n / 2 {
                    0.0
                } else {
                    (j as f64 - n as f64) * dk
                }
            })
            .collect()
    }

    /// Largest |xi| represented (diagonal Nyquist corner).
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::SQRT_2 * PI / self.h()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.n == other.n && self.l == other.l
    }

    pub fn with_role(&self, role: Role) -> Grid {
        Grid { role, ..*self }
    }
}
