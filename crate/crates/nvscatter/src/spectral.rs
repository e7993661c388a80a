//! Fourier-multiplier calculus on the periodic grid.
//!
//! Spectra are kept in transposed order (kx major) so that a forward and an
//! inverse transform each cost two batched row passes and one transpose.

use crate::field::{ComplexField, C64};
use crate::grid::Grid;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Fourier multipliers available on every grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    /// dbar = (d/dx1 + i d/dx2)/2
    Dbar,
    /// d = (d/dx1 - i d/dx2)/2
    D,
    /// Periodic inverse of dbar, zero mode set to 0.
    InvDbar,
    /// Periodic inverse of d, zero mode set to 0.
    InvD,
    /// Truncated-kernel inverse of dbar: exact planar Cauchy transform for
    /// data supported in |z| <= L/2, evaluated on |z| <= L - supp.
    InvDbarPlane,
    InvDPlane,
    /// d o InvDbar (modulus one away from the zero mode).
    Beurling,
    /// dbar o InvD.
    BeurlingBar,
    BeurlingPlane,
    BeurlingBarPlane,
    Laplacian,
}

pub struct Spectral {
    n: usize,
    l: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch_len: usize,
    xi: Vec<f64>,
    syms: HashMap<SymbolKey, Vec<C64>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct SymbolKey(u8);

impl From<Symbol> for SymbolKey {
    fn from(s: Symbol) -> Self {
        SymbolKey(s as u8)
    }
}

const ALL: [Symbol; 11] = [
    Symbol::Dbar,
    Symbol::D,
    Symbol::InvDbar,
    Symbol::InvD,
    Symbol::InvDbarPlane,
    Symbol::InvDPlane,
    Symbol::Beurling,
    Symbol::BeurlingBar,
    Symbol::BeurlingPlane,
    Symbol::BeurlingBarPlane,
    Symbol::Laplacian,
];

fn plan_cache() -> &'static Mutex<(FftPlanner<f64>, HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>)> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>)>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

/// Forward and inverse 1-D plans of length n, shared process-wide.
pub fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut guard = plan_cache().lock().unwrap();
    let (planner, map) = &mut *guard;
    if let Some(p) = map.get(&n) {
        return p.clone();
    }
    let p = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    map.insert(n, p.clone());
    p
}

fn transpose(buf: &mut [C64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

impl Spectral {
    fn build(grid: &Grid) -> Spectral {
        let n = grid.n();
        let l = grid.l();
        let (fwd, inv) = plans(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let xi = grid.wavenumbers();
        let half_i = C64::new(0.0, 0.5);
        let mut syms = HashMap::new();
        let mut tables: Vec<Vec<C64>> = (0..ALL.len()).map(|_| Vec::with_capacity(n * n)).collect();
        for kx in 0..n {
            for ky in 0..n {
                let (x1, x2) = (xi[kx], xi[ky]);
                let a = half_i * C64::new(x1, x2);
                let b = half_i * C64::new(x1, -x2);
                let rho = (x1 * x1 + x2 * x2).sqrt();
                let zero = a.norm() == 0.0;
                let cut = 1.0 - puruspe::bessel::Jn(0, l * rho);
                let inv_a = if zero { C64::new(0.0, 0.0) } else { 1.0 / a };
                let inv_b = if zero { C64::new(0.0, 0.0) } else { 1.0 / b };
                let vals = [
                    a,
                    b,
                    inv_a,
                    inv_b,
                    inv_a * cut,
                    inv_b * cut,
                    b * inv_a,
                    a * inv_b,
                    b * inv_a * cut,
                    a * inv_b * cut,
                    C64::new(-rho * rho, 0.0),
                ];
                for (t, v) in tables.iter_mut().zip(vals) {
                    t.push(v);
                }
            }
        }
        for (s, t) in ALL.iter().zip(tables) {
            syms.insert(SymbolKey::from(*s), t);
        }
        Spectral { n, l, fwd, inv, scratch_len, xi, syms }
    }

    /// Cached instance for the grid's shape.
    pub fn for_grid(grid: &Grid) -> Arc<Spectral> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<Spectral>>>> = OnceLock::new();
        let key = (grid.n(), grid.l().to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(s) = cache.lock().unwrap().get(&key) {
            return s.clone();
        }
        let s = Arc::new(Spectral::build(grid));
        cache.lock().unwrap().entry(key).or_insert(s).clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.xi
    }

    pub fn scratch(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.scratch_len]
    }

    pub fn symbol(&self, s: Symbol) -> &[C64] {
        &self.syms[&SymbolKey::from(s)]
    }

    /// In-place forward transform; output in transposed (kx, ky) order.
    pub fn forward(&self, buf: &mut [C64], scratch: &mut [C64]) {
        self.fwd.process_with_scratch(buf, scratch);
        transpose(buf, self.n);
        self.fwd.process_with_scratch(buf, scratch);
    }

    /// Inverse of `forward`, including the 1/n^2 normalisation.
    pub fn inverse(&self, buf: &mut [C64], scratch: &mut [C64]) {
        self.inv.process_with_scratch(buf, scratch);
        transpose(buf, self.n);
        self.inv.process_with_scratch(buf, scratch);
        let s = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|c| *c *= s);
    }

    /// buf <- F^{-1}[ factor * sym * F[buf] ].
    pub fn apply_in_place(&self, buf: &mut [C64], s: Symbol, factor: C64, scratch: &mut [C64]) {
        self.forward(buf, scratch);
        for (c, m) in buf.iter_mut().zip(self.symbol(s)) {
            *c *= m * factor;
        }
        self.inverse(buf, scratch);
    }

    pub fn apply(&self, f: &ComplexField, s: Symbol) -> ComplexField {
        self.apply_chain(f, &[s])
    }

    pub fn apply_chain(&self, f: &ComplexField, chain: &[Symbol]) -> ComplexField {
        let mut buf = f.data().to_vec();
        let mut scratch = self.scratch();
        self.forward(&mut buf, &mut scratch);
        for s in chain {
            for (c, m) in buf.iter_mut().zip(self.symbol(*s)) {
                *c *= m;
            }
        }
        self.inverse(&mut buf, &mut scratch);
        ComplexField::from_vec(*f.grid(), buf)
    }
}

fn op(f: &ComplexField, s: Symbol) -> ComplexField {
    Spectral::for_grid(f.grid()).apply(f, s)
}

pub fn dbar(f: &ComplexField) -> ComplexField {
    op(f, Symbol::Dbar)
}

pub fn d(f: &ComplexField) -> ComplexField {
    op(f, Symbol::D)
}

pub fn laplacian(f: &ComplexField) -> ComplexField {
    op(f, Symbol::Laplacian)
}

/// Periodic inverse of dbar with the zero Fourier mode of the output set to 0.
pub fn cauchy_p(f: &ComplexField) -> ComplexField {
    op(f, Symbol::InvDbar)
}

pub fn cauchy_pbar(f: &ComplexField) -> ComplexField {
    op(f, Symbol::InvD)
}

pub fn beurling(f: &ComplexField) -> ComplexField {
    op(f, Symbol::Beurling)
}

/// Planar dbar^{-1} through the truncated kernel 1/(pi z) on |z| < L.
pub fn cauchy_plane(f: &ComplexField) -> ComplexField {
    op(f, Symbol::InvDbarPlane)
}

pub fn cauchy_plane_bar(f: &ComplexField) -> ComplexField {
    op(f, Symbol::InvDPlane)
}

/// e_k(z) = exp(conj(k) conj(z) - k z) on the grid.
pub fn ek_phase(grid: &Grid, k: C64) -> ComplexField {
    let xs = grid.coords();
    // conj(kz) - kz = -2i (k_i x + k_r y), separable in x and y
    let ex: Vec<C64> = xs.iter().map(|&x| C64::from_polar(1.0, -2.0 * k.im * x)).collect();
    let ey: Vec<C64> = xs.iter().map(|&y| C64::from_polar(1.0, -2.0 * k.re * y)).collect();
    let n = grid.n();
    let mut data = Vec::with_capacity(grid.len());
    for iy in 0..n {
        for ix in 0..n {
            data.push(ey[iy] * ex[ix]);
        }
    }
    ComplexField::from_vec(*grid, data)
}

fn pad_index(j: usize, n: usize, m: usize) -> Option<usize> {
    if j < n / 2 {
        Some(j)
    } else if j == n / 2 {
        None
    } else {
        Some(m - (n - j))
    }
}

/// Product f*g with 3/2 zero-padding (2/3 rule): the result is the exact
/// projection of the product onto the grid's band.
pub fn dealiased_mul(f: &ComplexField, g: &ComplexField) -> ComplexField {
    let grid = *f.grid();
    assert!(grid.same_shape(g.grid()));
    let n = grid.n();
    let m = 3 * n / 2;
    let sp = Spectral::for_grid(&grid);
    let (pf, pi) = plans(m);
    let mut scratch = vec![C64::new(0.0, 0.0); pf.get_inplace_scratch_len().max(pi.get_inplace_scratch_len()).max(sp.scratch_len)];

    let lift = |src: &ComplexField, scratch: &mut [C64]| -> Vec<C64> {
        let mut s = src.data().to_vec();
        sp.forward(&mut s, scratch);
        let mut big = vec![C64::new(0.0, 0.0); m * m];
        for kx in 0..n {
            let Some(bx) = pad_index(kx, n, m) else { continue };
            for ky in 0..n {
                let Some(by) = pad_index(ky, n, m) else { continue };
                big[bx * m + by] = s[kx * n + ky];
            }
        }
        // inverse on the fine grid (transposed order in, natural order out)
        pi.process_with_scratch(&mut big, scratch);
        transpose(&mut big, m);
        pi.process_with_scratch(&mut big, scratch);
        big
    };
    let a = lift(f, &mut scratch);
    let b = lift(g, &mut scratch);
    let mut prod: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    pf.process_with_scratch(&mut prod, &mut scratch);
    transpose(&mut prod, m);
    pf.process_with_scratch(&mut prod, &mut scratch);
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    let scale = 1.0 / ((n * n) as f64 * (m * m) as f64);
    for kx in 0..n {
        let Some(bx) = pad_index(kx, n, m) else { continue };
        for ky in 0..n {
            let Some(by) = pad_index(ky, n, m) else { continue };
            out[kx * n + ky] = prod[bx * m + by] * scale;
        }
    }
    sp.inverse(&mut out, &mut scratch);
    ComplexField::from_vec(grid, out)
}

/// Erf step with its derivative: 1 to machine precision on |x| <= a and
/// 0 to machine precision at |x| = b. Its spectrum decays like a Gaussian,
/// unlike compactly supported bumps.
pub fn erf_step(x: f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let sigma = (b - a) / (2.0 * ERF_SPAN);
    let y = (x.abs() - c) / sigma;
    let s = 0.5 * puruspe::erfc(y);
    let ds = -(-y * y).exp() / (sigma * std::f64::consts::PI.sqrt());
    (s, ds * x.signum())
}

// erfc(5.9) / 2 is below 1e-16
const ERF_SPAN: f64 = 5.9;

/// Separable window chi = s(x1) s(x2) with its dbar; chi = 1 on the square
/// |x_i| <= inner and vanishes at the edge of the grid.
pub fn window(grid: &Grid, inner: f64) -> (ComplexField, ComplexField) {
    let s: Vec<(f64, f64)> = grid.coords().iter().map(|&x| erf_step(x, inner, grid.l())).collect();
    let n = grid.n();
    let mut chi = Vec::with_capacity(grid.len());
    let mut dchi = Vec::with_capacity(grid.len());
    for iy in 0..n {
        for ix in 0..n {
            let (sx, dsx) = s[ix];
            let (sy, dsy) = s[iy];
            chi.push(C64::new(sx * sy, 0.0));
            dchi.push(C64::new(0.5 * dsx * sy, 0.5 * sx * dsy));
        }
    }
    (ComplexField::from_vec(*grid, chi), ComplexField::from_vec(*grid, dchi))
}

/// dbar of a smooth but non-periodic field (e.g. one with a 1/z tail):
/// dbar(chi f) - f dbar(chi) = chi dbar f, so exact wherever chi = 1.
pub fn dbar_windowed(f: &ComplexField, inner: f64) -> ComplexField {
    let (chi, dchi) = window(f.grid(), inner);
    dbar(&(&chi * f)) - &(f * &dchi)
}

/// Sobolev-type weights for H^{m,n}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SobolevWeights {
    pub m: u8,
    pub nweight: u8,
}

impl SobolevWeights {
    pub fn new(m: u8, nweight: u8) -> crate::Result<Self> {
        if m > 2 || nweight > 2 {
            return Err(crate::Error::Invalid(format!("weights ({m},{nweight}) outside 0..=2")));
        }
        Ok(SobolevWeights { m, nweight })
    }
}

/// max(||(1-Lap)^{m/2} f||_2, ||(1+|z|)^n f||_2); equals ||f||_2 for (0,0).
pub fn norm(f: &ComplexField, w: SobolevWeights) -> f64 {
    let sp = Spectral::for_grid(f.grid());
    let mut buf = f.data().to_vec();
    let mut scratch = sp.scratch();
    sp.forward(&mut buf, &mut scratch);
    let lap = sp.symbol(Symbol::Laplacian);
    for (c, l) in buf.iter_mut().zip(lap) {
        *c *= (1.0 - l.re).powf(w.m as f64 / 2.0);
    }
    sp.inverse(&mut buf, &mut scratch);
    let smooth = ComplexField::from_vec(*f.grid(), buf).l2();
    let weighted = f
        .map_with_point(|z, c| c * (1.0 + z.norm()).powi(w.nweight as i32))
        .l2();
    smooth.max(weighted)
}

/// Trapezoid L^p norm; p = f64::INFINITY gives the max norm.
pub fn lp_norm(f: &ComplexField, p: f64) -> f64 {
    assert!(p >= 1.0, "p must be >= 1");
    if p.is_infinite() {
        return f.max_abs();
    }
    (f.data().iter().map(|c| c.norm().powf(p)).sum::<f64>() * f.grid().cell()).powf(1.0 / p)
}
