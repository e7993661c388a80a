//! Restarted GMRES for real-linear operators on complex vectors.
//!
//! The CGO equations are antilinear in the unknown, so they are linear only
//! over the reals.  Vectors are therefore treated as elements of R^{2N} with
//! inner product Re<x, y>; all Krylov coefficients are real.

use crate::field::C64;

#[derive(Clone, Copy, Debug)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn nrm(a: &[C64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves A x = b with A real-linear, starting from the contents of `x`.
/// Stops when ||b - A x|| <= tol ||b|| or after `max_iter` operator calls.
pub fn gmres<F>(mut apply: F, b: &[C64], x: &mut [C64], tol: f64, restart: usize, max_iter: usize) -> GmresOutcome
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = b.len();
    let bnorm = nrm(b).max(1e-300);
    let m = restart.max(1);
    let mut total = 0;
    let mut ax = vec![C64::new(0.0, 0.0); n];
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut w = vec![C64::new(0.0, 0.0); n];
    loop {
        apply(x, &mut ax);
        total += 1;
        let mut r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = nrm(&r);
        if beta / bnorm <= tol || total >= max_iter {
            return GmresOutcome { iterations: total, residual: beta / bnorm, converged: beta / bnorm <= tol };
        }
        r.iter_mut().for_each(|c| *c /= beta);
        basis.clear();
        basis.push(r);
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            apply(&basis[j], &mut w);
            total += 1;
            for i in 0..=j {
                let hij = dot(&basis[i], &w);
                h[i][j] = hij;
                for (wv, bv) in w.iter_mut().zip(&basis[i]) {
                    *wv -= bv * hij;
                }
            }
            let hn = nrm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let den = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if den == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / den;
            sn[j] = h[j + 1][j] / den;
            h[j][j] = den;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            let res = g[j + 1].abs() / bnorm;
            if res <= tol || total >= max_iter || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|c| c / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in (i + 1)..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xv, bv) in x.iter_mut().zip(&basis[i]) {
                *xv += bv * *yi;
            }
        }
    }
}
