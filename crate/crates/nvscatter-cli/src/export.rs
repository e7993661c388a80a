//! Plot-ready CSV slices.

use nvscatter::ComplexField;
use std::fmt::Write;

/// Cut along the first axis through the origin row: x,re,im,abs.
pub fn axis_cut(f: &ComplexField) -> String {
    let g = f.grid();
    let iy = g.n() / 2;
    let mut s = String::from("x,re,im,abs\n");
    for ix in 0..g.n() {
        let v = f.at(iy, ix);
        writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", g.coord(ix), v.re, v.im, v.norm()).unwrap();
    }
    s
}

/// Mean modulus over rings of width h: radius,mean_abs,count.
pub fn radial_profile(f: &ComplexField) -> String {
    let g = f.grid();
    let bins = g.n() / 2;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (i, v) in f.data().iter().enumerate() {
        let b = (g.point_at(i).norm() / g.h()) as usize;
        if b < bins {
            sum[b] += v.norm();
            count[b] += 1;
        }
    }
    let mut s = String::from("radius,mean_abs,count\n");
    for b in 0..bins {
        if count[b] > 0 {
            writeln!(s, "{:.16e},{:.16e},{}", (b as f64 + 0.5) * g.h(), sum[b] / count[b] as f64, count[b]).unwrap();
        }
    }
    s
}

/// Full modulus grid: x1,x2,abs.
pub fn heat_map(f: &ComplexField) -> String {
    let mut s = String::from("x1,x2,abs\n");
    for (i, v) in f.data().iter().enumerate() {
        let p = f.grid().point_at(i);
        writeln!(s, "{:.16e},{:.16e},{:.16e}", p.re, p.im, v.norm()).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nvscatter::{Grid, C64};

    #[test]
    fn shapes() {
        let g = Grid::space(16, 4.0).unwrap();
        let f = ComplexField::from_fn(g, |z| C64::new(z.norm(), 0.0));
        assert_eq!(axis_cut(&f).lines().count(), 17);
        assert_eq!(heat_map(&f).lines().count(), 257);
        let prof = radial_profile(&f);
        let first: Vec<&str> = prof.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[2], "1");
        assert_eq!(first[1].parse::<f64>().unwrap(), 0.0);
    }
}
