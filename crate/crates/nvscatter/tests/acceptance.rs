//! Acceptance suite on the reference configuration (z 128/L8, k 96/K6).
//! Prints one PASS/FAIL line per criterion; exits non-zero on any failure.

use nvscatter::cgo::SolverConfig;
use nvscatter::dsii::{forward_r, inverse_i_within, ScatteringData};
use nvscatter::evolution::{
    check_phase, evolve_r, evolve_t_schrodinger, nv_via_schrodinger, solve_mnv, solve_nv, EvolutionPlan, Flavor, IstConfig,
};
use nvscatter::expansion::{large_k_fit, nu_coeffs, residue_rhs, ExpansionOptions, ResidueTerms};
use nvscatter::miura::{check_domain, miura_map, Generator, MiuraDatum};
use nvscatter::oracle::{
    eval_nl_mnv, linear, step_mnv, step_nv, strong_residual, weak_residual, Equation, Model, Scheme, StepperConfig, TestFunction,
    TimeBump,
};
use nvscatter::schrodinger::{forward_pair, forward_t, intertwine, inverse_q};
use nvscatter::spectral::{d, Spectral, Symbol};
use nvscatter::{ComplexField, Grid, Result, C64};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

const RADIUS: f64 = 5.0;
const PHASE_THRESHOLD: f64 = 1e-3;

struct Reference {
    zg: Grid,
    kg: Grid,
    cfg: SolverConfig,
    /// radial conductivity
    a: MiuraDatum,
    /// non-radial two-lump conductivity
    b: MiuraDatum,
}

fn reference() -> &'static Reference {
    static R: OnceLock<Reference> = OnceLock::new();
    R.get_or_init(|| {
        let zg = Grid::space(128, 8.0).unwrap();
        Reference {
            zg,
            kg: Grid::spectral(96, 6.0).unwrap(),
            cfg: SolverConfig::default(),
            a: Generator::Gaussian { amplitude: 0.6, width: 1.0 }.datum(&zg).unwrap(),
            b: Generator::TwoBump { amplitude: 0.5, width: 0.9, separation: 1.6 }.datum(&zg).unwrap(),
        }
    })
}

fn datum(which: char) -> &'static MiuraDatum {
    if which == 'a' {
        &reference().a
    } else {
        &reference().b
    }
}

/// (r, t) of a dataset.
fn pair(which: char) -> &'static (ScatteringData, ScatteringData) {
    static A: OnceLock<(ScatteringData, ScatteringData)> = OnceLock::new();
    static B: OnceLock<(ScatteringData, ScatteringData)> = OnceLock::new();
    let cell = if which == 'a' { &A } else { &B };
    cell.get_or_init(|| {
        let r = reference();
        forward_pair(&datum(which).u, &r.kg, &r.cfg).unwrap()
    })
}

fn memo(key: String, f: impl FnOnce() -> Result<ComplexField>) -> Result<ComplexField> {
    static M: OnceLock<Mutex<HashMap<String, ComplexField>>> = OnceLock::new();
    let m = M.get_or_init(Default::default);
    if let Some(v) = m.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = f()?;
    m.lock().unwrap().insert(key, v.clone());
    Ok(v)
}

/// u(t) through the DSII side, solving only at |z| <= RADIUS.
fn ist_u(which: char, t: f64) -> Result<ComplexField> {
    ist_u_within(which, t, Some(RADIUS))
}

fn ist_u_within(which: char, t: f64, radius: Option<f64>) -> Result<ComplexField> {
    memo(format!("u{which}{t}{radius:?}"), || {
        let r = &pair(which).0;
        check_phase(r, t, PHASE_THRESHOLD)?;
        inverse_i_within(&evolve_r(r, t)?, &reference().zg, &reference().cfg, radius)
    })
}

/// q(t) through the Schrodinger side.
fn schrodinger_q(which: char, t: f64) -> Result<ComplexField> {
    memo(format!("q{which}{t}"), || {
        let tt = &pair(which).1;
        check_phase(tt, t, PHASE_THRESHOLD)?;
        inverse_q(&evolve_t_schrodinger(tt, t)?, &reference().zg, &reference().cfg)
    })
}

fn rel(a: &ComplexField, reference: &ComplexField) -> f64 {
    (a - reference).l2() / reference.l2()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn c1_roundtrip() -> Result<Outcome> {
    let r = reference();
    let coarse = Grid::spectral(64, 4.0)?;
    let mut pass = true;
    let mut detail = String::new();
    for w in ['a', 'b'] {
        let u0 = &datum(w).u;
        let fine = rel(&ist_u(w, 0.0)?, u0);
        let rc = forward_r(u0, &coarse, &r.cfg)?;
        let cu = inverse_i_within(&rc, &r.zg, &r.cfg, Some(RADIUS))?;
        let err_coarse = rel(&cu, u0);
        pass &= fine <= 5e-3 && fine < err_coarse;
        detail += &format!("{w}: {fine:.2e} (k 64/K4: {err_coarse:.2e}) ");
    }
    outcome(pass, detail)
}

fn intertwining_error(which: char) -> Result<f64> {
    let (r, t) = pair(which);
    let ti = intertwine(r)?;
    let kg = reference().kg;
    let mut worst: f64 = 0.0;
    for (i, (a, b)) in ti.field.data().iter().zip(t.field.data()).enumerate() {
        let k = kg.point_at(i).norm();
        if (0.5..=3.0).contains(&k) {
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    Ok(worst)
}

fn c2_intertwining() -> Result<Outcome> {
    let (ea, eb) = (intertwining_error('a')?, intertwining_error('b')?);
    outcome(ea.max(eb) <= 1e-2, format!("max rel a {ea:.2e}, b {eb:.2e} on 0.5 <= |k| <= 3"))
}

fn c3_inverse_side() -> Result<Outcome> {
    let r = reference();
    let qt_a = rel(&schrodinger_q('a', 0.0)?, &r.a.q);
    let qt_b = rel(&schrodinger_q('b', 0.0)?, &r.b.q);
    let from_r = inverse_q(&intertwine(&pair('a').0)?, &r.zg, &r.cfg)?;
    let from_intertwined = rel(&from_r, &miura_map(&r.a.u));
    let worst = qt_a.max(qt_b).max(from_intertwined);
    outcome(worst <= 2e-2, format!("QT a {qt_a:.2e}, b {qt_b:.2e}; Q(t from r) vs 2du+|u|^2 {from_intertwined:.2e}"))
}

fn c4_two_path() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for t in [0.0, 0.02, 0.05] {
        let q_ist = miura_map(&ist_u('a', t)?);
        let e = rel(&schrodinger_q('a', t)?, &q_ist);
        worst = worst.max(e);
        detail += &format!("t={t}: {e:.2e} ");
    }
    outcome(worst <= 2e-2, detail)
}

fn c5_residue() -> Result<Outcome> {
    let g = Grid::space(256, 8.0)?;
    let mut pass = true;
    let mut detail = String::new();
    let gens = [
        ('a', Generator::Gaussian { amplitude: 0.6, width: 1.0 }),
        ('b', Generator::TwoBump { amplitude: 0.5, width: 0.9, separation: 1.6 }),
    ];
    for (w, gen) in gens {
        let u = gen.datum(&g)?.u;
        let terms = ResidueTerms::new(&u, ExpansionOptions::default());
        let nl = eval_nl_mnv(&u);
        let d3 = Spectral::for_grid(&g).apply_chain(&u, &[Symbol::D, Symbol::D, Symbol::D]);
        let defect = (terms.rhs() - &linear(&u) + &nl).l2() / (d3.l2() + nl.l2());
        let (c5a, c5b) = terms.cancellation(5);
        let (c7a, c7b) = terms.cancellation(7);
        pass &= defect <= 1e-4 && c5a.max(c5b) <= 1e-6;
        detail += &format!("{w}: identity {defect:.2e}, 5th {:.2e}, 7th {:.2e}; ", c5a.max(c5b), c7a.max(c7b));
    }
    outcome(pass, detail)
}

/// Full-grid reconstructions: dispersive tails leave |z| <= RADIUS by
/// t = 0.1 and carry mass. The two-lump data needs finer k sampling than
/// the reference grid beyond t = 0.05 (the phase guard refuses it), so it
/// is checked up to there.
fn c6_conservation() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = String::new();
    for (w, times) in [('a', &[0.02, 0.05, 0.1][..]), ('b', &[0.02, 0.05][..])] {
        let u0 = &datum(w).u;
        let m0 = u0.integral();
        let (mut dm, mut sym): (f64, f64) = (0.0, 0.0);
        for &t in times {
            let u = ist_u_within(w, t, None)?;
            let (_, defect) = check_domain(&u);
            dm = dm.max((u.integral() - m0).norm() / u0.l1());
            sym = sym.max(defect / d(&u).max_abs());
        }
        pass &= dm <= 1e-6 && sym <= 1e-4;
        detail += &format!("{w} (t <= {}): mass drift/||u0||_1 {dm:.2e}, symmetry/max|du| {sym:.2e}; ", times[times.len() - 1]);
    }
    outcome(pass, detail)
}

fn c7_oracle() -> Result<Outcome> {
    let u0 = &reference().a.u;
    let times: Vec<f64> = (40..=60).map(|i| i as f64 * 1e-3).collect();
    let traj: Vec<(f64, ComplexField)> = times.iter().map(|&t| ist_u('a', t).map(|u| (t, u))).collect::<Result<_>>()?;
    let stepper = StepperConfig::new(1e-4, Scheme::EtdRk4, true, &reference().zg)?;
    let direct = step_mnv(u0, &stepper, 0.05)?;
    let agree = rel(&traj[10].1, &direct);
    let model = Model::new(Equation::Mnv);
    let strong = strong_residual(&traj, &model)?;
    let g = reference().zg;
    let family: Vec<TestFunction> = [C64::new(0.6, 0.0), C64::new(-1.0, 0.3), C64::new(0.0, 1.0), C64::new(0.5, -0.8), C64::new(-0.7, -0.6)]
        .iter()
        .map(|&c| TestFunction {
            space: ComplexField::from_real_fn(g, |z| (-(z - c).norm_sqr() / 0.6).exp()),
            time: TimeBump { t0: 0.04, t1: 0.06 },
        })
        .collect();
    let weak = weak_residual(&traj, &model, &family)?;
    outcome(
        agree <= 2e-2 && strong <= 5e-3 && weak <= 1e-2,
        format!("IST vs ETDRK4 at t=0.05 {agree:.2e}; strong {strong:.2e} (dt 1e-3); weak {weak:.2e} (5 test functions)"),
    )
}

fn c8_multipliers() -> Result<Outcome> {
    let (r, t) = pair('a');
    let (mut modulus, mut additive): (f64, f64) = (0.0, 0.0);
    for (data, evolve) in [
        (r, evolve_r as fn(&ScatteringData, f64) -> Result<ScatteringData>),
        (t, evolve_t_schrodinger as fn(&ScatteringData, f64) -> Result<ScatteringData>),
    ] {
        let scale = data.field.max_abs();
        for (s, tt) in [(0.01, 0.04), (0.05, 0.05), (0.1, 0.2), (0.7, 0.3)] {
            let once = evolve(data, s)?;
            for (a, b) in once.field.data().iter().zip(data.field.data()) {
                if b.norm() > 0.0 {
                    modulus = modulus.max((a.norm() / b.norm() - 1.0).abs());
                }
            }
            let twice = evolve(&once, tt)?;
            let direct = evolve(data, s + tt)?;
            additive = additive.max((&twice.field - &direct.field).max_abs() / scale);
        }
    }
    outcome(modulus <= 1e-14 && additive <= 1e-12, format!("modulus {modulus:.2e}, additivity {additive:.2e}"))
}

fn c9_zero() -> Result<Outcome> {
    let r = reference();
    let zero = ComplexField::zeros(r.zg);
    let plan = EvolutionPlan::new(vec![0.0, 0.05, 0.1], Flavor::MnvCubic)?;
    let ist = IstConfig::new(r.kg);
    let stepper = StepperConfig::new(1e-4, Scheme::EtdRk4, true, &r.zg)?;
    let rz = forward_r(&zero, &r.kg, &r.cfg)?;
    let tz = forward_t(&zero, &r.kg, &r.cfg)?;
    let mut outs: Vec<(&str, f64)> = vec![
        ("R", rz.field.max_abs()),
        ("T", tz.field.max_abs()),
        ("I", inverse_i_within(&rz, &r.zg, &r.cfg, None)?.max_abs()),
        ("Q", inverse_q(&tz, &r.zg, &r.cfg)?.max_abs()),
        ("intertwine", intertwine(&rz)?.field.max_abs()),
        ("miura", miura_map(&zero).max_abs()),
        ("residue", residue_rhs(&zero).max_abs()),
        ("nu", (0..4).map(|l| nu_coeffs(&zero).nu2(l).max_abs()).fold(0.0, f64::max)),
        ("mNV stepper", step_mnv(&zero, &stepper, 0.01)?.max_abs()),
        ("NV stepper", step_nv(&zero, &stepper, 0.01)?.max_abs()),
    ];
    let fold = |v: Vec<ComplexField>| v.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    outs.push(("mNV IST", fold(solve_mnv(&zero, &plan, &ist)?)));
    outs.push(("NV IST", fold(solve_nv(&zero, &plan, &ist)?)));
    outs.push(("NV Schrodinger", fold(nv_via_schrodinger(&zero, &plan, &ist)?)));
    let worst = outs.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    outcome(worst == 0.0, format!("max |output| over {} pipelines: {worst:e}", outs.len()))
}

fn c10_large_k() -> Result<Outcome> {
    let r = reference();
    let u = &r.a.u;
    let data = &pair('a').0;
    let half = u.max_abs() * 0.5;
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    for iy in (0..r.zg.n()).step_by(2) {
        for ix in (0..r.zg.n()).step_by(2) {
            let z = r.zg.point(iy, ix);
            if z.norm() > 3.0 {
                continue;
            }
            let a0 = large_k_fit(data, z, &[8.0, 12.0, 16.0], 16, 4, &r.cfg)?;
            worst = worst.max((a0 - u.at(iy, ix).conj() * 0.5).norm() / half);
            nodes += 1;
        }
    }
    outcome(worst <= 1e-2, format!("max |fit - conj(u)/2| / max|u/2| = {worst:.2e} over {nodes} nodes, |k| in {{8, 12, 16}}"))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("round-trip I(Ru) = u", c1_roundtrip),
        ("Miura intertwining of T and R", c2_intertwining),
        ("inverse-side intertwining and QT = id", c3_inverse_side),
        ("two-path NV equality", c4_two_path),
        ("residue identity on 256^2", c5_residue),
        ("mass and symmetry under evolution", c6_conservation),
        ("IST vs direct stepper, strong and weak residuals", c7_oracle),
        ("evolution multipliers unimodular and additive", c8_multipliers),
        ("zero potential through every pipeline", c9_zero),
        ("large-k expansion leading coefficient", c10_large_k),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {} {name}: {} [{:.1}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            detail.trim_end_matches([' ', ';']),
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
