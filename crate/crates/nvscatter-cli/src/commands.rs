use crate::config::{Input, RunConfig};
use crate::export::{axis_cut, heat_map, radial_profile};
use crate::CliError;
use nvscatter::dsii::{decay_diagnostic, forward_r, inverse_i_within, outer_annulus_ratio, ScatteringData, ScatteringKind};
use nvscatter::evolution::{evolve_r, solve_mnv_from, solve_nv, nv_via_schrodinger, solve_mnv, Flavor, TrajectoryRow};
use nvscatter::expansion::{ExpansionOptions, ResidueTerms};
use nvscatter::io::{encode, parse_key_values, read_field};
use nvscatter::miura::{check_domain, miura_map, MiuraDatum};
use nvscatter::oracle::{eval_nl_mnv, linear, step_mnv};
use nvscatter::schrodinger::{forward_pair, intertwine, inverse_q};
use nvscatter::spectral::{Spectral, Symbol};
use nvscatter::{ComplexField, Role};
use std::path::Path;

/// Files produced by a command, written only once it has finished.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    report: Vec<(String, String)>,
    pub passed: bool,
}

impl Outputs {
    fn new() -> Self {
        Outputs { passed: true, ..Default::default() }
    }

    fn field(&mut self, name: &str, f: &ComplexField) {
        self.files.push((name.to_string(), encode(f)));
    }

    fn text(&mut self, name: &str, s: String) {
        self.files.push((name.to_string(), s.into_bytes()));
    }

    fn slices(&mut self, stem: &str, f: &ComplexField) {
        self.text(&format!("{stem}_axis.csv"), axis_cut(f));
        self.text(&format!("{stem}_radial.csv"), radial_profile(f));
    }

    fn scattering(&mut self, stem: &str, data: &ScatteringData) {
        self.field(&format!("{stem}.nvf"), &data.field);
        self.text(&format!("{stem}.meta"), kv(&data.metadata()));
        self.text(&format!("{stem}_heatmap.csv"), heat_map(&data.field));
        self.slices(stem, &data.field);
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.report.push((key.to_string(), value.to_string()));
    }

    /// Records a measured error against its tolerance.
    fn check(&mut self, name: &str, error: f64, tolerance: f64) {
        let pass = error <= tolerance;
        self.note(&format!("{name}.error"), format!("{error:e}"));
        self.note(&format!("{name}.tolerance"), format!("{tolerance:e}"));
        self.note(&format!("{name}.pass"), pass);
        self.passed &= pass;
    }

    pub fn write(mut self, dir: &Path, report_name: &str) -> Result<bool, CliError> {
        self.note("all_pass", self.passed);
        let report = kv(&self.report);
        print!("{report}");
        self.text(report_name, report);
        std::fs::create_dir_all(dir).map_err(nvscatter::Error::from)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes).map_err(nvscatter::Error::from)?;
        }
        Ok(self.passed)
    }
}

fn kv(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn rel(a: &ComplexField, reference: &ComplexField) -> f64 {
    let diff = (a - reference).l2();
    let den = reference.l2();
    if den == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        diff / den
    }
}

/// Potential u on the configured z-grid.
pub fn load_potential(cfg: &RunConfig) -> Result<(ComplexField, Option<MiuraDatum>), CliError> {
    match &cfg.input {
        Input::Zero => Ok((ComplexField::zeros(cfg.zgrid), None)),
        Input::Generator(g) => {
            let m = g.datum(&cfg.zgrid).map_err(CliError::Input)?;
            Ok((m.u.clone(), Some(m)))
        }
        Input::File(p) => {
            let f = read_field(p)?;
            if f.grid() != &cfg.zgrid {
                return Err(CliError::Input(nvscatter::Error::GridMismatch(format!(
                    "{} holds n = {}, L = {}, role {:?}; config expects the z-grid n = {}, L = {}",
                    p.display(),
                    f.grid().n(),
                    f.grid().l(),
                    f.grid().role(),
                    cfg.zgrid.n(),
                    cfg.zgrid.l()
                ))));
            }
            Ok((f, None))
        }
    }
}

/// Scattering data from the input file; kind from a `.meta` sidecar.
pub fn load_scattering(cfg: &RunConfig) -> Result<ScatteringData, CliError> {
    let Input::File(p) = &cfg.input else {
        return Err(CliError::Config("inverse needs input.source = file".into()));
    };
    let f = read_field(p)?;
    if f.grid().role() != Role::Spectral {
        return Err(CliError::Input(nvscatter::Error::GridMismatch(format!("{} is not a k-grid field", p.display()))));
    }
    let meta = p.with_extension("meta");
    let kind = if meta.exists() {
        let m = parse_key_values(&std::fs::read_to_string(&meta).map_err(nvscatter::Error::from)?)?;
        let name = m.get("kind").map(String::as_str).unwrap_or("dsii_r");
        ScatteringKind::parse(name).ok_or_else(|| CliError::Input(nvscatter::Error::Format(format!("unknown kind {name}"))))?
    } else {
        ScatteringKind::DsiiR
    };
    Ok(ScatteringData::new(f, kind, Default::default())?)
}

pub fn forward(cfg: &RunConfig, u: &ComplexField) -> Result<Outputs, CliError> {
    let r = forward_r(u, &cfg.kgrid, &cfg.solver)?;
    let mut out = Outputs::new();
    out.note("decay_diagnostic", format!("{:e}", decay_diagnostic(&r)));
    out.note("outer_annulus_ratio", format!("{:e}", outer_annulus_ratio(&r)));
    out.note("max_abs_r", format!("{:e}", r.field.max_abs()));
    out.scattering("r", &r);
    Ok(out)
}

pub fn inverse(cfg: &RunConfig, data: &ScatteringData) -> Result<Outputs, CliError> {
    let mut out = Outputs::new();
    let (name, f) = match data.kind {
        ScatteringKind::DsiiR => ("u", inverse_i_within(data, &cfg.zgrid, &cfg.solver, cfg.inverse_radius)?),
        ScatteringKind::SchrodingerT => ("q", inverse_q(data, &cfg.zgrid, &cfg.solver)?),
    };
    out.note("kind", data.kind.name());
    out.note("l2", format!("{:e}", f.l2()));
    out.field(&format!("{name}.nvf"), &f);
    out.slices(name, &f);
    Ok(out)
}

pub fn roundtrip(cfg: &RunConfig, u: &ComplexField) -> Result<Outputs, CliError> {
    let r = forward_r(u, &cfg.kgrid, &cfg.solver)?;
    let back = inverse_i_within(&r, &cfg.zgrid, &cfg.solver, cfg.inverse_radius)?;
    let mut out = Outputs::new();
    out.check("roundtrip", rel(&back, u), cfg.roundtrip_tolerance);
    out.scattering("r", &r);
    out.field("u_roundtrip.nvf", &back);
    out.slices("u_roundtrip", &back);
    Ok(out)
}

fn trajectory(out: &mut Outputs, prefix: &str, times: &[f64], fields: &[ComplexField]) -> Vec<TrajectoryRow> {
    let mut manifest = String::from("# t file l2 mass_re mass_im symmetry_defect\n");
    let mut rows = Vec::new();
    for (i, (t, f)) in times.iter().zip(fields).enumerate() {
        let file = format!("{prefix}_{i:04}.nvf");
        out.field(&file, f);
        let row = TrajectoryRow::of(*t, file, f);
        manifest.push_str(&format!(
            "{:.16e} {} {:.16e} {:.16e} {:.16e} {:.16e}\n",
            row.t, row.file, row.l2, row.mass.re, row.mass.im, row.symmetry_defect
        ));
        rows.push(row);
    }
    out.text(&format!("{prefix}_manifest.txt"), manifest);
    rows
}

pub fn evolve(cfg: &RunConfig, u: &ComplexField, force: bool, compare: bool) -> Result<Outputs, CliError> {
    let ist = cfg.ist(force);
    let times = cfg.plan.t_values();
    let mut out = Outputs::new();
    let (prefix, fields) = match cfg.plan.flavor {
        Flavor::MnvCubic => ("u", solve_mnv(u, &cfg.plan, &ist)?),
        Flavor::NvSchrodingerCubic => ("q", solve_nv(u, &cfg.plan, &ist)?),
    };
    let rows = trajectory(&mut out, prefix, times, &fields);
    let mut csv = String::from("t,mass_re,mass_im,l2,symmetry_defect\n");
    for r in &rows {
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", r.t, r.mass.re, r.mass.im, r.l2, r.symmetry_defect));
    }
    out.text("conserved.csv", csv);
    let drift = rows.iter().map(|r| (r.mass - rows[0].mass).norm()).fold(0.0, f64::max);
    out.note("mass_drift", format!("{drift:e}"));
    out.note("mass_drift_relative_l1", format!("{:e}", if u.l1() > 0.0 { drift / u.l1() } else { 0.0 }));
    if compare {
        if cfg.plan.flavor != Flavor::NvSchrodingerCubic {
            return Err(CliError::Config("--compare-schrodinger needs evolution.flavor = nv".into()));
        }
        let other = nv_via_schrodinger(u, &cfg.plan, &ist)?;
        trajectory(&mut out, "q_schrodinger", times, &other);
        let worst = fields.iter().zip(&other).map(|(a, b)| rel(b, a)).fold(0.0, f64::max);
        out.check("two_path", worst, 2e-2);
    }
    Ok(out)
}

pub fn miura(u: &ComplexField, datum: Option<&MiuraDatum>) -> Result<Outputs, CliError> {
    let mut out = Outputs::new();
    let q = miura_map(u);
    let (mean, defect) = check_domain(u);
    out.note("mean_re", format!("{:e}", mean.re));
    out.note("mean_im", format!("{:e}", mean.im));
    out.note("symmetry_defect", format!("{defect:e}"));
    let scale = nvscatter::spectral::d(u).max_abs();
    out.check("domain_symmetry", defect, 1e-8 * scale.max(f64::MIN_POSITIVE));
    out.check("domain_mean", mean.norm(), 1e-8 * u.l1().max(f64::MIN_POSITIVE));
    if let Some(m) = datum {
        if let Some(c) = m.consistency {
            out.note("consistency", format!("{c:e}"));
        }
        if let Some(g) = &m.gamma {
            out.field("gamma.nvf", g);
            out.slices("gamma", g);
        }
    }
    out.field("u.nvf", u);
    out.field("q.nvf", &q);
    out.slices("u", u);
    out.slices("q", &q);
    Ok(out)
}

pub fn oracle_compare(cfg: &RunConfig, u: &ComplexField) -> Result<Outputs, CliError> {
    let ist = cfg.ist(true);
    let r = forward_r(u, &cfg.kgrid, &cfg.solver)?;
    let times = cfg.plan.t_values();
    let ist_fields = solve_mnv_from(&r, u.grid(), &cfg.plan, &ist)?;
    let stepper = cfg.stepper();
    let mut direct = Vec::with_capacity(times.len());
    let (mut cur, mut t_prev) = (u.clone(), 0.0);
    for &t in times {
        cur = step_mnv(&cur, &stepper, t - t_prev)?;
        t_prev = t;
        direct.push(cur.clone());
    }
    let mut out = Outputs::new();
    let mut csv = String::from("t,ist_l2,direct_l2,rel_error\n");
    let mut worst: f64 = 0.0;
    for ((t, a), b) in times.iter().zip(&ist_fields).zip(&direct) {
        let e = rel(a, b);
        worst = worst.max(e);
        csv.push_str(&format!("{t:.16e},{:.16e},{:.16e},{e:.16e}\n", a.l2(), b.l2()));
    }
    out.text("oracle_compare.csv", csv);
    out.check("oracle", worst, cfg.oracle.tolerance);
    trajectory(&mut out, "ist", times, &ist_fields);
    trajectory(&mut out, "direct", times, &direct);
    Ok(out)
}

/// Every identity that the configured data can be checked against.
pub fn verify(cfg: &RunConfig, u: &ComplexField) -> Result<Outputs, CliError> {
    let mut out = Outputs::new();
    let (r, t) = forward_pair(u, &cfg.kgrid, &cfg.solver)?;
    let back = inverse_i_within(&r, &cfg.zgrid, &cfg.solver, cfg.inverse_radius)?;
    out.check("roundtrip", rel(&back, u), cfg.roundtrip_tolerance);

    let mut ti = intertwine(&r)?;
    if cfg.mutate_phase_sign {
        ti.field = ti.field.scale_re(-1.0);
    }
    let mut worst: f64 = 0.0;
    for (i, (a, b)) in ti.field.data().iter().zip(t.field.data()).enumerate() {
        let k = cfg.kgrid.point_at(i).norm();
        if (0.5..=3.0).contains(&k) && (a - b).norm() > 0.0 {
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    out.check("intertwining", worst, 1e-2);

    let q0 = miura_map(u);
    out.check("qt", rel(&inverse_q(&t, &cfg.zgrid, &cfg.solver)?, &q0), 2e-2);
    out.check("q_of_intertwined", rel(&inverse_q(&ti, &cfg.zgrid, &cfg.solver)?, &q0), 2e-2);

    let terms = ResidueTerms::new(u, ExpansionOptions::default());
    let nl = eval_nl_mnv(u);
    let d3 = Spectral::for_grid(&cfg.zgrid).apply_chain(u, &[Symbol::D, Symbol::D, Symbol::D]);
    let den = d3.l2() + nl.l2();
    let defect = (terms.rhs() - &linear(u) + &nl).l2();
    out.check("residue", if den > 0.0 { defect / den } else { defect }, 1e-4);
    for deg in [5, 7] {
        let (a, b) = terms.cancellation(deg);
        out.check(&format!("cancellation_{deg}"), a.max(b), 1e-6);
    }

    let (t1, t2) = (0.03, 0.07);
    let e1 = evolve_r(&r, t1)?;
    let scale = r.field.max_abs().max(f64::MIN_POSITIVE);
    let modulus = e1.field.data().iter().zip(r.field.data()).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max) / scale;
    out.check("multiplier_modulus", modulus, 1e-14);
    let twice = evolve_r(&evolve_r(&e1, t2)?, 0.0)?;
    let once = evolve_r(&r, t1 + t2)?;
    let additive = (&twice.field - &once.field).max_abs() / scale;
    out.check("multiplier_additivity", additive, 1e-12);
    Ok(out)
}
