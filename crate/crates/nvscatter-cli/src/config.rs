//! Run configuration: flat key=value text with [section] headers.

use crate::CliError;
use nvscatter::cgo::{SolverConfig, Strategy};
use nvscatter::evolution::{EvolutionPlan, Flavor, IstConfig};
use nvscatter::miura::Generator;
use nvscatter::oracle::{Scheme, StepperConfig};
use nvscatter::Grid;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

const KNOWN: &[&str] = &[
    "grid.n_z",
    "grid.l_z",
    "grid.n_k",
    "grid.k_max",
    "solver.tol",
    "solver.max_iter",
    "solver.strategy",
    "solver.small_k_bound",
    "input.source",
    "input.path",
    "input.generator",
    "input.amplitude",
    "input.width",
    "input.radius",
    "input.separation",
    "evolution.flavor",
    "evolution.t_values",
    "evolution.phase_threshold",
    "evolution.inverse_radius",
    "oracle.dt",
    "oracle.scheme",
    "oracle.dealias",
    "oracle.tolerance",
    "roundtrip.tolerance",
    "verify.mutate_phase_sign",
    "output.dir",
];

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    Zero,
    Generator(Generator),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug)]
pub struct OracleSettings {
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub zgrid: Grid,
    pub kgrid: Grid,
    pub solver: SolverConfig,
    pub input: Input,
    pub plan: EvolutionPlan,
    pub phase_threshold: f64,
    pub inverse_radius: Option<f64>,
    pub oracle: OracleSettings,
    pub roundtrip_tolerance: f64,
    /// Test hook: flips the sign of the intertwining prefactor in `verify`.
    pub mutate_phase_sign: bool,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn ist(&self, force: bool) -> IstConfig {
        IstConfig {
            kgrid: self.kgrid,
            solver: self.solver,
            phase_threshold: self.phase_threshold,
            inverse_radius: self.inverse_radius,
            require_domain: !force,
        }
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig::new(self.oracle.dt, self.oracle.scheme, self.oracle.dealias, &self.zgrid)
            .expect("validated at load")
    }
}

/// `[section]` lines prefix the following keys with `section.`.
pub fn parse_sections(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", no + 1)))?;
        let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {key}", no + 1)));
        }
    }
    Ok(out)
}

struct Keys<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Keys<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}"))),
        }
    }

    fn req(&self, key: &str) -> Result<f64, CliError> {
        self.raw(key)
            .ok_or_else(|| CliError::Config(format!("{key} is required")))?
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: not a number")))
    }
}

pub fn load(path: &Path, out_override: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base, out_override)
}

pub fn parse(text: &str, base: &Path, out_override: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let map = parse_sections(text)?;
    if let Some(bad) = map.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(CliError::Config(format!("unknown key {bad}")));
    }
    let k = Keys { map: &map };
    let zgrid = Grid::space(k.num("grid.n_z", 128)?, k.num("grid.l_z", 8.0)?)?;
    let kgrid = Grid::spectral(k.num("grid.n_k", 96)?, k.num("grid.k_max", 6.0)?)?;

    let strategy = match k.raw("solver.strategy").unwrap_or("neumann") {
        "neumann" => Strategy::Neumann,
        "krylov" => Strategy::Krylov,
        s => return Err(CliError::Config(format!("solver.strategy: unknown {s:?}"))),
    };
    let d = SolverConfig::default();
    let solver = SolverConfig {
        tol: k.num("solver.tol", d.tol)?,
        max_iter: k.num("solver.max_iter", d.max_iter)?,
        strategy,
        small_k_bound: k.num("solver.small_k_bound", d.small_k_bound)?,
    };
    solver.validate()?;

    let input = match k.raw("input.source").unwrap_or("zero") {
        "zero" => Input::Zero,
        "file" => {
            let p = PathBuf::from(k.raw("input.path").ok_or_else(|| CliError::Config("input.path is required".into()))?);
            Input::File(if p.is_absolute() { p } else { base.join(p) })
        }
        "generator" => {
            let g = match k.raw("input.generator").unwrap_or("") {
                "gaussian" => Generator::Gaussian { amplitude: k.req("input.amplitude")?, width: k.req("input.width")? },
                "two-bump" => Generator::TwoBump {
                    amplitude: k.req("input.amplitude")?,
                    width: k.req("input.width")?,
                    separation: k.req("input.separation")?,
                },
                "radial-bump" => Generator::RadialBump { amplitude: k.req("input.amplitude")?, radius: k.req("input.radius")? },
                s => return Err(CliError::Config(format!("input.generator: unknown {s:?}"))),
            };
            g.validate()?;
            Input::Generator(g)
        }
        s => return Err(CliError::Config(format!("input.source: unknown {s:?}"))),
    };

    let flavor = match k.raw("evolution.flavor").unwrap_or("mnv") {
        "mnv" => Flavor::MnvCubic,
        "nv" => Flavor::NvSchrodingerCubic,
        s => return Err(CliError::Config(format!("evolution.flavor: unknown {s:?}"))),
    };
    let times = match k.raw("evolution.t_values") {
        None => vec![0.0],
        Some(v) => v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Config(format!("evolution.t_values: cannot parse {v:?}")))?,
    };
    let plan = EvolutionPlan::new(times, flavor)?;
    let phase_threshold = k.num("evolution.phase_threshold", 1e-3)?;
    if !(phase_threshold > 0.0 && phase_threshold < 1.0) {
        return Err(CliError::Config("evolution.phase_threshold must lie in (0, 1)".into()));
    }
    let inverse_radius = match k.raw("evolution.inverse_radius") {
        None => None,
        Some(_) => Some(k.req("evolution.inverse_radius")?),
    };

    let scheme = match k.raw("oracle.scheme").unwrap_or("etdrk4") {
        "etdrk4" => Scheme::EtdRk4,
        "if-rk4" => Scheme::Rk4IntegratingFactor,
        s => return Err(CliError::Config(format!("oracle.scheme: unknown {s:?}"))),
    };
    let oracle = OracleSettings {
        dt: k.num("oracle.dt", 1e-4)?,
        scheme,
        dealias: k.num("oracle.dealias", true)?,
        tolerance: k.num("oracle.tolerance", 2e-2)?,
    };
    StepperConfig::new(oracle.dt, oracle.scheme, oracle.dealias, &zgrid)?;

    let out_dir = match out_override {
        Some(p) => p,
        None => {
            let p = PathBuf::from(k.raw("output.dir").unwrap_or("out"));
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        }
    };
    Ok(RunConfig {
        zgrid,
        kgrid,
        solver,
        input,
        plan,
        phase_threshold,
        inverse_radius,
        oracle,
        roundtrip_tolerance: k.num("roundtrip.tolerance", 5e-3)?,
        mutate_phase_sign: k.num("verify.mutate_phase_sign", false)?,
        out_dir,
    })
}
