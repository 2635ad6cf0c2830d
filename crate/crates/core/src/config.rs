//! Run configuration: one TOML file, with `--set key=value` overrides applied
//! before validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bilayer::RadialGrid;
use crate::error::{Error, Result};
use crate::normal_form::{NFCoefficients, NFSystem};
use crate::potential::{Well, WellSpec};
use crate::simulator::{InitKind, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Profile,
    Coeffs,
    Pnf,
    Orbit,
    Construct,
    Simulate,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width `L`; `None` uses `26/sqrt(mu_minus)`.
    pub half_width: Option<f64>,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: None, n: 2049 }
    }
}

impl GridConfig {
    pub fn radial(&self, well: &Well) -> Result<RadialGrid> {
        let l = self.half_width.unwrap_or_else(|| RadialGrid::default_for(well).half_width);
        RadialGrid::new(l, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub epsilon: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { epsilon: 0.1, eta1: 1.0, eta2: 2.0, gamma: 1.0, kappa: 0.05 }
    }
}

impl Physics {
    pub fn eta_d(&self) -> f64 {
        self.eta1 - self.eta2
    }
}

/// Simulation settings other than the physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimBlock {
    pub dt: f64,
    pub t_end: f64,
    pub stabilization: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub init: InitKind,
    pub perturbation: f64,
    pub perturbation_modes: usize,
    pub sample_every: f64,
    pub checkpoint_every: Option<f64>,
    pub energy_tol: f64,
    pub max_halvings: u32,
    /// Write an SVG snapshot at each checkpoint.
    pub snapshots: bool,
}

impl Default for SimBlock {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt: s.dt,
            t_end: s.t_end,
            stabilization: s.stabilization,
            nx: s.nx,
            ny: s.ny,
            lx: s.lx,
            ly: s.ly,
            init: s.init,
            perturbation: s.perturbation,
            perturbation_modes: s.perturbation_modes,
            sample_every: s.sample_every,
            checkpoint_every: s.checkpoint_every,
            energy_tol: s.energy_tol,
            max_halvings: s.max_halvings,
            snapshots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NfBlock {
    pub system: NFSystem,
    pub t_end: f64,
    pub tol: f64,
    /// `(Re C1, Im C1, Re C2, Im C2, D1..D4)`; `None` starts on the closed-form orbit.
    pub initial: Option<Vec<f64>>,
    /// Coefficients by name (`alpha3`, `beta1`, ...), replacing the computed entries.
    pub overrides: BTreeMap<String, f64>,
    /// Output stride for the trajectory CSV.
    pub samples: usize,
}

impl Default for NfBlock {
    fn default() -> Self {
        Self {
            system: NFSystem::Pnf,
            t_end: 100.0,
            tol: 1e-12,
            initial: None,
            overrides: BTreeMap::new(),
            samples: 2001,
        }
    }
}

impl NfBlock {
    pub fn apply_overrides(&self, c: NFCoefficients) -> Result<NFCoefficients> {
        let mut v = serde_json::to_value(c).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for (k, x) in &self.overrides {
            let slot = v.get_mut(k.as_str()).ok_or_else(|| Error::Config {
                key: format!("nf.overrides.{k}"),
                msg: "unknown coefficient".into(),
            })?;
            *slot = serde_json::json!(x);
        }
        serde_json::from_value(v).map_err(|e| Error::Config { key: "nf.overrides".into(), msg: e.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructKind {
    Flat,
    Circular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructBlock {
    pub kind: ConstructKind,
    /// Bead count for circular pearls; `None` takes the smallest admissible count.
    pub beads: Option<usize>,
    pub r_minus: f64,
    pub max_radii: usize,
    pub epsilon0: Option<f64>,
    pub kappa0: Option<f64>,
    pub n_minus: f64,
    /// Flat pearls: number of periods in the sampled window.
    pub periods: usize,
    /// Output grid resolution.
    pub resolution: usize,
}

impl Default for ConstructBlock {
    fn default() -> Self {
        Self {
            kind: ConstructKind::Circular,
            beads: None,
            r_minus: 1.0,
            max_radii: 12,
            epsilon0: None,
            kappa0: None,
            n_minus: 1.0,
            periods: 4,
            resolution: 256,
        }
    }
}

/// Parameter sweep for `coeffs`; an empty list keeps the `physics` value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsBlock {
    pub gamma: Vec<f64>,
    pub eta2: Vec<f64>,
}

/// Pass thresholds for `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBlock {
    pub hamiltonian: f64,
    pub ode: f64,
    pub kernel: f64,
    pub affine: f64,
    pub alpha1: f64,
    pub first_integrals: f64,
    pub subspace: f64,
    pub gradient: f64,
    pub mass: f64,
    /// Random directions for the gradient check.
    pub directions: usize,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            hamiltonian: 1e-8,
            ode: 1e-6,
            kernel: 1e-6,
            affine: 1e-9,
            alpha1: 1e-6,
            first_integrals: 1e-10,
            subspace: 1e-12,
            gradient: 1e-5,
            mass: 1e-13,
            directions: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub output: PathBuf,
    pub seed: u64,
    pub well: WellSpec,
    pub grid: GridConfig,
    pub physics: Physics,
    pub sim: SimBlock,
    pub coeffs: CoeffsBlock,
    pub nf: NfBlock,
    pub construct: ConstructBlock,
    pub verify: VerifyBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            output: PathBuf::from("out"),
            seed: 1,
            well: WellSpec::default(),
            grid: GridConfig::default(),
            physics: Physics::default(),
            sim: SimBlock::default(),
            coeffs: CoeffsBlock::default(),
            nf: NfBlock::default(),
            construct: ConstructBlock::default(),
            verify: VerifyBlock::default(),
        }
    }
}

impl RunConfig {
    pub fn sim_config(&self) -> SimConfig {
        let (p, s) = (&self.physics, &self.sim);
        SimConfig {
            epsilon: p.epsilon,
            eta1: p.eta1,
            eta2: p.eta2,
            gamma: p.gamma,
            dt: s.dt,
            t_end: s.t_end,
            stabilization: s.stabilization,
            nx: s.nx,
            ny: s.ny,
            lx: s.lx,
            ly: s.ly,
            init: s.init.clone(),
            perturbation: s.perturbation,
            perturbation_modes: s.perturbation_modes,
            seed: self.seed,
            sample_every: s.sample_every,
            checkpoint_every: s.checkpoint_every,
            energy_tol: s.energy_tol,
            max_halvings: s.max_halvings,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config { key: key.into(), msg });
        let p = &self.physics;
        if !(p.epsilon > 0.0 && p.epsilon <= 0.5) {
            return bad("physics.epsilon", format!("must lie in (0, 0.5], got {}", p.epsilon));
        }
        if !(self.grid.n >= 201 && self.grid.n % 2 == 1) {
            return bad("grid.n", format!("must be odd and >= 201, got {}", self.grid.n));
        }
        if let Some(l) = self.grid.half_width {
            if !(l > 0.0) {
                return bad("grid.half_width", format!("must be positive, got {l}"));
            }
        }
        if !(self.nf.t_end > 0.0) {
            return bad("nf.t_end", format!("must be positive, got {}", self.nf.t_end));
        }
        if !(1e-14..=1e-6).contains(&self.nf.tol) {
            return bad("nf.tol", format!("must lie in [1e-14, 1e-6], got {}", self.nf.tol));
        }
        if let Some(y) = &self.nf.initial {
            if y.len() != 8 {
                return bad("nf.initial", format!("needs 8 entries, got {}", y.len()));
            }
        }
        if self.nf.samples < 2 {
            return bad("nf.samples", "needs at least 2".into());
        }
        if self.construct.resolution < 8 {
            return bad("construct.resolution", "needs at least 8".into());
        }
        self.sim_config().validate()
    }

    /// Reparses a TOML document; the result is validated.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config { key: String::new(), msg: e.to_string() })?;
        Self::from_value(value)
    }

    fn from_value(value: toml::Value) -> Result<Self> {
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            Error::Config { key: unknown_key(&path, &inner), msg: inner }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Full dotted path of the offending key, joining the unknown field name onto its parent path.
fn unknown_key(path: &str, msg: &str) -> String {
    let field = msg.strip_prefix("unknown field `").and_then(|r| r.split('`').next());
    match (field, path) {
        (Some(f), ".") | (Some(f), "") => f.to_string(),
        (Some(f), p) if !p.ends_with(f) => format!("{p}.{f}"),
        _ => path.to_string(),
    }
}

/// Splits `a.b.c=value`; the value is parsed as TOML, falling back to a bare string.
fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config { key: spec.into(), msg: "override must look like key=value".into() })?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config { key: key.into(), msg: "empty key segment".into() });
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.split('.').map(String::from).collect(), value))
}

fn set_path(root: &mut toml::Value, path: &[String], value: toml::Value) -> Result<()> {
    let mut node = root;
    for (i, seg) in path.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| Error::Config {
            key: path[..i].join("."),
            msg: "not a table".into(),
        })?;
        if i + 1 == path.len() {
            table.insert(seg.clone(), value);
            return Ok(());
        }
        node = table.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}

/// Reads `path` (or starts from defaults when `None`) and applies `overrides` in order.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config { key: p.display().to_string(), msg: e.to_string() })?;
            toml::Value::Table(
                toml::from_str(&text).map_err(|e| Error::Config { key: p.display().to_string(), msg: e.to_string() })?,
            )
        }
        None => toml::Value::Table(toml::Table::new()),
    };
    for o in overrides {
        let (keys, v) = parse_override(o)?;
        set_path(&mut value, &keys, v)?;
    }
    RunConfig::from_value(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_values_are_typed() {
        let (k, v) = parse_override("physics.eta2 = 2.5").unwrap();
        assert_eq!(k, ["physics", "eta2"]);
        assert_eq!(v, toml::Value::Float(2.5));
        let (_, v) = parse_override("command=verify").unwrap();
        assert_eq!(v, toml::Value::String("verify".into()));
    }

    #[test]
    fn unknown_key_paths() {
        assert_eq!(unknown_key("", "unknown field `welll`, expected one of"), "welll");
        assert_eq!(unknown_key("well", "unknown field `mm`, expected"), "well.mm");
    }
}
