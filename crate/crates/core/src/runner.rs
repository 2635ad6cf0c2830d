//! Command implementations behind the CLI. Every command writes into the
//! configured output directory and returns a JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bilayer::{compute_u0, compute_u1, compute_v0, BilayerData};
use crate::coefficients::{alpha0, alpha0_parts, verify_alpha1, CoefficientInputs, CoefficientTable};
use crate::config::{Command, ConstructKind, RunConfig};
use crate::error::{Error, Result};
use crate::normal_form::{
    first_integrals, integrate_nf, pnf_periodic_orbit, reversible_shoot, NFCoefficients, NFState, NFSystem,
};
use crate::operator::SpectralData;
use crate::pearl::{circular_pearl, circular_radii, flat_pearl, PearlBounds, PearlSolution};
use crate::potential::{validate_well, Well};
use crate::simulator::{
    extract_pearl_metrics, gradient_check, init_field, run, write_checkpoint, CheckpointHeader, FchModel, Field2D,
    InitKind, Interface, SimConfig, Transverse,
};
use crate::svg;

/// Outcome of one command: the JSON summary and whether every check passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Self { passed: true, summary }
    }
}

/// Bilayer profile and `L0` spectrum for a configuration.
pub struct Context {
    pub well: Well,
    pub bilayer: BilayerData,
    pub spectral: SpectralData,
}

impl Context {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let well = Well::new(cfg.well.clone())?;
        let grid = cfg.grid.radial(&well)?;
        let bilayer = compute_u0(&well, grid)?;
        let spectral = SpectralData::compute(&bilayer)?;
        Ok(Self { well, bilayer, spectral })
    }

    pub fn table(&self, cfg: &RunConfig) -> Result<CoefficientTable> {
        let p = &cfg.physics;
        CoefficientTable::compute(
            &self.bilayer,
            &self.spectral,
            CoefficientInputs { gamma: p.gamma, eta1: p.eta1, eta2: p.eta2 },
        )
    }

    pub fn nf_coefficients(&self, cfg: &RunConfig, table: &CoefficientTable) -> Result<NFCoefficients> {
        cfg.nf.apply_overrides(NFCoefficients::from_table(table, cfg.physics.epsilon)?)
    }
}

/// Runs `command`, writing the effective configuration next to its outputs.
pub fn execute(cfg: &RunConfig, command: Command) -> Result<Outcome> {
    fs::create_dir_all(&cfg.output)?;
    let mut echo = cfg.clone();
    echo.command = Some(command);
    fs::write(cfg.output.join("effective_config.toml"), echo.to_toml_string()?)?;
    let outcome = match command {
        Command::Verify => return verify(cfg),
        Command::Profile => profile(cfg)?,
        Command::Coeffs => coeffs(cfg)?,
        Command::Pnf => pnf(cfg)?,
        Command::Orbit => orbit(cfg)?,
        Command::Construct => construct(cfg)?,
        Command::Simulate => simulate(cfg)?,
    };
    write_json(&cfg.output.join(format!("{}.json", name_of(command))), &outcome.summary)?;
    Ok(outcome)
}

fn name_of(c: Command) -> &'static str {
    match c {
        Command::Profile => "profile",
        Command::Coeffs => "coeffs",
        Command::Pnf => "pnf",
        Command::Orbit => "orbit",
        Command::Construct => "construct",
        Command::Simulate => "simulate",
        Command::Verify => "verify",
    }
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn profile(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = Context::build(cfg)?;
    let (b, op) = (&ctx.bilayer, &ctx.spectral);
    let v0 = compute_v0(b, op, cfg.physics.gamma, cfg.physics.eta_d())?;
    let u1 = compute_u1(op, &v0)?;
    let r = b.grid.nodes();
    write_csv(
        &cfg.output.join("profile.csv"),
        &["r", "u0", "du0", "v0", "u1"],
        (0..b.grid.n).map(|i| vec![r[i], b.u0[i], b.du0[i], v0[i], u1[i]]),
    )?;
    let plot = |f: &[f64]| r.iter().copied().zip(f.iter().copied()).collect::<Vec<_>>();
    svg::write(
        &cfg.output.join("profile.svg"),
        &svg::line_plot(
            &[
                svg::Series { name: "u0", points: plot(&b.u0) },
                svg::Series { name: "u1", points: plot(&u1) },
                svg::Series { name: "psi0", points: plot(&op.psi0) },
            ],
            "bilayer profile",
            "r",
            false,
        ),
    )?;
    let n = b.grid.n;
    Ok(Outcome::ok(json!({
        "u_star": b.u_star,
        "grid": { "half_width": b.grid.half_width, "n": n },
        "hamiltonian_residual": b.hamiltonian_residual(),
        "ode_residual": b.ode_residual(),
        "tail": (b.u0[n - 1] + 1.0).abs(),
        "tail_slope": b.tail_slope(),
        "mu_minus_sqrt": ctx.well.mu_minus().sqrt(),
        "lambda0": op.lambda0,
        "psi0_nodes": SpectralData::node_count(&op.psi0),
        "kernel_eigenvalue": op.kernel_eigenvalue,
        "kernel_residual": op.kernel_residual(&b.du0),
        "third_eigenvalue": op.third_eigenvalue()?,
    })))
}

pub fn coeffs(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = Context::build(cfg)?;
    let table = ctx.table(cfg)?;
    let rows = table.rows();
    let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    write_csv(&cfg.output.join("coeffs.csv"), &names, [rows.iter().map(|r| r.1).collect()])?;
    let sweep = &cfg.coeffs;
    if !sweep.gamma.is_empty() || !sweep.eta2.is_empty() {
        let gammas = if sweep.gamma.is_empty() { vec![cfg.physics.gamma] } else { sweep.gamma.clone() };
        let etas = if sweep.eta2.is_empty() { vec![cfg.physics.eta2] } else { sweep.eta2.clone() };
        let mut out = Vec::new();
        for &g in &gammas {
            for &e in &etas {
                let t = CoefficientTable::compute(
                    &ctx.bilayer,
                    &ctx.spectral,
                    CoefficientInputs { gamma: g, eta1: cfg.physics.eta1, eta2: e },
                )?;
                out.push(t.rows().into_iter().map(|r| r.1).collect());
            }
        }
        write_csv(&cfg.output.join("coeffs_sweep.csv"), &names, out)?;
    }
    serde_json::to_value(&table).map(Outcome::ok).map_err(|e| Error::InvalidArgument(e.to_string()))
}

const TRAJECTORY_HEADER: [&str; 11] = ["t", "ReC1", "ImC1", "ReC2", "ImC2", "D1", "D2", "D3", "D4", "K", "H"];

fn trajectory_row(s: &NFState, c: &NFCoefficients) -> Vec<f64> {
    let (k, h) = first_integrals(s, c);
    let mut row = vec![s.t];
    row.extend(s.to_vec());
    row.extend([k, h]);
    row
}

/// Configured start, or the closed-form orbit at `kappa` with `C2` detuned by ten percent.
fn nf_start(cfg: &RunConfig, c: &NFCoefficients) -> Result<NFState> {
    if let Some(y) = &cfg.nf.initial {
        return Ok(NFState::from_slice(y, 0.0));
    }
    let o = pnf_periodic_orbit(c, cfg.physics.kappa)?;
    let s = o.state_at(0.0);
    Ok(NFState { c2: 1.1 * s.c2, ..s })
}

pub fn pnf(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = Context::build(cfg)?;
    let table = ctx.table(cfg)?;
    let c = ctx.nf_coefficients(cfg, &table)?;
    let s0 = nf_start(cfg, &c)?;
    let tr = integrate_nf(cfg.nf.system, &c, &s0, cfg.nf.t_end, cfg.nf.tol)?;
    let (k0, h0) = first_integrals(&s0, &c);
    let (mut dk, mut dh, mut dmax) = (0.0f64, 0.0f64, 0.0f64);
    for (t, y) in tr.t.iter().zip(&tr.y) {
        let s = NFState::from_slice(y, *t);
        let (k, h) = first_integrals(&s, &c);
        dk = dk.max((k - k0).abs());
        dh = dh.max((h - h0).abs());
        dmax = dmax.max(s.d_norm());
    }
    let n = cfg.nf.samples;
    let samples: Vec<NFState> = (0..n)
        .map(|j| {
            let t = cfg.nf.t_end * j as f64 / (n - 1) as f64;
            NFState::from_slice(&tr.eval(t), t)
        })
        .collect();
    write_csv(&cfg.output.join("trajectory.csv"), &TRAJECTORY_HEADER, samples.iter().map(|s| trajectory_row(s, &c)))?;
    svg::write(
        &cfg.output.join("trajectory.svg"),
        &svg::line_plot(
            &[
                svg::Series { name: "|C1|", points: samples.iter().map(|s| (s.t, s.c1.norm())).collect() },
                svg::Series { name: "|C2|", points: samples.iter().map(|s| (s.t, s.c2.norm())).collect() },
            ],
            "normal form trajectory",
            "t",
            false,
        ),
    )?;
    Ok(Outcome::ok(json!({
        "system": cfg.nf.system,
        "coefficients": c,
        "t_end": cfg.nf.t_end,
        "tol": cfg.nf.tol,
        "steps": tr.t.len() - 1,
        "rejected": tr.rejected,
        "K0": k0,
        "H0": h0,
        "K_drift": dk,
        "H_drift": dh,
        "max_D_norm": dmax,
        "final": NFState::from_slice(tr.last(), *tr.t.last().unwrap_or(&0.0)),
    })))
}

pub fn orbit(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = Context::build(cfg)?;
    let table = ctx.table(cfg)?;
    let c = ctx.nf_coefficients(cfg, &table)?;
    let kappa = cfg.physics.kappa;
    let closed = pnf_periodic_orbit(&c.pearling_only(), kappa)?;
    let residual = closed.residual(&c.pearling_only(), 256);
    let shot = reversible_shoot(&c, kappa, None)?;
    let start = closed.state_at(0.0);
    let n = cfg.nf.samples;
    let ref_traj = integrate_nf(NFSystem::Nf8, &c, &shot.start, shot.period, 1e-12)?;
    let rows = (0..n).flat_map(|j| {
        let t = closed.period * j as f64 / (n - 1) as f64;
        let ts = shot.period * j as f64 / (n - 1) as f64;
        let mut a = trajectory_row(&closed.state_at(t), &c);
        a.insert(0, 0.0);
        let mut b = trajectory_row(&NFState::from_slice(&ref_traj.eval(ts), ts), &c);
        b.insert(0, 1.0);
        [a, b]
    });
    let mut header = vec!["source"];
    header.extend(TRAJECTORY_HEADER);
    write_csv(&cfg.output.join("orbit.csv"), &header, rows)?;
    Ok(Outcome::ok(json!({
        "kappa": kappa,
        "closed_form": closed,
        "closed_form_residual": residual,
        "K_closed_form": first_integrals(&start, &c).0,
        "K_target": c.epsilon.powf(1.5) * kappa,
        "shooting": shot,
        "state_error": shot.start.distance(&start),
        "period_error": (shot.period - closed.period).abs(),
    })))
}

/// Samples a pearled field on a power-of-two grid and measures it back.
pub fn sample_pearl(sol: &PearlSolution, resolution: usize, periods: usize) -> Result<(Field2D, Interface)> {
    let n = resolution.next_power_of_two();
    match sol.kind {
        crate::pearl::PearlKind::Flat { period } => {
            let lx = periods.max(1) as f64 * period;
            let ly = 2.0 * sol.grid.half_width * sol.epsilon;
            let mut v = vec![0.0; n * n];
            for j in 0..n {
                for i in 0..n {
                    let (x, y) = (lx * i as f64 / n as f64, ly * j as f64 / n as f64);
                    v[j * n + i] = sol.value_xy(x, y - 0.5 * ly);
                }
            }
            Ok((Field2D::new(n, n, lx, ly, v)?, Interface::Flat { y0: 0.5 * ly }))
        }
        crate::pearl::PearlKind::Circular { radius, .. } => {
            let side = 2.0 * (radius + 0.5 * sol.grid.half_width * sol.epsilon);
            let mut v = vec![0.0; n * n];
            for j in 0..n {
                for i in 0..n {
                    let (x, y) = (side * i as f64 / n as f64, side * j as f64 / n as f64);
                    v[j * n + i] = sol.value_xy(x - 0.5 * side, y - 0.5 * side);
                }
            }
            Ok((Field2D::new(n, n, side, side, v)?, Interface::Circular { cx: 0.5 * side, cy: 0.5 * side }))
        }
    }
}

pub fn construct(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = Context::build(cfg)?;
    let table = ctx.table(cfg)?;
    let cb = &cfg.construct;
    let mut bounds = PearlBounds::default_for(&table);
    if let Some(e) = cb.epsilon0 {
        bounds.epsilon0 = e;
    }
    if let Some(k) = cb.kappa0 {
        bounds.kappa0 = k;
    }
    bounds.n_minus = cb.n_minus;
    let (eps, kappa) = (cfg.physics.epsilon, cfg.physics.kappa);
    let (b, op) = (&ctx.bilayer, &ctx.spectral);
    let (sol, radii) = match cb.kind {
        ConstructKind::Flat => (flat_pearl(b, op, &table, eps, kappa, &bounds)?, None),
        ConstructKind::Circular => {
            let radii = circular_radii(&table, eps, kappa, cb.r_minus, &bounds, cb.max_radii)?;
            let n = cb.beads.unwrap_or(radii[0].0);
            (circular_pearl(b, op, &table, n, eps, kappa, &bounds)?, Some(radii))
        }
    };
    let (field, interface) = sample_pearl(&sol, cb.resolution, cb.periods)?;
    let metrics = extract_pearl_metrics(&field, &interface)?;
    write_csv(
        &cfg.output.join("pearl_field.csv"),
        &["x", "y", "u"],
        (0..field.ny).flat_map(|j| {
            let f = &field;
            (0..f.nx).map(move |i| vec![f.x(i), f.y(j), f.at(i, j)])
        }),
    )?;
    svg::write(&cfg.output.join("pearl.svg"), &svg::heatmap(&field.values, field.nx, field.ny, "pearled bilayer", 256))?;
    if let Some(r) = &radii {
        let rows: Vec<Value> = r.iter().map(|(n, r)| json!({ "beads": n, "radius": r })).collect();
        write_json(&cfg.output.join("radii.json"), &rows)?;
    }
    Ok(Outcome::ok(json!({
        "kind": sol.kind,
        "epsilon": eps,
        "kappa": kappa,
        "amplitude": sol.amplitude,
        "period": sol.period(),
        "far_field": sol.far_field(),
        "bounds": bounds,
        "measured": {
            "mode": metrics.mode,
            "period": metrics.period,
            "amplitude": metrics.amplitude,
            "location": metrics.location,
        },
        "radii": radii.map(|r| r.into_iter().map(|(n, r)| json!({ "beads": n, "radius": r })).collect::<Vec<_>>()),
    })))
}

fn header_for(cfg: &SimConfig, t: f64) -> CheckpointHeader {
    CheckpointHeader {
        nx: cfg.nx,
        ny: cfg.ny,
        lx: cfg.lx,
        ly: cfg.ly,
        t,
        epsilon: cfg.epsilon,
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        seed: cfg.seed,
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = Context::build(cfg)?;
    let sc = cfg.sim_config();
    sc.validate()?;
    let tr = Transverse::new(&ctx.bilayer, &ctx.spectral, sc.epsilon, sc.gamma, sc.eta_d())?;
    let u0 = init_field(&sc.init, &tr, &sc)?;
    let interface = Interface::for_init(&sc.init, &sc);
    let model = FchModel::for_config(ctx.well.clone(), &sc);
    let gamma0 = model.gamma_eff(&u0);
    let ckpt_dir = cfg.output.join("checkpoints");
    if sc.checkpoint_every.is_some() {
        fs::create_dir_all(&ckpt_dir)?;
    }
    let snapshots = cfg.sim.snapshots;
    let mut index = 0;
    let out = run(&model, &sc, u0, &interface, |t, u| {
        let base = ckpt_dir.join(format!("field_{index:05}"));
        index += 1;
        write_checkpoint(&base, u, &header_for(&sc, t))?;
        if snapshots {
            svg::write(&base.with_extension("svg"), &svg::heatmap(&u.values, u.nx, u.ny, &format!("t = {t:.3}"), 128))?;
        }
        Ok(())
    })?;
    write_csv(
        &cfg.output.join("series.csv"),
        &["t", "dt", "mass", "energy", "mode", "amplitude", "modulation"],
        out.series.iter().map(|r| vec![r.t, r.dt, r.mass, r.energy, r.mode as f64, r.amplitude, r.modulation]),
    )?;
    write_checkpoint(&cfg.output.join("final"), &out.field, &header_for(&sc, sc.t_end))?;
    let f = &out.field;
    svg::write(&cfg.output.join("final.svg"), &svg::heatmap(&f.values, f.nx, f.ny, &format!("t = {}", sc.t_end), 256))?;
    svg::write(
        &cfg.output.join("series.svg"),
        &svg::line_plot(
            &[svg::Series { name: "modulation", points: out.series.iter().map(|r| (r.t, r.modulation)).collect() }],
            "interface modulation",
            "t",
            true,
        ),
    )?;
    let metrics = extract_pearl_metrics(&out.field, &interface).ok();
    let gamma_end = model.gamma_eff(&out.field);
    let (a_gamma, a_eta) = alpha0_parts(&ctx.bilayer, &ctx.spectral)?;
    let first = out.series.first().map_or(0.0, |r| r.modulation);
    let last = out.series.last().map_or(0.0, |r| r.modulation);
    Ok(Outcome::ok(json!({
        "steps": out.steps,
        "halvings": out.halvings,
        "max_mass_drift": out.max_mass_drift,
        "max_energy_increase": out.max_energy_increase,
        "stabilization": sc.stabilization.unwrap_or_else(|| crate::simulator::default_stabilization(&ctx.well)),
        "gamma_eff_initial": gamma0,
        "gamma_eff_final": gamma_end,
        "alpha0_at_gamma_eff_initial": a_gamma * gamma0 - a_eta * sc.eta_d(),
        "alpha0_at_config_gamma": alpha0(&ctx.bilayer, &ctx.spectral, sc.gamma, sc.eta_d())?,
        "modulation_initial": first,
        "modulation_final": last,
        "final_metrics": metrics.map(|m| json!({
            "mode": m.mode, "period": m.period, "amplitude": m.amplitude, "location": m.location,
        })),
    })))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub status: &'static str,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckEntry>,
}

struct Suite {
    checks: Vec<CheckEntry>,
}

impl Suite {
    fn at_most(&mut self, name: &str, value: Result<f64>, threshold: f64) {
        let entry = match value {
            Ok(v) => CheckEntry {
                name: name.into(),
                status: if v <= threshold { "pass" } else { "fail" },
                value: Some(v),
                threshold: Some(threshold),
                detail: None,
            },
            Err(e) => CheckEntry {
                name: name.into(),
                status: "fail",
                value: None,
                threshold: Some(threshold),
                detail: Some(e.to_string()),
            },
        };
        self.checks.push(entry);
    }

    fn skip(&mut self, names: &[&str], why: &str) {
        for n in names {
            self.checks.push(CheckEntry {
                name: (*n).into(),
                status: "skipped",
                value: None,
                threshold: None,
                detail: Some(why.into()),
            });
        }
    }
}

const CHECK_NAMES: [&str; 10] = [
    "hamiltonian_residual",
    "profile_ode_residual",
    "kernel_identity",
    "alpha0_affine",
    "alpha1_residual",
    "first_integral_drift",
    "meander_subspace",
    "gradient_consistency",
    "mass_conservation",
    "energy_dissipation",
];

/// Runs the invariant suite and writes `verify.json`. A failing well check
/// skips everything downstream.
pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let report = verify_report(cfg);
    write_json(&cfg.output.join("verify.json"), &report)?;
    let summary = serde_json::to_value(&report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Outcome { passed: report.passed, summary })
}

pub fn verify_report(cfg: &RunConfig) -> VerifyReport {
    let tol = &cfg.verify;
    let mut suite = Suite { checks: Vec::new() };
    let wr = validate_well(&cfg.well);
    for c in &wr.checks {
        suite.checks.push(CheckEntry {
            name: format!("well: {}", c.name),
            status: if c.pass { "pass" } else { "fail" },
            value: Some(c.value),
            threshold: None,
            detail: None,
        });
    }
    if !wr.passed() {
        suite.skip(&CHECK_NAMES, "well validation failed");
        return finish(suite);
    }
    let ctx = match Context::build(cfg) {
        Ok(c) => c,
        Err(e) => {
            suite.skip(&CHECK_NAMES, &format!("profile construction failed: {e}"));
            return finish(suite);
        }
    };
    let (b, op) = (&ctx.bilayer, &ctx.spectral);
    suite.at_most("hamiltonian_residual", Ok(b.hamiltonian_residual()), tol.hamiltonian);
    suite.at_most("profile_ode_residual", Ok(b.ode_residual()), tol.ode);
    suite.at_most("kernel_identity", Ok(op.kernel_residual(&b.du0)), tol.kernel);
    suite.at_most("alpha0_affine", affine_residual(b, op), tol.affine);
    suite.at_most("alpha1_residual", verify_alpha1(b, op).map(|a| a.alpha1.abs()), tol.alpha1);
    let nf = ctx.table(cfg).and_then(|t| ctx.nf_coefficients(cfg, &t));
    suite.at_most("first_integral_drift", nf.as_ref().map_err(clone_err).and_then(|c| first_integral_drift(cfg, c)), tol.first_integrals);
    suite.at_most("meander_subspace", nf.as_ref().map_err(clone_err).and_then(|c| subspace_leak(cfg, c)), tol.subspace);
    match small_simulation(cfg, &ctx) {
        Ok((grad, mass, energy)) => {
            suite.at_most("gradient_consistency", Ok(grad), tol.gradient);
            suite.at_most("mass_conservation", Ok(mass), tol.mass);
            suite.at_most("energy_dissipation", Ok(energy), cfg.sim.energy_tol);
        }
        Err(e) => {
            let msg = e.to_string();
            for n in ["gradient_consistency", "mass_conservation", "energy_dissipation"] {
                suite.at_most(n, Err(Error::InvalidArgument(msg.clone())), f64::NAN);
            }
        }
    }
    finish(suite)
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidArgument(e.to_string())
}

fn finish(suite: Suite) -> VerifyReport {
    let passed = suite.checks.iter().all(|c| c.status != "fail");
    VerifyReport { passed, checks: suite.checks }
}

/// Largest deviation of `alpha0` from the plane through its two probed parts on a 3x3 grid.
pub fn affine_residual(b: &BilayerData, op: &SpectralData) -> Result<f64> {
    let (a1, a2) = alpha0_parts(b, op)?;
    let mut worst = 0.0f64;
    for g in [0.5, 1.0, 2.0] {
        for e in [-1.5, -0.5, 1.0] {
            worst = worst.max((alpha0(b, op, g, e)? - (a1 * g - a2 * e)).abs());
        }
    }
    Ok(worst)
}

fn first_integral_drift(cfg: &RunConfig, c: &NFCoefficients) -> Result<f64> {
    let pnf = c.pearling_only();
    let s0 = nf_start(cfg, &pnf).unwrap_or_else(|_| {
        NFState::new(Complex64::new(0.05, 0.0), Complex64::new(0.0, 0.02), [0.0; 4])
    });
    let tr = integrate_nf(NFSystem::Pnf, &pnf, &s0, cfg.nf.t_end, cfg.nf.tol)?;
    let (k0, h0) = first_integrals(&s0, &pnf);
    Ok(tr.t.iter().zip(&tr.y).fold(0.0f64, |m, (t, y)| {
        let (k, h) = first_integrals(&NFState::from_slice(y, *t), &pnf);
        m.max((k - k0).abs()).max((h - h0).abs())
    }))
}

fn subspace_leak(cfg: &RunConfig, c: &NFCoefficients) -> Result<f64> {
    let s0 = NFState::new(Complex64::new(0.05, 0.01), Complex64::new(-0.01, 0.02), [0.0; 4]);
    let tr = integrate_nf(NFSystem::Nf8, c, &s0, cfg.nf.t_end, cfg.nf.tol)?;
    Ok(tr.y.iter().map(|y| NFState::from_slice(y, 0.0).d_norm()).fold(0.0, f64::max))
}

/// Gradient, mass and energy checks on a small perturbed flat bilayer.
fn small_simulation(cfg: &RunConfig, ctx: &Context) -> Result<(f64, f64, f64)> {
    let eps = cfg.physics.epsilon;
    let n = 128;
    let side = n as f64 * eps / 4.0;
    let sc = SimConfig {
        nx: n,
        ny: n,
        lx: side,
        ly: side,
        t_end: 40.0 * cfg.sim.dt,
        init: InitKind::FlatBilayer,
        perturbation: 1e-2,
        perturbation_modes: 8,
        sample_every: 20.0 * cfg.sim.dt,
        checkpoint_every: None,
        ..cfg.sim_config()
    };
    let tr = Transverse::new(&ctx.bilayer, &ctx.spectral, eps, sc.gamma, sc.eta_d())?;
    let u0 = init_field(&sc.init, &tr, &sc)?;
    let model = FchModel::for_config(ctx.well.clone(), &sc);
    let errs = gradient_check(&model, &u0, cfg.verify.directions, cfg.seed, 1e-6)?;
    let grad = errs.into_iter().fold(0.0, f64::max);
    let out = run(&model, &sc, u0, &Interface::for_init(&sc.init, &sc), |_, _| Ok(()))?;
    Ok((grad, out.max_mass_drift, out.max_energy_increase))
}

/// Output path of a command's JSON summary.
pub fn summary_path(cfg: &RunConfig, command: Command) -> PathBuf {
    cfg.output.join(format!("{}.json", name_of(command)))
}

