//! Subcommand dispatch: every command reads a [`RunConfig`] and writes its
//! artifacts into an output directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::acceptance;
use crate::config::{FitConfig, RunConfig};
use crate::dynamics::{
    evolve, fit_growth_rate, fit_site_slope, fit_spatial_slope, init_gaussian, EvolveOptions, LatticeState, RunObservables, Side,
};
use crate::model::SystemParams;
use crate::modes::{decompose_state, overlap_coefficient, predict_longtime_density, BoundStateProfile, DecompositionCoefficient};
use crate::output::{self, Report};
use crate::quad::Regularization;
use crate::scattering::{scatter, spectrum_sweep};
use crate::spectral::{find_singularities, solve_poles, trajectory_sweep, SearchBox, SiegertClass, TrajectoryRow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Singularity,
    Poles,
    Trajectory,
    Modes,
    Evolve,
    Verify,
    DumpConfig,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Spectrum,
        Command::Singularity,
        Command::Poles,
        Command::Trajectory,
        Command::Modes,
        Command::Evolve,
        Command::Verify,
        Command::DumpConfig,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Singularity => "singularity",
            Command::Poles => "poles",
            Command::Trajectory => "trajectory",
            Command::Modes => "modes",
            Command::Evolve => "evolve",
            Command::Verify => "verify",
            Command::DumpConfig => "dump-config",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::invalid(format!("unknown subcommand {s:?}")))
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// Human-readable lines for the terminal.
    pub messages: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Set when the command is a check that did not pass.
    pub failed: bool,
}

impl Outcome {
    fn note(&mut self, msg: impl Into<String>) {
        self.messages.push(msg.into());
    }
}

/// Output directory: the explicit override, then `out.dir`, then `out`.
pub fn output_dir(cfg: &RunConfig, override_dir: Option<&Path>) -> PathBuf {
    override_dir.map(Path::to_path_buf).or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut o = Outcome::default();
    if cmd != Command::DumpConfig {
        std::fs::create_dir_all(out)?;
    }
    match cmd {
        Command::Spectrum => spectrum(cfg, out, &mut o)?,
        Command::Singularity => singularity(cfg, out, &mut o)?,
        Command::Poles => poles(cfg, out, &mut o)?,
        Command::Trajectory => trajectory(cfg, out, &mut o)?,
        Command::Modes => modes(cfg, out, &mut o)?,
        Command::Evolve => run_evolve(cfg, out, &mut o)?,
        Command::Verify => verify(out, &mut o)?,
        Command::DumpConfig => o.note(cfg.dump().trim_end().to_string()),
    }
    Ok(o)
}

fn write(table: output::Table, path: PathBuf, o: &mut Outcome) -> Result<()> {
    table.write(&path)?;
    o.files.push(path);
    Ok(())
}

fn spectrum(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let grid = cfg.require(&cfg.grid, "grid.k_start")?;
    let rows = spectrum_sweep(&cfg.system, &grid.points())?;
    let singular = rows.iter().filter(|r| r.singular).count();
    let peak = rows.iter().filter(|r| !r.singular).map(|r| r.flux_sum).fold(f64::NAN, f64::max);
    o.note(format!("{} k points, {singular} singular, max R+T = {peak:.6e}", rows.len()));
    write(output::spectrum_table(&rows), out.join("spectrum.csv"), o)
}

fn singularity(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let pts = find_singularities(&cfg.system)?;
    for s in &pts {
        o.note(format!("k = {:.12}, gamma = {:.12}, omega = {:.12}", s.k, s.gamma, s.omega));
    }
    o.note(format!("{} spectral singularities", pts.len()));
    write(output::singularity_table(&pts), out.join("singularities.csv"), o)
}

fn poles(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let found = solve_poles(&cfg.system, &cfg.search_box())?;
    for p in &found {
        o.note(format!("{:<13} k = {:.10}, E = {:.10}", p.class.as_str(), p.k, p.energy));
    }
    o.note(format!("{} poles at gamma = {}", found.len(), cfg.system.gamma));
    let rows = [TrajectoryRow { gamma: cfg.system.gamma, poles: found }];
    write(output::poles_table(&rows), out.join("poles.csv"), o)
}

fn trajectory(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let sweep = cfg.require(&cfg.sweep, "sweep.gamma_start")?;
    let rows = trajectory_sweep(&cfg.system, &sweep.points(), &cfg.search_box())?;
    let total: usize = rows.iter().map(|r| r.poles.len()).sum();
    o.note(format!("{} gain values, {total} pole rows", rows.len()));
    write(output::poles_table(&rows), out.join("trajectory.csv"), o)
}

fn modes(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let p = &cfg.system;
    let found = solve_poles(p, &cfg.search_box())?;
    let (lo, hi) = cfg.profile.unwrap_or((-40, p.n as i64 + 40));
    let mut coeffs = Vec::new();
    for (id, pole) in found.iter().enumerate() {
        let profile = BoundStateProfile::new(p, pole)?;
        write(output::profile_table(lo..=hi, |j| profile.amplitude(j)), out.join(format!("profile_{id}.csv")), o)?;
        let norm = profile.norm_or_one();
        o.note(format!(
            "pole {id}: {} E = {:.10}, norm factor = {}",
            pole.class.as_str(),
            pole.energy,
            match profile.norm_factor {
                Some(v) => format!("{v:.10}"),
                None => "not normalizable (reported with 1)".to_string(),
            }
        ));
        if let Some(packet) = &cfg.packet {
            let c = overlap_coefficient(p, pole, norm, packet, Regularization::PlusI)?;
            coeffs.push((id, DecompositionCoefficient::new(p, pole, norm, c, -packet.t_c(p))));
        }
    }
    if cfg.packet.is_some() {
        write(output::coefficients_table(&coeffs), out.join("coefficients.csv"), o)?;
    } else {
        o.note("no packet block: coefficients skipped");
    }
    Ok(())
}

/// Results of the long-time analysis of a gain run.
#[derive(Debug, Clone, PartialEq)]
pub struct GainFits {
    pub growth_rate: f64,
    pub slope_left: f64,
    pub slope_right: f64,
    pub plateau_left: f64,
    pub plateau_right: f64,
    /// Coefficients fitted at `decompose_time`.
    pub coefficients: Vec<DecompositionCoefficient>,
    /// Largest `|P_pred/P_sim − 1|` over the slope windows at `closure_time`.
    pub closure_error: f64,
}

fn snapshot(obs: &RunObservables, t: f64) -> Result<&LatticeState> {
    obs.snapshot_at(t).ok_or_else(|| Error::invalid(format!("no snapshot at t = {t}")))
}

/// Growth rate, flank slopes, plateau flatness and the pole-expansion closure.
pub fn gain_fits(params: &SystemParams, bx: &SearchBox, fit: &FitConfig, obs: &RunObservables) -> Result<GainFits> {
    let n = params.n;
    let growth_rate = fit_growth_rate(&obs.samples, fit.growth_start, fit.growth_stop)?;
    let s = snapshot(obs, fit.slope_time)?;
    let slope_left = fit_spatial_slope(s, n, Side::Left, fit.slope_from, fit.slope_to)?;
    let slope_right = fit_spatial_slope(s, n, Side::Right, fit.slope_from, fit.slope_to)?;
    let s = snapshot(obs, fit.plateau_time)?;
    let (inner, outer) = (fit.plateau_inner as i64, fit.plateau_outer as i64);
    let left: Vec<i64> = (-outer..=-inner).collect();
    let right: Vec<i64> = (n as i64 + inner..=n as i64 + outer).collect();
    let plateau_left = fit_site_slope(s, &left)?;
    let plateau_right = fit_site_slope(s, &right)?;

    let poles: Vec<_> =
        solve_poles(params, bx)?.into_iter().filter(|p| matches!(p.class, SiegertClass::Growing | SiegertClass::InContinuum)).collect();
    let s = snapshot(obs, fit.decompose_time)?;
    let js = FitConfig::flank_sites(n, fit.decompose_inner, fit.decompose_outer);
    let coefficients = decompose_state(params, &poles, s, &js)?;
    let target = snapshot(obs, fit.closure_time)?;
    let closure_error = FitConfig::flank_sites(n, fit.slope_from, fit.slope_to)
        .into_iter()
        .map(|j| (predict_longtime_density(&coefficients, n, j, target.time) / target.density(j) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(GainFits { growth_rate, slope_left, slope_right, plateau_left, plateau_right, coefficients, closure_error })
}

fn run_evolve(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let p = &cfg.system;
    let packet = cfg.require(&cfg.packet, "packet.alpha")?;
    let ev = cfg.require(&cfg.evolve, "evolve.t_end")?;
    let lattice = cfg.lattice()?.expect("packet implies a lattice");
    let state0 = init_gaussian(p, packet, lattice)?;
    let mut snaps = ev.snapshots.clone();
    if let Some(f) = &cfg.fit {
        snaps.extend(f.times());
    }
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let opts =
        EvolveOptions { snapshots: snaps, tol: ev.tol, sample_dt: ev.sample_dt, atom_sign: ev.atom_sign, ..EvolveOptions::new(ev.t_end) };
    let obs = evolve(p, &state0, &opts)?;

    let mut rep = Report::default();
    let last = obs.samples.last().copied().expect("evolve records the final time");
    rep.put_num("t_end", last.t);
    rep.put("steps", obs.stats.accepted);
    rep.put("rejected_steps", obs.stats.rejected);
    rep.put_num("R_L", last.r_l);
    rep.put_num("T_L", last.t_l);
    rep.put_num("interior", last.interior);
    rep.put_num("atom_prob", last.atom_prob);
    rep.put_num("total_norm", last.total_norm);
    if let Ok(sr) = scatter(p, packet.k_c) {
        rep.put_num("stationary_R_at_k_c", sr.reflectance);
        rep.put_num("stationary_T_at_k_c", sr.transmittance);
    }
    o.note(format!(
        "t = {:.3}: R_L = {:.6}, T_L = {:.6}, norm = {:.6e} ({} steps)",
        last.t, last.r_l, last.t_l, last.total_norm, obs.stats.accepted
    ));
    if let Some(f) = &cfg.fit {
        let fits = gain_fits(p, &cfg.search_box(), f, &obs)?;
        rep.put_num("growth_rate", fits.growth_rate);
        rep.put_num("slope_left", fits.slope_left);
        rep.put_num("slope_right", fits.slope_right);
        rep.put_num("plateau_slope_left", fits.plateau_left);
        rep.put_num("plateau_slope_right", fits.plateau_right);
        for (i, c) in fits.coefficients.iter().enumerate() {
            rep.put(&format!("pole_{i}_class"), c.pole.class.as_str());
            rep.put_num(&format!("pole_{i}_Re_A"), c.a.re);
            rep.put_num(&format!("pole_{i}_Im_A"), c.a.im);
        }
        rep.put_num("closure_max_rel_error", fits.closure_error);
        o.note(format!(
            "growth rate {:.5}, slopes {:+.5} / {:+.5}, closure error {:.3e}",
            fits.growth_rate, fits.slope_left, fits.slope_right, fits.closure_error
        ));
    }
    write(output::observables_table(&obs.samples), out.join("observables.csv"), o)?;
    write(output::snapshot_table(&obs.snapshots), out.join("snapshots.csv"), o)?;
    let path = out.join("fits.txt");
    rep.write(&path)?;
    o.files.push(path);
    Ok(())
}

fn verify(out: &Path, o: &mut Outcome) -> Result<()> {
    let results = acceptance::run_all();
    let table = acceptance::render(&results);
    let path = out.join("verify.txt");
    output::write_atomic(&path, table.as_bytes())?;
    o.files.push(path);
    o.messages.extend(table.lines().map(str::to_string));
    o.failed = results.iter().any(|r| !r.pass);
    Ok(())
}
