//! Time evolution of a single-photon Gaussian wave packet on a finite chain
//! coupled to the giant atom, plus the observables read off the simulation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::model::{check_interior, SystemParams};
use crate::ode::{self, OdeOptions, OdeStats, OdeSystem};
use crate::{Error, Result, C64};

/// Sites at each lattice end watched by the boundary guard.
pub const GUARD_SITES: usize = 20;
/// Largest allowed fraction of the total probability inside the guard band.
pub const GUARD_FRACTION: f64 = 1e-8;
/// Half-width of the central region used for growth-rate fits.
pub const CENTRAL_HALF_WIDTH: i64 = 100;

/// Gaussian packet `φ(j) = π^{−1/4} α^{1/2} e^{−α²(j−j_c)²/2} e^{i k_c j}` at `t = −t_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacketSpec {
    pub alpha: f64,
    pub j_c: i64,
    pub k_c: f64,
}

impl GaussianPacketSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("packet.alpha must be positive"));
        }
        check_interior(self.k_c).map_err(|_| Error::invalid("packet.k_c must lie in (0, π)"))
    }

    /// Mean group velocity `v_c = 2J sin k_c`.
    pub fn v_c(&self, params: &SystemParams) -> f64 {
        params.group_velocity(self.k_c)
    }

    /// Arrival time `t_c = −j_c / v_c` of the packet peak at the atom.
    pub fn t_c(&self, params: &SystemParams) -> f64 {
        -(self.j_c as f64) / self.v_c(params)
    }

    pub fn amplitude(&self, j: i64) -> C64 {
        let d = (j - self.j_c) as f64;
        let env = PI.powf(-0.25) * self.alpha.sqrt() * (-0.5 * self.alpha * self.alpha * d * d).exp();
        env * C64::new(0.0, self.k_c * j as f64).exp()
    }

    /// Momentum amplitude `β(k) = π^{−1/4} α^{−1/2} e^{−(k−k_c)²/2α² + i(k_c−k)j_c}`,
    /// with `φ(j) = (2π)^{−1/2} ∫ β(k) e^{ikj} dk`.
    pub fn momentum_amplitude(&self, k: f64) -> C64 {
        let d = k - self.k_c;
        let env = PI.powf(-0.25) / self.alpha.sqrt() * (-d * d / (2.0 * self.alpha * self.alpha)).exp();
        env * C64::new(0.0, -d * self.j_c as f64).exp()
    }

    /// True when the packet's initial support (6/α) reaches a coupling site.
    pub fn overlaps_coupling(&self, params: &SystemParams) -> bool {
        let margin = 6.0 / self.alpha;
        let (a, b) = (0.0, params.n as f64);
        let jc = self.j_c as f64;
        jc + margin >= a && jc - margin <= b
    }
}

/// Open chain of `sites` sites centred on the coupling region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub j_min: i64,
    pub sites: usize,
}

impl Lattice {
    pub fn centered(sites: usize, n: usize) -> Result<Self> {
        if sites < n + 3 {
            return Err(Error::invalid("lattice.sites must exceed N + 2"));
        }
        let j_min = -(((sites - n) / 2) as i64);
        Ok(Self { j_min, sites })
    }

    pub fn j_max(&self) -> i64 {
        self.j_min + self.sites as i64 - 1
    }

    pub fn contains(&self, j: i64) -> bool {
        j >= self.j_min && j <= self.j_max()
    }

    pub fn index(&self, j: i64) -> Option<usize> {
        self.contains(j).then(|| (j - self.j_min) as usize)
    }

    pub fn site(&self, idx: usize) -> i64 {
        self.j_min + idx as i64
    }

    pub fn sites_iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.j_min..=self.j_max()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub time: f64,
    pub lattice: Lattice,
    pub site_amps: Vec<C64>,
    pub atom_amp: C64,
}

impl LatticeState {
    pub fn amp(&self, j: i64) -> C64 {
        self.lattice.index(j).map_or(C64::new(0.0, 0.0), |i| self.site_amps[i])
    }

    pub fn density(&self, j: i64) -> f64 {
        self.amp(j).norm_sqr()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.site_amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn total_norm(&self) -> f64 {
        self.site_amps.iter().map(|a| a.norm_sqr()).sum::<f64>() + self.atom_amp.norm_sqr()
    }

    fn from_vec(time: f64, lattice: Lattice, y: &[C64]) -> Self {
        let n = lattice.sites;
        Self { time, lattice, site_amps: y[..n].to_vec(), atom_amp: y[n] }
    }

    fn to_vec(&self) -> Vec<C64> {
        let mut y = self.site_amps.clone();
        y.push(self.atom_amp);
        y
    }
}

/// Places the packet on the lattice at `t = −t_c` and renormalizes it.
pub fn init_gaussian(params: &SystemParams, spec: &GaussianPacketSpec, lattice: Lattice) -> Result<LatticeState> {
    params.validate()?;
    spec.validate()?;
    let margin = (6.0 / spec.alpha).ceil() as i64;
    if !(lattice.contains(spec.j_c - margin) && lattice.contains(spec.j_c + margin)) {
        return Err(Error::invalid(format!(
            "lattice [{}, {}] leaves less than 6/alpha = {margin} sites around j_c = {}",
            lattice.j_min,
            lattice.j_max(),
            spec.j_c
        )));
    }
    if spec.overlaps_coupling(params) {
        log::warn!("packet at j_c = {} overlaps the coupling sites", spec.j_c);
    }
    let mut amps: Vec<C64> = lattice.sites_iter().map(|j| spec.amplitude(j)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok(LatticeState { time: -spec.t_c(params), lattice, site_amps: amps, atom_amp: C64::new(0.0, 0.0) })
}

/// Sign in front of `(ω_a + iγ)` in the atom equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AtomSign {
    #[default]
    Plus,
    Minus,
}

impl fmt::Display for AtomSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AtomSign::Plus => "plus",
            AtomSign::Minus => "minus",
        })
    }
}

impl FromStr for AtomSign {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plus" => Ok(AtomSign::Plus),
            "minus" => Ok(AtomSign::Minus),
            other => Err(format!("expected plus or minus, got {other:?}")),
        }
    }
}

/// Equations of motion, state laid out as `[φ(j_min) .. φ(j_max), φ(a)]`.
pub struct LatticeSystem {
    params: SystemParams,
    lattice: Lattice,
    sign: AtomSign,
    i0: usize,
    i_n: usize,
}

impl LatticeSystem {
    pub fn new(params: &SystemParams, lattice: Lattice, sign: AtomSign) -> Result<Self> {
        let i0 = lattice.index(0).ok_or_else(|| Error::invalid("lattice must contain site 0"))?;
        let i_n = lattice.index(params.n as i64).ok_or_else(|| Error::invalid("lattice must contain site N"))?;
        Ok(Self { params: *params, lattice, sign, i0, i_n })
    }
}

impl OdeSystem for LatticeSystem {
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        let p = &self.params;
        let n = self.lattice.sites;
        let mi = C64::new(0.0, -1.0);
        let a = y[n];
        let wc = p.omega_c;
        let j = p.hopping;
        // i dφ_j/dt = ω_c φ_j − J(φ_{j+1} + φ_{j−1}) + g(δ_{j,0} + δ_{j,N}) φ_a
        dy[0] = mi * (wc * y[0] - j * y[1]);
        for i in 1..n - 1 {
            dy[i] = mi * (wc * y[i] - j * (y[i + 1] + y[i - 1]));
        }
        dy[n - 1] = mi * (wc * y[n - 1] - j * y[n - 2]);
        dy[self.i0] += mi * p.g * a;
        dy[self.i_n] += mi * p.g * a;
        let s = match self.sign {
            AtomSign::Plus => 1.0,
            AtomSign::Minus => -1.0,
        };
        dy[n] = mi * (s * C64::new(p.omega_a, p.gamma) * a + p.g * (y[self.i0] + y[self.i_n]));
    }
}

/// Time-derivative of a state (allocating convenience wrapper around the stencil).
pub fn rhs(params: &SystemParams, state: &LatticeState, sign: AtomSign) -> Result<LatticeState> {
    let sys = LatticeSystem::new(params, state.lattice, sign)?;
    let y = state.to_vec();
    let mut dy = vec![C64::new(0.0, 0.0); y.len()];
    sys.rhs(state.time, &y, &mut dy);
    Ok(LatticeState::from_vec(state.time, state.lattice, &dy))
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// End time on the packet clock (the run starts at the state's own time).
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub tol: f64,
    /// Spacing of the observable time series.
    pub sample_dt: f64,
    pub atom_sign: AtomSign,
    pub guard_sites: usize,
    pub guard_fraction: f64,
}

impl EvolveOptions {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            snapshots: Vec::new(),
            tol: 1e-9,
            sample_dt: 1.0,
            atom_sign: AtomSign::Plus,
            guard_sites: GUARD_SITES,
            guard_fraction: GUARD_FRACTION,
        }
    }
}

/// One row of the observable time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub r_l: f64,
    pub t_l: f64,
    pub interior: f64,
    pub atom_prob: f64,
    pub total_norm: f64,
    /// Probability in `|j − N/2| ≤ 100`.
    pub central: f64,
}

#[derive(Debug, Clone)]
pub struct RunObservables {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<LatticeState>,
    pub final_state: LatticeState,
    pub stats: OdeStats,
}

impl RunObservables {
    pub fn snapshot_at(&self, t: f64) -> Option<&LatticeState> {
        self.snapshots.iter().find(|s| (s.time - t).abs() < 1e-9)
    }
}

fn sample(state: &LatticeState, n: usize) -> Sample {
    let (r_l, t_l, interior) = reflect_transmit_interior(state, n);
    let central = state
        .lattice
        .sites_iter()
        .zip(&state.site_amps)
        .filter(|(j, _)| (2 * j - n as i64).abs() <= 2 * CENTRAL_HALF_WIDTH)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let atom_prob = state.atom_amp.norm_sqr();
    Sample { t: state.time, r_l, t_l, interior, atom_prob, total_norm: r_l + t_l + interior + atom_prob, central }
}

fn reflect_transmit_interior(state: &LatticeState, n: usize) -> (f64, f64, f64) {
    let (mut r, mut t, mut inside) = (0.0, 0.0, 0.0);
    for (j, a) in state.lattice.sites_iter().zip(&state.site_amps) {
        let p = a.norm_sqr();
        if j < 0 {
            r += p;
        } else if j > n as i64 {
            t += p;
        } else {
            inside += p;
        }
    }
    (r, t, inside)
}

/// `(R_L, T_L)`: probability on `j < 0` and on `j > N`.
pub fn reflect_transmit(state: &LatticeState, n: usize) -> (f64, f64) {
    let (r, t, _) = reflect_transmit_interior(state, n);
    (r, t)
}

fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    all
}

/// Integrates the equations of motion from `state0.time` to `opts.t_end`.
pub fn evolve(params: &SystemParams, state0: &LatticeState, opts: &EvolveOptions) -> Result<RunObservables> {
    params.validate()?;
    let t0 = state0.time;
    if !(opts.t_end > t0) {
        return Err(Error::invalid(format!("evolve.t_end = {} must exceed the start time {t0}", opts.t_end)));
    }
    if opts.snapshots.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("evolve.snapshots must be sorted"));
    }
    if let Some(&bad) = opts.snapshots.iter().find(|&&t| t < t0 || t > opts.t_end) {
        return Err(Error::invalid(format!("snapshot time {bad} outside [{t0}, {}]", opts.t_end)));
    }
    if !(opts.sample_dt > 0.0) {
        return Err(Error::invalid("evolve.sample_dt must be positive"));
    }
    let lattice = state0.lattice;
    let sys = LatticeSystem::new(params, lattice, opts.atom_sign)?;
    let n = params.n;
    let count = ((opts.t_end - t0) / opts.sample_dt).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| t0 + i as f64 * opts.sample_dt).collect();
    if grid.last().is_some_and(|&t| t < opts.t_end - 1e-12) {
        grid.push(opts.t_end);
    }
    let outputs = merge_times(&grid, &opts.snapshots);

    let mut samples = Vec::with_capacity(grid.len());
    let mut snapshots = Vec::with_capacity(opts.snapshots.len());
    let is_snapshot = |t: f64| opts.snapshots.iter().any(|&s| (s - t).abs() < 1e-12);
    let is_sample = |t: f64| grid.iter().any(|&s| (s - t).abs() < 1e-12);
    let g = opts.guard_sites.min(lattice.sites / 2);
    let ode_opts = OdeOptions::with_tol(opts.tol);

    let (y, stats) = ode::integrate(
        &sys,
        t0,
        state0.to_vec(),
        opts.t_end,
        &outputs,
        ode_opts,
        |_, t, y| {
            let st = LatticeState::from_vec(t, lattice, y);
            if is_sample(t) {
                samples.push(sample(&st, n));
            }
            if is_snapshot(t) {
                snapshots.push(st);
            }
            Ok(())
        },
        |t, y| {
            let sites = &y[..lattice.sites];
            let edge: f64 = sites[..g].iter().chain(&sites[sites.len() - g..]).map(|a| a.norm_sqr()).sum();
            let total: f64 = y.iter().map(|a| a.norm_sqr()).sum();
            let fraction = edge / total;
            if fraction > opts.guard_fraction {
                return Err(Error::BoundaryViolation { time: t, fraction });
            }
            Ok(())
        },
    )?;
    let final_state = LatticeState::from_vec(opts.t_end, lattice, &y);
    Ok(RunObservables { samples, snapshots, final_state, stats })
}

/// Closed-form free-propagation density of the packet at site `j`, time `t`.
pub fn analytic_free_density(spec: &GaussianPacketSpec, params: &SystemParams, j: i64, t: f64) -> f64 {
    let tau = t + spec.t_c(params);
    let spread = spec.alpha * params.band_curvature(spec.k_c) * tau;
    let w2 = 1.0 / (spec.alpha * spec.alpha) + spread * spread;
    let x = j as f64 - spec.j_c as f64 - spec.v_c(params) * tau;
    (-x * x / w2).exp() / (PI.sqrt() * w2.sqrt())
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Numerical("slope fit needs at least two points".into()));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("degenerate abscissae in slope fit".into()));
    }
    Ok(sxy / sxx)
}

fn log_slope(x: &[f64], p: &[f64]) -> Result<f64> {
    if p.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Numerical("non-positive probability in log fit".into()));
    }
    let ly: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    least_squares_slope(x, &ly)
}

/// Slope of `ln(central probability)` against `t` over `[t_lo, t_hi]`.
pub fn fit_growth_rate(samples: &[Sample], t_lo: f64, t_hi: f64) -> Result<f64> {
    let pts: Vec<&Sample> = samples.iter().filter(|s| s.t >= t_lo - 1e-9 && s.t <= t_hi + 1e-9).collect();
    let t: Vec<f64> = pts.iter().map(|s| s.t).collect();
    let p: Vec<f64> = pts.iter().map(|s| s.central).collect();
    log_slope(&t, &p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Slope of `ln P(j)` against `j` on one side of the coupling region.
///
/// The window counts sites outward from the nearest coupling site:
/// `j ∈ [−hi, −lo]` on the left and `j ∈ [N + lo, N + hi]` on the right.
pub fn fit_spatial_slope(state: &LatticeState, n: usize, side: Side, lo: usize, hi: usize) -> Result<f64> {
    if lo > hi {
        return Err(Error::invalid("slope window needs lo <= hi"));
    }
    let js: Vec<i64> = match side {
        Side::Left => (lo..=hi).map(|d| -(d as i64)).collect(),
        Side::Right => (lo..=hi).map(|d| (n + d) as i64).collect(),
    };
    fit_site_slope(state, &js)
}

/// Slope of `ln P(j)` against `j` over the given sites.
pub fn fit_site_slope(state: &LatticeState, js: &[i64]) -> Result<f64> {
    if js.iter().any(|&j| !state.lattice.contains(j)) {
        return Err(Error::invalid("slope window leaves the lattice"));
    }
    let x: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let p: Vec<f64> = js.iter().map(|&j| state.density(j)).collect();
    log_slope(&x, &p)
}

/// Ratio of the largest to the smallest density over `j_lo..=j_hi`.
pub fn plateau_flatness(state: &LatticeState, j_lo: i64, j_hi: i64) -> Result<f64> {
    let p: Vec<f64> = (j_lo..=j_hi).map(|j| state.density(j)).collect();
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    let max = p.iter().copied().fold(0.0, f64::max);
    if !(min > 0.0) {
        return Err(Error::Numerical("plateau window contains zero density".into()));
    }
    Ok(max / min)
}
