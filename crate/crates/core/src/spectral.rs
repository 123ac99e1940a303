//! Spectral singularities, Siegert poles and their trajectories in γ.
//!
//! Poles are roots of the outgoing-wave eigenvalue condition
//! `ω_c − 2J cos k = ω_a + iγ − i g²(1 + e^{ikN}) / (J sin k)`.
//! The lower-branch form of the condition at `k` equals the upper form at
//! `−k`, so both are solved through the upper form and reported with their
//! `Im k ≥ 0` representative.

use std::f64::consts::PI;
use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::SystemParams;
use crate::{Error, Result, C64};

/// Residual below which a pole or singularity counts as certified.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Roots closer than this in `k` are merged.
pub const DEDUP_RADIUS: f64 = 1e-8;
/// `|Im k|` (and `|Re k|`, `|Re k − π|`) below this counts as zero.
pub const AXIS_TOL: f64 = 1e-8;
/// `|sin k|` below which the eigenvalue condition has a formula pole.
pub const SIN_GUARD: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_MAX_HALVINGS: usize = 30;
const NEWTON_RES_TOL: f64 = 1e-12;
const NEWTON_STEP_TOL: f64 = 1e-12;
const SCAN_POINTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityPoint {
    pub k: f64,
    pub gamma: f64,
    pub omega: f64,
    pub residual: f64,
}

/// The two real conditions for a spectral singularity at real `k` (resonant atom):
/// `(g² sin Nk + 2J² sin k cos k, g² + g² cos Nk − Jγ sin k)`.
pub fn singularity_residual(params: &SystemParams, k: f64, gamma_trial: f64) -> (f64, f64) {
    let g2 = params.g * params.g;
    let j = params.hopping;
    let nk = params.n as f64 * k;
    let (s, c) = k.sin_cos();
    (g2 * nk.sin() + 2.0 * j * j * s * c, g2 * (1.0 + nk.cos()) - j * gamma_trial * s)
}

fn singularity_gamma(params: &SystemParams, k: f64) -> f64 {
    params.g * params.g * (1.0 + (params.n as f64 * k).cos()) / (params.hopping * k.sin())
}

/// All spectral singularities for the given `g`, `N`, `J`; the `gamma` field of
/// `params` is ignored. Decoupled roots are excluded.
pub fn find_singularities(params: &SystemParams) -> Result<Vec<SingularityPoint>> {
    params.validate()?;
    if !params.is_resonant() {
        return Err(Error::invalid("singularity conditions assume omega_a = omega_c"));
    }
    if params.g <= 0.0 {
        return Err(Error::invalid("find_singularities needs g > 0"));
    }
    let f = |k: f64| singularity_residual(params, k, 0.0).0;
    let (lo, hi) = (1e-6, PI - 1e-6);
    let step = (hi - lo) / SCAN_POINTS as f64;
    let mut roots = Vec::new();
    let mut prev = (lo, f(lo));
    for i in 1..=SCAN_POINTS {
        let k = lo + step * i as f64;
        let fk = f(k);
        if fk == 0.0 {
            roots.push(k);
        } else if prev.1 != 0.0 && prev.1.signum() != fk.signum() {
            roots.push(bisect(&f, prev.0, k));
        }
        prev = (k, fk);
    }
    let mut out: Vec<SingularityPoint> = Vec::new();
    for k in roots {
        if params.coupling_phase(C64::new(k, 0.0)).norm() < 1e-10 {
            continue;
        }
        let gamma = singularity_gamma(params, k);
        let (r1, r2) = singularity_residual(params, k, gamma);
        let residual = r1.abs().max(r2.abs());
        if residual >= RESIDUAL_TOL || gamma <= 0.0 {
            continue;
        }
        if out.last().is_some_and(|p| (p.k - k).abs() < DEDUP_RADIUS) {
            continue;
        }
        out.push(SingularityPoint { k, gamma, omega: params.dispersion(k), residual });
    }
    Ok(out)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // pick the endpoint with the smaller residual
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

/// Which case of the outgoing-wave condition a root satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Upper,
    Lower,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Upper => "upper",
            Branch::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiegertClass {
    Bound,
    Virtual,
    Resonant,
    Antiresonant,
    Growing,
    Decaying,
    InContinuum,
}

impl SiegertClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SiegertClass::Bound => "bound",
            SiegertClass::Virtual => "virtual",
            SiegertClass::Resonant => "resonant",
            SiegertClass::Antiresonant => "antiresonant",
            SiegertClass::Growing => "growing",
            SiegertClass::Decaying => "decaying",
            SiegertClass::InContinuum => "in-continuum",
        }
    }
}

impl fmt::Display for SiegertClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Quadrant classification of a complex wave number with `Re k ≥ 0`.
///
/// The lines `Re k = 0` and `Re k = π` both count as the imaginary axis.
pub fn classify_siegert(k: C64) -> SiegertClass {
    let on_axis = k.re.abs() < AXIS_TOL || (k.re - PI).abs() < AXIS_TOL;
    if k.im.abs() < AXIS_TOL {
        SiegertClass::InContinuum
    } else if on_axis {
        if k.im > 0.0 {
            SiegertClass::Bound
        } else {
            SiegertClass::Virtual
        }
    } else {
        match (k.re > 0.0, k.im > 0.0) {
            (true, true) => SiegertClass::Growing,
            (true, false) => SiegertClass::Resonant,
            (false, false) => SiegertClass::Antiresonant,
            (false, true) => SiegertClass::Decaying,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiegertPole {
    pub k: C64,
    pub energy: C64,
    pub branch: Branch,
    pub class: SiegertClass,
    pub residual: f64,
}

impl SiegertPole {
    fn new(params: &SystemParams, k: C64, branch: Branch, residual: f64) -> Self {
        Self { k, energy: params.dispersion_complex(k), branch, class: classify_siegert(k), residual }
    }
}

fn upper_residual(params: &SystemParams, k: C64) -> C64 {
    let j = params.hopping;
    let g2 = params.g * params.g;
    let lhs = params.dispersion_complex(k);
    let rhs = C64::new(params.omega_a, params.gamma) - C64::i() * g2 * params.coupling_phase(k) / (j * k.sin());
    lhs - rhs
}

/// Residual of the eigenvalue condition, using the case selected by the sign of `Im k`.
pub fn eigen_residual(params: &SystemParams, k: C64) -> Result<C64> {
    let s = k.sin().norm();
    if s < SIN_GUARD {
        return Err(Error::FormulaPole { k, sin_abs: s });
    }
    Ok(if k.im >= 0.0 { upper_residual(params, k) } else { upper_residual(params, -k) })
}

/// Seed rectangle in the complex `k` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Seeds per side of the uniform grid.
    pub seeds: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self { re_min: 0.02, re_max: PI - 0.02, im_min: -2.0, im_max: 2.0, seeds: 80 }
    }
}

impl SearchBox {
    pub fn validate(&self) -> Result<()> {
        if !(self.re_min > 0.0 && self.re_max < PI && self.re_min < self.re_max) {
            return Err(Error::invalid("search box must lie inside 0 < Re k < π"));
        }
        if !(self.im_min < self.im_max) || !self.im_min.is_finite() || !self.im_max.is_finite() {
            return Err(Error::invalid("search box needs im_min < im_max"));
        }
        if self.seeds < 2 {
            return Err(Error::invalid("search box needs at least 2 seeds per side"));
        }
        Ok(())
    }

    pub fn seed_grid(&self) -> Vec<C64> {
        let n = self.seeds;
        let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
        (0..n).flat_map(|i| (0..n).map(move |m| C64::new(lerp(self.re_min, self.re_max, i), lerp(self.im_min, self.im_max, m)))).collect()
    }

    fn im_extent(&self) -> f64 {
        self.im_min.abs().max(self.im_max.abs())
    }
}

fn derivative(f: &impl Fn(C64) -> C64, k: C64) -> C64 {
    let h = 1e-7 * k.norm().max(1.0);
    (f(k + h) - f(k - h)) / (2.0 * h)
}

/// Damped Newton iteration for an analytic function of one complex variable.
fn newton(f: &impl Fn(C64) -> C64, mut k: C64) -> Option<(C64, f64)> {
    let mut fk = f(k);
    for _ in 0..NEWTON_MAX_ITER {
        if !(fk.re.is_finite() && fk.im.is_finite()) || k.im.abs() > 50.0 {
            return None;
        }
        let d = derivative(f, k);
        if d.norm() == 0.0 || !d.re.is_finite() {
            return None;
        }
        let step = -fk / d;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial = k + step * lambda;
            let ft = f(trial);
            if ft.norm() < fk.norm() {
                accepted = Some((trial, ft));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((kn, fnew)) => {
                let moved = (kn - k).norm();
                k = kn;
                fk = fnew;
                if fk.norm() < NEWTON_RES_TOL && moved < NEWTON_STEP_TOL {
                    return Some((k, fk.norm()));
                }
            }
            // rounding floor: no further decrease possible
            None => return (fk.norm() < NEWTON_RES_TOL).then_some((k, fk.norm())),
        }
    }
    (fk.norm() < NEWTON_RES_TOL).then_some((k, fk.norm()))
}

/// Maps a root of the upper form into the principal strip with `Re k ∈ (−π, π]`.
fn wrap(k: C64) -> C64 {
    let mut re = (k.re + PI).rem_euclid(2.0 * PI) - PI;
    if re <= -PI {
        re += 2.0 * PI;
    }
    C64::new(re, k.im)
}

/// Re-solves a near-real root on the real line; keeps whichever is better.
fn polish_real(params: &SystemParams, k: C64, res: f64) -> (C64, f64) {
    let j = params.hopping;
    let g2 = params.g * params.g;
    let real_eq = |x: f64| {
        let s = x.sin();
        (params.omega_c - params.omega_a - 2.0 * j * x.cos()) * j * s - g2 * (params.n as f64 * x).sin()
    };
    let mut x = k.re;
    for _ in 0..50 {
        let h = 1e-7;
        let d = (real_eq(x + h) - real_eq(x - h)) / (2.0 * h);
        if d == 0.0 {
            break;
        }
        let dx = real_eq(x) / d;
        x -= dx;
        if dx.abs() < 1e-15 {
            break;
        }
    }
    let kr = C64::new(x, 0.0);
    let rr = upper_residual(params, kr).norm();
    if rr.is_finite() && (rr <= res || rr < NEWTON_RES_TOL) {
        (kr, rr)
    } else {
        (k, res)
    }
}

fn canonical_root(params: &SystemParams, bx: &SearchBox, seed: C64) -> Option<SiegertPole> {
    // lower-case seeds are solved as upper-form roots at −seed
    let start = if seed.im >= 0.0 { seed } else { -seed };
    let f = |k: C64| upper_residual(params, k);
    let (k, res) = newton(&f, start)?;
    let k = wrap(k);
    if k.im < -AXIS_TOL {
        return None;
    }
    let (mut k, mut res) = if k.im.abs() < AXIS_TOL { polish_real(params, k, res) } else { (k, res) };
    if k.re.abs() < AXIS_TOL {
        k.re = 0.0;
    }
    if k.im.abs() < AXIS_TOL {
        k.im = 0.0;
        res = upper_residual(params, k).norm();
    }
    if k.re < 0.0 || k.re > PI + AXIS_TOL || k.im > bx.im_extent() {
        return None;
    }
    let s = k.sin().norm();
    if s < 1e-9 || (s < 1e-6 && params.coupling_phase(k).norm() < 1e-10) {
        return None;
    }
    if !(res < RESIDUAL_TOL) {
        return None;
    }
    Some(SiegertPole::new(params, k, Branch::Upper, res))
}

fn dedup(mut found: Vec<SiegertPole>) -> Vec<SiegertPole> {
    found.sort_by(|a, b| a.residual.total_cmp(&b.residual).then(a.k.re.total_cmp(&b.k.re)).then(a.k.im.total_cmp(&b.k.im)));
    let mut kept: Vec<SiegertPole> = Vec::new();
    for p in found {
        if kept.iter().all(|q| (q.k - p.k).norm() >= DEDUP_RADIUS) {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    kept
}

fn solve_from_seeds(params: &SystemParams, bx: &SearchBox, seeds: &[C64]) -> Vec<SiegertPole> {
    let run = |s: &C64| canonical_root(params, bx, *s);
    #[cfg(feature = "parallel")]
    let found: Vec<SiegertPole> = seeds.par_iter().filter_map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let found: Vec<SiegertPole> = seeds.iter().filter_map(run).collect();
    dedup(found)
}

/// All Siegert poles reachable by damped Newton from a uniform seed grid.
pub fn solve_poles(params: &SystemParams, bx: &SearchBox) -> Result<Vec<SiegertPole>> {
    params.validate()?;
    bx.validate()?;
    Ok(solve_from_seeds(params, bx, &bx.seed_grid()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub gamma: f64,
    pub poles: Vec<SiegertPole>,
}

/// Poles for each γ of an ascending grid, warm-started from the previous γ.
pub fn trajectory_sweep(params: &SystemParams, gamma_grid: &[f64], bx: &SearchBox) -> Result<Vec<TrajectoryRow>> {
    params.validate()?;
    bx.validate()?;
    if gamma_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("gamma grid must be strictly ascending"));
    }
    let base = bx.seed_grid();
    let mut rows = Vec::with_capacity(gamma_grid.len());
    let mut warm: Vec<C64> = Vec::new();
    for &gamma in gamma_grid {
        let p = params.with_gamma(gamma);
        let mut seeds = warm.clone();
        seeds.extend_from_slice(&base);
        let poles = solve_from_seeds(&p, bx, &seeds);
        warm = poles.iter().map(|q| q.k).collect();
        rows.push(TrajectoryRow { gamma, poles });
    }
    Ok(rows)
}

/// Uniform grid of `count` values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
    }
}
