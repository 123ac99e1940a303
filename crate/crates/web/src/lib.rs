//! Browser bindings: a scattering spectrum, the pole spectrum with its gain
//! trajectory, and a small packet simulation that can be stepped in time.
//!
//! Tables cross the boundary as flat `Float64Array`s in row-major order.

use gawq::dynamics::{evolve, init_gaussian, reflect_transmit, EvolveOptions, GaussianPacketSpec, Lattice, LatticeState};
use gawq::scattering::spectrum_sweep;
use gawq::spectral::{find_singularities, linspace, solve_poles, trajectory_sweep, SearchBox, SiegertClass};
use gawq::SystemParams;
use wasm_bindgen::prelude::*;

/// Columns per row of [`spectrum`].
pub const SPECTRUM_COLUMNS: usize = 4;
/// Columns per row of [`poles`].
pub const POLE_COLUMNS: usize = 5;
/// Columns per row of [`trajectory`].
pub const TRAJECTORY_COLUMNS: usize = 6;

fn params(n: u32, g: f64, gamma: f64) -> Result<SystemParams, String> {
    let p = SystemParams::resonant(n as usize, g, gamma);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn class_code(c: SiegertClass) -> f64 {
    match c {
        SiegertClass::Bound => 0.0,
        SiegertClass::Virtual => 1.0,
        SiegertClass::Resonant => 2.0,
        SiegertClass::Antiresonant => 3.0,
        SiegertClass::Growing => 4.0,
        SiegertClass::Decaying => 5.0,
        SiegertClass::InContinuum => 6.0,
    }
}

/// Rows `[ω_k, R, T, R+T]` over an open grid of `count` wave numbers in `(0, π)`.
/// Singular points carry `NaN` in the last three columns.
pub fn spectrum_rows(n: u32, g: f64, gamma: f64, count: usize) -> Result<Vec<f64>, String> {
    let p = params(n, g, gamma)?;
    let grid: Vec<f64> = (1..=count).map(|i| std::f64::consts::PI * i as f64 / (count + 1) as f64).collect();
    let rows = spectrum_sweep(&p, &grid).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.omega_k, r.reflectance, r.transmittance, r.flux_sum]).collect())
}

/// Rows `[Re k, Im k, Re E, Im E, class]`; class codes: 0 bound, 1 virtual,
/// 2 resonant, 3 antiresonant, 4 growing, 5 decaying, 6 in-continuum.
pub fn pole_rows(n: u32, g: f64, gamma: f64) -> Result<Vec<f64>, String> {
    let p = params(n, g, gamma)?;
    let found = solve_poles(&p, &SearchBox { seeds: 40, ..SearchBox::default() }).map_err(|e| e.to_string())?;
    Ok(found.iter().flat_map(|q| [q.k.re, q.k.im, q.energy.re, q.energy.im, class_code(q.class)]).collect())
}

/// Rows `[γ, Re k, Im k, Re E, Im E, class]` for `count` gains in `[gamma_min, gamma_max]`.
pub fn trajectory_rows(n: u32, g: f64, gamma_min: f64, gamma_max: f64, count: usize) -> Result<Vec<f64>, String> {
    let p = params(n, g, 0.0)?;
    let rows = trajectory_sweep(&p, &linspace(gamma_min, gamma_max, count), &SearchBox { seeds: 40, ..SearchBox::default() })
        .map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .flat_map(|r| r.poles.iter().map(move |q| [r.gamma, q.k.re, q.k.im, q.energy.re, q.energy.im, class_code(q.class)]))
        .flatten()
        .collect())
}

/// Spectral singularities as rows `[k, γ, ω]`.
pub fn singularity_rows(n: u32, g: f64) -> Result<Vec<f64>, String> {
    let p = params(n, g, 0.0)?;
    let pts = find_singularities(&p).map_err(|e| e.to_string())?;
    Ok(pts.iter().flat_map(|s| [s.k, s.gamma, s.omega]).collect())
}

#[wasm_bindgen]
pub fn spectrum(n: u32, g: f64, gamma: f64, count: usize) -> Result<Vec<f64>, JsError> {
    spectrum_rows(n, g, gamma, count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn poles(n: u32, g: f64, gamma: f64) -> Result<Vec<f64>, JsError> {
    pole_rows(n, g, gamma).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn trajectory(n: u32, g: f64, gamma_min: f64, gamma_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
    trajectory_rows(n, g, gamma_min, gamma_max, count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn singularities(n: u32, g: f64) -> Result<Vec<f64>, JsError> {
    singularity_rows(n, g).map_err(|e| JsError::new(&e))
}

/// A Gaussian packet on a short lattice, advanced on demand.
#[wasm_bindgen]
pub struct PacketSim {
    params: SystemParams,
    state: LatticeState,
}

impl PacketSim {
    pub fn create(n: u32, g: f64, gamma: f64, k_c: f64, alpha: f64, sites: usize) -> Result<PacketSim, String> {
        let p = params(n, g, gamma)?;
        let lattice = Lattice::centered(sites, n as usize).map_err(|e| e.to_string())?;
        // Start the packet a quarter of the lattice left of the atom.
        let j_c = lattice.j_min / 2;
        let spec = GaussianPacketSpec { alpha, j_c, k_c };
        let state = init_gaussian(&p, &spec, lattice).map_err(|e| e.to_string())?;
        Ok(PacketSim { params: p, state })
    }

    pub fn step(&mut self, dt: f64) -> Result<(), String> {
        let opts = EvolveOptions { sample_dt: dt, ..EvolveOptions::new(self.state.time + dt) };
        let run = evolve(&self.params, &self.state, &opts).map_err(|e| e.to_string())?;
        self.state = run.final_state;
        Ok(())
    }
}

#[wasm_bindgen]
impl PacketSim {
    #[wasm_bindgen(constructor)]
    pub fn new(n: u32, g: f64, gamma: f64, k_c: f64, alpha: f64, sites: usize) -> Result<PacketSim, JsError> {
        Self::create(n, g, gamma, k_c, alpha, sites).map_err(|e| JsError::new(&e))
    }

    /// Advances the clock by `dt`.
    pub fn advance(&mut self, dt: f64) -> Result<(), JsError> {
        self.step(dt).map_err(|e| JsError::new(&e))
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn j_min(&self) -> i32 {
        self.state.lattice.j_min as i32
    }

    /// `|φ(j)|²` for every site, left to right.
    pub fn density(&self) -> Vec<f64> {
        self.state.densities()
    }

    /// `[t, R_L, T_L, |φ(a)|², total norm]`.
    pub fn observables(&self) -> Vec<f64> {
        let (r, t) = reflect_transmit(&self.state, self.params.n);
        vec![self.state.time, r, t, self.state.atom_amp.norm_sqr(), self.state.total_norm()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_rows_are_unitary_without_gain() {
        let rows = spectrum_rows(3, 0.812, 0.0, 99).unwrap();
        assert_eq!(rows.len(), 99 * SPECTRUM_COLUMNS);
        for r in rows.chunks(SPECTRUM_COLUMNS) {
            assert!((r[3] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_gain_has_two_poles() {
        let rows = pole_rows(3, 0.812, 0.215_252_076_773_528_5).unwrap();
        let mut classes: Vec<f64> = rows.chunks(POLE_COLUMNS).map(|r| r[4]).collect();
        classes.sort_by(f64::total_cmp);
        assert_eq!(classes, [4.0, 6.0]);
    }

    #[test]
    fn trajectory_rows_carry_the_gain() {
        let rows = trajectory_rows(3, 0.812, 0.0, 0.3, 4).unwrap();
        assert!(rows.chunks(TRAJECTORY_COLUMNS).any(|r| r[0] == 0.3 && r[5] == 4.0));
    }

    #[test]
    fn singularity_rows_find_the_critical_gain() {
        let rows = singularity_rows(3, 0.812).unwrap();
        assert!(rows.chunks(3).any(|r| (r[1] - 0.21525).abs() < 1e-4));
    }

    #[test]
    fn packet_sim_conserves_norm_without_gain() {
        let mut sim = PacketSim::create(3, 0.812, 0.0, 1.32, 0.05, 1200).unwrap();
        let t0 = sim.time();
        for _ in 0..4 {
            sim.step(25.0).unwrap();
        }
        let obs = sim.observables();
        assert!((obs[0] - t0 - 100.0).abs() < 1e-9);
        assert!((obs[4] - 1.0).abs() < 1e-6);
        assert_eq!(sim.density().len(), 1200);
    }
}
