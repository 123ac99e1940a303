//! Time-independent reflection and transmission of a single photon.
//!
//! The closed forms hold for the resonant case `ω_a = ω_c`. The stationary
//! linear solve works for any detuning and is kept independent of them so it
//! can serve as an oracle.

use nalgebra::{Complex, DMatrix, DVector};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::{check_interior, SystemParams};
use crate::{Error, Result, C64};

/// Relative size below which the scattering denominator counts as zero.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Condition number above which the stationary system is declared singular.
pub const STATIONARY_MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringResult {
    pub k: f64,
    pub omega_k: f64,
    pub r: C64,
    pub t: C64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub flux_sum: f64,
    /// Set for points at a spectral singularity; amplitudes are NaN there.
    pub singular: bool,
}

impl ScatteringResult {
    fn new(params: &SystemParams, k: f64, r: C64, t: C64) -> Self {
        let reflectance = r.norm_sqr();
        let transmittance = t.norm_sqr();
        Self { k, omega_k: params.dispersion(k), r, t, reflectance, transmittance, flux_sum: reflectance + transmittance, singular: false }
    }

    fn singular(params: &SystemParams, k: f64) -> Self {
        let nan = C64::new(f64::NAN, f64::NAN);
        Self {
            k,
            omega_k: params.dispersion(k),
            r: nan,
            t: nan,
            reflectance: f64::NAN,
            transmittance: f64::NAN,
            flux_sum: f64::NAN,
            singular: true,
        }
    }
}

/// Denominator `2g² + 2g²e^{ikN} − 2Jγ sin k + 4iJ² sin k cos k` shared by `r` and `t`,
/// together with the sum of its terms' moduli (its natural scale).
pub fn scattering_denominator(params: &SystemParams, k: f64) -> (C64, f64) {
    let g2 = params.g * params.g;
    let j = params.hopping;
    let (s, c) = k.sin_cos();
    let phase = C64::new(0.0, k * params.n as f64).exp();
    let terms = [C64::new(2.0 * g2, 0.0), 2.0 * g2 * phase, C64::new(-2.0 * j * params.gamma * s, 0.0), C64::new(0.0, 4.0 * j * j * s * c)];
    let scale = terms.iter().map(|z| z.norm()).sum();
    (terms.iter().sum(), scale)
}

fn require_resonant(params: &SystemParams) -> Result<()> {
    if !params.is_resonant() {
        return Err(Error::invalid("closed-form amplitudes need omega_a = omega_c; use stationary_solve for detuned atoms"));
    }
    Ok(())
}

/// Shared body of `r` and `t`: returns `(r, t)` or a singular-scattering error.
fn closed_form(params: &SystemParams, k: f64) -> Result<(C64, C64)> {
    params.validate()?;
    require_resonant(params)?;
    check_interior(k)?;
    let kc = C64::new(k, 0.0);
    let phase = params.coupling_phase(kc);
    if params.g == 0.0 || params.is_decoupled(k) {
        return Ok((C64::new(0.0, 0.0), C64::new(1.0, 0.0)));
    }
    let (den, scale) = scattering_denominator(params, k);
    if den.norm() < SINGULAR_RTOL * scale {
        return Err(Error::SingularScattering { k, gamma: params.gamma });
    }
    let g2 = params.g * params.g;
    let conj_phase = params.coupling_phase(-kc);
    let r = -g2 * phase * phase / den;
    let t = 1.0 - g2 * phase * conj_phase / den;
    Ok((r, t))
}

/// Reflection amplitude `r(k)` of the resonant closed form.
pub fn reflection_amplitude(params: &SystemParams, k: f64) -> Result<C64> {
    closed_form(params, k).map(|(r, _)| r)
}

/// Transmission amplitude `t(k)` of the resonant closed form.
pub fn transmission_amplitude(params: &SystemParams, k: f64) -> Result<C64> {
    closed_form(params, k).map(|(_, t)| t)
}

pub fn scatter(params: &SystemParams, k: f64) -> Result<ScatteringResult> {
    let (r, t) = closed_form(params, k)?;
    Ok(ScatteringResult::new(params, k, r, t))
}

/// Generalized reflection coefficient of the atomic subsystem,
/// `𝓡 = −J sin k / [2J² sin k cos k + iγJ sin k − ig²(e^{ikN} + 1)]`.
pub fn generalized_reflection(params: &SystemParams, k: C64) -> Result<C64> {
    let j = params.hopping;
    let (s, c) = (k.sin(), k.cos());
    let g2 = params.g * params.g;
    let terms = [2.0 * j * j * s * c, C64::i() * params.gamma * j * s, -C64::i() * g2 * params.coupling_phase(k)];
    // the numerator J|sin k| sets the scale too, so 𝓡 → ∞ is caught
    let scale: f64 = terms.iter().map(|z| z.norm()).sum::<f64>() + j * j * s.norm();
    let den: C64 = terms.iter().sum();
    if den.norm() <= SINGULAR_RTOL * scale || scale == 0.0 {
        return Err(Error::SingularScattering { k: k.re, gamma: params.gamma });
    }
    Ok(-j * s / den)
}

/// Evaluates the closed forms on a grid of wave numbers, in grid order.
///
/// Singular points are flagged in the result instead of aborting the sweep.
pub fn spectrum_sweep(params: &SystemParams, k_grid: &[f64]) -> Result<Vec<ScatteringResult>> {
    if k_grid.is_empty() {
        return Err(Error::invalid("empty k grid"));
    }
    params.validate()?;
    require_resonant(params)?;
    for &k in k_grid {
        check_interior(k)?;
    }
    let eval = |&k: &f64| match scatter(params, k) {
        Ok(res) => Ok(res),
        Err(Error::SingularScattering { .. }) => Ok(ScatteringResult::singular(params, k)),
        Err(e) => Err(e),
    };
    #[cfg(feature = "parallel")]
    let out = k_grid.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let out = k_grid.iter().map(eval).collect();
    out
}

/// Coefficients of the piecewise plane-wave ansatz for a photon incident
/// from the left: `V e^{ikj} + W e^{−ikj}` for `j < 0`, `X e^{ikj} + Y e^{−ikj}`
/// between the coupling sites, `Z e^{ikj}` for `j ≥ N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryAmplitudes {
    pub k: f64,
    pub v: C64,
    pub w: C64,
    pub x: C64,
    pub y: C64,
    pub z: C64,
    pub psi_a: C64,
}

impl StationaryAmplitudes {
    pub fn reflection(&self) -> C64 {
        self.w / self.v
    }

    pub fn transmission(&self) -> C64 {
        self.z / self.v
    }

    /// Photon amplitude `Ψ(j)` at site `j`.
    pub fn site(&self, n: usize, j: i64) -> C64 {
        let e = |m: i64| C64::new(0.0, self.k * m as f64).exp();
        if j < 0 {
            self.v * e(j) + self.w * e(-j)
        } else if j < n as i64 {
            self.x * e(j) + self.y * e(-j)
        } else {
            self.z * e(j)
        }
    }

    /// Residuals of the two continuity conditions at `j = 0` and `j = N`.
    pub fn continuity_residuals(&self, n: usize) -> (f64, f64) {
        let en = C64::new(0.0, self.k * n as f64).exp();
        let at0 = (self.v + self.w - self.x - self.y).norm();
        let at_n = (self.x * en + self.y / en - self.z * en).norm();
        (at0, at_n)
    }
}

/// Solves the stationary equations at the coupling sites as a dense linear
/// system with `V = 1`.
///
/// Unknowns are `(W, X, Y, Z, Ψ(a))`; the atomic amplitude is kept as an
/// unknown rather than divided out so the system stays regular where
/// `ω_k = ω_a + iγ`. Without coupling the atom row is dropped.
pub fn stationary_solve(params: &SystemParams, k: f64) -> Result<StationaryAmplitudes> {
    params.validate()?;
    check_interior(k)?;
    let n = params.n as i64;
    let j = params.hopping;
    let g = params.g;
    let e = |m: i64| Complex::new(0.0, k * m as f64).exp();
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let detune = params.dispersion(k) - params.omega_c;
    let delta = Complex::new(params.dispersion(k) - params.omega_a, -params.gamma);
    let with_atom = g != 0.0;
    let dim = if with_atom { 5 } else { 4 };

    let mut a = DMatrix::from_element(dim, dim, zero);
    let mut rhs = DVector::from_element(dim, zero);
    // site 0: (ω_k − ω_c)Ψ(0) + J[Ψ(−1) + Ψ(1)] − gΨ(a) = 0, Ψ(0) = X + Y
    a[(0, 0)] = j * e(1);
    a[(0, 1)] = detune + j * e(1);
    a[(0, 2)] = detune + j * e(-1);
    rhs[0] = -j * e(-1);
    // site N
    a[(1, 1)] = detune * e(n) + j * e(n - 1);
    a[(1, 2)] = detune * e(-n) + j * e(-(n - 1));
    a[(1, 3)] = j * e(n + 1);
    // continuity: V + W = X + Y and X e^{ikN} + Y e^{−ikN} = Z e^{ikN}
    a[(2, 0)] = one;
    a[(2, 1)] = -one;
    a[(2, 2)] = -one;
    rhs[2] = -one;
    a[(3, 1)] = e(n);
    a[(3, 2)] = e(-n);
    a[(3, 3)] = -e(n);
    if with_atom {
        a[(0, 4)] = Complex::new(-g, 0.0);
        a[(1, 4)] = Complex::new(-g, 0.0);
        // (ω_k − ω_a − iγ)Ψ(a) − g[Ψ(0) + Ψ(N)] = 0
        a[(4, 1)] = -g * (one + e(n));
        a[(4, 2)] = -g * (one + e(-n));
        a[(4, 4)] = delta;
    }

    let sv = a.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 0.0) || smax / smin > STATIONARY_MAX_CONDITION {
        return Err(Error::SingularScattering { k, gamma: params.gamma });
    }
    let sol = a.lu().solve(&rhs).ok_or(Error::SingularScattering { k, gamma: params.gamma })?;
    Ok(StationaryAmplitudes { k, v: one, w: sol[0], x: sol[1], y: sol[2], z: sol[3], psi_a: if with_atom { sol[4] } else { zero } })
}
