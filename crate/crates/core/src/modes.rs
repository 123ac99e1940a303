//! Bound-state profiles, normalization and expansion coefficients of the
//! Siegert poles, and the long-time density they predict.
//!
//! A pole with wave number `q` (`Im q ≥ 0`) and energy `E = ω_c − 2J cos q`
//! has the right eigenvector `⟨j|Ψ⟩ = 𝓝 g [G₀(j,0) + G₀(j,N)]`, `⟨a|Ψ⟩ = 𝓝`,
//! with the outgoing lattice resolvent `G₀(j,m) = −i e^{iq|j−m|} / (2J sin q)`.
//! The Hamiltonian is complex symmetric, so the dual vector is the same
//! vector and every projection below is bilinear (no complex conjugation).

use std::f64::consts::PI;

use crate::dynamics::{GaussianPacketSpec, LatticeState};
use crate::model::SystemParams;
use crate::quad::{integrate, plemelj, QuadOptions, Regularization, SimplePole};
use crate::spectral::{SiegertPole, SIN_GUARD};
use crate::{Error, Result, C64};

/// Packet momentum window, in units of α around `k_c`, used by overlap integrals.
const PACKET_WINDOW: f64 = 12.0;

fn quad_opts() -> QuadOptions {
    QuadOptions::with_abs_tol(1e-10)
}

fn check_pole(pole: &SiegertPole) -> Result<f64> {
    let s = pole.k.sin().norm();
    if s < SIN_GUARD {
        return Err(Error::FormulaPole { k: pole.k, sin_abs: s });
    }
    Ok(s)
}

fn is_real_in_band(params: &SystemParams, e: C64) -> bool {
    let (lo, hi) = params.band();
    e.im == 0.0 && e.re > lo && e.re < hi
}

/// Real wave numbers in `[a, b]` where `ω_k = E` for real in-band `E`.
fn band_crossings(params: &SystemParams, e: f64, a: f64, b: f64) -> Vec<SimplePole> {
    let Ok(k0) = params.wavenumber_from_energy(e) else { return Vec::new() };
    [k0, -k0]
        .into_iter()
        .filter(|&k| k > a && k < b)
        // d(E − ω_k)/dk = −2J sin k
        .map(|k| SimplePole { at: k, slope: -params.group_velocity(k) })
        .collect()
}

/// `E − ω_k` for real in-band `E = ω(k₀)`, in product form so that it only
/// vanishes at `k = ±k₀` in floating point.
fn band_gap(params: &SystemParams, k0: f64, k: f64) -> f64 {
    -4.0 * params.hopping * (0.5 * (k + k0)).sin() * (0.5 * (k - k0)).sin()
}

/// Breakpoints where `|E − ω_k|` is smallest, for peaked integrands.
fn peak_points(params: &SystemParams, e: C64) -> Vec<f64> {
    let (lo, hi) = params.band();
    let re = e.re.clamp(lo, hi);
    match params.wavenumber_from_energy(re) {
        Ok(k) => vec![-k, 0.0, k],
        Err(_) => vec![0.0],
    }
}

/// Which form of the normalization integral to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormConvention {
    /// Bilinear norm, `∫ |1+e^{ikN}|² / (E − ω_k)² dk`; the one consistent
    /// with the biorthogonal projection.
    #[default]
    Biorthogonal,
    /// `∫ |1+e^{ikN}|² / |E − ω_k|² dk`, as written in the literature; equal to
    /// the bilinear form for real `E`.
    Modulus,
}

/// Normalization factor `𝓝 = [1 + (g²/2π) ∫ ... dk]^{−1/2}` (principal root).
pub fn normalization_factor(params: &SystemParams, pole: &SiegertPole, convention: NormConvention) -> Result<C64> {
    check_pole(pole)?;
    if params.g == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let e = pole.energy;
    if is_real_in_band(params, e) {
        return Err(Error::NonNormalizable { energy: e });
    }
    let integrand = |k: f64| {
        let w = params.coupling_phase(C64::new(k, 0.0)).norm_sqr();
        let d = e - params.dispersion(k);
        match convention {
            NormConvention::Biorthogonal => w / (d * d),
            NormConvention::Modulus => C64::new(w / d.norm_sqr(), 0.0),
        }
    };
    let integral = integrate(integrand, -PI, PI, &peak_points(params, e), quad_opts())?.value;
    let inv = 1.0 + params.g * params.g / (2.0 * PI) * integral;
    Ok(inv.inv().sqrt())
}

/// Site-independent part of the profile, `−i g / (2J sin q)`.
fn profile_prefactor(params: &SystemParams, q: C64) -> C64 {
    -C64::i() * params.g / (2.0 * params.hopping * q.sin())
}

/// Closed-form amplitude `⟨j|Ψ⟩` for a given normalization, valid at every site.
pub fn closed_form_amplitude(params: &SystemParams, pole: &SiegertPole, norm: C64, j: i64) -> C64 {
    let q = pole.k;
    let n = params.n as i64;
    let e = |m: i64| (C64::i() * q * m.abs() as f64).exp();
    norm * profile_prefactor(params, q) * (e(j) + e(j - n))
}

/// `⟨j|Ψ⟩` from its momentum-space definition
/// `(𝓝 g / 2π) ∫ e^{ikj} (1 + e^{−ikN}) / (E − ω_k + iε) dk`.
pub fn profile_by_quadrature(params: &SystemParams, pole: &SiegertPole, norm: C64, j: i64) -> Result<C64> {
    check_pole(pole)?;
    let n = params.n as f64;
    let num = |k: f64| C64::new(0.0, k * j as f64).exp() * (1.0 + C64::new(0.0, -k * n).exp());
    let e = pole.energy;
    let integral = if is_real_in_band(params, e) {
        let poles = band_crossings(params, e.re, -PI, PI);
        let k0 = params.wavenumber_from_energy(e.re)?;
        plemelj(num, |k| band_gap(params, k0, k), -PI, PI, &poles, &[0.0], Regularization::PlusI, quad_opts())?.value
    } else {
        integrate(|k| num(k) / (e - params.dispersion(k)), -PI, PI, &peak_points(params, e), quad_opts())?.value
    };
    Ok(norm * params.g / (2.0 * PI) * integral)
}

/// Real-space bound state: closed form outside the coupling region and a
/// quadrature table for the sites `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateProfile {
    pub pole: SiegertPole,
    /// `None` for the in-continuum state, whose norm diverges; amplitudes
    /// are then reported with `𝓝 = 1`.
    pub norm_factor: Option<C64>,
    pub interior: Vec<C64>,
    params: SystemParams,
}

impl BoundStateProfile {
    pub fn new(params: &SystemParams, pole: &SiegertPole) -> Result<Self> {
        check_pole(pole)?;
        let norm_factor = match normalization_factor(params, pole, NormConvention::Biorthogonal) {
            Ok(v) => Some(v),
            Err(Error::NonNormalizable { .. }) => None,
            Err(e) => return Err(e),
        };
        let nf = norm_factor.unwrap_or(C64::new(1.0, 0.0));
        let interior = (0..=params.n as i64).map(|j| profile_by_quadrature(params, pole, nf, j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { pole: *pole, norm_factor, interior, params: *params })
    }

    pub fn norm_or_one(&self) -> C64 {
        self.norm_factor.unwrap_or(C64::new(1.0, 0.0))
    }

    /// `⟨j|Ψ⟩`; left of the atom the prefactor carries `1 + e^{iqN}`,
    /// right of it `1 + e^{−iqN}`.
    pub fn amplitude(&self, j: i64) -> C64 {
        if j >= 0 && j <= self.params.n as i64 {
            self.interior[j as usize]
        } else {
            closed_form_amplitude(&self.params, &self.pole, self.norm_or_one(), j)
        }
    }

    /// Atomic component `⟨a|Ψ⟩ = 𝓝`.
    pub fn atom_amplitude(&self) -> C64 {
        self.norm_or_one()
    }
}

/// Amplitude-level eigenvector bound by a pole: `−i 𝓝 g (1 + e^{−iqN}) / (2J sin q)`.
pub fn asymptotic_amplitude(params: &SystemParams, pole: &SiegertPole, norm: C64, c: C64) -> C64 {
    let q = pole.k;
    let phase = 1.0 + (-C64::i() * q * params.n as f64).exp();
    -C64::i() * norm * c * params.g * phase / (2.0 * params.hopping * q.sin())
}

/// Expansion coefficient of a packet on one pole, with the bound-state
/// amplitude it feeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCoefficient {
    pub pole: SiegertPole,
    pub norm: C64,
    pub c: C64,
    /// `A = −i 𝓝 C g (1 + e^{−iqN}) / (2J sin q)`.
    pub a: C64,
    /// Time at which `c` is defined.
    pub t_ref: f64,
}

impl DecompositionCoefficient {
    pub fn new(params: &SystemParams, pole: &SiegertPole, norm: C64, c: C64, t_ref: f64) -> Self {
        Self { pole: *pole, norm, c, a: asymptotic_amplitude(params, pole, norm, c), t_ref }
    }

    /// From a fitted asymptotic amplitude, with the `𝓝C` product absorbed.
    pub fn from_amplitude(params: &SystemParams, pole: &SiegertPole, a: C64, t_ref: f64) -> Self {
        let unit = asymptotic_amplitude(params, pole, C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        Self { pole: *pole, norm: C64::new(1.0, 0.0), c: a / unit, a, t_ref }
    }

    /// `Ψ_n(j, t) = A e^{−iE(t − t_ref)} (e^{iq|j|} + e^{iq|j−N|}) / (1 + e^{−iqN})`.
    pub fn amplitude(&self, n: usize, j: i64, t: f64) -> C64 {
        let q = self.pole.k;
        let e = |m: i64| (C64::i() * q * m.abs() as f64).exp();
        let shape = (e(j) + e(j - n as i64)) / (1.0 + (-C64::i() * q * n as f64).exp());
        self.a * shape * (-C64::i() * self.pole.energy * (t - self.t_ref)).exp()
    }
}

/// Overlap `C = (g𝓝/√2π) ∫ β(k)(1 + e^{ikN}) / (E − ω_k ± iε) dk` of a packet with a pole.
///
/// `Regularization::PlusI` matches the outgoing eigenvector and hence the
/// bilinear lattice projection; `MinusI` is the opposite prescription. The two
/// differ only for real in-band energies.
pub fn overlap_coefficient(
    params: &SystemParams,
    pole: &SiegertPole,
    norm: C64,
    packet: &GaussianPacketSpec,
    side: Regularization,
) -> Result<C64> {
    check_pole(pole)?;
    packet.validate()?;
    let n = params.n as f64;
    let a = (packet.k_c - PACKET_WINDOW * packet.alpha).max(-PI);
    let b = (packet.k_c + PACKET_WINDOW * packet.alpha).min(PI);
    let num = |k: f64| packet.momentum_amplitude(k) * (1.0 + C64::new(0.0, k * n).exp());
    let e = pole.energy;
    let integral = if is_real_in_band(params, e) {
        let poles = band_crossings(params, e.re, a, b);
        let k0 = params.wavenumber_from_energy(e.re)?;
        plemelj(num, |k| band_gap(params, k0, k), a, b, &poles, &[packet.k_c], side, quad_opts())?.value
    } else {
        let mut cuts = peak_points(params, e);
        cuts.push(packet.k_c);
        integrate(|k| num(k) / (e - params.dispersion(k)), a, b, &cuts, quad_opts())?.value
    };
    Ok(params.g * norm / (2.0 * PI).sqrt() * integral)
}

/// Overlap at a finite `ε`, the oracle for the `ε → 0` limit.
pub fn overlap_at_epsilon(params: &SystemParams, pole: &SiegertPole, norm: C64, packet: &GaussianPacketSpec, epsilon: f64) -> Result<C64> {
    let n = params.n as f64;
    let a = (packet.k_c - PACKET_WINDOW * packet.alpha).max(-PI);
    let b = (packet.k_c + PACKET_WINDOW * packet.alpha).min(PI);
    let e = pole.energy + C64::new(0.0, epsilon);
    let num = |k: f64| packet.momentum_amplitude(k) * (1.0 + C64::new(0.0, k * n).exp());
    let mut cuts = peak_points(params, pole.energy);
    cuts.push(packet.k_c);
    let opts = QuadOptions { max_intervals: 20_000, ..quad_opts() };
    Ok(params.g * norm / (2.0 * PI).sqrt() * integrate(|k| num(k) / (e - params.dispersion(k)), a, b, &cuts, opts)?.value)
}

/// Bilinear projection `Σ_j ⟨j|Ψ⟩ φ(j) + ⟨a|Ψ⟩ φ(a)` of a lattice state on a pole.
pub fn lattice_overlap(profile: &BoundStateProfile, state: &LatticeState) -> C64 {
    let sites: C64 = state.lattice.sites_iter().zip(&state.site_amps).map(|(j, a)| profile.amplitude(j) * a).sum();
    sites + profile.atom_amplitude() * state.atom_amp
}

/// Least-squares `A` such that `A·shape(j)` best matches `values` at `js`,
/// where `shape` is the pole's unit-amplitude profile at time `t`.
pub fn fit_asymptotic_amplitude(
    params: &SystemParams,
    pole: &SiegertPole,
    js: &[i64],
    values: &[C64],
    t: f64,
    t_ref: f64,
) -> Result<DecompositionCoefficient> {
    if js.len() != values.len() || js.is_empty() {
        return Err(Error::invalid("amplitude fit needs matching, non-empty site and value lists"));
    }
    let unit = DecompositionCoefficient { pole: *pole, norm: C64::new(1.0, 0.0), c: C64::new(1.0, 0.0), a: C64::new(1.0, 0.0), t_ref };
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for (&j, v) in js.iter().zip(values) {
        let s = unit.amplitude(params.n, j, t);
        num += s.conj() * v;
        den += s.norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::Numerical("amplitude fit on a vanishing profile".into()));
    }
    Ok(DecompositionCoefficient::from_amplitude(params, pole, num / den, t_ref))
}

/// Decomposes a simulated state on the given poles at `state.time`.
///
/// Normalizable poles get `C` from the bilinear lattice projection. The
/// remaining (in-continuum) poles share the residual, and their amplitudes
/// are fitted by least squares over `fit_js`, one pole at a time.
pub fn decompose_state(
    params: &SystemParams,
    poles: &[SiegertPole],
    state: &LatticeState,
    fit_js: &[i64],
) -> Result<Vec<DecompositionCoefficient>> {
    let t = state.time;
    let mut coeffs = Vec::with_capacity(poles.len());
    let mut unresolved = Vec::new();
    for pole in poles {
        let profile = BoundStateProfile::new(params, pole)?;
        match profile.norm_factor {
            Some(norm) => coeffs.push(DecompositionCoefficient::new(params, pole, norm, lattice_overlap(&profile, state), t)),
            None => unresolved.push(*pole),
        }
    }
    for pole in unresolved {
        let residual: Vec<C64> = fit_js.iter().map(|&j| state.amp(j) - predict_longtime_amplitude(&coeffs, params.n, j, t)).collect();
        coeffs.push(fit_asymptotic_amplitude(params, &pole, fit_js, &residual, t, t)?);
    }
    Ok(coeffs)
}

/// Bound-state-only amplitude `Σ_n Ψ_n(j, t)`.
pub fn predict_longtime_amplitude(coeffs: &[DecompositionCoefficient], n: usize, j: i64, t: f64) -> C64 {
    coeffs.iter().map(|c| c.amplitude(n, j, t)).sum()
}

/// Bound-state-only density `|Σ_n Ψ_n(j, t)|²`.
pub fn predict_longtime_density(coeffs: &[DecompositionCoefficient], n: usize, j: i64, t: f64) -> f64 {
    predict_longtime_amplitude(coeffs, n, j, t).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{init_gaussian, Lattice};
    use crate::spectral::{solve_poles, SearchBox, SiegertClass};

    const G: f64 = 0.812;
    const GAMMA_C: f64 = 0.215_252_076_773_528_53;

    fn poles(gamma: f64) -> (SystemParams, Vec<SiegertPole>) {
        let p = SystemParams::resonant(3, G, gamma);
        let v = solve_poles(&p, &SearchBox::default()).unwrap();
        (p, v)
    }

    fn find(v: &[SiegertPole], class: SiegertClass) -> SiegertPole {
        *v.iter().find(|q| q.class == class).unwrap()
    }

    fn trapezoid_norm(p: &SystemParams, e: C64, m: usize, modulus: bool) -> C64 {
        let h = 2.0 * PI / m as f64;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..m {
            let k = -PI + h * i as f64;
            let w = p.coupling_phase(C64::new(k, 0.0)).norm_sqr();
            let d = e - p.dispersion(k);
            s += if modulus { C64::new(w / d.norm_sqr(), 0.0) } else { w / (d * d) };
        }
        (1.0 + p.g * p.g / (2.0 * PI) * s * h).inv().sqrt()
    }

    #[test]
    fn uncoupled_norm_is_one() {
        let p = SystemParams::resonant(3, 0.0, 0.0);
        let pole = g_free();
        assert_eq!(normalization_factor(&p, &pole, NormConvention::Biorthogonal).unwrap(), C64::new(1.0, 0.0));
        for j in [-5, 0, 2, 9] {
            assert_eq!(closed_form_amplitude(&p, &pole, C64::new(1.0, 0.0), j), C64::new(0.0, 0.0));
        }
    }

    fn g_free() -> SiegertPole {
        let p = SystemParams::resonant(3, 0.0, 0.0);
        let k = C64::new(0.0, 0.5);
        SiegertPole {
            k,
            energy: p.dispersion_complex(k),
            branch: crate::spectral::Branch::Upper,
            class: SiegertClass::Bound,
            residual: 0.0,
        }
    }

    #[test]
    fn bound_norm_matches_trapezoid() {
        let (p, v) = poles(0.0);
        let b = find(&v, SiegertClass::Bound);
        let n = normalization_factor(&p, &b, NormConvention::Biorthogonal).unwrap();
        assert!(n.im.abs() < 1e-12 && n.re > 0.0 && n.re < 1.0);
        assert!((n - trapezoid_norm(&p, b.energy, 1_000_000, false)).norm() < 1e-8);
        let m = normalization_factor(&p, &b, NormConvention::Modulus).unwrap();
        assert!((m - n).norm() < 1e-10);
    }

    #[test]
    fn growing_norm_matches_trapezoid_and_lattice_sum() {
        let (p, v) = poles(GAMMA_C);
        let gp = find(&v, SiegertClass::Growing);
        let n = normalization_factor(&p, &gp, NormConvention::Biorthogonal).unwrap();
        assert!((n - trapezoid_norm(&p, gp.energy, 1_000_000, false)).norm() < 1e-8);
        // bilinear lattice norm Σ ψ_j² + 𝓝² = 1
        let sum: C64 = (-400..=403).map(|j| closed_form_amplitude(&p, &gp, n, j).powi(2)).sum::<C64>() + n * n;
        assert!((sum - 1.0).norm() < 1e-10, "{sum}");
        let m = normalization_factor(&p, &gp, NormConvention::Modulus).unwrap();
        assert!((m - n).norm() > 1e-3);
    }

    #[test]
    fn bic_is_not_normalizable() {
        let (p, v) = poles(GAMMA_C);
        let bic = find(&v, SiegertClass::InContinuum);
        assert!(matches!(normalization_factor(&p, &bic, NormConvention::Biorthogonal), Err(Error::NonNormalizable { .. })));
        let prof = BoundStateProfile::new(&p, &bic).unwrap();
        assert!(prof.norm_factor.is_none());
        let a0 = prof.amplitude(-7).norm();
        for j in [-300, -20, 20, 500] {
            assert!((prof.amplitude(j).norm() - a0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_profile_matches_closed_form() {
        for gamma in [0.0, GAMMA_C] {
            let (p, v) = poles(gamma);
            for pole in &v {
                let prof = BoundStateProfile::new(&p, pole).unwrap();
                let nf = prof.norm_or_one();
                for j in [-1i64, 0, 1, 2, 3, 4] {
                    let q = profile_by_quadrature(&p, pole, nf, j).unwrap();
                    let c = closed_form_amplitude(&p, pole, nf, j);
                    assert!((q - c).norm() < 1e-9, "{:?} j={j}: {q} vs {c}", pole.class);
                    assert!((prof.amplitude(j) - c).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn profile_is_an_eigenvector() {
        let (p, v) = poles(GAMMA_C);
        for pole in &v {
            let prof = BoundStateProfile::new(&p, pole).unwrap();
            let e = pole.energy;
            let psi = |j| prof.amplitude(j);
            for j in -5i64..=8 {
                let couple = if j == 0 || j == 3 { p.g * prof.atom_amplitude() } else { C64::new(0.0, 0.0) };
                let h = p.omega_c * psi(j) - p.hopping * (psi(j + 1) + psi(j - 1)) + couple;
                assert!((h - e * psi(j)).norm() < 1e-9, "j={j}");
            }
            let ha = C64::new(p.omega_a, p.gamma) * prof.atom_amplitude() + p.g * (psi(0) + psi(3));
            assert!((ha - e * prof.atom_amplitude()).norm() < 1e-9);
        }
    }

    #[test]
    fn exterior_decay_rate() {
        let (p, v) = poles(GAMMA_C);
        let gp = find(&v, SiegertClass::Growing);
        let prof = BoundStateProfile::new(&p, &gp).unwrap();
        let ratio = prof.amplitude(-11).norm() / prof.amplitude(-10).norm();
        assert!((ratio - (-gp.k.im).exp()).abs() < 1e-12);
        assert!((ratio - (-0.388f64).exp()).abs() < 2e-3);
        // left prefactor carries 1 + e^{iqN}, right one 1 + e^{−iqN}
        let left = closed_form_amplitude(&p, &gp, C64::new(1.0, 0.0), -10);
        let expect = profile_prefactor(&p, gp.k) * (1.0 + (C64::i() * gp.k * 3.0).exp()) * (C64::i() * gp.k * 10.0).exp();
        assert!((left - expect).norm() < 1e-12);
    }

    #[test]
    fn amplitude_identity() {
        let (p, v) = poles(GAMMA_C);
        let gp = find(&v, SiegertClass::Growing);
        let n = normalization_factor(&p, &gp, NormConvention::Biorthogonal).unwrap();
        let c = C64::new(0.3, -0.7);
        let d = DecompositionCoefficient::new(&p, &gp, n, c, 0.0);
        let q = gp.k;
        let direct = -C64::i() * n * c * G * (1.0 + (-C64::i() * q * 3.0).exp()) / (2.0 * q.sin());
        assert!((d.a - direct).norm() < 1e-12);
        // right of the atom the time-zero amplitude equals C·⟨j|Ψ⟩
        for j in [3i64, 9, 40, -4] {
            assert!((d.amplitude(3, j, 0.0) - c * closed_form_amplitude(&p, &gp, n, j)).norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_overlap_equals_lattice_inner_product() {
        let (p, v) = poles(0.0);
        let b = find(&v, SiegertClass::Bound);
        let n = normalization_factor(&p, &b, NormConvention::Biorthogonal).unwrap();
        let prof = BoundStateProfile::new(&p, &b).unwrap();
        let spec = GaussianPacketSpec { alpha: 0.2, j_c: -30, k_c: 0.4 };
        let state = init_gaussian(&p, &spec, Lattice::centered(10_000, 3).unwrap()).unwrap();
        let lat = lattice_overlap(&prof, &state);
        let k = overlap_coefficient(&p, &b, n, &spec, Regularization::PlusI).unwrap();
        assert!((lat - k).norm() < 1e-6, "{lat} vs {k}");
    }

    #[test]
    fn bic_overlap_plemelj_matches_lattice_and_epsilon_limit() {
        let (p, v) = poles(GAMMA_C);
        let bic = find(&v, SiegertClass::InContinuum);
        let prof = BoundStateProfile::new(&p, &bic).unwrap();
        let one = C64::new(1.0, 0.0);
        let spec = GaussianPacketSpec { alpha: 0.02, j_c: -500, k_c: 1.32 };
        let state = init_gaussian(&p, &spec, Lattice::centered(10_000, 3).unwrap()).unwrap();
        let lat = lattice_overlap(&prof, &state);
        let plus = overlap_coefficient(&p, &bic, one, &spec, Regularization::PlusI).unwrap();
        assert!((lat - plus).norm() < 1e-6 * lat.norm().max(1.0), "{lat} vs {plus}");
        // ε → 0 limit by Richardson extrapolation on a decade sequence of ε
        let f = |eps| overlap_at_epsilon(&p, &bic, one, &spec, eps).unwrap();
        let richardson = |e0: f64| {
            let (a, b, c) = (f(e0), f(e0 / 10.0), f(e0 / 100.0));
            let r1 = (b * 10.0 - a) / 9.0;
            let r2 = (c * 10.0 - b) / 9.0;
            (r2 * 100.0 - r1) / 99.0
        };
        // ε = 1e-3 is outside the asymptotic range (packet phase varies on 1/|j_c|)
        let coarse = richardson(1e-3);
        assert!((coarse - plus).norm() < 1e-5 * plus.norm(), "{coarse} vs {plus}");
        let fine = richardson(1e-5);
        assert!((fine - plus).norm() < 1e-7 * plus.norm(), "{fine} vs {plus}");
        let minus = overlap_coefficient(&p, &bic, one, &spec, Regularization::MinusI).unwrap();
        assert!((minus - plus).norm() > 0.1 * plus.norm());
    }

    #[test]
    fn decoupled_packet_overlap_is_suppressed() {
        let (p, v) = poles(0.0);
        let b = find(&v, SiegertClass::Bound);
        let n = normalization_factor(&p, &b, NormConvention::Biorthogonal).unwrap();
        // narrow in k and centred on the atom, so only the interference factor differs
        let at =
            |k_c| overlap_coefficient(&p, &b, n, &GaussianPacketSpec { alpha: 0.005, j_c: 0, k_c }, Regularization::PlusI).unwrap().norm();
        assert!(at(PI / 3.0) < 1e-3 * at(2.0 * PI / 3.0), "{} {}", at(PI / 3.0), at(2.0 * PI / 3.0));
    }

    #[test]
    fn continuum_dominates_growing_overlap() {
        let (p, v) = poles(GAMMA_C);
        let one = C64::new(1.0, 0.0);
        let spec = GaussianPacketSpec { alpha: 0.02, j_c: -500, k_c: 1.32 };
        let bic = find(&v, SiegertClass::InContinuum);
        let gp = find(&v, SiegertClass::Growing);
        let ng = normalization_factor(&p, &gp, NormConvention::Biorthogonal).unwrap();
        let c1 = overlap_coefficient(&p, &bic, one, &spec, Regularization::PlusI).unwrap();
        let c2 = overlap_coefficient(&p, &gp, ng, &spec, Regularization::PlusI).unwrap();
        assert!(c1.norm_sqr() > 1e6 * c2.norm_sqr(), "{c1} {c2}");
    }

    #[test]
    fn predicted_density_laws() {
        let (p, v) = poles(GAMMA_C);
        let gp = find(&v, SiegertClass::Growing);
        let d = [DecompositionCoefficient::new(&p, &gp, C64::new(1.0, 0.0), C64::new(1e-3, 0.0), 0.0)];
        let lp = |j, t| predict_longtime_density(&d, 3, j, t).ln();
        assert!(((lp(-20, 100.0) - lp(-20, 0.0)) / 100.0 - 2.0 * gp.energy.im).abs() < 1e-10);
        assert!(((lp(-20, 5.0) - lp(-30, 5.0)) / 10.0 - 2.0 * gp.k.im).abs() < 1e-10);
        let bic = find(&v, SiegertClass::InContinuum);
        let d1 = [DecompositionCoefficient::new(&p, &bic, C64::new(1.0, 0.0), C64::new(0.5, 0.1), 0.0)];
        let p0 = predict_longtime_density(&d1, 3, -40, 0.0);
        for (j, t) in [(-400, 10.0), (77, 300.0), (-9, 1000.0)] {
            assert!((predict_longtime_density(&d1, 3, j, t) - p0).abs() < 1e-12 * p0);
        }
    }

    #[test]
    fn amplitude_fit_recovers_known_coefficient() {
        let (p, v) = poles(GAMMA_C);
        let bic = find(&v, SiegertClass::InContinuum);
        let truth = DecompositionCoefficient::from_amplitude(&p, &bic, C64::new(0.4, -0.2), 3.0);
        let js: Vec<i64> = (-200..-50).chain(60..200).collect();
        let vals: Vec<C64> = js.iter().map(|&j| truth.amplitude(3, j, 40.0)).collect();
        let fit = fit_asymptotic_amplitude(&p, &bic, &js, &vals, 40.0, 3.0).unwrap();
        assert!((fit.a - truth.a).norm() < 1e-12);
    }
}
