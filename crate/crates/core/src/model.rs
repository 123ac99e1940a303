//! Physical parameters, the cosine band and the two-point coupling phase.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// Distance from 0 or π below which a wave number counts as a band edge.
pub const BAND_EDGE_GUARD: f64 = 1e-9;

/// Waveguide plus giant-atom model in the single-excitation sector.
///
/// Energies are in the same units as the hopping `hopping` (J). A negative
/// `gamma` is loss, a positive one gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega_a: f64,
    pub omega_c: f64,
    pub gamma: f64,
    pub hopping: f64,
    pub g: f64,
    /// Site separation between the two coupling points (sites 0 and `n`).
    pub n: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { omega_a: 0.0, omega_c: 0.0, gamma: 0.0, hopping: 1.0, g: 0.0, n: 1 }
    }
}

impl SystemParams {
    /// Resonant parameters (`omega_a = omega_c = 0`, `J = 1`).
    pub fn resonant(n: usize, g: f64, gamma: f64) -> Self {
        Self { n, g, gamma, ..Self::default() }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [("omega_a", self.omega_a), ("omega_c", self.omega_c), ("gamma", self.gamma), ("J", self.hopping), ("g", self.g)];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(format!("system.{name} must be finite")));
            }
        }
        if self.hopping <= 0.0 {
            return Err(Error::invalid("system.J must be positive"));
        }
        if self.g < 0.0 {
            return Err(Error::invalid("system.g must be non-negative"));
        }
        if self.n == 0 {
            return Err(Error::invalid("system.N must be at least 1"));
        }
        Ok(())
    }

    pub fn is_resonant(&self) -> bool {
        self.omega_a == self.omega_c
    }

    /// `ω_k = ω_c − 2J cos k`.
    pub fn dispersion(&self, k: f64) -> f64 {
        self.omega_c - 2.0 * self.hopping * k.cos()
    }

    /// Dispersion continued to complex wave numbers.
    pub fn dispersion_complex(&self, k: C64) -> C64 {
        self.omega_c - 2.0 * self.hopping * k.cos()
    }

    /// `v_g = dω_k/dk = 2J sin k`.
    pub fn group_velocity(&self, k: f64) -> f64 {
        2.0 * self.hopping * k.sin()
    }

    /// Curvature of the band, `ω''_k = 2J cos k`.
    pub fn band_curvature(&self, k: f64) -> f64 {
        2.0 * self.hopping * k.cos()
    }

    pub fn band(&self) -> (f64, f64) {
        (self.omega_c - 2.0 * self.hopping, self.omega_c + 2.0 * self.hopping)
    }

    /// Inverse of [`dispersion`](Self::dispersion) on `[0, π]`.
    pub fn wavenumber_from_energy(&self, omega: f64) -> Result<f64> {
        let (lower, upper) = self.band();
        if !(omega >= lower && omega <= upper) {
            return Err(Error::OutOfBand { omega, lower, upper });
        }
        let c = ((self.omega_c - omega) / (2.0 * self.hopping)).clamp(-1.0, 1.0);
        Ok(c.acos())
    }

    /// Interference factor `1 + e^{ikN}` of the two coupling points.
    pub fn coupling_phase(&self, k: C64) -> C64 {
        1.0 + (C64::i() * k * self.n as f64).exp()
    }

    /// Wave numbers `(2m+1)π/N` in `(0, π)` where the atom decouples.
    pub fn decoupling_points(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.n).map(|m| (2 * m + 1) as f64 * PI / n).filter(|&k| k < PI - BAND_EDGE_GUARD).collect()
    }

    /// True when `k` is (to rounding) one of the decoupling points.
    pub fn is_decoupled(&self, k: f64) -> bool {
        self.coupling_phase(C64::new(k, 0.0)).norm() < 1e-12
    }
}

/// A propagating Bloch mode with `k` strictly inside the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMode {
    pub k: f64,
    pub omega_k: f64,
    pub v_g: f64,
}

impl BlochMode {
    pub fn new(params: &SystemParams, k: f64) -> Result<Self> {
        check_interior(k)?;
        Ok(Self { k, omega_k: params.dispersion(k), v_g: params.group_velocity(k) })
    }
}

/// Rejects wave numbers outside `(0, π)` or within [`BAND_EDGE_GUARD`] of its ends.
pub fn check_interior(k: f64) -> Result<()> {
    if !k.is_finite() || k <= BAND_EDGE_GUARD || k >= PI - BAND_EDGE_GUARD {
        return Err(Error::invalid(format!("wave number {k} must lie in (0, π) away from the band edges")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit() -> SystemParams {
        SystemParams::resonant(3, 0.812, 0.0)
    }

    #[test]
    fn dispersion_values() {
        let p = unit();
        assert_abs_diff_eq!(p.dispersion(PI / 2.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.dispersion(0.0), -2.0, epsilon = 1e-15);
        // -2 cos(1.32)
        assert_abs_diff_eq!(p.dispersion(1.32), -0.496_350_9, epsilon = 1e-7);
    }

    #[test]
    fn group_velocity_values() {
        let p = unit();
        assert_abs_diff_eq!(p.group_velocity(PI / 2.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.group_velocity(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.group_velocity(1.32), 1.937_430_2, epsilon = 1e-7);
    }

    #[test]
    fn group_velocity_matches_finite_difference() {
        let p = SystemParams { hopping: 1.7, omega_c: 0.3, ..unit() };
        let h = 1e-5;
        for i in 1..200 {
            let k = i as f64 * PI / 200.0;
            let fd = (p.dispersion(k + h) - p.dispersion(k - h)) / (2.0 * h);
            let exact = p.group_velocity(k);
            let scale = exact.abs().max(1e-3);
            assert!((fd - exact).abs() / scale < 1e-8, "k = {k}: {fd} vs {exact}");
        }
    }

    #[test]
    fn inverse_dispersion() {
        let p = unit();
        assert_abs_diff_eq!(p.wavenumber_from_energy(0.0).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.wavenumber_from_energy(-2.0).unwrap(), 0.0, epsilon = 1e-15);
        // arccos(0.248) by bisection on -2 cos k = -0.496
        let (mut lo, mut hi) = (0.0_f64, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if -2.0 * mid.cos() < -0.496 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert_abs_diff_eq!(p.wavenumber_from_energy(-0.496).unwrap(), lo, epsilon = 1e-12);
        assert!((lo - 1.320_181_1).abs() < 1e-7);
    }

    #[test]
    fn out_of_band_energy_is_rejected() {
        match unit().wavenumber_from_energy(2.5) {
            Err(Error::OutOfBand { lower, upper, .. }) => {
                assert_eq!((lower, upper), (-2.0, 2.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coupling_phase_values() {
        let p3 = SystemParams::resonant(3, 0.5, 0.0);
        let p2 = SystemParams::resonant(2, 0.5, 0.0);
        assert!(p3.coupling_phase(C64::new(PI / 3.0, 0.0)).norm() < 1e-15);
        assert!(p2.coupling_phase(C64::new(PI / 2.0, 0.0)).norm() < 1e-15);
        let z = p3.coupling_phase(C64::new(1.32, 0.0));
        // 1 + cos 3.96 + i sin 3.96
        assert_abs_diff_eq!(z.re, 1.0 + 3.96_f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(z.re, 0.316_615_2, epsilon = 1e-7);
        assert_abs_diff_eq!(z.im, -0.730_058_4, epsilon = 1e-7);
    }

    #[test]
    fn decoupling_points_are_zeros() {
        for n in 1..8 {
            let p = SystemParams::resonant(n, 0.4, 0.0);
            let pts = p.decoupling_points();
            assert_eq!(pts.len(), n / 2, "N = {n}");
            for k in pts {
                assert!(p.is_decoupled(k));
            }
        }
    }

    #[test]
    fn band_edges_rejected() {
        assert!(BlochMode::new(&unit(), 0.0).is_err());
        assert!(BlochMode::new(&unit(), PI - 1e-10).is_err());
        assert!(BlochMode::new(&unit(), 1.0).is_ok());
    }

    #[test]
    fn validation() {
        assert!(SystemParams { n: 0, ..unit() }.validate().is_err());
        assert!(SystemParams { hopping: 0.0, ..unit() }.validate().is_err());
        assert!(SystemParams { g: -0.1, ..unit() }.validate().is_err());
        assert!(SystemParams { gamma: f64::NAN, ..unit() }.validate().is_err());
        assert!(unit().validate().is_ok());
    }

    proptest! {
        #[test]
        fn dispersion_even_and_periodic(k in -10.0f64..10.0, wc in -1.0f64..1.0, j in 0.1f64..3.0) {
            let p = SystemParams { omega_c: wc, hopping: j, ..unit() };
            prop_assert!((p.dispersion(k) - p.dispersion(-k)).abs() < 1e-12);
            prop_assert!((p.dispersion(k) - p.dispersion(k + 2.0 * PI)).abs() < 1e-12);
            let (lo, hi) = p.band();
            prop_assert!(p.dispersion(k) >= lo - 1e-12 && p.dispersion(k) <= hi + 1e-12);
        }

        #[test]
        fn inverse_round_trip(k in 1e-6f64..(PI - 1e-6)) {
            let p = unit();
            let back = p.wavenumber_from_energy(p.dispersion(k)).unwrap();
            // acos loses precision near the band edges as 1/sin k
            prop_assert!((back - k).abs() < 1e-12 / k.sin().max(1e-3));
        }

        #[test]
        fn coupling_phase_zero_only_at_decoupling(n in 1usize..9, k in 1e-3f64..(PI - 1e-3)) {
            let p = SystemParams::resonant(n, 0.5, 0.0);
            let near = p.decoupling_points().iter().any(|&kd| (kd - k).abs() < 1e-4);
            if !near {
                prop_assert!(p.coupling_phase(C64::new(k, 0.0)).norm() > 1e-5);
            }
        }
    }
}
