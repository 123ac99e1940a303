//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands, plus a
//! principal-value / Sokhotski–Plemelj wrapper for simple real poles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result, C64};

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights at the odd-indexed abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * w;
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    Segment { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).norm() }
}

/// Integrates `f` over `[a, b]`, splitting first at every interior breakpoint.
///
/// Subintervals with the largest error estimate are bisected until the total
/// estimate drops below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, breakpoints: &[f64], opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> C64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::invalid(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: C64::new(0.0, 0.0), error: 0.0, intervals: 0 });
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap: BinaryHeap<Segment> = edges.windows(2).map(|w| kronrod15(&f, w[0], w[1])).collect();
    let mut total: C64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();

    while error > opts.abs_tol.max(opts.rel_tol * total.norm()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature { achieved: error, requested: opts.abs_tol });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval collapsed to adjacent floats
            return Err(Error::Quadrature { achieved: error, requested: opts.abs_tol });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        heap.push(left);
        heap.push(right);
        // resum to keep the running error from drifting
        error = heap.iter().map(|s| s.error).sum();
    }
    if !total.re.is_finite() || !total.im.is_finite() {
        return Err(Error::Numerical("non-finite quadrature result".into()));
    }
    Ok(QuadResult { value: total, error, intervals: heap.len() })
}

/// Simple real zero of a denominator `d(k)`: location and slope `d'(k₀)`.
#[derive(Debug, Clone, Copy)]
pub struct SimplePole {
    pub at: f64,
    pub slope: f64,
}

/// Side from which the real-axis singularity is approached, `d(k) ± iε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularization {
    PlusI,
    MinusI,
}

/// `lim_{ε→0⁺} ∫_a^b num(k) / (d(k) ± iε) dk` for real `d` with simple zeros.
///
/// The principal value is taken by subtracting `num(k₀)/(d'(k₀)(k − k₀))` at
/// every pole and adding back its analytic PV; the delta-function part is
/// `∓ iπ Σ num(k₀)/|d'(k₀)|`.
#[allow(clippy::too_many_arguments)]
pub fn plemelj<N, D>(
    num: N,
    den: D,
    a: f64,
    b: f64,
    poles: &[SimplePole],
    extra_breakpoints: &[f64],
    side: Regularization,
    opts: QuadOptions,
) -> Result<QuadResult>
where
    N: Fn(f64) -> C64,
    D: Fn(f64) -> f64,
{
    for p in poles {
        if !(p.at > a && p.at < b) {
            return Err(Error::invalid(format!("pole {} not strictly inside [{a}, {b}]", p.at)));
        }
        if p.slope == 0.0 {
            return Err(Error::invalid("pole with zero slope is not simple"));
        }
    }
    let residues: Vec<(f64, C64, f64)> = poles.iter().map(|p| (p.at, num(p.at), p.slope)).collect();
    let smooth = |k: f64| {
        let mut v = num(k) / den(k);
        for &(k0, n0, slope) in &residues {
            v -= n0 / (slope * (k - k0));
        }
        v
    };
    let mut cuts: Vec<f64> = poles.iter().map(|p| p.at).collect();
    cuts.extend_from_slice(extra_breakpoints);
    let mut res = integrate(smooth, a, b, &cuts, opts)?;
    let sign = match side {
        Regularization::PlusI => -1.0,
        Regularization::MinusI => 1.0,
    };
    for &(k0, n0, slope) in &residues {
        res.value += n0 / slope * ((b - k0) / (k0 - a)).ln();
        res.value += C64::new(0.0, sign * std::f64::consts::PI) * n0 / slope.abs();
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn re(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> C64 {
        move |x| C64::new(f(x), 0.0)
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate(re(|x| x.powi(5) - 3.0 * x * x), -1.0, 2.0, &[], QuadOptions::default()).unwrap();
        // 2^6/6 - 1/6 - (8 + 1)
        assert!((r.value.re - (63.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_lorentzian() {
        let eps = 1e-4;
        let r = integrate(re(|x| eps / (x * x + eps * eps)), -1.0, 1.0, &[0.0], QuadOptions::default()).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((r.value.re - exact).abs() < 1e-9, "{} vs {exact}", r.value.re);
    }

    #[test]
    fn complex_oscillatory() {
        // ∫_0^π e^{ikx} dx with k = 7
        let r = integrate(|x| C64::new(0.0, 7.0 * x).exp(), 0.0, PI, &[], QuadOptions::default()).unwrap();
        let exact = (C64::new(0.0, 7.0 * PI).exp() - 1.0) / C64::new(0.0, 7.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_error() {
        let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 0.0, max_intervals: 4 };
        let err = integrate(re(|x| x.sqrt().recip()), 0.0, 1.0, &[], opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn principal_value_of_reciprocal() {
        // PV ∫_{-1}^{2} dx / x = ln 2
        let r = plemelj(
            |_| C64::new(1.0, 0.0),
            |x| x,
            -1.0,
            2.0,
            &[SimplePole { at: 0.0, slope: 1.0 }],
            &[],
            Regularization::PlusI,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value.re - 2f64.ln()).abs() < 1e-12);
        assert!((r.value.im + PI).abs() < 1e-12);
    }

    #[test]
    fn plemelj_matches_finite_epsilon_limit() {
        // ∫_0^π cos(k) e^{ik} / (0.3 + 2 cos k ± iε) dk: poles where cos k = -0.15
        let k0 = (-0.15f64).acos();
        let num = |k: f64| C64::new(0.0, k).exp() * k.cos();
        let den = |k: f64| 0.3 + 2.0 * k.cos();
        for side in [Regularization::PlusI, Regularization::MinusI] {
            let pv = plemelj(num, den, 0.0, PI, &[SimplePole { at: k0, slope: -2.0 * k0.sin() }], &[], side, QuadOptions::default())
                .unwrap()
                .value;
            let s = if side == Regularization::PlusI { 1.0 } else { -1.0 };
            let finite =
                |eps: f64| integrate(|k| num(k) / C64::new(den(k), s * eps), 0.0, PI, &[k0], QuadOptions::default()).unwrap().value;
            // linear Richardson on ε = 1e-4, 1e-5
            let extrapolated = (finite(1e-5) * 10.0 - finite(1e-4)) / 9.0;
            assert!((pv - extrapolated).norm() < 1e-7, "{pv} vs {extrapolated}");
        }
    }
}
