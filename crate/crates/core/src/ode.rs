//! Dormand–Prince 5(4) integrator for complex state vectors, with
//! fourth-order dense output.

use crate::{Error, Result, C64};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    /// Steps smaller than this abort the run.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-9, h_init: 1e-2, h_min: 1e-12, max_steps: 50_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

struct Work {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    ynew: Vec<C64>,
}

/// Integrates from `t0` to `t_end`.
///
/// `outputs` must be sorted and lie in `[t0, t_end]`; `on_output(i, t, y)` is
/// called with the dense-output state at each of them in order. `on_step(t, y)`
/// runs after every accepted step and may abort the run by returning an error.
#[allow(clippy::too_many_arguments)]
pub fn integrate<S, O, P>(
    sys: &S,
    t0: f64,
    y0: Vec<C64>,
    t_end: f64,
    outputs: &[f64],
    opts: OdeOptions,
    mut on_output: O,
    mut on_step: P,
) -> Result<(Vec<C64>, OdeStats)>
where
    S: OdeSystem,
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
    P: FnMut(f64, &[C64]) -> Result<()>,
{
    if !(t_end >= t0) {
        return Err(Error::invalid(format!("t_end {t_end} before start {t0}")));
    }
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.iter().any(|&t| t < t0 || t > t_end) {
        return Err(Error::invalid("output times must be sorted and inside the integration interval"));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::invalid("tolerances must be positive"));
    }
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut w = Work { k: std::array::from_fn(|_| vec![zero; n]), tmp: vec![zero; n], ynew: vec![zero; n] };
    let mut y = y0;
    let mut t = t0;
    let mut stats = OdeStats::default();
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        on_output(next_out, t0, &y)?;
        next_out += 1;
    }
    if t_end == t0 {
        return Ok((y, stats));
    }

    sys.rhs(t, &y, &mut w.k[0]);
    stats.evaluations += 1;
    let mut h = opts.h_init.min(t_end - t0);
    let mut steps = 0;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical(format!("exceeded {} steps at t = {t}", opts.max_steps)));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let err = stage_step(sys, t, h, &y, &mut w, opts);
        stats.evaluations += 6;
        if !err.is_finite() {
            h *= 0.2;
            stats.rejected += 1;
        } else if err <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            stats.accepted += 1;
            while next_out < outputs.len() && outputs[next_out] <= t_new {
                let theta = (outputs[next_out] - t) / h;
                let yi = dense(&y, &w, h, theta);
                on_output(next_out, outputs[next_out], &yi)?;
                next_out += 1;
            }
            std::mem::swap(&mut y, &mut w.ynew);
            w.k.swap(0, 6);
            t = t_new;
            on_step(t, &y)?;
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
        if h < opts.h_min && t < t_end {
            return Err(Error::StepUnderflow { time: t, step: h });
        }
    }
    Ok((y, stats))
}

/// One trial step; fills `w.ynew`, `w.k[1..7]` and returns the scaled error.
///
/// The error is the Euclidean norm of the whole error vector against
/// `atol + rtol·‖y‖`, so sparse states are not favoured by empty components.
fn stage_step<S: OdeSystem>(sys: &S, t: f64, h: f64, y: &[C64], w: &mut Work, opts: OdeOptions) -> f64 {
    let Work { k, tmp, ynew } = w;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    for i in 0..y.len() {
        tmp[i] = y[i] + h * (A21 * k1[i]);
    }
    sys.rhs(t + C2 * h, tmp, k2);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    sys.rhs(t + C3 * h, tmp, k3);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    sys.rhs(t + C4 * h, tmp, k4);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    sys.rhs(t + C5 * h, tmp, k5);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    sys.rhs(t + h, tmp, k6);
    for i in 0..y.len() {
        ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    sys.rhs(t + h, ynew, k7);

    let (mut acc, mut ny, mut nn) = (0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        acc += e.norm_sqr();
        ny += y[i].norm_sqr();
        nn += ynew[i].norm_sqr();
    }
    acc.sqrt() / (opts.atol + opts.rtol * ny.max(nn).sqrt())
}

/// Dense output at `t + θh` from the stages of the step just taken.
fn dense(y: &[C64], w: &Work, h: f64, theta: f64) -> Vec<C64> {
    let [k1, _, k3, k4, k5, k6, k7] = &w.k;
    let t1 = 1.0 - theta;
    (0..y.len())
        .map(|i| {
            let ydiff = w.ynew[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            let r4 = ydiff - h * k7[i] - bspl;
            let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            y[i] + theta * (ydiff + t1 * (bspl + theta * (r4 + t1 * r5)))
        })
        .collect()
}
