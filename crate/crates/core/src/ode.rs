//! Dormand–Prince 5(4) embedded Runge–Kutta integration for complex vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

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

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12 }
    }
}

/// Reusable stage buffers for one system size.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub tol: Tolerances,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
}

impl Dopri5 {
    pub fn new(n: usize, tol: Tolerances) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            tol,
            k: [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    /// Attempts one step of size `h` from `(t, y)` and writes the 5th order
    /// solution into `out`. Returns the scaled RMS error estimate; the step is
    /// acceptable when it is `<= 1`.
    pub fn try_step<F>(&mut self, f: &mut F, t: f64, y: &[Complex64], h: f64, out: &mut [Complex64]) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        f(t, y, k1);
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, tmp, k6);
        for i in 0..n {
            out[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, out, k7);

        let mut acc = 0.0;
        for i in 0..n {
            let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol.atol + self.tol.rtol * y[i].norm().max(out[i].norm());
            acc += (err.norm() / sc).powi(2);
        }
        (acc / n.max(1) as f64).sqrt()
    }
}

/// Standard step-size update from an error estimate.
pub fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    h * factor
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observe` after
/// every accepted step (and once at `t0`).
pub fn integrate<F, O>(
    f: &mut F,
    t0: f64,
    y: &mut [Complex64],
    t_end: f64,
    tol: Tolerances,
    h_max: f64,
    mut observe: O,
) -> Result<IntegrationStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    O: FnMut(f64, &[Complex64]),
{
    if !(t_end > t0) {
        return Err(Error::Usage(format!("t_end ({t_end}) must exceed t0 ({t0})")));
    }
    let mut stepper = Dopri5::new(y.len(), tol);
    let mut out = y.to_vec();
    let mut t = t0;
    let mut h = ((t_end - t0) * 1e-3).min(h_max);
    let mut stats = IntegrationStats::default();
    observe(t, y);
    while t < t_end {
        let h_try = h.min(t_end - t);
        if h_try < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                h: h_try,
                reason: format!(
                    "step size underflow after {} accepted / {} rejected steps",
                    stats.accepted, stats.rejected
                ),
            });
        }
        let err = stepper.try_step(f, t, y, h_try, &mut out);
        if !err.is_finite() {
            stats.rejected += 1;
            h = h_try * 0.2;
            continue;
        }
        if err <= 1.0 {
            t += h_try;
            y.copy_from_slice(&out);
            stats.accepted += 1;
            observe(t, y);
        } else {
            stats.rejected += 1;
        }
        h = next_step(h_try, err).min(h_max);
    }
    Ok(stats)
}
