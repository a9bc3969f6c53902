//! Explicit Runge–Kutta steppers on fixed-size states.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with the caller's fixed step.
    #[default]
    Rk4,
    /// Dormand–Prince 5(4) with error control; output still lands on the
    /// caller's uniform grid.
    AdaptiveRk45 { atol: f64, rtol: f64 },
}

impl Method {
    pub fn adaptive() -> Self {
        Method::AdaptiveRk45 {
            atol: 1e-10,
            rtol: 1e-10,
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// One classical RK4 step.
pub fn rk4_step<const N: usize, E, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N], E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b* (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince trial step: (fifth-order solution, scaled error norm).
fn dopri_trial<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    h: f64,
    atol: f64,
    rtol: f64,
) -> Result<([f64; N], f64)>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + C2 * h, &std::array::from_fn(|i| y[i] + h * A21 * k1[i]))?;
    let k3 = f(
        t + C3 * h,
        &std::array::from_fn(|i| y[i] + h * (A31 * k1[i] + A32 * k2[i])),
    )?;
    let k4 = f(
        t + C4 * h,
        &std::array::from_fn(|i| y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])),
    )?;
    let k5 = f(
        t + C5 * h,
        &std::array::from_fn(|i| y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])),
    )?;
    let k6 = f(
        t + h,
        &std::array::from_fn(|i| y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])),
    )?;
    let y5: [f64; N] =
        std::array::from_fn(|i| y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]));
    let k7 = f(t + h, &y5)?;
    let mut err = 0.0f64;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = atol + rtol * y[i].abs().max(y5[i].abs());
        err = err.max((e / scale).abs());
    }
    Ok((y5, err))
}

/// Advance from `t0` to `t1` with adaptive Dormand–Prince steps. `h` carries
/// the step-size suggestion between calls.
pub fn dopri_advance<const N: usize, F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y: &[f64; N],
    h: &mut f64,
    atol: f64,
    rtol: f64,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut t = t0;
    let mut y = *y;
    let span = t1 - t0;
    let h_min = 1e-14 * span.abs().max(1.0);
    while t < t1 {
        let last = *h >= t1 - t;
        let step = if last { t1 - t } else { *h };
        let (y_new, err) = dopri_trial(f, t, &y, step, atol, rtol)?;
        if err <= 1.0 {
            t = if last { t1 } else { t + step };
            y = y_new;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        let proposal = step * factor;
        if err > 1.0 && proposal < h_min {
            return Err(Error::StepFailure { t, step: proposal });
        }
        // Keep the suggestion from collapsing on the shortened final step.
        if !(last && err <= 1.0) || proposal > *h {
            *h = proposal;
        }
    }
    Ok(y)
}

/// Uniform output grid `0, dt, 2dt, …` ending exactly at `t_end`.
pub fn output_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("end time {t_end} must be >= 0")));
    }
    let n = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    if let Some(last) = grid.last_mut() {
        if n > 0 {
            *last = t_end;
        }
    }
    Ok(grid)
}
