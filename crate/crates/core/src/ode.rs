//! Adaptive Dormand-Prince 5(4) stepper with dense output.
//!
//! The stepper only advances in the positive direction of its independent
//! variable. Right-hand side failures (EOS domain errors, singular points,
//! non-finite values) are treated as step rejections; when the step size
//! falls below the floor the last failure is reported.

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

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen from the derivative scale when `None`.
    pub h_init: Option<f64>,
    /// Largest allowed step.
    pub h_max: f64,
    /// Steps below `h_min_rel * max(|t|, 1)` count as underflow.
    pub h_min_rel: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            h_min_rel: 1e-14,
        }
    }
}

/// Why the stepper gave up.
#[derive(Debug, Clone, PartialEq)]
pub struct Underflow {
    pub t: f64,
    pub h: f64,
    /// Last right-hand side error seen while shrinking, if any.
    pub cause: Option<Error>,
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    /// Fourth-order dense output at `t` in `[t0, t1]`.
    pub fn dense(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

/// Dormand-Prince stepper state.
#[derive(Debug, Clone)]
pub struct Dopri<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    f: [f64; N],
    h: f64,
    opts: StepOptions,
    pub accepted: usize,
    pub rejected: usize,
}

fn is_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

impl<const N: usize> Dopri<N> {
    pub fn new<F>(rhs: &mut F, t0: f64, y0: [f64; N], opts: StepOptions) -> Result<Self>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let f = rhs(t0, &y0)?;
        if !is_finite(&f) {
            return Err(Error::Integration(format!("non-finite derivative at t = {t0}")));
        }
        let h = match opts.h_init {
            Some(h) => h,
            None => {
                let mut d0: f64 = 0.0;
                let mut d1: f64 = 0.0;
                for i in 0..N {
                    let sc = opts.atol + opts.rtol * y0[i].abs();
                    d0 = d0.max((y0[i] / sc).abs());
                    d1 = d1.max((f[i] / sc).abs());
                }
                if d0 < 1e-5 || d1 < 1e-5 {
                    1e-6 * t0.abs().max(1.0)
                } else {
                    0.01 * d0 / d1
                }
            }
        };
        Ok(Dopri {
            t: t0,
            y: y0,
            f,
            h: h.min(opts.h_max),
            opts,
            accepted: 0,
            rejected: 0,
        })
    }

    /// Current proposed step size.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Derivative at the current point.
    pub fn derivative(&self) -> [f64; N] {
        self.f
    }

    /// Advances one accepted step, never past `t_end`.
    pub fn step<F>(&mut self, rhs: &mut F, t_end: f64) -> std::result::Result<Step<N>, Underflow>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let mut cause = None;
        loop {
            let h_min = self.opts.h_min_rel * self.t.abs().max(1.0);
            let mut h = self.h.min(self.opts.h_max);
            let mut last = false;
            if self.t + h >= t_end {
                h = t_end - self.t;
                last = true;
            }
            if h < h_min && !last {
                return Err(Underflow { t: self.t, h, cause });
            }
            match self.attempt(rhs, h) {
                Ok((y1, f1, k, err)) => {
                    if err <= 1.0 {
                        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        let t0 = self.t;
                        let y0 = self.y;
                        let t1 = if last { t_end } else { self.t + h };
                        let rcont = self.rcont(&y0, &y1, &k, h);
                        self.t = t1;
                        self.y = y1;
                        self.f = f1;
                        self.h = (h * fac).max(h_min);
                        self.accepted += 1;
                        return Ok(Step { t0, t1, y0, y1, f1, rcont });
                    }
                    self.rejected += 1;
                    self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                Err(e) => {
                    self.rejected += 1;
                    cause = Some(e);
                    self.h = h * 0.25;
                }
            }
            if self.h < h_min {
                return Err(Underflow { t: self.t, h: self.h, cause });
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn attempt<F>(&self, rhs: &mut F, h: f64) -> Result<([f64; N], [f64; N], [[f64; N]; 7], f64)>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let t = self.t;
        let y = &self.y;
        let k1 = self.f;
        let check = |v: [f64; N]| -> Result<[f64; N]> {
            if is_finite(&v) {
                Ok(v)
            } else {
                Err(Error::Integration("non-finite stage".into()))
            }
        };
        let k2 = check(rhs(t + C2 * h, &check(axpy(y, h, &[(A21, &k1)]))?)?)?;
        let k3 = check(rhs(t + C3 * h, &check(axpy(y, h, &[(A31, &k1), (A32, &k2)]))?)?)?;
        let k4 = check(rhs(
            t + C4 * h,
            &check(axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?,
        )?)?;
        let k5 = check(rhs(
            t + C5 * h,
            &check(axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?,
        )?)?;
        let k6 = check(rhs(
            t + h,
            &check(axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?,
        )?)?;
        let y1 = check(axpy(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]))?;
        let k7 = check(rhs(t + h, &y1)?)?;
        let mut sum = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y1[i].abs());
            sum += (e / sc) * (e / sc);
        }
        let err = (sum / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration("non-finite error estimate".into()));
        }
        Ok((y1, k7, [k1, k2, k3, k4, k5, k6, k7], err))
    }

    fn rcont(&self, y0: &[f64; N], y1: &[f64; N], k: &[[f64; N]; 7], h: f64) -> [[f64; N]; 5] {
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            r[0][i] = y0[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * k[6][i] - bspl;
            r[4][i] = h
                * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
        }
        r
    }
}

/// Integrates from `t0` to `t1` and returns the end state.
pub fn integrate_to<const N: usize, F>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: StepOptions,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if t1 == t0 {
        return Ok(y0);
    }
    let mut st = Dopri::new(&mut rhs, t0, y0, opts)?;
    while st.t < t1 {
        st.step(&mut rhs, t1).map_err(|u| {
            Error::Integration(format!(
                "step underflow at t = {} (h = {:e}){}",
                u.t,
                u.h,
                u.cause.map(|c| format!(": {c}")).unwrap_or_default()
            ))
        })?;
    }
    Ok(st.y)
}
