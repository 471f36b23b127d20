//! Piecewise cubic Hermite interpolation with monotonicity limiting.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Cubic Hermite interpolant on strictly increasing knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

fn check_knots(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameters("interpolation needs at least two matching knots".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameters("knots must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

impl MonotoneCubic {
    /// Fritsch-Butland slopes; preserves monotonicity of the data.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_knots(&x, &y)?;
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            d[0] = pchip_end(h[0], h[1], del[0], del[1]);
            d[n - 1] = pchip_end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(MonotoneCubic { x, y, d })
    }

    /// Uses caller-supplied slopes, limited only on intervals where the
    /// data and both end slopes share one sign.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, mut d: Vec<f64>) -> Result<Self> {
        check_knots(&x, &y)?;
        if d.len() != x.len() || d.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("slopes must be finite, one per knot".into()));
        }
        for k in 0..x.len() - 1 {
            let del = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
            if del == 0.0 || d[k].signum() != del.signum() || d[k + 1].signum() != del.signum() {
                continue;
            }
            let a = d[k] / del;
            let b = d[k + 1] / del;
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                d[k] = tau * a * del;
                d[k + 1] = tau * b * del;
            }
        }
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: f64) -> usize {
        let i = self.x.partition_point(|&v| v <= t);
        i.clamp(1, self.x.len() - 1) - 1
    }

    /// Value and first derivative at `t`; extrapolates the end cubic outside the knots.
    pub fn eval_with_deriv(&self, t: f64) -> (f64, f64) {
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d[k], self.d[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let dv = ((6.0 * s2 - 6.0 * s) * (y0 - y1)) / h + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (3.0 * s2 - 2.0 * s) * d1;
        (v, dv)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_deriv(t).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reproduces_knots() {
        let x = vec![0.0, 1.0, 2.5, 4.0];
        let y = vec![1.0, 2.0, 2.0, 5.0];
        let m = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_relative_eq!(m.eval(*a), *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_slopes_give_fourth_order() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let m = MonotoneCubic::with_slopes(x, y.clone(), y).unwrap();
            (0..1000).map(|i| (m.eval(i as f64 / 999.0) - (i as f64 / 999.0).exp()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(10) / err(20);
        assert!(ratio > 14.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_unsorted() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_curve(steps in proptest::collection::vec((0.01f64..2.0, 0.0f64..3.0), 2..12)) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let m = MonotoneCubic::new(x.clone(), y).unwrap();
            let (a, b) = m.domain();
            let mut prev = m.eval(a);
            for i in 1..=400 {
                let v = m.eval(a + (b - a) * i as f64 / 400.0);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
