//! Least-squares fit of y = A·e^(−t/T) without an offset term.
//!
//! A log-linear regression on |y| seeds a damped Gauss–Newton
//! (Levenberg–Marquardt) refinement in (A, T).

use crate::error::{invalid, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    /// Stopped at the iteration limit; parameters are the best found.
    IterationLimit,
    /// No decaying exponential describes the data (constant or growing data,
    /// or a non-positive time constant).
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFit {
    pub amplitude: f64,
    pub time_constant: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub status: FitStatus,
}

impl ExpFit {
    fn failed(amplitude: f64, time_constant: f64, residual_norm: f64) -> Self {
        Self {
            amplitude,
            time_constant,
            residual_norm,
            status: FitStatus::Failed,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status != FitStatus::Failed
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (-t / self.time_constant).exp()
    }
}

fn residual_norm(points: &[(f64, f64)], a: f64, tc: f64) -> f64 {
    points
        .iter()
        .map(|&(t, y)| (a * (-t / tc).exp() - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Ordinary least squares line through (x, y): returns (intercept, slope).
fn line_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

pub fn fit_monoexponential(points: &[(f64, f64)]) -> Result<ExpFit> {
    if points.len() < 3 {
        return Err(invalid(format!(
            "an exponential fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(t, y)| !t.is_finite() || !y.is_finite())
    {
        return Err(invalid("fit data must be finite"));
    }
    if points.iter().any(|&(t, _)| t < 0.0) {
        return Err(invalid("fit times must be nonnegative"));
    }

    let y0 = points[0].1;
    if points.iter().all(|&(_, y)| y == y0) {
        return Ok(ExpFit::failed(y0, f64::INFINITY, 0.0));
    }

    // seed: ln|y| = ln|A| − t/T over the nonzero samples
    let (xs, ls): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, y)| *y != 0.0)
        .map(|&(t, y)| (t, y.abs().ln()))
        .unzip();
    let sign = {
        let s: f64 = points.iter().map(|p| p.1).sum();
        if s < 0.0 {
            -1.0
        } else {
            1.0
        }
    };
    let Some((intercept, slope)) = (xs.len() >= 2).then(|| line_fit(&xs, &ls)).flatten() else {
        return Ok(ExpFit::failed(y0, f64::NAN, f64::NAN));
    };
    if slope >= 0.0 {
        let a = sign * intercept.exp();
        return Ok(ExpFit::failed(
            a,
            -1.0 / slope,
            residual_norm(points, a, -1.0 / slope),
        ));
    }
    let mut a = sign * intercept.exp();
    let mut tc = -1.0 / slope;
    let mut cost = residual_norm(points, a, tc).powi(2);
    let mut lambda = 1e-3;
    let mut status = FitStatus::IterationLimit;

    for _ in 0..MAX_ITERATIONS {
        // normal equations for the (A, T) step
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for &(t, y) in points {
            let e = (-t / tc).exp();
            let r = a * e - y;
            let j = [e, a * e * t / (tc * tc)];
            for p in 0..2 {
                jtr[p] += j[p] * r;
                for q in 0..2 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let mut improved = false;
        let mut stalled = true;
        for _ in 0..30 {
            let m = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det != 0.0 && det.is_finite() {
                let da = -(m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
                let dt = -(m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det;
                stalled =
                    da.abs() <= STEP_TOLERANCE * a.abs() && dt.abs() <= STEP_TOLERANCE * tc.abs();
                if stalled {
                    break;
                }
                let (na, nt) = (a + da, tc + dt);
                if nt > 0.0 {
                    let new_cost = residual_norm(points, na, nt).powi(2);
                    if new_cost <= cost {
                        a = na;
                        tc = nt;
                        cost = new_cost;
                        lambda = (lambda / 10.0).max(1e-12);
                        improved = true;
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        if stalled || !improved {
            status = FitStatus::Converged;
            break;
        }
    }

    if !(tc > 0.0 && tc.is_finite()) {
        return Ok(ExpFit::failed(a, tc, cost.sqrt()));
    }
    log::debug!("exponential fit: A = {a:.6e}, T = {tc:.6e}, status {status:?}");
    Ok(ExpFit {
        amplitude: a,
        time_constant: tc,
        residual_norm: cost.sqrt(),
        status,
    })
}
