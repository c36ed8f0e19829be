//! Whole-line solution for constant `g` and Gaussian data, by quadrature of
//! the Fourier integral
//! `u(t, x) = pi^{-1/2} Re int_0^inf e^{-k^2/4} e^{i (k (x - g t) + k^3 t)} dk`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{KdvError, Result};
use crate::stepper::{AdvectionField, AdvectionForm};

/// Agreement required between successive refinements.
pub const REFERENCE_TOL: f64 = 1e-11;

/// Trapezoidal rule on `[0, k_max]` with spacing `dk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierReference {
    pub g: f64,
    pub k_max: f64,
    pub dk: f64,
}

impl FourierReference {
    /// Refines the rule until two successive answers at every `(t, x)` agree
    /// to [`REFERENCE_TOL`]. The truncation `k_max` is doubled until the
    /// Gaussian weight is negligible, then the spacing is halved.
    pub fn converged(field: &AdvectionField, times: &[f64], points: &[f64]) -> Result<Self> {
        if field.form != AdvectionForm::Constant {
            return Err(KdvError::NonConstantAdvection);
        }
        let g = field.g_a;
        let mut k_max = 4.0f64;
        while (-k_max * k_max / 4.0).exp() > 1e-18 {
            k_max *= 2.0;
        }
        let mut plan = FourierReference { g, k_max, dk: 0.1 };
        let mut prev: Vec<Vec<f64>> = times.iter().map(|&t| plan.eval(t, points)).collect();
        for _ in 0..16 {
            let next_plan = FourierReference { dk: plan.dk / 2.0, ..plan };
            let next: Vec<Vec<f64>> = times.iter().map(|&t| next_plan.eval(t, points)).collect();
            let diff = prev
                .iter()
                .flatten()
                .zip(next.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            plan = next_plan;
            prev = next;
            if diff < REFERENCE_TOL {
                return Ok(plan);
            }
        }
        Err(KdvError::InvalidArgument(
            "Fourier reference did not converge after 16 refinements".into(),
        ))
    }

    /// Values at time `t`; each point is a Horner sum over `e^{i dk x}`.
    pub fn eval(&self, t: f64, points: &[f64]) -> Vec<f64> {
        let n = (self.k_max / self.dk).ceil() as usize;
        let weights: Vec<Complex64> = (0..=n)
            .map(|j| {
                let k = j as f64 * self.dk;
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                let amp = w * self.dk * (-k * k / 4.0).exp();
                Complex64::from_polar(amp, (k * k * k - self.g * k) * t)
            })
            .collect();
        let scale = std::f64::consts::PI.sqrt().recip();
        points
            .par_iter()
            .map(|&x| {
                let z = Complex64::from_polar(1.0, self.dk * x);
                let sum = weights.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, w| acc * z + w);
                scale * sum.re
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::uniform_grid;

    #[test]
    fn initial_value_recovered() {
        let field = AdvectionField::constant(6.0, -6.0, 6.0);
        let grid = uniform_grid(-6.0, 6.0, 129);
        let plan = FourierReference::converged(&field, &[0.0, 1.0], &grid).unwrap();
        for (x, v) in grid.iter().zip(plan.eval(0.0, &grid)) {
            assert!((v - (-x * x).exp()).abs() < 1e-11, "{x}: {v}");
        }
    }

    #[test]
    fn rejects_variable_advection() {
        let field = AdvectionField::gauss3(-6.0, 6.0);
        assert!(matches!(
            FourierReference::converged(&field, &[1.0], &[0.0]),
            Err(KdvError::NonConstantAdvection)
        ));
    }

    #[test]
    fn satisfies_the_equation() {
        // u_t + g u_x + u_xxx = 0 by central differences at a few points.
        let field = AdvectionField::constant(6.0, -6.0, 6.0);
        let plan = FourierReference::converged(&field, &[0.5], &[0.0]).unwrap();
        let (t, h, dt) = (0.5, 2e-2, 1e-4);
        for x in [-4.0, -1.5, 0.3, 2.0] {
            let u = |t: f64, dx: f64| plan.eval(t, &[x + dx])[0];
            let ut = (u(t + dt, 0.0) - u(t - dt, 0.0)) / (2.0 * dt);
            let ux = (u(t, h) - u(t, -h)) / (2.0 * h);
            let uxxx = (u(t, 2.0 * h) - 2.0 * u(t, h) + 2.0 * u(t, -h) - u(t, -2.0 * h)) / (2.0 * h * h * h);
            let r = ut + 6.0 * ux + uxxx;
            assert!(r.abs() < 5e-3, "x={x}: residual {r:e}");
        }
    }
}
