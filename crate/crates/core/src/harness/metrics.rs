//! Relative grid errors, the time-aggregated norm and convergence slopes.

use crate::error::{KdvError, Result};

fn l2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// `|u - u_ref| / |u_ref|` in the discrete l2 norm.
pub fn relative_l2(numeric: &[f64], reference: &[f64]) -> Result<f64> {
    if numeric.len() != reference.len() {
        return Err(KdvError::LengthMismatch {
            expected: reference.len(),
            actual: numeric.len(),
        });
    }
    let num = l2(numeric.iter().zip(reference).map(|(a, b)| a - b));
    let den = l2(reference.iter().copied());
    if den == 0.0 {
        return Err(KdvError::InvalidArgument("reference snapshot is identically zero".into()));
    }
    Ok(num / den)
}

/// Per-step relative errors for steps `1..=M` and
/// `sqrt(tau * sum_m (err^m)^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorms {
    pub per_step: Vec<f64>,
    pub aggregate: f64,
}

/// `numeric[i]` and `reference[i]` hold the grid values at step `i + 1`.
pub fn error_norms(numeric: &[Vec<f64>], reference: &[Vec<f64>], tau: f64) -> Result<ErrorNorms> {
    if numeric.len() != reference.len() {
        return Err(KdvError::LengthMismatch {
            expected: reference.len(),
            actual: numeric.len(),
        });
    }
    let per_step = numeric
        .iter()
        .zip(reference)
        .map(|(n, r)| relative_l2(n, r))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = (tau * per_step.iter().map(|e| e * e).sum::<f64>()).sqrt();
    Ok(ErrorNorms { per_step, aggregate })
}

fn check_pairs(errors: &[f64], params: &[usize]) -> Result<()> {
    if errors.len() != params.len() {
        return Err(KdvError::LengthMismatch {
            expected: params.len(),
            actual: errors.len(),
        });
    }
    if params.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KdvError::InvalidArgument(format!(
            "parameters must be strictly increasing: {params:?}"
        )));
    }
    if errors.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(KdvError::InvalidArgument(format!("errors must be positive and finite: {errors:?}")));
    }
    Ok(())
}

/// `alpha` from `e2 / e1 = exp(-alpha (N2^2 - N1^2))` for each successive pair.
pub fn alpha_slopes(errors: &[f64], ns: &[usize]) -> Result<Vec<f64>> {
    check_pairs(errors, ns)?;
    Ok(errors
        .windows(2)
        .zip(ns.windows(2))
        .map(|(e, n)| -(e[1] / e[0]).ln() / ((n[1] * n[1]) as f64 - (n[0] * n[0]) as f64))
        .collect())
}

/// `beta` from `e2 / e1 = (M2 / M1)^{-beta}` for each successive pair.
pub fn beta_slopes(errors: &[f64], ms: &[usize]) -> Result<Vec<f64>> {
    check_pairs(errors, ms)?;
    Ok(errors
        .windows(2)
        .zip(ms.windows(2))
        .map(|(e, m)| -(e[1] / e[0]).ln() / (m[1] as f64 / m[0] as f64).ln())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_inputs() {
        let r = vec![vec![1.0, 2.0, 3.0]; 4];
        let e = error_norms(&r, &r, 0.25).unwrap();
        assert!(e.per_step.iter().all(|v| *v == 0.0) && e.aggregate == 0.0);
    }

    #[test]
    fn constant_offset() {
        let eps = 1e-3;
        let m = 64;
        let reference = vec![vec![1.0; 129]; m];
        let numeric = vec![vec![1.0 + eps; 129]; m];
        let e = error_norms(&numeric, &reference, 1.0 / m as f64).unwrap();
        assert!(e.per_step.iter().all(|v| (v - eps).abs() < 1e-15));
        assert!((e.aggregate - eps).abs() < 1e-15);
    }

    #[test]
    fn mismatches_rejected() {
        assert!(relative_l2(&[1.0], &[1.0, 2.0]).is_err());
        assert!(relative_l2(&[1.0], &[0.0]).is_err());
        assert!(error_norms(&[vec![1.0]], &[], 1.0).is_err());
        assert!(alpha_slopes(&[1.0, 0.5], &[32, 24]).is_err());
        assert!(beta_slopes(&[1.0, 0.5, 0.2], &[32, 64]).is_err());
        assert!(beta_slopes(&[1.0, 0.0], &[32, 64]).is_err());
    }

    #[test]
    fn slopes_from_published_errors() {
        let a = alpha_slopes(&[2.6141e-3, 8.7517e-5], &[24, 32]).unwrap();
        let want = (2.6141e-3f64 / 8.7517e-5).ln() / 448.0;
        assert!((a[0] - want).abs() < 1e-15);
        assert!((a[0] - 7.5822e-3).abs() < 1e-6);
        let b = beta_slopes(&[1.0995e-4, 2.7559e-5], &[64, 128]).unwrap();
        assert!((b[0] - 1.9963).abs() < 1e-4);
        assert_eq!(alpha_slopes(&[1e-3, 1e-3], &[8, 16]).unwrap(), vec![0.0]);
        assert_eq!(beta_slopes(&[1e-3, 1e-3], &[8, 16]).unwrap(), vec![0.0]);
    }

    proptest! {
        #[test]
        fn beta_recovers_power_law(c in 1e-6f64..1.0, beta in 0.5f64..4.0, m0 in 4usize..64) {
            let ms = [m0, 2 * m0, 4 * m0];
            let errs: Vec<f64> = ms.iter().map(|m| c * (*m as f64).powf(-beta)).collect();
            for b in beta_slopes(&errs, &ms).unwrap() {
                prop_assert!((b - beta).abs() < 1e-10);
            }
        }

        #[test]
        fn alpha_recovers_gaussian_decay(alpha in 1e-4f64..1e-2, n0 in 8usize..32) {
            let ns = [n0, n0 + 8, n0 + 16];
            let errs: Vec<f64> = ns.iter().map(|n| (-alpha * (n * n) as f64).exp()).collect();
            for a in alpha_slopes(&errs, &ns).unwrap() {
                prop_assert!((a - alpha).abs() < 1e-9);
            }
        }
    }
}
