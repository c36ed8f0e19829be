//! Discrete Legendre transform pair on the Gauss nodes and the
//! physical-space application of `g* d/dx`.

use crate::assembly::differentiation_pair;
use crate::error::{KdvError, Result};
use crate::linalg::{BandedLu, BandedMatrix};
use crate::orthopoly::{legendre_derivatives, QuadratureRule};

/// Gauss nodes, weights and the table `L_n(y_k)` for `0 <= n, k <= N`.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    n_degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Row `k` holds `L_0(y_k) ..= L_N(y_k)`.
    table: Vec<Vec<f64>>,
}

impl TransformPlan {
    /// `rule` must be the Gauss-Legendre rule with `N + 1` nodes.
    pub fn new(n_degree: usize, rule: &QuadratureRule) -> Result<Self> {
        if rule.len() != n_degree + 1 || rule.endpoint_derivative_weight.is_some() {
            return Err(KdvError::InvalidArgument(format!(
                "transform plan for N={n_degree} needs a Gauss rule with {} nodes",
                n_degree + 1
            )));
        }
        let table = rule
            .nodes
            .iter()
            .map(|&y| legendre_derivatives(n_degree, y, 0).remove(0))
            .collect();
        Ok(TransformPlan {
            n_degree,
            nodes: rule.nodes.clone(),
            weights: rule.weights.clone(),
            table,
        })
    }

    pub fn n_degree(&self) -> usize {
        self.n_degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n_degree + 1 {
            return Err(KdvError::LengthMismatch {
                expected: self.n_degree + 1,
                actual: len,
            });
        }
        Ok(())
    }

    /// Coefficients to nodal values: `u_k = sum_n c_n L_n(y_k)`.
    pub fn dlt(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check(coeffs.len())?;
        Ok(self
            .table
            .iter()
            .map(|row| row.iter().zip(coeffs).map(|(l, c)| l * c).sum())
            .collect())
    }

    /// Nodal values to coefficients: `c_n = (n + 1/2) sum_k w_k u_k L_n(y_k)`.
    pub fn idlt(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check(values.len())?;
        let mut out = vec![0.0; self.n_degree + 1];
        for ((row, w), u) in self.table.iter().zip(&self.weights).zip(values) {
            let wu = w * u;
            for (o, l) in out.iter_mut().zip(row) {
                *o += wu * l;
            }
        }
        for (n, o) in out.iter_mut().enumerate() {
            *o *= n as f64 + 0.5;
        }
        Ok(out)
    }
}

/// Spectral differentiation `G^T d = F^T c` on the reference interval.
#[derive(Debug, Clone)]
pub struct Differentiator {
    f: BandedMatrix,
    gt: BandedLu,
}

impl Differentiator {
    pub fn new(n_degree: usize, rule: &QuadratureRule) -> Result<Self> {
        let (f, g) = differentiation_pair(n_degree, rule)?;
        Ok(Differentiator {
            f,
            gt: BandedLu::factor(&g.transpose())?,
        })
    }

    /// Legendre coefficients of `du/dy` from those of `u`.
    pub fn derivative(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.f.n_rows() {
            return Err(KdvError::LengthMismatch {
                expected: self.f.n_rows(),
                actual: coeffs.len(),
            });
        }
        self.gt.solve(&self.f.transpose_matvec(coeffs))
    }
}

/// Legendre coefficients of the projection of `g* du/dx`, with `g*` given
/// at the plan's nodes and `scale = dy/dx`.
pub fn apply_gstar_dx(
    plan: &TransformPlan,
    diff: &Differentiator,
    g_star_at_nodes: &[f64],
    coeffs: &[f64],
    scale: f64,
) -> Result<Vec<f64>> {
    plan.check(g_star_at_nodes.len())?;
    let d = diff.derivative(coeffs)?;
    let mut values = plan.dlt(&d)?;
    for (v, g) in values.iter_mut().zip(g_star_at_nodes) {
        *v *= scale * g;
    }
    plan.idlt(&values)
}
