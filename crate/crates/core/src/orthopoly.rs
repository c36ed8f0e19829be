//! Legendre and Jacobi polynomials, and the two quadrature rules behind the
//! discrete inner products.
//!
//! * The advection rule is plain Gauss-Legendre on `N + 1` nodes, exact for
//!   polynomials of degree `2N + 1`.
//! * The dispersive rule places `N - 2` interior nodes at the roots of
//!   `P^(2,1)_{N-2}`, adds both endpoints, and carries one extra weight on
//!   the derivative of the integrand at `+1`. It is exact through degree
//!   `2N - 2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{KdvError, Result};

/// Default iteration budget handed to the symmetric tridiagonal eigen-solver.
pub const EIGEN_ITERATION_BUDGET: usize = 10_000;

/// `L_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Values of `L_0..=L_nmax` and their derivatives up to `max_order` at `x`.
///
/// Returns `table[order][n]`. Uses the differentiated recurrence
/// `(n+1) L^(k)_{n+1} = (2n+1) (x L^(k)_n + k L^(k-1)_n) - n L^(k)_{n-1}`,
/// which stays valid at the endpoints.
pub fn legendre_derivatives(nmax: usize, x: f64, max_order: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; nmax + 1]; max_order + 1];
    table[0][0] = 1.0;
    if nmax >= 1 {
        table[0][1] = x;
        if max_order >= 1 {
            table[1][1] = 1.0;
        }
    }
    for n in 1..nmax {
        let nf = n as f64;
        for k in 0..=max_order {
            let lower = if k > 0 { table[k - 1][n] } else { 0.0 };
            let v = ((2.0 * nf + 1.0) * (x * table[k][n] + k as f64 * lower) - nf * table[k][n - 1])
                / (nf + 1.0);
            table[k][n + 1] = v;
        }
    }
    table
}

/// `d^order/dx^order L_n(x)`.
pub fn legendre_derivative(n: usize, x: f64, order: usize) -> f64 {
    legendre_derivatives(n, x, order)[order][n]
}

/// Rising factorial `(j)_k = j (j+1) ... (j+k-1)`.
pub fn rising(j: i64, k: u32) -> f64 {
    (0..k as i64).map(|i| (j + i) as f64).product()
}

/// Closed-form endpoint values `L_n^(order)(+-1)` for `order <= 2`.
pub fn legendre_endpoint(n: usize, order: usize, right: bool) -> f64 {
    let j = n as i64;
    let sign = |p: i64| if right || p.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    match order {
        0 => sign(j),
        1 => sign(j - 1) * rising(j, 2) / 2.0,
        2 => sign(j) * rising(j - 1, 4) / 8.0,
        _ => legendre_derivative(n, if right { 1.0 } else { -1.0 }, order),
    }
}

/// Jacobi polynomial `P^(alpha,beta)_n(x)` in the standard normalization.
pub fn jacobi(alpha: f64, beta: f64, n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let ab = alpha + beta;
    let mut p0 = 1.0;
    let mut p1 = (alpha + 1.0) + (ab + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let kf = k as f64;
        let c = 2.0 * kf + ab;
        let a1 = 2.0 * kf * (kf + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
        let a3 = 2.0 * (kf + alpha - 1.0) * (kf + beta - 1.0) * c;
        let p2 = (a2 * p1 - a3 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Derivative of [`jacobi`].
pub fn jacobi_derivative(alpha: f64, beta: f64, n: usize, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    0.5 * (n as f64 + alpha + beta + 1.0) * jacobi(alpha + 1.0, beta + 1.0, n - 1, x)
}

/// Diagonal and off-diagonal of the symmetric Jacobi matrix for the monic
/// recurrence of `P^(alpha,beta)`.
fn jacobi_matrix(alpha: f64, beta: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let diag = (0..n)
        .map(|k| {
            let c = 2.0 * k as f64 + ab;
            if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / (c * (c + 2.0))
            }
        })
        .collect();
    let off = (1..n)
        .map(|k| {
            let kf = k as f64;
            let c = 2.0 * kf + ab;
            (4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (c * c * (c + 1.0) * (c - 1.0))).sqrt()
        })
        .collect();
    (diag, off)
}

/// Golub-Welsch: returns sorted nodes and the squared first eigenvector
/// components (normalized weights, summing to one).
fn golub_welsch(alpha: f64, beta: f64, n: usize, budget: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (diag, off) = jacobi_matrix(alpha, beta, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, budget).ok_or_else(|| KdvError::EigenSolve {
        context: format!("Jacobi matrix alpha={alpha} beta={beta} n={n}"),
    })?;
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Roots of `P^(alpha,beta)_n` in increasing order.
pub fn jacobi_roots(alpha: f64, beta: f64, n: usize) -> Result<Vec<f64>> {
    jacobi_roots_with_budget(alpha, beta, n, EIGEN_ITERATION_BUDGET)
}

/// [`jacobi_roots`] with an explicit eigen-solver iteration budget.
pub fn jacobi_roots_with_budget(alpha: f64, beta: f64, n: usize, budget: usize) -> Result<Vec<f64>> {
    if alpha <= -1.0 || beta <= -1.0 || n == 0 {
        return Err(KdvError::InvalidArgument(format!(
            "jacobi_roots needs alpha, beta > -1 and n >= 1 (got {alpha}, {beta}, {n})"
        )));
    }
    let (mut nodes, _) = golub_welsch(alpha, beta, n, budget)?;
    // Newton polish on the recurrence-evaluated polynomial.
    for x in nodes.iter_mut() {
        for _ in 0..2 {
            let d = jacobi_derivative(alpha, beta, n, *x);
            if d != 0.0 {
                *x -= jacobi(alpha, beta, n, *x) / d;
            }
        }
    }
    let scale = jacobi(alpha, beta, n, 1.0).abs().max(jacobi(alpha, beta, n, -1.0).abs());
    for w in nodes.windows(2) {
        if w[1] <= w[0] {
            return Err(KdvError::EigenSolve {
                context: format!("roots of P^({alpha},{beta})_{n} not strictly increasing"),
            });
        }
    }
    for &x in &nodes {
        let r = jacobi(alpha, beta, n, x).abs();
        if r > 1e-10 * scale || x.abs() >= 1.0 {
            return Err(KdvError::EigenSolve {
                context: format!("root {x} of P^({alpha},{beta})_{n} has residual {r:e}"),
            });
        }
    }
    Ok(nodes)
}

/// A quadrature rule on `[-1, 1]`.
///
/// For the dispersive rule the first and last nodes are the endpoints and
/// `endpoint_derivative_weight` multiplies the derivative of the integrand
/// at `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub endpoint_derivative_weight: Option<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to sampled integrand values; `right_slope` is the
    /// integrand's derivative at `+1` (ignored by rules without a derivative
    /// weight).
    pub fn weighted_sum(&self, values: &[f64], right_slope: f64) -> f64 {
        let s: f64 = self.weights.iter().zip(values).map(|(w, v)| w * v).sum();
        s + self.endpoint_derivative_weight.unwrap_or(0.0) * right_slope
    }

    /// Integrates `f`, which returns `[value, derivative]` at a point.
    pub fn integrate<F: Fn(f64) -> [f64; 2]>(&self, f: F) -> f64 {
        let values: Vec<f64> = self.nodes.iter().map(|&y| f(y)[0]).collect();
        let slope = match self.endpoint_derivative_weight {
            Some(_) => f(1.0)[1],
            None => 0.0,
        };
        self.weighted_sum(&values, slope)
    }

    /// Discrete inner product of two functions given as `[value, derivative]`
    /// providers. The derivative term expands `d/dy (u v)` at `+1` by the
    /// product rule.
    pub fn inner_product<U, V>(&self, u: U, v: V) -> f64
    where
        U: Fn(f64) -> [f64; 2],
        V: Fn(f64) -> [f64; 2],
    {
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, w)| w * u(y)[0] * v(y)[0])
            .sum();
        match self.endpoint_derivative_weight {
            Some(wd) => {
                let (ur, vr) = (u(1.0), v(1.0));
                s + wd * (ur[1] * vr[0] + ur[0] * vr[1])
            }
            None => s,
        }
    }
}

/// Gauss-Legendre rule with `n_degree + 1` nodes (the roots of
/// `L_{n_degree+1}`), exact through degree `2 n_degree + 1`.
pub fn gauss_legendre_rule(n_degree: usize) -> Result<QuadratureRule> {
    if n_degree < 1 {
        return Err(KdvError::InvalidArgument("gauss_legendre_rule needs N >= 1".into()));
    }
    let count = n_degree + 1;
    let (_, normalized) = golub_welsch(0.0, 0.0, count, EIGEN_ITERATION_BUDGET)?;
    let nodes = jacobi_roots(0.0, 0.0, count)?;
    let weights = normalized.into_iter().map(|w| 2.0 * w).collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        endpoint_derivative_weight: None,
        exactness_degree: 2 * n_degree + 1,
    })
}

/// The dispersive rule for polynomial degree `n_degree >= 4`.
///
/// Weights come from the square moment system that integrates
/// `L_0..=L_N` exactly on the fixed nodes; exactness is then verified up to
/// degree `2N - 2`.
pub fn dispersive_rule(n_degree: usize) -> Result<QuadratureRule> {
    if n_degree < 4 {
        return Err(KdvError::InvalidArgument("dispersive_rule needs N >= 4".into()));
    }
    let interior = jacobi_roots(2.0, 1.0, n_degree - 2)?;
    let mut nodes = Vec::with_capacity(n_degree);
    nodes.push(-1.0);
    nodes.extend_from_slice(&interior);
    nodes.push(1.0);

    let unknowns = n_degree + 1;
    let top = 2 * n_degree - 2;
    let tables: Vec<Vec<f64>> = nodes.iter().map(|&y| legendre_derivatives(top, y, 0).remove(0)).collect();
    let right_slopes = legendre_derivatives(top, 1.0, 1).remove(1);

    let mut a = DMatrix::<f64>::zeros(unknowns, unknowns);
    for n in 0..unknowns {
        for (l, t) in tables.iter().enumerate() {
            a[(n, l)] = t[n];
        }
        a[(n, n_degree)] = right_slopes[n];
    }
    let mut rhs = DVector::<f64>::zeros(unknowns);
    rhs[0] = 2.0;
    let lu = a.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| KdvError::QuadratureVerification(format!("singular moment system for N={n_degree}")))?;
    let weights: Vec<f64> = sol.iter().take(n_degree).copied().collect();
    let wd = sol[n_degree];

    for n in 0..=top {
        let mut s = wd * right_slopes[n];
        let mut scale = (wd * right_slopes[n]).abs();
        for (w, t) in weights.iter().zip(&tables) {
            s += w * t[n];
            scale += (w * t[n]).abs();
        }
        let exact = if n == 0 { 2.0 } else { 0.0 };
        if (s - exact).abs() > 1e-10 * scale.max(1.0) {
            return Err(KdvError::QuadratureVerification(format!(
                "dispersive rule N={n_degree} misses L_{n}: residual {:e}",
                s - exact
            )));
        }
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        endpoint_derivative_weight: Some(wd),
        exactness_degree: top,
    })
}

/// Both rules for one polynomial degree.
#[derive(Debug)]
pub struct RulePair {
    pub dispersive: QuadratureRule,
    pub advection: QuadratureRule,
}

/// Process-wide cache of quadrature rules keyed by degree.
pub fn rules_for(n_degree: usize) -> Result<Arc<RulePair>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<RulePair>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("rule cache poisoned").get(&n_degree) {
        return Ok(Arc::clone(r));
    }
    let pair = Arc::new(RulePair {
        dispersive: dispersive_rule(n_degree)?,
        advection: gauss_legendre_rule(n_degree)?,
    });
    cache
        .lock()
        .expect("rule cache poisoned")
        .entry(n_degree)
        .or_insert_with(|| Arc::clone(&pair));
    Ok(pair)
}
