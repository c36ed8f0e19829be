//! Galerkin matrices for the dispersive and advection half-steps and the
//! maps between the two coefficient spaces.
//!
//! All entries are formed with the discrete inner products of the two
//! quadrature rules on `[-1, 1]`. Physical derivatives are obtained by
//! multiplying reference derivatives by `scale = 2 / (b - a)`.

use nalgebra::DMatrix;

use crate::error::{KdvError, Result};
use crate::linalg::BandedMatrix;
use crate::orthopoly::{legendre_derivatives, QuadratureRule};
use crate::petrov_galerkin::BasisCoeffs;

/// Out-of-band entries must stay below this fraction of the largest entry.
pub const BAND_TOL: f64 = 1e-10;

/// `p_g` on the reference interval: `p0 + p1 y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearProfile {
    pub p0: f64,
    pub p1: f64,
}

impl LinearProfile {
    /// The line through `(-1, g_a)` and `(1, g_b)`.
    pub fn through_endpoints(g_a: f64, g_b: f64) -> Self {
        LinearProfile {
            p0: 0.5 * (g_a + g_b),
            p1: 0.5 * (g_b - g_a),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.p0 + self.p1 * y
    }
}

/// Legendre values and derivatives `[order][n]` at every node of a rule,
/// plus the same table at `y = 1` for rules with a derivative weight.
struct NodalTable {
    at_nodes: Vec<Vec<Vec<f64>>>,
    at_right: Vec<Vec<f64>>,
}

impl NodalTable {
    fn new(rule: &QuadratureRule, nmax: usize, max_order: usize) -> Self {
        NodalTable {
            at_nodes: rule.nodes.iter().map(|&y| legendre_derivatives(nmax, y, max_order)).collect(),
            at_right: legendre_derivatives(nmax, 1.0, max_order + 1),
        }
    }
}

fn combine(row: &[f64], j: usize, c: &[f64; 3]) -> f64 {
    row[j] + c[0] * row[j + 1] + c[1] * row[j + 2] + c[2] * row[j + 3]
}

/// Discrete inner product of node samples, with `(value, slope)` at +1
/// for the derivative term.
fn discrete_ip(rule: &QuadratureRule, u: &[f64], v: &[f64], u_right: [f64; 2], v_right: [f64; 2]) -> f64 {
    let s: f64 = rule.weights.iter().zip(u.iter().zip(v)).map(|(w, (a, b))| w * a * b).sum();
    match rule.endpoint_derivative_weight {
        Some(wd) => s + wd * (u_right[1] * v_right[0] + u_right[0] * v_right[1]),
        None => s,
    }
}

/// Samples of a function at the nodes and its `(value, slope)` at +1.
struct Sampled {
    nodes: Vec<f64>,
    right: [f64; 2],
}

/// Moves a dense matrix into band storage. Entries outside the band must
/// be negligible wherever `exact(k, j)` holds; outside that window the
/// quadrature is not exact and stray entries are discarded.
fn band_from_dense<E: Fn(usize, usize) -> bool>(
    name: &'static str,
    dense: &DMatrix<f64>,
    lower_bw: usize,
    upper_bw: usize,
    exact: E,
) -> Result<BandedMatrix> {
    let scale = dense.amax();
    for k in 0..dense.nrows() {
        for j in 0..dense.ncols() {
            let inside = j + lower_bw >= k && k + upper_bw >= j;
            if inside {
                continue;
            }
            let v = dense[(k, j)];
            if v.abs() > BAND_TOL * scale {
                if exact(k, j) {
                    return Err(KdvError::BandwidthViolation {
                        matrix: name,
                        row: k,
                        col: j,
                        value: v,
                    });
                }
                log::debug!("{name}: dropping inexact out-of-band entry ({k}, {j}) = {v:e}");
            }
        }
    }
    Ok(BandedMatrix::from_dense(dense, lower_bw, upper_bw))
}

fn trial_samples(basis: &BasisCoeffs, table: &NodalTable, order: usize) -> Vec<Sampled> {
    (0..basis.len())
        .map(|k| {
            let c = &basis.trial[k];
            Sampled {
                nodes: table.at_nodes.iter().map(|t| combine(&t[order], k, c)).collect(),
                right: [combine(&table.at_right[order], k, c), combine(&table.at_right[order + 1], k, c)],
            }
        })
        .collect()
}

fn dual_samples(basis: &BasisCoeffs, table: &NodalTable) -> Vec<Sampled> {
    (0..basis.len())
        .map(|j| {
            let c = &basis.dual[j];
            Sampled {
                nodes: table.at_nodes.iter().map(|t| combine(&t[0], j, c)).collect(),
                right: [combine(&table.at_right[0], j, c), combine(&table.at_right[1], j, c)],
            }
        })
        .collect()
}

fn check_rule(rule: &QuadratureRule, expected_len: usize, what: &str) -> Result<()> {
    if rule.len() != expected_len {
        return Err(KdvError::InvalidArgument(format!(
            "{what} rule has {} nodes, expected {expected_len}",
            rule.len()
        )));
    }
    Ok(())
}

/// `M^d_{kj} = <phi_k, psi_j>^d`, 7-diagonal.
pub fn mass_dispersive(n_degree: usize, basis: &BasisCoeffs, rule: &QuadratureRule) -> Result<BandedMatrix> {
    check_rule(rule, n_degree, "dispersive")?;
    let table = NodalTable::new(rule, n_degree, 0);
    let phi = trial_samples(basis, &table, 0);
    let psi = dual_samples(basis, &table);
    let n = basis.len();
    let dense = DMatrix::from_fn(n, n, |k, j| discrete_ip(rule, &phi[k].nodes, &psi[j].nodes, phi[k].right, psi[j].right));
    band_from_dense("M^d", &dense, 3, 3, |k, j| k + j + 6 <= rule.exactness_degree)
}

/// `S^d_{kj} = <p_g phi_k' + phi_k''', psi_j>^d` with physical derivatives,
/// 7-diagonal.
pub fn stiffness_dispersive(
    n_degree: usize,
    basis: &BasisCoeffs,
    rule: &QuadratureRule,
    p_g: LinearProfile,
    scale: f64,
) -> Result<BandedMatrix> {
    check_rule(rule, n_degree, "dispersive")?;
    let table = NodalTable::new(rule, n_degree, 3);
    let s3 = scale * scale * scale;
    let d1 = trial_samples(basis, &table, 1);
    let d2 = trial_samples(basis, &table, 2);
    let d3 = trial_samples(basis, &table, 3);
    let psi = dual_samples(basis, &table);
    let n = basis.len();
    let p_nodes: Vec<f64> = rule.nodes.iter().map(|&y| p_g.eval(y)).collect();
    let q: Vec<Sampled> = (0..n)
        .map(|k| Sampled {
            nodes: (0..rule.len())
                .map(|i| scale * p_nodes[i] * d1[k].nodes[i] + s3 * d3[k].nodes[i])
                .collect(),
            right: [
                scale * p_g.eval(1.0) * d1[k].right[0] + s3 * d3[k].right[0],
                scale * (p_g.p1 * d1[k].right[0] + p_g.eval(1.0) * d2[k].right[0]) + s3 * d3[k].right[1],
            ],
        })
        .collect();
    let dense = DMatrix::from_fn(n, n, |k, j| discrete_ip(rule, &q[k].nodes, &psi[j].nodes, q[k].right, psi[j].right));
    band_from_dense("S^d", &dense, 3, 3, |k, j| k + j + 6 <= rule.exactness_degree)
}

/// `M^a = diag(2 / (2k + 1))`, `k = 0..=N`.
pub fn mass_advection(n_degree: usize) -> BandedMatrix {
    let mut m = BandedMatrix::zeros(n_degree + 1, n_degree + 1, 0, 0);
    for k in 0..=n_degree {
        m.set(k, k, 2.0 / (2 * k + 1) as f64);
    }
    m
}

/// How the caller describes `g*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GStarKind {
    /// Polynomial of the given degree; `S^a` is then banded.
    Polynomial(usize),
    General,
}

/// Advection stiffness in the storage its structure allows.
#[derive(Debug, Clone, PartialEq)]
pub enum AdvectionStiffness {
    Banded(BandedMatrix),
    Dense(DMatrix<f64>),
}

impl AdvectionStiffness {
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            AdvectionStiffness::Banded(b) => b.to_dense(),
            AdvectionStiffness::Dense(d) => d.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            AdvectionStiffness::Banded(b) => b.max_abs(),
            AdvectionStiffness::Dense(d) => d.amax(),
        }
    }
}

/// `S^a_{kj} = <g* L_k', L_j>^a` with the physical derivative.
/// `g_star` is evaluated at reference points.
pub fn stiffness_advection<G: Fn(f64) -> f64>(
    n_degree: usize,
    g_star: G,
    kind: GStarKind,
    rule: &QuadratureRule,
    scale: f64,
) -> Result<AdvectionStiffness> {
    check_rule(rule, n_degree + 1, "advection")?;
    let table = NodalTable::new(rule, n_degree, 1);
    let g: Vec<f64> = rule.nodes.iter().map(|&y| scale * g_star(y)).collect();
    let n = n_degree + 1;
    let dense = DMatrix::from_fn(n, n, |k, j| {
        table
            .at_nodes
            .iter()
            .enumerate()
            .map(|(i, t)| rule.weights[i] * g[i] * t[1][k] * t[0][j])
            .sum()
    });
    match kind {
        GStarKind::Polynomial(deg) => {
            let bw = deg.min(n_degree);
            let exact = |k: usize, j: usize| deg + k + j <= rule.exactness_degree + 1;
            Ok(AdvectionStiffness::Banded(band_from_dense("S^a", &dense, bw, bw, exact)?))
        }
        GStarKind::General => Ok(AdvectionStiffness::Dense(dense)),
    }
}

/// `M^{da}_{kj} = <phi_k, L_j>^a` and `M^{ad}_{kj} = <L_k, psi_j>^d`.
pub fn transition_matrices(
    n_degree: usize,
    basis: &BasisCoeffs,
    dispersive: &QuadratureRule,
    advection: &QuadratureRule,
) -> Result<(BandedMatrix, BandedMatrix)> {
    check_rule(dispersive, n_degree, "dispersive")?;
    check_rule(advection, n_degree + 1, "advection")?;
    let nd = basis.len();
    let na = n_degree + 1;

    let ta = NodalTable::new(advection, n_degree, 0);
    let phi = trial_samples(basis, &ta, 0);
    let da = DMatrix::from_fn(nd, na, |k, j| {
        phi[k]
            .nodes
            .iter()
            .zip(&ta.at_nodes)
            .zip(&advection.weights)
            .map(|((p, t), w)| w * p * t[0][j])
            .sum()
    });
    let m_da = band_from_dense("M^da", &da, 0, 3, |k, j| k + j + 3 <= advection.exactness_degree)?;

    let td = NodalTable::new(dispersive, n_degree, 0);
    let psi = dual_samples(basis, &td);
    let ad = DMatrix::from_fn(na, nd, |k, j| {
        let lk: Vec<f64> = td.at_nodes.iter().map(|t| t[0][k]).collect();
        let right = [td.at_right[0][k], td.at_right[1][k]];
        discrete_ip(dispersive, &lk, &psi[j].nodes, right, psi[j].right)
    });
    // The discrete inner product is not exact for (N, N - 4), and that entry
    // has to stay: dropping it makes the dual-basis load inconsistent with
    // M^d and spoils accuracy near the boundary. Everything else is 4-diagonal.
    let exact = |k: usize, j: usize| k + j + 3 <= dispersive.exactness_degree;
    let scale = ad.amax();
    for j in 0..nd.saturating_sub(4) {
        let v = ad[(j + 4, j)];
        if exact(j + 4, j) && v.abs() > BAND_TOL * scale {
            return Err(KdvError::BandwidthViolation {
                matrix: "M^ad",
                row: j + 4,
                col: j,
                value: v,
            });
        }
    }
    let mut m_ad = band_from_dense("M^ad", &ad, 4, 0, exact)?;
    for j in 0..nd.saturating_sub(4) {
        if j + 4 < n_degree {
            m_ad.set(j + 4, j, 0.0);
        }
    }
    Ok((m_da, m_ad))
}

/// `F_{kj} = <L_k', L_j - L_{j+2}>^a` and `G_{kj} = <L_k, L_j - L_{j+2}>^a`
/// on the reference interval. `F` has a single subdiagonal; `G` has the
/// diagonal and the second subdiagonal.
pub fn differentiation_pair(n_degree: usize, rule: &QuadratureRule) -> Result<(BandedMatrix, BandedMatrix)> {
    check_rule(rule, n_degree + 1, "advection")?;
    let table = NodalTable::new(rule, n_degree + 2, 1);
    let n = n_degree + 1;
    let ip = |order: usize, k: usize, j: usize| -> f64 {
        table
            .at_nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w * t[order][k] * (t[0][j] - t[0][j + 2]))
            .sum()
    };
    let f = DMatrix::from_fn(n, n, |k, j| ip(1, k, j));
    let g = DMatrix::from_fn(n, n, |k, j| ip(0, k, j));
    let always = |_: usize, _: usize| true;
    Ok((band_from_dense("F", &f, 1, 0, always)?, band_from_dense("G", &g, 2, 0, always)?))
}
