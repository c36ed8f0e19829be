//! Dual Petrov-Galerkin basis for the dispersive half-steps and the
//! degree-two lift that carries the inhomogeneous boundary data.
//!
//! Everything here lives on the reference interval `[-1, 1]`. Boundary
//! data given on a physical interval is first rescaled with
//! [`BoundaryCoefficients::mapped`].

use crate::error::{KdvError, Result};
use crate::linalg::solve3;
use crate::orthopoly::{legendre_derivatives, legendre_endpoint};
use crate::ztbc::BoundaryKernels;

/// Affine map between the physical interval `[a, b]` and `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMap {
    pub a: f64,
    pub b: f64,
}

impl IntervalMap {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(KdvError::InvalidArgument(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        Ok(IntervalMap { a, b })
    }

    /// `dy/dx = 2 / (b - a)`.
    pub fn scale(&self) -> f64 {
        2.0 / (self.b - self.a)
    }

    pub fn to_physical(&self, y: f64) -> f64 {
        0.5 * ((self.b - self.a) * y + (self.a + self.b))
    }

    pub fn to_reference(&self, x: f64) -> f64 {
        (2.0 * x - (self.a + self.b)) / (self.b - self.a)
    }
}

/// Leading kernel values and exterior advection constants entering the
/// boundary relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCoefficients {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub y4: f64,
    pub g_a: f64,
    pub g_b: f64,
}

impl BoundaryCoefficients {
    pub fn from_kernels(k: &BoundaryKernels) -> Self {
        let [y1, y2, y3, y4] = k.leading();
        BoundaryCoefficients {
            y1,
            y2,
            y3,
            y4,
            g_a: k.g_a,
            g_b: k.g_b,
        }
    }

    /// Values as seen on `[-1, 1]` when the physical interval has
    /// `dy/dx = scale`: first-order quantities divide by `scale`,
    /// second-order ones by `scale^2`.
    pub fn mapped(&self, scale: f64) -> Self {
        let s2 = scale * scale;
        BoundaryCoefficients {
            y1: self.y1 / scale,
            y2: self.y2 / s2,
            y3: self.y3 / scale,
            y4: self.y4 / s2,
            g_a: self.g_a / s2,
            g_b: self.g_b / s2,
        }
    }

    /// Trial-space functionals on a function given by its endpoint jets
    /// `[u, u', u'']` at -1 and +1.
    pub fn trial_functionals(&self, left: [f64; 3], right: [f64; 3]) -> [f64; 3] {
        [
            left[2] + self.y1 * left[1] + (self.g_a + self.y2) * left[0],
            right[1] - self.y3 * right[0],
            right[2] - self.y4 * right[0],
        ]
    }

    /// Dual-space functionals.
    pub fn dual_functionals(&self, left: [f64; 3], right: [f64; 3]) -> [f64; 3] {
        [
            right[2] - self.y3 * right[1] + (self.g_b + self.y4) * right[0],
            left[1] + self.y1 * left[0],
            left[2] - self.y2 * left[0],
        ]
    }
}

fn legendre_jet(n: usize, right: bool) -> [f64; 3] {
    [
        legendre_endpoint(n, 0, right),
        legendre_endpoint(n, 1, right),
        legendre_endpoint(n, 2, right),
    ]
}

#[derive(Clone, Copy)]
enum Space {
    Trial,
    Dual,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::Trial => "trial",
            Space::Dual => "dual",
        }
    }

    fn apply(self, bc: &BoundaryCoefficients, n: usize) -> [f64; 3] {
        let (l, r) = (legendre_jet(n, false), legendre_jet(n, true));
        match self {
            Space::Trial => bc.trial_functionals(l, r),
            Space::Dual => bc.dual_functionals(l, r),
        }
    }
}

/// Solves for `(c1, c2, c3)` so that `L_j + c1 L_{j+1} + c2 L_{j+2} + c3 L_{j+3}`
/// is annihilated by the three functionals, then checks the residual.
fn basis_coeffs(j: usize, bc: &BoundaryCoefficients, space: Space) -> Result<[f64; 3]> {
    let f: Vec<[f64; 3]> = (0..4).map(|i| space.apply(bc, j + i)).collect();
    let a = [
        [f[1][0], f[2][0], f[3][0]],
        [f[1][1], f[2][1], f[3][1]],
        [f[1][2], f[2][2], f[3][2]],
    ];
    let rhs = [-f[0][0], -f[0][1], -f[0][2]];
    let singular = || KdvError::SingularBasisSystem {
        index: j,
        space: space.name(),
    };
    let c = solve3(a, rhs).ok_or_else(singular)?;
    for row in 0..3 {
        let terms = [f[0][row], c[0] * f[1][row], c[1] * f[2][row], c[2] * f[3][row]];
        let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let residual: f64 = terms.iter().sum();
        if residual.abs() > 1e-9 * scale {
            return Err(singular());
        }
    }
    Ok(c)
}

/// `(alpha_j, beta_j, gamma_j)` of the trial function with index `j`.
pub fn trial_coeffs(j: usize, bc: &BoundaryCoefficients) -> Result<[f64; 3]> {
    basis_coeffs(j, bc, Space::Trial)
}

/// `(alpha*_j, beta*_j, gamma*_j)` of the dual function with index `j`.
pub fn dual_coeffs(j: usize, bc: &BoundaryCoefficients) -> Result<[f64; 3]> {
    basis_coeffs(j, bc, Space::Dual)
}

/// Coefficient tables for `j = 0..=N-3`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisCoeffs {
    pub trial: Vec<[f64; 3]>,
    pub dual: Vec<[f64; 3]>,
    /// Reference-interval boundary data the tables were built from.
    pub boundary: BoundaryCoefficients,
}

impl BasisCoeffs {
    /// `bc` must already be mapped to the reference interval.
    pub fn new(n_degree: usize, bc: BoundaryCoefficients) -> Result<Self> {
        if n_degree < 4 {
            return Err(KdvError::InvalidArgument(format!("N must be at least 4, got {n_degree}")));
        }
        let count = n_degree - 2;
        let trial = (0..count).map(|j| trial_coeffs(j, &bc)).collect::<Result<_>>()?;
        let dual = (0..count).map(|j| dual_coeffs(j, &bc)).collect::<Result<_>>()?;
        Ok(BasisCoeffs {
            trial,
            dual,
            boundary: bc,
        })
    }

    /// Number of basis functions, `N - 2`.
    pub fn len(&self) -> usize {
        self.trial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trial.is_empty()
    }
}

/// `L_j + c1 L_{j+1} + c2 L_{j+2} + c3 L_{j+3}` or one of its first three
/// derivatives at `y`.
pub fn eval_basis(j: usize, coeffs: &[f64; 3], y: f64, derivative_order: usize) -> f64 {
    assert!(derivative_order <= 3, "derivative order {derivative_order} > 3");
    let table = legendre_derivatives(j + 3, y, derivative_order);
    let row = &table[derivative_order];
    row[j] + coeffs[0] * row[j + 1] + coeffs[1] * row[j + 2] + coeffs[2] * row[j + 3]
}

/// Degree-two polynomial with prescribed trial functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftPolynomial {
    /// Physical monomial coefficients: `c0 + c1 x + c2 x^2`.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Reference monomial coefficients in `y`.
    pub reference: [f64; 3],
    /// Legendre coefficients on the reference interval.
    pub legendre: [f64; 3],
}

impl LiftPolynomial {
    pub fn zero() -> Self {
        LiftPolynomial {
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
            reference: [0.0; 3],
            legendre: [0.0; 3],
        }
    }

    fn from_reference(d: [f64; 3], map: &IntervalMap) -> Self {
        // y = s (x - mid)
        let s = map.scale();
        let mid = 0.5 * (map.a + map.b);
        LiftPolynomial {
            c0: d[0] - d[1] * s * mid + d[2] * s * s * mid * mid,
            c1: d[1] * s - 2.0 * d[2] * s * s * mid,
            c2: d[2] * s * s,
            reference: d,
            legendre: [d[0] + d[2] / 3.0, d[1], 2.0 * d[2] / 3.0],
        }
    }

    /// Value or `y`-derivative at a reference point.
    pub fn eval_reference(&self, y: f64, derivative_order: usize) -> f64 {
        let [d0, d1, d2] = self.reference;
        match derivative_order {
            0 => d0 + y * (d1 + y * d2),
            1 => d1 + 2.0 * d2 * y,
            2 => 2.0 * d2,
            _ => 0.0,
        }
    }

    pub fn eval_physical(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + x * self.c2)
    }

    pub fn is_zero(&self) -> bool {
        self.reference == [0.0; 3]
    }
}

/// Lift `p_2` whose physical trial functionals equal `(h1, h2, h3)`.
/// `bc` holds physical (unmapped) boundary data.
pub fn lift_polynomial(h: [f64; 3], bc: &BoundaryCoefficients, map: &IntervalMap) -> Result<LiftPolynomial> {
    if h == [0.0; 3] {
        return Ok(LiftPolynomial::zero());
    }
    let s = map.scale();
    let rbc = bc.mapped(s);
    // Reference-coordinate right-hand side.
    let target = [h[0] / (s * s), h[1] / s, h[2] / (s * s)];
    // Columns: functionals of 1, y, y^2.
    let monomial_jets = [
        ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ([-1.0, 1.0, 0.0], [1.0, 1.0, 0.0]),
        ([1.0, -2.0, 2.0], [1.0, 2.0, 2.0]),
    ];
    let cols: Vec<[f64; 3]> = monomial_jets
        .iter()
        .map(|(l, r)| rbc.trial_functionals(*l, *r))
        .collect();
    let a = [
        [cols[0][0], cols[1][0], cols[2][0]],
        [cols[0][1], cols[1][1], cols[2][1]],
        [cols[0][2], cols[1][2], cols[2][2]],
    ];
    let d = solve3(a, target).ok_or(KdvError::SingularLiftSystem)?;
    for i in 0..3 {
        let terms = [a[i][0] * d[0], a[i][1] * d[1], a[i][2] * d[2], target[i]];
        let scale = terms.iter().map(|t| t.abs()).fold(target[i].abs().max(1e-300), f64::max);
        if (terms[0] + terms[1] + terms[2] - target[i]).abs() > 1e-10 * scale {
            return Err(KdvError::SingularLiftSystem);
        }
    }
    Ok(LiftPolynomial::from_reference(d, map))
}

/// Physical trial functionals of a lift polynomial.
pub fn lift_residual(lift: &LiftPolynomial, bc: &BoundaryCoefficients, map: &IntervalMap) -> [f64; 3] {
    let s = map.scale();
    let jet = |y: f64| {
        [
            lift.eval_reference(y, 0),
            s * lift.eval_reference(y, 1),
            s * s * lift.eval_reference(y, 2),
        ]
    };
    bc.trial_functionals(jet(-1.0), jet(1.0))
}
