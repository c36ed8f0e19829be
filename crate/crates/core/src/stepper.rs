//! Time loop: Peaceman-Rachford stages with the modified splitting,
//! boundary history, lift updates and reconstruction.
//!
//! One step from `u^m` to `u^{m+1}`:
//! 1. explicit dispersive half-step in the trial basis,
//! 2. transfer to Legendre coefficients (adding the lift),
//! 3. Crank-Nicolson solve for `u_t + g* u_x = 0`,
//! 4. load against the dual basis,
//! 5. new lift from the boundary history, implicit dispersive half-step,
//! 6. boundary traces appended to the history.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{
    mass_advection, mass_dispersive, stiffness_advection, stiffness_dispersive, transition_matrices,
    AdvectionStiffness, GStarKind, LinearProfile,
};
use crate::error::{KdvError, Result, Stage};
use crate::linalg::{BandedLu, BandedMatrix, DenseLu};
use crate::orthopoly::{legendre_derivatives, legendre_endpoint, rules_for};
use crate::petrov_galerkin::{eval_basis, lift_polynomial, BasisCoeffs, BoundaryCoefficients, IntervalMap, LiftPolynomial};
use crate::transforms::TransformPlan;
use crate::ztbc::{compute_kernels, history_convolution, BoundaryKernels};

/// Initial data must vanish at the boundary to this accuracy.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Interval, polynomial degree, step count and final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub m: usize,
    pub t_final: f64,
}

impl Discretization {
    pub fn new(a: f64, b: f64, n: usize, m: usize, t_final: f64) -> Result<Self> {
        IntervalMap::new(a, b)?;
        if n < 8 {
            return Err(KdvError::InvalidArgument(format!("N must be at least 8, got {n}")));
        }
        if m < 1 {
            return Err(KdvError::InvalidArgument("M must be at least 1".into()));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(KdvError::InvalidArgument(format!("T must be positive, got {t_final}")));
        }
        Ok(Discretization { a, b, n, m, t_final })
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.m as f64
    }

    pub fn map(&self) -> IntervalMap {
        IntervalMap { a: self.a, b: self.b }
    }
}

/// Declared structure of the advection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionForm {
    Constant,
    /// Polynomial in `x` of the given degree.
    Polynomial(usize),
    General,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `g(x)` split into its endpoint line `p_g` and the remainder `g* = g - p_g`.
#[derive(Clone)]
pub struct AdvectionField {
    g: ScalarFn,
    dg: Option<ScalarFn>,
    pub a: f64,
    pub b: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub form: AdvectionForm,
}

impl std::fmt::Debug for AdvectionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdvectionField")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("g_a", &self.g_a)
            .field("g_b", &self.g_b)
            .field("form", &self.form)
            .finish()
    }
}

impl AdvectionField {
    pub fn constant(c: f64, a: f64, b: f64) -> Self {
        AdvectionField {
            g: Arc::new(move |_| c),
            dg: Some(Arc::new(|_| 0.0)),
            a,
            b,
            g_a: c,
            g_b: c,
            form: AdvectionForm::Constant,
        }
    }

    /// `g(x) = sum_i coeffs[i] x^i`.
    pub fn polynomial(coeffs: &[f64], a: f64, b: f64) -> Self {
        let mut c = coeffs.to_vec();
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        if c.len() == 1 {
            return AdvectionField::constant(c[0], a, b);
        }
        let degree = c.len() - 1;
        let dc: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
        let horner = |c: Vec<f64>| move |x: f64| c.iter().rev().fold(0.0, |acc, v| acc * x + v);
        let g = horner(c);
        let (g_a, g_b) = (g(a), g(b));
        AdvectionField {
            g: Arc::new(g),
            dg: Some(Arc::new(horner(dc))),
            a,
            b,
            g_a,
            g_b,
            form: AdvectionForm::Polynomial(degree),
        }
    }

    /// `e^{-(x+6)^2} + e^{-x^2} + e^{-(x-6)^2} - 1/2`.
    pub fn gauss3(a: f64, b: f64) -> Self {
        let g = |x: f64| (-(x + 6.0).powi(2)).exp() + (-x * x).exp() + (-(x - 6.0).powi(2)).exp() - 0.5;
        let dg = |x: f64| {
            -2.0 * (x + 6.0) * (-(x + 6.0).powi(2)).exp() - 2.0 * x * (-x * x).exp()
                - 2.0 * (x - 6.0) * (-(x - 6.0).powi(2)).exp()
        };
        AdvectionField::general(g, Some(dg), a, b)
    }

    pub fn general<G, D>(g: G, dg: Option<D>, a: f64, b: f64) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (g_a, g_b) = (g(a), g(b));
        AdvectionField {
            g: Arc::new(g),
            dg: dg.map(|d| Arc::new(d) as ScalarFn),
            a,
            b,
            g_a,
            g_b,
            form: AdvectionForm::General,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn p_g(&self, x: f64) -> f64 {
        self.g_a + (self.g_b - self.g_a) * (x - self.a) / (self.b - self.a)
    }

    pub fn g_star(&self, x: f64) -> f64 {
        match self.form {
            AdvectionForm::Constant => 0.0,
            _ => self.eval(x) - self.p_g(x),
        }
    }

    /// `d g*/dx`, analytic when a derivative was supplied.
    pub fn d_g_star(&self, x: f64) -> f64 {
        let slope = (self.g_b - self.g_a) / (self.b - self.a);
        match &self.dg {
            Some(d) => d(x) - slope,
            None => {
                let h = 1e-6 * (self.b - self.a);
                (self.g_star(x + h) - self.g_star(x - h)) / (2.0 * h)
            }
        }
    }

    /// `sup |d g*/dx|` sampled on `10 N` equispaced points.
    pub fn sup_d_g_star(&self, n: usize) -> f64 {
        let count = (10 * n).max(2);
        (0..count)
            .map(|i| {
                let x = self.a + (self.b - self.a) * i as f64 / (count - 1) as f64;
                self.d_g_star(x).abs()
            })
            .fold(0.0, f64::max)
    }

    /// True when `g*` vanishes identically, so the advection stage is skipped.
    pub fn g_star_vanishes(&self) -> bool {
        matches!(self.form, AdvectionForm::Constant | AdvectionForm::Polynomial(0..=1))
    }
}

/// Solution at step `m` plus the boundary history.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub m: usize,
    /// Trial-basis coefficients, length `N - 2`.
    pub u_h: Vec<f64>,
    pub lift: LiftPolynomial,
    /// `u(a)` for steps `0..=m`.
    pub u_a: Vec<f64>,
    /// `du/dx(a)` for steps `0..=m`.
    pub ux_a: Vec<f64>,
    /// `u(b)` for steps `0..=m`.
    pub u_b: Vec<f64>,
}

enum AdvectionSolve {
    Identity,
    Banded { rhs: BandedMatrix, lu: BandedLu },
    Dense { rhs: DMatrix<f64>, lu: DenseLu },
}

/// Precomputed operators for one `(discretization, field)` pair.
pub struct Solver {
    disc: Discretization,
    field: AdvectionField,
    kernels: Arc<BoundaryKernels>,
    map: IntervalMap,
    physical_bc: BoundaryCoefficients,
    basis: BasisCoeffs,
    plan: TransformPlan,
    mass_t: BandedLu,
    explicit: BandedMatrix,
    implicit_t: BandedLu,
    m_da: BandedMatrix,
    m_ad: BandedMatrix,
    advection: AdvectionSolve,
    /// `<s p_g d/dy y^i, psi_j>^d` for `j, i <= 2`.
    lift_advection: [[f64; 3]; 3],
    /// `<y^i, psi_j>^d` for `j, i <= 2`.
    lift_mass: [[f64; 3]; 3],
    stability_ratio: f64,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("disc", &self.disc)
            .field("field", &self.field)
            .field("advection_path", &self.advection_path())
            .finish()
    }
}

impl Solver {
    /// Builds kernels and operators.
    pub fn new(disc: Discretization, field: AdvectionField) -> Result<Self> {
        let kernels = compute_kernels(field.g_a, field.g_b, disc.tau(), disc.m).map_err(|e| e.at(Stage::Setup))?;
        Solver::with_kernels(disc, field, Arc::new(kernels))
    }

    /// Reuses precomputed kernels (they depend on `tau`, `M`, `g_a`, `g_b` only).
    pub fn with_kernels(disc: Discretization, field: AdvectionField, kernels: Arc<BoundaryKernels>) -> Result<Self> {
        Solver::build(disc, field, kernels).map_err(|e| e.at(Stage::Setup))
    }

    fn build(disc: Discretization, field: AdvectionField, kernels: Arc<BoundaryKernels>) -> Result<Self> {
        let tau = disc.tau();
        if kernels.steps() < disc.m {
            return Err(KdvError::LengthMismatch {
                expected: disc.m + 1,
                actual: kernels.y1.len(),
            });
        }
        if (kernels.tau - tau).abs() > 1e-14 * tau || kernels.g_a != field.g_a || kernels.g_b != field.g_b {
            return Err(KdvError::InvalidArgument(format!(
                "kernels were computed for tau={}, g_a={}, g_b={}; run needs tau={tau}, g_a={}, g_b={}",
                kernels.tau, kernels.g_a, kernels.g_b, field.g_a, field.g_b
            )));
        }
        if field.a != disc.a || field.b != disc.b {
            return Err(KdvError::InvalidArgument("advection field and discretization use different intervals".into()));
        }
        let n = disc.n;
        let map = disc.map();
        let s = map.scale();
        let physical_bc = BoundaryCoefficients::from_kernels(&kernels);
        let basis = BasisCoeffs::new(n, physical_bc.mapped(s))?;
        let rules = rules_for(n)?;
        let plan = TransformPlan::new(n, &rules.advection)?;

        let profile = LinearProfile::through_endpoints(field.g_a, field.g_b);
        let md = mass_dispersive(n, &basis, &rules.dispersive)?;
        let sd = stiffness_dispersive(n, &basis, &rules.dispersive, profile, s)?;
        let mass_t = BandedLu::factor(&md.transpose())?;
        let explicit = md.add_scaled(-0.5 * tau, &sd);
        let implicit_t = BandedLu::factor(&md.add_scaled(0.5 * tau, &sd).transpose())?;
        let (m_da, m_ad) = transition_matrices(n, &basis, &rules.dispersive, &rules.advection)?;

        let advection = if field.g_star_vanishes() {
            AdvectionSolve::Identity
        } else {
            let kind = match field.form {
                AdvectionForm::Polynomial(d) => GStarKind::Polynomial(d),
                _ => GStarKind::General,
            };
            let gs = |y: f64| field.g_star(map.to_physical(y));
            let ma = mass_advection(n);
            match stiffness_advection(n, gs, kind, &rules.advection, s)? {
                AdvectionStiffness::Banded(sa) => AdvectionSolve::Banded {
                    rhs: ma.add_scaled(-0.5 * tau, &sa),
                    lu: BandedLu::factor(&ma.add_scaled(0.5 * tau, &sa).transpose())?,
                },
                AdvectionStiffness::Dense(sa) => {
                    let mad = ma.to_dense();
                    AdvectionSolve::Dense {
                        rhs: &mad - &sa * (0.5 * tau),
                        lu: DenseLu::factor((&mad + &sa * (0.5 * tau)).transpose())?,
                    }
                }
            }
        };

        let mut lift_advection = [[0.0; 3]; 3];
        let mut lift_mass = [[0.0; 3]; 3];
        for j in 0..3 {
            let c = basis.dual[j];
            let psi = |y: f64| [eval_basis(j, &c, y, 0), eval_basis(j, &c, y, 1)];
            for i in 0..3 {
                let mono = |y: f64| match i {
                    0 => [1.0, 0.0],
                    1 => [y, 1.0],
                    _ => [y * y, 2.0 * y],
                };
                // s p_g(y) d/dy y^i and its y-derivative.
                let adv = |y: f64| {
                    let d = mono(y)[1];
                    let dd = if i == 2 { 2.0 } else { 0.0 };
                    [s * profile.eval(y) * d, s * (profile.p1 * d + profile.eval(y) * dd)]
                };
                lift_mass[j][i] = rules.dispersive.inner_product(mono, psi);
                lift_advection[j][i] = rules.dispersive.inner_product(adv, psi);
            }
        }

        let stability_ratio = tau * field.sup_d_g_star(n) / 4.0;
        if stability_ratio >= 1.0 {
            log::warn!(
                "stability guard violated: tau * sup|dg*/dx| / 4 = {stability_ratio:.4} >= 1 (tau = {tau:e})"
            );
        }

        Ok(Solver {
            disc,
            field,
            kernels,
            map,
            physical_bc,
            basis,
            plan,
            mass_t,
            explicit,
            implicit_t,
            m_da,
            m_ad,
            advection,
            lift_advection,
            lift_mass,
            stability_ratio,
        })
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn field(&self) -> &AdvectionField {
        &self.field
    }

    pub fn kernels(&self) -> &Arc<BoundaryKernels> {
        &self.kernels
    }

    pub fn basis(&self) -> &BasisCoeffs {
        &self.basis
    }

    /// `tau * sup |dg*/dx| / 4`; the scheme is provably stable below 1.
    pub fn stability_ratio(&self) -> f64 {
        self.stability_ratio
    }

    pub fn advection_path(&self) -> &'static str {
        match self.advection {
            AdvectionSolve::Identity => "identity",
            AdvectionSolve::Banded { .. } => "banded",
            AdvectionSolve::Dense { .. } => "dense",
        }
    }

    /// Projects `u0` onto the trial space and seeds the history.
    pub fn initialize(&self, u0: &dyn Fn(f64) -> f64) -> Result<SpectralState> {
        let (left, right) = (u0(self.disc.a), u0(self.disc.b));
        if left.abs() > SUPPORT_TOL || right.abs() > SUPPORT_TOL {
            return Err(KdvError::SupportViolation {
                left: left.abs(),
                right: right.abs(),
            });
        }
        let at = |e: KdvError| e.at(Stage::Initialize);
        let samples: Vec<f64> = self.plan.nodes().iter().map(|&y| u0(self.map.to_physical(y))).collect();
        let legendre = self.plan.idlt(&samples).map_err(at)?;
        let load = self.m_ad.transpose_matvec(&legendre);
        let u_h = self.mass_t.solve(&load).map_err(at)?;
        let mut state = SpectralState {
            m: 0,
            u_h,
            lift: LiftPolynomial::zero(),
            u_a: Vec::with_capacity(self.disc.m + 1),
            ux_a: Vec::with_capacity(self.disc.m + 1),
            u_b: Vec::with_capacity(self.disc.m + 1),
        };
        self.push_traces(&mut state);
        Ok(state)
    }

    fn lift_load(table: &[[f64; 3]; 3], lift: &LiftPolynomial, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (j, row) in table.iter().enumerate().take(len) {
            out[j] = row.iter().zip(&lift.reference).map(|(q, d)| q * d).sum();
        }
        out
    }

    /// Advances `state` by one step in place.
    pub fn step(&self, state: &mut SpectralState) -> Result<()> {
        if state.m >= self.disc.m {
            return Err(KdvError::InvalidArgument(format!(
                "state is already at the final step {}",
                self.disc.m
            )));
        }
        let half = 0.5 * self.disc.tau();
        let nd = self.basis.len();
        let na = self.disc.n + 1;

        // (i) explicit dispersive half-step
        let mut rhs = self.explicit.transpose_matvec(&state.u_h);
        let p_tilde = Solver::lift_load(&self.lift_advection, &state.lift, nd);
        for (r, p) in rhs.iter_mut().zip(&p_tilde) {
            *r -= half * p;
        }
        let u_star_h = self.mass_t.solve(&rhs).map_err(|e| e.at(Stage::ExplicitDispersive))?;

        // (ii) to Legendre coefficients, lift included
        let mut u_star_a = self.m_da.transpose_matvec(&u_star_h);
        for (j, v) in u_star_a.iter_mut().enumerate() {
            *v *= (2 * j + 1) as f64 / 2.0;
        }
        for (v, p) in u_star_a.iter_mut().zip(&state.lift.legendre) {
            *v += p;
        }
        debug_assert_eq!(u_star_a.len(), na);

        // (iii) Crank-Nicolson advection
        let u_half_a = match &self.advection {
            AdvectionSolve::Identity => u_star_a,
            AdvectionSolve::Banded { rhs, lu } => lu
                .solve(&rhs.transpose_matvec(&u_star_a))
                .map_err(|e| e.at(Stage::Advection))?,
            AdvectionSolve::Dense { rhs, lu } => {
                let r = rhs.tr_mul(&DVector::from_column_slice(&u_star_a));
                lu.solve(r.as_slice()).map_err(|e| e.at(Stage::Advection))?
            }
        };

        // (iv) dual-basis load of u^{m+1/2}
        let load = self.m_ad.transpose_matvec(&u_half_a);

        // (v) new lift and implicit dispersive half-step
        let m = state.m;
        let k = &self.kernels;
        let conv = |kernel: &[f64], trace: &[f64]| history_convolution(kernel, trace, m);
        let h = (|| -> Result<[f64; 3]> {
            Ok([
                -(conv(&k.y1, &state.ux_a)? + conv(&k.y2, &state.u_a)?),
                conv(&k.y3, &state.u_b)?,
                conv(&k.y4, &state.u_b)?,
            ])
        })()
        .map_err(|e| e.at(Stage::ImplicitDispersive))?;
        let lift = lift_polynomial(h, &self.physical_bc, &self.map).map_err(|e| e.at(Stage::ImplicitDispersive))?;
        let p2 = Solver::lift_load(&self.lift_mass, &lift, nd);
        let p_tilde = Solver::lift_load(&self.lift_advection, &lift, nd);
        let rhs: Vec<f64> = (0..nd).map(|j| load[j] - p2[j] - half * p_tilde[j]).collect();
        state.u_h = self.implicit_t.solve(&rhs).map_err(|e| e.at(Stage::ImplicitDispersive))?;
        state.lift = lift;
        state.m += 1;

        // (vi) traces
        self.push_traces(state);
        Ok(())
    }

    fn push_traces(&self, state: &mut SpectralState) {
        let s = self.map.scale();
        let mut ua = state.lift.eval_reference(-1.0, 0);
        let mut uxa = state.lift.eval_reference(-1.0, 1);
        let mut ub = state.lift.eval_reference(1.0, 0);
        for (k, (u, c)) in state.u_h.iter().zip(&self.basis.trial).enumerate() {
            let end = |order: usize, right: bool| {
                legendre_endpoint(k, order, right)
                    + c[0] * legendre_endpoint(k + 1, order, right)
                    + c[1] * legendre_endpoint(k + 2, order, right)
                    + c[2] * legendre_endpoint(k + 3, order, right)
            };
            ua += u * end(0, false);
            uxa += u * end(1, false);
            ub += u * end(0, true);
        }
        state.u_a.push(ua);
        state.ux_a.push(s * uxa);
        state.u_b.push(ub);
    }

    /// `d^order u / dx^order` at physical points.
    pub fn reconstruct(&self, state: &SpectralState, points: &[f64], order: usize) -> Vec<f64> {
        let s = self.map.scale();
        let n = self.disc.n;
        points
            .iter()
            .map(|&x| {
                let y = self.map.to_reference(x);
                let table = legendre_derivatives(n, y, order);
                let row = &table[order];
                let v: f64 = state
                    .u_h
                    .iter()
                    .zip(&self.basis.trial)
                    .enumerate()
                    .map(|(k, (u, c))| u * (row[k] + c[0] * row[k + 1] + c[1] * row[k + 2] + c[2] * row[k + 3]))
                    .sum();
                (v + state.lift.eval_reference(y, order)) * s.powi(order as i32)
            })
            .collect()
    }

    /// Precomputes trial-basis values on a fixed grid for fast repeated
    /// evaluation.
    pub fn grid_evaluator(&self, points: &[f64]) -> GridEvaluator {
        let n = self.disc.n;
        let ys: Vec<f64> = points.iter().map(|&x| self.map.to_reference(x)).collect();
        let phi = ys
            .iter()
            .map(|&y| {
                let row = legendre_derivatives(n, y, 0).remove(0);
                self.basis
                    .trial
                    .iter()
                    .enumerate()
                    .map(|(k, c)| row[k] + c[0] * row[k + 1] + c[1] * row[k + 2] + c[2] * row[k + 3])
                    .collect()
            })
            .collect();
        GridEvaluator { ys, phi }
    }

    /// Runs all `M` steps, reconstructing on `grid` after every step.
    /// `observer` sees `(m, t, values)` for `m = 0..=M`.
    pub fn run_observed<F>(
        &self,
        u0: &dyn Fn(f64) -> f64,
        grid: &[f64],
        snapshot_times: &[f64],
        mut observer: F,
    ) -> Result<RunOutput>
    where
        F: FnMut(usize, f64, &[f64]),
    {
        let tau = self.disc.tau();
        let mut wanted: Vec<(usize, f64)> = Vec::with_capacity(snapshot_times.len());
        for &t in snapshot_times {
            if !(0.0..=self.disc.t_final * (1.0 + 1e-12)).contains(&t) {
                return Err(KdvError::InvalidArgument(format!(
                    "snapshot time {t} outside [0, {}]",
                    self.disc.t_final
                )));
            }
            wanted.push(((t / tau).round() as usize, t));
        }
        let eval = self.grid_evaluator(grid);
        let mut state = self.initialize(u0)?;
        let mut snapshots = Vec::new();
        let mut norms = Vec::with_capacity(self.disc.m + 1);
        let mut values = eval.values(&state);
        let mut record = |state: &SpectralState, values: &[f64], snapshots: &mut Vec<Snapshot>| {
            norms.push(values.iter().map(|v| v * v).sum::<f64>().sqrt());
            let t = state.m as f64 * tau;
            observer(state.m, t, values);
            for (step, requested) in &wanted {
                if *step == state.m {
                    snapshots.push(Snapshot {
                        step: state.m,
                        time: t,
                        requested_time: *requested,
                        values: values.to_vec(),
                    });
                }
            }
        };
        record(&state, &values, &mut snapshots);
        for _ in 0..self.disc.m {
            self.step(&mut state)?;
            values = eval.values(&state);
            record(&state, &values, &mut snapshots);
        }
        Ok(RunOutput {
            grid: grid.to_vec(),
            snapshots,
            diagnostics: Diagnostics {
                norms,
                stability_ratio: self.stability_ratio,
                stability_ok: self.stability_ratio < 1.0,
                advection_path: self.advection_path(),
            },
            state,
        })
    }

    pub fn run(&self, u0: &dyn Fn(f64) -> f64, grid: &[f64], snapshot_times: &[f64]) -> Result<RunOutput> {
        self.run_observed(u0, grid, snapshot_times, |_, _, _| {})
    }
}

/// Trial-basis values on a fixed set of points.
#[derive(Debug, Clone)]
pub struct GridEvaluator {
    ys: Vec<f64>,
    phi: Vec<Vec<f64>>,
}

impl GridEvaluator {
    pub fn values(&self, state: &SpectralState) -> Vec<f64> {
        self.phi
            .iter()
            .zip(&self.ys)
            .map(|(row, &y)| row.iter().zip(&state.u_h).map(|(p, u)| p * u).sum::<f64>() + state.lift.eval_reference(y, 0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    /// `step * tau`.
    pub time: f64,
    pub requested_time: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Grid l2 norm after every step, `m = 0..=M`.
    pub norms: Vec<f64>,
    pub stability_ratio: f64,
    pub stability_ok: bool,
    pub advection_path: &'static str,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub state: SpectralState,
    pub diagnostics: Diagnostics,
}

/// `n` equispaced points on `[a, b]`, endpoints included.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(x: f64) -> f64 {
        (-x * x).exp()
    }

    fn example_two() -> AdvectionField {
        AdvectionField::polynomial(&[3.0, 1.0, 0.0, -1.0 / 54.0], -6.0, 6.0)
    }

    #[test]
    fn discretization_validation() {
        assert!(Discretization::new(-6.0, 6.0, 4, 10, 1.0).is_err());
        assert!(Discretization::new(6.0, -6.0, 16, 10, 1.0).is_err());
        assert!(Discretization::new(-6.0, 6.0, 16, 0, 1.0).is_err());
        let d = Discretization::new(-6.0, 6.0, 16, 4096, 1.0).unwrap();
        assert_eq!(d.tau() * d.m as f64, 1.0);
    }

    #[test]
    fn field_split() {
        let f = example_two();
        assert_eq!(f.form, AdvectionForm::Polynomial(3));
        assert!((f.g_a - 1.0).abs() < 1e-14 && (f.g_b - 5.0).abs() < 1e-14);
        assert!(f.g_star(-6.0).abs() < 1e-12 && f.g_star(6.0).abs() < 1e-12);
        for x in [-4.0, 0.5, 3.0] {
            assert!((f.g_star(x) - (-x * x * x / 54.0 + 2.0 * x / 3.0)).abs() < 1e-13);
            assert!((f.p_g(x) - (x / 3.0 + 3.0)).abs() < 1e-13);
            assert!((f.d_g_star(x) - (-x * x / 18.0 + 2.0 / 3.0)).abs() < 1e-13);
        }
        let g3 = AdvectionField::gauss3(-6.0, 6.0);
        assert!(g3.g_star(-6.0).abs() < 1e-12 && g3.g_star(6.0).abs() < 1e-12);
        assert!((g3.g_a - 0.5).abs() < 1e-15);
        assert!(AdvectionField::constant(6.0, -6.0, 6.0).g_star_vanishes());
        assert!(AdvectionField::polynomial(&[1.0, 2.0], -6.0, 6.0).g_star_vanishes());
    }

    #[test]
    fn zero_data_stays_zero() {
        let disc = Discretization::new(-6.0, 6.0, 16, 8, 1.0 / 8.0).unwrap();
        let solver = Solver::new(disc, example_two()).unwrap();
        let mut state = solver.initialize(&|_| 0.0).unwrap();
        assert!(state.u_h.iter().all(|v| *v == 0.0));
        solver.step(&mut state).unwrap();
        assert!(state.u_h.iter().all(|v| *v == 0.0));
        assert!(state.lift.is_zero());
        assert_eq!(solver.reconstruct(&state, &[-6.0, 0.0, 2.0], 0), vec![0.0; 3]);
    }

    #[test]
    fn support_violation_rejected() {
        let disc = Discretization::new(-6.0, 6.0, 16, 8, 1.0).unwrap();
        let solver = Solver::new(disc, AdvectionField::constant(6.0, -6.0, 6.0)).unwrap();
        let err = solver.initialize(&|x| (-(x - 5.0) * (x - 5.0)).exp()).unwrap_err();
        assert!(matches!(err, KdvError::SupportViolation { .. }));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn projection_of_gaussian() {
        let grid = uniform_grid(-6.0, 6.0, 129);
        // The Legendre tail of exp(-36 y^2) sits near 1e-8 at degree 48 and
        // 1e-11 at degree 64, which bounds what any projection can do.
        for (n, tol) in [(48, 1e-5), (64, 1e-9)] {
            let disc = Discretization::new(-6.0, 6.0, n, 4, 1.0).unwrap();
            let solver = Solver::new(disc, AdvectionField::constant(6.0, -6.0, 6.0)).unwrap();
            let state = solver.initialize(&gaussian).unwrap();
            let vals = solver.reconstruct(&state, &grid, 0);
            let err = grid.iter().zip(&vals).map(|(x, v)| (gaussian(*x) - v).abs()).fold(0.0, f64::max);
            assert!(err < tol, "N={n}: {err:e}");
            assert!(state.u_a[0].abs() < tol && state.u_b[0].abs() < tol);
            let fast = solver.grid_evaluator(&grid).values(&state);
            assert!(fast.iter().zip(&vals).all(|(a, b)| (a - b).abs() < 1e-13));
        }
    }

    #[test]
    fn derivative_reconstruction_matches_differences() {
        let disc = Discretization::new(-6.0, 6.0, 32, 4, 1.0).unwrap();
        let solver = Solver::new(disc, example_two()).unwrap();
        let mut state = solver.initialize(&gaussian).unwrap();
        solver.step(&mut state).unwrap();
        let h = 1e-4;
        for x in [-3.1, -0.4, 0.9, 2.7] {
            let v = solver.reconstruct(&state, &[x - h, x + h], 0);
            let fd = (v[1] - v[0]) / (2.0 * h);
            let d = solver.reconstruct(&state, &[x], 1)[0];
            assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0), "{fd} vs {d}");
        }
    }

    #[test]
    fn traces_match_reconstruction() {
        let disc = Discretization::new(-6.0, 6.0, 24, 16, 0.5).unwrap();
        let solver = Solver::new(disc, AdvectionField::gauss3(-6.0, 6.0)).unwrap();
        assert_eq!(solver.advection_path(), "dense");
        let mut state = solver.initialize(&|x| (-(x + 0.5) * (x + 0.5)).exp()).unwrap();
        for _ in 0..5 {
            solver.step(&mut state).unwrap();
        }
        assert_eq!(state.u_a.len(), state.m + 1);
        let ends = solver.reconstruct(&state, &[-6.0, 6.0], 0);
        let dx = solver.reconstruct(&state, &[-6.0], 1)[0];
        assert!((ends[0] - state.u_a[5]).abs() < 1e-13);
        assert!((ends[1] - state.u_b[5]).abs() < 1e-13);
        assert!((dx - state.ux_a[5]).abs() < 1e-12 * dx.abs().max(1.0));
    }

    #[test]
    fn constant_field_skips_advection() {
        let disc = Discretization::new(-6.0, 6.0, 16, 4, 1.0).unwrap();
        let solver = Solver::new(disc, AdvectionField::constant(6.0, -6.0, 6.0)).unwrap();
        assert_eq!(solver.advection_path(), "identity");
        let solver = Solver::new(disc, example_two()).unwrap();
        assert_eq!(solver.advection_path(), "banded");
    }

    #[test]
    fn run_without_steps_returns_projection() {
        let disc = Discretization::new(-6.0, 6.0, 16, 2, 1.0).unwrap();
        let solver = Solver::new(disc, AdvectionField::constant(6.0, -6.0, 6.0)).unwrap();
        let grid = uniform_grid(-6.0, 6.0, 9);
        let out = solver.run(&gaussian, &grid, &[0.0, 1.0]).unwrap();
        let init = solver.initialize(&gaussian).unwrap();
        assert_eq!(out.snapshots[0].values, solver.grid_evaluator(&grid).values(&init));
        assert_eq!(out.snapshots[1].step, 2);
        assert_eq!(out.diagnostics.norms.len(), 3);
        assert!(solver.run(&gaussian, &grid, &[2.0]).is_err());
    }
}
