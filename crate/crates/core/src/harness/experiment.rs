//! Runs configured experiments and writes their artifacts.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ReferenceSpec};
use super::metrics::{alpha_slopes, beta_slopes, error_norms, ErrorNorms};
use super::reference::FourierReference;
use crate::error::{KdvError, Result, Stage};
use crate::stepper::{uniform_grid, AdvectionField, Diagnostics, Discretization, Snapshot, Solver};
use crate::ztbc::{compute_kernels, write_kernel_file, BoundaryKernels};

/// Points of the equispaced error grid, both endpoints included.
pub const GRID_POINTS: usize = 129;

/// Kernels shared between runs with equal `(tau, M, g(a), g(b))`.
#[derive(Debug, Default)]
pub struct KernelCache {
    map: Mutex<HashMap<(u64, usize, u64, u64), Arc<BoundaryKernels>>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, disc: &Discretization, field: &AdvectionField) -> Result<Arc<BoundaryKernels>> {
        let key = (disc.tau().to_bits(), disc.m, field.g_a.to_bits(), field.g_b.to_bits());
        if let Some(k) = self.map.lock().unwrap().get(&key) {
            return Ok(k.clone());
        }
        let kernels = compute_kernels(field.g_a, field.g_b, disc.tau(), disc.m).map_err(|e| e.at(Stage::Setup))?;
        Ok(self.map.lock().unwrap().entry(key).or_insert_with(|| Arc::new(kernels)).clone())
    }

    pub fn solver(&self, disc: Discretization, field: AdvectionField) -> Result<Solver> {
        let kernels = self.get(&disc, &field)?;
        Solver::with_kernels(disc, field, kernels)
    }
}

/// Reference values on the grid after each step `1..=M`.
#[derive(Debug, Clone)]
pub enum Reference {
    Fourier(FourierReference),
    /// Solver output at the reference resolution; `values[k]` is step `k`.
    Trajectory { m: usize, values: Vec<Vec<f64>> },
}

impl Reference {
    pub fn build(config: &ExperimentConfig, grid: &[f64], cache: &KernelCache) -> Result<Option<Self>> {
        match config.reference {
            ReferenceSpec::None => Ok(None),
            ReferenceSpec::Fourier => {
                let field = config.field()?;
                let t = config.t_final;
                let times = [0.25 * t, 0.5 * t, 0.75 * t, t];
                Ok(Some(Reference::Fourier(FourierReference::converged(&field, &times, grid)?)))
            }
            ReferenceSpec::SelfConvergence { n, m } => {
                let disc = Discretization::new(config.a, config.b, n, m, config.t_final)?;
                let solver = cache.solver(disc, config.field()?)?;
                let mut values = Vec::with_capacity(m + 1);
                let ic = config.initial;
                solver.run_observed(&|x| ic.eval(x), grid, &[], |_, _, v| values.push(v.to_vec()))?;
                Ok(Some(Reference::Trajectory { m, values }))
            }
        }
    }

    /// Values after steps `1..=m` of a run with `m` steps up to `t_final`.
    pub fn steps(&self, t_final: f64, m: usize, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        match self {
            Reference::Fourier(plan) => {
                let tau = t_final / m as f64;
                Ok((1..=m).into_par_iter().map(|k| plan.eval(k as f64 * tau, grid)).collect())
            }
            Reference::Trajectory { m: m_ref, values } => {
                if m == 0 || m_ref % m != 0 {
                    return Err(KdvError::InvalidArgument(format!(
                        "reference with {m_ref} steps cannot be sampled at {m} steps"
                    )));
                }
                let stride = m_ref / m;
                Ok((1..=m).map(|k| values[k * stride].clone()).collect())
            }
        }
    }

    /// Values at arbitrary times; trajectories use the nearest step.
    pub fn at_times(&self, t_final: f64, times: &[f64], grid: &[f64]) -> Vec<Vec<f64>> {
        match self {
            Reference::Fourier(plan) => times.par_iter().map(|&t| plan.eval(t, grid)).collect(),
            Reference::Trajectory { m, values } => times
                .iter()
                .map(|&t| values[((t / t_final * *m as f64).round() as usize).min(*m)].clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub grid: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub u_a: Vec<f64>,
    pub ux_a: Vec<f64>,
    pub u_b: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub errors: Option<ErrorNorms>,
    pub kernels: KernelSummary,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSummary {
    pub tau: f64,
    pub steps: usize,
    pub g_a: f64,
    pub g_b: f64,
    pub contour_radius: f64,
    pub sample_count: usize,
    pub leading: [f64; 4],
}

impl KernelSummary {
    fn of(k: &BoundaryKernels) -> Self {
        KernelSummary {
            tau: k.tau,
            steps: k.steps(),
            g_a: k.g_a,
            g_b: k.g_b,
            contour_radius: k.contour_radius,
            sample_count: k.sample_count,
            leading: k.leading(),
        }
    }
}

/// Runs one configuration against reference values after steps `1..=M`.
pub fn simulate_against(
    config: &ExperimentConfig,
    cache: &KernelCache,
    reference: Option<&[Vec<f64>]>,
) -> Result<SimulationReport> {
    let start = Instant::now();
    let grid = uniform_grid(config.a, config.b, GRID_POINTS);
    let solver = cache.solver(config.discretization()?, config.field()?)?;
    let ic = config.initial;
    let mut per_step = Vec::new();
    let keep = reference.is_some();
    let out = solver.run_observed(&|x| ic.eval(x), &grid, &config.snapshots, |m, _, v| {
        if keep && m > 0 {
            per_step.push(v.to_vec());
        }
    })?;
    let errors = match reference {
        Some(refs) => Some(error_norms(&per_step, refs, solver.discretization().tau())?),
        None => None,
    };
    Ok(SimulationReport {
        config: config.clone(),
        grid,
        snapshots: out.snapshots,
        u_a: out.state.u_a,
        ux_a: out.state.ux_a,
        u_b: out.state.u_b,
        diagnostics: out.diagnostics,
        errors,
        kernels: KernelSummary::of(solver.kernels()),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs one configuration against its configured reference.
pub fn simulate(config: &ExperimentConfig, cache: &KernelCache) -> Result<SimulationReport> {
    let start = Instant::now();
    let grid = uniform_grid(config.a, config.b, GRID_POINTS);
    let refs = match Reference::build(config, &grid, cache)? {
        Some(r) => Some(r.steps(config.t_final, config.m, &grid)?),
        None => None,
    };
    let mut report = simulate_against(config, cache, refs.as_deref())?;
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| KdvError::io(path, e))?;
    Ok(std::io::BufWriter::new(file))
}

fn write_rows<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut w = create(path)?;
    let io = |e| KdvError::io(path, e);
    writeln!(w, "{header}").map_err(io)?;
    for row in rows {
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| KdvError::io(dir, e))
}

/// File name of the snapshot requested at time `t`.
pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_t{t:.6}.csv")
}

/// Writes snapshots, traces, norms, errors and `manifest.json` into `dir`.
/// Returns the written paths.
pub fn write_simulation(report: &SimulationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for snap in &report.snapshots {
        let path = dir.join(snapshot_file_name(snap.requested_time));
        write_rows(
            &path,
            "x,u",
            report.grid.iter().zip(&snap.values).map(|(x, u)| format!("{},{}", num(*x), num(*u))),
        )?;
        written.push(path);
    }
    let path = dir.join("traces.csv");
    write_rows(
        &path,
        "m,u_a,ux_a,u_b",
        (0..report.u_a.len()).map(|m| format!("{m},{},{},{}", num(report.u_a[m]), num(report.ux_a[m]), num(report.u_b[m]))),
    )?;
    written.push(path);
    let tau = report.kernels.tau;
    let path = dir.join("norms.csv");
    write_rows(
        &path,
        "m,t,l2",
        report.diagnostics.norms.iter().enumerate().map(|(m, v)| format!("{m},{},{}", num(m as f64 * tau), num(*v))),
    )?;
    written.push(path);
    if let Some(errors) = &report.errors {
        let path = dir.join("errors.csv");
        write_rows(
            &path,
            "m,t,err",
            errors
                .per_step
                .iter()
                .enumerate()
                .map(|(i, e)| format!("{},{},{}", i + 1, num((i + 1) as f64 * tau), num(*e))),
        )?;
        written.push(path);
    }
    let k = &report.kernels;
    let manifest = json!({
        "config": report.config.to_text(),
        "interval": [report.config.a, report.config.b],
        "T": report.config.t_final,
        "N": report.config.n,
        "M": report.config.m,
        "reference": format!("{:?}", report.config.reference),
        "grid": { "points": report.grid.len(), "endpoints_included": true },
        "kernels": {
            "tau": k.tau,
            "steps": k.steps,
            "g_a": k.g_a,
            "g_b": k.g_b,
            "contour_radius": k.contour_radius,
            "sample_count": k.sample_count,
            "leading": k.leading,
        },
        "stability": {
            "ratio": report.diagnostics.stability_ratio,
            "satisfied": report.diagnostics.stability_ok,
        },
        "advection_path": report.diagnostics.advection_path,
        "max_norm_ratio": max_norm_ratio(&report.diagnostics.norms),
        "aggregate_error": report.errors.as_ref().map(|e| e.aggregate),
        "wall_clock_seconds": report.wall_clock_seconds,
        "files": written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| KdvError::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// `max_m ||u^m|| / ||u^0||` over a norm history.
pub fn max_norm_ratio(norms: &[f64]) -> f64 {
    match norms.first() {
        Some(&first) if first > 0.0 => norms.iter().fold(0.0f64, |a, &b| a.max(b)) / first,
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    N,
    M,
}

impl std::str::FromStr for Vary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "N" | "n" => Ok(Vary::N),
            "M" | "m" => Ok(Vary::M),
            _ => Err(format!("expected N or M, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub vary: Vary,
    pub params: Vec<usize>,
    pub errors: Vec<f64>,
    /// `alpha` for `Vary::N`, `beta` for `Vary::M`; one per adjacent pair.
    pub slopes: Vec<f64>,
}

/// Sweeps `N` or `M` over `values`, one parallel worker per cell.
pub fn converge(config: &ExperimentConfig, vary: Vary, values: &[usize], cache: &KernelCache) -> Result<ConvergenceTable> {
    if config.reference == ReferenceSpec::None {
        return Err(KdvError::config(None, "reference.kind", "convergence study needs a reference"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) || values.is_empty() {
        return Err(KdvError::InvalidArgument("sweep values must be non-empty and strictly increasing".into()));
    }
    let cells: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| match vary {
            Vary::N => config.with_resolution(v, config.m),
            Vary::M => config.with_resolution(config.n, v),
        })
        .collect();
    for c in &cells {
        c.discretization()?;
    }
    let grid = uniform_grid(config.a, config.b, GRID_POINTS);
    let reference = Reference::build(config, &grid, cache)?.expect("reference present");
    let mut refs: HashMap<usize, Vec<Vec<f64>>> = HashMap::new();
    for c in &cells {
        if !refs.contains_key(&c.m) {
            refs.insert(c.m, reference.steps(c.t_final, c.m, &grid)?);
        }
    }
    let errors = cells
        .par_iter()
        .map(|c| simulate_against(c, cache, Some(&refs[&c.m])).map(|r| r.errors.expect("errors computed").aggregate))
        .collect::<Result<Vec<f64>>>()?;
    let slopes = match vary {
        Vary::N => alpha_slopes(&errors, values)?,
        Vary::M => beta_slopes(&errors, values)?,
    };
    Ok(ConvergenceTable {
        vary,
        params: values.to_vec(),
        errors,
        slopes,
    })
}

/// Writes a convergence table as `N,err,alpha` or `M,err,beta`; the slope
/// column is empty on the first row.
pub fn write_convergence(table: &ConvergenceTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let header = match table.vary {
        Vary::N => "N,err,alpha",
        Vary::M => "M,err,beta",
    };
    write_rows(
        path,
        header,
        table.params.iter().zip(&table.errors).enumerate().map(|(i, (p, e))| {
            let slope = if i == 0 { String::new() } else { num(table.slopes[i - 1]) };
            format!("{p},{},{slope}", num(*e))
        }),
    )
}

/// Reference solution at `times` on the error grid, written to
/// `reference_t<time>.csv` in `dir`.
pub fn write_reference(config: &ExperimentConfig, times: &[f64], dir: &Path, cache: &KernelCache) -> Result<Vec<PathBuf>> {
    if let Some(t) = times.iter().find(|t| !(0.0..=config.t_final).contains(*t)) {
        return Err(KdvError::InvalidArgument(format!("time {t} outside [0, {}]", config.t_final)));
    }
    let grid = uniform_grid(config.a, config.b, GRID_POINTS);
    let reference = Reference::build(config, &grid, cache)?
        .ok_or_else(|| KdvError::config(None, "reference.kind", "no reference configured"))?;
    let values = reference.at_times(config.t_final, times, &grid);
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for (t, v) in times.iter().zip(&values) {
        let path = dir.join(format!("reference_t{t:.6}.csv"));
        write_rows(&path, "x,u", grid.iter().zip(v).map(|(x, u)| format!("{},{}", num(*x), num(*u))))?;
        written.push(path);
    }
    Ok(written)
}

/// Computes the configuration's boundary kernels and writes them to `path`.
pub fn dump_kernels(config: &ExperimentConfig, path: &Path) -> Result<KernelSummary> {
    let disc = config.discretization()?;
    let field = config.field()?;
    let kernels = compute_kernels(field.g_a, field.g_b, disc.tau(), disc.m)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_kernel_file(&kernels, path)?;
    Ok(KernelSummary::of(&kernels))
}
