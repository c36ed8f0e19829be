//! Convolution kernels for the discrete transparent boundary conditions.
//!
//! Outside `[a, b]` the scheme reduces to Crank-Nicolson for
//! `u_t + g u_x + u_xxx = 0` with constant `g`. Its Z-transform gives the
//! cubic `lambda^3 + g lambda + c(z)` with `c(z) = (2/tau) (1 - 1/z) / (1 + 1/z)`.
//! The root with negative real part (`lambda_1` on the left boundary,
//! `sigma_1` on the right) and its square are inverted by trapezoidal
//! quadrature on a circle `|z| = r > 1`, which yields the sequences
//! `Y1..Y4`.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{Matrix3, Schur};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{KdvError, Result};

/// Real-part threshold separating decaying and growing roots.
const SIGN_TOL: f64 = 1e-10;

/// Convolution kernels `Y1..Y4` and the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryKernels {
    /// `Z^{-1}(lambda_1)`, left boundary.
    pub y1: Vec<f64>,
    /// `Z^{-1}(lambda_1^2)`, left boundary.
    pub y2: Vec<f64>,
    /// `Z^{-1}(sigma_1)`, right boundary.
    pub y3: Vec<f64>,
    /// `Z^{-1}(sigma_1^2)`, right boundary.
    pub y4: Vec<f64>,
    pub tau: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub contour_radius: f64,
    pub sample_count: usize,
}

impl BoundaryKernels {
    /// Number of time steps covered (`len - 1`).
    pub fn steps(&self) -> usize {
        self.y1.len() - 1
    }

    /// The four `m = 0` entries `(Y1^0, Y2^0, Y3^0, Y4^0)`.
    pub fn leading(&self) -> [f64; 4] {
        [self.y1[0], self.y2[0], self.y3[0], self.y4[0]]
    }
}

/// `c(z) = (2/tau) (1 - z^{-1}) / (1 + z^{-1})`.
pub fn contour_symbol(tau: f64, z: Complex64) -> Complex64 {
    let w = z.inv();
    (2.0 / tau) * (1.0 - w) / (1.0 + w)
}

/// The three roots of `lambda^3 + g lambda + c` as eigenvalues of the
/// companion matrix, refined by two Newton steps.
pub fn characteristic_roots(g: f64, c: Complex64) -> Result<[Complex64; 3]> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let companion = Matrix3::new(
        zero, zero, -c, //
        one, zero, Complex64::new(-g, 0.0), //
        zero, one, zero,
    );
    let eig = Schur::try_new(companion, f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| KdvError::EigenSolve {
            context: format!("companion matrix g={g} c={c}"),
        })?;
    let mut roots = [eig[0], eig[1], eig[2]];
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let d = 3.0 * *r * *r + g;
            if d.norm() > 1e-8 * (1.0 + g.abs()) {
                *r -= (*r * *r * *r + g * *r + c) / d;
            }
        }
    }
    for r in &roots {
        let res = (r * r * r + g * r + c).norm();
        let scale = 1f64.max(c.norm()).max(r.norm().powi(3)).max(g.abs() * r.norm());
        if res > 1e-10 * scale {
            return Err(KdvError::EigenSolve {
                context: format!("cubic root {r} residual {res:e} (g={g}, c={c})"),
            });
        }
    }
    Ok(roots)
}

/// Selects the unique root with negative real part.
pub fn decaying_root(roots: [Complex64; 3]) -> Result<Complex64> {
    let negative = roots.iter().filter(|r| r.re < -SIGN_TOL).count();
    if negative != 1 {
        return Err(KdvError::SignPatternViolation {
            negative,
            z: format!("{roots:?}"),
        });
    }
    Ok(roots
        .into_iter()
        .min_by(|a, b| a.re.total_cmp(&b.re))
        .expect("three roots"))
}

/// `lambda_1(z)` for exterior advection `g` and step `tau`.
pub fn decaying_root_at(g: f64, tau: f64, z: Complex64) -> Result<Complex64> {
    decaying_root(characteristic_roots(g, contour_symbol(tau, z))?).map_err(|e| match e {
        KdvError::SignPatternViolation { negative, .. } => KdvError::SignPatternViolation {
            negative,
            z: format!("{z}"),
        },
        e => e,
    })
}

/// Default contour sample count `K = max(4 (M + 1), 1024)`.
pub fn default_sample_count(steps: usize) -> usize {
    (4 * (steps + 1)).max(1024)
}

/// Contour radius `r = eps^(-1 / (2K))`.
pub fn contour_radius(samples: usize) -> f64 {
    (-f64::EPSILON.ln() / (2.0 * samples as f64)).exp()
}

/// Kernels for `steps` time steps with the default contour parameters.
pub fn compute_kernels(g_a: f64, g_b: f64, tau: f64, steps: usize) -> Result<BoundaryKernels> {
    compute_kernels_with(g_a, g_b, tau, steps, default_sample_count(steps))
}

/// Kernels with an explicit contour sample count.
pub fn compute_kernels_with(g_a: f64, g_b: f64, tau: f64, steps: usize, samples: usize) -> Result<BoundaryKernels> {
    if !(tau > 0.0) || steps < 1 {
        return Err(KdvError::InvalidArgument(format!(
            "kernels need tau > 0 and M >= 1 (got tau={tau}, M={steps})"
        )));
    }
    if samples < steps + 1 {
        return Err(KdvError::InvalidArgument(format!(
            "contour needs at least M + 1 = {} samples, got {samples}",
            steps + 1
        )));
    }
    let radius = contour_radius(samples);
    let (y1, y2) = invert_side(g_a, tau, steps, samples, radius)?;
    let (y3, y4) = if g_b == g_a {
        (y1.clone(), y2.clone())
    } else {
        invert_side(g_b, tau, steps, samples, radius)?
    };
    let kernels = BoundaryKernels {
        y1,
        y2,
        y3,
        y4,
        tau,
        g_a,
        g_b,
        contour_radius: radius,
        sample_count: samples,
    };
    check_forward_transform(&kernels)?;
    Ok(kernels)
}

/// Inverse Z-transform of the decaying root and its square for one side.
fn invert_side(g: f64, tau: f64, steps: usize, samples: usize, radius: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut first = Vec::with_capacity(samples);
    let mut second = Vec::with_capacity(samples);
    for k in 0..samples {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let z = Complex64::from_polar(radius, theta);
        let lam = decaying_root_at(g, tau, z)?;
        first.push(lam);
        second.push(lam * lam);
    }
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(samples);
    fft.process(&mut first);
    fft.process(&mut second);

    let ln_r = radius.ln();
    let finish = |spectrum: &[Complex64], label: &str| -> Result<Vec<f64>> {
        let vals: Vec<Complex64> = (0..=steps)
            .map(|m| spectrum[m] * ((m as f64 * ln_r).exp() / samples as f64))
            .collect();
        let max_abs = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let max_im = vals.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-8 * max_abs {
            return Err(KdvError::KernelAccuracy(format!(
                "{label}: imaginary residue {max_im:e} vs max entry {max_abs:e}"
            )));
        }
        Ok(vals.into_iter().map(|v| v.re).collect())
    };
    Ok((finish(&first, "root")?, finish(&second, "squared root")?))
}

/// Truncated forward transform `sum_m kernel[m] z^{-m}`.
pub fn forward_transform(kernel: &[f64], z: Complex64) -> Complex64 {
    let w = z.inv();
    kernel
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &y| acc * w + y)
}

/// Checks `sum_m Y^m z^{-m}` against the root at a few points of a circle
/// large enough that the truncated tail is negligible.
fn check_forward_transform(k: &BoundaryKernels) -> Result<()> {
    let steps = k.steps();
    let radius = 1.1_f64.max((30.0 / (steps + 1) as f64).exp());
    for i in 0..4 {
        let theta = (2 * i + 1) as f64 * std::f64::consts::PI / 7.0;
        let z = Complex64::from_polar(radius, theta);
        for (g, ya, yb, label) in [(k.g_a, &k.y1, &k.y2, "left"), (k.g_b, &k.y3, &k.y4, "right")] {
            let lam = decaying_root_at(g, k.tau, z)?;
            for (kernel, target) in [(ya, lam), (yb, lam * lam)] {
                let diff = (forward_transform(kernel, z) - target).norm();
                if diff > 1e-7 * target.norm() {
                    return Err(KdvError::KernelAccuracy(format!(
                        "{label} kernel forward transform off by {diff:e} at z = {z}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `sum_{k=1}^{m+1} kernel[k] * trace[m+1-k]`.
pub fn history_convolution(kernel: &[f64], trace: &[f64], m: usize) -> Result<f64> {
    if trace.len() < m + 1 {
        return Err(KdvError::LengthMismatch {
            expected: m + 1,
            actual: trace.len(),
        });
    }
    if kernel.len() < m + 2 {
        return Err(KdvError::LengthMismatch {
            expected: m + 2,
            actual: kernel.len(),
        });
    }
    Ok(kernel[1..=m + 1]
        .iter()
        .zip(trace[..=m].iter().rev())
        .map(|(y, u)| y * u)
        .sum())
}

const KERNEL_FILE_MAGIC: &str = "# kdv boundary kernels v1";

/// Writes the kernels as CSV preceded by a two-line parameter header.
pub fn write_kernel_file(kernels: &BoundaryKernels, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| KdvError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| KdvError::io(path, e);
    writeln!(w, "{KERNEL_FILE_MAGIC}").map_err(io)?;
    writeln!(
        w,
        "# g_a={:.16e},g_b={:.16e},tau={:.16e},steps={},radius={:.16e},samples={}",
        kernels.g_a,
        kernels.g_b,
        kernels.tau,
        kernels.steps(),
        kernels.contour_radius,
        kernels.sample_count
    )
    .map_err(io)?;
    writeln!(w, "m,y1,y2,y3,y4").map_err(io)?;
    for m in 0..=kernels.steps() {
        writeln!(
            w,
            "{m},{:.16e},{:.16e},{:.16e},{:.16e}",
            kernels.y1[m], kernels.y2[m], kernels.y3[m], kernels.y4[m]
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a file produced by [`write_kernel_file`].
pub fn read_kernel_file(path: &Path) -> Result<BoundaryKernels> {
    let file = std::fs::File::open(path).map_err(|e| KdvError::io(path, e))?;
    let bad = |line: usize, msg: String| KdvError::config(Some(line), "kernel file", msg);
    let mut lines = std::io::BufReader::new(file).lines();
    let mut next = |n: usize| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad(n, "unexpected end of file".into()))?
            .map_err(|e| KdvError::io(path, e))
    };
    if next(1)?.trim() != KERNEL_FILE_MAGIC {
        return Err(bad(1, "missing kernel file header".into()));
    }
    let params = next(2)?;
    let mut get = std::collections::HashMap::new();
    for kv in params.trim_start_matches('#').trim().split(',') {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(2, format!("malformed parameter `{kv}`")))?;
        get.insert(k.trim().to_string(), v.trim().to_string());
    }
    let num = |key: &str| -> Result<f64> {
        get.get(key)
            .ok_or_else(|| bad(2, format!("missing `{key}`")))?
            .parse::<f64>()
            .map_err(|e| bad(2, format!("`{key}`: {e}")))
    };
    let steps = num("steps")? as usize;
    let mut k = BoundaryKernels {
        y1: Vec::with_capacity(steps + 1),
        y2: Vec::with_capacity(steps + 1),
        y3: Vec::with_capacity(steps + 1),
        y4: Vec::with_capacity(steps + 1),
        tau: num("tau")?,
        g_a: num("g_a")?,
        g_b: num("g_b")?,
        contour_radius: num("radius")?,
        sample_count: num("samples")? as usize,
    };
    next(3)?;
    for m in 0..=steps {
        let line_no = m + 4;
        let row = next(line_no)?;
        let fields: Vec<f64> = row
            .split(',')
            .skip(1)
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(line_no, e.to_string()))?;
        if fields.len() != 4 {
            return Err(bad(line_no, format!("expected 5 columns, got {}", fields.len() + 1)));
        }
        k.y1.push(fields[0]);
        k.y2.push(fields[1]);
        k.y3.push(fields[2]);
        k.y4.push(fields[3]);
    }
    Ok(k)
}
