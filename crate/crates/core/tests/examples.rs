use kdv_core::harness::config::{AdvectionSpec, ExperimentConfig, ReferenceSpec};
use kdv_core::harness::experiment::{simulate, KernelCache};
use kdv_core::harness::reference::FourierReference;

fn run(cfg: ExperimentConfig) -> kdv_core::harness::experiment::SimulationReport {
    simulate(&cfg, &KernelCache::new()).unwrap()
}

#[test]
fn example1_leaves_without_reflection() {
    let cfg = ExperimentConfig {
        m: 1024,
        reference: ReferenceSpec::None,
        ..ExperimentConfig::example1()
    };
    let report = run(cfg.clone());
    let plan = FourierReference::converged(&cfg.field().unwrap(), &[0.5, 1.0], &report.grid).unwrap();
    for snap in report.snapshots.iter().filter(|s| s.time >= 0.5) {
        let exact = plan.eval(snap.time, &report.grid);
        let worst = report
            .grid
            .iter()
            .zip(&snap.values)
            .zip(&exact)
            .filter(|((x, _), _)| **x <= -4.0)
            .map(|((_, u), e)| (u - e).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-2, "t={}: {worst:e}", snap.time);
    }
}

fn window_mass(grid: &[f64], values: &[f64], center: f64) -> f64 {
    grid.iter()
        .zip(values)
        .filter(|(x, _)| (**x - center).abs() <= 0.6)
        .map(|(_, u)| u * u)
        .sum()
}

#[test]
fn example3_bump_holds_mass_against_far_field_drift() {
    let base = ExperimentConfig {
        n: 48,
        m: 512,
        reference: ReferenceSpec::None,
        snapshots: vec![1.0],
        ..ExperimentConfig::example3()
    };
    let drift = ExperimentConfig {
        advection: AdvectionSpec::Constant(-0.5),
        ..base.clone()
    };
    let bump = run(base);
    let flat = run(drift);
    // Zeros of g near +-0.83. At t = 1 dispersion dominates the shape, so compare
    // against a run carrying only the far-field speed.
    let root = (2.0f64.ln()).sqrt();
    for c in [root, -root] {
        let with_bump = window_mass(&bump.grid, &bump.snapshots[0].values, c);
        let without = window_mass(&flat.grid, &flat.snapshots[0].values, c);
        assert!(with_bump > 1.5 * without, "x={c}: {with_bump} vs {without}");
    }
}

#[test]
fn norms_stay_bounded_for_every_example() {
    for cfg in [ExperimentConfig::example1(), ExperimentConfig::example2(), ExperimentConfig::example3()] {
        let cfg = ExperimentConfig {
            n: 40,
            m: 512,
            reference: ReferenceSpec::None,
            snapshots: vec![],
            ..cfg
        };
        let norms = run(cfg).diagnostics.norms;
        let max = norms.iter().cloned().fold(0.0, f64::max);
        assert!(max <= 2.0 * norms[0], "{max} vs {}", norms[0]);
    }
}
