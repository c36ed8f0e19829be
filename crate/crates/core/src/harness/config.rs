//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! a = -6
//! b = 6
//! T = 1
//! N = 64
//! M = 4096
//! g.kind = constant          # constant | polynomial | gauss3
//! g.params = 6               # constant value, or ascending coefficients
//! ic.kind = gaussian
//! ic.params = 0, 1           # center, width: exp(-((x - center) / width)^2)
//! snapshots = 0.25, 0.5, 0.75, 1
//! reference.kind = fourier   # fourier | self | none
//! reference.N = 64           # self only
//! reference.M = 4096         # self only
//! output_dir = out/example1
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{KdvError, Result};
use crate::stepper::{AdvectionField, Discretization};

const KEYS: [&str; 14] = [
    "a",
    "b",
    "T",
    "N",
    "M",
    "g.kind",
    "g.params",
    "ic.kind",
    "ic.params",
    "snapshots",
    "reference.kind",
    "reference.N",
    "reference.M",
    "output_dir",
];

/// Named advection coefficients available to configs.
pub const NAMED_FIELDS: [&str; 1] = ["gauss3"];

fn named_field(name: &str, a: f64, b: f64) -> Option<AdvectionField> {
    match name {
        "gauss3" => Some(AdvectionField::gauss3(a, b)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdvectionSpec {
    Constant(f64),
    /// Ascending coefficients.
    Polynomial(Vec<f64>),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Gaussian { center: f64, width: f64 },
}

impl InitialCondition {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialCondition::Gaussian { center, width } => (-((x - center) / width).powi(2)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSpec {
    None,
    Fourier,
    SelfConvergence { n: usize, m: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub a: f64,
    pub b: f64,
    pub t_final: f64,
    pub n: usize,
    pub m: usize,
    pub advection: AdvectionSpec,
    pub initial: InitialCondition,
    pub snapshots: Vec<f64>,
    pub reference: ReferenceSpec,
    pub output_dir: PathBuf,
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

fn parse_f64(line: usize, field: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| KdvError::config(Some(line), field, format!("'{}' is not a number", text.trim())))?;
    if !v.is_finite() {
        return Err(KdvError::config(Some(line), field, "value must be finite"));
    }
    Ok(v)
}

fn parse_list(line: usize, field: &str, text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|p| parse_f64(line, field, p)).collect()
}

fn parse_usize(line: usize, field: &str, text: &str) -> Result<usize> {
    text.trim()
        .parse()
        .map_err(|_| KdvError::config(Some(line), field, format!("'{}' is not a non-negative integer", text.trim())))
}

impl ExperimentConfig {
    /// Gaussian initial value on `(-6, 6)` up to `T = 1`, with the given
    /// advection and reference. `N = 64`, `M = 4096`.
    fn standard(advection: AdvectionSpec, reference: ReferenceSpec, dir: &str) -> Self {
        ExperimentConfig {
            a: -6.0,
            b: 6.0,
            t_final: 1.0,
            n: 64,
            m: 4096,
            advection,
            initial: InitialCondition::Gaussian { center: 0.0, width: 1.0 },
            snapshots: vec![0.25, 0.5, 0.75, 1.0],
            reference,
            output_dir: PathBuf::from(dir),
        }
    }

    /// `g = 6`, compared against the Fourier solution.
    pub fn example1() -> Self {
        Self::standard(AdvectionSpec::Constant(6.0), ReferenceSpec::Fourier, "out/example1")
    }

    /// `g(x) = -x^3/54 + x + 3`, self-referenced.
    pub fn example2() -> Self {
        Self::standard(
            AdvectionSpec::Polynomial(vec![3.0, 1.0, 0.0, -1.0 / 54.0]),
            ReferenceSpec::SelfConvergence { n: 64, m: 4096 },
            "out/example2",
        )
    }

    /// Three Gaussian bumps minus 1/2, self-referenced.
    pub fn example3() -> Self {
        Self::standard(
            AdvectionSpec::Named("gauss3".into()),
            ReferenceSpec::SelfConvergence { n: 64, m: 4096 },
            "out/example3",
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KdvError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values: [Option<(usize, String)>; KEYS.len()] = Default::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| KdvError::config(Some(line), content, "expected 'key = value'"))?;
            let key = key.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| KdvError::config(Some(line), key, "unknown key"))?;
            if let Some((first, _)) = &values[slot] {
                return Err(KdvError::config(Some(line), key, format!("duplicate key (first set at line {first})")));
            }
            values[slot] = Some((line, value.trim().to_string()));
        }
        let get = |key: &str| -> Option<(usize, &str)> {
            let slot = KEYS.iter().position(|k| *k == key).unwrap();
            values[slot].as_ref().map(|(l, v)| (*l, v.as_str()))
        };
        let required = |key: &str| get(key).ok_or_else(|| KdvError::config(None, key, "missing required key"));

        let (l, v) = required("a")?;
        let a = parse_f64(l, "a", v)?;
        let (l, v) = required("b")?;
        let b = parse_f64(l, "b", v)?;
        let (l, v) = required("T")?;
        let t_final = parse_f64(l, "T", v)?;
        let (l, v) = required("N")?;
        let n = parse_usize(l, "N", v)?;
        let (l, v) = required("M")?;
        let m = parse_usize(l, "M", v)?;

        let (kl, kind) = required("g.kind")?;
        let params = get("g.params");
        let param_line = params.map(|p| p.0).unwrap_or(kl);
        let plist = match params {
            Some((l, v)) => parse_list(l, "g.params", v)?,
            None => Vec::new(),
        };
        let advection = match kind {
            "constant" => match plist.as_slice() {
                [c] => AdvectionSpec::Constant(*c),
                _ => return Err(KdvError::config(Some(param_line), "g.params", "constant needs exactly one value")),
            },
            "polynomial" => {
                if plist.is_empty() {
                    return Err(KdvError::config(Some(param_line), "g.params", "polynomial needs coefficients"));
                }
                AdvectionSpec::Polynomial(plist)
            }
            name if NAMED_FIELDS.contains(&name) => {
                if !plist.is_empty() {
                    return Err(KdvError::config(Some(param_line), "g.params", format!("{name} takes no parameters")));
                }
                AdvectionSpec::Named(name.to_string())
            }
            other => {
                return Err(KdvError::config(
                    Some(kl),
                    "g.kind",
                    format!("unknown advection '{other}' (expected constant, polynomial or {})", NAMED_FIELDS.join(", ")),
                ))
            }
        };

        let (il, ikind) = required("ic.kind")?;
        if ikind != "gaussian" {
            return Err(KdvError::config(Some(il), "ic.kind", format!("unknown initial condition '{ikind}'")));
        }
        let initial = match get("ic.params") {
            None => InitialCondition::Gaussian { center: 0.0, width: 1.0 },
            Some((l, v)) => match parse_list(l, "ic.params", v)?.as_slice() {
                [c, w] if *w > 0.0 => InitialCondition::Gaussian { center: *c, width: *w },
                [_, _] => return Err(KdvError::config(Some(l), "ic.params", "width must be positive")),
                _ => return Err(KdvError::config(Some(l), "ic.params", "expected 'center, width'")),
            },
        };

        let snapshots = match get("snapshots") {
            Some((l, v)) => {
                let s = parse_list(l, "snapshots", v)?;
                if let Some(t) = s.iter().find(|t| **t < 0.0 || **t > t_final) {
                    return Err(KdvError::config(Some(l), "snapshots", format!("time {t} outside [0, T]")));
                }
                s
            }
            None => Vec::new(),
        };

        let reference = match get("reference.kind") {
            None | Some((_, "none")) => ReferenceSpec::None,
            Some((_, "fourier")) => ReferenceSpec::Fourier,
            Some((l, "self")) => {
                let (nl, nv) = get("reference.N")
                    .ok_or_else(|| KdvError::config(Some(l), "reference.N", "self reference needs reference.N"))?;
                let (ml, mv) = get("reference.M")
                    .ok_or_else(|| KdvError::config(Some(l), "reference.M", "self reference needs reference.M"))?;
                let rn = parse_usize(nl, "reference.N", nv)?;
                let rm = parse_usize(ml, "reference.M", mv)?;
                if rm == 0 || m == 0 || rm % m != 0 {
                    return Err(KdvError::config(Some(ml), "reference.M", "must be a positive multiple of M"));
                }
                ReferenceSpec::SelfConvergence { n: rn, m: rm }
            }
            Some((l, other)) => {
                return Err(KdvError::config(Some(l), "reference.kind", format!("unknown reference '{other}'")))
            }
        };
        if reference == ReferenceSpec::Fourier && !matches!(advection, AdvectionSpec::Constant(_)) {
            return Err(KdvError::config(
                get("reference.kind").map(|r| r.0),
                "reference.kind",
                "fourier reference needs constant advection",
            ));
        }
        if !matches!(reference, ReferenceSpec::SelfConvergence { .. }) {
            for key in ["reference.N", "reference.M"] {
                if let Some((l, _)) = get(key) {
                    return Err(KdvError::config(Some(l), key, "only valid with reference.kind = self"));
                }
            }
        }

        let output_dir = PathBuf::from(get("output_dir").map(|(_, v)| v).unwrap_or("out"));

        let config = ExperimentConfig {
            a,
            b,
            t_final,
            n,
            m,
            advection,
            initial,
            snapshots,
            reference,
            output_dir,
        };
        config
            .discretization()
            .map_err(|e| KdvError::config(None, "N/M/T/a/b", e.to_string()))?;
        if let ReferenceSpec::SelfConvergence { n: rn, m: rm } = config.reference {
            Discretization::new(a, b, rn, rm, t_final)
                .map_err(|e| KdvError::config(None, "reference", e.to_string()))?;
        }
        Ok(config)
    }

    /// Canonical text; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "a = {:?}", self.a);
        let _ = writeln!(out, "b = {:?}", self.b);
        let _ = writeln!(out, "T = {:?}", self.t_final);
        let _ = writeln!(out, "N = {}", self.n);
        let _ = writeln!(out, "M = {}", self.m);
        match &self.advection {
            AdvectionSpec::Constant(c) => {
                let _ = writeln!(out, "g.kind = constant\ng.params = {c:?}");
            }
            AdvectionSpec::Polynomial(c) => {
                let _ = writeln!(out, "g.kind = polynomial\ng.params = {}", join(c));
            }
            AdvectionSpec::Named(name) => {
                let _ = writeln!(out, "g.kind = {name}");
            }
        }
        let InitialCondition::Gaussian { center, width } = self.initial;
        let _ = writeln!(out, "ic.kind = gaussian\nic.params = {center:?}, {width:?}");
        let _ = writeln!(out, "snapshots = {}", join(&self.snapshots));
        match self.reference {
            ReferenceSpec::None => {
                let _ = writeln!(out, "reference.kind = none");
            }
            ReferenceSpec::Fourier => {
                let _ = writeln!(out, "reference.kind = fourier");
            }
            ReferenceSpec::SelfConvergence { n, m } => {
                let _ = writeln!(out, "reference.kind = self\nreference.N = {n}\nreference.M = {m}");
            }
        }
        let _ = writeln!(out, "output_dir = {}", self.output_dir.display());
        out
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Discretization::new(self.a, self.b, self.n, self.m, self.t_final)
    }

    pub fn field(&self) -> Result<AdvectionField> {
        Ok(match &self.advection {
            AdvectionSpec::Constant(c) => AdvectionField::constant(*c, self.a, self.b),
            AdvectionSpec::Polynomial(c) => AdvectionField::polynomial(c, self.a, self.b),
            AdvectionSpec::Named(name) => named_field(name, self.a, self.b)
                .ok_or_else(|| KdvError::config(None, "g.kind", format!("unknown advection '{name}'")))?,
        })
    }

    /// Copy with `N` and `M` replaced.
    pub fn with_resolution(&self, n: usize, m: usize) -> Self {
        ExperimentConfig { n, m, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# example with comments
a = -6
b = 6   # right end
T = 1
N = 40
M = 512
g.kind = polynomial
g.params = 3, 1, 0, -0.018518518518518517
ic.kind = gaussian
ic.params = 0, 1
snapshots = 0.25, 1
reference.kind = self
reference.N = 64
reference.M = 4096
output_dir = out/x
";

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!((c.a, c.b, c.t_final, c.n, c.m), (-6.0, 6.0, 1.0, 40, 512));
        assert_eq!(c.advection, AdvectionSpec::Polynomial(vec![3.0, 1.0, 0.0, -1.0 / 54.0]));
        assert_eq!(c.snapshots, vec![0.25, 1.0]);
        assert_eq!(c.reference, ReferenceSpec::SelfConvergence { n: 64, m: 4096 });
        assert_eq!(c.output_dir, PathBuf::from("out/x"));
        let f = c.field().unwrap();
        assert!((f.eval(3.0) - (-0.5 + 6.0)).abs() < 1e-14);
    }

    #[test]
    fn examples_round_trip() {
        for c in [ExperimentConfig::example1(), ExperimentConfig::example2(), ExperimentConfig::example3()] {
            let text = c.to_text();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.to_text(), text);
            c.field().unwrap();
        }
    }

    fn err_of(text: &str) -> (Option<usize>, String) {
        match ExperimentConfig::parse(text).unwrap_err() {
            KdvError::Config { line, field, .. } => (line, field),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn errors_carry_line_and_field() {
        let base = ExperimentConfig::example1().to_text();
        assert_eq!(err_of(&base.replace("N = 64", "N = sixty")), (Some(4), "N".into()));
        assert_eq!(err_of(&format!("{base}colour = red\n")).1, "colour");
        let dup_line = base.lines().count() + 1;
        assert_eq!(err_of(&format!("{base}a = 1\n")), (Some(dup_line), "a".into()));
        assert_eq!(err_of(&base.replace("g.kind = constant", "g.kind = sine")).1, "g.kind");
        assert_eq!(err_of(&base.replace("a = -6.0\n", "")), (None, "a".into()));
        assert_eq!(err_of(&base.replace("snapshots = 0.25", "snapshots = 2.5")).1, "snapshots");
        assert_eq!(err_of("just text\n"), (Some(1), "just text".into()));
        let ex2 = ExperimentConfig::example2().to_text();
        assert_eq!(err_of(&ex2.replace("reference.kind = self", "reference.kind = fourier")).1, "reference.kind");
        assert_eq!(err_of(&ex2.replace("reference.M = 4096", "reference.M = 1000")).1, "reference.M");
        assert_eq!(err_of(&base.replace("M = 4096", "M = 0")).1, "N/M/T/a/b");
        assert_eq!(
            err_of(&ExperimentConfig::example3().to_text().replace("g.kind = gauss3", "g.kind = gauss3\ng.params = 1")).1,
            "g.params"
        );
        assert_eq!(err_of(&base.replace("ic.params = 0.0, 1.0", "ic.params = 0.0, -1.0")).1, "ic.params");
    }

    #[test]
    fn defaults_apply() {
        let c = ExperimentConfig::parse("a=-1\nb=1\nT=0.5\nN=16\nM=8\ng.kind=constant\ng.params=2\nic.kind=gaussian\n")
            .unwrap();
        assert_eq!(c.reference, ReferenceSpec::None);
        assert!(c.snapshots.is_empty());
        assert_eq!(c.initial, InitialCondition::Gaussian { center: 0.0, width: 1.0 });
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            a in -20.0f64..-0.5,
            len in 1.0f64..40.0,
            n in 8usize..128,
            m in 1usize..5000,
            coeffs in proptest::collection::vec(-10.0f64..10.0, 1..6),
            center in -1.0f64..1.0,
            width in 0.1f64..3.0,
            snaps in proptest::collection::vec(0.0f64..1.0, 0..5),
            kind in 0usize..3,
        ) {
            let advection = match kind {
                0 => AdvectionSpec::Constant(coeffs[0]),
                1 => AdvectionSpec::Polynomial(coeffs.clone()),
                _ => AdvectionSpec::Named("gauss3".into()),
            };
            let reference = match kind {
                0 => ReferenceSpec::Fourier,
                1 => ReferenceSpec::SelfConvergence { n: 2 * n, m: 3 * m },
                _ => ReferenceSpec::None,
            };
            let c = ExperimentConfig {
                a,
                b: a + len,
                t_final: 1.0,
                n,
                m,
                advection,
                initial: InitialCondition::Gaussian { center, width },
                snapshots: snaps,
                reference,
                output_dir: PathBuf::from("some/dir"),
            };
            let text = c.to_text();
            let back = ExperimentConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
