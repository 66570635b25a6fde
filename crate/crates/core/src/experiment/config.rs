//! JSON experiment configuration: parsing, defaults and validation.
//!
//! Parsing runs in three passes. The raw JSON value is walked for unknown keys,
//! each section is then deserialized into its typed form, and finally the
//! grids are checked against the axes the chosen experiment understands.
//! Every violation found along the way is reported together.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dipolar::{PhysicalConstants, MAGIC_ANGLE, WATER_DENSITY, WATER_DIFFUSION};
use crate::qfi::{Stencil, DEFAULT_DTHETA};
use crate::spatial::RegimeChoice;
use crate::undriven::{Parity, UndrivenStrategy, DEFAULT_MAX_HARMONIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SimpleQfiVsN,
    SimpleQfiVsTheta,
    BasisComparison,
    Spatial,
    Undriven,
    Polarization,
    MultiQfi,
    MultiFiy,
    IntegralTable,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::SimpleQfiVsN,
        Self::SimpleQfiVsTheta,
        Self::BasisComparison,
        Self::Spatial,
        Self::Undriven,
        Self::Polarization,
        Self::MultiQfi,
        Self::MultiFiy,
        Self::IntegralTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SimpleQfiVsN => "simple-qfi-vs-n",
            Self::SimpleQfiVsTheta => "simple-qfi-vs-theta",
            Self::BasisComparison => "basis-comparison",
            Self::Spatial => "spatial",
            Self::Undriven => "undriven",
            Self::Polarization => "polarization",
            Self::MultiQfi => "multi-qfi",
            Self::MultiFiy => "multi-fiy",
            Self::IntegralTable => "integral-table",
        }
    }

    /// Grid axes in emission order.
    pub fn axes(self) -> &'static [Axis] {
        use AxisKind::*;
        const N: Axis = Axis::required("n", Count);
        const G_TAU: Axis = Axis::required("g_tau", CouplingPhase);
        const THETA: Axis = Axis::required("theta", Real);
        const T: Axis = Axis::optional("t", Positive, 1.0);
        const DEPTH: Axis = Axis::optional("depth", Positive, 10.0);
        const TAU: Axis = Axis::required("tau", Positive);
        const TAU_P: Axis = Axis::required("tau_p", Positive);
        const DELTA_OMEGA: Axis = Axis::optional("delta_omega", Real, 0.0);
        const POL: Axis = Axis::required("pol", Polarization);
        const M: Axis = Axis::required("m", Count);
        const ALPHA: Axis = Axis::optional("alpha", Real, MAGIC_ANGLE);
        const ORDER: Axis = Axis::required("order", Order);
        match self {
            Self::SimpleQfiVsN => &[N, G_TAU, T],
            Self::SimpleQfiVsTheta | Self::BasisComparison => &[N, G_TAU, THETA, T],
            Self::Spatial => &[DEPTH, TAU, THETA, T],
            Self::Undriven => &[DEPTH, TAU_P, DELTA_OMEGA, TAU, T],
            Self::Polarization => &[DEPTH, POL, TAU, THETA, T],
            Self::MultiQfi | Self::MultiFiy => &[M, N, G_TAU, THETA, T],
            Self::IntegralTable => &[DEPTH, ALPHA, ORDER],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Any finite number.
    Real,
    /// Strictly positive.
    Positive,
    /// Integer ≥ 1 that fits in u32.
    Count,
    /// 0 < gτ < π/4.
    CouplingPhase,
    /// pol ∈ [−1, 1].
    Polarization,
    /// Integer in 1..=3.
    Order,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: &'static str,
    pub kind: AxisKind,
    pub default: Option<f64>,
}

impl Axis {
    const fn required(name: &'static str, kind: AxisKind) -> Self {
        Self { name, kind, default: None }
    }

    const fn optional(name: &'static str, kind: AxisKind, default: f64) -> Self {
        Self { name, kind, default: Some(default) }
    }

    fn integral(&self) -> bool {
        matches!(self.kind, AxisKind::Count | AxisKind::Order)
    }

    /// Expanded grid. Generated ranges on integer axes are rounded to the
    /// nearest integer; explicit values are taken as written.
    pub fn values(&self, spec: &GridSpec) -> Vec<f64> {
        let mut v = spec.values();
        if self.integral() && matches!(spec, GridSpec::Range(_)) {
            v.iter_mut().for_each(|x| *x = x.round());
            v.dedup_by(|a, b| a.to_bits() == b.to_bits());
        }
        v
    }

    fn check(&self, x: f64) -> Option<String> {
        let integral = x.fract() == 0.0;
        let bad = match self.kind {
            AxisKind::Real => !x.is_finite(),
            AxisKind::Positive => !(x > 0.0 && x.is_finite()),
            AxisKind::Count => !(integral && (1.0..=f64::from(u32::MAX)).contains(&x)),
            AxisKind::CouplingPhase => !(x > 0.0 && 2.0 * x < FRAC_PI_2),
            AxisKind::Polarization => !(-1.0..=1.0).contains(&x),
            AxisKind::Order => !(integral && (1.0..=3.0).contains(&x)),
        };
        bad.then(|| {
            let want = match self.kind {
                AxisKind::Real => "a finite number",
                AxisKind::Positive => "positive and finite",
                AxisKind::Count => "an integer >= 1",
                AxisKind::CouplingPhase => "in (0, pi/4)",
                AxisKind::Polarization => "in [-1, 1]",
                AxisKind::Order => "1, 2 or 3",
            };
            format!("value {x} must be {want}")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// One grid axis: a scalar, an explicit list, or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Scalar(f64),
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub num: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridSpec {
    /// Points in ascending order with duplicates removed.
    pub fn values(&self) -> Vec<f64> {
        let mut v = match self {
            GridSpec::Scalar(x) => vec![*x],
            GridSpec::List(xs) => xs.clone(),
            GridSpec::Range(r) => r.points(),
        };
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| a.to_bits() == b.to_bits());
        v
    }
}

impl RangeSpec {
    fn points(&self) -> Vec<f64> {
        let n = self.num;
        let lerp = |a: f64, b: f64, i: usize| {
            if n == 1 {
                a
            } else if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        match self.spacing {
            Spacing::Linear => (0..n).map(|i| lerp(self.start, self.stop, i)).collect(),
            Spacing::Log => {
                let (a, b) = (self.start.ln(), self.stop.ln());
                (0..n)
                    .map(|i| match i {
                        0 => self.start,
                        _ if i == n - 1 => self.stop,
                        _ => lerp(a, b, i).exp(),
                    })
                    .collect()
            }
        }
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.num == 0 {
            out.push("range has num = 0".to_string());
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            out.push("range bounds must be finite".to_string());
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            out.push("log spacing needs positive bounds".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub alpha: f64,
    pub density: f64,
    pub diffusion: f64,
    pub volume: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { alpha: MAGIC_ANGLE, density: WATER_DENSITY, diffusion: WATER_DIFFUSION, volume: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub j: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { j: PhysicalConstants::default().j }
    }
}

impl From<ConstantsConfig> for PhysicalConstants {
    fn from(c: ConstantsConfig) -> Self {
        PhysicalConstants { j: c.j }
    }
}

/// Numerical knobs shared by the experiments; each one ignores what it does not use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Gauss-Legendre order for dipolar-integral quadrature.
    pub quadrature_order: usize,
    /// Azimuthal points for dipolar-integral quadrature.
    pub phi_points: usize,
    /// Whether the integral table also reports the quadrature value.
    pub quadrature_check: bool,
    /// Finite-difference step in θ for fidelity QFIs.
    pub dtheta: f64,
    pub stencil: Stencil,
    /// Coarse θ samples on (0, π/2] before refinement in the max-over-θ search.
    pub theta_points: usize,
    pub regime: RegimeChoice,
    pub strategy: UndrivenStrategy,
    pub parity: Parity,
    pub max_harmonic: u32,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            quadrature_order: crate::dipolar::integrals::DEFAULT_QUADRATURE_ORDER,
            phi_points: crate::dipolar::integrals::DEFAULT_PHI_POINTS,
            quadrature_check: false,
            dtheta: DEFAULT_DTHETA,
            stencil: Stencil::Central,
            theta_points: 2001,
            regime: RegimeChoice::Auto,
            strategy: UndrivenStrategy::PeakSignal,
            parity: Parity::Odd,
            max_harmonic: DEFAULT_MAX_HARMONIC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: BTreeMap<String, GridSpec>,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub seed: u64,
    /// Output file stem; defaults to the experiment name.
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    /// Canonical JSON: fixed key order, every default spelled out.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Expanded, sorted values of every axis in emission order.
    pub fn axis_values(&self) -> Vec<(&'static str, Vec<f64>)> {
        self.experiment
            .axes()
            .iter()
            .map(|axis| {
                let values = match self.grid.get(axis.name) {
                    Some(spec) => axis.values(spec),
                    None => vec![axis.default.expect("validated config has every required axis")],
                };
                (axis.name, values)
            })
            .collect()
    }

    pub fn stem(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Dotted key path, e.g. `grid.g_tau`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("JSON parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<Violation>),
}

const TOP_LEVEL: &[&str] = &["experiment", "grid", "geometry", "constants", "options", "seed", "output"];
const GEOMETRY_KEYS: &[&str] = &["alpha", "density", "diffusion", "volume"];
const CONSTANT_KEYS: &[&str] = &["j"];
const OPTION_KEYS: &[&str] = &[
    "quadrature_order",
    "phi_points",
    "quadrature_check",
    "dtheta",
    "stencil",
    "theta_points",
    "regime",
    "strategy",
    "parity",
    "max_harmonic",
];

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { path: path.into(), message: message.into() });
    }

    fn unknown_keys(&mut self, value: &Value, prefix: &str, allowed: &[&str]) {
        if let Value::Object(map) = value {
            for key in map.keys().filter(|k| !allowed.contains(&k.as_str())) {
                let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
                self.push(path, format!("unknown key `{key}`"));
            }
        }
    }

    /// Reports unknown keys by name, then deserializes what is left.
    fn section<T: serde::de::DeserializeOwned + Default>(&mut self, root: &Value, key: &str, allowed: &[&str]) -> T {
        match root.get(key) {
            None => T::default(),
            Some(v) => {
                self.unknown_keys(v, key, allowed);
                let mut v = v.clone();
                if let Value::Object(map) = &mut v {
                    map.retain(|k, _| allowed.contains(&k.as_str()));
                }
                serde_json::from_value(v).unwrap_or_else(|e| {
                    self.push(key, e.to_string());
                    T::default()
                })
            }
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut errs = Collector(Vec::new());
    if !root.is_object() {
        errs.push("", "top level must be a JSON object");
        return Err(ConfigError::Validation(errs.0));
    }
    errs.unknown_keys(&root, "", TOP_LEVEL);

    let experiment = match root.get("experiment") {
        None => {
            errs.push("experiment", "missing");
            None
        }
        Some(v) => serde_json::from_value::<ExperimentKind>(v.clone())
            .map_err(|_| {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                errs.push("experiment", format!("{v} is not one of {}", names.join(", ")));
            })
            .ok(),
    };

    let mut grid = BTreeMap::new();
    match root.get("grid") {
        None => errs.push("grid", "missing"),
        Some(Value::Object(map)) => {
            for (key, raw) in map {
                let path = format!("grid.{key}");
                match serde_json::from_value::<GridSpec>(raw.clone()) {
                    Ok(spec) => {
                        grid.insert(key.clone(), spec);
                    }
                    Err(_) => errs.push(path, "expected a number, a list of numbers or {start, stop, num[, spacing]}"),
                }
            }
        }
        Some(_) => errs.push("grid", "must be an object"),
    }

    let geometry: GeometryConfig = errs.section(&root, "geometry", GEOMETRY_KEYS);
    let constants: ConstantsConfig = errs.section(&root, "constants", CONSTANT_KEYS);
    let options: Options = errs.section(&root, "options", OPTION_KEYS);

    let seed = match root.get("seed") {
        None => 0,
        Some(v) => v.as_u64().unwrap_or_else(|| {
            errs.push("seed", "must be a non-negative integer");
            0
        }),
    };
    let output = match root.get("output") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if valid_stem(s) => Some(s.clone()),
        Some(_) => {
            errs.push("output", "must be a file stem without path separators");
            None
        }
    };

    if let Some(kind) = experiment {
        check_grid(kind, &grid, &mut errs);
    }
    check_sections(&geometry, &constants, &options, &mut errs);

    match (experiment, errs.0.is_empty()) {
        (Some(experiment), true) => {
            Ok(ExperimentConfig { experiment, grid, geometry, constants, options, seed, output })
        }
        _ => Err(ConfigError::Validation(errs.0)),
    }
}

fn valid_stem(s: &str) -> bool {
    !s.is_empty() && s != "." && s != ".." && !s.contains(['/', '\\'])
}

fn check_grid(kind: ExperimentKind, grid: &BTreeMap<String, GridSpec>, errs: &mut Collector) {
    let axes = kind.axes();
    for key in grid.keys() {
        if !axes.iter().any(|a| a.name == key) {
            let known: Vec<_> = axes.iter().map(|a| a.name).collect();
            errs.push(
                format!("grid.{key}"),
                format!("unknown key `{key}` for {kind}; expected one of {}", known.join(", ")),
            );
        }
    }
    for axis in axes {
        let path = format!("grid.{}", axis.name);
        let Some(spec) = grid.get(axis.name) else {
            if axis.default.is_none() {
                errs.push(path, "required axis is missing");
            }
            continue;
        };
        if let GridSpec::Range(r) = spec {
            let problems = r.problems();
            if !problems.is_empty() {
                problems.into_iter().for_each(|p| errs.push(path.clone(), p));
                continue;
            }
        }
        let values = axis.values(spec);
        if values.is_empty() {
            errs.push(path.clone(), "grid is empty");
        }
        if let Some(msg) = values.iter().find_map(|&x| axis.check(x)) {
            errs.push(path, msg);
        }
    }
}

fn check_sections(g: &GeometryConfig, c: &ConstantsConfig, o: &Options, errs: &mut Collector) {
    if !g.alpha.is_finite() {
        errs.push("geometry.alpha", "must be finite");
    }
    if !(g.density > 0.0 && g.density.is_finite()) {
        errs.push("geometry.density", "must be positive");
    }
    if !(g.diffusion >= 0.0 && g.diffusion.is_finite()) {
        errs.push("geometry.diffusion", "must be non-negative");
    }
    if let Some(v) = g.volume {
        if !(v > 0.0 && v.is_finite()) {
            errs.push("geometry.volume", "must be positive");
        }
    }
    if !(c.j > 0.0 && c.j.is_finite()) {
        errs.push("constants.j", "must be positive");
    }
    if o.quadrature_order < 2 {
        errs.push("options.quadrature_order", "must be at least 2");
    }
    if o.phi_points < 4 {
        errs.push("options.phi_points", "must be at least 4");
    }
    if !(o.dtheta > 0.0 && o.dtheta.is_finite()) {
        errs.push("options.dtheta", "must be positive");
    }
    if o.theta_points < 3 {
        errs.push("options.theta_points", "must be at least 3");
    }
    if o.max_harmonic == 0 {
        errs.push("options.max_harmonic", "must be at least 1");
    }
}
