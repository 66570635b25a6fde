//! Sweep evaluation. Grid points are independent and run on the rayon pool;
//! results are collected in grid order, so output never depends on the
//! number of threads.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::table::{config_hash, ResultTable, RunManifest, TableError};
use crate::dipolar::{self, IntegralMethod, IntegralSpec, PhysicalConstants, SampleGeometry};
use crate::error::{Error, Result};
use crate::multi::{self, MultiSensorParams};
use crate::polarization::{self, PolarizationParams};
use crate::qfi::{self, FiMode, MeasurementBasis};
use crate::simple::{self, SimpleModelParams};
use crate::spatial::{self, DecayRegime, SpatialProtocolParams};
use crate::undriven::{self, PulseTrain};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("at {coords}: {source}")]
    Point { coords: String, source: Error },
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: ResultTable,
    pub manifest: RunManifest,
}

/// Errors that mark a grid point as infeasible instead of aborting the run.
fn infeasible(e: &Error) -> bool {
    matches!(
        e,
        Error::StrategyInfeasible(_)
            | Error::BranchOverflow(_)
            | Error::DegenerateRadial { .. }
            | Error::InformationSingular { .. }
            | Error::DimensionTooLarge { .. }
            | Error::MissingVolume
    )
}

/// Named view of one grid point.
struct Point<'a> {
    names: &'a [&'static str],
    values: Vec<f64>,
}

impl Point<'_> {
    fn get(&self, name: &str) -> f64 {
        let i = self.names.iter().position(|n| *n == name).expect("axis exists");
        self.values[i]
    }

    fn count(&self, name: &str) -> u32 {
        self.get(name) as u32
    }

    fn describe(&self) -> String {
        self.names.iter().zip(&self.values).map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ")
    }
}

fn output_columns(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::SimpleQfiVsN => {
            &["qfi_weak_formula", "qfi_strong_formula", "qfi_max_over_theta", "theta_at_max"]
        }
        ExperimentKind::SimpleQfiVsTheta => &["i_r", "i_phi", "qfi", "prob_up_y", "fi_y"],
        ExperimentKind::BasisComparison => &["qfi", "fi_x", "fi_y", "fi_phase_optimal"],
        ExperimentKind::Spatial => &[
            "regime",
            "decay_rate",
            "signal_phase",
            "i_r",
            "i_phi",
            "qfi",
            "noise_to_signal",
            "expansion_valid",
        ],
        ExperimentKind::Undriven => &[
            "strategy_tau",
            "qfi",
            "cos2",
            "detuning_phase",
            "expansion_valid",
            "c2_at_t",
            "s2_short_time",
        ],
        ExperimentKind::Polarization => &["i_r", "i_phi", "qfi", "tau1", "tau2", "qfi1", "qfi2"],
        ExperimentKind::MultiQfi => &["qfi"],
        ExperimentKind::MultiFiy => &["fi_y", "qfi"],
        ExperimentKind::IntegralTable => &["m1", "m2", "m3", "re", "im", "quad_re", "quad_im"],
    }
}

/// Numeric code of a decay regime in the `regime` column.
pub fn regime_code(r: DecayRegime) -> f64 {
    match r {
        DecayRegime::Instantaneous => 0.0,
        DecayRegime::DiffusionLimited => 1.0,
        DecayRegime::FiniteVolume => 2.0,
    }
}

fn flag(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

/// Maximum over θ ∈ (0, π/2] of the exact simple-model QFI: a coarse scan
/// followed by golden-section refinement around the best sample.
pub fn simple_qfi_max_over_theta(n: u32, g_tau: f64, t: f64, samples: usize) -> (f64, f64) {
    let qfi = |theta: f64| {
        let p = SimpleModelParams { t, omega_n: theta / t, ..SimpleModelParams::at_theta(n, g_tau, theta) };
        simple::qfi_components(&p).total
    };
    let step = FRAC_PI_2 / samples as f64;
    let best = (1..=samples)
        .map(|i| i as f64 * step)
        .max_by(|&a, &b| qfi(a).total_cmp(&qfi(b)))
        .expect("at least one sample");
    let (mut lo, mut hi) = ((best - step).max(0.0), (best + step).min(FRAC_PI_2));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (qfi(a), qfi(b));
    for _ in 0..80 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = qfi(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = qfi(a);
        }
    }
    let candidates = [(qfi(best), best), (fa, a), (fb, b)];
    let (value, theta) = candidates.into_iter().max_by(|x, y| x.0.total_cmp(&y.0)).expect("non-empty");
    (value, theta)
}

fn geometry(cfg: &ExperimentConfig, depth: f64) -> SampleGeometry {
    let g = cfg.geometry;
    SampleGeometry { depth, alpha: g.alpha, density: g.density, diffusion: g.diffusion, volume: g.volume }
}

fn evaluate(cfg: &ExperimentConfig, p: &Point) -> Result<Vec<Vec<f64>>> {
    let o = &cfg.options;
    let c = PhysicalConstants::from(cfg.constants);
    let one = |row: Vec<f64>| Ok(vec![row]);
    match cfg.experiment {
        ExperimentKind::SimpleQfiVsN => {
            let (n, g_tau, t) = (p.count("n"), p.get("g_tau"), p.get("t"));
            let nf = f64::from(n);
            let (max, theta) = simple_qfi_max_over_theta(n, g_tau, t, o.theta_points);
            one(vec![4.0 * nf * nf * t * t * g_tau * g_tau, nf * t * t / std::f64::consts::E, max, theta])
        }
        ExperimentKind::SimpleQfiVsTheta | ExperimentKind::BasisComparison => {
            let (theta, t) = (p.get("theta"), p.get("t"));
            let sp = SimpleModelParams::new(p.count("n"), p.get("g_tau"), 1.0, t, theta / t)?;
            let coh = simple::coherence_exact_checked(&sp)?;
            let dcoh = simple::coherence_derivative(&sp);
            let q = simple::qfi_components(&sp);
            let fi = |alpha: f64| qfi::fi_xy_basis(coh, dcoh, MeasurementBasis::new(alpha), FiMode::Exact);
            if cfg.experiment == ExperimentKind::SimpleQfiVsTheta {
                one(vec![q.i_r, q.i_phi, q.total, simple::prob_up_y_exact(&sp), fi(FRAC_PI_2)])
            } else {
                let opt = qfi::optimal_measurement_angle(coh).alpha();
                one(vec![q.total, fi(0.0), fi(FRAC_PI_2), fi(opt)])
            }
        }
        ExperimentKind::Spatial => {
            let (theta, t) = (p.get("theta"), p.get("t"));
            let mut sp = SpatialProtocolParams::new(geometry(cfg, p.get("depth")), p.get("tau"), t, theta / t);
            sp.constants = c;
            sp.regime = o.regime;
            let q = spatial::qfi_spatial(&sp)?;
            one(vec![
                regime_code(q.regime),
                spatial::decay_rate(&sp)?,
                spatial::signal_phase(&sp),
                q.breakdown.i_r,
                q.breakdown.i_phi,
                q.breakdown.total,
                q.noise_to_signal,
                flag(q.expansion_valid),
            ])
        }
        ExperimentKind::Undriven => {
            let geom = geometry(cfg, p.get("depth"));
            let pulse = PulseTrain { parity: o.parity, ..PulseTrain::new(p.get("tau_p"), p.get("delta_omega")) };
            let (tau, t) = (p.get("tau"), p.get("t"));
            let q = undriven::qfi_undriven(&geom, c, &pulse, tau, t, o.strategy)?;
            one(vec![
                q.tau,
                q.value,
                q.cos2,
                q.detuning_phase,
                flag(q.expansion_valid),
                undriven::c2_instant(&geom, c, pulse.delta_omega, t),
                undriven::filter_overlap_short_time(&geom, c, &pulse, tau)?,
            ])
        }
        ExperimentKind::Polarization => {
            let geom = geometry(cfg, p.get("depth"));
            let params = PolarizationParams::from_pol(p.get("pol"))?;
            let (tau, theta, t) = (p.get("tau"), p.get("theta"), p.get("t"));
            let q = polarization::qfi_pol(&geom, c, params, tau, t, theta)?;
            let s = polarization::strategy_times(&geom, c, params, theta, t)?;
            one(vec![q.i_r, q.i_phi, q.total, s.tau1, s.tau2, s.qfi1, s.qfi2])
        }
        ExperimentKind::MultiQfi | ExperimentKind::MultiFiy => {
            let mp = MultiSensorParams::new(p.count("m"), p.count("n"), p.get("g_tau"), p.get("theta"), p.get("t"))?;
            let q = multi::qfi_multi(&mp, o.dtheta, o.stencil)?;
            if cfg.experiment == ExperimentKind::MultiQfi {
                one(vec![q])
            } else {
                one(vec![multi::fi_y(&mp)?, q])
            }
        }
        ExperimentKind::IntegralTable => {
            let mut geom = geometry(cfg, p.get("depth"));
            geom.alpha = p.get("alpha");
            let order = p.count("order") as usize;
            index_sets(order)
                .into_iter()
                .map(|m| {
                    let mut spec = IntegralSpec::new(&m, geom);
                    spec.quadrature_order = o.quadrature_order;
                    spec.phi_points = o.phi_points;
                    let exact = dipolar::dipolar_integral(&spec, IntegralMethod::Analytic)?;
                    let quad = if o.quadrature_check {
                        dipolar::dipolar_integral(&spec, IntegralMethod::Quadrature)?
                    } else {
                        num_complex::Complex64::new(f64::NAN, f64::NAN)
                    };
                    let mut row: Vec<f64> = (0..3).map(|i| m.get(i).map_or(f64::NAN, |&x| f64::from(x))).collect();
                    row.extend([exact.re, exact.im, quad.re, quad.im]);
                    Ok(row)
                })
                .collect()
        }
    }
}

/// Non-decreasing index tuples over −2..=2; permutations give the same integral.
fn index_sets(order: usize) -> Vec<Vec<i32>> {
    let mut out = vec![vec![]];
    for _ in 0..order {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i32>| {
                let start = prefix.last().copied().unwrap_or(-2);
                (start..=2).map(move |m| {
                    let mut next = prefix.clone();
                    next.push(m);
                    next
                })
            })
            .collect();
    }
    out
}

/// Cartesian product in axis order, last axis fastest.
fn grid_points(axes: &[(&'static str, Vec<f64>)]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, (_, values)| {
        acc.into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect()
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<RunOutput, RunError> {
    let start = Instant::now();
    let axes = cfg.axis_values();
    let names: Vec<&'static str> = axes.iter().map(|a| a.0).collect();
    let outputs = output_columns(cfg.experiment);
    let points = grid_points(&axes);

    let evaluated: Vec<std::result::Result<Vec<(Vec<f64>, String)>, RunError>> = points
        .into_par_iter()
        .map(|values| {
            let point = Point { names: &names, values };
            match evaluate(cfg, &point) {
                Ok(rows) => Ok(rows
                    .into_iter()
                    .map(|r| (point.values.iter().copied().chain(r).collect(), String::new()))
                    .collect()),
                Err(e) if infeasible(&e) => {
                    let row = point.values.iter().copied().chain(outputs.iter().map(|_| f64::NAN)).collect();
                    Ok(vec![(row, e.to_string())])
                }
                Err(source) => Err(RunError::Point { coords: point.describe(), source }),
            }
        })
        .collect();

    let columns: Vec<String> = names.iter().chain(outputs).map(|s| s.to_string()).collect();
    let mut table = ResultTable::new(columns);
    for rows in evaluated {
        for (row, reason) in rows? {
            table.push(row, reason)?;
        }
    }
    let canonical = cfg.canonical_json();
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        config_hash: config_hash(&canonical),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        rows: table.rows.len(),
        columns: table.columns.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: serde_json::from_str(&canonical).expect("canonical JSON parses"),
    };
    Ok(RunOutput { table, manifest })
}
