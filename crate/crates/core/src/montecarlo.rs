//! Monte-Carlo oracle for the accumulated couplings G_j = ∫₀^τ g_j(t) dt of
//! diffusing nuclei.
//!
//! Nuclei fill the cap {|v| ≤ R, z ≥ d} of a sphere centred on the NV (v is the
//! position relative to the NV, z the surface normal). Initial positions are
//! stratified over radial shells [d·2^k, d·2^{k+1}) so that every decade of the
//! slowly converging 1/r³ kernel is sampled evenly. Per-stratum means are
//! weighted by the exact shell volumes and by the density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipolar::{PhysicalConstants, SampleGeometry};
use crate::error::{ensure, Error, Result};

/// Default cap radius, in depths.
pub const DEFAULT_EXTENT_DEPTHS: f64 = 131_072.0;
/// Smallest accepted cap radius, in depths.
pub const MIN_EXTENT_DEPTHS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub steps: usize,
    pub n_particles: usize,
    pub seed: u64,
    /// Cap radius R in nm; defaults to [`DEFAULT_EXTENT_DEPTHS`]·d.
    pub extent: Option<f64>,
    /// Number of leading particles whose paths are returned.
    pub keep_trajectories: usize,
}

impl McConfig {
    pub fn new(steps: usize, n_particles: usize, seed: u64) -> Self {
        Self { steps, n_particles, seed, extent: None, keep_trajectories: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// |value − reference| in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference).abs() / self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionTrajectory {
    /// Positions relative to the NV, surface frame, nm.
    pub positions: Vec<[f64; 3]>,
    /// G = ∫ g dt along the path, rad.
    pub accumulated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMoments {
    /// Estimate of ⟨Σ_j G_j⟩ = n ∫ G d³r.
    pub first: Estimate,
    /// Estimate of ⟨Σ_j G_j²⟩ = n ∫ G² d³r.
    pub second: Estimate,
    pub strata: usize,
    pub extent: f64,
    pub trajectories: Vec<DiffusionTrajectory>,
}

struct Shell {
    inner: f64,
    outer: f64,
    volume: f64,
}

fn shells(depth: f64, extent: f64) -> Vec<Shell> {
    // volume of {|v| ≤ r, z ≥ d} is 2π(r³/3 − d r²/2) + πd³/3
    let cap = |r: f64| 2.0 * std::f64::consts::PI * (r.powi(3) / 3.0 - depth * r * r / 2.0);
    let mut out = Vec::new();
    let mut inner = depth;
    while inner < extent {
        let outer = (2.0 * inner).min(extent);
        out.push(Shell { inner, outer, volume: cap(outer) - cap(inner) });
        inner = outer;
    }
    out
}

/// S_zI_x coupling at NV-relative position v for tilt α.
fn coupling_at(v: [f64; 3], alpha_sin_cos: (f64, f64), j: f64) -> f64 {
    let (s, c) = alpha_sin_cos;
    let x_nv = c * v[0] + s * v[2];
    let z_nv = -s * v[0] + c * v[2];
    let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    -3.0 * j * x_nv * z_nv / (r2 * r2 * r2.sqrt())
}

fn sample_in_shell(rng: &mut ChaCha8Rng, shell: &Shell, depth: f64) -> [f64; 3] {
    let (lo3, hi3) = (shell.inner.powi(3), shell.outer.powi(3));
    loop {
        let r = (lo3 + rng.random::<f64>() * (hi3 - lo3)).cbrt();
        let u: f64 = rng.random();
        if r * u < depth {
            continue;
        }
        let phi = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
        let rho = r * (1.0 - u * u).max(0.0).sqrt();
        return [rho * phi.cos(), rho * phi.sin(), r * u];
    }
}

fn reflect(v: &mut [f64; 3], depth: f64, extent: f64) {
    if v[2] < depth {
        v[2] = 2.0 * depth - v[2];
    }
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r > extent {
        let scale = (2.0 * extent - r) / r;
        v.iter_mut().for_each(|x| *x *= scale);
        if v[2] < depth {
            v[2] = 2.0 * depth - v[2];
        }
    }
}

pub fn mc_diffusion_oracle(
    geom: &SampleGeometry,
    constants: PhysicalConstants,
    tau: f64,
    config: &McConfig,
) -> Result<McMoments> {
    geom.validate()?;
    ensure(tau > 0.0 && tau.is_finite(), || format!("tau {tau} must be positive"))?;
    ensure(config.steps >= 1, || "at least one time step is required".into())?;
    let extent = config.extent.unwrap_or(DEFAULT_EXTENT_DEPTHS * geom.depth);
    let minimum = MIN_EXTENT_DEPTHS * geom.depth;
    if !(extent >= minimum) {
        return Err(Error::BoxTooSmall { extent, minimum });
    }
    let strata = shells(geom.depth, extent);
    let k = strata.len();
    ensure(config.n_particles >= 2 * k, || {
        format!("need at least {} particles for {k} strata", 2 * k)
    })?;

    let dt = tau / config.steps as f64;
    let step = Normal::new(0.0, (2.0 * geom.diffusion * dt).sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let alpha = geom.alpha.sin_cos();
    let depth = geom.depth;
    let keep = config.keep_trajectories;

    let simulate = |index: usize| -> (f64, Option<DiffusionTrajectory>) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);
        let mut v = sample_in_shell(&mut rng, &strata[index % k], depth);
        let mut path = (index < keep).then(|| vec![v]);
        let mut g_prev = coupling_at(v, alpha, constants.j);
        let mut accumulated = 0.0;
        for _ in 0..config.steps {
            if geom.diffusion > 0.0 {
                for x in v.iter_mut() {
                    *x += step.sample(&mut rng);
                }
                reflect(&mut v, depth, extent);
            }
            let g_next = coupling_at(v, alpha, constants.j);
            accumulated += 0.5 * (g_prev + g_next) * dt;
            g_prev = g_next;
            if let Some(p) = path.as_mut() {
                p.push(v);
            }
        }
        (accumulated, path.map(|positions| DiffusionTrajectory { positions, accumulated }))
    };

    // Ordered collect then a sequential reduction: identical bits for any pool size.
    let samples: Vec<(f64, Option<DiffusionTrajectory>)> =
        (0..config.n_particles).into_par_iter().map(simulate).collect();

    let mut sums = vec![[0.0f64; 5]; k]; // count, ΣG, ΣG², ΣG³, ΣG⁴
    for (index, (g, _)) in samples.iter().enumerate() {
        let s = &mut sums[index % k];
        let g2 = g * g;
        s[0] += 1.0;
        s[1] += g;
        s[2] += g2;
        s[3] += g2 * g;
        s[4] += g2 * g2;
    }
    let n = geom.density;
    let mut first = (0.0, 0.0);
    let mut second = (0.0, 0.0);
    for (shell, s) in strata.iter().zip(&sums) {
        let count = s[0];
        let (m1, m2, m4) = (s[1] / count, s[2] / count, s[4] / count);
        let var1 = (m2 - m1 * m1).max(0.0) * count / (count - 1.0);
        let var2 = (m4 - m2 * m2).max(0.0) * count / (count - 1.0);
        first.0 += shell.volume * m1;
        first.1 += shell.volume * shell.volume * var1 / count;
        second.0 += shell.volume * m2;
        second.1 += shell.volume * shell.volume * var2 / count;
    }
    let trajectories = samples.into_iter().filter_map(|(_, t)| t).collect();
    Ok(McMoments {
        first: Estimate { value: n * first.0, std_error: n * first.1.sqrt() },
        second: Estimate { value: n * second.0, std_error: n * second.1.sqrt() },
        strata: k,
        extent,
        trajectories,
    })
}
