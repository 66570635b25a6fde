//! Fixed quadrature rules shared by the integral and filter code.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights mapped onto [a, b].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Result<Self> {
        let degree = NonZeroUsize::new(order)
            .ok_or_else(|| Error::InvalidParameter("quadrature order must be positive".into()))?;
        let rule = GaussLegendre::new(degree);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (mid + half * x, half * w))
            .unzip();
        Ok(Self { nodes, weights })
    }

    /// Uniform trapezoid rule on the periodic interval [0, 2π).
    pub fn periodic(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidParameter("need at least one azimuthal point".into()));
        }
        let h = 2.0 * PI / points as f64;
        Ok(Self { nodes: (0..points).map(|k| k as f64 * h).collect(), weights: vec![h; points] })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}
