//! Cone-kernel density filter with zero padding, Heaviside projection and
//! its continuation schedule.
//!
//! Element fields are flat slices in mesh element order (`e = c * nely + r`).

use serde::{Deserialize, Serialize};

use crate::element::{heaviside, heaviside_derivative};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterKernel {
    pub rmin: f64,
    nelx: usize,
    nely: usize,
    /// Half-width of the stencil, `ceil(rmin) - 1`.
    reach: usize,
    /// Cone weights `max(0, rmin - dist)`, `(2 reach + 1)^2`, row-major.
    pub h: Vec<f64>,
    /// Sum of in-domain weights per element.
    pub hs: Vec<f64>,
}

impl FilterKernel {
    pub fn new(nelx: usize, nely: usize, rmin: f64) -> Result<Self> {
        if !(rmin > 0.0) || !rmin.is_finite() {
            return Err(Error::invalid(format!("filter radius must be positive, got {rmin}")));
        }
        let reach = (rmin.ceil() as usize).saturating_sub(1);
        let w = 2 * reach + 1;
        let mut h = vec![0.0; w * w];
        for a in 0..w {
            for b in 0..w {
                let dy = a as f64 - reach as f64;
                let dx = b as f64 - reach as f64;
                h[a * w + b] = (rmin - (dx * dx + dy * dy).sqrt()).max(0.0);
            }
        }
        let mut kernel = FilterKernel {
            rmin,
            nelx,
            nely,
            reach,
            h,
            hs: Vec::new(),
        };
        kernel.hs = kernel.correlate(&vec![1.0; nelx * nely]);
        Ok(kernel)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nelx, self.nely)
    }

    pub fn stencil_width(&self) -> usize {
        2 * self.reach + 1
    }

    fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.nelx * self.nely {
            return Err(Error::invalid(format!(
                "field has {} entries, filter expects {} x {}",
                field.len(),
                self.nelx,
                self.nely
            )));
        }
        Ok(())
    }

    /// Zero-padded correlation with the stencil (equal to convolution, the
    /// cone is symmetric).
    fn correlate(&self, field: &[f64]) -> Vec<f64> {
        let (nelx, nely, reach) = (self.nelx as isize, self.nely as isize, self.reach as isize);
        let w = self.stencil_width();
        let mut out = vec![0.0; field.len()];
        for c in 0..nelx {
            for r in 0..nely {
                let mut s = 0.0;
                for a in -reach..=reach {
                    let rr = r + a;
                    if rr < 0 || rr >= nely {
                        continue;
                    }
                    for b in -reach..=reach {
                        let cc = c + b;
                        if cc < 0 || cc >= nelx {
                            continue;
                        }
                        let weight = self.h[((a + reach) as usize) * w + (b + reach) as usize];
                        s += weight * field[(cc * nely + rr) as usize];
                    }
                }
                out[(c * nely + r) as usize] = s;
            }
        }
        out
    }

    /// Filtered field `conv(field, h) / hs`.
    pub fn apply(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.check_len(field)?;
        let mut out = self.correlate(field);
        for (v, s) in out.iter_mut().zip(&self.hs) {
            *v /= s;
        }
        Ok(out)
    }

    /// Chain rule through the filter: `conv(sens / divisor, h)`.
    ///
    /// `divisor` is `hs` for the plain density filter and `hs / dproj` when a
    /// projection follows the filter. An infinite divisor (vanishing
    /// projection slope) contributes zero.
    pub fn backproject(&self, sens: &[f64], divisor: &[f64]) -> Result<Vec<f64>> {
        self.check_len(sens)?;
        self.check_len(divisor)?;
        if let Some((i, d)) = divisor.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(Error::NumericDomain(format!(
                "back-projection divisor must be positive, entry {i} is {d}"
            )));
        }
        let scaled: Vec<f64> = sens.iter().zip(divisor).map(|(s, d)| s / d).collect();
        Ok(self.correlate(&scaled))
    }
}

/// Heaviside projection threshold and continuation state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub beta: f64,
    pub betamax: f64,
    pub eta: f64,
    /// Iterations between doublings of `beta`.
    pub period: usize,
}

impl ProjectionParams {
    pub fn new(betamax: f64) -> Self {
        ProjectionParams {
            beta: 1.0,
            betamax,
            eta: 0.5,
            period: 25,
        }
    }
}

/// `(tanh(beta eta) + tanh(beta (x - eta))) / (tanh(beta eta) + tanh(beta (1 - eta)))`,
/// elementwise. With `eta = 0.5` this is the usual projection.
pub fn project(xtilde: &[f64], params: &ProjectionParams) -> Vec<f64> {
    xtilde.iter().map(|&x| heaviside(x, params.eta, params.beta)).collect()
}

pub fn project_derivative(xtilde: &[f64], params: &ProjectionParams) -> Vec<f64> {
    xtilde
        .iter()
        .map(|&x| heaviside_derivative(x, params.eta, params.beta))
        .collect()
}

/// Doubles `beta` every `period` iterations while `beta <= betamax`.
///
/// The guard is checked before doubling, so the terminal value is
/// `2 * betamax` when `betamax` is itself reached on schedule.
pub fn continuation_step(iteration: usize, params: ProjectionParams) -> ProjectionParams {
    let mut next = params;
    if params.period > 0 && iteration.is_multiple_of(params.period) && params.beta <= params.betamax {
        next.beta = params.beta * 2.0;
    }
    next
}

/// Grayness `sum 4 x (1 - x) / n` in percent.
pub fn grayness_measure(xphys: &[f64]) -> f64 {
    if xphys.is_empty() {
        return 0.0;
    }
    let s: f64 = xphys.iter().map(|&x| 4.0 * x * (1.0 - x)).sum();
    100.0 * s / xphys.len() as f64
}
