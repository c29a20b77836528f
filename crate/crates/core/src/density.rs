//! Smoothed resampling of the bootstrap initial state.
//!
//! The initial state is an empirical draw plus Gaussian noise whose scale is
//! the least-squares cross-validated bandwidth divided by a constant, redrawn
//! until it lands in the support. This samples the Gaussian kernel density
//! estimate truncated to the support.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynsys::{Interval, MAX_REDRAWS};
use crate::error::{Error, Result};

/// Points in the bandwidth search grid.
pub const UCV_GRID_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthBase {
    UnbiasedCv,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRule {
    pub base: BandwidthBase,
    /// Applied to the cross-validated bandwidth only.
    pub divisor: f64,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        Self {
            base: BandwidthBase::UnbiasedCv,
            divisor: 4.0,
        }
    }
}

impl BandwidthRule {
    pub fn fixed(b: f64) -> Self {
        Self {
            base: BandwidthBase::Fixed(b),
            divisor: 1.0,
        }
    }

    pub fn bandwidth(&self, data: &[f64]) -> Result<f64> {
        match self.base {
            BandwidthBase::Fixed(b) if b >= 0.0 && b.is_finite() => Ok(b),
            BandwidthBase::Fixed(b) => Err(Error::Parameter(format!("bad fixed bandwidth {b}"))),
            BandwidthBase::UnbiasedCv => {
                if !(self.divisor > 0.0) {
                    return Err(Error::Parameter("bandwidth divisor must be positive".into()));
                }
                Ok(ucv_bandwidth(data)? / self.divisor)
            }
        }
    }
}

/// Gaussian-kernel least-squares cross-validation criterion, up to the
/// additive constant that does not depend on `b`.
///
/// `sq_diffs` holds `(x_i - x_j)^2` for each unordered pair `i < j`.
fn lscv(sq_diffs: &[f64], n: usize, b: f64) -> f64 {
    let nf = n as f64;
    let inv_b2 = 1.0 / (b * b);
    let (mut conv, mut loo) = (0.0, 0.0);
    for &d2 in sq_diffs {
        let e = (-0.25 * d2 * inv_b2).exp();
        conv += e;
        loo += e * e;
    }
    // Diagonal terms of the convolution sum, then both triangles.
    let conv_sum = nf + 2.0 * conv;
    let conv_term = conv_sum / (2.0 * PI.sqrt()) / (nf * nf * b);
    let loo_term = 2.0 * (2.0 * loo) / (2.0 * PI).sqrt() / (nf * (nf - 1.0) * b);
    conv_term - loo_term
}

/// Bandwidth minimising the cross-validation criterion over a logarithmic
/// grid spanning `[1e-3, 1] * range(data)`; ties go to the smallest.
pub fn ucv_bandwidth(data: &[f64]) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "bandwidth selection needs at least 2 points, got {}",
            data.len()
        )));
    }
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::DegenerateData("all points coincide".into()));
    }
    let n = data.len();
    let mut sq_diffs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = data[i] - data[j];
            sq_diffs.push(d * d);
        }
    }
    let (g_lo, g_hi) = ((1e-3 * range).ln(), range.ln());
    let step = (g_hi - g_lo) / (UCV_GRID_POINTS - 1) as f64;
    let mut best = (f64::INFINITY, f64::NAN);
    for k in 0..UCV_GRID_POINTS {
        let b = (g_lo + step * k as f64).exp();
        let score = lscv(&sq_diffs, n, b);
        if score < best.0 {
            best = (score, b);
        }
    }
    Ok(best.1)
}

/// Draws initial states from a fixed data set with a precomputed bandwidth.
#[derive(Debug, Clone)]
pub struct InitialSampler<'a> {
    data: &'a [f64],
    bandwidth: f64,
}

impl<'a> InitialSampler<'a> {
    pub fn new(data: &'a [f64], rule: &BandwidthRule) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DegenerateData("no data to resample".into()));
        }
        Ok(Self {
            data,
            bandwidth: rule.bandwidth(data)?,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn sample<R: Rng + ?Sized>(&self, support: &Interval, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_REDRAWS {
            let noise: f64 = rng.sample(StandardNormal);
            let atom = self.data[rng.random_range(0..self.data.len())];
            let x = atom + self.bandwidth * noise;
            if support.contains(x) {
                return Ok(x);
            }
        }
        Err(Error::RetryCap(MAX_REDRAWS))
    }
}

/// One smoothed-bootstrap initial state.
pub fn sample_initial<R: Rng + ?Sized>(
    data: &[f64],
    rule: &BandwidthRule,
    support: &Interval,
    rng: &mut R,
) -> Result<f64> {
    InitialSampler::new(data, rule)?.sample(support, rng)
}
