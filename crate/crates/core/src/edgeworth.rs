//! First-order Edgeworth approximation from Monte Carlo moments, and sup
//! distances between distribution functions.

use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::dynsys::MapSpec;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::stats::{mean_sd, orbit_sums, Ecdf, Observable};

/// Ratio of the long averaging window to `n` when estimating `A`.
pub const MEAN_WINDOW_FACTOR: usize = 10;

/// Monte Carlo surrogates for the asymptotic moments, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub a: f64,
    pub sigma: f64,
    pub m_nu: f64,
    pub m_tilde_mu: f64,
    pub a_std_error: f64,
    pub m_nu_std_error: f64,
    pub m_tilde_mu_std_error: f64,
}

impl Moments {
    /// Moments without a skewness or bias correction.
    pub fn gaussian(a: f64, sigma: f64) -> Self {
        Self {
            a,
            sigma,
            m_nu: 0.0,
            m_tilde_mu: 0.0,
            a_std_error: 0.0,
            m_nu_std_error: 0.0,
            m_tilde_mu_std_error: 0.0,
        }
    }

    /// `M_nu / (6 sigma^3)`.
    pub fn skewness_coefficient(&self) -> f64 {
        self.m_nu / (6.0 * self.sigma.powi(3))
    }

    /// `M_tilde_mu / sigma`.
    pub fn bias_coefficient(&self) -> f64 {
        self.m_tilde_mu / self.sigma
    }
}

/// Estimates the moments entering the expansion at sample size `n`.
///
/// Each replication starts uniformly on the support and runs
/// `n + MEAN_WINDOW_FACTOR * n` steps. States `[0, n)` give the
/// initial-law sum `S_mu`, states `[n, 2n)` give the near-invariant sum
/// `S_nu`, and states `[n, n + 10n)` give the long-window estimate of `A`.
/// `sigma` is the spread of `S_mu / sqrt(n)`, as in the true-sigma protocol;
/// it is zero for a constant observable, which [`edgeworth_cdf`] rejects.
pub fn estimate_asymptotic_moments(
    spec: &MapSpec,
    h: &Observable,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Moments> {
    if n < 1 || reps < 2 {
        return Err(Error::Parameter(format!(
            "need n >= 1 and reps >= 2, got n={n} reps={reps}"
        )));
    }
    spec.validate()?;
    let long = MEAN_WINDOW_FACTOR * n;
    let rows: Vec<(f64, f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[r as u64, 0]);
            let (s_mu, s_long) = orbit_sums(spec, h, n, Some((n, long)), &mut rng)?;
            let mut rng = stream(seed, &[r as u64, 1]);
            let (_, s_nu) = orbit_sums(spec, h, 0, Some((n, n)), &mut rng)?;
            Ok((s_mu, s_nu, s_long))
        })
        .collect::<Result<_>>()?;

    let nf = n as f64;
    let repsf = reps as f64;
    let a_r: Vec<f64> = rows.iter().map(|r| r.2 / long as f64).collect();
    let (a, a_sd) = mean_sd(&a_r);
    let scaled: Vec<f64> = rows.iter().map(|r| r.0 / nf.sqrt()).collect();
    let (_, sigma) = mean_sd(&scaled);
    let bias: Vec<f64> = rows.iter().zip(&a_r).map(|(r, ar)| r.0 - nf * ar).collect();
    let (m_tilde_mu, bias_sd) = mean_sd(&bias);
    let cube: Vec<f64> = rows.iter().map(|r| ((r.1 - nf * a) / nf.cbrt()).powi(3)).collect();
    let (m_nu, cube_sd) = mean_sd(&cube);
    Ok(Moments {
        a,
        sigma,
        m_nu,
        m_tilde_mu,
        a_std_error: a_sd / repsf.sqrt(),
        m_nu_std_error: cube_sd / repsf.sqrt(),
        m_tilde_mu_std_error: bias_sd / repsf.sqrt(),
    })
}

/// Monte Carlo draws of `(S_n - n a) / (sigma sqrt(n))` from fresh
/// uniform-started trajectories, in replication order.
pub fn truth_pivots(
    spec: &MapSpec,
    h: &Observable,
    n: usize,
    reps: usize,
    a: f64,
    sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Scale(format!("sigma must be positive, got {sigma}")));
    }
    spec.validate()?;
    let nf = n as f64;
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[r as u64]);
            let (s, _) = orbit_sums(spec, h, n, None, &mut rng)?;
            Ok((s - nf * a) / (sigma * nf.sqrt()))
        })
        .collect()
}

/// `N(x) + n^{-1/2} [M_nu/(6 sigma^3) (1 - x^2) + M_tilde_mu/sigma] phi(x)`,
/// clipped to `[0, 1]`.
pub fn edgeworth_cdf(m: &Moments, n: usize, x: f64) -> Result<f64> {
    if !(m.sigma > 0.0) {
        return Err(Error::Scale(format!("sigma must be positive, got {}", m.sigma)));
    }
    if n < 1 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let z = Normal::standard();
    let poly = m.skewness_coefficient() * (1.0 - x * x) + m.bias_coefficient();
    Ok((z.cdf(x) + poly * z.pdf(x) / (n as f64).sqrt()).clamp(0.0, 1.0))
}

/// A distribution function that can be compared on a grid.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;

    /// Left limit at `x`; equal to `cdf` for continuous laws.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    /// Points where the function jumps.
    fn jumps(&self) -> &[f64] {
        &[]
    }
}

impl Cdf for Ecdf {
    fn cdf(&self, x: f64) -> f64 {
        Ecdf::cdf(self, x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        Ecdf::cdf_left(self, x)
    }

    fn jumps(&self) -> &[f64] {
        self.sorted_values()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StandardNormalCdf;

impl Cdf for StandardNormalCdf {
    fn cdf(&self, x: f64) -> f64 {
        Normal::standard().cdf(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeworthCdf {
    pub moments: Moments,
    pub n: usize,
}

impl EdgeworthCdf {
    pub fn new(moments: Moments, n: usize) -> Result<Self> {
        edgeworth_cdf(&moments, n, 0.0)?;
        Ok(Self { moments, n })
    }
}

impl Cdf for EdgeworthCdf {
    fn cdf(&self, x: f64) -> f64 {
        edgeworth_cdf(&self.moments, self.n, x).expect("validated on construction")
    }
}

/// 2001 evenly spaced points on `[-5, 5]`.
pub fn default_grid() -> Vec<f64> {
    (0..=2000).map(|i| -5.0 + i as f64 * 0.005).collect()
}

/// `max |F - G|` over the grid and on both sides of every jump of either
/// function.
pub fn sup_distance<F: Cdf + ?Sized, G: Cdf + ?Sized>(f: &F, g: &G, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty evaluation grid".into()));
    }
    let mut d = grid.iter().map(|&x| (f.cdf(x) - g.cdf(x)).abs()).fold(0.0, f64::max);
    for &x in f.jumps().iter().chain(g.jumps()) {
        d = d
            .max((f.cdf(x) - g.cdf(x)).abs())
            .max((f.cdf_left(x) - g.cdf_left(x)).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn vanishing_correction_is_normal() {
        let m = Moments::gaussian(0.5, 0.7);
        for n in [1, 10, 1000] {
            for x in [-3.0, -0.5, 0.0, 1.2] {
                let e = edgeworth_cdf(&m, n, x).unwrap();
                assert!((e - StandardNormalCdf.cdf(x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn correction_terms() {
        let m = Moments {
            m_nu: 0.3,
            m_tilde_mu: 0.1,
            ..Moments::gaussian(0.0, 0.5)
        };
        let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for x in [-1.0, 1.0] {
            let e = edgeworth_cdf(&m, 25, x).unwrap();
            let expect = StandardNormalCdf.cdf(x) + 0.2 * phi1 / 5.0;
            assert!((e - expect).abs() < 1e-14);
        }
        let corr = |n: usize| {
            default_grid()
                .iter()
                .map(|&x| (edgeworth_cdf(&m, n, x).unwrap() - StandardNormalCdf.cdf(x)).abs())
                .fold(0.0, f64::max)
        };
        assert!((corr(100) / corr(400) - 2.0).abs() < 1e-9);
        assert!(edgeworth_cdf(&Moments::gaussian(0.0, 0.0), 5, 0.0).is_err());
    }

    #[test]
    fn clipped_to_unit_interval() {
        let m = Moments {
            m_tilde_mu: 50.0,
            ..Moments::gaussian(0.0, 1.0)
        };
        assert_eq!(edgeworth_cdf(&m, 1, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn sup_distance_cases() {
        let grid = default_grid();
        let e = Ecdf::new(vec![0.3, 1.0, -2.0]).unwrap();
        assert_eq!(sup_distance(&e, &e, &grid).unwrap(), 0.0);
        let a = Ecdf::new(vec![0.0]).unwrap();
        let b = Ecdf::new(vec![1.0]).unwrap();
        let g: Vec<f64> = (0..=30).map(|i| -1.0 + 0.1 * i as f64).collect();
        assert_eq!(sup_distance(&a, &b, &g).unwrap(), 1.0);
        assert!(sup_distance(&a, &b, &[]).is_err());
    }

    #[test]
    fn jump_sides_are_checked() {
        // Both laws agree off a neighbourhood that no grid point hits.
        let a = Ecdf::new(vec![0.001]).unwrap();
        let b = Ecdf::new(vec![0.002]).unwrap();
        assert_eq!(sup_distance(&a, &b, &[-1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn normal_sample_close_to_normal() {
        let mut rng = stream(1, &[]);
        let v: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let e = Ecdf::new(v).unwrap();
        assert!(sup_distance(&e, &StandardNormalCdf, &default_grid()).unwrap() <= 0.01);
    }

    #[test]
    fn constant_observable_has_null_moments() {
        let h = Observable::custom("c", |_| 0.25);
        let m = estimate_asymptotic_moments(&MapSpec::doubling(), &h, 10, 100, 1).unwrap();
        assert_eq!((m.a, m.m_nu, m.m_tilde_mu, m.sigma), (0.25, 0.0, 0.0, 0.0));
        assert!(matches!(edgeworth_cdf(&m, 10, 0.0), Err(Error::Scale(_))));
    }

    #[test]
    fn doubling_moments() {
        let m = estimate_asymptotic_moments(&MapSpec::doubling(), &Observable::Identity, 8, 20_000, 2).unwrap();
        assert!((m.a - 0.5).abs() < 4.0 * m.a_std_error + 1e-3);
        // Var(S_n)/n from the autocovariances (1/12) 2^-k.
        let var: f64 = (1.0 + 2.0 * (1..8).map(|k| (1.0 - k as f64 / 8.0) * 0.5f64.powi(k)).sum::<f64>()) / 12.0;
        assert!((m.sigma - var.sqrt()).abs() < 0.01, "{} vs {}", m.sigma, var.sqrt());
        assert!(m.m_tilde_mu.abs() < 4.0 * m.m_tilde_mu_std_error);
        assert!(m.m_nu.abs() < 4.0 * m.m_nu_std_error);
    }
}
