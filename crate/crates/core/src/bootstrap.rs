//! Pivoted and non-pivoted bootstrap, plus the Gaussian and Student-t
//! baselines, as confidence intervals for the spatial average.

use std::fmt;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::density::{BandwidthRule, InitialSampler};
use crate::dynsys::Trajectory;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::spline::{build_map_estimate_with, eval_estimated_map, SparseSegments, SplineEstimate, SplineKind};
use crate::stats::{birkhoff_sum, sigma_star, CompensatedSum, Ecdf, Observable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Pivoted,
    NonPivoted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates.
    pub b: usize,
    pub alpha: f64,
    pub mode: Mode,
    pub spline_kind: SplineKind,
    pub sparse: SparseSegments,
    pub bandwidth: BandwidthRule,
    pub seed: u64,
}

impl BootstrapConfig {
    /// Natural cubic splines, studentized pivots.
    pub fn pivoted(b: usize, seed: u64) -> Self {
        Self {
            b,
            alpha: 0.05,
            mode: Mode::Pivoted,
            spline_kind: SplineKind::NaturalCubic,
            sparse: SparseSegments::Error,
            bandwidth: BandwidthRule::default(),
            seed,
        }
    }

    /// FMM cubic splines, unscaled pivots.
    pub fn nonpivoted(b: usize, seed: u64) -> Self {
        Self {
            mode: Mode::NonPivoted,
            spline_kind: SplineKind::FmmCubic,
            ..Self::pivoted(b, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(Error::Parameter(format!("B must be at least 2, got {}", self.b)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// The bootstrap law of the pivot for one data set and observable.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDistribution {
    pub mode: Mode,
    /// `T_n^{*,b}` in replicate order.
    pub pivots: Vec<f64>,
    /// `S_n^{*,b}` in replicate order.
    pub sums: Vec<f64>,
    pub grand_mean: f64,
    pub sigma_star: f64,
    ecdf: Ecdf,
}

impl BootstrapDistribution {
    /// Builds the distribution from pseudo-sums of length-`n` orbits.
    pub fn from_sums(mode: Mode, sums: Vec<f64>, n: usize) -> Result<Self> {
        let sigma_star = sigma_star(&sums, n)?;
        let mut acc = CompensatedSum::default();
        sums.iter().for_each(|&s| acc.add(s));
        let grand_mean = acc.value() / sums.len() as f64;
        let root_n = (n as f64).sqrt();
        let pivots: Vec<f64> = sums
            .iter()
            .map(|&s| {
                let dev = (s - grand_mean) / root_n;
                match mode {
                    Mode::NonPivoted => dev,
                    Mode::Pivoted if sigma_star > 0.0 => dev / sigma_star,
                    Mode::Pivoted => 0.0,
                }
            })
            .collect();
        Self::from_pivots(mode, pivots, sums, grand_mean, sigma_star)
    }

    /// Assembles a distribution from precomputed pivots.
    pub fn from_pivots(mode: Mode, pivots: Vec<f64>, sums: Vec<f64>, grand_mean: f64, sigma_star: f64) -> Result<Self> {
        let ecdf = Ecdf::new(pivots.clone())?;
        Ok(Self {
            mode,
            pivots,
            sums,
            grand_mean,
            sigma_star,
            ecdf,
        })
    }

    pub fn ecdf(&self) -> &Ecdf {
        &self.ecdf
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.ecdf.quantile(p)
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    TwoSided,
    UpperBounded,
    LowerBounded,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::TwoSided, Side::UpperBounded, Side::LowerBounded];

    pub fn name(self) -> &'static str {
        match self {
            Side::TwoSided => "two-sided",
            Side::UpperBounded => "upper",
            Side::LowerBounded => "lower",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "two-sided" | "two" | "both" => Some(Side::TwoSided),
            "upper" | "upper-bounded" => Some(Side::UpperBounded),
            "lower" | "lower-bounded" => Some(Side::LowerBounded),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Interval construction methods, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    TApprox,
    NPBoot,
    Gaussian,
    PBoot,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::TApprox, Method::NPBoot, Method::Gaussian, Method::PBoot];

    pub fn name(self) -> &'static str {
        match self {
            Method::TApprox => "t",
            Method::NPBoot => "npboot",
            Method::Gaussian => "Gaussian",
            Method::PBoot => "pboot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t" | "tapprox" => Some(Method::TApprox),
            "npboot" => Some(Method::NPBoot),
            "gaussian" => Some(Method::Gaussian),
            "pboot" => Some(Method::PBoot),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub side: Side,
    pub method: Method,
}

impl ConfidenceInterval {
    pub fn contains(&self, a: f64) -> bool {
        self.lower <= a && a <= self.upper
    }
}

/// Which values the Student-t baseline takes its standard deviation over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TScale {
    /// `{h(x_i)}`.
    #[default]
    Observable,
    /// The raw states `{x_i}`.
    State,
}

/// Fits the map estimate requested by `cfg`.
pub fn fit_estimate(data: &Trajectory, discontinuities: &[f64], cfg: &BootstrapConfig) -> Result<SplineEstimate> {
    build_map_estimate_with(data, discontinuities, cfg.spline_kind, cfg.sparse)
}

/// Pseudo-sums of every observable for `B` orbits of the estimate.
/// Row `k` of the result holds the `B` sums of `hs[k]`.
pub fn bootstrap_sums(
    data: &Trajectory,
    hs: &[Observable],
    cfg: &BootstrapConfig,
    estimate: &SplineEstimate,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let n = data.len();
    if n < 4 {
        return Err(Error::Parameter(format!("bootstrap needs n >= 4, got {n}")));
    }
    let sampler = InitialSampler::new(data.states(), &cfg.bandwidth)?;
    let support = estimate.support();
    let per_replicate: Vec<Vec<f64>> = (0..cfg.b)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(cfg.seed, &[b as u64]);
            let mut x = sampler.sample(&support, &mut rng)?;
            let mut acc = vec![CompensatedSum::default(); hs.len()];
            for step in 0..n {
                if step > 0 {
                    x = eval_estimated_map(estimate, x)?;
                }
                for (a, h) in acc.iter_mut().zip(hs) {
                    a.add(h.eval(x));
                }
            }
            Ok(acc.iter().map(CompensatedSum::value).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..hs.len())
        .map(|k| per_replicate.iter().map(|row| row[k]).collect())
        .collect())
}

/// One bootstrap distribution per observable, all sharing the same fitted
/// map and pseudo-trajectories.
pub fn run_bootstrap_many(
    data: &Trajectory,
    hs: &[Observable],
    cfg: &BootstrapConfig,
    discontinuities: &[f64],
) -> Result<Vec<BootstrapDistribution>> {
    cfg.validate()?;
    let estimate = fit_estimate(data, discontinuities, cfg)?;
    bootstrap_sums(data, hs, cfg, &estimate)?
        .into_iter()
        .map(|sums| BootstrapDistribution::from_sums(cfg.mode, sums, data.len()))
        .collect()
}

pub fn run_bootstrap(
    data: &Trajectory,
    h: &Observable,
    cfg: &BootstrapConfig,
    discontinuities: &[f64],
) -> Result<BootstrapDistribution> {
    let mut v = run_bootstrap_many(data, std::slice::from_ref(h), cfg, discontinuities)?;
    Ok(v.remove(0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Range(alpha))
    }
}

/// Inverts `(S_n - n A) / (sqrt(n) scale)` lying between quantiles.
/// `q(p)` returns the pivot quantile at level `p`.
fn invert(
    s_n: f64,
    n: usize,
    scale: f64,
    alpha: f64,
    side: Side,
    method: Method,
    q: impl Fn(f64) -> Result<f64>,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let nf = n as f64;
    let w = nf.sqrt() * scale;
    let endpoint = |p: f64| -> Result<f64> { Ok((s_n - w * q(p)?) / nf) };
    let (lower, upper) = match side {
        Side::TwoSided => (endpoint(1.0 - alpha / 2.0)?, endpoint(alpha / 2.0)?),
        Side::UpperBounded => (f64::NEG_INFINITY, endpoint(alpha)?),
        Side::LowerBounded => (endpoint(1.0 - alpha)?, f64::INFINITY),
    };
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: 1.0 - alpha,
        side,
        method,
    })
}

/// Pivoted bootstrap interval from a Birkhoff sum `s_n` of length `n`.
pub fn pivoted_interval_from_sum(
    s_n: f64,
    n: usize,
    sigma_hat: f64,
    boot: &BootstrapDistribution,
    alpha: f64,
    side: Side,
) -> Result<ConfidenceInterval> {
    if !(sigma_hat > 0.0) {
        return Err(Error::Scale(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    if !(boot.sigma_star > 0.0) {
        return Err(Error::Scale("bootstrap distribution has zero spread".into()));
    }
    invert(s_n, n, sigma_hat, alpha, side, Method::PBoot, |p| boot.quantile(p))
}

pub fn pivoted_interval(
    data: &Trajectory,
    h: &Observable,
    sigma_hat: f64,
    boot: &BootstrapDistribution,
    alpha: f64,
    side: Side,
) -> Result<ConfidenceInterval> {
    pivoted_interval_from_sum(birkhoff_sum(data, h), data.len(), sigma_hat, boot, alpha, side)
}

pub fn nonpivoted_interval_from_sum(
    s_n: f64,
    n: usize,
    boot: &BootstrapDistribution,
    alpha: f64,
    side: Side,
) -> Result<ConfidenceInterval> {
    invert(s_n, n, 1.0, alpha, side, Method::NPBoot, |p| boot.quantile(p))
}

pub fn nonpivoted_interval(
    data: &Trajectory,
    h: &Observable,
    boot: &BootstrapDistribution,
    alpha: f64,
    side: Side,
) -> Result<ConfidenceInterval> {
    nonpivoted_interval_from_sum(birkhoff_sum(data, h), data.len(), boot, alpha, side)
}

pub fn gaussian_interval_from_sum(
    s_n: f64,
    n: usize,
    sigma_hat: f64,
    alpha: f64,
    side: Side,
) -> Result<ConfidenceInterval> {
    if !(sigma_hat > 0.0) {
        return Err(Error::Scale(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    let z = Normal::standard();
    invert(s_n, n, sigma_hat, alpha, side, Method::Gaussian, |p| {
        Ok(z.inverse_cdf(p))
    })
}

pub fn gaussian_interval(
    data: &Trajectory,
    h: &Observable,
    sigma_hat: f64,
    alpha: f64,
    side: Side,
) -> Result<ConfidenceInterval> {
    gaussian_interval_from_sum(birkhoff_sum(data, h), data.len(), sigma_hat, alpha, side)
}

/// Student-t interval from the values `h(x_i)` and the values the standard
/// deviation is taken over.
pub fn t_interval_from_values(
    h_values: &[f64],
    scale_values: &[f64],
    alpha: f64,
    side: Side,
) -> Result<ConfidenceInterval> {
    let n = h_values.len();
    if n < 2 || scale_values.len() < 2 {
        return Err(Error::DegenerateData("t interval needs at least 2 values".into()));
    }
    let (_, s) = crate::stats::mean_sd(scale_values);
    if !(s > 0.0) {
        return Err(Error::DegenerateData("sample standard deviation is zero".into()));
    }
    let mut acc = CompensatedSum::default();
    h_values.iter().for_each(|&v| acc.add(v));
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    invert(
        acc.value(),
        n,
        s,
        alpha,
        side,
        Method::TApprox,
        |p| Ok(t.inverse_cdf(p)),
    )
}

pub fn t_interval(
    data: &Trajectory,
    h: &Observable,
    alpha: f64,
    side: Side,
    scale: TScale,
) -> Result<ConfidenceInterval> {
    let hv: Vec<f64> = data.states().iter().map(|&x| h.eval(x)).collect();
    match scale {
        TScale::Observable => t_interval_from_values(&hv, &hv, alpha, side),
        TScale::State => t_interval_from_values(&hv, data.states(), alpha, side),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{generate_trajectory, MapSpec, Perturbation};

    fn boot_with(pivots: Vec<f64>, mode: Mode, sigma_star: f64) -> BootstrapDistribution {
        BootstrapDistribution::from_pivots(mode, pivots, Vec::new(), 0.0, sigma_star).unwrap()
    }

    /// 40 pivots whose 2.5% and 97.5% quantiles are -2 and 2.
    fn symmetric_pivots() -> Vec<f64> {
        let mut v = vec![0.0; 40];
        v[0] = -2.0;
        v[38] = 2.0;
        v[39] = 2.0;
        v
    }

    #[test]
    fn pivoted_two_sided() {
        let boot = boot_with(symmetric_pivots(), Mode::Pivoted, 1.0);
        assert_eq!(boot.quantile(0.025).unwrap(), -2.0);
        assert_eq!(boot.quantile(0.975).unwrap(), 2.0);
        let ci = pivoted_interval_from_sum(50.0, 100, 0.5, &boot, 0.05, Side::TwoSided).unwrap();
        assert!(
            (ci.lower - 0.4).abs() < 1e-12 && (ci.upper - 0.6).abs() < 1e-12,
            "{ci:?}"
        );
    }

    #[test]
    fn pivoted_upper() {
        let mut v = vec![0.0; 20];
        v[0] = -1.64;
        let boot = boot_with(v, Mode::Pivoted, 1.0);
        let ci = pivoted_interval_from_sum(50.0, 100, 0.5, &boot, 0.05, Side::UpperBounded).unwrap();
        assert_eq!(ci.lower, f64::NEG_INFINITY);
        assert!((ci.upper - 0.582).abs() < 1e-12);
    }

    #[test]
    fn zero_quantiles_collapse() {
        let boot = boot_with(vec![0.0; 10], Mode::Pivoted, 1.0);
        let ci = pivoted_interval_from_sum(37.0, 100, 0.5, &boot, 0.05, Side::TwoSided).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.37, 0.37));
        let ci = nonpivoted_interval_from_sum(37.0, 100, &boot, 0.05, Side::TwoSided).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.37, 0.37));
    }

    #[test]
    fn zero_spread_is_a_scale_error() {
        let boot = BootstrapDistribution::from_sums(Mode::Pivoted, vec![3.0, 3.0], 4).unwrap();
        assert_eq!(boot.pivots, vec![0.0, 0.0]);
        assert_eq!(boot.sigma_star, 0.0);
        assert!(matches!(
            pivoted_interval_from_sum(3.0, 4, 1.0, &boot, 0.05, Side::TwoSided),
            Err(Error::Scale(_))
        ));
    }

    #[test]
    fn nonpivoted_hand_example() {
        let boot = boot_with(vec![-1.0, 0.0, 1.0, 2.0], Mode::NonPivoted, 1.0);
        let ci = nonpivoted_interval_from_sum(10.0, 4, &boot, 0.5, Side::TwoSided).unwrap();
        assert_eq!((ci.lower, ci.upper), (2.0, 3.0));
    }

    #[test]
    fn gaussian_hand_example() {
        let ci = gaussian_interval_from_sum(50.0, 100, 0.5, 0.05, Side::TwoSided).unwrap();
        assert!((ci.lower - (0.5 - 1.959964 * 0.05)).abs() < 1e-6);
        assert!((ci.upper - (0.5 + 1.959964 * 0.05)).abs() < 1e-6);
        assert!(((ci.lower + ci.upper) / 2.0 - 0.5).abs() < 1e-15);
        let wide = gaussian_interval_from_sum(50.0, 100, 0.5, 0.01, Side::TwoSided).unwrap();
        assert!(wide.lower < ci.lower && wide.upper > ci.upper);
        let narrow = gaussian_interval_from_sum(50.0, 100, 0.5, 0.999, Side::TwoSided).unwrap();
        assert!(narrow.upper - narrow.lower < 1e-3);
    }

    #[test]
    fn t_hand_example() {
        let ci = t_interval_from_values(&[0.0, 1.0], &[0.0, 1.0], 0.05, Side::TwoSided).unwrap();
        let half = (ci.upper - ci.lower) / 2.0;
        assert!(((ci.upper + ci.lower) / 2.0 - 0.5).abs() < 1e-12);
        assert!((half - 6.353).abs() < 1e-3, "{half}");
        assert!(matches!(
            t_interval_from_values(&[0.3; 5], &[0.3; 5], 0.05, Side::TwoSided),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn identity_estimate_gives_constant_orbits() {
        let spec = MapSpec::doubling().with_perturbation(Perturbation::None);
        // Each state repeated: the first image of every abscissa is itself.
        let states: Vec<f64> = (0..60).map(|i| 0.1 + 0.025 * (i / 2) as f64).collect();
        let traj = Trajectory::new(states.clone(), spec).unwrap();
        let cfg = BootstrapConfig {
            spline_kind: SplineKind::Linear,
            ..BootstrapConfig::nonpivoted(50, 1)
        };
        let est = fit_estimate(&traj, &[], &cfg).unwrap();
        for &x in &states {
            assert!((eval_estimated_map(&est, x).unwrap() - x).abs() < 1e-12);
        }
        let boot = run_bootstrap(&traj, &Observable::Identity, &cfg, &[]).unwrap();
        let n = states.len() as f64;
        let x0: Vec<f64> = boot.sums.iter().map(|s| s / n).collect();
        let mean = x0.iter().sum::<f64>() / x0.len() as f64;
        for (p, x) in boot.pivots.iter().zip(&x0) {
            assert!((p - n.sqrt() * (x - mean)).abs() < 1e-9);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let spec = MapSpec::doubling();
        let mut rng = stream(5, &[]);
        let traj = generate_trajectory(&spec, 0.3141, 50, &mut rng).unwrap();
        let cfg = BootstrapConfig {
            sparse: SparseSegments::Degrade,
            ..BootstrapConfig::pivoted(200, 17)
        };
        let a = run_bootstrap(&traj, &Observable::Square, &cfg, &spec.discontinuities).unwrap();
        let b = run_bootstrap(&traj, &Observable::Square, &cfg, &spec.discontinuities).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        let ci = pivoted_interval(&traj, &Observable::Square, 0.3, &a, 0.05, Side::TwoSided).unwrap();
        assert!(ci.lower < ci.upper);
    }
}
