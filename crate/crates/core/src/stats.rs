//! Birkhoff sums, observables, empirical distribution functions and the two
//! long-run scale estimates.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dynsys::{initial_state, perturbed_step, MapSpec, Trajectory};
use crate::error::{Error, Result};
use crate::rng::stream;

/// A known function of the state whose time average is studied.
#[derive(Clone)]
pub enum Observable {
    Identity,
    Square,
    Quartic,
    Custom {
        tag: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Observable {
    pub fn custom(tag: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Observable::Custom {
            tag: tag.into(),
            f: Arc::new(f),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Observable::Identity => x,
            Observable::Square => x * x,
            Observable::Quartic => {
                let x2 = x * x;
                x2 * x2
            }
            Observable::Custom { f, .. } => f(x),
        }
    }

    /// Stable short name: `x`, `x2`, `x4` or the custom tag.
    pub fn name(&self) -> &str {
        match self {
            Observable::Identity => "x",
            Observable::Square => "x2",
            Observable::Quartic => "x4",
            Observable::Custom { tag, .. } => tag,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "x" | "identity" => Some(Observable::Identity),
            "x2" | "x^2" | "square" => Some(Observable::Square),
            "x4" | "x^4" | "quartic" => Some(Observable::Quartic),
            _ => None,
        }
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({})", self.name())
    }
}

impl PartialEq for Observable {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `sum h(x_i)` over a sequence of states.
pub fn birkhoff_sum_of(states: &[f64], h: &Observable) -> f64 {
    let mut acc = CompensatedSum::default();
    for &x in states {
        acc.add(h.eval(x));
    }
    acc.value()
}

pub fn birkhoff_sum(traj: &Trajectory, h: &Observable) -> f64 {
    birkhoff_sum_of(traj.states(), h)
}

/// Sorted sample defining a right-continuous step CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateData("empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Numerical("NaN in sample".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{v <= x} / B`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// `#{v < x} / B`, the left limit at `x`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    /// The `ceil(p B)`-th order statistic.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Range(p));
        }
        let b = self.len() as f64;
        let target = p * b;
        // p * B that should be an integer can come out a hair above it.
        let nearest = target.round();
        let rank = if (target - nearest).abs() <= 1e-9 * b {
            nearest
        } else {
            target.ceil()
        };
        let idx = (rank as usize).clamp(1, self.len()) - 1;
        Ok(self.sorted[idx])
    }
}

pub fn ecdf_quantile(e: &Ecdf, p: f64) -> Result<f64> {
    e.quantile(p)
}

/// Monte Carlo spatial mean and long-run standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    /// Grand mean of `S_n / n`.
    pub a: f64,
    /// Sample standard deviation of `S_n / sqrt(n)`.
    pub sigma: f64,
    pub a_std_error: f64,
    pub sigma_std_error: f64,
    pub n: usize,
    pub reps: usize,
}

/// Runs one uniform-started trajectory of `len` states, reporting the
/// Birkhoff sums of the windows `[0, n)` and `[skip, skip + len2)`.
pub(crate) fn orbit_sums(
    spec: &MapSpec,
    h: &Observable,
    n: usize,
    tail: Option<(usize, usize)>,
    rng: &mut crate::rng::Stream,
) -> Result<(f64, f64)> {
    let end = match tail {
        Some((skip, len)) => n.max(skip + len),
        None => n,
    };
    let mut x = initial_state(spec, rng);
    let mut head = CompensatedSum::default();
    let mut rest = CompensatedSum::default();
    for i in 0..end {
        if i > 0 {
            x = perturbed_step(spec, x, rng)?;
        }
        let v = h.eval(x);
        if i < n {
            head.add(v);
        }
        if let Some((skip, len)) = tail {
            if i >= skip && i < skip + len {
                rest.add(v);
            }
        }
    }
    Ok((head.value(), rest.value()))
}

/// Mean and sample standard deviation, accumulated in index order.
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut acc = CompensatedSum::default();
    values.iter().for_each(|&v| acc.add(v));
    let mean = acc.value() / n;
    let mut ss = CompensatedSum::default();
    values.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
    let sd = if values.len() > 1 {
        (ss.value() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Simulated "true" mean and long-run scale at sample size `n`.
///
/// Replication `r` draws from the stream keyed `(seed, r)`, so the result
/// is identical for any number of threads.
pub fn true_sigma_mc(spec: &MapSpec, h: &Observable, n: usize, reps: usize, seed: u64) -> Result<SigmaEstimate> {
    if n < 1 || reps < 2 {
        return Err(Error::Parameter(format!(
            "need n >= 1 and reps >= 2, got n={n} reps={reps}"
        )));
    }
    spec.validate()?;
    let sums: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[r as u64]);
            orbit_sums(spec, h, n, None, &mut rng).map(|(s, _)| s)
        })
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let per_mean: Vec<f64> = sums.iter().map(|s| s / nf).collect();
    let (a, sd_mean) = mean_sd(&per_mean);
    let sigma = sd_mean * nf.sqrt();
    let repsf = reps as f64;
    Ok(SigmaEstimate {
        a,
        sigma,
        a_std_error: sd_mean / repsf.sqrt(),
        sigma_std_error: sigma / (2.0 * (repsf - 1.0)).sqrt(),
        n,
        reps,
    })
}

/// `sqrt((1/B) sum ((S_b - mean S) / sqrt(n))^2)`.
pub fn sigma_star(boot_sums: &[f64], n: usize) -> Result<f64> {
    if boot_sums.len() < 2 {
        return Err(Error::Parameter("need at least 2 bootstrap sums".into()));
    }
    let b = boot_sums.len() as f64;
    let mut acc = CompensatedSum::default();
    boot_sums.iter().for_each(|&s| acc.add(s));
    let mean = acc.value() / b;
    let mut ss = CompensatedSum::default();
    boot_sums.iter().for_each(|&s| ss.add((s - mean) * (s - mean)));
    Ok((ss.value() / b / n as f64).sqrt())
}
