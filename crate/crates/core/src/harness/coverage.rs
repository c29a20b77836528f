//! The coverage study: map x observable x n x method x side.

use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bootstrap::{
    gaussian_interval, nonpivoted_interval, pivoted_interval, run_bootstrap_many, t_interval, BootstrapConfig,
    BootstrapDistribution, Method, Mode, Side, TScale,
};
use crate::density::{BandwidthBase, BandwidthRule};
use crate::dynsys::{generate_trajectory, initial_state, DrillExtension, MapSpec, Perturbation, Trajectory};
use crate::error::{Error, Result};
use crate::harness::config::Config;
use crate::rng::{derive_seed, purpose, stream, tag_id};
use crate::spline::{SparseSegments, SplineKind};
use crate::stats::{true_sigma_mc, Observable, SigmaEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub maps: Vec<MapSpec>,
    pub observables: Vec<Observable>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub b: usize,
    pub alpha: f64,
    pub sigma_reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub sides: Vec<Side>,
    pub bandwidth: BandwidthRule,
    pub pivoted_spline: SplineKind,
    pub nonpivoted_spline: SplineKind,
    pub sparse: SparseSegments,
    pub t_scale: TScale,
}

impl Default for ExperimentConfig {
    /// The full study at its published scale.
    fn default() -> Self {
        Self {
            maps: vec![
                MapSpec::doubling(),
                MapSpec::drill(3.0).expect("default drill parameters are valid"),
                MapSpec::logistic(4.0).expect("default logistic parameters are valid"),
            ],
            observables: vec![Observable::Identity, Observable::Square, Observable::Quartic],
            sample_sizes: vec![25, 50, 100],
            replications: 700,
            b: 1000,
            alpha: 0.05,
            sigma_reps: 100_000,
            seed: 20_240_601,
            methods: Method::ALL.to_vec(),
            sides: Side::ALL.to_vec(),
            bandwidth: BandwidthRule::default(),
            pivoted_spline: SplineKind::NaturalCubic,
            nonpivoted_spline: SplineKind::FmmCubic,
            sparse: SparseSegments::Degrade,
            t_scale: TScale::Observable,
        }
    }
}

/// Builds a map by name using the `map.*` keys of `cfg`.
pub fn map_from_config(name: &str, cfg: &Config) -> Result<MapSpec> {
    let mut spec = match name.trim() {
        "doubling" => MapSpec::doubling(),
        "drill" => {
            let ext = match cfg.raw("map.drill_extension") {
                Some(e) => DrillExtension::parse(e)
                    .ok_or_else(|| Error::Config(format!("unknown map.drill_extension {e:?}")))?,
                None => DrillExtension::default(),
            };
            MapSpec::drill_with(cfg.get_or("map.drill_lambda", 3.0)?, ext)?
        }
        "logistic" => MapSpec::logistic(cfg.get_or("map.logistic_r", 4.0)?)?,
        other => return Err(Error::Config(format!("unknown map {other:?}"))),
    };
    if let Some(m) = cfg.get::<f64>("map.perturbation")? {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::Config(format!("map.perturbation must be >= 0, got {m}")));
        }
        spec.perturbation = match spec.perturbation {
            Perturbation::BinaryNoise(_) => Perturbation::BinaryNoise(m),
            Perturbation::TentConjugateNoise(_) => Perturbation::TentConjugateNoise(m),
            Perturbation::None => Perturbation::None,
        };
    }
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

pub fn observable_from_name(name: &str) -> Result<Observable> {
    Observable::parse(name).ok_or_else(|| Error::Config(format!("unknown observable {name:?}")))
}

impl ExperimentConfig {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let d = Self::default();
        let maps = match cfg.list("experiment.maps", |s| Some(s.to_string()))? {
            Some(names) => names.iter().map(|n| map_from_config(n, cfg)).collect::<Result<_>>()?,
            None => ["doubling", "drill", "logistic"]
                .iter()
                .map(|n| map_from_config(n, cfg))
                .collect::<Result<_>>()?,
        };
        let bandwidth = match cfg.raw("bandwidth.rule").unwrap_or("ucv") {
            "ucv" => BandwidthRule {
                base: BandwidthBase::UnbiasedCv,
                divisor: cfg.get_or("bandwidth.divisor", 4.0)?,
            },
            "fixed" => BandwidthRule::fixed(
                cfg.get("bandwidth.value")?
                    .ok_or_else(|| Error::Config("bandwidth.rule=fixed needs bandwidth.value".into()))?,
            ),
            other => return Err(Error::Config(format!("unknown bandwidth.rule {other:?}"))),
        };
        let spline = |key: &str, default: SplineKind| -> Result<SplineKind> {
            match cfg.raw(key) {
                Some(s) => SplineKind::parse(s).ok_or_else(|| Error::Config(format!("{key}: unknown spline {s:?}"))),
                None => Ok(default),
            }
        };
        let sparse = match cfg.raw("spline.sparse").unwrap_or("degrade") {
            "degrade" => SparseSegments::Degrade,
            "error" => SparseSegments::Error,
            other => return Err(Error::Config(format!("unknown spline.sparse {other:?}"))),
        };
        let t_scale = match cfg.raw("t.scale").unwrap_or("observable") {
            "observable" => TScale::Observable,
            "state" => TScale::State,
            other => return Err(Error::Config(format!("unknown t.scale {other:?}"))),
        };
        let out = Self {
            maps,
            observables: cfg
                .list("experiment.observables", Observable::parse)?
                .unwrap_or(d.observables),
            sample_sizes: cfg.list("experiment.n", |s| s.parse().ok())?.unwrap_or(d.sample_sizes),
            replications: cfg.get_or("experiment.replications", d.replications)?,
            b: cfg.get_or("experiment.B", d.b)?,
            alpha: cfg.get_or("experiment.alpha", d.alpha)?,
            sigma_reps: cfg.get_or("experiment.sigma_reps", d.sigma_reps)?,
            seed: cfg.get_or("experiment.seed", d.seed)?,
            methods: cfg.list("experiment.methods", Method::parse)?.unwrap_or(d.methods),
            sides: cfg.list("experiment.sides", Side::parse)?.unwrap_or(d.sides),
            bandwidth,
            pivoted_spline: spline("spline.pivoted", d.pivoted_spline)?,
            nonpivoted_spline: spline("spline.nonpivoted", d.nonpivoted_spline)?,
            sparse,
            t_scale,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.maps.is_empty() || self.observables.is_empty() || self.sample_sizes.is_empty() {
            return bad("maps, observables and sample sizes must be non-empty");
        }
        if self.methods.is_empty() || self.sides.is_empty() {
            return bad("methods and sides must be non-empty");
        }
        if self.sample_sizes.iter().any(|&n| n < 4) {
            return bad("sample sizes must be at least 4");
        }
        if self.replications == 0 || self.b < 2 || self.sigma_reps < 2 {
            return bad("replications >= 1, B >= 2 and sigma_reps >= 2 required");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must be in (0, 1)");
        }
        Ok(())
    }

    pub fn bootstrap_config(&self, mode: Mode, seed: u64) -> BootstrapConfig {
        let base = match mode {
            Mode::Pivoted => BootstrapConfig {
                spline_kind: self.pivoted_spline,
                ..BootstrapConfig::pivoted(self.b, seed)
            },
            Mode::NonPivoted => BootstrapConfig {
                spline_kind: self.nonpivoted_spline,
                ..BootstrapConfig::nonpivoted(self.b, seed)
            },
        };
        BootstrapConfig {
            alpha: self.alpha,
            sparse: self.sparse,
            bandwidth: self.bandwidth,
            ..base
        }
    }

    /// Stable textual form used for the provenance digest.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let join = |v: Vec<String>| v.join(",");
        let _ = writeln!(s, "maps={}", join(self.maps.iter().map(|m| format!("{m:?}")).collect()));
        let _ = writeln!(
            s,
            "observables={}",
            join(self.observables.iter().map(|h| h.name().to_string()).collect())
        );
        let _ = writeln!(
            s,
            "n={}",
            join(self.sample_sizes.iter().map(usize::to_string).collect())
        );
        let _ = writeln!(s, "replications={}", self.replications);
        let _ = writeln!(s, "B={}", self.b);
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "sigma_reps={}", self.sigma_reps);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(
            s,
            "methods={}",
            join(self.methods.iter().map(|m| m.name().to_string()).collect())
        );
        let _ = writeln!(
            s,
            "sides={}",
            join(self.sides.iter().map(|m| m.name().to_string()).collect())
        );
        let _ = writeln!(s, "bandwidth={:?}", self.bandwidth);
        let _ = writeln!(
            s,
            "splines={:?},{:?},{:?}",
            self.pivoted_spline, self.nonpivoted_spline, self.sparse
        );
        let _ = writeln!(s, "t_scale={:?}", self.t_scale);
        s
    }

    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub map: String,
    pub observable: String,
    pub n: usize,
    pub method: Method,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellResult {
    pub hits: usize,
    /// Replications that produced an interval.
    pub reps: usize,
    /// Replications that failed and are excluded from `reps`.
    pub failures: usize,
}

impl CellResult {
    pub fn coverage(&self) -> f64 {
        if self.reps == 0 {
            f64::NAN
        } else {
            self.hits as f64 / self.reps as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaRow {
    pub map: String,
    pub observable: String,
    pub n: usize,
    pub estimate: SigmaEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub config_digest: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Cells in canonical order: map, observable, n, method, side as listed
    /// in the configuration.
    pub cells: Vec<(CellKey, CellResult)>,
    pub sigma_table: Vec<SigmaRow>,
    pub provenance: Provenance,
}

impl CoverageReport {
    pub fn get(&self, map: &str, observable: &str, n: usize, method: Method, side: Side) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|(k, _)| {
                k.map == map && k.observable == observable && k.n == n && k.method == method && k.side == side
            })
            .map(|(_, r)| r)
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Seed for the simulated truth of one (map, observable, n) cell.
pub fn sigma_seed(root: u64, map: &MapSpec, h: &Observable, n: usize) -> u64 {
    derive_seed(root, &[purpose::SIGMA, tag_id(map.name()), tag_id(h.name()), n as u64])
}

/// The data trajectory of replication `r`.
pub fn replication_data(root: u64, map: &MapSpec, n: usize, r: usize) -> Result<Trajectory> {
    let mut rng = stream(root, &[purpose::DATA, tag_id(map.name()), n as u64, r as u64]);
    let x0 = initial_state(map, &mut rng);
    generate_trajectory(map, x0, n, &mut rng)
}

type Outcome = Result<bool>;

/// Outcomes for one replication, indexed `[observable][method][side]`.
fn run_replication(
    cfg: &ExperimentConfig,
    map: &MapSpec,
    n: usize,
    r: usize,
    truth: &[SigmaEstimate],
) -> Vec<Vec<Vec<Outcome>>> {
    let map_id = tag_id(map.name());
    let data = replication_data(cfg.seed, map, n, r);
    let boot = |mode: Mode, tag: u64| -> Option<Result<Vec<BootstrapDistribution>>> {
        let wanted = match mode {
            Mode::Pivoted => Method::PBoot,
            Mode::NonPivoted => Method::NPBoot,
        };
        if !cfg.methods.contains(&wanted) {
            return None;
        }
        let data = match &data {
            Ok(d) => d,
            Err(e) => return Some(Err(e.clone())),
        };
        let seed = derive_seed(cfg.seed, &[tag, map_id, n as u64, r as u64]);
        Some(run_bootstrap_many(
            data,
            &cfg.observables,
            &cfg.bootstrap_config(mode, seed),
            &map.discontinuities,
        ))
    };
    let pboot = boot(Mode::Pivoted, purpose::PIVOTED);
    let npboot = boot(Mode::NonPivoted, purpose::NON_PIVOTED);

    cfg.observables
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let t = &truth[k];
            cfg.methods
                .iter()
                .map(|&method| {
                    cfg.sides
                        .iter()
                        .map(|&side| {
                            let data = data.as_ref().map_err(Clone::clone)?;
                            let pick = |b: &Option<Result<Vec<BootstrapDistribution>>>| match b
                                .as_ref()
                                .expect("bootstrap run for requested method")
                            {
                                Ok(v) => Ok(v[k].clone()),
                                Err(e) => Err(e.clone()),
                            };
                            let ci = match method {
                                Method::TApprox => t_interval(data, h, cfg.alpha, side, cfg.t_scale),
                                Method::Gaussian => gaussian_interval(data, h, t.sigma, cfg.alpha, side),
                                Method::PBoot => pivoted_interval(data, h, t.sigma, &pick(&pboot)?, cfg.alpha, side),
                                Method::NPBoot => nonpivoted_interval(data, h, &pick(&npboot)?, cfg.alpha, side),
                            }?;
                            Ok(ci.contains(t.a))
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

type MethodCells = (Method, Side, CellResult);

/// Runs the full factorial study. Deterministic given `cfg`.
pub fn run_coverage_experiment(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let started_unix = unix_now();
    let mut cells = Vec::new();
    let mut sigma_table = Vec::new();
    for map in &cfg.maps {
        let mut by_h: Vec<Vec<(usize, Vec<MethodCells>)>> = vec![Vec::new(); cfg.observables.len()];
        for &n in &cfg.sample_sizes {
            let truth: Vec<SigmaEstimate> = cfg
                .observables
                .iter()
                .map(|h| true_sigma_mc(map, h, n, cfg.sigma_reps, sigma_seed(cfg.seed, map, h, n)))
                .collect::<Result<_>>()?;
            for (h, t) in cfg.observables.iter().zip(&truth) {
                sigma_table.push(SigmaRow {
                    map: map.name().to_string(),
                    observable: h.name().to_string(),
                    n,
                    estimate: *t,
                });
            }
            let outcomes: Vec<_> = (0..cfg.replications)
                .into_par_iter()
                .map(|r| run_replication(cfg, map, n, r, &truth))
                .collect();
            for (k, slot) in by_h.iter_mut().enumerate() {
                let mut acc = Vec::new();
                for (mi, &method) in cfg.methods.iter().enumerate() {
                    for (si, &side) in cfg.sides.iter().enumerate() {
                        let mut res = CellResult::default();
                        for rep in &outcomes {
                            match rep[k][mi][si] {
                                Ok(hit) => {
                                    res.reps += 1;
                                    res.hits += usize::from(hit);
                                }
                                Err(_) => res.failures += 1,
                            }
                        }
                        acc.push((method, side, res));
                    }
                }
                slot.push((n, acc));
            }
        }
        for (h, per_n) in cfg.observables.iter().zip(by_h) {
            for (n, acc) in per_n {
                for (method, side, res) in acc {
                    cells.push((
                        CellKey {
                            map: map.name().to_string(),
                            observable: h.name().to_string(),
                            n,
                            method,
                            side,
                        },
                        res,
                    ));
                }
            }
        }
    }
    Ok(CoverageReport {
        cells,
        sigma_table,
        provenance: Provenance {
            seed: cfg.seed,
            config_digest: cfg.digest(),
            started_unix,
            finished_unix: unix_now(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            maps: vec![MapSpec::doubling()],
            observables: vec![Observable::Identity],
            sample_sizes: vec![25],
            replications: 10,
            b: 50,
            sigma_reps: 2000,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn tiny_study_has_rational_coverage() {
        let report = run_coverage_experiment(&tiny()).unwrap();
        assert_eq!(report.cells.len(), 12);
        for (_, c) in &report.cells {
            assert_eq!(c.reps + c.failures, 10);
            let cov = c.coverage();
            if c.reps == 10 {
                assert!((cov * 10.0 - (cov * 10.0).round()).abs() < 1e-12);
            }
        }
        assert_eq!(report.sigma_table.len(), 1);
    }

    #[test]
    fn cells_do_not_depend_on_neighbours() {
        let full = run_coverage_experiment(&tiny()).unwrap();
        let only = run_coverage_experiment(&ExperimentConfig {
            methods: vec![Method::PBoot],
            sides: vec![Side::LowerBounded],
            ..tiny()
        })
        .unwrap();
        let (k, v) = &only.cells[0];
        assert_eq!(full.get(&k.map, &k.observable, k.n, k.method, k.side), Some(v));
    }

    #[test]
    fn config_round_trip() {
        let c = Config::parse(
            "experiment.maps=doubling,logistic\nexperiment.observables=x4\nexperiment.n=30\n\
             experiment.methods=pboot,t\nexperiment.sides=upper\nbandwidth.divisor=2\nspline.sparse=error\n",
        )
        .unwrap();
        let e = ExperimentConfig::from_config(&c).unwrap();
        assert_eq!(e.maps.len(), 2);
        assert_eq!(e.observables, vec![Observable::Quartic]);
        assert_eq!(e.methods, vec![Method::PBoot, Method::TApprox]);
        assert_eq!(e.bandwidth.divisor, 2.0);
        assert_eq!(e.sparse, SparseSegments::Error);
        assert_ne!(e.digest(), ExperimentConfig::default().digest());
        assert!(ExperimentConfig::from_config(&Config::parse("experiment.maps=henon").unwrap()).is_err());
        assert!(ExperimentConfig::from_config(&Config::parse("experiment.alpha=1.5").unwrap()).is_err());
    }
}
