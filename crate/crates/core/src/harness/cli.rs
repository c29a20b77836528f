//! Subcommand bodies. Each returns named artifacts; the first one is what
//! gets printed when no output directory is given.

use std::fmt::Write as _;

use crate::bootstrap::{
    gaussian_interval, nonpivoted_interval, pivoted_interval, run_bootstrap, t_interval, Method, Mode,
};
use crate::dynsys::{generate_trajectory, initial_state};
use crate::edgeworth::{default_grid, estimate_asymptotic_moments, truth_pivots, Cdf, EdgeworthCdf, StandardNormalCdf};
use crate::error::{Error, Result};
use crate::harness::config::Config;
use crate::harness::coverage::{
    map_from_config, observable_from_name, replication_data, run_coverage_experiment, sigma_seed, ExperimentConfig,
};
use crate::harness::table::{emit_sigma_csv, emit_table, Format};
use crate::rng::{derive_seed, purpose, stream, tag_id};
use crate::stats::{true_sigma_mc, Ecdf};

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

impl Artifact {
    fn new(name: impl Into<String>, body: String) -> Self {
        Self {
            name: name.into(),
            body,
        }
    }
}

/// Renders rows as CSV, or as right-aligned whitespace-separated columns.
fn render(header: &[&str], rows: &[Vec<String>], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for r in rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
        Format::AlignedText => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |cells: Vec<&str>, out: &mut String| {
                let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                out.push_str(&parts.join(" "));
                out.push('\n');
            };
            line(header.to_vec(), &mut out);
            for r in rows {
                line(r.iter().map(String::as_str).collect(), &mut out);
            }
        }
    }
    out
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::AlignedText => "txt",
    }
}

/// Applies the `--seed` override.
fn with_seed(cfg: &Config, seed: Option<u64>) -> Config {
    let mut c = cfg.clone();
    if let Some(s) = seed {
        c.set("experiment.seed", s.to_string());
    }
    c
}

pub fn simulate(cfg: &Config, seed: Option<u64>, format: Format) -> Result<Vec<Artifact>> {
    let cfg = with_seed(cfg, seed);
    let exp = ExperimentConfig::from_config(&cfg)?;
    let map = map_from_config(cfg.raw("simulate.map").unwrap_or("doubling"), &cfg)?;
    let n: usize = cfg.get_or("simulate.n", 100)?;
    let mut rng = stream(exp.seed, &[purpose::SIMULATE, tag_id(map.name())]);
    let x0 = match cfg.get::<f64>("simulate.x0")? {
        Some(x) if map.support.contains(x) => x,
        Some(x) => return Err(Error::Config(format!("simulate.x0={x} lies outside the support"))),
        None => initial_state(&map, &mut rng),
    };
    let traj = generate_trajectory(&map, x0, n, &mut rng)?;
    let rows: Vec<Vec<String>> = traj
        .states()
        .iter()
        .enumerate()
        .map(|(i, x)| vec![i.to_string(), x.to_string()])
        .collect();
    Ok(vec![Artifact::new(
        format!("trajectory.{}", ext(format)),
        render(&["index", "x"], &rows, format),
    )])
}

pub fn bootstrap(cfg: &Config, seed: Option<u64>, format: Format) -> Result<Vec<Artifact>> {
    let cfg = with_seed(cfg, seed);
    let exp = ExperimentConfig::from_config(&cfg)?;
    let map = map_from_config(cfg.raw("bootstrap.map").unwrap_or("doubling"), &cfg)?;
    let h = observable_from_name(cfg.raw("bootstrap.observable").unwrap_or("x"))?;
    let n: usize = cfg.get_or("bootstrap.n", 100)?;
    let data = replication_data(exp.seed, &map, n, 0)?;
    let truth = true_sigma_mc(&map, &h, n, exp.sigma_reps, sigma_seed(exp.seed, &map, &h, n))?;
    let map_id = tag_id(map.name());
    let mut rows = Vec::new();
    for &method in &exp.methods {
        let boot = match method {
            Method::PBoot | Method::NPBoot => {
                let (mode, tag) = if method == Method::PBoot {
                    (Mode::Pivoted, purpose::PIVOTED)
                } else {
                    (Mode::NonPivoted, purpose::NON_PIVOTED)
                };
                let s = derive_seed(exp.seed, &[tag, map_id, n as u64, 0]);
                Some(run_bootstrap(
                    &data,
                    &h,
                    &exp.bootstrap_config(mode, s),
                    &map.discontinuities,
                )?)
            }
            _ => None,
        };
        for &side in &exp.sides {
            let ci = match (method, &boot) {
                (Method::TApprox, _) => t_interval(&data, &h, exp.alpha, side, exp.t_scale)?,
                (Method::Gaussian, _) => gaussian_interval(&data, &h, truth.sigma, exp.alpha, side)?,
                (Method::PBoot, Some(b)) => pivoted_interval(&data, &h, truth.sigma, b, exp.alpha, side)?,
                (Method::NPBoot, Some(b)) => nonpivoted_interval(&data, &h, b, exp.alpha, side)?,
                _ => unreachable!("bootstrap computed for bootstrap methods"),
            };
            rows.push(vec![
                method.name().to_string(),
                side.name().to_string(),
                ci.lower.to_string(),
                ci.upper.to_string(),
            ]);
        }
    }
    Ok(vec![Artifact::new(
        format!("intervals.{}", ext(format)),
        render(&["method", "side", "lower", "upper"], &rows, format),
    )])
}

pub fn sigma(cfg: &Config, seed: Option<u64>, format: Format) -> Result<Vec<Artifact>> {
    let cfg = with_seed(cfg, seed);
    let exp = ExperimentConfig::from_config(&cfg)?;
    let mut rows = Vec::new();
    for map in &exp.maps {
        for h in &exp.observables {
            for &n in &exp.sample_sizes {
                let e = true_sigma_mc(map, h, n, exp.sigma_reps, sigma_seed(exp.seed, map, h, n))?;
                rows.push(vec![
                    map.name().to_string(),
                    h.name().to_string(),
                    n.to_string(),
                    e.a.to_string(),
                    e.sigma.to_string(),
                    e.a_std_error.to_string(),
                    e.sigma_std_error.to_string(),
                ]);
            }
        }
    }
    Ok(vec![Artifact::new(
        format!("sigma.{}", ext(format)),
        render(&["map", "h", "n", "A", "sigma", "A_se", "sigma_se"], &rows, format),
    )])
}

pub fn edgeworth(cfg: &Config, seed: Option<u64>, format: Format) -> Result<Vec<Artifact>> {
    let cfg = with_seed(cfg, seed);
    let exp = ExperimentConfig::from_config(&cfg)?;
    let map = map_from_config(cfg.raw("edgeworth.map").unwrap_or("doubling"), &cfg)?;
    let h = observable_from_name(cfg.raw("edgeworth.observable").unwrap_or("x"))?;
    let n: usize = cfg.get_or("edgeworth.n", 25)?;
    let reps: usize = cfg.get_or("edgeworth.reps", 10_000)?;
    let b: usize = cfg.get_or("edgeworth.B", exp.b)?;
    let ids = [tag_id(map.name()), tag_id(h.name()), n as u64];
    let key = |tag: u64| derive_seed(exp.seed, &[tag, ids[0], ids[1], ids[2]]);

    let m = estimate_asymptotic_moments(&map, &h, n, reps, key(purpose::MOMENTS))?;
    let truth = Ecdf::new(truth_pivots(&map, &h, n, reps, m.a, m.sigma, key(purpose::TRUTH_LAW))?)?;
    let data = replication_data(exp.seed, &map, n, 0)?;
    let bcfg = crate::bootstrap::BootstrapConfig {
        b,
        ..exp.bootstrap_config(Mode::Pivoted, key(purpose::PIVOTED))
    };
    let boot = run_bootstrap(&data, &h, &bcfg, &map.discontinuities)?;
    let edge = EdgeworthCdf::new(m, n)?;

    let rows: Vec<Vec<String>> = default_grid()
        .into_iter()
        .map(|x| {
            vec![
                x.to_string(),
                truth.cdf(x).to_string(),
                StandardNormalCdf.cdf(x).to_string(),
                edge.cdf(x).to_string(),
                boot.ecdf().cdf(x).to_string(),
            ]
        })
        .collect();
    let mut moments = String::new();
    let _ = writeln!(
        moments,
        "A={}\nsigma={}\nM_nu={}\nM_tilde_mu={}",
        m.a, m.sigma, m.m_nu, m.m_tilde_mu
    );
    let _ = writeln!(
        moments,
        "A_se={}\nM_nu_se={}\nM_tilde_mu_se={}",
        m.a_std_error, m.m_nu_std_error, m.m_tilde_mu_std_error
    );
    Ok(vec![
        Artifact::new(
            format!("edgeworth.{}", ext(format)),
            render(&["x", "ecdf", "gaussian", "edgeworth", "bootstrap"], &rows, format),
        ),
        Artifact::new("moments.txt", moments),
    ])
}

pub fn coverage(cfg: &Config, seed: Option<u64>, format: Format) -> Result<Vec<Artifact>> {
    let cfg = with_seed(cfg, seed);
    let exp = ExperimentConfig::from_config(&cfg)?;
    let report = run_coverage_experiment(&exp)?;
    let primary = Artifact::new(format!("coverage.{}", ext(format)), emit_table(&report, format)?);
    let other = match format {
        Format::Csv => Format::AlignedText,
        Format::AlignedText => Format::Csv,
    };
    let p = &report.provenance;
    Ok(vec![
        primary,
        Artifact::new(format!("coverage.{}", ext(other)), emit_table(&report, other)?),
        Artifact::new("sigma.csv", emit_sigma_csv(&report.sigma_table)),
        Artifact::new(
            "provenance.txt",
            format!(
                "seed={}\nconfig_sha256={}\nstarted_unix={}\nfinished_unix={}\n{}",
                p.seed,
                p.config_digest,
                p.started_unix,
                p.finished_unix,
                exp.canonical()
            ),
        ),
    ])
}
