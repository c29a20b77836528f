//! Coverage tables as CSV or aligned text.

use std::fmt::Write as _;

use crate::bootstrap::{Method, Side};
use crate::error::{Error, Result};
use crate::harness::coverage::{CellKey, CellResult, CoverageReport, SigmaRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    AlignedText,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "text" => Some(Format::AlignedText),
            _ => None,
        }
    }
}

pub const CSV_HEADER: &str = "method,h,n,side,map,coverage,reps,hits,failures";

/// Distinct values in first-appearance order.
fn ordered<T: PartialEq + Clone>(it: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for v in it {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn coverage_text(c: &CellResult) -> String {
    if c.reps == 0 {
        "nan".to_string()
    } else {
        format!("{:.3}", c.coverage())
    }
}

/// One table per (map, side), rows in method order, columns observable x n.
pub fn emit_table(report: &CoverageReport, format: Format) -> Result<String> {
    if report.cells.is_empty() {
        return Err(Error::Parameter("empty coverage report".into()));
    }
    let keys = || report.cells.iter().map(|(k, _)| k);
    let maps = ordered(keys().map(|k| k.map.clone()));
    let mut sides = ordered(keys().map(|k| k.side));
    sides.sort();
    let mut methods = ordered(keys().map(|k| k.method));
    methods.sort();
    let columns = ordered(keys().map(|k| (k.observable.clone(), k.n)));

    let mut out = String::new();
    if format == Format::Csv {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for side in &sides {
        for map in &maps {
            if format == Format::AlignedText {
                if !out.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "map={map} side={side}");
                let _ = write!(out, "{:<10}", "method");
                for (h, n) in &columns {
                    let _ = write!(out, "{:>9}", format!("{h}/{n}"));
                }
                out.push('\n');
            }
            for method in &methods {
                if format == Format::AlignedText {
                    let _ = write!(out, "{:<10}", method.name());
                }
                for (h, n) in &columns {
                    let cell = report.get(map, h, *n, *method, *side);
                    match (format, cell) {
                        (Format::Csv, Some(c)) => {
                            let _ = writeln!(
                                out,
                                "{},{h},{n},{side},{map},{},{},{},{}",
                                method.name(),
                                coverage_text(c),
                                c.reps,
                                c.hits,
                                c.failures
                            );
                        }
                        (Format::Csv, None) => {}
                        (Format::AlignedText, Some(c)) => {
                            let _ = write!(out, "{:>9}", coverage_text(c));
                        }
                        (Format::AlignedText, None) => {
                            let _ = write!(out, "{:>9}", "-");
                        }
                    }
                }
                if format == Format::AlignedText {
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

/// Reads back the cells written by [`emit_table`] in CSV form.
pub fn parse_csv(text: &str) -> Result<Vec<(CellKey, CellResult)>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("missing coverage CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Config(format!("bad row {line:?}")));
            }
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad count {s:?}")))
            };
            let key = CellKey {
                method: Method::parse(f[0]).ok_or_else(|| Error::Config(format!("bad method {:?}", f[0])))?,
                observable: f[1].to_string(),
                n: num(f[2])?,
                side: Side::parse(f[3]).ok_or_else(|| Error::Config(format!("bad side {:?}", f[3])))?,
                map: f[4].to_string(),
            };
            Ok((
                key,
                CellResult {
                    reps: num(f[6])?,
                    hits: num(f[7])?,
                    failures: num(f[8])?,
                },
            ))
        })
        .collect()
}

/// `map,h,n,A,sigma,A_se,sigma_se` rows.
pub fn emit_sigma_csv(rows: &[SigmaRow]) -> String {
    let mut out = String::from("map,h,n,A,sigma,A_se,sigma_se\n");
    for r in rows {
        let e = &r.estimate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.map, r.observable, r.n, e.a, e.sigma, e.a_std_error, e.sigma_std_error
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::coverage::Provenance;

    fn report(cells: Vec<(CellKey, CellResult)>) -> CoverageReport {
        CoverageReport {
            cells,
            sigma_table: Vec::new(),
            provenance: Provenance {
                seed: 0,
                config_digest: String::new(),
                started_unix: 0,
                finished_unix: 0,
            },
        }
    }

    fn key(map: &str, h: &str, n: usize, method: Method, side: Side) -> CellKey {
        CellKey {
            map: map.into(),
            observable: h.into(),
            n,
            method,
            side,
        }
    }

    #[test]
    fn single_cell() {
        let r = report(vec![(
            key("doubling", "x", 25, Method::PBoot, Side::TwoSided),
            CellResult {
                hits: 10,
                reps: 10,
                failures: 0,
            },
        )]);
        let text = emit_table(&r, Format::AlignedText).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().contains("1.000"));
        let csv = emit_table(&r, Format::Csv).unwrap();
        assert_eq!(
            csv,
            format!("{CSV_HEADER}\npboot,x,25,two-sided,doubling,1.000,10,10,0\n")
        );
        assert!(emit_table(&report(Vec::new()), Format::Csv).is_err());
    }

    #[test]
    fn full_study_shape_and_round_trip() {
        let mut cells = Vec::new();
        let mut i = 0;
        for map in ["doubling", "drill", "logistic"] {
            for h in ["x", "x2", "x4"] {
                for n in [25, 50, 100] {
                    for method in Method::ALL {
                        for side in Side::ALL {
                            i += 1;
                            cells.push((
                                key(map, h, n, method, side),
                                CellResult {
                                    hits: i % 700,
                                    reps: 700 - i % 3,
                                    failures: i % 3,
                                },
                            ));
                        }
                    }
                }
            }
        }
        let r = report(cells.clone());
        let text = emit_table(&r, Format::AlignedText).unwrap();
        let titles: Vec<&str> = text.lines().filter(|l| l.starts_with("map=")).collect();
        assert_eq!(titles.len(), 9);
        let header = text.lines().nth(1).unwrap();
        assert_eq!(header.split_whitespace().count(), 10);
        let rows: Vec<&str> = text.lines().skip(2).take(4).collect();
        assert!(rows[0].starts_with("t ") && rows[3].starts_with("pboot"));
        let parsed = parse_csv(&emit_table(&r, Format::Csv).unwrap()).unwrap();
        assert_eq!(parsed.len(), cells.len());
        for (k, v) in &parsed {
            assert_eq!(r.get(&k.map, &k.observable, k.n, k.method, k.side), Some(v));
        }
    }
}
