//! Spline estimates of the unknown transformation.
//!
//! A [`Spline`] is one piecewise polynomial over strictly increasing knots,
//! stored in local form `a + b t + c t^2 + d t^3` with `t = x - knot_i`.
//! A [`SplineEstimate`] holds one spline per discontinuity-delimited
//! segment of the support and applies the boundary nudge when a fitted
//! value leaves the support.

use std::fmt::Write as _;

use crate::dynsys::{Interval, Trajectory, PERTURBATION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplineKind {
    /// Zero second derivative at both ends.
    NaturalCubic,
    /// Third derivative at each end matches the cubic through the four
    /// nearest points (Forsythe, Malcolm and Moler).
    FmmCubic,
    /// Value and first two derivatives wrap around the period.
    PeriodicCubic,
    Linear,
}

impl SplineKind {
    /// Minimum number of distinct points a fit needs.
    pub fn min_points(self) -> usize {
        match self {
            SplineKind::Linear => 2,
            _ => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SplineKind::NaturalCubic => "natural",
            SplineKind::FmmCubic => "fmm",
            SplineKind::PeriodicCubic => "periodic",
            SplineKind::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Some(SplineKind::NaturalCubic),
            "fmm" => Some(SplineKind::FmmCubic),
            "periodic" => Some(SplineKind::PeriodicCubic),
            "linear" => Some(SplineKind::Linear),
            _ => None,
        }
    }
}

/// A piecewise polynomial over one set of knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    kind: SplineKind,
    knots: Vec<f64>,
    /// One `[a, b, c, d]` per interval; a single entry for a constant.
    coeffs: Vec<[f64; 4]>,
    period: Option<f64>,
}

impl Spline {
    fn constant(x: f64, y: f64) -> Self {
        Self {
            kind: SplineKind::Linear,
            knots: vec![x],
            coeffs: vec![[y, 0.0, 0.0, 0.0]],
            period: None,
        }
    }

    pub fn kind(&self) -> SplineKind {
        self.kind
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn coefficients(&self) -> &[[f64; 4]] {
        &self.coeffs
    }

    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let x = match self.period {
            Some(p) => {
                let x0 = self.knots[0];
                x0 + crate::dynsys::frac((x - x0) / p) * p
            }
            None => x,
        };
        let last = self.coeffs.len() - 1;
        let i = self.knots[..=last]
            .partition_point(|&k| k <= x)
            .saturating_sub(1)
            .min(last);
        (i, x - self.knots[i])
    }

    /// Value at `x`; outside the knot range the end polynomial is extended.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let [a, b, c, d] = self.coeffs[i];
        a + t * (b + t * (c + t * d))
    }

    /// Value, first and second derivative at `x`.
    pub fn eval_derivatives(&self, x: f64) -> (f64, f64, f64) {
        let (i, t) = self.locate(x);
        let [a, b, c, d] = self.coeffs[i];
        (
            a + t * (b + t * (c + t * d)),
            b + t * (2.0 * c + 3.0 * t * d),
            2.0 * c + 6.0 * t * d,
        )
    }
}

/// Fits an interpolating spline of the given kind.
///
/// `PeriodicCubic` expects the first and last values to coincide; the period
/// is the knot span.
pub fn fit_spline(knots: &[f64], values: &[f64], kind: SplineKind) -> Result<Spline> {
    if knots.len() != values.len() {
        return Err(Error::Parameter(format!(
            "{} knots but {} values",
            knots.len(),
            values.len()
        )));
    }
    if knots.len() < kind.min_points() {
        return Err(Error::InsufficientData {
            segment: 0,
            found: knots.len(),
            required: kind.min_points(),
        });
    }
    if knots.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("non-finite knot or value".into()));
    }
    if knots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("knots must be strictly increasing".into()));
    }

    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();

    if kind == SplineKind::Linear {
        let coeffs = (0..n - 1).map(|i| [values[i], slope[i], 0.0, 0.0]).collect();
        return Ok(Spline {
            kind,
            knots: knots.to_vec(),
            coeffs,
            period: None,
        });
    }

    let second = match kind {
        SplineKind::NaturalCubic => natural_second_derivatives(&h, &slope)?,
        SplineKind::FmmCubic => fmm_second_derivatives(knots, &h, &slope)?,
        SplineKind::PeriodicCubic => {
            let scale = values[0].abs().max(1.0);
            if (values[0] - values[n - 1]).abs() > 1e-12 * scale {
                return Err(Error::Parameter(
                    "periodic spline needs matching first and last values".into(),
                ));
            }
            periodic_second_derivatives(&h, &slope)?
        }
        SplineKind::Linear => unreachable!(),
    };

    let coeffs = (0..n - 1)
        .map(|i| {
            let (m0, m1) = (second[i], second[i + 1]);
            [
                values[i],
                slope[i] - h[i] * (2.0 * m0 + m1) / 6.0,
                0.5 * m0,
                (m1 - m0) / (6.0 * h[i]),
            ]
        })
        .collect();
    Ok(Spline {
        kind,
        knots: knots.to_vec(),
        coeffs,
        period: (kind == SplineKind::PeriodicCubic).then(|| knots[n - 1] - knots[0]),
    })
}

fn natural_second_derivatives(h: &[f64], slope: &[f64]) -> Result<Vec<f64>> {
    let n = h.len() + 1;
    let inner = n - 2;
    let mut sub = vec![0.0; inner];
    let mut diag = vec![0.0; inner];
    let mut sup = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    for r in 0..inner {
        let i = r + 1;
        sub[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        sup[r] = h[i];
        rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
    }
    let solved = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&solved);
    Ok(m)
}

/// Third divided difference over four consecutive points starting at `i`.
fn third_difference(x: &[f64], slope: &[f64], i: usize) -> f64 {
    let d2a = (slope[i + 1] - slope[i]) / (x[i + 2] - x[i]);
    let d2b = (slope[i + 2] - slope[i + 1]) / (x[i + 3] - x[i + 1]);
    (d2b - d2a) / (x[i + 3] - x[i])
}

fn fmm_second_derivatives(x: &[f64], h: &[f64], slope: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = -h[0];
    sup[0] = h[0];
    rhs[0] = 6.0 * h[0] * h[0] * third_difference(x, slope, 0);
    for i in 1..n - 1 {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
    }
    let hl = h[n - 2];
    sub[n - 1] = hl;
    diag[n - 1] = -hl;
    rhs[n - 1] = -6.0 * hl * hl * third_difference(x, slope, n - 4);
    solve_tridiagonal(&sub, &diag, &sup, &rhs)
}

fn periodic_second_derivatives(h: &[f64], slope: &[f64]) -> Result<Vec<f64>> {
    // Unknowns M_0..M_{m-1}; M_m wraps to M_0.
    let m = h.len();
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let prev = (i + m - 1) % m;
        sub[i] = h[prev];
        diag[i] = 2.0 * (h[prev] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * (slope[i] - slope[prev]);
    }
    let mut out = solve_cyclic(&sub, &diag, &sup, &rhs)?;
    out.push(out[0]);
    Ok(out)
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < f64::MIN_POSITIVE {
        return Err(Error::SingularSystem);
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
            return Err(Error::SingularSystem);
        }
        c[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Cyclic tridiagonal solve by Sherman-Morrison; `sub[0]` is the top-right
/// corner and `sup[n-1]` the bottom-left corner.
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::SingularSystem);
    }
    let top = sub[0];
    let bottom = sup[n - 1];
    let gamma = -diag[0];
    let mut modified = diag.to_vec();
    modified[0] -= gamma;
    modified[n - 1] -= top * bottom / gamma;
    let y = solve_tridiagonal(sub, &modified, sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = bottom;
    let z = solve_tridiagonal(sub, &modified, sup, &u)?;
    let vy = y[0] + top / gamma * y[n - 1];
    let vz = z[0] + top / gamma * z[n - 1];
    let denom = 1.0 + vz;
    if denom.abs() < f64::MIN_POSITIVE {
        return Err(Error::SingularSystem);
    }
    let factor = vy / denom;
    Ok(y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect())
}

/// What to do with a segment that has too few points for the requested kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SparseSegments {
    /// Fail with [`Error::InsufficientData`].
    #[default]
    Error,
    /// Fall back to a linear fit (2-3 points), a constant (1 point), or the
    /// nearest fitted segment's polynomial (no points).
    Degrade,
}

/// How each segment of an estimate was fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentFit {
    Requested,
    Linear,
    Constant,
    /// Shares the polynomial of the given segment.
    Borrowed(usize),
}

/// Piecewise estimate of a transformation on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineEstimate {
    kind: SplineKind,
    segments: Vec<Spline>,
    fits: Vec<SegmentFit>,
    breakpoints: Vec<f64>,
    support: Interval,
    nudge: f64,
}

impl SplineEstimate {
    pub fn kind(&self) -> SplineKind {
        self.kind
    }

    pub fn segments(&self) -> &[Spline] {
        &self.segments
    }

    pub fn segment_fits(&self) -> &[SegmentFit] {
        &self.fits
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    /// Index of the segment containing `x`; a breakpoint belongs to the
    /// segment on its left.
    #[inline]
    pub fn segment_of(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < x)
    }

    /// Rows `segment,knot_lo,knot_hi,a,b,c,d` with coefficients in local
    /// form about `knot_lo`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment,knot_lo,knot_hi,a,b,c,d\n");
        for (s, spline) in self.segments.iter().enumerate() {
            for (i, [a, b, c, d]) in spline.coeffs.iter().enumerate() {
                let lo = spline.knots[i];
                let hi = spline.knots.get(i + 1).copied().unwrap_or(lo);
                let _ = writeln!(out, "{s},{lo},{hi},{a},{b},{c},{d}");
            }
        }
        out
    }
}

/// Fits one spline per segment from the pairs `(x_i, x_{i+1})`, failing on
/// sparse segments.
pub fn build_map_estimate(traj: &Trajectory, discontinuities: &[f64], kind: SplineKind) -> Result<SplineEstimate> {
    build_map_estimate_with(traj, discontinuities, kind, SparseSegments::Error)
}

pub fn build_map_estimate_with(
    traj: &Trajectory,
    discontinuities: &[f64],
    kind: SplineKind,
    sparse: SparseSegments,
) -> Result<SplineEstimate> {
    let support = traj.map().support;
    let mut breakpoints = discontinuities.to_vec();
    breakpoints.sort_by(f64::total_cmp);
    if breakpoints.iter().any(|&b| !(b > support.lo && b < support.hi)) {
        return Err(Error::Parameter("breakpoint outside the open support".into()));
    }

    let states = traj.states();
    let mut pairs: Vec<(f64, f64)> = states.windows(2).map(|w| (w[0], w[1])).collect();
    // Stable sort keeps trajectory order among equal abscissae.
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let nseg = breakpoints.len() + 1;
    let mut buckets: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); nseg];
    for (x, y) in pairs {
        let s = breakpoints.partition_point(|&b| b < x);
        let (xs, ys) = &mut buckets[s];
        if xs.last() == Some(&x) {
            continue;
        }
        xs.push(x);
        ys.push(y);
    }

    let mut segments: Vec<Option<Spline>> = Vec::with_capacity(nseg);
    let mut fits = Vec::with_capacity(nseg);
    for (s, (xs, ys)) in buckets.iter().enumerate() {
        let required = kind.min_points();
        if xs.len() >= required {
            let spline = if kind == SplineKind::PeriodicCubic {
                let lo = if s == 0 { support.lo } else { breakpoints[s - 1] };
                let hi = if s == nseg - 1 { support.hi } else { breakpoints[s] };
                fit_periodic_segment(xs, ys, hi - lo)
            } else {
                fit_spline(xs, ys, kind)
            };
            segments.push(Some(spline.map_err(|e| match e {
                Error::InsufficientData { found, required, .. } => Error::InsufficientData {
                    segment: s,
                    found,
                    required,
                },
                other => other,
            })?));
            fits.push(SegmentFit::Requested);
            continue;
        }
        if sparse == SparseSegments::Error {
            return Err(Error::InsufficientData {
                segment: s,
                found: xs.len(),
                required,
            });
        }
        match xs.len() {
            0 => {
                segments.push(None);
                fits.push(SegmentFit::Borrowed(usize::MAX));
            }
            1 => {
                segments.push(Some(Spline::constant(xs[0], ys[0])));
                fits.push(SegmentFit::Constant);
            }
            _ => {
                segments.push(Some(fit_spline(xs, ys, SplineKind::Linear)?));
                fits.push(SegmentFit::Linear);
            }
        }
    }

    // Empty segments extend the nearest fitted neighbour, left on ties.
    let filled: Vec<usize> = (0..nseg).filter(|&s| segments[s].is_some()).collect();
    let mut resolved = Vec::with_capacity(nseg);
    for s in 0..nseg {
        match &segments[s] {
            Some(spline) => resolved.push(spline.clone()),
            None => {
                let donor = *filled
                    .iter()
                    .min_by_key(|&&d| (d.abs_diff(s), d > s))
                    .ok_or_else(|| Error::DegenerateData("trajectory has no transitions".into()))?;
                fits[s] = SegmentFit::Borrowed(donor);
                resolved.push(segments[donor].clone().expect("donor segment is fitted"));
            }
        }
    }

    Ok(SplineEstimate {
        kind,
        segments: resolved,
        fits,
        breakpoints,
        support,
        nudge: PERTURBATION,
    })
}

/// Periodic fit over a segment of width `period`: the data close up with
/// the first point shifted by one period.
fn fit_periodic_segment(xs: &[f64], ys: &[f64], period: f64) -> Result<Spline> {
    let mut knots = xs.to_vec();
    let mut values = ys.to_vec();
    let wrap = xs[0] + period;
    if *knots.last().unwrap() >= wrap {
        knots.pop();
        values.pop();
    }
    knots.push(wrap);
    values.push(ys[0]);
    fit_spline(&knots, &values, SplineKind::PeriodicCubic)
}

/// Evaluates the estimate, moving values outside the open support to the
/// nearest boundary shifted inward by the nudge.
#[inline]
pub fn eval_estimated_map(est: &SplineEstimate, x: f64) -> Result<f64> {
    est.support.check(x)?;
    let raw = est.segments[est.segment_of(x)].eval(x);
    if !raw.is_finite() {
        return Err(Error::Numerical(format!("spline value {raw} at {x}")));
    }
    Ok(if raw <= est.support.lo {
        est.support.lo + est.nudge
    } else if raw >= est.support.hi {
        est.support.hi - est.nudge
    } else {
        raw
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{MapSpec, Perturbation};

    fn doubling_traj(states: Vec<f64>) -> Trajectory {
        Trajectory::new(states, MapSpec::doubling().with_perturbation(Perturbation::None)).unwrap()
    }

    #[test]
    fn linear_and_natural_reproduce_lines() {
        let xs = [0.1, 0.2, 0.3, 0.45];
        let ys = [0.2, 0.4, 0.6, 0.9];
        let lin = fit_spline(&xs, &ys, SplineKind::Linear).unwrap();
        for c in lin.coefficients() {
            assert!((c[1] - 2.0).abs() < 1e-12);
        }
        let nat = fit_spline(&xs, &ys, SplineKind::NaturalCubic).unwrap();
        for i in 0..=100 {
            let x = 0.1 + 0.35 * i as f64 / 100.0;
            assert!((nat.eval(x) - 2.0 * x).abs() < 1e-10);
        }
        let est = build_map_estimate(&doubling_traj(vec![0.1, 0.2, 0.4, 0.8]), &[], SplineKind::Linear).unwrap();
        assert!((eval_estimated_map(&est, 0.3).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn identity_on_four_knots() {
        let k = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for kind in [SplineKind::NaturalCubic, SplineKind::FmmCubic] {
            let s = fit_spline(&k, &k, kind).unwrap();
            for i in 0..=50 {
                let x = i as f64 / 50.0;
                assert!((s.eval(x) - x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chord_for_two_knots() {
        let s = fit_spline(&[0.0, 2.0], &[1.0, 5.0], SplineKind::Linear).unwrap();
        assert_eq!(s.eval(1.0), 3.0);
        assert_eq!(s.eval(3.0), 7.0);
    }

    #[test]
    fn insufficient_points() {
        let e = fit_spline(&[0.0, 0.5, 1.0], &[0.0, 0.1, 0.3], SplineKind::FmmCubic).unwrap_err();
        assert!(matches!(
            e,
            Error::InsufficientData {
                found: 3,
                required: 4,
                ..
            }
        ));
        assert!(fit_spline(&[0.0], &[0.0], SplineKind::Linear).is_err());
        assert!(fit_spline(&[0.0, 0.0, 1.0, 2.0], &[0.0; 4], SplineKind::NaturalCubic).is_err());
    }

    #[test]
    fn fmm_reproduces_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
        let xs = [0.0, 0.13, 0.3, 0.41, 0.66, 0.8, 1.0];
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let s = fit_spline(&xs, &ys, SplineKind::FmmCubic).unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert!((s.eval(x) - f(x)).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn cubic_smoothness_and_interpolation() {
        let xs = [0.0, 0.1, 0.25, 0.4, 0.7, 0.75, 1.0];
        let ys = [0.3, 0.9, 0.1, 0.5, 0.5, 0.2, 0.8];
        for kind in [SplineKind::NaturalCubic, SplineKind::FmmCubic] {
            let s = fit_spline(&xs, &ys, kind).unwrap();
            for (&x, &y) in xs.iter().zip(&ys) {
                assert!((s.eval(x) - y).abs() <= 1e-10 * y.abs().max(1.0));
            }
            for &k in &xs[1..xs.len() - 1] {
                let l = s.eval_derivatives(k - 1e-9);
                let r = s.eval_derivatives(k + 1e-9);
                assert!((l.1 - r.1).abs() < 1e-5 && (l.2 - r.2).abs() < 1e-4, "{kind:?} at {k}");
            }
        }
        let nat = fit_spline(&xs, &ys, SplineKind::NaturalCubic).unwrap();
        assert!(nat.eval_derivatives(0.0).2.abs() < 1e-12);
        assert!(nat.eval_derivatives(1.0).2.abs() < 1e-9);
    }

    #[test]
    fn periodic_wraps_smoothly() {
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
        let xs: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let mut ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        ys[16] = ys[0];
        let s = fit_spline(&xs, &ys, SplineKind::PeriodicCubic).unwrap();
        let a = s.eval_derivatives(1e-12);
        let b = s.eval_derivatives(1.0 - 1e-12);
        assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-8 && (a.2 - b.2).abs() < 1e-6);
        assert!((s.eval(1.25) - s.eval(0.25)).abs() < 1e-12);
        assert!(fit_spline(&[0.0, 0.3, 0.6, 1.0], &[0.0, 1.0, 2.0, 3.0], SplineKind::PeriodicCubic).is_err());
    }

    #[test]
    fn clamping_nudges_inside() {
        let k = [0.0, 0.5, 1.0];
        let est = SplineEstimate {
            kind: SplineKind::Linear,
            segments: vec![fit_spline(&k, &[0.0, 1.3, 1.3], SplineKind::Linear).unwrap()],
            fits: vec![SegmentFit::Requested],
            breakpoints: vec![],
            support: Interval::unit(),
            nudge: PERTURBATION,
        };
        assert_eq!(eval_estimated_map(&est, 0.5).unwrap(), 1.0 - PERTURBATION);
        assert_eq!(eval_estimated_map(&est, 0.0).unwrap(), PERTURBATION);
        let est = SplineEstimate {
            segments: vec![fit_spline(&k, &[-0.2, -0.2, 0.4], SplineKind::Linear).unwrap()],
            ..est
        };
        assert_eq!(eval_estimated_map(&est, 0.25).unwrap(), PERTURBATION);
        assert!(eval_estimated_map(&est, 1.2).is_err());
    }

    #[test]
    fn identity_estimate() {
        let k = [0.1, 0.3, 0.42, 0.7, 0.9];
        let s = fit_spline(&k, &k, SplineKind::NaturalCubic).unwrap();
        assert!((s.eval(0.42) - 0.42).abs() < 1e-15);
    }

    #[test]
    fn segments_follow_breakpoints() {
        let traj = doubling_traj(vec![
            0.05, 0.1, 0.2, 0.4, 0.8, 0.6, 0.2, 0.45, 0.9, 0.8, 0.6, 0.2, 0.35, 0.7, 0.4,
        ]);
        let est = build_map_estimate(&traj, &[0.5], SplineKind::FmmCubic).unwrap();
        assert_eq!(est.segments().len(), 2);
        for x in [0.07, 0.15, 0.3, 0.44] {
            assert!((eval_estimated_map(&est, x).unwrap() - 2.0 * x).abs() < 1e-10);
        }
        for x in [0.55, 0.7, 0.85] {
            assert!((eval_estimated_map(&est, x).unwrap() - (2.0 * x - 1.0)).abs() < 1e-10);
        }
        assert_eq!(est.segment_of(0.5), 0);
        assert_eq!(est.segment_of(0.5000001), 1);
        assert!(est.to_csv().starts_with("segment,knot_lo,knot_hi,a,b,c,d\n"));
    }

    #[test]
    fn duplicates_keep_first_image() {
        let spec = MapSpec::doubling().with_perturbation(Perturbation::None);
        let traj = Trajectory::new(vec![0.2, 0.4, 0.2, 0.41, 0.3], spec).unwrap();
        let est = build_map_estimate(&traj, &[], SplineKind::Linear).unwrap();
        assert_eq!(est.segments()[0].knots(), &[0.2, 0.4, 0.41]);
        assert_eq!(est.segments()[0].eval(0.2), 0.4);
    }

    #[test]
    fn sparse_segments() {
        let traj = doubling_traj(vec![0.1, 0.2, 0.4, 0.8, 0.6]);
        let err = build_map_estimate(&traj, &[0.5], SplineKind::FmmCubic).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData {
                segment: 0,
                found: 3,
                ..
            }
        ));
        let est = build_map_estimate_with(&traj, &[0.5, 0.7], SplineKind::FmmCubic, SparseSegments::Degrade).unwrap();
        assert_eq!(
            est.segment_fits(),
            &[SegmentFit::Linear, SegmentFit::Borrowed(0), SegmentFit::Constant]
        );
        assert_eq!(eval_estimated_map(&est, 0.9).unwrap(), 0.6);
        assert_eq!(eval_estimated_map(&est, 0.6).unwrap(), 1.0 - PERTURBATION);
    }
}
