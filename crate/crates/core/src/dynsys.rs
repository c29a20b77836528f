//! The data-generating interval maps: doubling, drill and logistic.
//!
//! Floating-point orbits of the doubling and logistic maps collapse onto a
//! fixed point after a few dozen steps, so data generation perturbs every
//! step by a tiny conditional Bernoulli kick. For the logistic map the kick
//! is applied in tent-map coordinates.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Magnitude of the per-step perturbation used for data generation.
pub const PERTURBATION: f64 = 1.0 / 1_048_576.0;

/// Upper bound on redraws in any rejection loop.
pub const MAX_REDRAWS: usize = 1_000_000;

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Parameter(format!("degenerate interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub const fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub(crate) fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                value: x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// Fractional part with exact integers sent to `0.0`.
#[inline]
pub fn frac(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// How `d` is continued from `(0, 1/2]` to `(1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DrillExtension {
    /// `d(x) = d(x - 1/2)`.
    #[default]
    HalfPeriod,
    /// `d(x) = d(1 - x)`.
    Reflect,
    /// The formula of the last piece (`k = 1`) carried on up to `1`.
    ContinueLast,
}

impl DrillExtension {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "half-period" => Some(Self::HalfPeriod),
            "reflect" => Some(Self::Reflect),
            "continue-last" => Some(Self::ContinueLast),
            _ => None,
        }
    }
}

/// Coefficients of the drill map for a gravity parameter `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrillParams {
    pub lambda: f64,
    /// `lambda / (lambda - 1)`.
    pub alpha: f64,
    /// Breakpoints `q[0] <= ... <= q[m]` on `[0, 1/2]`, `m = floor(lambda)`.
    pub q: Vec<f64>,
    pub extension: DrillExtension,
}

/// Drill-map coefficients; `q[m]` is the `k = 0` value `1/2`.
pub fn drill_coefficients(lambda: f64) -> Result<DrillParams> {
    if !(lambda.is_finite() && lambda > 1.0) {
        return Err(Error::Parameter(format!("drill lambda must exceed 1, got {lambda}")));
    }
    let m = lambda.floor() as usize;
    let mut q = vec![0.0; m + 1];
    for k in 0..=m {
        q[m - k] = (0.5 * (lambda - 1.0 - k as f64) / (lambda - 1.0)).max(0.0);
    }
    Ok(DrillParams {
        lambda,
        alpha: lambda / (lambda - 1.0),
        q,
        extension: DrillExtension::HalfPeriod,
    })
}

impl DrillParams {
    fn m(&self) -> usize {
        self.q.len() - 1
    }

    /// Index `i` of the piece `(q[i], q[i+1]]` holding `x in [0, 1/2]`;
    /// `x = 0` joins the first non-empty piece.
    fn piece_index(&self, x: f64) -> usize {
        let m = self.m();
        (0..m)
            .find(|&i| self.q[i] < self.q[i + 1] && x <= self.q[i + 1])
            .unwrap_or(m - 1)
    }

    fn offset_on_piece(&self, i: usize, x: f64) -> f64 {
        let k = (self.m() - i) as f64;
        let disc = k * k - (k / self.alpha) * (k + 1.0 - 2.0 * x);
        self.alpha * (k - disc.max(0.0).sqrt())
    }

    /// `d(x)` on `[0, 1]`, continued to `(1/2, 1]` per `self.extension`.
    pub fn offset(&self, x: f64) -> f64 {
        if x <= 0.5 {
            return self.offset_on_piece(self.piece_index(x), x);
        }
        match self.extension {
            DrillExtension::HalfPeriod => self.offset_on_piece(self.piece_index(x - 0.5), x - 0.5),
            DrillExtension::Reflect => self.offset_on_piece(self.piece_index(1.0 - x), 1.0 - x),
            DrillExtension::ContinueLast => self.offset_on_piece(self.m() - 1, x),
        }
    }

    /// The half-revolution map `x + d(x) mod 1`.
    #[inline]
    pub fn half_step(&self, x: f64) -> f64 {
        frac(x + self.offset(x))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.half_step(self.half_step(x))
    }

    /// Structural pieces of the half map on `[0, 1]` as `(lo, hi, piece, shift)`.
    fn structural_pieces(&self) -> Vec<(f64, f64, usize, f64)> {
        let mut out = Vec::new();
        for shift in [0.0, 0.5] {
            for i in 0..self.m() {
                if self.q[i] < self.q[i + 1] {
                    out.push((self.q[i] + shift, self.q[i + 1] + shift, i, shift));
                }
            }
        }
        out
    }

    /// Interior discontinuities of the full map `g = h o h` on `(0, 1)`.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self.extension {
            DrillExtension::HalfPeriod => self.half_period_discontinuities(),
            _ => scan_jumps(|x| self.eval(x)),
        }
    }

    fn half_period_discontinuities(&self) -> Vec<f64> {
        let pieces = self.structural_pieces();
        let raw = |p: &(f64, f64, usize, f64), x: f64| x + self.offset_on_piece(p.2, x - p.3);

        // Discontinuities of the half map: structural breakpoints plus the
        // points where the lifted value crosses an integer.
        let mut half_breaks: Vec<f64> = Vec::new();
        for p in &pieces {
            if p.1 < 1.0 {
                half_breaks.push(p.1);
            }
            let (top, bottom) = (raw(p, p.0), raw(p, p.1));
            let mut j = bottom.floor() + 1.0;
            while j < top {
                half_breaks.push(bisect_decreasing(|x| raw(p, x), p.0, p.1, j));
                j += 1.0;
            }
        }
        sort_dedup(&mut half_breaks);

        // Preimages of the half-map breakpoints under each continuous branch.
        let mut edges = vec![0.0];
        edges.extend(half_breaks.iter().copied());
        edges.push(1.0);
        let mut breaks = half_breaks.clone();
        for w in edges.windows(2) {
            let (c0, c1) = (w[0], w[1]);
            let mid = 0.5 * (c0 + c1);
            let Some(p) = pieces.iter().find(|p| mid > p.0 && mid <= p.1) else {
                continue;
            };
            let lift = raw(p, mid).floor();
            let branch = |x: f64| raw(p, x) - lift;
            let (top, bottom) = (branch(c0), branch(c1));
            for &target in &half_breaks {
                if target > bottom && target < top {
                    breaks.push(bisect_decreasing(branch, c0, c1, target));
                }
            }
        }
        breaks.retain(|&x| x > 0.0 && x < 1.0);
        sort_dedup(&mut breaks);
        breaks
    }
}

/// Jumps of `f` on `(0, 1)` located by a fine scan and bisection. Steps
/// of more than `0.05` across a grid cell of width `2^-20` count as jumps.
pub fn scan_jumps(f: impl Fn(f64) -> f64) -> Vec<f64> {
    const CELLS: usize = 1 << 20;
    let h = 1.0 / CELLS as f64;
    let mut out = Vec::new();
    let mut prev = f(0.0);
    for i in 1..=CELLS {
        let x = i as f64 * h;
        let cur = f(x);
        if (cur - prev).abs() > 0.05 {
            let (mut lo, mut hi) = (x - h, x);
            let (mut flo, mut fhi) = (prev, cur);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if (fm - flo).abs() >= (fhi - fm).abs() {
                    hi = mid;
                    fhi = fm;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(lo);
        }
        prev = cur;
    }
    // Steps in the first and last cells are the endpoint conventions.
    out.retain(|&x| x > h && x < 1.0 - h);
    sort_dedup(&mut out);
    out
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
}

/// Root of `f(x) = target` for `f` decreasing on `[lo, hi]`.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `2x mod 1`.
    Doubling,
    /// Two half-revolutions of the rotary drill map.
    Drill(DrillParams),
    /// `r x (1 - x)`.
    Logistic { r: f64 },
    /// A fitted spline estimate, evaluated through [`crate::spline`].
    EstimatedSpline,
}

/// Per-step perturbation applied while generating data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    None,
    /// `g(x) + m * eps`, eps ~ Bernoulli(1/2) conditional on staying in range.
    BinaryNoise(f64),
    /// Bernoulli kick applied in tent coordinates (logistic map, `r = 4`).
    TentConjugateNoise(f64),
}

/// Full description of a data-generating system.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub kind: MapKind,
    pub support: Interval,
    /// Sorted interior discontinuities of the map.
    pub discontinuities: Vec<f64>,
    pub perturbation: Perturbation,
}

impl MapSpec {
    pub fn doubling() -> Self {
        Self {
            kind: MapKind::Doubling,
            support: Interval::unit(),
            discontinuities: vec![0.5],
            perturbation: Perturbation::BinaryNoise(PERTURBATION),
        }
    }

    pub fn drill(lambda: f64) -> Result<Self> {
        Self::drill_with(lambda, DrillExtension::HalfPeriod)
    }

    pub fn drill_with(lambda: f64, extension: DrillExtension) -> Result<Self> {
        let params = DrillParams {
            extension,
            ..drill_coefficients(lambda)?
        };
        let discontinuities = params.discontinuities();
        Ok(Self {
            kind: MapKind::Drill(params),
            support: Interval::unit(),
            discontinuities,
            perturbation: Perturbation::None,
        })
    }

    /// The logistic map; `r = 4` gets the tent-conjugate perturbation.
    pub fn logistic(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 4.0) {
            return Err(Error::Parameter(format!("logistic r must be in (0, 4], got {r}")));
        }
        let perturbation = if r == 4.0 {
            Perturbation::TentConjugateNoise(PERTURBATION)
        } else {
            Perturbation::None
        };
        Ok(Self {
            kind: MapKind::Logistic { r },
            support: Interval::unit(),
            discontinuities: Vec::new(),
            perturbation,
        })
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Self {
        self.perturbation = perturbation;
        self
    }

    /// Short stable identifier.
    pub fn name(&self) -> &'static str {
        match self.kind {
            MapKind::Doubling => "doubling",
            MapKind::Drill(_) => "drill",
            MapKind::Logistic { .. } => "logistic",
            MapKind::EstimatedSpline => "estimated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.support;
        if !(s.lo < s.hi) {
            return Err(Error::Parameter("degenerate support".into()));
        }
        if self.discontinuities.iter().any(|&d| !(d > s.lo && d < s.hi)) {
            return Err(Error::Parameter("discontinuity outside the open support".into()));
        }
        if self.discontinuities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("discontinuities must be strictly increasing".into()));
        }
        match (&self.kind, self.perturbation) {
            (MapKind::Drill(p), _) if !(p.lambda > 1.0) => Err(Error::Parameter("drill lambda must exceed 1".into())),
            (MapKind::Logistic { r }, Perturbation::TentConjugateNoise(_)) if *r != 4.0 => {
                Err(Error::Parameter("tent-conjugate perturbation requires r = 4".into()))
            }
            (MapKind::Doubling, Perturbation::TentConjugateNoise(_))
            | (MapKind::Drill(_), Perturbation::TentConjugateNoise(_))
            | (MapKind::Logistic { .. }, Perturbation::BinaryNoise(_)) => Err(Error::Parameter(format!(
                "perturbation {:?} does not apply to the {} map",
                self.perturbation,
                self.name()
            ))),
            _ => Ok(()),
        }
    }
}

/// Tent coordinate of a logistic state.
#[inline]
pub fn to_tent(x: f64) -> f64 {
    2.0 * x.sqrt().asin() / PI
}

/// Logistic state of a tent coordinate.
#[inline]
pub fn from_tent(y: f64) -> f64 {
    let s = (0.5 * PI * y).sin();
    (s * s).clamp(0.0, 1.0)
}

/// Exact image `g(x)`.
pub fn eval_map(spec: &MapSpec, x: f64) -> Result<f64> {
    spec.support.check(x)?;
    match &spec.kind {
        MapKind::Doubling => Ok(frac(2.0 * x)),
        MapKind::Drill(p) => {
            if !(p.lambda > 1.0) {
                return Err(Error::Parameter("drill lambda must exceed 1".into()));
            }
            Ok(p.eval(x))
        }
        MapKind::Logistic { r } => Ok((r * x * (1.0 - x)).clamp(0.0, 1.0)),
        MapKind::EstimatedSpline => Err(Error::Parameter(
            "estimated maps are evaluated through SplineEstimate".into(),
        )),
    }
}

/// One data-generating step, including the conditional perturbation.
pub fn perturbed_step<R: Rng + ?Sized>(spec: &MapSpec, x: f64, rng: &mut R) -> Result<f64> {
    match (&spec.kind, spec.perturbation) {
        (MapKind::Doubling, Perturbation::BinaryNoise(m)) => {
            let base = eval_map(spec, x)?;
            redraw(rng, |eps| {
                let y = base + m * eps;
                spec.support.contains(y).then_some(y)
            })
        }
        (MapKind::Logistic { r }, Perturbation::TentConjugateNoise(m)) => {
            spec.support.check(x)?;
            if *r != 4.0 {
                return Err(Error::Parameter("tent-conjugate perturbation requires r = 4".into()));
            }
            let y = to_tent(x);
            let lower = x < 0.5;
            let y_next = redraw(rng, |eps| {
                let v = if lower {
                    2.0 * y + m * eps
                } else {
                    2.0 * (1.0 - y) + m * (1.0 - eps)
                };
                (0.0..=1.0).contains(&v).then_some(v)
            })?;
            Ok(from_tent(y_next))
        }
        (_, Perturbation::None) | (MapKind::Drill(_), _) => eval_map(spec, x),
        _ => Err(Error::Parameter(format!(
            "perturbation {:?} does not apply to the {} map",
            spec.perturbation,
            spec.name()
        ))),
    }
}

/// Draws Bernoulli(1/2) values until `accept` returns a value.
fn redraw<R: Rng + ?Sized>(rng: &mut R, accept: impl Fn(f64) -> Option<f64>) -> Result<f64> {
    for _ in 0..MAX_REDRAWS {
        let eps = if rng.random::<bool>() { 1.0 } else { 0.0 };
        if let Some(v) = accept(eps) {
            return Ok(v);
        }
    }
    Err(Error::RetryCap(MAX_REDRAWS))
}

/// Uniform draw from the support, the initial law used for data.
pub fn initial_state<R: Rng + ?Sized>(spec: &MapSpec, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    spec.support.lo + spec.support.width() * u
}

/// A sample path `x_0, ..., x_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<f64>,
    map: MapSpec,
}

impl Trajectory {
    pub fn new(states: Vec<f64>, map: MapSpec) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::DegenerateData(format!(
                "trajectory needs at least 2 states, got {}",
                states.len()
            )));
        }
        for &x in &states {
            map.support.check(x)?;
        }
        Ok(Self { states, map })
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub fn generate_trajectory<R: Rng + ?Sized>(spec: &MapSpec, x0: f64, n: usize, rng: &mut R) -> Result<Trajectory> {
    spec.support.check(x0)?;
    if n < 2 {
        return Err(Error::Parameter(format!("trajectory length must be >= 2, got {n}")));
    }
    let mut states = Vec::with_capacity(n);
    let mut x = x0;
    states.push(x);
    for _ in 1..n {
        x = perturbed_step(spec, x, rng)?;
        states.push(x);
    }
    Trajectory::new(states, spec.clone())
}
