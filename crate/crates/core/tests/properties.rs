use proptest::prelude::*;

use dynboot::bootstrap::{
    gaussian_interval_from_sum, nonpivoted_interval_from_sum, pivoted_interval_from_sum, BootstrapDistribution, Mode,
    Side,
};
use dynboot::edgeworth::{edgeworth_cdf, Moments};
use dynboot::spline::{fit_spline, SplineKind};
use dynboot::stats::{sigma_star, Ecdf};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 20..120)
}

fn pivots(v: Vec<f64>, mode: Mode) -> BootstrapDistribution {
    BootstrapDistribution::from_pivots(mode, v, Vec::new(), 0.0, 1.0).unwrap()
}

proptest! {
    #[test]
    fn sigma_star_shift_and_scale(sums in sample(), shift in -10.0..10.0f64, scale in 0.1..10.0f64, n in 4usize..200) {
        let base = sigma_star(&sums, n).unwrap();
        let moved: Vec<f64> = sums.iter().map(|s| scale * s + shift).collect();
        let got = sigma_star(&moved, n).unwrap();
        prop_assert!((got - scale * base).abs() <= 1e-9 * (1.0 + scale * base));
    }

    #[test]
    fn quantiles_are_monotone_members(v in sample(), p in 0.001..0.999f64, dp in 0.0..0.5f64) {
        let e = Ecdf::new(v.clone()).unwrap();
        let q1 = e.quantile(p).unwrap();
        let q2 = e.quantile((p + dp).min(0.999)).unwrap();
        prop_assert!(q1 <= q2);
        prop_assert!(v.contains(&q1));
        prop_assert!(e.cdf(q1) >= p - 1e-9);
        prop_assert!(e.cdf_left(q1) < p + 1e-9);
    }

    #[test]
    fn point_estimate_inside_when_quantiles_straddle_zero(
        v in sample(), s_n in -100.0..100.0f64, n in 4usize..500, sigma in 0.01..5.0f64,
    ) {
        let b = pivots(v, Mode::Pivoted);
        let (lo, hi) = (b.quantile(0.025).unwrap(), b.quantile(0.975).unwrap());
        let ci = pivoted_interval_from_sum(s_n, n, sigma, &b, 0.05, Side::TwoSided).unwrap();
        let a = s_n / n as f64;
        prop_assert!(ci.lower <= ci.upper);
        if lo <= 0.0 && hi >= 0.0 {
            prop_assert!(ci.contains(a));
        }
    }

    #[test]
    fn unit_scales_make_modes_agree(v in sample(), s_n in -100.0..100.0f64, n in 4usize..500, side_ix in 0usize..3) {
        let side = Side::ALL[side_ix];
        let p = pivoted_interval_from_sum(s_n, n, 1.0, &pivots(v.clone(), Mode::Pivoted), 0.1, side).unwrap();
        let q = nonpivoted_interval_from_sum(s_n, n, &pivots(v, Mode::NonPivoted), 0.1, side).unwrap();
        prop_assert_eq!(p.lower, q.lower);
        prop_assert_eq!(p.upper, q.upper);
    }

    #[test]
    fn smaller_alpha_is_wider(v in sample(), s_n in -100.0..100.0f64, n in 4usize..500, a1 in 0.01..0.4f64, da in 0.0..0.4f64) {
        let b = pivots(v, Mode::Pivoted);
        let narrow = pivoted_interval_from_sum(s_n, n, 1.5, &b, a1 + da, Side::TwoSided).unwrap();
        let wide = pivoted_interval_from_sum(s_n, n, 1.5, &b, a1, Side::TwoSided).unwrap();
        prop_assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
        let narrow = gaussian_interval_from_sum(s_n, n, 1.5, a1 + da, Side::TwoSided).unwrap();
        let wide = gaussian_interval_from_sum(s_n, n, 1.5, a1, Side::TwoSided).unwrap();
        prop_assert!(wide.lower <= narrow.lower + 1e-12 && narrow.upper <= wide.upper + 1e-12);
    }

    #[test]
    fn nonpivoted_shift_equivariance(sums in sample(), s_n in -100.0..100.0f64, c in -5.0..5.0f64) {
        let n = 25usize;
        let base = BootstrapDistribution::from_sums(Mode::NonPivoted, sums.clone(), n).unwrap();
        let moved: Vec<f64> = sums.iter().map(|s| s + n as f64 * c).collect();
        let moved = BootstrapDistribution::from_sums(Mode::NonPivoted, moved, n).unwrap();
        let a = nonpivoted_interval_from_sum(s_n, n, &base, 0.05, Side::TwoSided).unwrap();
        let b = nonpivoted_interval_from_sum(s_n + n as f64 * c, n, &moved, 0.05, Side::TwoSided).unwrap();
        prop_assert!((b.lower - a.lower - c).abs() < 1e-9);
        prop_assert!((b.upper - a.upper - c).abs() < 1e-9);
    }

    #[test]
    fn edgeworth_is_a_probability(
        x in -8.0..8.0f64, n in 1usize..1000, sigma in 0.05..3.0f64, m_nu in -5.0..5.0f64, m_t in -5.0..5.0f64,
    ) {
        let m = Moments { m_nu, m_tilde_mu: m_t, ..Moments::gaussian(0.0, sigma) };
        let f = edgeworth_cdf(&m, n, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn splines_interpolate(ys in prop::collection::vec(-3.0..3.0f64, 5..30), kind_ix in 0usize..3) {
        let kind = [SplineKind::NaturalCubic, SplineKind::FmmCubic, SplineKind::Linear][kind_ix];
        let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64 / (ys.len() - 1) as f64).collect();
        let s = fit_spline(&xs, &ys, kind).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert!((s.eval(*x) - y).abs() < 1e-9);
        }
    }
}
