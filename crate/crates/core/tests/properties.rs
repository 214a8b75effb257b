use drnash_core::pricing::{dr_price, pv_price, Sdr};
use drnash_core::prosumer::{self, BestResponseContext};
use drnash_core::scenario::UtilityCostCoefficients;
use drnash_core::settlement::{provider_margin, utility_cost, utility_profit};
use proptest::prelude::*;

/// (retail, floor) with 0 < floor < retail.
fn rates() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..1.0, 0.01f64..0.99).prop_map(|(r, frac)| (r, r * frac))
}

fn objective(alpha: f64, c: f64, lambda: f64, d: f64) -> f64 {
    alpha * c * d.powi(3) + alpha * d.powi(2) - lambda * d
}

proptest! {
    #[test]
    fn pv_price_bounds_and_monotone((r, gc) in rates(), s in 1.0001f64..1e3, bump in 1.001f64..2.0) {
        let a = pv_price(Sdr::Finite(s), r, gc).unwrap();
        let b = pv_price(Sdr::Finite(s * bump), r, gc).unwrap();
        prop_assert!(gc < a && a <= r);
        prop_assert!(b < a);
    }

    #[test]
    fn dr_price_sits_between_pv_price_and_retail((r, gc) in rates(), s in 1.0001f64..1e3, bump in 1.001f64..2.0) {
        let lpv = pv_price(Sdr::Finite(s), r, gc).unwrap();
        let ldr = dr_price(Sdr::Finite(s), r, lpv).unwrap();
        prop_assert!(lpv <= ldr && ldr <= r);
        // strictly decreasing at fixed λ_PV
        let later = dr_price(Sdr::Finite(s * bump), r, lpv).unwrap();
        prop_assert!(later < ldr);
        prop_assert!(provider_margin(ldr, lpv, 2.0, 1.0) >= 0.0);
    }

    #[test]
    fn deficit_prices_are_zero((r, gc) in rates(), s in 0.0f64..=1.0) {
        prop_assert_eq!(pv_price(Sdr::Finite(s), r, gc).unwrap(), 0.0);
        prop_assert_eq!(dr_price(Sdr::Finite(s), r, gc).unwrap(), 0.0);
    }

    #[test]
    fn curves_share_one_form((r, v) in rates(), s in 1.0001f64..1e3) {
        prop_assert_eq!(dr_price(Sdr::Finite(s), r, v).unwrap(), pv_price(Sdr::Finite(s), r, v).unwrap());
    }

    #[test]
    fn best_response_bounds_and_monotonicity(
        alpha in 0.05f64..1.0,
        c in 0.0f64..20.0,
        lambda in 0.0f64..1.0,
        d_max in 0.0f64..5.0,
        up in 1.0f64..3.0,
    ) {
        let br = |a: f64, c: f64, l: f64| {
            prosumer::best_response(&BestResponseContext { coupling: c, lambda_pv: l, d_max }, a).unwrap()
        };
        let d = br(alpha, c, lambda);
        prop_assert!((0.0..=d_max).contains(&d));
        prop_assert!(br(alpha, c, lambda * up) >= d);
        prop_assert!(br(alpha, c * up, lambda) <= d);
        prop_assert!(br((alpha * up).min(1.0), c, lambda) <= d);
    }

    #[test]
    fn best_response_beats_grid(alpha in 0.05f64..1.0, c in 0.0f64..20.0, lambda in 0.0f64..1.0, d_max in 0.01f64..5.0) {
        let ctx = BestResponseContext { coupling: c, lambda_pv: lambda, d_max };
        let d = prosumer::best_response(&ctx, alpha).unwrap();
        let best = objective(alpha, c, lambda, d);
        for j in 0..=2000 {
            let g = d_max * j as f64 / 2000.0;
            prop_assert!(best <= objective(alpha, c, lambda, g) + 1e-12);
        }
    }

    #[test]
    fn theta_shares_sum_to_one(drs in proptest::collection::vec(0.0f64..50.0, 1..6)) {
        let sum: f64 = (0..drs.len()).map(|i| prosumer::theta(&drs, i, 1e-6)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_player_inconvenience_reduces_to_square(alpha in 0.01f64..1.0, d in 0.01f64..100.0) {
        let eps = 1e-10;
        let v = prosumer::inconvenience(alpha, d, 1.0 / (d + eps)).unwrap();
        prop_assert!((v / alpha - d * d).abs() <= 1e-6 * d * d);
    }

    #[test]
    fn utility_profit_identity(p in 0.0f64..5000.0, pv in 0.0f64..500.0, dr in 0.0f64..50.0,
                               c0 in -1e4f64..1e4, c1 in -20.0f64..20.0, c2 in 1e-5f64..0.1) {
        prop_assume!(p >= pv + dr);
        let coeffs = UtilityCostCoefficients::new(c0, c1, c2);
        let got = utility_profit(p, pv, dr, coeffs).unwrap();
        prop_assert_eq!(got, utility_cost(p, coeffs) - utility_cost(p - pv - dr, coeffs));
    }

    #[test]
    fn utility_profit_positive_on_rising_branch(pv in 0.0f64..300.0, dr in 0.0f64..30.0, extra in 1.0f64..2000.0) {
        prop_assume!(pv + dr > 0.0);
        let coeffs = UtilityCostCoefficients::new(4207.5, -6.74, 0.0029);
        let vertex = -coeffs.c1 / (2.0 * coeffs.c2);
        let p = vertex + pv + dr + extra;
        prop_assert!(utility_profit(p, pv, dr, coeffs).unwrap() > 0.0);
    }
}
