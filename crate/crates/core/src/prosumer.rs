//! Prosumer cost model and per-hour best response.
//!
//! With `d = p − x` the DR a prosumer provides, its hourly cost is the
//! coupled inconvenience minus the PV sale profit:
//!
//! ```text
//!   Inc(d)    = α · d³ · Σ_k 1/(d_k + ε)          (k runs over all players)
//!   Profit(d) = λ_pv · (PV − p + d)
//! ```
//!
//! The cube-times-harmonic-sum form is the pairwise share `θ_i = (1/d_i) /
//! Σ_k 1/d_k` folded into `α d²/θ_i`. Others' DR raise the sum less when
//! they are large, so a prosumer can offer more DR when its peers do too.

use alloc::vec::Vec;
use core::fmt;

use crate::pricing::PriceQuote;
use crate::series::HourlySeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProsumerError {
    NegativeDr(f64),
    NegativeBound(f64),
}

impl fmt::Display for ProsumerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProsumerError::NegativeDr(d) => write!(f, "DR quantity must be nonnegative, got {d}"),
            ProsumerError::NegativeBound(d) => {
                write!(f, "DR upper bound must be nonnegative, got {d}")
            }
        }
    }
}

impl core::error::Error for ProsumerError {}

/// Per-iteration decision and price state of one prosumer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsumerState {
    /// Adjusted consumption, kW.
    pub x: HourlySeries,
    /// DR provided, kW; always `p − x`.
    pub dr: HourlySeries,
    /// Share among the players active at each hour; 0 when not participating.
    pub theta: HourlySeries,
    pub quotes: Vec<PriceQuote>,
}

impl ProsumerState {
    /// No DR at all: `x = p`.
    pub fn initial(baseline_load: &HourlySeries) -> Self {
        let h = baseline_load.len();
        Self {
            x: baseline_load.clone(),
            dr: HourlySeries::zeros(h),
            theta: HourlySeries::zeros(h),
            quotes: (0..h).map(PriceQuote::zero).collect(),
        }
    }
}

/// Share of player `i` among `all_dr`, with every denominator regularised to
/// `dr_k + eps_reg`.
pub fn theta(all_dr: &[f64], i: usize, eps_reg: f64) -> f64 {
    let total: f64 = all_dr.iter().map(|&d| 1.0 / (d + eps_reg)).sum();
    (1.0 / (all_dr[i] + eps_reg)) / total
}

/// `Σ_{k≠i} 1/(d_k + ε)` for the given peers.
pub fn coupling_from(peers: impl IntoIterator<Item = f64>, eps_reg: f64) -> f64 {
    peers.into_iter().map(|d| 1.0 / (d + eps_reg)).sum()
}

/// Coupled inconvenience `α · d³ · coupling_full`, where `coupling_full`
/// includes the player's own `1/(d + ε)` term.
pub fn inconvenience(alpha: f64, dr: f64, coupling_full: f64) -> Result<f64, ProsumerError> {
    if !(dr >= 0.0) {
        return Err(ProsumerError::NegativeDr(dr));
    }
    if dr == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha * dr * dr * dr * coupling_full)
}

pub fn pv_sale_profit(lambda_pv: f64, pv_gen: f64, x: f64) -> f64 {
    if lambda_pv == 0.0 {
        return 0.0;
    }
    lambda_pv * (pv_gen - x)
}

/// Everything needed to price one prosumer-hour of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourTerms {
    pub dr: f64,
    /// Peers' coupling `C_{-i}`, excluding the player itself.
    pub coupling_others: f64,
    pub lambda_pv: f64,
    pub pv_gen: f64,
    pub baseline: f64,
}

impl HourTerms {
    pub fn x(&self) -> f64 {
        self.baseline - self.dr
    }

    pub fn inconvenience(&self, alpha: f64, eps_reg: f64) -> Result<f64, ProsumerError> {
        let full = self.coupling_others + 1.0 / (self.dr + eps_reg);
        inconvenience(alpha, self.dr, full)
    }

    pub fn pv_profit(&self) -> f64 {
        pv_sale_profit(self.lambda_pv, self.pv_gen, self.x())
    }

    /// `Inc − Profit` for this hour.
    pub fn cost(&self, alpha: f64, eps_reg: f64) -> Result<f64, ProsumerError> {
        Ok(self.inconvenience(alpha, eps_reg)? - self.pv_profit())
    }
}

/// Net cost over the horizon, the quantity each prosumer minimises.
pub fn net_cost<I>(alpha: f64, eps_reg: f64, hours: I) -> Result<f64, ProsumerError>
where
    I: IntoIterator<Item = HourTerms>,
{
    hours
        .into_iter()
        .try_fold(0.0, |acc, h| Ok(acc + h.cost(alpha, eps_reg)?))
}

/// Inputs held fixed while one prosumer picks its DR for one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponseContext {
    /// `C_{-i} = Σ_{k≠i} 1/(d_k + ε)` over the other active players.
    pub coupling: f64,
    pub lambda_pv: f64,
    /// `min(p, cap)` in the event window, 0 outside.
    pub d_max: f64,
}

/// d-dependent part of the hourly cost with the self-term at its ε → 0 limit:
/// `α C d³ + α d² − λ d`.
pub fn response_objective(ctx: &BestResponseContext, alpha: f64, d: f64) -> f64 {
    alpha * ctx.coupling * d * d * d + alpha * d * d - ctx.lambda_pv * d
}

/// Minimiser of [`response_objective`] over `[0, d_max]`.
///
/// The stationarity condition `3αC d² + 2α d − λ = 0` has the positive root
/// `(−2α + √(4α² + 12αCλ)) / (6αC)`, evaluated here as
/// `2λ / (2α + √(4α² + 12αCλ))`, which also covers `C = 0` (`λ / 2α`).
/// The objective is convex on `d ≥ 0`, so clipping the root is exact.
pub fn best_response(ctx: &BestResponseContext, alpha: f64) -> Result<f64, ProsumerError> {
    if !(ctx.d_max >= 0.0) {
        return Err(ProsumerError::NegativeBound(ctx.d_max));
    }
    if ctx.lambda_pv <= 0.0 || ctx.d_max == 0.0 {
        return Ok(0.0);
    }
    if alpha <= 0.0 {
        // linear objective, falls all the way to the bound
        return Ok(ctx.d_max);
    }
    let disc = 4.0 * alpha * alpha + 12.0 * alpha * ctx.coupling * ctx.lambda_pv;
    let root = 2.0 * ctx.lambda_pv / (2.0 * alpha + libm::sqrt(disc));
    Ok(root.clamp(0.0, ctx.d_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Brute-force argmin on an evenly spaced grid; independent of the closed form.
    fn grid_argmin(f: impl Fn(f64) -> f64, hi: f64, points: usize) -> f64 {
        let step = hi / (points - 1) as f64;
        let mut best = (0.0, f(0.0));
        for j in 1..points {
            let d = j as f64 * step;
            let v = f(d);
            if v < best.1 {
                best = (d, v);
            }
        }
        best.0
    }

    #[test]
    fn theta_examples() {
        assert!((theta(&[2.0, 2.0], 0, 1e-12) - 0.5).abs() < 1e-12);
        let t = theta(&[1.0, 3.0], 0, 1e-6);
        assert!((t - 0.75).abs() < 1e-4);
        assert!((theta(&[0.0, 0.0], 1, 1e-6) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inconvenience_examples() {
        // two players at dr = 2: α·8·(1/2 + 1/2)
        let full = 0.5 + 0.5;
        assert!((inconvenience(0.8, 2.0, full).unwrap() - 6.4).abs() < 1e-12);
        assert_eq!(inconvenience(0.8, 0.0, 1e6).unwrap(), 0.0);
        assert!(inconvenience(0.8, -1.0, 1.0).is_err());

        // single player collapses to α d²
        let d = 3.0;
        let eps = 1e-9;
        let v = inconvenience(1.0, d, 1.0 / (d + eps)).unwrap();
        assert!((v - d * d).abs() < 1e-6);
    }

    #[test]
    fn hour_terms_inconvenience_includes_self_term() {
        let h = HourTerms {
            dr: 2.0,
            coupling_others: 1.0 / (2.0 + 1e-12),
            lambda_pv: 0.0,
            pv_gen: 0.0,
            baseline: 10.0,
        };
        assert!((h.inconvenience(0.8, 1e-12).unwrap() - 6.4).abs() < 1e-9);
    }

    #[test]
    fn pv_profit_examples() {
        assert!((pv_sale_profit(0.166667, 200.0, 100.0) - 16.6667).abs() < 1e-4);
        assert_eq!(pv_sale_profit(0.0, 50.0, 100.0), 0.0);
        assert_eq!(pv_sale_profit(0.2, 100.0, 100.0), 0.0);
    }

    #[test]
    fn net_cost_examples() {
        let idle = HourTerms {
            dr: 0.0,
            coupling_others: 0.0,
            lambda_pv: 0.0,
            pv_gen: 5.0,
            baseline: 10.0,
        };
        assert_eq!(net_cost(0.8, 1e-6, [idle; 3]).unwrap(), 0.0);

        // Inc = 6.4 from the coupled example, Profit = 16.6667
        let inc = 6.4;
        let profit = pv_sale_profit(0.166667, 200.0, 100.0);
        assert!((inc - profit - (-10.2667)).abs() < 1e-4);

        let surplus = HourTerms {
            dr: 0.0,
            coupling_others: 0.0,
            lambda_pv: 0.2,
            pv_gen: 30.0,
            baseline: 10.0,
        };
        let total = net_cost(0.8, 1e-6, [surplus, surplus]).unwrap();
        assert!((total - (-2.0 * 0.2 * 20.0)).abs() < 1e-12);
    }

    #[test]
    fn best_response_examples() {
        let ctx = |c: f64, l: f64| BestResponseContext {
            coupling: c,
            lambda_pv: l,
            d_max: 100.0,
        };
        assert_eq!(best_response(&ctx(1.0, 0.0), 0.8).unwrap(), 0.0);
        assert!((best_response(&ctx(0.0, 0.16), 0.8).unwrap() - 0.1).abs() < 1e-15);
        let d = best_response(&ctx(1.0, 0.5), 0.8).unwrap();
        assert!((d - 0.23186).abs() < 1e-5);
        // stationarity: 2.4 d² + 1.6 d − 0.5 = 0
        assert!((2.4 * d * d + 1.6 * d - 0.5).abs() < 1e-12);

        let g = grid_argmin(|d| 0.8 * d * d * d + 0.8 * d * d - 0.5 * d, 1.0, 10_001);
        assert!((g - d).abs() <= 1e-4 + 1e-6);
    }

    #[test]
    fn best_response_clips_and_rejects() {
        let ctx = BestResponseContext {
            coupling: 0.0,
            lambda_pv: 0.5,
            d_max: 0.05,
        };
        assert_eq!(best_response(&ctx, 0.8).unwrap(), 0.05);
        let bad = BestResponseContext { d_max: -1.0, ..ctx };
        assert!(best_response(&bad, 0.8).is_err());
        assert_eq!(best_response(&ctx, 0.0).unwrap(), 0.05);
    }

    #[test]
    fn closed_form_tracks_regularised_objective() {
        // the oracle keeps the self-term as d³/(d + ε); agreement within 10ε
        let eps = 1e-6;
        for &(alpha, c, lambda) in &[(0.8, 0.0, 0.3), (0.9, 2.5, 0.45), (0.3, 12.0, 0.1)] {
            let ctx = BestResponseContext {
                coupling: c,
                lambda_pv: lambda,
                d_max: 1.0,
            };
            let closed = best_response(&ctx, alpha).unwrap();
            // golden-section on the exact regularised cost
            let f = |d: f64| alpha * d * d * d * (c + 1.0 / (d + eps)) - lambda * d;
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let a = hi - r * (hi - lo);
                let b = lo + r * (hi - lo);
                if f(a) < f(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let exact = 0.5 * (lo + hi);
            assert!(
                (exact - closed).abs() <= 10.0 * eps,
                "{alpha} {c} {lambda}: {exact} vs {closed}"
            );
        }
    }

    #[test]
    fn objective_second_difference_positive() {
        let ctx = BestResponseContext {
            coupling: 3.0,
            lambda_pv: 0.4,
            d_max: 10.0,
        };
        let h = 1e-3;
        for j in 0..5000 {
            let d = h + j as f64 * 2e-3;
            let sd = response_objective(&ctx, 0.7, d + h) - 2.0 * response_objective(&ctx, 0.7, d)
                + response_objective(&ctx, 0.7, d - h);
            assert!(sd > 0.0, "non-convex at {d}");
        }
    }

    #[test]
    fn initial_state_has_no_dr() {
        let s = ProsumerState::initial(&HourlySeries::new(alloc::vec![3.0, 4.0]));
        assert_eq!(s.x.values(), &[3.0, 4.0]);
        assert_eq!(s.dr.values(), &[0.0, 0.0]);
    }
}
