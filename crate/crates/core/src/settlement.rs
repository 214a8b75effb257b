//! Provider and utility settlement for a given game state.

use alloc::vec::Vec;
use core::fmt;

use crate::prosumer::ProsumerState;
use crate::scenario::{Scenario, UtilityCostCoefficients};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SettlementError {
    /// PV plus DR exceed the system load at `hour`.
    NegativeAdjustedLoad { hour: usize, load: f64 },
}

impl fmt::Display for SettlementError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettlementError::NegativeAdjustedLoad { hour, load } => {
                write!(f, "adjusted load at hour {hour} is negative ({load} kW)")
            }
        }
    }
}

impl core::error::Error for SettlementError {}

/// `c0 + c1·load + c2·load²`, $.
pub fn utility_cost(load: f64, coeffs: UtilityCostCoefficients) -> f64 {
    coeffs.c0 + coeffs.c1 * load + coeffs.c2 * load * load
}

/// `Q = P − ΣPV − ΣDR`, kW.
pub fn adjusted_load(p_system: f64, total_pv: f64, total_dr: f64) -> f64 {
    p_system - total_pv - total_dr
}

/// Cost avoided by the utility: `Cost(P) − Cost(Q)`.
///
/// Not clamped on the falling branch of the cost curve, where
/// it is negative.
pub fn utility_profit(
    p_system: f64,
    total_pv: f64,
    total_dr: f64,
    coeffs: UtilityCostCoefficients,
) -> Result<f64, SettlementError> {
    let q = adjusted_load(p_system, total_pv, total_dr);
    if q < 0.0 {
        return Err(SettlementError::NegativeAdjustedLoad { hour: 0, load: q });
    }
    Ok(utility_cost(p_system, coeffs) - utility_cost(q, coeffs))
}

/// One prosumer's contribution `(λ_DR − λ_PV)·(PV − x)` to the provider's profit.
pub fn provider_margin(lambda_dr: f64, lambda_pv: f64, pv_gen: f64, x: f64) -> f64 {
    let margin = lambda_dr - lambda_pv;
    if margin == 0.0 {
        return 0.0;
    }
    margin * (pv_gen - x)
}

/// Provider profit at `hour`, summed over prosumers with the prices stored
/// in each state's quotes.
pub fn provider_profit(scenario: &Scenario, states: &[ProsumerState], hour: usize) -> f64 {
    scenario
        .prosumers()
        .iter()
        .zip(states)
        .map(|(spec, st)| {
            let q = &st.quotes[hour];
            provider_margin(
                q.lambda_dr,
                q.lambda_pv,
                spec.pv_generation[hour],
                st.x[hour],
            )
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourSettlement {
    pub hour: usize,
    pub provider_profit: f64,
    pub utility_cost_before: f64,
    pub utility_cost_after: f64,
    pub adjusted_load: f64,
    pub utility_profit: f64,
}

/// Money flows for one prosumer-hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaymentLine {
    pub prosumer: usize,
    pub hour: usize,
    /// Paid by the provider to the prosumer: `λ_PV · (PV − x)`.
    pub pv_payment: f64,
    /// Paid by the utility to the provider: `λ_DR · (PV − x)`.
    pub dr_payment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlementReport {
    pub hours: Vec<HourSettlement>,
    pub payments: Vec<PaymentLine>,
}

impl SettlementReport {
    pub fn total_provider_profit(&self) -> f64 {
        self.hours.iter().map(|h| h.provider_profit).sum()
    }

    pub fn total_utility_profit(&self) -> f64 {
        self.hours.iter().map(|h| h.utility_profit).sum()
    }
}

pub fn settle(
    scenario: &Scenario,
    states: &[ProsumerState],
) -> Result<SettlementReport, SettlementError> {
    let coeffs = scenario.utility_cost();
    let specs = scenario.prosumers();
    let mut hours = Vec::with_capacity(scenario.horizon());
    let mut payments = Vec::with_capacity(scenario.horizon() * specs.len());

    for t in 0..scenario.horizon() {
        let total_pv: f64 = specs.iter().map(|s| s.pv_generation[t]).sum();
        let total_dr: f64 = states.iter().map(|s| s.dr[t]).sum();
        let p = scenario.system_load()[t];
        let q = adjusted_load(p, total_pv, total_dr);
        if q < 0.0 {
            return Err(SettlementError::NegativeAdjustedLoad { hour: t, load: q });
        }
        let before = utility_cost(p, coeffs);
        let after = utility_cost(q, coeffs);
        hours.push(HourSettlement {
            hour: t,
            provider_profit: provider_profit(scenario, states, t),
            utility_cost_before: before,
            utility_cost_after: after,
            adjusted_load: q,
            utility_profit: before - after,
        });
    }
    for (i, (spec, st)) in specs.iter().zip(states).enumerate() {
        for t in 0..scenario.horizon() {
            let quote = &st.quotes[t];
            let surplus = spec.pv_generation[t] - st.x[t];
            let pay = |price: f64| if price == 0.0 { 0.0 } else { price * surplus };
            payments.push(PaymentLine {
                prosumer: i,
                hour: t,
                pv_payment: pay(quote.lambda_pv),
                dr_payment: pay(quote.lambda_dr),
            });
        }
    }
    Ok(SettlementReport { hours, payments })
}
