//! Supply/demand ratio and the two SDR-driven price curves.
//!
//! Both curves share one rational form. For a floor price `v` and a retail
//! rate `r`:
//!
//! ```text
//!   f(s; r, v) = r·v·s / (r·s + v − r)   for s > 1
//!              = 0                       for s ≤ 1
//! ```
//!
//! `f` falls from `r` (s → 1⁺) to `v` (s → ∞). The PV price uses the PV
//! generation cost as the floor, and the DR price uses the PV price.

use core::fmt;

use crate::scenario::{ProsumerSpec, TouTariff};

/// Supply/demand ratio. `Infinite` is the zero-demand limit (x = 0 with
/// some PV output).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sdr {
    Finite(f64),
    Infinite,
}

impl Sdr {
    /// True when supply exceeds demand, i.e. the nonzero price branch.
    pub fn in_surplus(self) -> bool {
        match self {
            Sdr::Finite(s) => s > 1.0,
            Sdr::Infinite => true,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sdr::Finite(s) => s,
            Sdr::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PricingError {
    NegativeInput {
        name: &'static str,
        value: f64,
    },
    /// Floor price outside `(0, retail)` for the PV curve or `[0, retail]`
    /// for the DR curve.
    FloorOutOfRange {
        name: &'static str,
        floor: f64,
        retail: f64,
    },
}

impl fmt::Display for PricingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PricingError::NegativeInput { name, value } => {
                write!(f, "{name} must be nonnegative, got {value}")
            }
            PricingError::FloorOutOfRange {
                name,
                floor,
                retail,
            } => {
                write!(
                    f,
                    "{name} = {floor} is out of range for retail rate {retail}"
                )
            }
        }
    }
}

impl core::error::Error for PricingError {}

pub fn supply_demand_ratio(pv_gen: f64, x: f64) -> Result<Sdr, PricingError> {
    if !(pv_gen >= 0.0) {
        return Err(PricingError::NegativeInput {
            name: "pv_gen",
            value: pv_gen,
        });
    }
    if !(x >= 0.0) {
        return Err(PricingError::NegativeInput {
            name: "x",
            value: x,
        });
    }
    Ok(if x == 0.0 {
        if pv_gen > 0.0 {
            Sdr::Infinite
        } else {
            Sdr::Finite(0.0)
        }
    } else {
        Sdr::Finite(pv_gen / x)
    })
}

fn rational(s: f64, retail: f64, floor: f64) -> f64 {
    retail * floor * s / (retail * s + (floor - retail))
}

/// Price the provider pays the prosumer for surplus PV and DR, $/kWh.
///
/// Requires `0 < pv_gen_cost < retail_rate`. The price is 0 at `sdr ≤ 1`
/// (including exactly 1, where the curve itself would give the retail rate).
pub fn pv_price(sdr: Sdr, retail_rate: f64, pv_gen_cost: f64) -> Result<f64, PricingError> {
    if !(pv_gen_cost > 0.0 && pv_gen_cost < retail_rate) {
        return Err(PricingError::FloorOutOfRange {
            name: "pv_gen_cost",
            floor: pv_gen_cost,
            retail: retail_rate,
        });
    }
    Ok(match sdr {
        Sdr::Infinite => pv_gen_cost,
        Sdr::Finite(s) if s > 1.0 => rational(s, retail_rate, pv_gen_cost),
        Sdr::Finite(_) => 0.0,
    })
}

/// Price the utility pays the provider per kW of DR, $/kWh.
///
/// Requires `0 ≤ lambda_pv ≤ retail_rate`; returns 0 whenever the PV price is
/// 0 or `sdr ≤ 1`.
pub fn dr_price(sdr: Sdr, retail_rate: f64, lambda_pv: f64) -> Result<f64, PricingError> {
    if !(lambda_pv >= 0.0 && lambda_pv <= retail_rate) {
        return Err(PricingError::FloorOutOfRange {
            name: "lambda_pv",
            floor: lambda_pv,
            retail: retail_rate,
        });
    }
    if lambda_pv == 0.0 {
        return Ok(0.0);
    }
    Ok(match sdr {
        Sdr::Infinite => lambda_pv,
        Sdr::Finite(s) if s > 1.0 => rational(s, retail_rate, lambda_pv),
        Sdr::Finite(_) => 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceQuote {
    pub hour: usize,
    pub sdr: Sdr,
    pub lambda_pv: f64,
    pub lambda_dr: f64,
}

impl PriceQuote {
    /// The quote for a prosumer that sells nothing at this hour.
    pub fn zero(hour: usize) -> Self {
        Self {
            hour,
            sdr: Sdr::Finite(0.0),
            lambda_pv: 0.0,
            lambda_dr: 0.0,
        }
    }
}

/// Prices one prosumer-hour from its adjusted consumption `x`.
pub fn quote(
    prosumer: &ProsumerSpec,
    x: f64,
    hour: usize,
    tariff: &TouTariff,
) -> Result<PriceQuote, PricingError> {
    let retail = tariff.retail_rate[hour];
    let sdr = supply_demand_ratio(prosumer.pv_generation[hour], x)?;
    let lambda_pv = pv_price(sdr, retail, prosumer.pv_gen_cost[hour])?;
    let lambda_dr = dr_price(sdr, retail, lambda_pv)?;
    Ok(PriceQuote {
        hour,
        sdr,
        lambda_pv,
        lambda_dr,
    })
}
