//! Scenario data model and validation.
//!
//! A [`Scenario`] can only be built through [`Scenario::new`], which checks
//! every cross-field rule, so the solver never has to re-validate its input.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::series::HourlySeries;

pub const DEFAULT_HORIZON: usize = 24;
pub const DEFAULT_DR_CAP_FRACTION: f64 = 0.10;

/// A rule violated by scenario data. `field` is a dotted path such as
/// `prosumers[1].alpha` or `system_load[17]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub field: String,
    pub rule: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl core::error::Error for ValidationError {}

/// Time-of-use retail rate in $/kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct TouTariff {
    pub retail_rate: HourlySeries,
}

/// Static description of one prosumer (one aggregate per bus).
#[derive(Debug, Clone, PartialEq)]
pub struct ProsumerSpec {
    pub id: String,
    /// Willingness to provide DR, in [0, 1].
    pub alpha: f64,
    /// Desired consumption before any DR, kW.
    pub baseline_load: HourlySeries,
    /// PV output, kW.
    pub pv_generation: HourlySeries,
    /// PV generation cost, $/kWh.
    pub pv_gen_cost: HourlySeries,
    /// DR cap as a fraction of peak baseline load.
    pub dr_cap_fraction: f64,
}

impl ProsumerSpec {
    /// DR cap in kW: `dr_cap_fraction` times the peak of the baseline load.
    pub fn dr_cap(&self) -> f64 {
        self.dr_cap_fraction * self.baseline_load.peak()
    }
}

/// Coefficients of the utility's quadratic operating cost `c0 + c1 P + c2 P²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityCostCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl UtilityCostCoefficients {
    pub const fn new(c0: f64, c1: f64, c2: f64) -> Self {
        Self { c0, c1, c2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    horizon: usize,
    tariff: TouTariff,
    system_load: HourlySeries,
    prosumers: Vec<ProsumerSpec>,
    utility_cost: UtilityCostCoefficients,
    event_hours: BTreeSet<usize>,
}

impl Scenario {
    pub fn new(
        horizon: usize,
        tariff: TouTariff,
        system_load: HourlySeries,
        prosumers: Vec<ProsumerSpec>,
        utility_cost: UtilityCostCoefficients,
        event_hours: BTreeSet<usize>,
    ) -> Result<Self, ValidationError> {
        let scenario = Self {
            horizon,
            tariff,
            system_load,
            prosumers,
            utility_cost,
            event_hours,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn tariff(&self) -> &TouTariff {
        &self.tariff
    }

    pub fn system_load(&self) -> &HourlySeries {
        &self.system_load
    }

    pub fn prosumers(&self) -> &[ProsumerSpec] {
        &self.prosumers
    }

    pub fn utility_cost(&self) -> UtilityCostCoefficients {
        self.utility_cost
    }

    pub fn event_hours(&self) -> &BTreeSet<usize> {
        &self.event_hours
    }

    pub fn is_event_hour(&self, hour: usize) -> bool {
        self.event_hours.contains(&hour)
    }

    /// Upper bound on prosumer `i`'s DR at `hour`: `min(p, cap)` inside the
    /// event window, 0 outside it.
    pub fn max_dr(&self, i: usize, hour: usize) -> f64 {
        if !self.is_event_hour(hour) {
            return 0.0;
        }
        let spec = &self.prosumers[i];
        spec.dr_cap().min(spec.baseline_load[hour])
    }

    /// Same scenario with the prosumer list reordered; `order[j]` is the old
    /// index of the prosumer placed at position `j`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, ValidationError> {
        if order.len() != self.prosumers.len() {
            return Err(ValidationError::new(
                "order",
                "must list every prosumer once",
            ));
        }
        let prosumers = order
            .iter()
            .map(|&k| {
                self.prosumers
                    .get(k)
                    .cloned()
                    .ok_or_else(|| ValidationError::new("order", "index out of range"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(
            self.horizon,
            self.tariff.clone(),
            self.system_load.clone(),
            prosumers,
            self.utility_cost,
            self.event_hours.clone(),
        )
    }

    fn validate(&self) -> Result<(), ValidationError> {
        let h = self.horizon;
        if h == 0 {
            return Err(ValidationError::new(
                "horizon",
                "must be a positive integer",
            ));
        }

        check_series("tariff.retail_rate", &self.tariff.retail_rate, h)?;
        for (t, &r) in self.tariff.retail_rate.iter().enumerate() {
            if r <= 0.0 {
                return Err(ValidationError::new(
                    indexed("tariff.retail_rate", t),
                    "retail rate must be > 0",
                ));
            }
        }
        check_series("system_load", &self.system_load, h)?;

        if self.prosumers.is_empty() {
            return Err(ValidationError::new(
                "prosumers",
                "at least one prosumer is required",
            ));
        }
        let mut ids = BTreeSet::new();
        for (i, p) in self.prosumers.iter().enumerate() {
            let base = alloc::format!("prosumers[{i}]");
            if p.id.is_empty() {
                return Err(ValidationError::new(
                    alloc::format!("{base}.id"),
                    "must not be empty",
                ));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(ValidationError::new(
                    alloc::format!("{base}.id"),
                    alloc::format!("duplicate prosumer id {:?}", p.id),
                ));
            }
            if !(0.0..=1.0).contains(&p.alpha) {
                return Err(ValidationError::new(
                    alloc::format!("{base}.alpha"),
                    "alpha must lie in [0, 1]",
                ));
            }
            if !(0.0..=1.0).contains(&p.dr_cap_fraction) {
                return Err(ValidationError::new(
                    alloc::format!("{base}.dr_cap_fraction"),
                    "dr_cap_fraction must lie in [0, 1]",
                ));
            }
            check_series(&alloc::format!("{base}.baseline_load"), &p.baseline_load, h)?;
            check_series(&alloc::format!("{base}.pv_generation"), &p.pv_generation, h)?;
            let gc_field = alloc::format!("{base}.pv_gen_cost");
            check_series(&gc_field, &p.pv_gen_cost, h)?;
            for t in 0..h {
                let gc = p.pv_gen_cost[t];
                if gc <= 0.0 {
                    return Err(ValidationError::new(
                        indexed(&gc_field, t),
                        "PV generation cost must be > 0",
                    ));
                }
                if gc >= self.tariff.retail_rate[t] {
                    return Err(ValidationError::new(
                        indexed(&gc_field, t),
                        "PV generation cost must be below the retail rate",
                    ));
                }
            }
        }

        let c = self.utility_cost;
        if !(c.c0.is_finite() && c.c1.is_finite() && c.c2.is_finite()) {
            return Err(ValidationError::new(
                "utility_cost",
                "coefficients must be finite",
            ));
        }
        if c.c2 <= 0.0 {
            return Err(ValidationError::new("utility_cost.c2", "c2 must be > 0"));
        }

        if self.event_hours.is_empty() {
            return Err(ValidationError::new(
                "event_hours",
                "at least one event hour is required",
            ));
        }
        if let Some(&last) = self.event_hours.iter().next_back() {
            if last >= h {
                return Err(ValidationError::new(
                    "event_hours",
                    alloc::format!("hour {last} is outside [0, {h})"),
                ));
            }
        }

        for t in 0..h {
            let load: f64 = self.prosumers.iter().map(|p| p.baseline_load[t]).sum();
            if self.system_load[t] < load {
                return Err(ValidationError::new(
                    indexed("system_load", t),
                    "system load must cover the prosumers' baseline load",
                ));
            }
            let pv: f64 = self.prosumers.iter().map(|p| p.pv_generation[t]).sum();
            let dr: f64 = (0..self.prosumers.len()).map(|i| self.max_dr(i, t)).sum();
            if self.system_load[t] < pv + dr {
                return Err(ValidationError::new(
                    indexed("system_load", t),
                    "adjusted load would go negative: system load must cover total PV plus maximum DR",
                ));
            }
        }
        Ok(())
    }
}

fn indexed(field: &str, t: usize) -> String {
    alloc::format!("{field}[{t}]")
}

fn check_series(field: &str, s: &HourlySeries, horizon: usize) -> Result<(), ValidationError> {
    if s.len() != horizon {
        return Err(ValidationError::new(
            field.to_string(),
            alloc::format!("expected {} values (horizon), found {}", horizon, s.len()),
        ));
    }
    for (t, &v) in s.iter().enumerate() {
        if !v.is_finite() {
            return Err(ValidationError::new(
                indexed(field, t),
                "value must be finite",
            ));
        }
        if v < 0.0 {
            return Err(ValidationError::new(
                indexed(field, t),
                "value must be nonnegative",
            ));
        }
    }
    Ok(())
}

pub mod replica {
    //! Index `t` is clock hour `t:00` on a 24-hour day.
    //!
    //! Desk-scale replica of the 34-bus case: one residential aggregate
    //! (17 homes, 6.2 kW PV each) and one business building (200 kW PV)
    //! under one DR provider.
    //!
    //! The alphas, the utility cost coefficients, the PV sizes and the 10%
    //! DR cap are the case-study values. Tariff levels, PV generation cost,
    //! load shapes and system load are placeholders. Only their structure
    //! is known (TOU windows, evening peak, PV surplus ending after 17:00),
    //! so treat any absolute number derived from them as illustrative.

    use super::*;

    pub const RESIDENTIAL_ALPHA: f64 = 0.8;
    pub const BUSINESS_ALPHA: f64 = 0.9;
    pub const RESIDENTIAL_HOMES: f64 = 17.0;
    pub const RESIDENTIAL_PV_PER_HOME_KW: f64 = 6.2;
    pub const BUSINESS_PV_KW: f64 = 200.0;
    pub const UTILITY_COST: UtilityCostCoefficients =
        UtilityCostCoefficients::new(4207.5, -6.74, 0.0029);

    /// Placeholder TOU levels, $/kWh.
    pub const PEAK_RATE: f64 = 0.52;
    pub const OFF_PEAK_RATE: f64 = 0.31;
    pub const SUPER_OFF_PEAK_RATE: f64 = 0.12;

    /// Placeholder PV generation costs, $/kWh.
    pub const RESIDENTIAL_PV_COST: f64 = 0.09;
    pub const BUSINESS_PV_COST: f64 = 0.07;

    /// Event window: noon through the 21:00 hour.
    pub const EVENT_HOURS: core::ops::RangeInclusive<usize> = 12..=21;

    /// Clear-sky summer PV shape normalised to 1.0 at 13:00.
    const PV_SHAPE: [f64; 24] = [
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.03, 0.15, 0.35, 0.55, 0.74, 0.88, 0.97, 1.0, 0.97, 0.88,
        0.72, 0.52, 0.28, 0.08, 0.01, 0.0, 0.0, 0.0,
    ];

    const RESIDENTIAL_LOAD: [f64; 24] = [
        24.0, 21.0, 19.0, 18.0, 18.0, 20.0, 25.0, 30.0, 30.0, 28.0, 28.0, 30.0, 32.0, 34.0, 36.0,
        40.0, 45.0, 52.0, 58.0, 62.0, 61.0, 55.0, 44.0, 32.0,
    ];

    const BUSINESS_LOAD: [f64; 24] = [
        40.0, 38.0, 38.0, 38.0, 40.0, 45.0, 60.0, 85.0, 110.0, 125.0, 135.0, 142.0, 148.0, 150.0,
        150.0, 146.0, 135.0, 100.0, 78.0, 70.0, 58.0, 50.0, 46.0, 42.0,
    ];

    const SYSTEM_LOAD: [f64; 24] = [
        1250.0, 1180.0, 1140.0, 1120.0, 1130.0, 1180.0, 1300.0, 1420.0, 1520.0, 1600.0, 1670.0,
        1730.0, 1790.0, 1840.0, 1880.0, 1920.0, 1980.0, 2020.0, 2040.0, 2010.0, 1940.0, 1820.0,
        1600.0, 1400.0,
    ];

    /// Retail rate for clock hour `hour`: super-off-peak 01-05, peak 16-21,
    /// off-peak otherwise (06-15 and 22-24).
    pub fn retail_rate(hour: usize) -> f64 {
        match hour {
            1..=5 => SUPER_OFF_PEAK_RATE,
            16..=21 => PEAK_RATE,
            _ => OFF_PEAK_RATE,
        }
    }

    fn pv(peak_kw: f64) -> HourlySeries {
        PV_SHAPE.iter().map(|s| s * peak_kw).collect()
    }

    pub fn scenario() -> Scenario {
        let h = DEFAULT_HORIZON;
        let residential = ProsumerSpec {
            id: "residential".to_string(),
            alpha: RESIDENTIAL_ALPHA,
            baseline_load: HourlySeries::new(RESIDENTIAL_LOAD.to_vec()),
            pv_generation: pv(RESIDENTIAL_HOMES * RESIDENTIAL_PV_PER_HOME_KW),
            pv_gen_cost: HourlySeries::constant(RESIDENTIAL_PV_COST, h),
            dr_cap_fraction: DEFAULT_DR_CAP_FRACTION,
        };
        let business = ProsumerSpec {
            id: "business".to_string(),
            alpha: BUSINESS_ALPHA,
            baseline_load: HourlySeries::new(BUSINESS_LOAD.to_vec()),
            pv_generation: pv(BUSINESS_PV_KW),
            pv_gen_cost: HourlySeries::constant(BUSINESS_PV_COST, h),
            dr_cap_fraction: DEFAULT_DR_CAP_FRACTION,
        };
        Scenario::new(
            h,
            TouTariff {
                retail_rate: (0..h).map(retail_rate).collect(),
            },
            HourlySeries::new(SYSTEM_LOAD.to_vec()),
            alloc::vec![residential, business],
            UTILITY_COST,
            EVENT_HOURS.collect(),
        )
        .expect("replica scenario is valid")
    }
}

/// The built-in replica scenario; see [`replica`].
pub fn replica_scenario() -> Scenario {
    replica::scenario()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tiny() -> (usize, TouTariff, HourlySeries, Vec<ProsumerSpec>) {
        let h = 2;
        let tariff = TouTariff {
            retail_rate: HourlySeries::new(vec![0.5, 0.5]),
        };
        let p = ProsumerSpec {
            id: "a".into(),
            alpha: 0.5,
            baseline_load: HourlySeries::new(vec![10.0, 10.0]),
            pv_generation: HourlySeries::new(vec![20.0, 5.0]),
            pv_gen_cost: HourlySeries::new(vec![0.1, 0.1]),
            dr_cap_fraction: 0.1,
        };
        (h, tariff, HourlySeries::new(vec![100.0, 100.0]), vec![p])
    }

    fn build(
        h: usize,
        tariff: TouTariff,
        load: HourlySeries,
        ps: Vec<ProsumerSpec>,
    ) -> Result<Scenario, ValidationError> {
        Scenario::new(
            h,
            tariff,
            load,
            ps,
            UtilityCostCoefficients::new(1.0, 1.0, 0.01),
            [0, 1].into_iter().collect(),
        )
    }

    #[test]
    fn tiny_is_valid() {
        let (h, t, l, p) = tiny();
        build(h, t, l, p).unwrap();
    }

    #[test]
    fn alpha_out_of_range() {
        let (h, t, l, mut p) = tiny();
        p[0].alpha = 1.2;
        let err = build(h, t, l, p).unwrap_err();
        assert_eq!(err.field, "prosumers[0].alpha");
    }

    #[test]
    fn short_series() {
        let (h, t, l, mut p) = tiny();
        p[0].baseline_load = HourlySeries::new(vec![10.0]);
        let err = build(h, t, l, p).unwrap_err();
        assert_eq!(err.field, "prosumers[0].baseline_load");
        assert!(err.rule.contains("expected 2"));
    }

    #[test]
    fn gen_cost_must_stay_below_retail() {
        let (h, t, l, mut p) = tiny();
        p[0].pv_gen_cost = HourlySeries::new(vec![0.1, 0.5]);
        let err = build(h, t, l, p).unwrap_err();
        assert_eq!(err.field, "prosumers[0].pv_gen_cost[1]");
    }

    #[test]
    fn duplicate_ids() {
        let (h, t, l, mut p) = tiny();
        p.push(p[0].clone());
        let err = build(h, t, l, p).unwrap_err();
        assert_eq!(err.field, "prosumers[1].id");
    }

    #[test]
    fn system_load_must_cover_prosumers() {
        let (h, t, _, p) = tiny();
        let err = build(h, t, HourlySeries::new(vec![100.0, 9.0]), p).unwrap_err();
        assert_eq!(err.field, "system_load[1]");
    }

    #[test]
    fn event_hour_out_of_range() {
        let (h, t, l, p) = tiny();
        let err = Scenario::new(
            h,
            t,
            l,
            p,
            UtilityCostCoefficients::new(1.0, 1.0, 0.01),
            [0, 2].into_iter().collect(),
        )
        .unwrap_err();
        assert_eq!(err.field, "event_hours");
    }

    #[test]
    fn concave_cost_rejected() {
        let (h, t, l, p) = tiny();
        let err = Scenario::new(
            h,
            t,
            l,
            p,
            UtilityCostCoefficients::new(1.0, 1.0, 0.0),
            [0].into_iter().collect(),
        )
        .unwrap_err();
        assert_eq!(err.field, "utility_cost.c2");
    }

    #[test]
    fn replica_facts() {
        let s = replica_scenario();
        assert_eq!(s.horizon(), 24);
        assert_eq!(s.prosumers().len(), 2);
        assert_eq!(s.prosumers()[0].alpha, 0.8);
        assert_eq!(s.prosumers()[1].alpha, 0.9);
        assert_eq!(
            s.utility_cost(),
            UtilityCostCoefficients::new(4207.5, -6.74, 0.0029)
        );
        assert!((s.prosumers()[0].pv_generation.peak() - 105.4).abs() < 1e-9);
        assert_eq!(s.prosumers()[1].pv_generation.peak(), 200.0);
        let res = &s.prosumers()[0];
        assert!((res.dr_cap() - 0.10 * res.baseline_load.peak()).abs() < 1e-12);
        assert_eq!(s.event_hours().len(), 10);
    }

    #[test]
    fn replica_tou_windows() {
        assert_eq!(replica::retail_rate(3), replica::SUPER_OFF_PEAK_RATE);
        assert_eq!(replica::retail_rate(16), replica::PEAK_RATE);
        assert_eq!(replica::retail_rate(21), replica::PEAK_RATE);
        assert_eq!(replica::retail_rate(22), replica::OFF_PEAK_RATE);
        assert_eq!(replica::retail_rate(0), replica::OFF_PEAK_RATE);
        assert_eq!(replica::retail_rate(10), replica::OFF_PEAK_RATE);
    }

    #[test]
    fn max_dr_respects_window_and_cap() {
        let s = replica_scenario();
        assert_eq!(s.max_dr(0, 8), 0.0);
        assert!((s.max_dr(0, 16) - 6.2).abs() < 1e-12);
        assert!((s.max_dr(1, 16) - 15.0).abs() < 1e-12);
    }
}
