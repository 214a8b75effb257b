//! Coupled-game solver.
//!
//! Each outer iteration prices every prosumer-hour from the previous
//! iteration's consumption, lets the prosumers play the simultaneous game at
//! those fixed prices, then settles provider and utility profits:
//!
//! ```text
//!   x = p, dr = 0
//!   loop:
//!     SDR, λ_PV, λ_DR  <- previous x
//!     dr               <- damped Jacobi best-response dynamics (prices fixed)
//!     Profit_DR, Profit_UC at the new state
//!     stop when Δdr, ΔProfit_DR and ΔProfit_UC are all below their thresholds
//! ```
//!
//! A prosumer takes part in the game at hour `t` only if `t` is an event
//! hour, its DR cap is positive and it is offered a positive PV price. The
//! coupling sums run over those participants only.

use alloc::vec::Vec;
use core::fmt;

use crate::pricing::{self, PriceQuote, PricingError};
use crate::prosumer::{self, BestResponseContext, HourTerms, ProsumerError, ProsumerState};
use crate::scenario::Scenario;
use crate::series::HourlySeries;
use crate::settlement::{self, SettlementError, SettlementReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Added to every `p − x` denominator, kW.
    pub eps_reg: f64,
    /// Weight of the new best response in each Jacobi sweep, in (0, 1].
    pub damping: f64,
    /// Max |Δdr| between outer iterations, kW.
    pub eps1: f64,
    /// Max |ΔProfit_DR|, $.
    pub eps2: f64,
    /// Max |ΔProfit_UC|, $.
    pub eps3: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Inner sweeps stop once no dr moves by more than this, kW.
    pub inner_tol: f64,
    /// Grid points per prosumer-hour in the deviation scan.
    pub deviation_grid: usize,
    /// One Jacobi sweep per outer iteration instead of iterating to a fixed point.
    pub single_sweep: bool,
    /// Compare daily profit totals instead of every hour.
    pub aggregate_convergence: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps_reg: 1e-6,
            damping: 0.5,
            eps1: 1e-3,
            eps2: 1e-3,
            eps3: 1e-3,
            max_outer: 500,
            max_inner: 200,
            inner_tol: 1e-6,
            deviation_grid: 10_000,
            single_sweep: false,
            aggregate_convergence: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), EquilibriumError> {
        let positive = [
            ("eps_reg", self.eps_reg),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
            ("inner_tol", self.inner_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EquilibriumError::InvalidOptions(name));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(EquilibriumError::InvalidOptions("damping"));
        }
        if self.max_outer == 0 {
            return Err(EquilibriumError::InvalidOptions("max_outer"));
        }
        if self.max_inner == 0 {
            return Err(EquilibriumError::InvalidOptions("max_inner"));
        }
        if self.deviation_grid < 2 {
            return Err(EquilibriumError::InvalidOptions("deviation_grid"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumError {
    InvalidOptions(&'static str),
    /// State arrays do not match the scenario's prosumer count or horizon.
    Shape,
    Pricing(PricingError),
    Prosumer(ProsumerError),
    Settlement(SettlementError),
}

impl fmt::Display for EquilibriumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumError::InvalidOptions(name) => write!(f, "invalid solver option `{name}`"),
            EquilibriumError::Shape => f.write_str("state does not match the scenario shape"),
            EquilibriumError::Pricing(e) => write!(f, "pricing: {e}"),
            EquilibriumError::Prosumer(e) => write!(f, "prosumer: {e}"),
            EquilibriumError::Settlement(e) => write!(f, "settlement: {e}"),
        }
    }
}

impl core::error::Error for EquilibriumError {}

impl From<PricingError> for EquilibriumError {
    fn from(e: PricingError) -> Self {
        Self::Pricing(e)
    }
}

impl From<ProsumerError> for EquilibriumError {
    fn from(e: ProsumerError) -> Self {
        Self::Prosumer(e)
    }
}

impl From<SettlementError> for EquilibriumError {
    fn from(e: SettlementError) -> Self {
        Self::Settlement(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based outer iteration number.
    pub outer_index: usize,
    pub dr: Vec<HourlySeries>,
    /// Per-hour provider profit, $.
    pub provider_profit: Vec<f64>,
    /// Per-hour utility profit, $.
    pub utility_profit: Vec<f64>,
    /// Largest |Δdr| against the previous outer iteration, kW.
    pub max_dr_delta: f64,
    pub inner_sweeps: usize,
    pub inner_converged: bool,
}

impl IterationRecord {
    pub fn total_provider_profit(&self) -> f64 {
        self.provider_profit.iter().sum()
    }

    pub fn total_utility_profit(&self) -> f64 {
        self.utility_profit.iter().sum()
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Stopping test between consecutive outer iterations.
pub fn converged(prev: &IterationRecord, curr: &IterationRecord, opts: &SolveOptions) -> bool {
    let dr_delta = prev
        .dr
        .iter()
        .zip(&curr.dr)
        .map(|(a, b)| max_abs_diff(a.values(), b.values()))
        .fold(0.0, f64::max);
    let (dp, du) = if opts.aggregate_convergence {
        (
            (curr.total_provider_profit() - prev.total_provider_profit()).abs(),
            (curr.total_utility_profit() - prev.total_utility_profit()).abs(),
        )
    } else {
        (
            max_abs_diff(&prev.provider_profit, &curr.provider_profit),
            max_abs_diff(&prev.utility_profit, &curr.utility_profit),
        )
    };
    dr_delta <= opts.eps1 && dp <= opts.eps2 && du <= opts.eps3
}

/// Whether prosumer `i` plays the DR game at `hour` under `quotes`.
fn participates(scenario: &Scenario, quotes: &[Vec<PriceQuote>], i: usize, hour: usize) -> bool {
    quotes[i][hour].lambda_pv > 0.0 && scenario.max_dr(i, hour) > 0.0
}

fn active_set(scenario: &Scenario, quotes: &[Vec<PriceQuote>], hour: usize) -> Vec<usize> {
    (0..scenario.prosumers().len())
        .filter(|&i| participates(scenario, quotes, i, hour))
        .collect()
}

fn peers_coupling(active: &[usize], dr: &[HourlySeries], i: usize, hour: usize, eps: f64) -> f64 {
    prosumer::coupling_from(
        active.iter().filter(|&&k| k != i).map(|&k| dr[k][hour]),
        eps,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub dr: Vec<HourlySeries>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Damped Jacobi best-response dynamics at fixed prices, started from `start`.
///
/// Every sweep reads only the previous sweep's DR, so the result does not
/// depend on prosumer order. Non-participants are set to 0 directly.
pub fn inner_game(
    scenario: &Scenario,
    quotes: &[Vec<PriceQuote>],
    start: &[HourlySeries],
    opts: &SolveOptions,
) -> Result<InnerOutcome, EquilibriumError> {
    let n = scenario.prosumers().len();
    let h = scenario.horizon();
    if quotes.len() != n || start.len() != n || start.iter().any(|s| s.len() != h) {
        return Err(EquilibriumError::Shape);
    }
    let actives: Vec<Vec<usize>> = (0..h).map(|t| active_set(scenario, quotes, t)).collect();

    let mut old: Vec<HourlySeries> = start.to_vec();
    let mut sweeps = 0;
    let mut done = false;
    while sweeps < opts.max_inner {
        sweeps += 1;
        let mut next: Vec<Vec<f64>> = alloc::vec![alloc::vec![0.0; h]; n];
        let mut delta = 0.0_f64;
        for (t, active) in actives.iter().enumerate() {
            for &i in active {
                let spec = &scenario.prosumers()[i];
                let ctx = BestResponseContext {
                    coupling: peers_coupling(active, &old, i, t, opts.eps_reg),
                    lambda_pv: quotes[i][t].lambda_pv,
                    d_max: scenario.max_dr(i, t),
                };
                let br = prosumer::best_response(&ctx, spec.alpha)?;
                let blended = (1.0 - opts.damping) * old[i][t] + opts.damping * br;
                next[i][t] = blended.min(ctx.d_max);
            }
            for i in 0..n {
                delta = delta.max((next[i][t] - old[i][t]).abs());
            }
        }
        old = next.into_iter().map(HourlySeries::new).collect();
        if delta <= opts.inner_tol {
            done = true;
            break;
        }
        if opts.single_sweep {
            break;
        }
    }
    Ok(InnerOutcome {
        dr: old,
        sweeps,
        converged: done,
    })
}

/// Prices every prosumer-hour at consumption `p − dr`.
pub fn quote_all(
    scenario: &Scenario,
    dr: &[HourlySeries],
) -> Result<Vec<Vec<PriceQuote>>, EquilibriumError> {
    let tariff = scenario.tariff();
    scenario
        .prosumers()
        .iter()
        .zip(dr)
        .map(|(spec, d)| {
            (0..scenario.horizon())
                .map(|t| pricing::quote(spec, spec.baseline_load[t] - d[t], t, tariff))
                .collect::<Result<Vec<_>, _>>()
                .map_err(EquilibriumError::from)
        })
        .collect()
}

/// Assembles per-prosumer states from DR schedules and the quotes they were
/// computed against.
pub fn build_states(
    scenario: &Scenario,
    dr: &[HourlySeries],
    quotes: &[Vec<PriceQuote>],
    eps_reg: f64,
) -> Vec<ProsumerState> {
    let h = scenario.horizon();
    let n = scenario.prosumers().len();
    let mut theta = alloc::vec![alloc::vec![0.0; h]; n];
    for t in 0..h {
        let active = active_set(scenario, quotes, t);
        let shares: Vec<f64> = active.iter().map(|&k| dr[k][t]).collect();
        for (slot, &i) in active.iter().enumerate() {
            theta[i][t] = prosumer::theta(&shares, slot, eps_reg);
        }
    }
    scenario
        .prosumers()
        .iter()
        .enumerate()
        .map(|(i, spec)| ProsumerState {
            x: (0..h).map(|t| spec.baseline_load[t] - dr[i][t]).collect(),
            dr: dr[i].clone(),
            theta: HourlySeries::new(core::mem::take(&mut theta[i])),
            quotes: quotes[i].clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub converged: bool,
    pub iterations: Vec<IterationRecord>,
    /// Final states; their quotes are the prices the last inner game used.
    pub states: Vec<ProsumerState>,
    pub settlement: SettlementReport,
    pub nash: NashReport,
}

impl EquilibriumResult {
    pub fn quotes(&self) -> impl Iterator<Item = &[PriceQuote]> {
        self.states.iter().map(|s| s.quotes.as_slice())
    }
}

pub fn run(
    scenario: &Scenario,
    opts: &SolveOptions,
) -> Result<EquilibriumResult, EquilibriumError> {
    opts.validate()?;
    let n = scenario.prosumers().len();
    let h = scenario.horizon();

    let mut dr: Vec<HourlySeries> = (0..n).map(|_| HourlySeries::zeros(h)).collect();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut converged_flag = false;
    let mut last: Option<(Vec<ProsumerState>, SettlementReport)> = None;

    for k in 1..=opts.max_outer {
        let quotes = quote_all(scenario, &dr)?;
        let inner = inner_game(scenario, &quotes, &dr, opts)?;
        let states = build_states(scenario, &inner.dr, &quotes, opts.eps_reg);
        let report = settlement::settle(scenario, &states)?;

        let max_dr_delta = dr
            .iter()
            .zip(&inner.dr)
            .map(|(a, b)| max_abs_diff(a.values(), b.values()))
            .fold(0.0, f64::max);
        let record = IterationRecord {
            outer_index: k,
            dr: inner.dr.clone(),
            provider_profit: report.hours.iter().map(|s| s.provider_profit).collect(),
            utility_profit: report.hours.iter().map(|s| s.utility_profit).collect(),
            max_dr_delta,
            inner_sweeps: inner.sweeps,
            inner_converged: inner.converged,
        };
        let done = iterations
            .last()
            .is_some_and(|prev| converged(prev, &record, opts));
        iterations.push(record);
        dr = inner.dr;
        last = Some((states, report));
        if done {
            converged_flag = true;
            break;
        }
    }

    let (states, settlement) = last.expect("max_outer >= 1");
    let nash = verify_states(scenario, &states, opts)?;
    Ok(EquilibriumResult {
        converged: converged_flag,
        iterations,
        states,
        settlement,
        nash,
    })
}

/// Objective terms of prosumer `i` at `hour`, with the coupling taken over
/// the other players active under the states' quotes.
pub fn hour_terms(
    scenario: &Scenario,
    states: &[ProsumerState],
    i: usize,
    hour: usize,
    eps_reg: f64,
) -> HourTerms {
    let spec = &scenario.prosumers()[i];
    let coupling_others = (0..states.len())
        .filter(|&k| k != i)
        .filter(|&k| states[k].quotes[hour].lambda_pv > 0.0 && scenario.max_dr(k, hour) > 0.0)
        .map(|k| 1.0 / (states[k].dr[hour] + eps_reg))
        .sum();
    HourTerms {
        dr: states[i].dr[hour],
        coupling_others,
        lambda_pv: states[i].quotes[hour].lambda_pv,
        pv_gen: spec.pv_generation[hour],
        baseline: spec.baseline_load[hour],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NashEntry {
    pub prosumer: usize,
    pub hour: usize,
    pub current_dr: f64,
    pub current_cost: f64,
    pub best_dr: f64,
    pub best_cost: f64,
    /// `max(0, current − best)`, $.
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashReport {
    pub entries: Vec<NashEntry>,
}

impl NashReport {
    pub fn max_improvement(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.improvement)
            .fold(0.0, f64::max)
    }

    pub fn max_improvement_for(&self, prosumer: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.prosumer == prosumer)
            .map(|e| e.improvement)
            .fold(0.0, f64::max)
    }
}

/// Unilateral-deviation scan on a converged result.
pub fn verify_nash(
    result: &EquilibriumResult,
    scenario: &Scenario,
    opts: &SolveOptions,
) -> Result<NashReport, EquilibriumError> {
    verify_states(scenario, &result.states, opts)
}

/// Scans each prosumer-hour's DR over `deviation_grid` points in
/// `[0, min(p, cap)]` with peers and prices frozen, using the exact
/// regularised hourly cost. Hours are separable, so per-hour improvements
/// are also the improvements over the horizon.
pub fn verify_states(
    scenario: &Scenario,
    states: &[ProsumerState],
    opts: &SolveOptions,
) -> Result<NashReport, EquilibriumError> {
    let n = scenario.prosumers().len();
    let h = scenario.horizon();
    if states.len() != n
        || states
            .iter()
            .any(|s| s.dr.len() != h || s.quotes.len() != h)
    {
        return Err(EquilibriumError::Shape);
    }
    let eps = opts.eps_reg;
    let grid = opts.deviation_grid;

    let mut entries = Vec::with_capacity(n * h);
    for t in 0..h {
        for (i, spec) in scenario.prosumers().iter().enumerate() {
            let terms = hour_terms(scenario, states, i, t, eps);
            let current = terms.cost(spec.alpha, eps)?;
            let hi = scenario.max_dr(i, t);
            let mut best = (terms.dr, current);
            for j in 0..grid {
                let d = hi * j as f64 / (grid - 1) as f64;
                let c = HourTerms { dr: d, ..terms }.cost(spec.alpha, eps)?;
                if c < best.1 {
                    best = (d, c);
                }
            }
            entries.push(NashEntry {
                prosumer: i,
                hour: t,
                current_dr: terms.dr,
                current_cost: current,
                best_dr: best.0,
                best_cost: best.1,
                improvement: (current - best.1).max(0.0),
            });
        }
    }
    Ok(NashReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ProsumerSpec, TouTariff, UtilityCostCoefficients};
    use alloc::string::ToString;
    use alloc::vec;

    fn record(dr: f64, pd: f64, pu: f64) -> IterationRecord {
        IterationRecord {
            outer_index: 1,
            dr: vec![HourlySeries::new(vec![dr, 0.0])],
            provider_profit: vec![pd, 0.0],
            utility_profit: vec![pu, 0.0],
            max_dr_delta: 0.0,
            inner_sweeps: 1,
            inner_converged: true,
        }
    }

    #[test]
    fn convergence_criteria() {
        let o = SolveOptions::default();
        let a = record(1.0, 2.0, 3.0);
        assert!(converged(&a, &a.clone(), &o));
        assert!(!converged(&a, &record(1.0 + 2.0 * o.eps1, 2.0, 3.0), &o));
        assert!(converged(
            &a,
            &record(1.0 + o.eps1 / 2.0, 2.0 + o.eps2 / 2.0, 3.0 + o.eps3 / 2.0),
            &o
        ));
        assert!(!converged(&a, &record(1.0, 2.0 + 2.0 * o.eps2, 3.0), &o));
        assert!(!converged(&a, &record(1.0, 2.0, 3.0 + 2.0 * o.eps3), &o));
    }

    #[test]
    fn aggregate_mode_compares_totals() {
        let o = SolveOptions {
            aggregate_convergence: true,
            ..SolveOptions::default()
        };
        let mut a = record(1.0, 2.0, 3.0);
        let mut b = a.clone();
        // hourly profits shuffle between hours, daily total unchanged
        a.provider_profit = vec![1.0, 1.0];
        b.provider_profit = vec![0.5, 1.5];
        assert!(converged(&a, &b, &o));
        assert!(!converged(&a, &b, &SolveOptions::default()));
    }

    #[test]
    fn options_are_checked() {
        let bad = SolveOptions {
            damping: 0.0,
            ..SolveOptions::default()
        };
        assert_eq!(
            bad.validate(),
            Err(EquilibriumError::InvalidOptions("damping"))
        );
        let bad = SolveOptions {
            eps2: -1.0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        SolveOptions::default().validate().unwrap();
    }

    fn one_hour(prosumers: Vec<ProsumerSpec>) -> Scenario {
        let load: f64 = prosumers
            .iter()
            .map(|p| p.baseline_load[0] + p.pv_generation[0])
            .sum();
        Scenario::new(
            1,
            TouTariff {
                retail_rate: HourlySeries::new(vec![0.5]),
            },
            HourlySeries::new(vec![load + 100.0]),
            prosumers,
            UtilityCostCoefficients::new(0.0, 1.0, 0.001),
            [0].into_iter().collect(),
        )
        .unwrap()
    }

    fn spec(id: &str, alpha: f64) -> ProsumerSpec {
        ProsumerSpec {
            id: id.to_string(),
            alpha,
            baseline_load: HourlySeries::new(vec![10.0]),
            pv_generation: HourlySeries::new(vec![20.0]),
            pv_gen_cost: HourlySeries::new(vec![0.1]),
            dr_cap_fraction: 0.1,
        }
    }

    #[test]
    fn single_player_one_sweep_hits_closed_form() {
        let s = one_hour(vec![spec("a", 0.8)]);
        let quotes = vec![vec![PriceQuote {
            hour: 0,
            sdr: pricing::Sdr::Finite(2.0),
            lambda_pv: 0.16,
            lambda_dr: 0.2,
        }]];
        let opts = SolveOptions {
            damping: 1.0,
            ..SolveOptions::default()
        };
        let out = inner_game(&s, &quotes, &[HourlySeries::zeros(1)], &opts).unwrap();
        assert!((out.dr[0][0] - 0.1).abs() < 1e-15);
        assert!(out.sweeps <= 2);
    }

    #[test]
    fn zero_prices_give_zero_dr_in_one_sweep() {
        let s = one_hour(vec![spec("a", 0.8), spec("b", 0.9)]);
        let quotes = vec![vec![PriceQuote::zero(0)], vec![PriceQuote::zero(0)]];
        let out = inner_game(
            &s,
            &quotes,
            &[HourlySeries::zeros(1), HourlySeries::zeros(1)],
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(out.sweeps, 1);
        assert!(out.converged);
        assert_eq!(out.dr[0][0], 0.0);
        assert_eq!(out.dr[1][0], 0.0);
    }

    #[test]
    fn symmetric_players_match() {
        let s = one_hour(vec![spec("a", 0.8), spec("b", 0.8)]);
        let q = PriceQuote {
            hour: 0,
            sdr: pricing::Sdr::Finite(2.0),
            lambda_pv: 0.3,
            lambda_dr: 0.4,
        };
        let out = inner_game(
            &s,
            &[vec![q], vec![q]],
            &[HourlySeries::zeros(1), HourlySeries::zeros(1)],
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.dr[0][0], out.dr[1][0]);
        // symmetric interior fixed point of 3α d²/d + 2α d = λ is λ/(5α)
        assert!((out.dr[0][0] - 0.3 / 4.0).abs() < 1e-4);
    }

    #[test]
    fn tampered_state_shows_improvement() {
        let s = one_hour(vec![spec("a", 0.8)]);
        let mut st = ProsumerState::initial(&s.prosumers()[0].baseline_load);
        st.dr = HourlySeries::new(vec![s.max_dr(0, 0)]);
        st.x = HourlySeries::new(vec![10.0 - s.max_dr(0, 0)]);
        let report = verify_states(&s, &[st], &SolveOptions::default()).unwrap();
        assert!(report.max_improvement() > 0.0);
        assert_eq!(report.entries[0].best_dr, 0.0);
    }
}
