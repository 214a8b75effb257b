//! Run outputs: plot-ready CSV tables and a JSON summary.
//!
//! | file               | rows               | columns |
//! |--------------------|--------------------|---------|
//! | `dr_schedule.csv`  | prosumer × hour    | `prosumer,hour,dr_kw,x_kw,theta,inconvenience,profit_pv` |
//! | `prices.csv`       | prosumer × hour    | `prosumer,hour,sdr,lambda_pv,lambda_dr` |
//! | `settlement.csv`   | hour               | `hour,provider_profit,utility_cost_before,utility_cost_after,adjusted_load_kw,utility_profit` |
//! | `trace.csv`        | outer iteration    | `iteration,max_dr_delta_kw,provider_profit,utility_profit,inner_sweeps,inner_converged` |
//! | `nash_report.csv`  | prosumer × hour    | `prosumer,hour,current_dr_kw,best_dr_kw,current_cost,best_cost,improvement` |
//!
//! Numbers carry 6 decimals; an unbounded SDR is written `inf`. Files are
//! comma-separated UTF-8 with LF line endings.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use drnash_core::equilibrium::{self, EquilibriumResult, NashReport};
use drnash_core::pricing::{PriceQuote, Sdr};
use drnash_core::prosumer::ProsumerState;
use drnash_core::{HourlySeries, Scenario, SolveOptions};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DR_SCHEDULE: &str = "dr_schedule.csv";
pub const PRICES: &str = "prices.csv";
pub const SETTLEMENT: &str = "settlement.csv";
pub const TRACE: &str = "trace.csv";
pub const SUMMARY: &str = "summary.json";
pub const NASH_REPORT: &str = "nash_report.csv";

const DR_HEADER: [&str; 7] = [
    "prosumer",
    "hour",
    "dr_kw",
    "x_kw",
    "theta",
    "inconvenience",
    "profit_pv",
];
const PRICE_HEADER: [&str; 5] = ["prosumer", "hour", "sdr", "lambda_pv", "lambda_dr"];
const SETTLEMENT_HEADER: [&str; 6] = [
    "hour",
    "provider_profit",
    "utility_cost_before",
    "utility_cost_after",
    "adjusted_load_kw",
    "utility_profit",
];
const TRACE_HEADER: [&str; 6] = [
    "iteration",
    "max_dr_delta_kw",
    "provider_profit",
    "utility_profit",
    "inner_sweeps",
    "inner_converged",
];
const NASH_HEADER: [&str; 7] = [
    "prosumer",
    "hour",
    "current_dr_kw",
    "best_dr_kw",
    "current_cost",
    "best_cost",
    "improvement",
];

/// Fixed 6-decimal rendering; negative zero prints as zero.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn fmt_sdr(s: Sdr) -> String {
    match s {
        Sdr::Finite(v) => fmt_num(v),
        Sdr::Infinite => "inf".to_string(),
    }
}

fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProsumerSummary {
    pub id: String,
    pub total_dr_kwh: f64,
    pub max_dr_kw: f64,
    pub dr_cap_kw: f64,
    pub total_inconvenience: f64,
    pub total_pv_profit: f64,
    pub net_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub converged: bool,
    pub outer_iterations: usize,
    pub horizon: usize,
    pub prosumers: Vec<ProsumerSummary>,
    pub provider_profit: f64,
    pub utility_profit: f64,
    pub max_nash_improvement: f64,
}

/// Every table of one run, already rendered to CSV cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub result_table: Vec<Vec<String>>,
    pub price_table: Vec<Vec<String>>,
    pub settlement_table: Vec<Vec<String>>,
    pub trace_table: Vec<Vec<String>>,
    pub summary: Summary,
}

impl RunArtifacts {
    pub fn build(
        scenario: &Scenario,
        result: &EquilibriumResult,
        opts: &SolveOptions,
    ) -> Result<Self> {
        let h = scenario.horizon();
        let mut result_table = Vec::new();
        let mut price_table = Vec::new();
        let mut prosumers = Vec::new();

        for (i, (spec, st)) in scenario.prosumers().iter().zip(&result.states).enumerate() {
            let (mut inc_total, mut profit_total) = (0.0, 0.0);
            for t in 0..h {
                let terms = equilibrium::hour_terms(scenario, &result.states, i, t, opts.eps_reg);
                let inc = terms
                    .inconvenience(spec.alpha, opts.eps_reg)
                    .map_err(equilibrium::EquilibriumError::from)?;
                let profit = terms.pv_profit();
                inc_total += inc;
                profit_total += profit;
                result_table.push(vec![
                    spec.id.clone(),
                    t.to_string(),
                    fmt_num(st.dr[t]),
                    fmt_num(st.x[t]),
                    fmt_num(st.theta[t]),
                    fmt_num(inc),
                    fmt_num(profit),
                ]);
                let q = &st.quotes[t];
                price_table.push(vec![
                    spec.id.clone(),
                    t.to_string(),
                    fmt_sdr(q.sdr),
                    fmt_num(q.lambda_pv),
                    fmt_num(q.lambda_dr),
                ]);
            }
            prosumers.push(ProsumerSummary {
                id: spec.id.clone(),
                total_dr_kwh: round6(st.dr.sum()),
                max_dr_kw: round6(st.dr.peak()),
                dr_cap_kw: round6(spec.dr_cap()),
                total_inconvenience: round6(inc_total),
                total_pv_profit: round6(profit_total),
                net_cost: round6(inc_total - profit_total),
            });
        }

        let settlement_table = result
            .settlement
            .hours
            .iter()
            .map(|s| {
                vec![
                    s.hour.to_string(),
                    fmt_num(s.provider_profit),
                    fmt_num(s.utility_cost_before),
                    fmt_num(s.utility_cost_after),
                    fmt_num(s.adjusted_load),
                    fmt_num(s.utility_profit),
                ]
            })
            .collect();

        let trace_table = result
            .iterations
            .iter()
            .map(|r| {
                vec![
                    r.outer_index.to_string(),
                    fmt_num(r.max_dr_delta),
                    fmt_num(r.total_provider_profit()),
                    fmt_num(r.total_utility_profit()),
                    r.inner_sweeps.to_string(),
                    r.inner_converged.to_string(),
                ]
            })
            .collect();

        let summary = Summary {
            converged: result.converged,
            outer_iterations: result.iterations.len(),
            horizon: h,
            prosumers,
            provider_profit: round6(result.settlement.total_provider_profit()),
            utility_profit: round6(result.settlement.total_utility_profit()),
            max_nash_improvement: round6(result.nash.max_improvement()),
        };

        Ok(Self {
            result_table,
            price_table,
            settlement_table,
            trace_table,
            summary,
        })
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        write_csv(&out_dir.join(DR_SCHEDULE), &DR_HEADER, &self.result_table)?;
        write_csv(&out_dir.join(PRICES), &PRICE_HEADER, &self.price_table)?;
        write_csv(
            &out_dir.join(SETTLEMENT),
            &SETTLEMENT_HEADER,
            &self.settlement_table,
        )?;
        write_csv(&out_dir.join(TRACE), &TRACE_HEADER, &self.trace_table)?;
        let path = out_dir.join(SUMMARY);
        let mut json = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::artifact(path, format!("{other:?}")),
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row).map_err(io_err)?;
    }
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub fn write_nash_report(path: &Path, scenario: &Scenario, report: &NashReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            vec![
                scenario.prosumers()[e.prosumer].id.clone(),
                e.hour.to_string(),
                fmt_num(e.current_dr),
                fmt_num(e.best_dr),
                fmt_num(e.current_cost),
                fmt_num(e.best_cost),
                fmt_num(e.improvement),
            ]
        })
        .collect();
    write_csv(path, &NASH_HEADER, &rows)
}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: PathBuf, expected: &[&str]) -> Result<Self> {
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let header: Vec<String> = r
            .headers()
            .map_err(|e| Error::artifact(&path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header != expected {
            return Err(Error::artifact(
                &path,
                format!("unexpected header {header:?}"),
            ));
        }
        let rows = r
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::artifact(&path, e.to_string()))?;
        Ok(Self { path, header, rows })
    }

    fn col(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .expect("column checked by header")
    }

    fn num(&self, row: &csv::StringRecord, name: &str) -> Result<f64> {
        let cell = &row[self.col(name)];
        cell.parse::<f64>().map_err(|_| {
            Error::artifact(&self.path, format!("bad number {cell:?} in column {name}"))
        })
    }

    /// Rows keyed by (prosumer index, hour); every prosumer-hour must appear once.
    fn by_prosumer_hour(
        &self,
        scenario: &Scenario,
    ) -> Result<HashMap<(usize, usize), &csv::StringRecord>> {
        let ids: HashMap<&str, usize> = scenario
            .prosumers()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect();
        let mut map = HashMap::new();
        for row in &self.rows {
            let id = &row[self.col("prosumer")];
            let i = *ids
                .get(id)
                .ok_or_else(|| Error::artifact(&self.path, format!("unknown prosumer {id:?}")))?;
            let hour: usize = row[self.col("hour")]
                .parse()
                .map_err(|_| Error::artifact(&self.path, "bad hour"))?;
            if hour >= scenario.horizon() {
                return Err(Error::artifact(
                    &self.path,
                    format!("hour {hour} out of range"),
                ));
            }
            if map.insert((i, hour), row).is_some() {
                return Err(Error::artifact(
                    &self.path,
                    format!("duplicate row for {id} hour {hour}"),
                ));
            }
        }
        if map.len() != scenario.prosumers().len() * scenario.horizon() {
            return Err(Error::artifact(&self.path, "missing prosumer-hour rows"));
        }
        Ok(map)
    }
}

/// Rebuilds final prosumer states from `dr_schedule.csv` and `prices.csv`.
pub fn read_states(
    out_dir: &Path,
    scenario: &Scenario,
    eps_reg: f64,
) -> Result<Vec<ProsumerState>> {
    let schedule = Table::read(out_dir.join(DR_SCHEDULE), &DR_HEADER)?;
    let prices = Table::read(out_dir.join(PRICES), &PRICE_HEADER)?;
    let dr_rows = schedule.by_prosumer_hour(scenario)?;
    let price_rows = prices.by_prosumer_hour(scenario)?;

    let n = scenario.prosumers().len();
    let h = scenario.horizon();
    let mut dr = Vec::with_capacity(n);
    let mut quotes = Vec::with_capacity(n);
    for i in 0..n {
        let mut d = Vec::with_capacity(h);
        let mut q = Vec::with_capacity(h);
        for t in 0..h {
            let value = schedule.num(dr_rows[&(i, t)], "dr_kw")?;
            let cap = scenario.max_dr(i, t);
            // 6-decimal rounding can push a capped value just past the cap
            if !(value >= 0.0 && value <= cap + 1e-6) {
                return Err(Error::artifact(
                    &schedule.path,
                    format!("dr {value} outside [0, {cap}] at prosumer {i} hour {t}"),
                ));
            }
            d.push(value.min(cap));
            let row = price_rows[&(i, t)];
            let sdr_cell = &row[prices.col("sdr")];
            let sdr = if sdr_cell == "inf" {
                Sdr::Infinite
            } else {
                Sdr::Finite(prices.num(row, "sdr")?)
            };
            q.push(PriceQuote {
                hour: t,
                sdr,
                lambda_pv: prices.num(row, "lambda_pv")?,
                lambda_dr: prices.num(row, "lambda_dr")?,
            });
        }
        dr.push(HourlySeries::new(d));
        quotes.push(q);
    }
    Ok(equilibrium::build_states(scenario, &dr, &quotes, eps_reg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_num(-1e-12), "0.000000");
        assert_eq!(fmt_num(2327.5), "2327.500000");
        assert_eq!(fmt_sdr(Sdr::Infinite), "inf");
    }

    #[test]
    fn round6_clears_negative_zero() {
        assert_eq!(round6(-1e-9).to_string(), "0");
        assert_eq!(round6(1.23456789), 1.234568);
    }
}
