//! Erlang-B loss model for a stack of flight levels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_HOLDING_TIME_HR: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("offered load must be finite and non-negative, got {0}")]
    NegativeLoad(f64),
    #[error("holding time must be positive, got {0} h")]
    NonPositiveHoldingTime(f64),
    #[error("invalid capacity query: {0}")]
    InvalidInput(String),
}

/// Blocking probability for offered load `a` (Erlangs) on `n` servers.
pub fn erlang_b(a: f64, n: u64) -> Result<f64, CapacityError> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(CapacityError::NegativeLoad(a));
    }
    let mut e = 1.0;
    for k in 1..=n {
        let ae = a * e;
        e = ae / (k as f64 + ae);
    }
    Ok(e)
}

/// Largest load with blocking at most `qos` on `n` servers.
///
/// The bracket starts at `n/2` and doubles until blocking exceeds `qos`;
/// bisection then runs until the bracket is narrower than both 1e-6 Erlangs
/// and a millionth of the load, so the result also satisfies the relative
/// bracket `erlang_b(a) ≤ qos < erlang_b(a·(1 + 1e-6))`.
pub fn max_offered_load(n: u64, qos: f64) -> Result<f64, CapacityError> {
    if n == 0 {
        return Err(CapacityError::InvalidInput(
            "need at least one level".into(),
        ));
    }
    if !(qos > 0.0 && qos < 1.0) {
        return Err(CapacityError::InvalidInput(format!(
            "qos {qos} not in (0, 1)"
        )));
    }
    let blocks = |a: f64| erlang_b(a, n).map(|b| b > qos);
    let mut lo = 0.0;
    let mut hi = n as f64 / 2.0;
    while !blocks(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let tol = 1e-6 * lo.min(1.0) * 0.5;
        if hi - lo <= tol.max(f64::EPSILON * hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if blocks(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

pub fn max_throughput(n: u64, qos: f64, holding_time_hr: f64) -> Result<f64, CapacityError> {
    check_holding(holding_time_hr)?;
    Ok(max_offered_load(n, qos)? / holding_time_hr)
}

fn check_holding(holding_time_hr: f64) -> Result<(), CapacityError> {
    if holding_time_hr.is_finite() && holding_time_hr > 0.0 {
        Ok(())
    } else {
        Err(CapacityError::NonPositiveHoldingTime(holding_time_hr))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityAnalysis {
    pub levels: u64,
    pub qos: f64,
    pub max_offered_erlangs: f64,
    pub holding_time_hr: f64,
    pub max_throughput_per_hr: f64,
}

impl CapacityAnalysis {
    pub fn new(levels: u64, qos: f64, holding_time_hr: f64) -> Result<Self, CapacityError> {
        check_holding(holding_time_hr)?;
        let a = max_offered_load(levels, qos)?;
        Ok(Self {
            levels,
            qos,
            max_offered_erlangs: a,
            holding_time_hr,
            max_throughput_per_hr: a / holding_time_hr,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandSample {
    pub demand_per_hr: f64,
    pub offered_erlangs: f64,
    pub blocking_probability: f64,
}

/// Blocking probability at `n` evenly spaced demands in `[0, max_demand_per_hr]`.
pub fn demand_sweep(
    levels: u64,
    holding_time_hr: f64,
    max_demand_per_hr: f64,
    n: usize,
) -> Result<Vec<DemandSample>, CapacityError> {
    check_holding(holding_time_hr)?;
    if !(max_demand_per_hr.is_finite() && max_demand_per_hr > 0.0) || n < 2 {
        return Err(CapacityError::InvalidInput(format!(
            "sweep to {max_demand_per_hr} with {n} samples"
        )));
    }
    (0..n)
        .map(|i| {
            let demand = max_demand_per_hr * i as f64 / (n - 1) as f64;
            let a = demand * holding_time_hr;
            Ok(DemandSample {
                demand_per_hr: demand,
                offered_erlangs: a,
                blocking_probability: erlang_b(a, levels)?,
            })
        })
        .collect()
}
