//! Per-TTI resource-block allocation: round robin, best-CQI and proportional
//! fair scheduling over per-user, per-RB rate estimates.
//!
//! One `SchedulerState` is owned by one cell's scheduling loop; cells run in
//! parallel without shared mutable state.

use crate::error::{Error, Result};
use crate::linkmodel::RateMap;
use crate::mimo::codebook::PrecoderCodebook;
use crate::mimo::transceiver::clsm_transceiver;
use crate::propagation::FadingTrace;

/// Time-frequency resource grid used by the scheduling loops.
#[derive(Debug, Clone, Copy)]
pub struct ResourceGrid {
    pub n_tti: usize,
    pub n_rb: usize,
    pub rb_bandwidth_hz: f64,
}

impl ResourceGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_tti == 0 || self.n_rb == 0 || self.rb_bandwidth_hz <= 0.0 {
            return Err(Error::invalid("resource grid dimensions must be positive"));
        }
        Ok(())
    }

    pub fn total_bandwidth_hz(&self) -> f64 {
        self.n_rb as f64 * self.rb_bandwidth_hz
    }
}

/// Per-user rate estimates for one TTI, `[user][rb]`, bits/s/Hz.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    n_users: usize,
    n_rb: usize,
    data: Vec<f64>,
}

impl RateMatrix {
    pub fn new(n_users: usize, n_rb: usize) -> Self {
        RateMatrix {
            n_users,
            n_rb,
            data: vec![0.0; n_users * n_rb],
        }
    }

    pub fn from_fn(n_users: usize, n_rb: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = RateMatrix::new(n_users, n_rb);
        for u in 0..n_users {
            for rb in 0..n_rb {
                *m.at_mut(u, rb) = f(u, rb);
            }
        }
        m
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_rb(&self) -> usize {
        self.n_rb
    }

    pub fn at(&self, user: usize, rb: usize) -> f64 {
        self.data[user * self.n_rb + rb]
    }

    pub fn at_mut(&mut self, user: usize, rb: usize) -> &mut f64 {
        &mut self.data[user * self.n_rb + rb]
    }

    pub fn scaled(&self, factor: f64) -> RateMatrix {
        RateMatrix {
            n_users: self.n_users,
            n_rb: self.n_rb,
            data: self.data.iter().map(|r| r * factor).collect(),
        }
    }
}

/// Per-RB served users for one TTI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleDecision {
    /// `per_rb[rb]` is the served user index of that resource block.
    pub per_rb: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerKind {
    RoundRobin,
    BestCqi,
    ProportionalFair,
}

/// Floor applied to the proportional-fair throughput averages (division
/// safety).
const AVG_FLOOR: f64 = 1e-9;

/// Mutable scheduler state: EWMA throughput per user and the round-robin
/// cursor.
#[derive(Debug, Clone)]
pub struct SchedulerState {
    avg_throughput: Vec<f64>,
    cursor: usize,
    window_ttis: f64,
}

impl SchedulerState {
    /// `initial_avgs` seeds the proportional-fair averages, one per user
    /// (wideband rate estimates at drop time avoid a cold-start burst).
    pub fn new(initial_avgs: Vec<f64>, window_ttis: usize) -> Result<Self> {
        if initial_avgs.is_empty() {
            return Err(Error::invalid("scheduler needs at least one user"));
        }
        if window_ttis == 0 {
            return Err(Error::invalid("PF window must be at least 1 TTI"));
        }
        Ok(SchedulerState {
            avg_throughput: initial_avgs
                .into_iter()
                .map(|a| a.max(AVG_FLOOR))
                .collect(),
            cursor: 0,
            window_ttis: window_ttis as f64,
        })
    }

    pub fn uniform(n_users: usize, window_ttis: usize) -> Result<Self> {
        SchedulerState::new(vec![1.0; n_users], window_ttis)
    }

    pub fn n_users(&self) -> usize {
        self.avg_throughput.len()
    }

    pub fn avg_throughput(&self, user: usize) -> f64 {
        self.avg_throughput[user]
    }

    /// EWMA update after a TTI: `avg <- (1 - 1/T) avg + (1/T) served_rate`,
    /// with non-served users decaying (served rate 0).
    pub fn update(&mut self, served_rate_per_user: &[f64]) {
        debug_assert_eq!(served_rate_per_user.len(), self.avg_throughput.len());
        let alpha = 1.0 / self.window_ttis;
        for (avg, &r) in self.avg_throughput.iter_mut().zip(served_rate_per_user) {
            *avg = ((1.0 - alpha) * *avg + alpha * r).max(AVG_FLOOR);
        }
    }
}

/// Cyclic allocation starting at the cursor; the cursor advances so deficits
/// rotate between TTIs. Ignores channel state entirely.
pub fn schedule_round_robin(
    state: &mut SchedulerState,
    n_users: usize,
    n_rb: usize,
) -> ScheduleDecision {
    debug_assert_eq!(n_users, state.n_users());
    let per_rb = (0..n_rb)
        .map(|i| (state.cursor + i) % n_users)
        .collect();
    state.cursor = (state.cursor + n_rb) % n_users;
    ScheduleDecision { per_rb }
}

/// Per-RB argmax of the instantaneous rate estimate; ties resolve to the
/// lowest user id.
pub fn schedule_best_cqi(rates: &RateMatrix) -> ScheduleDecision {
    let per_rb = (0..rates.n_rb())
        .map(|rb| {
            let mut best = 0usize;
            for u in 1..rates.n_users() {
                if rates.at(u, rb) > rates.at(best, rb) {
                    best = u;
                }
            }
            best
        })
        .collect();
    ScheduleDecision { per_rb }
}

/// Per-RB argmax of `instantaneous rate / average throughput`; ties resolve
/// to the lowest user id. Averages are read-only here; call
/// [`SchedulerState::update`] after the TTI.
pub fn schedule_proportional_fair(rates: &RateMatrix, state: &SchedulerState) -> ScheduleDecision {
    debug_assert_eq!(rates.n_users(), state.n_users());
    let per_rb = (0..rates.n_rb())
        .map(|rb| {
            let mut best = 0usize;
            let mut best_metric = rates.at(0, rb) / state.avg_throughput[0];
            for u in 1..rates.n_users() {
                let metric = rates.at(u, rb) / state.avg_throughput[u];
                if metric > best_metric {
                    best_metric = metric;
                    best = u;
                }
            }
            best
        })
        .collect();
    ScheduleDecision { per_rb }
}

pub fn schedule(
    kind: SchedulerKind,
    rates: &RateMatrix,
    state: &mut SchedulerState,
) -> ScheduleDecision {
    match kind {
        SchedulerKind::RoundRobin => {
            schedule_round_robin(state, rates.n_users(), rates.n_rb())
        }
        SchedulerKind::BestCqi => schedule_best_cqi(rates),
        SchedulerKind::ProportionalFair => schedule_proportional_fair(rates, state),
    }
}

/// Transmission abstraction used when estimating per-RB rates.
pub enum RateMode<'a> {
    /// Single-antenna link: SINR is the wideband SINR scaled by the fading
    /// power of the RB.
    Siso,
    /// Codebook-constrained spatial multiplexing; per-stream SINRs are mapped
    /// and summed.
    Clsm {
        codebooks: &'a [PrecoderCodebook],
    },
}

/// Context for [`estimate_rates`]: per-user wideband SINRs (including
/// interference), per-user fading traces and the mapping to bits/s/Hz.
pub struct RateEstimateContext<'a> {
    pub rate_map: &'a RateMap,
    /// Wideband SINR per user (fading-averaged, interference included).
    pub wideband_sinr: &'a [f64],
    /// One fading trace per user, covering the TTI being scheduled.
    pub fading: &'a [FadingTrace],
    pub mode: RateMode<'a>,
}

/// Deterministic per-(user, RB) rate estimates for one TTI, in bits/s/Hz.
pub fn estimate_rates(ctx: &RateEstimateContext, tti: usize, n_rb: usize) -> RateMatrix {
    let n_users = ctx.wideband_sinr.len();
    RateMatrix::from_fn(n_users, n_rb, |u, rb| {
        let h = ctx.fading[u].at(tti, rb);
        match &ctx.mode {
            RateMode::Siso => {
                let gain = h[(0, 0)].norm_sqr();
                ctx.rate_map.rate_clamped(ctx.wideband_sinr[u] * gain)
            }
            RateMode::Clsm { codebooks } => {
                let sel = clsm_transceiver(h, codebooks, ctx.wideband_sinr[u])
                    .expect("positive SINR and non-empty codebooks");
                sel.stream_sinrs
                    .iter()
                    .map(|&s| ctx.rate_map.rate_clamped(s))
                    .sum()
            }
        }
    })
}
