//! Independent continuous-time Markov chain simulation oracle for both
//! information levels.
//!
//! The event loop draws competing exponential clocks from the same generator
//! as [`crate::model::transition_rates`]; impatience enters as the aggregate
//! extra down-rate `alpha` for states > 0, exactly as in the balance
//! equations, and a departure from a positive state is attributed to service
//! versus reneging by an independent Bernoulli(mu2/(alpha+mu2)) draw.
//! Reneged passengers earn no reward and pay no fare.
//!
//! Each replication composes its welfare estimate from its own primitive
//! estimates (event rates and time averages) in the same functional form as
//! the analytic welfare, so the estimator is consistent for the analytic
//! quantity.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::Error;
use crate::model::{ModelParams, Policy};

/// Simulation horizon, warmup, seeding and replication count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Total events per replication, including warmup.
    pub horizon_events: u64,
    /// Events discarded before statistics collection starts.
    pub warmup_events: u64,
    /// Master seed; each replication derives its own stream.
    pub seed: u64,
    pub replications: u32,
}

impl SimConfig {
    fn check(&self) -> Result<(), Error> {
        if self.replications < 1 {
            return Err(Error::BadSimConfig("replications must be >= 1"));
        }
        if self.horizon_events <= self.warmup_events {
            return Err(Error::BadSimConfig(
                "horizon_events must exceed warmup_events",
            ));
        }
        Ok(())
    }
}

/// Monte Carlo point estimate with a 95% t-interval half-width over
/// replication means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub replications: u32,
}

/// Pooled fraction of simulated time spent in each state.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub lower_bound: i64,
    pub time_fraction: Vec<f64>,
}

impl Occupancy {
    /// Total-variation distance to an analytic distribution. Analytic mass
    /// outside the visited range counts in full.
    pub fn tv_distance(&self, prob: &dyn Fn(i64) -> f64, analytic_upper: i64) -> f64 {
        let mut acc = 0.0;
        let upper = self.lower_bound + self.time_fraction.len() as i64 - 1;
        for (i, e) in self.time_fraction.iter().enumerate() {
            acc += (e - prob(self.lower_bound + i as i64)).abs();
        }
        for n in (upper + 1)..=analytic_upper.max(upper) {
            acc += prob(n);
        }
        0.5 * acc
    }
}

/// Per-state exit counts split by direction, pooled over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpCounts {
    pub lower_bound: i64,
    pub up: Vec<u64>,
    pub down: Vec<u64>,
}

/// Everything the simulation estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Keyed estimates: `lambda_p_eff`, `lambda_t_eff`, `el_p`, `el_t`,
    /// `ew_p`, `ew_t`, `em`, `welfare`.
    pub measures: BTreeMap<String, SimEstimate>,
    pub occupancy: Occupancy,
    pub jumps: JumpCounts,
}

struct RepTotals {
    time: f64,
    time_in_state: Vec<f64>,
    up_counts: Vec<u64>,
    down_counts: Vec<u64>,
    admitted: u64,
    dispatched: u64,
    int_lp: f64,
    int_lt: f64,
    int_k: f64,
    time_ge0: f64,
}

/// Chain rates at `state`; mirrors [`crate::model::transition_rates`] without
/// the per-event allocation.
fn rates(params: &ModelParams, policy: &Policy, state: i64, lower: i64) -> (f64, f64) {
    let up = match policy {
        Policy::JoinProbability(q) => {
            if state < 0 {
                params.lambda
            } else {
                params.lambda * q
            }
        }
        Policy::Threshold(n_s) => {
            if state >= *n_s {
                0.0
            } else {
                params.lambda
            }
        }
    };
    let down = if state == lower {
        0.0
    } else if state <= 0 {
        params.mu1
    } else {
        params.alpha + params.mu2
    };
    (up, down)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn replication_stream(seed: u64, replication: u32) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ splitmix64(replication as u64 + 1)))
}

fn check_policy(params: &ModelParams, policy: &Policy) -> Result<(), Error> {
    match policy {
        Policy::JoinProbability(q) => {
            if !(0.0..=1.0).contains(q) || q.is_nan() {
                return Err(Error::InvalidJoinProb { q: *q });
            }
            let rho1 = params.lambda * q / (params.alpha + params.mu2);
            if rho1 >= 1.0 {
                return Err(Error::Unstable { rho1 });
            }
        }
        Policy::Threshold(n_s) => {
            if *n_s < 1 {
                return Err(Error::InvalidThreshold { n_s: *n_s });
            }
        }
    }
    Ok(())
}

fn run_replication(
    params: &ModelParams,
    policy: &Policy,
    config: &SimConfig,
    rng: &mut ChaCha12Rng,
) -> RepTotals {
    let lower = params.lower_bound();
    let service_prob = params.mu2 / (params.alpha + params.mu2);
    let mut totals = RepTotals {
        time: 0.0,
        time_in_state: vec![0.0; params.capacity_n as usize + 8],
        up_counts: vec![0; params.capacity_n as usize + 8],
        down_counts: vec![0; params.capacity_n as usize + 8],
        admitted: 0,
        dispatched: 0,
        int_lp: 0.0,
        int_lt: 0.0,
        int_k: 0.0,
        time_ge0: 0.0,
    };
    let mut state: i64 = 0;
    for event in 0..config.horizon_events {
        let collecting = event >= config.warmup_events;
        let (up, down) = rates(params, policy, state, lower);
        let total = up + down;
        let u: f64 = rng.gen();
        let dt = -(1.0 - u).ln() / total;
        if collecting {
            let idx = (state - lower) as usize;
            if idx >= totals.time_in_state.len() {
                totals.time_in_state.resize(idx + 8, 0.0);
                totals.up_counts.resize(idx + 8, 0);
                totals.down_counts.resize(idx + 8, 0);
            }
            totals.time += dt;
            totals.time_in_state[idx] += dt;
            if state > 0 {
                totals.int_lp += state as f64 * dt;
            } else {
                totals.int_lt += (-state) as f64 * dt;
            }
            totals.int_k += params.matching_time().conditional_mean(state) * dt;
            if state >= 0 {
                totals.time_ge0 += dt;
            }
        }
        let direction_up = rng.gen::<f64>() * total < up;
        if direction_up {
            if collecting {
                totals.up_counts[(state - lower) as usize] += 1;
                totals.admitted += 1;
            }
            state += 1;
        } else {
            if collecting {
                totals.down_counts[(state - lower) as usize] += 1;
            }
            if state <= 0 {
                // a taxi joins the buffer; it will serve a later passenger
                if collecting {
                    totals.dispatched += 1;
                }
            } else {
                // service vs reneging split of the aggregate down-rate
                let served = rng.gen::<f64>() < service_prob;
                if served && collecting {
                    totals.dispatched += 1;
                }
            }
            state -= 1;
        }
    }
    totals
}

fn estimate(values: &[f64]) -> SimEstimate {
    let r = values.len();
    let mean = values.iter().sum::<f64>() / r as f64;
    let half_width_95 = if r > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r as f64 - 1.0);
        let t = StudentsT::new(0.0, 1.0, r as f64 - 1.0)
            .expect("valid dof")
            .inverse_cdf(0.975);
        t * (var / r as f64).sqrt()
    } else {
        0.0
    };
    SimEstimate {
        mean,
        half_width_95,
        replications: r as u32,
    }
}

/// Runs the event-driven simulation and estimates every analytic measure.
pub fn simulate(
    params: &ModelParams,
    policy: &Policy,
    config: &SimConfig,
) -> Result<SimResult, Error> {
    config.check()?;
    check_policy(params, policy)?;
    let r = config.replications as usize;
    let mut per_rep: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    for key in [
        "lambda_p_eff",
        "lambda_t_eff",
        "el_p",
        "el_t",
        "ew_p",
        "ew_t",
        "em",
        "welfare",
    ] {
        per_rep.insert(key, Vec::with_capacity(r));
    }
    let mut pooled_time = 0.0;
    let mut pooled_state_time: Vec<f64> = Vec::new();
    let mut pooled_up: Vec<u64> = Vec::new();
    let mut pooled_down: Vec<u64> = Vec::new();

    for rep in 0..config.replications {
        let mut rng = replication_stream(config.seed, rep);
        let t = run_replication(params, policy, config, &mut rng);
        let lam_p = t.admitted as f64 / t.time;
        let lam_t = t.dispatched as f64 / t.time;
        let el_p = t.int_lp / t.time;
        let el_t = t.int_lt / t.time;
        let em = t.int_k / t.time;
        let ew_p = if lam_p > 0.0 { el_p / lam_p } else { 0.0 };
        let ew_t = if lam_t > 0.0 { el_t / lam_t } else { 0.0 };
        let welfare = lam_p * (params.reward_r - params.price_p) + lam_t * params.price_p
            - params.cost_cp * el_p
            - params.cost_ct * el_t
            - em * (params.cost_cmp * lam_p + params.cost_cmt * lam_t);
        for (key, value) in [
            ("lambda_p_eff", lam_p),
            ("lambda_t_eff", lam_t),
            ("el_p", el_p),
            ("el_t", el_t),
            ("ew_p", ew_p),
            ("ew_t", ew_t),
            ("em", em),
            ("welfare", welfare),
        ] {
            per_rep.get_mut(key).unwrap().push(value);
        }
        pooled_time += t.time;
        if t.time_in_state.len() > pooled_state_time.len() {
            pooled_state_time.resize(t.time_in_state.len(), 0.0);
            pooled_up.resize(t.time_in_state.len(), 0);
            pooled_down.resize(t.time_in_state.len(), 0);
        }
        for (acc, v) in pooled_state_time.iter_mut().zip(&t.time_in_state) {
            *acc += v;
        }
        for (acc, v) in pooled_up.iter_mut().zip(&t.up_counts) {
            *acc += v;
        }
        for (acc, v) in pooled_down.iter_mut().zip(&t.down_counts) {
            *acc += v;
        }
    }

    let measures = per_rep
        .into_iter()
        .map(|(k, vals)| (k.to_string(), estimate(&vals)))
        .collect();
    for v in pooled_state_time.iter_mut() {
        *v /= pooled_time;
    }
    Ok(SimResult {
        measures,
        occupancy: Occupancy {
            lower_bound: params.lower_bound(),
            time_fraction: pooled_state_time,
        },
        jumps: JumpCounts {
            lower_bound: params.lower_bound(),
            up: pooled_up,
            down: pooled_down,
        },
    })
}

/// Little's-law estimate of the conditional wait of a joining passenger
/// while no taxis wait: `E(L_P) / (lambda q P(N >= 0))`.
pub fn estimate_conditional_wait(
    params: &ModelParams,
    q: f64,
    config: &SimConfig,
) -> Result<SimEstimate, Error> {
    config.check()?;
    let policy = Policy::JoinProbability(q);
    check_policy(params, &policy)?;
    if q <= 0.0 {
        return Err(Error::BadSimConfig("conditional wait needs q > 0"));
    }
    let mut vals = Vec::with_capacity(config.replications as usize);
    for rep in 0..config.replications {
        let mut rng = replication_stream(config.seed, rep);
        let t = run_replication(params, &policy, config, &mut rng);
        vals.push(t.int_lp / (params.lambda * q * t.time_ge0));
    }
    Ok(estimate(&vals))
}
