//! Model parameters, traffic intensities and the CTMC transition structure
//! shared by the closed-form analytics and the simulation oracle.
//!
//! The system state is the signed queue difference: `n > 0` passengers wait,
//! `n < 0` taxis wait (bounded below by the taxi capacity), `n = 0` empty.

use crate::error::Error;

/// All exogenous rates, costs, rewards and capacities of the system.
///
/// Immutable after construction; cheap to copy and safe to share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Potential passenger Poisson arrival rate.
    pub lambda: f64,
    /// Taxi arrival rate while no passengers wait (state <= 0).
    pub mu1: f64,
    /// Taxi arrival rate while passengers wait (state > 0).
    pub mu2: f64,
    /// Aggregate passenger impatience (reneging) rate for states > 0.
    pub alpha: f64,
    /// Taxi buffer capacity N; the state space is bounded below by -N.
    pub capacity_n: u32,
    /// Matching-time mass point when the state at matching is <= 0.
    pub k1: f64,
    /// Matching-time mass point when the state at matching is > 0.
    pub k2: f64,
    /// Passenger service reward R.
    pub reward_r: f64,
    /// Taxi fare P paid by the passenger.
    pub price_p: f64,
    /// Passenger waiting cost per unit time.
    pub cost_cp: f64,
    /// Taxi waiting cost per unit time.
    pub cost_ct: f64,
    /// Passenger matching-time cost per unit time.
    pub cost_cmp: f64,
    /// Taxi matching-time cost per unit time.
    pub cost_cmt: f64,
}

/// Which queue an arriving passenger can observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoLevel {
    /// Taxi queue visible, passenger queue hidden; strategy is a joining probability.
    PartiallyObservable,
    /// Both queues visible; strategy is a threshold on the passenger queue.
    Observable,
}

/// A concrete joining rule, fixing the chain's transition rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Join with probability `q` when no taxis wait (partially observable case).
    JoinProbability(f64),
    /// Join iff the observed passenger queue is shorter than `n_s` (observable case).
    Threshold(i64),
}

/// Geometric ratios of the stationary distribution segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficIntensities {
    /// lambda / mu1, the taxi-side ratio.
    pub rho0: f64,
    /// lambda / (alpha + mu2), the passenger-side ratio at q = 1.
    pub rho2: f64,
}

impl TrafficIntensities {
    /// Passenger-side ratio under joining probability `q`: `rho1(q) = q * rho2`.
    pub fn rho1(&self, q: f64) -> f64 {
        q * self.rho2
    }
}

/// Two-mass-point matching time conditional on the sign of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingTimeDistribution {
    pub k1: f64,
    pub k2: f64,
}

impl MatchingTimeDistribution {
    /// Conditional expected matching time given the state.
    pub fn conditional_mean(&self, state: i64) -> f64 {
        if state <= 0 {
            self.k1
        } else {
            self.k2
        }
    }
}

/// Non-fatal observations raised by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The taxi side is overloaded (`rho0 >= 1`); the closed forms remain valid
    /// because the taxi queue is bounded at -N.
    Rho0AtLeastOne { rho0: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Rho0AtLeastOne { rho0 } => write!(f, "rho0 >= 1 (rho0 = {rho0})"),
        }
    }
}

/// A parameter set that passed [`validate`], along with any warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub params: ModelParams,
    pub warnings: Vec<Warning>,
}

impl ModelParams {
    pub fn intensities(&self) -> TrafficIntensities {
        TrafficIntensities {
            rho0: self.lambda / self.mu1,
            rho2: self.lambda / (self.alpha + self.mu2),
        }
    }

    pub fn matching_time(&self) -> MatchingTimeDistribution {
        MatchingTimeDistribution {
            k1: self.k1,
            k2: self.k2,
        }
    }

    /// Capacity as a signed lower state bound, `-N`.
    pub fn lower_bound(&self) -> i64 {
        -(self.capacity_n as i64)
    }
}

/// Checks every structural invariant of the parameter set.
///
/// The partially observable regime additionally requires `rho2 < 1` so that
/// the stationary distribution, utility and welfare are finite for every
/// q in [0, 1]. `rho0 = 1` and `rho2 = 1` are rejected for both regimes
/// (closed-form singularities); `rho0 >= 1` otherwise only warns.
pub fn validate(params: ModelParams, level: InfoLevel) -> Result<Validated, Error> {
    let positives = [
        ("lambda", params.lambda),
        ("mu1", params.mu1),
        ("mu2", params.mu2),
        ("alpha", params.alpha),
        ("k1", params.k1),
        ("k2", params.k2),
        ("reward_r", params.reward_r),
        ("price_p", params.price_p),
        ("cost_cp", params.cost_cp),
        ("cost_ct", params.cost_ct),
        ("cost_cmp", params.cost_cmp),
        ("cost_cmt", params.cost_cmt),
    ];
    for (field, value) in positives {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonPositive { field });
        }
    }
    if params.capacity_n < 1 {
        return Err(Error::CapacityTooSmall);
    }
    if params.mu1 >= params.mu2 {
        return Err(Error::Mu1NotLessThanMu2);
    }
    for (field, k) in [("k1", params.k1), ("k2", params.k2)] {
        if k.fract() != 0.0 {
            return Err(Error::KNotInteger { field });
        }
    }
    if params.k1 >= params.k2 {
        return Err(Error::K1NotLessThanK2);
    }
    if params.reward_r <= params.price_p {
        return Err(Error::RewardNotAboveFare);
    }
    let rho = params.intensities();
    if rho.rho0 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho0" });
    }
    if rho.rho2 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho2" });
    }
    if level == InfoLevel::PartiallyObservable && rho.rho2 >= 1.0 {
        return Err(Error::Unstable { rho1: rho.rho2 });
    }
    let mut warnings = Vec::new();
    if rho.rho0 >= 1.0 {
        warnings.push(Warning::Rho0AtLeastOne { rho0: rho.rho0 });
    }
    Ok(Validated { params, warnings })
}

/// Out-transitions `(target state, rate)` of the chain at `state` under `policy`.
///
/// Zero-rate transitions are omitted. The lower boundary -N has no downward
/// transition (a blocked taxi); the observable threshold `n_s` has no upward
/// transition.
pub fn transition_rates(
    params: &ModelParams,
    state: i64,
    policy: &Policy,
) -> Result<Vec<(i64, f64)>, Error> {
    let lower = params.lower_bound();
    let upper = match policy {
        Policy::JoinProbability(q) => {
            if !(0.0..=1.0).contains(q) {
                return Err(Error::InvalidJoinProb { q: *q });
            }
            i64::MAX
        }
        Policy::Threshold(n_s) => {
            if *n_s < 1 {
                return Err(Error::InvalidThreshold { n_s: *n_s });
            }
            *n_s
        }
    };
    if state < lower || state > upper {
        return Err(Error::StateOutOfRange { state });
    }

    let up = if state >= upper {
        0.0
    } else {
        match policy {
            Policy::JoinProbability(q) if state >= 0 => params.lambda * q,
            _ => params.lambda,
        }
    };
    let down = if state == lower {
        0.0
    } else if state <= 0 {
        params.mu1
    } else {
        params.alpha + params.mu2
    };

    let mut out = Vec::with_capacity(2);
    if up > 0.0 {
        out.push((state + 1, up));
    }
    if down > 0.0 {
        out.push((state - 1, down));
    }
    Ok(out)
}

/// Builder for [`ModelParams`] used by the config-file and CLI front-ends.
///
/// Keys mirror the field names (`lambda`, `mu1`, ..., `capacity_n`).
#[derive(Debug, Clone, Default)]
pub struct ParamsBuilder {
    fields: [(Option<f64>, &'static str); 13],
}

const FIELD_NAMES: [&str; 13] = [
    "lambda",
    "mu1",
    "mu2",
    "alpha",
    "capacity_n",
    "k1",
    "k2",
    "reward_r",
    "price_p",
    "cost_cp",
    "cost_ct",
    "cost_cmp",
    "cost_cmt",
];

impl ParamsBuilder {
    pub fn new() -> Self {
        let mut fields = [(None, ""); 13];
        for (slot, name) in fields.iter_mut().zip(FIELD_NAMES) {
            slot.1 = name;
        }
        ParamsBuilder { fields }
    }

    /// Known parameter keys, in declaration order.
    pub fn field_names() -> &'static [&'static str] {
        &FIELD_NAMES
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), Error> {
        for slot in self.fields.iter_mut() {
            if slot.1 == key {
                slot.0 = Some(value);
                return Ok(());
            }
        }
        Err(Error::UnknownParameter {
            key: key.to_string(),
        })
    }

    /// Parses a flat `name = value` config file, one assignment per line.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn merge_config_str(&mut self, text: &str) -> Result<(), Error> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
                line: idx + 1,
                reason: "expected `name = value`".to_string(),
            })?;
            let value: f64 = value.trim().parse().map_err(|_| Error::ConfigParse {
                line: idx + 1,
                reason: format!("`{}` is not a number", value.trim()),
            })?;
            self.set(key.trim(), value)
                .map_err(|_| Error::ConfigParse {
                    line: idx + 1,
                    reason: format!("unknown parameter `{}`", key.trim()),
                })?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.fields
            .iter()
            .find(|slot| slot.1 == key)
            .and_then(|slot| slot.0)
    }

    pub fn build(&self) -> Result<ModelParams, Error> {
        let mut v = [0.0; 13];
        for (i, (value, name)) in self.fields.iter().enumerate() {
            v[i] = value.ok_or(Error::MissingParameter { field: name })?;
        }
        if v[4] < 1.0 || v[4].fract() != 0.0 || v[4] > u32::MAX as f64 {
            return Err(Error::CapacityTooSmall);
        }
        Ok(ModelParams {
            lambda: v[0],
            mu1: v[1],
            mu2: v[2],
            alpha: v[3],
            capacity_n: v[4] as u32,
            k1: v[5],
            k2: v[6],
            reward_r: v[7],
            price_p: v[8],
            cost_cp: v[9],
            cost_ct: v[10],
            cost_cmp: v[11],
            cost_cmt: v[12],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig5a_params(lambda: f64, mu2: f64) -> ModelParams {
        ModelParams {
            lambda,
            mu1: 4.0,
            mu2,
            alpha: 2.0,
            capacity_n: 20,
            k1: 3.0,
            k2: 5.0,
            reward_r: 16.0,
            price_p: 6.0,
            cost_cp: 4.0,
            cost_ct: 3.0,
            cost_cmp: 3.0,
            cost_cmt: 3.0,
        }
    }

    #[test]
    fn fig5a_set_is_valid_for_partial_regime() {
        let v = validate(fig5a_params(6.0, 5.5), InfoLevel::PartiallyObservable).unwrap();
        // rho2 = 6/7.5 = 0.8 < 1; rho0 = 1.5 only warns
        assert_eq!(v.warnings.len(), 1);
        assert!(matches!(v.warnings[0], Warning::Rho0AtLeastOne { .. }));
        let v = validate(fig5a_params(3.0, 5.5), InfoLevel::PartiallyObservable).unwrap();
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn equal_service_rates_rejected() {
        let mut p = fig5a_params(6.0, 5.5);
        p.mu2 = p.mu1;
        assert_eq!(
            validate(p, InfoLevel::Observable).unwrap_err(),
            Error::Mu1NotLessThanMu2
        );
    }

    #[test]
    fn rho0_equal_one_is_degenerate() {
        let p = fig5a_params(4.0, 5.5); // lambda == mu1
        assert_eq!(
            validate(p, InfoLevel::Observable).unwrap_err(),
            Error::DegenerateIntensity { which: "rho0" }
        );
    }

    #[test]
    fn unstable_partial_regime_rejected() {
        let p = fig5a_params(7.6, 5.5); // rho2 = 7.6/7.5 > 1
        assert!(matches!(
            validate(p, InfoLevel::PartiallyObservable).unwrap_err(),
            Error::Unstable { .. }
        ));
        // same set is fine for the observable regime (finite chain)
        assert!(validate(p, InfoLevel::Observable).is_ok());
    }

    #[test]
    fn non_integer_matching_time_rejected() {
        let mut p = fig5a_params(3.0, 5.5);
        p.k1 = 2.5;
        assert_eq!(
            validate(p, InfoLevel::Observable).unwrap_err(),
            Error::KNotInteger { field: "k1" }
        );
    }

    #[test]
    fn lower_boundary_has_only_an_upward_transition() {
        let p = fig5a_params(6.0, 5.5);
        let rates = transition_rates(&p, -20, &Policy::JoinProbability(0.5)).unwrap();
        assert_eq!(rates, vec![(-19, 6.0)]);
    }

    #[test]
    fn state_zero_rates_match_the_balance_structure() {
        let p = fig5a_params(6.0, 5.5);
        let rates = transition_rates(&p, 0, &Policy::JoinProbability(0.5)).unwrap();
        assert_eq!(rates, vec![(1, 3.0), (-1, 4.0)]); // lambda*q up, mu1 down
    }

    #[test]
    fn threshold_state_has_only_a_downward_transition() {
        let p = fig5a_params(6.0, 5.5);
        let rates = transition_rates(&p, 5, &Policy::Threshold(5)).unwrap();
        assert_eq!(rates, vec![(4, 7.5)]); // alpha + mu2
    }

    #[test]
    fn observable_far_threshold_agrees_with_partial_q1() {
        let p = fig5a_params(6.0, 5.5);
        for state in -20..=50 {
            let a = transition_rates(&p, state, &Policy::Threshold(1_000_000)).unwrap();
            let b = transition_rates(&p, state, &Policy::JoinProbability(1.0)).unwrap();
            assert_eq!(a, b, "state {state}");
        }
    }

    #[test]
    fn outflow_is_finite_and_nonnegative() {
        let p = fig5a_params(6.0, 5.5);
        for state in -20..=40 {
            for policy in [Policy::JoinProbability(0.3), Policy::Threshold(40)] {
                let total: f64 = transition_rates(&p, state, &policy)
                    .unwrap()
                    .iter()
                    .map(|(_, r)| *r)
                    .sum();
                assert!(total.is_finite() && total > 0.0);
            }
        }
    }

    #[test]
    fn out_of_range_state_rejected() {
        let p = fig5a_params(6.0, 5.5);
        assert!(matches!(
            transition_rates(&p, -21, &Policy::JoinProbability(1.0)),
            Err(Error::StateOutOfRange { .. })
        ));
        assert!(matches!(
            transition_rates(&p, 6, &Policy::Threshold(5)),
            Err(Error::StateOutOfRange { .. })
        ));
    }

    #[test]
    fn rho1_is_linear_in_q() {
        let rho = fig5a_params(6.0, 5.5).intensities();
        for q in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(rho.rho1(q), q * rho.rho2);
        }
        assert_eq!(rho.rho1(1.0), rho.rho2);
    }

    #[test]
    fn config_roundtrip_and_overrides() {
        let mut b = ParamsBuilder::new();
        b.merge_config_str(
            "# fig 5a\nlambda = 6\nmu1 = 4\nmu2 = 5.5\nalpha = 2\ncapacity_n = 20\n\
             k1 = 3\nk2 = 5\nreward_r = 16\nprice_p = 6\ncost_cp = 4\ncost_ct = 3\n\
             cost_cmp = 3\ncost_cmt = 3\n",
        )
        .unwrap();
        b.set("lambda", 3.0).unwrap();
        let p = b.build().unwrap();
        assert_eq!(p.lambda, 3.0);
        assert_eq!(p.capacity_n, 20);

        let mut incomplete = ParamsBuilder::new();
        incomplete.merge_config_str("lambda = 6").unwrap();
        assert!(matches!(
            incomplete.build(),
            Err(Error::MissingParameter { .. })
        ));

        let mut bad = ParamsBuilder::new();
        assert!(matches!(
            bad.merge_config_str("lambda: 6"),
            Err(Error::ConfigParse { line: 1, .. })
        ));
    }
}
