//! Closed-form analytics for the observable case: per-state utility, the
//! equilibrium threshold, the stationary distribution under a joining
//! threshold, performance measures, social welfare, and the g(x)/M1
//! threshold-inequality machinery used as a verification path.

use crate::error::Error;
use crate::model::ModelParams;
use crate::partial_obs::PerformanceMeasures;

/// Stationary distribution on the finite state space `-N ..= n_s`.
#[derive(Debug, Clone)]
pub struct ObservableStationary {
    pub lower_bound: i64,
    /// Probabilities for states `lower_bound ..= threshold`.
    pub probabilities: Vec<f64>,
    pub threshold: i64,
    pub pi_minus_n: f64,
}

impl ObservableStationary {
    pub fn prob(&self, state: i64) -> f64 {
        if state < self.lower_bound || state > self.threshold {
            0.0
        } else {
            self.probabilities[(state - self.lower_bound) as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Constants of the optimal-threshold inequality system, plus the g(x)
/// evaluator built from them.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdInequalityTerms {
    pub a5: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub m1: f64,
    cp: f64,
    rho0: f64,
    rho2: f64,
    w: f64,
}

impl ThresholdInequalityTerms {
    /// The threshold test function g(x) compared against `m1`.
    pub fn g(&self, x: f64) -> f64 {
        self.cp * self.rho2 * self.a5 * (1.0 - self.rho2) * x
            - self.cp
                * self.rho2
                * self.w
                * self.rho2
                * (1.0 - self.rho0)
                * (1.0 - self.rho2.powf(x))
            + self.e2 * self.rho2.powf(2.0 * x)
    }
}

/// Monotonicity classes of g(x) by (rho0, rho2) region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GMonotonicityClass {
    /// 0 < rho2 < rho0 < 1.
    Decreasing,
    /// rho0 > 1 with rho2 in (0, 1).
    Increasing,
    /// rho0 > rho2 > 1.
    DecreasingHigh,
}

/// Existence verdict for a g(n) = M1 root, by region and the g(1) vs M1 test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExistenceCase {
    NoSolution,
    UniqueAtOne,
    UniqueAboveOne,
}

/// Outcome of the integer root isolation of g(n) = M1 on `[1, cap]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityRoute {
    /// Smallest n with g(n) <= M1, when the sign structure isolates one.
    pub candidate: Option<i64>,
    /// Number of sign changes of g - M1 over the scanned range.
    pub sign_changes: usize,
}

/// Utility of a passenger who joins behind `n` waiting passengers.
pub fn utility_observable(params: &ModelParams, n: u32) -> f64 {
    params.reward_r
        - params.price_p
        - params.cost_cp * (n as f64 + 1.0) / params.mu2
        - params.cost_cmp * params.k2
}

/// Equilibrium joining threshold: the floor of `(R - P - C_MP k2) mu2 / C_P`,
/// or 0 when even an empty queue yields negative utility.
pub fn equilibrium_threshold(params: &ModelParams) -> u32 {
    let net = params.reward_r - params.price_p - params.cost_cmp * params.k2;
    if net <= 0.0 {
        return 0;
    }
    let x = net * params.mu2 / params.cost_cp;
    if x >= u32::MAX as f64 {
        u32::MAX
    } else {
        x.floor() as u32
    }
}

/// Anchored unnormalized sums for the finite chain with threshold `n_s`.
#[derive(Debug, Clone, Copy)]
struct ObsBlocks {
    rho0: f64,
    rho2: f64,
    w: f64,
    t0: f64,
    t1: f64,
    kt: f64,
    /// Sum over passenger states 1..=n_s of the mass (relative to anchor).
    ps: f64,
    /// Sum over passenger states of n times the mass.
    psig: f64,
    /// Sum over passenger states 1..=n_s-1 (strictly below the threshold).
    ps_below: f64,
    z: f64,
}

fn obs_blocks(params: &ModelParams, n_s: i64) -> Result<ObsBlocks, Error> {
    if n_s < 1 {
        return Err(Error::InvalidThreshold { n_s });
    }
    let rho = params.intensities();
    if rho.rho0 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho0" });
    }
    if rho.rho2 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho2" });
    }
    let n = params.capacity_n;
    let (w, t0, t1, kt) = if rho.rho0 <= 1.0 {
        let mut t0 = 0.0;
        let mut t1 = 0.0;
        let mut kt = 0.0;
        let mut u = 1.0;
        for j in 0..=n {
            t0 += u;
            if j < n {
                t1 += u;
            }
            kt += (n - j) as f64 * u;
            if j < n {
                u *= rho.rho0;
            }
        }
        (u, t0, t1, kt)
    } else {
        let r = 1.0 / rho.rho0;
        let mut t0 = 0.0;
        let mut t1 = 0.0;
        let mut kt = 0.0;
        let mut u = 1.0;
        for j in 0..=n {
            t0 += u;
            if j > 0 {
                t1 += u;
                kt += j as f64 * u;
            }
            u *= r;
        }
        (1.0, t0, t1, kt)
    };
    let mut ps = 0.0;
    let mut psig = 0.0;
    let mut ps_below = 0.0;
    let mut v = w * rho.rho2;
    for m in 1..=n_s {
        ps += v;
        psig += m as f64 * v;
        if m < n_s {
            ps_below += v;
        }
        v *= rho.rho2;
    }
    let z = t0 + ps;
    if !z.is_finite() || !psig.is_finite() {
        return Err(Error::Overflow {
            what: "observable segment sums",
        });
    }
    Ok(ObsBlocks {
        rho0: rho.rho0,
        rho2: rho.rho2,
        w,
        t0,
        t1,
        kt,
        ps,
        psig,
        ps_below,
        z,
    })
}

/// Stationary distribution under joining threshold `n_s`.
pub fn stationary_observable(
    params: &ModelParams,
    n_s: i64,
) -> Result<ObservableStationary, Error> {
    let b = obs_blocks(params, n_s)?;
    let n = params.capacity_n;
    let mut unnorm = Vec::with_capacity(n as usize + n_s as usize + 1);
    let mut u = if b.rho0 <= 1.0 {
        1.0
    } else {
        b.rho0.powi(-(n as i32))
    };
    for j in 0..=n {
        unnorm.push(u);
        if j < n {
            u *= b.rho0;
        }
    }
    let mut v = b.w * b.rho2;
    for _ in 1..=n_s {
        unnorm.push(v);
        v *= b.rho2;
    }
    let probabilities: Vec<f64> = unnorm.iter().map(|u| u / b.z).collect();
    let pi_minus_n = probabilities[0];
    Ok(ObservableStationary {
        lower_bound: params.lower_bound(),
        probabilities,
        threshold: n_s,
        pi_minus_n,
    })
}

/// Performance measures under joining threshold `n_s`.
pub fn performance_observable(
    params: &ModelParams,
    n_s: i64,
) -> Result<PerformanceMeasures, Error> {
    let b = obs_blocks(params, n_s)?;
    // passengers join in states -N .. n_s - 1; the joiners at state 0..n_s-1
    // carry weight w + ps_below
    let lambda_p_eff = params.lambda * (b.t1 + b.w + b.ps_below) / b.z;
    let lambda_t_eff = (params.lambda * b.t1 + params.mu2 * b.ps) / b.z;
    let el_p = b.psig / b.z;
    let el_t = b.kt / b.z;
    let em = (params.k1 * b.t0 + params.k2 * b.ps) / b.z;
    Ok(PerformanceMeasures {
        lambda_p_eff,
        lambda_t_eff,
        el_p,
        el_t,
        ew_p: el_p / lambda_p_eff,
        ew_t: el_t / lambda_t_eff,
        em,
        no_passenger_flow: false,
    })
}

/// Social welfare S(n_s): reward and fare flows minus queue and matching
/// costs, composed from the performance measures.
pub fn welfare_observable(params: &ModelParams, n_s: i64) -> Result<f64, Error> {
    let m = performance_observable(params, n_s)?;
    Ok(
        m.lambda_p_eff * (params.reward_r - params.price_p) + m.lambda_t_eff * params.price_p
            - params.cost_cp * m.el_p
            - params.cost_ct * m.el_t
            - m.em * (params.cost_cmp * m.lambda_p_eff + params.cost_cmt * m.lambda_t_eff),
    )
}

/// All constants of the threshold inequality system.
pub fn threshold_terms(params: &ModelParams) -> Result<ThresholdInequalityTerms, Error> {
    let rho = params.intensities();
    if rho.rho0 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho0" });
    }
    if rho.rho2 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho2" });
    }
    let (rho0, rho2) = (rho.rho0, rho.rho2);
    let nn = params.capacity_n as i32;
    let nf = params.capacity_n as f64;
    let w = rho0.powi(nn);
    let w1 = rho0.powi(nn + 1);
    let (lam, mu2, alpha) = (params.lambda, params.mu2, params.alpha);
    let (k1, k2) = (params.k1, params.k2);
    let (r, p) = (params.reward_r, params.price_p);
    let (cp, ct, cmp_, cmt) = (
        params.cost_cp,
        params.cost_ct,
        params.cost_cmp,
        params.cost_cmt,
    );

    let a5 = 1.0 - rho2 - w1 + w * rho2;
    let e1 = mu2 * w * (1.0 - rho0) * rho2 * p
        - cmp_
            * (k2 * lam * w * (1.0 - w) * rho2
                + k1 * lam * w * (1.0 - rho0)
                + k1 * lam * w1 * (1.0 - w))
        - cmt
            * (k2 * lam * w * (1.0 - w) * rho2
                + k1 * mu2 * w * rho2 * (1.0 - rho0)
                + k1 * mu2 * w1 * rho2 * (1.0 - w));
    let e2 = cmp_ * k2 * lam * w * w * rho2 * (1.0 - rho0)
        + cmt * k2 * mu2 * w * w * rho2 * rho2 * (1.0 - rho0);
    let e3 = lam * (1.0 - w) * (1.0 - rho2) * p
        - ct * (1.0 - rho2) * (nf - rho0 * (1.0 - w) / (1.0 - rho0))
        - (cmp_ + cmt)
            * (k1 * lam * (1.0 - w) * (1.0 - rho2)
                + k1 * lam * rho0 * (1.0 - w) * (1.0 - w) * (1.0 - rho2) / (1.0 - rho0));
    let d2 = alpha * w * (w1 - rho0 + nf - nf * rho0);
    let m1 = (r - p) * lam * a5 * (1.0 - rho2) * (1.0 - rho2) + e3 * rho2 * (rho2 - 1.0)
        - e1 * ((1.0 - rho2) * rho2 + a5 * (1.0 - rho2) / (w * (rho0 - 1.0)))
        + e2 * rho2
        + (2.0 * a5 * d2 - a5 * d2 * (1.0 + rho2)) / (w * (rho0 - 1.0));
    Ok(ThresholdInequalityTerms {
        a5,
        e1,
        e2,
        e3,
        m1,
        cp,
        rho0,
        rho2,
        w,
    })
}

/// Region classification of g(x)'s claimed monotonicity.
pub fn g_monotonicity_class(params: &ModelParams) -> Result<GMonotonicityClass, Error> {
    let rho = params.intensities();
    if rho.rho0 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho0" });
    }
    if rho.rho2 == 1.0 {
        return Err(Error::DegenerateIntensity { which: "rho2" });
    }
    Ok(if rho.rho0 < 1.0 {
        GMonotonicityClass::Decreasing
    } else if rho.rho2 < 1.0 {
        GMonotonicityClass::Increasing
    } else {
        GMonotonicityClass::DecreasingHigh
    })
}

/// Existence verdict for the g(n) = M1 equation, per region and the value
/// of g at 1.
pub fn existence_case(params: &ModelParams) -> Result<ExistenceCase, Error> {
    let class = g_monotonicity_class(params)?;
    let t = threshold_terms(params)?;
    let g1 = t.g(1.0);
    Ok(match class {
        GMonotonicityClass::Decreasing | GMonotonicityClass::DecreasingHigh => {
            if g1 > t.m1 {
                ExistenceCase::UniqueAboveOne
            } else if g1 == t.m1 {
                ExistenceCase::UniqueAtOne
            } else {
                ExistenceCase::NoSolution
            }
        }
        GMonotonicityClass::Increasing => {
            if g1 < t.m1 {
                ExistenceCase::UniqueAboveOne
            } else if g1 == t.m1 {
                ExistenceCase::UniqueAtOne
            } else {
                ExistenceCase::NoSolution
            }
        }
    })
}

/// Integer root isolation for g(n) = M1 over `[1, cap]`.
///
/// A root is realized only when g brackets M1 with exactly one sign change,
/// crossing downward (the shape that marks a welfare maximum); the candidate
/// is then the smallest n with g(n) <= M1. A g that starts at or below M1
/// never brackets the equation and yields no candidate.
pub fn inequality_route(params: &ModelParams, cap: i64) -> Result<InequalityRoute, Error> {
    let t = threshold_terms(params)?;
    let mut sign_changes = 0usize;
    let mut prev_above: Option<bool> = None;
    let mut first_le: Option<i64> = None;
    let mut starts_above = false;
    for n in 1..=cap.max(1) {
        let above = t.g(n as f64) > t.m1;
        match prev_above {
            None => starts_above = above,
            Some(p) if p != above => sign_changes += 1,
            _ => {}
        }
        prev_above = Some(above);
        if !above && first_le.is_none() {
            first_le = Some(n);
        }
    }
    let candidate = if starts_above && sign_changes == 1 {
        first_le
    } else {
        None
    };
    Ok(InequalityRoute {
        candidate,
        sign_changes,
    })
}
