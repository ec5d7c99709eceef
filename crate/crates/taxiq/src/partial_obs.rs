//! Closed-form analytics for the partially observable case: stationary
//! distribution, performance measures, expected matching time, passenger
//! utility, and the three-part social welfare function with its analytic
//! derivative.
//!
//! All quantities are built from unnormalized geometric segment masses,
//! anchored at the largest segment term (state -N when rho0 <= 1, state 0
//! otherwise) so that nothing overflows or cancels for rho0 on either side
//! of 1. Every exported value is a ratio, so the anchor drops out.

use crate::error::Error;
use crate::model::ModelParams;

/// Stationary distribution with a finite materialized head and a geometric
/// passenger-side tail.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    /// Smallest state, `-N`.
    pub lower_bound: i64,
    /// Probabilities for states `lower_bound ..= upper_bound()`.
    pub probabilities: Vec<f64>,
    /// Geometric ratio of the untruncated passenger-side tail (rho1).
    pub tail_ratio: f64,
    /// The anchor mass at state -N.
    pub pi_minus_n: f64,
}

impl StationaryDistribution {
    pub fn upper_bound(&self) -> i64 {
        self.lower_bound + self.probabilities.len() as i64 - 1
    }

    /// Probability of `state`, using the geometric tail beyond the
    /// materialized head.
    pub fn prob(&self, state: i64) -> f64 {
        if state < self.lower_bound {
            return 0.0;
        }
        let idx = (state - self.lower_bound) as usize;
        if idx < self.probabilities.len() {
            self.probabilities[idx]
        } else {
            let last = *self.probabilities.last().unwrap();
            last * self.tail_ratio.powi((state - self.upper_bound()) as i32)
        }
    }

    /// Total mass: materialized head plus the closed-form remaining tail.
    pub fn total_mass(&self) -> f64 {
        let head: f64 = self.probabilities.iter().sum();
        let tail = if self.tail_ratio > 0.0 && self.upper_bound() > 0 {
            self.probabilities.last().unwrap() * self.tail_ratio / (1.0 - self.tail_ratio)
        } else {
            0.0
        };
        head + tail
    }
}

/// Effective rates, queue lengths, waits and expected matching time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceMeasures {
    pub lambda_p_eff: f64,
    pub lambda_t_eff: f64,
    pub el_p: f64,
    pub el_t: f64,
    pub ew_p: f64,
    pub ew_t: f64,
    pub em: f64,
    /// Set when q = 0: the passenger queue is empty with probability one and
    /// the conditional wait is reported as 0 rather than NaN.
    pub no_passenger_flow: bool,
}

/// The three-part social welfare split and its total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareDecomposition {
    /// Reward and queue-cost flows counted at the passenger admission rate.
    pub s1: f64,
    /// Fare and taxi-wait flow lost to reneging.
    pub s2: f64,
    /// Matching-time welfare term.
    pub sm: f64,
    /// `s1 + s2 + sm`.
    pub total: f64,
    /// The constant C-bar = C_T (rho0^{N+1} - rho0 + N - N rho0)/(1-rho0)^2.
    pub cbar: f64,
}

/// Analytic derivative components of the welfare split, plus the
/// intermediate constants of the closed-form derivative expressions so each
/// factor is individually inspectable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeTerms {
    pub s1_prime: f64,
    pub s2_prime: f64,
    pub sm_prime: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub b1: f64,
    pub quad_a: f64,
    pub quad_b: f64,
    pub discriminant: f64,
    pub qbar: f64,
}

impl DerivativeTerms {
    /// dS/dq, the sum of the three components.
    pub fn sum(&self) -> f64 {
        self.s1_prime + self.s2_prime + self.sm_prime
    }
}

/// Unnormalized segment sums, anchored to avoid overflow and cancellation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Blocks {
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Mass at state 0 relative to the anchor.
    pub w: f64,
    /// Sum over states <= 0.
    pub t0: f64,
    /// Sum over states < 0.
    pub t1: f64,
    /// Sum over states <= 0 of (-n) times the mass.
    pub kt: f64,
    /// Total including the geometric passenger tail.
    pub z: f64,
}

impl Blocks {
    pub fn new(params: &ModelParams, q: f64) -> Result<Blocks, Error> {
        if !(0.0..=1.0).contains(&q) || q.is_nan() {
            return Err(Error::InvalidJoinProb { q });
        }
        let rho = params.intensities();
        let rho1 = rho.rho1(q);
        if rho1 >= 1.0 {
            return Err(Error::Unstable { rho1 });
        }
        let n = params.capacity_n;
        let (w, t0, t1, kt) = if rho.rho0 <= 1.0 {
            // anchor at -N: u_j = rho0^j for j = n + N in 0..=N
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
            // anchor at 0: u_{-j} = (1/rho0)^j
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
        let z = t0 + w * rho1 / (1.0 - rho1);
        Ok(Blocks {
            rho0: rho.rho0,
            rho1,
            rho2: rho.rho2,
            w,
            t0,
            t1,
            kt,
            z,
        })
    }

    pub fn p_gt0(&self) -> f64 {
        self.w * self.rho1 / (1.0 - self.rho1) / self.z
    }
}

/// Stationary distribution of the chain under joining probability `q`.
///
/// Normalizes the exact finite taxi-side sum plus the closed-form geometric
/// tail; the closed-form anchor mass is kept as a cross-check away from
/// rho0 = 1.
pub fn stationary(params: &ModelParams, q: f64) -> Result<StationaryDistribution, Error> {
    let b = Blocks::new(params, q)?;
    let n = params.capacity_n;
    let lower = params.lower_bound();

    // head values relative to the same anchor as the blocks
    let mut unnorm = Vec::with_capacity(n as usize + 16);
    let start = if b.rho0 <= 1.0 {
        1.0
    } else {
        b.rho0.powi(-(n as i32))
    };
    let mut u = start;
    for j in 0..=n {
        unnorm.push(u);
        if j < n {
            u *= b.rho0;
        }
    }
    // passenger side: w * rho1^m for m >= 1, truncated where the remaining
    // tail mass is negligible
    if b.rho1 > 0.0 {
        let mut v = b.w * b.rho1;
        let tail_cut = 1e-16 * b.z * (1.0 - b.rho1);
        let mut m = 0u32;
        while v > tail_cut && m < 500_000 {
            unnorm.push(v);
            v *= b.rho1;
            m += 1;
        }
    }
    let probabilities: Vec<f64> = unnorm.iter().map(|u| u / b.z).collect();
    let pi_minus_n = probabilities[0];

    // closed-form anchor mass, valid away from the rho0 = 1 singularity
    if (b.rho0 - 1.0).abs() > 0.05 {
        let closed = (1.0 - b.rho0) * (1.0 - b.rho1)
            / (1.0 - b.rho1 - b.rho0.powi(n as i32 + 1) + b.rho0.powi(n as i32) * b.rho1);
        debug_assert!(
            (closed - pi_minus_n).abs() <= 1e-9 * closed.abs().max(1e-300),
            "closed-form anchor mass diverged: {closed} vs {pi_minus_n}"
        );
    }

    Ok(StationaryDistribution {
        lower_bound: lower,
        probabilities,
        tail_ratio: b.rho1,
        pi_minus_n,
    })
}

/// All seven performance measures under joining probability `q`.
pub fn performance(params: &ModelParams, q: f64) -> Result<PerformanceMeasures, Error> {
    let b = Blocks::new(params, q)?;
    let om = 1.0 - b.rho1;
    let lambda_p_eff = params.lambda * (b.t1 + q * b.w / om) / b.z;
    let lambda_t_eff = (params.lambda * b.t1 + params.mu2 * b.w * b.rho1 / om) / b.z;
    let el_p = b.w * b.rho1 / (om * om) / b.z;
    let el_t = b.kt / b.z;
    let em = (params.k1 * b.t0 + params.k2 * b.w * b.rho1 / om) / b.z;
    Ok(PerformanceMeasures {
        lambda_p_eff,
        lambda_t_eff,
        el_p,
        el_t,
        ew_p: el_p / lambda_p_eff,
        ew_t: el_t / lambda_t_eff,
        em,
        no_passenger_flow: q == 0.0,
    })
}

/// Expected waiting time of a joining passenger while no taxis wait,
/// `1 / ((alpha + mu2) - lambda q)`.
pub fn expected_wait_conditional(params: &ModelParams, q: f64) -> Result<f64, Error> {
    let denom = params.alpha + params.mu2 - params.lambda * q;
    if denom <= 0.0 {
        return Err(Error::Unstable {
            rho1: params.lambda * q / (params.alpha + params.mu2),
        });
    }
    Ok(1.0 / denom)
}

/// Expected net benefit of an arriving passenger who joins under `q`.
pub fn utility(params: &ModelParams, q: f64) -> Result<f64, Error> {
    let b = Blocks::new(params, q)?;
    let wait = expected_wait_conditional(params, q)?;
    let om = 1.0 - b.rho1;
    let em = (params.k1 * b.t0 + params.k2 * b.w * b.rho1 / om) / b.z;
    Ok(params.reward_r - params.price_p - params.cost_cp * wait - params.cost_cmp * em)
}

/// The social welfare split under joining probability `q`.
pub fn welfare(params: &ModelParams, q: f64) -> Result<WelfareDecomposition, Error> {
    let m = performance(params, q)?;
    let b = Blocks::new(params, q)?;
    let s1 = m.lambda_p_eff * (params.reward_r - params.price_p - params.cost_cp * m.ew_p)
        + m.lambda_p_eff * (params.price_p - params.cost_ct * m.ew_t);
    let s2 = -params.alpha * b.p_gt0() * (params.price_p - params.cost_ct * m.ew_t);
    let sm = m.em * (-m.lambda_p_eff * params.cost_cmp - m.lambda_t_eff * params.cost_cmt);
    Ok(WelfareDecomposition {
        s1,
        s2,
        sm,
        total: s1 + s2 + sm,
        cbar: cbar(params),
    })
}

fn cbar(params: &ModelParams) -> f64 {
    let rho0 = params.lambda / params.mu1;
    let n = params.capacity_n as f64;
    params.cost_ct * (rho0.powi(params.capacity_n as i32 + 1) - rho0 + n - n * rho0)
        / ((1.0 - rho0) * (1.0 - rho0))
}

/// Analytic derivative of the welfare split at `q`, with the closed-form
/// intermediate constants of the derivative expressions exposed.
///
/// The three components are exact derivatives of the corresponding
/// [`welfare`] fields, so their sum matches a central finite difference of
/// the total.
pub fn welfare_derivative(params: &ModelParams, q: f64) -> Result<DerivativeTerms, Error> {
    if !q.is_finite() || q <= 0.0 || q >= 1.0 {
        return Err(Error::InvalidJoinProb { q });
    }
    let b = Blocks::new(params, q)?;
    let (lam, mu2, alpha) = (params.lambda, params.mu2, params.alpha);
    let (r, p) = (params.reward_r, params.price_p);
    let (cp, ct, cmp_, cmt) = (
        params.cost_cp,
        params.cost_ct,
        params.cost_cmp,
        params.cost_cmt,
    );
    let om = 1.0 - b.rho1;
    let om2 = om * om;

    // unnormalized blocks and their q-derivatives (d rho1 / dq = rho2)
    let z = b.z;
    let zp = b.rho2 * b.w / om2;
    let np = lam * (b.t1 + q * b.w / om);
    let npp = lam * b.w / om2;
    let nt = lam * b.t1 + mu2 * b.w * b.rho1 / om;
    let ntp = mu2 * b.w * b.rho2 / om2;
    let nl = b.w * b.rho1 / om2;
    let nlp = b.w * b.rho2 * (1.0 + b.rho1) / (om2 * om);
    let ng = b.w * b.rho1 / om;
    let ngp = b.w * b.rho2 / om2;
    let nm = params.k1 * b.t0 + params.k2 * b.w * b.rho1 / om;
    let nmp = params.k2 * b.w * b.rho2 / om2;

    let z2 = z * z;
    let lam_p = np / z;
    let lam_t = nt / z;
    let lam_p_p = (npp * z - np * zp) / z2;
    let lam_t_p = (ntp * z - nt * zp) / z2;
    let el_p_p = (nlp * z - nl * zp) / z2;
    let em = nm / z;
    let em_p = (nmp * z - nm * zp) / z2;
    let p_gt0 = ng / z;
    let p_gt0_p = (ngp * z - ng * zp) / z2;
    let ew_t = b.kt / nt;
    let ew_t_p = -b.kt * ntp / (nt * nt);

    let s1_prime = lam_p_p * r - cp * el_p_p - ct * (lam_p_p * ew_t + lam_p * ew_t_p);
    let s2_prime = -alpha * (p_gt0_p * (p - ct * ew_t) - p_gt0 * ct * ew_t_p);
    let sm_prime = -(em_p * (cmp_ * lam_p + cmt * lam_t) + em * (cmp_ * lam_p_p + cmt * lam_t_p));

    // intermediate constants of the closed-form derivative expressions
    let rho0 = b.rho0;
    let nn = params.capacity_n as i32;
    let w = rho0.powi(nn);
    let w1 = rho0.powi(nn + 1);
    let den = 1.0 - b.rho1 - w1 + w * b.rho1;
    let nf = params.capacity_n as f64;
    let d1 = alpha * w * (1.0 - rho0) * b.rho2 * (den + (1.0 - rho0) * (1.0 - w));
    let d2 = alpha * w * (w1 - rho0 + nf - nf * rho0);
    let d3 = lam * (1.0 - w) * b.rho2 * om2 * (1.0 - w1)
        + mu2 * w * w * (1.0 - rho0) * (1.0 - rho0) * b.rho2 * b.rho1 * b.rho1;
    let d4 = lam * (1.0 - w) * om + mu2 * w * (1.0 - rho0) * b.rho1;
    let a1 = 2.0
        * params.k1
        * params.mu1
        * lam
        * b.rho2
        * (1.0 - rho0)
        * (1.0 - w)
        * (1.0 - w1)
        * (w1 + w)
        * om;
    let a2 = params.k1 * params.mu1 * w * b.rho2 * (1.0 - rho0) * (1.0 - rho0) * (1.0 - w1);
    let a3 = params.k2 * params.mu1 * b.rho2 * (1.0 - rho0) * w * (1.0 - w);
    let a4 = 2.0
        * params.k2
        * b.rho1
        * b.rho2
        * (1.0 - rho0)
        * (1.0 - rho0)
        * rho0.powi(2 * nn - 1)
        * (1.0 - w1);
    let b1 = b.rho1 * (w1 + w) + (1.0 - w1) * om;

    let cbar = cbar(params);
    let g0 = r * (mu2 * (1.0 - w1) - lam * (1.0 - w)) / (1.0 - rho0) + cbar;
    let quad_a = g0 + cp * (1.0 - w) / (1.0 - rho0);
    let quad_b = -2.0 * g0;
    let discriminant =
        4.0 * cp * w * g0 + 4.0 * cp * cp * (1.0 - w) * (1.0 - w1) / ((1.0 - rho0) * (1.0 - rho0));
    let qbar = (-quad_b + discriminant.sqrt()) / (2.0 * quad_a);

    Ok(DerivativeTerms {
        s1_prime,
        s2_prime,
        sm_prime,
        d1,
        d2,
        d3,
        d4,
        a1,
        a2,
        a3,
        a4,
        b1,
        quad_a,
        quad_b,
        discriminant,
        qbar,
    })
}
