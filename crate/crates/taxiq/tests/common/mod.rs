//! Shared seeded draw generators for the integration suites.
#![allow(dead_code)] // each test target uses its own subset

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use taxiq::ModelParams;

/// A structurally valid parameter set with a stable passenger side
/// (rho2 <= 0.9) and rho0 kept away from 1.
pub fn stable_draw(rng: &mut ChaCha12Rng) -> ModelParams {
    loop {
        let lambda: f64 = rng.gen_range(0.3..6.0);
        let mu1 = rng.gen_range(0.3..7.0);
        let mu2 = mu1 + rng.gen_range(0.1..4.0);
        let alpha = rng.gen_range(0.2..4.0);
        if lambda / (alpha + mu2) > 0.9 || (lambda / mu1 - 1.0).abs() < 0.02 {
            continue;
        }
        let k1 = rng.gen_range(1..5) as f64;
        let price_p = rng.gen_range(1.0..8.0);
        return ModelParams {
            lambda,
            mu1,
            mu2,
            alpha,
            capacity_n: rng.gen_range(1..25),
            k1,
            k2: k1 + rng.gen_range(1..5) as f64,
            reward_r: price_p + rng.gen_range(0.5..15.0),
            price_p,
            cost_cp: rng.gen_range(0.5..6.0),
            cost_ct: rng.gen_range(0.5..6.0),
            cost_cmp: rng.gen_range(0.5..6.0),
            cost_cmt: rng.gen_range(0.5..6.0),
        };
    }
}

/// Like [`stable_draw`] but with the taxi side strictly under capacity
/// pressure (rho0 in [0.3, 0.97]) and a moderate buffer, keeping
/// rho0^N far enough from zero for strict closed-form bound checks.
pub fn rho0_below_one_draw(rng: &mut ChaCha12Rng) -> ModelParams {
    loop {
        let p = stable_draw(rng);
        let rho0 = p.lambda / p.mu1;
        if (0.3..0.97).contains(&rho0) && p.capacity_n <= 20 {
            return p;
        }
    }
}

/// An overloaded taxi side (rho0 > 1); rho2 may exceed 1.
pub fn rho0_above_one_draw(rng: &mut ChaCha12Rng) -> ModelParams {
    loop {
        let lambda: f64 = rng.gen_range(0.5..6.0);
        let mu1 = lambda * rng.gen_range(0.25..0.95);
        let mu2 = mu1 + rng.gen_range(0.1..4.0);
        let alpha = rng.gen_range(0.2..4.0);
        let rho2 = lambda / (alpha + mu2);
        if (rho2 - 1.0).abs() < 0.03 || rho2 > 1.2 {
            continue;
        }
        let k1 = rng.gen_range(1..5) as f64;
        let price_p = rng.gen_range(1.0..8.0);
        return ModelParams {
            lambda,
            mu1,
            mu2,
            alpha,
            capacity_n: rng.gen_range(1..20),
            k1,
            k2: k1 + rng.gen_range(1..5) as f64,
            reward_r: price_p + rng.gen_range(0.5..15.0),
            price_p,
            cost_cp: rng.gen_range(0.5..6.0),
            cost_ct: rng.gen_range(0.5..6.0),
            cost_cmp: rng.gen_range(0.5..6.0),
            cost_cmt: rng.gen_range(0.5..6.0),
        };
    }
}

/// The three caption parameter sets used by the concordance criteria.
pub fn fig5a_set(lambda: f64, mu2: f64) -> ModelParams {
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

pub fn fig6a_set(lambda: f64, mu2: f64) -> ModelParams {
    ModelParams {
        lambda,
        mu1: 4.0,
        mu2,
        alpha: 4.0,
        capacity_n: 30,
        k1: 3.0,
        k2: 5.0,
        reward_r: 20.0,
        price_p: 6.0,
        cost_cp: 4.0,
        cost_ct: 3.0,
        cost_cmp: 3.0,
        cost_cmt: 3.0,
    }
}

pub fn fig8a_set(lambda: f64) -> ModelParams {
    fig6a_set(lambda, 4.5)
}
