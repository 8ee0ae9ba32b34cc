//! Generalized advantage estimation over a contiguous window, plus the
//! truncated discounted returns the critics regress.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Computes advantages and returns for one window of transitions.
///
/// `values[t]` estimates the state at step `t`; `bootstrap_value` estimates
/// the state after the final step and only matters when the window does not
/// end an episode. `dones[t]` marks transitions that end their episode, which
/// cuts both the temporal-difference chain and the return sum.
///
/// Advantages follow the lambda-weighted sum of TD residuals truncated at the
/// window end; returns are the discounted reward sums truncated at the window
/// end, with no value bootstrap.
pub fn compute_gae<S: Scalar>(
    rewards: &[S],
    values: &[S],
    bootstrap_value: S,
    dones: &[bool],
    gamma: S,
    lambda: S,
) -> Result<(Vec<S>, Vec<S>)> {
    let len = rewards.len();
    if len == 0 {
        return Err(Error::spec("empty window"));
    }
    if values.len() != len || dones.len() != len {
        return Err(Error::spec(format!(
            "window length mismatch: {len} rewards, {} values, {} dones",
            values.len(),
            dones.len()
        )));
    }
    let zero = S::zero();
    let mut advantages = vec![zero; len];
    let mut returns = vec![zero; len];
    let mut next_adv = zero;
    let mut next_ret = zero;
    for t in (0..len).rev() {
        let mask = if dones[t] { zero } else { S::one() };
        let next_value = if t + 1 < len { values[t + 1] } else { bootstrap_value };
        let delta = rewards[t] + gamma * mask * next_value - values[t];
        next_adv = delta + gamma * lambda * mask * next_adv;
        next_ret = rewards[t] + gamma * mask * next_ret;
        advantages[t] = next_adv;
        returns[t] = next_ret;
    }
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: the double loop written straight from the series
    /// definitions.
    fn brute_force(
        rewards: &[f64],
        values: &[f64],
        bootstrap: f64,
        dones: &[bool],
        gamma: f64,
        lambda: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let len = rewards.len();
        let value_after = |l: usize| if l + 1 < len { values[l + 1] } else { bootstrap };
        let mut advantages = vec![0.0; len];
        let mut returns = vec![0.0; len];
        for t in 0..len {
            let mut adv = 0.0;
            let mut coeff = 1.0;
            for l in t..len {
                let mask = if dones[l] { 0.0 } else { 1.0 };
                adv += coeff * (rewards[l] + gamma * mask * value_after(l) - values[l]);
                if dones[l] {
                    break;
                }
                coeff *= gamma * lambda;
            }
            let mut ret = 0.0;
            let mut disc = 1.0;
            for l in t..len {
                ret += disc * rewards[l];
                if dones[l] {
                    break;
                }
                disc *= gamma;
            }
            advantages[t] = adv;
            returns[t] = ret;
        }
        (advantages, returns)
    }

    #[test]
    fn lambda_zero_collapses_to_td_residuals() {
        let rewards = [1.0f64, -0.5, 0.25, 2.0];
        let values = [0.3f64, 0.1, -0.2, 0.4];
        let dones = [false; 4];
        let (adv, _) = compute_gae(&rewards, &values, 0.7, &dones, 0.99, 0.0).unwrap();
        for t in 0..4 {
            let next = if t + 1 < 4 { values[t + 1] } else { 0.7 };
            let delta = rewards[t] + 0.99 * next - values[t];
            assert!((adv[t] - delta).abs() < 1e-15);
        }
    }

    #[test]
    fn undiscounted_full_lambda_telescopes_to_reward_sums() {
        let rewards = [1.0, 2.0, 3.0, 4.0];
        let values = [0.0; 4];
        let dones = [false; 4];
        let (adv, ret) = compute_gae(&rewards, &values, 0.0, &dones, 1.0, 1.0).unwrap();
        for t in 0..4 {
            let suffix: f64 = rewards[t..].iter().sum();
            assert!((adv[t] - suffix).abs() < 1e-15);
            assert!((ret[t] - suffix).abs() < 1e-15);
        }
    }

    #[test]
    fn recursion_matches_brute_force_on_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..100 {
            let len = rng.gen_range(1..=32);
            let rewards: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let values: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dones: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.15)).collect();
            let bootstrap = rng.gen_range(-1.0..1.0);
            let gamma = rng.gen_range(0.0..1.0);
            let lambda = rng.gen_range(0.0..=1.0);
            let (adv, ret) = compute_gae(&rewards, &values, bootstrap, &dones, gamma, lambda).unwrap();
            let (adv_bf, ret_bf) = brute_force(&rewards, &values, bootstrap, &dones, gamma, lambda);
            for t in 0..len {
                assert!((adv[t] - adv_bf[t]).abs() < 1e-12, "advantage mismatch at {t}");
                assert!((ret[t] - ret_bf[t]).abs() < 1e-12, "return mismatch at {t}");
            }
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(compute_gae(&[1.0], &[0.0, 0.0], 0.0, &[false], 0.99, 0.95).is_err());
        assert!(compute_gae::<f64>(&[], &[], 0.0, &[], 0.99, 0.95).is_err());
    }
}
