//! Clipped-surrogate policy loss, value regression, and the entropy term,
//! with exact gradients through the whole network.
//!
//! The combined objective (minimized) is
//! `L = -L_PF + c1 * L_VF - c2 * H`, where `L_PF` sums the per-head clipped
//! surrogates, `L_VF` is the mean squared error between values and returns,
//! and `H` is the summed per-head Shannon entropy. The published form writes
//! the entropy term as negative entropy and subtracts it, which would
//! penalize exploration when minimized; `paper_entropy_sign` switches to that
//! literal behavior for comparison.

use crate::agent::ObsMatrix;
use crate::error::{Error, Result};
use crate::nn::{entropy, log_softmax, Grads, PolicyNet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct PpoSettings<S> {
    pub clip: S,
    pub value_coef: S,
    pub entropy_coef: S,
    pub paper_entropy_sign: bool,
}

/// One window sample viewed by the optimizer. `advantages` carries one entry
/// per critic: a single shared advantage, or one per phase when each phase
/// has its own critic.
#[derive(Debug, Clone, Copy)]
pub struct PpoSample<'a, S: Scalar> {
    pub input: &'a ObsMatrix<S>,
    pub actions: &'a [usize],
    pub old_log_probs: &'a [S],
    pub advantages: &'a [S],
    pub return_target: S,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossReport<S> {
    /// Summed per-head clipped surrogate (the quantity being maximized).
    pub policy: S,
    /// Mean squared value error, averaged over critic heads.
    pub value: S,
    /// Summed per-head Shannon entropy (positive).
    pub entropy: S,
    /// Combined minimized objective.
    pub total: S,
}

fn advantage_for_head<S: Scalar>(advantages: &[S], head: usize) -> S {
    if advantages.len() == 1 {
        advantages[0]
    } else {
        advantages[head]
    }
}

fn check_batch<S: Scalar>(net: &PolicyNet<S>, batch: &[PpoSample<S>]) -> Result<()> {
    let layout = net.layout();
    if batch.is_empty() {
        return Err(Error::spec("empty optimization batch"));
    }
    for sample in batch {
        if sample.actions.len() != layout.actor_heads || sample.old_log_probs.len() != layout.actor_heads {
            return Err(Error::spec("sample head count does not match network layout"));
        }
        if sample.advantages.len() != layout.critic_heads {
            return Err(Error::spec("sample advantage count does not match critic heads"));
        }
        if sample.actions.iter().any(|&a| a >= layout.actor_width) {
            return Err(Error::spec("action index outside head width"));
        }
    }
    Ok(())
}

/// Evaluates the loss terms without touching gradients.
pub fn ppo_losses<S: Scalar>(net: &PolicyNet<S>, batch: &[PpoSample<S>], settings: &PpoSettings<S>) -> Result<LossReport<S>> {
    evaluate(net, batch, settings, None)
}

/// Evaluates the loss terms and accumulates exact parameter gradients of the
/// combined objective.
pub fn ppo_loss_and_grads<S: Scalar>(
    net: &PolicyNet<S>,
    batch: &[PpoSample<S>],
    settings: &PpoSettings<S>,
) -> Result<(LossReport<S>, Grads<S>)> {
    let mut grads = Grads::zeros_like(net);
    let report = evaluate(net, batch, settings, Some(&mut grads))?;
    Ok((report, grads))
}

fn evaluate<S: Scalar>(
    net: &PolicyNet<S>,
    batch: &[PpoSample<S>],
    settings: &PpoSettings<S>,
    mut grads: Option<&mut Grads<S>>,
) -> Result<LossReport<S>> {
    check_batch(net, batch)?;
    let layout = net.layout();
    let zero = S::zero();
    let one = S::one();
    let inv_k = one / S::from_usize_lossy(batch.len());
    let inv_critics = one / S::from_usize_lossy(layout.critic_heads);
    let lo = one - settings.clip;
    let hi = one + settings.clip;
    // Minimized total carries the entropy bonus with a negative sign; the
    // literal published objective flips it.
    let entropy_sign = if settings.paper_entropy_sign { one } else { -one };

    let mut policy_total = zero;
    let mut value_total = zero;
    let mut entropy_total = zero;

    for sample in batch {
        let fwd = net.forward(sample.input);
        let mut d_logits: Vec<Vec<S>> = Vec::new();
        let mut d_values: Vec<S> = Vec::new();
        if grads.is_some() {
            d_logits = fwd.probs.iter().map(|p| vec![zero; p.len()]).collect();
            d_values = vec![zero; fwd.values.len()];
        }

        for head in 0..layout.actor_heads {
            let action = sample.actions[head];
            let log_probs = log_softmax(&fwd.logits[head]);
            let new_lp = log_probs[action];
            let ratio = (new_lp - sample.old_log_probs[head]).exp();
            let adv = advantage_for_head(sample.advantages, head);
            let unclipped = ratio * adv;
            let clipped = ratio.max(lo).min(hi) * adv;
            policy_total = policy_total + unclipped.min(clipped) * inv_k;

            let h = entropy(&fwd.probs[head]);
            entropy_total = entropy_total + h * inv_k;

            if let Some(dl) = d_logits.get_mut(head) {
                // d surrogate / d new_lp: active only when the unclipped term
                // is selected by the min.
                let d_surr_dlp = if unclipped <= clipped { ratio * adv } else { zero };
                let d_lp_coeff = -inv_k * d_surr_dlp;
                let probs = &fwd.probs[head];
                for k in 0..probs.len() {
                    let indicator = if k == action { one } else { zero };
                    dl[k] = dl[k] + d_lp_coeff * (indicator - probs[k]);
                    // entropy gradient: dH/dz_k = -p_k (ln p_k + H)
                    let dh = -probs[k] * (probs[k].ln() + h);
                    dl[k] = dl[k] + entropy_sign * settings.entropy_coef * inv_k * dh;
                }
            }
        }

        for (c, &value) in fwd.values.iter().enumerate() {
            let err = value - sample.return_target;
            value_total = value_total + err * err * inv_k * inv_critics;
            if grads.is_some() {
                d_values[c] = settings.value_coef * S::from_f64_lossy(2.0) * err * inv_k * inv_critics;
            }
        }

        if let Some(g) = grads.as_deref_mut() {
            net.backward(&fwd, &d_logits, &d_values, g);
        }
    }

    let total =
        -policy_total + settings.value_coef * value_total + entropy_sign * settings.entropy_coef * entropy_total;
    if !total.is_finite() {
        return Err(Error::training("non-finite loss; update aborted"));
    }
    Ok(LossReport { policy: policy_total, value: value_total, entropy: entropy_total, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::HeadLayout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn settings() -> PpoSettings<f64> {
        PpoSettings { clip: 0.2, value_coef: 0.9, entropy_coef: 0.01, paper_entropy_sign: false }
    }

    struct Owned {
        inputs: Vec<ObsMatrix<f64>>,
        actions: Vec<Vec<usize>>,
        old_lps: Vec<Vec<f64>>,
        advantages: Vec<Vec<f64>>,
        returns: Vec<f64>,
    }

    impl Owned {
        fn samples(&self) -> Vec<PpoSample<'_, f64>> {
            (0..self.inputs.len())
                .map(|i| PpoSample {
                    input: &self.inputs[i],
                    actions: &self.actions[i],
                    old_log_probs: &self.old_lps[i],
                    advantages: &self.advantages[i],
                    return_target: self.returns[i],
                })
                .collect()
        }
    }

    fn random_batch(net: &PolicyNet<f64>, n: usize, seed: u64, stale_log_probs: bool) -> Owned {
        let layout = net.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut owned = Owned {
            inputs: Vec::new(),
            actions: Vec::new(),
            old_lps: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        };
        for _ in 0..n {
            let mut input = [[0.0f64; 8]; 8];
            for row in &mut input {
                for v in row.iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
            let fwd = net.forward(&input);
            let actions: Vec<usize> = (0..layout.actor_heads).map(|_| rng.gen_range(0..layout.actor_width)).collect();
            let old_lps: Vec<f64> = actions
                .iter()
                .enumerate()
                .map(|(h, &a)| {
                    let lp = crate::nn::log_softmax(&fwd.logits[h])[a];
                    if stale_log_probs {
                        lp + rng.gen_range(-0.3..0.3)
                    } else {
                        lp
                    }
                })
                .collect();
            owned.inputs.push(input);
            owned.actions.push(actions);
            owned.old_lps.push(old_lps);
            owned.advantages.push((0..layout.critic_heads).map(|_| rng.gen_range(-1.0..1.0)).collect());
            owned.returns.push(rng.gen_range(-1.0..1.0));
        }
        owned
    }

    #[test]
    fn unchanged_policy_has_unit_ratios_and_mean_advantage_surrogate() {
        let net = PolicyNet::new(HeadLayout::new(4, 5, 1).unwrap(), 8);
        let owned = random_batch(&net, 6, 42, false);
        let samples = owned.samples();
        let report = ppo_losses(&net, &samples, &settings()).unwrap();
        // with rho == 1 the surrogate is the mean advantage, summed per head
        let mean_adv: f64 = owned.advantages.iter().map(|a| a[0]).sum::<f64>() / 6.0;
        assert!((report.policy - 4.0 * mean_adv).abs() < 1e-12);
    }

    #[test]
    fn clipped_branch_is_selected_for_large_ratios() {
        // Single sample, known advantage: shift old log-prob so rho = 1 + 2*eps.
        let net = PolicyNet::new(HeadLayout::new(1, 5, 1).unwrap(), 9);
        let mut owned = random_batch(&net, 1, 7, false);
        let eps = 0.2f64;
        let rho = 1.0 + 2.0 * eps;
        owned.old_lps[0][0] -= rho.ln();
        owned.advantages[0][0] = 1.0;
        let samples = owned.samples();
        let report = ppo_losses(&net, &samples, &settings()).unwrap();
        assert!((report.policy - (1.0 + eps)).abs() < 1e-12, "surrogate uses the clipped value");
    }

    #[test]
    fn per_sample_surrogate_respects_the_min_bound() {
        let net = PolicyNet::new(HeadLayout::new(2, 5, 1).unwrap(), 10);
        let owned = random_batch(&net, 12, 99, true);
        for sample in owned.samples() {
            let fwd = net.forward(sample.input);
            for head in 0..2 {
                let lp = crate::nn::log_softmax(&fwd.logits[head])[sample.actions[head]];
                let rho: f64 = (lp - sample.old_log_probs[head]).exp();
                let adv = sample.advantages[0];
                let surr = (rho * adv).min(rho.clamp(0.8, 1.2) * adv);
                assert!(surr <= (rho * adv).max(rho.clamp(0.8, 1.2) * adv) + 1e-15);
            }
        }
    }

    #[test]
    fn entropy_reporting_matches_closed_form_for_uniform_heads() {
        // Fresh net with zeroed actor output layers gives exactly uniform heads.
        let mut net = PolicyNet::new(HeadLayout::new(3, 5, 1).unwrap(), 11);
        let names = net.tensor_names();
        for (name, tensor) in names.iter().zip(net.tensors_mut()) {
            if name.starts_with("actor") && name.contains("l3") {
                tensor.fill(0.0);
            }
        }
        let owned = random_batch(&net, 4, 1, false);
        let samples = owned.samples();
        let report = ppo_losses(&net, &samples, &settings()).unwrap();
        assert!((report.entropy - 3.0 * 5.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn paper_entropy_sign_flips_the_bonus() {
        let net = PolicyNet::new(HeadLayout::new(2, 5, 1).unwrap(), 12);
        let owned = random_batch(&net, 4, 2, false);
        let samples = owned.samples();
        let standard = ppo_losses(&net, &samples, &settings()).unwrap();
        let mut literal = settings();
        literal.paper_entropy_sign = true;
        let paper = ppo_losses(&net, &samples, &literal).unwrap();
        let diff = paper.total - standard.total;
        assert!((diff - 2.0 * 0.01 * standard.entropy).abs() < 1e-12);
    }

    #[test]
    fn combined_loss_gradients_pass_finite_difference_checks() {
        for (layout, seed) in [
            (HeadLayout::new(4, 5, 1).unwrap(), 21u64), // shared critic
            (HeadLayout::new(3, 5, 3).unwrap(), 22),    // one critic per phase
            (HeadLayout::new(1, 25, 1).unwrap(), 23),   // joint head
        ] {
            let mut net = PolicyNet::new(layout, seed);
            let owned = random_batch(&net, 4, seed + 100, true);
            let samples = owned.samples();
            let s = settings();
            let (_, grads) = ppo_loss_and_grads(&net, &samples, &s).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coords = crate::nn::sample_coords(&net, 250, &mut rng);
            let report = crate::nn::grad_check(
                &mut net,
                &grads,
                |n| ppo_losses(n, &samples, &s).unwrap().total,
                &coords,
                1e-5,
            );
            assert!(
                report.passes(1e-4),
                "layout {layout:?}: max rel error {} at {}[{}]",
                report.max_rel_error,
                report.worst_tensor,
                report.worst_index
            );
        }
    }

    #[test]
    fn malformed_batches_are_rejected() {
        let net = PolicyNet::new(HeadLayout::new(2, 5, 1).unwrap(), 13);
        let owned = random_batch(&net, 2, 3, false);
        let mut samples = owned.samples();
        samples[0].actions = &owned.actions[0][..1];
        assert!(ppo_losses(&net, &samples, &settings()).is_err());
    }
}
