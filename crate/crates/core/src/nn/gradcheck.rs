//! Central finite-difference validation of analytic gradients.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

use super::net::{Grads, PolicyNet};

/// Outcome of one gradient check sweep.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose gradient magnitude was clearly above the noise
    /// floor of the difference scheme.
    pub live: usize,
    pub worst_tensor: String,
    pub worst_index: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }
}

/// Picks `count` random (tensor, element) coordinates, spread over every
/// parameter tensor of the network.
pub fn sample_coords<S: Scalar>(net: &PolicyNet<S>, count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let sizes: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
    let mut coords = Vec::with_capacity(count);
    for _ in 0..count {
        let t = rng.gen_range(0..sizes.len());
        coords.push((t, rng.gen_range(0..sizes[t])));
    }
    coords
}

/// Compares `analytic` against central differences of `loss` at the selected
/// coordinates. The network is restored to its original parameters.
///
/// Differences below the noise floor of the scheme count as exact matches;
/// otherwise the error is relative to the larger gradient magnitude.
pub fn grad_check<S: Scalar>(
    net: &mut PolicyNet<S>,
    analytic: &Grads<S>,
    mut loss: impl FnMut(&PolicyNet<S>) -> S,
    coords: &[(usize, usize)],
    step: S,
) -> GradCheckReport {
    let names = net.tensor_names();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        live: 0,
        worst_tensor: "none".to_string(),
        worst_index: 0,
    };
    let two = S::from_f64_lossy(2.0);
    for &(t, j) in coords {
        let original = net.tensors()[t].data()[j];
        net.tensors_mut()[t].data_mut()[j] = original + step;
        let up = loss(net);
        net.tensors_mut()[t].data_mut()[j] = original - step;
        let down = loss(net);
        net.tensors_mut()[t].data_mut()[j] = original;
        let numeric = ((up - down) / (two * step)).to_f64_lossy();
        let exact = analytic.tensors()[t].data()[j].to_f64_lossy();
        let diff = (exact - numeric).abs();
        let rel = if diff <= 1e-9 {
            0.0
        } else {
            diff / exact.abs().max(numeric.abs()).max(1e-9)
        };
        report.checked += 1;
        if exact.abs().max(numeric.abs()) > 1e-6 {
            report.live += 1;
        }
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_tensor = names[t].clone();
            report.worst_index = j;
        }
    }
    report
}
