//! Test-only oracles, independent of the backward pass they check.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::rng;
use crate::tensor::Tensor;

/// Central finite differences of `f` with respect to `params`, step 1e-5.
/// `f` must be a pure forward evaluation returning the scalar loss.
pub fn finite_diff_grads(
    params: &[Tensor],
    f: &mut dyn FnMut(&[Tensor]) -> f64,
) -> Vec<Vec<f64>> {
    const STEP: f64 = 1e-5;
    let mut grads = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let mut g = Vec::with_capacity(params[pi].len());
        for j in 0..params[pi].len() {
            let mut plus = params.to_vec();
            plus[pi].data_mut()[j] += STEP;
            let mut minus = params.to_vec();
            minus[pi].data_mut()[j] -= STEP;
            g.push((f(&plus) - f(&minus)) / (2.0 * STEP));
        }
        grads.push(g);
    }
    grads
}

/// Max relative error between analytic and finite-difference gradients,
/// with an absolute floor so near-zero entries do not blow up the ratio.
pub fn max_rel_error(analytic: &[Vec<f64>], numeric: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.len(), n.len());
        for (&x, &y) in a.iter().zip(n) {
            let denom = x.abs().max(y.abs()).max(1e-4);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

/// Random tensor with entries uniform in [-2, 2].
pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng::uniform(rng, -2.0, 2.0)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    rng::substream(seed, "test")
}
