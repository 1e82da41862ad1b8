use rand::distr::Open01;
use rand::Rng;

use crate::rng::StreamRng;

/// One Laplace(0, b) draw by inverting the CDF.
pub fn laplace_scalar(b: f64, rng: &mut StreamRng) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.sample(Open01);
    let v = u - 0.5;
    -b * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}

/// `dim` i.i.d. Laplace(0, b) coordinates; zeros when `b == 0`.
pub fn laplace_sample(dim: usize, b: f64, rng: &mut StreamRng) -> Vec<f64> {
    (0..dim).map(|_| laplace_scalar(b, rng)).collect()
}
