//! A-norm projection onto `{sigma^2(X) <= xi} ∩ {||X_i|| <= 1}`.
//!
//! Both pieces are projected in the A-geometry so that Dykstra's alternation
//! converges to the A-projection of the intersection. The variance cap has a
//! closed form; the row-ball product does not (A couples the rows) and is
//! solved by accelerated projected gradient.

use nalgebra::DMatrix;

use super::InteractionMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactReport {
    pub sweeps: usize,
    pub converged: bool,
}

/// Shrinks the row-centered part so `sigma^2(X) <= xi`; the row mean is kept.
///
/// `||X||_A^2 = n ||mean||^2 + (n+1) ||X - 1 mean||_F^2`, so the A-projection
/// acts on the centered component alone and is a radial shrink there.
pub fn project_sigma_cap(x: &DMatrix<f64>, xi: f64) -> DMatrix<f64> {
    let n = x.nrows();
    if n < 2 {
        return x.clone();
    }
    let mean = x.row_mean();
    let spread: f64 = x.row_iter().map(|r| (r - &mean).norm_squared()).sum();
    let cap = xi * (n - 1) as f64;
    if spread <= cap {
        return x.clone();
    }
    let f = (cap / spread).sqrt();
    let mut out = x.clone();
    for mut r in out.row_iter_mut() {
        let c = (&r - &mean) * f + &mean;
        r.copy_from(&c);
    }
    out
}

fn clip_rows(x: &mut DMatrix<f64>) {
    for mut r in x.row_iter_mut() {
        let n = r.norm();
        if n > 1.0 {
            r /= n;
        }
    }
}

/// A-projection onto the product of unit row balls.
pub fn project_ball_product(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    if z.row_iter().all(|r| r.norm() <= 1.0) {
        return z.clone();
    }
    let a = InteractionMatrix::new(n).expect("non-empty");
    let step = 1.0 / (n as f64 + 1.0);
    let mut y = z.clone();
    clip_rows(&mut y);
    let mut prev = y.clone();
    let mut mom = y.clone();
    let mut tk = 1.0f64;
    for _ in 0..20_000 {
        let grad = a.apply(&(&mom - z));
        let mut next = &mom - grad * step;
        clip_rows(&mut next);
        let t_next = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        mom = &next + (&next - &prev) * ((tk - 1.0) / t_next);
        let delta = (&next - &prev).amax();
        prev = next;
        tk = t_next;
        if delta < 1e-14 {
            break;
        }
    }
    prev
}

/// Dykstra's alternation in the A inner product.
pub fn project_exact(x0: &DMatrix<f64>, xi: f64, max_sweeps: usize, tol: f64) -> (DMatrix<f64>, ExactReport) {
    let n = x0.nrows();
    let a = InteractionMatrix::new(n).expect("non-empty");
    let mut x = x0.clone();
    let mut p = DMatrix::zeros(n, x0.ncols());
    let mut q = DMatrix::zeros(n, x0.ncols());
    for sweep in 1..=max_sweeps {
        let y = project_sigma_cap(&(&x + &p), xi);
        p = &x + &p - &y;
        let next = project_ball_product(&(&y + &q));
        q = &y + &q - &next;
        let moved = a.norm_sq(&(&next - &x)).sqrt();
        let gap = a.norm_sq(&(&next - &y)).sqrt();
        x = next;
        if moved <= tol && gap <= tol {
            return (x, ExactReport { sweeps: sweep, converged: true });
        }
    }
    (x, ExactReport { sweeps: max_sweeps, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::matrix_variance;
    use crate::rng;
    use rand::Rng;

    fn random(n: usize, d: usize, scale: f64, rng: &mut rng::StreamRng) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| scale * (rng.random::<f64>() * 2.0 - 1.0))
    }

    fn random_feasible(n: usize, d: usize, xi: f64, rng: &mut rng::StreamRng) -> DMatrix<f64> {
        let mut y = random(n, d, 1.0, rng);
        clip_rows(&mut y);
        project_sigma_cap(&y, xi)
    }

    #[test]
    fn sigma_cap_keeps_mean_and_hits_cap() {
        let mut rng = rng::seeded(1);
        let x = random(5, 3, 2.0, &mut rng);
        let y = project_sigma_cap(&x, 0.2);
        assert!((matrix_variance(&y) - 0.2).abs() < 1e-12);
        assert!((x.row_mean() - y.row_mean()).amax() < 1e-14);
    }

    #[test]
    fn projections_satisfy_variational_inequality() {
        let mut rng = rng::seeded(2);
        for case in 0..12 {
            let n = 2 + case % 4;
            let xi = (1 + case % n) as f64 / n as f64;
            let a = InteractionMatrix::new(n).unwrap();
            let x0 = random(n, 2, 3.0, &mut rng);

            let cap = project_sigma_cap(&x0, xi);
            let ball = project_ball_product(&x0);
            let (both, rep) = project_exact(&x0, xi, 2000, 1e-11);
            assert!(rep.converged, "case {case} did not converge");
            for _ in 0..200 {
                let y = random_feasible(n, 2, xi, &mut rng);
                let mut yb = random(n, 2, 1.0, &mut rng);
                clip_rows(&mut yb);
                assert!(a.inner(&(&x0 - &ball), &(&yb - &ball)) <= 1e-8);
                assert!(a.inner(&(&x0 - &both), &(&y - &both)) <= 1e-6, "case {case}");
                let y_cap = project_sigma_cap(&random(n, 2, 3.0, &mut rng), xi);
                assert!(a.inner(&(&x0 - &cap), &(&y_cap - &cap)) <= 1e-9);
            }
            assert!(both.row_iter().all(|r| r.norm() <= 1.0 + 1e-9));
            assert!(matrix_variance(&both) <= xi + 1e-6);
        }
    }

    #[test]
    fn feasible_points_are_fixed() {
        let mut rng = rng::seeded(3);
        let y = random_feasible(4, 3, 0.5, &mut rng);
        let (p, rep) = project_exact(&y, 0.5, 100, 1e-9);
        assert!(rep.converged);
        assert!((p - y).amax() < 1e-12);
    }
}
