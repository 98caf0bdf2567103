//! Gauss–Hermite quadrature rules and deterministic reductions.
//!
//! The rule integrates `int f(x) exp(-x^2) dx = sum_i w_i f(x_i)` exactly
//! for polynomials of degree `2n - 1`, which covers every expectation value
//! in this crate: the integrands are low-degree polynomials times the
//! Gaussian envelope.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("quadrature order must be at least 1, got {0}")]
    ZeroOrder(usize),
    #[error("Newton iteration for Hermite node {index} did not converge")]
    NodeNonConvergence { index: usize },
}

/// Nodes and weights of the n-point Gauss–Hermite rule (weight `exp(-x^2)`).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes the rule by Newton iteration on the orthonormal Hermite
    /// recurrence, largest root first, with asymptotic initial guesses.
    pub fn new(order: usize) -> Result<Self, QuadratureError> {
        if order == 0 {
            return Err(QuadratureError::ZeroOrder(order));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);

        let mut z = 0.0_f64;
        for i in 0..m {
            // initial guesses for roots in descending order
            z = match i {
                0 => {
                    let an = n as f64;
                    (2.0 * an + 1.0).sqrt() - 1.85575 * (2.0 * an + 1.0).powf(-1.0 / 6.0)
                }
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                // orthonormal recurrence: p_0 = pi^{-1/4},
                // p_j = z sqrt(2/j) p_{j-1} - sqrt((j-1)/j) p_{j-2}
                let mut p1 = std::f64::consts::PI.powf(-0.25);
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(QuadratureError::NodeNonConvergence { index: i });
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        // ascending node order
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Sums in a fixed pairwise order, independent of chunking or thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Complex counterpart of [`pairwise_sum`].
pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for order in [1, 2, 8, 31, 32, 48, 64, 96] {
            let q = GaussHermite::new(order).unwrap();
            let s = pairwise_sum(q.weights());
            assert!((s - SQRT_PI).abs() < 1e-13, "order {order}: sum = {s}");
        }
    }

    #[test]
    fn integrates_even_moments_exactly() {
        // int x^{2k} e^{-x^2} dx = sqrt(pi) (2k-1)!! / 2^k
        let q = GaussHermite::new(16).unwrap();
        let mut target = SQRT_PI;
        for k in 1..=6i32 {
            target *= (2 * k - 1) as f64 / 2.0;
            let vals: Vec<f64> = q
                .nodes()
                .iter()
                .zip(q.weights())
                .map(|(x, w)| w * x.powi(2 * k))
                .collect();
            let got = pairwise_sum(&vals);
            assert!(
                (got - target).abs() < 1e-12 * target,
                "moment {k}: {got} vs {target}"
            );
        }
    }

    #[test]
    fn odd_moments_vanish() {
        let q = GaussHermite::new(9).unwrap();
        let vals: Vec<f64> = q
            .nodes()
            .iter()
            .zip(q.weights())
            .map(|(x, w)| w * x.powi(3))
            .collect();
        assert!(pairwise_sum(&vals).abs() < 1e-14);
    }

    #[test]
    fn matches_reference_nodes_order_8() {
        // reference values from an independent implementation
        let expect_nodes = [
            -2.930637420257244,
            -1.981656756695843,
            -1.15719371244678,
            -0.381186990207322,
            0.381186990207322,
            1.15719371244678,
            1.981656756695843,
            2.930637420257244,
        ];
        let expect_weights = [
            1.996040722113676e-4,
            1.707798300741347e-2,
            2.078023258148919e-1,
            6.611470125582413e-1,
            6.611470125582413e-1,
            2.078023258148919e-1,
            1.707798300741347e-2,
            1.996040722113676e-4,
        ];
        let q = GaussHermite::new(8).unwrap();
        for (got, want) in q.nodes().iter().zip(&expect_nodes) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        for (got, want) in q.weights().iter().zip(&expect_weights) {
            assert!((got - want).abs() < 1e-13 * want.abs().max(1e-4));
        }
    }

    #[test]
    fn matches_reference_nodes_order_32() {
        let q = GaussHermite::new(32).unwrap();
        assert!((q.nodes()[0] + 7.125813909830728).abs() < 1e-11);
        assert!((q.nodes()[31] - 7.125813909830728).abs() < 1e-11);
        assert!((q.weights()[15] - 0.37523835259280247).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_benign_data() {
        let xs: Vec<f64> = (0..1027).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(GaussHermite::new(0).is_err());
    }
}
