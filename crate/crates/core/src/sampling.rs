//! Seeded random inputs shared by audits, probes and tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<Complex64> {
    DVector::from_fn(d, |_, _| complex_gaussian(rng))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    // column-major fill order, fixed so that seeds stay reproducible
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Uniform point on the Euclidean unit sphere of `ℂ^d`.
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<Complex64> {
    loop {
        let v = gaussian_vector(rng, d);
        let n = v.norm();
        if n > 1e-300 {
            return v / Complex64::new(n, 0.0);
        }
    }
}

/// Uniform point on the unit circle of `ℂ`.
pub fn unimodular<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(1.0, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = gaussian_vector(&mut stream_rng(7, 0), 4);
        let b = gaussian_vector(&mut stream_rng(7, 0), 4);
        let c = gaussian_vector(&mut stream_rng(7, 1), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sphere_points_have_unit_norm() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            assert!((unit_sphere(&mut rng, 5).norm() - 1.0).abs() < 1e-14);
            assert!((unimodular(&mut rng).norm() - 1.0).abs() < 1e-14);
        }
    }
}
