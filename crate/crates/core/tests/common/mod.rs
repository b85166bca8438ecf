#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbc_core::{Configuration, MassVector};

/// Random well-separated configuration with random masses in [0.5, 2].
pub fn random_config(n: usize, d: usize, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let q: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = Configuration::new(MassVector::new(m).unwrap(), d, q).unwrap();
        if c.min_separation() > 0.2 {
            return c;
        }
    }
}

pub fn euler_three(a: f64, d: usize, axis: usize) -> Configuration {
    let mut q = vec![0.0; 3 * d];
    q[axis] = -a;
    q[2 * d + axis] = a;
    Configuration::new(MassVector::equal(3).unwrap(), d, q).unwrap()
}

pub fn equilateral(side: f64) -> Configuration {
    let h = side * 3f64.sqrt() / 2.0;
    Configuration::from_rows(
        MassVector::equal(3).unwrap(),
        &[vec![-side / 2.0, -h / 3.0], vec![side / 2.0, -h / 3.0], vec![0.0, 2.0 * h / 3.0]],
    )
    .unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
