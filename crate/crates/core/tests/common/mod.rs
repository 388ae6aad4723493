#![allow(dead_code)]

use discpair::geom::{Instance, Placement, Point};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn point(rng: &mut ChaCha8Rng, half: f64) -> Point {
    Point::new(rng.gen_range(-half..half), rng.gen_range(-half..half))
}

/// Uniform compatible placement in `[-half, half]^2`.
pub fn placement(rng: &mut ChaCha8Rng, s: f64, half: f64) -> Placement {
    loop {
        let p = Placement::new(point(rng, half), point(rng, half));
        if p.separation() >= s {
            return p;
        }
    }
}

pub fn instance(rng: &mut ChaCha8Rng, s: f64, half: f64) -> Instance {
    Instance::new(s, placement(rng, s, half), placement(rng, s, half)).expect("compatible")
}

pub fn corpus(seed: u64, n: usize, s: f64, half: f64) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..n).map(|_| instance(&mut r, s, half)).collect()
}

pub fn fixture(a0: (f64, f64), b0: (f64, f64), a1: (f64, f64), b1: (f64, f64)) -> Instance {
    Instance::from_coords(1.0, a0, b0, a1, b1).expect("fixture")
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
