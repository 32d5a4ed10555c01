#![allow(dead_code)]

use epinet_core::utility::{make_utility, Family, UtilityFunction};
use epinet_core::ModelParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sqrt_reference() -> (UtilityFunction, ModelParams) {
    (make_utility(Family::Sqrt, &[1.0], 0.1).unwrap(), ModelParams::default())
}

/// Cubic benefit with a peak far enough out for strategic protection.
pub fn wide_cubic() -> UtilityFunction {
    make_utility(Family::Cubic, &[1.0, 1e-5], 0.1).unwrap()
}

fn draw_shape(rng: &mut ChaCha8Rng, family: Family) -> (Vec<f64>, f64) {
    match family {
        Family::Log => {
            let kappa = rng.random_range(0.5..5.0);
            (vec![kappa], kappa * rng.random_range(0.01..0.2))
        }
        Family::Sqrt => (vec![rng.random_range(0.5..2.0)], rng.random_range(0.02..0.2)),
        Family::BoundedExp => {
            let kappa = rng.random_range(5.0..20.0);
            let lambda = rng.random_range(0.05..0.3);
            (vec![kappa, lambda], kappa * lambda * rng.random_range(0.01..0.5))
        }
        Family::Cubic => {
            let kappa = rng.random_range(0.5..2.0);
            (vec![kappa, 10f64.powf(rng.random_range(-4.0..-2.0))], kappa * rng.random_range(0.01..0.5))
        }
    }
}

/// Random parameters and utility of `family` whose peak action exceeds `min_peak(params)`.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    family: Family,
    min_peak: impl Fn(&ModelParams) -> f64,
) -> (UtilityFunction, ModelParams) {
    loop {
        let (shape, c0) = draw_shape(rng, family);
        let params = ModelParams::new(
            rng.random_range(0.05..0.5),
            rng.random_range(0.1..0.5),
            rng.random_range(0.01..0.2),
            c0,
        )
        .unwrap();
        let Ok(u) = make_utility(family, &shape, c0) else { continue };
        if u.peak() > min_peak(&params) {
            return (u, params);
        }
    }
}
