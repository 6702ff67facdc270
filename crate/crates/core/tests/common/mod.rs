#![allow(dead_code)]

use dabsig::DabParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic set of valid converter parameter draws.
pub fn random_params(count: usize, seed: u64) -> Vec<DabParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let log = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.gen_range(lo.ln()..hi.ln())).exp();
            DabParams {
                n_turns: rng.gen_range(0.5..2.0),
                inductance: log(&mut rng, 5e-6, 50e-6),
                capacitance: log(&mut rng, 20e-6, 500e-6),
                series_resistance: log(&mut rng, 5e-3, 0.2),
                esr: rng.gen_range(0.0..0.05),
                load: log(&mut rng, 2.0, 50.0),
                vin: rng.gen_range(50.0..400.0),
                fs: log(&mut rng, 20e3, 200e3),
                phase_shift: rng.gen_range(0.05..0.95),
                ramp_amplitude: rng.gen_range(0.5..5.0),
            }
        })
        .collect()
}
