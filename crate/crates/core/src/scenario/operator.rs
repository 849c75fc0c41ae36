use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::kinematics::cap_norm;
use crate::Vec2;

/// Scripted human: a proportional command toward the current target whose
/// bearing is rotated by seeded Gaussian noise every tick.
#[derive(Debug, Clone)]
pub struct ScriptedOperator {
    gain: f64,
    step_max: f64,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl ScriptedOperator {
    pub fn new(seed: u64, gain: f64, step_max: f64, noise_deg: f64) -> Self {
        let sigma = noise_deg.to_radians();
        let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite positive sigma"));
        Self { gain, step_max, noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn command(&mut self, x: Vec2, target: Vec2) -> Vec2 {
        let a = cap_norm((target - x) * self.gain, self.step_max);
        match &self.noise {
            Some(n) => {
                let theta = n.sample(&mut self.rng);
                let (s, c) = theta.sin_cos();
                Vec2::new(c * a.x - s * a.y, s * a.x + c * a.y)
            }
            None => a,
        }
    }
}
