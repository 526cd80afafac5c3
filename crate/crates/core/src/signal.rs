//! Desired-trajectory and disturbance profiles for closed-loop runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::plant::multisine;

/// A config-defined reference or disturbance signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalProfile {
    /// Identically zero (the idealized zero-skew case).
    Zero,
    /// Constant level.
    Constant { level: f64 },
    /// Zero until `at_sample`, then a constant level.
    Step { level: f64, at_sample: usize },
    /// Small-amplitude band-limited profile: a seeded multisine with all
    /// components at or below `cutoff_hz`, scaled to peak `amplitude`.
    BandLimited {
        amplitude: f64,
        cutoff_hz: f64,
        components: usize,
        seed: u64,
    },
    /// A short initial transient of magnitude `peak` (half-cosine pulse over
    /// `pulse_samples`) followed by a sustained band-limited ripple. Models a
    /// skew record with a large initial misalignment and a smaller running
    /// irregularity.
    PulseThenRipple {
        peak: f64,
        pulse_samples: usize,
        ripple_amplitude: f64,
        ripple_cutoff_hz: f64,
        ripple_components: usize,
        seed: u64,
    },
}

impl SignalProfile {
    /// Generate `n` samples at period `dt`. Deterministic per seed.
    pub fn generate(&self, n: usize, dt: f64) -> Vec<f64> {
        match *self {
            SignalProfile::Zero => vec![0.0; n],
            SignalProfile::Constant { level } => vec![level; n],
            SignalProfile::Step { level, at_sample } => (0..n)
                .map(|k| if k >= at_sample { level } else { 0.0 })
                .collect(),
            SignalProfile::BandLimited {
                amplitude,
                cutoff_hz,
                components,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                multisine(
                    n,
                    dt,
                    amplitude,
                    (cutoff_hz / 8.0, cutoff_hz),
                    components.max(1),
                    &mut rng,
                )
            }
            SignalProfile::PulseThenRipple {
                peak,
                pulse_samples,
                ripple_amplitude,
                ripple_cutoff_hz,
                ripple_components,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut out = multisine(
                    n,
                    dt,
                    ripple_amplitude,
                    (ripple_cutoff_hz / 8.0, ripple_cutoff_hz),
                    ripple_components.max(1),
                    &mut rng,
                );
                let len = pulse_samples.min(n);
                for (k, v) in out.iter_mut().enumerate().take(len) {
                    // Half-cosine bump: 0 -> peak -> 0 over the pulse window.
                    let phase = std::f64::consts::PI * k as f64 / len.max(1) as f64;
                    *v += peak * phase.sin();
                }
                out
            }
        }
    }
}
