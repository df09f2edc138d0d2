use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for `(seed, stream)`; distinct streams of one seed
/// never overlap.
pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// stream ids, kept apart so no two consumers share a sequence
pub(crate) const CENTERS: u64 = 1;
pub(crate) const SAMPLES: u64 = 2;
pub(crate) const NOISE_SUBSET: u64 = 3;
pub(crate) const NOISE_LABELS: u64 = 4;
pub(crate) const AUGMENT: u64 = 5;
pub(crate) const SHUFFLE_BASE: u64 = 1 << 32;
pub(crate) const INIT: u64 = 6;
pub(crate) const LATENT: u64 = 7;
pub(crate) const GAN_NOISE: u64 = 8;
