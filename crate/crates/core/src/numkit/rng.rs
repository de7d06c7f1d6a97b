use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by every sampler in the crate.
pub type ChainRng = ChaCha8Rng;

/// Independent stream `stream` derived from `seed`. Streams with the same
/// seed never overlap, so replicates can run in parallel reproducibly.
pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
