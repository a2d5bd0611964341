use rand::seq::index;
use rand_chacha::ChaCha8Rng;

/// `subset_size` distinct indices from `0..p`, drawn uniformly without
/// replacement and returned in increasing order.
///
/// # Panics
///
/// If `subset_size > p`.
pub fn select_mask(p: usize, subset_size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(subset_size <= p, "subset of {subset_size} from {p} parameters");
    if subset_size == p {
        return (0..p).collect();
    }
    let mut idx = index::sample(rng, p, subset_size).into_vec();
    idx.sort_unstable();
    idx
}
