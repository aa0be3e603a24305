//! Proportional per-type sampling with largest-remainder rounding.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AugmentError, Result};
use crate::external::TaggedPair;

/// Stratum name for pairs without a story type.
pub const UNTYPED: &str = "untyped";

/// Per-type quotas `k * n_t / N`, floored, with the leftover units going to the largest
/// remainders. Ties prefer the larger stratum, then the smaller type name.
pub fn allocate(counts: &BTreeMap<String, usize>, k: usize) -> Result<BTreeMap<String, usize>> {
    let total: usize = counts.values().sum();
    if k > total {
        return Err(AugmentError::SampleTooLarge { k, size: total });
    }
    let mut out: BTreeMap<String, usize> = BTreeMap::new();
    if total == 0 {
        return Ok(counts.keys().map(|t| (t.clone(), 0)).collect());
    }
    let mut remainders = Vec::new();
    for (t, &n) in counts {
        let exact = k as u128 * n as u128;
        out.insert(t.clone(), (exact / total as u128) as usize);
        remainders.push((exact % total as u128, n, t.as_str()));
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
    let leftover = k - out.values().sum::<usize>();
    for (_, _, t) in remainders.into_iter().take(leftover) {
        *out.get_mut(t).expect("allocated above") += 1;
    }
    Ok(out)
}

/// Draws `k` pairs with per-type counts from [`allocate`]. Members of each stratum are
/// chosen by a seeded shuffle; the sample keeps corpus order.
pub fn stratified_sample(corpus: &[TaggedPair], k: usize, seed: u64) -> Result<Vec<TaggedPair>> {
    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in corpus.iter().enumerate() {
        strata.entry(p.stratum().to_string()).or_default().push(i);
    }
    let counts = strata.iter().map(|(t, v)| (t.clone(), v.len())).collect();
    let quotas = allocate(&counts, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(k);
    for (t, mut members) in strata {
        members.shuffle(&mut rng);
        chosen.extend_from_slice(&members[..quotas[&t]]);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| corpus[i].clone()).collect())
}
