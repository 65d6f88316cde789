//! Deterministic stream splitting for parallel replications.
//!
//! A stream is identified by `(master_seed, stream_id)` and backed by
//! ChaCha8, whose 64-bit stream parameter gives disjoint keystreams for
//! distinct ids under the same key. Replication loops are cut into blocks of
//! a fixed size; block `b` always reads from [`RngContract::substream`]`(b)`,
//! so the values produced never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Replications per block in [`map_blocks`].
pub const BLOCK_SIZE: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngContract {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngContract {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A child stream. Children with different labels are distinct streams,
    /// and the mapping is a pure function of `(stream_id, label)`.
    pub fn substream(&self, label: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id: mix64(self.stream_id ^ mix64(label.wrapping_add(0x9E37_79B9_7F4A_7C15))),
        }
    }

    /// Child stream keyed by a text label.
    pub fn named(&self, label: &str) -> Self {
        self.substream(fnv1a64(label.as_bytes()))
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Runs `reps` replications in blocks of `block` rows and returns the
/// per-block results in block order. `f` receives the block's generator and
/// the half-open range of replication indices it covers.
pub fn map_blocks<T, F>(rng: RngContract, reps: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, std::ops::Range<usize>) -> T + Sync + Send,
{
    let block = block.max(1);
    let blocks = reps.div_ceil(block);
    let run = |b: usize| {
        let start = b * block;
        let end = (start + block).min(reps);
        let mut r = rng.substream(b as u64).rng();
        f(&mut r, start..end)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..blocks).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..blocks).map(run).collect()
    }
}

/// Parallel map over independent work items (experiment cells, trials).
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_contract_same_stream() {
        let c = RngContract::new(7, 3);
        let a: Vec<u64> = (0..8).map({
            let mut r = c.rng();
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..8).map({
            let mut r = c.rng();
            move |_| r.random()
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_stream_ids_differ() {
        let mut a = RngContract::new(7, 3).rng();
        let mut b = RngContract::new(7, 4).rng();
        let xa: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn blocks_cover_range_in_order() {
        let out = map_blocks(RngContract::new(1, 0), 2500, 1000, |_, r| r);
        assert_eq!(out, vec![0..1000, 1000..2000, 2000..2500]);
    }

    #[test]
    fn block_results_independent_of_pool_size() {
        let f = |r: &mut ChaCha8Rng, range: std::ops::Range<usize>| {
            range.map(|_| r.random::<f64>()).sum::<f64>()
        };
        let serial = map_blocks(RngContract::new(9, 1), 5000, 128, f);
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
            let parallel = pool.install(|| map_blocks(RngContract::new(9, 1), 5000, 128, f));
            assert_eq!(serial, parallel);
        }
        assert_eq!(serial.len(), 40);
    }
}
