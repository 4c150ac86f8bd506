//! Seed derivation and deterministic chunked parallelism.
//!
//! Every random stream is a `ChaCha8Rng` keyed by a 64-bit seed with the
//! stream number set to a chunk index, so work split into fixed-size chunks
//! produces the same numbers no matter how many threads execute it. Reductions
//! collect per-chunk partial sums in chunk order and combine them pairwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Items per parallel chunk. Fixed so results never depend on the thread count.
pub const CHUNK: usize = 4096;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a master seed and a component name.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    // FNV-1a over the name, then mixed with the master seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in component.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(master ^ splitmix(h))
}

/// Derives a sub-seed from a master seed and an index.
pub fn derive_index(master: u64, index: u64) -> u64 {
    splitmix(master ^ splitmix(index.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Random stream for one chunk of a seeded computation.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len if len <= 8 => xs.iter().sum(),
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sums `f(i)` for `i in 0..len` with a reduction order independent of threads.
pub fn par_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    par_sum_vec(len, 1, |i, acc| acc[0] += f(i))[0]
}

/// Sums several accumulators at once. `f(i, acc)` adds item `i`'s
/// contributions into `acc` (length `width`); partials are combined pairwise.
pub fn par_sum_vec<F>(len: usize, width: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; width];
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    (0..width)
        .map(|w| {
            let col: Vec<f64> = partials.iter().map(|p| p[w]).collect();
            pairwise_sum(&col)
        })
        .collect()
}

/// Monte-Carlo style reduction where each chunk owns a seeded random stream.
/// `f(rng, count, acc)` must draw `count` items and add into `acc`.
pub fn par_sample_sum<F>(seed: u64, len: usize, width: usize, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, usize, &mut [f64]) + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let count = ((c + 1) * CHUNK).min(len) - c * CHUNK;
            let mut acc = vec![0.0; width];
            f(&mut rng, count, &mut acc);
            acc
        })
        .collect();
    (0..width)
        .map(|w| {
            let col: Vec<f64> = partials.iter().map(|p| p[w]).collect();
            pairwise_sum(&col)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_differ_by_name_and_master() {
        assert_ne!(derive_seed(1, "hidden"), derive_seed(1, "data"));
        assert_ne!(derive_seed(1, "hidden"), derive_seed(2, "hidden"));
        assert_eq!(derive_seed(9, "probe"), derive_seed(9, "probe"));
        assert_ne!(derive_index(3, 0), derive_index(3, 1));
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        assert_eq!(par_sum(10_001, |i| i as f64), 50_005_000.0);
    }

    #[test]
    fn parallel_sums_ignore_thread_count() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                par_sample_sum(17, 50_000, 2, |rng, count, acc| {
                    for _ in 0..count {
                        let x: f64 = rng.random();
                        acc[0] += x;
                        acc[1] += x * x;
                    }
                })
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }
}
