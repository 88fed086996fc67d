//! Drawing simplicial complexes from a step complexon.
//!
//! Randomness comes from ChaCha8 (a counter-based stream cipher generator).
//! Batch item `k` of a batch seeded with `s` uses the seed
//! [`derive_seed(s, k)`](derive_seed), so items can be produced in any order
//! or in parallel with identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexon::StepComplexon;
use crate::error::{Error, Result};
use crate::simplicial::{clique_candidates, Simplex, SimplicialComplex};

pub type SamplerRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of item `index` within a stream seeded by `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// A sampled complex together with the latent node positions that produced
/// it.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledComplex {
    pub complex: SimplicialComplex,
    pub latents: Vec<f64>,
}

/// Samples with the given latent positions. Each edge `{i, j}` appears with
/// probability `W^(1)(zeta_i, zeta_j)`; at dimension `d >= 2` only vertex sets
/// whose faces were all drawn are candidates, each kept with probability
/// `W^(d)(zeta_sigma)`.
pub fn sample_with_latents<R: Rng + ?Sized>(
    w: &StepComplexon,
    latents: &[f64],
    rng: &mut R,
) -> Result<SimplicialComplex> {
    if latents.is_empty() {
        return Err(Error::domain("need at least one node"));
    }
    if let Some(z) = latents.iter().find(|z| !(**z >= 0.0 && **z <= 1.0)) {
        return Err(Error::domain(format!("latent position {z} outside [0, 1]")));
    }
    let n = latents.len();
    let bins: Vec<usize> = latents.iter().map(|&z| w.bin_of(z)).collect();
    let mut k = SimplicialComplex::empty(n);
    if w.max_dim() == 0 {
        return Ok(k);
    }
    let mut adj = vec![false; n * n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < w.cell(1, &[bins[i], bins[j]]) {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
                k.insert(Simplex::from_sorted(&[i, j]));
            }
        }
    }
    let mut idx = Vec::with_capacity(w.max_dim() + 1);
    for d in 2..=w.max_dim() {
        let candidates = clique_candidates(&k, &adj, d);
        if candidates.is_empty() {
            break;
        }
        for s in candidates {
            idx.clear();
            idx.extend(s.vertices().iter().map(|&v| bins[v]));
            if rng.random::<f64>() < w.cell(d, &idx) {
                k.insert(s);
            }
        }
    }
    Ok(k)
}

/// Draws `num_nodes` i.i.d. uniform latents, then samples a complex.
pub fn sample_recorded(w: &StepComplexon, num_nodes: usize, seed: u64) -> Result<SampledComplex> {
    if num_nodes == 0 {
        return Err(Error::domain("need at least one node"));
    }
    let mut rng = rng_from_seed(seed);
    let latents: Vec<f64> = (0..num_nodes).map(|_| rng.random::<f64>()).collect();
    let complex = sample_with_latents(w, &latents, &mut rng)?;
    Ok(SampledComplex { complex, latents })
}

pub fn sample_complex(w: &StepComplexon, num_nodes: usize, seed: u64) -> Result<SimplicialComplex> {
    Ok(sample_recorded(w, num_nodes, seed)?.complex)
}

/// `count` independent draws; item `k` uses `derive_seed(master_seed, k)`.
pub fn sample_batch(
    w: &StepComplexon,
    num_nodes: usize,
    count: usize,
    master_seed: u64,
) -> Result<Vec<SimplicialComplex>> {
    if count == 0 {
        return Err(Error::domain("batch size must be at least 1"));
    }
    (0..count as u64)
        .map(|k| sample_complex(w, num_nodes, derive_seed(master_seed, k)))
        .collect()
}

/// A complexon with every canonical cell drawn uniformly from `[0, 1)`.
pub fn random_complexon<R: Rng + ?Sized>(n: usize, max_dim: usize, rng: &mut R) -> StepComplexon {
    StepComplexon::from_fn(n, max_dim, |_, _| rng.random::<f64>())
}

/// Uniform draw from the probability simplex with `m` vertices.
pub fn random_simplex_weights<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexon::induce_from_complex;

    #[test]
    fn all_ones_gives_complete_complex() {
        let w = StepComplexon::constant(3, &[1.0, 1.0]).unwrap();
        for seed in 0..5 {
            let k = sample_complex(&w, 4, seed).unwrap();
            assert_eq!(k.counts(), vec![6, 4]);
        }
    }

    #[test]
    fn zero_edges_gives_empty_complex() {
        let w = StepComplexon::constant(3, &[0.0, 1.0]).unwrap();
        let k = sample_complex(&w, 10, 1).unwrap();
        assert_eq!(k.max_dim(), 0);
        assert_eq!(k.num_nodes(), 10);
    }

    #[test]
    fn batch_uses_derived_seeds() {
        let w = StepComplexon::constant(2, &[0.5, 0.5]).unwrap();
        let one = sample_batch(&w, 12, 1, 99).unwrap();
        assert_eq!(one[0], sample_complex(&w, 12, derive_seed(99, 0)).unwrap());
        assert_eq!(sample_batch(&w, 12, 4, 7).unwrap(), sample_batch(&w, 12, 4, 7).unwrap());
        assert!(sample_batch(&w, 12, 0, 7).is_err());
    }

    #[test]
    fn induced_complexon_reproduces_complex_at_bin_centres() {
        let k = SimplicialComplex::closure_of(5, [vec![0, 1, 2], vec![2, 3], vec![3, 4]]).unwrap();
        let w = induce_from_complex(&k).unwrap();
        let centres: Vec<f64> = (0..5).map(|i| (i as f64 + 0.5) / 5.0).collect();
        let mut rng = rng_from_seed(0);
        assert_eq!(sample_with_latents(&w, &centres, &mut rng).unwrap(), k);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..100).map(|k| derive_seed(1, k)).collect();
        assert_eq!(seeds.len(), 100);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn random_helpers_are_valid() {
        let mut rng = rng_from_seed(3);
        let w = random_complexon(3, 2, &mut rng);
        assert_eq!(w.max_dim(), 2);
        let g = random_simplex_weights(4, &mut rng);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(g.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn rejects_bad_latents() {
        let w = StepComplexon::constant(2, &[0.5]).unwrap();
        assert!(sample_with_latents(&w, &[0.2, 1.2], &mut rng_from_seed(0)).is_err());
        assert!(sample_complex(&w, 0, 0).is_err());
    }
}
