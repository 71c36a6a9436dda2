use rayon::prelude::*;

use super::dot_f64;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub similarity: f64,
}

const QUERY_TILE: usize = 16;
const KEY_TILE: usize = 512;

/// Maximum dot product of each query against all keys; ties keep the lowest key index.
///
/// Work is split into query × key tiles and query tiles run in parallel.
/// Each dot product is summed left to right in f64 and candidates are
/// visited in key order, so results do not depend on the tiling.
pub fn nearest_neighbors<S: Real>(queries: &[&[S]], keys: &[&[S]]) -> Vec<Neighbor> {
    if keys.is_empty() {
        return queries
            .iter()
            .map(|_| Neighbor {
                index: 0,
                similarity: f64::NEG_INFINITY,
            })
            .collect();
    }
    queries
        .par_chunks(QUERY_TILE)
        .flat_map_iter(|tile| {
            let mut best = vec![
                Neighbor {
                    index: 0,
                    similarity: f64::NEG_INFINITY,
                };
                tile.len()
            ];
            for (k0, key_tile) in keys.chunks(KEY_TILE).enumerate() {
                for (q, slot) in tile.iter().zip(best.iter_mut()) {
                    for (j, key) in key_tile.iter().enumerate() {
                        let s = dot_f64(q, key);
                        if s > slot.similarity {
                            *slot = Neighbor {
                                index: k0 * KEY_TILE + j,
                                similarity: s,
                            };
                        }
                    }
                }
            }
            best
        })
        .collect()
}
