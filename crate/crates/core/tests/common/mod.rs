//! Independent oracles and seeded instance generators shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use qswap::{LinkSpec, PathSpec, SwapOrder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn binom(n: u64, p: f64) -> Vec<f64> {
    (0..=n).map(|k| choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).collect()
}

/// Expected end-to-end count by tracking the joint law of every live
/// segment's count through the swaps of `order`.
pub fn joint_state_ent(path: &PathSpec, order: &SwapOrder) -> f64 {
    let mut states: HashMap<Vec<u64>, f64> = HashMap::from([(Vec::new(), 1.0)]);
    for link in path.links() {
        let law = binom(link.capacity, link.success);
        let mut next = HashMap::new();
        for (state, w) in &states {
            for (k, pk) in law.iter().enumerate() {
                let mut s = state.clone();
                s.push(k as u64);
                *next.entry(s).or_insert(0.0) += w * pk;
            }
        }
        states = next;
    }
    // Live segments are labelled by their left node.
    let mut segments: Vec<usize> = (0..path.link_count()).collect();
    for &v in order.nodes() {
        let right = segments.iter().position(|&s| s == v).expect("node is a segment boundary");
        let left = right - 1;
        let q = path.swap_prob(v);
        let mut next = HashMap::new();
        for (state, w) in &states {
            let m = state[left].min(state[right]);
            for (k, pk) in binom(m, q).iter().enumerate() {
                let mut s = state.clone();
                s[left] = k as u64;
                s.remove(right);
                *next.entry(s).or_insert(0.0) += w * pk;
            }
        }
        states = next;
        segments.remove(right);
    }
    states.iter().map(|(s, w)| s[0] as f64 * w).sum()
}

/// Random path with capacities in `caps`, link successes in `p`, swap
/// successes in `q`.
pub fn random_path(
    rng: &mut ChaCha8Rng,
    links: usize,
    caps: std::ops::RangeInclusive<u64>,
    p: std::ops::RangeInclusive<f64>,
    q: std::ops::RangeInclusive<f64>,
) -> PathSpec {
    let specs = (0..links)
        .map(|_| LinkSpec { capacity: rng.random_range(caps.clone()), success: rng.random_range(p.clone()) })
        .collect();
    let swaps = (0..links - 1).map(|_| rng.random_range(q.clone())).collect();
    PathSpec::new(specs, swaps).unwrap()
}

/// Uniformly random valid order: a random permutation of the interior nodes.
pub fn random_order(rng: &mut ChaCha8Rng, node_count: usize) -> SwapOrder {
    use rand::seq::SliceRandom;
    let mut nodes: Vec<usize> = (1..node_count - 1).collect();
    nodes.shuffle(rng);
    SwapOrder::new(nodes)
}

pub fn example1() -> PathSpec {
    PathSpec::uniform(&[100, 200, 300, 400], 0.2, 0.5).unwrap()
}

pub fn example2() -> PathSpec {
    PathSpec::uniform(&[100, 101, 101, 100], 0.2, 0.5).unwrap()
}
