//! Seeded instance generators.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`; player `i` draws from stream `i`, and graph
//! construction draws from stream `u64::MAX`. Payoffs are `f64` uniforms on
//! `[0, 1)` drawn in row-major order, then converted to the target scalar.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_cap, NormalFormGame, DEFAULT_ENTRY_CAP};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const GRAPH_STREAM: u64 = u64::MAX;

/// Default small-world ring degree (neighbors on each side).
pub const SMALL_WORLD_HALF_DEGREE: usize = 1;
/// Default small-world rewiring probability.
pub const SMALL_WORLD_REWIRE: f64 = 0.2;

fn player_rng(seed: u64, player: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(player as u64);
    rng
}

/// I.i.d. uniform `[0, 1)` payoffs.
pub fn generate_random<T: Scalar>(actions: &[usize], seed: u64) -> Result<NormalFormGame<T>> {
    generate_random_capped(actions, seed, DEFAULT_ENTRY_CAP)
}

pub fn generate_random_capped<T: Scalar>(actions: &[usize], seed: u64, cap: u128) -> Result<NormalFormGame<T>> {
    if actions.len() < 2 {
        return Err(Error::InvalidArgument("a game needs at least 2 players".into()));
    }
    let profiles = check_cap(actions, cap)?;
    let mut utilities = Vec::with_capacity(profiles * actions.len());
    for i in 0..actions.len() {
        let mut rng = player_rng(seed, i);
        utilities.extend((0..profiles).map(|_| T::lit(rng.random::<f64>())));
    }
    NormalFormGame::with_cap(actions.to_vec(), utilities, cap)
}

/// Interaction graph over players. Neighbor lists are sorted, deduplicated
/// and exclude the player itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Complete,
    Empty,
    Path,
    #[serde(rename = "smallworld")]
    SmallWorld,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Complete => "complete",
            GraphKind::Empty => "empty",
            GraphKind::Path => "path",
            GraphKind::SmallWorld => "smallworld",
        })
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(GraphKind::Complete),
            "empty" => Ok(GraphKind::Empty),
            "path" => Ok(GraphKind::Path),
            "smallworld" | "small-world" => Ok(GraphKind::SmallWorld),
            other => Err(Error::InvalidArgument(format!("unknown graph kind '{other}'"))),
        }
    }
}

impl Graph {
    pub fn from_adjacency(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        let neighbors = neighbors
            .into_iter()
            .enumerate()
            .map(|(i, list)| {
                if let Some(&bad) = list.iter().find(|&&j| j >= n) {
                    return Err(Error::Index {
                        what: "graph neighbor",
                        index: bad,
                        size: n,
                    });
                }
                let set: BTreeSet<usize> = list.into_iter().filter(|&j| j != i).collect();
                Ok(set.into_iter().collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { neighbors })
    }

    pub fn complete(n: usize) -> Self {
        Self {
            neighbors: (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect(),
        }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n],
        }
    }

    pub fn path(n: usize) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for i in 1..n {
            neighbors[i - 1].push(i);
            neighbors[i].push(i - 1);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { neighbors }
    }

    /// Watts-Strogatz graph: a ring where each player links to `half_degree`
    /// players on each side, then each ring edge has its far endpoint rewired
    /// to a uniformly chosen non-adjacent player with probability `rewire`.
    pub fn small_world(n: usize, half_degree: usize, rewire: f64, seed: u64) -> Self {
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for i in 0..n {
            for d in 1..=half_degree {
                let j = (i + d) % n;
                if i != j {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(GRAPH_STREAM);
        let ring: Vec<(usize, usize)> = edges.iter().copied().collect();
        for (i, j) in ring {
            if rng.random::<f64>() >= rewire {
                continue;
            }
            let candidates: Vec<usize> = (0..n)
                .filter(|&k| k != i && !edges.contains(&(i.min(k), i.max(k))))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let k = candidates[rng.random_range(0..candidates.len())];
            edges.remove(&(i, j));
            edges.insert((i.min(k), i.max(k)));
        }
        let mut neighbors = vec![Vec::new(); n];
        for (i, j) in edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { neighbors }
    }

    pub fn of_kind(kind: GraphKind, n: usize, seed: u64) -> Self {
        match kind {
            GraphKind::Complete => Self::complete(n),
            GraphKind::Empty => Self::empty(n),
            GraphKind::Path => Self::path(n),
            GraphKind::SmallWorld => Self::small_world(n, SMALL_WORLD_HALF_DEGREE, SMALL_WORLD_REWIRE, seed),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.neighbors
    }
}

/// Graphical game: `u_i(a) = r_i(a_i, a_{N(i)})` with `r_i` i.i.d. uniform.
///
/// `r_i` is drawn row-major over the players `{i} ∪ N(i)` in index order, so
/// a complete graph reproduces [`generate_random`] bit for bit.
pub fn generate_graphical<T: Scalar>(actions: &[usize], graph: &Graph, seed: u64) -> Result<NormalFormGame<T>> {
    let n = actions.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a game needs at least 2 players".into()));
    }
    if graph.num_nodes() != n {
        return Err(Error::Shape(format!(
            "graph has {} nodes but the game has {n} players",
            graph.num_nodes()
        )));
    }
    check_cap(actions, DEFAULT_ENTRY_CAP)?;
    let tables: Vec<(Vec<usize>, Vec<usize>, Vec<T>)> = (0..n)
        .map(|i| {
            let mut scope: Vec<usize> = graph.neighbors(i).to_vec();
            scope.push(i);
            scope.sort_unstable();
            let mut strides = vec![1; scope.len()];
            for k in (0..scope.len().saturating_sub(1)).rev() {
                strides[k] = strides[k + 1] * actions[scope[k + 1]];
            }
            let size: usize = scope.iter().map(|&j| actions[j]).product();
            let mut rng = player_rng(seed, i);
            let table = (0..size).map(|_| T::lit(rng.random::<f64>())).collect();
            (scope, strides, table)
        })
        .collect();
    NormalFormGame::from_fn(actions.to_vec(), |i, a| {
        let (scope, strides, table) = &tables[i];
        let idx: usize = scope.iter().zip(strides).map(|(&j, &s)| a[j] * s).sum();
        table[idx]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{MixedProfile, PureProfile};

    #[test]
    fn random_is_deterministic() {
        let a: NormalFormGame<f64> = generate_random(&[2, 2], 0).unwrap();
        let b: NormalFormGame<f64> = generate_random(&[2, 2], 0).unwrap();
        assert_eq!(a.raw_utilities(), b.raw_utilities());
        let c: NormalFormGame<f64> = generate_random(&[2, 2], 1).unwrap();
        assert_ne!(a.raw_utilities(), c.raw_utilities());
    }

    #[test]
    fn random_range_and_size() {
        let g: NormalFormGame<f64> = generate_random(&[3, 3, 3], 7).unwrap();
        for i in 0..3 {
            assert_eq!(g.payoffs(i).len(), 81 / 3);
        }
        assert_eq!(g.raw_utilities().len(), 81);
        assert!(g.raw_utilities().iter().all(|&u| (0.0..=1.0).contains(&u)));
    }

    #[test]
    fn random_mean_is_one_half() {
        let g: NormalFormGame<f64> = generate_random(&[100, 50], 11).unwrap();
        let all = g.raw_utilities();
        assert_eq!(all.len(), 10_000);
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn cap_is_enforced() {
        let r = generate_random_capped::<f64>(&[10, 10], 0, 199);
        assert!(matches!(r, Err(Error::CapExceeded { entries: 200, .. })));
        assert!(generate_random::<f64>(&[2], 0).is_err());
    }

    #[test]
    fn complete_graph_reproduces_random() {
        for actions in [vec![2, 3], vec![3, 2, 2]] {
            let r: NormalFormGame<f64> = generate_random(&actions, 5).unwrap();
            let g: NormalFormGame<f64> = generate_graphical(&actions, &Graph::complete(actions.len()), 5).unwrap();
            assert_eq!(r, g);
        }
    }

    #[test]
    fn empty_graph_decouples_players() {
        let g: NormalFormGame<f64> = generate_graphical(&[3, 2, 4], &Graph::empty(3), 2).unwrap();
        let best: Vec<usize> = (0..3)
            .map(|i| {
                let mut a = vec![0; 3];
                let vals: Vec<f64> = (0..g.num_actions(i))
                    .map(|k| {
                        a[i] = k;
                        g.utility(i, &a)
                    })
                    .collect();
                crate::game::argmax(&vals)
            })
            .collect();
        let d = MixedProfile::pure(g.actions(), &PureProfile::new(best)).unwrap();
        assert_eq!(g.exploitability(&d).unwrap().epsilon, 0.0);
    }

    #[test]
    fn path_graph_first_player_ignores_last() {
        let g: NormalFormGame<f64> = generate_graphical(&[2, 3, 3], &Graph::path(3), 3).unwrap();
        for (_, a) in g.profiles() {
            let mut b = a.clone();
            for k in 0..3 {
                b[2] = k;
                assert_eq!(g.utility(0, &a), g.utility(0, &b));
            }
        }
        // player 1 (middle) does depend on both ends somewhere
        let varies = g.profiles().any(|(_, a)| {
            let mut b = a.clone();
            b[2] = (a[2] + 1) % 3;
            g.utility(1, &a) != g.utility(1, &b)
        });
        assert!(varies);
    }

    #[test]
    fn graph_size_mismatch() {
        let r = generate_graphical::<f64>(&[2, 2, 2], &Graph::path(2), 0);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn small_world_is_symmetric_and_seeded() {
        let a = Graph::small_world(6, 1, 0.5, 4);
        let b = Graph::small_world(6, 1, 0.5, 4);
        assert_eq!(a, b);
        for i in 0..6 {
            for &j in a.neighbors(i) {
                assert!(a.neighbors(j).contains(&i));
                assert_ne!(i, j);
            }
        }
        let ring = Graph::small_world(5, 1, 0.0, 0);
        assert!((0..5).all(|i| ring.neighbors(i).len() == 2));
    }

    #[test]
    fn complete_graph_marginals_match_random() {
        // Both generators draw i.i.d. U[0,1); compare first two moments over
        // many seeds at desk scale.
        let mut m_r = (0.0, 0.0);
        let mut m_g = (0.0, 0.0);
        let mut count = 0.0;
        for seed in 0..200u64 {
            let r: NormalFormGame<f64> = generate_random(&[3, 3], seed).unwrap();
            let g: NormalFormGame<f64> = generate_graphical(&[3, 3], &Graph::complete(2), seed + 10_000).unwrap();
            for (&x, &y) in r.raw_utilities().iter().zip(g.raw_utilities()) {
                m_r.0 += x;
                m_r.1 += x * x;
                m_g.0 += y;
                m_g.1 += y * y;
                count += 1.0;
            }
        }
        assert!((m_r.0 / count - m_g.0 / count).abs() < 0.02);
        assert!((m_r.1 / count - m_g.1 / count).abs() < 0.02);
    }

    #[test]
    fn adjacency_is_cleaned() {
        let g = Graph::from_adjacency(vec![vec![1, 1, 0], vec![0], vec![]]).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert!(Graph::from_adjacency(vec![vec![3], vec![], vec![]]).is_err());
    }
}
