//! Normal-form games: dense utility tensors, mixed profiles, expected
//! utilities and exploitability.

mod generate;
pub mod json;
pub mod nfg;

pub use generate::{generate_graphical, generate_random, Graph, GraphKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on `num_players * num_profiles` utility entries.
pub const DEFAULT_ENTRY_CAP: u128 = 100_000_000;

/// Absolute tolerance on probability-vector sums.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// An n-player normal-form game stored as a dense utility tensor.
///
/// Utilities are player-major: player `i`'s slice is
/// `utilities[i * num_profiles .. (i + 1) * num_profiles]`, and each slice is
/// row-major over profiles with the last player's action varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormGame<T> {
    actions: Vec<usize>,
    strides: Vec<usize>,
    num_profiles: usize,
    utilities: Vec<T>,
    u_min: Vec<T>,
    u_max: Vec<T>,
}

/// One probability vector per player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile<T> {
    probs: Vec<Vec<T>>,
}

/// One action index per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PureProfile {
    pub actions: Vec<usize>,
}

/// Result of [`NormalFormGame::exploitability`].
#[derive(Clone, Debug, PartialEq)]
pub struct Exploitability<T> {
    pub epsilon: T,
    pub per_player: Vec<T>,
}

/// `u' = scale * u + shift`, applied to one player's utilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap<T> {
    pub scale: T,
    pub shift: T,
}

pub(crate) fn check_cap(actions: &[usize], cap: u128) -> Result<usize> {
    let mut profiles: u128 = 1;
    for &k in actions {
        profiles = profiles.saturating_mul(k as u128);
    }
    let entries = profiles.saturating_mul(actions.len() as u128);
    if entries > cap {
        return Err(Error::CapExceeded { entries, cap });
    }
    Ok(profiles as usize)
}

fn validate_actions(actions: &[usize]) -> Result<()> {
    if actions.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a game needs at least 2 players, got {}",
            actions.len()
        )));
    }
    if let Some(i) = actions.iter().position(|&k| k == 0) {
        return Err(Error::InvalidArgument(format!("player {i} has no actions")));
    }
    Ok(())
}

impl<T: Scalar> NormalFormGame<T> {
    /// Builds a game from a player-major utility vector.
    pub fn new(actions: Vec<usize>, utilities: Vec<T>) -> Result<Self> {
        Self::with_cap(actions, utilities, DEFAULT_ENTRY_CAP)
    }

    pub fn with_cap(actions: Vec<usize>, utilities: Vec<T>, cap: u128) -> Result<Self> {
        validate_actions(&actions)?;
        let num_profiles = check_cap(&actions, cap)?;
        let n = actions.len();
        if utilities.len() != n * num_profiles {
            return Err(Error::Shape(format!(
                "expected {} utility entries, got {}",
                n * num_profiles,
                utilities.len()
            )));
        }
        if let Some(pos) = utilities.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite utility at entry {pos}"
            )));
        }
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * actions[i + 1];
        }
        let mut u_min = Vec::with_capacity(n);
        let mut u_max = Vec::with_capacity(n);
        for slice in utilities.chunks(num_profiles) {
            let (lo, hi) = slice
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &u| {
                    (lo.min(u), hi.max(u))
                });
            u_min.push(lo);
            u_max.push(hi);
        }
        Ok(Self {
            actions,
            strides,
            num_profiles,
            utilities,
            u_min,
            u_max,
        })
    }

    /// Builds a game by evaluating `f(player, profile)` for every entry.
    pub fn from_fn(actions: Vec<usize>, mut f: impl FnMut(usize, &[usize]) -> T) -> Result<Self> {
        validate_actions(&actions)?;
        let num_profiles = check_cap(&actions, DEFAULT_ENTRY_CAP)?;
        let n = actions.len();
        let mut utilities = vec![T::zero(); n * num_profiles];
        let mut profile = vec![0; n];
        for flat in 0..num_profiles {
            for i in 0..n {
                utilities[i * num_profiles + flat] = f(i, &profile);
            }
            advance(&mut profile, &actions);
        }
        Self::new(actions, utilities)
    }

    /// Two-player game from row and column payoff matrices.
    pub fn bimatrix(row: &[Vec<T>], col: &[Vec<T>]) -> Result<Self> {
        let m = row.len();
        let k = row.first().map_or(0, Vec::len);
        if col.len() != m || row.iter().chain(col).any(|r| r.len() != k) {
            return Err(Error::Shape("bimatrix payoffs must share one m x k shape".into()));
        }
        Self::from_fn(vec![m, k], |i, a| if i == 0 { row[a[0]][a[1]] } else { col[a[0]][a[1]] })
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.actions[player]
    }

    pub fn max_actions(&self) -> usize {
        self.actions.iter().copied().max().unwrap_or(0)
    }

    pub fn num_profiles(&self) -> usize {
        self.num_profiles
    }

    /// Row-major strides of the profile index (last player fastest).
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn u_min(&self, player: usize) -> T {
        self.u_min[player]
    }

    pub fn u_max(&self, player: usize) -> T {
        self.u_max[player]
    }

    /// Player `i`'s utilities over all profiles, in flat profile order.
    pub fn payoffs(&self, player: usize) -> &[T] {
        &self.utilities[player * self.num_profiles..(player + 1) * self.num_profiles]
    }

    /// The whole player-major tensor.
    pub fn raw_utilities(&self) -> &[T] {
        &self.utilities
    }

    pub fn flat_index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn profile_of(&self, flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.actions)
            .map(|(&s, &k)| (flat / s) % k)
            .collect()
    }

    pub fn utility(&self, player: usize, profile: &[usize]) -> T {
        self.payoffs(player)[self.flat_index(profile)]
    }

    /// Iterates `(flat_index, profile)` pairs in flat order.
    pub fn profiles(&self) -> ProfileIter<'_> {
        ProfileIter {
            actions: &self.actions,
            current: vec![0; self.actions.len()],
            flat: 0,
            total: self.num_profiles,
        }
    }

    fn check_profile(&self, delta: &MixedProfile<T>) -> Result<()> {
        if delta.num_players() != self.num_players() {
            return Err(Error::Shape(format!(
                "profile has {} players, game has {}",
                delta.num_players(),
                self.num_players()
            )));
        }
        for (i, (p, &k)) in delta.probs.iter().zip(&self.actions).enumerate() {
            if p.len() != k {
                return Err(Error::Shape(format!(
                    "player {i}: profile has {} actions, game has {k}",
                    p.len()
                )));
            }
        }
        Ok(())
    }

    /// `u_i(delta) = sum_a (prod_j delta_j(a_j)) u_i(a)`.
    pub fn expected_utility(&self, player: usize, delta: &MixedProfile<T>) -> Result<T> {
        self.check_profile(delta)?;
        if player >= self.num_players() {
            return Err(Error::Index {
                what: "player",
                index: player,
                size: self.num_players(),
            });
        }
        let payoffs = self.payoffs(player);
        let total = self
            .profiles()
            .map(|(flat, a)| {
                let weight = a
                    .iter()
                    .enumerate()
                    .fold(T::one(), |acc, (j, &aj)| acc * delta.probs[j][aj]);
                weight * payoffs[flat]
            })
            .sum();
        Ok(total)
    }

    /// `u_i(a_i, delta_{-i})` for a single player and action.
    pub fn deviation_payoff(&self, player: usize, action: usize, delta: &MixedProfile<T>) -> Result<T> {
        self.check_profile(delta)?;
        if player >= self.num_players() {
            return Err(Error::Index {
                what: "player",
                index: player,
                size: self.num_players(),
            });
        }
        if action >= self.actions[player] {
            return Err(Error::Index {
                what: "action",
                index: action,
                size: self.actions[player],
            });
        }
        Ok(self.deviation_payoffs_unchecked(&delta.probs)[player][action])
    }

    /// `u_i(a_i, delta_{-i})` for every player and action.
    pub fn deviation_payoffs(&self, delta: &MixedProfile<T>) -> Result<Vec<Vec<T>>> {
        self.check_profile(delta)?;
        Ok(self.deviation_payoffs_unchecked(&delta.probs))
    }

    /// Contraction over raw probability vectors (no validation). Accumulation
    /// order is the flat profile order, so results are deterministic.
    pub(crate) fn deviation_payoffs_unchecked(&self, probs: &[Vec<T>]) -> Vec<Vec<T>> {
        let n = self.num_players();
        let mut out: Vec<Vec<T>> = self.actions.iter().map(|&k| vec![T::zero(); k]).collect();
        let mut prefix = vec![T::one(); n + 1];
        let mut suffix = vec![T::one(); n + 1];
        for (flat, a) in self.profiles() {
            for j in 0..n {
                prefix[j + 1] = prefix[j] * probs[j][a[j]];
            }
            for j in (0..n).rev() {
                suffix[j] = suffix[j + 1] * probs[j][a[j]];
            }
            for i in 0..n {
                let others = prefix[i] * suffix[i + 1];
                out[i][a[i]] += others * self.utilities[i * self.num_profiles + flat];
            }
        }
        out
    }

    /// `M[a][c] = u_i(a_i = a, a_j = c, delta_{-ij})` for an ordered pair of
    /// distinct players; the partial derivative of `u_i(a, delta_{-i})` with
    /// respect to `delta_j(c)`.
    pub(crate) fn pair_payoffs_unchecked(&self, probs: &[Vec<T>], i: usize, j: usize) -> Vec<Vec<T>> {
        debug_assert_ne!(i, j);
        let n = self.num_players();
        let mut out = vec![vec![T::zero(); self.actions[j]]; self.actions[i]];
        let payoffs = self.payoffs(i);
        for (flat, a) in self.profiles() {
            let mut w = T::one();
            for k in 0..n {
                if k != i && k != j {
                    w *= probs[k][a[k]];
                }
            }
            out[a[i]][a[j]] += w * payoffs[flat];
        }
        out
    }

    /// Best-response values `max_{a_i} u_i(a_i, delta_{-i})`.
    pub fn best_response_values(&self, delta: &MixedProfile<T>) -> Result<Vec<T>> {
        let dev = self.deviation_payoffs(delta)?;
        Ok(dev.iter().map(|d| max_of(d)).collect())
    }

    /// Per-player regret of `delta` and its maximum.
    pub fn exploitability(&self, delta: &MixedProfile<T>) -> Result<Exploitability<T>> {
        let dev = self.deviation_payoffs(delta)?;
        Ok(exploitability_from_deviations(&dev, &delta.probs))
    }

    /// Maps each player's utilities affinely onto `[0, 1]`.
    ///
    /// A player with constant utilities gets an all-zero slice and scale 0.
    pub fn normalize(&self) -> (Self, Vec<AffineMap<T>>) {
        let maps: Vec<AffineMap<T>> = (0..self.num_players())
            .map(|i| {
                let range = self.u_max[i] - self.u_min[i];
                if range > T::zero() {
                    let scale = T::one() / range;
                    AffineMap {
                        scale,
                        shift: -self.u_min[i] * scale,
                    }
                } else {
                    AffineMap {
                        scale: T::zero(),
                        shift: T::zero(),
                    }
                }
            })
            .collect();
        let mut utilities = self.utilities.clone();
        for (i, chunk) in utilities.chunks_mut(self.num_profiles).enumerate() {
            let AffineMap { scale, shift } = maps[i];
            let (lo, range) = (self.u_min[i], self.u_max[i] - self.u_min[i]);
            for u in chunk.iter_mut() {
                // (u - lo) / range is exact at both ends; scale * u + shift may not be.
                *u = if range > T::zero() {
                    ((*u - lo) / range).max(T::zero()).min(T::one())
                } else {
                    scale * *u + shift
                };
            }
        }
        let game = Self::new(self.actions.clone(), utilities).expect("normalization keeps shape");
        (game, maps)
    }

    /// Converts the tensor to another scalar type.
    pub fn cast<U: Scalar>(&self) -> NormalFormGame<U> {
        let utilities = self.utilities.iter().map(|u| U::lit(u.as_f64())).collect();
        NormalFormGame::new(self.actions.clone(), utilities).expect("same shape")
    }
}

pub(crate) fn max_of<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().fold(T::neg_infinity(), T::max)
}

/// First index attaining the maximum.
pub(crate) fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (k, &x) in values.iter().enumerate() {
        if x > values[best] {
            best = k;
        }
    }
    best
}

pub(crate) fn exploitability_from_deviations<T: Scalar>(dev: &[Vec<T>], probs: &[Vec<T>]) -> Exploitability<T> {
    let per_player: Vec<T> = dev
        .iter()
        .zip(probs)
        .map(|(d, p)| {
            // sum_a q_a (best - u_a) equals best - sum_a q_a u_a on the
            // simplex, but has no cancellation and no negative residue.
            let best = max_of(d);
            d.iter().zip(p).map(|(&u, &q)| q * (best - u)).sum::<T>()
        })
        .collect();
    let epsilon = max_of(&per_player);
    Exploitability { epsilon, per_player }
}

/// Odometer increment with the last coordinate fastest.
pub(crate) fn advance(profile: &mut [usize], actions: &[usize]) -> bool {
    for i in (0..profile.len()).rev() {
        profile[i] += 1;
        if profile[i] < actions[i] {
            return true;
        }
        profile[i] = 0;
    }
    false
}

pub struct ProfileIter<'a> {
    actions: &'a [usize],
    current: Vec<usize>,
    flat: usize,
    total: usize,
}

impl Iterator for ProfileIter<'_> {
    type Item = (usize, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.flat >= self.total {
            return None;
        }
        let item = (self.flat, self.current.clone());
        self.flat += 1;
        advance(&mut self.current, self.actions);
        Some(item)
    }
}

impl<T: Scalar> MixedProfile<T> {
    /// Validates and re-normalizes a profile.
    ///
    /// Entries may fall outside `[0, 1]` by at most the simplex tolerance and
    /// are clamped; each vector must sum to one within that tolerance.
    pub fn new(probs: Vec<Vec<T>>) -> Result<Self> {
        let tol = T::tol(SIMPLEX_TOL);
        let mut probs = probs;
        for (i, p) in probs.iter_mut().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidProfile(format!("player {i} has an empty vector")));
            }
            for (a, x) in p.iter_mut().enumerate() {
                if !x.is_finite() || *x < -tol || *x > T::one() + tol {
                    return Err(Error::InvalidProfile(format!(
                        "player {i} action {a}: probability {x} outside [0, 1]"
                    )));
                }
                *x = x.max(T::zero()).min(T::one());
            }
            let sum: T = p.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::InvalidProfile(format!(
                    "player {i}: probabilities sum to {sum}"
                )));
            }
            if sum != T::one() {
                for x in p.iter_mut() {
                    *x /= sum;
                }
            }
        }
        Ok(Self { probs })
    }

    /// Wraps vectors already known to lie on the simplices.
    pub(crate) fn from_raw(probs: Vec<Vec<T>>) -> Self {
        Self { probs }
    }

    pub fn uniform(actions: &[usize]) -> Self {
        let probs = actions
            .iter()
            .map(|&k| vec![T::one() / T::from_usize(k).unwrap(); k])
            .collect();
        Self { probs }
    }

    pub fn pure(actions: &[usize], profile: &PureProfile) -> Result<Self> {
        profile.validate(actions)?;
        let probs = actions
            .iter()
            .zip(&profile.actions)
            .map(|(&k, &a)| {
                let mut p = vec![T::zero(); k];
                p[a] = T::one();
                p
            })
            .collect();
        Ok(Self { probs })
    }

    pub fn num_players(&self) -> usize {
        self.probs.len()
    }

    pub fn player(&self, i: usize) -> &[T] {
        &self.probs[i]
    }

    pub fn probs(&self) -> &[Vec<T>] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<Vec<T>> {
        self.probs
    }

    /// Largest absolute coordinate difference.
    pub fn linf_distance(&self, other: &Self) -> T {
        self.probs
            .iter()
            .flatten()
            .zip(other.probs.iter().flatten())
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

impl PureProfile {
    pub fn new(actions: Vec<usize>) -> Self {
        Self { actions }
    }

    pub fn validate(&self, num_actions: &[usize]) -> Result<()> {
        if self.actions.len() != num_actions.len() {
            return Err(Error::Shape(format!(
                "pure profile has {} players, game has {}",
                self.actions.len(),
                num_actions.len()
            )));
        }
        for (&a, &k) in self.actions.iter().zip(num_actions) {
            if a >= k {
                return Err(Error::Index {
                    what: "action",
                    index: a,
                    size: k,
                });
            }
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn matching_pennies_uniform_is_zero() {
        let g = matching_pennies();
        let d = MixedProfile::uniform(g.actions());
        assert_eq!(g.expected_utility(0, &d).unwrap(), 0.0);
        assert_eq!(g.expected_utility(1, &d).unwrap(), 0.0);
    }

    #[test]
    fn one_hot_profile_recovers_entry() {
        let g: NormalFormGame<f64> = generate_random(&[2, 3, 2], 4).unwrap();
        for (flat, a) in g.profiles() {
            let d = MixedProfile::pure(g.actions(), &PureProfile::new(a.clone())).unwrap();
            for i in 0..3 {
                assert_eq!(g.expected_utility(i, &d).unwrap(), g.payoffs(i)[flat]);
            }
        }
    }

    #[test]
    fn three_player_uniform_is_slice_mean() {
        let g: NormalFormGame<f64> = generate_random(&[3, 3, 3], 1).unwrap();
        let d = MixedProfile::uniform(g.actions());
        for i in 0..3 {
            let mean = g.payoffs(i).iter().sum::<f64>() / 27.0;
            assert!((g.expected_utility(i, &d).unwrap() - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn deviation_payoff_examples() {
        let rps = rock_paper_scissors();
        let u = MixedProfile::uniform(rps.actions());
        for a in 0..3 {
            assert!(rps.deviation_payoff(0, a, &u).unwrap().abs() < 1e-15);
        }

        let coord = coordination();
        let d = MixedProfile::new(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert_eq!(coord.deviation_payoff(0, 1, &d).unwrap(), 1.0);

        let bos = battle_of_sexes();
        let d = MixedProfile::new(vec![vec![0.5, 0.5], vec![1.0 / 3.0, 2.0 / 3.0]]).unwrap();
        for a in 0..2 {
            assert!((bos.deviation_payoff(0, a, &d).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        }
        assert!(matches!(bos.deviation_payoff(0, 2, &d), Err(Error::Index { .. })));
        assert!(matches!(bos.deviation_payoff(2, 0, &d), Err(Error::Index { .. })));
    }

    #[test]
    fn exploitability_examples() {
        let rps = rock_paper_scissors();
        assert!(rps.exploitability(&MixedProfile::uniform(rps.actions())).unwrap().epsilon < 1e-15);
        let coord = coordination();
        assert_eq!(coord.exploitability(&MixedProfile::uniform(coord.actions())).unwrap().epsilon, 0.0);
        let mp = matching_pennies();
        let d = MixedProfile::pure(mp.actions(), &PureProfile::new(vec![0, 0])).unwrap();
        let e = mp.exploitability(&d).unwrap();
        assert_eq!(e.epsilon, 2.0);
        assert_eq!(e.per_player, vec![0.0, 2.0]);
    }

    #[test]
    fn shape_errors() {
        let g = matching_pennies();
        let d = MixedProfile::uniform(&[3, 2]);
        assert!(matches!(g.exploitability(&d), Err(Error::Shape(_))));
        assert!(matches!(g.expected_utility(0, &MixedProfile::uniform(&[2, 2, 2])), Err(Error::Shape(_))));
    }

    #[test]
    fn normalize_examples() {
        let coord = coordination();
        let (n, maps) = coord.normalize();
        assert_eq!(n, coord);
        assert!(maps.iter().all(|m| m.scale == 1.0 && m.shift == 0.0));

        let constant = NormalFormGame::from_fn(vec![2, 2], |i, _| if i == 0 { 5.0 } else { 1.0 + 0.0 }).unwrap();
        let (n, maps) = constant.normalize();
        assert!(n.payoffs(0).iter().all(|&u| u == 0.0));
        assert_eq!(maps[0].scale, 0.0);

        let mp = matching_pennies();
        let (n, maps) = mp.normalize();
        assert!(n.raw_utilities().iter().all(|&u| u == 0.0 || u == 1.0));
        assert_eq!(maps[0], AffineMap { scale: 0.5, shift: 0.5 });
        assert_eq!(maps[1], AffineMap { scale: 0.5, shift: 0.5 });
    }

    #[test]
    fn profile_validation() {
        let p = MixedProfile::new(vec![vec![0.5, 0.5 + 5e-10]]).unwrap();
        let s: f64 = p.player(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(MixedProfile::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(MixedProfile::new(vec![vec![-0.1, 1.1]]).is_err());
        assert!(MixedProfile::<f64>::new(vec![vec![]]).is_err());
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(NormalFormGame::new(vec![2], vec![0.0; 2]).is_err());
        assert!(NormalFormGame::<f64>::new(vec![2, 0], vec![]).is_err());
        assert!(NormalFormGame::new(vec![2, 2], vec![0.0; 7]).is_err());
        assert!(NormalFormGame::new(vec![2, 2], vec![f64::NAN; 8]).is_err());
        assert!(matches!(
            NormalFormGame::with_cap(vec![2, 2], vec![0.0; 8], 7),
            Err(Error::CapExceeded { entries: 8, cap: 7 })
        ));
    }

    #[test]
    fn single_action_players_are_allowed() {
        let g = NormalFormGame::from_fn(vec![3, 1], |i, a| (i + a[0]) as f64).unwrap();
        let d = MixedProfile::uniform(g.actions());
        assert_eq!(g.best_response_values(&d).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn f32_arithmetic_matches_f64() {
        let g: NormalFormGame<f64> = generate_random(&[3, 2, 2], 9).unwrap();
        let g32: NormalFormGame<f32> = g.cast();
        let d = MixedProfile::uniform(g.actions());
        let d32 = MixedProfile::uniform(g32.actions());
        let e = g.exploitability(&d).unwrap();
        let e32 = g32.exploitability(&d32).unwrap();
        assert!((e.epsilon - e32.epsilon as f64).abs() < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn game_and_profile() -> impl Strategy<Value = (NormalFormGame<f64>, MixedProfile<f64>)> {
            (prop::collection::vec(1usize..=3, 2..=3), any::<u64>()).prop_flat_map(|(actions, seed)| {
                let g: NormalFormGame<f64> = generate_random(&actions, seed).unwrap();
                let weights: Vec<_> = actions
                    .iter()
                    .map(|&k| prop::collection::vec(0.01f64..1.0, k))
                    .collect();
                (Just(g), weights).prop_map(|(g, w)| {
                    let probs = w
                        .into_iter()
                        .map(|v| {
                            let s: f64 = v.iter().sum();
                            v.into_iter().map(|x| x / s).collect()
                        })
                        .collect();
                    (g, MixedProfile::new(probs).unwrap())
                })
            })
        }

        proptest! {
            #[test]
            fn mixture_bracketed_by_deviations((g, d) in game_and_profile()) {
                let dev = g.deviation_payoffs(&d).unwrap();
                for i in 0..g.num_players() {
                    let u = g.expected_utility(i, &d).unwrap();
                    let lo = dev[i].iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = dev[i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(lo - 1e-12 <= u && u <= hi + 1e-12);
                }
            }

            #[test]
            fn exploitability_matches_enumerated_deviations((g, d) in game_and_profile()) {
                let e = g.exploitability(&d).unwrap();
                prop_assert!(e.epsilon >= 0.0);
                for i in 0..g.num_players() {
                    let u = g.expected_utility(i, &d).unwrap();
                    let mut best = f64::NEG_INFINITY;
                    for a in 0..g.num_actions(i) {
                        let mut probs = d.probs().to_vec();
                        probs[i] = vec![0.0; g.num_actions(i)];
                        probs[i][a] = 1.0;
                        let dev = MixedProfile::new(probs).unwrap();
                        best = best.max(g.expected_utility(i, &dev).unwrap());
                    }
                    prop_assert!((e.per_player[i] - (best - u).max(0.0)).abs() < 1e-12);
                }
            }

            #[test]
            fn normalization_scales_regret((g, d) in game_and_profile()) {
                let (ng, maps) = g.normalize();
                let e = g.exploitability(&d).unwrap();
                let ne = ng.exploitability(&d).unwrap();
                for i in 0..g.num_players() {
                    prop_assert!((ne.per_player[i] - maps[i].scale * e.per_player[i]).abs() < 1e-9);
                }
            }
        }
    }
}
