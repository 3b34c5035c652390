//! Which subsets of agents may be selected.
//!
//! Constraints are immutable, referenced by index set over `0..n`.
//! Four families are supported: top-k selection, matroids given by a rank
//! oracle, knapsacks, and small explicit set families. All of them answer
//! `is_feasible`, exact `max_weight_feasible` under nonnegative weights, and
//! deterministic lowest-index `pad_to_maximal`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};

/// Maximum ground-set size for explicit families (subset enumeration is
/// exponential).
pub const EXPLICIT_FAMILY_MAX_N: usize = 20;
/// Maximum instance size for the exact knapsack solver.
pub const KNAPSACK_MAX_N: usize = 30;

/// Matroid rank oracle over the ground set `0..n()`.
///
/// Implementations must be pure functions of the subset. The built-in
/// constructors spot-check the rank axioms on random subsets at
/// construction time.
pub trait RankOracle: Send + Sync {
    fn n(&self) -> usize;
    /// Rank of the subset given as a membership mask of length `n()`.
    fn rank(&self, members: &[bool]) -> usize;
}

/// Free-selection-of-`r` matroid: `rank(S) = min(|S|, r)`.
#[derive(Debug, Clone)]
pub struct UniformMatroid {
    pub n: usize,
    pub r: usize,
}

impl RankOracle for UniformMatroid {
    fn n(&self) -> usize {
        self.n
    }

    fn rank(&self, members: &[bool]) -> usize {
        let size = members.iter().filter(|&&m| m).count();
        size.min(self.r)
    }
}

/// Partition matroid: element `i` belongs to `part_of[i]`, and part `p`
/// contributes at most `caps[p]` elements.
#[derive(Debug, Clone)]
pub struct PartitionMatroid {
    pub part_of: Vec<usize>,
    pub caps: Vec<usize>,
}

impl RankOracle for PartitionMatroid {
    fn n(&self) -> usize {
        self.part_of.len()
    }

    fn rank(&self, members: &[bool]) -> usize {
        let mut counts = vec![0usize; self.caps.len()];
        for (i, &m) in members.iter().enumerate() {
            if m {
                counts[self.part_of[i]] += 1;
            }
        }
        counts.iter().zip(&self.caps).map(|(&c, &cap)| c.min(cap)).sum()
    }
}

/// Graphic matroid: elements are edges of an undirected multigraph;
/// `rank(S) = vertices touched − connected components of S`.
#[derive(Debug, Clone)]
pub struct GraphicMatroid {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl RankOracle for GraphicMatroid {
    fn n(&self) -> usize {
        self.edges.len()
    }

    fn rank(&self, members: &[bool]) -> usize {
        // Union-find over the selected edges; rank = selected − cycles.
        let mut parent: Vec<usize> = (0..self.n_vertices).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut rank = 0;
        for (i, &m) in members.iter().enumerate() {
            if m {
                let (a, b) = self.edges[i];
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                    rank += 1;
                }
            }
        }
        rank
    }
}

/// A feasible-set system over agents `0..n`.
#[derive(Clone)]
pub enum FeasibilityConstraint {
    /// All subsets of size at most `k`.
    KofN { n: usize, k: usize },
    /// Independent sets of a matroid.
    Matroid(Arc<dyn RankOracle>),
    /// Subsets whose total size fits the capacity.
    Knapsack { sizes: Vec<f64>, capacity: f64 },
    /// An explicit list of feasible sets (n ≤ 20). When `downward_closed`
    /// is set, every subset of a listed set is feasible too.
    ExplicitFamily { n: usize, sets: Vec<BTreeSet<usize>>, downward_closed: bool },
}

impl std::fmt::Debug for FeasibilityConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeasibilityConstraint::KofN { n, k } => write!(f, "KofN {{ n: {n}, k: {k} }}"),
            FeasibilityConstraint::Matroid(m) => write!(f, "Matroid {{ n: {} }}", m.n()),
            FeasibilityConstraint::Knapsack { sizes, capacity } => {
                write!(f, "Knapsack {{ n: {}, capacity: {capacity} }}", sizes.len())
            }
            FeasibilityConstraint::ExplicitFamily { n, sets, downward_closed } => write!(
                f,
                "ExplicitFamily {{ n: {n}, sets: {}, downward_closed: {downward_closed} }}",
                sets.len()
            ),
        }
    }
}

fn mask_of(n: usize, subset: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &i in subset {
        if i >= n {
            return Err(Error::domain(format!("agent index {i} out of range (n = {n})")));
        }
        if mask[i] {
            return Err(Error::domain(format!("agent index {i} repeated in subset")));
        }
        mask[i] = true;
    }
    Ok(mask)
}

impl FeasibilityConstraint {
    pub fn k_of_n(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("k-of-n constraint needs at least one agent"));
        }
        if !(1..=n).contains(&k) {
            return Err(Error::domain(format!("k must satisfy 1 <= k <= n, got k = {k}, n = {n}")));
        }
        Ok(FeasibilityConstraint::KofN { n, k })
    }

    /// Wraps a rank oracle, spot-checking the rank axioms (normalization,
    /// unit increments, monotonicity, submodularity) on random subsets.
    pub fn matroid(oracle: Arc<dyn RankOracle>) -> Result<Self> {
        let n = oracle.n();
        if n == 0 {
            return Err(Error::domain("matroid ground set is empty"));
        }
        spot_check_rank_axioms(oracle.as_ref())?;
        Ok(FeasibilityConstraint::Matroid(oracle))
    }

    pub fn knapsack(sizes: Vec<f64>, capacity: f64) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::domain("knapsack needs at least one agent"));
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(Error::domain("knapsack capacity must be positive"));
        }
        if sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::domain("knapsack sizes must be positive"));
        }
        Ok(FeasibilityConstraint::Knapsack { sizes, capacity })
    }

    pub fn explicit(n: usize, sets: Vec<BTreeSet<usize>>, downward_closed: bool) -> Result<Self> {
        if n == 0 || n > EXPLICIT_FAMILY_MAX_N {
            return Err(Error::SizeLimit(format!(
                "explicit families support 1..={EXPLICIT_FAMILY_MAX_N} agents, got {n}"
            )));
        }
        for s in &sets {
            if let Some(&max) = s.iter().next_back() {
                if max >= n {
                    return Err(Error::domain(format!("set member {max} out of range (n = {n})")));
                }
            }
        }
        if sets.is_empty() {
            return Err(Error::Infeasible("explicit family lists no feasible set".into()));
        }
        Ok(FeasibilityConstraint::ExplicitFamily { n, sets, downward_closed })
    }

    /// Number of agents in the ground set.
    pub fn n(&self) -> usize {
        match self {
            FeasibilityConstraint::KofN { n, .. } => *n,
            FeasibilityConstraint::Matroid(m) => m.n(),
            FeasibilityConstraint::Knapsack { sizes, .. } => sizes.len(),
            FeasibilityConstraint::ExplicitFamily { n, .. } => *n,
        }
    }

    /// Whether every subset of a feasible set is feasible.
    pub fn is_downward_closed(&self) -> bool {
        match self {
            FeasibilityConstraint::ExplicitFamily { downward_closed, .. } => *downward_closed,
            _ => true,
        }
    }

    /// Membership test. Subsets are given as index lists (order-free,
    /// duplicates rejected).
    pub fn is_feasible(&self, subset: &[usize]) -> Result<bool> {
        let mask = mask_of(self.n(), subset)?;
        Ok(self.is_feasible_mask(&mask))
    }

    pub(crate) fn is_feasible_mask(&self, mask: &[bool]) -> bool {
        let size = mask.iter().filter(|&&m| m).count();
        match self {
            FeasibilityConstraint::KofN { k, .. } => size <= *k,
            FeasibilityConstraint::Matroid(m) => m.rank(mask) == size,
            FeasibilityConstraint::Knapsack { sizes, capacity } => {
                let total: f64 = mask
                    .iter()
                    .zip(sizes)
                    .filter(|(&m, _)| m)
                    .map(|(_, &s)| s)
                    .sum();
                total <= *capacity
            }
            FeasibilityConstraint::ExplicitFamily { sets, downward_closed, .. } => {
                let as_set: BTreeSet<usize> =
                    mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
                if *downward_closed {
                    sets.iter().any(|s| as_set.is_subset(s))
                } else {
                    sets.iter().any(|s| *s == as_set)
                }
            }
        }
    }

    /// Number of feasible subsets, where cheaply countable: closed form for
    /// k-of-n, exact enumeration for explicit families. Matroids and
    /// knapsacks return `None`.
    pub fn feasible_count(&self) -> Option<u128> {
        match self {
            FeasibilityConstraint::KofN { n, k } => {
                let mut total: u128 = 0;
                let mut binom: u128 = 1;
                for j in 0..=(*k).min(*n) {
                    if j > 0 {
                        binom = binom.checked_mul((*n - j + 1) as u128)? / j as u128;
                    }
                    total = total.checked_add(binom)?;
                }
                Some(total)
            }
            FeasibilityConstraint::ExplicitFamily { n, sets, downward_closed } => {
                if !downward_closed {
                    let distinct: BTreeSet<&BTreeSet<usize>> = sets.iter().collect();
                    return Some(distinct.len() as u128);
                }
                let masks: Vec<u32> = sets
                    .iter()
                    .map(|s| s.iter().fold(0u32, |m, &i| m | (1 << i)))
                    .collect();
                let mut count: u128 = 0;
                for candidate in 0u32..(1u32 << n) {
                    if masks.iter().any(|&m| candidate & !m == 0) {
                        count += 1;
                    }
                }
                Some(count)
            }
            _ => None,
        }
    }

    /// For a matroid constraint on a dependent subset: an inclusion-minimal
    /// dependent subset (circuit). `Ok(None)` when the subset is independent.
    pub fn find_circuit(&self, subset: &[usize]) -> Result<Option<Vec<usize>>> {
        let FeasibilityConstraint::Matroid(oracle) = self else {
            return Err(Error::Unsupported("find_circuit applies to matroid constraints".into()));
        };
        let mut mask = mask_of(self.n(), subset)?;
        let size = mask.iter().filter(|&&m| m).count();
        if oracle.rank(&mask) == size {
            return Ok(None);
        }
        // Drop elements (ascending index) whenever dependence survives
        // without them; what remains is inclusion-minimal dependent.
        let mut kept = size;
        for i in 0..mask.len() {
            if !mask[i] {
                continue;
            }
            mask[i] = false;
            if oracle.rank(&mask) < kept - 1 {
                kept -= 1; // still dependent without i
            } else {
                mask[i] = true; // i is needed for dependence
            }
        }
        Ok(Some(mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()))
    }

    /// Exact maximum-weight feasible subset under nonnegative weights.
    /// Ties are broken toward lower agent indices.
    pub fn max_weight_feasible(&self, weights: &[f64]) -> Result<(Vec<usize>, f64)> {
        if weights.len() != self.n() {
            return Err(Error::domain("weights length must equal the number of agents"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("weights must be finite and nonnegative"));
        }
        let chosen: Vec<usize> = match self {
            FeasibilityConstraint::KofN { n, k } => {
                let mut order: Vec<usize> = (0..*n).collect();
                order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
                let mut top: Vec<usize> = order.into_iter().take(*k).collect();
                top.sort_unstable();
                top
            }
            FeasibilityConstraint::Matroid(oracle) => {
                let mut order: Vec<usize> = (0..oracle.n()).collect();
                order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
                let mut mask = vec![false; oracle.n()];
                let mut rank = 0;
                let mut picked = Vec::new();
                for i in order {
                    mask[i] = true;
                    let r = oracle.rank(&mask);
                    if r > rank {
                        rank = r;
                        picked.push(i);
                    } else {
                        mask[i] = false;
                    }
                }
                picked.sort_unstable();
                picked
            }
            FeasibilityConstraint::Knapsack { sizes, capacity } => {
                knapsack_branch_and_bound(weights, sizes, *capacity)?
            }
            FeasibilityConstraint::ExplicitFamily { sets, .. } => {
                // Weights are nonnegative, so a maximal listed set dominates
                // its subsets; scanning the listed sets suffices either way.
                let mut best: Option<(f64, &BTreeSet<usize>)> = None;
                for s in sets {
                    let w: f64 = s.iter().map(|&i| weights[i]).sum();
                    if best.is_none_or(|(bw, _)| w > bw) {
                        best = Some((w, s));
                    }
                }
                best.expect("explicit families are non-empty").1.iter().copied().collect()
            }
        };
        let total = subset_weight(&chosen, weights);
        Ok((chosen, total))
    }

    /// Extends a feasible subset to a maximal feasible superset by
    /// repeatedly adding the lowest-index agent that keeps feasibility.
    ///
    /// For non-downward-closed explicit families the extension tracks the
    /// listed supersets; a feasible input that is contained in no listed set
    /// is an infeasibility error.
    pub fn pad_to_maximal(&self, subset: &[usize]) -> Result<Vec<usize>> {
        let n = self.n();
        let mut mask = mask_of(n, subset)?;
        match self {
            FeasibilityConstraint::ExplicitFamily { sets, .. } => {
                let as_set: BTreeSet<usize> =
                    subset.iter().copied().collect();
                if !sets.iter().any(|s| as_set.is_subset(s)) {
                    return Err(Error::Infeasible(
                        "subset is contained in no listed feasible set".into(),
                    ));
                }
                let mut current = as_set;
                loop {
                    let next = (0..n).find(|i| {
                        !current.contains(i)
                            && sets.iter().any(|s| {
                                s.contains(i) && current.is_subset(s)
                            })
                    });
                    match next {
                        Some(i) => {
                            current.insert(i);
                        }
                        None => break,
                    }
                }
                Ok(current.into_iter().collect())
            }
            _ => {
                if !self.is_feasible_mask(&mask) {
                    return Err(Error::Infeasible("cannot pad an infeasible subset".into()));
                }
                loop {
                    let mut grew = false;
                    for i in 0..n {
                        if mask[i] {
                            continue;
                        }
                        mask[i] = true;
                        if self.is_feasible_mask(&mask) {
                            grew = true;
                            break;
                        }
                        mask[i] = false;
                    }
                    if !grew {
                        break;
                    }
                }
                Ok(mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect())
            }
        }
    }
}

/// Total weight of a subset, summed in ascending index order so results are
/// reproducible bit for bit.
pub fn subset_weight(subset: &[usize], weights: &[f64]) -> f64 {
    let mut sorted: Vec<usize> = subset.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|&i| weights[i]).sum()
}

/// Exact 0/1 knapsack by depth-first branch and bound with the fractional
/// relaxation as bound. Deterministic: items are explored in bang-per-buck
/// order, include-branch first, and only strict improvements replace the
/// incumbent.
fn knapsack_branch_and_bound(
    weights: &[f64],
    sizes: &[f64],
    capacity: f64,
) -> Result<Vec<usize>> {
    let n = weights.len();
    if n > KNAPSACK_MAX_N {
        return Err(Error::SizeLimit(format!(
            "exact knapsack supports up to {KNAPSACK_MAX_N} agents, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        (weights[b] / sizes[b]).total_cmp(&(weights[a] / sizes[a])).then(a.cmp(&b))
    });

    struct Search<'a> {
        order: &'a [usize],
        weights: &'a [f64],
        sizes: &'a [f64],
        best: f64,
        best_set: Vec<usize>,
        current: Vec<usize>,
    }

    impl Search<'_> {
        fn fractional_bound(&self, mut pos: usize, mut room: f64) -> f64 {
            let mut bound = 0.0;
            while pos < self.order.len() && room > 0.0 {
                let i = self.order[pos];
                if self.sizes[i] <= room {
                    bound += self.weights[i];
                    room -= self.sizes[i];
                } else {
                    bound += self.weights[i] * room / self.sizes[i];
                    room = 0.0;
                }
                pos += 1;
            }
            bound
        }

        fn dfs(&mut self, pos: usize, room: f64, value: f64) {
            if value > self.best {
                self.best = value;
                self.best_set = self.current.clone();
            }
            if pos == self.order.len() {
                return;
            }
            if value + self.fractional_bound(pos, room) <= self.best {
                return;
            }
            let i = self.order[pos];
            if self.sizes[i] <= room {
                self.current.push(i);
                self.dfs(pos + 1, room - self.sizes[i], value + self.weights[i]);
                self.current.pop();
            }
            self.dfs(pos + 1, room, value);
        }
    }

    let mut search = Search {
        order: &order,
        weights,
        sizes,
        best: -1.0,
        best_set: Vec::new(),
        current: Vec::new(),
    };
    search.dfs(0, capacity, 0.0);
    let mut set = search.best_set;
    set.sort_unstable();
    Ok(set)
}

/// Spot-checks the matroid rank axioms on random subsets; deterministic
/// seed so construction never flakes.
fn spot_check_rank_axioms(oracle: &dyn RankOracle) -> Result<()> {
    let n = oracle.n();
    let empty = vec![false; n];
    if oracle.rank(&empty) != 0 {
        return Err(Error::domain("rank oracle violates rank(∅) = 0"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED_0A10);
    for _ in 0..64 {
        let mut a: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        let mut b = a.clone();
        // B ⊇ A by flipping some elements on.
        for bit in b.iter_mut() {
            if rng.random::<f64>() < 0.3 {
                *bit = true;
            }
        }
        let e = rng.random_range(0..n);
        let (ra, rb) = (oracle.rank(&a) as isize, oracle.rank(&b) as isize);
        if rb < ra {
            return Err(Error::domain("rank oracle violates monotonicity"));
        }
        if ra > a.iter().filter(|&&m| m).count() as isize {
            return Err(Error::domain("rank oracle exceeds subset size"));
        }
        if !a[e] {
            a[e] = true;
            let ra_e = oracle.rank(&a) as isize;
            a[e] = false;
            if !(ra_e == ra || ra_e == ra + 1) {
                return Err(Error::domain("rank oracle violates unit increments"));
            }
            if !b[e] {
                b[e] = true;
                let rb_e = oracle.rank(&b) as isize;
                b[e] = false;
                if ra_e - ra < rb_e - rb {
                    return Err(Error::domain("rank oracle violates submodularity"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_of_n_basics() {
        let c = FeasibilityConstraint::k_of_n(5, 2).unwrap();
        assert!(c.is_feasible(&[0, 3]).unwrap());
        assert!(!c.is_feasible(&[0, 1, 2]).unwrap());
        // 1 + 5 + 10 subsets of size ≤ 2.
        assert_eq!(c.feasible_count(), Some(16));
        let (set, total) = c.max_weight_feasible(&[5.0, 2.0, 9.0, 9.0, 1.0]).unwrap();
        assert_eq!(set, vec![2, 3]);
        assert_eq!(total, 18.0);
        assert_eq!(c.pad_to_maximal(&[3]).unwrap(), vec![0, 3]);
    }

    #[test]
    fn top_k_tie_prefers_lowest_index() {
        let c = FeasibilityConstraint::k_of_n(3, 1).unwrap();
        let (set, _) = c.max_weight_feasible(&[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(set, vec![0]);
    }

    #[test]
    fn graphic_matroid_cycle() {
        let triangle = GraphicMatroid { n_vertices: 3, edges: vec![(0, 1), (1, 2), (2, 0)] };
        let c = FeasibilityConstraint::matroid(Arc::new(triangle)).unwrap();
        assert!(c.is_feasible(&[0, 1]).unwrap());
        assert!(!c.is_feasible(&[0, 1, 2]).unwrap());
        let circuit = c.find_circuit(&[0, 1, 2]).unwrap().unwrap();
        assert_eq!(circuit, vec![0, 1, 2]);
        assert_eq!(c.find_circuit(&[0, 1]).unwrap(), None);
        let (basis, total) = c.max_weight_feasible(&[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(basis, vec![0, 1]);
        assert_eq!(total, 5.0);
    }

    #[test]
    fn partition_matroid_caps() {
        let m = PartitionMatroid { part_of: vec![0, 0, 1, 1], caps: vec![1, 2] };
        let c = FeasibilityConstraint::matroid(Arc::new(m)).unwrap();
        assert!(c.is_feasible(&[0, 2, 3]).unwrap());
        assert!(!c.is_feasible(&[0, 1]).unwrap());
        assert_eq!(c.pad_to_maximal(&[1]).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn knapsack_exact_and_padding() {
        let c = FeasibilityConstraint::knapsack(vec![3.0, 4.0, 5.0], 7.0).unwrap();
        assert!(c.is_feasible(&[0, 1]).unwrap());
        assert!(!c.is_feasible(&[1, 2]).unwrap());
        let (set, total) = c.max_weight_feasible(&[3.0, 4.0, 5.0]).unwrap();
        assert_eq!(set, vec![0, 1]);
        assert_eq!(total, 7.0);
        assert_eq!(c.pad_to_maximal(&[2]).unwrap(), vec![2]);
        assert_eq!(c.pad_to_maximal(&[]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn knapsack_beats_greedy() {
        // Bang-per-buck greedy would take item 0 and stop; optimum is {1, 2}.
        let c = FeasibilityConstraint::knapsack(vec![1.0, 2.0, 2.0], 4.0).unwrap();
        let (set, total) = c.max_weight_feasible(&[1.6, 2.0, 2.0]).unwrap();
        assert_eq!(set, vec![1, 2]);
        assert_eq!(total, 4.0);
    }

    #[test]
    fn explicit_family_membership_and_padding() {
        let sets = vec![BTreeSet::from([0, 1]), BTreeSet::from([2])];
        let c = FeasibilityConstraint::explicit(3, sets, false).unwrap();
        assert!(c.is_feasible(&[0, 1]).unwrap());
        assert!(!c.is_feasible(&[0]).unwrap());
        assert_eq!(c.feasible_count(), Some(2));
        assert_eq!(c.pad_to_maximal(&[0]).unwrap(), vec![0, 1]);
        assert!(c.pad_to_maximal(&[0, 2]).is_err());

        let sets = vec![BTreeSet::from([0, 1]), BTreeSet::from([2])];
        let c = FeasibilityConstraint::explicit(3, sets, true).unwrap();
        assert!(c.is_feasible(&[0]).unwrap());
        // ∅, {0}, {1}, {0,1}, {2}
        assert_eq!(c.feasible_count(), Some(5));
    }

    #[test]
    fn circuit_is_minimal() {
        // Two triangles sharing no edge; a subset covering both contains two
        // circuits, and the reported one must be a single minimal cycle.
        let g = GraphicMatroid {
            n_vertices: 6,
            edges: vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)],
        };
        let c = FeasibilityConstraint::matroid(Arc::new(g)).unwrap();
        let circuit = c.find_circuit(&[0, 1, 2, 3, 4, 5]).unwrap().unwrap();
        assert_eq!(circuit.len(), 3);
        assert!(!c.is_feasible(&circuit).unwrap());
    }
}
