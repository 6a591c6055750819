//! Permutation distances, the Mallows distribution and its samplers.
//!
//! A [`Ranking`] is a permutation of `1..=n`; slot `i` holds the item placed
//! there. Distances compare where each item sits in two rankings, so they are
//! invariant under a common relabelling of items.

use std::fmt;

use itertools::Itertools;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest `n` for which the footrule normalizer is computed by enumeration.
pub const MAX_FOOTRULE_ENUMERATION: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ranking {
    items: Vec<usize>,
}

impl Ranking {
    /// Validates that `items` is a permutation of `1..=items.len()`.
    pub fn new(items: Vec<usize>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("a ranking needs at least one item"));
        }
        let n = items.len();
        let mut seen = vec![false; n];
        for &item in &items {
            if item == 0 || item > n {
                return Err(Error::invalid(format!("item {item} outside 1..={n}")));
            }
            if std::mem::replace(&mut seen[item - 1], true) {
                return Err(Error::invalid(format!("item {item} appears twice")));
            }
        }
        Ok(Ranking { items })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a ranking needs at least one item"));
        }
        Ok(Ranking {
            items: (1..=n).collect(),
        })
    }

    pub(crate) fn from_vec_unchecked(items: Vec<usize>) -> Self {
        debug_assert!(Ranking::new(items.clone()).is_ok());
        Ranking { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn into_items(self) -> Vec<usize> {
        self.items
    }

    /// `positions()[item - 1]` is the zero-based slot holding `item`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.items.len()];
        for (slot, &item) in self.items.iter().enumerate() {
            pos[item - 1] = slot;
        }
        pos
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.items.iter().join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    KendallTau,
    SpearmanFootrule,
}

impl DistanceKind {
    pub fn distance(self, a: &Ranking, b: &Ranking) -> Result<u64> {
        match self {
            DistanceKind::KendallTau => kendall_tau(a, b),
            DistanceKind::SpearmanFootrule => spearman_footrule(a, b),
        }
    }
}

fn check_lengths(a: &Ranking, b: &Ranking) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rankings have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Number of item pairs ordered differently by `a` and `b`.
///
/// Maps `a` into `b`'s slot coordinates and counts inversions with a
/// bottom-up merge sort, O(n log n).
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<u64> {
    check_lengths(a, b)?;
    let pos_b = b.positions();
    let mut seq: Vec<usize> = a.items.iter().map(|&item| pos_b[item - 1]).collect();
    Ok(count_inversions(&mut seq))
}

fn count_inversions(seq: &mut [usize]) -> u64 {
    let n = seq.len();
    let mut buf = vec![0; n];
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if seq[i] <= seq[j] {
                    buf[k] = seq[i];
                    i += 1;
                } else {
                    buf[k] = seq[j];
                    inversions += (mid - i) as u64;
                    j += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&seq[i..mid]);
            k += mid - i;
            buf[k..k + (end - j)].copy_from_slice(&seq[j..end]);
            start = end;
        }
        seq.copy_from_slice(&buf);
        width *= 2;
    }
    inversions
}

/// Sum over items of the absolute difference between their slots in `a` and `b`.
pub fn spearman_footrule(a: &Ranking, b: &Ranking) -> Result<u64> {
    check_lengths(a, b)?;
    let pos_b = b.positions();
    Ok(a.items
        .iter()
        .enumerate()
        .map(|(slot, &item)| slot.abs_diff(pos_b[item - 1]) as u64)
        .sum())
}

fn check_phi(phi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::invalid(format!("phi = {phi} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MallowsParams {
    center: Ranking,
    phi: f64,
    kind: DistanceKind,
}

impl MallowsParams {
    pub fn new(center: Ranking, phi: f64, kind: DistanceKind) -> Result<Self> {
        check_phi(phi)?;
        Ok(MallowsParams { center, phi, kind })
    }

    pub fn kendall(center: Ranking, phi: f64) -> Result<Self> {
        Self::new(center, phi, DistanceKind::KendallTau)
    }

    pub fn center(&self) -> &Ranking {
        &self.center
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }
}

/// `ln(1 + phi + ... + phi^(j-1))`, accurate for `phi` close to 1.
fn ln_geometric_sum(phi: f64, j: usize) -> f64 {
    if phi == 1.0 {
        return (j as f64).ln();
    }
    if phi == 0.0 {
        return 0.0;
    }
    let one_minus = 1.0 - phi;
    let numer = -((j as f64) * (-one_minus).ln_1p()).exp_m1();
    (numer / one_minus).ln()
}

/// Natural log of the Kendall-tau Mallows normalizer.
///
/// Usable for large `n`, where the normalizer itself overflows.
pub fn ln_mallows_normalizer(n: usize, phi: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    check_phi(phi)?;
    Ok((1..=n).map(|j| ln_geometric_sum(phi, j)).sum())
}

/// Kendall-tau Mallows normalizer `prod_j (1 - phi^j) / (1 - phi)`; `n!` at `phi = 1`.
pub fn mallows_normalizer(n: usize, phi: f64) -> Result<f64> {
    ln_mallows_normalizer(n, phi).map(f64::exp)
}

/// Footrule Mallows normalizer by exhaustive enumeration of `S_n`.
///
/// The sum does not depend on the center, so the identity is used.
pub fn footrule_normalizer(n: usize, phi: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    check_phi(phi)?;
    if n > MAX_FOOTRULE_ENUMERATION {
        return Err(Error::Unsupported(format!(
            "footrule normalizer needs enumeration of {n}! permutations (limit n <= {MAX_FOOTRULE_ENUMERATION})"
        )));
    }
    Ok((0..n)
        .permutations(n)
        .map(|perm| {
            let d: usize = perm.iter().enumerate().map(|(i, &p)| i.abs_diff(p)).sum();
            phi.powi(d as i32)
        })
        .sum())
}

fn pmf_from_distance(d: u64, phi: f64, ln_z: f64) -> f64 {
    if phi == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    ((d as f64) * phi.ln() - ln_z).exp()
}

/// Kendall-tau Mallows probability of `r`.
///
/// Footrule parameters are rejected; use [`mallows_pmf_with_normalizer`]
/// together with [`footrule_normalizer`].
pub fn mallows_pmf(r: &Ranking, params: &MallowsParams) -> Result<f64> {
    if params.kind != DistanceKind::KendallTau {
        return Err(Error::Unsupported(
            "footrule Mallows pmf needs a precomputed normalizer".into(),
        ));
    }
    let d = kendall_tau(r, &params.center)?;
    let ln_z = ln_mallows_normalizer(r.len(), params.phi)?;
    Ok(pmf_from_distance(d, params.phi, ln_z))
}

/// Mallows probability of `r` under any distance, given its normalizer.
pub fn mallows_pmf_with_normalizer(
    r: &Ranking,
    params: &MallowsParams,
    normalizer: f64,
) -> Result<f64> {
    if !(normalizer.is_finite() && normalizer > 0.0) {
        return Err(Error::invalid(format!(
            "normalizer {normalizer} must be positive"
        )));
    }
    let d = params.kind.distance(r, &params.center)?;
    Ok(pmf_from_distance(d, params.phi, normalizer.ln()))
}

/// Draws from `P(k) ∝ phi^k`, `k = 0..slots`.
fn truncated_geometric<R: Rng + ?Sized>(rng: &mut R, phi: f64, ln_phi: f64, slots: usize) -> usize {
    if slots <= 1 || phi == 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    let k = if phi == 1.0 {
        (u * slots as f64) as usize
    } else {
        let mass = -((slots as f64) * ln_phi).exp_m1();
        ((-u * mass).ln_1p() / ln_phi).floor() as usize
    };
    k.min(slots - 1)
}

/// Order-statistic tree over free slots.
struct FreeSlots {
    tree: Vec<usize>,
    top_bit: usize,
}

impl FreeSlots {
    fn all_free(n: usize) -> Self {
        let mut tree = vec![0; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        let top_bit = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        FreeSlots { tree, top_bit }
    }

    /// Claims the `k`-th (1-based) free slot and returns its zero-based index.
    fn take_kth(&mut self, mut k: usize) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < k {
                pos = next;
                k -= self.tree[next];
            }
            step >>= 1;
        }
        let slot = pos + 1;
        let mut i = slot;
        while i <= n {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
        slot - 1
    }
}

/// Exact Kendall-tau Mallows draw by repeated insertion.
///
/// The `i`-th item of the center is inserted `k` places before the end of the
/// partial list with probability proportional to `phi^k`; each displacement
/// creates exactly `k` discordant pairs. Insertion positions are resolved
/// afterwards, last item first, so a draw costs O(n log n).
pub fn sample_rim<R: Rng + ?Sized>(params: &MallowsParams, rng: &mut R) -> Result<Ranking> {
    if params.kind != DistanceKind::KendallTau {
        return Err(Error::Unsupported(
            "repeated insertion samples the Kendall-tau model only; use sample_mh".into(),
        ));
    }
    let center = params.center.items();
    let n = center.len();
    let ln_phi = (params.phi - 1.0).ln_1p();
    let insert_at: Vec<usize> = (1..=n)
        .map(|i| i - truncated_geometric(rng, params.phi, ln_phi, i))
        .collect();

    let mut free = FreeSlots::all_free(n);
    let mut out = vec![0; n];
    for i in (0..n).rev() {
        out[free.take_kth(insert_at[i])] = center[i];
    }
    Ok(Ranking::from_vec_unchecked(out))
}

/// Default Metropolis chain length for a ranking of `n` items.
pub fn default_mh_steps(n: usize) -> usize {
    20 * n * n
}

/// Metropolis chain over adjacent transpositions, started at the center.
///
/// Each step picks one of `n` proposals uniformly: a swap of slots `i, i+1`
/// for `i < n - 1`, or staying put. The hold move keeps the chain aperiodic
/// at `phi = 1`, where every swap is accepted.
pub fn sample_mh<R: Rng + ?Sized>(
    params: &MallowsParams,
    rng: &mut R,
    steps: usize,
) -> Result<Ranking> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let mut state = params.center.items().to_vec();
    let n = state.len();
    if n == 1 {
        return Ok(params.center.clone());
    }
    let target = params.center.positions();
    let phi = params.phi;
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        if i == n - 1 {
            continue;
        }
        let (a, b) = (state[i] - 1, state[i + 1] - 1);
        let delta: i64 = match params.kind {
            DistanceKind::KendallTau => {
                if target[a] < target[b] {
                    1
                } else {
                    -1
                }
            }
            DistanceKind::SpearmanFootrule => {
                let before = i.abs_diff(target[a]) + (i + 1).abs_diff(target[b]);
                let after = (i + 1).abs_diff(target[a]) + i.abs_diff(target[b]);
                after as i64 - before as i64
            }
        };
        let accept = delta <= 0 || rng.random::<f64>() < phi.powi(delta as i32);
        if accept {
            state.swap(i, i + 1);
        }
    }
    Ok(Ranking::from_vec_unchecked(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn r(items: &[usize]) -> Ranking {
        Ranking::new(items.to_vec()).unwrap()
    }

    fn brute_kendall(a: &Ranking, b: &Ranking) -> u64 {
        let (pa, pb) = (a.positions(), b.positions());
        let n = a.len();
        let mut d = 0;
        for x in 0..n {
            for y in x + 1..n {
                if (pa[x] < pa[y]) != (pb[x] < pb[y]) {
                    d += 1;
                }
            }
        }
        d
    }

    fn all_rankings(n: usize) -> Vec<Ranking> {
        (1..=n)
            .permutations(n)
            .map(Ranking::from_vec_unchecked)
            .collect()
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::new(vec![]).is_err());
        assert!(Ranking::new(vec![1, 1]).is_err());
        assert!(Ranking::new(vec![0, 1]).is_err());
        assert!(Ranking::new(vec![1, 3]).is_err());
        assert_eq!(r(&[2, 3, 1]).positions(), vec![2, 0, 1]);
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&r(&[1, 2, 3]), &r(&[1, 2, 3])).unwrap(), 0);
        assert_eq!(kendall_tau(&r(&[1, 2, 3]), &r(&[3, 2, 1])).unwrap(), 3);
        let a = r(&[5, 1, 3, 2, 6, 4]);
        let id = Ranking::identity(6).unwrap();
        assert_eq!(brute_kendall(&a, &id), 6);
        assert_eq!(kendall_tau(&a, &id).unwrap(), 6);
        assert!(kendall_tau(&a, &r(&[1, 2])).is_err());
    }

    #[test]
    fn footrule_examples() {
        assert_eq!(
            spearman_footrule(&r(&[1, 2, 3]), &r(&[1, 2, 3])).unwrap(),
            0
        );
        assert_eq!(
            spearman_footrule(&r(&[1, 2, 3]), &r(&[3, 2, 1])).unwrap(),
            4
        );
        assert_eq!(
            spearman_footrule(&r(&[2, 1, 3]), &r(&[1, 2, 3])).unwrap(),
            2
        );
        assert!(spearman_footrule(&r(&[1]), &r(&[1, 2])).is_err());
    }

    #[test]
    fn normalizer_examples() {
        assert_relative_eq!(mallows_normalizer(3, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            mallows_normalizer(3, 1.0).unwrap(),
            6.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            mallows_normalizer(3, 0.5).unwrap(),
            2.625,
            max_relative = 1e-12
        );
        assert!(mallows_normalizer(3, 1.5).is_err());
        assert!(mallows_normalizer(3, -0.1).is_err());
        assert!(mallows_normalizer(0, 0.5).is_err());
        // stays finite in log space at sweep sizes
        assert!(ln_mallows_normalizer(600, 0.999).unwrap().is_finite());
    }

    #[test]
    fn pmf_examples() {
        let id3 = Ranking::identity(3).unwrap();
        for n in 1..6 {
            let c = Ranking::identity(n).unwrap();
            let p = MallowsParams::kendall(c.clone(), 0.0).unwrap();
            assert_eq!(mallows_pmf(&c, &p).unwrap(), 1.0);
        }
        let p = MallowsParams::kendall(id3.clone(), 0.5).unwrap();
        assert_relative_eq!(
            mallows_pmf(&id3, &p).unwrap(),
            1.0 / 2.625,
            max_relative = 1e-12
        );
        let p = MallowsParams::kendall(id3.clone(), 1.0).unwrap();
        for x in all_rankings(3) {
            assert_relative_eq!(
                mallows_pmf(&x, &p).unwrap(),
                1.0 / 6.0,
                max_relative = 1e-12
            );
        }
        let f = MallowsParams::new(id3.clone(), 0.5, DistanceKind::SpearmanFootrule).unwrap();
        assert!(matches!(mallows_pmf(&id3, &f), Err(Error::Unsupported(_))));
    }

    #[test]
    fn pmf_sums_to_one_by_enumeration() {
        for n in 1..=7 {
            let all = all_rankings(n);
            for &phi in &[0.0, 0.3, 0.8, 1.0] {
                let p = MallowsParams::kendall(Ranking::identity(n).unwrap(), phi).unwrap();
                let total: f64 = all.iter().map(|x| mallows_pmf(x, &p).unwrap()).sum();
                assert!((total - 1.0).abs() < 1e-12, "n={n} phi={phi} total={total}");
            }
        }
    }

    #[test]
    fn footrule_pmf_sums_to_one() {
        for n in 1..=6 {
            let center = Ranking::new((1..=n).rev().collect()).unwrap();
            let p = MallowsParams::new(center, 0.6, DistanceKind::SpearmanFootrule).unwrap();
            let z = footrule_normalizer(n, 0.6).unwrap();
            let total: f64 = all_rankings(n)
                .iter()
                .map(|x| mallows_pmf_with_normalizer(x, &p, z).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            footrule_normalizer(9, 0.5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn pmf_nonincreasing_in_distance() {
        let n = 5;
        let p = MallowsParams::kendall(Ranking::identity(n).unwrap(), 0.7).unwrap();
        let mut by_d: Vec<(u64, f64)> = all_rankings(n)
            .iter()
            .map(|x| {
                (
                    kendall_tau(x, p.center()).unwrap(),
                    mallows_pmf(x, &p).unwrap(),
                )
            })
            .collect();
        by_d.sort_by_key(|a| a.0);
        for w in by_d.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-15);
        }
    }

    #[test]
    fn rim_point_mass_at_zero() {
        let center = r(&[2, 1, 3]);
        let p = MallowsParams::kendall(center.clone(), 0.0).unwrap();
        let mut rng = stream_rng(1, &[]);
        for _ in 0..100 {
            assert_eq!(sample_rim(&p, &mut rng).unwrap(), center);
        }
        let f = MallowsParams::new(center, 0.5, DistanceKind::SpearmanFootrule).unwrap();
        assert!(matches!(
            sample_rim(&f, &mut rng),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn rim_matches_pmf_n3() {
        let center = r(&[2, 3, 1]);
        let p = MallowsParams::kendall(center, 0.5).unwrap();
        let mut rng = stream_rng(2, &[]);
        let draws = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts
                .entry(sample_rim(&p, &mut rng).unwrap())
                .or_insert(0usize) += 1;
        }
        for x in all_rankings(3) {
            let prob = mallows_pmf(&x, &p).unwrap();
            let freq = counts.get(&x).copied().unwrap_or(0) as f64 / draws as f64;
            let se = (prob * (1.0 - prob) / draws as f64).sqrt();
            assert!(
                (freq - prob).abs() <= 3.0 * se,
                "{x}: freq {freq} vs {prob}"
            );
        }
    }

    #[test]
    fn rim_uniform_at_one() {
        let p = MallowsParams::kendall(Ranking::identity(5).unwrap(), 1.0).unwrap();
        let mut rng = stream_rng(3, &[]);
        let draws = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts
                .entry(sample_rim(&p, &mut rng).unwrap())
                .or_insert(0usize) += 1;
        }
        let tv: f64 = all_rankings(5)
            .iter()
            .map(|x| {
                (counts.get(x).copied().unwrap_or(0) as f64 / draws as f64 - 1.0 / 120.0).abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.02, "tv = {tv}");
    }

    /// Pearson chi-squared of the sampled distance-to-center histogram against
    /// the exact distance distribution, at 1% significance.
    #[test]
    fn rim_distance_distribution_chi_squared() {
        // 99th percentiles of chi-squared for df = 1..=15
        const CHI2_99: [f64; 15] = [
            6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209, 24.725,
            26.217, 27.688, 29.141, 30.578,
        ];
        for (n, phi, seed) in [(4usize, 0.6, 10u64), (6, 0.8, 11)] {
            let p = MallowsParams::kendall(Ranking::identity(n).unwrap(), phi).unwrap();
            let max_d = n * (n - 1) / 2;
            let mut exact = vec![0.0; max_d + 1];
            for x in all_rankings(n) {
                exact[kendall_tau(&x, p.center()).unwrap() as usize] +=
                    mallows_pmf(&x, &p).unwrap();
            }
            let draws = 100_000usize;
            let mut rng = stream_rng(seed, &[]);
            let mut observed = vec![0usize; max_d + 1];
            for _ in 0..draws {
                let x = sample_rim(&p, &mut rng).unwrap();
                observed[kendall_tau(&x, p.center()).unwrap() as usize] += 1;
            }
            // pool sparse tail cells so every expected count is at least 5
            let mut cells: Vec<(f64, f64)> = Vec::new();
            let (mut e_acc, mut o_acc) = (0.0, 0.0);
            for d in 0..=max_d {
                e_acc += exact[d] * draws as f64;
                o_acc += observed[d] as f64;
                if e_acc >= 5.0 {
                    cells.push((e_acc, o_acc));
                    e_acc = 0.0;
                    o_acc = 0.0;
                }
            }
            if let Some(last) = cells.last_mut() {
                last.0 += e_acc;
                last.1 += o_acc;
            }
            let chi2: f64 = cells.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
            let df = cells.len() - 1;
            assert!(chi2 < CHI2_99[df - 1], "n={n}: chi2 {chi2} with {df} df");
        }
    }

    #[test]
    fn mh_stays_at_center_when_phi_zero() {
        let center = r(&[3, 1, 4, 2]);
        let mut rng = stream_rng(4, &[]);
        for kind in [DistanceKind::KendallTau, DistanceKind::SpearmanFootrule] {
            let p = MallowsParams::new(center.clone(), 0.0, kind).unwrap();
            assert_eq!(sample_mh(&p, &mut rng, 500).unwrap(), center);
        }
        let p = MallowsParams::kendall(center, 0.5).unwrap();
        assert!(sample_mh(&p, &mut rng, 0).is_err());
    }

    fn mh_total_variation(kind: DistanceKind, seed: u64) -> f64 {
        let n = 4;
        let center = Ranking::identity(n).unwrap();
        let p = MallowsParams::new(center, 0.5, kind).unwrap();
        let z = match kind {
            DistanceKind::KendallTau => mallows_normalizer(n, 0.5).unwrap(),
            DistanceKind::SpearmanFootrule => footrule_normalizer(n, 0.5).unwrap(),
        };
        let chains = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        let mut rng = stream_rng(seed, &[]);
        for _ in 0..chains {
            *counts
                .entry(sample_mh(&p, &mut rng, 10_000).unwrap())
                .or_insert(0usize) += 1;
        }
        all_rankings(n)
            .iter()
            .map(|x| {
                let exact = mallows_pmf_with_normalizer(x, &p, z).unwrap();
                (counts.get(x).copied().unwrap_or(0) as f64 / chains as f64 - exact).abs()
            })
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn mh_kendall_converges() {
        let tv = mh_total_variation(DistanceKind::KendallTau, 5);
        assert!(tv <= 0.02, "tv = {tv}");
    }

    #[test]
    fn mh_footrule_converges() {
        let tv = mh_total_variation(DistanceKind::SpearmanFootrule, 6);
        assert!(tv <= 0.02, "tv = {tv}");
    }

    fn perm_strategy(n: usize) -> impl Strategy<Value = Ranking> {
        Just((1..=n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(Ranking::from_vec_unchecked)
    }

    fn triple() -> impl Strategy<Value = (Ranking, Ranking, Ranking)> {
        (1usize..=8).prop_flat_map(|n| (perm_strategy(n), perm_strategy(n), perm_strategy(n)))
    }

    proptest! {
        #[test]
        fn distances_are_metrics((a, b, c) in triple()) {
            for kind in [DistanceKind::KendallTau, DistanceKind::SpearmanFootrule] {
                let ab = kind.distance(&a, &b).unwrap();
                prop_assert_eq!(ab, kind.distance(&b, &a).unwrap());
                prop_assert_eq!(ab == 0, a == b);
                prop_assert!(ab <= kind.distance(&a, &c).unwrap() + kind.distance(&c, &b).unwrap());
            }
        }

        #[test]
        fn kendall_matches_pair_count_and_footrule_sandwich((a, b, _c) in triple()) {
            let k = kendall_tau(&a, &b).unwrap();
            let f = spearman_footrule(&a, &b).unwrap();
            prop_assert_eq!(k, brute_kendall(&a, &b));
            prop_assert!(k <= f && f <= 2 * k);
            prop_assert_eq!(f % 2, 0);
            let n = a.len() as u64;
            prop_assert!(k <= n * (n - 1) / 2);
        }
    }
}
