//! Subsets of a finite ground set and elementary symmetric polynomials.
//!
//! Subsets of a fixed size `k` are listed in lexicographic order of their
//! sorted element lists, e.g. `{1,2} < {1,3} < {2,3}`. The position of a subset
//! in that listing is its *rank*. Elements are stored 0-based; `Display` and
//! [`SubsetIndex::one_based`] give the 1-based form used in files and CLI output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DppError, Result};

/// Largest stratum `enumerate_subsets` will materialize.
pub const MAX_ENUMERATION: usize = 1 << 22;

/// Binomial coefficient C(n, k); zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).unwrap_or(usize::MAX)
}

/// A subset of `{0, .., n-1}` together with its rank inside its cardinality stratum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetIndex {
    n: usize,
    elements: Vec<usize>,
    rank: usize,
}

impl SubsetIndex {
    /// Builds a subset from 0-based elements in any order. Duplicates and
    /// out-of-range elements are rejected.
    pub fn new(n: usize, elements: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut elements: Vec<usize> = elements.into_iter().collect();
        elements.sort_unstable();
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(DppError::domain(format!("duplicate element {}", w[0] + 1)));
        }
        if let Some(&bad) = elements.iter().find(|&&e| e >= n) {
            return Err(DppError::domain(format!(
                "element {} outside ground set 1..={n}",
                bad + 1
            )));
        }
        let rank = lex_rank(n, &elements);
        Ok(Self { n, elements, rank })
    }

    /// Builds a subset from 1-based elements.
    pub fn from_one_based(n: usize, elements: &[usize]) -> Result<Self> {
        if elements.contains(&0) {
            return Err(DppError::domain("elements are 1-based; got 0"));
        }
        Self::new(n, elements.iter().map(|&e| e - 1))
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            elements: Vec::new(),
            rank: 0,
        }
    }

    /// Inverse of [`SubsetIndex::rank`].
    pub fn unrank(n: usize, k: usize, rank: usize) -> Result<Self> {
        let total = binomial(n, k);
        if k > n || rank >= total {
            return Err(DppError::domain(format!(
                "rank {rank} out of range for C({n},{k}) = {total}"
            )));
        }
        let mut elements = Vec::with_capacity(k);
        let mut rest = rank;
        let mut next = 0;
        for i in 0..k {
            let mut j = next;
            loop {
                let block = binomial(n - 1 - j, k - 1 - i);
                if rest < block {
                    break;
                }
                rest -= block;
                j += 1;
            }
            elements.push(j);
            next = j + 1;
        }
        Ok(Self { n, elements, rank })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted 0-based elements.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.elements.iter().map(|e| e + 1).collect()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, element: usize) -> bool {
        self.elements.binary_search(&element).is_ok()
    }

    pub fn is_subset_of(&self, other: &SubsetIndex) -> bool {
        self.elements.iter().all(|&e| other.contains(e))
    }

    pub fn complement(&self) -> Self {
        let elements: Vec<usize> = (0..self.n).filter(|&e| !self.contains(e)).collect();
        let rank = lex_rank(self.n, &elements);
        Self {
            n: self.n,
            elements,
            rank,
        }
    }

    /// Indicator vector `T(A)` of length `n`.
    pub fn indicator(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n];
        for &e in &self.elements {
            t[e] = 1.0;
        }
        t
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", e + 1)?;
        }
        f.write_str("}")
    }
}

fn lex_rank(n: usize, sorted: &[usize]) -> usize {
    let k = sorted.len();
    let mut rank = 0;
    let mut next = 0;
    for (i, &a) in sorted.iter().enumerate() {
        for j in next..a {
            rank += binomial(n - 1 - j, k - 1 - i);
        }
        next = a + 1;
    }
    rank
}

/// All `k`-subsets of `{0, .., n-1}` in canonical order.
pub fn enumerate_subsets(n: usize, k: usize) -> Result<Vec<SubsetIndex>> {
    if k > n {
        return Err(DppError::domain(format!(
            "cardinality {k} exceeds ground set size {n}"
        )));
    }
    let total = binomial(n, k);
    if total > MAX_ENUMERATION {
        return Err(DppError::Capacity {
            what: "subset enumeration",
            size: total,
            limit: MAX_ENUMERATION,
        });
    }
    let mut out = Vec::with_capacity(total);
    let mut current: Vec<usize> = (0..k).collect();
    for rank in 0..total {
        out.push(SubsetIndex {
            n,
            elements: current.clone(),
            rank,
        });
        // advance to the lexicographic successor
        let mut i = k;
        while i > 0 && current[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        current[i - 1] += 1;
        for j in i..k {
            current[j] = current[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Every subset of `{0, .., n-1}`, stratum by stratum (k = 0, 1, .., n).
pub fn enumerate_power_set(n: usize) -> Result<Vec<SubsetIndex>> {
    if n >= 31 || (1usize << n) > MAX_ENUMERATION {
        return Err(DppError::Capacity {
            what: "power set enumeration",
            size: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
            limit: MAX_ENUMERATION,
        });
    }
    let mut out = Vec::with_capacity(1 << n);
    for k in 0..=n {
        out.extend(enumerate_subsets(n, k)?);
    }
    Ok(out)
}

/// Table of elementary symmetric polynomials of all prefixes of a vector.
///
/// Entry `(m, j)` is `e_j(λ_1, .., λ_m)`; built with the recurrence
/// `e_j(λ_1..λ_m) = e_j(λ_1..λ_{m-1}) + λ_m e_{j-1}(λ_1..λ_{m-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct EspTable {
    n: usize,
    k_max: usize,
    values: Vec<f64>,
}

impl EspTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `e_j` of the first `m` entries.
    pub fn get(&self, m: usize, j: usize) -> f64 {
        assert!(m <= self.n && j <= self.k_max, "ESP index out of range");
        self.values[m * (self.k_max + 1) + j]
    }

    /// `e_j` of the full vector.
    pub fn e(&self, j: usize) -> f64 {
        self.get(self.n, j)
    }

    /// Row `n`: `(e_0, .., e_{k_max})` of the full vector.
    pub fn full_row(&self) -> &[f64] {
        let w = self.k_max + 1;
        &self.values[self.n * w..(self.n + 1) * w]
    }
}

fn check_finite(lambdas: &[f64]) -> Result<()> {
    match lambdas.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(DppError::domain(format!(
            "non-finite value at position {}",
            i + 1
        ))),
        None => Ok(()),
    }
}

pub fn esp(lambdas: &[f64], k_max: usize) -> Result<EspTable> {
    let n = lambdas.len();
    if k_max > n {
        return Err(DppError::domain(format!(
            "k_max = {k_max} exceeds vector length {n}"
        )));
    }
    check_finite(lambdas)?;
    let w = k_max + 1;
    let mut values = vec![0.0; (n + 1) * w];
    values[0] = 1.0;
    for m in 1..=n {
        let lam = lambdas[m - 1];
        values[m * w] = 1.0;
        for j in 1..=k_max.min(m) {
            values[m * w + j] = values[(m - 1) * w + j] + lam * values[(m - 1) * w + j - 1];
        }
    }
    Ok(EspTable { n, k_max, values })
}

/// `(e_0, .., e_{k_max})` of `values`, skipping the indices in `skip`.
pub(crate) fn esp_row_skipping(values: &[f64], k_max: usize, skip: &[usize]) -> Vec<f64> {
    let mut row = vec![0.0; k_max + 1];
    row[0] = 1.0;
    let mut seen = 0usize;
    for (i, &lam) in values.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        seen += 1;
        for j in (1..=k_max.min(seen)).rev() {
            row[j] += lam * row[j - 1];
        }
    }
    row
}

/// `e_j` of `lambdas` with the (at most two, 0-based) `excluded` entries
/// removed. Recomputed from scratch rather than divided out, so it stays
/// exact when some entries are zero.
pub fn esp_leave_out(lambdas: &[f64], excluded: &[usize], j: usize) -> Result<f64> {
    let n = lambdas.len();
    if excluded.len() > 2 {
        return Err(DppError::domain("at most two indices may be excluded"));
    }
    if let Some(&bad) = excluded.iter().find(|&&i| i >= n) {
        return Err(DppError::domain(format!(
            "excluded index {} outside 1..={n}",
            bad + 1
        )));
    }
    if excluded.len() == 2 && excluded[0] == excluded[1] {
        return Err(DppError::domain("excluded indices must be distinct"));
    }
    check_finite(lambdas)?;
    let remaining = n - excluded.len();
    if j > remaining {
        return Ok(0.0);
    }
    Ok(esp_row_skipping(lambdas, j, excluded)[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_esp(lambdas: &[f64], j: usize) -> f64 {
        enumerate_subsets(lambdas.len(), j)
            .unwrap()
            .iter()
            .map(|a| a.elements().iter().map(|&i| lambdas[i]).product::<f64>())
            .sum()
    }

    #[test]
    fn enumerate_small_strata() {
        let subs = enumerate_subsets(3, 2).unwrap();
        let listed: Vec<Vec<usize>> = subs.iter().map(|s| s.one_based()).collect();
        assert_eq!(listed, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(
            subs.iter().map(|s| s.rank()).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );

        let empty = enumerate_subsets(4, 0).unwrap();
        assert_eq!(empty.len(), 1);
        assert!(empty[0].is_empty());
        assert_eq!(empty[0].rank(), 0);

        assert_eq!(enumerate_subsets(7, 3).unwrap().len(), 35);
        assert!(matches!(enumerate_subsets(3, 4), Err(DppError::Domain(_))));
    }

    #[test]
    fn esp_examples() {
        assert_eq!(esp(&[1.0, 1.0, 1.0], 2).unwrap().e(2), 3.0);
        assert_eq!(esp(&[1.0, 2.0, 3.0], 2).unwrap().e(2), 11.0);
        let t = esp(&[2.0, 2.0], 2).unwrap();
        assert_eq!((t.e(1), t.e(2)), (4.0, 4.0));
        assert!(esp(&[1.0], 2).is_err());
    }

    #[test]
    fn esp_table_shape() {
        let t = esp(&[0.5, 2.0, 3.0, 0.0], 3).unwrap();
        for m in 0..=4 {
            assert_eq!(t.get(m, 0), 1.0);
            for j in (m + 1)..=3 {
                assert_eq!(t.get(m, j), 0.0);
            }
        }
        assert_eq!(t.full_row().len(), 4);
    }

    #[test]
    fn leave_out_examples() {
        assert_eq!(esp_leave_out(&[1.0, 2.0, 3.0], &[0], 1).unwrap(), 5.0);
        assert_eq!(esp_leave_out(&[1.0, 1.0, 1.0], &[1, 2], 0).unwrap(), 1.0);
        assert_eq!(esp_leave_out(&[1.0, 2.0, 3.0], &[1], 2).unwrap(), 3.0);
        assert!(esp_leave_out(&[1.0, 2.0], &[2], 1).is_err());
        assert!(esp_leave_out(&[1.0, 2.0], &[1, 1], 0).is_err());
        assert!(esp_leave_out(&[1.0, 2.0, 3.0], &[0, 1, 2], 0).is_err());
    }

    #[test]
    fn leave_out_with_zero_entries() {
        let lam = [0.0, 0.0, 2.0, 5.0];
        assert_eq!(esp_leave_out(&lam, &[0], 2).unwrap(), 10.0);
        assert_eq!(esp_leave_out(&lam, &[2, 3], 1).unwrap(), 0.0);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
    }

    #[test]
    fn subset_from_one_based_rejects_bad_input() {
        assert!(SubsetIndex::from_one_based(3, &[0]).is_err());
        assert!(SubsetIndex::from_one_based(3, &[4]).is_err());
        assert!(SubsetIndex::from_one_based(3, &[2, 2]).is_err());
        let s = SubsetIndex::from_one_based(3, &[3, 1]).unwrap();
        assert_eq!(s.one_based(), vec![1, 3]);
        assert_eq!(s.rank(), 1);
        assert_eq!(s.to_string(), "{1,3}");
        assert_eq!(s.complement().one_based(), vec![2]);
    }

    #[test]
    fn rank_round_trip_exhaustive() {
        for n in 0..=12 {
            for k in 0..=n {
                for (i, s) in enumerate_subsets(n, k).unwrap().iter().enumerate() {
                    assert_eq!(s.rank(), i);
                    assert_eq!(&SubsetIndex::unrank(n, k, i).unwrap(), s);
                    assert_eq!(
                        SubsetIndex::new(n, s.elements().to_vec()).unwrap().rank(),
                        i
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn esp_matches_brute_force(lam in prop::collection::vec(0.0f64..10.0, 1..=12)) {
            let n = lam.len();
            let t = esp(&lam, n).unwrap();
            for j in 0..=n {
                let b = brute_esp(&lam, j);
                prop_assert!((t.e(j) - b).abs() <= 1e-12 * b.abs(), "j={} esp={} brute={}", j, t.e(j), b);
            }
        }

        #[test]
        fn generating_function_at_one(lam in prop::collection::vec(0.0f64..10.0, 1..=12)) {
            let n = lam.len();
            let t = esp(&lam, n).unwrap();
            let total: f64 = t.full_row().iter().sum();
            let product: f64 = lam.iter().map(|x| 1.0 + x).product();
            prop_assert!((total - product).abs() <= 1e-12 * product);
        }
    }
}
