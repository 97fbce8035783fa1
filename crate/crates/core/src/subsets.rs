//! Index-subset families over `{1..K}`.
//!
//! All indices in this module are 1-based, matching the instrument labels
//! `G_1..G_K`. [`Subset::positions`] converts to 0-based column offsets.

use std::fmt;

use crate::error::{Mr2Error, Result};

/// Default cap on `binomial(K, k†)` and on the partial-identification list.
pub const DEFAULT_FAMILY_CAP: u128 = 1_000_000;

/// A strictly increasing tuple of 1-based instrument indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(Vec<usize>);

impl Subset {
    /// Validates strict increase and the `1..=k_total` range.
    pub fn new(indices: Vec<usize>, k_total: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > k_total) {
            return Err(Mr2Error::Parameter(format!(
                "index {bad} out of range 1..={k_total}"
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Mr2Error::Parameter(format!(
                "subset {indices:?} is not strictly increasing"
            )));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 0-based column positions.
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i - 1)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    /// Label such as `"1_2"`, used for CSV headers.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("_")
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// `K(k†)`: all k†-subsets of `{1..K}`, in revolving-door order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetFamily {
    k_total: usize,
    k_dagger: usize,
    members: Vec<Subset>,
}

impl SubsetFamily {
    pub fn k_total(&self) -> usize {
        self.k_total
    }

    pub fn k_dagger(&self) -> usize {
        self.k_dagger
    }

    pub fn members(&self) -> &[Subset] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Exact `binomial(n, k)`; saturates at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn check_range(k_total: usize, k_dagger: usize) -> Result<()> {
    if k_total == 0 {
        return Err(Mr2Error::Parameter("K must be at least 1".into()));
    }
    if k_dagger == 0 || k_dagger > k_total {
        return Err(Mr2Error::Parameter(format!(
            "k_dagger={k_dagger} outside 1..={k_total}"
        )));
    }
    Ok(())
}

pub fn enumerate_family(k_total: usize, k_dagger: usize) -> Result<SubsetFamily> {
    enumerate_family_capped(k_total, k_dagger, DEFAULT_FAMILY_CAP)
}

/// Revolving-door enumeration with an explicit size cap.
pub fn enumerate_family_capped(k_total: usize, k_dagger: usize, cap: u128) -> Result<SubsetFamily> {
    check_range(k_total, k_dagger)?;
    let required = binomial(k_total, k_dagger);
    if required > cap {
        return Err(Mr2Error::Capacity {
            what: "binomial(K, k_dagger) subsets",
            required,
            cap,
        });
    }
    let members = revolving_door(k_total, k_dagger)
        .into_iter()
        .map(Subset)
        .collect();
    Ok(SubsetFamily {
        k_total,
        k_dagger,
        members,
    })
}

/// `R(n, k) = R(n-1, k) ++ reverse(R(n-1, k-1)) ∪ {n}`, with
/// `R(n, 0) = [∅]` and `R(n, n) = [{1..n}]`. Consecutive entries differ by
/// swapping exactly one element in and one out.
fn revolving_door(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k == n {
        return vec![(1..=n).collect()];
    }
    let mut out = revolving_door(n - 1, k);
    let tail = revolving_door(n - 1, k - 1);
    out.reserve(tail.len());
    out.extend(tail.into_iter().rev().map(|mut s| {
        s.push(n);
        s
    }));
    out
}

/// Every subset of `{1..K}` with at least `K - k† + 1` members, sorted by
/// cardinality then lexicographically. Each one involves at least one of
/// any `k†` valid instruments, so it satisfies the exclusion restriction.
pub fn partial_id_interactions(k_total: usize, k_dagger: usize) -> Result<Vec<Subset>> {
    check_range(k_total, k_dagger)?;
    let min_order = k_total - k_dagger + 1;
    let required: u128 = (min_order..=k_total)
        .map(|l| binomial(k_total, l))
        .fold(0u128, u128::saturating_add);
    if required > DEFAULT_FAMILY_CAP {
        return Err(Mr2Error::Capacity {
            what: "partial-identification interaction sets",
            required,
            cap: DEFAULT_FAMILY_CAP,
        });
    }
    let mut out = Vec::with_capacity(required as usize);
    for order in min_order..=k_total {
        out.extend(lex_combinations(k_total, order).into_iter().map(Subset));
    }
    Ok(out)
}

/// k-subsets of `{1..n}` in lexicographic order.
pub(crate) fn lex_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (1..=k).collect();
    loop {
        out.push(c.clone());
        // Rightmost position that can still be incremented.
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i + 1) else {
            break;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
    out
}

/// Sorted indices of `{1..K}` not in `subset`.
pub fn complement(subset: &[usize], k_total: usize) -> Result<Vec<usize>> {
    if let Some(&bad) = subset.iter().find(|&&i| i == 0 || i > k_total) {
        return Err(Mr2Error::Parameter(format!(
            "index {bad} out of range 1..={k_total}"
        )));
    }
    Ok((1..=k_total).filter(|i| !subset.contains(i)).collect())
}
