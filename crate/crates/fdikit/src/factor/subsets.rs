//! Least-order selection of basis-row combinations.

use super::nullspace::PencilRow;
use crate::rng::SplitMix;
use crate::{FdiError, Result};

/// An admissible constant combination of basis rows.
#[derive(Debug, Clone)]
pub struct Selection {
    /// Indices of the combined rows.
    pub subset: Vec<usize>,
    /// Combination coefficients, one per subset entry.
    pub h: Vec<f64>,
    /// The combined polynomial row.
    pub row: PencilRow,
    /// Order of a proper realization of `row` (its degree).
    pub order: usize,
}

const RETRIES: usize = 5;
const MAX_ENUMERATED: usize = 16;

/// Candidate subsets ordered by (largest degree, cardinality, lexicographic).
pub fn candidate_subsets(degs: &[usize]) -> Vec<Vec<usize>> {
    let q = degs.len();
    if q > MAX_ENUMERATED {
        let mut levels: Vec<usize> = degs.to_vec();
        levels.sort_unstable();
        levels.dedup();
        return levels
            .into_iter()
            .map(|d| (0..q).filter(|&i| degs[i] <= d).collect())
            .collect();
    }
    let mut all: Vec<Vec<usize>> = (1u32..(1 << q))
        .map(|mask| (0..q).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    let key = |s: &Vec<usize>| s.iter().map(|&i| degs[i]).max().unwrap_or(0);
    all.sort_by(|a, b| key(a).cmp(&key(b)).then(a.len().cmp(&b.len())).then(a.cmp(b)));
    all
}

/// First subset (in [`candidate_subsets`] order) with a random combination accepted by
/// `admissible`. Combination entries are uniform in `[-1, 1)` from a seeded generator;
/// each subset gets up to five draws.
pub fn select_admissible_subsets(
    rows: &[PencilRow],
    admissible: &dyn Fn(&PencilRow) -> bool,
    seed: u64,
) -> Result<Selection> {
    if rows.is_empty() {
        return Err(FdiError::EmptyNullspace);
    }
    let degs: Vec<usize> = rows.iter().map(|r| r.degree).collect();
    let mut rng = SplitMix::new(seed);
    for subset in candidate_subsets(&degs) {
        let members: Vec<&PencilRow> = subset.iter().map(|&i| &rows[i]).collect();
        let tries = if subset.len() == 1 { 1 } else { RETRIES };
        for _ in 0..tries {
            let h: Vec<f64> = if subset.len() == 1 {
                vec![1.0]
            } else {
                (0..subset.len()).map(|_| rng.uniform()).collect()
            };
            let row = PencilRow::combine(&members, &h);
            if admissible(&row) {
                let order = row.degree;
                return Ok(Selection { subset, h, row, order });
            }
        }
    }
    Err(FdiError::NotSolvable("no combination of basis rows meets the targets".into()))
}
