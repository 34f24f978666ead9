//! Entropy, transmission and co-information over [`JointTable`]s, in bits.

use crate::error::{Error, Result};
use crate::table::{JointTable, VariableSubset};

/// Largest subset accepted by [`co_information`]; cost grows as 2^n marginals.
pub const MAX_CO_INFORMATION_ARITY: usize = 16;

/// Shannon entropy in bits of a probability vector, with 0·log 0 = 0.
pub fn entropy_bits(probabilities: &[f64]) -> f64 {
    let h: f64 = probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // -0.0 for point masses
    h.max(0.0)
}

fn entropy_of_axes(table: &JointTable, kept: &[usize]) -> f64 {
    entropy_bits(&table.marginal_cells(kept))
}

/// Entropy of the marginal distribution over `subset`.
pub fn entropy(table: &JointTable, subset: &VariableSubset) -> Result<f64> {
    let kept = table.subset_indices(subset)?;
    Ok(entropy_of_axes(table, &kept))
}

/// Mutual information `H(x) + H(y) - H(x ∪ y)` between disjoint subsets.
pub fn transmission(table: &JointTable, x: &VariableSubset, y: &VariableSubset) -> Result<f64> {
    if !x.is_disjoint(y) {
        return Err(Error::InvalidSubset(format!(
            "subsets {{{x}}} and {{{y}}} overlap"
        )));
    }
    let hx = entropy(table, x)?;
    let hy = entropy(table, y)?;
    let hxy = entropy(table, &x.union(y)?)?;
    Ok(hx + hy - hxy)
}

/// Co-information μ* of the subset by inclusion–exclusion over all non-empty
/// sub-subsets: `Σ_T (-1)^(|T|+1) H(T)`.
///
/// Equals [`transmission`] for two variables. For three it is
/// `H_x + H_y + H_z - H_xy - H_xz - H_yz + H_xyz`, which may be negative.
pub fn co_information(table: &JointTable, subset: &VariableSubset) -> Result<f64> {
    if subset.len() < 2 {
        return Err(Error::Arity(format!(
            "co-information needs at least 2 variables, got {}",
            subset.len()
        )));
    }
    if subset.len() > MAX_CO_INFORMATION_ARITY {
        return Err(Error::Arity(format!(
            "co-information is limited to {MAX_CO_INFORMATION_ARITY} variables, got {}",
            subset.len()
        )));
    }
    let members = table.subset_indices(subset)?;
    let n = members.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let kept: Vec<usize> = (0..n)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| members[b])
            .collect();
        let h = entropy_of_axes(table, &kept);
        if mask.count_ones() % 2 == 1 {
            total += h;
        } else {
            total -= h;
        }
    }
    Ok(total)
}

/// Q, the negation of [`co_information`].
pub fn q_measure(table: &JointTable, subset: &VariableSubset) -> Result<f64> {
    co_information(table, subset).map(|mu| -mu)
}
