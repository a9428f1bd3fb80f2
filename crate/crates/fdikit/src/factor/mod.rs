//! Rational matrix factorizations used by the synthesis procedures.

mod coprime;
mod inner;
mod nullspace;
mod pair;
mod subsets;

pub use coprime::{lcf_stabilize, stabilizing_injection, PoleTargets};
pub use inner::{coouter_coinner, normalized_coprime, outer_gain, CoOuterInner, OuterGain, Side};
pub use nullspace::{
    decoupled_columns, left_nullspace, normal_rank, pencil_basis, realize_rows, NullBasis, PencilRow,
    Stabilization,
};
pub use pair::FilterPair;
pub use subsets::{candidate_subsets, select_admissible_subsets, Selection};
