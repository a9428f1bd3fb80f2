//! Invariants of every synthesis output over randomized seeds.

mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(common::config())]

    #[test]
    fn efdsyn_invariants(seed in any::<u64>()) {
        common::efdsyn_case(seed)?;
    }

    #[test]
    fn efdisyn_invariants(seed in any::<u64>()) {
        common::efdisyn_case(seed)?;
    }

    #[test]
    fn afdsyn_invariants(seed in any::<u64>()) {
        common::afdsyn_case(seed)?;
    }

    #[test]
    fn afdisyn_invariants(seed in any::<u64>()) {
        common::afdisyn_case(seed)?;
    }

    #[test]
    fn emmsyn_invariants(seed in any::<u64>()) {
        common::emmsyn_case(seed)?;
    }

    #[test]
    fn emdsyn_invariants(seed in any::<u64>()) {
        common::emdsyn_case(seed)?;
    }

    #[test]
    fn amdsyn_invariants(seed in any::<u64>()) {
        common::amdsyn_case(seed)?;
    }
}
