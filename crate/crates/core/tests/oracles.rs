mod common;

use common::{check_pair, check_program};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn slices_match_dependence_reachability(seed in any::<u64>()) {
        check_program(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn diff_matches_single_edit_enumeration(seed in any::<u64>()) {
        check_pair(seed).map_err(TestCaseError::fail)?;
    }
}
