mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn primitives_match_central_differences(seed in 1000u64..2000) {
        for (name, err) in common::primitive_errors(seed) {
            prop_assert!(err < 1e-6, "{name}: relative error {err}");
        }
    }

    #[test]
    fn networks_match_central_differences(seed in 1000u64..2000) {
        for (name, err, _) in common::network_errors(seed) {
            prop_assert!(err < 1e-4, "{name}: relative error {err}");
        }
    }
}
