use guidelab_tensor::RngState;
use guidelab_zoo::{build_network, Family, NetworkSpec};
use proptest::prelude::*;

/// Coherent random specs across all families.
fn spec_strategy() -> impl Strategy<Value = NetworkSpec> {
    let depth = 1usize..=3;
    let classes = 2usize..=8;
    prop_oneof![
        (depth.clone(), 1usize..=8, 1usize..=6, classes.clone())
            .prop_map(|(d, w, i, c)| NetworkSpec::fcn(d, w, &[i], c)),
        (depth.clone(), 1usize..=4, 1usize..=2, classes.clone(), any::<bool>())
            .prop_map(|(d, w, ch, c, r)| NetworkSpec::cnn(d, w, [ch, 4, 4], c, r)),
        (depth.clone(), 1usize..=6, 2usize..=8, 2usize..=9)
            .prop_map(|(d, w, v, t)| NetworkSpec::rnn(d, w, v, t)),
        (depth.clone(), 1usize..=2, 2usize..=8, 2usize..=6, any::<bool>()).prop_map(
            |(d, h, v, t, enc)| {
                let fam = if enc {
                    Family::TransformerEncoder
                } else {
                    Family::TransformerDecoder
                };
                NetworkSpec::transformer(fam, d, h * 2, h, v, t)
            }
        ),
        (depth, 1usize..=2, classes).prop_map(|(d, h, c)| {
            NetworkSpec::vit(d, h * 2, h, 2, [1, 4, 4], c)
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Tap count depends on the family and depth alone: image families tap
    /// every block plus the head, sequence families tap every layer.
    #[test]
    fn tap_count_is_a_pure_function_of_the_spec(spec in spec_strategy()) {
        let net = build_network::<f32>(&spec, &mut RngState::new(1)).unwrap();
        let expect = if spec.family.is_sequence() {
            spec.depth
        } else {
            spec.depth + 1
        };
        prop_assert_eq!(net.tap_list().len(), expect);
        let again = build_network::<f32>(&spec, &mut RngState::new(99)).unwrap();
        prop_assert_eq!(net.tap_list(), again.tap_list());
    }

    #[test]
    fn specs_round_trip_through_json(spec in spec_strategy()) {
        let json = serde_json::to_string(&spec).unwrap();
        let back: NetworkSpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(spec, back);
    }
}
