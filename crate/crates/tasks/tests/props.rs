use guidelab_tasks::{batch_indices, parity_label};
use guidelab_tensor::RngState;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn appending_a_one_flips_the_parity_label(bits in prop::collection::vec(0u8..=1, 1..40)) {
        let before = parity_label(&bits);
        let mut longer = bits.clone();
        longer.push(1);
        prop_assert_eq!(parity_label(&longer), 1 - before);
        let mut same = bits;
        same.push(0);
        prop_assert_eq!(parity_label(&same), before);
    }

    #[test]
    fn batch_plans_partition_the_index_space(
        n in 1usize..300,
        batch in 1usize..64,
        drop_last in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut rng = RngState::new(seed);
        let plan = batch_indices(n, batch, drop_last, Some(&mut rng)).unwrap();
        let mut seen: Vec<usize> = plan.concat();
        if drop_last {
            prop_assert!(plan.iter().all(|b| b.len() == batch));
            prop_assert_eq!(seen.len(), (n / batch) * batch);
        } else {
            prop_assert_eq!(seen.len(), n);
        }
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), if drop_last { (n / batch) * batch } else { n });
    }
}
