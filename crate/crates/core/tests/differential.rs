mod common;

use common::*;
use forestqb::model::validate_query;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn compiled_query_agrees_with_direct_evaluation(doc_seed in any::<u64>(), graph_seed in any::<u64>()) {
        let q = random_document(&mut ChaCha8Rng::seed_from_u64(doc_seed));
        prop_assume!(!validate_query(&q).has_fatal());
        let g = random_graph(&mut ChaCha8Rng::seed_from_u64(graph_seed), 50);
        if let Err(e) = differential_case(&q, &g) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn adversarial_filters_compile_to_parseable_sparql(seed in any::<u64>()) {
        check_fuzz(8, seed).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn golden_documents_agree_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for pair in golden_pairs() {
        let q = pair.query();
        for _ in 0..20 {
            differential_case(&q, &random_graph(&mut rng, 50)).unwrap();
        }
    }
}
