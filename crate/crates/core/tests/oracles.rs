//! Library results against the naive reference implementations, over
//! generated inputs.

mod common;

use proptest::prelude::*;

use common::*;
use vocabweave::guess::NGramModel;
use vocabweave::select::{select, SelectionConfig};
use vocabweave::text::{tokenize, Lemma};

fn toy_sentences() -> impl Strategy<Value = Vec<Vec<String>>> {
    let word = (0..TOY_VOCAB.len()).prop_map(|i| TOY_VOCAB[i].to_string());
    prop::collection::vec(prop::collection::vec(word, 1..10), 1..10)
}

fn query() -> impl Strategy<Value = Vec<&'static str>> {
    let word = prop_oneof![
        8 => (0..TOY_VOCAB.len()).prop_map(|i| TOY_VOCAB[i]),
        1 => Just("lamp"),
    ];
    prop::collection::vec(word, 1..20)
}

proptest! {
    #[test]
    fn ngram_scores_match_counting(
        corpus in toy_sentences(),
        q in query(),
        order in 1usize..5,
        k in prop_oneof![Just(0.25), Just(1.0), Just(3.0)],
    ) {
        let lemmas: Vec<Vec<Lemma>> = corpus.iter().map(|s| s.iter().map(|w| lemma(w)).collect()).collect();
        let model = NGramModel::train(&lemmas, order, k).unwrap();
        let oracle = BruteForceNGram::new(&corpus, order, k);
        let got: Vec<f64> = model.score_tokens(&tokenize(&q.join(" "))).iter().map(|g| g.value).collect();
        prop_assert_eq!(got, oracle.score_sentence(&q));
        for ctx in oracle.seen_contexts() {
            let refs: Vec<&str> = ctx.iter().map(String::as_str).collect();
            prop_assert!((model.distribution_mass(&refs) - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn saved_model_scores_identically(corpus in toy_sentences(), q in query(), order in 1usize..4) {
        let lemmas: Vec<Vec<Lemma>> = corpus.iter().map(|s| s.iter().map(|w| lemma(w)).collect()).collect();
        let model = NGramModel::train(&lemmas, order, 0.5).unwrap();
        let back = NGramModel::from_text(&model.to_text()).unwrap();
        let tokens = tokenize(&q.join(" "));
        prop_assert_eq!(model.score_tokens(&tokens), back.score_tokens(&tokens));
    }

    #[test]
    fn greedy_selection_is_a_sorted_prefix(
        lemmas in prop::collection::vec((0u32..30, 1usize..4, 1u32..16), 0..40),
        extra in 0usize..50,
        density in 0.0f64..=1.0,
        cap in prop::option::of(0usize..8),
    ) {
        let mut occs = Vec::new();
        let mut pos = 0;
        for (id, n, p) in lemmas {
            for _ in 0..n {
                pos += 1;
                occs.push(occurrence(pos, &format!("x{id}"), p as f64 / 16.0));
            }
        }
        let total = occs.len() + extra;
        let got = select(&occs, &SelectionConfig::new(density, cap).unwrap(), total).unwrap();
        let names: Vec<String> = got.chosen_lemmas.iter().map(|c| c.lemma.as_str().to_string()).collect();
        let (want, d) = sort_prefix_selection(&occs, density, cap, total);
        prop_assert_eq!(names, want);
        prop_assert_eq!(got.achieved_density, d);
    }
}

#[test]
fn oracle_agrees_with_hand_counts() {
    // "a b a b" as bigrams: count(a -> b) = 2
    let corpus = vec![vec!["cat".to_string(), "dog".into(), "cat".into(), "dog".into()]];
    let o = BruteForceNGram::new(&corpus, 2, 1.0);
    assert_eq!(o.counts(&["cat".to_string()], "dog"), (2, 2));
    let m = NGramModel::train(&[vec![lemma("cat"), lemma("dog"), lemma("cat"), lemma("dog")]], 2, 1.0).unwrap();
    assert_eq!(m.count(&["cat"], "dog"), 2);
    // (2 + 1) / (2 + 1 * 3)
    assert_eq!(m.conditional_probability(&["cat"], "dog"), 0.6);
}
