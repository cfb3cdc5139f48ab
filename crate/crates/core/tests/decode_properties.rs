mod common;

use lota_core::planner::{
    build_prompt, forced_walk, next_skill_full, next_skill_greedy, score_path, score_skill,
    Decoder, HistoryStep, PromptSpec, DEFAULT_PREFIX,
};
use lota_core::scorer::{log_sum_exp, HashScorer, MockScorer, MockScript};
use lota_core::skills::enumerate_skills;
use lota_core::{Profile, ProfileKind, Scorer, SkillSet};
use proptest::prelude::*;

fn skills() -> SkillSet {
    enumerate_skills(&Profile::alfred(), &common::kitchen(), None).unwrap()
}

fn corpus(skills: &SkillSet) -> Vec<String> {
    let mut c = skills.surfaces().to_vec();
    c.push(DEFAULT_PREFIX.into());
    c
}

fn prompt(skills: &SkillSet, history: &[usize]) -> String {
    let mut spec = PromptSpec::new("Put a chilled apple on the dining table.");
    spec.history = history
        .iter()
        .map(|&i| HistoryStep {
            skill: skills.skills()[i].clone(),
            feedback: None,
        })
        .collect();
    build_prompt(&spec, &Profile::new(ProfileKind::Alfred))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn restricted_logprobs_are_a_key_exact_subset(seed in any::<u64>(), hist in prop::collection::vec(0usize..20, 0..4), pick in prop::collection::vec(0u32..200, 1..8)) {
        let set = skills();
        let scorer = HashScorer::new(MockScorer::uniform(&corpus(&set)), seed, 4.0);
        let ids = scorer.tokenize(&prompt(&set, &hist)).unwrap().ids;
        let full = scorer.next_token_logprobs(&ids, None).unwrap();
        prop_assert!(log_sum_exp(full.values().copied()).abs() < 1e-9);
        let some = scorer.next_token_logprobs(&ids, Some(&pick)).unwrap();
        let keys: std::collections::BTreeSet<u32> = pick.iter().copied().collect();
        prop_assert_eq!(some.keys().copied().collect::<std::collections::BTreeSet<_>>(), keys);
        for (k, v) in &some {
            prop_assert_eq!(*v, full[k]);
        }
    }

    #[test]
    fn full_mode_is_the_argmax_of_skill_scores(seed in any::<u64>(), hist in prop::collection::vec(0usize..20, 0..3)) {
        let set = skills();
        let scorer = HashScorer::new(MockScorer::uniform(&corpus(&set)), seed, 6.0);
        let text = prompt(&set, &hist);
        let ids = scorer.tokenize(&text).unwrap().ids;
        let mut dec = Decoder::new(&set).unwrap();
        let prepared = dec.prepare(&scorer, &text, &ids).unwrap();
        let choice = next_skill_full(&scorer, &prepared).unwrap();
        let scores: Vec<f64> = set.surfaces().iter().map(|s| score_skill(&scorer, &text, s).unwrap()).collect();
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        prop_assert_eq!(choice.index, best);
        prop_assert!((choice.logprob - scores[best]).abs() < 1e-9);
    }

    #[test]
    fn trie_walk_decomposes_skill_score(seed in any::<u64>(), skill in 0usize..40) {
        let set = skills();
        let skill = skill % set.len();
        let scorer = HashScorer::new(MockScorer::uniform(&corpus(&set)), seed, 6.0);
        let text = prompt(&set, &[1]);
        let ids = scorer.tokenize(&text).unwrap().ids;
        let mut dec = Decoder::new(&set).unwrap();
        let prepared = dec.prepare(&scorer, &text, &ids).unwrap();
        let walk: f64 = forced_walk(&scorer, &prepared, skill).unwrap().iter().sum();
        let (direct, _) = score_path(&scorer, &prepared.context, &prepared.class.paths[skill]).unwrap();
        prop_assert!((walk - direct).abs() < 1e-9);
        let greedy = next_skill_greedy(&scorer, &prepared).unwrap();
        prop_assert!(greedy.index < set.len());
        prop_assert_eq!(greedy.token_logprobs.len(), prepared.class.paths[greedy.index].len());
    }

    #[test]
    fn mock_is_bit_deterministic(hist in prop::collection::vec(0usize..20, 0..5)) {
        let set = skills();
        let script = MockScript::default().with_plan("Put a chilled apple on the dining table.", &["find an apple", "pick up the apple", "done"]);
        let a = MockScorer::new(script.clone(), &corpus(&set)).unwrap();
        let b = MockScorer::new(script, &corpus(&set)).unwrap();
        let ids = a.tokenize(&prompt(&set, &hist)).unwrap().ids;
        prop_assert_eq!(&ids, &b.tokenize(&prompt(&set, &hist)).unwrap().ids);
        let la = a.next_token_logprobs(&ids, None).unwrap();
        let lb = b.next_token_logprobs(&ids, None).unwrap();
        prop_assert!(la.iter().zip(&lb).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits()));
    }
}

#[test]
fn trie_has_one_leaf_per_skill() {
    let set = skills();
    let scorer = MockScorer::uniform(&corpus(&set));
    for hist in [vec![], vec![0], vec![0, 3, 5]] {
        let text = prompt(&set, &hist);
        let ids = scorer.tokenize(&text).unwrap().ids;
        let mut dec = Decoder::new(&set).unwrap();
        let prepared = dec.prepare(&scorer, &text, &ids).unwrap();
        assert_eq!(prepared.class.trie.leaf_count(), set.len());
        assert!(text.starts_with(
            &scorer.tokenize(&text).unwrap().pieces[..prepared.context.len()].concat()
        ));
    }
}
