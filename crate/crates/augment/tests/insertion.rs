use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use procstory_augment::{insert_words, Insertion, InsertionConfig, InsertionModel, LexiconInsertionModel};
use procstory_core::text::word_tokens;
use procstory_core::{load_dataset, validate_story_pair, AnnotatedStory, AttributeSchema, Plausibility, StoryPair};
use procstory_lexicon::{bundled_wordnet_dir, WordNet};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn wordnet() -> Arc<WordNet> {
    static WN: OnceLock<Arc<WordNet>> = OnceLock::new();
    WN.get_or_init(|| Arc::new(WordNet::load(bundled_wordnet_dir()).unwrap()))
        .clone()
}

fn fixture() -> Vec<StoryPair> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/trip_fixture.jsonl");
    load_dataset(path, &AttributeSchema::trip_default()).unwrap()
}

/// Returns the same fixed candidates for every sentence.
struct Scripted(Vec<(usize, &'static str, f64)>);

impl InsertionModel for Scripted {
    fn propose(&self, _: &str, _: &[usize], _: &mut ChaCha8Rng) -> Vec<Insertion> {
        self.0
            .iter()
            .map(|&(position, word, score)| Insertion {
                position,
                word: word.into(),
                score,
            })
            .collect()
    }
}

fn soup_pair(participant: &str) -> StoryPair {
    let story = |label| {
        AnnotatedStory::from_sentences(&["Tom ate the cold soup"])
            .with_participant("Tom", true)
            .with_participant(participant, false)
            .with_annotation(participant, 0, "exist", "true", "false")
            .with_label(label)
    };
    StoryPair {
        pair_id: "soup".into(),
        plausible: story(Plausibility::Plausible),
        implausible: story(Plausibility::Implausible).with_conflict(0, 0),
    }
}

#[test]
fn adjective_and_noun_modifier_insertion() {
    let model = Scripted(vec![(12, "wonderful", 0.9), (17, "tomato", 0.8)]);
    let out = insert_words(&soup_pair("soup"), &model, 0, &InsertionConfig::default());
    assert_eq!(out.plausible.sentences[0], "Tom ate the wonderful cold tomato soup");
    assert_eq!(out.plausible.annotations, soup_pair("soup").plausible.annotations);
    let soup = out.plausible.participant("soup").unwrap();
    assert_eq!(soup.mentions[0].start, 34);
}

#[test]
fn insertion_inside_a_participant_phrase_is_rejected() {
    let model = Scripted(vec![(12, "wonderful", 0.9), (17, "tomato", 0.8)]);
    let out = insert_words(&soup_pair("cold soup"), &model, 0, &InsertionConfig::default());
    assert_eq!(out.plausible.sentences[0], "Tom ate the wonderful cold soup");
}

#[test]
fn sentence_start_low_scores_and_participant_words_are_rejected() {
    let model = Scripted(vec![
        (0, "Then", 0.99),
        (8, "soup", 0.99),
        (12, "hot", 0.1),
        (4, "quickly", f64::NAN),
    ]);
    let pair = soup_pair("soup");
    assert_eq!(insert_words(&pair, &model, 0, &InsertionConfig::default()), pair);
}

#[test]
fn at_most_two_insertions_per_sentence() {
    let model = Scripted(vec![
        (4, "then", 0.6),
        (8, "all", 0.7),
        (12, "wonderful", 0.9),
        (17, "tomato", 0.8),
    ]);
    let out = insert_words(&soup_pair("soup"), &model, 0, &InsertionConfig::default());
    assert_eq!(out.plausible.sentences[0], "Tom ate the wonderful cold tomato soup");
    let one = InsertionConfig {
        max_per_sentence: 1,
        threshold: 0.0,
    };
    let out = insert_words(&soup_pair("soup"), &model, 0, &one);
    assert_eq!(out.plausible.sentences[0], "Tom ate the wonderful cold soup");
}

#[test]
fn empty_model_leaves_pair_unchanged() {
    let pair = fixture().remove(0);
    assert_eq!(
        insert_words(&pair, &Scripted(vec![]), 3, &InsertionConfig::default()),
        pair
    );
}

fn is_subsequence(short: &[&str], long: &[&str]) -> bool {
    let mut it = long.iter();
    short.iter().all(|t| it.any(|u| u == t))
}

#[test]
fn lexicon_model_changes_fixture_text_but_not_annotations() {
    let schema = AttributeSchema::trip_default();
    let model = LexiconInsertionModel::new(wordnet());
    let mut changed = 0;
    for pair in fixture() {
        let out = insert_words(&pair, &model, 11, &InsertionConfig::default());
        assert!(validate_story_pair(&out, &schema).is_empty());
        for (a, b) in [(&pair.plausible, &out.plausible), (&pair.implausible, &out.implausible)] {
            assert_eq!(a.annotations, b.annotations);
            assert_eq!(a.participant_names(), b.participant_names());
            for (s, t) in a.sentences.iter().zip(&b.sentences) {
                let (ts, tt) = (word_tokens(s), word_tokens(t));
                assert!(is_subsequence(&ts, &tt), "{s:?} -> {t:?}");
                assert!(tt.len() <= ts.len() + 2);
                changed += usize::from(s != t);
            }
            for p in &b.participants {
                assert_eq!(p.mentions.len(), a.participant(&p.surface).unwrap().mentions.len());
            }
        }
    }
    assert!(changed > 20, "only {changed} sentences changed");
}

#[test]
fn shared_sentences_get_identical_insertions() {
    let model = LexiconInsertionModel::new(wordnet());
    for pair in fixture() {
        let out = insert_words(&pair, &model, 5, &InsertionConfig::default());
        for (i, s) in pair.plausible.sentences.iter().enumerate() {
            if pair.implausible.sentences.get(i) == Some(s)
                && pair.plausible.participants == pair.implausible.participants
            {
                assert_eq!(out.plausible.sentences[i], out.implausible.sentences[i]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_output(seed in any::<u64>(), idx in 0usize..10) {
        let model = LexiconInsertionModel::new(wordnet());
        let pair = fixture()[idx].clone();
        let cfg = InsertionConfig::default();
        prop_assert_eq!(insert_words(&pair, &model, seed, &cfg), insert_words(&pair, &model, seed, &cfg));
    }
}
