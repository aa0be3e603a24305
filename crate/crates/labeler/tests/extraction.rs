use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use procstory_core::{load_dataset, AnnotatedStory, AttributeSchema, StoryPair};
use procstory_labeler::{
    detect_noun_phrases, filter_core_roles, filter_physical, ExtractionStages, Extractor, FallbackParser,
    MostFrequentSense, OntologyConfig, SentenceParser,
};
use procstory_lexicon::{bundled_wordnet_dir, MemoryLexicon, Roots, WordNet};
use proptest::prelude::*;

fn wordnet() -> Arc<WordNet> {
    static WN: OnceLock<Arc<WordNet>> = OnceLock::new();
    WN.get_or_init(|| Arc::new(WordNet::load(bundled_wordnet_dir()).unwrap()))
        .clone()
}

fn extractor(stages: ExtractionStages) -> Extractor {
    let wn = wordnet();
    Extractor {
        parser: Arc::new(FallbackParser::new(wn.clone())),
        selector: Arc::new(MostFrequentSense::new(wn.clone(), Roots::WORDNET_30)),
        lexicon: wn,
        roots: Roots::WORDNET_30,
        ontology: OntologyConfig::default(),
        stages,
    }
}

fn fixture() -> Vec<StoryPair> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/trip_fixture.jsonl");
    load_dataset(path, &AttributeSchema::trip_default()).unwrap()
}

fn stories() -> Vec<AnnotatedStory> {
    fixture()
        .into_iter()
        .flat_map(|p| [p.plausible, p.implausible])
        .collect()
}

fn sentences(s: &[&str]) -> Vec<String> {
    s.iter().map(|x| x.to_string()).collect()
}

/// Micro precision and recall of extracted surfaces against gold participants.
fn micro(stages: ExtractionStages) -> (f64, f64) {
    let ex = extractor(stages);
    let (mut tp, mut predicted, mut gold) = (0usize, 0usize, 0usize);
    for story in stories() {
        let got: BTreeSet<String> = ex
            .extract(&story.sentences)
            .unwrap()
            .participants
            .into_iter()
            .map(|p| p.surface)
            .collect();
        let want: BTreeSet<String> = story.participants.iter().map(|p| p.surface.clone()).collect();
        tp += got.intersection(&want).count();
        predicted += got.len();
        gold += want.len();
    }
    (tp as f64 / predicted as f64, tp as f64 / gold as f64)
}

const NP: ExtractionStages = ExtractionStages {
    core_roles: false,
    physical: false,
};
const NP_CR: ExtractionStages = ExtractionStages {
    core_roles: true,
    physical: false,
};
const FULL: ExtractionStages = ExtractionStages {
    core_roles: true,
    physical: true,
};

#[test]
fn fixture_has_twenty_stories() {
    assert_eq!(stories().len(), 20);
}

#[test]
fn full_pipeline_precision_and_recall() {
    let (p, r) = micro(FULL);
    assert!(p >= 0.70 && r >= 0.80, "precision {p:.3} recall {r:.3}");
}

#[test]
fn physicality_stage_raises_precision() {
    let (with, _) = micro(FULL);
    let (without, _) = micro(NP_CR);
    assert!(without < with, "without {without:.3} with {with:.3}");
}

#[test]
fn stage_ordering_on_fixture() {
    let (np, _) = micro(NP);
    let (np_cr, _) = micro(NP_CR);
    let (full, _) = micro(FULL);
    assert!(full >= np_cr && np_cr >= np - 0.02, "{np:.3} {np_cr:.3} {full:.3}");
}

fn surfaces(s: &str) -> Vec<String> {
    extractor(FULL)
        .extract(&sentences(&[s]))
        .unwrap()
        .participants
        .into_iter()
        .map(|p| p.surface)
        .collect()
}

#[test]
fn compound_nouns_sharing_a_role_merge() {
    assert_eq!(surfaces("Tom put the dog in the dog cage."), ["tom", "dog", "dog cage"]);
    assert_eq!(surfaces("Tom cleaned the guinea pig cage."), ["tom", "guinea pig cage"]);
}

#[test]
fn guinea_pig_cage_is_one_three_token_candidate() {
    let wn = wordnet();
    let s = sentences(&["Tom cleaned the guinea pig cage."]);
    let parse = FallbackParser::new(wn).parse_story(&s).unwrap();
    let cands = detect_noun_phrases(&parse, &s, &OntologyConfig::default());
    let cage = cands.iter().find(|c| c.surface.ends_with("cage")).unwrap();
    assert_eq!(cage.surface, "guinea pig cage");
    assert_eq!(cage.tokens.len(), 3);
}

#[test]
fn sentence_without_nouns_yields_nothing() {
    assert!(surfaces("Then it was over quickly!").is_empty());
    let s = sentences(&["Wow!"]);
    let parse = FallbackParser::new(wordnet()).parse_story(&s).unwrap();
    assert!(detect_noun_phrases(&parse, &s, &OntologyConfig::default()).is_empty());
}

#[test]
fn relational_attachments_are_not_core() {
    let s = sentences(&["Bob drank all of the milk."]);
    let parse = FallbackParser::new(wordnet()).parse_story(&s).unwrap();
    let cfg = OntologyConfig::default();
    let cands = detect_noun_phrases(&parse, &s, &cfg);
    let milk = cands.iter().find(|c| c.surface == "milk").unwrap();
    assert_eq!(milk.role.as_deref(), Some("ASSOC-WITH"));
    let kept: Vec<_> = filter_core_roles(cands, &cfg).into_iter().map(|c| c.surface).collect();
    assert_eq!(kept, ["bob"]);
    assert!(filter_core_roles(Vec::new(), &cfg).is_empty());
}

#[test]
fn physical_filter_keeps_notebook_and_drops_fun() {
    let got = surfaces("Ann wrote in the notebook for fun.");
    assert!(got.contains(&"notebook".to_string()));
    assert!(!got.contains(&"fun".to_string()));
}

#[test]
fn unknown_words_are_dropped_with_warning() {
    let wn = wordnet();
    let s = sentences(&["Ann fed the blorptang."]);
    let parse = FallbackParser::new(wn.clone()).parse_story(&s).unwrap();
    let cfg = OntologyConfig::default();
    let cands = filter_core_roles(detect_noun_phrases(&parse, &s, &cfg), &cfg);
    assert!(cands.iter().any(|c| c.surface == "blorptang"));
    let mut warnings = Vec::new();
    let selector = MostFrequentSense::new(Arc::new(MemoryLexicon::new()), Roots::WORDNET_30);
    let kept = filter_physical(
        cands.clone(),
        &s,
        &selector,
        wn.as_ref(),
        &Roots::WORDNET_30,
        &mut warnings,
    );
    assert!(kept.iter().all(|c| c.surface != "blorptang"));
    assert!(warnings.iter().any(|w| w.message.contains("blorptang")));
}

#[test]
fn people_are_flagged_human() {
    let ex = extractor(FULL);
    let got = ex
        .extract(&sentences(&["Sarah called her mother about the cake."]))
        .unwrap();
    let human: Vec<_> = got
        .participants
        .iter()
        .filter(|p| p.is_human)
        .map(|p| p.surface.as_str())
        .collect();
    assert_eq!(human, ["sarah", "mother"]);
}

#[test]
fn repeated_story_gives_same_participants() {
    let ex = extractor(FULL);
    for story in stories().into_iter().take(4) {
        let once = ex.extract(&story.sentences).unwrap().participants;
        let doubled: Vec<String> = story.sentences.iter().chain(&story.sentences).cloned().collect();
        assert_eq!(ex.extract(&doubled).unwrap().participants, once);
    }
}

#[test]
fn mentions_are_recorded_for_extracted_participants() {
    let story = &stories()[0];
    let mut labeled = AnnotatedStory::new(story.sentences.clone());
    labeled.participants = extractor(FULL).extract(&story.sentences).unwrap().participants;
    labeled.recompute_mentions();
    assert!(labeled.participants.iter().all(|p| !p.mentions.is_empty()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn each_stage_only_removes_candidates(story in 0usize..20, drop_sentence in 0usize..5) {
        let all = stories();
        let mut s = all[story].sentences.clone();
        s.remove(drop_sentence.min(s.len() - 1));
        let wn = wordnet();
        let cfg = OntologyConfig::default();
        let parse = FallbackParser::new(wn.clone()).parse_story(&s).unwrap();
        let np = detect_noun_phrases(&parse, &s, &cfg);
        let cr = filter_core_roles(np.clone(), &cfg);
        let selector = MostFrequentSense::new(wn.clone(), Roots::WORDNET_30);
        let pp = filter_physical(cr.clone(), &s, &selector, wn.as_ref(), &Roots::WORDNET_30, &mut Vec::new());
        prop_assert!(cr.iter().all(|c| np.contains(c)));
        prop_assert!(pp.iter().all(|c| cr.contains(c)));
        for sp in &parse.sentences {
            prop_assert!(sp.terms.iter().all(|t| cfg.accepts_class(&t.class) || t.class == "ONT::IMPRO"));
        }
    }
}
