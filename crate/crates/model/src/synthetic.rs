//! Separable toy story pairs for smoke training.
//!
//! Each pair shares a person and an object. The plausible story washes the object, the
//! implausible one breaks it and then fills it, which conflicts on `functional`.

use procstory_core::{AnnotatedStory, Plausibility, StoryPair};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PEOPLE: [&str; 8] = ["Ann", "Tom", "Mary", "John", "Lisa", "Mike", "Sara", "Paul"];
const OBJECTS: [&str; 8] = ["cup", "plate", "bowl", "glass", "vase", "jar", "mug", "pot"];

fn story(person: &str, object: &str, middle: &str) -> AnnotatedStory {
    AnnotatedStory::from_sentences(&[
        format!("{person} picked up the {object}."),
        format!("{person} {middle} the {object}."),
        format!("{person} walked to the table."),
        format!("{person} filled the {object} with water."),
    ])
    .with_participant(person, true)
    .with_participant(object, false)
    .with_participant("table", false)
    .with_participant("water", false)
    .with_annotation(object, 0, "location", "irrelevant", "picked up")
    .with_annotation(object, 3, "contain", "false", "true")
    .with_annotation("water", 3, "location", "irrelevant", "put into a container")
    .with_annotation(person, 2, "h_location", "irrelevant", "moved somewhere new")
}

/// `count` pairs with distinct (person, object) combinations, shuffled by `seed`.
pub fn toy_pairs(count: usize, seed: u64) -> Vec<StoryPair> {
    let mut combos: Vec<(usize, usize)> = (0..PEOPLE.len())
        .flat_map(|p| (0..OBJECTS.len()).map(move |o| (p, o)))
        .collect();
    combos.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    combos
        .into_iter()
        .cycle()
        .take(count)
        .enumerate()
        .map(|(i, (p, o))| {
            let (person, object) = (PEOPLE[p], OBJECTS[o]);
            let plausible = story(person, object, "washed")
                .with_annotation(object, 1, "clean", "false", "true")
                .with_label(Plausibility::Plausible);
            let implausible = story(person, object, "broke")
                .with_annotation(object, 1, "functional", "true", "false")
                .with_annotation(object, 3, "functional", "true", "irrelevant")
                .with_conflict(1, 3)
                .with_label(Plausibility::Implausible);
            StoryPair {
                pair_id: format!("toy-{i:03}"),
                plausible,
                implausible,
            }
        })
        .collect()
}
