use procstory_core::{read_jsonl, AnnotatedStory};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{RecordWriter, StoryRecord};
use crate::args::LabelArgs;
use crate::config::{output, required};
use crate::error::Result;
use crate::{log, setup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub id: String,
    pub story: AnnotatedStory,
}

/// Records are written as they finish; when the service fails, earlier records and any
/// cached completions stay on disk.
pub fn run(args: LabelArgs) -> Result<()> {
    let mut cfg = super::load_config(&args.common)?;
    if args.input.is_some() {
        cfg.label.input.clone_from(&args.input);
    }
    if args.output.is_some() {
        cfg.label.output.clone_from(&args.output);
    }
    if args.cache_dir.is_some() {
        cfg.annotator.cache_dir.clone_from(&args.cache_dir);
    }
    cfg.label.participants_only |= args.participants_only;

    let records: Vec<StoryRecord> = read_jsonl(required("input stories", &cfg.label.input)?)?;
    let out = output("label output", &cfg.label.output)?;
    let wn = setup::wordnet(&cfg)?;
    let participants_only = cfg.label.participants_only;
    let (extractor, labeler) = if participants_only {
        (Some(setup::extractor(&cfg, wn)), None)
    } else {
        (None, Some(setup::labeler(&cfg, cfg.schema()?, wn)?))
    };

    let mut writer = RecordWriter::create(out)?;
    let mut annotations = 0usize;
    for r in &records {
        let (story, warnings) = match (&extractor, &labeler) {
            (Some(ex), _) => {
                let extraction = ex.extract(&r.sentences)?;
                let mut story = AnnotatedStory::new(r.sentences.clone());
                story.participants = extraction.participants;
                story.recompute_mentions();
                (story, extraction.warnings)
            }
            (None, Some(lab)) => {
                let labeled = lab.label_story(&r.sentences)?;
                (labeled.story, labeled.warnings)
            }
            (None, None) => unreachable!("one of extractor or labeler is built"),
        };
        log::warnings("label", &warnings);
        annotations += story.annotations.len();
        writer.write(&LabeledRecord {
            id: r.id.clone(),
            story,
        })?;
    }
    log::event(
        "label_done",
        json!({
            "records": records.len(),
            "annotations": annotations,
            "participants_only": participants_only,
            "output": out.display().to_string(),
        }),
    );
    Ok(())
}
