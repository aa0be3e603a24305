use procstory_core::{read_jsonl, Participant};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{RecordWriter, StoryRecord};
use crate::args::ExtractArgs;
use crate::config::{output, required};
use crate::error::Result;
use crate::{log, setup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub id: String,
    pub participants: Vec<Participant>,
}

pub fn run(args: ExtractArgs) -> Result<()> {
    let mut cfg = super::load_config(&args.io.common)?;
    if args.io.input.is_some() {
        cfg.extract.input.clone_from(&args.io.input);
    }
    if args.io.output.is_some() {
        cfg.extract.output.clone_from(&args.io.output);
    }
    let records: Vec<StoryRecord> = read_jsonl(required("input stories", &cfg.extract.input)?)?;
    let out = output("participant output", &cfg.extract.output)?;
    let extractor = setup::extractor(&cfg, setup::wordnet(&cfg)?);
    let mut writer = RecordWriter::create(out)?;
    for r in &records {
        let extraction = extractor.extract(&r.sentences)?;
        log::warnings("extract-participants", &extraction.warnings);
        writer.write(&ParticipantRecord {
            id: r.id.clone(),
            participants: extraction.participants,
        })?;
    }
    log::event(
        "extract_done",
        json!({ "records": records.len(), "output": out.display().to_string() }),
    );
    Ok(())
}
