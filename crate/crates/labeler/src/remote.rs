//! Client for an external deep semantic parser that returns `SentenceParse` JSON.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{LabelerError, Result};
use crate::parse::{SentenceParse, SentenceParser};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteParserConfig {
    pub endpoint: String,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
}

fn default_timeout_s() -> u64 {
    30
}

/// POSTs `{"sentence": ...}` and expects a `SentenceParse` body.
pub struct RemoteParser {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteParser {
    pub fn new(config: &RemoteParserConfig) -> Self {
        Self {
            endpoint: config.endpoint.clone(),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(config.timeout_s))
                .build(),
        }
    }
}

impl SentenceParser for RemoteParser {
    fn parse_sentence(&self, text: &str, index: usize) -> Result<SentenceParse> {
        let fail = |message: String| LabelerError::Parse {
            sentence: index,
            message,
        };
        let response = self
            .agent
            .post(&self.endpoint)
            .send_json(serde_json::json!({ "sentence": text }))
            .map_err(|e| fail(e.to_string()))?;
        response.into_json::<SentenceParse>().map_err(|e| fail(e.to_string()))
    }
}
