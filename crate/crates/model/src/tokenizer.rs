//! Tokenizers feeding the encoder. Both implementations only produce content ids;
//! special tokens are placed by the input builder.

use std::collections::HashMap;
use std::path::Path;

use procstory_core::text::word_tokens;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

pub trait Tokenizer: Send + Sync {
    fn encode(&self, text: &str) -> Vec<u32>;
    fn cls_id(&self) -> u32;
    fn sep_id(&self) -> u32;
    fn pad_id(&self) -> u32;
    fn vocab_size(&self) -> usize;
    fn spec(&self) -> TokenizerSpec;

    /// Token strings in id order, for tokenizers backed by a vocabulary file.
    fn vocabulary(&self) -> Option<Vec<String>> {
        None
    }
}

/// Serializable description used by checkpoints to rebuild a tokenizer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TokenizerSpec {
    Hashed { vocab_size: usize },
    WordPiece { vocab_file: String, lowercase: bool },
}

impl TokenizerSpec {
    /// `base` resolves a relative `vocab_file`.
    pub fn build(&self, base: &Path) -> Result<Box<dyn Tokenizer>> {
        match self {
            TokenizerSpec::Hashed { vocab_size } => Ok(Box::new(HashedTokenizer::new(*vocab_size)?)),
            TokenizerSpec::WordPiece { vocab_file, lowercase } => {
                let path = base.join(vocab_file);
                let mut tok = WordPieceTokenizer::from_file(&path, *lowercase)?;
                tok.vocab_file = vocab_file.clone();
                Ok(Box::new(tok))
            }
        }
    }
}

const HASHED_SPECIALS: u32 = 4;

/// Word-level tokenizer that hashes lowercase words into a fixed number of buckets.
/// Ids 0..4 are pad, cls, sep and unk.
#[derive(Debug, Clone)]
pub struct HashedTokenizer {
    vocab_size: usize,
}

impl HashedTokenizer {
    pub fn new(vocab_size: usize) -> Result<Self> {
        if vocab_size <= HASHED_SPECIALS as usize {
            return Err(ModelError::Config(format!("vocab_size must exceed {HASHED_SPECIALS}")));
        }
        Ok(Self { vocab_size })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl Tokenizer for HashedTokenizer {
    fn encode(&self, text: &str) -> Vec<u32> {
        let buckets = (self.vocab_size as u64) - u64::from(HASHED_SPECIALS);
        word_tokens(text)
            .into_iter()
            .map(|w| HASHED_SPECIALS + (fnv1a(w.to_lowercase().as_bytes()) % buckets) as u32)
            .collect()
    }
    fn cls_id(&self) -> u32 {
        1
    }
    fn sep_id(&self) -> u32 {
        2
    }
    fn pad_id(&self) -> u32 {
        0
    }
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
    fn spec(&self) -> TokenizerSpec {
        TokenizerSpec::Hashed {
            vocab_size: self.vocab_size,
        }
    }
}

/// Greedy longest-match WordPiece over a BERT-style `vocab.txt`.
#[derive(Debug, Clone)]
pub struct WordPieceTokenizer {
    vocab: HashMap<String, u32>,
    lowercase: bool,
    cls: u32,
    sep: u32,
    pad: u32,
    unk: u32,
    vocab_file: String,
    max_chars_per_word: usize,
}

impl WordPieceTokenizer {
    pub fn from_file(path: &Path, lowercase: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let tokens: Vec<&str> = text.lines().collect();
        let mut tok = Self::from_tokens(&tokens, lowercase)?;
        tok.vocab_file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| "vocab.txt".into());
        Ok(tok)
    }

    pub fn from_tokens(tokens: &[&str], lowercase: bool) -> Result<Self> {
        let vocab: HashMap<String, u32> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.to_string(), i as u32))
            .collect();
        let special = |name: &str| {
            vocab
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::Config(format!("vocabulary lacks {name}")))
        };
        Ok(Self {
            cls: special("[CLS]")?,
            sep: special("[SEP]")?,
            pad: special("[PAD]")?,
            unk: special("[UNK]")?,
            vocab,
            lowercase,
            vocab_file: "vocab.txt".into(),
            max_chars_per_word: 100,
        })
    }

    fn encode_word(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > self.max_chars_per_word {
            out.push(self.unk);
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let mut piece: String = chars[start..end].iter().collect();
                if start > 0 {
                    piece.insert_str(0, "##");
                }
                if let Some(&id) = self.vocab.get(&piece) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.unk);
                    return;
                }
            }
        }
        out.extend(pieces);
    }
}

impl Tokenizer for WordPieceTokenizer {
    fn encode(&self, text: &str) -> Vec<u32> {
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_string()
        };
        let mut out = Vec::new();
        for word in word_tokens(&text) {
            // BERT's basic tokenizer splits apostrophes and hyphens off as well.
            for part in split_inner_punct(word) {
                self.encode_word(part, &mut out);
            }
        }
        out
    }
    fn cls_id(&self) -> u32 {
        self.cls
    }
    fn sep_id(&self) -> u32 {
        self.sep
    }
    fn pad_id(&self) -> u32 {
        self.pad
    }
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
    fn spec(&self) -> TokenizerSpec {
        TokenizerSpec::WordPiece {
            vocab_file: self.vocab_file.clone(),
            lowercase: self.lowercase,
        }
    }
    fn vocabulary(&self) -> Option<Vec<String>> {
        let mut entries: Vec<(&String, &u32)> = self.vocab.iter().collect();
        entries.sort_by_key(|(_, &id)| id);
        Some(entries.into_iter().map(|(t, _)| t.clone()).collect())
    }
}

fn split_inner_punct(word: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    for (i, c) in word.char_indices() {
        if c == '\'' || c == '-' {
            if start < i {
                parts.push(&word[start..i]);
            }
            parts.push(&word[i..i + 1]);
            start = i + 1;
        }
    }
    if start < word.len() {
        parts.push(&word[start..]);
    }
    parts
}
