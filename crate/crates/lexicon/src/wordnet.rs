//! Reader for the WordNet 3.0 database file set (index.*, data.noun, *.exc).

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LexiconError, Result};
use crate::morphy::{base_forms, WordClass};
use crate::resource::{LexicalResource, SynsetId};

#[derive(Debug, Clone)]
struct NounSynset {
    lemmas: Vec<String>,
    hypernyms: Vec<SynsetId>,
}

/// Noun hierarchy plus lemma sets for the other open classes.
#[derive(Debug, Clone)]
pub struct WordNet {
    noun_index: HashMap<String, Vec<SynsetId>>,
    synsets: HashMap<SynsetId, NounSynset>,
    verbs: HashSet<String>,
    adjectives: HashSet<String>,
    adverbs: HashSet<String>,
    exceptions: HashMap<WordClass, HashMap<String, Vec<String>>>,
}

/// How a surface word relates to a verb lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerbForm {
    Base(String),
    Inflected(String),
}

impl VerbForm {
    pub fn lemma(&self) -> &str {
        match self {
            VerbForm::Base(l) | VerbForm::Inflected(l) => l,
        }
    }
}

impl WordNet {
    /// Loads `index.noun`, `data.noun`, `index.{verb,adj,adv}` and the exception lists
    /// from `dir`. Verb, adjective and adverb files are optional.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let noun_index = read_index(&dir.join("index.noun"))?;
        let synsets = read_noun_data(&dir.join("data.noun"))?;
        let lemma_set = |name: &str| -> Result<HashSet<String>> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(HashSet::new());
            }
            Ok(read_index(&path)?.into_keys().collect())
        };
        let mut exceptions = HashMap::new();
        for (class, name) in [
            (WordClass::Noun, "noun.exc"),
            (WordClass::Verb, "verb.exc"),
            (WordClass::Adjective, "adj.exc"),
            (WordClass::Adverb, "adv.exc"),
        ] {
            exceptions.insert(class, read_exceptions(&dir.join(name))?);
        }
        Ok(Self {
            noun_index,
            synsets,
            verbs: lemma_set("index.verb")?,
            adjectives: lemma_set("index.adj")?,
            adverbs: lemma_set("index.adv")?,
            exceptions,
        })
    }

    pub fn synset_count(&self) -> usize {
        self.synsets.len()
    }

    /// Every noun synset id in ascending order.
    pub fn noun_synset_ids(&self) -> Vec<SynsetId> {
        let mut ids: Vec<SynsetId> = self.synsets.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    fn exceptions(&self, class: WordClass) -> &HashMap<String, Vec<String>> {
        &self.exceptions[&class]
    }

    /// Base forms of `word` present in the lemma index of `class`.
    pub fn lemmatize(&self, word: &str, class: WordClass) -> Vec<String> {
        let word = word.trim().to_lowercase().replace(' ', "_");
        base_forms(&word, class, self.exceptions(class))
            .into_iter()
            .filter(|f| self.has_lemma(f, class))
            .collect()
    }

    fn has_lemma(&self, lemma: &str, class: WordClass) -> bool {
        match class {
            WordClass::Noun => self.noun_index.contains_key(lemma),
            WordClass::Verb => self.verbs.contains(lemma),
            WordClass::Adjective => self.adjectives.contains(lemma),
            WordClass::Adverb => self.adverbs.contains(lemma),
        }
    }

    pub fn is_word(&self, word: &str, class: WordClass) -> bool {
        !self.lemmatize(word, class).is_empty()
    }

    /// Noun lemma for a surface form, preferring a rewritten base over the form itself
    /// when both exist (so "glasses" maps to "glass"). Words ending in "ss" keep their form.
    pub fn noun_lemma(&self, word: &str) -> Option<String> {
        let forms = self.lemmatize(word, WordClass::Noun);
        if word.ends_with("ss") && forms.first().is_some_and(|f| f == word) {
            return forms.first().cloned();
        }
        forms.get(1).or(forms.first()).cloned()
    }

    pub fn verb_form(&self, word: &str) -> Option<VerbForm> {
        let w = word.trim().to_lowercase();
        let forms = self.lemmatize(&w, WordClass::Verb);
        if let Some(base) = forms.iter().find(|f| **f != w) {
            let irregular = self.exceptions(WordClass::Verb).contains_key(&w);
            let regular = base.len() >= 3 && ["s", "ed", "ing"].iter().any(|s| w.ends_with(s));
            if irregular || regular {
                return Some(VerbForm::Inflected(base.clone()));
            }
        }
        forms.contains(&w).then_some(VerbForm::Base(w))
    }
}

impl LexicalResource for WordNet {
    fn noun_synsets(&self, lemma: &str) -> Vec<SynsetId> {
        let mut out = Vec::new();
        for form in self.lemmatize(lemma, WordClass::Noun) {
            for &s in &self.noun_index[&form] {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out
    }

    fn hypernyms(&self, synset: SynsetId) -> Vec<SynsetId> {
        self.synsets
            .get(&synset)
            .map(|s| s.hypernyms.clone())
            .unwrap_or_default()
    }

    fn lemmas(&self, synset: SynsetId) -> Vec<String> {
        self.synsets
            .get(&synset)
            .map(|s| s.lemmas.iter().map(|l| l.replace('_', " ")).collect())
            .unwrap_or_default()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> LexiconError {
    LexiconError::Format {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

// lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt synset_offset...
fn read_index(path: &Path) -> Result<HashMap<String, Vec<SynsetId>>> {
    let text = read(path)?;
    let mut index = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with(' ') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || format_err(path, n + 1, "truncated index entry");
        let synset_cnt: usize = fields.get(2).and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let p_cnt: usize = fields.get(3).and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let offsets_at = 4 + p_cnt + 2;
        let offsets = fields
            .get(offsets_at..offsets_at + synset_cnt)
            .ok_or_else(bad)?
            .iter()
            .map(|f| f.parse::<SynsetId>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err(path, n + 1, e.to_string()))?;
        index.insert(fields[0].to_string(), offsets);
    }
    Ok(index)
}

// offset lex_filenum ss_type w_cnt(hex) [word lex_id]... p_cnt [ptr offset pos src/tgt]... | gloss
fn read_noun_data(path: &Path) -> Result<HashMap<SynsetId, NounSynset>> {
    let text = read(path)?;
    let mut synsets = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with(' ') || line.trim().is_empty() {
            continue;
        }
        let body = line.split(" | ").next().unwrap_or(line);
        let fields: Vec<&str> = body.split_whitespace().collect();
        let bad = |m: &str| format_err(path, n + 1, m);
        let offset: SynsetId = fields
            .first()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad("bad offset"))?;
        let w_cnt = fields
            .get(3)
            .and_then(|f| usize::from_str_radix(f, 16).ok())
            .ok_or_else(|| bad("bad word count"))?;
        let lemmas: Vec<String> = (0..w_cnt)
            .map(|i| fields.get(4 + 2 * i).map(|w| strip_marker(w).to_lowercase()))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("truncated word list"))?;
        let p_at = 4 + 2 * w_cnt;
        let p_cnt: usize = fields
            .get(p_at)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad("bad pointer count"))?;
        let mut class = Vec::new();
        let mut instance = Vec::new();
        for i in 0..p_cnt {
            let at = p_at + 1 + 4 * i;
            let ptr = fields.get(at..at + 4).ok_or_else(|| bad("truncated pointer"))?;
            if ptr[2] != "n" {
                continue;
            }
            let target: SynsetId = ptr[1].parse().map_err(|_| bad("bad pointer offset"))?;
            match ptr[0] {
                "@" => class.push(target),
                "@i" => instance.push(target),
                _ => {}
            }
        }
        class.extend(instance);
        synsets.insert(
            offset,
            NounSynset {
                lemmas,
                hypernyms: class,
            },
        );
    }
    Ok(synsets)
}

// Adjective lemmas in data files may carry a syntactic marker such as "(a)".
fn strip_marker(word: &str) -> &str {
    word.split('(').next().unwrap_or(word)
}

fn read_exceptions(path: &Path) -> Result<HashMap<String, Vec<String>>> {
    if !path.exists() {
        return Ok(HashMap::new());
    }
    let text = read(path)?;
    let mut map: HashMap<String, Vec<String>> = HashMap::new();
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        if let Some(form) = parts.next() {
            map.entry(form.to_string())
                .or_default()
                .extend(parts.map(str::to_string));
        }
    }
    Ok(map)
}
