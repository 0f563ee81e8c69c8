//! Mapping input files to letters and back, byte for byte.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use treepred::Letter;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenize {
    /// Maximal runs of whitespace and of non-whitespace, ids by first occurrence.
    Words,
    /// Whitespace-separated integer letter ids.
    Ids,
    /// One letter per byte.
    Bytes,
}

/// Letters plus the header metadata needed to rebuild the input.
pub struct Tokenized {
    pub letters: Vec<Letter>,
    pub metadata: Value,
    /// Smallest alphabet that holds every letter.
    pub alphabet_size: u64,
}

fn runs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut prev: Option<bool> = None;
    for (i, c) in text.char_indices() {
        let ws = c.is_whitespace();
        if prev.is_some_and(|p| p != ws) {
            out.push(&text[start..i]);
            start = i;
        }
        prev = Some(ws);
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

pub fn tokenize(input: &[u8], mode: Tokenize) -> Result<Tokenized> {
    match mode {
        Tokenize::Bytes => Ok(Tokenized {
            letters: input.iter().map(|b| Letter(*b as u64)).collect(),
            metadata: json!({ "tokenize": "bytes" }),
            alphabet_size: 256,
        }),
        Tokenize::Words => {
            let text = std::str::from_utf8(input).context("input is not UTF-8; use --tokenize bytes")?;
            let mut dictionary: Vec<&str> = Vec::new();
            let mut index = std::collections::HashMap::new();
            let letters = runs(text)
                .into_iter()
                .map(|tok| {
                    let id = *index.entry(tok).or_insert_with(|| {
                        dictionary.push(tok);
                        dictionary.len() as u64 - 1
                    });
                    Letter(id)
                })
                .collect();
            Ok(Tokenized {
                letters,
                alphabet_size: dictionary.len() as u64,
                metadata: json!({ "tokenize": "words", "dictionary": dictionary }),
            })
        }
        Tokenize::Ids => {
            let text = std::str::from_utf8(input).context("input is not UTF-8")?;
            let mut letters = Vec::new();
            // Whitespace before each id, then the trailing whitespace.
            let mut separators = vec![String::new()];
            for run in runs(text) {
                if run.starts_with(char::is_whitespace) {
                    *separators.last_mut().expect("never empty") = run.to_string();
                } else {
                    let id: u64 = run.parse().with_context(|| format!("token {run:?} is not a letter id"))?;
                    letters.push(Letter(id));
                    separators.push(String::new());
                }
            }
            let alphabet_size = letters.iter().map(|a| a.0 + 1).max().unwrap_or(0);
            Ok(Tokenized { letters, alphabet_size, metadata: ids_layout(separators) })
        }
    }
}

/// Separator layout, compact when the input is one separator repeated.
fn ids_layout(separators: Vec<String>) -> Value {
    let n = separators.len();
    if n == 1 {
        return json!({ "tokenize": "ids", "sep": " ", "trailing": separators[0] });
    }
    let inner = &separators[1..n - 1];
    if separators[0].is_empty() && inner.windows(2).all(|w| w[0] == w[1]) {
        let sep = inner.first().cloned().unwrap_or_else(|| " ".into());
        json!({ "tokenize": "ids", "sep": sep, "trailing": separators[n - 1] })
    } else {
        json!({ "tokenize": "ids", "separators": separators })
    }
}

#[derive(Deserialize)]
#[serde(tag = "tokenize", rename_all = "lowercase")]
enum Layout {
    Bytes,
    Words {
        dictionary: Vec<String>,
    },
    Ids {
        #[serde(default)]
        sep: Option<String>,
        #[serde(default)]
        trailing: Option<String>,
        #[serde(default)]
        separators: Option<Vec<String>>,
    },
}

pub fn detokenize(letters: &[Letter], metadata: Option<&Value>) -> Result<Vec<u8>> {
    let layout: Layout = match metadata {
        Some(m) => serde_json::from_value(m.clone()).context("stream metadata has no usable token layout")?,
        None => Layout::Ids { sep: Some("\n".into()), trailing: Some("\n".into()), separators: None },
    };
    Ok(match layout {
        Layout::Bytes => letters
            .iter()
            .map(|a| u8::try_from(a.0).with_context(|| format!("letter {a} is not a byte")))
            .collect::<Result<_>>()?,
        Layout::Words { dictionary } => {
            let mut out = String::new();
            for a in letters {
                out.push_str(dictionary.get(a.index()).with_context(|| format!("letter {a} not in the dictionary"))?);
            }
            out.into_bytes()
        }
        Layout::Ids { sep, trailing, separators } => {
            let mut out = String::new();
            match separators {
                Some(seps) => {
                    if seps.len() != letters.len() + 1 {
                        bail!("separator layout does not match the symbol count");
                    }
                    for (s, a) in seps.iter().zip(letters) {
                        out.push_str(s);
                        out.push_str(&a.0.to_string());
                    }
                    out.push_str(&seps[letters.len()]);
                }
                None => {
                    let sep = sep.unwrap_or_else(|| " ".into());
                    let ids: Vec<String> = letters.iter().map(|a| a.0.to_string()).collect();
                    out.push_str(&ids.join(&sep));
                    out.push_str(&trailing.unwrap_or_default());
                }
            }
            out.into_bytes()
        }
    })
}
