//! HXL-style semantic tags: grammar, rule and LLM taggers, and the pairwise tag score.

mod prompt;
mod rules;
mod tag;

use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::http::JsonClient;
use crate::schema::{sample_text_values, Column, DataTypeLabel};

pub use prompt::{
    build_prompt, default_examples, FewShotExample, PromptBundle, PromptQuery, PROMPT_VALUES,
    TAG_INSTRUCTIONS,
};
pub use rules::{is_masked_name, rule_tag};
pub use tag::{parse_tag, tag_match, HxlTag, TagMatchScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TaggerKind {
    #[default]
    Rule,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub kind: TaggerKind,
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub forbid_meta: bool,
    pub max_parallel: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        Self {
            kind: TaggerKind::Rule,
            endpoint_url: None,
            model_name: "gpt-4".into(),
            api_key_env: Some("SMUTF_LLM_API_KEY".into()),
            timeout_ms: 60_000,
            max_retries: 2,
            forbid_meta: true,
            max_parallel: 4,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kind == TaggerKind::Llm && self.endpoint_url.is_none() {
            return Err(Error::Config("llm tagger requires an endpoint URL".into()));
        }
        if self.max_parallel == 0 {
            return Err(Error::Config("tagger parallelism must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagProvenance {
    Rule,
    Llm,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedColumn {
    pub tag: HxlTag,
    pub provenance: TagProvenance,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

/// Minimal chat-completion client.
pub struct ChatClient {
    client: JsonClient,
    model: String,
}

impl ChatClient {
    pub fn new(config: &TaggerConfig) -> Result<Self> {
        let endpoint = config
            .endpoint_url
            .as_deref()
            .ok_or_else(|| Error::Config("llm tagger requires an endpoint URL".into()))?;
        Ok(Self {
            client: JsonClient::new(
                endpoint,
                config.api_key_env.as_deref(),
                config.timeout_ms,
                config.max_retries,
            ),
            model: config.model_name.clone(),
        })
    }

    pub fn complete(&self, system: &str, user: &str) -> Result<String> {
        let request = ChatRequest {
            model: &self.model,
            messages: [
                ChatMessage {
                    role: "system",
                    content: system,
                },
                ChatMessage {
                    role: "user",
                    content: user,
                },
            ],
            temperature: 0.0,
        };
        let resp: ChatResponse = self.client.post(&request).map_err(Error::Provider)?;
        resp.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::Provider(format!("{}: empty completion", self.client.endpoint())))
    }
}

static TAG_IN_TEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"#[A-Za-z0-9_]+(?:\+[A-Za-z0-9_]+)*").unwrap());

/// First tag-shaped token in free text; `None` if absent or a forbidden `#meta`.
pub fn extract_tag(reply: &str, forbid_meta: bool) -> Option<HxlTag> {
    let tag = parse_tag(TAG_IN_TEXT.find(reply)?.as_str()).ok()?;
    if forbid_meta && tag.hashtag() == "meta" {
        return None;
    }
    Some(tag)
}

/// Tags one column through the chat model, falling back to [`rule_tag`] on any failure.
pub fn llm_tag(
    client: &ChatClient,
    col: &Column,
    label: DataTypeLabel,
    seed: u64,
    forbid_meta: bool,
) -> TaggedColumn {
    let query = PromptQuery {
        column_name: col.name.clone(),
        sample_values: sample_text_values(col, PROMPT_VALUES, seed),
    };
    let bundle = build_prompt(&default_examples(), query).expect("default examples are non-empty");
    let reply = client.complete(&bundle.system_instructions, &bundle.render_user());
    let parsed = match reply {
        Ok(text) => {
            let tag = extract_tag(&text, forbid_meta);
            if tag.is_none() {
                log::warn!("column {:?}: no usable tag in reply {text:?}", col.name);
            }
            tag
        }
        Err(e) => {
            log::warn!("column {:?}: tagging request failed: {e}", col.name);
            None
        }
    };
    match parsed {
        Some(tag) => TaggedColumn {
            tag,
            provenance: TagProvenance::Llm,
        },
        None => TaggedColumn {
            tag: rule_tag(col, label),
            provenance: TagProvenance::Fallback,
        },
    }
}

type TagKey = (String, Vec<String>);

/// Rule or LLM tagging with a cache keyed by column name and sampled values.
pub struct Tagger {
    client: Option<ChatClient>,
    forbid_meta: bool,
    max_parallel: usize,
    seed: u64,
    cache: Mutex<HashMap<TagKey, TaggedColumn>>,
}

impl Tagger {
    pub fn new(config: &TaggerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let client = match config.kind {
            TaggerKind::Rule => None,
            TaggerKind::Llm => Some(ChatClient::new(config)?),
        };
        Ok(Self {
            client,
            forbid_meta: config.forbid_meta,
            max_parallel: config.max_parallel,
            seed,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn rule(seed: u64) -> Self {
        Self::new(&TaggerConfig::default(), seed).expect("default tagger config is valid")
    }

    pub fn kind(&self) -> TaggerKind {
        if self.client.is_some() {
            TaggerKind::Llm
        } else {
            TaggerKind::Rule
        }
    }

    pub fn tag_column(&self, col: &Column, label: DataTypeLabel) -> TaggedColumn {
        let Some(client) = &self.client else {
            return TaggedColumn {
                tag: rule_tag(col, label),
                provenance: TagProvenance::Rule,
            };
        };
        let mut sample = sample_text_values(col, PROMPT_VALUES, self.seed);
        sample.sort();
        let key = (col.name.clone(), sample);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let tagged = llm_tag(client, col, label, self.seed, self.forbid_meta);
        self.cache.lock().unwrap().insert(key, tagged.clone());
        tagged
    }

    /// Tags many columns, with at most `max_parallel` requests in flight.
    pub fn tag_columns(&self, cols: &[(&Column, DataTypeLabel)]) -> Vec<TaggedColumn> {
        if self.client.is_none() || self.max_parallel == 1 {
            return cols.iter().map(|(c, l)| self.tag_column(c, *l)).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.max_parallel)
            .build();
        match pool {
            Ok(pool) => pool.install(|| {
                cols.par_iter()
                    .map(|(c, l)| self.tag_column(c, *l))
                    .collect()
            }),
            Err(_) => cols.iter().map(|(c, l)| self.tag_column(c, *l)).collect(),
        }
    }
}
