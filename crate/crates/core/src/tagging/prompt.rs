//! Few-shot prompt assembly for generative tagging.

use serde::{Deserialize, Serialize};

use super::tag::{parse_tag, HxlTag};

pub const TAG_INSTRUCTIONS: &str = "I need help with predicting HXL-style tags, which annotate tabular data and consist of hashtags for primary categories and attributes for additional tagging, based on the data's content and format. Unlike standard HXL tags, HXL-style allows for creating new hashtags tailored to various topics, but the #meta hashtag should be avoided.

Each column is assigned a single hashtag and can have several attributes. For example, a column titled 'ISO-3' containing country codes like 'USA', 'SSD', 'GBR' would be tagged as \"#country+code+iso3\", where \"#country\" is the hashtag and \"+code\" and \"+iso3\" are its attributes. Hashtags begin with a # and attributes with a +.";

/// Values shown per column in a prompt.
pub const PROMPT_VALUES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub column_name: String,
    pub sample_values: Vec<String>,
    pub tag: HxlTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptQuery {
    pub column_name: String,
    pub sample_values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_instructions: String,
    pub examples: Vec<FewShotExample>,
    pub query: PromptQuery,
}

fn block(name: &str, values: &[String]) -> String {
    format!("Column: {name}\nValues: {}\nTag:", values.join("; "))
}

impl PromptBundle {
    /// Example blocks followed by the open query block.
    pub fn render_user(&self) -> String {
        let mut parts: Vec<String> = self
            .examples
            .iter()
            .map(|e| format!("{} {}", block(&e.column_name, &e.sample_values), e.tag))
            .collect();
        parts.push(block(&self.query.column_name, &self.query.sample_values));
        parts.join("\n\n")
    }

    pub fn render(&self) -> String {
        format!("{}\n\n{}", self.system_instructions, self.render_user())
    }
}

/// Returns `None` when no examples are given; few-shot needs at least one.
pub fn build_prompt(examples: &[FewShotExample], query: PromptQuery) -> Option<PromptBundle> {
    if examples.is_empty() {
        return None;
    }
    Some(PromptBundle {
        system_instructions: TAG_INSTRUCTIONS.to_owned(),
        examples: examples.to_vec(),
        query,
    })
}

/// The five shipped demonstrations.
pub fn default_examples() -> Vec<FewShotExample> {
    let ex = |name: &str, values: &[&str], tag: &str| FewShotExample {
        column_name: name.to_owned(),
        sample_values: values.iter().map(|v| v.to_string()).collect(),
        tag: parse_tag(tag).expect("shipped example tags are valid"),
    };
    vec![
        ex("color", &["#FF0026", "#FFFFFF", "#FFFFFF"], "#color+hex"),
        ex(
            "article_url",
            &[
                "https://www.dcard.tw/f/trending/p/235141372",
                "https://www.dcard.tw/f/talk/p/235140981",
            ],
            "#url+article",
        ),
        ex("like", &["4123", "281842", "13"], "#like+count"),
        ex("col4", &["$199", "$91", "$66"], "#value+usd"),
        ex("ISO-3", &["USA", "SSD", "GBR"], "#country+code+iso3"),
    ]
}
