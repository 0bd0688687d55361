//! Deterministic offline tagger.
//!
//! Maps a column's detected type and name tokens onto a small fixed tag
//! vocabulary. The mapping only has to be consistent: columns that look alike
//! must receive the same tag.

use std::sync::LazyLock;

use regex::Regex;

use super::tag::HxlTag;
use crate::name_features::tokenize_name;
use crate::schema::{parse_number, Column, DataTypeLabel};

const IMAGE_EXTENSIONS: [&str; 7] = [".png", ".jpg", ".jpeg", ".gif", ".webp", ".svg", ".bmp"];
const COUNT_TOKENS: [&str; 5] = ["count", "num", "like", "views", "total"];

/// Keyword table for text columns, checked in order.
const KEYWORDS: &[(&[&str], &str, &[&str])] = &[
    (&["country"], "country", &[]),
    (&["region", "state", "province"], "adm1", &[]),
    (&["city"], "adm2", &[]),
    (&["color"], "color", &[]),
    (&["title"], "title", &[]),
    (&["name"], "name", &[]),
    (&["email"], "contact", &["email"]),
    (&["phone"], "contact", &["phone"]),
    (&["id", "code"], "id", &["code"]),
    (&["description", "desc"], "description", &[]),
];

static MASKED_NAME: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^col\d+$").unwrap());
static HEX_COLOR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^#?([0-9a-fA-F]{6}|[0-9a-fA-F]{3})$").unwrap());

pub fn is_masked_name(name: &str) -> bool {
    let name = name.trim();
    name.is_empty() || MASKED_NAME.is_match(name)
}

fn tag(hashtag: &str, attrs: &[&str]) -> HxlTag {
    HxlTag::new(hashtag, attrs).expect("rule table emits valid tags")
}

fn at_least_half<F: Fn(&str) -> bool>(col: &Column, pred: F) -> bool {
    let (mut hits, mut total) = (0usize, 0usize);
    for v in col.non_empty() {
        total += 1;
        if pred(v) {
            hits += 1;
        }
    }
    total > 0 && 2 * hits >= total
}

fn currency_code(symbol: char) -> &'static str {
    match symbol {
        '€' => "eur",
        '£' => "gbp",
        '¥' => "jpy",
        _ => "usd",
    }
}

pub fn rule_tag(col: &Column, label: DataTypeLabel) -> HxlTag {
    let tokens = tokenize_name(&col.name);
    let has = |t: &str| tokens.iter().any(|x| x == t);

    match label {
        DataTypeLabel::Url => {
            let image = at_least_half(col, |v| {
                let path = v.trim().to_ascii_lowercase();
                let path = path.split(['?', '#']).next().unwrap_or("");
                IMAGE_EXTENSIONS.iter().any(|ext| path.ends_with(ext))
            });
            return if image {
                tag("url", &["image"])
            } else if col.name.to_lowercase().contains("article") {
                tag("url", &["article"])
            } else {
                tag("url", &[])
            };
        }
        DataTypeLabel::Date => {
            let attrs: Vec<&str> = ["year", "month", "day"].into_iter().filter(|t| has(t)).collect();
            return tag("date", &attrs);
        }
        DataTypeLabel::Numeric => {
            let mut symbols = Vec::new();
            let mut parsed = 0usize;
            for p in col.non_empty().filter_map(parse_number) {
                parsed += 1;
                if let Some(c) = p.currency {
                    symbols.push(c);
                }
            }
            if parsed > 0 && 2 * symbols.len() >= parsed {
                return tag("value", &[currency_code(symbols[0])]);
            }
            if COUNT_TOKENS.iter().any(|t| has(t)) {
                return tag("count", &[]);
            }
        }
        DataTypeLabel::String => {}
    }

    for (keys, hashtag, attrs) in KEYWORDS {
        if keys.iter().any(|k| has(k)) {
            if *hashtag == "color" && at_least_half(col, |v| HEX_COLOR.is_match(v.trim())) {
                return tag("color", &["hex"]);
            }
            return tag(hashtag, attrs);
        }
    }

    let generic = if label == DataTypeLabel::Numeric { "value" } else { "text" };
    if is_masked_name(&col.name) {
        return tag(generic, &[]);
    }
    tokens
        .iter()
        .find(|t| t.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()) && *t != "meta")
        .map(|t| tag(t, &[]))
        .unwrap_or_else(|| tag(generic, &[]))
}
