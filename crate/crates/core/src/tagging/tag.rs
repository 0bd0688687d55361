use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One hashtag plus a set of attributes, e.g. `#country+code+iso3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HxlTag {
    hashtag: String,
    attributes: BTreeSet<String>,
}

impl HxlTag {
    pub fn new<I, S>(hashtag: &str, attributes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut text = format!("#{hashtag}");
        for a in attributes {
            text.push('+');
            text.push_str(a.as_ref());
        }
        parse_tag(&text)
    }

    pub fn hashtag(&self) -> &str {
        &self.hashtag
    }

    pub fn attributes(&self) -> &BTreeSet<String> {
        &self.attributes
    }
}

impl fmt::Display for HxlTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.hashtag)?;
        for a in &self.attributes {
            write!(f, "+{a}")?;
        }
        Ok(())
    }
}

impl FromStr for HxlTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_tag(s)
    }
}

impl Serialize for HxlTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HxlTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_tag(&s).map_err(serde::de::Error::custom)
    }
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'
}

/// Parses `#hashtag(+attr)*`, lowercasing; duplicate attributes collapse.
pub fn parse_tag(text: &str) -> Result<HxlTag> {
    let err = |position: usize, message: &str| Error::TagParse {
        input: text.to_owned(),
        position,
        message: message.to_owned(),
    };
    let lowered = text.trim().to_ascii_lowercase();
    let offset = text.len() - text.trim_start().len();
    let body = lowered
        .strip_prefix('#')
        .ok_or_else(|| err(offset, "expected '#'"))?;

    let mut pos = offset + 1;
    let mut segments = Vec::new();
    for (i, seg) in body.split('+').enumerate() {
        if seg.is_empty() {
            let what = if i == 0 { "empty hashtag" } else { "empty attribute" };
            return Err(err(pos, what));
        }
        if let Some((j, c)) = seg.char_indices().find(|&(_, c)| !is_token_char(c)) {
            return Err(err(pos + j, &format!("illegal character {c:?}")));
        }
        segments.push(seg.to_owned());
        pos += seg.len() + 1;
    }
    let hashtag = segments.remove(0);
    Ok(HxlTag {
        hashtag,
        attributes: segments.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagMatchScore {
    pub exact_hashtag: f64,
    pub attr_jaccard: f64,
}

impl TagMatchScore {
    pub const NAMES: [&'static str; 2] = ["exact_hashtag", "attr_jaccard"];

    pub fn to_array(&self) -> [f64; 2] {
        [self.exact_hashtag, self.attr_jaccard]
    }
}

/// Hashtag equality and attribute Jaccard (1 when both sets are empty).
pub fn tag_match(a: &HxlTag, b: &HxlTag) -> TagMatchScore {
    let exact_hashtag = if a.hashtag == b.hashtag { 1.0 } else { 0.0 };
    let (sa, sb) = (&a.attributes, &b.attributes);
    let attr_jaccard = if sa.is_empty() && sb.is_empty() {
        1.0
    } else {
        let inter = sa.intersection(sb).count();
        let union = sa.union(sb).count();
        inter as f64 / union as f64
    };
    TagMatchScore {
        exact_hashtag,
        attr_jaccard,
    }
}
