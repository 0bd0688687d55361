//! Synonyms used to perturb column names.

/// Symmetric synonym groups over lowercase name tokens.
const GROUPS: &[&[&str]] = &[
    &["name", "title", "label"],
    &["id", "identifier", "key", "code"],
    &["year", "yr"],
    &["date", "day", "when"],
    &["rating", "score", "grade"],
    &["price", "cost", "amount"],
    &["country", "nation"],
    &["city", "town"],
    &["address", "location", "addr"],
    &["genre", "category", "kind"],
    &["director", "filmmaker"],
    &["description", "summary", "overview"],
    &["email", "mail"],
    &["phone", "telephone", "tel"],
    &["company", "firm", "employer"],
    &["quantity", "qty", "count"],
    &["first", "given"],
    &["last", "family", "surname"],
    &["birth", "born"],
    &["url", "link", "website"],
    &["image", "picture", "photo"],
    &["language", "lang"],
    &["duration", "length", "runtime"],
    &["votes", "ratings"],
    &["brand", "make", "manufacturer"],
    &["weight", "mass"],
    &["age", "years"],
    &["salary", "income", "pay"],
    &["department", "dept", "division"],
    &["author", "writer"],
    &["gender", "sex"],
    &["stock", "inventory"],
];

/// Synonyms of `token` (lowercase), excluding itself.
pub fn synonyms(token: &str) -> Vec<&'static str> {
    GROUPS
        .iter()
        .filter(|g| g.contains(&token))
        .flat_map(|g| g.iter().copied().filter(|&w| w != token))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert!(synonyms("title").contains(&"name"));
        assert!(synonyms("name").contains(&"title"));
        assert!(synonyms("zebra").is_empty());
    }

    #[test]
    fn groups_are_disjoint() {
        let mut all: Vec<&str> = GROUPS.iter().flat_map(|g| g.iter().copied()).collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n);
    }
}
