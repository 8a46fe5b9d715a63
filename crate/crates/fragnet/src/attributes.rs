//! Influencer ideology and social-identity attributes.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Declared ideological position of an influencer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ideology {
    Left,
    Center,
    Right,
    /// No usable label; kept in the graph, excluded from subgroup scores.
    Unlabeled,
}

impl Ideology {
    fn parse(s: &str) -> Option<Ideology> {
        if s.eq_ignore_ascii_case("left") {
            Some(Ideology::Left)
        } else if s.eq_ignore_ascii_case("center") {
            Some(Ideology::Center)
        } else if s.eq_ignore_ascii_case("right") {
            Some(Ideology::Right)
        } else if s.eq_ignore_ascii_case("unlabeled") {
            Some(Ideology::Unlabeled)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ideology::Left => "left",
            Ideology::Center => "center",
            Ideology::Right => "right",
            Ideology::Unlabeled => "unlabeled",
        }
    }
}

/// Ideology labels that carry a position, in fixed reporting order.
pub const POSITIONED: [Ideology; 3] = [Ideology::Left, Ideology::Center, Ideology::Right];

/// One attribute row per influencer: ideology plus zero or more identity
/// categories out of a configured list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeTable {
    /// Influencer ids, sorted.
    ids: Vec<String>,
    ideology: Vec<Ideology>,
    /// Per row: sorted, deduplicated indices into `categories`.
    identities: Vec<Vec<u16>>,
    categories: Vec<String>,
    /// How many rows carried an unrecognized ideology label (mapped to
    /// `Unlabeled`).
    unknown_ideology_count: usize,
    /// The distinct unrecognized ideology strings, for diagnostics.
    unknown_ideology_labels: Vec<String>,
}

impl AttributeTable {
    /// Builds a table from parallel columns. `ids` need not be sorted but
    /// must be unique; identity indices must be valid for `categories`.
    pub fn new(rows: Vec<(String, Ideology, Vec<u16>)>, categories: Vec<String>) -> Result<Self> {
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            let dup = rows
                .windows(2)
                .find(|w| w[0].0 == w[1].0)
                .map(|w| w[0].0.clone())
                .unwrap_or_default();
            return Err(Error::Validation(format!(
                "duplicate attribute row for influencer '{dup}'"
            )));
        }
        let mut ids = Vec::with_capacity(rows.len());
        let mut ideology = Vec::with_capacity(rows.len());
        let mut identities = Vec::with_capacity(rows.len());
        for (id, ideo, mut cats) in rows {
            cats.sort_unstable();
            cats.dedup();
            if let Some(&bad) = cats.iter().find(|&&c| c as usize >= categories.len()) {
                return Err(Error::Validation(format!(
                    "identity index {bad} out of range for {} categories",
                    categories.len()
                )));
            }
            ids.push(id);
            ideology.push(ideo);
            identities.push(cats);
        }
        Ok(AttributeTable {
            ids,
            ideology,
            identities,
            categories,
            unknown_ideology_count: 0,
            unknown_ideology_labels: Vec::new(),
        })
    }

    /// Parses a delimited `influencer<sep>ideology<sep>id1;id2;...` file.
    ///
    /// The delimiter (comma or tab) is auto-detected; an optional header row
    /// (`influencer,ideology,identities`) is skipped. The identity field is
    /// optional and may be empty. Ideology labels outside
    /// left/center/right/unlabeled map to `Unlabeled` and are counted as
    /// warnings; identity tokens outside `categories` are hard errors.
    pub fn load(reader: impl BufRead, categories: &[String]) -> Result<Self> {
        let lower: Vec<String> = categories.iter().map(|c| c.to_lowercase()).collect();
        if lower.len()
            != lower
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
                .len()
        {
            return Err(Error::Config(
                "identity categories must be unique (case-insensitive)".into(),
            ));
        }

        let mut delim: Option<char> = None;
        let mut first_data_row = true;
        let mut rows: Vec<(String, Ideology, Vec<u16>)> = Vec::new();
        let mut unknown_count = 0usize;
        let mut unknown_labels: Vec<String> = Vec::new();

        for (ix, line) in reader.lines().enumerate() {
            let line_no = ix + 1;
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let d = *delim.get_or_insert_with(|| if line.contains('\t') { '\t' } else { ',' });
            let fields: Vec<&str> = line.split(d).map(str::trim).collect();
            if first_data_row {
                first_data_row = false;
                let header_shapes: [&[&str]; 2] = [
                    &["influencer", "ideology", "identities"],
                    &["influencer", "ideology"],
                ];
                if header_shapes.iter().any(|names| {
                    names.len() == fields.len()
                        && fields
                            .iter()
                            .zip(names.iter())
                            .all(|(f, n)| f.eq_ignore_ascii_case(n))
                }) {
                    continue;
                }
            }
            let (id, ideo_str, ident_str) = match fields.as_slice() {
                [id, ideo] if !id.is_empty() => (*id, *ideo, ""),
                [id, ideo, idents] if !id.is_empty() => (*id, *ideo, *idents),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "expected 2 or 3 fields with a non-empty id, got {}",
                            fields.len()
                        ),
                    });
                }
            };
            let ideo = Ideology::parse(ideo_str).unwrap_or_else(|| {
                unknown_count += 1;
                if !unknown_labels.iter().any(|l| l == ideo_str) {
                    unknown_labels.push(ideo_str.to_string());
                }
                Ideology::Unlabeled
            });
            let mut cats: Vec<u16> = Vec::new();
            for token in ident_str.split(';').map(str::trim) {
                if token.is_empty() {
                    continue;
                }
                match lower.iter().position(|c| c == &token.to_lowercase()) {
                    Some(ix) => cats.push(ix as u16),
                    None => {
                        return Err(Error::Validation(format!(
                            "line {line_no}: unknown identity category '{token}'"
                        )));
                    }
                }
            }
            rows.push((id.to_string(), ideo, cats));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("attribute file holds no records".into()));
        }
        let mut table = Self::new(rows, categories.to_vec())?;
        table.unknown_ideology_count = unknown_count;
        unknown_labels.sort_unstable();
        table.unknown_ideology_labels = unknown_labels;
        Ok(table)
    }

    pub fn load_path(path: &Path, categories: &[String]) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Validation(format!(
                "cannot open attribute file {}: {e}",
                path.display()
            ))
        })?;
        Self::load(std::io::BufReader::new(file), categories)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn unknown_ideology_count(&self) -> usize {
        self.unknown_ideology_count
    }

    pub fn unknown_ideology_labels(&self) -> &[String] {
        &self.unknown_ideology_labels
    }

    pub fn get(&self, id: &str) -> Option<(Ideology, &[u16])> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|ix| (self.ideology[ix], self.identities[ix].as_slice()))
    }

    /// Reorders attributes to match a graph's node indexing.
    ///
    /// Every node id must have a row; rows for ids outside the node set are
    /// ignored (their count is reported on the result).
    pub fn align(&self, node_ids: &[String]) -> Result<AlignedAttributes> {
        let lookup: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(ix, id)| (id.as_str(), ix))
            .collect();
        let mut ideology = Vec::with_capacity(node_ids.len());
        let mut identities = Vec::with_capacity(node_ids.len());
        let mut missing: Vec<&str> = Vec::new();
        for id in node_ids {
            match lookup.get(id.as_str()) {
                Some(&ix) => {
                    ideology.push(self.ideology[ix]);
                    identities.push(self.identities[ix].clone());
                }
                None => missing.push(id),
            }
        }
        if !missing.is_empty() {
            missing.truncate(5);
            return Err(Error::Validation(format!(
                "{} graph node(s) lack attribute rows, e.g. {:?}",
                node_ids.len() - ideology.len().min(node_ids.len()),
                missing
            )));
        }
        let unused = self.ids.len().saturating_sub(node_ids.len());
        Ok(AlignedAttributes {
            ideology,
            identities,
            categories: self.categories.clone(),
            unused_rows: unused,
        })
    }
}

/// Attributes rearranged into graph node order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedAttributes {
    pub ideology: Vec<Ideology>,
    pub identities: Vec<Vec<u16>>,
    pub categories: Vec<String>,
    /// Attribute rows whose id was not a graph node.
    pub unused_rows: usize,
}

impl AlignedAttributes {
    pub fn len(&self) -> usize {
        self.ideology.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ideology.is_empty()
    }

    /// Node mask selecting one ideology.
    pub fn ideology_mask(&self, which: Ideology) -> Vec<bool> {
        self.ideology.iter().map(|&i| i == which).collect()
    }

    pub fn count(&self, which: Ideology) -> usize {
        self.ideology.iter().filter(|&&i| i == which).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn cats() -> Vec<String> {
        ["women", "black", "lgbtq", "religious"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn load(text: &str) -> Result<AttributeTable> {
        AttributeTable::load(Cursor::new(text.to_string()), &cats())
    }

    #[test]
    fn parses_rows_with_and_without_identities() {
        let t = load("a,left,women;black\nb,right,\nc,center\n").unwrap();
        assert_eq!(t.len(), 3);
        let (ideo, idents) = t.get("a").unwrap();
        assert_eq!(ideo, Ideology::Left);
        assert_eq!(idents, &[0, 1]);
        assert_eq!(t.get("c").unwrap().1, &[] as &[u16]);
    }

    #[test]
    fn unknown_ideology_becomes_unlabeled_with_warning() {
        let t = load("a,far-out,women\nb,LEFT,\n").unwrap();
        assert_eq!(t.get("a").unwrap().0, Ideology::Unlabeled);
        assert_eq!(t.get("b").unwrap().0, Ideology::Left);
        assert_eq!(t.unknown_ideology_count(), 1);
        assert_eq!(t.unknown_ideology_labels(), &["far-out".to_string()]);
    }

    #[test]
    fn unknown_identity_is_a_hard_error_naming_the_token() {
        let err = load("a,left,astronaut\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("astronaut"), "message was: {msg}");
    }

    #[test]
    fn duplicate_influencer_rows_rejected() {
        assert!(load("a,left,\na,right,\n").is_err());
    }

    #[test]
    fn header_row_is_skipped() {
        let t = load("influencer,ideology,identities\na,left,women\n").unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn align_requires_full_coverage() {
        let t = load("a,left,\nb,right,\n").unwrap();
        let aligned = t.align(&["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(aligned.ideology, vec![Ideology::Left, Ideology::Right]);
        assert!(t.align(&["a".to_string(), "zz".to_string()]).is_err());
    }

    #[test]
    fn align_ignores_extra_rows() {
        let t = load("a,left,\nb,right,\nc,center,\n").unwrap();
        let aligned = t.align(&["b".to_string()]).unwrap();
        assert_eq!(aligned.len(), 1);
        assert_eq!(aligned.unused_rows, 2);
    }

    #[test]
    fn identity_matching_is_case_insensitive() {
        let t = load("a,left,Women;LGBTQ\n").unwrap();
        assert_eq!(t.get("a").unwrap().1, &[0, 2]);
    }
}
