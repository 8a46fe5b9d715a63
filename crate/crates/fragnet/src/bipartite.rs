//! Bipartite follower data and its weighted co-follow projection.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;

use crate::graph::WeightedGraph;
use crate::{Error, Result};

/// A user -> influencer follow relation.
///
/// Users and influencers live in separate, lexicographically sorted id
/// spaces. Edges are deduplicated `(user, influencer)` index pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    users: Vec<String>,
    influencers: Vec<String>,
    edges: Vec<(u32, u32)>,
}

/// Splits a record line on the detected delimiter, trimming each field.
fn split_fields(line: &str, delim: char) -> Vec<&str> {
    line.split(delim).map(str::trim).collect()
}

/// Picks the delimiter from the first non-empty line: tab wins if present,
/// otherwise comma.
fn detect_delimiter(line: &str) -> char {
    if line.contains('\t') {
        '\t'
    } else {
        ','
    }
}

/// True when a first row looks like a column header rather than data.
fn is_header(fields: &[&str], expected: &[&[&str]]) -> bool {
    expected.iter().any(|names| {
        names.len() == fields.len()
            && fields
                .iter()
                .zip(names.iter())
                .all(|(f, n)| f.eq_ignore_ascii_case(n))
    })
}

impl BipartiteGraph {
    /// Parses a delimited `user<sep>influencer` edge list.
    ///
    /// The delimiter (comma or tab) is auto-detected from the first
    /// non-empty line; an optional `user,influencer` header row is skipped.
    /// Duplicate follow records collapse to one edge. Blank lines are
    /// ignored. Errors carry 1-based line numbers.
    pub fn load(reader: impl BufRead) -> Result<Self> {
        let mut delim: Option<char> = None;
        let mut first_data_row = true;
        let mut raw: Vec<(String, String)> = Vec::new();
        for (ix, line) in reader.lines().enumerate() {
            let line_no = ix + 1;
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let d = *delim.get_or_insert_with(|| detect_delimiter(line));
            let fields = split_fields(line, d);
            if first_data_row {
                first_data_row = false;
                if is_header(&fields, &[&["user", "influencer"]]) {
                    continue;
                }
            }
            match fields.as_slice() {
                [user, influencer] if !user.is_empty() && !influencer.is_empty() => {
                    raw.push((user.to_string(), influencer.to_string()));
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "expected 2 non-empty fields separated by {:?}, got {}",
                            d,
                            fields.len()
                        ),
                    });
                }
            }
        }
        if raw.is_empty() {
            return Err(Error::EmptyInput("edge list holds no records".into()));
        }

        let mut users: Vec<String> = raw.iter().map(|(u, _)| u.clone()).collect();
        users.sort_unstable();
        users.dedup();
        let mut influencers: Vec<String> = raw.iter().map(|(_, i)| i.clone()).collect();
        influencers.sort_unstable();
        influencers.dedup();

        let user_ix: HashMap<&str, u32> = users
            .iter()
            .enumerate()
            .map(|(ix, id)| (id.as_str(), ix as u32))
            .collect();
        let infl_ix: HashMap<&str, u32> = influencers
            .iter()
            .enumerate()
            .map(|(ix, id)| (id.as_str(), ix as u32))
            .collect();

        let mut edges: Vec<(u32, u32)> = raw
            .iter()
            .map(|(u, i)| (user_ix[u.as_str()], infl_ix[i.as_str()]))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        Ok(BipartiteGraph {
            users,
            influencers,
            edges,
        })
    }

    /// Loads an edge list from a file path.
    pub fn load_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Validation(format!("cannot open edge list {}: {e}", path.display()))
        })?;
        Self::load(std::io::BufReader::new(file))
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_influencers(&self) -> usize {
        self.influencers.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn influencers(&self) -> &[String] {
        &self.influencers
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Number of followers of one influencer.
    pub fn influencer_degree(&self, influencer: u32) -> usize {
        self.edges.iter().filter(|&&(_, i)| i == influencer).count()
    }

    /// Projects onto the influencer side: nodes are influencers and the
    /// weight of edge `(i, j)` counts users following both `i` and `j`.
    ///
    /// Influencers sharing no follower stay in the graph as isolated nodes.
    pub fn project(&self) -> Result<WeightedGraph> {
        // Follow lists per user, each sorted so emitted pairs satisfy i < j.
        let mut follows: Vec<Vec<u32>> = vec![Vec::new(); self.users.len()];
        for &(u, i) in &self.edges {
            follows[u as usize].push(i);
        }
        for list in &mut follows {
            list.sort_unstable();
        }

        // Co-follow counts are plain integer sums, so merging per-chunk maps
        // in any order yields the same totals.
        let chunk = (self.users.len() / 64).max(1);
        let counts: HashMap<(u32, u32), u64> = follows
            .par_chunks(chunk)
            .map(|lists| {
                let mut local: HashMap<(u32, u32), u64> = HashMap::new();
                for list in lists {
                    for (a_ix, &a) in list.iter().enumerate() {
                        for &b in &list[a_ix + 1..] {
                            *local.entry((a, b)).or_insert(0) += 1;
                        }
                    }
                }
                local
            })
            .reduce(HashMap::new, |mut acc, local| {
                for (k, v) in local {
                    *acc.entry(k).or_insert(0) += v;
                }
                acc
            });

        let mut edges: Vec<(u32, u32, u64)> =
            counts.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        edges.sort_unstable();
        WeightedGraph::new(self.influencers.clone(), edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn load(text: &str) -> Result<BipartiteGraph> {
        BipartiteGraph::load(Cursor::new(text.to_string()))
    }

    #[test]
    fn parses_comma_and_skips_header() {
        let b = load("user,influencer\nu1,a\nu1,b\nu2,a\n").unwrap();
        assert_eq!(b.num_users(), 2);
        assert_eq!(b.num_influencers(), 2);
        assert_eq!(b.num_edges(), 3);
    }

    #[test]
    fn parses_tab_without_header() {
        let b = load("u1\ta\nu2\ta\n").unwrap();
        assert_eq!(b.influencers(), &["a".to_string()]);
        assert_eq!(b.num_edges(), 2);
    }

    #[test]
    fn duplicate_follows_collapse() {
        let b = load("u1,a\nu1,a\nu1,b\n").unwrap();
        assert_eq!(b.num_edges(), 2);
    }

    #[test]
    fn reports_line_number_on_bad_record() {
        let err = load("u1,a\nu2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(load(""), Err(Error::EmptyInput(_))));
        assert!(matches!(
            load("user,influencer\n"),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn projection_counts_common_followers() {
        // Three users follow both a and b; one follows both a and c.
        let b = load("u1,a\nu1,b\nu2,a\nu2,b\nu3,a\nu3,b\nu4,a\nu4,c\n").unwrap();
        let g = b.project().unwrap();
        assert_eq!(g.node_ids(), &["a", "b", "c"]);
        assert_eq!(g.edges(), &[(0, 1, 3), (0, 2, 1)]);
    }

    #[test]
    fn projection_keeps_isolated_influencers() {
        // Influencer c shares no follower with anyone.
        let b = load("u1,a\nu1,b\nu2,c\n").unwrap();
        let g = b.project().unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.degree(g.index_of("c").unwrap()), 0);
    }

    #[test]
    fn projection_weight_bounded_by_bipartite_degrees() {
        let text = "u1,a\nu1,b\nu2,a\nu2,b\nu3,b\n";
        let b = load(text).unwrap();
        let g = b.project().unwrap();
        for &(i, j, w) in g.edges() {
            let di = b.influencer_degree(i) as u64;
            let dj = b.influencer_degree(j) as u64;
            assert!(w <= di.min(dj), "w={w} exceeds min({di}, {dj})");
        }
    }
}
