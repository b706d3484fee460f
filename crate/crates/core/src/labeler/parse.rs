use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;

/// Line-level tallies from one parse.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseCounts {
    /// Lines with no `id,label` shape (prose, headers, blank lines excluded).
    pub ignored: usize,
    pub duplicate: usize,
    pub unknown_id: usize,
    pub bad_label: usize,
    /// Valid items beyond the requested count.
    pub surplus: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedResponse {
    /// `(id, polarity)` in response order, at most `n`.
    pub items: Vec<(String, Polarity)>,
    pub counts: ParseCounts,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("insufficient items: found {found} valid id,label lines, need {needed}")]
pub struct InsufficientItems {
    pub found: usize,
    pub needed: usize,
    pub counts: ParseCounts,
    pub warnings: Vec<String>,
}

/// Pulls `<id>,<0|1>` lines out of a free-form reply.
///
/// Leading list markers, backticks and quotes around the id are tolerated.
/// The first occurrence of an id wins.
pub fn parse_response(raw: &str, pool_ids: &HashSet<&str>, n: usize) -> Result<ParsedResponse, InsufficientItems> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    let mut counts = ParseCounts::default();
    let mut warnings = Vec::new();

    for (lineno, line) in raw.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim().trim_start_matches(['-', '*', '•']).trim().trim_matches('`').trim();
        if line.is_empty() {
            continue;
        }
        let Some((id, label)) = line.rsplit_once(',') else {
            counts.ignored += 1;
            continue;
        };
        let id = id.trim().trim_matches(['"', '\'']).trim();
        let label = label.trim().trim_matches(['"', '\'']).trim();
        if id.is_empty() || id.contains(char::is_whitespace) {
            counts.ignored += 1;
            continue;
        }
        if !pool_ids.contains(id) {
            if id.eq_ignore_ascii_case("id") {
                counts.ignored += 1;
            } else {
                counts.unknown_id += 1;
                warnings.push(format!("line {lineno}: id {id:?} is not in the submitted pool"));
            }
            continue;
        }
        let polarity = match label {
            "0" => Polarity::Negative,
            "1" => Polarity::Positive,
            _ => {
                counts.bad_label += 1;
                warnings.push(format!("line {lineno}: label {label:?} for id {id:?} is not 0 or 1"));
                continue;
            }
        };
        if !seen.insert(id.to_owned()) {
            counts.duplicate += 1;
            warnings.push(format!("line {lineno}: duplicate id {id:?} ignored"));
            continue;
        }
        items.push((id.to_owned(), polarity));
    }

    if items.len() < n {
        return Err(InsufficientItems { found: items.len(), needed: n, counts, warnings });
    }
    if items.len() > n {
        counts.surplus = items.len() - n;
        warnings.push(format!("{} items beyond the requested {n} dropped", counts.surplus));
        items.truncate(n);
    }
    Ok(ParsedResponse { items, counts, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    fn ids(p: &[String]) -> HashSet<&str> {
        p.iter().map(String::as_str).collect()
    }

    fn lines(p: &[String], count: usize) -> String {
        p.iter().take(count).enumerate().map(|(i, id)| format!("{id},{}\n", i % 2)).collect()
    }

    #[test]
    fn exact_count_no_warnings() {
        let p = pool(150);
        let out = parse_response(&lines(&p, 100), &ids(&p), 100).unwrap();
        assert_eq!(out.items.len(), 100);
        assert!(out.warnings.is_empty());
        assert_eq!(out.items[1], ("r1".to_owned(), Polarity::Positive));
    }

    #[test]
    fn prose_is_ignored() {
        let p = pool(150);
        let raw = format!("Here is your training set:\n\nid,label\n{}\nLet me know if you need more.", lines(&p, 100));
        let out = parse_response(&raw, &ids(&p), 100).unwrap();
        assert_eq!(out.items.len(), 100);
        assert!(out.warnings.is_empty());
        assert_eq!(out.counts.ignored, 3);
    }

    #[test]
    fn ninety_nine_is_insufficient() {
        let p = pool(150);
        let err = parse_response(&lines(&p, 99), &ids(&p), 100).unwrap_err();
        assert_eq!((err.found, err.needed), (99, 100));
        assert!(err.to_string().contains("insufficient items"));
    }

    #[test]
    fn bad_labels_unknown_ids_and_duplicates() {
        let p = pool(5);
        let raw = "r0,1\nr1,2\nzz,0\nr0,0\n- `r2,0`\n\"r3\", 1\nr4,Positive\n";
        let out = parse_response(raw, &ids(&p), 3).unwrap();
        assert_eq!(
            out.items,
            vec![
                ("r0".to_owned(), Polarity::Positive),
                ("r2".to_owned(), Polarity::Negative),
                ("r3".to_owned(), Polarity::Positive)
            ]
        );
        assert_eq!(out.counts.bad_label, 2);
        assert_eq!(out.counts.unknown_id, 1);
        assert_eq!(out.counts.duplicate, 1);
        assert_eq!(out.warnings.len(), 4);
    }

    #[test]
    fn surplus_is_truncated() {
        let p = pool(10);
        let out = parse_response(&lines(&p, 10), &ids(&p), 4).unwrap();
        assert_eq!(out.items.len(), 4);
        assert_eq!(out.counts.surplus, 6);
    }

    #[test]
    fn ids_may_contain_commas() {
        let p = vec!["a,b".to_owned()];
        let out = parse_response("a,b,1", &ids(&p), 1).unwrap();
        assert_eq!(out.items[0].0, "a,b");
    }
}
