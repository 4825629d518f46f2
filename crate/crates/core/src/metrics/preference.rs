//! Human pairwise preference records and the statistics derived from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One side of a preference judgement: a parser, or the annotator's
/// "neither" (indifference) option.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    Parser(String),
    Neither,
}

impl Choice {
    pub const NEITHER: &'static str = "NEITHER";

    pub fn parser(id: impl Into<String>) -> Self {
        Choice::Parser(id.into())
    }

    pub fn as_parser(&self) -> Option<&str> {
        match self {
            Choice::Parser(p) => Some(p),
            Choice::Neither => None,
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Parser(p) => f.write_str(p),
            Choice::Neither => f.write_str(Self::NEITHER),
        }
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == Choice::NEITHER { Choice::Neither } else { Choice::Parser(s) })
    }
}

/// A single annotator's judgement on one page shown under two parsers.
///
/// When either side is `NEITHER` the record expresses indifference and
/// `compared` must name the two parsers that were shown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub page_id: String,
    pub winner_parser: Choice,
    pub loser_parser: Choice,
    pub annotator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compared: Option<[String; 2]>,
}

impl PreferenceRecord {
    pub fn preferred(
        page_id: impl Into<String>,
        winner: impl Into<String>,
        loser: impl Into<String>,
        annotator_id: impl Into<String>,
    ) -> Self {
        PreferenceRecord {
            page_id: page_id.into(),
            winner_parser: Choice::Parser(winner.into()),
            loser_parser: Choice::Parser(loser.into()),
            annotator_id: annotator_id.into(),
            compared: None,
        }
    }

    pub fn indifferent(
        page_id: impl Into<String>,
        a: impl Into<String>,
        b: impl Into<String>,
        annotator_id: impl Into<String>,
    ) -> Self {
        let (a, b) = (a.into(), b.into());
        PreferenceRecord {
            page_id: page_id.into(),
            winner_parser: Choice::Neither,
            loser_parser: Choice::Parser(a.clone()),
            annotator_id: annotator_id.into(),
            compared: Some([a, b]),
        }
    }

    pub fn is_indifferent(&self) -> bool {
        self.winner_parser == Choice::Neither || self.loser_parser == Choice::Neither
    }

    pub fn validate(&self) -> Result<()> {
        if self.winner_parser == Choice::Neither && self.loser_parser == Choice::Neither {
            return Err(Error::Precondition(format!(
                "page {}: NEITHER may appear at most once per record",
                self.page_id
            )));
        }
        if self.winner_parser == self.loser_parser {
            return Err(Error::Precondition(format!(
                "page {}: winner and loser are both {}",
                self.page_id, self.winner_parser
            )));
        }
        if self.is_indifferent() {
            let Some(pair) = &self.compared else {
                return Err(Error::Precondition(format!(
                    "page {}: indifference record must name the compared parsers",
                    self.page_id
                )));
            };
            let named = self.winner_parser.as_parser().or(self.loser_parser.as_parser());
            if let Some(p) = named {
                if !pair.iter().any(|c| c == p) {
                    return Err(Error::Precondition(format!(
                        "page {}: {p} is not one of the compared parsers",
                        self.page_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// The unordered parser pair this record judges.
    pub fn pair(&self) -> (String, String) {
        let (a, b) = match &self.compared {
            Some([a, b]) => (a.clone(), b.clone()),
            None => (self.winner_parser.to_string(), self.loser_parser.to_string()),
        };
        if a <= b { (a, b) } else { (b, a) }
    }

    /// What the annotator picked: a parser, or NEITHER.
    pub fn outcome(&self) -> Choice {
        if self.is_indifferent() { Choice::Neither } else { self.winner_parser.clone() }
    }
}

/// Wins over decided comparisons; indifference counts on neither side.
pub fn win_rate(records: &[PreferenceRecord], parser: &str) -> Result<f64> {
    let mut wins = 0usize;
    let mut losses = 0usize;
    for r in records.iter().filter(|r| !r.is_indifferent()) {
        if r.winner_parser.as_parser() == Some(parser) {
            wins += 1;
        } else if r.loser_parser.as_parser() == Some(parser) {
            losses += 1;
        }
    }
    if wins + losses == 0 {
        return Err(Error::InsufficientData(format!(
            "parser `{parser}` has no decided comparisons"
        )));
    }
    Ok(wins as f64 / (wins + losses) as f64)
}

/// (page id, compared pair) -> (annotator, choice) judgments.
type Judgments<'a> = BTreeMap<(String, (String, String)), Vec<(&'a str, Choice)>>;

/// Among (page, parser pair) groups judged by two or more annotators, the
/// share where every annotator made the same choice.
pub fn consensus_rate(records: &[PreferenceRecord]) -> Result<f64> {
    let mut groups: Judgments<'_> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.page_id.clone(), r.pair()))
            .or_default()
            .push((&r.annotator_id, r.outcome()));
    }
    let mut multi = 0usize;
    let mut unanimous = 0usize;
    for votes in groups.values() {
        let annotators: BTreeSet<&str> = votes.iter().map(|(a, _)| *a).collect();
        if annotators.len() < 2 {
            continue;
        }
        multi += 1;
        let first = &votes[0].1;
        if votes.iter().all(|(_, c)| c == first) {
            unanimous += 1;
        }
    }
    if multi == 0 {
        return Err(Error::InsufficientData("no page was judged by two or more annotators".into()));
    }
    Ok(unanimous as f64 / multi as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn win_rate_excludes_indifference() {
        let mut recs = Vec::new();
        for i in 0..3 {
            recs.push(PreferenceRecord::preferred(format!("p{i}"), "a", "b", "u1"));
        }
        recs.push(PreferenceRecord::preferred("p3", "c", "a", "u1"));
        recs.push(PreferenceRecord::indifferent("p4", "a", "b", "u1"));
        recs.push(PreferenceRecord::indifferent("p5", "a", "c", "u1"));
        assert!((win_rate(&recs, "a").unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn win_rate_perfect_and_missing() {
        let recs: Vec<_> = (0..5)
            .map(|i| PreferenceRecord::preferred(format!("p{i}"), "a", "b", "u"))
            .collect();
        assert_eq!(win_rate(&recs, "a").unwrap(), 1.0);
        assert_eq!(win_rate(&recs, "b").unwrap(), 0.0);
        let only_neither = vec![PreferenceRecord::indifferent("p", "z", "b", "u")];
        assert!(matches!(win_rate(&only_neither, "z"), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn consensus_examples() {
        let agree = vec![
            PreferenceRecord::preferred("p1", "a", "b", "u1"),
            PreferenceRecord::preferred("p1", "a", "b", "u2"),
        ];
        assert_eq!(consensus_rate(&agree).unwrap(), 1.0);
        let mut half = agree.clone();
        half.push(PreferenceRecord::preferred("p2", "a", "b", "u1"));
        // Same pair, reversed order, still the same group.
        half.push(PreferenceRecord::preferred("p2", "b", "a", "u2"));
        assert_eq!(consensus_rate(&half).unwrap(), 0.5);
        let single = vec![PreferenceRecord::preferred("p1", "a", "b", "u1")];
        assert!(consensus_rate(&single).is_err());
    }

    #[test]
    fn indifference_votes_agree_with_each_other() {
        let recs = vec![
            PreferenceRecord::indifferent("p1", "a", "b", "u1"),
            PreferenceRecord::indifferent("p1", "b", "a", "u2"),
        ];
        assert_eq!(consensus_rate(&recs).unwrap(), 1.0);
    }

    #[test]
    fn validation_rules() {
        let mut r = PreferenceRecord::preferred("p", "a", "a", "u");
        assert!(r.validate().is_err());
        r.loser_parser = Choice::Neither;
        assert!(r.validate().is_err(), "indifference without a compared pair");
        r.compared = Some(["a".into(), "b".into()]);
        assert!(r.validate().is_ok());
        r.winner_parser = Choice::Neither;
        assert!(r.validate().is_err());
    }

    #[test]
    fn neither_serializes_as_literal() {
        let r = PreferenceRecord::indifferent("p", "a", "b", "u");
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"winner_parser\":\"NEITHER\""));
        let back: PreferenceRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
