//! Plain-text tables for statistics and evaluation reports.

use std::collections::BTreeMap;
use std::fmt::Display;

use crate::corpus::CorpusStats;
use crate::eval::{AgreementReport, CorpusPairReport, PairF1Report};
use crate::graph::Violation;
use crate::label::Label;
use crate::vsp::ClassificationReport;

/// Left-aligned first column, right-aligned others.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = width[i]) } else { format!("{c:>w$}", w = width[i]) })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

pub fn stats_table(s: &CorpusStats) -> String {
    let mut rows: Vec<Vec<String>> = [
        ("documents", s.documents),
        ("sentences", s.sentences),
        ("mentions", s.mentions),
        ("entities", s.entities),
        ("inclusion", s.inclusion),
        ("transition", s.transition),
        ("relations", s.relations()),
        ("overlap", s.overlap),
        ("unknown_time", s.unknown_time),
        ("multi_visit", s.multi_visit),
    ]
    .iter()
    .map(|(k, v)| vec![k.to_string(), v.to_string()])
    .collect();
    for (l, c) in &s.mention_labels.counts {
        rows.push(vec![format!("mention:{l}"), c.to_string()]);
    }
    if s.mention_labels.unlabeled > 0 {
        rows.push(vec!["mention:unlabeled".into(), s.mention_labels.unlabeled.to_string()]);
    }
    for (l, c) in &s.entity_labels.counts {
        rows.push(vec![format!("entity:{l}"), c.to_string()]);
    }
    if s.entity_labels.unlabeled > 0 {
        rows.push(vec!["entity:unlabeled".into(), s.entity_labels.unlabeled.to_string()]);
    }
    render_table(&["statistic", "count"], &rows)
}

pub fn classification_table<L: Label>(r: &ClassificationReport<L>) -> String {
    let mut rows: Vec<Vec<String>> = r
        .per_label
        .iter()
        .map(|s| {
            vec![s.label.to_string(), f3(s.precision), f3(s.recall), f3(s.f1), s.support.to_string(), s.predicted.to_string()]
        })
        .collect();
    let mut out = format!("items {}  accuracy {}  macro-F1 {}\n\n", r.items, f3(r.accuracy), f3(r.macro_f1));
    out.push_str(&render_table(&["label", "P", "R", "F1", "gold", "pred"], &rows));
    out.push('\n');
    let mut header: Vec<String> = vec!["gold \\ pred".into()];
    header.extend(L::ALL.iter().map(|l| l.to_string()));
    rows = L::ALL
        .iter()
        .zip(&r.confusion)
        .map(|(l, row)| std::iter::once(l.to_string()).chain(row.iter().map(|c| c.to_string())).collect())
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    out.push_str(&render_table(&h, &rows));
    out
}

/// Natural order for breakdown keys: numbers compare numerically, `>=`
/// buckets after the single values of the same family.
fn breakdown_order(key: &str) -> (String, u8, usize) {
    let (family, rest, tail) = match key.split_once(">=") {
        Some((f, n)) => (f.to_string(), n, 1),
        None => match key.split_once('=') {
            Some((f, n)) => (f.to_string(), n, 0),
            None => return (key.to_string(), 0, 0),
        },
    };
    (family, tail, rest.parse().unwrap_or(usize::MAX))
}

fn pair_rows(r: &PairF1Report) -> Vec<Vec<String>> {
    let row = |name: &str, x: &PairF1Report| {
        vec![
            name.to_string(),
            f3(x.precision),
            f3(x.recall),
            f3(x.f1),
            x.tp.to_string(),
            x.fp.to_string(),
            x.fn_.to_string(),
        ]
    };
    let mut keys: Vec<&String> = r.breakdowns.keys().collect();
    keys.sort_by_key(|k| breakdown_order(k));
    std::iter::once(row("all", r)).chain(keys.into_iter().map(|k| row(k, &r.breakdowns[k]))).collect()
}

pub fn pair_table(r: &PairF1Report) -> String {
    render_table(&["pairs", "P", "R", "F1", "tp", "fp", "fn"], &pair_rows(r))
}

pub fn corpus_pair_table(r: &CorpusPairReport) -> String {
    format!(
        "documents {}  pooled F1 {}  mean document F1 {}\n\n{}",
        r.documents,
        f3(r.pooled.f1),
        f3(r.document_mean_f1),
        pair_table(&r.pooled)
    )
}

pub fn agreement_table(reports: &BTreeMap<String, AgreementReport>) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|(k, r)| vec![k.clone(), f3(r.f1), r.kappa.map_or("-".into(), f3), r.items.to_string()])
        .collect();
    render_table(&["level", "F1", "kappa", "items"], &rows)
}

pub fn violation_lines(document: impl Display, violations: &[Violation]) -> String {
    violations.iter().map(|v| format!("{document}\t{}\t{}\n", v.code, v.subject)).collect()
}
