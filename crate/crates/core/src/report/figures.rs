use std::fmt::Write as _;

use serde::Serialize;

use super::render::{round_half_even, Cell, ReportTable};
use super::{by_group, check_variables, column, variable_label, ReportError};
use crate::ingest::{family_suffix, ProfileRecord};
use crate::model::IndicatorName;
use crate::stats::{boxplot, BoxplotSummary};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FigureKind {
    /// Five-number summary per (group, variable).
    Boxplot { variables: Vec<String> },
    /// Paired values of two variables with each author's group.
    Scatter { x: String, y: String },
    /// Authors by descending I of `family`, with P, I and R.
    Ordered { family: IndicatorName },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotRow {
    pub group: String,
    pub variable: String,
    pub n: usize,
    pub summary: BoxplotSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub author_id: String,
    pub group: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderedRow {
    pub rank: usize,
    pub author_id: String,
    pub group: Option<String>,
    pub p: Option<f64>,
    pub i: Option<f64>,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FigureData {
    Boxplot(Vec<BoxplotRow>),
    Scatter {
        x: String,
        y: String,
        points: Vec<ScatterPoint>,
    },
    Ordered {
        family: IndicatorName,
        rows: Vec<OrderedRow>,
    },
}

pub fn figure_data(rows: &[ProfileRecord], kind: &FigureKind) -> Result<FigureData, ReportError> {
    match kind {
        FigureKind::Boxplot { variables } => {
            check_variables(rows, variables)?;
            let mut out = Vec::new();
            for (group, members) in by_group(rows)? {
                for v in variables {
                    let vals: Vec<f64> = members.iter().filter_map(|r| r.value(v).flatten()).collect();
                    if vals.is_empty() {
                        return Err(ReportError::EmptyGroup {
                            group,
                            variable: v.clone(),
                        });
                    }
                    out.push(BoxplotRow {
                        group: group.clone(),
                        variable: v.clone(),
                        n: vals.len(),
                        summary: boxplot(&vals)?,
                    });
                }
            }
            Ok(FigureData::Boxplot(out))
        }
        FigureKind::Scatter { x, y } => {
            let xs = column(rows, x)?;
            let ys = column(rows, y)?;
            let mut points = Vec::new();
            for ((r, xv), yv) in rows.iter().zip(xs).zip(ys) {
                let group = r
                    .group
                    .clone()
                    .ok_or_else(|| ReportError::MissingGroup(r.author_id.clone()))?;
                if let (Some(x), Some(y)) = (xv, yv) {
                    points.push(ScatterPoint {
                        author_id: r.author_id.clone(),
                        group,
                        x,
                        y,
                    });
                }
            }
            Ok(FigureData::Scatter {
                x: x.clone(),
                y: y.clone(),
                points,
            })
        }
        FigureKind::Ordered { family } => {
            let s = family_suffix(family);
            let key = |d: &str| format!("{d}_{s}");
            let (p, i, r) = (
                column(rows, &key("p"))?,
                column(rows, &key("i"))?,
                column(rows, &key("r"))?,
            );
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            // descending I, undefined last, ties by author id
            idx.sort_by(|&a, &b| {
                match (i[a], i[b]) {
                    (Some(x), Some(y)) => y.total_cmp(&x),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => std::cmp::Ordering::Equal,
                }
                .then_with(|| rows[a].author_id.cmp(&rows[b].author_id))
            });
            let ordered = idx
                .into_iter()
                .enumerate()
                .map(|(rank, k)| OrderedRow {
                    rank: rank + 1,
                    author_id: rows[k].author_id.clone(),
                    group: rows[k].group.clone(),
                    p: p[k],
                    i: i[k],
                    r: r[k],
                })
                .collect();
            Ok(FigureData::Ordered {
                family: family.clone(),
                rows: ordered,
            })
        }
    }
}

impl FigureData {
    pub fn table(&self) -> ReportTable {
        match self {
            FigureData::Boxplot(rows) => {
                let mut t = ReportTable::new([
                    "group",
                    "variable",
                    "n",
                    "whisker_low",
                    "q1",
                    "q2",
                    "q3",
                    "whisker_high",
                ]);
                for r in rows {
                    let s = &r.summary;
                    t.push(vec![
                        Cell::text(&r.group),
                        Cell::text(&r.variable),
                        Cell::Integer(Some(r.n as u64)),
                        Cell::value(Some(s.whisker_low)),
                        Cell::value(Some(s.q1)),
                        Cell::value(Some(s.q2)),
                        Cell::value(Some(s.q3)),
                        Cell::value(Some(s.whisker_high)),
                    ]);
                }
                t
            }
            FigureData::Scatter { x, y, points } => {
                let mut t = ReportTable::new(["author_id".to_string(), "group".to_string(), x.clone(), y.clone()]);
                for p in points {
                    t.push(vec![
                        Cell::text(&p.author_id),
                        Cell::text(&p.group),
                        Cell::value(Some(p.x)),
                        Cell::value(Some(p.y)),
                    ]);
                }
                t
            }
            FigureData::Ordered { family, rows } => {
                let s = family_suffix(family);
                let mut t = ReportTable::new([
                    "rank".to_string(),
                    "author_id".to_string(),
                    "group".to_string(),
                    format!("p_{s}"),
                    format!("i_{s}"),
                    format!("r_{s}"),
                ]);
                for r in rows {
                    t.push(vec![
                        Cell::Integer(Some(r.rank as u64)),
                        Cell::text(&r.author_id),
                        Cell::text(r.group.clone().unwrap_or_default()),
                        Cell::value(r.p),
                        Cell::value(r.i),
                        Cell::value(r.r),
                    ]);
                }
                t
            }
        }
    }
}

/// A minimal SVG with one box per group for `variable`, drawn only from the
/// five-number summaries.
pub fn boxplot_svg(rows: &[BoxplotRow], variable: &str) -> String {
    let boxes: Vec<&BoxplotRow> = rows.iter().filter(|r| r.variable == variable).collect();
    let (w, h, margin, slot) = (80.0 + 100.0 * boxes.len() as f64, 320.0, 40.0, 100.0);
    let lo = boxes
        .iter()
        .map(|b| b.summary.whisker_low)
        .fold(f64::INFINITY, f64::min);
    let hi = boxes
        .iter()
        .map(|b| b.summary.whisker_high)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y = |v: f64| round_half_even(h - margin - (v - lo) / span * (h - 2.0 * margin), 2);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        w / 2.0,
        escape(&variable_label(variable))
    );
    for (k, b) in boxes.iter().enumerate() {
        let cx = 60.0 + slot * k as f64 + slot / 2.0;
        let (l, r) = (cx - 25.0, cx + 25.0);
        let q = &b.summary;
        let _ = writeln!(s, r#"  <g stroke="black" fill="none">"#);
        let _ = writeln!(
            s,
            r#"    <line x1="{cx}" y1="{}" x2="{cx}" y2="{}"/>"#,
            y(q.whisker_low),
            y(q.q1)
        );
        let _ = writeln!(
            s,
            r#"    <line x1="{cx}" y1="{}" x2="{cx}" y2="{}"/>"#,
            y(q.q3),
            y(q.whisker_high)
        );
        for v in [q.whisker_low, q.whisker_high] {
            let _ = writeln!(
                s,
                r#"    <line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                cx - 10.0,
                y(v),
                cx + 10.0,
                y(v)
            );
        }
        let _ = writeln!(
            s,
            r#"    <polygon points="{l},{q3} {r},{q3} {r},{q1} {l},{q1}" fill="lightgray"/>"#,
            q3 = y(q.q3),
            q1 = y(q.q1)
        );
        let _ = writeln!(
            s,
            r#"    <line x1="{l}" y1="{}" x2="{r}" y2="{}" stroke-width="2"/>"#,
            y(q.q2),
            y(q.q2)
        );
        let _ = writeln!(s, "  </g>");
        let _ = writeln!(
            s,
            r#"  <text x="{cx}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            h - 15.0,
            escape(&b.group)
        );
    }
    for v in [lo, hi] {
        let _ = writeln!(
            s,
            r#"  <text x="5" y="{}" font-family="sans-serif" font-size="10">{}</text>"#,
            y(v),
            round_half_even(v, 3)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
