use serde::Serialize;

use super::render::{format_number, Cell, ReportTable, CORRELATION_DECIMALS};
use super::{by_group, column, ReportError};
use crate::ingest::{family_suffix, ProfileRecord};
use crate::model::IndicatorName;
use crate::stats::{
    correlation_matrix, pairwise_complete, pearson, spearman, CorrelationCell, CorrelationMatrix, Method,
};

/// Scalars followed by P, I, R and P/I of one family.
pub fn correlation_variables(family: &IndicatorName) -> Vec<String> {
    let s = family_suffix(family);
    let mut v: Vec<String> = ["papers", "cites", "h"].map(String::from).to_vec();
    v.extend(["p", "i", "r", "pi"].map(|d| format!("{d}_{s}")));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCorrelation {
    pub group: String,
    pub family: IndicatorName,
    pub matrix: CorrelationMatrix,
}

/// One matrix per (group, family), groups in name order.
pub fn correlation_report(
    rows: &[ProfileRecord],
    method: Method,
    families: &[IndicatorName],
) -> Result<Vec<GroupCorrelation>, ReportError> {
    let groups = by_group(rows)?;
    let mut out = Vec::new();
    for (group, members) in &groups {
        let members: Vec<ProfileRecord> = members.iter().map(|r| (*r).clone()).collect();
        for family in families {
            let columns = correlation_variables(family)
                .into_iter()
                .map(|v| column(&members, &v).map(|c| (v, c)))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(GroupCorrelation {
                group: group.clone(),
                family: family.clone(),
                matrix: correlation_matrix(&columns, method)?,
            });
        }
    }
    Ok(out)
}

/// `0.99^c`; `NA` when undefined.
fn render_cell(c: &CorrelationCell) -> String {
    let r = format_number(c.r, CORRELATION_DECIMALS);
    match c.significance.mark() {
        Some(m) if c.r.is_some() => format!("{r}^{m}"),
        _ => r,
    }
}

/// Upper-triangular layout: a row per variable except the last, a column
/// per variable except the first; cells on or below the diagonal are empty.
pub fn correlation_table(reports: &[GroupCorrelation]) -> ReportTable {
    let names = reports.first().map(|r| r.matrix.names.clone()).unwrap_or_default();
    let k = names.len();
    let mut t = ReportTable::new(
        ["group", "family", "variable"]
            .map(String::from)
            .into_iter()
            .chain(names.iter().skip(1).cloned()),
    );
    for rep in reports {
        for i in 0..k.saturating_sub(1) {
            let mut cells = vec![
                Cell::text(&rep.group),
                Cell::text(rep.family.as_str()),
                Cell::text(&rep.matrix.names[i]),
            ];
            for j in 1..k {
                cells.push(if j > i {
                    Cell::Text(render_cell(&rep.matrix.cells[i][j]))
                } else {
                    Cell::Empty
                });
            }
            t.push(cells);
        }
    }
    t
}

/// Correlation, within each group, of one dimension between two families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossFamilyCorrelation {
    pub group: String,
    pub dimension: String,
    pub family: IndicatorName,
    pub other: IndicatorName,
    pub cell: CorrelationCell,
}

pub fn cross_family_correlation(
    rows: &[ProfileRecord],
    dimension: &str,
    family: &IndicatorName,
    other: &IndicatorName,
    method: Method,
) -> Result<Vec<CrossFamilyCorrelation>, ReportError> {
    let ka = format!("{dimension}_{}", family_suffix(family));
    let kb = format!("{dimension}_{}", family_suffix(other));
    column(rows, &ka)?;
    column(rows, &kb)?;
    by_group(rows)?
        .into_iter()
        .map(|(group, members)| {
            let a: Vec<Option<f64>> = members.iter().map(|r| r.value(&ka).flatten()).collect();
            let b: Vec<Option<f64>> = members.iter().map(|r| r.value(&kb).flatten()).collect();
            let (x, y) = pairwise_complete(&a, &b);
            let cell = match method {
                Method::Pearson => pearson(&x, &y)?,
                Method::Spearman => spearman(&x, &y)?,
            };
            Ok(CrossFamilyCorrelation {
                group,
                dimension: dimension.to_string(),
                family: family.clone(),
                other: other.clone(),
                cell,
            })
        })
        .collect()
}

pub fn cross_family_table(items: &[CrossFamilyCorrelation]) -> ReportTable {
    let mut t = ReportTable::new(["group", "dimension", "family", "other", "n", "r"]);
    for c in items {
        t.push(vec![
            Cell::text(&c.group),
            Cell::text(&c.dimension),
            Cell::text(c.family.as_str()),
            Cell::text(c.other.as_str()),
            Cell::Integer(Some(c.cell.n as u64)),
            Cell::Text(render_cell(&c.cell)),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Significance;

    #[test]
    fn fixture_matrices_have_expected_shape() {
        let rows = crate::fixtures::profiles().into_rows();
        let reps = correlation_report(&rows, Method::Pearson, &[IndicatorName::sjr()]).unwrap();
        assert_eq!(reps.len(), 4);
        let t = correlation_table(&reps);
        assert_eq!(t.columns.len(), 3 + 6);
        assert_eq!(t.rows.len(), 4 * 6);
        assert_eq!(t.rows[0][3].render().split('^').count(), 2);
        assert_eq!(t.rows[5][3], Cell::Empty);
    }

    #[test]
    fn two_author_group_is_flagged_not_fatal() {
        let rows: Vec<ProfileRecord> = crate::fixtures::profiles().into_rows().into_iter().take(2).collect();
        let reps = correlation_report(&rows, Method::Spearman, &[IndicatorName::sjr()]).unwrap();
        let c = reps[0].matrix.get("papers", "cites").unwrap();
        assert_eq!(c.r, None);
        assert!(c.undefined.is_some());
        assert_eq!(render_cell(c), "NA");
    }

    #[test]
    fn cell_rendering() {
        let c = CorrelationCell {
            r: Some(0.987),
            n: 30,
            significance: Significance::P99,
            undefined: None,
        };
        assert_eq!(render_cell(&c), "0.99^c");
        let c = CorrelationCell {
            r: Some(-0.1),
            n: 30,
            significance: Significance::None,
            undefined: None,
        };
        assert_eq!(render_cell(&c), "-0.10");
    }
}
