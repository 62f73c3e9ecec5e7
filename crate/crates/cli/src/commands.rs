use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use citepot::engine::{compute_profiles, BatchOptions, EngineError, ProfileOptions};
use citepot::ingest::{
    load_events, load_impact_table, load_scalars, read_profiles, write_profiles, Dataset, Format, ProfileRecord,
    ProfileTable, ScalarMetrics,
};
use citepot::model::{EventKind, IndicatorName, IndicatorProfile};
use citepot::report::{
    aggregate_report, author_table, author_table_report, available_variables, boxplot_svg, correlation_report,
    correlation_table, cross_family_correlation, cross_family_table, figure_data, group_summary, group_summary_table,
    Cell, FigureData, FigureKind, ReportTable,
};
use citepot::stats::Method;

use crate::args::{Command, CorrelateArgs, FigureArg, MethodArg, OutputFormat, ReportArgs, VarArgs};
use crate::config::RunConfig;
use crate::exit::{NoAuthors, PartialFailure, UsageError};

pub fn run(command: &Command, cfg: &RunConfig) -> anyhow::Result<()> {
    match command {
        Command::Compute => compute(cfg),
        Command::Summarize(a) => summarize(cfg, a),
        Command::Correlate(a) => correlate(cfg, a),
        Command::Report(a) => report(cfg, a),
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> anyhow::Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| UsageError(format!("{flag} is required")).into())
}

fn load_scalars_opt(cfg: &RunConfig) -> anyhow::Result<BTreeMap<String, ScalarMetrics>> {
    match &cfg.scalars {
        Some(p) => {
            Ok(load_scalars(open(p)?, Format::from_path(p)).with_context(|| format!("loading {}", p.display()))?)
        }
        None => Ok(BTreeMap::new()),
    }
}

/// Profiles for every family plus any per-author failures.
pub struct Computed {
    pub rows: Vec<ProfileRecord>,
    pub profiles: Vec<(IndicatorName, Vec<IndicatorProfile>)>,
    pub failure: Option<PartialFailure>,
}

/// Loads events, impacts and scalars and runs the engine for each family.
/// Authors failing in any family are dropped from every family.
pub fn compute_rows(cfg: &RunConfig) -> anyhow::Result<Computed> {
    let events_path = required(&cfg.events, "--events")?;
    let impacts_path = required(&cfg.impacts, "--impacts")?;
    let table = load_impact_table(open(impacts_path)?, Format::from_path(impacts_path))
        .with_context(|| format!("loading {}", impacts_path.display()))?;
    let corpora = load_events(open(events_path)?, Format::from_path(events_path))
        .with_context(|| format!("loading {}", events_path.display()))?;
    if corpora.is_empty() {
        return Err(NoAuthors.into());
    }
    let scalars = load_scalars_opt(cfg)?;
    let (dataset, _) = Dataset::assemble(table, corpora, scalars, cfg.window, cfg.validation)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .context("starting worker pool")?;
    let batch = BatchOptions {
        fail_fast: cfg.fail_fast,
        parallel: cfg.jobs != Some(1),
    };

    let mut per_family = Vec::with_capacity(cfg.families.len());
    let mut failures: Vec<(String, IndicatorName, EngineError)> = Vec::new();
    for family in &cfg.families {
        let options = ProfileOptions {
            indicator: family.clone(),
            window: cfg.window,
            missing: cfg.missing,
            window_policy: cfg.window_policy,
        };
        let outcome = pool
            .install(|| compute_profiles(&dataset.corpora, &dataset.impact_table, &options, batch))
            .with_context(|| format!("computing {family} profiles"))?;
        for (author, e) in outcome.failures {
            log::error!("author `{author}` ({family}): {e}");
            failures.push((author, family.clone(), e));
        }
        per_family.push((family.clone(), outcome.profiles));
    }

    let failed: BTreeSet<String> = failures.iter().map(|(a, _, _)| a.clone()).collect();
    for (_, profiles) in &mut per_family {
        profiles.retain(|p| !failed.contains(&p.author_id));
    }
    let rows = author_table(&per_family, &dataset.scalars)?;
    failures.sort_by(|a, b| a.0.cmp(&b.0));
    let failure = failures.into_iter().next().map(|(_, _, first)| PartialFailure {
        count: failed.len(),
        first,
    });
    Ok(Computed {
        rows,
        profiles: per_family,
        failure,
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Writes `<out>/<dataset>.<name>.<ext>`.
fn write_table(cfg: &RunConfig, name: &str, table: &ReportTable) -> anyhow::Result<PathBuf> {
    let path = cfg
        .out
        .join(format!("{}.{name}.{}", cfg.dataset, cfg.format.extension()));
    let mut w = create(&path)?;
    match cfg.format {
        OutputFormat::Csv => table.write(&mut w, Format::Csv)?,
        OutputFormat::Json => table.write(&mut w, Format::Json)?,
        OutputFormat::Text => w.write_all(table.to_text().as_bytes())?,
    }
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn coverage_table(profiles: &[(IndicatorName, Vec<IndicatorProfile>)]) -> ReportTable {
    let mut t = ReportTable::new(["author_id", "family", "kind", "total", "matched", "dropped"]);
    let mut rows: Vec<(&str, &IndicatorName, EventKind, [u64; 3])> = Vec::new();
    for (family, ps) in profiles {
        for p in ps {
            for kind in EventKind::ALL {
                let c = p.coverage.get(kind);
                rows.push((
                    &p.author_id,
                    family,
                    kind,
                    [c.total_count, c.matched_count, c.dropped_count],
                ));
            }
        }
    }
    rows.sort_by(|a, b| (a.0, a.2).cmp(&(b.0, b.2)).then_with(|| a.1.cmp(b.1)));
    for (author, family, kind, [total, matched, dropped]) in rows {
        t.push(vec![
            Cell::text(author),
            Cell::text(family.as_str()),
            Cell::text(kind.as_str()),
            Cell::Integer(Some(total)),
            Cell::Integer(Some(matched)),
            Cell::Integer(Some(dropped)),
        ]);
    }
    t
}

/// `profiles.csv` (or `.json`) plus `coverage.<ext>`. Authors that failed
/// are reported and left out; the exit code then reflects the first failure.
fn compute(cfg: &RunConfig) -> anyhow::Result<()> {
    let computed = compute_rows(cfg)?;
    let format = match cfg.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Text => {
            log::info!("profiles are an interchange file; writing csv");
            Format::Csv
        }
    };
    let authors = author_table_report(&computed.rows, &cfg.families);
    let table = ProfileTable::new(cfg.families.clone(), computed.rows)?;
    let path = cfg.out.join(format!("profiles.{format}"));
    let mut w = create(&path)?;
    write_profiles(&mut w, &table, format)?;
    w.flush()?;
    log::info!("wrote {} ({} authors)", path.display(), table.rows().len());
    write_table(cfg, "authors", &authors)?;
    write_table(cfg, "coverage", &coverage_table(&computed.profiles))?;
    match computed.failure {
        Some(f) => Err(f.into()),
        None => Ok(()),
    }
}

/// Rows from `--profiles` when given, otherwise computed in process.
/// `--scalars` overrides the scalar columns; an explicit family list
/// restricts the families.
pub fn load_rows(cfg: &RunConfig) -> anyhow::Result<(Vec<ProfileRecord>, Vec<IndicatorName>)> {
    let (mut rows, mut families) = match &cfg.profiles {
        Some(p) => {
            let table =
                read_profiles(open(p)?, Format::from_path(p)).with_context(|| format!("loading {}", p.display()))?;
            let families = table.families().to_vec();
            let rows = table.into_rows();
            let scalars = load_scalars_opt(cfg)?;
            (merge_scalars(rows, &scalars), families)
        }
        None => {
            let computed = compute_rows(cfg)?;
            if let Some(f) = computed.failure {
                return Err(f.into());
            }
            (computed.rows, cfg.families.clone())
        }
    };
    if rows.is_empty() {
        return Err(NoAuthors.into());
    }
    if cfg.families_explicit && cfg.profiles.is_some() {
        if let Some(f) = cfg.families.iter().find(|f| !families.contains(f)) {
            return Err(UsageError(format!(
                "family {f} is not in the profiles (available: {})",
                families
                    .iter()
                    .map(IndicatorName::as_str)
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
            .into());
        }
        families = cfg.families.clone();
        for r in &mut rows {
            r.families.retain(|f, _| families.contains(f));
        }
    }
    Ok((rows, families))
}

fn merge_scalars(mut rows: Vec<ProfileRecord>, scalars: &BTreeMap<String, ScalarMetrics>) -> Vec<ProfileRecord> {
    for r in &mut rows {
        if let Some(s) = scalars.get(&r.author_id) {
            r.scalars = Some(*s);
        }
    }
    rows
}

fn summarize(cfg: &RunConfig, args: &VarArgs) -> anyhow::Result<()> {
    let (rows, _) = load_rows(cfg)?;
    let vars = if args.vars.is_empty() {
        available_variables(&rows)
    } else {
        args.vars.clone()
    };
    let blocks = group_summary(&rows, &vars)?;
    write_table(cfg, "group-summary", &group_summary_table(&blocks))?;
    if blocks.len() < 2 {
        log::warn!(
            "only {} group(s); pooled summaries and variance decomposition skipped",
            blocks.len()
        );
        return Ok(());
    }
    let agg = aggregate_report(&rows, &vars)?;
    write_table(cfg, "aggregate", &agg.summary_table())?;
    write_table(cfg, "variance", &agg.variance_table())?;
    if !agg.deltas.is_empty() {
        write_table(cfg, "cross-family", &agg.delta_table())?;
    }
    Ok(())
}

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Pearson => Method::Pearson,
        MethodArg::Spearman => Method::Spearman,
    }
}

fn correlate(cfg: &RunConfig, args: &CorrelateArgs) -> anyhow::Result<()> {
    let (rows, families) = load_rows(cfg)?;
    let method = method_of(args.method);
    let reports = correlation_report(&rows, method, &families)?;
    write_table(cfg, &format!("correlation-{method}"), &correlation_table(&reports))?;
    if let Some((first, rest)) = families.split_first() {
        let mut cross = Vec::new();
        for other in rest {
            cross.extend(cross_family_correlation(&rows, "pi", first, other, method)?);
        }
        if !cross.is_empty() {
            write_table(cfg, &format!("cross-family-{method}"), &cross_family_table(&cross))?;
        }
    }
    Ok(())
}

fn report(cfg: &RunConfig, args: &ReportArgs) -> anyhow::Result<()> {
    let (rows, families) = load_rows(cfg)?;
    let kinds = if args.kinds.is_empty() {
        vec![FigureArg::Boxplot, FigureArg::Scatter, FigureArg::Ordered]
    } else {
        args.kinds.clone()
    };
    let first = citepot::ingest::family_suffix(&families[0]);
    for kind in kinds {
        match kind {
            FigureArg::Boxplot => {
                let variables = if args.vars.is_empty() {
                    available_variables(&rows)
                } else {
                    args.vars.clone()
                };
                let data = figure_data(
                    &rows,
                    &FigureKind::Boxplot {
                        variables: variables.clone(),
                    },
                )?;
                write_table(cfg, "boxplot", &data.table())?;
                if let (true, FigureData::Boxplot(b)) = (args.svg, &data) {
                    for v in &variables {
                        let path = cfg.out.join(format!("{}.boxplot-{v}.svg", cfg.dataset));
                        let mut w = create(&path)?;
                        w.write_all(boxplot_svg(b, v).as_bytes())?;
                        w.flush()?;
                    }
                }
            }
            FigureArg::Scatter => {
                let x = args.x.clone().unwrap_or_else(|| format!("p_{first}"));
                let y = args.y.clone().unwrap_or_else(|| format!("i_{first}"));
                let data = figure_data(&rows, &FigureKind::Scatter { x, y })?;
                write_table(cfg, "scatter", &data.table())?;
            }
            FigureArg::Ordered => {
                for f in &families {
                    let data = figure_data(&rows, &FigureKind::Ordered { family: f.clone() })?;
                    let name = format!("ordered-{}", citepot::ingest::family_suffix(f));
                    write_table(cfg, &name, &data.table())?;
                }
            }
        }
    }
    Ok(())
}
