use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use radiogram::catalog::{
    build_catalog, labeled_count, ladder_report_with, paper_check, paper_specs, CatalogEntryDoc,
    CatalogOptions, EquivalenceLevel, GrammarSpec, LabelMode, LadderReport, PaperCheckResult,
};
use radiogram::exact_geom::Isometry;
use radiogram::frame::{extract_frame, ScaleMeters};
use radiogram::grammar::{design_from_json, replay, ApplyMode, DesignDecodeError, GrammarId, Move};
use radiogram::polyhedra::{canonical_symmetries, ShapeKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::args::{
    Command, DeriveArgs, EnumerateArgs, ExportArgs, ExportFormat, ReportArgs, ServeArgs,
    SymmetryArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Server(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output { .. } | CliError::Server(_) => 1,
            CliError::InvalidInput(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Enumerate(a) => enumerate(a),
        Command::Report(a) => report(a),
        Command::Derive(a) => derive(a),
        Command::Export(a) => export(a),
        Command::Symmetry(a) => symmetry(a),
        Command::Serve(a) => serve(a),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Output {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn json_error(path: &Path, e: &serde_json::Error) -> CliError {
    CliError::InvalidInput(format!(
        "{}: invalid JSON at line {} column {}: {e}",
        path.display(),
        e.line(),
        e.column()
    ))
}

fn spec_of(grammar: GrammarId, alternate: bool) -> Result<GrammarSpec, CliError> {
    if alternate && grammar != GrammarId::TetOct {
        return Err(CliError::Usage(
            "--alternate only applies to the tet-oct grammar".into(),
        ));
    }
    Ok(GrammarSpec {
        id: grammar,
        alternate,
    })
}

#[derive(Serialize)]
struct CountOnlyDoc {
    grammar: GrammarId,
    alternate: bool,
    depth: usize,
    mode: &'static str,
    labeled_count: usize,
}

fn enumerate(a: EnumerateArgs) -> Result<(), CliError> {
    let spec = spec_of(a.grammar.into(), a.alternate)?;
    let level: EquivalenceLevel = a.dedupe.into();
    if a.count_only {
        if level != EquivalenceLevel::L0Labeled {
            return Err(CliError::Usage(
                "--count-only builds no geometry, so --dedupe must be l0".into(),
            ));
        }
        let n = labeled_count(spec, a.depth, ApplyMode::CountOnly);
        log::info!("{} depth {}: {n} labeled traces", spec.id, a.depth);
        let doc = CountOnlyDoc {
            grammar: spec.id,
            alternate: spec.alternate,
            depth: a.depth,
            mode: "count-only",
            labeled_count: n,
        };
        write_output(a.out.as_deref(), &to_json(&doc))?;
        if a.out.is_some() {
            println!(
                "{} depth {}: {n} labeled designs (count-only)",
                spec.id, a.depth
            );
        }
        return Ok(());
    }
    let catalog = build_catalog(
        spec,
        a.depth,
        CatalogOptions {
            label_sensitive: a.label_sensitive,
            parallel: a.parallel,
        },
    );
    let docs: Vec<CatalogEntryDoc> = catalog
        .representatives(level)
        .into_iter()
        .map(CatalogEntryDoc::from)
        .collect();
    write_output(a.out.as_deref(), &to_json(&docs))?;
    if a.out.is_some() {
        println!(
            "{} depth {}: {} labeled, {} infeasible, {} realized; L1 {} L2 {} L3 {}; wrote {} {} representatives",
            spec.id,
            a.depth,
            catalog.nominal_count,
            catalog.infeasible_count,
            catalog.entries.len(),
            catalog.class_count(EquivalenceLevel::L1Geometry),
            catalog.class_count(EquivalenceLevel::L2ProperCongruence),
            catalog.class_count(EquivalenceLevel::L3FullCongruence),
            docs.len(),
            level.short(),
        );
    }
    Ok(())
}

fn row(values: &[usize]) -> String {
    let parts: Vec<String> = values.iter().map(usize::to_string).collect();
    format!("{} | {}", parts.join(" "), values.iter().sum::<usize>())
}

fn label_name(l: LabelMode) -> &'static str {
    match l {
        LabelMode::Blind => "blind",
        LabelMode::Sensitive => "sensitive",
    }
}

fn paper_table(r: &PaperCheckResult) -> String {
    let specs = paper_specs();
    let labeled: Vec<usize> = specs.iter().map(|s| r.labeled_counts[&s.id]).collect();
    let target_labeled: Vec<usize> = specs
        .iter()
        .map(|s| r.paper_targets.labeled[&s.id])
        .collect();
    let target_unique: Vec<usize> = specs
        .iter()
        .map(|s| r.paper_targets.unique[&s.id])
        .collect();
    let verdict = |ok: bool| if ok { "match" } else { "MISMATCH" };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "grammars: TET_TET OCT_OCT TET_OCT(alternating) | total"
    );
    let _ = writeln!(
        out,
        "labeled             {}   target {}   {}",
        row(&labeled),
        row(&target_labeled),
        verdict(r.labeled_match)
    );
    let _ = writeln!(out, "unique target       {}", row(&target_unique));
    for (i, total) in r.unique_totals.iter().enumerate() {
        let counts: Vec<usize> = r.ladders.iter().map(|l| l.paper_match[i].count).collect();
        let _ = writeln!(
            out,
            "unique {:<12} {}   {}",
            format!("{}-{}", label_name(total.labels), total.level.short()),
            row(&counts),
            verdict(total.matches)
        );
    }
    let _ = writeln!(out, "runtime {} ms", r.runtime_ms);
    out
}

fn ladder_table(r: &LadderReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}{} depth {}: {} labeled, {} realized, {} infeasible",
        r.grammar,
        if r.alternate { " (alternating)" } else { "" },
        r.depth,
        r.nominal_labeled_count,
        r.l0,
        r.infeasible
    );
    let _ = writeln!(
        out,
        "label-blind      L1 {:>6}  L2 {:>6}  L3 {:>6}",
        r.blind.l1, r.blind.l2, r.blind.l3
    );
    let _ = writeln!(
        out,
        "label-sensitive  L1 {:>6}  L2 {:>6}  L3 {:>6}",
        r.sensitive.l1, r.sensitive.l2, r.sensitive.l3
    );
    let _ = writeln!(out, "chiral pairs {}", r.chiral_pair_count);
    out
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    if a.paper_check {
        let r = paper_check();
        write_output(a.out.as_deref(), &to_json(&r))?;
        let table = paper_table(&r);
        if a.out.is_some() {
            print!("{table}");
        } else {
            eprint!("{table}");
        }
        if a.fail_on_mismatch && !(r.labeled_match && r.unique_match) {
            return Err(CliError::Mismatch(
                "computed counts do not reproduce the published targets".into(),
            ));
        }
        return Ok(());
    }
    let grammar = a.grammar.expect("clap enforces --grammar");
    let spec = spec_of(grammar.into(), a.alternate)?;
    let r = ladder_report_with(spec, a.depth, true);
    write_output(a.out.as_deref(), &to_json(&r))?;
    if a.out.is_some() {
        print!("{}", ladder_table(&r));
    }
    Ok(())
}

/// Object form of a derive script. `trace` is accepted as an alias so a
/// design file can be re-derived directly.
#[derive(Deserialize)]
struct ScriptDoc {
    grammar: Option<GrammarId>,
    initial_kind: Option<ShapeKind>,
    alternate: Option<bool>,
    #[serde(default, alias = "trace")]
    moves: Vec<Move>,
}

fn derive(a: DeriveArgs) -> Result<(), CliError> {
    let text = read_input(&a.script)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| json_error(&a.script, &e))?;
    let doc = if value.is_array() {
        ScriptDoc {
            grammar: None,
            initial_kind: None,
            alternate: None,
            moves: serde_json::from_str(&text).map_err(|e| json_error(&a.script, &e))?,
        }
    } else {
        serde_json::from_str(&text).map_err(|e| json_error(&a.script, &e))?
    };
    let grammar = doc.grammar.unwrap_or_else(|| a.grammar.into());
    let kind = doc
        .initial_kind
        .or(a.initial_kind.map(Into::into))
        .unwrap_or(grammar.initial_kinds()[0]);
    let alternate = doc.alternate.unwrap_or(a.alternate);
    let design = replay(grammar, kind, alternate, &doc.moves, ApplyMode::Strict).map_err(|e| {
        CliError::InvalidInput(format!("{}: {e} ({})", a.script.display(), e.error.code()))
    })?;
    write_output(a.out.as_deref(), &to_json(&design))
}

fn export(a: ExportArgs) -> Result<(), CliError> {
    let text = read_input(&a.design)?;
    let design = design_from_json(&text).map_err(|e| match e {
        DesignDecodeError::Json(j) => json_error(&a.design, &j),
        other => CliError::InvalidInput(format!("{}: {other}", a.design.display())),
    })?;
    let scale = match a.scale {
        Some(m) => Some(ScaleMeters::new(m).ok_or_else(|| {
            CliError::Usage(format!("--scale must be a positive length (got {m})"))
        })?),
        None => None,
    };
    let frame = extract_frame(&design)
        .map_err(|e| CliError::InvalidInput(format!("{}: {e}", a.design.display())))?
        .with_scale(scale);
    let text = match a.format {
        ExportFormat::Obj => frame.to_obj(),
        ExportFormat::Json => to_json(&frame.to_doc()),
    };
    write_output(a.out.as_deref(), &text)
}

fn format_isometry(g: &Isometry) -> String {
    let q = g.q();
    let rows: Vec<String> = (0..3)
        .map(|r| {
            let cells: Vec<String> = (0..3).map(|c| format!("{:>2}", q.get(r, c))).collect();
            format!("[{}]", cells.join(" "))
        })
        .collect();
    let [x, y, z] = g.t().components();
    format!(
        "det {:+} q {} t ({x}, {y}, {z})",
        g.det_sign(),
        rows.join(" ")
    )
}

#[derive(Serialize)]
struct SymmetryDoc<'a> {
    shape: ShapeKind,
    order: usize,
    elements: &'a [Isometry],
}

fn symmetry(a: SymmetryArgs) -> Result<(), CliError> {
    let kind: ShapeKind = a.shape.into();
    let full = canonical_symmetries(kind);
    let group = if a.proper {
        full.proper()
    } else {
        full.clone()
    };
    if a.json {
        let doc = SymmetryDoc {
            shape: kind,
            order: group.order(),
            elements: &group.elements,
        };
        return write_output(None, &to_json(&doc));
    }
    let mut out = format!("order {}\n", group.order());
    for (i, g) in group.elements.iter().enumerate() {
        let _ = writeln!(out, "{i:>3}  {}", format_isometry(g));
    }
    write_output(None, &out)
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(format!("cannot start runtime: {e}")))?;
    runtime.block_on(crate::service::serve(
        &a.host,
        a.port,
        a.persist,
        a.catalog_max_depth,
    ))
}
