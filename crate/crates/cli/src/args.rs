use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radiogram::catalog::EquivalenceLevel;
use radiogram::grammar::GrammarId;
use radiogram::polyhedra::ShapeKind;

#[derive(Debug, Parser)]
#[command(
    name = "radiogram",
    version,
    about = "Shape grammars over tetrahedra and octahedra"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate every design reachable in N rule applications.
    Enumerate(EnumerateArgs),
    /// Classification ladder for one grammar, or the published-count check.
    Report(ReportArgs),
    /// Replay a move script into an exact design.
    Derive(DeriveArgs),
    /// Export a design's node/strut frame.
    Export(ExportArgs),
    /// Print the symmetry group of a canonical solid.
    Symmetry(SymmetryArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GrammarArg {
    Tet,
    Oct,
    TetOct,
}

impl From<GrammarArg> for GrammarId {
    fn from(g: GrammarArg) -> Self {
        match g {
            GrammarArg::Tet => GrammarId::TetTet,
            GrammarArg::Oct => GrammarId::OctOct,
            GrammarArg::TetOct => GrammarId::TetOct,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Tet,
    Oct,
}

impl From<ShapeArg> for ShapeKind {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Tet => ShapeKind::Tet,
            ShapeArg::Oct => ShapeKind::Oct,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    L0,
    L1,
    L2,
    L3,
}

impl From<LevelArg> for EquivalenceLevel {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::L0 => EquivalenceLevel::L0Labeled,
            LevelArg::L1 => EquivalenceLevel::L1Geometry,
            LevelArg::L2 => EquivalenceLevel::L2ProperCongruence,
            LevelArg::L3 => EquivalenceLevel::L3FullCongruence,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Obj,
    Json,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long, value_enum)]
    pub grammar: GrammarArg,
    #[arg(long)]
    pub depth: usize,
    /// Keep one representative per class at this level.
    #[arg(long, value_enum, default_value = "l0")]
    pub dedupe: LevelArg,
    /// Realize every design and drop overlapping ones (the default).
    #[arg(long, conflicts_with = "count_only")]
    pub strict: bool,
    /// Count labeled traces without building geometry.
    #[arg(long)]
    pub count_only: bool,
    /// TET_OCT only: glue the other kind onto every face.
    #[arg(long)]
    pub alternate: bool,
    /// Also record label-sensitive keys.
    #[arg(long)]
    pub label_sensitive: bool,
    /// Spread the enumeration over all cores.
    #[arg(long)]
    pub parallel: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Compare depth-1 counts against the published numbers.
    #[arg(long, conflicts_with_all = ["grammar", "depth"])]
    pub paper_check: bool,
    /// Exit with status 3 when any published count is not reproduced.
    #[arg(long, requires = "paper_check")]
    pub fail_on_mismatch: bool,
    #[arg(long, value_enum, required_unless_present = "paper_check")]
    pub grammar: Option<GrammarArg>,
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    #[arg(long)]
    pub alternate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// JSON move list, or an object with grammar, initial_kind, alternate and moves.
    #[arg(long)]
    pub script: PathBuf,
    /// Grammar for bare move lists.
    #[arg(long, value_enum, default_value = "tet")]
    pub grammar: GrammarArg,
    /// Initial solid for bare move lists; defaults to the grammar's first kind.
    #[arg(long, value_enum)]
    pub initial_kind: Option<ShapeArg>,
    #[arg(long)]
    pub alternate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Design JSON as written by `derive`.
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    /// Physical edge length in meters.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[arg(long, value_enum)]
    pub shape: ShapeArg,
    /// Rotations only.
    #[arg(long)]
    pub proper: bool,
    /// Print the group as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Snapshot sessions as JSON files in this directory and reload them on start.
    #[arg(long)]
    pub persist: Option<PathBuf>,
    /// Deepest catalog the service will build on request.
    #[arg(long, default_value_t = 2)]
    pub catalog_max_depth: usize,
}
