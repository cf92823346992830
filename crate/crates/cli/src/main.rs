// SPDX-License-Identifier: Apache-2.0

//! `orthrus`: command-line front end of the dual-loop optimizer.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use orthrus_core::backend::Backend;
use orthrus_core::campaign::{
    front_2d, run_campaign, write_frontier_csv, ArchiveReport, CampaignConfig, DirectionEntry, LabeledArchive,
    DIRECTIONS_FILE,
};
use orthrus_core::interloop::{
    knee_index, min_delay_index, mine_subcircuits, ppa_direction, select_fusion_candidates, CellContribution,
    DirectionWeights, DEFAULT_LAMBDA,
};
use orthrus_core::netlist::{
    generate_mac_array, parse_netlist, partition_combinational, static_timing, write_netlist, CellLibrary, CpaType,
    CtType, NetlistDoc,
};
use orthrus_core::pareto::Normalizer;
use orthrus_core::sysloop::{
    read_archive, run_system_loop, write_archive, ArchiveLine, ParameterConfig, SystemLoopConfig,
};
use orthrus_core::techloop::{run_tech_loop, TechCandidate, TechLoopConfig};
use orthrus_core::Error;

#[derive(Parser)]
#[command(name = "orthrus", version, about = "System/technology co-optimization of MAC arrays")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Anchor {
    Knee,
    MinDelay,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a MAC-array netlist as JSON.
    Gen {
        #[arg(long, default_value = "wt")]
        ct: CtType,
        #[arg(long, default_value = "sk")]
        cpa: CpaType,
        #[arg(long, default_value_t = 8)]
        rows: usize,
        #[arg(long, default_value_t = 8)]
        cols: usize,
        #[arg(long, default_value_t = 8)]
        width: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Contributions, fusion patterns and a frontier direction.
    Analyze {
        #[arg(long)]
        netlist: PathBuf,
        /// Archive whose delay/power frontier gives the direction.
        #[arg(long)]
        archive: Option<PathBuf>,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "knee")]
        anchor: Anchor,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        n_ext: usize,
        /// Report file; printed to stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Pattern library with example fragments.
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Search technology parameters along a direction.
    TechLoop {
        /// Report written by `analyze`.
        #[arg(long)]
        direction: PathBuf,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML with technology-loop settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Candidate table.
        #[arg(long, default_value = "candidates.csv")]
        candidates: PathBuf,
        /// Recharacterized library.
        #[arg(short, long, default_value = "library.json")]
        out: PathBuf,
    },
    /// Bayesian optimization of system parameters.
    SystemLoop {
        /// BO iterations after the initial design.
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, default_value_t = 10)]
        n_init: usize,
        #[arg(long, default_value_t = 1024)]
        pool_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(short, long, default_value = "run.jsonl")]
        out: PathBuf,
    },
    /// Run a campaign described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` of the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Hypervolumes, iso-metric deltas and frontier data from archives.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Directory for frontier.csv and report.json; summary only when absent.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Failure of one command, with its exit code.
enum Failure {
    Config(String),
    Stage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::Stage(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Gen { ct, cpa, rows, cols, width, out } => gen(ct, cpa, rows, cols, width, &out),
        Command::Analyze { netlist, archive, library, anchor, lambda, k, n_ext, out, patterns } => {
            analyze(&netlist, archive.as_deref(), library.as_deref(), anchor, lambda, k, n_ext, out, patterns)
        }
        Command::TechLoop { direction, library, seed, config, candidates, out } => {
            tech_loop(&direction, library.as_deref(), seed, config.as_deref(), &candidates, &out)
        }
        Command::SystemLoop { budget, n_init, pool_size, seed, library, out } => {
            system_loop(budget, n_init, pool_size, seed, library.as_deref(), &out)
        }
        Command::Run { config, out_dir } => run(&config, out_dir),
        Command::Report { runs, out_dir } => report(&runs, out_dir.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Stage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Failure::Stage(format!("cannot write {}: {e}", path.display())))
}

fn load_library(path: Option<&Path>) -> Result<CellLibrary, Failure> {
    match path {
        Some(p) => Ok(CellLibrary::from_json(&read(p)?)?),
        None => Ok(CellLibrary::default()),
    }
}

fn gen(ct: CtType, cpa: CpaType, rows: usize, cols: usize, width: usize, out: &Path) -> CmdResult {
    let g = generate_mac_array(ct, cpa, rows, cols, width).map_err(|e| Failure::Config(e.to_string()))?;
    write(out, &write_netlist(&g)?)?;
    println!("{} cells, {} nets -> {}", g.cell_count(), g.net_count(), out.display());
    Ok(())
}

/// Output of `analyze`, input of `tech-loop`.
#[derive(Serialize, Deserialize)]
struct AnalysisReport {
    critical_ns: f64,
    contributions: CellContribution,
    direction: Option<DirectionWeights>,
    anchor: Option<ArchiveLine>,
    patterns: Vec<PatternRecord>,
}

#[derive(Serialize, Deserialize)]
struct PatternRecord {
    key: String,
    count: usize,
    disjoint: usize,
    num_cells: usize,
    num_inputs: usize,
    num_outputs: usize,
    depth: usize,
    /// Promoted to a fused cell under `n_ext`.
    selected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    example: Option<NetlistDoc>,
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    netlist: &Path,
    archive: Option<&Path>,
    library: Option<&Path>,
    anchor: Anchor,
    lambda: f64,
    k: usize,
    n_ext: usize,
    out: Option<PathBuf>,
    patterns_out: Option<PathBuf>,
) -> CmdResult {
    let g = parse_netlist(&read(netlist)?)?;
    let lib = load_library(library)?;
    let sta = static_timing(&g, &lib, 10)?;
    let contributions = CellContribution::compute(&g, &lib, &sta, lambda)?;

    let island = partition_combinational(&g).into_iter().max_by_key(|i| i.cell_count());
    let mined = match island {
        Some(i) => mine_subcircuits(&i, 3, 2, 4)?,
        None => Vec::new(),
    };
    let chosen: Vec<String> = select_fusion_candidates(&mined, n_ext).into_iter().map(|p| p.key).collect();
    let record = |p: &orthrus_core::interloop::SubcircuitPattern, example: bool| PatternRecord {
        key: p.key.clone(),
        count: p.count,
        disjoint: p.disjoint,
        num_cells: p.num_cells,
        num_inputs: p.num_inputs,
        num_outputs: p.num_outputs,
        depth: p.depth,
        selected: chosen.contains(&p.key),
        example: example.then(|| NetlistDoc::from(&p.example)),
    };

    let (direction, anchor_line) = match archive {
        Some(path) => {
            let lines = read_archive(&read(path)?)?;
            let ys: Vec<_> = lines.iter().map(|l| l.objectives).collect();
            let norm = Normalizer::fit(&ys)?;
            let pts = front_2d(&ys.iter().map(|y| norm.apply(y)).collect::<Vec<_>>());
            let pos = match anchor {
                Anchor::Knee => knee_index(&pts),
                Anchor::MinDelay => min_delay_index(&pts),
            }
            .ok_or_else(|| Failure::Stage("archive has no frontier".into()))?;
            let dir = ppa_direction(&pts, pos, k)?;
            let line = lines.iter().find(|l| {
                let y = norm.apply(&l.objectives);
                (y.delay, y.power) == pts[pos]
            });
            (Some(dir), line.cloned())
        }
        None => (None, None),
    };

    let report = AnalysisReport {
        critical_ns: sta.critical,
        contributions,
        direction,
        anchor: anchor_line,
        patterns: mined.iter().take(20).map(|p| record(p, false)).collect(),
    };
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    match out {
        Some(p) => write(&p, &text)?,
        None => println!("{text}"),
    }
    if let Some(p) = patterns_out {
        let all: Vec<PatternRecord> = mined.iter().map(|p| record(p, true)).collect();
        write(&p, &serde_json::to_string_pretty(&all).map_err(Error::from)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CandidateRow {
    phig_n: f64,
    phig_p: f64,
    hfin_nm: f64,
    tfin_nm: f64,
    lg_nm: f64,
    lext_nm: u32,
    lct_nm: f64,
    rows: String,
    objective: f64,
    from_history: bool,
}

fn tech_loop(
    direction: &Path,
    library: Option<&Path>,
    seed: u64,
    config: Option<&Path>,
    candidates: &Path,
    out: &Path,
) -> CmdResult {
    let report: AnalysisReport = serde_json::from_str(&read(direction)?)
        .map_err(|e| Failure::Config(format!("{}: {e}", direction.display())))?;
    let dir = report.direction.ok_or_else(|| {
        Failure::Config(format!("{} has no direction; run analyze with --archive", direction.display()))
    })?;
    let cfg: TechLoopConfig = match config {
        Some(p) => toml::from_str(&read(p)?).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        None => TechLoopConfig::default(),
    };
    let lib = load_library(library)?;
    let fused: Vec<String> = lib.fused.iter().map(|f| f.name.clone()).collect();
    let result = run_tech_loop(&dir, &report.contributions, &lib, &[TechCandidate::default_for(&fused)], &cfg, seed)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &result.dataset {
        let t = &s.candidate.params;
        let rows: Vec<String> = s.candidate.rows.iter().map(|(n, r)| format!("{n}={r}")).collect();
        w.serialize(CandidateRow {
            phig_n: t.phig_n,
            phig_p: t.phig_p,
            hfin_nm: t.hfin_nm,
            tfin_nm: t.tfin_nm,
            lg_nm: t.lg_nm,
            lext_nm: t.lext_nm,
            lct_nm: t.lct_nm,
            rows: rows.join(";"),
            objective: s.y,
            from_history: s.from_history,
        })
        .map_err(|e| Failure::Stage(e.to_string()))?;
    }
    let table = w.into_inner().map_err(|e| Failure::Stage(e.to_string()))?;
    write(candidates, &String::from_utf8_lossy(&table))?;
    write(out, &result.library.to_json()?)?;
    println!(
        "best objective {:.6} after {} evaluations; library -> {}",
        result.best_y,
        result.evaluations,
        out.display()
    );
    Ok(())
}

fn system_loop(
    budget: usize,
    n_init: usize,
    pool_size: usize,
    seed: u64,
    library: Option<&Path>,
    out: &Path,
) -> CmdResult {
    let lib = load_library(library)?;
    let cfg = SystemLoopConfig { n_init, t_max: budget, pool_size, ..SystemLoopConfig::default() };
    let backend = Backend::default();
    let r = run_system_loop(&|p: &ParameterConfig| backend.evaluate(p, &lib), &cfg, seed)?;
    let cell_file = out.with_extension("cells.jsonl");
    let cell_name = cell_file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let lines: Vec<ArchiveLine> =
        r.records.iter().map(|rec| ArchiveLine::new(rec, seed, "system", "system", &cell_name)).collect();
    write(out, &write_archive(&lines)?)?;
    let mut cells = String::new();
    for c in &r.cells.records {
        cells.push_str(&serde_json::to_string(c).map_err(Error::from)?);
        cells.push('\n');
    }
    write(&cell_file, &cells)?;
    println!(
        "{} evaluations, {} on the frontier, {} failed -> {}",
        r.records.len(),
        r.frontier()?.len(),
        r.failures.len(),
        out.display()
    );
    Ok(())
}

fn run(config: &Path, out_dir: Option<PathBuf>) -> CmdResult {
    let mut cfg = CampaignConfig::load(config)?;
    if out_dir.is_some() {
        cfg.out_dir = out_dir;
    }
    if cfg.out_dir.is_none() {
        cfg.out_dir = Some(PathBuf::from("campaign"));
    }
    let outcome = run_campaign(&cfg)?;
    let r = &outcome.report;
    for (mode, hv) in &r.median_hypervolume {
        println!("{mode:<10} median hypervolume {hv:.4}");
    }
    for c in &r.iso {
        println!("{}", c.describe());
    }
    for (mode, s) in &r.cosine_series {
        let pos = s.iter().filter(|c| **c > 0.0).count();
        println!("{mode:<10} direction cosine > 0 for {pos} of {} anchors", s.len());
    }
    let dir = cfg.out_dir.as_deref().unwrap_or(Path::new("."));
    println!("artifacts -> {}", dir.display());
    if r.failed {
        for s in &r.seeds {
            if let Some(f) = &s.failure {
                eprintln!("seed {}: {f}", s.seed);
            }
            for m in s.modes.iter().filter(|m| m.failure.is_some()) {
                eprintln!("seed {} mode {}: {}", s.seed, m.mode, m.failure.as_deref().unwrap_or(""));
            }
        }
        return Err(Failure::Stage("campaign finished with failed stages; see report.json".into()));
    }
    Ok(())
}

fn report(runs: &[PathBuf], out_dir: Option<&Path>) -> CmdResult {
    let mut files = Vec::new();
    for p in runs {
        files.push((p, read_archive(&read(p)?)?));
    }
    let single = files.len() == 1;
    let mut archives: Vec<LabeledArchive> = Vec::new();
    for (path, lines) in &files {
        for a in orthrus_core::campaign::group_by_mode(lines) {
            let label = if single { a.label } else { format!("{}:{}", path.display(), a.label) };
            archives.push(LabeledArchive { label, lines: a.lines });
        }
    }
    let r = ArchiveReport::build(&archives).map_err(|e| Failure::Config(e.to_string()))?;
    for (label, hv) in r.median_hypervolumes() {
        println!("{label}: median hypervolume {hv:.4}");
    }
    for c in &r.iso {
        println!("{}", c.describe());
    }
    for (path, _) in &files {
        let dirs = path.parent().unwrap_or(Path::new(".")).join(DIRECTIONS_FILE);
        if let Ok(text) = std::fs::read_to_string(&dirs) {
            let entries: Vec<DirectionEntry> = serde_json::from_str(&text).map_err(Error::from)?;
            let mut cos: Vec<f64> = entries.iter().filter_map(|e| e.cosine).collect();
            cos.sort_by(f64::total_cmp);
            let shown: Vec<String> = cos.iter().map(|c| format!("{c:.3}")).collect();
            println!("cosine series ({}): [{}]", dirs.display(), shown.join(", "));
        }
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Stage(e.to_string()))?;
        write(&dir.join("frontier.csv"), &write_frontier_csv(&r.frontier)?)?;
        write(&dir.join("report.json"), &serde_json::to_string_pretty(&r).map_err(Error::from)?)?;
        println!("frontier and report -> {}", dir.display());
    }
    Ok(())
}
