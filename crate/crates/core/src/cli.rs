//! Command implementations behind the `tripleid` binary.
//!
//! Every command writes its deterministic output to `out` and timings or
//! diagnostics to `err`, so tests can drive them without a subprocess.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dictionary::{role_path, Dictionary, DictionaryError, Role};
use crate::entailment::{report_counts, run_rule, EntailError, EntailOptions, EntailmentRule, RuleCounts};
use crate::generator::{generate, GenError, GenParams};
use crate::nt_parser::{NTriplesReader, ParseError, ParseMode, StreamError};
use crate::query::{decode_table, execute, EvalOptions, QueryError, DEFAULT_MAX_ROWS};
use crate::sparql::{parse_query, QueryParseError};
use crate::store::{chunk_triples_for_budget, device_memory_bytes, read_header, StoreError, TidFile, TidWriter, Triple, TripleSource};

/// Memory budget used to size chunks when none is given.
pub const DEFAULT_BUDGET_BYTES: u64 = 256 << 20;

pub const EXIT_PARSE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INVALID_HANDLE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    NTriples { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Query { path: PathBuf, source: QueryParseError },
    #[error("invalid dataset {basename}: {reason}")]
    InvalidHandle { basename: PathBuf, reason: String },
    #[error(transparent)]
    Eval(#[from] QueryError),
    #[error(transparent)]
    Entail(#[from] EntailError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::NTriples { .. } | CliError::Query { .. } => EXIT_PARSE,
            CliError::InvalidHandle { .. } => EXIT_INVALID_HANDLE,
            CliError::Io(_)
            | CliError::Store(StoreError::Io(_))
            | CliError::Dictionary(DictionaryError::Io(_))
            | CliError::Eval(QueryError::Io(_))
            | CliError::Gen(GenError::Io(_)) => EXIT_IO,
            CliError::Store(_) | CliError::Dictionary(_) => EXIT_INVALID_HANDLE,
            CliError::Eval(_) | CliError::Entail(_) | CliError::Gen(_) => EXIT_PARSE,
        }
    }
}

/// Worker count from `TRIPLEID_WORKERS`, else the machine's parallelism.
pub fn default_workers() -> usize {
    std::env::var("TRIPLEID_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn chunk_or_default(chunk_triples: Option<u64>) -> u64 {
    chunk_triples.unwrap_or_else(|| chunk_triples_for_budget(DEFAULT_BUDGET_BYTES))
}

fn secs(d: Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

fn file_len(path: &Path) -> u64 {
    fs::metadata(path).map_or(0, |m| m.len())
}

/// An opened basename: `.tid` plus the three role files, cross-checked.
#[derive(Debug)]
pub struct Dataset {
    pub basename: PathBuf,
    pub dict: Dictionary,
    pub triples: u64,
}

impl Dataset {
    pub fn tid_path(basename: &Path) -> PathBuf {
        role_path(basename, "tid")
    }

    /// Loads the dictionary and verifies that every ID in the `.tid` file is
    /// listed in the role file matching its position.
    pub fn open(basename: &Path) -> Result<Self, CliError> {
        let invalid = |reason: String| CliError::InvalidHandle {
            basename: basename.to_owned(),
            reason,
        };
        for ext in ["tid", "sid", "pid", "oid"] {
            let p = role_path(basename, ext);
            if !p.is_file() {
                return Err(invalid(format!("missing {}", p.display())));
            }
        }
        let dict = Dictionary::read_id_files(basename).map_err(|e| match e {
            DictionaryError::Io(e) => CliError::Io(e),
            other => invalid(other.to_string()),
        })?;
        let tid = Self::tid_path(basename);
        let triples = read_header(&tid).map_err(|e| match e {
            StoreError::Io(e) => CliError::Io(e),
            other => invalid(other.to_string()),
        })?;
        let source = TidFile::new(&tid, chunk_triples_for_budget(DEFAULT_BUDGET_BYTES));
        let mut bad: Option<String> = None;
        source
            .for_each_chunk(&mut |chunk| {
                for (i, t) in chunk.triples().enumerate() {
                    for (id, role) in t.ids().into_iter().zip(Role::ALL) {
                        if !dict.has_role(id, role) {
                            bad = Some(format!(
                                "triple {} uses ID {id} as {role:?} but the role file does not list it",
                                chunk.base_index() + i as u64
                            ));
                            return Ok(());
                        }
                    }
                }
                Ok(())
            })
            .map_err(|e| match e {
                StoreError::Io(e) => CliError::Io(e),
                other => invalid(other.to_string()),
            })?;
        if let Some(reason) = bad {
            return Err(invalid(reason));
        }
        Ok(Self {
            basename: basename.to_owned(),
            dict,
            triples,
        })
    }

    pub fn source(&self, chunk_triples: Option<u64>) -> TidFile {
        TidFile::new(Self::tid_path(&self.basename), chunk_or_default(chunk_triples))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConvertSummary {
    pub triples: u64,
    pub subjects: usize,
    pub predicates: usize,
    pub objects: usize,
    pub terms: usize,
    pub skipped: u64,
    pub malformed: usize,
    pub tid_bytes: u64,
    pub sid_bytes: u64,
    pub pid_bytes: u64,
    pub oid_bytes: u64,
}

const PARTIAL: &str = "partial";
const DATASET_EXTS: [&str; 4] = ["tid", "sid", "pid", "oid"];

fn remove_partials(staging: &Path) {
    for ext in DATASET_EXTS {
        let _ = fs::remove_file(role_path(staging, ext));
    }
}

/// Parses `input`, encodes it and writes the four dataset files next to
/// `out`. Files are staged under `<out>.partial.*` and renamed at the end,
/// so a failed conversion leaves nothing behind.
pub fn cmd_convert(input: &Path, out: &Path, strict: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<ConvertSummary, CliError> {
    let start = Instant::now();
    let staging = role_path(out, PARTIAL);
    let result = convert_into(input, &staging, strict, stderr);
    let (dict, triples, report) = match result {
        Ok(v) => v,
        Err(e) => {
            remove_partials(&staging);
            return Err(e);
        }
    };
    for ext in DATASET_EXTS {
        fs::rename(role_path(&staging, ext), role_path(out, ext))?;
    }
    let summary = ConvertSummary {
        triples,
        subjects: dict.role_len(Role::Subject),
        predicates: dict.role_len(Role::Predicate),
        objects: dict.role_len(Role::Object),
        terms: dict.len(),
        skipped: report.skipped,
        malformed: report.errors.len(),
        tid_bytes: file_len(&role_path(out, "tid")),
        sid_bytes: file_len(&role_path(out, "sid")),
        pid_bytes: file_len(&role_path(out, "pid")),
        oid_bytes: file_len(&role_path(out, "oid")),
    };
    write_convert_summary(&summary, stdout)?;
    writeln!(stderr, "elapsed_s\t{}", secs(start.elapsed()))?;
    Ok(summary)
}

fn write_convert_summary(s: &ConvertSummary, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "triples\t{}", s.triples)?;
    writeln!(out, "subjects\t{}", s.subjects)?;
    writeln!(out, "predicates\t{}", s.predicates)?;
    writeln!(out, "objects\t{}", s.objects)?;
    writeln!(out, "terms\t{}", s.terms)?;
    writeln!(out, "skipped_lines\t{}", s.skipped)?;
    writeln!(out, "malformed_lines\t{}", s.malformed)?;
    writeln!(out, "tid_bytes\t{}", s.tid_bytes)?;
    writeln!(out, "sid_bytes\t{}", s.sid_bytes)?;
    writeln!(out, "pid_bytes\t{}", s.pid_bytes)?;
    writeln!(out, "oid_bytes\t{}", s.oid_bytes)
}

fn convert_into(
    input: &Path,
    staging: &Path,
    strict: bool,
    stderr: &mut dyn Write,
) -> Result<(Dictionary, u64, crate::nt_parser::ParseReport), CliError> {
    let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
    let mut reader = NTriplesReader::new(BufReader::new(File::open(input)?), mode);
    let mut dict = Dictionary::new();
    let mut writer = TidWriter::create(&role_path(staging, "tid"))?;
    for st in reader.by_ref() {
        let st = st.map_err(|e| match e {
            StreamError::Io(e) => CliError::Io(e),
            StreamError::Parse(source) => CliError::NTriples {
                path: input.to_owned(),
                source,
            },
        })?;
        let t = Triple {
            subject: dict.encode_term(&st.subject, Role::Subject)?,
            predicate: dict.encode_term(&st.predicate, Role::Predicate)?,
            object: dict.encode_term(&st.object, Role::Object)?,
        };
        writer.push(t)?;
    }
    let triples = writer.finish()?;
    dict.write_id_files(staging)?;
    let report = reader.into_report();
    for e in &report.errors {
        writeln!(stderr, "warning: {}: {e}", input.display())?;
    }
    Ok((dict, triples, report))
}

fn load_query(path: &Path) -> Result<crate::sparql::Query, CliError> {
    let text = fs::read_to_string(path)?;
    parse_query(&text).map_err(|source| CliError::Query {
        path: path.to_owned(),
        source,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
    pub chunk_triples: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            chunk_triples: None,
        }
    }
}

/// Runs one query file against a dataset, printing TSV to `stdout`.
pub fn cmd_query(basename: &Path, query_path: &Path, opts: &RunOptions, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<usize, CliError> {
    let start = Instant::now();
    let query = load_query(query_path)?;
    let load_start = Instant::now();
    let dataset = Dataset::open(basename)?;
    let load = load_start.elapsed();
    let eval = EvalOptions {
        workers: opts.workers,
        max_rows: DEFAULT_MAX_ROWS,
    };
    let (table, timings) = execute(&query, &dataset.source(opts.chunk_triples), &dataset.dict, &eval)?;
    let mut out = BufWriter::new(stdout);
    decode_table(&table, &dataset.dict, &mut out)?;
    out.flush()?;
    writeln!(
        stderr,
        "load_s\t{}\nsearch_s\t{}\njoin_s\t{}\ntotal_s\t{}\nrows\t{}",
        secs(load),
        secs(timings.search),
        secs(timings.join),
        secs(start.elapsed()),
        table.len()
    )?;
    Ok(table.len())
}

/// Applies one entailment rule; conclusions as N-Triples on `stdout`,
/// counts as TSV on `stderr`.
pub fn cmd_entail(basename: &Path, rule: EntailmentRule, opts: &RunOptions, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<RuleCounts, CliError> {
    let start = Instant::now();
    let mut dataset = Dataset::open(basename)?;
    let source = dataset.source(opts.chunk_triples);
    let eopts = EntailOptions {
        workers: opts.workers,
        ..Default::default()
    };
    let run = run_rule(rule, &source, &mut dataset.dict, &eopts)?;
    let mut out = BufWriter::new(stdout);
    for t in &run.conclusions {
        let d = &dataset.dict;
        writeln!(out, "{} {} {} .", d.decode_id(t.subject)?, d.decode_id(t.predicate)?, d.decode_id(t.object)?)?;
    }
    out.flush()?;
    let counts = report_counts(&run);
    writeln!(stderr, "rule\t{}\ttime_s", RuleCounts::HEADER)?;
    writeln!(stderr, "{rule}\t{counts}\t{}", secs(start.elapsed()))?;
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    pub triples: u64,
    pub subjects: usize,
    pub predicates: usize,
    pub objects: usize,
    pub tid_bytes: u64,
    pub sid_bytes: u64,
    pub pid_bytes: u64,
    pub oid_bytes: u64,
    pub device_memory_bytes: u64,
}

pub fn cmd_stats(basename: &Path, stdout: &mut dyn Write) -> Result<DatasetStats, CliError> {
    let dataset = Dataset::open(basename)?;
    let d = &dataset.dict;
    let s = DatasetStats {
        triples: dataset.triples,
        subjects: d.role_len(Role::Subject),
        predicates: d.role_len(Role::Predicate),
        objects: d.role_len(Role::Object),
        tid_bytes: file_len(&role_path(basename, "tid")),
        sid_bytes: file_len(&role_path(basename, "sid")),
        pid_bytes: file_len(&role_path(basename, "pid")),
        oid_bytes: file_len(&role_path(basename, "oid")),
        device_memory_bytes: device_memory_bytes(3 * dataset.triples),
    };
    writeln!(stdout, "triples\t{}", s.triples)?;
    writeln!(stdout, "subjects\t{}", s.subjects)?;
    writeln!(stdout, "predicates\t{}", s.predicates)?;
    writeln!(stdout, "objects\t{}", s.objects)?;
    writeln!(stdout, "tid_bytes\t{}", s.tid_bytes)?;
    writeln!(stdout, "sid_bytes\t{}", s.sid_bytes)?;
    writeln!(stdout, "pid_bytes\t{}", s.pid_bytes)?;
    writeln!(stdout, "oid_bytes\t{}", s.oid_bytes)?;
    writeln!(stdout, "device_memory_bytes\t{}", s.device_memory_bytes)?;
    Ok(s)
}

pub fn cmd_gen(params: &GenParams, stdout: &mut dyn Write) -> Result<u64, CliError> {
    let mut out = BufWriter::new(stdout);
    let n = generate(params, &mut out)?;
    out.flush()?;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub query: String,
    pub run: String,
    pub parse_s: f64,
    pub load_s: f64,
    pub search_s: f64,
    pub join_s: f64,
    pub total_s: f64,
    pub rows: usize,
}

pub const BENCH_HEADER: &str = "query\trun\tparse_s\tload_s\tsearch_s\tjoin_s\ttotal_s\trows";

impl BenchRow {
    fn write(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
            self.query, self.run, self.parse_s, self.load_s, self.search_s, self.join_s, self.total_s, self.rows
        )
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Times every `*.rq` file in `queries_dir` (name order), `repeat` times
/// each. `total_s` is query time excluding load. With `repeat > 1` a
/// `median` row follows each query's runs.
pub fn cmd_bench(basename: &Path, queries_dir: &Path, opts: &RunOptions, repeat: usize, stdout: &mut dyn Write) -> Result<Vec<BenchRow>, CliError> {
    if repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".into()));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(queries_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "rq"));
    files.sort();

    let mut out = BufWriter::new(stdout);
    writeln!(out, "{BENCH_HEADER}")?;
    let mut rows = Vec::new();
    let eval = EvalOptions {
        workers: opts.workers,
        max_rows: DEFAULT_MAX_ROWS,
    };
    for file in &files {
        let name = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let mut runs = Vec::with_capacity(repeat);
        for k in 0..repeat {
            let t = Instant::now();
            let query = load_query(file)?;
            let parse = t.elapsed();
            let t = Instant::now();
            let dataset = Dataset::open(basename)?;
            let load = t.elapsed();
            let t = Instant::now();
            let (table, timings) = execute(&query, &dataset.source(opts.chunk_triples), &dataset.dict, &eval)?;
            let total = t.elapsed();
            let row = BenchRow {
                query: name.clone(),
                run: (k + 1).to_string(),
                parse_s: parse.as_secs_f64(),
                load_s: load.as_secs_f64(),
                search_s: timings.search.as_secs_f64(),
                join_s: timings.join.as_secs_f64(),
                total_s: total.as_secs_f64(),
                rows: table.len(),
            };
            row.write(&mut out)?;
            runs.push(row);
        }
        if repeat > 1 {
            let col = |f: fn(&BenchRow) -> f64| median(runs.iter().map(f).collect());
            let row = BenchRow {
                query: name.clone(),
                run: "median".into(),
                parse_s: col(|r| r.parse_s),
                load_s: col(|r| r.load_s),
                search_s: col(|r| r.search_s),
                join_s: col(|r| r.join_s),
                total_s: col(|r| r.total_s),
                rows: runs[0].rows,
            };
            row.write(&mut out)?;
            runs.push(row);
        }
        rows.extend(runs);
    }
    out.flush()?;
    Ok(rows)
}
