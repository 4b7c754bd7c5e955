use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dynmsf::graph::{Graph, Trace, WeightedEdge};
use dynmsf_hac::counterexamples::counterexample;
use dynmsf_hac::engine::{run_hac, HacGraph};
use dynmsf_hac::linkage::linkage_by_name;
use dynmsf_hac::policy::policy_by_name;
use dynmsf_hac::rational::{common_denominator, int, to_i64, Rational};
use dynmsf_hac::reductions::{reduction_by_name, reduction_names, GadgetInstance, Problem, Source};
use dynmsf_harness::bench::{bench, sweep, BenchRow, CSV_HEADER};
use dynmsf_harness::run::{run, CheckMode, RunOptions, RunReport};
use dynmsf_harness::workload::{generate, GenParams, OpMix};
use serde_json::json;

#[derive(Parser)]
#[command(name = "dynmsf", version, about = "Batch-dynamic MSF and HAC toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// none, oracle or oracle+audit
    #[arg(long, global = true, default_value = "oracle")]
    check: CheckMode,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded update/query workload.
    Gen {
        #[arg(long)]
        n: usize,
        /// Total edge updates (defaults to 10n).
        #[arg(long)]
        ops: Option<usize>,
        #[arg(long)]
        max_edges: Option<usize>,
        #[arg(long, default_value_t = 1)]
        batch_min: usize,
        #[arg(long, default_value_t = 64)]
        batch_max: usize,
        /// insert:delete[:query] batch weights
        #[arg(long, default_value = "1:1:0")]
        mix: String,
        #[arg(long, default_value_t = 1000)]
        max_weight: i64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Replay a workload, checking against the oracle as requested.
    Run {
        trace: PathBuf,
        #[arg(long, default_value_t = 1)]
        oracle_every: usize,
        #[arg(long, default_value_t = 1)]
        audit_every: usize,
        /// Also print every query answer.
        #[arg(long)]
        answers: bool,
    },
    /// Replay with structural audits after every batch.
    Audit { trace: PathBuf },
    /// Time workloads or an insert-then-delete batch-size sweep.
    Bench {
        traces: Vec<PathBuf>,
        /// Comma-separated worker counts (defaults to --workers).
        #[arg(long, value_delimiter = ',')]
        worker_list: Vec<usize>,
        /// Run a sweep over these batch sizes instead of trace files.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        total_edges: usize,
    },
    /// Build a reduction gadget and write its graph plus a JSON sidecar.
    Reduce {
        /// Gadget name; `list` prints the registry.
        reduction: String,
        /// Graph file (core format, weights ignored) or set file.
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        lambda: u64,
        /// Comma-separated indices of the elements in S.
        #[arg(long, value_delimiter = ',')]
        members: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        s: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        /// Writes PREFIX.graph and PREFIX.json; stdout otherwise.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Dendrograms of a counterexample family before and after its extra edge.
    Counterexample {
        /// single, wpgma_complete or upgma
        kind: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Defaults to the first linkage of the family.
        #[arg(long)]
        linkage: Option<String>,
    },
    /// Reference HAC on a graph file.
    HacRef {
        graph: PathBuf,
        #[arg(long, default_value = "single")]
        linkage: String,
        /// Cluster threshold; merging continues while the best similarity is at least θ.
        #[arg(long, default_value = "0")]
        theta: Rational,
        /// exact, adversarial:<λ> or reluctant:<λ>
        #[arg(long, default_value = "exact")]
        policy: String,
    },
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_trace(path: &Path) -> Result<Trace> {
    Ok(Trace::parse(&read_input(path)?, None)?)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_report(report: &RunReport, g: &Global, answers: bool) {
    match g.format {
        Format::Json => {
            let v = json!({
                "passed": report.passed(),
                "batches": report.checksums.len(),
                "checksum": report.final_checksum(),
                "first_mismatch": report.first_mismatch(),
                "mismatches": report.mismatches.iter().map(|m| json!({"batch": m.batch, "what": m.what})).collect::<Vec<_>>(),
                "violations": report.violations.iter().map(|(b, v)| json!({"batch": b, "what": v})).collect::<Vec<_>>(),
                "audited": report.audited,
                "seconds": report.timings.iter().map(|t| t.as_secs_f64()).sum::<f64>(),
                "answers": if answers { report.answers.clone() } else { Vec::new() },
            });
            println!("{v:#}");
        }
        Format::Csv => {
            println!("batch,checksum,seconds");
            for (i, (c, t)) in report.checksums.iter().zip(&report.timings).enumerate() {
                println!("{i},{c},{:.6}", t.as_secs_f64());
            }
        }
        Format::Text => {
            if answers {
                for a in &report.answers {
                    println!("{a}");
                }
            }
            for m in &report.mismatches {
                println!("mismatch at batch {}: {}", m.batch, m.what);
            }
            for (b, v) in &report.violations {
                println!("violation at batch {b}: {v}");
            }
            println!(
                "{} batches, check {}, {} audits, final checksum {}: {}",
                report.checksums.len(),
                g.check,
                report.audited,
                report.final_checksum(),
                if report.passed() { "ok" } else { "FAILED" }
            );
        }
    }
}

fn print_rows(rows: &[BenchRow], format: Format) {
    if format == Format::Json {
        let v: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({"workload": r.workload, "n": r.n, "batch_size": r.batch_size, "workers": r.workers,
                       "batches": r.batches, "edges": r.edges, "seconds": r.seconds,
                       "edges_per_sec": r.edges_per_sec(), "checksum": r.checksum})
            })
            .collect();
        println!("{:#}", serde_json::Value::Array(v));
    } else {
        println!("{CSV_HEADER}");
        for r in rows {
            println!("{}", r.csv());
        }
    }
}

/// Set files: a `universe k` header, then one line per set listing its
/// elements (`-` for the empty set). `#` starts a comment.
fn parse_sets(text: &str) -> Result<Source> {
    let mut lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
    let header = lines.next().context("empty set file")?;
    let nums: Vec<usize> = header.split_whitespace().map(str::parse).collect::<Result<_, _>>()?;
    let [universe, k] = nums[..] else { bail!("set file header must be `universe k`") };
    let mut sets = Vec::with_capacity(k);
    for line in lines {
        let set: Vec<usize> = if line == "-" {
            Vec::new()
        } else {
            line.split_whitespace().map(str::parse).collect::<Result<_, _>>()?
        };
        sets.push(set);
    }
    if sets.len() != k {
        bail!("set file declares {k} sets but lists {}", sets.len());
    }
    Ok(Source::Sets { universe, sets })
}

fn load_source(path: &Path, problem: Problem, s: usize, t: usize) -> Result<Source> {
    let text = read_input(path)?;
    if problem == Problem::SubUnion {
        return parse_sets(&text);
    }
    let g = Graph::parse(&text)?;
    Ok(Source::Graph {
        n: g.n,
        edges: g.edges.iter().map(|e| (e.u, e.v)).collect(),
        s,
        t,
    })
}

fn gadget_files(g: &GadgetInstance) -> Result<(String, serde_json::Value)> {
    let hac = g.graph();
    let scale = common_denominator(hac.edges().iter().map(|e| &e.2)).context("weights too fine for i64")?;
    let to_int = |w: &Rational| to_i64(&(w * int(scale))).context("weight overflows i64");
    let edges = hac
        .edges()
        .iter()
        .map(|(u, v, w)| Ok(WeightedEdge::new(*u, *v, to_int(w)?)))
        .collect::<Result<Vec<_>>>()?;
    let graph = Graph { n: hac.n(), edges }.render();
    let members: Vec<usize> = (0..g.elements()).filter(|&i| g.members()[i]).collect();
    let sidecar = json!({
        "reduction": g.reduction,
        "linkage": g.linkage,
        "problem": g.problem,
        "lambda": g.lambda,
        "theta": g.theta.to_string(),
        "weight_scale": scale,
        "n": g.n,
        "special": g.special.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
        "constants": g.constants.iter().map(|(k, v)| json!([k, v.to_string()])).collect::<Vec<_>>(),
        "query": g.query,
        "partial": g.partial,
        "members": members,
        "updates": g.update_table().into_iter().map(|(e, add, remove)| json!({"element": e, "add": add, "remove": remove})).collect::<Vec<_>>(),
    });
    Ok((graph, sidecar))
}

fn real_main(cli: Cli) -> Result<i32> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Gen {
            n,
            ops,
            max_edges,
            batch_min,
            batch_max,
            mix,
            max_weight,
            out,
        } => {
            let mut p = GenParams::new(*n, g.seed);
            p.ops = ops.unwrap_or(p.ops);
            p.max_edges = max_edges.unwrap_or(p.max_edges);
            p.batch_min = *batch_min;
            p.batch_max = *batch_max;
            p.mix = mix.parse::<OpMix>()?;
            p.max_weight = *max_weight;
            write_output(out.as_deref(), &generate(&p)?.render())?;
            Ok(0)
        }
        Cmd::Run {
            trace,
            oracle_every,
            audit_every,
            answers,
        } => {
            let opts = RunOptions {
                check: g.check,
                workers: g.workers,
                oracle_every: *oracle_every,
                audit_every: *audit_every,
                seed: g.seed,
            };
            let report = run(&read_trace(trace)?, &opts)?;
            print_report(&report, g, *answers);
            Ok(report.exit_code())
        }
        Cmd::Audit { trace } => {
            let opts = RunOptions {
                check: CheckMode::Audit,
                workers: g.workers,
                seed: g.seed,
                ..RunOptions::default()
            };
            let report = run(&read_trace(trace)?, &opts)?;
            print_report(&report, &Global { check: CheckMode::Audit, ..*g }, false);
            Ok(report.exit_code())
        }
        Cmd::Bench {
            traces,
            worker_list,
            sweep: sizes,
            n,
            total_edges,
        } => {
            let workers = if worker_list.is_empty() { vec![g.workers] } else { worker_list.clone() };
            let mut rows = Vec::new();
            if !sizes.is_empty() {
                rows.extend(sweep(*n, *total_edges, sizes, &workers, g.seed)?);
            }
            for path in traces {
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                rows.extend(bench(&name, &read_trace(path)?, &workers)?);
            }
            if rows.is_empty() {
                bail!("nothing to run: pass trace files or --sweep sizes");
            }
            print_rows(&rows, g.format);
            Ok(0)
        }
        Cmd::Reduce {
            reduction,
            source,
            lambda,
            members,
            s,
            t,
            out,
        } => {
            if reduction == "list" {
                for name in reduction_names() {
                    println!("{name}");
                }
                return Ok(0);
            }
            let r = reduction_by_name(reduction)?;
            let path = source.as_deref().context("--source is required")?;
            let src = load_source(path, r.problem(), *s, *t)?;
            let mut flags = vec![false; src.elements(r.problem())];
            for &m in members {
                *flags.get_mut(m).with_context(|| format!("member {m} out of range"))? = true;
            }
            let gadget = r.build(&src, &flags, *lambda)?;
            let (graph, sidecar) = gadget_files(&gadget)?;
            match out {
                Some(prefix) => {
                    fs::write(prefix.with_extension("graph"), graph)?;
                    fs::write(prefix.with_extension("json"), format!("{sidecar:#}\n"))?;
                }
                None => {
                    print!("{graph}");
                    println!("{sidecar:#}");
                }
            }
            Ok(0)
        }
        Cmd::Counterexample { kind, k, linkage } => {
            let kind = kind.parse()?;
            let c = counterexample(kind, *k)?;
            let name = linkage.as_deref().unwrap_or(kind.linkages()[0]);
            let l = linkage_by_name(name).with_context(|| format!("unknown linkage `{name}`"))?;
            let mut policy = policy_by_name("exact", g.seed)?;
            let before = run_hac(&c.graph, l.as_ref(), &int(0), policy.as_mut()).dendrogram;
            let after = run_hac(&c.with_extra(), l.as_ref(), &int(0), policy.as_mut()).dendrogram;
            let diff = dynmsf_hac::dendrogram_diff(&before, &after)?;
            let n = c.graph.n();
            match g.format {
                Format::Json => println!(
                    "{:#}",
                    json!({"kind": kind.to_string(), "k": k, "linkage": name, "n": n,
                           "extra": [c.extra.0, c.extra.1, c.extra.2.to_string()],
                           "before": before.render(), "after": after.render(), "diff": diff,
                           "ratio": diff as f64 / n as f64})
                ),
                _ => {
                    print!("before:\n{}after (+{{{},{}}} {}):\n{}", before.render(), c.extra.0, c.extra.1, c.extra.2, after.render());
                    println!("diff {diff} over n = {n} ({:.3})", diff as f64 / n as f64);
                }
            }
            Ok(0)
        }
        Cmd::HacRef {
            graph,
            linkage,
            theta,
            policy,
        } => {
            let hg = HacGraph::from_graph(&Graph::parse(&read_input(graph)?)?)?;
            let l = linkage_by_name(linkage).with_context(|| format!("unknown linkage `{linkage}`"))?;
            let mut p = policy_by_name(policy, g.seed)?;
            let r = run_hac(&hg, l.as_ref(), theta, p.as_mut());
            match g.format {
                Format::Json => println!(
                    "{:#}",
                    json!({"linkage": linkage, "theta": theta.to_string(), "dendrogram": r.dendrogram.render(),
                           "merges": r.dendrogram.merges().iter().map(|(a, b, w)| json!([a, b, w.to_string()])).collect::<Vec<_>>(),
                           "clusters": r.clusters})
                ),
                _ => {
                    print!("{}", r.dendrogram.render());
                    println!("{} clusters at θ = {theta}", r.clusters.len());
                    for c in &r.clusters {
                        println!("{}", c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match real_main(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
