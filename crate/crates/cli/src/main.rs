//! `toricfrob` command-line front end.
//!
//! Every subcommand prints a JSON report (or a TSV table with `--tsv`).
//! Exit status is 0 when all checks pass, 1 when a verification fails and
//! 2 on usage or input errors.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use toricfrob::atlas;
use toricfrob::cohomology::{cohomology, hom_matrix};
use toricfrob::collections::{
    check_collection, find_strong_subsets, fullness_certificate, pushforward_collection_check, ClosureBounds,
    Fullness,
};
use toricfrob::fan::{isomorphic, same_cones_by_vectors};
use toricfrob::frobenius::{stable_summands, summands, SummandSet};
use toricfrob::intersection::{double_weight_table, is_fano};
use toricfrob::{DivisorClass, Fan, TorusDivisor};

use report::{Outcome, Report};

/// Subset searches above this many candidates are refused.
const MAX_SUBSETS: u128 = 2_000_000;

#[derive(Parser)]
#[command(name = "toricfrob", version, about = "Frobenius summands and exceptional collections on toric varieties")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print a tab-separated table instead of JSON where available.
    #[arg(long, global = true)]
    tsv: bool,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in varieties.
    Atlas {
        #[command(subcommand)]
        action: AtlasAction,
    },
    /// Check that a fan is smooth and complete.
    Validate { input: String },
    /// Walls with their relation coefficients.
    Walls { input: String },
    /// Line-bundle summands of the Frobenius push-forward of O(w).
    Frobenius {
        input: String,
        /// Comma-separated coefficients of w (default 0).
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        /// Frobenius degree, or `auto` to stabilize.
        #[arg(long, default_value = "auto")]
        m: String,
    },
    /// Cohomology dimensions of O(D).
    Cohomology {
        input: String,
        /// Comma-separated coefficients of D.
        #[arg(long, allow_hyphen_values = true)]
        d: String,
    },
    /// Exceptional collection checks on the stable summands.
    Collection {
        input: String,
        /// Search subsets of size #maximal cones even when the full set passes.
        #[arg(long)]
        subset_search: bool,
    },
    /// Koszul-closure generation certificate.
    Fullness { input: String },
    /// Compare hom matrices of the summands on both sides of the flop.
    FlopCheck,
    /// Push summands of X down to Y along each blowdown X -> Y.
    PushforwardCheck { source: String, target: String },
    /// Blowdown closure of the maximal Fano threefolds.
    EnumerateFano3,
}

#[derive(Subcommand)]
enum AtlasAction {
    /// Ids with dimension, Picard rank, cone count and Fano flag.
    List,
    /// Write the fan JSON of an entry.
    Export {
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    /// Normalized echo of the command, independent of global flags.
    fn echo(&self) -> Vec<String> {
        let s = |x: &str| x.to_string();
        match self {
            Command::Atlas { action: AtlasAction::List } => vec![s("atlas"), s("list")],
            Command::Atlas { action: AtlasAction::Export { id, .. } } => vec![s("atlas"), s("export"), id.clone()],
            Command::Validate { input } => vec![s("validate"), input.clone()],
            Command::Walls { input } => vec![s("walls"), input.clone()],
            Command::Frobenius { input, w, m } => {
                let mut v = vec![s("frobenius"), input.clone(), s("--m"), m.clone()];
                if let Some(w) = w {
                    v.extend([s("--w"), w.clone()]);
                }
                v
            }
            Command::Cohomology { input, d } => vec![s("cohomology"), input.clone(), s("--d"), d.clone()],
            Command::Collection { input, subset_search } => {
                let mut v = vec![s("collection"), input.clone()];
                if *subset_search {
                    v.push(s("--subset-search"));
                }
                v
            }
            Command::Fullness { input } => vec![s("fullness"), input.clone()],
            Command::FlopCheck => vec![s("flop-check")],
            Command::PushforwardCheck { source, target } => {
                vec![s("pushforward-check"), source.clone(), target.clone()]
            }
            Command::EnumerateFano3 => vec![s("enumerate-fano3")],
        }
    }
}

/// Loads a fan from a JSON file, or from the atlas when no such file exists.
fn load(input: &str) -> anyhow::Result<Fan> {
    let path = Path::new(input);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {input}"))?;
        let fan = Fan::from_json(&text).with_context(|| format!("parsing {input}"))?;
        return Ok(fan);
    }
    Ok(atlas::get(input)?.fan)
}

fn load_valid(input: &str) -> anyhow::Result<Fan> {
    let fan = load(input)?;
    fan.require_smooth_complete()?;
    Ok(fan)
}

fn parse_coeffs(s: &str, len: usize) -> anyhow::Result<TorusDivisor> {
    let coeffs = s
        .split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|e| anyhow!("bad coefficient `{x}`: {e}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if coeffs.len() != len {
        bail!("expected {len} coefficients, got {}", coeffs.len());
    }
    Ok(TorusDivisor::new(coeffs))
}

#[derive(Serialize)]
struct ClassEntry {
    class: String,
    coeffs: Vec<i64>,
    multiplicity: u64,
}

fn class_names(classes: &[DivisorClass]) -> Vec<String> {
    classes.iter().map(|c| c.to_string()).collect()
}

fn summand_result(fan: &Fan, s: &SummandSet, stabilized: bool) -> serde_json::Value {
    let classes: Vec<ClassEntry> = s
        .classes
        .iter()
        .map(|(c, &k)| ClassEntry { class: c.to_string(), coeffs: c.coeffs().to_vec(), multiplicity: k })
        .collect();
    json!({
        "variety": fan.name(),
        "w": s.w,
        "m": s.m_used,
        "stabilized": stabilized,
        "count": s.len(),
        "total_multiplicity": s.total_multiplicity(),
        "classes": classes,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k.min(n)).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Strong ordered subsets of size `#maximal cones`, as class lists.
fn strong_subsets(fan: &Fan, list: &[DivisorClass]) -> anyhow::Result<Vec<Vec<DivisorClass>>> {
    let k = fan.max_cones().len();
    if k > list.len() {
        return Ok(Vec::new());
    }
    if binomial(list.len(), k) > MAX_SUBSETS {
        bail!("subset search over {} classes of size {k} is too large", list.len());
    }
    Ok(find_strong_subsets(fan, list, k)?
        .into_iter()
        .map(|s| s.into_iter().map(|i| list[i].clone()).collect())
        .collect())
}

fn stable_list(fan: &Fan) -> anyhow::Result<Vec<DivisorClass>> {
    Ok(stable_summands(fan, &TorusDivisor::zero(fan.num_rays()))?.class_list())
}

fn run(cmd: &Command) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Atlas { action: AtlasAction::List } => {
            let list = atlas::list()?;
            let mut table = String::from("id\tdim\trho\tmax_cones\tfano\n");
            for e in &list {
                table.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", e.id, e.dim, e.rho, e.max_cones, e.fano));
            }
            Ok(Outcome::new(&list, true)?.with_tsv(table))
        }
        Command::Atlas { action: AtlasAction::Export { id, .. } } => {
            let fan = atlas::get(id)?.fan;
            let file = fan.to_file();
            Ok(Outcome::new(&file, true)?.with_inputs(vec![file]))
        }
        Command::Validate { input } => {
            let fan = load(input)?;
            let report = fan.validate().clone();
            Ok(Outcome::new(json!({ "variety": fan.name(), "report": report }), report.is_ok())?
                .with_inputs(vec![fan.to_file()]))
        }
        Command::Walls { input } => {
            let fan = load_valid(input)?;
            let table = double_weight_table(&fan)?;
            let result = json!({ "variety": fan.name(), "fano": is_fano(&fan)?, "walls": table.rows });
            Ok(Outcome::new(result, true)?.with_tsv(table.to_tsv()).with_inputs(vec![fan.to_file()]))
        }
        Command::Frobenius { input, w, m } => {
            let fan = load_valid(input)?;
            let w = match w {
                Some(s) => parse_coeffs(s, fan.num_rays())?,
                None => TorusDivisor::zero(fan.num_rays()),
            };
            let (set, stabilized) = if m == "auto" {
                (stable_summands(&fan, &w)?, true)
            } else {
                let m: i64 = m.parse().map_err(|_| anyhow!("--m must be a positive integer or `auto`"))?;
                if m < 1 {
                    bail!("--m must be positive");
                }
                (summands(&fan, &w, m)?, false)
            };
            let mut table = String::from("class\tcoeffs\tmultiplicity\n");
            for (c, k) in &set.classes {
                let coeffs: Vec<String> = c.coeffs().iter().map(|x| x.to_string()).collect();
                table.push_str(&format!("{c}\t{}\t{k}\n", coeffs.join(",")));
            }
            Ok(Outcome::new(summand_result(&fan, &set, stabilized), true)?
                .with_tsv(table)
                .with_inputs(vec![fan.to_file()]))
        }
        Command::Cohomology { input, d } => {
            let fan = load_valid(input)?;
            let d = parse_coeffs(d, fan.num_rays())?;
            let h = cohomology(&fan, &d)?;
            let table = format!(
                "p\th^p\n{}",
                h.h.iter().enumerate().map(|(p, x)| format!("{p}\t{x}\n")).collect::<String>()
            );
            let result = json!({
                "variety": fan.name(),
                "divisor": d.to_string(),
                "h": h.h,
                "euler_characteristic": h.euler_characteristic(),
                "support_size": h.support_size,
            });
            Ok(Outcome::new(result, true)?.with_tsv(table).with_inputs(vec![fan.to_file()]))
        }
        Command::Collection { input, subset_search } => {
            let fan = load_valid(input)?;
            let list = stable_list(&fan)?;
            let report = check_collection(&fan, &list)?;
            let subsets = if *subset_search || !report.passes() {
                Some(strong_subsets(&fan, &list)?)
            } else {
                None
            };
            let passed = report.passes() || subsets.as_ref().is_some_and(|s| !s.is_empty());
            let mut table = String::from("index\tclass\n");
            for (i, c) in list.iter().enumerate() {
                table.push_str(&format!("{i}\t{c}\n"));
            }
            let result = json!({
                "variety": fan.name(),
                "classes": class_names(&list),
                "report": report,
                "strong_subsets": subsets.map(|s| s.iter().map(|x| class_names(x)).collect::<Vec<_>>()),
            });
            Ok(Outcome::new(result, passed)?.with_tsv(table).with_inputs(vec![fan.to_file()]))
        }
        Command::Fullness { input } => {
            let fan = load_valid(input)?;
            let list = stable_list(&fan)?;
            let (collection, source) = if check_collection(&fan, &list)?.passes() {
                (list, "summands")
            } else {
                let mut subsets = strong_subsets(&fan, &list)?;
                if subsets.is_empty() {
                    let result = json!({ "variety": fan.name(), "collection": null, "certificate": null });
                    return Ok(Outcome::new(result, false)?.with_inputs(vec![fan.to_file()]));
                }
                (subsets.swap_remove(0), "strong subset of summands")
            };
            let cert = fullness_certificate(&fan, &collection, ClosureBounds::default())?;
            let mut table = String::from("step\tcollection\ttwist\tadded\tposition\n");
            if let Fullness::Certified { trace, .. } = &cert {
                for (i, s) in trace.iter().enumerate() {
                    let coll: Vec<String> = s.collection.rays().iter().map(|r| (r + 1).to_string()).collect();
                    table.push_str(&format!("{i}\t{}\t{}\t{}\t{}\n", coll.join(","), s.twist, s.added, s.position));
                }
            }
            let result = json!({
                "variety": fan.name(),
                "collection": class_names(&collection),
                "source": source,
                "certificate": cert,
            });
            Ok(Outcome::new(result, cert.is_certified())?.with_tsv(table).with_inputs(vec![fan.to_file()]))
        }
        Command::FlopCheck => {
            let fp = atlas::flop_pair()?;
            let (p, m) = (&fp.plus.fan, &fp.minus.fan);
            let list = stable_list(p)?;
            let minus_list = stable_list(m)?;
            let transported: Vec<DivisorClass> = list
                .iter()
                .map(|c| toricfrob::divisor::class_of(m, &c.to_divisor()))
                .collect::<Result<_, _>>()?;
            let hp = hom_matrix(p, &list)?;
            let hm = hom_matrix(m, &transported)?;
            let equal = hp == hm;
            let result = json!({
                "plus": p.to_file(),
                "minus": m.to_file(),
                "same_cones": same_cones_by_vectors(p, m),
                "summands_plus": list.len(),
                "summands_minus": minus_list.len(),
                "classes": class_names(&list),
                "hom_plus": hp,
                "hom_minus": hm,
                "equal": equal,
            });
            let table: String = hp.iter().map(|r| format!("{}\n", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("\t"))).collect();
            Ok(Outcome::new(result, equal && list.len() == minus_list.len())?
                .with_tsv(table)
                .with_inputs(vec![p.to_file(), m.to_file()]))
        }
        Command::PushforwardCheck { source, target } => {
            let x = load_valid(source)?;
            let y = load_valid(target)?;
            let mut reports = Vec::new();
            for bd in x.blowdowns()? {
                if isomorphic(&bd.target, &y)?.is_some() {
                    reports.push(pushforward_collection_check(&x, &bd)?);
                }
            }
            let passed = !reports.is_empty() && reports.iter().all(|r| r.equal);
            let mut table = String::from("exceptional\tcenter\tequal\n");
            for r in &reports {
                let center: Vec<String> = r.center.rays().iter().map(|i| (i + 1).to_string()).collect();
                table.push_str(&format!("{}\t{}\t{}\n", r.exceptional + 1, center.join(","), r.equal));
            }
            let result = json!({ "source": x.name(), "target": y.name(), "blowdowns": reports });
            Ok(Outcome::new(result, passed)?.with_tsv(table).with_inputs(vec![x.to_file(), y.to_file()]))
        }
        Command::EnumerateFano3 => {
            let en = atlas::enumerate_fano3()?;
            let entries: Vec<_> = en
                .entries
                .iter()
                .map(|e| json!({ "id": e.id, "rho": e.rho, "max_cones": e.max_cones, "fan": e.fan.to_file() }))
                .collect();
            let mut table = String::from("from\tto\texceptional\tcenter\tkind\n");
            for e in &en.edges {
                let center: Vec<String> = e.center.rays().iter().map(|i| (i + 1).to_string()).collect();
                table.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    e.from,
                    e.to,
                    e.exceptional + 1,
                    center.join(","),
                    e.center_kind
                ));
            }
            let passed = en.entries.len() == 18 && en.discrepancies.is_empty();
            let result = json!({
                "count": en.entries.len(),
                "entries": entries,
                "edges": en.edges,
                "discrepancies": en.discrepancies,
            });
            Ok(Outcome::new(result, passed)?.with_tsv(table))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let outcome = match run(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };

    if let Command::Atlas { action: AtlasAction::Export { out, .. } } = &cli.command {
        let text = serde_json::to_string_pretty(&outcome.result).expect("fan json");
        match out {
            Some(path) => {
                if let Err(e) = std::fs::write(path, text + "\n") {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            None => println!("{text}"),
        }
        return ExitCode::SUCCESS;
    }

    match (&outcome.tsv, cli.tsv) {
        (Some(table), true) => print!("{table}"),
        _ => {
            let timing = cli.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            let report = Report::build(cli.command.echo(), &outcome, timing);
            println!("{}", serde_json::to_string_pretty(&report).expect("report json"));
        }
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
