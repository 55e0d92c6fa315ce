//! Command-line front end. Every subcommand prints a self-describing document (tool version,
//! command, `m` and parameters) in JSON, CSV or DOT.
//!
//! Exit codes: 0 success, 1 a validation check failed, 2 malformed input.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::btree::{run_permutation, History, KeyedBTree};
use crate::combinatorics::factorial;
use crate::enumeration::{brute_force_historic_count, conjecture_report, estimate_rho, history_counts, Method};
use crate::error::Error;
use crate::historic::HistoricTree;
use crate::permutations::{build_dag, count_perms, enumerate_perms, lift, psi, psi_hat_values, underline_pi};
use crate::statistics::{kappa, leaf_moments, mean_ratio_trend, monte_carlo_leaves_partitioned, DEFAULT_PARTITIONS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Debug, Parser)]
#[command(name = "btree-histories", version, about = "B-tree insertion histories, historic trees and leaf statistics")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Significant digits for floating-point output.
    #[arg(long, global = true, env = "BTREE_HISTORIES_PRECISION", default_value_t = 10)]
    pub precision: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Insert a permutation and print the final tree, history and split trace.
    Insert {
        #[arg(long)]
        m: usize,
        /// Comma-separated keys.
        #[arg(long, value_delimiter = ',', required_unless_present = "perm_file", conflicts_with = "perm_file")]
        perm: Vec<usize>,
        /// File holding the keys, separated by commas or whitespace.
        #[arg(long)]
        perm_file: Option<PathBuf>,
    },
    /// Convert between a history and its historic tree and check the round trip.
    Bijection {
        /// Order parameter, required with --history.
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated leaf choices l_2..l_n.
        #[arg(long, value_delimiter = ',', num_args = 0.., conflicts_with_all = ["history_file", "tree_file"])]
        history: Option<Vec<usize>>,
        /// History as JSON: {"m","n","leaf_choices"}.
        #[arg(long, conflicts_with = "tree_file")]
        history_file: Option<PathBuf>,
        /// Historic tree as JSON: {"m","labels","parent","slot"}.
        #[arg(long)]
        tree_file: Option<PathBuf>,
    },
    /// Count or list the insertion orders producing a historic tree or a B-tree.
    Perms {
        /// Order parameter, required with --perm.
        #[arg(long)]
        m: Option<usize>,
        /// Historic tree as JSON.
        #[arg(long, conflicts_with_all = ["btree_file", "perm"])]
        tree_file: Option<PathBuf>,
        /// Keyed B-tree as JSON: {"m","root":{"keys","children"}}.
        #[arg(long, conflicts_with = "perm")]
        btree_file: Option<PathBuf>,
        /// Use the tree produced by this insertion order.
        #[arg(long, value_delimiter = ',')]
        perm: Option<Vec<usize>>,
        /// With --perm, use its historic tree instead of its B-tree.
        #[arg(long, requires = "perm")]
        historic: bool,
        /// Print the number of orders (default).
        #[arg(long)]
        count: bool,
        /// Print the orders themselves.
        #[arg(long)]
        list: bool,
        /// Print at most this many orders.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Exact history counts h_0..h_N.
    Enumerate {
        #[arg(long)]
        m: usize,
        #[arg(long = "N", alias = "n")]
        n: usize,
    },
    /// Estimate the growth constant from N coefficients.
    Rho {
        #[arg(long)]
        m: usize,
        #[arg(long = "N", alias = "n", default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value = "aitken", value_parser = |s: &str| s.parse::<Method>())]
        method: Method,
        /// Include the normalised ratios r_n (the only rows in CSV output).
        #[arg(long)]
        ratios: bool,
    },
    /// Leaf-count statistics: exact moments, Monte Carlo, trend or κ table.
    Stats {
        #[arg(long)]
        m: usize,
        /// Number of keys.
        #[arg(long)]
        keys: Option<usize>,
        /// Exact moments (default mode).
        #[arg(long, conflicts_with = "mc")]
        exact: bool,
        /// Include the exact distribution.
        #[arg(long)]
        distribution: bool,
        /// Monte Carlo estimate; needs --seed.
        #[arg(long, requires = "seed")]
        mc: bool,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_PARTITIONS)]
        partitions: usize,
        /// mean/(n+m+1) for reduced sizes up to N.
        #[arg(long = "trend", value_name = "N", conflicts_with_all = ["mc", "keys"])]
        trend: Option<usize>,
        /// κ constants for orders 1..=M (ignores --m).
        #[arg(long = "kappa", value_name = "M", conflicts_with_all = ["mc", "keys", "trend"])]
        kappa: Option<usize>,
    },
    /// Run a quick battery of internal consistency checks.
    Selftest,
}

/// What a command produced: its document, and whether its checks passed.
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

pub enum Failure {
    BadInput(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::BadInput(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::BadInput(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn bad<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::BadInput(msg.into()))
}

/// Document header shared by all formats.
struct Header {
    command: &'static str,
    m: Option<usize>,
    parameters: Map<String, Value>,
}

impl Header {
    fn new(command: &'static str, m: Option<usize>) -> Self {
        Header { command, m, parameters: Map::new() }
    }

    fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.into(), serde_json::to_value(value).expect("parameter serializes"));
        self
    }

    fn line(&self) -> String {
        let mut s = format!("btree-histories {VERSION} command={}", self.command);
        if let Some(m) = self.m {
            let _ = write!(s, " m={m}");
        }
        for (k, v) in &self.parameters {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    fn json(&self, result: Value, precision: usize) -> String {
        let mut doc = json!({
            "tool": "btree-histories",
            "version": VERSION,
            "command": self.command,
            "m": self.m,
            "parameters": self.parameters,
            "result": result,
        });
        round_floats(&mut doc, precision);
        serde_json::to_string_pretty(&doc).expect("document serializes") + "\n"
    }

    fn csv(&self, header: &str, rows: impl IntoIterator<Item = String>) -> String {
        let mut out = format!("# {}\n{header}\n", self.line());
        for r in rows {
            out.push_str(&r);
            out.push('\n');
        }
        out
    }

    fn dot(&self, body: &str) -> String {
        format!("// {}\n{body}", self.line())
    }
}

fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn round_floats(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64"), digits);
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_floats(x, digits)),
        Value::Object(o) => o.values_mut().for_each(|x| round_floats(x, digits)),
        _ => {}
    }
}

fn unsupported<T>(format: Format, command: &str) -> CliResult<T> {
    bad(format!("{command} does not support {format:?} output"))
}

fn read(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::BadInput(format!("{}: {e}", path.display())))
}

fn parse_keys(text: &str) -> CliResult<Vec<usize>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Failure::BadInput(format!("'{s}' is not a key"))))
        .collect()
}

fn tree_value(t: &HistoricTree) -> Value {
    serde_json::from_str(&t.to_json()).expect("tree JSON is valid")
}

fn perm_csv(p: &[usize]) -> String {
    p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let fmt = cli.format;
    let prec = cli.precision;
    match &cli.command {
        Command::Insert { m, perm, perm_file } => {
            let keys = match perm_file {
                Some(p) => parse_keys(&read(p)?)?,
                None => perm.clone(),
            };
            let (tree, history, traces) = run_permutation(*m, &keys)?;
            let header = Header::new("insert", Some(*m)).param("perm", &keys);
            let valid = tree.validate().is_valid();
            let text = match fmt {
                Format::Json => header.json(
                    json!({
                        "tree": tree,
                        "history": history,
                        "leaf_sizes": tree.leaf_sizes(),
                        "height": tree.height(),
                        "traces": traces,
                        "valid": valid,
                    }),
                    prec,
                ),
                Format::Csv => header.csv(
                    "step,key,leaf,splits,root_split,pushed",
                    keys[1..].iter().zip(&traces).enumerate().map(|(i, (k, t))| {
                        format!(
                            "{},{k},{},{},{},{}",
                            i + 2,
                            t.receiving_leaf_index,
                            t.splits_propagated,
                            t.root_split,
                            t.pushed_keys.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
                        )
                    }),
                ),
                Format::Dot => header.dot(&tree.to_dot()),
            };
            Ok(Outcome { text, ok: valid })
        }
        Command::Bijection { m, history, history_file, tree_file } => {
            let (from_tree, tree, history) = if let Some(path) = tree_file {
                let tree = HistoricTree::from_json(&read(path)?)?;
                let history = tree.to_history();
                (true, tree, history)
            } else {
                let history = match (history, history_file) {
                    (_, Some(path)) => History::from_json(&read(path)?)?,
                    (Some(choices), None) => {
                        let Some(m) = m else { return bad("--history needs --m") };
                        History::new(*m, choices.clone())?
                    }
                    (None, None) => return bad("give --history, --history-file or --tree-file"),
                };
                (false, HistoricTree::from_history(&history)?, history)
            };
            let round_trip = if from_tree {
                HistoricTree::from_history(&history).map(|t| t == tree).unwrap_or(false)
            } else {
                tree.to_history() == history
            };
            let report = tree.check_correspondence();
            let ok = round_trip && report.holds();
            let header = Header::new("bijection", Some(tree.m())).param("input", if from_tree { "tree" } else { "history" });
            let text = match fmt {
                Format::Json => header.json(
                    json!({
                        "history": history,
                        "historic_tree": tree_value(&tree),
                        "branchings": tree.branchings(),
                        "s_values": tree.s_values().ok(),
                        "round_trip": round_trip,
                        "correspondence": report,
                    }),
                    prec,
                ),
                Format::Dot => header.dot(&tree.to_dot()),
                Format::Csv => header.csv(
                    "vertex,parent,slot,height,branching",
                    (1..=tree.len()).map(|v| {
                        format!(
                            "{v},{},{},{},{}",
                            tree.parent(v).unwrap_or(0),
                            tree.slot(v),
                            tree.height(v),
                            tree.is_branching(v)
                        )
                    }),
                ),
            };
            Ok(Outcome { text, ok })
        }
        Command::Perms { m, tree_file, btree_file, perm, historic, count: _, list, limit } => {
            enum Target {
                Historic(HistoricTree),
                BTree(KeyedBTree),
            }
            let target = match (tree_file, btree_file, perm) {
                (Some(p), _, _) => Target::Historic(HistoricTree::from_json(&read(p)?)?),
                (_, Some(p), _) => Target::BTree(KeyedBTree::from_json(&read(p)?)?),
                (_, _, Some(pi)) => {
                    let Some(m) = m else { return bad("--perm needs --m") };
                    let (t, h, _) = run_permutation(*m, pi)?;
                    if *historic {
                        Target::Historic(HistoricTree::from_history(&h)?)
                    } else {
                        Target::BTree(t)
                    }
                }
                _ => return bad("give --tree-file, --btree-file or --perm"),
            };
            let listing = *list || limit.is_some();
            let take = limit.unwrap_or(usize::MAX);
            let (kind, m, count, perms): (&str, usize, String, Option<Vec<Vec<usize>>>) = match &target {
                Target::Historic(h) => {
                    let pi_iota = psi_hat_values(&h.to_history())?;
                    let perms = listing.then(|| enumerate_perms(h, &pi_iota).map(|s| s.take(take).collect())).transpose()?;
                    ("historic", h.m(), count_perms(h).to_string(), perms)
                }
                Target::BTree(t) => {
                    let perms: Option<Vec<Vec<usize>>> = listing.then(|| underline_pi(t).take(take).collect());
                    let count = match (&perms, limit) {
                        (Some(p), None) => p.len().to_string(),
                        _ => underline_pi(t).count().to_string(),
                    };
                    ("btree", t.m(), count, perms)
                }
            };
            let header = Header::new("perms", Some(m)).param("target", kind).param("limit", limit);
            let text = match fmt {
                Format::Json => {
                    let mut result = json!({ "count": count });
                    if let Some(p) = &perms {
                        result["permutations"] = json!(p);
                    }
                    header.json(result, prec)
                }
                Format::Csv => match perms {
                    Some(p) => header.csv("permutation", p.iter().map(|p| format!("\"{}\"", perm_csv(p)))),
                    None => header.csv("count", [count]),
                },
                Format::Dot => return unsupported(fmt, "perms"),
            };
            Ok(Outcome { text, ok: true })
        }
        Command::Enumerate { m, n } => {
            let table = history_counts(*m, *n)?;
            let header = Header::new("enumerate", Some(*m)).param("N", n);
            let text = match fmt {
                Format::Json => header.json(json!({ "h": serde_json::to_value(&table).expect("table")["h"] }), prec),
                Format::Csv => format!("# {}\n{}", header.line(), table.to_csv()),
                Format::Dot => return unsupported(fmt, "enumerate"),
            };
            Ok(Outcome { text, ok: true })
        }
        Command::Rho { m, n, method, ratios } => {
            let est = estimate_rho(*m, *n, *method)?;
            let report = conjecture_report(*m, *n, Some(est.rho))?;
            let header = Header::new("rho", Some(*m)).param("N", n).param("method", method);
            let text = match fmt {
                Format::Json => {
                    let mut result = json!({
                        "estimate": est,
                        "conjecture": {
                            "slope_last_decade": report.slope_last_decade,
                            "insufficient_range": report.insufficient_range,
                            "r_N": report.ratios.last().map(|r| r.1),
                        },
                    });
                    if *ratios {
                        result["conjecture"]["ratios"] = json!(report.ratios);
                    }
                    header.json(result, prec)
                }
                Format::Csv if *ratios => header.csv(
                    "n,r_n",
                    report.ratios.iter().map(|(k, r)| format!("{k},{}", round_sig(*r, prec))),
                ),
                Format::Csv => header.csv(
                    "m,N,method,rho,rho_inverse,polynomial_exponent,slope_last_decade",
                    [format!(
                        "{m},{n},{method},{},{},{},{}",
                        round_sig(est.rho, prec),
                        round_sig(est.rho_inverse, prec),
                        round_sig(est.polynomial_exponent, prec),
                        round_sig(report.slope_last_decade, prec)
                    )],
                ),
                Format::Dot => return unsupported(fmt, "rho"),
            };
            Ok(Outcome { text, ok: true })
        }
        Command::Stats { m, keys, exact: _, distribution, mc, trials, seed, partitions, trend, kappa: kmax } => {
            if let Some(max) = kmax {
                let rows: Vec<_> = (1..=*max).map(kappa).collect::<Result<_, _>>()?;
                let header = Header::new("stats", None).param("mode", "kappa").param("max_m", max);
                let text = match fmt {
                    Format::Json => header.json(json!({ "kappa": rows }), prec),
                    Format::Csv => header.csv(
                        "m,kappa_over_factorial,kappa,approx",
                        rows.iter().map(|k| {
                            format!("{},{},{},{}", k.m, k.value, k.kappa, round_sig(k.value.to_f64().unwrap_or(f64::NAN), prec))
                        }),
                    ),
                    Format::Dot => return unsupported(fmt, "stats"),
                };
                return Ok(Outcome { text, ok: true });
            }
            if let Some(max) = trend {
                let rows = mean_ratio_trend(*m, *max)?;
                let header = Header::new("stats", Some(*m)).param("mode", "trend").param("N", max);
                let text = match fmt {
                    Format::Json => header.json(
                        json!({ "trend": rows.iter().map(|(n, r)| json!({
                            "n": n, "ratio": r.to_string(), "approx": r.to_f64(),
                        })).collect::<Vec<_>>() }),
                        prec,
                    ),
                    Format::Csv => header.csv(
                        "n,ratio,approx",
                        rows.iter().map(|(n, r)| format!("{n},{r},{}", round_sig(r.to_f64().unwrap_or(f64::NAN), prec))),
                    ),
                    Format::Dot => return unsupported(fmt, "stats"),
                };
                return Ok(Outcome { text, ok: true });
            }
            let Some(keys) = keys else { return bad("stats needs --keys, --trend or --kappa") };
            if *mc {
                let seed = seed.expect("clap enforces --seed with --mc");
                let r = monte_carlo_leaves_partitioned(*m, *keys, *trials, seed, *partitions)?;
                let header = Header::new("stats", Some(*m))
                    .param("mode", "mc")
                    .param("keys", keys)
                    .param("trials", trials)
                    .param("seed", seed)
                    .param("partitions", partitions);
                let text = match fmt {
                    Format::Json => header.json(serde_json::to_value(&r).expect("report"), prec),
                    Format::Csv => header.csv("leaves,trials", r.histogram.iter().map(|(l, c)| format!("{l},{c}"))),
                    Format::Dot => return unsupported(fmt, "stats"),
                };
                return Ok(Outcome { text, ok: true });
            }
            let lm = leaf_moments(*m, *keys, *distribution)?;
            let header = Header::new("stats", Some(*m)).param("mode", "exact").param("keys", keys);
            let text = match fmt {
                Format::Json => {
                    let mut v = serde_json::to_value(&lm).expect("moments");
                    v["mean_approx"] = json!(lm.mean.to_f64());
                    v["variance_approx"] = json!(lm.variance.to_f64());
                    header.json(v, prec)
                }
                Format::Csv => match &lm.distribution {
                    Some(d) => header.csv("leaves,probability", d.iter().map(|(l, p)| format!("{l},{p}"))),
                    None => header.csv("keys,mean,variance", [format!("{keys},{},{}", lm.mean, lm.variance)]),
                },
                Format::Dot => return unsupported(fmt, "stats"),
            };
            Ok(Outcome { text, ok: true })
        }
        Command::Selftest => {
            let checks = selftest();
            let ok = checks.iter().all(|(_, passed)| *passed);
            let header = Header::new("selftest", None);
            let text = match fmt {
                Format::Json => header.json(
                    json!({
                        "passed": ok,
                        "checks": checks.iter().map(|(n, p)| json!({"name": n, "passed": p})).collect::<Vec<_>>(),
                    }),
                    prec,
                ),
                Format::Csv => header.csv("check,passed", checks.iter().map(|(n, p)| format!("{n},{p}"))),
                Format::Dot => return unsupported(fmt, "selftest"),
            };
            Ok(Outcome { text, ok })
        }
    }
}

/// Small end-to-end checks, each named.
pub fn selftest() -> Vec<(&'static str, bool)> {
    let fig = [6, 1, 2, 4, 7, 5, 9, 8, 3];
    let worked = || -> Option<bool> {
        let (t, h, _) = run_permutation(1, &fig).ok()?;
        let rec = psi(1, &fig).ok()?;
        let pi_iota = lift(&rec.standardized, &t).ok()?;
        let labellings = build_dag(&t, &rec.standardized).ok()?.topological_labellings().ok()?.count();
        let tree = HistoricTree::from_history(&h).ok()?;
        let regenerated = enumerate_perms(&tree, &pi_iota).ok()?.any(|p| p == fig);
        Some(
            h.leaf_choices == [1, 1, 2, 2, 2, 3, 3, 2]
                && rec.standardized == [1, 3, 4, 2]
                && pi_iota == [2, 6, 8, 4]
                && labellings == 3
                && count_perms(&tree) == 1296u32.into()
                && regenerated,
        )
    };
    let counts = || -> Option<bool> {
        let table = history_counts(1, 8).ok()?;
        Some((0..=8).all(|n| brute_force_historic_count(1, n).ok() == Some(table.h[n].clone())))
    };
    let partition = || -> Option<bool> {
        let trees = HistoricTree::enumerate_all(1, 6).ok()?;
        let total: num_bigint::BigUint = trees.iter().map(count_perms).sum();
        Some(total == factorial(6))
    };
    let moments = || -> Option<bool> {
        let l = leaf_moments(1, 13, false).ok()?;
        Some(l.mean.to_string() == "6" && l.variance.to_string() == "24/91")
    };
    let kappas = || -> Option<bool> { Some(kappa(2).ok()?.value.to_string() == "10/37") };
    let rho = || -> Option<bool> { Some((estimate_rho(1, 1000, Method::Aitken).ok()?.rho - 2.3758705509).abs() < 1e-6) };
    vec![
        ("worked_example", worked().unwrap_or(false)),
        ("history_counts_vs_trees", counts().unwrap_or(false)),
        ("weights_partition_s6", partition().unwrap_or(false)),
        ("leaf_moments_13_keys", moments().unwrap_or(false)),
        ("kappa_m2", kappas().unwrap_or(false)),
        ("rho_m1", rho().unwrap_or(false)),
    ]
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::BadInput(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
