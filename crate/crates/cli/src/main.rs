//! Command line front end: every operation of the library behind one
//! binary, with machine-readable outputs and replayable reports.
//!
//! Exit codes: 0 for definite results, 2 when a result is Undecided or
//! Unknown, 1 for input or usage errors.

use clap::{Parser, Subcommand, ValueEnum};
use dischom::chains::Chain;
use dischom::connect::{check_refined_connectivity, ConnectorBudget, RefinedConnectivity};
use dischom::cover::{build_cover, lift_chain, CoverBudget};
use dischom::fixtures::{self, CircleMetric, FixtureSpec};
use dischom::io::{
    self, cover_to_json, null_verdict_to_json, oracle_verdict_to_json, space_from_json,
    space_to_json, tower_from_json, tower_to_json, ChainJson, SpaceJson, TowerJson,
};
use dischom::metric::chain_components;
use dischom::nullity::{bfs_homotopy_oracle, is_null, NullBudget};
use dischom::spectrum::critical_spectrum;
use dischom::tower::{check_refining, invlim_scan, CellVerdict, RefiningVerdict};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "dischom", about = "Scale-indexed homotopy on finite metric spaces", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the primary output here instead of stdout.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Write a replayable report envelope (command echo, input digests,
    /// payload, timing) to this path.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Seed for randomized sampling in fixtures.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a fixture space or tower as JSON.
    Fixture {
        #[command(subcommand)]
        kind: FixtureKind,
    },
    /// Chain components of a space at one scale.
    Components {
        space: PathBuf,
        #[arg(long)]
        scale: f64,
    },
    /// Per-interval component counts, betti numbers, and torsion (CSV).
    Spectrum {
        space: PathBuf,
        #[arg(long, default_value_t = 0)]
        basepoint: usize,
    },
    /// Decide nullity of a loop, emitting a witness or certificate.
    NullCheck {
        space: PathBuf,
        r#loop: PathBuf,
        #[arg(long)]
        scale: f64,
        /// Visited-word budget for the relator search.
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Build the covering graph at a scale.
    Cover {
        space: PathBuf,
        #[arg(long)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        basepoint: usize,
        /// Coset definitions allowed before falling back to truncation.
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        /// Ball radius of a truncated cover, in lifted-edge steps.
        #[arg(long, default_value_t = 12)]
        truncate: usize,
    },
    /// Lift a chain to the covering graph from the basepoint vertex.
    Lift {
        space: PathBuf,
        chain: PathBuf,
        #[arg(long)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        basepoint: usize,
        #[arg(long)]
        start_vertex: Option<usize>,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        #[arg(long, default_value_t = 12)]
        truncate: usize,
    },
    /// Validate a tower: surjective 1-Lipschitz bonds.
    TowerValidate { tower: PathBuf },
    /// Check the refining property of one bond at given scales.
    RefineCheck {
        tower: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
    },
    /// Scan all consecutive bonds over a scale grid (CSV matrix).
    InvlimScan {
        tower: PathBuf,
        /// Comma-separated scales.
        #[arg(long, value_delimiter = ',')]
        eps_grid: Vec<f64>,
        /// Chain fineness; 0 asks for a per-stage default.
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
    },
    /// Brute-force nullity search over bounded chains.
    Oracle {
        space: PathBuf,
        r#loop: PathBuf,
        #[arg(long)]
        scale: f64,
        #[arg(long, default_value_t = 16)]
        max_len: usize,
        #[arg(long, default_value_t = 500_000)]
        max_states: usize,
    },
    /// Weak-chainedness check on one space at (eps, delta) with fineness
    /// kappa.
    RefinedConnectivity {
        space: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
    },
}

#[derive(Subcommand)]
enum FixtureKind {
    Circle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        circumference: f64,
        #[arg(long, value_enum, default_value_t = MetricArg::Arc)]
        metric: MetricArg,
    },
    Ngon {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        side: f64,
    },
    Warsaw {
        #[arg(long, default_value_t = 220)]
        n: usize,
    },
    Solenoid {
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        base: f64,
    },
    Cat0Sphere {
        #[arg(long, default_value_t = 3)]
        branches: usize,
        #[arg(long, default_value_t = 0.1)]
        trunk: f64,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        arcs: usize,
    },
    Horn {
        #[arg(long, default_value_t = 16)]
        nx: usize,
        #[arg(long, default_value_t = 12)]
        narcs: usize,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        x_max: f64,
    },
    Cantor {
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 5)]
        heights: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Arc,
    Chord,
}

/// Replayable run record: echoed command, input digests, payload, timing.
#[derive(Serialize)]
struct Report<'a> {
    command: Vec<String>,
    inputs: BTreeMap<String, String>,
    payload: &'a str,
    exit_code: i32,
    elapsed_ms: u128,
}

struct Outcome {
    payload: String,
    exit_code: i32,
}

fn main() {
    let started = std::time::Instant::now();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let mut inputs = BTreeMap::new();
    match run(&cli, &mut inputs) {
        Ok(outcome) => {
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.payload) {
                        eprintln!("cannot write {}: {e}", path.display());
                        std::process::exit(1);
                    }
                }
                None => print!("{}", outcome.payload),
            }
            if let Some(path) = &cli.report {
                let report = Report {
                    command: argv,
                    inputs,
                    payload: &outcome.payload,
                    exit_code: outcome.exit_code,
                    elapsed_ms: started.elapsed().as_millis(),
                };
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("cannot write report {}: {e}", path.display());
                    std::process::exit(1);
                }
            }
            std::process::exit(outcome.exit_code);
        }
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(1);
        }
    }
}

fn digest_file(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<Vec<u8>, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    inputs.insert(path.display().to_string(), format!("sha256:{}", hex::encode(hasher.finalize())));
    Ok(bytes)
}

fn load_space(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<dischom::Space, String> {
    let bytes = digest_file(path, inputs)?;
    let json: SpaceJson =
        serde_json::from_slice(&bytes).map_err(|e| format!("bad space file {}: {e}", path.display()))?;
    space_from_json(&json).map_err(|e| format!("invalid space in {}: {e}", path.display()))
}

fn load_chain(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<Chain<f64>, String> {
    let bytes = digest_file(path, inputs)?;
    let json: ChainJson =
        serde_json::from_slice(&bytes).map_err(|e| format!("bad chain file {}: {e}", path.display()))?;
    Ok((&json).into())
}

fn load_tower(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<dischom::tower::Tower<f64>, String> {
    let bytes = digest_file(path, inputs)?;
    let json: TowerJson =
        serde_json::from_slice(&bytes).map_err(|e| format!("bad tower file {}: {e}", path.display()))?;
    tower_from_json(&json).map_err(|e| format!("invalid tower in {}: {e}", path.display()))
}

fn json_payload<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("payload serializes");
    text.push('\n');
    text
}

fn run(cli: &Cli, inputs: &mut BTreeMap<String, String>) -> Result<Outcome, String> {
    match &cli.command {
        Command::Fixture { kind } => {
            let spec = match kind {
                FixtureKind::Circle { n, circumference, metric } => FixtureSpec::Circle {
                    n: *n,
                    circumference: *circumference,
                    metric: match metric {
                        MetricArg::Arc => CircleMetric::Arc,
                        MetricArg::Chord => CircleMetric::Chord,
                    },
                },
                FixtureKind::Ngon { n, side } => FixtureSpec::NGon { n: *n, side: *side },
                FixtureKind::Warsaw { n } => FixtureSpec::WarsawCircle { n: *n },
                FixtureKind::Solenoid { depth, m, base } => FixtureSpec::SolenoidTower {
                    depth: *depth,
                    m: *m,
                    base_circumference: *base,
                },
                FixtureKind::Cat0Sphere { branches, trunk, radii, arcs } => {
                    FixtureSpec::Cat0SphereTower {
                        branches: *branches,
                        trunk: *trunk,
                        radii: radii.clone(),
                        arcs: *arcs,
                    }
                }
                FixtureKind::Horn { nx, narcs, x_min, x_max } => FixtureSpec::HornSurface {
                    nx: *nx,
                    narcs: *narcs,
                    x_min: *x_min,
                    x_max: *x_max,
                },
                FixtureKind::Cantor { depth, heights } => {
                    FixtureSpec::CantorSuspension { depth: *depth, heights: *heights }
                }
            };
            let generated = fixtures::generate(&spec, cli.seed).map_err(|e| e.to_string())?;
            let payload = match generated {
                fixtures::Generated::Space(s) => json_payload(&space_to_json(&s)),
                fixtures::Generated::Tower(t) => json_payload(&tower_to_json(&t)),
            };
            Ok(Outcome { payload, exit_code: 0 })
        }
        Command::Components { space, scale } => {
            let s = load_space(space, inputs)?;
            let parts = chain_components(&s, *scale).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct ComponentsJson {
                scale: f64,
                count: usize,
                representative: Vec<usize>,
            }
            let payload = json_payload(&ComponentsJson {
                scale: *scale,
                count: parts.count(),
                representative: (0..s.len()).map(|i| parts.component_of(i)).collect(),
            });
            Ok(Outcome { payload, exit_code: 0 })
        }
        Command::Spectrum { space, basepoint } => {
            let s = load_space(space, inputs)?;
            let spec = critical_spectrum(&s, *basepoint).map_err(|e| e.to_string())?;
            let mut csv = String::from("interval_lo,interval_hi,components,betti1,torsion\n");
            for row in &spec.rows {
                let hi = if row.hi.is_finite() { format!("{}", row.hi) } else { "inf".to_string() };
                let torsion =
                    row.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";");
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.lo, hi, row.components, row.betti1, torsion
                ));
            }
            Ok(Outcome { payload: csv, exit_code: 0 })
        }
        Command::NullCheck { space, r#loop, scale, budget } => {
            let s = load_space(space, inputs)?;
            let mut chain = load_chain(r#loop, inputs)?;
            chain.scale = *scale;
            let null_budget = NullBudget { max_words: *budget, word_len_cap: 64 };
            let verdict = is_null(&s, *scale, &chain, null_budget).map_err(|e| e.to_string())?;
            let exit_code = if verdict.is_unknown() { 2 } else { 0 };
            Ok(Outcome { payload: json_payload(&null_verdict_to_json(&verdict)), exit_code })
        }
        Command::Cover { space, scale, basepoint, budget, truncate } => {
            let s = load_space(space, inputs)?;
            let cover_budget = CoverBudget {
                max_cosets: *budget,
                truncation_radius: *truncate,
                ..CoverBudget::default()
            };
            let cover = build_cover(&s, *scale, *basepoint, cover_budget).map_err(|e| e.to_string())?;
            Ok(Outcome { payload: json_payload(&cover_to_json(&s, &cover)), exit_code: 0 })
        }
        Command::Lift { space, chain, scale, basepoint, start_vertex, budget, truncate } => {
            let s = load_space(space, inputs)?;
            let mut c = load_chain(chain, inputs)?;
            c.scale = *scale;
            let cover_budget = CoverBudget {
                max_cosets: *budget,
                truncation_radius: *truncate,
                ..CoverBudget::default()
            };
            let cover = build_cover(&s, *scale, *basepoint, cover_budget).map_err(|e| e.to_string())?;
            let start = start_vertex.unwrap_or_else(|| cover.basepoint_vertex());
            let lift = lift_chain(&s, &cover, &c, start).map_err(|e| e.to_string())?;
            Ok(Outcome { payload: json_payload(&io::LiftJson::from(&lift)), exit_code: 0 })
        }
        Command::TowerValidate { tower } => {
            let t = load_tower(tower, inputs)?;
            #[derive(Serialize)]
            #[serde(tag = "status", rename_all = "snake_case")]
            enum ValidateJson {
                Ok { stages: usize },
                Violation { detail: String },
            }
            let payload = match t.validate() {
                Ok(()) => json_payload(&ValidateJson::Ok { stages: t.stage_count() }),
                Err(v) => json_payload(&ValidateJson::Violation { detail: format!("{v:?}") }),
            };
            Ok(Outcome { payload, exit_code: 0 })
        }
        Command::RefineCheck { tower, r, t, eps, delta, kappa, budget } => {
            let tw = load_tower(tower, inputs)?;
            let delta = delta.unwrap_or(eps * 0.75);
            let kappa = kappa.unwrap_or(delta);
            let connector = ConnectorBudget {
                max_states: *budget,
                ..ConnectorBudget::default()
            };
            let verdict =
                check_refining(&tw, *r, *t, *eps, delta, kappa, connector).map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            #[serde(tag = "verdict", rename_all = "snake_case")]
            enum RefineJson {
                Refining { witnesses: usize },
                NotRefining {
                    image_pair: (usize, usize),
                    preimages: (usize, usize),
                    preimage_distance: f64,
                },
                Undecided { image_pair: (usize, usize), preimages: (usize, usize) },
            }
            let (payload, exit_code) = match verdict {
                RefiningVerdict::Refining { witnesses } => {
                    (json_payload(&RefineJson::Refining { witnesses: witnesses.len() }), 0)
                }
                RefiningVerdict::NotRefining { image_pair, preimages } => (
                    json_payload(&RefineJson::NotRefining {
                        image_pair,
                        preimages,
                        preimage_distance: tw.stage(*t).dist(preimages.0, preimages.1),
                    }),
                    0,
                ),
                RefiningVerdict::Undecided { image_pair, preimages, .. } => {
                    (json_payload(&RefineJson::Undecided { image_pair, preimages }), 2)
                }
            };
            Ok(Outcome { payload, exit_code })
        }
        Command::InvlimScan { tower, eps_grid, kappa, jobs, budget } => {
            if eps_grid.is_empty() {
                return Err("an eps grid is required".into());
            }
            let tw = load_tower(tower, inputs)?;
            let connector = ConnectorBudget {
                max_states: *budget,
                ..ConnectorBudget::default()
            };
            let report =
                invlim_scan(&tw, eps_grid, *kappa, connector, *jobs).map_err(|e| e.to_string())?;
            let mut csv = String::from("stage_pair");
            for eps in eps_grid {
                csv.push_str(&format!(",{eps}"));
            }
            csv.push('\n');
            let mut any_undecided = false;
            for t in 1..tw.stage_count() {
                csv.push_str(&format!("{}-{}", t - 1, t));
                for eps in eps_grid {
                    let cell = report
                        .cells
                        .iter()
                        .find(|c| c.t == t && c.eps == *eps)
                        .expect("scan covers every cell");
                    let text = match cell.verdict {
                        CellVerdict::True { .. } => "true",
                        CellVerdict::False => "false",
                        CellVerdict::Undecided => {
                            any_undecided = true;
                            "undecided"
                        }
                    };
                    csv.push_str(&format!(",{text}"));
                }
                csv.push('\n');
            }
            Ok(Outcome { payload: csv, exit_code: if any_undecided { 2 } else { 0 } })
        }
        Command::Oracle { space, r#loop, scale, max_len, max_states } => {
            let s = load_space(space, inputs)?;
            let mut chain = load_chain(r#loop, inputs)?;
            chain.scale = *scale;
            let verdict =
                bfs_homotopy_oracle(&s, &chain, *max_len, *max_states).map_err(|e| e.to_string())?;
            let exit_code = match verdict {
                dischom::nullity::OracleVerdict::Exhausted { .. } => 2,
                _ => 0,
            };
            Ok(Outcome { payload: json_payload(&oracle_verdict_to_json(&verdict)), exit_code })
        }
        Command::RefinedConnectivity { space, eps, delta, kappa, budget } => {
            let s = load_space(space, inputs)?;
            let connector = ConnectorBudget {
                max_states: *budget,
                ..ConnectorBudget::default()
            };
            let verdict = check_refined_connectivity(&s, *eps, *delta, *kappa, connector)
                .map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            #[serde(tag = "verdict", rename_all = "snake_case")]
            enum ConnectivityJson {
                Holds { pairs: usize },
                Fails { pair: (usize, usize) },
                Undecided { pair: (usize, usize) },
            }
            let (payload, exit_code) = match verdict {
                RefinedConnectivity::Holds { witnesses } => {
                    (json_payload(&ConnectivityJson::Holds { pairs: witnesses.len() }), 0)
                }
                RefinedConnectivity::Fails { pair } => {
                    (json_payload(&ConnectivityJson::Fails { pair }), 0)
                }
                RefinedConnectivity::Undecided { pair, .. } => {
                    (json_payload(&ConnectivityJson::Undecided { pair }), 2)
                }
            };
            Ok(Outcome { payload, exit_code })
        }
    }
}
