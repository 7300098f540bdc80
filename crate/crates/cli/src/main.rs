//! Batch front door: read fan / bundle / certificate JSON, run the checks,
//! emit a JSON report.
//!
//! Exit codes: 0 success or accepted, 1 input error, 2 mathematical
//! rejection (incompatible data, failed positivity, failed certificate)
//! with the witness in the report.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tvb_core::chern::chern_class;
use tvb_core::classical::{verify_certificate, Certificate};
use tvb_core::cocycle::{cocycle_check, is_regular, transition};
use tvb_core::fixtures;
use tvb_core::plmap::{compatibility_solve_with, RayFiltrationData, DEFAULT_RETRIES};
use tvb_core::positivity::{is_ample, is_globally_generated, is_nef, wall_splittings};
use tvb_core::rat::fmt_rat;
use tvb_core::{Error, Fan, PLMap};

#[derive(Parser)]
#[command(name = "tvb", about = "Toric vector bundles as piecewise linear maps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Fan JSON file
    #[arg(long)]
    fan: PathBuf,
    /// Output file for the JSON report (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized diagnostics; recorded in the report
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Structural diagnostics of a fan
    ValidateFan {
        #[command(flatten)]
        common: Common,
    },
    /// Solve ray filtrations into a piecewise linear map
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Nef / ample / globally-generated verdicts with wall splittings
    Positivity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Equivariant Chern class as a piecewise polynomial
    Chern {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
        /// Class index
        #[arg(long = "i")]
        index: usize,
    },
    /// Tensor product of two bundles, as ray filtration data
    Tensor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
        /// Second bundle JSON file
        #[arg(long)]
        with: PathBuf,
    },
    /// Transition matrix between two charts, or the cocycle condition on
    /// three
    Cocycle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
        /// Comma-separated maximal cone indices: A,B or A,B,C
        #[arg(long)]
        cones: String,
    },
    /// Verify an orthogonal / symplectic reduction certificate
    SpCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Write a named example's input files
    Example {
        /// tangent-pn | line-bundle | trivial | symplectic-demo
        #[arg(long)]
        name: String,
        /// Dimension / rank parameter where applicable
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Divisor coefficients for line-bundle, comma-separated
        #[arg(long)]
        coeffs: Option<String>,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Mathematical rejection, as opposed to an input error.
struct Rejection(Value);

enum Failure {
    Input(String),
    Rejected(Rejection),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_rejection() {
            Failure::Rejected(Rejection(json!({ "rejected": e.to_string() })))
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read_fan(path: &PathBuf) -> Result<Fan, Failure> {
    let s = fs::read_to_string(path)?;
    Ok(Fan::from_json(&s)?)
}

fn read_bundle(path: &PathBuf) -> Result<RayFiltrationData, Failure> {
    let s = fs::read_to_string(path)?;
    Ok(RayFiltrationData::from_json(&s)?)
}

fn solve(fan: &Fan, bundle: &PathBuf, seed: u64) -> Result<PLMap, Failure> {
    let data = read_bundle(bundle)?;
    Ok(compatibility_solve_with(fan, &data, DEFAULT_RETRIES, seed)?)
}

fn emit(common: &Common, report: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("report serialization");
    match &common.out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ValidateFan { common } => {
            let fan = read_fan(&common.fan)?;
            let d = fan.validate();
            let complete = fan.walls().is_ok();
            let report = json!({
                "command": "validate-fan",
                "seed": common.seed,
                "primitive": d.primitive,
                "simplicial": d.simplicial,
                "faces_ok": d.faces_ok,
                "complete": complete,
                "problems": d.problems,
            });
            emit(&common, &report)?;
            if d.is_valid() {
                Ok(())
            } else {
                Err(Failure::Rejected(Rejection(report)))
            }
        }
        Command::Classify { common, bundle } => {
            let fan = read_fan(&common.fan)?;
            let phi = solve(&fan, &bundle, common.seed)?;
            let mut report = phi.to_json_value();
            report["command"] = json!("classify");
            report["seed"] = json!(common.seed);
            emit(&common, &report)
        }
        Command::Positivity { common, bundle } => {
            let fan = read_fan(&common.fan)?;
            let phi = solve(&fan, &bundle, common.seed)?;
            let splittings = wall_splittings(&phi)?;
            let walls = fan.walls()?;
            let nef = is_nef(&phi)?;
            let ample = is_ample(&phi)?;
            let gg = is_globally_generated(&phi)?;
            let mut witnesses = Vec::new();
            if let Err(w) = &nef {
                witnesses.push(json!({
                    "kind": "nef", "wall": w.wall, "degree": fmt_rat(&w.degree)
                }));
            }
            if let Err(w) = &ample {
                witnesses.push(json!({
                    "kind": "ample", "wall": w.wall, "degree": fmt_rat(&w.degree)
                }));
            }
            if let Err(w) = &gg {
                witnesses.push(json!({
                    "kind": "globally_generated",
                    "cone": w.cone, "line": w.line, "ray": w.ray
                }));
            }
            let report = json!({
                "command": "positivity",
                "seed": common.seed,
                "nef": nef.is_ok(),
                "ample": ample.is_ok(),
                "globally_generated": gg.is_ok(),
                "walls": splittings.iter().zip(&walls).map(|(s, w)| json!({
                    "tau": w.tau_rays,
                    "degrees": s.degrees.iter().map(fmt_rat).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
                "witnesses": witnesses,
            });
            emit(&common, &report)?;
            if nef.is_ok() {
                Ok(())
            } else {
                Err(Failure::Rejected(Rejection(report)))
            }
        }
        Command::Chern { common, bundle, index } => {
            let fan = read_fan(&common.fan)?;
            let phi = solve(&fan, &bundle, common.seed)?;
            let pp = chern_class(&phi, index)?;
            let report = json!({
                "command": "chern",
                "seed": common.seed,
                "index": index,
                "cones": pp.to_json_value(),
            });
            emit(&common, &report)
        }
        Command::Tensor { common, bundle, with } => {
            let fan = read_fan(&common.fan)?;
            let a = solve(&fan, &bundle, common.seed)?;
            let b = solve(&fan, &with, common.seed)?;
            let t = a.tensor(&b)?;
            let data = t.ray_filtrations()?;
            let report = json!({
                "command": "tensor",
                "seed": common.seed,
                "rank": t.rank(),
                "bundle": serde_json::from_str::<Value>(&data.to_json())
                    .expect("emitted JSON parses"),
            });
            emit(&common, &report)
        }
        Command::Cocycle { common, bundle, cones } => {
            let fan = read_fan(&common.fan)?;
            let phi = solve(&fan, &bundle, common.seed)?;
            let ids: Vec<usize> = cones
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| {
                    Failure::Input(format!("bad cone index {s:?}"))
                }))
                .collect::<Result<_, _>>()?;
            let nc = fan.max_cones().len();
            if ids.iter().any(|&c| c >= nc) {
                return Err(Failure::Input(format!("cone index out of range 0..{nc}")));
            }
            match ids.as_slice() {
                [a, b] => {
                    let psi = transition(&phi, *a, *b)?;
                    let shared: Vec<usize> = fan
                        .cone_rays(*a)
                        .iter()
                        .filter(|r| fan.cone_rays(*b).contains(r))
                        .copied()
                        .collect();
                    let regular = is_regular(&psi, &fan, &shared);
                    let report = json!({
                        "command": "cocycle",
                        "seed": common.seed,
                        "cones": ids,
                        "shared_rays": shared,
                        "regular": regular,
                        "matrix": psi.to_json_value(),
                    });
                    emit(&common, &report)?;
                    if regular {
                        Ok(())
                    } else {
                        Err(Failure::Rejected(Rejection(report)))
                    }
                }
                [a, b, c] => {
                    let holds = cocycle_check(&phi, *a, *b, *c)?;
                    let report = json!({
                        "command": "cocycle",
                        "seed": common.seed,
                        "cones": ids,
                        "cocycle_condition": holds,
                    });
                    emit(&common, &report)?;
                    if holds {
                        Ok(())
                    } else {
                        Err(Failure::Rejected(Rejection(report)))
                    }
                }
                _ => Err(Failure::Input("--cones takes two or three indices".into())),
            }
        }
        Command::SpCheck { common, cert } => {
            let fan = read_fan(&common.fan)?;
            let cert = Certificate::from_json(&fs::read_to_string(&cert)?)?;
            let verdict = verify_certificate(&fan, &cert)?;
            let report = match &verdict {
                Ok(()) => json!({
                    "command": "sp-check", "seed": common.seed, "accepted": true
                }),
                Err(w) => json!({
                    "command": "sp-check", "seed": common.seed, "accepted": false,
                    "witness": { "cone": w.cone, "ray": w.ray, "detail": w.detail }
                }),
            };
            emit(&common, &report)?;
            match verdict {
                Ok(()) => Ok(()),
                Err(_) => Err(Failure::Rejected(Rejection(report))),
            }
        }
        Command::Example { name, n, coeffs, out } => {
            fs::create_dir_all(&out)?;
            let write = |file: &str, text: String| -> Result<(), Failure> {
                fs::write(out.join(file), text + "\n")?;
                Ok(())
            };
            match name.as_str() {
                "tangent-pn" => {
                    let (fan, data, _) = fixtures::tangent_pn(n)?;
                    write("fan.json", fan.to_json())?;
                    write("bundle.json", data.to_json())?;
                }
                "line-bundle" => {
                    let fan = fixtures::fan_p1();
                    let parsed: Vec<i64> = match coeffs {
                        Some(s) => s
                            .split(',')
                            .map(|x| x.trim().parse().map_err(|_| {
                                Failure::Input(format!("bad coefficient {x:?}"))
                            }))
                            .collect::<Result<_, _>>()?,
                        None => vec![1, 1],
                    };
                    let phi = fixtures::line_bundle(&fan, &parsed)?;
                    write("fan.json", fan.to_json())?;
                    write("bundle.json", phi.ray_filtrations()?.to_json())?;
                }
                "trivial" => {
                    let fan = fixtures::fan_p2();
                    let phi = fixtures::trivial_bundle(&fan, n.max(1))?;
                    write("fan.json", fan.to_json())?;
                    write("bundle.json", phi.ray_filtrations()?.to_json())?;
                }
                "symplectic-demo" => {
                    let (fan, cert) = tvb_core::classical::p1_symplectic_demo();
                    write("fan.json", fan.to_json())?;
                    write("certificate.json", cert.to_json())?;
                }
                other => return Err(Failure::Input(format!("unknown example {other:?}"))),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Rejected(Rejection(report))) => {
            eprintln!("rejected: {report}");
            ExitCode::from(2)
        }
    }
}
