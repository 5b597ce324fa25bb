//! Command-line surface: inequality fuzzing, decrement runs, coset covers,
//! cover verification, and small evaluators.
//!
//! Exit codes: 0 pass, 1 property violation, 2 usage or format error,
//! 3 resource cap exceeded.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entropic_pfr::decrement::{minimize, torsion_compatible, DecrementConfig};
use entropic_pfr::fuzz::{run_fuzz, FuzzConfig};
use entropic_pfr::pfr::{
    cover_from_json, cover_to_json, pfr_cover, verify_cover, PfrConfig, SetInput,
};
use entropic_pfr::{ruzsa, Dist, Error, RVTuple};

#[derive(Parser)]
#[command(
    name = "entropic-pfr",
    version,
    about = "Entropic Ruzsa calculus and coset covers over finite abelian groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fuzz the inequality registry with seeded random rational laws.
    Fuzz(FuzzArgs),
    /// Run the multidistance decrement iteration on a tuple file.
    Decrement(DecrementArgs),
    /// Cover a small-doubling set by cosets of a subgroup.
    Pfr(PfrArgs),
    /// Re-verify a cover file against a set file.
    VerifyCover(VerifyArgs),
    /// Shannon entropy of a distribution file, in nats.
    Entropy(OneDist),
    /// Entropic Ruzsa distance between two distribution files.
    Rdist(TwoDists),
    /// Multidistance of a tuple file.
    Multidist(OneTuple),
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Comma-separated registry filter (default: the standard registry).
    #[arg(long)]
    registry: Option<String>,
    /// Largest tuple size for tuple-shaped arguments.
    #[arg(long, default_value_t = 3)]
    max_tuple: usize,
    /// Cap on atoms of lifted joint laws.
    #[arg(long, default_value_t = entropic_pfr::DEFAULT_ATOM_CAP)]
    cap_atoms: u64,
    /// Write the full JSON report here.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct DecrementArgs {
    /// Tuple file: {"members": [distribution, ...]}.
    input: String,
    /// Step parameter as an exact fraction, e.g. 1/800.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long, default_value_t = entropic_pfr::DEFAULT_ATOM_CAP)]
    cap_atoms: u64,
    /// Write the JSON-lines trace here (default: stdout).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct PfrArgs {
    /// Set file: {"group": {...}, "elements": [[...], ...]}.
    input: String,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long, default_value_t = entropic_pfr::DEFAULT_ATOM_CAP)]
    cap_atoms: u64,
    /// Constant C in the reported count comparison (2K)^(C m^3).
    #[arg(long, default_value_t = 12.0)]
    count_constant: f64,
    /// Write the cover JSON here (default: stdout).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Set file.
    set: String,
    /// Cover file produced by the pfr subcommand.
    cover: String,
}

#[derive(Args)]
struct OneDist {
    input: String,
}

#[derive(Args)]
struct TwoDists {
    x: String,
    y: String,
}

#[derive(Args)]
struct OneTuple {
    input: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::CapExceeded { .. } => 3,
                _ => 2,
            })
        }
    }
}

fn run(cli: Cli) -> entropic_pfr::Result<ExitCode> {
    match cli.cmd {
        Cmd::Fuzz(a) => cmd_fuzz(a),
        Cmd::Decrement(a) => cmd_decrement(a),
        Cmd::Pfr(a) => cmd_pfr(a),
        Cmd::VerifyCover(a) => cmd_verify_cover(a),
        Cmd::Entropy(a) => {
            let d: Dist = read_json(&a.input)?;
            println!("{:.12}", entropic_pfr::entropy::entropy(&d));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Rdist(a) => {
            let x: Dist = read_json(&a.x)?;
            let y: Dist = read_json(&a.y)?;
            println!("{:.12}", ruzsa::rdist(&x, &y)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Multidist(a) => {
            let t: RVTuple = read_json(&a.input)?;
            println!("{:.12}", ruzsa::multidist(&t)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> entropic_pfr::Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{path}: {e}")))
}

fn write_or_print(out: &Option<String>, content: &str) -> entropic_pfr::Result<()> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)
                .map_err(|e| Error::Format(format!("cannot write {path}: {e}")))?;
            f.write_all(content.as_bytes())
                .map_err(|e| Error::Format(format!("cannot write {path}: {e}")))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_eta(s: &Option<String>) -> entropic_pfr::Result<Option<(u64, u64)>> {
    match s {
        None => Ok(None),
        Some(text) => {
            let bad = || Error::Format(format!("invalid eta {text:?}, expected num/den"));
            let (n, d) = text.split_once('/').ok_or_else(bad)?;
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 || n == 0 || n >= d {
                return Err(bad());
            }
            Ok(Some((n, d)))
        }
    }
}

fn cmd_fuzz(a: FuzzArgs) -> entropic_pfr::Result<ExitCode> {
    let registry: Option<BTreeSet<String>> = a.registry.map(|s| {
        s.split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect()
    });
    let cfg = FuzzConfig {
        trials: a.trials,
        seed: a.seed,
        tolerance: a.tolerance,
        registry,
        max_tuple: a.max_tuple,
        atom_cap: a.cap_atoms,
        ..Default::default()
    };
    let report = run_fuzz(&cfg)?;
    for (name, worst) in &report.worst {
        println!("{name}: worst {worst:+.6e}");
    }
    println!(
        "trials {} checks {} failures {}",
        report.trials,
        report.checks_run,
        report.failures.len()
    );
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_or_print(&Some(out.clone()), &json)?;
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        if a.out.is_none() {
            // Dump counterexamples so the run is reproducible.
            println!(
                "{}",
                serde_json::to_string_pretty(&report.failures).expect("serializes")
            );
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_decrement(a: DecrementArgs) -> entropic_pfr::Result<ExitCode> {
    let tuple: RVTuple = read_json(&a.input)?;
    if !torsion_compatible(tuple.group(), tuple.len()) {
        return Err(Error::Format(format!(
            "tuple size {} is not a multiple of the group torsion {}",
            tuple.len(),
            tuple.group().torsion()
        )));
    }
    let cfg = DecrementConfig {
        eta: parse_eta(&a.eta)?,
        tol: a.tol,
        max_steps: a.max_steps,
        atom_cap: a.cap_atoms,
        ..Default::default()
    };
    let res = minimize(&tuple, &cfg)?;
    let mut lines = String::new();
    for step in &res.trace.steps {
        lines.push_str(&serde_json::to_string(step).expect("step serializes"));
        lines.push('\n');
    }
    let summary = serde_json::json!({
        "summary": {
            "stop": res.stop,
            "k0": res.trace.k0,
            "eta": format!("{}/{}", res.trace.eta.0, res.trace.eta.1),
            "steps": res.trace.steps.len(),
            "final_multidist": ruzsa::multidist(&res.final_tuple)?,
            "subgroup": res.subgroup.elements().map(|e| e.residues().to_vec()).collect::<Vec<_>>(),
            "sum_dist": res.sum_dist,
            "sum_dist_final": res.sum_dist_final,
            "sum_dist_bound": res.sum_dist_bound,
            "ell_bound": res.ell_bound.to_string(),
        }
    });
    lines.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
    lines.push('\n');
    write_or_print(&a.out, &lines)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_pfr(a: PfrArgs) -> entropic_pfr::Result<ExitCode> {
    let set: SetInput = read_json(&a.input)?;
    let cfg = PfrConfig {
        decrement: DecrementConfig {
            eta: parse_eta(&a.eta)?,
            tol: a.tol,
            max_steps: a.max_steps,
            atom_cap: a.cap_atoms,
            ..Default::default()
        },
        count_constant: a.count_constant,
        ..Default::default()
    };
    let out = pfr_cover(&set, &cfg)?;
    let report = verify_cover(&set, &out.cover, cfg.subgroup_cap)?;
    let cover_json =
        serde_json::to_string_pretty(&cover_to_json(&out.cover)).expect("cover serializes");
    write_or_print(&a.out, &format!("{cover_json}\n"))?;

    eprintln!(
        "set size {} doubling K = {}/{} cover count {} subgroup size {} ell {}",
        set.len(),
        out.cover.k.0,
        out.cover.k.1,
        out.cover.count(),
        out.cover.subgroup.len(),
        out.cover.ell
    );
    eprintln!(
        "bridge slack {:+.6e}; ln(count) = {:.4} vs C m^3 ln(2K) = {:.4}",
        out.bridge_slack, out.count_log, out.count_log_bound
    );
    match report.optimal {
        Some((opt, hsize)) => eprintln!(
            "checks: coverage {} size {} containment {}; optimal {} cosets (subgroup size {}), ratio {:.2}",
            report.coverage_ok,
            report.size_ok,
            report.containment_ok,
            opt,
            hsize,
            report.ratio.unwrap_or(f64::NAN)
        ),
        None => eprintln!(
            "checks: coverage {} size {} containment {}; optimal not computed (above cap)",
            report.coverage_ok, report.size_ok, report.containment_ok
        ),
    }
    if report.hard_checks_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_verify_cover(a: VerifyArgs) -> entropic_pfr::Result<ExitCode> {
    let set: SetInput = read_json(&a.set)?;
    let text = fs::read_to_string(&a.cover)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", a.cover)))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", a.cover)))?;
    let cover = cover_from_json(set.group(), &value)?;
    let report = verify_cover(&set, &cover, entropic_pfr::DEFAULT_SUBGROUP_CAP)?;
    let json = serde_json::json!({
        "coverage_ok": report.coverage_ok,
        "missing": report.missing.iter().map(|e| e.residues().to_vec()).collect::<Vec<_>>(),
        "size_ok": report.size_ok,
        "containment_ok": report.containment_ok,
        "count": report.count,
        "optimal": report.optimal,
        "ratio": report.ratio,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("serializes")
    );
    if report.hard_checks_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
