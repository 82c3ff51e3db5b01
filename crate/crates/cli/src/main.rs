//! `flatconn` command-line front end.
//!
//! Subcommands map files to library calls and write machine-readable
//! artifacts: JSON reports (floats at 17 significant digits, byte-identical
//! across runs with the same inputs and seed) plus CSV grids where a command
//! produces one. Outputs are written atomically (temp file + rename).
//!
//! Exit codes: 0 success (numerical-reliability warnings are embedded in
//! the JSON), 2 input/schema violation, 3 solver size guard.

mod jsonout;

use clap::{Parser, Subcommand, ValueEnum};
use flatconn::area::{puncture_stages, relaxed_area_upper_bound};
use flatconn::dual::{build_certificate, verify_duality};
use flatconn::flatnorm::{solve_bruteforce, solve_matching, verify_structure, NormKind};
use flatconn::io::{
    parse_atoms_csv, CriterionOut, DomainSpec, DualOutput, EnvelopeOutput, EnvelopeRow,
    FlatnormOutput, JacobianOutput, MapSpec, PairsSpec, SelftestOutput,
};
use flatconn::jacobian::{
    analytic_jacobian_atoms, atoms_from_windings, sample, winding_per_plaquette, GridSpec,
    DET_PREFACTOR,
};
use flatconn::selftest::run_all;
use flatconn::{AtomicDistribution, Decomposition, Domain, Error as LibError, MapFamily};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "flatconn",
    version,
    about = "Flat norms, dual certificates, winding extraction, and relaxed-area bounds \
             on planar domains with holes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Matching,
    Bruteforce,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a map on a grid, count plaquette windings, and emit the
    /// induced atoms (JSON) plus the winding chart (CSV).
    Jacobian {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Grid nodes as NxM.
        #[arg(long, default_value = "256x256")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the flat-norm decomposition of an atom file.
    Flatnorm {
        #[arg(long)]
        domain: PathBuf,
        /// Atoms CSV (`x,y,multiplicity`) or pairs JSON, by extension.
        #[arg(long)]
        atoms: PathBuf,
        /// Segment weight; 2 is the length-commensurate norm.
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = Solver::Matching)]
        solver: Solver,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve at beta = 2, build the dual certificate, and emit the duality
    /// report (JSON) plus a certificate grid (CSV).
    Dual {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        atoms: PathBuf,
        #[arg(long, default_value = "256x256")]
        grid: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relaxed-area upper bound of a map: Dirichlet term plus singular term.
    Area {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Puncture sweep: threshold puncture set and the bound per prefix.
    Envelope {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Singular-mass threshold for the puncture set.
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite and write its table as JSON.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Honors `FLATCONN_THREADS` as an upper bound on worker count.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("FLATCONN_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid FLATCONN_THREADS={v:?}"),
        }
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn schema(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        let code = match e {
            LibError::BruteForceGuard { .. } => 3,
            _ => 2,
        };
        CliError {
            message: e.to_string(),
            code,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Jacobian {
            domain,
            map,
            grid,
            out,
        } => {
            let d = load_domain(&domain)?;
            let family = load_map(&map)?;
            let (nx, ny) = parse_grid(&grid)?;
            let spec = GridSpec {
                bbox: d.bbox(),
                nx,
                ny,
            };
            let field = sample(&family, spec, &d)?;
            let chart = winding_per_plaquette(&field);
            let atoms = atoms_from_windings(&chart, Arc::clone(&d))?;
            let output = JacobianOutput::new(&chart, &atoms);
            let out = out.unwrap_or_else(|| PathBuf::from("jacobian.json"));
            write_json(&out, &output)?;
            write_text(&csv_sibling(&out), &chart.to_csv())?;
            println!(
                "jacobian: {} winding cell(s), total {}; wrote {} and {}",
                output.windings.len(),
                output.total_winding,
                out.display(),
                csv_sibling(&out).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Flatnorm {
            domain,
            atoms,
            beta,
            solver,
            out,
        } => {
            let d = load_domain(&domain)?;
            let t = load_atoms(&atoms, &d)?;
            let kind = NormKind::new(beta)?;
            let dec = match solver {
                Solver::Matching => solve_matching(&t, kind)?,
                Solver::Bruteforce => solve_bruteforce(&t, kind)?,
            };
            let report = if (beta - 2.0).abs() <= 1e-12 {
                Some(verify_structure(&dec, &t, t.domain())?)
            } else {
                None
            };
            let output = FlatnormOutput::new(&dec, report.as_ref());
            let out = out.unwrap_or_else(|| PathBuf::from("flatnorm.json"));
            write_json(&out, &output)?;
            println!(
                "flatnorm: value {:.12} (beta {}); wrote {}",
                dec.value,
                beta,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Dual {
            domain,
            atoms,
            grid,
            seed,
            out,
        } => {
            let d = load_domain(&domain)?;
            let t = load_atoms(&atoms, &d)?;
            let (nx, ny) = parse_grid(&grid)?;
            let dec: Decomposition = solve_matching(&t, NormKind::flat_alpha())?;
            let cert = build_certificate(&t, &dec)?;
            let report = verify_duality(&cert, &t, &dec, seed);
            let output = DualOutput::new(&cert, &dec, &report);
            let out = out.unwrap_or_else(|| PathBuf::from("dual.json"));
            write_json(&out, &output)?;
            let grid_csv = cert.sample_on_grid(nx, ny)?.to_csv();
            write_text(&csv_sibling(&out), &grid_csv)?;
            println!(
                "dual: primal {:.12}, gap {:.3e}, certificate {}; wrote {} and {}",
                dec.value,
                report.gap,
                if report.optimal() {
                    "optimal"
                } else {
                    "NOT optimal"
                },
                out.display(),
                csv_sibling(&out).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Area { domain, map, out } => {
            let d = load_domain(&domain)?;
            let family = load_map(&map)?;
            let report = relaxed_area_upper_bound(&family, &d)?;
            let out = out.unwrap_or_else(|| PathBuf::from("area.json"));
            write_json(&out, &report)?;
            let csv = format!(
                "dirichlet_area,singular_term,upper_bound,estimated_rel_error,degraded\n\
                 {:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                report.dirichlet_area,
                report.singular_term,
                report.upper_bound,
                report.quadrature.estimated_rel_error,
                report.quadrature.degraded as u8
            );
            write_text(&csv_sibling(&out), &csv)?;
            println!(
                "area: dirichlet {:.6} + singular {:.6} = {:.6}; wrote {} and {}",
                report.dirichlet_area,
                report.singular_term,
                report.upper_bound,
                out.display(),
                csv_sibling(&out).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Envelope {
            domain,
            map,
            eps,
            out,
        } => {
            if eps.is_nan() || eps <= 0.0 {
                return Err(CliError::schema(format!(
                    "envelope threshold --eps must be positive, got {eps}"
                )));
            }
            let d = load_domain(&domain)?;
            let family = load_map(&map)?;
            let atoms = analytic_jacobian_atoms(&family, Arc::clone(&d))?;
            let report = relaxed_area_upper_bound(&family, &d)?;
            let stages = puncture_stages(&atoms)?;
            let threshold = eps / DET_PREFACTOR + 1e-12;
            let chosen = stages
                .iter()
                .find(|s| s.value <= threshold)
                .expect("final stage is zero");
            let table: Vec<EnvelopeRow> = stages
                .iter()
                .map(|s| EnvelopeRow {
                    prefix_pairs: s.prefix_pairs,
                    punctures: s.punctures.len(),
                    flat_value: s.value,
                    singular_term: DET_PREFACTOR * s.value,
                    upper_bound: report.dirichlet_area + DET_PREFACTOR * s.value,
                })
                .collect();
            let output = EnvelopeOutput {
                eps,
                dirichlet_area: report.dirichlet_area,
                punctures: chosen.punctures.iter().map(|p| [p.x, p.y]).collect(),
                table,
            };
            let out = out.unwrap_or_else(|| PathBuf::from("envelope.json"));
            write_json(&out, &output)?;
            println!(
                "envelope: {} puncture(s) reach singular mass <= {:.3e}; wrote {}",
                output.punctures.len(),
                eps,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { seed, out } => {
            let results = run_all(seed);
            let mut all = true;
            for r in &results {
                println!(
                    "criterion {} ({}): {} [{:.2}s] — {}",
                    r.id,
                    r.name,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.elapsed.as_secs_f64(),
                    r.detail
                );
                all &= r.passed;
            }
            let output = SelftestOutput {
                seed,
                all_passed: all,
                criteria: results
                    .iter()
                    .map(|r| CriterionOut {
                        id: r.id,
                        name: r.name.to_string(),
                        passed: r.passed,
                        detail: r.detail.clone(),
                    })
                    .collect(),
            };
            let out = out.unwrap_or_else(|| PathBuf::from("selftest.json"));
            write_json(&out, &output)?;
            println!(
                "selftest: {}; wrote {}",
                if all { "all passed" } else { "FAILURES" },
                out.display()
            );
            Ok(if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn load_domain(path: &Path) -> CliResult<Arc<Domain>> {
    let text = read_file(path)?;
    let spec: DomainSpec = serde_json::from_str(&text).map_err(|e| {
        CliError::schema(format!("{}: domain schema violation: {e}", path.display()))
    })?;
    Ok(Arc::new(spec.to_domain()?))
}

fn load_map(path: &Path) -> CliResult<MapFamily> {
    let text = read_file(path)?;
    let spec: MapSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::schema(format!("{}: map schema violation: {e}", path.display())))?;
    Ok(spec.to_family()?)
}

/// Atoms come either as CSV (`.csv`) or as a pairs JSON document.
fn load_atoms(path: &Path, d: &Arc<Domain>) -> CliResult<AtomicDistribution> {
    let text = read_file(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let atoms = parse_atoms_csv(&text)
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        Ok(AtomicDistribution::from_signed_atoms(
            &atoms,
            Arc::clone(d),
        )?)
    } else {
        let spec: PairsSpec = serde_json::from_str(&text).map_err(|e| {
            CliError::schema(format!("{}: pairs schema violation: {e}", path.display()))
        })?;
        Ok(spec.to_distribution(Arc::clone(d))?)
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::schema(format!("cannot read {}: {e}", path.display())))
}

fn parse_grid(s: &str) -> CliResult<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::schema(format!("grid must be NxM, got {s:?}")))?;
    let nx = a.trim().parse::<usize>();
    let ny = b.trim().parse::<usize>();
    match (nx, ny) {
        (Ok(nx), Ok(ny)) if nx >= 2 && ny >= 2 => Ok((nx, ny)),
        _ => Err(CliError::schema(format!(
            "grid must be NxM with N, M >= 2, got {s:?}"
        ))),
    }
}

fn csv_sibling(json_path: &Path) -> PathBuf {
    json_path.with_extension("csv")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &jsonout::to_json_string(value))
}

/// Atomic write: temp file in the target directory, then rename.
fn write_text(path: &Path, content: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)
        .map_err(|e| CliError::schema(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::schema(format!("cannot rename onto {}: {e}", path.display())))?;
    Ok(())
}
