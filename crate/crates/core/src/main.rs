use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::{json, Value};

use stonespec::algebra::{check_shape_cap, shape_cap, AlgebraShape};
use stonespec::io::{
    e_vector_json, lattice_json, observable_rows_json, parse_lattice_json, parse_operator, parse_quasipoints,
    vector_json, witness_json, write_observable_csv, QuasipointJson, ShapeJson,
};
use stonespec::lattice::{
    enumerate_maximal_dual_ideals, principal_atom_filters, stone_base_check, FiniteLattice, DEFAULT_ENUMERATION_CAP,
};
use stonespec::masa::{e_vector_experiment, random_witness};
use stonespec::matrix::Tolerances;
use stonespec::observable::observable_table;
use stonespec::rng::{unit_vector, SeedStream};
use stonespec::spectrum::{fibre_sample, Quasipoint};
use stonespec::verify::{run_suites, RunConfig, SUITES};
use stonespec::Error;

#[derive(Parser)]
#[command(name = "stonespec", version, about = "Quasipoints, observable functions and Kochen–Specker witnesses for ⊕ M_n(ℂ)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded property suites and write a JSON report.
    Verify {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the observable function of a Hermitian block operator.
    Observable {
        /// Block operator JSON file.
        #[arg(long)]
        operator: PathBuf,
        /// Quasipoint JSON file (one object or an array).
        #[arg(long, conflicts_with = "samples")]
        quasipoints: Option<PathBuf>,
        /// Number of seeded random quasipoints.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Produce a witness against the prime property.
    Witness {
        #[arg(long, value_enum, default_value_t = WitnessMode::Random)]
        mode: WitnessMode,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate the maximal dual ideals of a finite lattice.
    Lattice {
        /// Lattice JSON file.
        input: PathBuf,
        /// Include meet and join tables in the output.
        #[arg(long)]
        tables: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sample the fibres of the spectrum over every center atom.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Number of blocks.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Block size.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per property, or per fibre for `spectrum`.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Override the membership and equality tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WitnessMode {
    EVector,
    Random,
}

/// Exit status with a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooLarge { .. } | Error::ShapeCapExceeded { .. } | Error::ClosureCapExceeded(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Verify { suite, common } => cmd_verify(&suite, &common),
        Command::Observable {
            operator,
            quasipoints,
            samples,
            common,
        } => cmd_observable(&operator, quasipoints.as_ref(), samples, &common),
        Command::Witness { mode, common } => cmd_witness(mode, &common),
        Command::Lattice { input, tables, common } => cmd_lattice(&input, tables, &common),
        Command::Spectrum { common } => cmd_spectrum(&common),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn check_cap(shape: AlgebraShape) -> Result<(), Failure> {
    Ok(check_shape_cap(shape, shape_cap()?)?)
}

impl Common {
    fn shape(&self) -> Result<AlgebraShape, Failure> {
        let shape = AlgebraShape::new(self.m, self.n)?;
        check_cap(shape)?;
        Ok(shape)
    }

    fn tolerances(&self) -> Result<Tolerances, Failure> {
        match self.tol {
            None => Ok(Tolerances::default()),
            Some(t) if t.is_finite() && t > 0.0 => Ok(Tolerances::default().with_tol(t)),
            Some(t) => Err(Failure::input(format!("--tol must be positive, got {t}"))),
        }
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| Failure::input(format!("cannot write output: {e}")))
            }
        }
    }

    fn emit_json(&self, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.emit(&text)
    }

    fn json_only(&self, command: &str) -> Result<(), Failure> {
        if self.format == Some(Format::Csv) {
            return Err(Failure::input(format!("{command} has no CSV output")));
        }
        Ok(())
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn cmd_verify(suite: &str, common: &Common) -> Outcome {
    let config = RunConfig {
        shape: common.shape()?,
        seed: common.seed,
        trials: common.trials,
        tol: common.tolerances()?,
    };
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(Failure::input(format!("unknown suite '{suite}'; expected one of {} or all", SUITES.join(", "))));
    };
    let reports = run_suites(&names, &config)?;
    for r in &reports {
        eprintln!(
            "{}: {} properties, {} failures, {:.2} s",
            r.suite,
            r.properties.len(),
            r.failures(),
            r.duration.as_secs_f64()
        );
    }
    let passed = reports.iter().all(|r| r.passed);
    match common.format(Format::Json) {
        Format::Json => common.emit_json(&json!({"passed": passed, "reports": reports}))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::input(e.to_string());
            w.write_record(["suite", "property", "total", "passed", "failed"]).map_err(csv_err)?;
            for r in &reports {
                for p in &r.properties {
                    w.write_record([
                        r.suite.clone(),
                        p.name.clone(),
                        p.total.to_string(),
                        p.passed.to_string(),
                        p.failed.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Failure::input(e.to_string()))?;
            common.emit(&String::from_utf8(bytes).expect("csv output is UTF-8"))?;
        }
    }
    Ok(passed)
}

fn cmd_observable(operator: &PathBuf, quasipoints: Option<&PathBuf>, samples: Option<usize>, common: &Common) -> Outcome {
    let tol = common.tolerances()?;
    let a = parse_operator(&read(operator)?)?;
    let shape = a.shape();
    check_cap(shape)?;
    let points: Vec<Quasipoint> = match (quasipoints, samples) {
        (Some(path), _) => parse_quasipoints(&read(path)?, shape)?,
        (None, Some(count)) => {
            let mut rng = SeedStream::new(common.seed).split("observable").rng();
            (0..count)
                .map(|_| {
                    let block = rng.random_range(0..shape.m);
                    Quasipoint::new(shape, block, &unit_vector(shape.n, &mut rng))
                })
                .collect::<Result<_, _>>()?
        }
        (None, None) => return Err(Failure::input("observable needs --quasipoints FILE or --samples N")),
    };
    let rows = observable_table(&a, &points, &tol)?;
    match common.format(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_observable_csv(&rows, &mut buf)?;
            common.emit(&String::from_utf8(buf).expect("csv output is UTF-8"))?;
        }
        Format::Json => common.emit_json(&observable_rows_json(&rows))?,
    }
    Ok(true)
}

fn cmd_witness(mode: WitnessMode, common: &Common) -> Outcome {
    common.json_only("witness")?;
    let shape = common.shape()?;
    let tol = common.tolerances()?;
    if shape.n < 2 {
        return Err(Failure::input("n = 1: the algebra is abelian and the prime property holds, so no witness exists"));
    }
    match mode {
        WitnessMode::EVector => {
            let report = e_vector_experiment(shape, &tol)?;
            common.emit_json(&e_vector_json(&report))?;
            Ok(report.certified())
        }
        WitnessMode::Random => {
            let w = random_witness(shape, common.seed, &tol)?;
            let value = witness_json(&w, &tol)?;
            let ok = w.verified() && value["recheck"] == Value::Bool(true);
            common.emit_json(&value)?;
            Ok(ok)
        }
    }
}

fn names(l: &FiniteLattice, elements: &[usize]) -> Vec<String> {
    elements.iter().map(|&i| l.labels()[i].clone()).collect()
}

fn cmd_lattice(input: &PathBuf, tables: bool, common: &Common) -> Outcome {
    common.json_only("lattice")?;
    let dto = parse_lattice_json(&read(input)?)?;
    if dto.elements.len() > DEFAULT_ENUMERATION_CAP {
        return Err(Error::TooLarge {
            size: dto.elements.len(),
            cap: DEFAULT_ENUMERATION_CAP,
        }
        .into());
    }
    let l = FiniteLattice::from_order(dto.elements, dto.leq)?;
    let ideals = enumerate_maximal_dual_ideals(&l, DEFAULT_ENUMERATION_CAP)?;
    let atom_filters = principal_atom_filters(&l);
    let stone = stone_base_check(&l, DEFAULT_ENUMERATION_CAP)?;
    let agree = ideals == atom_filters;
    let mut out = json!({
        "lattice": lattice_json(&l),
        "bottom": l.labels()[l.bottom()],
        "top": l.labels()[l.top()],
        "atoms": names(&l, &l.atoms()),
        "ideals": ideals.iter().map(|d| names(&l, &d.elements)).collect::<Vec<_>>(),
        "atom_correspondence": agree,
        "stone_base": {
            "passed": stone.passed(),
            "bottom_open_empty": stone.bottom_open_empty,
            "top_open_full": stone.top_open_full,
            "pairs_checked": stone.pairs_checked,
            "meet_law_failures": stone.meet_law_failures.len(),
        },
    });
    if tables {
        let table = |t: &[Vec<usize>]| -> Vec<Vec<String>> { t.iter().map(|row| names(&l, row)).collect() };
        out["meet"] = json!(table(l.meet_table()));
        out["join"] = json!(table(l.join_table()));
    }
    common.emit_json(&out)?;
    Ok(agree && stone.passed())
}

fn cmd_spectrum(common: &Common) -> Outcome {
    let shape = common.shape()?;
    if common.trials == 0 {
        return Err(Failure::input("--trials must be at least 1"));
    }
    let fibres = shape
        .atoms()
        .map(|beta| fibre_sample(shape, beta, common.trials, common.seed))
        .collect::<Result<Vec<_>, _>>()?;
    match common.format(Format::Json) {
        Format::Json => {
            let fibres: Vec<Value> = fibres
                .iter()
                .enumerate()
                .map(|(k, qs)| json!({"block": k, "quasipoints": qs.iter().map(QuasipointJson::from).collect::<Vec<_>>()}))
                .collect();
            common.emit_json(&json!({"shape": ShapeJson::from(shape), "fibres": fibres}))?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::input(e.to_string());
            w.write_record(["block", "ray"]).map_err(csv_err)?;
            for q in fibres.iter().flatten() {
                let ray = serde_json::to_string(&vector_json(q.ray())).expect("finite floats serialize");
                w.write_record([q.block().to_string(), ray]).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::input(e.to_string()))?;
            common.emit(&String::from_utf8(bytes).expect("csv output is UTF-8"))?;
        }
    }
    Ok(true)
}
