//! `nlbd`: validate, evaluate, distill and search nonlocal boxes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nlbd_core::equivalence::{
    build_equivalent_boxes, build_p00_equivalent_boxes, correlator_polynomial, interpolate_qxy, EquivalentBoxes,
};
use nlbd_core::format::{fmt_sig, parse_box_file, write_correlators, write_matrix, write_xor, BoxFile};
use nlbd_core::search::{
    adaptive_search_max, certify, enumerate_nonadaptive_max, enumerate_nonadaptive_max_chsh, exact_nonadaptive_max,
    region_scan, reproduce_tables, write_csv, AllcockMapping, ScanGrid, ScanRange, SearchResult, WiringLabel,
};
use nlbd_core::wirings::{
    apply_adaptive, apply_nonadaptive, or_protocol, parity_protocol, parse_adaptive_hex, AdaptiveTwoCopyProtocol,
};
use nlbd_core::xor_multipartite::{simulate_parity, xor_value};
use nlbd_core::{BipartiteBox, Error, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "nlbd", version, about = "Nonlocal boxes, distillation wirings and exhaustive searches")]
struct Cli {
    /// Worker threads for searches and scans (0: one per core).
    #[arg(long, global = true, env = "NLBD_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a box is a valid no-signalling distribution.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// CHSH value of a bipartite box, or XOR-game value of an xor box.
    Value { file: PathBuf },
    /// Wire several boxes into one.
    Distill {
        /// `parity`, `or`, or `adaptive:<hex>`
        #[arg(long)]
        protocol: String,
        /// Copies of a single box file; defaults to the number of files.
        #[arg(long)]
        copies: Option<usize>,
        /// Write the distilled box here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Exhaustive search for the best wiring of identical copies.
    Search {
        #[arg(long, value_enum)]
        class: SearchKind,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Let output tables depend on the player's input.
        #[arg(long)]
        input_dependent: bool,
        /// Certify with an exact rational search (two players, two copies).
        #[arg(long)]
        exact: bool,
        file: PathBuf,
    },
    /// Evaluate the symmetric family on a grid and write CSV.
    Scan {
        /// a:b:step or a single value
        #[arg(long, allow_hyphen_values = true)]
        alpha: ScanRange,
        #[arg(long, allow_hyphen_values = true)]
        eps: ScanRange,
        /// Defaults to beta = alpha in every cell.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<ScanRange>,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        delta: ScanRange,
        /// Comma-separated contenders (`parity`, `or`, `allcock`).
        #[arg(long, default_value = "parity,or,allcock", value_delimiter = ',')]
        protocols: Vec<WiringLabel>,
        /// Adaptive closed-form parameters: zero, neg-alpha, or a,b,c,d.
        #[arg(long, default_value = "neg-alpha")]
        allcock: AllcockMapping,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute a published table and diff it against the printed values.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        which: u8,
    },
    /// Replace an adaptive two-copy wiring by parity over two boxes.
    Equiv {
        /// Bias at which to print the constructed boxes.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Adaptive wiring as hex; defaults to the BS wiring.
        #[arg(long)]
        proto: Option<String>,
        /// Trivial-marginal boxes matching P(00|xy) only.
        #[arg(long)]
        p00: bool,
        /// Directory for the constructed box files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchKind {
    Nonadaptive,
    Adaptive,
}

/// Maps an error to stderr and an exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidBox(_)
            | Error::InvalidConstructedBox { .. }
            | Error::NoRealFactorization
            | Error::RangeInfeasible { .. } => 1,
            Error::ArityMismatch(_) | Error::UnknownKind(_) => 2,
            Error::Parse { .. } | Error::Io(_) => 3,
            Error::BudgetExceeded { .. } => 4,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("nlbd: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let threads = cli.threads;
    match cli.command {
        Command::Validate { file, tol } => validate(&file, tol),
        Command::Value { file } => value(&file),
        Command::Distill {
            protocol,
            copies,
            out,
            files,
        } => distill(&protocol, copies, out.as_deref(), &files),
        Command::Search {
            class,
            m,
            input_dependent,
            exact,
            file,
        } => search(class, m, input_dependent, exact, &file, threads),
        Command::Scan {
            alpha,
            eps,
            beta,
            delta,
            protocols,
            allcock,
            out,
        } => {
            let grid = ScanGrid { alpha, beta, delta, eps };
            let rows = region_scan(&grid, &protocols, allcock, threads)?;
            match out {
                Some(path) => {
                    let f = fs::File::create(&path).map_err(Error::from)?;
                    write_csv(&rows, f)?;
                    println!("rows={} out={}", rows.len(), path.display());
                }
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Tables { which } => {
            println!("{}", reproduce_tables(which, threads)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Equiv {
            delta,
            proto,
            p00,
            out_dir,
        } => equiv(delta, proto.as_deref(), p00, out_dir.as_deref()),
    }
}

fn read_box(path: &Path) -> Result<BoxFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::from(Error::from(e)))
        .map_err(|f| Failure {
            msg: format!("{}: {}", path.display(), f.msg),
            ..f
        })?;
    parse_box_file(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            msg: format!("{}: {}", path.display(), f.msg),
            ..f
        }
    })
}

fn require_bipartite(file: &BoxFile) -> Result<BipartiteBox, Failure> {
    file.bipartite()
        .ok_or_else(|| usage("this command needs a bipartite box (kind=correlators or kind=matrix)"))
}

fn validate(path: &Path, tol: f64) -> Outcome {
    match read_box(path)? {
        BoxFile::Xor(b) => {
            let bad: Vec<String> = b
                .delta
                .iter()
                .enumerate()
                .filter(|(_, d)| !d.is_finite() || d.abs() > 1.0 + tol)
                .map(|(x, d)| format!("bias {} on input {x} outside [-1, 1]", fmt_sig(*d)))
                .collect();
            if bad.is_empty() {
                println!("valid");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("invalid\n{}", bad.join("\n"));
                Ok(ExitCode::from(1))
            }
        }
        file => {
            let report = require_bipartite(&file)?.validate(tol);
            if report.is_valid() {
                println!("valid");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("invalid\n{report}");
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn value(path: &Path) -> Outcome {
    let v = match read_box(path)? {
        BoxFile::Xor(b) => xor_value(&b),
        file => require_bipartite(&file)?.chsh_value(),
    };
    println!("value={}", fmt_sig(v));
    Ok(ExitCode::SUCCESS)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::from(Error::from(e))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn distill(protocol: &str, copies: Option<usize>, out: Option<&Path>, paths: &[PathBuf]) -> Outcome {
    let files = paths.iter().map(|p| read_box(p)).collect::<Result<Vec<_>, _>>()?;
    let m = match (copies, files.len()) {
        (Some(m), 1) => m,
        (None, k) => k,
        (Some(m), k) if m == k => m,
        (Some(m), k) => return Err(usage(format!("--copies {m} with {k} box files"))),
    };
    if m == 0 {
        return Err(usage("--copies must be at least 1"));
    }

    if let [BoxFile::Xor(b)] = &files[..] {
        if protocol != "parity" {
            return Err(usage("xor boxes support only the parity protocol"));
        }
        let d = simulate_parity(b, m)?;
        emit(&write_xor(&d), out)?;
        println!("value={}", fmt_sig(xor_value(&d)));
        return Ok(ExitCode::SUCCESS);
    }
    let boxes = files
        .iter()
        .map(require_bipartite)
        .collect::<Result<Vec<_>, _>>()?;
    let boxes: Vec<BipartiteBox> = if boxes.len() == 1 { vec![boxes[0]; m] } else { boxes };

    let result = match protocol {
        "parity" => apply_nonadaptive(&boxes, &parity_protocol(2, m))?,
        "or" => {
            if m != 2 {
                return Err(usage("the or protocol wires exactly two boxes"));
            }
            apply_nonadaptive(&boxes, &or_protocol())?
        }
        p => match p.strip_prefix("adaptive:") {
            Some(hex) => {
                if m != 2 {
                    return Err(usage("adaptive wirings use exactly two boxes"));
                }
                let proto = parse_adaptive_hex(hex)?;
                apply_adaptive(&boxes[0], &boxes[1], &proto)?
            }
            None => return Err(usage(format!("unknown protocol `{p}` (parity, or, adaptive:<hex>)"))),
        },
    };
    emit(&write_matrix(&result), out)?;
    println!("value={}", fmt_sig(result.chsh_value()));
    Ok(ExitCode::SUCCESS)
}

fn print_result(r: &SearchResult) {
    println!("class={}", r.class);
    println!("best_value={}", fmt_sig(r.best_value));
    println!("{}", r.best_protocol);
    println!("examined={}", r.examined);
}

fn search(kind: SearchKind, m: usize, input_dependent: bool, exact: bool, path: &Path, threads: usize) -> Outcome {
    let file = read_box(path)?;
    match kind {
        SearchKind::Adaptive => {
            let b = require_bipartite(&file)?;
            print_result(&adaptive_search_max(&b, threads)?);
        }
        SearchKind::Nonadaptive => match &file {
            BoxFile::Xor(b) => {
                if exact {
                    return Err(usage("--exact needs a bipartite box"));
                }
                let r = enumerate_nonadaptive_max(&b.to_multiparty(), &b.game, m, input_dependent, threads)?;
                print_result(&r);
            }
            _ => {
                let b = require_bipartite(&file)?;
                let r = enumerate_nonadaptive_max_chsh(&b, m, input_dependent, threads)?;
                print_result(&r);
                if exact {
                    if m != 2 {
                        return Err(usage("--exact covers two copies"));
                    }
                    let ex = exact_nonadaptive_max(&b, input_dependent)?;
                    let cert = certify(&b, &r, &ex)?;
                    println!("exact_value={}", ex.value);
                    println!("certified={}", cert.certifies(1e-12));
                }
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn equiv(delta: f64, proto: Option<&str>, p00: bool, out_dir: Option<&Path>) -> Outcome {
    if !(0.0..=1.0).contains(&delta) {
        return Err(usage("--delta must lie in [0, 1]"));
    }
    let proto = match proto {
        Some(hex) => parse_adaptive_hex(hex)?,
        None => AdaptiveTwoCopyProtocol::brunner_skrzypczyk(),
    };
    println!("{proto}");
    for xy in 0..4 {
        let r = if p00 {
            interpolate_qxy(&proto, xy)?.affine_map(4.0, -1.0)
        } else {
            correlator_polynomial(&proto, xy)?
        };
        let coeffs: Vec<String> = r.coefficients().iter().map(|c| fmt_sig(*c)).collect();
        println!("xy={:02b} target=[{}]", xy, coeffs.join(", "));
    }
    let eq: EquivalentBoxes = if p00 {
        build_p00_equivalent_boxes(&proto)?
    } else {
        build_equivalent_boxes(&proto)?
    };
    for (xy, factors) in eq.factorization.factors.iter().enumerate() {
        let f: Vec<String> = factors
            .iter()
            .map(|f| {
                let sign = if f.c0 < 0.0 { '-' } else { '+' };
                format!("{}*d {sign} {}", fmt_sig(f.c1), fmt_sig(f.c0.abs()))
            })
            .collect();
        println!("xy={:02b} factors={}", xy, f.join(" ; "));
    }
    println!(
        "certificate distribution={} p00={}",
        fmt_sig(eq.certificate.distribution),
        fmt_sig(eq.certificate.p00)
    );
    for (i, form) in eq.forms_at(delta).iter().enumerate() {
        let text = write_correlators(form);
        match out_dir {
            Some(dir) => {
                let path = dir.join(format!("N{}.box", i + 1));
                fs::write(&path, &text).map_err(|e| Failure::from(Error::from(e)))?;
                println!("wrote {}", path.display());
            }
            None => print!("# N{} at delta={}\n{text}", i + 1, fmt_sig(delta)),
        }
    }
    Ok(ExitCode::SUCCESS)
}
