//! `sdp`: command-line front end for sdp-core.
//!
//! Exit codes: 0 success, 1 negative verdict (a witness is printed), 2 usage or
//! parse error, 3 feasibility guard or undecided search, 4 internal fault.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sdp_core::catalog::{
    builtin_catalog, emit_report, emit_witnesses, find_entry, format_catalog, format_ds_line, grouping_factors,
    parse_catalog, parse_ds_file, parse_ds_line, table_report, ClassRow, ReportFormat, TableReport,
};
use sdp_core::design::{develop, matrix_has_sdp, rank_screen, symplectic_matrix, DifferenceSet};
use sdp_core::gf2::{BitMatrix, BitVector};
use sdp_core::group::{as_normal_factor, homomorphisms_to_aut, parse_group_spec, parse_phi};
use sdp_core::iso::{are_isomorphic, classify, IsoOptions, IsoVerdict, IsoWitness, NonIsoReason};
use sdp_core::product::{developments_equal, fixes_ds, grouping_report, product_ds, ProductSpec};
use sdp_core::survey::survey;
use sdp_core::Error;

#[derive(Parser)]
#[command(name = "sdp", version, about = "Difference sets, their designs and the symmetric difference property")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write results into this directory instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Node budget for isomorphism searches.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

/// Sources: a catalog name, `symplectic:<n>` (designs only), an inline
/// `<group> | <words>` line, or a file of `.ds` lines or 0/1 matrix rows.
#[derive(Subcommand)]
enum Command {
    /// Check that every set in the source is a difference set.
    Verify { source: String },
    /// Test the symmetric difference property.
    Sdp {
        source: Option<String>,
        /// Test the symplectic design on 4^n points instead.
        #[arg(long, conflicts_with = "source")]
        symplectic: Option<usize>,
    },
    /// Print the incidence matrix of a development.
    Develop { source: String },
    /// Product difference set of two sets, optionally twisted by `--phi`.
    Product {
        first: String,
        second: String,
        /// Action of the second group on the first, e.g. `z->z^5,w->w`.
        #[arg(long)]
        phi: Option<String>,
    },
    /// List every homomorphism from H into Aut(N).
    EnumHoms { h: String, n: String },
    /// Classify all twisted products of two sets.
    Table { normal: String, acting: String },
    /// Decide whether two designs are isomorphic.
    Iso { first: String, second: String },
    /// Sort designs into isomorphism classes.
    Classify {
        #[arg(required = true)]
        sources: Vec<String>,
    },
    /// Print the symplectic design on 4^n points.
    Symplectic { n: usize },
    /// Inspect the seed catalog or check a catalog file.
    Catalog {
        #[command(subcommand)]
        action: Option<CatalogAction>,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Show { name: String },
    Check { file: PathBuf },
    /// Ordered factorisations of v into catalog groups.
    Groupings { v: usize },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Feasibility(_) => 3,
            Error::Internal(_) => 4,
            // the message names two elements with different counts
            Error::NotDifferenceSet { .. } => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// What a command produced: named outputs and a verdict code.
struct Outcome {
    files: Vec<(String, String)>,
    code: u8,
}

impl Outcome {
    fn ok(name: &str, text: String) -> Self {
        Outcome {
            files: vec![(name.to_string(), text)],
            code: 0,
        }
    }

    fn with_code(mut self, code: u8) -> Self {
        self.code = code;
        self
    }
}

enum Loaded {
    Sets(Vec<DifferenceSet>),
    Matrix(BitMatrix),
}

fn load(source: &str) -> Result<Loaded, Failure> {
    if let Some(n) = source.strip_prefix("symplectic:") {
        let n = n.parse().map_err(|_| usage(format!("bad symplectic order `{n}`")))?;
        return Ok(Loaded::Matrix(symplectic_matrix(n)?));
    }
    if source.contains('|') {
        return Ok(Loaded::Sets(vec![parse_ds_line(source, 1)?]));
    }
    let path = Path::new(source);
    if !path.exists() {
        let catalog = builtin_catalog()?;
        return match find_entry(&catalog, source) {
            Some(e) => Ok(Loaded::Sets(vec![e.difference_set().clone()])),
            None => Err(usage(format!("`{source}` is neither a file nor a catalog name"))),
        };
    }
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{source}: {e}")))?;
    let is_matrix = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.chars().all(|c| c == '0' || c == '1'));
    if is_matrix {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(BitVector::parse)
            .collect::<sdp_core::Result<Vec<_>>>()?;
        Ok(Loaded::Matrix(BitMatrix::from_rows(rows)?))
    } else {
        Ok(Loaded::Sets(parse_ds_file(&text)?))
    }
}

fn load_sets(source: &str) -> Result<Vec<DifferenceSet>, Failure> {
    match load(source)? {
        Loaded::Sets(s) if !s.is_empty() => Ok(s),
        Loaded::Sets(_) => Err(usage(format!("`{source}` holds no difference sets"))),
        Loaded::Matrix(_) => Err(usage(format!("`{source}` is a matrix, a difference set is needed"))),
    }
}

fn load_one_set(source: &str) -> Result<DifferenceSet, Failure> {
    let mut sets = load_sets(source)?;
    if sets.len() != 1 {
        return Err(usage(format!("`{source}` holds {} sets, expected one", sets.len())));
    }
    Ok(sets.remove(0))
}

/// Designs with a label each, and whether all of them are group developments.
fn load_designs(source: &str) -> Result<(Vec<(String, BitMatrix)>, bool), Failure> {
    Ok(match load(source)? {
        Loaded::Matrix(m) => (vec![(source.to_string(), m)], false),
        Loaded::Sets(sets) => (
            sets.iter().map(|d| (format_ds_line(d), develop(d).matrix)).collect(),
            true,
        ),
    })
}

fn matrix_text(m: &BitMatrix) -> String {
    m.row_vectors().iter().map(|r| format!("{r}\n")).collect()
}

fn perm_text(p: &[usize]) -> String {
    p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn witness_text(w: &IsoWitness) -> String {
    format!("rows {}\ncols {}\n", perm_text(&w.row_perm), perm_text(&w.col_perm))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn report_format(f: Format) -> (ReportFormat, &'static str) {
    match f {
        Format::Text => (ReportFormat::Text, "txt"),
        Format::Csv => (ReportFormat::Csv, "csv"),
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let mut opts = IsoOptions::default();
    if let Some(b) = cli.budget {
        opts.budget = b;
    }
    match &cli.command {
        Command::Verify { source } => {
            let sets = match load_sets(source) {
                Err(f) if f.code == 1 => {
                    return Ok(Outcome::ok("verify.txt", format!("{}\n", f.message)).with_code(1));
                }
                other => other?,
            };
            let mut out = String::new();
            for d in &sets {
                let (v, k, l) = d.params();
                writeln!(out, "ok ({v},{k},{l}) {}", format_ds_line(d)).unwrap();
            }
            Ok(Outcome::ok("verify.txt", out))
        }
        Command::Sdp { source, symplectic } => {
            let (label, m) = match (source, symplectic) {
                (_, Some(n)) => (format!("symplectic:{n}"), symplectic_matrix(*n)?),
                (Some(s), None) => {
                    let (mut designs, _) = load_designs(s)?;
                    if designs.len() != 1 {
                        return Err(usage(format!("`{s}` holds {} designs, expected one", designs.len())));
                    }
                    designs.remove(0)
                }
                (None, None) => return Err(usage("give a source or --symplectic <n>")),
            };
            let report = matrix_has_sdp(&m);
            let screen = rank_screen(&m);
            let mut out = format!("design {label}\n2-rank {}\n", screen.rank);
            if let Some(r) = screen.minimal_rank {
                writeln!(out, "minimal rank {r}").unwrap();
            }
            writeln!(out, "sdp {}", yes(report.holds)).unwrap();
            if let Some(w) = &report.witness {
                let (i, j, k) = w.rows;
                writeln!(out, "failing rows {i},{j},{k}\nsum {}", w.sum).unwrap();
            }
            Ok(Outcome::ok("sdp.txt", out).with_code(if report.holds { 0 } else { 1 }))
        }
        Command::Develop { source } => {
            let d = load_one_set(source)?;
            Ok(Outcome::ok("develop.txt", matrix_text(&develop(&d).matrix)))
        }
        Command::Product { first, second, phi } => {
            let (d1, d2) = (load_one_set(first)?, load_one_set(second)?);
            let direct = ProductSpec::direct(&d1, &d2);
            let mut out = String::new();
            match phi {
                None => writeln!(out, "{}", format_ds_line(&product_ds(&direct)?)).unwrap(),
                Some(text) => {
                    let n = as_normal_factor(d1.group());
                    let hom = parse_phi(d2.group(), &n, text, 1, 1)?;
                    let twisted = ProductSpec::twisted(&d1, &d2, hom.clone())?;
                    writeln!(out, "{}", format_ds_line(&product_ds(&twisted)?)).unwrap();
                    writeln!(out, "phi {}", hom.phi_notation()).unwrap();
                    writeln!(out, "fixes first set {}", yes(fixes_ds(&hom, &d1))).unwrap();
                    writeln!(out, "same development as direct {}", yes(developments_equal(&twisted, &direct)?)).unwrap();
                }
            }
            Ok(Outcome::ok("product.txt", out))
        }
        Command::EnumHoms { h, n } => {
            let (h, n) = (parse_group_spec(h)?, parse_group_spec(n)?);
            let homs = homomorphisms_to_aut(&h, &as_normal_factor(&n))?;
            let mut out = String::new();
            for (i, phi) in homs.iter().enumerate() {
                writeln!(out, "{} | {} | {}", i, phi.spec(), phi.phi_notation()).unwrap();
            }
            writeln!(out, "# {} homomorphisms", homs.len()).unwrap();
            Ok(Outcome::ok("homs.txt", out))
        }
        Command::Table { normal, acting } => {
            let (dn, dh) = (load_one_set(normal)?, load_one_set(acting)?);
            opts.block_transitive = true;
            let s = survey(&dn, &dh, &opts)?;
            let header = vec![
                format!("N: {} ({})", format_ds_line(&dn), provenance_of(normal)),
                format!("H: {} ({})", format_ds_line(&dh), provenance_of(acting)),
                format!("designs: {}, classes: {}", s.designs.len(), s.classes.len()),
            ];
            let report = table_report(&s, header);
            let (fmt, ext) = report_format(cli.format);
            let code = if s.is_resolved() { 0 } else { 3 };
            Ok(Outcome {
                files: vec![
                    (format!("table.{ext}"), emit_report(&report, fmt)?),
                    ("witnesses.txt".to_string(), emit_witnesses(&s)),
                ],
                code,
            })
        }
        Command::Iso { first, second } => {
            let (a, ta) = load_designs(first)?;
            let (b, tb) = load_designs(second)?;
            if a.len() != 1 || b.len() != 1 {
                return Err(usage("iso compares exactly one design with one design"));
            }
            opts.block_transitive = ta && tb;
            let (out, code) = match are_isomorphic(&a[0].1, &b[0].1, &opts)? {
                IsoVerdict::Isomorphic(w) => (format!("isomorphic\n{}", witness_text(&w)), 0),
                IsoVerdict::NotIsomorphic(NonIsoReason::Invariant(field)) => {
                    (format!("not isomorphic\ndiffering invariant {field}\n"), 1)
                }
                IsoVerdict::NotIsomorphic(NonIsoReason::SearchExhausted { nodes }) => {
                    (format!("not isomorphic\nsearch exhausted after {nodes} nodes\n"), 1)
                }
                IsoVerdict::Indeterminate { nodes } => (format!("undecided after {nodes} nodes\n"), 3),
            };
            Ok(Outcome::ok("iso.txt", out).with_code(code))
        }
        Command::Classify { sources } => {
            let mut designs = Vec::new();
            let mut transitive = true;
            for s in sources {
                let (d, t) = load_designs(s)?;
                transitive &= t;
                designs.extend(d);
            }
            opts.block_transitive = transitive;
            let matrices: Vec<BitMatrix> = designs.iter().map(|d| d.1.clone()).collect();
            let r = classify(&matrices, &opts)?;
            let report = TableReport {
                header: vec![format!("designs: {}, classes: {}", designs.len(), r.classes.len())],
                rows: r
                    .classes
                    .iter()
                    .enumerate()
                    .map(|(i, c)| ClassRow {
                        class_id: i + 1,
                        size: c.size(),
                        two_rank: c.two_rank(),
                        sdp: matrix_has_sdp(&matrices[c.representative]).holds,
                        representative_hom_spec: designs[c.representative].0.clone(),
                    })
                    .collect(),
                generator_images: Vec::new(),
                unresolved: r.unresolved.len(),
            };
            let mut witnesses = String::from("# rep[i][j] = member[rows[i]][cols[j]]\n");
            for (i, c) in r.classes.iter().enumerate() {
                for (m, w) in &c.witnesses {
                    writeln!(witnesses, "class {} representative {} member {m}", i + 1, c.representative).unwrap();
                    witnesses.push_str(&witness_text(w));
                }
            }
            let (fmt, ext) = report_format(cli.format);
            Ok(Outcome {
                files: vec![(format!("classes.{ext}"), emit_report(&report, fmt)?), ("witnesses.txt".into(), witnesses)],
                code: if r.is_resolved() { 0 } else { 3 },
            })
        }
        Command::Symplectic { n } => Ok(Outcome::ok("symplectic.txt", matrix_text(&symplectic_matrix(*n)?))),
        Command::Catalog { action } => {
            let catalog = builtin_catalog()?;
            match action.as_ref().unwrap_or(&CatalogAction::List) {
                CatalogAction::List => Ok(Outcome::ok("catalog.txt", format_catalog(&catalog))),
                CatalogAction::Show { name } => {
                    let e = find_entry(&catalog, name).ok_or_else(|| usage(format!("no catalog entry `{name}`")))?;
                    let (v, k, l) = e.difference_set().params();
                    let text = format!(
                        "{}\nprovenance {}\nparameters ({v},{k},{l})\nsdp {}\n{}\n",
                        e.name,
                        e.provenance,
                        yes(e.sdp_status),
                        format_ds_line(e.difference_set())
                    );
                    Ok(Outcome::ok("entry.txt", text))
                }
                CatalogAction::Check { file } => {
                    let text = std::fs::read_to_string(file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
                    Ok(Outcome::ok("catalog.txt", format_catalog(&parse_catalog(&text)?)))
                }
                CatalogAction::Groupings { v } => {
                    let r = grouping_report(*v, &grouping_factors(&catalog))?;
                    let mut out = format!("# v = {}, basis: {}\n", r.v, r.basis);
                    for g in &r.groupings {
                        write!(out, "{} | {}", g.factors.join(" x "), if g.producing { "sdp" } else { "blocked" }).unwrap();
                        if !g.blocking.is_empty() {
                            write!(out, " by {}", g.blocking.join(", ")).unwrap();
                        }
                        out.push('\n');
                    }
                    Ok(Outcome::ok("groupings.txt", out))
                }
            }
        }
    }
}

fn provenance_of(source: &str) -> String {
    builtin_catalog()
        .ok()
        .and_then(|c| find_entry(&c, source).map(|e| e.provenance.to_string()))
        .unwrap_or_else(|| "user".to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    match &cli.out {
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                eprintln!("error: {}: {e}", dir.display());
                return ExitCode::from(2);
            }
            for (name, text) in &outcome.files {
                let path = dir.join(name);
                if let Err(e) = std::fs::write(&path, text) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
                println!("{}", path.display());
            }
        }
        // sidecars only go to files
        None => print!("{}", outcome.files[0].1),
    }
    ExitCode::from(outcome.code)
}
