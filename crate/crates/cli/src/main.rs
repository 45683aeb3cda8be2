//! `lions` — enumeration, products, coupled coproducts, canonical forms
//! and verification for the algebra of Lions words and Lions forests.

use clap::{Args, Parser, Subcommand};
use lions_algebra::algebra::{verify_axioms, Axiom, Family, FormalSum};
use lions_algebra::builder::BuilderExpr;
use lions_algebra::calculus::{
    eval_at_target, finite_identity_check, random_moment_poly, schwarz_check, taylor_expand_exact,
    DiscreteCoupling,
};
use lions_algebra::forest::{
    delta_forest, forest_from_json, forest_to_dot, forest_to_json, forest_to_text, LionsForest,
};
use lions_algebra::partition::{couplings, Partition};
use lions_algebra::seq::enumerate_seqs;
use lions_algebra::tag::{base_tags, TagId};
use lions_algebra::{rat, Rat};
use rand::{Rng, SeedableRng};
use std::collections::BTreeSet;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lions",
    about = "Coupled bialgebras of Lions words and Lions forests",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the partition sequences of a fixed length.
    EnumSeq(EnumSeqArgs),
    /// Enumerate the Lions-admissible decorations of a forest shape.
    EnumAdmissible(EnumAdmissibleArgs),
    /// Enumerate couplings of two partitions (or Lions couplings of two
    /// forests).
    Couplings(CouplingsArgs),
    /// Evaluate a builder expression and print the resulting forest.
    Product(ExprArgs),
    /// The coupled coproduct of an evaluated builder expression.
    Coproduct(ExprArgs),
    /// The canonical key of an evaluated builder expression.
    Canon(CanonArgs),
    /// Exhaustively verify algebra and coalgebra laws.
    Verify(VerifyArgs),
    /// Randomised finite-particle Taylor and symmetry checks.
    TaylorCheck(TaylorArgs),
    /// DOT rendering of an evaluated builder expression.
    Dot(DotArgs),
    /// Count sequences, admissible decorations or couplings.
    Count(CountArgs),
}

#[derive(Args)]
struct EnumSeqArgs {
    /// Sequence length.
    #[arg(long)]
    n: usize,
    /// Number of base tags (the tag ids are #0, #1, ...).
    #[arg(long, default_value_t = 0)]
    tags: u32,
}

#[derive(Args)]
struct EnumAdmissibleArgs {
    /// Forest file (JSON document).
    #[arg(long)]
    forest: String,
    /// Keep only decorations whose #0 hyperedge touches a root.
    #[arg(long)]
    root_tagged: bool,
    /// Number of base tag slots.
    #[arg(long, default_value_t = 1)]
    tags: u32,
}

#[derive(Args)]
struct CouplingsArgs {
    /// Left operand: a partition text file, or a forest JSON with --lions.
    #[arg(long)]
    left: String,
    /// Right operand.
    #[arg(long)]
    right: String,
    /// Interpret the files as Lions forests and restrict to Lions
    /// couplings.
    #[arg(long)]
    lions: bool,
}

#[derive(Args)]
struct ExprArgs {
    /// Builder expression over `1`, `[e]_i`, `E(e)`, `Ea{(..)}(..)`, `e * e`.
    #[arg(long)]
    expr: String,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CanonArgs {
    #[arg(long)]
    expr: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Basis family: words or forests.
    #[arg(long)]
    family: String,
    /// Size bound (letters or nodes).
    #[arg(long)]
    max_size: usize,
    /// Comma-separated axioms:
    /// assoc,comm,unit,coassoc,counit,bialgebra,grading.
    #[arg(long)]
    axioms: String,
    /// Alphabet/label count.
    #[arg(long)]
    d: Option<u32>,
    /// Accepted for interface stability; the run is exhaustive and
    /// deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Corrupt the coproduct to demonstrate failure detection.
    #[arg(long)]
    fault_injection: bool,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TaylorArgs {
    /// Maximal polynomial weight.
    #[arg(long, default_value_t = 3)]
    degree: u32,
    /// Number of atoms in the empirical coupling.
    #[arg(long, default_value_t = 3)]
    particles: u32,
    /// Number of random polynomials.
    #[arg(long, default_value_t = 50)]
    trials: u32,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DotArgs {
    #[arg(long)]
    expr: String,
    /// Output file.
    #[arg(short, long)]
    output: String,
}

#[derive(Args)]
struct CountArgs {
    /// What to count: seqs, admissible or couplings.
    #[arg(long)]
    what: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tags: Option<u32>,
    #[arg(long)]
    forest: Option<String>,
    #[arg(long)]
    root_tagged: bool,
    #[arg(long)]
    left: Option<String>,
    #[arg(long)]
    right: Option<String>,
    #[arg(long)]
    lions: bool,
}

fn main() -> ExitCode {
    // Die quietly when the consumer of a pipe goes away.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::EnumSeq(args) => {
            let tags = base_tags(args.tags);
            for a in enumerate_seqs(args.n, &tags) {
                println!("{a}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EnumAdmissible(args) => {
            let forest = load_forest(&args.forest)?;
            for tp in admissible(&forest, args.tags, args.root_tagged) {
                println!("{tp}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Couplings(args) => {
            if args.lions {
                let left = load_forest(&args.left)?;
                let right = load_forest(&args.right)?.shifted_away_from(&left);
                let all = left.lions_couplings(&right).map_err(|e| e.to_string())?;
                for c in all {
                    println!("{}", c.joint());
                }
            } else {
                let left = load_partition(&args.left)?;
                let right = load_partition(&args.right)?;
                let all = couplings(&left, &right).map_err(|e| e.to_string())?;
                for c in all {
                    println!("{}", c.joint());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Product(args) => {
            let forest = eval_expr(&args.expr)?;
            let (canon, _) = forest.canonical();
            if args.json {
                print!("{}", forest_to_json(&canon));
            } else {
                println!("{}", forest_to_text(&canon));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Coproduct(args) => {
            let forest = eval_expr(&args.expr)?;
            let sum = FormalSum::from_basis_list(delta_forest(&forest));
            if args.json {
                let terms: Vec<serde_json::Value> = sum
                    .terms()
                    .iter()
                    .map(|(chain, coeff)| {
                        serde_json::json!({
                            "coefficient": format_rat(coeff),
                            "chain": chain
                                .elems()
                                .iter()
                                .map(forest_to_text)
                                .collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                let doc = serde_json::json!({ "format": 1, "terms": terms });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("serialises")
                );
            } else {
                for (chain, coeff) in sum.terms() {
                    println!("{} * {chain}", format_rat(coeff));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Canon(args) => {
            let forest = eval_expr(&args.expr)?;
            println!("{}", forest.key());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let axioms = args
                .axioms
                .split(',')
                .map(|s| s.trim().parse::<Axiom>())
                .collect::<Result<Vec<_>, _>>()?;
            let family = match args.family.as_str() {
                "words" => Family::Words {
                    d: args.d.unwrap_or(2),
                },
                "forests" => Family::Forests {
                    d: args.d.unwrap_or(1),
                },
                other => return Err(format!("unknown family `{other}`")),
            };
            let _ = args.seed;
            let reports = verify_axioms(family, args.max_size, &axioms, args.fault_injection);
            let all_passed = reports.iter().all(|r| r.passed);
            if args.json {
                let doc = serde_json::json!({ "format": 1, "reports": reports });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("serialises")
                );
            } else {
                for r in &reports {
                    println!(
                        "{}: {} ({} checked, bound {})",
                        r.axiom,
                        if r.passed { "pass" } else { "FAIL" },
                        r.checked,
                        r.max_size
                    );
                    for c in &r.counterexamples {
                        println!("  counterexample: {c}");
                    }
                }
            }
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::TaylorCheck(args) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
            let mut failures = 0u32;
            let mut checked = 0u32;
            for _ in 0..args.trials {
                let f = random_moment_poly(&mut rng, args.degree);
                let n = args.particles.max(1);
                // Finite-particle derivative identity.
                let i = rng.gen_range(1..=n);
                let len = rng.gen_range(0..=3usize);
                let idx: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=n)).collect();
                checked += 1;
                if !finite_identity_check(&f, n, i, &idx).map_err(|e| e.to_string())? {
                    failures += 1;
                    eprintln!("finite identity failed: f={f} i={i} idx={idx:?}");
                }
                // Taylor exactness at full order.
                let atoms: Vec<(Rat, Rat)> = (0..n)
                    .map(|_| {
                        (
                            rat(rng.gen_range(-2..=2), rng.gen_range(1..=2)),
                            rat(rng.gen_range(-2..=2), rng.gen_range(1..=2)),
                        )
                    })
                    .collect();
                let coupling = DiscreteCoupling::new(atoms).expect("non-empty");
                let x0 = rat(rng.gen_range(-2..=2), 1);
                let y0 = rat(rng.gen_range(-2..=2), 1);
                let order = f.poly().weight();
                checked += 1;
                let lhs = taylor_expand_exact(&f, &x0, &y0, &coupling, order)
                    .map_err(|e| e.to_string())?;
                if lhs != eval_at_target(&f, &y0, &coupling) {
                    failures += 1;
                    eprintln!("taylor expansion not exact: f={f}");
                }
                // Symmetry of second derivatives under the swap.
                let a =
                    lions_algebra::seq::PartSeq::from_zero_coded(&[1, 2]).expect("valid sequence");
                checked += 1;
                if !schwarz_check(&f, &a, &[1, 0]).map_err(|e| e.to_string())? {
                    failures += 1;
                    eprintln!("symmetry failed: f={f}");
                }
            }
            println!(
                "taylor-check: {checked} checks, {failures} failures (seed {})",
                args.seed
            );
            Ok(if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Dot(args) => {
            let forest = eval_expr(&args.expr)?;
            let (canon, _) = forest.canonical();
            std::fs::write(&args.output, forest_to_dot(&canon))
                .map_err(|e| format!("cannot write {}: {e}", args.output))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Count(args) => {
            let value = match args.what.as_str() {
                "seqs" => {
                    let n = args.n.ok_or("--n is required for seqs")?;
                    let tags = base_tags(args.tags.unwrap_or(0));
                    enumerate_seqs(n, &tags).len()
                }
                "admissible" => {
                    let file = args.forest.as_ref().ok_or("--forest is required")?;
                    let forest = load_forest(file)?;
                    admissible(&forest, args.tags.unwrap_or(1), args.root_tagged).len()
                }
                "couplings" => {
                    let left = args.left.as_ref().ok_or("--left is required")?;
                    let right = args.right.as_ref().ok_or("--right is required")?;
                    if args.lions {
                        let l = load_forest(left)?;
                        let r = load_forest(right)?.shifted_away_from(&l);
                        l.lions_couplings(&r).map_err(|e| e.to_string())?.len()
                    } else {
                        let l = load_partition(left)?;
                        let r = load_partition(right)?;
                        couplings(&l, &r).map_err(|e| e.to_string())?.len()
                    }
                }
                other => return Err(format!("unknown count target `{other}`")),
            };
            println!("{value}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn eval_expr(text: &str) -> Result<LionsForest, String> {
    let expr = BuilderExpr::parse(text).map_err(|e| e.to_string())?;
    expr.eval().map_err(|e| e.to_string())
}

fn load_forest(path: &str) -> Result<LionsForest, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    forest_from_json(&text).map_err(|e| e.to_string())
}

fn load_partition(path: &str) -> Result<Partition, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    text.trim()
        .parse()
        .map_err(|e: lions_algebra::partition::PartitionError| e.to_string())
}

fn admissible(
    forest: &LionsForest,
    tags: u32,
    root_tagged: bool,
) -> Vec<lions_algebra::partition::TaggedPartition> {
    let tag_ids: BTreeSet<TagId> = base_tags(tags);
    forest
        .enumerate_admissible(&tag_ids)
        .into_iter()
        .filter(|tp| {
            if !root_tagged {
                return true;
            }
            let roots = forest.roots();
            tp.tags()
                .get(&TagId::ZERO)
                .is_some_and(|h0| !h0.is_empty() && !h0.is_disjoint(&roots))
        })
        .collect()
}

fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renames a forest's nodes away from another's so their grounds are
/// disjoint for coupling enumeration.
trait ShiftAway {
    fn shifted_away_from(self, other: &LionsForest) -> LionsForest;
}

impl ShiftAway for LionsForest {
    fn shifted_away_from(self, other: &LionsForest) -> LionsForest {
        let offset = other.nodes().iter().next_back().map_or(0, |&m| m + 1);
        let our_min = self.nodes().iter().next().copied().unwrap_or(0);
        if our_min > offset {
            return self;
        }
        let max = self.nodes().iter().next_back().map_or(0, |&m| m + 1);
        let parent = self
            .parent_map()
            .iter()
            .map(|(&c, &p)| (c + offset + max, p + offset + max))
            .collect();
        let labels = self
            .labels()
            .iter()
            .map(|(&x, &l)| (x + offset + max, l))
            .collect();
        let tags = self
            .tags()
            .iter()
            .map(|(t, s)| (t.clone(), s.iter().map(|&x| x + offset + max).collect()))
            .collect();
        let blocks = self
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&x| x + offset + max).collect())
            .collect();
        LionsForest::new(parent, labels, tags, blocks).expect("renaming preserves validity")
    }
}
