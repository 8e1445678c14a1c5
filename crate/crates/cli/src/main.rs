//! `hypercdc` command-line front end.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hypercdc_core::analytics::{bound_report, baseline_comparison, het_lower_bounds, homo_lower_bound, lattice_permutation_bound};
use hypercdc_core::lattice::{HypercuboidShape, NodeId};
use hypercdc_core::placement::{Placement, PlacementConfig};
use hypercdc_core::rational::{decimal, fraction, int, rat, Rational};
use hypercdc_core::shuffle::ShufflePlan;
use hypercdc_core::simulator::{simulate, verify_only, Fault, SimOptions};
use hypercdc_core::sweep::{run_sweep, to_csv, Preset, SweepSpec, DEFAULT_SIM_LIMIT};

#[derive(Parser)]
#[command(name = "hypercdc", version, about = "Hypercuboid cascaded coded distributed computing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Map, Shuffle and Reduce end to end and report the load.
    Simulate(SimulateArgs),
    /// Closed-form load, baseline and lower bounds for a shape.
    Analyze(AnalyzeArgs),
    /// Emit a figure sweep as CSV.
    Sweep(SweepArgs),
    /// Run the verification checks only, optionally with an injected fault.
    Verify(VerifyArgs),
    /// Replay the four worked examples as a self-test.
    Examples,
}

#[derive(Args, Clone)]
struct ShapeArgs {
    /// Dimension sizes, e.g. 3,3,3.
    #[arg(long, value_delimiter = ',', conflicts_with = "classes", required_unless_present = "classes")]
    dims: Vec<usize>,
    /// Heterogeneity classes as r_p:m_p pairs, e.g. 2:2,1:4.
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Lattice digit order, most significant first, 1-based, e.g. 3,1,2.
    #[arg(long, value_delimiter = ',')]
    axis_order: Vec<usize>,
}

impl ShapeArgs {
    fn shape(&self) -> Result<HypercuboidShape> {
        let shape = if self.classes.is_empty() {
            HypercuboidShape::new(self.dims.clone())?
        } else {
            let classes = self.classes.iter().map(|c| parse_class(c)).collect::<Result<Vec<_>>>()?;
            HypercuboidShape::from_classes(&classes)?
        };
        if self.axis_order.is_empty() {
            return Ok(shape);
        }
        let order = self
            .axis_order
            .iter()
            .map(|&a| a.checked_sub(1).ok_or_else(|| anyhow!("axis order entries are 1-based")))
            .collect::<Result<Vec<_>>>()?;
        Ok(shape.with_axis_order(order)?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 1)]
    eta1: usize,
    #[arg(long, default_value_t = 1)]
    eta2: usize,
    /// Bits per intermediate value, a multiple of 8.
    #[arg(long, default_value_t = 128)]
    iv_bits: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl RunArgs {
    fn config(&self) -> Result<PlacementConfig> {
        let config = PlacementConfig::new(self.shape.shape()?)
            .with_eta(self.eta1, self.eta2)
            .with_iv_bits(self.iv_bits)
            .with_seed(self.seed);
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Skip verification and only count messages.
    #[arg(long)]
    no_verify: bool,
    /// Also write the per-message plan to this file.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Also write the placement dump to this file.
    #[arg(long)]
    placement: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Node order for the permutation bound, e.g. 1,7,6,2,8,5,3,9,4.
    #[arg(long, value_delimiter = ',')]
    permutation: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// fix-k-increase-r, fix-r2-increase-k, het-case1 or het-case2.
    #[arg(long)]
    preset: Preset,
    /// K values: a list (4,8,12) or an inclusive range with step (4..40:4).
    #[arg(long)]
    k: String,
    /// r values for fix-k-increase-r, same syntax as --k.
    #[arg(long)]
    r: Option<String>,
    /// Formula columns only.
    #[arg(long)]
    no_sim: bool,
    /// Largest lattice (X) that is simulated.
    #[arg(long, default_value_t = DEFAULT_SIM_LIMIT)]
    sim_limit: usize,
    #[arg(long, default_value_t = 8)]
    iv_bits: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// drop:N or corrupt:N, N being a 0-based message index in plan order.
    #[arg(long)]
    fault: Option<String>,
}

fn parse_class(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("class {s:?} is not r_p:m_p"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_values(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (lo, hi, step): (usize, usize, usize) = (lo.parse()?, hi.parse()?, step.parse()?);
        if step == 0 {
            bail!("range step must be positive");
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    s.split(',').map(|v| v.trim().parse().with_context(|| format!("bad value {v:?}"))).collect()
}

fn parse_fault(s: &str) -> Result<Fault> {
    let (kind, idx) = s.split_once(':').ok_or_else(|| anyhow!("fault {s:?} is not drop:N or corrupt:N"))?;
    let idx = idx.parse()?;
    match kind {
        "drop" => Ok(Fault::Drop(idx)),
        "corrupt" => Ok(Fault::Corrupt(idx)),
        _ => bail!("unknown fault kind {kind:?}"),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Usage problems map to exit 2, failed checks to exit 1.
enum Failure {
    Usage(anyhow::Error),
    Check(String),
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Usage(e.into())
            }
        }
    )*};
}

usage_from!(
    anyhow::Error,
    hypercdc_core::LatticeError,
    hypercdc_core::PlacementError,
    hypercdc_core::ShuffleError,
    hypercdc_core::SimError,
    hypercdc_core::AnalyticsError
);

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let config = args.run.config()?;
    let rep = simulate(&config, SimOptions { verify: !args.no_verify, fault: None })?;
    if args.plan.is_some() || args.placement.is_some() {
        let placement = Placement::build(config.clone())?;
        if let Some(path) = &args.placement {
            emit(&Some(path.clone()), &placement.export())?;
        }
        if let Some(path) = &args.plan {
            let plan = ShufflePlan::build(&placement, config.seed)?;
            emit(&Some(path.clone()), &plan.dump(&placement))?;
        }
    }
    emit(&args.out, &rep.to_text())?;
    if !rep.passed() {
        let witness = rep.verification.and_then(|v| v.witness).map(|w| w.to_string()).unwrap_or_default();
        return Err(Failure::Check(witness));
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let shape = args.shape.shape()?;
    let perm: Vec<NodeId> = args.permutation.iter().map(|&k| NodeId(k)).collect();
    let rep = bound_report(&shape, (!perm.is_empty()).then_some(perm.as_slice()))?;
    emit(&args.out, &rep.to_text())?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut spec = SweepSpec::new(args.preset, parse_values(&args.k)?);
    if let Some(r) = &args.r {
        spec.r_values = parse_values(r)?;
    } else if args.preset == Preset::FixKIncreaseR {
        return Err(Failure::Usage(anyhow!("fix-k-increase-r needs --r")));
    }
    spec.simulate = !args.no_sim;
    spec.sim_limit = args.sim_limit;
    spec.iv_bits = args.iv_bits;
    spec.seed = args.seed;
    let rows = run_sweep(&spec);
    emit(&args.out, &to_csv(&rows))?;
    let failed = rows
        .iter()
        .filter(|r| r.values.as_ref().is_ok_and(|v| v.verified == Some(false)))
        .count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} sweep points failed verification")));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let config = args.run.config()?;
    let fault = args.fault.as_deref().map(parse_fault).transpose()?;
    let v = verify_only(&config, fault)?;
    let f = v.flags;
    println!("coverage = {}", f.coverage);
    println!("decodability = {}", f.decodability);
    println!("locality = {}", f.locality);
    println!("reduce_agreement = {}", f.reduce_agreement);
    if let Some(w) = &v.witness {
        println!("witness = {w}");
    }
    if v.passed() {
        println!("verification = pass");
        Ok(())
    } else {
        println!("verification = fail");
        Err(Failure::Check("verification failed".into()))
    }
}

fn check(name: &str, ok: bool, detail: String, failures: &mut usize) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

fn units(rep: &hypercdc_core::SimulationReport) -> Vec<Rational> {
    rep.rounds.iter().map(|r| r.units.clone()).collect()
}

fn render(values: &[Rational]) -> String {
    values.iter().map(decimal).collect::<Vec<_>>().join(", ")
}

fn cmd_examples() -> Result<(), Failure> {
    let run = |shape: HypercuboidShape| -> Result<hypercdc_core::SimulationReport> {
        Ok(simulate(&PlacementConfig::new(shape), SimOptions::default())?)
    };
    let mut failures = 0;

    let rep = run(HypercuboidShape::new(vec![2, 2])?)?;
    let l1 = hypercdc_core::analytics::li_baseline(4, 2, 2)?;
    check(
        "example 1 (2x2)",
        rep.passed() && units(&rep) == [int(4), rat(8, 3)] && rep.load == rat(5, 12) && l1 == rat(32, 72) && rep.load < l1,
        format!("rounds [{}], L = {}, L1 = {}", render(&units(&rep)), decimal(&rep.load), decimal(&l1)),
        &mut failures,
    );

    let rep = run(HypercuboidShape::new(vec![3, 3, 3])?.with_axis_order(vec![2, 0, 1])?)?;
    check(
        "example 2 (3x3x3)",
        rep.passed() && units(&rep) == [int(81), int(162), rat(648, 5)] && rep.load == rat(1863, 3645),
        format!("rounds [{}], L = {}", render(&units(&rep)), decimal(&rep.load)),
        &mut failures,
    );

    let rep = run(HypercuboidShape::new(vec![2, 2, 4])?.with_axis_order(vec![1, 2, 0])?)?;
    check(
        "example 3 (2x2x4)",
        rep.passed() && units(&rep) == [int(40), int(56), rat(144, 5)] && rep.load == rat(39, 80),
        format!("rounds [{}], L = {}", render(&units(&rep)), decimal(&rep.load)),
        &mut failures,
    );

    let shape = HypercuboidShape::new(vec![3, 3, 3])?;
    let perm: Vec<NodeId> = [1, 7, 6, 2, 8, 5, 3, 9, 4].map(NodeId).to_vec();
    let pb = lattice_permutation_bound(&shape, &perm)?;
    let homo = homo_lower_bound(3, 3)?;
    check(
        "example 4 (permutation bound)",
        pb.value == rat(287, 729) && homo == pb.value,
        format!("bound = {} ({}), homogeneous = {}", decimal(&pb.value), fraction(&pb.value), decimal(&homo)),
        &mut failures,
    );

    let (p1, p2) = het_lower_bounds(&HypercuboidShape::new(vec![2, 2, 4])?);
    check(
        "heterogeneous bounds (2x2x4)",
        p1 == rat(3, 8) && p2 == rat(101, 256),
        format!("L_P1 = {}, L_P2 = {}", decimal(&p1), decimal(&p2)),
        &mut failures,
    );

    let c = baseline_comparison(4, 2)?;
    check(
        "baseline comparison (K=4, r=2)",
        c.verdict_a == Some(true),
        format!("L_c = {}, L1 = {}", decimal(&c.homogeneous.map(|h| h.load).unwrap_or_default()), decimal(&c.l1)),
        &mut failures,
    );

    if failures > 0 {
        return Err(Failure::Check(format!("{failures} example checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Examples => cmd_examples(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
