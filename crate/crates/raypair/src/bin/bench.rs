//! Benchmark CLI. Runs every selected method on every generated (or
//! loaded) particle set, writes a CSV row per (method, config) and prints a
//! markdown summary.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use raypair::bench::{bench_one, markdown_table, write_csv, BenchConfig, Distribution, Variant, DEFAULT_REPS};
use raypair::render::debug_render;
use raypair::run::Runner;
use raypair::{io as pio, verify};
use raypair_core::engine::{Scene, DEFAULT_EPSILON_RATIO};
use raypair_core::gen::RNG_ALGORITHM;
use raypair_core::{Axis, Kernel, Method, ProblemSpec, Split};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Surface,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Count,
    Record,
    Potential,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Median,
    Morton,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Debug, Parser)]
#[command(name = "bench", about = "Fixed-radius neighbor search benchmark")]
struct Args {
    /// Particle distribution to generate.
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistArg,
    /// Uniform grid resolution(s), N = beta^3 * p.
    #[arg(long, value_delimiter = ',', conflicts_with = "alpha")]
    beta: Vec<u32>,
    /// Surface resolution(s), N = alpha^2 * p.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<u32>,
    /// Particles per cell (uniform) or per surface patch (surface).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    p: Vec<u32>,
    /// Comma-separated methods (sphere, squares, aabb, grid, oracle, each
    /// optionally with a -sorted suffix) or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    #[arg(long, value_enum, default_value = "count")]
    kernel: KernelArg,
    /// Repetitions per (method, config); timings are averaged.
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Morton-sort particles before every build.
    #[arg(long)]
    sort: bool,
    /// BVH split strategy.
    #[arg(long, value_enum, default_value = "median")]
    split: SplitArg,
    /// Check every method's neighbor lists against the brute-force oracle.
    #[arg(long)]
    verify: bool,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compute threads, 0 for one per CPU.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write a PGM depth image of the first sphere or squares scene.
    #[arg(long)]
    render: Option<PathBuf>,
    /// View direction; defaults to x for squares (they face along x) and z
    /// otherwise.
    #[arg(long, value_enum, requires = "render")]
    render_axis: Option<AxisArg>,
    #[arg(long, default_value_t = 512, requires = "render")]
    render_size: usize,
    /// Read particles from a CSV file instead of generating them.
    #[arg(long, requires = "cutoff", conflicts_with_all = ["beta", "alpha", "save"])]
    load: Option<PathBuf>,
    /// Write the generated particles to a CSV file.
    #[arg(long)]
    save: Option<PathBuf>,
    /// Cutoff radius for loaded particles.
    #[arg(long, requires = "load")]
    cutoff: Option<f32>,
    /// Ray-tracing margin for loaded particles; defaults to cutoff * 1e-4.
    #[arg(long, requires = "load")]
    epsilon: Option<f32>,
}

fn configs(args: &Args) -> anyhow::Result<Vec<BenchConfig>> {
    if let Some(path) = &args.load {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let positions = pio::read_particles(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
        let cutoff = args.cutoff.expect("clap enforces --cutoff");
        let epsilon = args.epsilon.unwrap_or(cutoff * DEFAULT_EPSILON_RATIO);
        return Ok(vec![BenchConfig::from_positions(ProblemSpec::new(positions, cutoff).with_epsilon(epsilon))]);
    }
    let (dist, params) = match args.dist {
        DistArg::Uniform => {
            if !args.alpha.is_empty() {
                bail!("--alpha applies to --dist surface");
            }
            (Distribution::Uniform, if args.beta.is_empty() { vec![4] } else { args.beta.clone() })
        }
        DistArg::Surface => (Distribution::Surface, if args.alpha.is_empty() { vec![8] } else { args.alpha.clone() }),
    };
    let mut out = Vec::new();
    for &param in &params {
        for &p in &args.p {
            out.push(BenchConfig::generate(dist, param, p, args.seed)?);
        }
    }
    Ok(out)
}

fn run(args: &Args) -> anyhow::Result<bool> {
    let kernel = match args.kernel {
        KernelArg::Count => Kernel::Count,
        KernelArg::Record => Kernel::Record,
        KernelArg::Potential => Kernel::Potential,
    };
    let split = match args.split {
        SplitArg::Median => Split::Median,
        SplitArg::Morton => Split::Morton,
    };
    let mut variants = Variant::parse_list(&args.methods)?;
    if args.sort {
        let mut sorted: Vec<Variant> = Vec::new();
        for v in variants {
            let v = Variant::new(v.method, true);
            if !sorted.contains(&v) {
                sorted.push(v);
            }
        }
        variants = sorted;
    }
    let configs = configs(args)?;
    if let Some(path) = &args.save {
        let [config] = configs.as_slice() else {
            bail!("--save needs exactly one configuration, got {}", configs.len());
        };
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        pio::write_particles(BufWriter::new(file), &config.spec.positions)?;
    }
    let runner = Runner::new(args.threads)?;
    eprintln!(
        "rng {RNG_ALGORITHM}, seed {}, {} thread(s), kernel {kernel}, {} rep(s)",
        args.seed,
        runner.threads(),
        args.reps
    );

    let mut records = Vec::new();
    let mut ok = true;
    for config in &configs {
        let expected = if args.verify {
            Some(verify::oracle_lists(&runner, config).context("--verify")?)
        } else {
            None
        };
        for &variant in &variants {
            let (record, _) = bench_one(&runner, config, variant, kernel, args.reps, split)?;
            records.push(record);
            if let Some(expected) = &expected {
                if let Some(m) = verify::verify_against(&runner, config, variant, split, expected)? {
                    eprintln!("verify FAILED: {m}");
                    ok = false;
                }
            }
        }
    }

    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(BufWriter::new(file), &records)?;
            print!("{}", markdown_table(&records));
        }
        None => {
            write_csv(io::stdout().lock(), &records)?;
            eprint!("{}", markdown_table(&records));
        }
    }

    if let Some(path) = &args.render {
        render(args, &configs[0], &variants, split, path)?;
    }
    if args.verify && ok {
        eprintln!("verify: all methods match the oracle");
    }
    io::stdout().flush()?;
    Ok(ok)
}

fn render(args: &Args, config: &BenchConfig, variants: &[Variant], split: Split, path: &PathBuf) -> anyhow::Result<()> {
    let variant = variants
        .iter()
        .find(|v| matches!(v.method, Method::Sphere | Method::Squares))
        .copied()
        .unwrap_or(Variant::new(Method::Sphere, false));
    let spec = config.spec_for(variant, split).with_sort(false);
    let scene = Scene::build(variant.method, &spec)?;
    let axis = match (args.render_axis, variant.method) {
        (Some(AxisArg::X), _) | (None, Method::Squares) => Axis::X,
        (Some(AxisArg::Y), _) => Axis::Y,
        (Some(AxisArg::Z), _) | (None, _) => Axis::Z,
    };
    let image = debug_render(&scene, axis, args.render_size)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    image.write_pgm(BufWriter::new(file))?;
    eprintln!("rendered {} scene to {}", variant.method, path.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
