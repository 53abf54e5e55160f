//! Benchmark matrix: method variants × workloads × repetitions, with CSV
//! and markdown output.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use raypair_core::gen::{gen_surface, gen_uniform, SurfaceConfig, UniformConfig};
use raypair_core::{Kernel, Method, ProblemSpec, Split};

use crate::run::{millis, NeighborResult, Runner, Timing};
use crate::{BenchError, Result};

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "distribution",
    "param",
    "p",
    "N",
    "seed",
    "build_ms",
    "compute_ms",
    "checksum",
    "pairs",
];

pub const DEFAULT_REPS: usize = 5;

/// A method plus whether particles are Morton sorted before the build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub method: Method,
    pub sort: bool,
}

impl Variant {
    pub const fn new(method: Method, sort: bool) -> Self {
        Self { method, sort }
    }

    /// The variants selected by `--methods all`.
    pub const ALL: [Variant; 5] = [
        Variant::new(Method::Sphere, false),
        Variant::new(Method::Squares, false),
        Variant::new(Method::CustomAabb, false),
        Variant::new(Method::CustomAabb, true),
        Variant::new(Method::Grid, false),
    ];

    /// Parses a comma-separated list, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Variant>> {
        if s.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut out: Vec<Variant> = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let v: Variant = item.parse()?;
            if !out.contains(&v) {
                out.push(v);
            }
        }
        if out.is_empty() {
            return Err(BenchError::Format("no methods selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sort {
            write!(f, "{}-sorted", self.method)
        } else {
            f.write_str(self.method.name())
        }
    }
}

impl FromStr for Variant {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, sort) = match s.strip_suffix("-sorted") {
            Some(base) => (base, true),
            None => (s, false),
        };
        let method = name
            .parse::<Method>()
            .map_err(|_| BenchError::Format(format!("unknown method {s:?}")))?;
        Ok(Self { method, sort })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    Uniform,
    Surface,
    /// Particles loaded from a file.
    File,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Surface => "surface",
            Distribution::File => "file",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A particle set with the labels that go into its CSV rows.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub distribution: Distribution,
    /// β for uniform, α for surface, 0 for files.
    pub param: u32,
    pub p: u32,
    pub seed: u64,
    pub spec: ProblemSpec,
}

impl BenchConfig {
    pub fn generate(distribution: Distribution, param: u32, p: u32, seed: u64) -> Result<Self> {
        let workload = match distribution {
            Distribution::Uniform => gen_uniform(&UniformConfig { beta: param, p, seed })?,
            Distribution::Surface => gen_surface(&SurfaceConfig { alpha: param, p, seed })?,
            Distribution::File => {
                return Err(BenchError::Format("file workloads are loaded, not generated".into()))
            }
        };
        Ok(Self {
            distribution,
            param,
            p,
            seed,
            spec: workload.to_spec(),
        })
    }

    pub fn from_positions(spec: ProblemSpec) -> Self {
        Self {
            distribution: Distribution::File,
            param: 0,
            p: 0,
            seed: 0,
            spec,
        }
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    pub fn spec_for(&self, variant: Variant, split: Split) -> ProblemSpec {
        self.spec.clone().with_sort(variant.sort).with_split(split)
    }
}

/// One CSV row: a variant on a config, timed over all repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub variant: Variant,
    pub distribution: Distribution,
    pub param: u32,
    pub p: u32,
    pub n: usize,
    pub seed: u64,
    pub build: Timing,
    pub compute: Timing,
    /// Sum of per-target neighbor counts.
    pub checksum: u64,
    /// Unordered neighbor pairs, `checksum / 2`.
    pub pairs: u64,
}

/// Runs `variant` on `config` `reps` times. Returns the row and the result
/// of the last repetition.
pub fn bench_one(
    runner: &Runner,
    config: &BenchConfig,
    variant: Variant,
    kernel: Kernel,
    reps: usize,
    split: Split,
) -> Result<(BenchRecord, NeighborResult)> {
    if reps == 0 {
        return Err(BenchError::Format("--reps must be at least 1".into()));
    }
    let spec = config.spec_for(variant, split);
    let mut builds = Vec::with_capacity(reps);
    let mut computes = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let r = runner.run(variant.method, &spec, kernel)?;
        builds.push(r.build_time);
        computes.push(r.compute_time);
        if let Some(prev) = &last {
            let prev: &NeighborResult = prev;
            if prev.pair_visits != r.pair_visits {
                return Err(BenchError::Format(format!("{variant}: neighbor count changed between repetitions")));
            }
        }
        last = Some(r);
    }
    let last = last.expect("reps >= 1");
    let record = BenchRecord {
        variant,
        distribution: config.distribution,
        param: config.param,
        p: config.p,
        n: config.len(),
        seed: config.seed,
        build: Timing::from_samples(&builds),
        compute: Timing::from_samples(&computes),
        checksum: last.pair_visits,
        pairs: last.pair_visits / 2,
    };
    Ok((record, last))
}

/// Writes the header and one row per record. Timing columns hold the mean
/// over repetitions.
pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.variant.to_string(),
            r.distribution.to_string(),
            r.param.to_string(),
            r.p.to_string(),
            r.n.to_string(),
            r.seed.to_string(),
            format!("{:.3}", millis(r.build.mean)),
            format!("{:.3}", millis(r.compute.mean)),
            r.checksum.to_string(),
            r.pairs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn same_config(a: &BenchRecord, b: &BenchRecord) -> bool {
    (a.distribution, a.param, a.p, a.n, a.seed) == (b.distribution, b.param, b.p, b.n, b.seed)
}

fn speedup(grid_ms: Option<f64>, ms: f64) -> String {
    match grid_ms {
        Some(g) if ms > 0.0 => format!("{:.2}x", g / ms),
        _ => "-".into(),
    }
}

/// Markdown table of mean timings. Speedups are GRID time over method time
/// on the same config, so values above 1 mean faster than GRID.
pub fn markdown_table(records: &[BenchRecord]) -> String {
    let mut s = String::new();
    s.push_str("| method | distribution | param | p | N | build ms | compute ms | build vs grid | compute vs grid | pairs |\n");
    s.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in records {
        let grid = records
            .iter()
            .find(|g| g.variant == Variant::new(Method::Grid, false) && same_config(g, r));
        let (b, c) = (millis(r.build.mean), millis(r.compute.mean));
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {:.3} | {:.3} | {} | {} | {} |",
            r.variant,
            r.distribution,
            r.param,
            r.p,
            r.n,
            b,
            c,
            speedup(grid.map(|g| millis(g.build.mean)), b),
            speedup(grid.map(|g| millis(g.compute.mean)), c),
            r.pairs,
        );
    }
    s
}
