//! Random-instance sampling for the worst-case and expected plan length bounds.
//!
//! Every sample gets its own seed, `base_seed + i` for the `i`-th sample in
//! `(n, k, sample)` order, so any row can be regenerated on its own with
//! [`sample_instance`]. Pebbles and targets are each drawn without
//! replacement; the per-tree mean distance counts ordered pairs drawn with
//! replacement.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::compute_demands;
use crate::error::{ExperimentError, InstanceError};
use crate::instance::{random_instance, random_path_instance, Instance};
use crate::tree::{NodeId, RootedTree, Tree};
use crate::upmt::{NullSink, UpmtSolver};

pub const CSV_VERSION: u32 = 1;
pub const CSV_COLUMNS: &str = "n,k,seed,opt,bound_worst,bound_expected,d_estimate,runtime_ms";
pub const MIN_CHECK_SAMPLES: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeDistribution {
    Uniform,
    Path,
}

impl TreeDistribution {
    pub fn name(self) -> &'static str {
        match self {
            TreeDistribution::Uniform => "uniform",
            TreeDistribution::Path => "path",
        }
    }

    /// Asymptotic mean distance used by the distribution-specific bound column.
    pub fn mean_distance(self, n: usize) -> f64 {
        match self {
            TreeDistribution::Uniform => (PI * n as f64 / 2.0).sqrt(),
            TreeDistribution::Path => (n as f64 - 1.0) / 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KStrategy {
    /// Explicit values of `k`.
    Fixed(Vec<usize>),
    /// `k = floor(fraction * n)`.
    Fraction(f64),
    /// `k = 1, 1 + step, ...` up to `n - 1`.
    Sweep { step: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: TreeDistribution,
    pub n: Vec<usize>,
    pub k: KStrategy,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Fill the runtime column. Off by default so output is reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.cells()?;
        Ok(cfg)
    }

    /// All `(n, k)` cells in output order.
    pub fn cells(&self) -> Result<Vec<(usize, usize)>, ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.n.is_empty() {
            return bad("n schedule is empty".into());
        }
        let mut cells = Vec::new();
        for &n in &self.n {
            if n == 0 {
                return bad("n must be positive".into());
            }
            match &self.k {
                KStrategy::Fixed(ks) => {
                    if ks.is_empty() {
                        return bad("k list is empty".into());
                    }
                    for &k in ks {
                        if k > n {
                            return bad(format!("k = {k} exceeds n = {n}"));
                        }
                        cells.push((n, k));
                    }
                }
                KStrategy::Fraction(f) => {
                    if !(0.0..=1.0).contains(f) {
                        return bad(format!("fraction {f} outside [0, 1]"));
                    }
                    cells.push((n, (f * n as f64).floor() as usize));
                }
                KStrategy::Sweep { step } => {
                    if *step == 0 {
                        return bad("sweep step must be positive".into());
                    }
                    cells.extend((1..n).step_by(*step).map(|k| (n, k)));
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub opt: u64,
    pub bound_worst: u128,
    pub bound_expected: f64,
    /// Mean distance of the sampled tree.
    pub d_estimate: f64,
    pub runtime_ms: Option<f64>,
}

impl ExperimentRow {
    pub fn to_csv_line(&self) -> String {
        let runtime = self.runtime_ms.map(sig6).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.seed,
            self.opt,
            self.bound_worst,
            sig6(self.bound_expected),
            sig6(self.d_estimate),
            runtime
        )
    }
}

/// Six significant digits in scientific notation.
pub fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

/// Exact mean distance between two nodes drawn uniformly and independently.
pub fn average_distance(tree: &Tree, root: NodeId) -> Ratio<u128> {
    let rooted = RootedTree::new(tree, root).expect("root is a node of the tree");
    average_distance_rooted(&rooted)
}

fn average_distance_rooted(rooted: &RootedTree) -> Ratio<u128> {
    let n = rooted.node_count() as u128;
    let sizes = rooted.subtree_sizes();
    let total: u128 = rooted
        .order()
        .iter()
        .filter(|&&u| u != rooted.root())
        .map(|&u| {
            let s = sizes[u] as u128;
            2 * s * (n - s)
        })
        .sum();
    Ratio::new(total, n * n)
}

pub fn ratio_to_f64(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn worst_case_bound(n: usize, k: usize) -> u128 {
    k as u128 * (n - k) as u128
}

pub fn sample_instance(dist: TreeDistribution, n: usize, k: usize, seed: u64) -> Result<Instance, InstanceError> {
    match dist {
        TreeDistribution::Uniform => random_instance(n, k, seed),
        TreeDistribution::Path => random_path_instance(n, k, seed),
    }
}

fn run_sample(cfg: &ExperimentConfig, n: usize, k: usize, seed: u64) -> Result<ExperimentRow, ExperimentError> {
    let start = Instant::now();
    let inst = sample_instance(cfg.distribution, n, k, seed)?;
    let rooted = RootedTree::new(inst.tree(), 0).map_err(InstanceError::from)?;
    let opt = compute_demands(&rooted, &inst).lower_bound();
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let bound_worst = worst_case_bound(n, k);
    assert!(opt as u128 <= bound_worst, "OPT {opt} exceeds k(n-k) = {bound_worst} at seed {seed}");
    Ok(ExperimentRow {
        n,
        k,
        seed,
        opt,
        bound_worst,
        bound_expected: (bound_worst as f64 * cfg.distribution.mean_distance(n)).sqrt(),
        d_estimate: ratio_to_f64(average_distance_rooted(&rooted)),
        runtime_ms: cfg.timing.then_some(elapsed),
    })
}

/// Samples every cell in parallel; rows come back in `(n, k, sample)` order.
pub fn run_opt_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let jobs: Vec<(usize, usize, u64)> = cfg
        .cells()?
        .into_iter()
        .flat_map(|(n, k)| std::iter::repeat((n, k)).take(cfg.samples))
        .enumerate()
        .map(|(i, (n, k))| (n, k, cfg.seed.wrapping_add(i as u64)))
        .collect();
    jobs.into_par_iter().map(|(n, k, seed)| run_sample(cfg, n, k, seed)).collect()
}

pub fn rows_to_csv(cfg: &ExperimentConfig, rows: &[ExperimentRow]) -> String {
    let mut out = format!(
        "# pebbletree experiment v{CSV_VERSION} distribution={} samples={} seed={}\n{CSV_COLUMNS}\n",
        cfg.distribution.name(),
        cfg.samples,
        cfg.seed
    );
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Runs the experiment and writes the CSV to `cfg.output` when set.
pub fn run_to_csv(cfg: &ExperimentConfig) -> Result<String, ExperimentError> {
    let csv = rows_to_csv(cfg, &run_opt_experiment(cfg)?);
    if let Some(path) = &cfg.output {
        std::fs::write(path, &csv)?;
    }
    Ok(csv)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub mean_opt: f64,
    pub std_error: f64,
    /// Mean over samples of the per-tree mean distance.
    pub mean_d: f64,
    /// `sqrt(mean_d * k(n-k))`.
    pub bound: f64,
    /// Same bound with the distribution's asymptotic mean distance.
    pub asymptotic_bound: f64,
    pub pass: bool,
}

impl CellSummary {
    pub fn to_line(&self) -> String {
        format!(
            "n={} k={} samples={} mean_opt={} se={} mean_d={} bound={} asymptotic_bound={} {}",
            self.n,
            self.k,
            self.samples,
            sig6(self.mean_opt),
            sig6(self.std_error),
            sig6(self.mean_d),
            sig6(self.bound),
            sig6(self.asymptotic_bound),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Per cell: passes when the mean of OPT is at most `sqrt(D k(n-k))` plus
/// three standard errors, with `D` the sampled mean distance.
pub fn check_expected_bound(cfg: &ExperimentConfig) -> Result<Vec<CellSummary>, ExperimentError> {
    if cfg.samples < MIN_CHECK_SAMPLES {
        return Err(ExperimentError::InsufficientSamples {
            min: MIN_CHECK_SAMPLES,
            got: cfg.samples,
        });
    }
    let rows = run_opt_experiment(cfg)?;
    Ok(rows.chunks(cfg.samples).map(|cell| summarize(cfg.distribution, cell)).collect())
}

fn summarize(dist: TreeDistribution, cell: &[ExperimentRow]) -> CellSummary {
    let (n, k) = (cell[0].n, cell[0].k);
    let m = cell.len() as f64;
    let mean_opt = cell.iter().map(|r| r.opt as f64).sum::<f64>() / m;
    let var = cell.iter().map(|r| (r.opt as f64 - mean_opt).powi(2)).sum::<f64>() / (m - 1.0);
    let std_error = (var / m).sqrt();
    let mean_d = cell.iter().map(|r| r.d_estimate).sum::<f64>() / m;
    let kk = worst_case_bound(n, k) as f64;
    let bound = (mean_d * kk).sqrt();
    CellSummary {
        n,
        k,
        samples: cell.len(),
        mean_opt,
        std_error,
        mean_d,
        bound,
        asymptotic_bound: (kk * dist.mean_distance(n)).sqrt(),
        pass: mean_opt <= bound + 3.0 * std_error,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub opt: u64,
    pub generate_ms: f64,
    pub certificate_ms: f64,
    pub solve_ms: f64,
}

impl BenchRow {
    pub fn to_line(&self) -> String {
        format!(
            "n={} k={} opt={} generate_ms={:.1} certificate_ms={:.1} solve_ms={:.1}",
            self.n, self.k, self.opt, self.generate_ms, self.certificate_ms, self.solve_ms
        )
    }
}

/// Times the demand certificate (rooting plus the solver's own demand pass)
/// and a full plan emitted into a counting sink.
pub fn bench_upmt(n: usize, k: usize, seed: u64) -> Result<BenchRow, ExperimentError> {
    let t0 = Instant::now();
    let inst = random_instance(n, k, seed)?;
    let t1 = Instant::now();
    let rooted = RootedTree::new(inst.tree(), 0).map_err(InstanceError::from)?;
    let mut solver = UpmtSolver::new(&rooted);
    solver.load(inst.pebbles(), inst.targets())?;
    let opt = solver.lower_bound();
    let t2 = Instant::now();
    let mut sink = NullSink::default();
    solver.run(&mut sink)?;
    let t3 = Instant::now();
    assert_eq!(sink.count, opt, "plan length differs from the certificate");
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(BenchRow {
        n,
        k,
        opt,
        generate_ms: ms(t0, t1),
        certificate_ms: ms(t1, t2),
        solve_ms: ms(t2, t3),
    })
}

/// Human-readable table of summaries.
pub fn render_summaries(cells: &[CellSummary]) -> String {
    let mut s = String::new();
    for c in cells {
        let _ = writeln!(s, "{}", c.to_line());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::distances_from;
    use crate::tree::{path_tree, random_labeled_tree};

    fn brute_mean_distance(tree: &Tree) -> Ratio<u128> {
        let n = tree.node_count();
        let total: usize = (0..n).map(|u| distances_from(tree, u).iter().sum::<usize>()).sum();
        Ratio::new(total as u128, (n * n) as u128)
    }

    fn cfg(dist: TreeDistribution, n: Vec<usize>, k: KStrategy, samples: usize) -> ExperimentConfig {
        ExperimentConfig {
            distribution: dist,
            n,
            k,
            samples,
            seed: 7,
            output: None,
            timing: false,
        }
    }

    #[test]
    fn average_distance_examples() {
        assert_eq!(average_distance(&path_tree(2).unwrap(), 0), Ratio::new(1, 2));
        let star = Tree::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(average_distance(&star, 0), Ratio::new(9, 8));
        assert_eq!(average_distance(&star, 2), Ratio::new(9, 8));
        assert_eq!(average_distance(&path_tree(1).unwrap(), 0), Ratio::new(0, 1));
    }

    #[test]
    fn average_distance_matches_all_pairs() {
        for n in [2, 3, 5, 17, 64, 200] {
            let path = path_tree(n).unwrap();
            assert_eq!(average_distance(&path, 0), brute_mean_distance(&path));
            // ordered pairs with replacement: (n^2 - 1) / (3n)
            assert_eq!(average_distance(&path, n / 2), Ratio::new((n * n - 1) as u128, 3 * n as u128));
            for seed in 0..3 {
                let t = random_labeled_tree(n, seed).unwrap();
                assert_eq!(average_distance(&t, 0), brute_mean_distance(&t));
            }
        }
    }

    #[test]
    fn sig6_format() {
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.5), "5.00000e-1");
        assert_eq!(sig6(0.0), "0.00000e0");
    }

    #[test]
    fn cell_schedules() {
        let c = cfg(TreeDistribution::Path, vec![5, 10], KStrategy::Sweep { step: 2 }, 1);
        assert_eq!(c.cells().unwrap(), vec![(5, 1), (5, 3), (10, 1), (10, 3), (10, 5), (10, 7), (10, 9)]);
        let c = cfg(TreeDistribution::Uniform, vec![10], KStrategy::Fraction(0.25), 1);
        assert_eq!(c.cells().unwrap(), vec![(10, 2)]);
        let c = cfg(TreeDistribution::Uniform, vec![10], KStrategy::Fixed(vec![11]), 1);
        assert!(matches!(c.cells(), Err(ExperimentError::Config(_))));
        let c = cfg(TreeDistribution::Uniform, vec![10], KStrategy::Fixed(vec![1]), 0);
        assert!(c.cells().is_err());
    }

    #[test]
    fn config_json() {
        let text = r#"{"distribution":"uniform","n":[100,200],"k":{"fraction":0.1},"samples":3,"seed":1}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.k, KStrategy::Fraction(0.1));
        assert!(!c.timing);
        let text = r#"{"distribution":"path","n":[50],"k":{"sweep":{"step":5}},"samples":3,"seed":1}"#;
        assert_eq!(ExperimentConfig::from_json(text).unwrap().cells().unwrap().len(), 10);
        let text = r#"{"distribution":"path","n":[50],"k":{"fixed":[60]},"samples":3,"seed":1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        assert!(ExperimentConfig::from_json("{}").is_err());
    }

    #[test]
    fn rows_are_reproducible() {
        let c = cfg(TreeDistribution::Uniform, vec![50, 80], KStrategy::Fixed(vec![0, 5, 40]), 4);
        let rows = run_opt_experiment(&c).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 4);
        assert_eq!(rows_to_csv(&c, &rows), rows_to_csv(&c, &run_opt_experiment(&c).unwrap()));
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.seed, 7 + i as u64);
            assert!(r.opt as u128 <= r.bound_worst);
            let inst = random_instance(r.n, r.k, r.seed).unwrap();
            assert_eq!(r.opt, crate::demand::optimal_length(&inst, 0).unwrap());
            if r.k == 0 {
                assert_eq!(r.opt, 0);
            }
        }
        let csv = rows_to_csv(&c, &rows);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("# pebbletree experiment v1"));
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS);
        assert!(lines.next().unwrap().ends_with(','));
    }

    #[test]
    fn timing_fills_runtime_column() {
        let mut c = cfg(TreeDistribution::Path, vec![20], KStrategy::Fixed(vec![3]), 1);
        c.timing = true;
        let rows = run_opt_experiment(&c).unwrap();
        assert!(rows[0].runtime_ms.is_some());
        assert!(!rows[0].to_csv_line().ends_with(','));
    }

    #[test]
    fn path_single_pebble_mean_tracks_distance() {
        let c = cfg(TreeDistribution::Path, vec![1000], KStrategy::Fixed(vec![1]), 200);
        let s = &check_expected_bound(&c).unwrap()[0];
        assert!(s.pass);
        assert!((s.mean_opt - s.mean_d).abs() <= 3.0 * s.std_error, "{}", s.to_line());
    }

    #[test]
    fn full_occupancy_has_zero_bound() {
        let c = cfg(TreeDistribution::Uniform, vec![40], KStrategy::Fixed(vec![40]), 30);
        let s = &check_expected_bound(&c).unwrap()[0];
        assert_eq!((s.mean_opt, s.bound), (0.0, 0.0));
        assert!(s.pass);
    }

    #[test]
    fn check_needs_samples() {
        let c = cfg(TreeDistribution::Uniform, vec![40], KStrategy::Fixed(vec![4]), 29);
        assert!(matches!(
            check_expected_bound(&c),
            Err(ExperimentError::InsufficientSamples { min: 30, got: 29 })
        ));
    }

    #[test]
    fn bench_counts_moves() {
        let b = bench_upmt(2000, 200, 3).unwrap();
        assert_eq!(b.opt, crate::demand::optimal_length(&random_instance(2000, 200, 3).unwrap(), 0).unwrap());
    }
}
