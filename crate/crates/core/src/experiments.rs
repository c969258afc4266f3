//! Parameter sweeps, defect scans, size scaling, disorder ensembles and the
//! baseline walks the topological walk is compared against.
//!
//! Every job (grid cell, realization, size) is independent. Results are
//! collected in index order, so output never depends on scheduling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    evolve_record, search_time, AngleField, Metric, ProbabilitySeries, DEFAULT_SEARCH_WINDOW,
    DEFAULT_THRESHOLD_FACTOR,
};
use crate::lattice::{compensated_sum, uniform_state, LatticeConfig, SiteIndex};
use crate::spectral::{
    build_step_matrix, check_capacity, eigendecompose, overlap_products, overlap_sum,
    overlap_sum_magnitude, select_trapped_states, state_radius,
};

/// A pair of node angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta1: f64,
    pub theta2: f64,
}

impl Angles {
    pub const fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }
}

/// The defect angles used throughout the localization maps.
pub const REFERENCE_DEFECT: Angles = Angles::new(5.0 * PI / 8.0, PI / 2.0);

/// Inclusive, evenly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        let axis = Self { lo, hi, resolution };
        axis.validate("axis")?;
        Ok(axis)
    }

    /// `[-pi, pi]` with the given number of points.
    pub fn full_turn(resolution: usize) -> Result<Self> {
        Self::new(-PI, PI, resolution)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidParameter(format!(
                "{name} needs at least 2 points, got {}",
                self.resolution
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi <= self.lo {
            return Err(Error::InvalidParameter(format!(
                "{name} range [{}, {}] is empty or not finite",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.resolution {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.resolution - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.resolution).map(|i| self.value(i)).collect()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.resolution - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub size: usize,
    pub steps: usize,
    pub defect: Angles,
    pub theta1: GridAxis,
    pub theta2: GridAxis,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub seed: u64,
}

impl SweepConfig {
    /// 64 x 64 grid over `[-pi, pi]^2` at `L = 40`, `T = 1000`.
    pub fn reference() -> Self {
        Self {
            size: 40,
            steps: 1000,
            defect: REFERENCE_DEFECT,
            theta1: GridAxis::full_turn(64).expect("valid axis"),
            theta2: GridAxis::full_turn(64).expect("valid axis"),
            metric: Metric::SiteDensity,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<LatticeConfig> {
        if self.steps < 1 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        self.theta1.validate("theta1 axis")?;
        self.theta2.validate("theta2 axis")?;
        LatticeConfig::new(self.size)
    }
}

/// Outcome of one evolution from the uniform state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub theta1: f64,
    pub theta2: f64,
    pub max_probability: f64,
    pub argmax: usize,
    pub search_time: Option<usize>,
    /// Job index; also the RNG stream id for jobs that draw randomness.
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Row-major over `(theta1, theta2)` with `theta2` varying fastest.
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &CellResult {
        &self.cells[i * self.config.theta2.resolution + j]
    }

    pub fn peak(&self) -> &CellResult {
        self.cells
            .iter()
            .reduce(|a, b| if b.max_probability > a.max_probability { b } else { a })
            .expect("sweeps have at least four cells")
    }
}

fn run_cell(
    cfg: LatticeConfig,
    walker: Angles,
    defect: Angles,
    steps: usize,
    metric: Metric,
    stream: u64,
) -> Result<CellResult> {
    let angles = AngleField::uniform(cfg, walker.theta1, walker.theta2).with_defect(
        cfg.center(),
        defect.theta1,
        defect.theta2,
    );
    let series = evolve_record(&uniform_state(cfg), steps, &angles, cfg.center(), metric)?;
    Ok(summarize(&series, cfg.sites(), walker, stream))
}

fn summarize(series: &ProbabilitySeries, sites: usize, at: Angles, stream: u64) -> CellResult {
    CellResult {
        theta1: at.theta1,
        theta2: at.theta2,
        max_probability: series.max(),
        argmax: series.argmax(),
        search_time: search_time(
            series,
            DEFAULT_SEARCH_WINDOW,
            DEFAULT_THRESHOLD_FACTOR,
            sites,
        ),
        stream,
    }
}

/// Maximum defect probability over the bulk-angle grid.
pub fn sweep_walker_grid(config: &SweepConfig) -> Result<SweepResult> {
    let cfg = config.validate()?;
    let n2 = config.theta2.resolution;
    let cells = (0..config.theta1.resolution * n2)
        .into_par_iter()
        .map(|c| {
            let walker = Angles::new(config.theta1.value(c / n2), config.theta2.value(c % n2));
            run_cell(cfg, walker, config.defect, config.steps, config.metric, c as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        config: config.clone(),
        cells,
    })
}

/// Maximum defect probability over a grid of defect angles at fixed bulk
/// angles. Cell coordinates are the defect angles.
pub fn sweep_defect_line(
    walker: Angles,
    def_theta1: GridAxis,
    def_theta2: GridAxis,
    size: usize,
    steps: usize,
    metric: Metric,
) -> Result<SweepResult> {
    let config = SweepConfig {
        size,
        steps,
        defect: walker,
        theta1: def_theta1,
        theta2: def_theta2,
        metric,
        seed: 0,
    };
    let cfg = config.validate()?;
    let n2 = def_theta2.resolution;
    let cells = (0..def_theta1.resolution * n2)
        .into_par_iter()
        .map(|c| {
            let defect = Angles::new(def_theta1.value(c / n2), def_theta2.value(c % n2));
            let mut cell = run_cell(cfg, walker, defect, steps, metric, c as u64)?;
            cell.theta1 = defect.theta1;
            cell.theta2 = defect.theta2;
            Ok(cell)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { config, cells })
}

/// Overlap-sum criteria at one defect setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint {
    pub def_theta1: f64,
    pub max_probability: f64,
    /// Coherent `W_M` for the leading pair and the leading two pairs.
    pub coherent_top1: f64,
    pub coherent_top2: f64,
    /// Magnitude form `(sum |<d|n><n|i>|)^2` for the same sets.
    pub magnitude_top1: f64,
    pub magnitude_top2: f64,
}

/// Max probability and overlap criteria along a line of `theta1^def`.
/// Needs a full spectrum per point, so `size` is capped.
pub fn overlap_scan(
    walker: Angles,
    def_theta1: GridAxis,
    def_theta2: f64,
    size: usize,
    steps: usize,
) -> Result<Vec<OverlapPoint>> {
    check_capacity(size)?;
    def_theta1.validate("defect theta1 axis")?;
    let cfg = LatticeConfig::new(size)?;
    let init = uniform_state(cfg);
    // Each decomposition is itself parallel; run points one after another.
    def_theta1
        .values()
        .into_iter()
        .map(|d1| {
            let angles = AngleField::uniform(cfg, walker.theta1, walker.theta2).with_defect(
                cfg.center(),
                d1,
                def_theta2,
            );
            let series = evolve_record(&init, steps, &angles, cfg.center(), Metric::SiteDensity)?;
            let decomp = eigendecompose(&build_step_matrix(&angles)?)?;
            let table = overlap_products(&decomp, cfg.center(), &init)?;
            let ranked = table.ranked_pairs();
            Ok(OverlapPoint {
                def_theta1: d1,
                max_probability: series.max(),
                coherent_top1: overlap_sum(&table, &ranked[..1])?,
                coherent_top2: overlap_sum(&table, &ranked[..2])?,
                magnitude_top1: overlap_sum_magnitude(&table, &ranked[..1])?,
                magnitude_top2: overlap_sum_magnitude(&table, &ranked[..2])?,
            })
        })
        .collect()
}

/// Horizon used for a lattice of linear size `L` in scaling studies:
/// long enough to contain the first peak in both the `sqrt(N)` and the
/// saturated regime.
pub fn default_horizon(size: usize) -> usize {
    (25 * size).max(1000)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub size: usize,
    pub sites: usize,
    pub steps: usize,
    pub search_time: Option<usize>,
    /// Height of the first peak.
    pub first_peak: Option<f64>,
    pub max_probability: f64,
    pub argmax: usize,
}

/// Search time and peak height against system size. `horizon(L)` picks
/// the number of steps for each size.
pub fn size_scaling_study(
    walker: Angles,
    defect: Angles,
    sizes: &[usize],
    horizon: impl Fn(usize) -> usize + Sync,
) -> Result<Vec<ScalingRow>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "sizes must be strictly ascending".into(),
        ));
    }
    sizes
        .par_iter()
        .map(|&size| {
            let cfg = LatticeConfig::new(size)?;
            let steps = horizon(size);
            let angles = AngleField::uniform(cfg, walker.theta1, walker.theta2).with_defect(
                cfg.center(),
                defect.theta1,
                defect.theta2,
            );
            let series = evolve_record(
                &uniform_state(cfg),
                steps,
                &angles,
                cfg.center(),
                Metric::SiteDensity,
            )?;
            let st = search_time(
                &series,
                DEFAULT_SEARCH_WINDOW,
                DEFAULT_THRESHOLD_FACTOR,
                cfg.sites(),
            );
            Ok(ScalingRow {
                size,
                sites: cfg.sites(),
                steps,
                search_time: st,
                first_peak: st.map(|t| series.values[t]),
                max_probability: series.max(),
                argmax: series.argmax(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub size: usize,
    /// `[r80, r95]` of the leading and the second trapped pair.
    pub first: [f64; 2],
    pub second: [f64; 2],
}

/// Radii of the two selected trapped states against system size.
pub fn trapped_radius_study(walker: Angles, defect: Angles, sizes: &[usize]) -> Result<Vec<RadiusRow>> {
    for &s in sizes {
        check_capacity(s)?;
    }
    sizes
        .iter()
        .map(|&size| {
            let cfg = LatticeConfig::new(size)?;
            let angles = AngleField::uniform(cfg, walker.theta1, walker.theta2).with_defect(
                cfg.center(),
                defect.theta1,
                defect.theta2,
            );
            let decomp = eigendecompose(&build_step_matrix(&angles)?)?;
            let table = overlap_products(&decomp, cfg.center(), &uniform_state(cfg))?;
            let set = select_trapped_states(&table)?;
            let radii = |index: usize| {
                let state = decomp.state(index);
                [0.80, 0.95].map(|f| state_radius(&state, cfg.center(), f))
            };
            Ok(RadiusRow {
                size,
                first: radii(set.pairs[0].index),
                second: radii(set.pairs[1].index),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkKind {
    #[default]
    Topological,
    NonTopological,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    /// Half-width of the uniform offset distribution.
    pub theta_dis: f64,
    pub n_configs: usize,
    pub seed: u64,
    #[serde(default)]
    pub walk: WalkKind,
}

impl DisorderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_dis >= 0.0 && self.theta_dis.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "disorder strength must be finite and >= 0, got {}",
                self.theta_dis
            )));
        }
        if self.n_configs == 0 {
            return Err(Error::InvalidParameter(
                "at least one disorder configuration is required".into(),
            ));
        }
        Ok(())
    }
}

/// Random stream for job `index` under a global seed.
pub fn job_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One `(d_theta1, d_theta2)` offset pair per node, uniform in
/// `[-theta_dis, theta_dis]`.
pub fn draw_offsets(rng: &mut impl Rng, sites: usize, theta_dis: f64) -> (Vec<f64>, Vec<f64>) {
    let draw = |rng: &mut _| -> Vec<f64> {
        (0..sites)
            .map(|_| {
                if theta_dis == 0.0 {
                    0.0
                } else {
                    Rng::random_range(rng, -theta_dis..=theta_dis)
                }
            })
            .collect()
    };
    let d1 = draw(rng);
    let d2 = draw(rng);
    (d1, d2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderEnsemble {
    pub config: DisorderConfig,
    pub realizations: Vec<ProbabilitySeries>,
    pub mean: Vec<f64>,
}

impl DisorderEnsemble {
    /// Pointwise standard error of the mean.
    pub fn standard_error(&self) -> Vec<f64> {
        let n = self.realizations.len() as f64;
        if n < 2.0 {
            return vec![0.0; self.mean.len()];
        }
        (0..self.mean.len())
            .map(|t| {
                let var = compensated_sum(
                    self.realizations
                        .iter()
                        .map(|r| (r.values[t] - self.mean[t]).powi(2)),
                ) / (n - 1.0);
                (var / n).sqrt()
            })
            .collect()
    }
}

/// Quenched-disorder realizations of either walk. The defect node never
/// receives an offset. Realization `r` draws from stream `r` of `seed`.
pub fn disorder_ensemble(
    config: &DisorderConfig,
    walker: Angles,
    defect: Angles,
    size: usize,
    steps: usize,
) -> Result<DisorderEnsemble> {
    config.validate()?;
    let cfg = LatticeConfig::new(size)?;
    let realizations = (0..config.n_configs)
        .into_par_iter()
        .map(|r| {
            let mut rng = job_rng(config.seed, r as u64);
            let (d1, d2) = draw_offsets(&mut rng, cfg.sites(), config.theta_dis);
            match config.walk {
                WalkKind::Topological => {
                    let angles = AngleField::uniform(cfg, walker.theta1, walker.theta2)
                        .with_defect(cfg.center(), defect.theta1, defect.theta2)
                        .with_offsets(d1, d2)?;
                    evolve_record(
                        &uniform_state(cfg),
                        steps,
                        &angles,
                        cfg.center(),
                        Metric::SiteDensity,
                    )
                }
                WalkKind::NonTopological => {
                    let walk = SquareWalk::new(cfg, Some(cfg.center()), &d1, &d2)?;
                    Ok(walk.evolve_record(&uniform_state(cfg), steps, cfg.center()))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = (0..=steps)
        .map(|t| {
            compensated_sum(realizations.iter().map(|r| r.values[t]))
                / realizations.len() as f64
        })
        .collect();
    Ok(DisorderEnsemble {
        config: *config,
        realizations,
        mean,
    })
}

type Coin = [[Complex64; 2]; 2];

/// `C_x(d) = [[1, i e^{i d}], [i e^{-i d}, 1]] / sqrt 2`.
pub fn coin_x(delta: f64) -> Coin {
    PhaseCoin::x(delta).matrix()
}

/// `C_y(d) = [[1, -i e^{i d}], [-i e^{-i d}, 1]] / sqrt 2`.
pub fn coin_y(delta: f64) -> Coin {
    PhaseCoin::y(delta).matrix()
}

/// Multiplying by the rounded `1/sqrt 2` grows the norm by ~1.4e-16 per
/// application and dividing by the rounded `sqrt 2` shrinks it by the same
/// amount. `C_x` uses one form and `C_y` the other so a full step has no net
/// drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scaling {
    Multiply,
    Divide,
}

impl Scaling {
    #[inline]
    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Scaling::Multiply => z * std::f64::consts::FRAC_1_SQRT_2,
            Scaling::Divide => z / std::f64::consts::SQRT_2,
        }
    }
}

/// A coin `sign * [[1, upper], [lower, 1]] / sqrt 2` with unit-modulus
/// off-diagonal phases.
#[derive(Debug, Clone, Copy)]
struct PhaseCoin {
    upper: Complex64,
    lower: Complex64,
    sign: f64,
}

impl PhaseCoin {
    fn x(delta: f64) -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self {
            upper: i * Complex64::from_polar(1.0, delta),
            lower: i * Complex64::from_polar(1.0, -delta),
            sign: 1.0,
        }
    }

    fn y(delta: f64) -> Self {
        let Self { upper, lower, .. } = Self::x(delta);
        Self {
            upper: -upper,
            lower: -lower,
            sign: 1.0,
        }
    }

    fn matrix(&self) -> Coin {
        let one = Complex64::new(self.sign, 0.0);
        [[one, self.upper * self.sign], [self.lower * self.sign, one]]
            .map(|row| row.map(|z| Scaling::Multiply.apply(z)))
    }
}

/// Non-topological comparison walk `U = T_y C_y T_x C_x` on an `L x L`
/// square torus. Amplitudes use the same `2 * (x + L y) + spin` layout as
/// [`crate::lattice::SpinorField`]; spin 0 moves to `+1`, spin 1 to `-1`.
/// The marked node applies `-C_x` and `-C_y`.
#[derive(Debug, Clone)]
pub struct SquareWalk {
    config: LatticeConfig,
    cx: Vec<PhaseCoin>,
    cy: Vec<PhaseCoin>,
    /// Target sites of the `+1` and `-1` moves along x and along y.
    moves: [(Vec<usize>, Vec<usize>); 2],
}

impl SquareWalk {
    pub fn new(
        config: LatticeConfig,
        marked: Option<SiteIndex>,
        delta_x: &[f64],
        delta_y: &[f64],
    ) -> Result<Self> {
        let n = config.sites();
        if delta_x.len() != n || delta_y.len() != n {
            return Err(Error::InvalidParameter(format!(
                "coin phases must have {n} entries per direction"
            )));
        }
        let mut cx: Vec<PhaseCoin> = delta_x.iter().map(|&d| PhaseCoin::x(d)).collect();
        let mut cy: Vec<PhaseCoin> = delta_y.iter().map(|&d| PhaseCoin::y(d)).collect();
        if let Some(site) = marked {
            let s = config.linear(site);
            // the marked node is never disordered
            cx[s] = PhaseCoin { sign: -1.0, ..PhaseCoin::x(0.0) };
            cy[s] = PhaseCoin { sign: -1.0, ..PhaseCoin::y(0.0) };
        }
        let moves = [
            (config.shift_table(1, 0), config.shift_table(-1, 0)),
            (config.shift_table(0, 1), config.shift_table(0, -1)),
        ];
        Ok(Self {
            config,
            cx,
            cy,
            moves,
        })
    }

    pub fn clean(config: LatticeConfig, marked: Option<SiteIndex>) -> Self {
        let zeros = vec![0.0; config.sites()];
        Self::new(config, marked, &zeros, &zeros).expect("lengths match")
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    /// `(C_x, C_y)` acting at `site`.
    pub fn coins(&self, site: SiteIndex) -> (Coin, Coin) {
        let s = self.config.linear(site);
        (self.cx[s].matrix(), self.cy[s].matrix())
    }

    /// One step in place.
    pub fn step(&self, state: &mut [Complex64], scratch: &mut [Complex64]) {
        Self::half_step(state, scratch, &self.cx, &self.moves[0], Scaling::Multiply);
        Self::half_step(scratch, state, &self.cy, &self.moves[1], Scaling::Divide);
    }

    /// `out = T C input` with `T` moving spin 0 forward and spin 1 back.
    fn half_step(
        input: &[Complex64],
        out: &mut [Complex64],
        coins: &[PhaseCoin],
        (plus, minus): &(Vec<usize>, Vec<usize>),
        scaling: Scaling,
    ) {
        for (s, c) in coins.iter().enumerate() {
            let (a, b) = (input[2 * s], input[2 * s + 1]);
            out[2 * plus[s]] = scaling.apply((a + c.upper * b) * c.sign);
            out[2 * minus[s] + 1] = scaling.apply((c.lower * a + b) * c.sign);
        }
    }

    /// Site density at `site` for `t = 0..=steps`.
    pub fn evolve_record(
        &self,
        state0: &crate::lattice::SpinorField,
        steps: usize,
        site: SiteIndex,
    ) -> ProbabilitySeries {
        let mut amps = state0.amplitudes().to_vec();
        let mut scratch = amps.clone();
        let i = 2 * self.config.linear(site);
        let mut values = Vec::with_capacity(steps + 1);
        for t in 0..=steps {
            if t > 0 {
                self.step(&mut amps, &mut scratch);
            }
            values.push(amps[i].norm_sqr() + amps[i + 1].norm_sqr());
        }
        ProbabilitySeries {
            values,
            metric: Metric::SiteDensity,
        }
    }
}

/// Classical search success after `t` node checks: `t / N`.
pub fn classical_curve(sites: usize, steps: usize) -> Result<ProbabilitySeries> {
    if sites == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    if steps > sites {
        return Err(Error::InvalidParameter(format!(
            "T = {steps} exceeds N = {sites}; t / N would exceed 1"
        )));
    }
    Ok(ProbabilitySeries {
        values: (0..=steps).map(|t| t as f64 / sites as f64).collect(),
        metric: Metric::SiteDensity,
    })
}
