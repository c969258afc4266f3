use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use topowalk::bloch::{self, Band, MomentumPoint};
use topowalk::evolution::{evolve_record, search_time, AngleField, DEFAULT_SEARCH_WINDOW, DEFAULT_THRESHOLD_FACTOR};
use topowalk::experiments::{
    self, classical_curve, default_horizon, DisorderConfig, SquareWalk, SweepConfig, SweepResult,
};
use topowalk::lattice::{uniform_state, LatticeConfig};
use topowalk::spectral::{self, build_step_matrix, check_capacity, eigendecompose, overlap_products};
use topowalk::{Error, Result};

use crate::config::Params;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    SweepWalker,
    SweepDefect,
    Overlap,
    Scaling,
    Spectrum,
    Dispersion,
    Gapmap,
    Chern,
    Disorder,
    Baseline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::SweepWalker => "sweep-walker",
            Command::SweepDefect => "sweep-defect",
            Command::Overlap => "overlap",
            Command::Scaling => "scaling",
            Command::Spectrum => "spectrum",
            Command::Dispersion => "dispersion",
            Command::Gapmap => "gapmap",
            Command::Chern => "chern",
            Command::Disorder => "disorder",
            Command::Baseline => "baseline",
        }
    }

    /// Leading CSV columns. Only `disorder` appends more, one per realization.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Command::Evolve => &["t", "p_def"],
            Command::SweepWalker => &["theta1", "theta2", "max_probability", "argmax", "search_time", "stream"],
            Command::SweepDefect => &["def_theta1", "def_theta2", "max_probability", "argmax", "search_time", "stream"],
            Command::Overlap => &[
                "def_theta1",
                "max_probability",
                "coherent_top1",
                "coherent_top2",
                "magnitude_top1",
                "magnitude_top2",
            ],
            Command::Scaling => &["L", "N", "steps", "search_time", "first_peak", "max_probability", "max_probability_times_n", "argmax"],
            Command::Spectrum => &["index", "energy", "defect_overlap", "initial_overlap", "product", "pair_index"],
            Command::Dispersion => &["kappa1", "kappa2", "kx", "ky", "energy_upper", "energy_lower"],
            Command::Gapmap => &["theta1", "theta2", "gap0", "gap_pi"],
            Command::Chern => &["theta1", "theta2", "chern_upper", "chern_lower", "gap0", "gap_pi"],
            Command::Disorder => &["t", "mean", "standard_error"],
            Command::Baseline => &["t", "classical", "square_walk"],
        }
    }
}

/// Everything needed to rerun a command and the record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub params: Params,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub started_at_unix: f64,
    pub elapsed_seconds: f64,
    #[serde(default)]
    pub summary: BTreeMap<String, Value>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

struct Output {
    table: Table,
    summary: BTreeMap<String, Value>,
}

impl Output {
    fn new(table: Table) -> Self {
        Self { table, summary: BTreeMap::new() }
    }

    fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

/// Runs `command`, writing `<name>.csv` and `<name>.json` into `out_dir`.
pub fn run_command(command: Command, params: &Params, out_dir: &Path) -> Result<RunManifest> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let mut params = params.clone();
    params.seed = Some(params.seed());

    let output = match command {
        Command::Evolve => evolve(&params)?,
        Command::SweepWalker => sweep_walker(&params)?,
        Command::SweepDefect => sweep_defect(&params)?,
        Command::Overlap => overlap(&params)?,
        Command::Scaling => scaling(&params)?,
        Command::Spectrum => spectrum(&params)?,
        Command::Dispersion => dispersion(&params)?,
        Command::Gapmap => gapmap(&params)?,
        Command::Chern => chern(&params)?,
        Command::Disorder => disorder(&params)?,
        Command::Baseline => baseline(&params)?,
    };

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join(format!("{}.csv", command.name()));
    output.table.write_csv(&csv_path)?;
    let manifest = RunManifest {
        command,
        seed: params.seed(),
        params,
        outputs: vec![csv_path],
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at_unix: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        summary: output.summary,
    };
    manifest.save(&out_dir.join(format!("{}.json", command.name())))?;
    Ok(manifest)
}

fn lattice(params: &Params) -> Result<LatticeConfig> {
    LatticeConfig::new(params.size()?)
}

fn evolve(p: &Params) -> Result<Output> {
    let cfg = lattice(p)?;
    let steps = p.steps()?;
    let walker = p.walker()?;
    let defect = p.defect();
    let angles = AngleField::uniform(cfg, walker.theta1, walker.theta2).with_defect(
        cfg.center(),
        defect.theta1,
        defect.theta2,
    );
    let series = evolve_record(&uniform_state(cfg), steps, &angles, cfg.center(), p.metric())?;
    let mut table = Table::new(Command::Evolve.columns());
    for (t, &v) in series.values.iter().enumerate() {
        table.push(vec![t.into(), v.into()]);
    }
    let mut out = Output::new(table);
    out.note("max_probability", series.max());
    out.note("argmax", series.argmax());
    out.note(
        "search_time",
        search_time(&series, DEFAULT_SEARCH_WINDOW, DEFAULT_THRESHOLD_FACTOR, cfg.sites()),
    );
    Ok(out)
}

fn sweep_table(command: Command, result: &SweepResult) -> Output {
    let mut table = Table::new(command.columns());
    for c in &result.cells {
        table.push(vec![
            c.theta1.into(),
            c.theta2.into(),
            c.max_probability.into(),
            c.argmax.into(),
            c.search_time.into(),
            c.stream.into(),
        ]);
    }
    let peak = result.peak();
    let n = (result.config.size * result.config.size) as f64;
    let mut out = Output::new(table);
    out.note("peak_theta1", peak.theta1);
    out.note("peak_theta2", peak.theta2);
    out.note("peak_probability", peak.max_probability);
    out.note("peak_probability_times_n", peak.max_probability * n);
    out
}

fn sweep_walker(p: &Params) -> Result<Output> {
    let res = p.resolution(64)?;
    let config = SweepConfig {
        size: p.size()?,
        steps: p.steps()?,
        defect: p.defect(),
        theta1: p.axis("theta1_range", res)?,
        theta2: p.axis("theta2_range", res)?,
        metric: p.metric(),
        seed: p.seed(),
    };
    Ok(sweep_table(Command::SweepWalker, &experiments::sweep_walker_grid(&config)?))
}

fn sweep_defect(p: &Params) -> Result<Output> {
    let res = p.resolution(64)?;
    let size = p.size()?;
    let steps = p.steps()?;
    let walker = p.walker()?;
    let result = experiments::sweep_defect_line(
        walker,
        p.axis("def_theta1_range", res)?,
        p.axis("def_theta2_range", res)?,
        size,
        steps,
        p.metric(),
    )?;
    Ok(sweep_table(Command::SweepDefect, &result))
}

fn overlap(p: &Params) -> Result<Output> {
    let size = p.size()?;
    check_capacity(size)?;
    let res = p.resolution(13)?;
    let steps = p.steps()?;
    let walker = p.walker()?;
    let points = experiments::overlap_scan(
        walker,
        p.axis("def_theta1_range", res)?,
        p.defect().theta2,
        size,
        steps,
    )?;
    let mut table = Table::new(Command::Overlap.columns());
    for q in &points {
        table.push(vec![
            q.def_theta1.into(),
            q.max_probability.into(),
            q.coherent_top1.into(),
            q.coherent_top2.into(),
            q.magnitude_top1.into(),
            q.magnitude_top2.into(),
        ]);
    }
    Ok(Output::new(table))
}

fn scaling(p: &Params) -> Result<Output> {
    let sizes = p.sizes()?;
    let walker = p.walker()?;
    let fixed = p.steps.map(|_| p.steps()).transpose()?;
    let rows = experiments::size_scaling_study(walker, p.defect(), &sizes, |l| {
        fixed.unwrap_or_else(|| default_horizon(l))
    })?;
    let mut table = Table::new(Command::Scaling.columns());
    for r in &rows {
        table.push(vec![
            r.size.into(),
            r.sites.into(),
            r.steps.into(),
            r.search_time.into(),
            r.first_peak.into(),
            r.max_probability.into(),
            (r.max_probability * r.sites as f64).into(),
            r.argmax.into(),
        ]);
    }
    Ok(Output::new(table))
}

fn spectrum(p: &Params) -> Result<Output> {
    let size = p.size()?;
    // refuse before building anything
    check_capacity(size)?;
    let cfg = LatticeConfig::new(size)?;
    let walker = p.walker()?;
    let defect = p.defect();
    let angles = AngleField::uniform(cfg, walker.theta1, walker.theta2).with_defect(
        cfg.center(),
        defect.theta1,
        defect.theta2,
    );
    let decomp = eigendecompose(&build_step_matrix(&angles)?)?;
    let table_ = overlap_products(&decomp, cfg.center(), &uniform_state(cfg))?;
    let mut table = Table::new(Command::Spectrum.columns());
    for r in table_.report_rows() {
        table.push(vec![
            r.index.into(),
            r.energy.into(),
            r.defect_overlap.into(),
            r.initial_overlap.into(),
            r.product.into(),
            r.pair_index.into(),
        ]);
    }
    let mut out = Output::new(table);
    let c = table_.completeness_sum();
    out.note("completeness_re", c.re);
    out.note("completeness_im", c.im);
    if let Ok(set) = spectral::select_trapped_states(&table_) {
        out.note("beat_period", spectral::beat_period(&set));
    }
    Ok(out)
}

fn dispersion(p: &Params) -> Result<Output> {
    let walker = p.walker()?;
    let k = p.k_resolution(64, 2)?;
    let mut table = Table::new(Command::Dispersion.columns());
    for i in 0..k {
        for j in 0..k {
            let q = MomentumPoint::on_grid(i, j, k);
            let (kx, ky) = q.cartesian();
            let (up, down) = bloch::quasi_energies(q, walker.theta1, walker.theta2)?;
            table.push(vec![
                q.kappa1().into(),
                q.kappa2().into(),
                kx.into(),
                ky.into(),
                up.into(),
                down.into(),
            ]);
        }
    }
    Ok(Output::new(table))
}

fn gapmap(p: &Params) -> Result<Output> {
    let res = p.resolution(64)?;
    let k = p.k_resolution(bloch::GAP_RESOLUTION, 64)?;
    let t1 = p.axis("theta1_range", res)?.values();
    let t2 = p.axis("theta2_range", res)?.values();
    let map = bloch::gap_map(&t1, &t2, k)?;
    let mut table = Table::new(Command::Gapmap.columns());
    for c in &map.cells {
        table.push(vec![c.theta1.into(), c.theta2.into(), c.gap0.into(), c.gap_pi.into()]);
    }
    Ok(Output::new(table))
}

fn chern(p: &Params) -> Result<Output> {
    let res = p.resolution(17)?;
    let k = p.k_resolution(bloch::CHERN_RESOLUTION, 4)?;
    let t1 = p.axis("theta1_range", res)?.values();
    let t2 = p.axis("theta2_range", res)?.values();
    let mut table = Table::new(Command::Chern.columns());
    let mut undefined = 0usize;
    for &a in &t1 {
        for &b in &t2 {
            // gapless cells stay empty
            let chern = |band| match bloch::chern_number(a, b, band, k) {
                Ok(c) => Ok(Some(c)),
                Err(Error::Gapless(_)) => Ok(None),
                Err(e) => Err(e),
            };
            let up = chern(Band::Upper)?;
            let down = chern(Band::Lower)?;
            undefined += usize::from(up.is_none());
            let gaps = bloch::gap_cell(a, b, k.max(64))?;
            table.push(vec![
                a.into(),
                b.into(),
                up.into(),
                down.into(),
                gaps.gap0.into(),
                gaps.gap_pi.into(),
            ]);
        }
    }
    let mut out = Output::new(table);
    out.note("gapless_cells", undefined);
    Ok(out)
}

fn disorder(p: &Params) -> Result<Output> {
    let size = p.size()?;
    let steps = p.steps()?;
    let walker = p.walker()?;
    let config = DisorderConfig {
        theta_dis: p.theta_dis()?,
        n_configs: p.n_configs()?,
        seed: p.seed(),
        walk: p.walk.unwrap_or_default(),
    };
    let ens = experiments::disorder_ensemble(&config, walker, p.defect(), size, steps)?;
    let se = ens.standard_error();
    let mut header: Vec<String> = Command::Disorder.columns().iter().map(|s| s.to_string()).collect();
    header.extend((0..ens.realizations.len()).map(|r| format!("r{r}")));
    let mut table = Table { header, rows: Vec::new() };
    for t in 0..=steps {
        let mut row = vec![t.into(), ens.mean[t].into(), se[t].into()];
        row.extend(ens.realizations.iter().map(|r| Cell::from(r.values[t])));
        table.push(row);
    }
    let mut out = Output::new(table);
    out.note("mean_peak", ens.mean.iter().copied().fold(0.0, f64::max));
    Ok(out)
}

fn baseline(p: &Params) -> Result<Output> {
    let cfg = lattice(p)?;
    let steps = p.steps()?;
    let classical = classical_curve(cfg.sites(), steps)
        .map_err(|e| Error::config("steps", e.to_string()))?;
    let walk = SquareWalk::clean(cfg, Some(cfg.center()));
    let quantum = walk.evolve_record(&uniform_state(cfg), steps, cfg.center());
    let mut table = Table::new(Command::Baseline.columns());
    for t in 0..=steps {
        table.push(vec![t.into(), classical.values[t].into(), quantum.values[t].into()]);
    }
    let mut out = Output::new(table);
    out.note("square_walk_peak", quantum.max());
    out.note("square_walk_argmax", quantum.argmax());
    Ok(out)
}
