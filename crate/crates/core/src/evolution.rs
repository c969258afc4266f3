//! Matrix-free evolution of the split-step walk
//! `U = T(v3) R(theta1) T(v2) R(theta2) T(v1) R(theta1)`.
//!
//! The rightmost factor acts first. `R(theta)` is the real spin rotation
//! `[[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]` with a
//! per-site angle; `T(v)` moves spin-up amplitudes by `+v` and spin-down
//! amplitudes by `-v`. In lattice coordinates `v1 = (1, 0)`, `v2 = (0, 1)`
//! and `v3 = (1, -1)`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeConfig, SiteIndex, SpinorField, Spin};

/// Lattice displacements of the three translations.
pub const TRANSLATIONS: [(i64, i64); 3] = [(1, 0), (0, 1), (1, -1)];

/// Sites per parallel work unit in the fused kernel.
const CHUNK_SITES: usize = 8192;

/// Scalar type the kernel can propagate: `f64` for the real step matrix,
/// `Complex64` for states.
pub trait Amplitude:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl Amplitude for f64 {}
impl Amplitude for Complex64 {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub site: SiteIndex,
    pub theta1: f64,
    pub theta2: f64,
}

/// Per-site rotation parameters of the walk.
///
/// The defect node always uses its own angles; quenched offsets are only
/// applied to the other nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleField {
    config: LatticeConfig,
    pub theta1: f64,
    pub theta2: f64,
    pub defect: Option<Defect>,
    offsets: Option<(Vec<f64>, Vec<f64>)>,
}

impl AngleField {
    pub fn uniform(config: LatticeConfig, theta1: f64, theta2: f64) -> Self {
        Self {
            config,
            theta1,
            theta2,
            defect: None,
            offsets: None,
        }
    }

    pub fn with_defect(mut self, site: SiteIndex, theta1: f64, theta2: f64) -> Self {
        self.defect = Some(Defect {
            site,
            theta1,
            theta2,
        });
        self
    }

    /// Attaches quenched offsets `(d_theta1, d_theta2)`, one pair per linear site.
    pub fn with_offsets(mut self, delta1: Vec<f64>, delta2: Vec<f64>) -> Result<Self> {
        let n = self.config.sites();
        if delta1.len() != n || delta2.len() != n {
            return Err(Error::InvalidParameter(format!(
                "disorder offsets must have {n} entries per layer"
            )));
        }
        self.offsets = Some((delta1, delta2));
        Ok(self)
    }

    #[inline]
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn offsets(&self) -> Option<(&[f64], &[f64])> {
        self.offsets.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    /// Effective `(theta1, theta2)` at a linear site index.
    pub fn effective(&self, site: usize) -> (f64, f64) {
        if let Some(d) = &self.defect {
            if self.config.linear(d.site) == site {
                return (d.theta1, d.theta2);
            }
        }
        match &self.offsets {
            Some((d1, d2)) => (self.theta1 + d1[site], self.theta2 + d2[site]),
            None => (self.theta1, self.theta2),
        }
    }

    /// Same field with every angle, including the defect's, shifted.
    pub fn shifted(&self, d_theta1: f64, d_theta2: f64) -> Self {
        let mut out = self.clone();
        out.theta1 += d_theta1;
        out.theta2 += d_theta2;
        if let Some(d) = out.defect.as_mut() {
            d.theta1 += d_theta1;
            d.theta2 += d_theta2;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationLayer {
    Theta1,
    Theta2,
}

/// Probability observable at the defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `|psi_up(d)|^2 + |psi_down(d)|^2`.
    #[default]
    SiteDensity,
    /// `|psi_up(d) + psi_down(d)|^2`.
    CoherentSum,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::SiteDensity => "site-density",
            Metric::CoherentSum => "coherent-sum",
        }
    }

    #[inline]
    pub fn evaluate(&self, up: Complex64, down: Complex64) -> f64 {
        match self {
            Metric::SiteDensity => up.norm_sqr() + down.norm_sqr(),
            Metric::CoherentSum => (up + down).norm_sqr(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "site-density" | "density" => Ok(Metric::SiteDensity),
            "coherent-sum" | "coherent" => Ok(Metric::CoherentSum),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

/// Defect probability sampled at `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySeries {
    pub values: Vec<f64>,
    pub metric: Metric,
}

impl ProbabilitySeries {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Time of the global maximum (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (t, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = t;
            }
        }
        best
    }
}

/// Precomputed rotation coefficients and shift tables for one angle field.
#[derive(Debug, Clone)]
pub struct StepOperator {
    config: LatticeConfig,
    /// `(cos, sin)` of half-angles for the theta1 and theta2 layers.
    rot1: Vec<(f64, f64)>,
    rot2: Vec<(f64, f64)>,
    /// For each translation: source site of the up (`t - v`) and down (`t + v`) components.
    sources: [(Vec<usize>, Vec<usize>); 3],
}

impl StepOperator {
    pub fn new(angles: &AngleField) -> Self {
        let config = *angles.config();
        let n = config.sites();
        let mut rot1 = Vec::with_capacity(n);
        let mut rot2 = Vec::with_capacity(n);
        for s in 0..n {
            let (t1, t2) = angles.effective(s);
            rot1.push(half_angle(t1));
            rot2.push(half_angle(t2));
        }
        let sources = TRANSLATIONS.map(|(dm, dn)| {
            (config.shift_table(-dm, -dn), config.shift_table(dm, dn))
        });
        Self {
            config,
            rot1,
            rot2,
            sources,
        }
    }

    #[inline]
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    /// Applies one full step in place; `scratch` must have the same length.
    pub fn apply<A: Amplitude>(&self, state: &mut [A], scratch: &mut [A]) {
        debug_assert_eq!(state.len(), self.config.dim());
        fused_pass(state, scratch, &self.rot1, &self.sources[0]);
        fused_pass(scratch, state, &self.rot2, &self.sources[1]);
        fused_pass(state, scratch, &self.rot1, &self.sources[2]);
        state.copy_from_slice(scratch);
    }
}

#[inline]
fn half_angle(theta: f64) -> (f64, f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    (c, s)
}

/// `out = T(v) R input`, written in gather form over target sites.
fn fused_pass<A: Amplitude>(
    input: &[A],
    out: &mut [A],
    rot: &[(f64, f64)],
    (up_src, down_src): &(Vec<usize>, Vec<usize>),
) {
    let body = |base: usize, chunk: &mut [A]| {
        for (k, pair) in chunk.chunks_exact_mut(2).enumerate() {
            let t = base + k;
            let su = up_src[t];
            let (c, s) = rot[su];
            pair[0] = input[2 * su] * c - input[2 * su + 1] * s;
            let sd = down_src[t];
            let (c, s) = rot[sd];
            pair[1] = input[2 * sd] * s + input[2 * sd + 1] * c;
        }
    };
    if out.len() <= 2 * CHUNK_SITES {
        body(0, out);
    } else {
        out.par_chunks_mut(2 * CHUNK_SITES)
            .enumerate()
            .for_each(|(i, chunk)| body(i * CHUNK_SITES, chunk));
    }
}

/// Multiplies every site spinor by its rotation for the given layer.
pub fn apply_rotation_layer(
    state: &SpinorField,
    layer: RotationLayer,
    angles: &AngleField,
) -> SpinorField {
    let mut out = state.clone();
    for (s, pair) in out.amplitudes_mut().chunks_exact_mut(2).enumerate() {
        let (t1, t2) = angles.effective(s);
        let theta = match layer {
            RotationLayer::Theta1 => t1,
            RotationLayer::Theta2 => t2,
        };
        let (c, sn) = half_angle(theta);
        let (u, d) = (pair[0], pair[1]);
        pair[0] = u * c - d * sn;
        pair[1] = u * sn + d * c;
    }
    out
}

/// Spin-dependent translation along `v1`, `v2` or `v3` (`which` in `1..=3`).
pub fn apply_translation(state: &SpinorField, which: usize) -> Result<SpinorField> {
    if !(1..=3).contains(&which) {
        return Err(Error::InvalidParameter(format!(
            "translation index must be 1, 2 or 3, got {which}"
        )));
    }
    let (dm, dn) = TRANSLATIONS[which - 1];
    let cfg = *state.config();
    let mut out = SpinorField::zeros(cfg);
    for s in 0..cfg.sites() {
        let p = cfg.from_linear(s);
        let up = cfg.site(p.m as i64 + dm, p.n as i64 + dn);
        let down = cfg.site(p.m as i64 - dm, p.n as i64 - dn);
        out.amplitudes_mut()[cfg.amplitude_index(up, Spin::Up)] = state.amplitudes()[2 * s];
        out.amplitudes_mut()[cfg.amplitude_index(down, Spin::Down)] =
            state.amplitudes()[2 * s + 1];
    }
    Ok(out)
}

/// One walk step `U(Theta1, Theta2)` applied to a state.
pub fn step(state: &SpinorField, angles: &AngleField) -> SpinorField {
    let op = StepOperator::new(angles);
    let mut amps = state.amplitudes().to_vec();
    let mut scratch = amps.clone();
    op.apply(&mut amps, &mut scratch);
    SpinorField::from_amplitudes(*state.config(), amps).expect("length preserved")
}

/// Evolves `state0` for `steps` steps, recording the defect probability at
/// every integer time including `t = 0`.
pub fn evolve_record(
    state0: &SpinorField,
    steps: usize,
    angles: &AngleField,
    defect: SiteIndex,
    metric: Metric,
) -> Result<ProbabilitySeries> {
    let mut series = evolve_sites(state0, steps, angles, &[defect], metric)?;
    Ok(series.pop().expect("one site requested"))
}

/// Like [`evolve_record`] but tracks several sites at once.
pub fn evolve_sites(
    state0: &SpinorField,
    steps: usize,
    angles: &AngleField,
    sites: &[SiteIndex],
    metric: Metric,
) -> Result<Vec<ProbabilitySeries>> {
    if state0.config() != angles.config() {
        return Err(Error::InvalidParameter(
            "state and angle field live on different lattices".into(),
        ));
    }
    let cfg = *state0.config();
    let op = StepOperator::new(angles);
    let idx: Vec<usize> = sites.iter().map(|&s| 2 * cfg.linear(s)).collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); sites.len()];
    let mut amps = state0.amplitudes().to_vec();
    let mut scratch = amps.clone();
    for t in 0..=steps {
        if t > 0 {
            op.apply(&mut amps, &mut scratch);
        }
        for (series, &i) in out.iter_mut().zip(&idx) {
            series.push(metric.evaluate(amps[i], amps[i + 1]));
        }
    }
    Ok(out
        .into_iter()
        .map(|values| ProbabilitySeries { values, metric })
        .collect())
}

/// First time `t` whose value dominates the window `[t - window, t + window]`
/// and exceeds `threshold_factor / n_sites`.
///
/// The window may be clipped at `t = 0`, but a candidate needs `window`
/// samples after it, so the final samples of a rising series never count.
pub fn search_time(
    series: &ProbabilitySeries,
    window: usize,
    threshold_factor: f64,
    n_sites: usize,
) -> Option<usize> {
    assert!(window >= 1, "window must be at least 1");
    assert!(threshold_factor > 0.0, "threshold factor must be positive");
    let v = &series.values;
    let threshold = threshold_factor / n_sites as f64;
    if v.len() <= window {
        return None;
    }
    (0..v.len() - window).find(|&t| {
        let lo = t.saturating_sub(window);
        v[t] >= threshold && v[lo..=t + window].iter().all(|&x| v[t] >= x)
    })
}

pub const DEFAULT_SEARCH_WINDOW: usize = 5;
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 10.0;

/// The first hump of a series: the contiguous run at or above half of the
/// largest value found in `0..=horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lobe {
    pub start: usize,
    pub end: usize,
    pub peak_time: usize,
    pub peak_value: f64,
    /// Probability-weighted mean time over `start..=end`.
    pub centroid: f64,
}

/// Locates the lobe around the maximum within `0..=horizon`.
///
/// The centroid is insensitive to the fast ripples riding on a slow beat,
/// where the argmax can jump between neighbouring ripple crests.
pub fn first_lobe(values: &[f64], horizon: usize) -> Option<Lobe> {
    if values.is_empty() {
        return None;
    }
    let h = horizon.min(values.len() - 1);
    let mut peak = 0;
    for t in 0..=h {
        if values[t] > values[peak] {
            peak = t;
        }
    }
    let half = 0.5 * values[peak];
    let mut start = peak;
    while start > 0 && values[start - 1] >= half {
        start -= 1;
    }
    let mut end = peak;
    while end + 1 < values.len() && values[end + 1] >= half {
        end += 1;
    }
    let window = &values[start..=end];
    let mass: f64 = window.iter().sum();
    let moment: f64 = window
        .iter()
        .enumerate()
        .map(|(k, v)| (start + k) as f64 * v)
        .sum();
    Some(Lobe {
        start,
        end,
        peak_time: peak,
        peak_value: values[peak],
        centroid: if mass > 0.0 { moment / mass } else { peak as f64 },
    })
}

/// Min-max rescaling onto `[0, 1]`. A constant curve maps to zeros.
pub fn normalize_unit(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Width of the region around the global maximum where a sampled curve
/// stays above half of its min-max range, with linear interpolation of the
/// two crossings. Sample positions must be increasing.
pub fn half_max_width(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let u = normalize_unit(y);
    let peak = (0..u.len()).max_by(|&a, &b| u[a].total_cmp(&u[b]))?;
    let crossing = |i: usize, j: usize| x[i] + (x[j] - x[i]) * (u[i] - 0.5) / (u[i] - u[j]);
    let mut left = peak;
    while left > 0 && u[left - 1] >= 0.5 {
        left -= 1;
    }
    let lo = if left == 0 { x[0] } else { crossing(left, left - 1) };
    let mut right = peak;
    while right + 1 < u.len() && u[right + 1] >= 0.5 {
        right += 1;
    }
    let hi = if right + 1 == u.len() { x[right] } else { crossing(right, right + 1) };
    Some(hi - lo)
}
