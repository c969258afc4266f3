//! Triangular-lattice geometry, spinor state storage and torus metrics.
//!
//! Sites are labelled by integer coefficients `(m, n)` of the basis vectors
//! `a1 = (1, 0)` and `a2 = (1/2, sqrt(3)/2)`, always reduced modulo `L`.
//! Amplitudes are stored site-major: index `2 * site + spin`, with
//! `site = m + L * n`. The dense step matrix uses the same basis order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical embedding of the lattice basis.
pub const A1: [f64; 2] = [1.0, 0.0];
pub const A2: [f64; 2] = [0.5, 0.866_025_403_784_438_6];
pub const A3: [f64; 2] = [0.5, -0.866_025_403_784_438_6];

/// Periodic `L x L` triangular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeConfig {
    size: usize,
}

impl LatticeConfig {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParameter(format!(
                "lattice size L must be at least 2, got {size}"
            )));
        }
        Ok(Self { size })
    }

    /// Linear size `L`.
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of sites `N = L^2`.
    #[inline]
    pub fn sites(&self) -> usize {
        self.size * self.size
    }

    /// Number of amplitudes `2N`.
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.sites()
    }

    /// Wraps arbitrary integer coordinates onto the torus.
    pub fn site(&self, m: i64, n: i64) -> SiteIndex {
        let l = self.size as i64;
        SiteIndex {
            m: m.rem_euclid(l) as usize,
            n: n.rem_euclid(l) as usize,
        }
    }

    #[inline]
    pub fn linear(&self, site: SiteIndex) -> usize {
        site.m + self.size * site.n
    }

    #[inline]
    pub fn from_linear(&self, index: usize) -> SiteIndex {
        SiteIndex {
            m: index % self.size,
            n: index / self.size,
        }
    }

    /// Amplitude index of `(site, spin)`.
    #[inline]
    pub fn amplitude_index(&self, site: SiteIndex, spin: Spin) -> usize {
        2 * self.linear(site) + spin as usize
    }

    pub fn from_amplitude_index(&self, index: usize) -> (SiteIndex, Spin) {
        let spin = if index % 2 == 0 { Spin::Up } else { Spin::Down };
        (self.from_linear(index / 2), spin)
    }

    /// Default defect position `(floor(L/2), floor(L/2))`.
    pub fn center(&self) -> SiteIndex {
        SiteIndex {
            m: self.size / 2,
            n: self.size / 2,
        }
    }

    /// Table mapping each linear site to the linear site displaced by `(dm, dn)`.
    pub fn shift_table(&self, dm: i64, dn: i64) -> Vec<usize> {
        (0..self.sites())
            .map(|s| {
                let p = self.from_linear(s);
                self.linear(self.site(p.m as i64 + dm, p.n as i64 + dn))
            })
            .collect()
    }
}

/// Lattice coordinates `(m, n)` in units of `a1`, `a2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteIndex {
    pub m: usize,
    pub n: usize,
}

impl SiteIndex {
    pub const fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up = 0,
    Down = 1,
}

/// Physical position `m * a1 + n * a2`.
pub fn position(m: f64, n: f64) -> [f64; 2] {
    [m * A1[0] + n * A2[0], m * A1[1] + n * A2[1]]
}

/// Euclidean distance between the closest periodic images of two sites.
pub fn torus_distance(a: SiteIndex, b: SiteIndex, config: &LatticeConfig) -> f64 {
    let l = config.size() as i64;
    let dm = a.m as i64 - b.m as i64;
    let dn = a.n as i64 - b.n as i64;
    let mut best = f64::INFINITY;
    for im in -1..=1 {
        for jn in -1..=1 {
            let [x, y] = position((dm + im * l) as f64, (dn + jn * l) as f64);
            best = best.min(x.hypot(y));
        }
    }
    best
}

/// Walker wavefunction: one complex amplitude per `(site, spin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    config: LatticeConfig,
    amplitudes: Vec<Complex64>,
}

impl SpinorField {
    pub fn zeros(config: LatticeConfig) -> Self {
        Self {
            config,
            amplitudes: vec![Complex64::new(0.0, 0.0); config.dim()],
        }
    }

    pub fn from_amplitudes(config: LatticeConfig, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != config.dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes for L = {}, got {}",
                config.dim(),
                config.size(),
                amplitudes.len()
            )));
        }
        Ok(Self { config, amplitudes })
    }

    /// Normalized state localized on a single `(site, spin)`.
    pub fn delta(config: LatticeConfig, site: SiteIndex, spin: Spin) -> Self {
        let mut state = Self::zeros(config);
        state.amplitudes[config.amplitude_index(site, spin)] = Complex64::new(1.0, 0.0);
        state
    }

    #[inline]
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, site: SiteIndex, spin: Spin) -> Complex64 {
        self.amplitudes[self.config.amplitude_index(site, spin)]
    }

    /// Total probability, accumulated with compensated summation.
    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amplitudes.iter().map(|a| a.norm_sqr()))
    }

    pub fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
    }

    /// Per-site densities `|psi_up|^2 + |psi_down|^2`, indexed by linear site.
    pub fn densities(&self) -> Vec<f64> {
        self.amplitudes
            .chunks_exact(2)
            .map(|c| c[0].norm_sqr() + c[1].norm_sqr())
            .collect()
    }
}

/// Neumaier summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// The uniform superposition `1/sqrt(2N) sum |x, sigma>`.
pub fn uniform_state(config: LatticeConfig) -> SpinorField {
    let value = Complex64::new(1.0 / (config.dim() as f64).sqrt(), 0.0);
    SpinorField {
        config,
        amplitudes: vec![value; config.dim()],
    }
}

/// Total probability on `site`, summed over both spin components.
pub fn site_density(state: &SpinorField, site: SiteIndex) -> f64 {
    state.amplitude(site, Spin::Up).norm_sqr() + state.amplitude(site, Spin::Down).norm_sqr()
}
