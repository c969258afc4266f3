//! Momentum-space picture of the defect-free walk.
//!
//! A plane wave with reduced momenta `kappa_i = k . a_i` turns each
//! translation into `diag(e^{i kappa}, e^{-i kappa})`, with
//! `kappa3 = kappa1 - kappa2`. The closed-form trace coefficient is written in
//! terms of `k_x = 2 kappa1` and `k_y = kappa2`, which makes `Tr U(k) = -b`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat2 = [[Complex64; 2]; 2];

/// Default plaquette grid for Chern numbers.
pub const CHERN_RESOLUTION: usize = 64;
/// Default momentum grid for gap maps.
pub const GAP_RESOLUTION: usize = 256;
/// Minimum gap (at 0 and at pi) for a well-defined band invariant.
pub const CHERN_GAP_THRESHOLD: f64 = 1e-3;

const TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumPoint {
    kappa1: f64,
    kappa2: f64,
}

impl MomentumPoint {
    pub fn new(kappa1: f64, kappa2: f64) -> Self {
        Self {
            kappa1: kappa1.rem_euclid(TAU),
            kappa2: kappa2.rem_euclid(TAU),
        }
    }

    /// Grid point `(2 pi i / res, 2 pi j / res)`.
    pub fn on_grid(i: usize, j: usize, res: usize) -> Self {
        Self::new(TAU * i as f64 / res as f64, TAU * j as f64 / res as f64)
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    /// `(k_x, k_y) = (2 kappa1, kappa2)`.
    pub fn cartesian(&self) -> (f64, f64) {
        (2.0 * self.kappa1, self.kappa2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub energy: f64,
    pub eigenvector: [Complex64; 2],
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn rotation(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn translation(kappa: f64) -> Mat2 {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, kappa), zero],
        [zero, Complex64::from_polar(1.0, -kappa)],
    ]
}

/// `U(k) = T(kappa3) R(theta1) T(kappa2) R(theta2) T(kappa1) R(theta1)`.
pub fn bloch_matrix(k: MomentumPoint, theta1: f64, theta2: f64) -> Mat2 {
    let r1 = rotation(theta1);
    let mut u = mul(&translation(k.kappa1), &r1);
    u = mul(&rotation(theta2), &u);
    u = mul(&translation(k.kappa2), &u);
    u = mul(&r1, &u);
    mul(&translation(k.kappa1 - k.kappa2), &u)
}

/// Real part of the trace of [`bloch_matrix`], without forming the product.
///
/// The imaginary part vanishes identically because the walk is real.
fn bloch_trace(k: MomentumPoint, theta1: f64, theta2: f64) -> f64 {
    let (kx, ky) = k.cartesian();
    -trace_coefficient(kx, ky, theta1, theta2)
}

/// Closed-form coefficient `b` of the characteristic polynomial
/// `lambda^2 + b lambda + 1`.
pub fn trace_coefficient(kx: f64, ky: f64, theta1: f64, theta2: f64) -> f64 {
    let (s1, c1) = (0.5 * theta1).sin_cos();
    let (s2, c2) = (0.5 * theta2).sin_cos();
    2.0 * c2 * (s1 * s1 * (2.0 * ky).cos() - c1 * c1 * kx.cos())
        + theta1.sin() * s2 * ((kx - 2.0 * ky).cos() + 1.0)
}

/// `(+E, -E)` with `E = arccos(Tr U / 2)` in `[0, pi]`.
pub fn quasi_energies(k: MomentumPoint, theta1: f64, theta2: f64) -> Result<(f64, f64)> {
    let u = bloch_matrix(k, theta1, theta2);
    let e = energy_from_trace((u[0][0] + u[1][1]).re)?;
    Ok((e, -e))
}

fn energy_from_trace(trace: f64) -> Result<f64> {
    let half = 0.5 * trace;
    if half.abs() > 1.0 + TRACE_TOL {
        return Err(Error::Numerical(format!(
            "|Tr U| / 2 = {} exceeds 1; the Bloch matrix is not unitary",
            half.abs()
        )));
    }
    Ok(half.clamp(-1.0, 1.0).acos())
}

/// Both bands at `k`, upper band (`E > 0`) first.
pub fn band_points(k: MomentumPoint, theta1: f64, theta2: f64) -> Result<[BandPoint; 2]> {
    let u = bloch_matrix(k, theta1, theta2);
    let e = energy_from_trace((u[0][0] + u[1][1]).re)?;
    Ok([e, -e].map(|energy| BandPoint {
        energy,
        eigenvector: eigenvector(&u, Complex64::from_polar(1.0, energy)),
    }))
}

/// Normalized null vector of `U - lambda`, picking the better conditioned row.
fn eigenvector(u: &Mat2, lambda: Complex64) -> [Complex64; 2] {
    let a = [u[0][1], lambda - u[0][0]];
    let b = [lambda - u[1][1], u[1][0]];
    let na = a[0].norm_sqr() + a[1].norm_sqr();
    let nb = b[0].norm_sqr() + b[1].norm_sqr();
    let (v, n) = if na >= nb { (a, na) } else { (b, nb) };
    if n < 1e-28 {
        // U is proportional to the identity: any vector works.
        return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    }
    let n = n.sqrt();
    [v[0] / n, v[1] / n]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCell {
    pub theta1: f64,
    pub theta2: f64,
    /// `2 min_k |E(k)|`.
    pub gap0: f64,
    /// `2 min_k (pi - |E(k)|)`.
    pub gap_pi: f64,
    /// `2 max_k |E(k)|`.
    pub max0: f64,
    /// `2 max_k (pi - |E(k)|)`.
    pub max_pi: f64,
}

/// Gap values over a `(theta1, theta2)` grid, `theta2` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapMap {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub k_resolution: usize,
    pub cells: Vec<GapCell>,
}

impl GapMap {
    pub fn cell(&self, i: usize, j: usize) -> &GapCell {
        &self.cells[i * self.theta2.len() + j]
    }
}

/// Gaps of the clean walk at one parameter point.
pub fn gap_cell(theta1: f64, theta2: f64, k_resolution: usize) -> Result<GapCell> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k_resolution {
        for j in 0..k_resolution {
            let k = MomentumPoint::on_grid(i, j, k_resolution);
            let e = energy_from_trace(bloch_trace(k, theta1, theta2))?;
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    Ok(GapCell {
        theta1,
        theta2,
        gap0: 2.0 * lo,
        gap_pi: 2.0 * (PI - hi),
        max0: 2.0 * hi,
        max_pi: 2.0 * (PI - lo),
    })
}

pub fn gap_map(theta1: &[f64], theta2: &[f64], k_resolution: usize) -> Result<GapMap> {
    if k_resolution < 64 {
        return Err(Error::InvalidParameter(format!(
            "gap maps need at least 64 momenta per axis, got {k_resolution}"
        )));
    }
    let cells = (0..theta1.len() * theta2.len())
        .into_par_iter()
        .map(|c| {
            gap_cell(
                theta1[c / theta2.len()],
                theta2[c % theta2.len()],
                k_resolution,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapMap {
        theta1: theta1.to_vec(),
        theta2: theta2.to_vec(),
        k_resolution,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Band {
    /// `E in (0, pi)`.
    Upper,
    Lower,
}

/// Chern number of one band by plaquette field strength on a
/// `resolution x resolution` momentum grid.
///
/// Every step displaces the walker by an even number of lattice units along
/// both basis vectors, so `U(k)` depends on `2 kappa` only and is periodic on
/// `[0, pi)^2`. The plaquettes cover that reduced zone; the full
/// `[0, 2 pi)^2` torus would count each band four times.
pub fn chern_number(theta1: f64, theta2: f64, band: Band, resolution: usize) -> Result<i32> {
    chern_number_with_threshold(theta1, theta2, band, resolution, CHERN_GAP_THRESHOLD)
}

pub fn chern_number_with_threshold(
    theta1: f64,
    theta2: f64,
    band: Band,
    resolution: usize,
    threshold: f64,
) -> Result<i32> {
    if resolution < 4 {
        return Err(Error::InvalidParameter(format!(
            "plaquette grid must be at least 4 x 4, got {resolution}"
        )));
    }
    let gaps = gap_cell(theta1, theta2, resolution.max(64))?;
    if gaps.gap0 < threshold || gaps.gap_pi < threshold {
        return Err(Error::Gapless(format!(
            "gap0 = {:.3e}, gap_pi = {:.3e} at (theta1, theta2) = ({theta1}, {theta2}); threshold {threshold:.1e}",
            gaps.gap0, gaps.gap_pi
        )));
    }
    let slot = match band {
        Band::Upper => 0,
        Band::Lower => 1,
    };
    let n = resolution;
    let mut states = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let k = MomentumPoint::new(PI * i as f64 / n as f64, PI * j as f64 / n as f64);
            let bands = band_points(k, theta1, theta2)?;
            states.push(bands[slot].eigenvector);
        }
    }
    let at = |i: usize, j: usize| &states[(i % n) * n + (j % n)];
    let link = |a: &[Complex64; 2], b: &[Complex64; 2]| a[0].conj() * b[0] + a[1].conj() * b[1];
    let mut flux = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (v00, v10, v11, v01) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            let loop_product = link(v00, v10) * link(v10, v11) * link(v11, v01) * link(v01, v00);
            flux += loop_product.arg();
        }
    }
    let c = flux / TAU;
    let rounded = c.round();
    if (c - rounded).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "plaquette sum {c} is not an integer; refine the grid"
        )));
    }
    Ok(rounded as i32)
}
