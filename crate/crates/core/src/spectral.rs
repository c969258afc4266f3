//! Spectral analysis of the one-step unitary with a marked node.
//!
//! The step matrix is real and orthogonal, so eigenstates come in complex
//! conjugate pairs with quasi-energies `+E` and `-E`. The eigensolver works
//! on the real symmetric part `(U + U^T) / 2`, whose eigenvalues are
//! `cos E`, and resolves each (near-)degenerate cluster with a small complex
//! Schur decomposition of `U` restricted to that cluster. Negative-energy
//! partners are produced by explicit conjugation, so pairing is exact.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{AngleField, Metric, ProbabilitySeries, StepOperator};
use crate::lattice::{torus_distance, LatticeConfig, SiteIndex, Spin, SpinorField};
use crate::linalg;

/// Largest lattice for which dense matrices are built.
pub const DENSE_CAP: usize = 48;

/// Eigenvalues of the symmetric part closer than this are resolved together.
const CLUSTER_GAP: f64 = 1e-4;
/// `|Im lambda|` below this marks a self-conjugate state (`E = 0` or `pi`).
const REAL_EIGENVALUE_TOL: f64 = 1e-9;
/// Relative gap between the second and third pair overlap below which the
/// trapped-pair choice is reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Pairs closer than this in energy belong to one degenerate eigenspace.
pub const PAIR_ENERGY_TOL: f64 = 1e-6;

pub fn check_capacity(size: usize) -> Result<()> {
    if size > DENSE_CAP {
        Err(Error::Capacity {
            size,
            cap: DENSE_CAP,
        })
    } else {
        Ok(())
    }
}

/// Real dense `2N x 2N` matrix, column-major, in the lattice amplitude basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    config: LatticeConfig,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn identity(config: LatticeConfig) -> Self {
        let n = config.dim();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { config, data }
    }

    pub fn from_column_major(config: LatticeConfig, data: Vec<f64>) -> Result<Self> {
        let n = config.dim();
        if data.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "expected a {n}x{n} matrix, got {} entries",
                data.len()
            )));
        }
        Ok(Self { config, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    #[inline]
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.dim() + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        let n = self.dim();
        &self.data[col * n..(col + 1) * n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `U x` for a complex vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &u) in out.iter_mut().zip(self.column(j)) {
                *o += xj * u;
            }
        }
        out
    }

    fn sparse_columns(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.dim())
            .map(|j| {
                self.column(j)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect()
    }
}

/// Dense one-step unitary: column `j` is the step applied to basis state `j`.
pub fn build_step_matrix(angles: &AngleField) -> Result<DenseMatrix> {
    let config = *angles.config();
    check_capacity(config.size())?;
    let n = config.dim();
    let op = StepOperator::new(angles);
    let mut data = vec![0.0f64; n * n];
    data.par_chunks_mut(n).enumerate().for_each_init(
        || vec![0.0f64; n],
        |scratch, (j, col)| {
            col[j] = 1.0;
            op.apply(col, scratch);
        },
    );
    Ok(DenseMatrix { config, data })
}

/// A particle-hole pair of eigenstates. `positive == negative` for the
/// self-conjugate states at `E = 0` or `E = pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pair {
    pub positive: usize,
    pub negative: usize,
    /// `|E|` of the pair, in `[0, pi]`.
    pub energy: f64,
}

impl Pair {
    pub fn members(&self) -> impl Iterator<Item = usize> {
        let second = (self.negative != self.positive).then_some(self.negative);
        std::iter::once(self.positive).chain(second)
    }
}

/// Complete eigensystem of a real orthogonal step matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    config: LatticeConfig,
    phases: Vec<f64>,
    /// Column-major, column `k` is eigenvector `k`.
    vectors: Vec<Complex64>,
    partner: Vec<usize>,
    pair_of: Vec<usize>,
    pairs: Vec<Pair>,
    max_modulus_error: f64,
}

impl SpectralDecomposition {
    #[inline]
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    #[inline]
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    /// Eigenphases `E_n` in `(-pi, pi]`, ascending.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn vector(&self, n: usize) -> &[Complex64] {
        let d = self.dim();
        &self.vectors[n * d..(n + 1) * d]
    }

    pub fn state(&self, n: usize) -> SpinorField {
        SpinorField::from_amplitudes(self.config, self.vector(n).to_vec())
            .expect("eigenvector length matches lattice")
    }

    /// Index of the `-E_n` partner of state `n`.
    pub fn partner(&self, n: usize) -> usize {
        self.partner[n]
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// Pair id containing state `n`.
    pub fn pair_of(&self, n: usize) -> usize {
        self.pair_of[n]
    }

    /// Largest `||lambda| - 1|` seen in the cluster eigenvalues.
    pub fn max_modulus_error(&self) -> f64 {
        self.max_modulus_error
    }

    /// `max_n ||U v_n - e^{i E_n} v_n||_inf`.
    pub fn max_residual(&self, matrix: &DenseMatrix) -> f64 {
        (0..self.dim())
            .into_par_iter()
            .map(|k| {
                let v = self.vector(k);
                let lambda = Complex64::from_polar(1.0, self.phases[k]);
                matrix
                    .apply(v)
                    .iter()
                    .zip(v)
                    .map(|(uv, x)| (uv - lambda * x).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `sum_n e^{i E_n} |n><n|` as a dense complex matrix (column-major).
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for k in 0..d {
            let v = self.vector(k);
            let lambda = Complex64::from_polar(1.0, self.phases[k]);
            for (j, vj) in v.iter().enumerate() {
                let coeff = lambda * vj.conj();
                for (o, vi) in out[j * d..(j + 1) * d].iter_mut().zip(v) {
                    *o += coeff * vi;
                }
            }
        }
        out
    }
}

/// Eigen-decomposition of a real orthogonal matrix.
pub fn eigendecompose(matrix: &DenseMatrix) -> Result<SpectralDecomposition> {
    let config = *matrix.config();
    let n = matrix.dim();
    let mut sym = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            sym[j * n + i] = 0.5 * (matrix.get(i, j) + matrix.get(j, i));
        }
    }
    let (cosines, basis) = linalg::symmetric_eigen(n, sym)?;
    let sparse = matrix.sparse_columns();

    let mut bounds = vec![0];
    for k in 1..n {
        if cosines[k] - cosines[k - 1] > CLUSTER_GAP {
            bounds.push(k);
        }
    }
    bounds.push(n);

    let clusters: Vec<Result<ClusterStates>> = bounds
        .par_windows(2)
        .map(|w| resolve_cluster(n, &basis[w[0] * n..w[1] * n], &sparse))
        .collect();

    // (phase, vector, self-conjugate)
    let mut states: Vec<(f64, Vec<Complex64>, Option<usize>)> = Vec::with_capacity(n);
    let mut max_modulus_error = 0.0f64;
    for cluster in clusters {
        let cluster = cluster?;
        max_modulus_error = max_modulus_error.max(cluster.max_modulus_error);
        for (phase, v) in cluster.positive {
            let id = states.len();
            let conj: Vec<Complex64> = v.iter().map(|x| x.conj()).collect();
            states.push((phase, v, Some(id + 1)));
            states.push((-phase, conj, Some(id)));
        }
        for (phase, v) in cluster.real {
            states.push((phase, v, None));
        }
    }
    if states.len() != n {
        return Err(Error::Numerical(format!(
            "eigensolver produced {} states for dimension {n}",
            states.len()
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| states[a].0.total_cmp(&states[b].0));
    let mut rank = vec![0; n];
    for (r, &o) in order.iter().enumerate() {
        rank[o] = r;
    }
    let mut phases = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    let mut partner = vec![0; n];
    for (r, &o) in order.iter().enumerate() {
        phases.push(states[o].0);
        vectors.extend_from_slice(&states[o].1);
        partner[r] = match states[o].2 {
            Some(p) => rank[p],
            None => r,
        };
    }

    let mut pairs = Vec::with_capacity(n / 2 + 1);
    let mut pair_of = vec![usize::MAX; n];
    for k in 0..n {
        if pair_of[k] != usize::MAX {
            continue;
        }
        let p = partner[k];
        let (positive, negative) = if phases[k] >= 0.0 { (k, p) } else { (p, k) };
        pair_of[k] = pairs.len();
        pair_of[p] = pairs.len();
        pairs.push(Pair {
            positive,
            negative,
            energy: phases[positive].abs(),
        });
    }

    Ok(SpectralDecomposition {
        config,
        phases,
        vectors,
        partner,
        pair_of,
        pairs,
        max_modulus_error,
    })
}

struct ClusterStates {
    positive: Vec<(f64, Vec<Complex64>)>,
    real: Vec<(f64, Vec<Complex64>)>,
    max_modulus_error: f64,
}

/// Diagonalizes `U` inside the invariant subspace spanned by `basis`
/// (`k` real orthonormal columns of length `n`).
fn resolve_cluster(n: usize, basis: &[f64], sparse: &[Vec<(usize, f64)>]) -> Result<ClusterStates> {
    let k = basis.len() / n;
    let col = |c: usize| &basis[c * n..(c + 1) * n];

    // B = Q^T U Q
    let mut block = vec![Complex64::new(0.0, 0.0); k * k];
    let mut image = vec![0.0; n];
    for c in 0..k {
        image.iter_mut().for_each(|x| *x = 0.0);
        for (j, &q) in col(c).iter().enumerate() {
            if q != 0.0 {
                for &(i, u) in &sparse[j] {
                    image[i] += u * q;
                }
            }
        }
        for r in 0..k {
            let dot: f64 = col(r).iter().zip(&image).map(|(a, b)| a * b).sum();
            block[c * k + r] = Complex64::new(dot, 0.0);
        }
    }

    let (eigenvalues, schur) = linalg::complex_schur(k, block)?;
    let mut max_modulus_error = 0.0f64;
    let mut positive_coeffs = Vec::new();
    let mut real_coeffs = Vec::new();
    let mut negatives = 0;
    let mut real_sign = 0.0;
    for (c, lambda) in eigenvalues.iter().enumerate() {
        max_modulus_error = max_modulus_error.max((lambda.norm() - 1.0).abs());
        let coeffs = &schur[c * k..(c + 1) * k];
        if lambda.im > REAL_EIGENVALUE_TOL {
            positive_coeffs.push((lambda.arg(), coeffs.to_vec()));
        } else if lambda.im < -REAL_EIGENVALUE_TOL {
            negatives += 1;
        } else {
            real_sign += lambda.re;
            real_coeffs.push(coeffs.to_vec());
        }
    }
    if negatives != positive_coeffs.len() {
        return Err(Error::Numerical(format!(
            "unpaired eigenvalues in a cluster of size {k}: {} positive, {negatives} negative",
            positive_coeffs.len()
        )));
    }

    let lift = |coeffs: &[Complex64]| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (c, &a) in coeffs.iter().enumerate() {
            for (vi, &q) in v.iter_mut().zip(col(c)) {
                *vi += a * q;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    };

    let positive = positive_coeffs
        .iter()
        .map(|(phase, coeffs)| (*phase, lift(coeffs)))
        .collect();

    // Self-conjugate subspace: pick a real orthonormal basis of the span.
    let real_phase = if real_sign >= 0.0 { 0.0 } else { PI };
    let want = real_coeffs.len();
    let mut real_basis: Vec<Vec<f64>> = Vec::with_capacity(want);
    let candidates = real_coeffs
        .iter()
        .flat_map(|c| [c.iter().map(|x| x.re).collect::<Vec<_>>(), c.iter().map(|x| x.im).collect()]);
    let mut pool: Vec<Vec<f64>> = candidates.collect();
    while real_basis.len() < want {
        // Gram-Schmidt with pivoting on the largest remaining norm.
        for p in pool.iter_mut() {
            for b in &real_basis {
                let d: f64 = p.iter().zip(b).map(|(x, y)| x * y).sum();
                p.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let (best, norm) = pool
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.iter().map(|x| x * x).sum::<f64>().sqrt()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Numerical("empty real subspace".into()))?;
        if norm < 1e-6 {
            return Err(Error::Numerical(
                "self-conjugate eigenspace is rank deficient".into(),
            ));
        }
        let mut v = pool.swap_remove(best);
        v.iter_mut().for_each(|x| *x /= norm);
        real_basis.push(v);
    }
    let real = real_basis
        .iter()
        .map(|r| {
            let coeffs: Vec<Complex64> = r.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            (real_phase, lift(&coeffs))
        })
        .collect();

    Ok(ClusterStates {
        positive,
        real,
        max_modulus_error,
    })
}

/// Overlaps of one eigenstate with the defect and the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapEntry {
    /// `<d|n>` with `<d| = <d,up| + <d,down|`.
    pub defect: Complex64,
    /// `<n|i>`.
    pub initial: Complex64,
    /// `|<d|n><n|i>|`.
    pub product: f64,
    /// `<d,up|n><n|i>` and `<d,down|n><n|i>`.
    pub w_up: Complex64,
    pub w_down: Complex64,
}

#[derive(Debug, Clone)]
pub struct OverlapTable {
    pub entries: Vec<OverlapEntry>,
    pub phases: Vec<f64>,
    pub pairs: Vec<Pair>,
    pub pair_of: Vec<usize>,
    /// `<d|i>` computed directly.
    pub defect_initial: Complex64,
}

pub fn overlap_products(
    decomp: &SpectralDecomposition,
    defect: SiteIndex,
    initial: &SpinorField,
) -> Result<OverlapTable> {
    let cfg = decomp.config();
    if initial.config() != cfg {
        return Err(Error::InvalidParameter(
            "initial state lives on a different lattice".into(),
        ));
    }
    let iu = cfg.amplitude_index(defect, Spin::Up);
    let id = cfg.amplitude_index(defect, Spin::Down);
    let init = initial.amplitudes();
    let entries = (0..decomp.dim())
        .into_par_iter()
        .map(|k| {
            let v = decomp.vector(k);
            let initial: Complex64 = v.iter().zip(init).map(|(a, b)| a.conj() * b).sum();
            let defect = v[iu] + v[id];
            OverlapEntry {
                defect,
                initial,
                product: (defect * initial).norm(),
                w_up: v[iu] * initial,
                w_down: v[id] * initial,
            }
        })
        .collect();
    Ok(OverlapTable {
        entries,
        phases: decomp.phases().to_vec(),
        pairs: decomp.pairs().to_vec(),
        pair_of: decomp.pair_of.clone(),
        defect_initial: init[iu] + init[id],
    })
}

impl OverlapTable {
    /// Overlap product of a pair (identical for both members).
    pub fn pair_product(&self, pair: usize) -> f64 {
        self.entries[self.pairs[pair].positive].product
    }

    /// Pair ids sorted by decreasing overlap product; ties go to smaller `|E|`.
    pub fn ranked_pairs(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.pairs.len()).collect();
        ids.sort_by(|&a, &b| {
            self.pair_product(b)
                .total_cmp(&self.pair_product(a))
                .then(self.pairs[a].energy.total_cmp(&self.pairs[b].energy))
        });
        ids
    }

    /// `sum_n <d|n><n|i>` over all states.
    pub fn completeness_sum(&self) -> Complex64 {
        self.entries.iter().map(|e| e.defect * e.initial).sum()
    }

    /// Rows of the exported spectral report.
    pub fn report_rows(&self) -> Vec<SpectralRow> {
        self.entries
            .iter()
            .enumerate()
            .map(|(k, e)| SpectralRow {
                index: k,
                energy: self.phases[k],
                defect_overlap: e.defect.norm(),
                initial_overlap: e.initial.norm(),
                product: e.product,
                pair_index: self.pair_of[k],
            })
            .collect()
    }
}

/// One row of the spectral CSV report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralRow {
    pub index: usize,
    pub energy: f64,
    pub defect_overlap: f64,
    pub initial_overlap: f64,
    pub product: f64,
    pub pair_index: usize,
}

/// `W_M = |sum_{n in M, both partners} <d|n><n|i>|^2` over a set of pair ids.
pub fn overlap_sum(table: &OverlapTable, pairs: &[usize]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("pair set must be non-empty".into()));
    }
    let mut seen = BTreeSet::new();
    let mut total = Complex64::new(0.0, 0.0);
    for &p in pairs {
        if !seen.insert(p) {
            return Err(Error::InvalidParameter(format!("duplicate pair index {p}")));
        }
        let pair = table
            .pairs
            .get(p)
            .ok_or_else(|| Error::InvalidParameter(format!("pair index {p} out of range")))?;
        for k in pair.members() {
            let e = &table.entries[k];
            total += e.defect * e.initial;
        }
    }
    Ok(total.norm_sqr())
}

/// `(sum_{n in M, both partners} |<d|n><n|i>|)^2`, the incoherent
/// counterpart of [`overlap_sum`] used to rank parameter regions.
pub fn overlap_sum_magnitude(table: &OverlapTable, pairs: &[usize]) -> Result<f64> {
    let mut seen = BTreeSet::new();
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("pair set must be non-empty".into()));
    }
    let mut total = 0.0;
    for &p in pairs {
        if !seen.insert(p) {
            return Err(Error::InvalidParameter(format!("duplicate pair index {p}")));
        }
        let pair = table
            .pairs
            .get(p)
            .ok_or_else(|| Error::InvalidParameter(format!("pair index {p} out of range")))?;
        total += pair.members().map(|k| table.entries[k].product).sum::<f64>();
    }
    Ok(total * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrappedPair {
    pub pair: usize,
    /// Index of the positive-energy member.
    pub index: usize,
    pub energy: f64,
    pub product: f64,
    pub w_up: Complex64,
    pub w_down: Complex64,
    /// `|w_down - i w_up| / |w_up|`.
    pub phase_residual: f64,
}

/// The two dominant particle-hole pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrappedStateSet {
    pub pairs: [TrappedPair; 2],
}

pub fn select_trapped_states(table: &OverlapTable) -> Result<TrappedStateSet> {
    let ranked = table.ranked_pairs();
    if ranked.len() < 3 {
        return Err(Error::Degenerate(
            "fewer than three pairs, nothing to discriminate".into(),
        ));
    }
    let top = table.pair_product(ranked[0]);
    let second = table.pair_product(ranked[1]);
    let third = table.pair_product(ranked[2]);
    if top <= 0.0 || second - third <= DEGENERACY_TOL * top {
        return Err(Error::Degenerate(format!(
            "second and third pair overlaps are indistinguishable ({second:.3e} vs {third:.3e}, top {top:.3e})"
        )));
    }
    let (e1, e2) = (table.pairs[ranked[0]].energy, table.pairs[ranked[1]].energy);
    if (e1 - e2).abs() < PAIR_ENERGY_TOL {
        return Err(Error::Degenerate(format!(
            "the two leading pairs share the energy {e1:.9} and are not separable"
        )));
    }
    let make = |pair: usize| {
        let index = table.pairs[pair].positive;
        let e = &table.entries[index];
        let i = Complex64::new(0.0, 1.0);
        TrappedPair {
            pair,
            index,
            energy: table.pairs[pair].energy,
            product: e.product,
            w_up: e.w_up,
            w_down: e.w_down,
            phase_residual: (e.w_down - i * e.w_up).norm() / e.w_up.norm(),
        }
    };
    Ok(TrappedStateSet {
        pairs: [make(ranked[0]), make(ranked[1])],
    })
}

/// Two-pair closed form for the defect density:
/// `4(|w1|^2 + |w2|^2) + 8 |w1||w2| cos((E1 - E2) t + arg w1 - arg w2)`,
/// with `w_j` the spin-up overlap product of the positive-energy member.
pub fn approx_defect_density(set: &TrappedStateSet, t: f64) -> f64 {
    let [a, b] = &set.pairs;
    let (w1, w2) = (a.w_up, b.w_up);
    4.0 * (w1.norm_sqr() + w2.norm_sqr())
        + 8.0 * w1.norm() * w2.norm() * ((a.energy - b.energy) * t + w1.arg() - w2.arg()).cos()
}

pub fn approx_series(set: &TrappedStateSet, steps: usize) -> ProbabilitySeries {
    ProbabilitySeries {
        values: (0..=steps)
            .map(|t| approx_defect_density(set, t as f64))
            .collect(),
        metric: Metric::SiteDensity,
    }
}

/// Beat period `2 pi / |E1 - E2|` of the two trapped pairs.
pub fn beat_period(set: &TrappedStateSet) -> f64 {
    2.0 * PI / (set.pairs[0].energy - set.pairs[1].energy).abs()
}

/// Defect probability from the full eigen-expansion.
pub fn eigen_series(table: &OverlapTable, steps: usize, metric: Metric) -> ProbabilitySeries {
    let values = (0..=steps)
        .map(|t| {
            let (mut up, mut down) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (e, &phase) in table.entries.iter().zip(&table.phases) {
                let rot = Complex64::from_polar(1.0, phase * t as f64);
                up += rot * e.w_up;
                down += rot * e.w_down;
            }
            metric.evaluate(up, down)
        })
        .collect();
    ProbabilitySeries { values, metric }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BeatOutcome {
    Peak {
        /// Measured dominant frequency in cycles per step.
        frequency: f64,
        /// `|E1 - E2| / 2 pi`.
        predicted: f64,
        relative_error: f64,
    },
    /// The mean-removed series carries no oscillating component.
    NoPeak,
}

/// Compares the dominant nonzero frequency of `series` with the beat
/// frequency of the trapped pairs.
pub fn beat_fft_check(series: &ProbabilitySeries, set: &TrappedStateSet) -> Result<BeatOutcome> {
    let predicted = (set.pairs[0].energy - set.pairs[1].energy).abs() / (2.0 * PI);
    let len = series.values.len();
    if predicted <= 0.0 || (len as f64) * predicted < 2.0 {
        return Err(Error::SeriesTooShort(format!(
            "{len} samples cover fewer than two predicted beat periods"
        )));
    }
    match dominant_frequency(&series.values) {
        Some(frequency) => Ok(BeatOutcome::Peak {
            frequency,
            predicted,
            relative_error: (frequency - predicted).abs() / predicted,
        }),
        None => Ok(BeatOutcome::NoPeak),
    }
}

/// Dominant nonzero frequency (cycles per sample) of a mean-removed real
/// series, refined between bins with Jacobsen's estimator.
pub fn dominant_frequency(values: &[f64]) -> Option<f64> {
    let len = values.len();
    if len < 4 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / len as f64;
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let half = len / 2;
    let (k, peak) = (1..=half)
        .map(|k| (k, buf[k].norm()))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let scale = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if peak <= 1e-12 * len as f64 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
        return None;
    }
    let mut offset = 0.0;
    if k > 1 && k < half {
        let (prev, cur, next) = (buf[k - 1], buf[k], buf[k + 1]);
        let denom = cur * 2.0 - prev - next;
        if denom.norm() > 0.0 {
            offset = ((prev - next) / denom).re.clamp(-0.5, 0.5);
        }
    }
    Some((k as f64 + offset) / len as f64)
}

/// Smallest radius around `center` containing `fraction` of the density.
pub fn state_radius(state: &SpinorField, center: SiteIndex, fraction: f64) -> f64 {
    let cfg = *state.config();
    let density = state.densities();
    let total: f64 = density.iter().sum();
    let mut by_distance: Vec<(f64, f64)> = density
        .iter()
        .enumerate()
        .map(|(s, &p)| (torus_distance(center, cfg.from_linear(s), &cfg), p / total))
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (r, p) in &by_distance {
        acc += p;
        if acc >= fraction - 1e-12 {
            return *r;
        }
    }
    by_distance.last().map_or(0.0, |x| x.0)
}
