//! Acceptance suite. Runs every primary criterion at its stated tolerance and
//! prints one PASS/FAIL line per criterion, followed by the measured values.
//! Exits with status 1 if any criterion fails, except those listed in
//! `KNOWN_FAILURES`: they still print FAIL, but only a change in their
//! status (an unexpected pass) affects the exit code.
//!
//! Plain-text artifacts (sweep, gap map, Chern map) land in
//! `$CARGO_TARGET_TMPDIR/acceptance/` for visual inspection.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use topowalk::bloch::{self, Band, MomentumPoint};
use topowalk::evolution::{
    evolve_record, first_lobe, half_max_width, normalize_unit, step, AngleField, Metric,
};
use topowalk::experiments::{
    classical_curve, default_horizon, disorder_ensemble, job_rng, overlap_scan, size_scaling_study,
    sweep_walker_grid, Angles, DisorderConfig, GridAxis, SquareWalk, SweepConfig, SweepResult,
    WalkKind, REFERENCE_DEFECT,
};
use topowalk::lattice::{uniform_state, LatticeConfig, SpinorField};
use topowalk::spectral::{
    approx_series, beat_fft_check, beat_period, build_step_matrix, eigen_series, eigendecompose,
    overlap_products, select_trapped_states, BeatOutcome, OverlapTable, SpectralDecomposition,
};

/// Criteria that fail at the stated tolerance and are analysed in the
/// project's decision log rather than loosened here.
const KNOWN_FAILURES: &[&str] = &["scaling crossover"];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn artifacts() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("artifact directory");
    dir
}

fn angles_with_defect(l: usize, walker: Angles, defect: Angles) -> AngleField {
    let cfg = LatticeConfig::new(l).unwrap();
    AngleField::uniform(cfg, walker.theta1, walker.theta2).with_defect(
        cfg.center(),
        defect.theta1,
        defect.theta2,
    )
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn unitarity() -> Verdict {
    let cfg = LatticeConfig::new(6).unwrap();
    let angles = angles_with_defect(6, Angles::new(0.83, -2.4), REFERENCE_DEFECT);
    let dense = build_step_matrix(&angles).unwrap();
    let mut rng = job_rng(2024, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let amps: Vec<Complex64> = (0..cfg.dim())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut psi = SpinorField::from_amplitudes(cfg, amps).unwrap();
        psi.normalize();
        let fast = step(&psi, &angles);
        let slow = dense.apply(psi.amplitudes());
        for (a, b) in fast.amplitudes().iter().zip(&slow) {
            worst = worst.max((a - b).norm());
        }
    }

    let big = LatticeConfig::new(40).unwrap();
    let angles = angles_with_defect(40, Angles::new(17.0 * PI / 63.0, -49.0 * PI / 63.0), REFERENCE_DEFECT);
    let mut psi = uniform_state(big);
    let mut drift = 0.0f64;
    for _ in 0..1000 {
        psi = step(&psi, &angles);
        drift = drift.max((psi.norm_sqr() - 1.0).abs());
    }
    verdict(
        worst < 1e-12 && drift < 1e-10,
        format!("L=6 max |step - dense| over 100 states = {worst:.2e} (< 1e-12); L=40 norm drift over 1000 steps = {drift:.2e} (< 1e-10)"),
    )
}

struct Spectrum {
    decomp: SpectralDecomposition,
    table: OverlapTable,
}

fn spectrum(l: usize, walker: Angles, defect: Angles) -> Spectrum {
    let cfg = LatticeConfig::new(l).unwrap();
    let decomp = eigendecompose(&build_step_matrix(&angles_with_defect(l, walker, defect)).unwrap()).unwrap();
    let table = overlap_products(&decomp, cfg.center(), &uniform_state(cfg)).unwrap();
    Spectrum { decomp, table }
}

fn spectral_symmetry(s: &Spectrum) -> Verdict {
    let d = &s.decomp;
    let mut pair_err = 0.0f64;
    let mut conj_err = 0.0f64;
    for n in 0..d.dim() {
        let m = d.partner(n);
        let sum = d.phases()[n] + d.phases()[m];
        // E = pi pairs with -pi, i.e. itself mod 2 pi
        let wrapped = (sum + PI).rem_euclid(2.0 * PI) - PI;
        pair_err = pair_err.max(wrapped.abs());
        let overlap: Complex64 = d.vector(n).iter().zip(d.vector(m)).map(|(a, b)| a * b).sum();
        conj_err = conj_err.max((overlap.norm() - 1.0).abs());
    }
    let n_sites = d.config().sites() as f64;
    let completeness = s.table.completeness_sum();
    let c_err = (completeness - Complex64::new((2.0 / n_sites).sqrt(), 0.0)).norm();
    verdict(
        pair_err < 1e-6 && conj_err < 1e-6 && c_err < 1e-10,
        format!("L=16: max |E_n + E_partner| = {pair_err:.2e} (< 1e-6); max |1 - |<n*|m>|| = {conj_err:.2e}; |sum d_n i_n - sqrt(2/N)| = {c_err:.2e} (< 1e-10)"),
    )
}

fn reconstruction(s: &Spectrum, walker: Angles) -> Verdict {
    let cfg = *s.decomp.config();
    let angles = angles_with_defect(cfg.size(), walker, REFERENCE_DEFECT);
    let direct = evolve_record(&uniform_state(cfg), 200, &angles, cfg.center(), Metric::SiteDensity).unwrap();
    let expanded = eigen_series(&s.table, 200, Metric::SiteDensity);
    let worst = direct
        .values
        .iter()
        .zip(&expanded.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    verdict(worst < 1e-8, format!("L=16, t<=200: max |P_eigen - P_direct| = {worst:.2e} (< 1e-8)"))
}

fn dispersion() -> Verdict {
    let mut rng = job_rng(7, 1);
    let mut params = Vec::new();
    while params.len() < 50 {
        let t1 = rng.random_range(-PI..PI);
        let t2 = rng.random_range(-PI..PI);
        if t2.abs() > 0.1 {
            params.push((t1, t2));
        }
    }
    let res = 256;
    let mut trace_err = 0.0f64;
    for &(t1, t2) in &params {
        for i in 0..res {
            for j in 0..res {
                let k = MomentumPoint::on_grid(i, j, res);
                let u = bloch::bloch_matrix(k, t1, t2);
                let tr = u[0][0] + u[1][1];
                let (kx, ky) = k.cartesian();
                trace_err = trace_err.max((tr + bloch::trace_coefficient(kx, ky, t1, t2)).norm());
            }
        }
    }

    let l = 8;
    let cfg = LatticeConfig::new(l).unwrap();
    let mut dense_err = 0.0f64;
    for &(t1, t2) in params.iter().take(5) {
        let d = eigendecompose(&build_step_matrix(&AngleField::uniform(cfg, t1, t2)).unwrap()).unwrap();
        let mut got = d.phases().to_vec();
        let mut want = Vec::new();
        for m in 0..l {
            for n in 0..l {
                let k = MomentumPoint::new(2.0 * PI * m as f64 / l as f64, 2.0 * PI * n as f64 / l as f64);
                let (e, minus) = bloch::quasi_energies(k, t1, t2).unwrap();
                want.extend([e, minus]);
            }
        }
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            // +-pi are the same quasi-energy
            let diff = (a - b + PI).rem_euclid(2.0 * PI) - PI;
            dense_err = dense_err.max(diff.abs());
        }
    }
    verdict(
        trace_err < 1e-9 && dense_err < 1e-8,
        format!("50 angle pairs x 256^2 momenta: max |Tr U + b| = {trace_err:.2e} (< 1e-9); L=8 dense vs +-E(k) = {dense_err:.2e} (< 1e-8)"),
    )
}

struct ChernMap {
    theta: Vec<f64>,
    values: Vec<Option<i32>>,
}

fn chern_map() -> ChernMap {
    let theta = GridAxis::full_turn(17).unwrap().values();
    let mut values = Vec::new();
    for &a in &theta {
        for &b in &theta {
            values.push(bloch::chern_number(a, b, Band::Upper, bloch::CHERN_RESOLUTION).ok());
        }
    }
    ChernMap { theta, values }
}

fn gap_structure(chern: &ChernMap) -> Verdict {
    let thetas = GridAxis::full_turn(33).unwrap().values();
    let mut worst = 0.0f64;
    for &t1 in &thetas {
        for t2 in [0.0, 2.0 * PI] {
            let g = bloch::gap_cell(t1, t2, bloch::GAP_RESOLUTION).unwrap();
            worst = worst.max(g.gap0).max(g.gap_pi);
        }
    }

    // Every change of Chern number between neighbouring cells must cross a
    // gap closing on the segment joining them.
    let n = chern.theta.len();
    let at = |i: usize, j: usize| chern.values[i * n + j];
    let mut boundaries = 0;
    let mut unexplained = Vec::new();
    let mut largest_min_gap = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for (di, dj) in [(1, 0), (0, 1)] {
                let (p, q) = (i + di, j + dj);
                if p >= n || q >= n {
                    continue;
                }
                let (Some(a), Some(b)) = (at(i, j), at(p, q)) else { continue };
                if a == b {
                    continue;
                }
                boundaries += 1;
                let (x0, y0) = (chern.theta[i], chern.theta[j]);
                let (x1, y1) = (chern.theta[p], chern.theta[q]);
                let min_gap = (0..=64)
                    .map(|s| {
                        let f = s as f64 / 64.0;
                        let g = bloch::gap_cell(x0 + f * (x1 - x0), y0 + f * (y1 - y0), 128).unwrap();
                        g.gap0.min(g.gap_pi)
                    })
                    .fold(f64::INFINITY, f64::min);
                largest_min_gap = largest_min_gap.max(min_gap);
                if min_gap > 0.02 {
                    unexplained.push((x0 / PI, y0 / PI, x1 / PI, y1 / PI, min_gap));
                }
            }
        }
    }

    let axis = GridAxis::full_turn(64).unwrap().values();
    let map = bloch::gap_map(&axis, &axis, 128).unwrap();
    let mut csv = String::from("theta1,theta2,gap0,gap_pi\n");
    for c in &map.cells {
        writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", c.theta1, c.theta2, c.gap0, c.gap_pi).unwrap();
    }
    let path = artifacts().join("gapmap.csv");
    std::fs::write(&path, csv).unwrap();

    verdict(
        worst < 1e-6 && boundaries > 0 && unexplained.is_empty(),
        format!(
            "max gap along theta2 in {{0, 2pi}} over 33 theta1 = {worst:.2e} (< 1e-6); {boundaries} Chern boundaries on the 17x17 grid, \
             largest min-gap along a boundary segment = {largest_min_gap:.2e}, unexplained = {unexplained:?}; map at {}",
            path.display()
        ),
    )
}

fn chern_diagram(chern: &ChernMap) -> Verdict {
    let n = chern.theta.len();
    let mut defined = 0;
    let mut seen = std::collections::BTreeSet::new();
    let mut bad_value = 0;
    let mut bad_sum = 0;
    let mut unstable = 0;
    let mut rows = String::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (chern.theta[i], chern.theta[j]);
            let Some(c) = chern.values[i * n + j] else {
                rows.push_str("  .");
                continue;
            };
            write!(rows, "{c:>3}").unwrap();
            defined += 1;
            seen.insert(c);
            if !(-1..=1).contains(&c) {
                bad_value += 1;
            }
            let lower = bloch::chern_number(a, b, Band::Lower, bloch::CHERN_RESOLUTION).unwrap();
            if c + lower != 0 {
                bad_sum += 1;
            }
            if bloch::chern_number(a, b, Band::Upper, 2 * bloch::CHERN_RESOLUTION).unwrap() != c {
                unstable += 1;
            }
        }
        rows.push('\n');
    }
    let path = artifacts().join("chern.txt");
    std::fs::write(&path, format!("rows: theta1 from -pi to pi; columns: theta2 from -pi to pi\n{rows}")).unwrap();
    let all_phases = seen.len() == 3;
    verdict(
        bad_value == 0 && bad_sum == 0 && unstable == 0 && all_phases && defined > n * n / 2,
        format!(
            "{defined}/{} cells gapped; values seen {seen:?} (need exactly -1, 0, 1); out of range = {bad_value}; \
             band sum != 0: {bad_sum}; changed under k-resolution doubling: {unstable}; map at {}",
            n * n,
            path.display()
        ),
    )
}

fn sweep() -> SweepResult {
    let result = sweep_walker_grid(&SweepConfig::reference()).unwrap();
    let mut csv = String::from("theta1,theta2,max_probability\n");
    for c in &result.cells {
        writeln!(csv, "{:.16e},{:.16e},{:.16e}", c.theta1, c.theta2, c.max_probability).unwrap();
    }
    std::fs::write(artifacts().join("sweep.csv"), csv).unwrap();
    result
}

fn islands(s: &SweepResult) -> Verdict {
    let n = (s.config.size * s.config.size) as f64;
    let peak = s.peak();
    let above = s.cells.iter().filter(|c| c.max_probability * n >= 50.0).count();
    verdict(
        peak.max_probability * n >= 100.0,
        format!(
            "L=40, T=1000, 64x64: peak max P x N = {:.1} (>= 100) at ({:.4}pi, {:.4}pi); {above}/{} cells reach 50/N",
            peak.max_probability * n,
            peak.theta1 / PI,
            peak.theta2 / PI,
            s.cells.len()
        ),
    )
}

fn overlap_criterion(walker: Angles) -> Verdict {
    let axis = GridAxis::new(0.25 * PI, PI, 13).unwrap();
    let points = overlap_scan(walker, axis, REFERENCE_DEFECT.theta2, 40, 1000).unwrap();
    let x: Vec<f64> = points.iter().map(|p| p.def_theta1).collect();
    let curve = |f: fn(&topowalk::experiments::OverlapPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    let max_p = curve(|p| p.max_probability);
    let two = curve(|p| p.magnitude_top2);
    let one = curve(|p| p.magnitude_top1);
    let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    let (ip, i2, i1) = (argmax(&max_p), argmax(&two), argmax(&one));
    let (wp, w2, w1) = (
        half_max_width(&x, &max_p).unwrap(),
        half_max_width(&x, &two).unwrap(),
        half_max_width(&x, &one).unwrap(),
    );
    let coherent_two = curve(|p| p.coherent_top2);
    let coherent_one = curve(|p| p.coherent_top1);
    let fmt = |v: &[f64]| normalize_unit(v).iter().map(|u| format!("{u:.2}")).collect::<Vec<_>>().join(" ");
    verdict(
        ip.abs_diff(i2) <= 1 && w1 > w2,
        format!(
            "walker ({:.4}pi, {:.4}pi), theta1^def over [0.25pi, pi] in 13 points: peak cells maxP={ip} two-pair={i2} one-pair={i1} (need |maxP - two| <= 1); \
             half-max widths maxP={:.4}pi two-pair={:.4}pi one-pair={:.4}pi (need one > two); \
             normalized maxP [{}] two [{}] one [{}]; coherent-form widths two={:.4}pi one={:.4}pi",
            walker.theta1 / PI,
            walker.theta2 / PI,
            wp / PI,
            w2 / PI,
            w1 / PI,
            fmt(&max_p),
            fmt(&two),
            fmt(&one),
            half_max_width(&x, &coherent_two).unwrap() / PI,
            half_max_width(&x, &coherent_one).unwrap() / PI,
        ),
    )
}

fn phase_relation(s: &Spectrum) -> Verdict {
    match select_trapped_states(&s.table) {
        Err(e) => verdict(false, format!("trapped-pair selection failed: {e}")),
        Ok(set) => {
            let r = set.pairs.map(|p| p.phase_residual);
            let mut products: Vec<f64> = s.table.entries.iter().map(|e| e.product).collect();
            products.sort_by(f64::total_cmp);
            let median = products[products.len() / 2];
            verdict(
                r[0] < 1e-6 && r[1] < 1e-6,
                format!(
                    "L=40 walker '1': |w_down - i w_up| / |w_up| = {:.2e}, {:.2e} (< 1e-6); E = {:.6}, {:.6}; top products / median = {:.1}, {:.1}",
                    r[0],
                    r[1],
                    set.pairs[0].energy,
                    set.pairs[1].energy,
                    set.pairs[0].product / median,
                    set.pairs[1].product / median
                ),
            )
        }
    }
}

fn beats(s: &Spectrum, walker: Angles) -> Verdict {
    let set = match select_trapped_states(&s.table) {
        Ok(set) => set,
        Err(e) => return verdict(false, format!("trapped-pair selection failed: {e}")),
    };
    let cfg = *s.decomp.config();
    let angles = angles_with_defect(cfg.size(), walker, REFERENCE_DEFECT);
    let series = evolve_record(&uniform_state(cfg), 5000, &angles, cfg.center(), Metric::SiteDensity).unwrap();
    let fft = beat_fft_check(&series, &set).unwrap();
    let BeatOutcome::Peak { frequency, predicted, relative_error } = fft else {
        return verdict(false, "no oscillating component in P_def(t)".into());
    };
    let period = beat_period(&set);
    let horizon = period.round() as usize;
    let closed = approx_series(&set, 5000);
    let direct_lobe = first_lobe(&series.values, horizon).unwrap();
    let closed_lobe = first_lobe(&closed.values, horizon).unwrap();
    let time_err = (closed_lobe.centroid - direct_lobe.centroid).abs() / direct_lobe.centroid;
    let height_err = (closed_lobe.peak_value - direct_lobe.peak_value).abs() / direct_lobe.peak_value;
    verdict(
        relative_error < 0.02 && time_err < 0.05 && height_err < 0.15,
        format!(
            "L=40, T=5000: FFT {frequency:.6e} vs |E1-E2|/2pi {predicted:.6e}, relative error {relative_error:.2e} (< 0.02); \
             first lobe centroid direct {:.1} vs closed form {:.1}, error {time_err:.3} (< 0.05); peak height error {height_err:.3} (< 0.15); \
             argmax direct {} vs closed {}; beat period {period:.1}",
            direct_lobe.centroid, closed_lobe.centroid, direct_lobe.peak_time, closed_lobe.peak_time
        ),
    )
}

fn scaling(walker: Angles) -> Verdict {
    let sizes = [20, 28, 40, 56, 80, 112, 160];
    let rows = size_scaling_study(walker, REFERENCE_DEFECT, &sizes, default_horizon).unwrap();
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("L={} t*={:?} maxPN={:.1}", r.size, r.search_time, r.max_probability * r.sites as f64))
        .collect();
    let Some(times) = rows.iter().map(|r| r.search_time.map(|t| t as f64)).collect::<Option<Vec<_>>>() else {
        return verdict(false, format!("search time undefined for some size: {table:?}"));
    };
    let ln_l: Vec<f64> = sizes.iter().map(|&l| (l as f64).ln()).collect();
    // sqrt(N) = L: below the crossover the search time grows linearly in L
    let rise = slope(&ln_l[..3], &times[..3].iter().map(|t| t.ln()).collect::<Vec<_>>());
    let rising = times[..3].windows(2).all(|w| w[1] > w[0]) && (0.5..=1.5).contains(&rise);
    let last = times[times.len() - 1];
    let flat_step = (last - times[times.len() - 2]).abs() / last;
    let flat: Vec<usize> = (0..rows.len()).filter(|&i| (times[i] - last).abs() / last < 0.1).collect();
    let consts: Vec<f64> = flat.iter().map(|&i| rows[i].max_probability * rows[i].sites as f64).collect();
    let in_band = consts.iter().all(|c| (100.0..=1000.0).contains(c));
    let exponent = if flat.len() >= 2 {
        slope(
            &flat.iter().map(|&i| (rows[i].sites as f64).ln()).collect::<Vec<_>>(),
            &flat.iter().map(|&i| rows[i].max_probability.ln()).collect::<Vec<_>>(),
        )
    } else {
        f64::NAN
    };
    let exp_ok = (exponent + 1.0).abs() <= 0.15;
    verdict(
        rising && flat_step < 0.1 && in_band && exp_ok,
        format!(
            "{}; rise exponent of t* vs L over L<=40 = {rise:.2} (in [0.5, 1.5]); last two t* differ by {:.1}% (< 10%); \
             flat regime L={:?}: max P x N = {:?} (need all in [100, 1000]); fitted exponent of max P vs N = {exponent:.3} (-1 +- 0.15)",
            table.join(", "),
            100.0 * flat_step,
            flat.iter().map(|&i| sizes[i]).collect::<Vec<_>>(),
            consts.iter().map(|c| format!("{c:.1}")).collect::<Vec<_>>(),
        ),
    )
}

fn disorder(walker: Angles) -> Verdict {
    let (size, steps) = (128, 1000);
    let run = |theta_dis: f64| {
        let config = DisorderConfig { theta_dis, n_configs: 20, seed: 17, walk: WalkKind::Topological };
        disorder_ensemble(&config, walker, REFERENCE_DEFECT, size, steps).unwrap()
    };
    let cfg = LatticeConfig::new(size).unwrap();
    let clean = evolve_record(
        &uniform_state(cfg),
        steps,
        &angles_with_defect(size, walker, REFERENCE_DEFECT),
        cfg.center(),
        Metric::SiteDensity,
    )
    .unwrap();
    let zero = run(0.0);
    let identical = zero.realizations.iter().all(|r| r.values == clean.values);
    let peak = |v: &[f64]| v.iter().copied().fold(f64::MIN, f64::max);
    let peaks: Vec<f64> = [0.3, 0.5, 1.0].iter().map(|&t| peak(&run(t).mean)).collect();
    let monotone = peaks.windows(2).all(|w| w[1] <= w[0]);
    let n = cfg.sites() as f64;
    verdict(
        identical && monotone,
        format!(
            "L=128, T=1000, 20 realizations: theta_dis=0 realizations bit-identical to clean run: {identical}; \
             mean-curve peak x N: clean {:.1}, 0.3 -> {:.1}, 0.5 -> {:.1}, 1.0 -> {:.1} (nonincreasing)",
            peak(&clean.values) * n,
            peaks[0] * n,
            peaks[1] * n,
            peaks[2] * n
        ),
    )
}

fn baselines() -> Verdict {
    let mut exact = true;
    for (n, t) in [(64usize, 64usize), (4096, 1000), (262144, 1000)] {
        let c = classical_curve(n, t).unwrap();
        exact &= c.values.iter().enumerate().all(|(k, &v)| v == k as f64 / n as f64);
    }

    let mut heights = Vec::new();
    let mut inv_log = Vec::new();
    let mut drift = 0.0f64;
    let mut report = Vec::new();
    for l in [64usize, 128, 256] {
        let cfg = LatticeConfig::new(l).unwrap();
        let walk = SquareWalk::clean(cfg, Some(cfg.center()));
        let steps = 8 * l;
        let mut amps = uniform_state(cfg).into_amplitudes();
        let mut scratch = amps.clone();
        let d = 2 * cfg.linear(cfg.center());
        let mut values = vec![amps[d].norm_sqr() + amps[d + 1].norm_sqr()];
        for _ in 0..steps {
            walk.step(&mut amps, &mut scratch);
            values.push(amps[d].norm_sqr() + amps[d + 1].norm_sqr());
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        drift = drift.max((norm - 1.0).abs());
        let n = cfg.sites() as f64;
        let lobe = first_lobe(&values, steps).unwrap();
        heights.push(lobe.peak_value);
        inv_log.push(1.0 / n.ln());
        report.push(format!("L={l}: peak {:.4} at t={} (x N = {:.0}, x ln N = {:.3})", lobe.peak_value, lobe.peak_time, lobe.peak_value * n, lobe.peak_value * n.ln()));
    }
    let monotone = heights.windows(2).all(|w| w[1] < w[0]);
    let r = pearson(&inv_log, &heights);
    verdict(
        exact && drift < 1e-10 && monotone && r > 0.9,
        format!(
            "classical t/N exact: {exact}; square walk norm drift {drift:.2e}; {}; heights decrease with N: {monotone}; corr(height, 1/ln N) = {r:.4} (> 0.9)",
            report.join(", ")
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut known = 0;
    let mut run = |name: &str, f: &mut dyn FnMut() -> Verdict| {
        let clock = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let expected_failure = KNOWN_FAILURES.contains(&name);
        let label = match (v.pass, expected_failure) {
            (true, false) => "PASS",
            (true, true) => {
                failures += 1;
                "PASS (listed as a known failure; update KNOWN_FAILURES)"
            }
            (false, true) => {
                known += 1;
                "FAIL (known)"
            }
            (false, false) => {
                failures += 1;
                "FAIL"
            }
        };
        println!(
            "{label} {name} [{:.1}s]: {}",
            clock.elapsed().as_secs_f64(),
            v.detail
        );
    };

    run("unitarity and oracle equivalence", &mut unitarity);

    let fallback_walker = Angles::new(17.0 * PI / 63.0, -49.0 * PI / 63.0);
    let small = spectrum(16, fallback_walker, REFERENCE_DEFECT);
    run("spectral symmetry", &mut || spectral_symmetry(&small));
    run("eigen-expansion reconstruction", &mut || reconstruction(&small, fallback_walker));
    run("dispersion", &mut dispersion);

    let chern = chern_map();
    run("gap structure", &mut || gap_structure(&chern));
    run("Chern phase diagram", &mut || chern_diagram(&chern));

    let mut walker = None;
    run("localization islands", &mut || {
        let s = sweep();
        let peak = s.peak();
        walker = Some(Angles::new(peak.theta1, peak.theta2));
        islands(&s)
    });
    // the studies below run at the walker located by the sweep
    let walker = walker.unwrap_or(fallback_walker);
    println!("     located walker '1': ({:.6}pi, {:.6}pi)", walker.theta1 / PI, walker.theta2 / PI);

    run("overlap criterion", &mut || overlap_criterion(walker));
    let large = spectrum(40, walker, REFERENCE_DEFECT);
    run("trapped-pair phase relation", &mut || phase_relation(&large));
    run("beat period", &mut || beats(&large, walker));
    run("scaling crossover", &mut || scaling(walker));
    run("disorder robustness", &mut || disorder(walker));
    run("baselines", &mut baselines);

    println!("acceptance: 13 criteria, {known} known failure(s), {failures} unexpected result(s)");
    if failures > 0 {
        std::process::exit(1);
    }
}
