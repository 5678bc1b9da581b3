//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ibrelay::{run_sweep, to_csv, Preset, SweepRow, SweepSpec};
use ibrelay_core::bounds::{capacity, upper_bound};
use ibrelay_core::mmse::{mmse_limits, mmse_rate};
use ibrelay_core::qci::{concentration_grid, qci_grid_rate, qci_limit_rate, qci_quantile_rate};
use ibrelay_core::spectra::{DofConvention, EigDensity, NoiseLevelDensity};
use ibrelay_core::{ChannelConfig, ChannelDims, Error};
use ibrelay_oracle::{
    check_covariance_identities, check_matrix_inequalities, empirical_capacity, empirical_eig_check,
    empirical_noise_levels, DEFAULT_SEED,
};

const NORMALIZATION_TOL: f64 = 1e-8;
const ERLANG_TOL: f64 = 1e-10;
const BIN_TOL: f64 = 0.05;
const CAPACITY_REL_TOL: f64 = 0.01;
const SANDWICH_SLACK: f64 = 1e-6;
const UB_LARGE_C_REL_TOL: f64 = 1e-3;
const NEAR_BUDGET: f64 = 0.99;
const CONCENTRATION_FRACTION: f64 = 0.90;
const QCI_LIMIT_REL_TOL: f64 = 0.05;
const MMSE_LIMIT_TOL_BITS: f64 = 1e-2;
const COV_DIAG_REL_TOL: f64 = 0.01;
const HIGH_SNR_MMSE_FRACTION: f64 = 0.95;
const CONVERGED_REL_STEP: f64 = 1e-3;
const CONVERGED_REL_GAP: f64 = 0.01;
const MONOTONE_SLACK: f64 = 1e-9;
const MC_SAMPLES: usize = 100_000;
const SIGMA2_10DB: f64 = 0.1;

#[derive(Default)]
struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn err<T>(&mut self, r: Result<T, Error>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(format!("{what}: {e}"));
                None
            }
        }
    }
}

fn dims(k: usize, m: usize) -> ChannelDims {
    ChannelDims::new(k, m).unwrap()
}

fn cfg(k: usize, m: usize, snr_db: f64, c: f64) -> ChannelConfig {
    ChannelConfig::from_snr_db(k, m, snr_db, c).unwrap()
}

fn density_normalization(c: &mut Checks) {
    for (k, m) in [(1, 1), (2, 2), (2, 4), (4, 2), (4, 4), (2, 64)] {
        if let Some(total) = c.err(EigDensity::new(dims(k, m)).expectation(|_| 1.0), "integral") {
            c.check((total - 1.0).abs() <= NORMALIZATION_TOL, || format!("{k}x{m}: integral {total}"));
        }
    }
}

fn erlang_specialization(c: &mut Checks) {
    for m in [1usize, 2, 8] {
        let d = EigDensity::new(dims(1, m));
        let fact: f64 = (1..m).map(|i| i as f64).product();
        let worst = (1..=100)
            .map(|i| {
                let l = 0.25 * i as f64;
                let want = l.powi(m as i32 - 1) * (-l).exp() / fact;
                (d.pdf(l) - want).abs()
            })
            .fold(0.0, f64::max);
        c.check(worst <= ERLANG_TOL, || format!("M={m}: max abs err {worst:e}"));
    }
}

fn monte_carlo_densities(c: &mut Checks) {
    for (k, m) in [(1, 2), (2, 2), (2, 4)] {
        if let Some(e) = c.err(empirical_eig_check(dims(k, m), MC_SAMPLES, DEFAULT_SEED), "eig check") {
            c.check(e.fit.max_rel_err <= BIN_TOL, || format!("{k}x{m} eigenvalue bins: {:.4}", e.fit.max_rel_err));
        }
        if let Some(nl) = c.err(empirical_noise_levels(dims(k, m), SIGMA2_10DB, MC_SAMPLES, DEFAULT_SEED), "noise check")
        {
            let passing: Vec<_> = nl.fits.iter().filter(|f| f.fit.max_rel_err <= BIN_TOL).collect();
            c.check(passing.len() == 1, || {
                let errs: Vec<_> = nl.fits.iter().map(|f| format!("{}={:.4}", f.convention, f.fit.max_rel_err)).collect();
                format!("{k}x{m} noise level: {} conventions fit ({})", passing.len(), errs.join(", "))
            });
        }
    }
}

fn capacity_cross_check(c: &mut Checks) {
    for db in [0.0, 10.0, 20.0] {
        if let Some(e) = c.err(empirical_capacity(&cfg(2, 2, db, 1.0), MC_SAMPLES, DEFAULT_SEED), "capacity") {
            c.check(e.rel_err() <= CAPACITY_REL_TOL, || {
                format!("{db} dB: closed {} vs mc {} ({:.2e})", e.closed_form, e.bits.mean(), e.rel_err())
            });
        }
    }
}

fn bound_sandwich(c: &mut Checks) {
    let mut cells = 0;
    for k in [1, 2, 4] {
        for m in [1, 2, 4] {
            for db in [0.0, 10.0, 20.0, 30.0, 40.0] {
                for cap in [2.0, 8.0, 20.0, 40.0] {
                    let conf = cfg(k, m, db, cap);
                    let (Some(ub), Some(cp)) = (c.err(upper_bound(&conf), "ub"), c.err(capacity(&conf), "capacity"))
                    else {
                        continue;
                    };
                    let at = format!("K={k} M={m} {db} dB C={cap}");
                    c.check(ub <= cap.min(cp) + SANDWICH_SLACK, || format!("{at}: ub {ub} cap {cp}"));
                    if let Some(r) = c.err(mmse_rate(&conf), "mmse") {
                        c.check(r.bits <= ub + SANDWICH_SLACK, || format!("{at}: mmse {} > ub {ub}", r.bits));
                    }
                    cells += 1;
                    if k > m {
                        continue;
                    }
                    let d = NoiseLevelDensity::for_config(&conf, DofConvention::default()).unwrap();
                    for b in [1u32, 2, 4] {
                        match qci_quantile_rate(&conf, 1 << b, &d) {
                            Ok(r) => c.check(r <= ub + SANDWICH_SLACK, || format!("{at} B={b}: qci {r} > ub {ub}")),
                            Err(Error::InfeasibleBudget { .. }) => {}
                            Err(e) => c.failures.push(format!("{at} B={b}: {e}")),
                        }
                    }
                }
            }
        }
    }
    c.check(cells == 180, || format!("{cells} lattice cells evaluated"));
}

fn upper_bound_limits(c: &mut Checks) {
    let conf = cfg(2, 2, 10.0, 1e4);
    if let (Some(ub), Some(cp)) = (c.err(upper_bound(&conf), "ub"), c.err(capacity(&conf), "capacity")) {
        let rel = (ub - cp).abs() / cp;
        c.check(rel <= UB_LARGE_C_REL_TOL, || format!("C=1e4: ub {ub} vs capacity {cp}"));
    }
    let high = ChannelConfig::new(dims(2, 2), 1e-6, 8.0).unwrap();
    if let Some(ub) = c.err(upper_bound(&high), "ub") {
        c.check(ub >= NEAR_BUDGET * 8.0, || format!("rho=1e6: ub {ub}"));
    }
    if let Some(ub) = c.err(upper_bound(&cfg(2, 256, 10.0, 8.0)), "ub") {
        c.check(ub >= NEAR_BUDGET * 8.0, || format!("M=256: ub {ub}"));
    }
}

fn qci_limits(c: &mut Checks) {
    let conf = cfg(1, 256, 10.0, 8.0);
    let d = NoiseLevelDensity::for_config(&conf, DofConvention::default()).unwrap();
    if let Some(grid) = c.err(concentration_grid(&d), "grid") {
        if let Some(r) = c.err(qci_grid_rate(&conf, &grid), "qci") {
            c.check(r >= CONCENTRATION_FRACTION * 8.0, || {
                format!("M=256 two-level grid: rate {r:.4} < {:.2}", CONCENTRATION_FRACTION * 8.0)
            });
        }
    }
    let conf = cfg(2, 2, 10.0, 1e3);
    let d = NoiseLevelDensity::for_config(&conf, DofConvention::default()).unwrap();
    if let (Some(r), Some(lim)) = (c.err(qci_quantile_rate(&conf, 16, &d), "qci"), c.err(qci_limit_rate(&conf, &d), "limit"))
    {
        let rel = (r - lim.large_c).abs() / lim.large_c;
        c.check(rel <= QCI_LIMIT_REL_TOL, || format!("J=16 C=1e3: rate {r:.4} vs limit {:.4} ({rel:.4})", lim.large_c));
    }
}

fn mmse_convergence(c: &mut Checks) {
    let conf = cfg(2, 2, 10.0, 1e3);
    if let (Some(r), Some(l)) = (c.err(mmse_rate(&conf), "mmse"), c.err(mmse_limits(&conf), "limit")) {
        let lim = l.large_c.unwrap();
        c.check((r.bits - lim).abs() <= MMSE_LIMIT_TOL_BITS, || format!("C=1e3: {} vs limit {lim}", r.bits));
    }
    let high = ChannelConfig::new(dims(2, 2), 1e-6, 8.0).unwrap();
    if let Some(r) = c.err(mmse_rate(&high), "mmse") {
        c.check(r.bits >= NEAR_BUDGET * 8.0, || format!("rho=1e6: mmse {}", r.bits));
    }
}

fn matrix_inequalities(c: &mut Checks) {
    for k in [1, 2, 4, 8] {
        let m = check_matrix_inequalities(k, 1000, DEFAULT_SEED);
        let v = (m.determinant_violations, m.trace_violations, m.majorization_violations);
        c.check(v == (0, 0, 0), || format!("k={k}: violations (det, trace, majorization) = {v:?}"));
    }
}

fn covariance_identities(c: &mut Checks) {
    for (k, m) in [(2, 2), (2, 4), (4, 2)] {
        let Some(cov) = c.err(check_covariance_identities(dims(k, m), SIGMA2_10DB, MC_SAMPLES, DEFAULT_SEED), "cov")
        else {
            continue;
        };
        for mom in &cov.moments {
            let (d, o) = (mom.max_diag_rel_err(), mom.max_off_diag());
            c.check(d <= COV_DIAG_REL_TOL, || format!("{k}x{m} {}: diag rel err {d:.4}", mom.name));
            c.check(o <= cov.off_diag_limit(), || format!("{k}x{m} {}: off-diag {o:.4}", mom.name));
        }
    }
}

fn column(spec: &SweepSpec, rows: &[SweepRow], name: &str) -> Vec<Option<f64>> {
    let i = spec.columns().iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| spec.cells(r)[i]).collect()
}

fn sweep(c: &mut Checks, preset: Preset) -> Option<(SweepSpec, Vec<SweepRow>)> {
    let mut spec = preset.spec();
    spec.limits = true;
    let rows = match run_sweep(&spec) {
        Ok(rows) => rows,
        Err(e) => {
            c.failures.push(format!("{preset:?}: {e}"));
            return None;
        }
    };
    let first = to_csv(&spec, &rows).unwrap();
    let again = to_csv(&spec, &run_sweep(&spec).unwrap()).unwrap();
    c.check(first == again, || format!("{preset:?}: CSV differs on rerun"));
    Some((spec, rows))
}

fn figure_reproduction(c: &mut Checks) {
    if let Some((spec, rows)) = sweep(c, Preset::Snr) {
        let (b4, b8, mmse) = (column(&spec, &rows, "qci_b4"), column(&spec, &rows, "qci_b8"), column(&spec, &rows, "mmse"));
        let cap = spec.fixed.capacity_bits;
        for (i, row) in rows.iter().enumerate() {
            let db = row.axis_value;
            let (q4, q8, r) = (b4[i].unwrap_or(0.0), b8[i].unwrap_or(0.0), mmse[i].unwrap());
            if db <= 10.0 {
                c.check(q4 > r, || format!("snr sweep {db} dB: qci_b4 {q4} <= mmse {r}"));
            }
            if db >= 40.0 {
                c.check(r > q4 && r > q8, || format!("snr sweep {db} dB: mmse {r} vs qci {q4}, {q8}"));
                c.check(r >= HIGH_SNR_MMSE_FRACTION * cap, || format!("snr sweep {db} dB: mmse {r} < 0.95 C"));
            }
        }
    }
    if let Some((spec, rows)) = sweep(c, Preset::Budget) {
        for (name, limit) in [("ub", "limit_ub"), ("qci_b4", "limit_qci"), ("qci_b8", "limit_qci"), ("mmse", "limit_mmse")] {
            let col: Vec<f64> = column(&spec, &rows, name).into_iter().flatten().collect();
            c.check(col.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK), || format!("budget sweep {name} not monotone in C"));
            let n = col.len();
            let step = (col[n - 1] - col[n - 2]).abs() / col[n - 1];
            c.check(step <= CONVERGED_REL_STEP, || format!("budget sweep {name}: last step {step:.2e}"));
            let lim = column(&spec, &rows, limit).last().copied().flatten().unwrap();
            let last = col[n - 1];
            c.check(last <= lim + SANDWICH_SLACK, || format!("budget sweep {name}: {last} above limit {lim}"));
            if !name.starts_with("qci") {
                let gap = (lim - last) / lim;
                c.check(gap <= CONVERGED_REL_GAP, || format!("budget sweep {name}: {last} vs limit {lim}"));
            }
        }
    }
    if let Some((spec, rows)) = sweep(c, Preset::Antennas) {
        let ub = column(&spec, &rows, "ub");
        let mmse = column(&spec, &rows, "mmse");
        let gaps: Vec<f64> = ub.iter().zip(&mmse).map(|(u, r)| (u.unwrap() - r.unwrap()) / u.unwrap()).collect();
        let (first, last) = (gaps[0], gaps[gaps.len() - 1]);
        c.check(last < first && last <= CONVERGED_REL_GAP, || format!("antenna sweep mmse/ub gap {first:.4} -> {last:.4}"));
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn(&mut Checks),
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "density normalization", budget: secs(1), run: density_normalization },
        Criterion { id: 2, name: "erlang specialization", budget: secs(1), run: erlang_specialization },
        Criterion { id: 3, name: "monte carlo density agreement", budget: secs(120), run: monte_carlo_densities },
        Criterion { id: 4, name: "capacity cross-check", budget: secs(60), run: capacity_cross_check },
        Criterion { id: 5, name: "bound sandwich", budget: secs(30), run: bound_sandwich },
        Criterion { id: 6, name: "upper bound limits", budget: secs(10), run: upper_bound_limits },
        Criterion { id: 7, name: "qci limits", budget: secs(10), run: qci_limits },
        Criterion { id: 8, name: "mmse limits", budget: secs(10), run: mmse_convergence },
        Criterion { id: 9, name: "matrix inequalities", budget: secs(30), run: matrix_inequalities },
        Criterion { id: 10, name: "covariance identities", budget: secs(120), run: covariance_identities },
        Criterion { id: 11, name: "figure reproduction", budget: secs(60), run: figure_reproduction },
    ];
    let mut failed = 0;
    for cr in &criteria {
        let mut checks = Checks::default();
        let start = Instant::now();
        (cr.run)(&mut checks);
        let took = start.elapsed();
        checks.check(took <= cr.budget, || format!("took {took:.2?}, budget {:?}", cr.budget));
        let status = if checks.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} criterion {:>2}: {} ({took:.2?})", cr.id, cr.name);
        for f in &checks.failures {
            println!("    {f}");
        }
        failed += usize::from(!checks.failures.is_empty());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
