//! The aggregated `verify` suite.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use w_expander::bounds::{self, h_of, DistributionVector};
use w_expander::circuit::extract_coefficients;
use w_expander::circuit::{build_hm, build_lossy, build_optimal, compile, CompiledCircuit};
use w_expander::expansion::{eta_closed_form, eta_via_engine, verify_exact_w, WExpansionProblem};
use w_expander::fock::{check_unitary, transition_amplitude, FockState, ModeUnitary};
use w_expander::optimizer::{
    end_to_end_optimality, maximize_h, scan_symmetric_lossy, Classification, SearchConfig,
};
use w_expander::{Result, ALGEBRA_TOL, STATE_TOL};

/// Reference N for the success-probability comparisons.
const REFERENCE_N: usize = 3;
const SEED: u64 = 7;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub n_max: usize,
    pub engine_n_max: usize,
    pub all_passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Output probabilities of a Haar-random circuit sum to one.
fn engine_completeness(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for spatial in 1..=3 {
        let u = ModeUnitary::haar_random(spatial, rng);
        let dim = u.dim();
        for photons in 1..=3u32 {
            let input = FockState::all_with_photons(dim, photons).swap_remove(0);
            let total: f64 = FockState::all_with_photons(dim, photons)
                .iter()
                .map(|out| transition_amplitude(&u, &input, out).map(|a| a.probability()))
                .sum::<Result<f64>>()?;
            worst = worst.max((total - 1.0).abs());
        }
    }
    Ok(check(
        "engine.completeness",
        worst < ALGEBRA_TOL,
        format!("max |sum p - 1| = {worst:.2e}"),
    ))
}

/// Permanent-based eta against the closed forms on random unitaries.
fn engine_equivalence(engine_n_max: usize, rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for n in 1..=engine_n_max.min(4) {
        for _ in 0..20 {
            let u = ModeUnitary::haar_random(n + 2, rng);
            let c = CompiledCircuit::from_unitary(n, u, (1..=n + 1).collect())?;
            let closed = eta_closed_form(&extract_coefficients(&c), n);
            worst = worst.max(closed.max_deviation(&eta_via_engine(&c)));
        }
    }
    Ok(check(
        "expansion.engine_equivalence",
        worst < 1e-11,
        format!("max |eta_engine - eta_closed| = {worst:.2e}"),
    ))
}

fn saturates(name: String, c: CompiledCircuit, target: f64) -> Result<Check> {
    if !check_unitary(&c.unitary, ALGEBRA_TOL).is_empty() {
        return Ok(check(name, false, "compiled unitary is not unitary"));
    }
    let report = verify_exact_w(&WExpansionProblem::new(REFERENCE_N, c)?, STATE_TOL)?;
    let diff = (report.p_suc - target).abs();
    Ok(check(
        name,
        report.exact_w && diff < 1e-10,
        format!(
            "exact_w = {}, p_suc = {:.12}, target = {target:.12}",
            report.exact_w, report.p_suc
        ),
    ))
}

/// Builders reach their closed-form success probabilities.
fn circuit_saturation(engine_n_max: usize, tamper: bool) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let delta = if tamper { 1e-3 } else { 0.0 };
    for n in 1..=engine_n_max {
        let pre = bounds::success_prefactor(n, REFERENCE_N)?;
        let p1 = bounds::p1_opt(n)? + delta;
        let claimed = h_of(&DistributionVector::two_level(n, 1, p1)?);
        out.push(saturates(
            format!("saturation.optimal.n{n}"),
            compile(&build_optimal(n)?)?,
            pre * claimed,
        )?);
        for m in 2..=n {
            out.push(saturates(
                format!("saturation.hm.n{n}.m{m}"),
                compile(&build_hm(n, m)?)?,
                pre * bounds::h_m(n, m)?,
            )?);
        }
        out.push(saturates(
            format!("saturation.lossy.n{n}"),
            compile(&build_lossy(n)?)?,
            pre * bounds::h_lossy(n)?,
        )?);
    }
    Ok(out)
}

fn optimizer_agreement(n_max: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let cfg = SearchConfig::default();
    for n in 1..=n_max.min(6) {
        let r = maximize_h(n, &cfg)?;
        let target = bounds::h1(n)?;
        out.push(check(
            format!("optimizer.maximize_h.n{n}"),
            (r.best_h - target).abs() < 1e-6
                && r.classification == Classification::LosslessM { m: 1 },
            format!(
                "best_H = {:.10}, H_1 = {target:.10}, {:?}",
                r.best_h, r.classification
            ),
        ));
        let scan = scan_symmetric_lossy(n)?;
        let s_star = 1.0 - 1.0 / ((n + 1) * (n + 1)) as f64;
        out.push(check(
            format!("optimizer.lossy_scan.n{n}"),
            (scan.s_star - s_star).abs() < 1e-9,
            format!("S* = {:.12}", scan.s_star),
        ));
    }
    Ok(out)
}

fn monte_carlo(engine_n_max: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in 1..=engine_n_max.min(2) {
        let r = end_to_end_optimality(n, 500, REFERENCE_N, SEED)?;
        out.push(check(
            format!("optimizer.monte_carlo.n{n}"),
            r.exceedances == 0 && r.exact_passes > 0,
            format!(
                "{} exact circuits, {} above P_max, best {:.6} vs P_max {:.6}",
                r.exact_passes, r.exceedances, r.best_p_suc, r.p_max
            ),
        ));
    }
    Ok(out)
}

pub fn run(n_max: usize, engine_n_max: usize, tamper: bool) -> Result<VerifyReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checks = vec![
        engine_completeness(&mut rng)?,
        engine_equivalence(engine_n_max, &mut rng)?,
    ];
    checks.extend(circuit_saturation(engine_n_max, tamper)?);

    let appendices = bounds::verify_appendices(n_max);
    let failed: Vec<String> = appendices
        .failures()
        .map(|c| format!("{}:{} n={} m={:?}", c.family, c.name, c.n, c.m))
        .collect();
    checks.push(check(
        "bounds.inequalities",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} sub-checks up to n = {n_max}", appendices.checks.len())
        } else {
            failed.join("; ")
        },
    ));

    checks.extend(optimizer_agreement(n_max)?);
    checks.extend(monte_carlo(engine_n_max)?);
    Ok(VerifyReport {
        n_max,
        engine_n_max,
        all_passed: checks.iter().all(|c| c.passed),
        seconds: start.elapsed().as_secs_f64(),
        checks,
    })
}
