//! Numerical maximization of `H = min(F, G)` over the coupling region, checks of the
//! local-maximum conditions, and a Monte-Carlo search over exact expanders.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, grad_f, grad_g, h_of, DistributionVector};
use crate::circuit::{build_optimal, compile, CircuitSpec, Element};
use crate::error::{domain, Result};
use crate::expansion::{verify_exact_w, WExpansionProblem};
use crate::fock::Polarization;
use crate::nelder_mead::{self, NelderMeadConfig};
use crate::STATE_TOL;

/// Couplings are kept strictly above this floor during the search.
pub const MIN_COUPLING: f64 = 2e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Simplex iterations per descent.
    pub max_iters: usize,
    pub tol_x: f64,
    /// Relative tolerance on `H` for convergence and for tie-breaking across restarts.
    pub tol_f: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 12,
            max_iters: 20_000,
            tol_x: 1e-13,
            tol_f: 1e-13,
            seed: 2011,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return domain("restarts must be >= 1");
        }
        if self.max_iters == 0 {
            return domain("max_iters must be >= 1");
        }
        if !(self.tol_x > 0.0 && self.tol_f > 0.0) {
            return domain("tolerances must be positive");
        }
        Ok(())
    }
}

/// Which stationary family a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    /// On `S = 1` with `m` equal small couplings and `n+1-m` equal large ones.
    LosslessM {
        m: usize,
    },
    /// All couplings equal with `S = 1 - (n+1)^-2`.
    LossySymmetric,
    BoundaryOther,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub n: usize,
    pub best_p: DistributionVector,
    pub best_h: f64,
    pub converged: bool,
    pub classification: Classification,
    pub trace: Vec<RestartTrace>,
}

fn objective(p: &[f64]) -> f64 {
    const PENALTY: f64 = 1e6;
    match DistributionVector::new(p.to_vec()) {
        Ok(dv) => {
            let h = h_of(&dv);
            if h > 0.0 {
                -h.ln()
            } else {
                PENALTY - h
            }
        }
        Err(_) => 2.0 * PENALTY,
    }
}

/// Clamps into the region: floor each coupling, rescale when `S > 1`.
fn project(x: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = x.iter().map(|v| v.max(MIN_COUPLING)).collect();
    let s: f64 = p.iter().sum();
    if s > 1.0 {
        p.iter_mut().for_each(|v| *v = (*v / s).max(MIN_COUPLING));
        let s2: f64 = p.iter().sum();
        if s2 > 1.0 {
            // only reachable when floors were lifted; shave the largest coupling
            let (imax, _) = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            p[imax] -= s2 - 1.0;
        }
    }
    p
}

/// Coordinates on the `S = 1` face: the first `n` couplings, the last is implied.
fn face_point(y: &[f64]) -> Vec<f64> {
    let mut p = y.to_vec();
    p.push(1.0 - y.iter().sum::<f64>());
    p
}

fn face_objective(y: &[f64]) -> f64 {
    let p = face_point(y);
    if p.iter().any(|&v| v <= MIN_COUPLING) {
        return 2e6;
    }
    objective(&p)
}

/// Repeated simplex descents from the current best until the value stops improving.
fn descend<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: Vec<f64>,
    cfg: &SearchConfig,
) -> (Vec<f64>, f64, usize, bool) {
    let nm = NelderMeadConfig {
        max_iters: cfg.max_iters,
        tol_x: cfg.tol_x,
        tol_f: cfg.tol_f,
    };
    let mut x = x0;
    let mut value = f(&x);
    let mut iters = 0;
    let mut converged = false;
    for cycle in 0..40 {
        let scale = 0.1 * 0.5f64.powi(cycle.min(20));
        let steps: Vec<f64> = x.iter().map(|v| scale * v.abs().max(1e-3)).collect();
        let m = nelder_mead::minimize(&f, &x, &steps, &nm);
        iters += m.iters;
        let improvement = value - m.value;
        if m.value < value {
            x = m.x;
            value = m.value;
        }
        converged = m.converged;
        if improvement.abs() <= cfg.tol_f && cycle > 0 {
            break;
        }
    }
    (x, value, iters, converged)
}

fn sample_start(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(Exp1) + 1e-9).collect();
    let total: f64 = w.iter().sum();
    let s = 1.0 - rng.random::<f64>();
    w.iter()
        .map(|x| (x / total * s).max(MIN_COUPLING))
        .collect()
}

fn run_restart(n: usize, restart: usize, cfg: &SearchConfig) -> (RestartTrace, bool) {
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed ^ (restart as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let start = sample_start(n, &mut rng);

    // interior phase with projection onto the region
    let (xa, _, it_a, conv_a) = descend(|x: &[f64]| objective(&project(x)), start.clone(), cfg);
    let pa = project(&xa);
    let va = objective(&pa);

    // lossless phase on the S = 1 face
    let s: f64 = pa.iter().sum();
    let y0: Vec<f64> = pa[..n].iter().map(|v| v / s).collect();
    let (yb, vb, it_b, conv_b) = descend(face_objective, y0, cfg);
    let pb = face_point(&yb);

    let (end, converged) = if vb < va { (pb, conv_b) } else { (pa, conv_a) };
    let h = h_of(&DistributionVector::new(end.clone()).expect("projected point lies in region"));
    (
        RestartTrace {
            restart,
            start,
            end,
            value: h,
            iterations: it_a + it_b,
        },
        converged,
    )
}

fn sorted(p: &[f64]) -> Vec<f64> {
    let mut q = p.to_vec();
    q.sort_by(f64::total_cmp);
    q
}

/// Multi-start simplex search for `max H` over the region.
pub fn maximize_h(n: usize, cfg: &SearchConfig) -> Result<OptimizationResult> {
    if n == 0 {
        return domain("n must be >= 1");
    }
    cfg.validate()?;
    let runs: Vec<(RestartTrace, bool)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(n, r, cfg))
        .collect();

    let mut best: Option<&(RestartTrace, bool)> = None;
    for run in &runs {
        best = match best {
            None => Some(run),
            Some(b) => {
                let (hb, hr) = (b.0.value, run.0.value);
                let tie = (hb - hr).abs() <= cfg.tol_f * hb.abs().max(hr.abs());
                if (!tie && hr > hb) || (tie && sorted(&run.0.end) < sorted(&b.0.end)) {
                    Some(run)
                } else {
                    Some(b)
                }
            }
        };
    }
    let (trace, converged) = best.expect("restarts >= 1").clone();
    let best_p = DistributionVector::new(trace.end.clone())?;
    Ok(OptimizationResult {
        n,
        best_h: h_of(&best_p),
        classification: classify(&best_p),
        best_p,
        converged,
        trace: runs.into_iter().map(|r| r.0).collect(),
    })
}

/// Relative tolerance used to group equal couplings when classifying.
pub const CLASSIFY_TOL: f64 = 1e-3;

pub fn classify(p: &DistributionVector) -> Classification {
    let n = p.n();
    let q = sorted(p.as_slice());
    let close = |a: f64, b: f64| (a - b).abs() <= CLASSIFY_TOL * a.abs().max(b.abs());
    let s = p.sum();
    let all_equal = q.iter().all(|&x| close(x, q[0]));
    if all_equal {
        let s_star = 1.0 - 1.0 / ((n + 1) * (n + 1)) as f64;
        if (s - s_star).abs() <= 1e-4 {
            return Classification::LossySymmetric;
        }
        return Classification::BoundaryOther;
    }
    if (s - 1.0).abs() <= 1e-6 {
        let m = q.iter().take_while(|&&x| close(x, q[0])).count();
        if q[m..].iter().all(|&x| close(x, q[n])) {
            return Classification::LosslessM { m };
        }
    }
    Classification::BoundaryOther
}

// ---------------------------------------------------------------------------
// Local-maximum conditions
// ---------------------------------------------------------------------------

/// Two perturbation directions `u`, `v` spanning the disc `P + a u + b v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBasis {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Whether both directions are tangent to the `S = 1` face.
    pub constrained: bool,
}

impl PerturbationBasis {
    /// `u = e_1`, `v = e_{n+1}`.
    pub fn unconstrained(n: usize) -> Self {
        let mut u = vec![0.0; n + 1];
        let mut v = vec![0.0; n + 1];
        u[0] = 1.0;
        v[n] = 1.0;
        Self {
            u,
            v,
            constrained: false,
        }
    }

    /// `e_1` and `e_{n+1}` with their components along `grad S = (1, ..., 1)` removed.
    pub fn constrained(n: usize) -> Self {
        let base = Self::unconstrained(n);
        let k = (n + 1) as f64;
        let strip = |w: Vec<f64>| -> Vec<f64> {
            let along: f64 = w.iter().sum::<f64>() / k;
            w.into_iter().map(|x| x - along).collect()
        };
        Self {
            u: strip(base.u),
            v: strip(base.v),
            constrained: true,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalized cross-condition residual
/// `(<u,dF><v,dG> - <v,dF><u,dG>) / (|<u,dF><v,dG>| + |<v,dF><u,dG>|)`, in `[-1, 1]`.
pub fn cross_residual(p: &DistributionVector, basis: &PerturbationBasis) -> f64 {
    let (gf, gg) = (grad_f(p), grad_g(p));
    let left = dot(&basis.u, &gf) * dot(&basis.v, &gg);
    let right = dot(&basis.v, &gf) * dot(&basis.u, &gg);
    let scale = left.abs() + right.abs();
    if scale == 0.0 {
        0.0
    } else {
        (left - right) / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMaxReport {
    pub h: f64,
    pub samples: usize,
    /// Perturbations that left the region.
    pub skipped: usize,
    /// Perturbations with `H(P + dP) > H(P) + 1e-12`.
    pub improving: usize,
    pub max_gain: f64,
    pub cross_residual: f64,
    pub disc_ok: bool,
    pub cross_ok: bool,
}

impl LocalMaxReport {
    pub fn is_local_max(&self) -> bool {
        self.disc_ok && self.cross_ok
    }
}

pub const DISC_DIRECTIONS: usize = 128;
pub const CROSS_TOL: f64 = 1e-9;
pub const GAIN_TOL: f64 = 1e-12;

/// Samples `H` on discs of radius `eps`, `eps/2`, `eps/4` in the plane of `basis`
/// and evaluates the cross condition with analytic gradients.
pub fn verify_local_max(
    p: &DistributionVector,
    basis: &PerturbationBasis,
    eps: f64,
) -> Result<LocalMaxReport> {
    if eps.is_nan() || eps <= 0.0 {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let len = p.as_slice().len();
    if basis.u.len() != len || basis.v.len() != len {
        return domain("basis dimension does not match P");
    }
    let h0 = h_of(p);
    let (mut samples, mut skipped, mut improving) = (0, 0, 0);
    let mut max_gain = f64::NEG_INFINITY;
    for radius in [eps, eps / 2.0, eps / 4.0] {
        for k in 0..DISC_DIRECTIONS {
            let theta = 2.0 * PI * k as f64 / DISC_DIRECTIONS as f64;
            let (s, c) = theta.sin_cos();
            let moved: Vec<f64> = (0..len)
                .map(|i| p.as_slice()[i] + radius * (c * basis.u[i] + s * basis.v[i]))
                .collect();
            let Ok(q) = DistributionVector::new(moved) else {
                skipped += 1;
                continue;
            };
            samples += 1;
            let gain = h_of(&q) - h0;
            max_gain = max_gain.max(gain);
            if gain > GAIN_TOL {
                improving += 1;
            }
        }
    }
    let residual = cross_residual(p, basis);
    Ok(LocalMaxReport {
        h: h0,
        samples,
        skipped,
        improving,
        max_gain,
        cross_residual: residual,
        disc_ok: samples > 0 && improving == 0,
        cross_ok: residual.abs() < CROSS_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossyScan {
    pub s_star: f64,
    pub h_star: f64,
}

/// Golden-section maximization of `min(F, G)` along `P_i = S/(n+1)`.
pub fn scan_symmetric_lossy(n: usize) -> Result<LossyScan> {
    if n == 0 {
        return domain("n must be >= 1");
    }
    let h_at = |s: f64| h_of(&DistributionVector::symmetric(n, s).expect("S in (0, 1]"));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-6, 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut hc, mut hd) = (h_at(c), h_at(d));
    while b - a > 1e-15 {
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - ratio * (b - a);
            hc = h_at(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + ratio * (b - a);
            hd = h_at(d);
        }
    }
    let s_star = 0.5 * (a + b);
    Ok(LossyScan {
        s_star,
        h_star: h_at(s_star),
    })
}

// ---------------------------------------------------------------------------
// Monte-Carlo search over exact expanders
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub w_photons: usize,
    pub attempts: usize,
    pub exact_passes: usize,
    pub exceedances: usize,
    pub p_max: f64,
    pub best_p_suc: f64,
    /// `p_suc` of the reference optimal circuit, always evaluated first.
    pub reference_p_suc: f64,
    /// Largest `p_suc - p_max` seen among exact passes.
    pub max_excess: f64,
}

pub const EXCEED_TOL: f64 = 1e-9;

/// Random splitting cascade from `running` into `taps`, with optional losses and a
/// common phase on the arm.
fn random_arm(running: usize, taps: &[usize], rng: &mut ChaCha8Rng) -> Vec<Element> {
    let mut out = Vec::new();
    if rng.random_bool(0.3) {
        let t = rng.random_range(0.3..1.0);
        out.push(Element::Loss {
            mode: running,
            t_h: t,
            t_v: t,
        });
    }
    if rng.random_bool(0.3) {
        out.push(Element::PhaseShifter {
            mode: running,
            phase: rng.random_range(0.0..2.0 * PI),
            polarization: None,
        });
    }
    for &tap in taps {
        out.push(Element::Bs {
            modes: (running, tap),
            t: rng.random_range(0.05..0.95),
        });
    }
    for &m in std::iter::once(&running).chain(taps) {
        if rng.random_bool(0.1) {
            let t = rng.random_range(0.5..1.0);
            out.push(Element::Loss {
                mode: m,
                t_h: t,
                t_v: t,
            });
        }
    }
    out
}

/// Two arms behind a PDBS with `T_H = m xi_m`, random cascades and losses.
fn sample_two_arm(n: usize, rng: &mut ChaCha8Rng) -> CircuitSpec {
    let m = rng.random_range(1..=n);
    let t_h = m as f64 * bounds::xi_m(n, m).expect("1 <= m <= n");
    let arm_t: Vec<usize> = (3..=m + 1).collect();
    let arm_r: Vec<usize> = (m + 2..=n + 1).collect();
    let mut elements = vec![
        Element::Pdbs {
            modes: (1, 2),
            t_h,
            t_v: 1.0 - t_h,
        },
        Element::PhaseShifter {
            mode: 1,
            phase: PI,
            polarization: Some(Polarization::V),
        },
    ];
    elements.extend(random_arm(2, &arm_t, rng));
    elements.extend(random_arm(1, &arm_r, rng));
    let mut output_modes = vec![2];
    output_modes.extend(&arm_t);
    output_modes.push(1);
    output_modes.extend(&arm_r);
    CircuitSpec {
        n,
        width: n + 1,
        elements,
        output_modes,
        label: format!("random two-arm m={m}"),
    }
}

/// Single observed arm: `T_H = T_V / (n+1)^2` with `T_V` random.
fn sample_single_arm(n: usize, rng: &mut ChaCha8Rng) -> CircuitSpec {
    let t_v = rng.random_range(0.05..=1.0);
    let t_h = t_v / ((n + 1) * (n + 1)) as f64;
    let taps: Vec<usize> = (3..=n + 2).collect();
    let mut elements = vec![Element::Pdbs {
        modes: (1, 2),
        t_h,
        t_v,
    }];
    elements.extend(random_arm(1, &taps, rng));
    let mut output_modes = vec![1];
    output_modes.extend(&taps);
    CircuitSpec {
        n,
        width: n + 2,
        elements,
        output_modes,
        label: "random single-arm".into(),
    }
}

/// The optimal circuit with its cascade slightly detuned.
fn sample_near_optimal(n: usize, rng: &mut ChaCha8Rng) -> CircuitSpec {
    let mut spec = build_optimal(n).expect("n >= 1");
    for e in &mut spec.elements {
        if let Element::Bs { t, .. } = e {
            *t = (*t + rng.random_range(-1e-3..1e-3)).clamp(0.0, 1.0);
        }
    }
    spec.label = "near-optimal".into();
    spec
}

/// Unconstrained PDBS parameters; almost never an exact expander.
fn sample_free(n: usize, rng: &mut ChaCha8Rng) -> CircuitSpec {
    let mut spec = sample_two_arm(n, rng);
    spec.elements[0] = Element::Pdbs {
        modes: (1, 2),
        t_h: rng.random_range(0.0..1.0),
        t_v: rng.random_range(0.0..1.0),
    };
    spec.label = "random free PDBS".into();
    spec
}

fn sample_circuit(n: usize, rng: &mut ChaCha8Rng) -> CircuitSpec {
    let u: f64 = rng.random();
    if u < 0.45 {
        sample_two_arm(n, rng)
    } else if u < 0.70 {
        sample_single_arm(n, rng)
    } else if u < 0.85 {
        sample_near_optimal(n, rng)
    } else {
        sample_free(n, rng)
    }
}

/// Samples circuits until `trials` exact expanders have been evaluated (or four times
/// as many attempts were made) and counts any success probability above `P_max`.
pub fn end_to_end_optimality(
    n: usize,
    trials: usize,
    w_photons: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    let p_max = bounds::p_max(n, w_photons)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonteCarloReport {
        n,
        w_photons,
        attempts: 0,
        exact_passes: 0,
        exceedances: 0,
        p_max,
        best_p_suc: 0.0,
        reference_p_suc: 0.0,
        max_excess: f64::NEG_INFINITY,
    };
    let max_attempts = trials.saturating_mul(4).max(1);
    while report.exact_passes < trials && report.attempts < max_attempts {
        let spec = if report.attempts == 0 {
            build_optimal(n)?
        } else {
            sample_circuit(n, &mut rng)
        };
        let problem = WExpansionProblem::new(w_photons, compile(&spec)?)?;
        let r = verify_exact_w(&problem, STATE_TOL)?;
        if report.attempts == 0 {
            report.reference_p_suc = r.p_suc;
        }
        report.attempts += 1;
        if !r.exact_w {
            continue;
        }
        report.exact_passes += 1;
        report.best_p_suc = report.best_p_suc.max(r.p_suc);
        report.max_excess = report.max_excess.max(r.p_suc - p_max);
        if r.p_suc > p_max + EXCEED_TOL {
            report.exceedances += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn config_validation() {
        let bad = SearchConfig {
            restarts: 0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchConfig {
            tol_f: 0.0,
            ..SearchConfig::default()
        };
        assert!(maximize_h(2, &bad).is_err());
        assert!(maximize_h(0, &SearchConfig::default()).is_err());
    }

    #[test]
    fn n1_and_n2_optimum() {
        let r = maximize_h(1, &SearchConfig::default()).unwrap();
        assert_abs_diff_eq!(r.best_h, 0.2, epsilon = 1e-6);
        let q = sorted(r.best_p.as_slice());
        assert_abs_diff_eq!(q[0], (5.0 - 5f64.sqrt()) / 10.0, epsilon = 1e-4);
        assert_abs_diff_eq!(q[1], (5.0 + 5f64.sqrt()) / 10.0, epsilon = 1e-4);
        let r = maximize_h(2, &SearchConfig::default()).unwrap();
        assert_abs_diff_eq!(r.best_h, 0.032, epsilon = 1e-6);
        assert_eq!(r.classification, Classification::LosslessM { m: 1 });
    }

    #[test]
    fn search_is_reproducible() {
        let cfg = SearchConfig {
            restarts: 4,
            ..SearchConfig::default()
        };
        let a = maximize_h(3, &cfg).unwrap();
        let b = maximize_h(3, &cfg).unwrap();
        assert_eq!(a, b);
        for t in &a.trace {
            assert!(t.end.iter().all(|&x| x > 1e-12));
            assert!(t.end.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn classification_cases() {
        let n = 3;
        let xi = bounds::xi_m(n, 2).unwrap();
        let p = DistributionVector::two_level(n, 2, xi).unwrap();
        assert_eq!(classify(&p), Classification::LosslessM { m: 2 });
        let s = 1.0 - 1.0 / 16.0;
        assert_eq!(
            classify(&DistributionVector::symmetric(n, s).unwrap()),
            Classification::LossySymmetric
        );
        let other = DistributionVector::new(vec![0.1, 0.2, 0.3, 0.15]).unwrap();
        assert_eq!(classify(&other), Classification::BoundaryOther);
    }

    #[test]
    fn lossy_scan() {
        let r = scan_symmetric_lossy(1).unwrap();
        assert_abs_diff_eq!(r.s_star, 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(r.h_star, 3.0 / 16.0, epsilon = 1e-10);
        let r = scan_symmetric_lossy(2).unwrap();
        assert_abs_diff_eq!(r.s_star, 8.0 / 9.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.h_star, 64.0 / 2187.0, epsilon = 1e-10);
        let r = scan_symmetric_lossy(5).unwrap();
        assert_abs_diff_eq!(r.s_star, 1.0 - 1.0 / 36.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.h_star, bounds::h_lossy(5).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn basis_is_tangent() {
        let b = PerturbationBasis::constrained(4);
        assert!(b.u.iter().sum::<f64>().abs() < 1e-15);
        assert!(b.v.iter().sum::<f64>().abs() < 1e-15);
        assert_abs_diff_eq!(b.u[0], 4.0 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.v[4], 4.0 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.u[4], -1.0 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn local_max_checks() {
        let n = 2;
        let s = 1.0 - 1.0 / 9.0;
        let lossy = DistributionVector::symmetric(n, s).unwrap();
        let r = verify_local_max(&lossy, &PerturbationBasis::unconstrained(n), 1e-4).unwrap();
        assert!(r.is_local_max(), "{r:?}");

        let n = 3;
        let xi = bounds::xi_m(n, 1).unwrap();
        let lossless = DistributionVector::two_level(n, 1, xi).unwrap();
        let r = verify_local_max(&lossless, &PerturbationBasis::constrained(n), 1e-4).unwrap();
        assert!(r.is_local_max(), "{r:?}");

        let sym = DistributionVector::symmetric(2, 1.0).unwrap();
        let r = verify_local_max(&sym, &PerturbationBasis::constrained(2), 1e-4).unwrap();
        assert!(r.improving > 0);
        assert!(!r.is_local_max());

        assert!(verify_local_max(&sym, &PerturbationBasis::constrained(2), 0.0).is_err());
        assert!(verify_local_max(&sym, &PerturbationBasis::constrained(3), 1e-4).is_err());
    }

    #[test]
    fn monte_carlo_smoke() {
        let r = end_to_end_optimality(1, 300, 3, 5).unwrap();
        assert_eq!(r.exceedances, 0);
        assert!(r.exact_passes >= 300);
        assert_abs_diff_eq!(r.reference_p_suc, r.p_max, epsilon = 1e-12);
        assert!(r.p_max - r.best_p_suc < 1e-3);
    }
}
