//! Upper bounds on the eta amplitude over the coupling region and their maxima.
//!
//! For `P_i = |alpha_iH|^2` (the probability that an ancilla photon reaches output
//! `i`), `|eta_0|^2` is bounded by both
//!
//! ```text
//! F(P) = Pi(P) * (sum_k 1/P_k - (n+1)^2)      G(P) = Pi(P) / S(P)
//! ```
//!
//! and the success probability by `n!(N+n)/N * max H`, `H = min(F, G)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::factorial;

/// Tolerance allowed on `S(P) <= 1` when constructing a [`DistributionVector`].
pub const REGION_SLACK: f64 = 1e-12;

/// Coupling vector `P = (P_1, ..., P_{n+1})` inside the region
/// `{ P_i > 0, S(P) <= 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DistributionVector {
    p: Vec<f64>,
}

impl TryFrom<Vec<f64>> for DistributionVector {
    type Error = crate::Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<DistributionVector> for Vec<f64> {
    fn from(p: DistributionVector) -> Self {
        p.p
    }
}

impl DistributionVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return domain(format!("need at least two couplings, got {}", p.len()));
        }
        if let Some(bad) = p.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return domain(format!("couplings must be positive, found {bad}"));
        }
        let s: f64 = p.iter().sum();
        if s > 1.0 + REGION_SLACK {
            return domain(format!("coupling sum {s} exceeds 1"));
        }
        Ok(Self { p })
    }

    /// `P_i = S / (n+1)` for all `i`.
    pub fn symmetric(n: usize, s: f64) -> Result<Self> {
        Self::new(vec![s / (n + 1) as f64; n + 1])
    }

    /// `m` couplings equal to `xi` and the rest sharing `1 - m xi` equally.
    pub fn two_level(n: usize, m: usize, xi: f64) -> Result<Self> {
        if m == 0 || m > n {
            return domain(format!("m must lie in 1..={n}, got {m}"));
        }
        let zeta = (1.0 - m as f64 * xi) / (n + 1 - m) as f64;
        let mut p = vec![xi; m];
        p.extend(std::iter::repeat_n(zeta, n + 1 - m));
        Self::new(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }

    /// Ancilla photon number (`len - 1`).
    pub fn n(&self) -> usize {
        self.p.len() - 1
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn product(&self) -> f64 {
        self.p.iter().product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValues {
    pub s: f64,
    pub pi: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl BoundValues {
    pub fn at(p: &DistributionVector) -> Self {
        let f = f_of(p);
        let g = g_of(p);
        Self {
            s: p.sum(),
            pi: p.product(),
            f,
            g,
            h: f.min(g),
        }
    }
}

/// `F(P) = Pi(P) (sum 1/P_k - (n+1)^2)`. Negative when the couplings are close to
/// symmetric; callers that convert to a probability must reject `H <= 0`.
pub fn f_of(p: &DistributionVector) -> f64 {
    let k = (p.n() + 1) as f64;
    let inv: f64 = p.as_slice().iter().map(|x| 1.0 / x).sum();
    p.product() * (inv - k * k)
}

pub fn g_of(p: &DistributionVector) -> f64 {
    p.product() / p.sum()
}

pub fn h_of(p: &DistributionVector) -> f64 {
    f_of(p).min(g_of(p))
}

/// `dF/dP_i = (F - Pi / P_i) / P_i`.
pub fn grad_f(p: &DistributionVector) -> Vec<f64> {
    let f = f_of(p);
    let pi = p.product();
    p.as_slice().iter().map(|&x| (f - pi / x) / x).collect()
}

/// `dG/dP_i = G (1/P_i - 1/S)`.
pub fn grad_g(p: &DistributionVector) -> Vec<f64> {
    let g = g_of(p);
    let s = p.sum();
    p.as_slice()
        .iter()
        .map(|&x| g * (1.0 / x - 1.0 / s))
        .collect()
}

fn check_nm(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return domain("n must be >= 1");
    }
    if m == 0 || m > n {
        return domain(format!("m must lie in 1..={n}, got {m}"));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        domain("n must be >= 1")
    } else {
        Ok(())
    }
}

fn xi_m_real(n: f64, m: f64) -> f64 {
    let k = n + 1.0;
    (2.0 * m * k + 1.0 - (4.0 * m * (k - m) + 1.0).sqrt()) / (2.0 * m * (k * k + 1.0))
}

fn h_m_real(n: f64, m: f64) -> f64 {
    let xi = xi_m_real(n, m);
    xi.powf(m) * ((1.0 - m * xi) / (n + 1.0 - m)).powf(n + 1.0 - m)
}

/// The unique crossing of `F` and `G` in `(0, 1/(n+1))` along the family with `m`
/// small couplings `xi` and `n+1-m` large ones.
pub fn xi_m(n: usize, m: usize) -> Result<f64> {
    check_nm(n, m)?;
    Ok(xi_m_real(n as f64, m as f64))
}

/// Local maximum of `H` on the lossless face for the `m`-small-coupling family.
pub fn h_m(n: usize, m: usize) -> Result<f64> {
    check_nm(n, m)?;
    let xi = xi_m(n, m)?;
    let zeta = (1.0 - m as f64 * xi) / (n + 1 - m) as f64;
    Ok(xi.powi(m as i32) * zeta.powi((n + 1 - m) as i32))
}

/// Local maximum of `H` along the symmetric lossy family, reached at `S = 1 - (n+1)^-2`.
pub fn h_lossy(n: usize) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    let k = nf + 1.0;
    // n^n (n+2)^n / (n+1)^(3n+1), evaluated in logs to stay finite for large n.
    Ok((nf * nf.ln() + nf * (nf + 2.0).ln() - (3.0 * nf + 1.0) * k.ln()).exp())
}

/// Optimal coupling of the single small output on the lossless face.
pub fn p1_opt(n: usize) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    Ok((2.0 * nf + 3.0 - (4.0 * nf + 1.0).sqrt()) / (2.0 * (nf * nf + 2.0 * nf + 2.0)))
}

/// `H_1 = (1/n)^n P1_opt (1 - P1_opt)^n`, the global maximum of `H` over the region.
pub fn h1(n: usize) -> Result<f64> {
    let p = p1_opt(n)?;
    let nf = n as f64;
    Ok(nf.powi(-(n as i32)) * p * (1.0 - p).powi(n as i32))
}

/// Conversion factor `n!(N+n)/N` between `|eta_0|^2` and the success probability.
pub fn success_prefactor(n: usize, w_photons: usize) -> Result<f64> {
    check_n(n)?;
    if w_photons < 2 {
        return domain(format!(
            "the initial W state needs N >= 2 photons, got {w_photons}"
        ));
    }
    let big_n = w_photons as f64;
    Ok(factorial(n as u32) * (big_n + n as f64) / big_n)
}

/// Maximum success probability over all passive circuits with an `n`-photon ancilla.
pub fn p_max(n: usize, w_photons: usize) -> Result<f64> {
    Ok(success_prefactor(n, w_photons)? * h1(n)?)
}

/// Success probability of the symmetric lossy circuit family.
pub fn p_lossy(n: usize, w_photons: usize) -> Result<f64> {
    Ok(success_prefactor(n, w_photons)? * h_lossy(n)?)
}

/// `H_{(n+1)/2} / H_lossy` in closed form.
pub fn comp_h_ratio(n: usize) -> Result<f64> {
    check_n(n)?;
    let k = (n + 1) as f64;
    let a = k.powi(4) / (k.powi(4) - 1.0);
    let b = k * k / (k * k - 1.0);
    Ok(a * (a * b).powf((n as f64 - 1.0) / 2.0))
}

// ---------------------------------------------------------------------------
// Numeric sweep of the supporting inequalities
// ---------------------------------------------------------------------------

/// Grid size for every one-dimensional monotonicity or root check.
pub const SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    /// `"lossy"` (symmetric lossy family), `"lossless"` (two-level family on `S = 1`)
    /// or `"comparison"` (ordering of the local maxima).
    pub family: String,
    pub name: String,
    pub n: usize,
    pub m: Option<usize>,
    pub passed: bool,
    /// Positive when the check holds; its size says by how much.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub n_max: usize,
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InequalityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Checks {
    n: usize,
    out: Vec<InequalityCheck>,
}

impl Checks {
    fn push(&mut self, family: &str, name: &str, m: Option<usize>, margin: f64) {
        self.out.push(InequalityCheck {
            family: family.into(),
            name: name.into(),
            n: self.n,
            m,
            passed: margin > 0.0 && margin.is_finite(),
            margin,
        });
    }
}

/// Smallest relative step `(v[k+1] - v[k]) / |v[k]|` times `sign`; positive iff the
/// sequence is strictly monotone in the requested direction.
fn monotone_margin(values: &[f64], increasing: bool) -> f64 {
    let sign = if increasing { 1.0 } else { -1.0 };
    values
        .windows(2)
        .map(|w| sign * (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min)
}

/// Indices `k` where `values[k]` and `values[k+1]` have different signs.
fn sign_changes(values: &[f64]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] > 0.0) != (w[1] > 0.0))
        .map(|(k, _)| k)
        .collect()
}

/// Open-interval grid on `(lo, hi)` with `SWEEP_POINTS` midpoints.
fn open_grid(lo: f64, hi: f64) -> Vec<f64> {
    let k = SWEEP_POINTS as f64;
    (0..SWEEP_POINTS)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / k)
        .collect()
}

/// Closed grid on `[lo, hi]`.
fn closed_grid(lo: f64, hi: f64) -> Vec<f64> {
    let k = (SWEEP_POINTS - 1) as f64;
    (0..SWEEP_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / k)
        .collect()
}

fn symmetric_fg(n: usize, s: f64) -> (f64, f64) {
    let p = DistributionVector::symmetric(n, s).expect("grid stays inside the region");
    (f_of(&p), g_of(&p))
}

fn two_level_fg(n: usize, m: usize, xi: f64) -> (f64, f64) {
    let p = DistributionVector::two_level(n, m, xi).expect("grid stays inside the region");
    (f_of(&p), g_of(&p))
}

fn lossy_family_checks(c: &mut Checks) {
    let n = c.n;
    let nf = n as f64;
    let s_star = 1.0 - 1.0 / ((n + 1) * (n + 1)) as f64;
    let lo = nf / (nf + 1.0);

    let grid = closed_grid(lo, 1.0);
    let (f, g): (Vec<f64>, Vec<f64>) = grid.iter().map(|&s| symmetric_fg(n, s)).unzip();
    c.push(
        "lossy",
        "F decreasing on [n/(n+1), 1]",
        None,
        monotone_margin(&f, false),
    );

    let g_all: Vec<f64> = closed_grid(1e-3, 1.0)
        .iter()
        .map(|&s| symmetric_fg(n, s).1)
        .collect();
    c.push(
        "lossy",
        "G increasing on (0, 1]",
        None,
        monotone_margin(&g_all, true),
    );

    let diff: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - b).collect();
    let changes = sign_changes(&diff);
    let single = match changes.as_slice() {
        [k] if grid[*k] <= s_star && s_star <= grid[k + 1] => 1.0,
        _ => -1.0,
    };
    c.push(
        "lossy",
        "single F/G crossing brackets S = 1-(n+1)^-2",
        None,
        single,
    );

    let (fs, gs) = symmetric_fg(n, s_star);
    c.push(
        "lossy",
        "F = G at S = 1-(n+1)^-2",
        None,
        1e-9 - ((fs - gs) / gs).abs(),
    );
    let h_closed = h_lossy(n).expect("n >= 1");
    c.push(
        "lossy",
        "H at the crossing equals H_lossy",
        None,
        1e-9 - (gs / h_closed - 1.0).abs(),
    );
}

fn lossless_family_checks(c: &mut Checks, m: usize) {
    let n = c.n;
    let top = 1.0 / (n + 1) as f64;
    let xi = xi_m(n, m).expect("valid (n, m)");

    c.push(
        "lossless",
        "xi_m inside (0, 1/(n+1))",
        Some(m),
        xi.min(top - xi),
    );

    let (fx, gx) = two_level_fg(n, m, xi);
    c.push(
        "lossless",
        "F = G at xi_m",
        Some(m),
        1e-9 - ((fx - gx) / gx).abs(),
    );

    let grid = open_grid(0.0, top);
    let (f, g): (Vec<f64>, Vec<f64>) = grid.iter().map(|&x| two_level_fg(n, m, x)).unzip();
    let diff: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - b).collect();
    let unique = match sign_changes(&diff).as_slice() {
        [k] if grid[*k] <= xi && xi <= grid[k + 1] => 1.0,
        _ => -1.0,
    };
    c.push(
        "lossless",
        "unique root of F = G in (0, 1/(n+1))",
        Some(m),
        unique,
    );
    c.push(
        "lossless",
        "G increasing on (0, 1/(n+1))",
        Some(m),
        monotone_margin(&g, true),
    );

    let right: Vec<f64> = closed_grid(xi, top)
        .into_iter()
        .take(SWEEP_POINTS - 1)
        .map(|x| two_level_fg(n, m, x).0)
        .collect();
    c.push(
        "lossless",
        "F decreasing on [xi_m, 1/(n+1))",
        Some(m),
        monotone_margin(&right, false),
    );

    let h_closed = h_m(n, m).expect("valid (n, m)");
    c.push(
        "lossless",
        "H_m = F(xi_m)",
        Some(m),
        1e-9 - (fx / h_closed - 1.0).abs(),
    );
}

fn comparison_checks(c: &mut Checks) {
    let n = c.n;
    let best = h1(n).expect("n >= 1");
    for m in 2..=n {
        let hm = h_m(n, m).expect("valid (n, m)");
        c.push("comparison", "H_1 > H_m", Some(m), best / hm - 1.0);
    }
    let lossy = h_lossy(n).expect("n >= 1");
    c.push("comparison", "H_1 > H_lossy", None, best / lossy - 1.0);

    let ratio = comp_h_ratio(n).expect("n >= 1");
    c.push(
        "comparison",
        "H_(n+1)/2 / H_lossy > 1 (closed form)",
        None,
        ratio - 1.0,
    );
    let direct = h_m_real(n as f64, (n as f64 + 1.0) / 2.0) / lossy;
    c.push(
        "comparison",
        "closed-form ratio agrees with H_m at m = (n+1)/2",
        None,
        1e-9 - (direct / ratio - 1.0).abs(),
    );

    if n >= 2 {
        let logs: Vec<f64> = closed_grid(1.0, n as f64)
            .iter()
            .map(|&m| h_m_real(n as f64, m).ln())
            .collect();
        c.push(
            "comparison",
            "log H_m decreasing in real m on [1, n]",
            None,
            monotone_margin(&logs, false),
        );
    }
    let h1_from_xi = h_m(n, 1).expect("n >= 1");
    c.push(
        "comparison",
        "H_1 from xi_1 agrees with P1_opt form",
        None,
        1e-12 - (h1_from_xi / best - 1.0).abs(),
    );
}

/// Numerically verifies the monotonicity, root and comparison claims behind the
/// optimum for every `n` in `1..=n_max`.
pub fn verify_appendices(n_max: usize) -> InequalityReport {
    let checks = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut c = Checks { n, out: Vec::new() };
            lossy_family_checks(&mut c);
            for m in 1..=n {
                lossless_family_checks(&mut c, m);
            }
            comparison_checks(&mut c);
            c.out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    InequalityReport { n_max, checks }
}
