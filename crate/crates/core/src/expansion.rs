//! A compiled circuit viewed as a W-state expander.
//!
//! The accessed photon of `|W_N>` enters spatial mode 1 (as H or V), the `n`-photon
//! H ancilla enters spatial mode 2, and success means one photon in each post-selected
//! output. The photon count `N` of the initial W state factors out of every amplitude
//! condition, so verification works on the `(n+1)`-photon sector only.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::circuit::{extract_coefficients, Coefficients, CompiledCircuit};
use crate::error::{domain, Error, Result};
use crate::factorial;
use crate::fock::{transition_amplitude, FockState, Polarization, PolarizedMode};

/// `eta_0` (all-H amplitude from the H term) and `eta_1..eta_{n+1}` (single V at
/// output `i` from the V term), both with the `1/n!` ancilla normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaVector {
    #[serde(with = "crate::complex_json")]
    pub eta0: Complex64,
    #[serde(with = "crate::complex_json::vec")]
    pub eta: Vec<Complex64>,
}

impl EtaVector {
    /// Largest componentwise deviation from `other`.
    pub fn max_deviation(&self, other: &EtaVector) -> f64 {
        self.eta
            .iter()
            .zip(&other.eta)
            .map(|(a, b)| (a - b).norm())
            .fold((self.eta0 - other.eta0).norm(), f64::max)
    }
}

/// The condition an amplitude violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// H term into a pattern with exactly one V (must vanish).
    GammaNonzero,
    /// H term into the all-V pattern (must vanish).
    AllVFromH,
    /// H term into a pattern with between 2 and n V photons (must vanish).
    MultiVFromH,
    /// V term into the all-H pattern (must vanish).
    NoVFromV,
    /// V term into a pattern with two or more V photons (must vanish).
    MultiVFromV,
    /// `eta_i != eta_0`.
    EtaMismatch,
    /// `eta_0 = 0`: the post-selected output never occurs.
    ZeroSuccess,
    /// Ancilla H photon leaks into a V output.
    AlphaV,
    /// Accessed H photon leaks into a V output.
    BetaV,
    /// Some post-selected output receives no ancilla light.
    VanishingAlphaProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    /// Output pattern (`H`/`V` per output) or output index that failed.
    pub location: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    #[serde(flatten)]
    pub eta: EtaVector,
    pub p_suc: f64,
    pub exact_w: bool,
    pub violations: Vec<Violation>,
    #[serde(rename = "N")]
    pub w_photons: usize,
    pub n: usize,
}

impl ExpansionReport {
    pub fn worst_violation(&self) -> Option<&Violation> {
        self.violations
            .iter()
            .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
    }

    /// Success probability recomputed from `eta_i` instead of `eta_0`.
    pub fn p_suc_from_eta_i(&self, i: usize) -> Result<f64> {
        Ok(bounds::success_prefactor(self.n, self.w_photons)? * self.eta.eta[i].norm_sqr())
    }
}

/// Expanding `|W_N>` to `|W_{N+n}>` with a given circuit.
#[derive(Debug, Clone)]
pub struct WExpansionProblem {
    pub w_photons: usize,
    pub n: usize,
    pub circuit: CompiledCircuit,
}

impl WExpansionProblem {
    pub fn new(w_photons: usize, circuit: CompiledCircuit) -> Result<Self> {
        if w_photons < 2 {
            return domain(format!(
                "the initial W state needs N >= 2 photons, got {w_photons}"
            ));
        }
        if circuit.output_modes.len() != circuit.n + 1 {
            return Err(Error::Validation(format!(
                "circuit has {} outputs, expected n + 1 = {}",
                circuit.output_modes.len(),
                circuit.n + 1
            )));
        }
        Ok(Self {
            w_photons,
            n: circuit.n,
            circuit,
        })
    }
}

fn product_except(values: &[Complex64], skip: &[usize]) -> Complex64 {
    values
        .iter()
        .enumerate()
        .filter(|(k, _)| !skip.contains(k))
        .map(|(_, v)| *v)
        .product()
}

/// `eta_0 = sum_i beta_iH prod_{j != i} alpha_jH` and
/// `eta_i = gamma_iV prod_{j != i} alpha_jH + alpha_iV sum_{j != i} gamma_jH prod_{k != i,j} alpha_kH`.
pub fn eta_closed_form(coeffs: &Coefficients, n: usize) -> EtaVector {
    let outs = n + 1;
    let a = &coeffs.alpha_h;
    let eta0 = (0..outs)
        .map(|i| coeffs.beta_h[i] * product_except(a, &[i]))
        .sum();
    let eta = (0..outs)
        .map(|i| {
            let direct = coeffs.gamma_v[i] * product_except(a, &[i]);
            let swapped: Complex64 = (0..outs)
                .filter(|&j| j != i)
                .map(|j| coeffs.gamma_h[j] * product_except(a, &[i, j]))
                .sum();
            direct + coeffs.alpha_v[i] * swapped
        })
        .collect();
    EtaVector { eta0, eta }
}

/// Input Fock state: the accessed photon in `1H` or `1V` plus `n` photons in `2H`.
fn input_state(c: &CompiledCircuit, accessed: Polarization) -> FockState {
    FockState::from_modes(
        c.unitary.dim(),
        &[
            (PolarizedMode::new(1, accessed), 1),
            (PolarizedMode::h(2), c.n as u32),
        ],
    )
    .expect("input modes lie inside every compiled circuit")
}

/// One photon per post-selected output; bit `i` of `pattern` set means output `i` is V.
fn output_state(c: &CompiledCircuit, pattern: u64) -> FockState {
    let photons: Vec<(PolarizedMode, u32)> = c
        .output_modes
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let p = if pattern >> i & 1 == 1 {
                Polarization::V
            } else {
                Polarization::H
            };
            (PolarizedMode::new(m, p), 1)
        })
        .collect();
    FockState::from_modes(c.unitary.dim(), &photons).expect("output modes lie inside the circuit")
}

fn pattern_label(pattern: u64, outs: usize) -> String {
    (0..outs)
        .map(|i| if pattern >> i & 1 == 1 { 'V' } else { 'H' })
        .collect()
}

/// Amplitude with the `1/n!` ancilla bookkeeping: the engine works with the normalized
/// input `a^dag (a^dag)^n / sqrt(n!)`, the eta amplitudes with `/ n!`.
fn eta_amplitude(c: &CompiledCircuit, input: &FockState, pattern: u64) -> Complex64 {
    let out = output_state(c, pattern);
    let amp = transition_amplitude(&c.unitary, input, &out).expect("states match the circuit");
    amp.value / factorial(c.n as u32).sqrt()
}

/// The eta amplitudes computed as permanents through the Fock engine.
pub fn eta_via_engine(c: &CompiledCircuit) -> EtaVector {
    let outs = c.n + 1;
    let h_in = input_state(c, Polarization::H);
    let v_in = input_state(c, Polarization::V);
    EtaVector {
        eta0: eta_amplitude(c, &h_in, 0),
        eta: (0..outs).map(|i| eta_amplitude(c, &v_in, 1 << i)).collect(),
    }
}

/// Necessary conditions for a nonzero exact-W success probability: no ancilla or
/// accessed-H light in any V output, and every output reached by the ancilla.
pub fn necessary_conditions(coeffs: &Coefficients, n: usize, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in 0..=n {
        let av = coeffs.alpha_v[i].norm();
        if av > tol {
            out.push(Violation {
                condition: Condition::AlphaV,
                location: format!("output {}", i + 1),
                magnitude: av,
            });
        }
        let bv = coeffs.beta_v[i].norm();
        if bv > tol {
            out.push(Violation {
                condition: Condition::BetaV,
                location: format!("output {}", i + 1),
                magnitude: bv,
            });
        }
    }
    let prod: f64 = coeffs.alpha_h[..=n].iter().map(|a| a.norm()).product();
    if prod <= tol {
        out.push(Violation {
            condition: Condition::VanishingAlphaProduct,
            location: "all outputs".into(),
            magnitude: prod,
        });
    }
    out
}

/// Enumerates all `2^{n+1}` polarization patterns for both input terms and checks the
/// exact-W requirements. `p_suc` is `n!(N+n)/N |eta_0|^2` when the circuit is an exact
/// expander and 0 otherwise.
pub fn verify_exact_w(problem: &WExpansionProblem, tol: f64) -> Result<ExpansionReport> {
    if tol.is_nan() || tol <= 0.0 {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let c = &problem.circuit;
    let n = problem.n;
    let outs = n + 1;
    let h_in = input_state(c, Polarization::H);
    let v_in = input_state(c, Polarization::V);

    let mut violations = Vec::new();
    let mut eta0 = Complex64::new(0.0, 0.0);
    let mut eta = vec![Complex64::new(0.0, 0.0); outs];

    for pattern in 0u64..(1 << outs) {
        let v_count = pattern.count_ones() as usize;
        let label = || pattern_label(pattern, outs);

        let from_h = eta_amplitude(c, &h_in, pattern);
        if pattern == 0 {
            eta0 = from_h;
        } else if from_h.norm() > tol {
            let condition = match v_count {
                1 => Condition::GammaNonzero,
                k if k == outs => Condition::AllVFromH,
                _ => Condition::MultiVFromH,
            };
            violations.push(Violation {
                condition,
                location: label(),
                magnitude: from_h.norm(),
            });
        }

        let from_v = eta_amplitude(c, &v_in, pattern);
        if v_count == 1 {
            eta[pattern.trailing_zeros() as usize] = from_v;
        } else if from_v.norm() > tol {
            violations.push(Violation {
                condition: if v_count == 0 {
                    Condition::NoVFromV
                } else {
                    Condition::MultiVFromV
                },
                location: label(),
                magnitude: from_v.norm(),
            });
        }
    }

    for (i, e) in eta.iter().enumerate() {
        let gap = (e - eta0).norm();
        if gap > tol {
            violations.push(Violation {
                condition: Condition::EtaMismatch,
                location: format!("eta_{}", i + 1),
                magnitude: gap,
            });
        }
    }
    if eta0.norm() <= tol {
        violations.push(Violation {
            condition: Condition::ZeroSuccess,
            location: "eta_0".into(),
            magnitude: eta0.norm(),
        });
    }
    violations.extend(necessary_conditions(&extract_coefficients(c), n, tol));

    let exact_w = violations.is_empty();
    let p_suc = if exact_w {
        (bounds::success_prefactor(n, problem.w_photons)? * eta0.norm_sqr()).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(ExpansionReport {
        eta: EtaVector { eta0, eta },
        p_suc,
        exact_w,
        violations,
        w_photons: problem.w_photons,
        n,
    })
}
