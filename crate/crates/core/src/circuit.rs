//! Optical element lists and their compilation to mode unitaries.
//!
//! Two-mode elements act on a pair of spatial modes `(a, b)` with the symmetric
//! beamsplitter convention: a photon keeps its spatial index with amplitude `sqrt(T)`
//! and crosses to the other index with amplitude `i sqrt(R)`, `R = 1 - T`. A
//! polarization-dependent beamsplitter (PDBS) applies this separately to H and V.
//! Loss elements become beamsplitters against a fresh auxiliary spatial mode.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::fock::{check_unitary, ModeUnitary, Polarization, PolarizedMode};
use crate::ALGEBRA_TOL;

/// One passive optical element. Spatial modes are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Pdbs {
        modes: (usize, usize),
        t_h: f64,
        t_v: f64,
    },
    Bs {
        modes: (usize, usize),
        t: f64,
    },
    /// Phase on one spatial mode; `polarization: None` shifts both polarizations.
    PhaseShifter {
        mode: usize,
        phase: f64,
        polarization: Option<Polarization>,
    },
    /// Arbitrary 2x2 unitary on the (H, V) pair of one spatial mode.
    WavePlate {
        mode: usize,
        matrix: [[Complex64; 2]; 2],
    },
    /// Per-polarization transmission into a lossy channel.
    Loss {
        mode: usize,
        t_h: f64,
        t_v: f64,
    },
}

impl Element {
    /// Wave plate rotating the polarization of `mode` by `theta`.
    pub fn rotation(mode: usize, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let re = |x: f64| Complex64::new(x, 0.0);
        Element::WavePlate {
            mode,
            matrix: [[re(c), re(-s)], [re(s), re(c)]],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Element::Pdbs { .. } => "pdbs",
            Element::Bs { .. } => "bs",
            Element::PhaseShifter { .. } => "phase",
            Element::WavePlate { .. } => "waveplate",
            Element::Loss { .. } => "loss",
        }
    }

    pub fn spatial_modes(&self) -> Vec<usize> {
        match *self {
            Element::Pdbs { modes, .. } | Element::Bs { modes, .. } => vec![modes.0, modes.1],
            Element::PhaseShifter { mode, .. }
            | Element::WavePlate { mode, .. }
            | Element::Loss { mode, .. } => vec![mode],
        }
    }

    fn validate(&self, width: usize) -> Result<()> {
        let in_unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "{} parameter {name} = {x} is outside [0, 1]",
                    self.kind()
                )))
            }
        };
        for m in self.spatial_modes() {
            if m == 0 || m > width {
                return Err(Error::Validation(format!(
                    "{} references spatial mode {m}, circuit width is {width}",
                    self.kind()
                )));
            }
        }
        match *self {
            Element::Pdbs { modes, t_h, t_v } => {
                distinct(modes, "pdbs")?;
                in_unit("t_h", t_h)?;
                in_unit("t_v", t_v)
            }
            Element::Bs { modes, t } => {
                distinct(modes, "bs")?;
                in_unit("t", t)
            }
            Element::Loss { t_h, t_v, .. } => {
                in_unit("t_h", t_h)?;
                in_unit("t_v", t_v)
            }
            Element::PhaseShifter { phase, .. } => {
                if (0.0..2.0 * PI).contains(&phase) {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "phase {phase} is outside [0, 2pi)"
                    )))
                }
            }
            Element::WavePlate { matrix, .. } => {
                let m = DMatrix::from_fn(2, 2, |r, c| matrix[r][c]);
                let u = ModeUnitary::from_matrix(m).expect("2x2 is square and even");
                if check_unitary(&u, 1e-10).is_empty() {
                    Ok(())
                } else {
                    Err(Error::Validation("waveplate matrix is not unitary".into()))
                }
            }
        }
    }
}

fn distinct(modes: (usize, usize), kind: &str) -> Result<()> {
    if modes.0 == modes.1 {
        Err(Error::Validation(format!(
            "{kind} needs two distinct spatial modes, got ({}, {})",
            modes.0, modes.1
        )))
    } else {
        Ok(())
    }
}

/// Symmetric two-port block `[[sqrt T, i sqrt R], [i sqrt R, sqrt T]]`.
fn splitter(t: f64) -> [[Complex64; 2]; 2] {
    let st = Complex64::new(t.sqrt(), 0.0);
    let sr = Complex64::new(0.0, (1.0 - t).sqrt());
    [[st, sr], [sr, st]]
}

/// A circuit description: ancilla size, element list and post-selected outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    pub n: usize,
    pub width: usize,
    pub elements: Vec<Element>,
    /// Post-selected spatial modes. Their order fixes the output index `j = 1..n+1`
    /// used for the coefficient views and the eta amplitudes.
    pub output_modes: Vec<usize>,
    pub label: String,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation(
                "ancilla photon number n must be >= 1".into(),
            ));
        }
        if self.width < 2 {
            return Err(Error::Validation(
                "width must cover the two input spatial modes".into(),
            ));
        }
        if self.output_modes.len() != self.n + 1 {
            return Err(Error::Validation(format!(
                "expected {} output modes for n = {}, got {}",
                self.n + 1,
                self.n,
                self.output_modes.len()
            )));
        }
        let mut seen = vec![false; self.width + 1];
        for &m in &self.output_modes {
            if m == 0 || m > self.width {
                return Err(Error::Validation(format!(
                    "output mode {m} outside width {}",
                    self.width
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::Validation(format!("output mode {m} listed twice")));
            }
        }
        for e in &self.elements {
            e.validate(self.width)?;
        }
        Ok(())
    }

    pub fn loss_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::Loss { .. }))
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitFile::from(self)).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CircuitFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let spec = CircuitSpec::try_from(file)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Human-readable element listing.
    pub fn element_table(&self) -> String {
        let mut out = format!(
            "{} (n = {}, width = {}, outputs = {:?})\n",
            self.label, self.n, self.width, self.output_modes
        );
        out.push_str("  #  kind       modes     parameters\n");
        for (i, e) in self.elements.iter().enumerate() {
            let modes = e
                .spatial_modes()
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!(
                "{:>3}  {:<9}  {:<8}  {}\n",
                i + 1,
                e.kind(),
                modes,
                e
            ));
        }
        out
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Pdbs { t_h, t_v, .. } => write!(f, "T_H = {t_h:.6}, T_V = {t_v:.6}"),
            Element::Bs { t, .. } => write!(f, "T = {t:.6}"),
            Element::PhaseShifter {
                phase,
                polarization,
                ..
            } => match polarization {
                Some(p) => write!(f, "phase = {phase:.6} on {p:?}"),
                None => write!(f, "phase = {phase:.6}"),
            },
            Element::WavePlate { matrix, .. } => write!(
                f,
                "[[{}, {}], [{}, {}]]",
                matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]
            ),
            Element::Loss { t_h, t_v, .. } => write!(f, "T_H = {t_h:.6}, T_V = {t_v:.6}"),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON file format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    n: usize,
    width: usize,
    output_modes: Vec<usize>,
    elements: Vec<ElementFile>,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementFile {
    kind: ElementKind,
    modes: Vec<usize>,
    params: serde_json::Value,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ElementKind {
    Pdbs,
    Bs,
    Phase,
    Waveplate,
    Loss,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolarizedTransmission {
    t_h: f64,
    t_v: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Transmission {
    t: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseParams {
    phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polarization: Option<Polarization>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WavePlateParams {
    #[serde(with = "crate::complex_json::mat2")]
    matrix: [[Complex64; 2]; 2],
}

impl From<&CircuitSpec> for CircuitFile {
    fn from(spec: &CircuitSpec) -> Self {
        let elements = spec
            .elements
            .iter()
            .map(|e| {
                let (kind, params) = match *e {
                    Element::Pdbs { t_h, t_v, .. } => (
                        ElementKind::Pdbs,
                        serde_json::to_value(PolarizedTransmission { t_h, t_v }),
                    ),
                    Element::Bs { t, .. } => {
                        (ElementKind::Bs, serde_json::to_value(Transmission { t }))
                    }
                    Element::PhaseShifter {
                        phase,
                        polarization,
                        ..
                    } => (
                        ElementKind::Phase,
                        serde_json::to_value(PhaseParams {
                            phase,
                            polarization,
                        }),
                    ),
                    Element::WavePlate { matrix, .. } => (
                        ElementKind::Waveplate,
                        serde_json::to_value(WavePlateParams { matrix }),
                    ),
                    Element::Loss { t_h, t_v, .. } => (
                        ElementKind::Loss,
                        serde_json::to_value(PolarizedTransmission { t_h, t_v }),
                    ),
                };
                ElementFile {
                    kind,
                    modes: e.spatial_modes(),
                    params: params.expect("params serialize"),
                }
            })
            .collect();
        CircuitFile {
            n: spec.n,
            width: spec.width,
            output_modes: spec.output_modes.clone(),
            elements,
            label: spec.label.clone(),
        }
    }
}

impl TryFrom<CircuitFile> for CircuitSpec {
    type Error = Error;

    fn try_from(file: CircuitFile) -> Result<Self> {
        let elements = file
            .elements
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                parse_element(e).map_err(|err| Error::Parse(format!("element {}: {err}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CircuitSpec {
            n: file.n,
            width: file.width,
            elements,
            output_modes: file.output_modes,
            label: file.label,
        })
    }
}

fn parse_element(e: ElementFile) -> std::result::Result<Element, String> {
    fn params<T: serde::de::DeserializeOwned>(
        v: serde_json::Value,
    ) -> std::result::Result<T, String> {
        serde_json::from_value(v).map_err(|e| e.to_string())
    }
    let two = |modes: &[usize]| match modes {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two modes, got {}", modes.len())),
    };
    let one = |modes: &[usize]| match modes {
        [a] => Ok(*a),
        _ => Err(format!("expected one mode, got {}", modes.len())),
    };
    Ok(match e.kind {
        ElementKind::Pdbs => {
            let p: PolarizedTransmission = params(e.params)?;
            Element::Pdbs {
                modes: two(&e.modes)?,
                t_h: p.t_h,
                t_v: p.t_v,
            }
        }
        ElementKind::Bs => {
            let p: Transmission = params(e.params)?;
            Element::Bs {
                modes: two(&e.modes)?,
                t: p.t,
            }
        }
        ElementKind::Phase => {
            let p: PhaseParams = params(e.params)?;
            Element::PhaseShifter {
                mode: one(&e.modes)?,
                phase: p.phase,
                polarization: p.polarization,
            }
        }
        ElementKind::Waveplate => {
            let p: WavePlateParams = params(e.params)?;
            Element::WavePlate {
                mode: one(&e.modes)?,
                matrix: p.matrix,
            }
        }
        ElementKind::Loss => {
            let p: PolarizedTransmission = params(e.params)?;
            Element::Loss {
                mode: one(&e.modes)?,
                t_h: p.t_h,
                t_v: p.t_v,
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

/// A compiled circuit: the full lossless unitary over `L` spatial modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    pub n: usize,
    pub unitary: ModeUnitary,
    pub spatial_modes: usize,
    pub output_modes: Vec<usize>,
    pub label: String,
}

/// Coupling coefficients per post-selected output, in `output_modes` order.
///
/// `alpha` is the image of input 2H (the Fock ancilla), `beta` of input 1H and
/// `gamma` of input 1V (the accessed W-state photon).
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub alpha_h: Vec<Complex64>,
    pub alpha_v: Vec<Complex64>,
    pub beta_h: Vec<Complex64>,
    pub beta_v: Vec<Complex64>,
    pub gamma_h: Vec<Complex64>,
    pub gamma_v: Vec<Complex64>,
}

impl Coefficients {
    /// `P_i = |alpha_iH|^2`.
    pub fn couplings(&self) -> Vec<f64> {
        self.alpha_h.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl CompiledCircuit {
    pub fn alpha(&self) -> Vec<Complex64> {
        self.unitary.column(PolarizedMode::h(2).flat())
    }

    pub fn beta(&self) -> Vec<Complex64> {
        self.unitary.column(PolarizedMode::h(1).flat())
    }

    pub fn gamma(&self) -> Vec<Complex64> {
        self.unitary.column(PolarizedMode::v(1).flat())
    }

    /// Wraps a raw unitary with explicit output modes (used for random-unitary tests).
    pub fn from_unitary(n: usize, unitary: ModeUnitary, output_modes: Vec<usize>) -> Result<Self> {
        let spatial_modes = unitary.spatial_modes();
        if n == 0 || output_modes.len() != n + 1 {
            return Err(Error::Validation(format!(
                "need n >= 1 and n + 1 output modes, got n = {n} and {} outputs",
                output_modes.len()
            )));
        }
        if spatial_modes < 2 || output_modes.iter().any(|&m| m == 0 || m > spatial_modes) {
            return Err(Error::Validation("output modes outside the unitary".into()));
        }
        Ok(Self {
            n,
            unitary,
            spatial_modes,
            output_modes,
            label: "unitary".into(),
        })
    }
}

/// Multiplies per-element unitaries in element order. Each loss element adds one
/// auxiliary spatial mode after the declared width.
pub fn compile(spec: &CircuitSpec) -> Result<CompiledCircuit> {
    spec.validate()?;
    let spatial_modes = spec.width + spec.loss_count();
    let mut u = DMatrix::<Complex64>::identity(2 * spatial_modes, 2 * spatial_modes);
    let mut next_aux = spec.width + 1;

    for e in &spec.elements {
        match *e {
            Element::Pdbs { modes, t_h, t_v } => {
                let (a, b) = modes;
                apply_pair(
                    &mut u,
                    PolarizedMode::h(a).flat(),
                    PolarizedMode::h(b).flat(),
                    splitter(t_h),
                );
                apply_pair(
                    &mut u,
                    PolarizedMode::v(a).flat(),
                    PolarizedMode::v(b).flat(),
                    splitter(t_v),
                );
            }
            Element::Bs { modes, t } => {
                let (a, b) = modes;
                let block = splitter(t);
                apply_pair(
                    &mut u,
                    PolarizedMode::h(a).flat(),
                    PolarizedMode::h(b).flat(),
                    block,
                );
                apply_pair(
                    &mut u,
                    PolarizedMode::v(a).flat(),
                    PolarizedMode::v(b).flat(),
                    block,
                );
            }
            Element::PhaseShifter {
                mode,
                phase,
                polarization,
            } => {
                let z = Complex64::from_polar(1.0, phase);
                let targets: &[Polarization] = match polarization {
                    Some(Polarization::H) => &[Polarization::H],
                    Some(Polarization::V) => &[Polarization::V],
                    None => &[Polarization::H, Polarization::V],
                };
                for &p in targets {
                    let row = PolarizedMode::new(mode, p).flat();
                    for col in 0..u.ncols() {
                        u[(row, col)] *= z;
                    }
                }
            }
            Element::WavePlate { mode, matrix } => {
                apply_pair(
                    &mut u,
                    PolarizedMode::h(mode).flat(),
                    PolarizedMode::v(mode).flat(),
                    matrix,
                );
            }
            Element::Loss { mode, t_h, t_v } => {
                let aux = next_aux;
                next_aux += 1;
                apply_pair(
                    &mut u,
                    PolarizedMode::h(mode).flat(),
                    PolarizedMode::h(aux).flat(),
                    splitter(t_h),
                );
                apply_pair(
                    &mut u,
                    PolarizedMode::v(mode).flat(),
                    PolarizedMode::v(aux).flat(),
                    splitter(t_v),
                );
            }
        }
    }

    let unitary = ModeUnitary::from_matrix(u)?;
    let worst = check_unitary(&unitary, ALGEBRA_TOL);
    if let Some(v) = worst.first() {
        return Err(Error::Validation(format!(
            "compiled matrix is not unitary (entry ({}, {}) off by {:.3e})",
            v.row, v.col, v.magnitude
        )));
    }
    Ok(CompiledCircuit {
        n: spec.n,
        unitary,
        spatial_modes,
        output_modes: spec.output_modes.clone(),
        label: spec.label.clone(),
    })
}

/// Left-multiplies `u` by a 2x2 block acting on flat rows `p`, `q`.
fn apply_pair(u: &mut DMatrix<Complex64>, p: usize, q: usize, b: [[Complex64; 2]; 2]) {
    for col in 0..u.ncols() {
        let (x, y) = (u[(p, col)], u[(q, col)]);
        u[(p, col)] = b[0][0] * x + b[0][1] * y;
        u[(q, col)] = b[1][0] * x + b[1][1] * y;
    }
}

/// Reads the `alpha`, `beta`, `gamma` couplings at each post-selected output.
pub fn extract_coefficients(c: &CompiledCircuit) -> Coefficients {
    let (alpha, beta, gamma) = (c.alpha(), c.beta(), c.gamma());
    let pick = |col: &[Complex64], p: Polarization| -> Vec<Complex64> {
        c.output_modes
            .iter()
            .map(|&m| col[PolarizedMode::new(m, p).flat()])
            .collect()
    };
    Coefficients {
        alpha_h: pick(&alpha, Polarization::H),
        alpha_v: pick(&alpha, Polarization::V),
        beta_h: pick(&beta, Polarization::H),
        beta_v: pick(&beta, Polarization::V),
        gamma_h: pick(&gamma, Polarization::H),
        gamma_v: pick(&gamma, Polarization::V),
    }
}

// ---------------------------------------------------------------------------
// Reference circuit families
// ---------------------------------------------------------------------------

/// Equal-splitting cascade: a photon in `running` ends up spread uniformly over
/// `running` and every tap. Beamsplitter `k` sends `1/(K+1-k)` into tap `k`.
fn cascade(running: usize, taps: &[usize]) -> Vec<Element> {
    let outputs = taps.len() + 1;
    taps.iter()
        .enumerate()
        .map(|(idx, &tap)| {
            let k = idx + 1;
            Element::Bs {
                modes: (running, tap),
                t: (outputs - k) as f64 / (outputs + 1 - k) as f64,
            }
        })
        .collect()
}

/// Two-arm circuit reaching `H_m`: a PDBS sends the ancilla's H photons into an
/// `m`-output arm with probability `m xi_m` and into an `(n+1-m)`-output arm
/// otherwise; each arm is an equal-splitting cascade.
///
/// The PDBS couples input 2 to output 2 straight through, so the first listed output
/// (spatial mode 2) carries `|alpha_1H|^2 = T_H / m`. A pi phase on the V component of
/// the other arm aligns the phases of the single-V amplitudes with the all-H one.
pub fn build_hm(n: usize, m: usize) -> Result<CircuitSpec> {
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if m == 0 || m > n {
        return Err(Error::Domain(format!("m must lie in 1..={n}, got {m}")));
    }
    let t_h = m as f64 * bounds::xi_m(n, m)?;
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
    let arm_t: Vec<usize> = (3..=m + 1).collect();
    let arm_r: Vec<usize> = (m + 2..=n + 1).collect();
    elements.extend(cascade(2, &arm_t));
    elements.extend(cascade(1, &arm_r));

    let mut output_modes = vec![2];
    output_modes.extend(&arm_t);
    output_modes.push(1);
    output_modes.extend(&arm_r);

    Ok(CircuitSpec {
        n,
        width: n + 1,
        elements,
        output_modes,
        label: format!("hm(n={n}, m={m})"),
    })
}

/// Globally optimal circuit: one PDBS with `T_H = R_V = P1_opt(n)` and an
/// `n`-output equal-splitting cascade.
pub fn build_optimal(n: usize) -> Result<CircuitSpec> {
    let mut spec = build_hm(n, 1)?;
    spec.label = format!("optimal(n={n})");
    Ok(spec)
}

/// Lossy symmetric circuit: PDBS with `T_H = (n+1)^-2`, `T_V = 1`, then an
/// `(n+1)`-output equal-splitting cascade. The ancilla light transmitted by the PDBS
/// leaves through spatial mode 2, which is not post-selected.
pub fn build_lossy(n: usize) -> Result<CircuitSpec> {
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let t_h = 1.0 / ((n + 1) * (n + 1)) as f64;
    let taps: Vec<usize> = (3..=n + 2).collect();
    let mut elements = vec![Element::Pdbs {
        modes: (1, 2),
        t_h,
        t_v: 1.0,
    }];
    elements.extend(cascade(1, &taps));
    let mut output_modes = vec![1];
    output_modes.extend(&taps);
    Ok(CircuitSpec {
        n,
        width: n + 2,
        elements,
        output_modes,
        label: format!("lossy(n={n})"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_spec(n: usize) -> CircuitSpec {
        CircuitSpec {
            n,
            width: n + 1,
            elements: vec![],
            output_modes: (1..=n + 1).collect(),
            label: "identity".into(),
        }
    }

    fn pdbs_t_h(spec: &CircuitSpec) -> f64 {
        match spec.elements[0] {
            Element::Pdbs { t_h, .. } => t_h,
            _ => panic!("first element is not a PDBS"),
        }
    }

    fn bs_ts(spec: &CircuitSpec) -> Vec<f64> {
        spec.elements
            .iter()
            .filter_map(|e| match e {
                Element::Bs { t, .. } => Some(*t),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn fully_transmitting_bs_is_identity() {
        let spec = CircuitSpec {
            elements: vec![Element::Bs {
                modes: (1, 2),
                t: 1.0,
            }],
            ..identity_spec(1)
        };
        let c = compile(&spec).unwrap();
        assert_eq!(c.unitary, ModeUnitary::identity(2));
    }

    #[test]
    fn loss_grows_register() {
        let spec = CircuitSpec {
            elements: vec![Element::Loss {
                mode: 1,
                t_h: 0.5,
                t_v: 0.5,
            }],
            ..identity_spec(1)
        };
        let c = compile(&spec).unwrap();
        assert_eq!(c.spatial_modes, 3);
        assert!(check_unitary(&c.unitary, 1e-12).is_empty());
        assert_abs_diff_eq!(c.beta()[0].norm_sqr(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.beta()[4].norm_sqr(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn validation_errors() {
        let bad_t = CircuitSpec {
            elements: vec![Element::Bs {
                modes: (1, 2),
                t: 1.2,
            }],
            ..identity_spec(1)
        };
        assert!(matches!(compile(&bad_t), Err(Error::Validation(_))));
        let bad_mode = CircuitSpec {
            elements: vec![Element::Bs {
                modes: (1, 5),
                t: 0.5,
            }],
            ..identity_spec(1)
        };
        assert!(matches!(compile(&bad_mode), Err(Error::Validation(_))));
        let dup_outputs = CircuitSpec {
            output_modes: vec![1, 1],
            ..identity_spec(1)
        };
        assert!(dup_outputs.validate().is_err());
        let short_outputs = CircuitSpec {
            output_modes: vec![1],
            ..identity_spec(1)
        };
        assert!(short_outputs.validate().is_err());
    }

    #[test]
    fn identity_coefficients() {
        let c = compile(&identity_spec(1)).unwrap();
        let k = extract_coefficients(&c);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(k.beta_h[0], one);
        assert_eq!(k.gamma_v[0], one);
        assert_eq!(k.alpha_h[1], one);
        let nonzero = [&k.alpha_v, &k.beta_v, &k.gamma_h]
            .iter()
            .flat_map(|v| v.iter())
            .filter(|z| z.norm() > 0.0)
            .count();
        assert_eq!(nonzero, 0);
        assert_eq!(k.alpha_h[0].norm(), 0.0);
        assert_eq!(k.beta_h[1].norm(), 0.0);
    }

    #[test]
    fn optimal_builder_parameters() {
        let s1 = build_optimal(1).unwrap();
        assert_abs_diff_eq!(pdbs_t_h(&s1), (5.0 - 5f64.sqrt()) / 10.0, epsilon = 1e-15);
        assert!(bs_ts(&s1).is_empty());

        let s2 = build_optimal(2).unwrap();
        assert_abs_diff_eq!(pdbs_t_h(&s2), 0.2, epsilon = 1e-15);
        assert_eq!(bs_ts(&s2), vec![0.5]);

        let s3 = build_optimal(3).unwrap();
        assert_abs_diff_eq!(pdbs_t_h(&s3), (9.0 - 13f64.sqrt()) / 34.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pdbs_t_h(&s3), 0.158660, epsilon = 1e-6);
        let ts = bs_ts(&s3);
        assert_abs_diff_eq!(ts[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ts[1], 0.5, epsilon = 1e-15);
        assert_eq!(s3.width, 4);
        assert_eq!(s3.loss_count(), 0);

        assert!(matches!(build_optimal(0), Err(Error::Domain(_))));
    }

    #[test]
    fn optimal_compiles_with_expected_alpha() {
        let c = compile(&build_optimal(1).unwrap()).unwrap();
        assert_eq!(c.unitary.dim(), 4);
        let k = extract_coefficients(&c);
        assert_abs_diff_eq!(
            k.alpha_h[0].norm_sqr(),
            (5.0 - 5f64.sqrt()) / 10.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn hm_builder_parameters() {
        for n in 1..=5 {
            let a = build_optimal(n).unwrap();
            let b = build_hm(n, 1).unwrap();
            assert_eq!(a.elements, b.elements);
            assert_eq!(a.output_modes, b.output_modes);
        }
        let s = build_hm(2, 2).unwrap();
        assert_abs_diff_eq!(pdbs_t_h(&s), 0.5, epsilon = 1e-15);
        assert!(matches!(build_hm(2, 3), Err(Error::Domain(_))));
        assert!(matches!(build_hm(2, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn lossy_builder_parameters() {
        let s1 = build_lossy(1).unwrap();
        assert_abs_diff_eq!(pdbs_t_h(&s1), 0.25, epsilon = 1e-15);
        assert_eq!(bs_ts(&s1), vec![0.5]);
        let s2 = build_lossy(2).unwrap();
        assert_abs_diff_eq!(pdbs_t_h(&s2), 1.0 / 9.0, epsilon = 1e-15);
        let ts = bs_ts(&s2);
        assert_abs_diff_eq!(ts[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ts[1], 0.5, epsilon = 1e-15);
        assert_eq!(s2.width, 4);
        assert!(!s2.output_modes.contains(&2));
    }

    #[test]
    fn lossy_alpha_is_uniform() {
        let n = 3;
        let c = compile(&build_lossy(n).unwrap()).unwrap();
        let k = extract_coefficients(&c);
        let r_h: f64 = 1.0 - 1.0 / 16.0;
        for a in &k.alpha_h {
            assert_abs_diff_eq!(a.norm(), (r_h / 4.0).sqrt(), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(
            c.alpha()[PolarizedMode::h(2).flat()].norm_sqr(),
            1.0 / 16.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn optimal_coefficients_match_closed_forms() {
        let n = 2;
        let c = compile(&build_optimal(n).unwrap()).unwrap();
        let k = extract_coefficients(&c);
        let p = bounds::p1_opt(n).unwrap();
        let r_h = 1.0 - p;
        assert_abs_diff_eq!(k.alpha_h[1].norm(), (r_h / 2.0).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(k.alpha_h[2].norm(), (r_h / 2.0).sqrt(), epsilon = 1e-14);
        for j in 0..=n {
            let a = k.alpha_h[j].norm();
            assert_abs_diff_eq!(
                k.beta_h[j].norm(),
                (1.0 / a - 3.0 * a).abs(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(k.gamma_v[j].norm(), a, epsilon = 1e-14);
            assert!(k.alpha_v[j].norm() < 1e-15 && k.beta_v[j].norm() < 1e-15);
        }
    }

    #[test]
    fn lossy_gamma_is_uniform() {
        let c = compile(&build_lossy(2).unwrap()).unwrap();
        let k = extract_coefficients(&c);
        for g in &k.gamma_v {
            assert_abs_diff_eq!(g.norm(), (1.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn json_roundtrip_and_strictness() {
        let mut spec = build_hm(3, 2).unwrap();
        spec.elements.push(Element::rotation(3, 0.3));
        spec.elements.push(Element::Loss {
            mode: 2,
            t_h: 0.7,
            t_v: 0.9,
        });
        let text = spec.to_json();
        assert_eq!(CircuitSpec::from_json(&text).unwrap(), spec);

        let unknown = text.replacen("\"label\"", "\"colour\": 1, \"label\"", 1);
        assert!(matches!(
            CircuitSpec::from_json(&unknown),
            Err(Error::Parse(_))
        ));
        let bad_param = r#"{"n":1,"width":2,"output_modes":[1,2],"label":"x",
            "elements":[{"kind":"bs","modes":[1,2],"params":{"t":0.5,"r":0.5}}]}"#;
        assert!(matches!(
            CircuitSpec::from_json(bad_param),
            Err(Error::Parse(_))
        ));
        let bad_kind = r#"{"n":1,"width":2,"output_modes":[1,2],"label":"x",
            "elements":[{"kind":"mirror","modes":[1],"params":{}}]}"#;
        assert!(CircuitSpec::from_json(bad_kind).is_err());
        let out_of_range = r#"{"n":1,"width":2,"output_modes":[1,2],"label":"x",
            "elements":[{"kind":"pdbs","modes":[1,2],"params":{"t_h":0.5,"t_v":1.5}}]}"#;
        assert!(matches!(
            CircuitSpec::from_json(out_of_range),
            Err(Error::Validation(_))
        ));
    }
}
