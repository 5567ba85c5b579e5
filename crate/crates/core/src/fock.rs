//! Multi-photon amplitudes of passive linear-optical unitaries.
//!
//! A passive circuit on `2L` polarization modes maps each input creation operator
//! to a linear combination of output creation operators. The amplitude between two
//! Fock states is the permanent of a submatrix built by repeating rows and columns
//! according to the occupation numbers.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn offset(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

/// A spatial mode (1-based) together with a polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolarizedMode {
    pub spatial: usize,
    pub polarization: Polarization,
}

impl PolarizedMode {
    pub fn new(spatial: usize, polarization: Polarization) -> Self {
        assert!(spatial >= 1, "spatial modes are 1-based");
        Self {
            spatial,
            polarization,
        }
    }

    pub fn h(spatial: usize) -> Self {
        Self::new(spatial, Polarization::H)
    }

    pub fn v(spatial: usize) -> Self {
        Self::new(spatial, Polarization::V)
    }

    /// Spatial-major flat index, H before V.
    pub fn flat(self) -> usize {
        2 * (self.spatial - 1) + self.polarization.offset()
    }

    pub fn from_flat(index: usize) -> Self {
        let polarization = if index.is_multiple_of(2) {
            Polarization::H
        } else {
            Polarization::V
        };
        Self::new(index / 2 + 1, polarization)
    }
}

impl fmt::Display for PolarizedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.spatial, self.polarization)
    }
}

/// Complex `2L x 2L` matrix; entry `(r, c)` carries input flat mode `c` to output flat mode `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    matrix: DMatrix<Complex64>,
}

impl ModeUnitary {
    pub fn identity(spatial_modes: usize) -> Self {
        let dim = 2 * spatial_modes;
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Wraps a square matrix of even dimension. Unitarity is not checked here;
    /// use [`check_unitary`].
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "mode unitary must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "mode unitary dimension must be 2L, got {}",
                matrix.nrows()
            )));
        }
        Ok(Self { matrix })
    }

    /// Haar-distributed unitary over `spatial_modes` spatial modes.
    pub fn haar_random<R: Rng + ?Sized>(spatial_modes: usize, rng: &mut R) -> Self {
        let dim = 2 * spatial_modes;
        Self {
            matrix: haar_matrix(dim, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spatial_modes(&self) -> usize {
        self.dim() / 2
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn entry(&self, output: usize, input: usize) -> Complex64 {
        self.matrix[(output, input)]
    }

    /// Image of one input creation operator, indexed by output flat mode.
    pub fn column(&self, input: usize) -> Vec<Complex64> {
        self.matrix.column(input).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &ModeUnitary) -> Result<Self> {
        if self.dim() != first.dim() {
            return Err(Error::Dimension(format!(
                "cannot compose unitaries of dimension {} and {}",
                self.dim(),
                first.dim()
            )));
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
        })
    }
}

pub(crate) fn haar_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the phase freedom of the QR factorization so the result is Haar.
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Occupation numbers over flat modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FockState {
    occupations: Vec<u32>,
}

impl FockState {
    pub fn vacuum(dim: usize) -> Self {
        Self {
            occupations: vec![0; dim],
        }
    }

    pub fn from_occupations(occupations: Vec<u32>) -> Self {
        Self { occupations }
    }

    /// Builds a state from `(mode, count)` pairs; repeated modes accumulate.
    pub fn from_modes(dim: usize, photons: &[(PolarizedMode, u32)]) -> Result<Self> {
        let mut state = Self::vacuum(dim);
        for &(mode, count) in photons {
            let idx = mode.flat();
            if idx >= dim {
                return Err(Error::Dimension(format!(
                    "mode {mode} lies outside a {dim}-mode register"
                )));
            }
            state.occupations[idx] += count;
        }
        Ok(state)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn total_photons(&self) -> u32 {
        self.occupations.iter().sum()
    }

    /// Flat mode indices, each repeated by its occupation.
    fn expanded_modes(&self) -> Vec<usize> {
        self.occupations
            .iter()
            .enumerate()
            .flat_map(|(mode, &count)| std::iter::repeat_n(mode, count as usize))
            .collect()
    }

    fn factorial_product(&self) -> f64 {
        self.occupations.iter().map(|&k| factorial(k)).product()
    }

    /// Every Fock state with exactly `photons` photons over `dim` modes.
    pub fn all_with_photons(dim: usize, photons: u32) -> Vec<FockState> {
        fn fill(prefix: &mut Vec<u32>, dim: usize, left: u32, out: &mut Vec<FockState>) {
            if prefix.len() + 1 == dim {
                prefix.push(left);
                out.push(FockState::from_occupations(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in (0..=left).rev() {
                prefix.push(k);
                fill(prefix, dim, left - k, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if dim == 0 {
            if photons == 0 {
                out.push(FockState::vacuum(0));
            }
            return out;
        }
        fill(&mut Vec::with_capacity(dim), dim, photons, &mut out);
        out
    }
}

/// A probability amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    #[serde(with = "crate::complex_json")]
    pub value: Complex64,
}

impl Amplitude {
    pub const ZERO: Amplitude = Amplitude {
        value: Complex64::new(0.0, 0.0),
    };

    pub fn new(value: Complex64) -> Self {
        Self { value }
    }

    pub fn probability(self) -> f64 {
        self.value.norm_sqr()
    }
}

/// Permanent by Ryser's formula, visiting column subsets in Gray-code order.
///
/// `O(2^d d)` operations. The empty matrix has permanent 1.
pub fn permanent(m: &DMatrix<Complex64>) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "permanent needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = m.nrows();
    if d == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    assert!(d < 64, "permanent dimension {d} is out of range");

    let mut row_sums = vec![Complex64::new(0.0, 0.0); d];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << d) {
        let bit = k.trailing_zeros() as usize;
        gray ^= 1 << bit;
        if gray & (1 << bit) != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += m[(i, bit)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= m[(i, bit)];
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        // (-1)^{d - |S|}
        if (d as u32 - gray.count_ones()).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// Amplitude `<output| U |input>` for normalized Fock states.
///
/// Photon number is conserved by a passive circuit, so mismatched photon counts give
/// a zero amplitude (and a logged warning). Register-size mismatches are errors.
pub fn transition_amplitude(
    u: &ModeUnitary,
    input: &FockState,
    output: &FockState,
) -> Result<Amplitude> {
    if input.dim() != u.dim() || output.dim() != u.dim() {
        return Err(Error::Dimension(format!(
            "states over {} and {} modes do not match a {}-mode unitary",
            input.dim(),
            output.dim(),
            u.dim()
        )));
    }
    if input.total_photons() != output.total_photons() {
        log::warn!(
            "photon number mismatch ({} in, {} out): passive circuits conserve photons",
            input.total_photons(),
            output.total_photons()
        );
        return Ok(Amplitude::ZERO);
    }
    let cols = input.expanded_modes();
    let rows = output.expanded_modes();
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |a, b| u.entry(rows[a], cols[b]));
    let per = permanent(&sub)?;
    let norm = (input.factorial_product() * output.factorial_product()).sqrt();
    Ok(Amplitude::new(per / norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitarityViolation {
    pub row: usize,
    pub col: usize,
    pub magnitude: f64,
}

/// Entries of `U^dagger U - I` whose magnitude exceeds `tol`.
pub fn check_unitary(u: &ModeUnitary, tol: f64) -> Vec<UnitarityViolation> {
    let m = u.matrix();
    let gram = m.adjoint() * m;
    let mut out = Vec::new();
    for row in 0..gram.nrows() {
        for col in 0..gram.ncols() {
            let target = if row == col { 1.0 } else { 0.0 };
            let magnitude = (gram[(row, col)] - target).norm();
            if magnitude > tol {
                out.push(UnitarityViolation {
                    row,
                    col,
                    magnitude,
                });
            }
        }
    }
    out
}
