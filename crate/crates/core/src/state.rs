//! Pure states of one and two path-encoded photons, reduced density operators and
//! the Schmidt decomposition of two-photon amplitudes.
//!
//! Index 0 is the solid path (detector 1), index 1 the dashed path (detector 2).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexAmp, Mat2, ONE, ZERO};

/// Squared norms within this distance of 1 are silently renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Tolerance on the stored invariants of states and density operators.
pub const STATE_TOL: f64 = 1e-12;
/// Local unitaries must satisfy `U†U = I` to this accuracy.
pub const UNITARY_TOL: f64 = 1e-10;
/// Schmidt coefficients above this count towards the rank.
pub const SCHMIDT_RANK_TOL: f64 = 1e-10;

fn check_finite<'a>(
    amps: impl IntoIterator<Item = &'a ComplexAmp>,
    what: &'static str,
) -> Result<()> {
    if amps
        .into_iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Returns the factor that renormalizes amplitudes with the given squared norm.
fn renormalization(norm_sq: f64) -> Result<f64> {
    if (norm_sq - 1.0).abs() > RENORMALIZE_TOL {
        return Err(Error::NotNormalized {
            norm_sq,
            tolerance: RENORMALIZE_TOL,
        });
    }
    Ok(norm_sq.sqrt().recip())
}

/// Normalized state vector over labeled basis modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<ComplexAmp>,
    labels: Vec<String>,
}

impl PureState {
    pub fn new<S: Into<String>>(
        amplitudes: Vec<ComplexAmp>,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if amplitudes.is_empty() {
            return Err(Error::InvalidLabels(
                "state needs at least one basis mode".into(),
            ));
        }
        if labels.len() != amplitudes.len() {
            return Err(Error::InvalidLabels(format!(
                "{} labels for {} amplitudes",
                labels.len(),
                amplitudes.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidLabels(format!("duplicate label {l:?}")));
            }
        }
        check_finite(&amplitudes, "state amplitudes")?;
        let scale = renormalization(amplitudes.iter().map(|z| z.norm_sqr()).sum())?;
        let amplitudes = amplitudes.into_iter().map(|z| z * scale).collect();
        Ok(Self { amplitudes, labels })
    }

    /// Basis state `index` of a two-mode space with the given labels.
    pub fn basis(index: usize, labels: [&str; 2]) -> Result<Self> {
        if index > 1 {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range"
            )));
        }
        let mut amps = vec![ZERO; 2];
        amps[index] = ONE;
        Self::new(amps, labels)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[ComplexAmp] {
        &self.amplitudes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Born probability of each basis mode.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn probability_of(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.amplitudes[i].norm_sqr())
    }

    /// Evolves a two-mode state by `u` and relabels the output modes.
    pub fn evolve<S: Into<String>>(
        &self,
        u: &Mat2,
        output_labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        if self.dim() != 2 {
            return Err(Error::InvalidArgument(format!(
                "2×2 evolution on a {}-mode state",
                self.dim()
            )));
        }
        linalg::check_unitary(u, UNITARY_TOL)?;
        let a = &self.amplitudes;
        let out = vec![
            u[0][0] * a[0] + u[0][1] * a[1],
            u[1][0] * a[0] + u[1][1] * a[1],
        ];
        Self::new(out, output_labels)
    }
}

/// `c1|s1⟩ + c2|s2⟩`.
pub fn make_superposition(c1: ComplexAmp, c2: ComplexAmp) -> Result<PureState> {
    PureState::new(vec![c1, c2], ["s1", "s2"])
}

/// Which subsystem of the pair to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    S,
    A,
}

/// Two-photon pure state; `amps[j][k]` is the amplitude of `|s_j⟩|a_k⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteState {
    amps: Mat2,
}

impl BipartiteState {
    /// Validates finiteness and normalization, renormalizing near-unit inputs.
    pub fn new(amps: Mat2) -> Result<Self> {
        check_finite(amps.iter().flatten(), "bipartite amplitudes")?;
        let scale = renormalization(norm_sq(&amps))?;
        let mut amps = amps;
        amps.iter_mut().flatten().for_each(|z| *z *= scale);
        Ok(Self { amps })
    }

    pub fn amps(&self) -> &Mat2 {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.amps)
    }

    /// `|amps[j][k]|²` for every detector pair.
    pub fn probabilities(&self) -> [[f64; 2]; 2] {
        self.amps.map(|row| row.map(|z| z.norm_sqr()))
    }

    /// Applies `U_S ⊗ U_A`, i.e. `amps' = U_S · amps · U_Aᵀ`.
    pub fn apply_local_unitaries(&self, u_s: &Mat2, u_a: &Mat2) -> Result<Self> {
        linalg::check_unitary(u_s, UNITARY_TOL)?;
        linalg::check_unitary(u_a, UNITARY_TOL)?;
        let amps = linalg::mul(&linalg::mul(u_s, &self.amps), &linalg::transpose(u_a));
        Ok(Self { amps })
    }

    /// Reduced density operator of the kept subsystem.
    pub fn partial_trace(&self, keep: Subsystem) -> DensityOperator {
        let m = &self.amps;
        // ρ_S = M M†, ρ_A = Mᵀ M*
        let matrix = match keep {
            Subsystem::S => linalg::mul(m, &linalg::adjoint(m)),
            Subsystem::A => linalg::mul(&linalg::transpose(m), &m.map(|row| row.map(|z| z.conj()))),
        };
        DensityOperator { matrix }
    }

    /// Singular values of the amplitude matrix from the closed-form eigenvalues of `M M†`.
    pub fn schmidt(&self) -> SchmidtDecomposition {
        let total = self.norm_sq();
        let det_sq = linalg::det(&self.amps).norm_sqr();
        let disc = (total * total - 4.0 * det_sq).max(0.0).sqrt();
        let big = 0.5 * (total + disc);
        // product of the eigenvalues is |det M|²; avoids cancellation in the small one
        let small = if big > 0.0 { det_sq / big } else { 0.0 };
        let coefficients = [big.sqrt(), small.max(0.0).sqrt()];
        let rank = coefficients
            .iter()
            .filter(|&&c| c > SCHMIDT_RANK_TOL)
            .count();
        SchmidtDecomposition { coefficients, rank }
    }

    pub fn is_entangled(&self) -> bool {
        self.schmidt().rank == 2
    }
}

fn norm_sq(amps: &Mat2) -> f64 {
    amps.iter().flatten().map(|z| z.norm_sqr()).sum()
}

/// `c1|s1⟩|a1⟩ + c2|s2⟩|a2⟩`.
pub fn make_measurement_state(c1: ComplexAmp, c2: ComplexAmp) -> Result<BipartiteState> {
    BipartiteState::new([[c1, ZERO], [ZERO, c2]])
}

/// Product state; both factors must be two-mode.
pub fn tensor_product(s: &PureState, a: &PureState) -> Result<BipartiteState> {
    if s.dim() != 2 || a.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "tensor product needs two 2-mode states, got dims {} and {}",
            s.dim(),
            a.dim()
        )));
    }
    let (s, a) = (s.amplitudes(), a.amplitudes());
    BipartiteState::new([[s[0] * a[0], s[0] * a[1]], [s[1] * a[0], s[1] * a[1]]])
}

/// Hermitian, unit-trace 2×2 operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator {
    matrix: Mat2,
}

impl DensityOperator {
    pub fn new(matrix: Mat2) -> Result<Self> {
        if !linalg::is_finite(&matrix) {
            return Err(Error::NonFinite("density matrix"));
        }
        let herm = linalg::max_abs_diff(&matrix, &linalg::adjoint(&matrix));
        if herm > STATE_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix not Hermitian ({herm:e})"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {tr} ≠ 1"
            )));
        }
        let rho = Self { matrix };
        if rho.eigenvalues()[1] < -STATE_TOL {
            return Err(Error::InvalidArgument(
                "density matrix has a negative eigenvalue".into(),
            ));
        }
        Ok(rho)
    }

    /// Mixture `diag(p, 1 - p)`.
    pub fn diagonal(p: f64) -> Result<Self> {
        Self::new(linalg::diag(
            Complex64::new(p, 0.0),
            Complex64::new(1.0 - p, 0.0),
        ))
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        linalg::trace(&linalg::mul(&self.matrix, &self.matrix)).re
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.matrix[0][0].re;
        let d = self.matrix[1][1].re;
        let b = self.matrix[0][1];
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean + r, mean - r]
    }

    /// Modulus of the coherence `ρ[0][1]`.
    pub fn coherence(&self) -> f64 {
        self.matrix[0][1].norm()
    }

    /// Populations of the two basis modes.
    pub fn populations(&self) -> [f64; 2] {
        [self.matrix[0][0].re, self.matrix[1][1].re]
    }

    /// Largest elementwise distance from the maximally mixed state `I/2`.
    pub fn deviation_from_maximally_mixed(&self) -> f64 {
        let half = linalg::diag(Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0));
        linalg::max_abs_diff(&self.matrix, &half)
    }
}

/// Schmidt coefficients of a two-photon state, sorted descending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtDecomposition {
    pub coefficients: [f64; 2],
    pub rank: usize,
}
