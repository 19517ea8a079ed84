//! Pure states, marginals and von Neumann entropy; the lower quantum
//! functional, Schur–Weyl isotypic projections and representation-theoretic
//! coefficients live in the submodules.

mod optimizer;
mod repr;
mod schur_weyl;

pub use optimizer::{lower_quantum_functional, LowerQuantumResult, QuantumOptions};
pub use repr::{character, kronecker_coefficient, lr_coefficient, z_class};
pub use schur_weyl::{
    isotypic_projector_apply, symmetrize_copies, tensor_power, upper_quantum_certificate, UpperCertificate,
    MAX_PROJECTOR_COPIES, MAX_PROJECTOR_LEN,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::field::{Complexes, Domain};
use crate::tensor::{contract_leg, flattening_layout, Tensor};

/// Unit vector in V_1 ⊗ … ⊗ V_k, row-major like `Tensor`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
    /// Norm before normalization.
    norm: f64,
}

impl QuantumState {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<QuantumState> {
        if dims.is_empty() || dims.contains(&0) || dims.iter().product::<usize>() != amps.len() {
            return Err(SpectralError::ShapeMismatch(format!(
                "{} amplitudes for dims {:?}",
                amps.len(),
                dims
            )));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(SpectralError::invalid("state must be nonzero and finite"));
        }
        let amps = amps.into_iter().map(|z| z / norm).collect();
        Ok(QuantumState { dims, amps, norm })
    }

    /// The normalized state of a tensor over any domain that embeds in C.
    pub fn from_tensor(t: &Tensor) -> Result<QuantumState> {
        let c = t.to_domain(Domain::Complex)?;
        let amps = c.complex_entries().expect("complex domain").to_vec();
        QuantumState::new(t.dims().to_vec(), amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// ρ_S = Tr_{S̄} |ψ⟩⟨ψ|, rows and columns indexed by the legs in S in
    /// ascending order.
    pub fn marginal(&self, s: &[usize]) -> Result<DMatrix<Complex64>> {
        if s.is_empty() || s.len() >= self.order() {
            return Err(SpectralError::invalid("marginal needs a nonempty proper subset of the legs"));
        }
        let m = flattening(&self.dims, &self.amps, s)?;
        Ok(&m * m.adjoint())
    }

    pub fn marginal_entropy(&self, s: &[usize]) -> Result<f64> {
        von_neumann_entropy(&self.marginal(s)?)
    }

    /// Applies `g_i` to leg i and normalizes.
    pub fn transform(&self, g: &LocalGroupElement) -> Result<QuantumState> {
        QuantumState::new(self.dims.clone(), g.apply(&self.dims, &self.amps)?)
    }
}

pub(crate) fn flattening(dims: &[usize], amps: &[Complex64], s: &[usize]) -> Result<DMatrix<Complex64>> {
    let (rows, cols, perm) = flattening_layout(dims, s)?;
    Ok(DMatrix::from_fn(rows, cols, |r, c| amps[perm[r * cols + c]]))
}

/// Eigenvalues of a Hermitian matrix, ascending, negatives clipped to 0.
pub fn hermitian_spectrum(rho: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = rho.clone().symmetric_eigen().eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// −Tr ρ log₂ ρ; ρ must be Hermitian with unit trace.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> Result<f64> {
    if !rho.is_square() {
        return Err(SpectralError::ShapeMismatch("density matrix must be square".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(SpectralError::invalid(format!("density matrix has trace {tr}")));
    }
    Ok(hermitian_spectrum(rho)
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum())
}

/// g_1, …, g_k with g_i acting on leg i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGroupElement {
    pub mats: Vec<DMatrix<Complex64>>,
}

impl LocalGroupElement {
    pub fn identity(dims: &[usize]) -> LocalGroupElement {
        LocalGroupElement {
            mats: dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        }
    }

    pub fn apply(&self, dims: &[usize], amps: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.mats.len() != dims.len() {
            return Err(SpectralError::OrderMismatch(self.mats.len(), dims.len()));
        }
        let mut cur_dims = dims.to_vec();
        let mut cur = amps.to_vec();
        for (leg, g) in self.mats.iter().enumerate() {
            if g.ncols() != cur_dims[leg] {
                return Err(SpectralError::ShapeMismatch(format!("matrix for leg {leg}")));
            }
            let row_major: Vec<Complex64> = (0..g.nrows())
                .flat_map(|r| (0..g.ncols()).map(move |c| g[(r, c)]))
                .collect();
            let (nd, out) = contract_leg(&Complexes, &cur_dims, &cur, leg, g.nrows(), g.ncols(), &row_major);
            cur_dims = nd;
            cur = out;
        }
        Ok(cur)
    }

    pub fn max_condition(&self) -> f64 {
        self.mats
            .iter()
            .map(|g| {
                let s = g.singular_values();
                let hi = s.max();
                let lo = s.min();
                if lo > 0.0 {
                    hi / lo
                } else {
                    f64::INFINITY
                }
            })
            .fold(1.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;
    use crate::family::FamilySpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_marginals_maximally_mixed() {
        for r in 1..=4 {
            let s = QuantumState::from_tensor(&FamilySpec::Unit { r, k: 3 }.build().unwrap()).unwrap();
            for leg in 0..3 {
                assert_abs_diff_eq!(s.marginal_entropy(&[leg]).unwrap(), (r as f64).log2(), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn w_marginal_spectrum() {
        let s = QuantumState::from_tensor(&FamilySpec::w().build().unwrap()).unwrap();
        let spec = hermitian_spectrum(&s.marginal(&[0]).unwrap());
        assert_abs_diff_eq!(spec[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec[1], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.marginal_entropy(&[1, 2]).unwrap(), binary_entropy(1.0 / 3.0), epsilon = 1e-10);
    }

    #[test]
    fn product_state_has_zero_entropy() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(1.0, 0.0);
        let s = QuantumState::new(vec![2, 2, 2], amps).unwrap();
        for sub in [vec![0], vec![1], vec![0, 2]] {
            assert!(s.marginal_entropy(&sub).unwrap().abs() < 1e-12);
        }
        assert!(s.marginal(&[]).is_err());
        assert!(s.marginal(&[0, 1, 2]).is_err());
    }
}
