use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KERNEL_TOL: f64 = 1e-12;

/// The two parity-preserving two-site gates of the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// `c†_i c_j + c†_j c_i`
    Hopping,
    /// `c†_i c†_j + c_j c_i`, with `i < j`
    Pairing,
}

/// Sparse single-particle kernel `H` of a Gaussian unitary `exp(-i c†Hc / 2)`.
///
/// Indices run over the Nambu vector `(c_1..c_L, c†_1..c†_L)`, so `H` has the
/// block layout `[[A, B], [B†, -Aᵀ]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticKernel {
    sites: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl QuadraticKernel {
    /// Wraps raw entries without checking them; see [`QuadraticKernel::validate`].
    pub fn from_entries(sites: usize, entries: Vec<(usize, usize, Complex64)>) -> Self {
        Self { sites, entries }
    }

    pub fn zero(sites: usize) -> Self {
        Self::from_entries(sites, Vec::new())
    }

    /// Kernel for `exp(-i angle H_kind(i, j))`.
    ///
    /// The site pair is normalized to `i < j` before building the pairing
    /// block, so `gate(Pairing, j, i)` equals `gate(Pairing, i, j)`.
    pub fn gate(kind: GateKind, i: usize, j: usize, angle: f64, sites: usize) -> Result<Self> {
        for site in [i, j] {
            if site >= sites {
                return Err(Error::SiteOutOfRange { site, sites });
            }
        }
        if i == j {
            return Err(Error::SameSite(i));
        }
        let (i, j) = (i.min(j), i.max(j));
        let l = sites;
        let t = Complex64::new(angle, 0.0);
        let entries = match kind {
            GateKind::Hopping => vec![(i, j, t), (j, i, t), (i + l, j + l, -t), (j + l, i + l, -t)],
            GateKind::Pairing => vec![(i, j + l, t), (j, i + l, -t), (j + l, i, t), (i + l, j, -t)],
        };
        Ok(Self { sites, entries })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    fn summed(&self) -> BTreeMap<(usize, usize), Complex64> {
        let mut map = BTreeMap::new();
        for &(a, b, v) in &self.entries {
            *map.entry((a, b)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        map
    }

    /// Largest violation of `H† = H`, `A† = A`, `Bᵀ = -B` and the `-Aᵀ` block.
    pub fn structure_defect(&self) -> f64 {
        let l = self.sites;
        let map = self.summed();
        let get = |a: usize, b: usize| map.get(&(a, b)).copied().unwrap_or_default();
        let mut defect: f64 = 0.0;
        for (&(a, b), &v) in &map {
            if a >= 2 * l || b >= 2 * l {
                return f64::INFINITY;
            }
            defect = defect.max((v - get(b, a).conj()).norm());
            match (a < l, b < l) {
                (true, true) => defect = defect.max((v + get(b + l, a + l)).norm()),
                (true, false) => defect = defect.max((v + get(b - l, a + l)).norm()),
                (false, false) => defect = defect.max((v + get(b - l, a - l)).norm()),
                (false, true) => {}
            }
        }
        defect
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.structure_defect();
        if defect > KERNEL_TOL {
            return Err(Error::NonHermitianKernel(defect));
        }
        Ok(())
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = 2 * self.sites;
        let mut h = DMatrix::zeros(n, n);
        for &(a, b, v) in &self.entries {
            h[(a, b)] += v;
        }
        h
    }

    /// `exp(-iH)` restricted to the rows the kernel touches.
    pub fn exponentiate(&self) -> Result<LocalUnitary> {
        self.validate()?;
        let mut rows: Vec<usize> = self.entries.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        rows.sort_unstable();
        rows.dedup();
        let k = rows.len();
        if k == 0 {
            return Ok(LocalUnitary {
                rows,
                matrix: DMatrix::zeros(0, 0),
            });
        }
        let pos = |x: usize| rows.binary_search(&x).unwrap();
        let mut block = DMatrix::<Complex64>::zeros(k, k);
        for &(a, b, v) in &self.entries {
            block[(pos(a), pos(b))] += v;
        }
        // force exact Hermiticity before the eigensolver
        let block = (&block + block.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(block);
        let phases =
            DMatrix::from_diagonal(&eig.eigenvalues.map(|lam| Complex64::from_polar(1.0, -lam)));
        let matrix = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        Ok(LocalUnitary { rows, matrix })
    }
}

/// A unitary acting on a handful of Nambu rows of the annihilator matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary {
    rows: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl LocalUnitary {
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Same block acting on a different row set of equal length.
    pub fn rebased(&self, rows: Vec<usize>) -> Self {
        assert_eq!(rows.len(), self.rows.len(), "row count mismatch");
        Self {
            rows,
            matrix: self.matrix.clone(),
        }
    }

    /// Rows `[i, j, i+L, j+L]` of a two-site gate, the layout produced by
    /// [`QuadraticKernel::gate`] for `i < j`.
    pub fn for_link(&self, i: usize, j: usize, sites: usize) -> Self {
        let (i, j) = (i.min(j), i.max(j));
        self.rebased(vec![i, j, i + sites, j + sites])
    }

    pub(crate) fn apply_columns(&self, data: &mut [Complex64], nrows: usize) {
        let k = self.rows.len();
        if k == 0 {
            return;
        }
        let mut buf = vec![Complex64::default(); k];
        for col in data.chunks_exact_mut(nrows) {
            for (slot, &r) in buf.iter_mut().zip(&self.rows) {
                *slot = col[r];
            }
            for (a, &r) in self.rows.iter().enumerate() {
                let mut acc = Complex64::default();
                for (b, x) in buf.iter().enumerate() {
                    acc += self.matrix[(a, b)] * x;
                }
                col[r] = acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgs::max_abs;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn gate_kernels_have_bdg_structure() {
        for kind in [GateKind::Hopping, GateKind::Pairing] {
            let k = QuadraticKernel::gate(kind, 1, 3, 0.7, 5).unwrap();
            assert_eq!(k.structure_defect(), 0.0);
            let h = k.to_dense();
            assert!(max_abs(&(&h - h.adjoint())) < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_sites() {
        assert_eq!(
            QuadraticKernel::gate(GateKind::Hopping, 2, 2, 1.0, 4),
            Err(Error::SameSite(2))
        );
        assert!(matches!(
            QuadraticKernel::gate(GateKind::Pairing, 0, 4, 1.0, 4),
            Err(Error::SiteOutOfRange { site: 4, .. })
        ));
    }

    #[test]
    fn non_hermitian_kernel_is_rejected() {
        let k = QuadraticKernel::from_entries(2, vec![(0, 1, Complex64::new(1.0, 0.0))]);
        assert!(matches!(k.validate(), Err(Error::NonHermitianKernel(_))));
        assert!(k.exponentiate().is_err());
    }

    #[test]
    fn pairing_ignores_argument_order() {
        let a = QuadraticKernel::gate(GateKind::Pairing, 0, 3, 0.3, 4).unwrap();
        let b = QuadraticKernel::gate(GateKind::Pairing, 3, 0, 0.3, 4).unwrap();
        assert_eq!(a.to_dense(), b.to_dense());
    }

    #[test]
    fn exponential_is_unitary_and_matches_closed_form() {
        let u = QuadraticKernel::gate(GateKind::Hopping, 0, 1, FRAC_PI_4, 2)
            .unwrap()
            .exponentiate()
            .unwrap();
        let m = u.matrix();
        let id = DMatrix::<Complex64>::identity(4, 4);
        assert!(max_abs(&(m * m.adjoint() - &id)) < 1e-14);
        // particle block: cos(t) on the diagonal, -i sin(t) off it
        let c = FRAC_PI_4.cos();
        assert!((m[(0, 0)] - Complex64::new(c, 0.0)).norm() < 1e-14);
        assert!((m[(0, 1)] - Complex64::new(0.0, -c)).norm() < 1e-14);
        assert!((m[(2, 3)] - Complex64::new(0.0, c)).norm() < 1e-14);
    }

    #[test]
    fn zero_kernel_exponentiates_to_nothing() {
        let u = QuadraticKernel::zero(3).exponentiate().unwrap();
        assert!(u.rows().is_empty());
    }
}
