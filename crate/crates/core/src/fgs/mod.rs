//! Pure fermionic Gaussian states stored through the operators that
//! annihilate them.
//!
//! A state on `L` sites is a `2L x L` matrix `alpha` with orthonormal
//! columns. Column `j` encodes `d_j = sum_k conj(alpha[k, j]) c_k +
//! conj(alpha[k + L, j]) c†_k`, and `d_j |psi> = 0` for every `j`. The
//! covariance matrix is `C = alpha alpha†` with `C[a, b] = <ĉ_a ĉ†_b>` over
//! the Nambu vector `ĉ = (c_1..c_L, c†_1..c†_L)`.
//!
//! Sites are 0-indexed throughout.

mod kernel;

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kernel::{GateKind, LocalUnitary, QuadraticKernel};

/// Born probabilities closer than this to 0 or 1 resolve deterministically.
pub const DEGENERACY_GUARD: f64 = 1e-12;
/// Accepted column-orthonormality defect for externally supplied matrices.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
const COLLAPSE_NORM: f64 = 1e-10;
// Below this residual Gram eigenvalue the closed-form re-orthonormalization
// after a projection loses too many digits; fall back to Gram-Schmidt.
const LOWDIN_FLOOR: f64 = 1e-6;

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Goes through the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is that of `m` with every eigenvalue doubled.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let n = m.nrows();
    let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |a, b| {
        let z = 0.5 * (m[(a % n, b % n)] + m[(b % n, a % n)].conj());
        match (a < n, b < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Covariance matrix `C = alpha alpha†` in the block layout
/// `[[<c c†>, <c c>], [<c† c†>, <c† c>]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    sites: usize,
    matrix: DMatrix<C64>,
}

impl CovarianceMatrix {
    pub fn new(sites: usize, matrix: DMatrix<C64>) -> Self {
        assert_eq!(matrix.shape(), (2 * sites, 2 * sites));
        Self { sites, matrix }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `<n_i> = <c†_i c_i>`.
    pub fn occupation(&self, i: usize) -> f64 {
        self.matrix[(i + self.sites, i + self.sites)].re
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// `max |C² - C|`, zero for pure states.
    pub fn idempotency_defect(&self) -> f64 {
        max_abs(&(&self.matrix * &self.matrix - &self.matrix))
    }

    /// `max |<c c†> - (1 - <c† c>ᵀ)|`.
    pub fn particle_hole_defect(&self) -> f64 {
        let l = self.sites;
        let mut defect: f64 = 0.0;
        for i in 0..l {
            for j in 0..l {
                let id = if i == j { ONE } else { ZERO };
                let d = self.matrix[(i, j)] - (id - self.matrix[(j + l, i + l)]);
                defect = defect.max(d.norm());
            }
        }
        defect
    }

    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}

/// Row-major `(re, im)` pairs of the annihilator matrix, used for fixtures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaFixture {
    pub sites: usize,
    pub alpha: Vec<[f64; 2]>,
}

/// A pure fermionic Gaussian state on a ring of `sites` modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaFixture", into = "AlphaFixture")]
pub struct GaussianState {
    sites: usize,
    alpha: DMatrix<C64>,
}

impl TryFrom<AlphaFixture> for GaussianState {
    type Error = Error;

    fn try_from(fx: AlphaFixture) -> Result<Self> {
        Self::from_row_major_pairs(fx.sites, &fx.alpha)
    }
}

impl From<GaussianState> for AlphaFixture {
    fn from(state: GaussianState) -> Self {
        AlphaFixture {
            sites: state.sites,
            alpha: state.to_row_major_pairs(),
        }
    }
}

impl GaussianState {
    /// Product state in the occupation basis.
    ///
    /// An occupied site `i` is annihilated by `c†_i` (column `e_{i+L}`), an
    /// empty one by `c_i` (column `e_i`).
    pub fn product(occupations: &[bool]) -> Result<Self> {
        let l = occupations.len();
        if l < 2 {
            return Err(Error::InvalidSize(l));
        }
        let mut alpha = DMatrix::zeros(2 * l, l);
        for (i, &occ) in occupations.iter().enumerate() {
            alpha[(if occ { i + l } else { i }, i)] = ONE;
        }
        Ok(Self { sites: l, alpha })
    }

    pub fn vacuum(sites: usize) -> Result<Self> {
        Self::product(&vec![false; sites])
    }

    /// Wraps an annihilator matrix after checking its shape and orthonormality.
    pub fn from_alpha(alpha: DMatrix<C64>) -> Result<Self> {
        let (rows, sites) = alpha.shape();
        if sites < 2 || rows != 2 * sites {
            return Err(Error::InvalidSize(sites));
        }
        let state = Self { sites, alpha };
        let defect = state.orthonormality_defect();
        if !(defect <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(state)
    }

    pub fn from_row_major_pairs(sites: usize, pairs: &[[f64; 2]]) -> Result<Self> {
        if pairs.len() != 2 * sites * sites {
            return Err(Error::InvalidSize(sites));
        }
        let alpha = DMatrix::from_row_iterator(
            2 * sites,
            sites,
            pairs.iter().map(|&[re, im]| C64::new(re, im)),
        );
        Self::from_alpha(alpha)
    }

    pub fn to_row_major_pairs(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.alpha.len());
        for row in self.alpha.row_iter() {
            out.extend(row.iter().map(|z| [z.re, z.im]));
        }
        out
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn alpha(&self) -> &DMatrix<C64> {
        &self.alpha
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.sites,
            });
        }
        Ok(())
    }

    pub fn covariance(&self) -> CovarianceMatrix {
        CovarianceMatrix::new(self.sites, &self.alpha * self.alpha.adjoint())
    }

    /// `<n_i> = sum_k |alpha[i + L, k]|²`.
    pub fn occupation(&self, i: usize) -> f64 {
        self.row_norm_sqr(i + self.sites)
    }

    pub fn occupations(&self) -> Vec<f64> {
        (0..self.sites).map(|i| self.occupation(i)).collect()
    }

    fn row_norm_sqr(&self, row: usize) -> f64 {
        self.alpha.row(row).iter().map(|z| z.norm_sqr()).sum()
    }

    /// `max |alpha† alpha - 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.alpha.adjoint() * &self.alpha;
        max_abs(&(gram - DMatrix::<C64>::identity(self.sites, self.sites)))
    }

    /// `alpha -> exp(-iH) alpha`.
    pub fn apply_kernel(&mut self, kernel: &QuadraticKernel) -> Result<()> {
        if kernel.sites() != self.sites {
            return Err(Error::InvalidSize(kernel.sites()));
        }
        let u = kernel.exponentiate()?;
        self.apply_local(&u);
        Ok(())
    }

    pub fn apply_local(&mut self, u: &LocalUnitary) {
        let nrows = 2 * self.sites;
        u.apply_columns(self.alpha.as_mut_slice(), nrows);
    }

    /// `exp(-i angle H_kind(i, j))`.
    pub fn apply_gate(&mut self, kind: GateKind, i: usize, j: usize, angle: f64) -> Result<()> {
        let kernel = QuadraticKernel::gate(kind, i, j, angle, self.sites)?;
        self.apply_kernel(&kernel)
    }

    /// Exchanges the labels of modes `i` and `j` (rows `i<->j`, `i+L<->j+L`).
    ///
    /// On sites with definite occupations this is the fermionic SWAP up to a
    /// global phase.
    pub fn swap_modes(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::SameSite(i));
        }
        let l = self.sites;
        self.alpha.swap_rows(i, j);
        self.alpha.swap_rows(i + l, j + l);
        Ok(())
    }

    /// Samples an occupation measurement of site `i` with the uniform draw `u`.
    ///
    /// Outcome 1 is chosen iff `u < <n_i>`, except that probabilities within
    /// [`DEGENERACY_GUARD`] of 0 or 1 are resolved without looking at `u`.
    pub fn measure(&mut self, i: usize, u: f64) -> Result<bool> {
        self.check_site(i)?;
        let p1 = self.occupation(i);
        let outcome = if p1 < DEGENERACY_GUARD {
            false
        } else if p1 > 1.0 - DEGENERACY_GUARD {
            true
        } else {
            u < p1
        };
        self.project(i, outcome)?;
        Ok(outcome)
    }

    /// Projects onto `n_i = outcome` and returns the Born probability of
    /// that outcome in the pre-measurement state.
    ///
    /// The pivot column (largest modulus in the outcome row) absorbs that
    /// row through a Householder reflection of the columns, the remaining
    /// columns drop their component on the opposite row, and are then
    /// re-orthonormalized in closed form: their Gram matrix is `1 - g g†`.
    pub fn project(&mut self, i: usize, outcome: bool) -> Result<f64> {
        self.check_site(i)?;
        let l = self.sites;
        let m = 2 * l;
        let (r, s) = if outcome { (i + l, i) } else { (i, i + l) };
        let prob = self.row_norm_sqr(r);
        if prob < DEGENERACY_GUARD {
            return Err(Error::InvalidParameter(format!(
                "outcome {} on site {i} has vanishing probability {prob:.3e}",
                outcome as u8
            )));
        }
        let pivot = self.pivot(r);

        let y: Vec<C64> = self.alpha.row(r).iter().map(|z| z.conj()).collect();
        let spread = y.iter().enumerate().any(|(k, z)| k != pivot && *z != ZERO);
        let data = self.alpha.as_mut_slice();
        if spread {
            // reflect the columns so that row r lives only in the pivot column
            let norm = prob.sqrt();
            let phase = y[pivot] / y[pivot].norm();
            let mut u = y;
            u[pivot] += phase * norm;
            let uu: f64 = u.iter().map(|z| z.norm_sqr()).sum();
            let mut w = vec![ZERO; m];
            for (col, uk) in data.chunks_exact(m).zip(&u) {
                for (wa, x) in w.iter_mut().zip(col) {
                    *wa += x * uk;
                }
            }
            let scale = 2.0 / uu;
            for (col, uk) in data.chunks_exact_mut(m).zip(&u) {
                let f = uk.conj() * scale;
                for (x, wa) in col.iter_mut().zip(&w) {
                    *x -= wa * f;
                }
            }
        }

        let mut g = vec![ZERO; l];
        for (k, col) in data.chunks_exact_mut(m).enumerate() {
            if k == pivot {
                col.fill(ZERO);
                col[r] = ONE;
            } else {
                col[r] = ZERO;
                g[k] = col[s].conj();
                col[s] = ZERO;
            }
        }

        let g2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        if g2 > 0.0 {
            if 1.0 - g2 < LOWDIN_FLOOR {
                self.orthonormalize()?;
            } else {
                let kappa = ((1.0 - g2).sqrt().recip() - 1.0) / g2;
                let mut bg = vec![ZERO; m];
                for (col, gk) in data.chunks_exact(m).zip(&g) {
                    for (acc, x) in bg.iter_mut().zip(col) {
                        *acc += x * gk;
                    }
                }
                for (col, gk) in data.chunks_exact_mut(m).zip(&g) {
                    let f = gk.conj() * kappa;
                    for (x, b) in col.iter_mut().zip(&bg) {
                        *x += b * f;
                    }
                }
            }
        }
        Ok(prob)
    }

    /// Projection by explicit pivot elimination followed by Gram-Schmidt.
    ///
    /// Produces the same state as [`GaussianState::project`]; kept as an
    /// independent route for differential tests.
    pub fn project_by_elimination(&mut self, i: usize, outcome: bool) -> Result<f64> {
        self.check_site(i)?;
        let l = self.sites;
        let m = 2 * l;
        let (r, s) = if outcome { (i + l, i) } else { (i, i + l) };
        let prob = self.row_norm_sqr(r);
        if prob < DEGENERACY_GUARD {
            return Err(Error::InvalidParameter(format!(
                "outcome {} on site {i} has vanishing probability {prob:.3e}",
                outcome as u8
            )));
        }
        let pivot = self.pivot(r);
        let data = self.alpha.as_mut_slice();
        let pcol: Vec<C64> = data[pivot * m..(pivot + 1) * m].to_vec();
        let denom = pcol[r];
        for (k, col) in data.chunks_exact_mut(m).enumerate() {
            if k == pivot {
                col.fill(ZERO);
                col[r] = ONE;
                continue;
            }
            let c = col[r] / denom;
            if c != ZERO {
                for (x, p) in col.iter_mut().zip(&pcol) {
                    *x -= c * p;
                }
            }
            col[r] = ZERO;
            col[s] = ZERO;
        }
        self.orthonormalize()?;
        Ok(prob)
    }

    fn pivot(&self, row: usize) -> usize {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (k, z) in self.alpha.row(row).iter().enumerate() {
            let a = z.norm_sqr();
            if a > best_abs {
                best_abs = a;
                best = k;
            }
        }
        best
    }

    /// Modified Gram-Schmidt on the columns; the column span is unchanged.
    pub fn orthonormalize(&mut self) -> Result<()> {
        let m = 2 * self.sites;
        let data = self.alpha.as_mut_slice();
        let n = data.len() / m;
        for k in 0..n {
            let (head, tail) = data.split_at_mut((k + 1) * m);
            let col = &mut head[k * m..];
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < COLLAPSE_NORM {
                return Err(Error::RankDeficient { column: k, norm });
            }
            let inv = 1.0 / norm;
            col.iter_mut().for_each(|z| *z *= inv);
            let q = &*col;
            for other in tail.chunks_exact_mut(m) {
                let mut dot = ZERO;
                for (a, b) in q.iter().zip(other.iter()) {
                    dot += a.conj() * b;
                }
                if dot != ZERO {
                    for (x, a) in other.iter_mut().zip(q) {
                        *x -= dot * a;
                    }
                }
            }
        }
        Ok(())
    }

    /// Rényi entropy `S^(n)` of the contiguous block `region`.
    ///
    /// Uses the eigenvalues of the covariance matrix restricted to the
    /// block, `S = sum log(λⁿ + (1-λ)ⁿ) / (2(1-n))`.
    pub fn renyi_entropy(&self, region: Range<usize>, n: u32) -> Result<f64> {
        check_region(&region, self.sites)?;
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "Rényi index must be at least 2, got {n}"
            )));
        }
        let l = self.sites;
        let len = region.len();
        let rows: Vec<usize> = region
            .clone()
            .chain(region.start + l..region.end + l)
            .collect();
        let sub = DMatrix::from_fn(2 * len, l, |a, k| self.alpha[(rows[a], k)]);
        let eigenvalues = hermitian_eigenvalues(&(&sub * sub.adjoint()));
        let n = n as i32;
        let sum: f64 = eigenvalues
            .iter()
            .map(|&lam| {
                let lam = lam.clamp(0.0, 1.0);
                (lam.powi(n) + (1.0 - lam).powi(n)).ln()
            })
            .sum();
        Ok((sum / (2.0 * (1 - n) as f64)).max(0.0))
    }

    /// Draws one occupation configuration from the Born distribution,
    /// measuring sites in ascending order on a working copy.
    pub fn sample_bitstring<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<bool>> {
        let mut work = self.clone();
        (0..self.sites)
            .map(|i| {
                let u: f64 = rng.gen();
                work.measure(i, u)
            })
            .collect()
    }
}

pub(crate) fn check_region(region: &Range<usize>, sites: usize) -> Result<()> {
    if region.is_empty() {
        return Err(Error::InvalidRegion("empty region".into()));
    }
    if region.end > sites {
        return Err(Error::InvalidRegion(format!(
            "{region:?} exceeds {sites} sites"
        )));
    }
    if region.len() == sites {
        return Err(Error::InvalidRegion(
            "region covers the whole system".into(),
        ));
    }
    Ok(())
}
