//! Brute-force Fock-space reference for small rings.
//!
//! Basis index bit `k` is the occupation of site `k`. Fermionic signs come
//! from the Jordan-Wigner string over ascending site order:
//! `c_k |n> = (-1)^(n_0 + .. + n_{k-1}) |n - e_k>`.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fgs::{
    check_region, hermitian_eigenvalues, CovarianceMatrix, GateKind, DEGENERACY_GUARD,
};

pub const MAX_SITES: usize = 12;

type C64 = Complex64;
const ZERO: C64 = C64::new(0.0, 0.0);

/// Two-site operations understood by the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleGate {
    Gate(GateKind),
    /// Relabels modes `i <-> j`: `W c_i W† = c_j`.
    ModeSwap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    sites: usize,
    amplitudes: Vec<C64>,
}

fn jw_sign(index: usize, site: usize) -> f64 {
    if (index & ((1 << site) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl FockVector {
    pub fn product(occupations: &[bool]) -> Result<Self> {
        let l = occupations.len();
        if l == 0 || l > MAX_SITES {
            return Err(Error::InvalidSize(l));
        }
        let index = occupations
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .fold(0usize, |acc, (k, _)| acc | (1 << k));
        let mut amplitudes = vec![ZERO; 1 << l];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self {
            sites: l,
            amplitudes,
        })
    }

    pub fn from_amplitudes(sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES || amplitudes.len() != 1 << sites {
            return Err(Error::InvalidSize(sites));
        }
        Ok(Self { sites, amplitudes })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
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

    /// `c_k |self>` (unnormalized).
    pub fn annihilate(&self, k: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            if a != ZERO && idx & (1 << k) != 0 {
                out[idx ^ (1 << k)] += a * jw_sign(idx, k);
            }
        }
        out
    }

    /// `c†_k |self>` (unnormalized).
    pub fn create(&self, k: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            if a != ZERO && idx & (1 << k) == 0 {
                out[idx | (1 << k)] += a * jw_sign(idx, k);
            }
        }
        out
    }

    fn with(&self, amplitudes: Vec<C64>) -> Self {
        Self {
            sites: self.sites,
            amplitudes,
        }
    }

    /// `H_kind(i, j) |self>` with the pair normalized to `i < j`.
    pub fn apply_generator(&self, kind: GateKind, i: usize, j: usize) -> Vec<C64> {
        let (i, j) = (i.min(j), i.max(j));
        let (first, second) = match kind {
            GateKind::Hopping => (
                self.with(self.annihilate(j)).create(i),
                self.with(self.annihilate(i)).create(j),
            ),
            GateKind::Pairing => (
                self.with(self.create(j)).create(i),
                self.with(self.annihilate(i)).annihilate(j),
            ),
        };
        first.iter().zip(&second).map(|(a, b)| a + b).collect()
    }

    /// Applies a gate exactly. Both generators satisfy `H³ = H` (spectrum
    /// `{0, ±1}`), so `exp(-iθH) = 1 - i sinθ H + (cosθ - 1) H²`.
    pub fn apply(&mut self, gate: OracleGate, i: usize, j: usize, angle: f64) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::SameSite(i));
        }
        match gate {
            OracleGate::ModeSwap => {
                self.amplitudes = self.mode_swapped(i, j);
            }
            OracleGate::Gate(kind) => {
                let h1 = self.apply_generator(kind, i, j);
                let h2 = self.with(h1.clone()).apply_generator(kind, i, j);
                let (s, c) = angle.sin_cos();
                for ((a, x1), x2) in self.amplitudes.iter_mut().zip(&h1).zip(&h2) {
                    *a += C64::new(0.0, -s) * x1 + (c - 1.0) * x2;
                }
            }
        }
        Ok(())
    }

    /// Image under the mode relabeling `i <-> j`, built by re-creating every
    /// basis state with relabeled creation operators:
    /// `c†_{a1}..c†_{ak}|0> -> c†_{π(a1)}..c†_{π(ak)}|0>`.
    fn mode_swapped(&self, i: usize, j: usize) -> Vec<C64> {
        let perm = |k: usize| {
            if k == i {
                j
            } else if k == j {
                i
            } else {
                k
            }
        };
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            // apply creators right to left: highest site acts on vacuum first
            let mut state = 0usize;
            let mut sign = 1.0;
            for k in (0..self.sites).rev() {
                if idx & (1 << k) != 0 {
                    let target = perm(k);
                    sign *= jw_sign(state, target);
                    state |= 1 << target;
                }
            }
            out[state] += a * sign;
        }
        out
    }

    /// Born probability of `n_i = 1`.
    pub fn occupation(&self, i: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & (1 << i) != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects onto `n_i = outcome`, renormalizes, and returns the Born
    /// probability of that outcome.
    pub fn project(&mut self, i: usize, outcome: bool) -> Result<f64> {
        self.check_site(i)?;
        let p1 = self.occupation(i);
        let prob = if outcome { p1 } else { 1.0 - p1 };
        if prob < DEGENERACY_GUARD {
            return Err(Error::InvalidParameter(format!(
                "outcome {} on site {i} has vanishing probability",
                outcome as u8
            )));
        }
        let scale = prob.sqrt().recip();
        for (idx, a) in self.amplitudes.iter_mut().enumerate() {
            if (idx & (1 << i) != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
        Ok(prob)
    }

    /// Samples an occupation measurement with the same guard and draw
    /// convention as the Gaussian simulator.
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

    /// `<Π (1 - 2 n_i)>`.
    pub fn parity(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let s = if idx.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                s * a.norm_sqr()
            })
            .sum()
    }

    /// Covariance matrix from `C[a, b] = <φ_a | φ_b>`, `φ_a = ĉ†_a |ψ>`.
    pub fn covariance(&self) -> CovarianceMatrix {
        let l = self.sites;
        let phis: Vec<Vec<C64>> = (0..2 * l)
            .map(|a| {
                if a < l {
                    self.create(a)
                } else {
                    self.annihilate(a - l)
                }
            })
            .collect();
        let m = DMatrix::from_fn(2 * l, 2 * l, |a, b| {
            phis[a]
                .iter()
                .zip(&phis[b])
                .map(|(x, y)| x.conj() * y)
                .sum::<C64>()
        });
        CovarianceMatrix::new(l, m)
    }

    /// Rényi entropy of a contiguous block from the reduced density matrix.
    pub fn renyi_entropy(&self, region: Range<usize>, n: u32) -> Result<f64> {
        check_region(&region, self.sites)?;
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "Rényi index must be at least 2, got {n}"
            )));
        }
        let inside: usize = region.clone().fold(0, |acc, k| acc | (1 << k));
        let a_bits: Vec<usize> = region.clone().collect();
        let b_bits: Vec<usize> = (0..self.sites).filter(|k| !region.contains(k)).collect();
        let gather = |idx: usize, bits: &[usize]| {
            bits.iter()
                .enumerate()
                .fold(0usize, |acc, (pos, &k)| acc | (((idx >> k) & 1) << pos))
        };
        let mut psi = DMatrix::<C64>::zeros(1 << a_bits.len(), 1 << b_bits.len());
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            psi[(
                gather(idx & inside, &a_bits),
                gather(idx & !inside, &b_bits),
            )] = a;
        }
        // the smaller Gram matrix carries the same nonzero spectrum
        let rho = if psi.nrows() <= psi.ncols() {
            &psi * psi.adjoint()
        } else {
            psi.adjoint() * &psi
        };
        let trace_n: f64 = hermitian_eigenvalues(&rho)
            .iter()
            .map(|&lam| lam.max(0.0).powi(n as i32))
            .sum();
        Ok((trace_n.ln() / (1.0 - n as f64)).max(0.0))
    }
}
