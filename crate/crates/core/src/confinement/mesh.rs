//! Finite-volume discretization of `-Δ + c + V/t²` on the axisymmetric
//! half-plane `(s, z)`, `s ≥ 0`, `z ≥ 0`, with even reflection in `z`.
//!
//! Unknowns sit at `s_i = i h_s`, `z_j = j h_z` for `i < ns`, `j < nz`; the
//! nodes at `s = S` and `z = Z` carry the homogeneous Dirichlet value. Every
//! weight includes the `2π` of the azimuthal integral and the factor two of
//! the mirrored half, so sums over the mesh approximate integrals over `R³`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::math::{pos_pow, sqrt};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mesh {
    pub ns: usize,
    pub nz: usize,
    pub hs: f64,
    pub hz: f64,
    ws: Vec<f64>,
    wz: Vec<f64>,
    /// Conductance of the s-edge from `i` to `i + 1`.
    ks: Vec<f64>,
}

impl Mesh {
    /// `nodes` per side including the Dirichlet node.
    pub fn new(nodes: usize, s_max: f64, z_max: f64) -> Result<Mesh> {
        if nodes < 5 || !(s_max > 0.0 && z_max > 0.0) {
            return Err(Error::Domain(alloc::format!(
                "mesh needs at least 5 nodes and positive extents (got {nodes}, {s_max}, {z_max})"
            )));
        }
        let (ns, nz) = (nodes - 1, nodes - 1);
        let hs = s_max / ns as f64;
        let hz = z_max / nz as f64;
        let ws = (0..ns)
            .map(|i| if i == 0 { 2.0 * PI * hs * hs / 8.0 } else { 2.0 * PI * i as f64 * hs * hs })
            .collect();
        let wz = (0..nz).map(|j| if j == 0 { hz } else { 2.0 * hz }).collect();
        let ks = (0..ns).map(|i| 2.0 * PI * (i as f64 + 0.5)).collect();
        Ok(Mesh { ns, nz, hs, hz, ws, wz, ks })
    }

    pub fn len(&self) -> usize {
        self.ns * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.hs
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.hz
    }

    pub fn s_max(&self) -> f64 {
        self.ns as f64 * self.hs
    }

    pub fn z_max(&self) -> f64 {
        self.nz as f64 * self.hz
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.ws[i] * self.wz[j]
    }

    /// `Σ W f(s, z, w)` over all unknowns.
    pub fn integrate(&self, w: &[f64], f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.ns {
            let s = self.s(i);
            let mut row = 0.0;
            for j in 0..self.nz {
                row += self.wz[j] * f(s, self.z(j), w[i * self.nz + j]);
            }
            acc += self.ws[i] * row;
        }
        acc
    }

    /// Discrete `‖∇w‖₂²`.
    pub fn dirichlet_form(&self, w: &[f64]) -> f64 {
        let (ns, nz) = (self.ns, self.nz);
        let kz = 2.0 / self.hz;
        let mut acc = 0.0;
        for i in 0..ns {
            for j in 0..nz {
                let v = w[i * nz + j];
                let right = if i + 1 < ns { w[(i + 1) * nz + j] } else { 0.0 };
                let up = if j + 1 < nz { w[i * nz + j + 1] } else { 0.0 };
                acc += self.wz[j] * self.ks[i] * (v - right) * (v - right);
                acc += self.ws[i] * kz * (v - up) * (v - up);
            }
        }
        acc
    }

    /// `A w` with `A = K + W (c + s²/t²)`; `inv_t2` is `1/t²`.
    pub fn apply(&self, w: &[f64], c: f64, inv_t2: f64) -> Vec<f64> {
        let (ns, nz) = (self.ns, self.nz);
        let kz = 2.0 / self.hz;
        let mut out = vec![0.0; w.len()];
        for i in 0..ns {
            let s = self.s(i);
            for j in 0..nz {
                let k = i * nz + j;
                let v = w[k];
                let mut a = self.weight(i, j) * (c + s * s * inv_t2) * v;
                // s-edges
                let right = if i + 1 < ns { w[k + nz] } else { 0.0 };
                a += self.wz[j] * self.ks[i] * (v - right);
                if i > 0 {
                    a += self.wz[j] * self.ks[i - 1] * (v - w[k - nz]);
                }
                // z-edges
                let up = if j + 1 < nz { w[k + 1] } else { 0.0 };
                a += self.ws[i] * kz * (v - up);
                if j > 0 {
                    a += self.ws[i] * kz * (v - w[k - 1]);
                }
                out[k] = a;
            }
        }
        out
    }

    /// `‖w‖_A² = wᵀ A w`.
    pub fn energy_norm(&self, w: &[f64], c: f64, inv_t2: f64) -> f64 {
        self.dirichlet_form(w) + self.integrate(w, |s, _, v| (c + s * s * inv_t2) * v * v)
    }

    /// Samples `f(s, z)` on the unknowns.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.ns {
            for j in 0..self.nz {
                out.push(f(self.s(i), self.z(j)));
            }
        }
        out
    }

    /// Bilinear interpolation of a field on this mesh; zero outside.
    pub fn interpolate(&self, w: &[f64], s: f64, z: f64) -> f64 {
        let z = z.abs();
        let (x, y) = (s / self.hs, z / self.hz);
        if !(x >= 0.0 && y >= 0.0) || x >= self.ns as f64 || y >= self.nz as f64 {
            return 0.0;
        }
        let (i, j) = (x as usize, y as usize);
        let (fx, fy) = (x - i as f64, y - j as f64);
        let at = |a: usize, b: usize| if a < self.ns && b < self.nz { w[a * self.nz + b] } else { 0.0 };
        (1.0 - fx) * ((1.0 - fy) * at(i, j) + fy * at(i, j + 1)) + fx * ((1.0 - fy) * at(i + 1, j) + fy * at(i + 1, j + 1))
    }

    /// Fraction of `Σ W w²` carried by the outer `band` of nodes in either direction.
    pub fn boundary_fraction(&self, w: &[f64], band: usize) -> f64 {
        let total = self.integrate(w, |_, _, v| v * v);
        let (ns, nz) = (self.ns, self.nz);
        let mut outer = 0.0;
        for i in 0..ns {
            for j in 0..nz {
                if i + band >= ns || j + band >= nz {
                    let v = w[i * nz + j];
                    outer += self.weight(i, j) * v * v;
                }
            }
        }
        if total > 0.0 { outer / total } else { 0.0 }
    }

    /// `Σ W |w|^e`.
    pub fn power_sum(&self, w: &[f64], e: f64) -> f64 {
        self.integrate(w, |_, _, v| pos_pow(v.abs(), e))
    }
}

/// Exact direct solver for `A x = b` using the eigenvectors of the axial
/// operator and a tridiagonal solve in `s` per axial mode.
pub struct SeparableSolver {
    ns: usize,
    nz: usize,
    /// W_z-orthonormal axial eigenvectors, one per column.
    phi: DMatrix<f64>,
    mu: Vec<f64>,
    /// Diagonal and off-diagonal of the radial operator without the axial part.
    diag: Vec<f64>,
    off: Vec<f64>,
    ws: Vec<f64>,
}

impl SeparableSolver {
    pub fn new(mesh: &Mesh, c: f64, inv_t2: f64) -> SeparableSolver {
        let (ns, nz) = (mesh.ns, mesh.nz);
        let kz = 2.0 / mesh.hz;
        // Symmetrized axial operator W_z^{-1/2} K_z W_z^{-1/2}.
        let mut m = DMatrix::<f64>::zeros(nz, nz);
        for j in 0..nz {
            let deg = if j == 0 { kz } else { 2.0 * kz };
            m[(j, j)] = deg / mesh.wz[j];
            if j + 1 < nz {
                let v = -kz / sqrt(mesh.wz[j] * mesh.wz[j + 1]);
                m[(j, j + 1)] = v;
                m[(j + 1, j)] = v;
            }
        }
        let eig = SymmetricEigen::new(m);
        let mut phi = eig.eigenvectors;
        for j in 0..nz {
            let f = 1.0 / sqrt(mesh.wz[j]);
            for k in 0..nz {
                phi[(j, k)] *= f;
            }
        }
        let mu = eig.eigenvalues.iter().copied().collect();
        let mut diag = vec![0.0; ns];
        let mut off = vec![0.0; ns.saturating_sub(1)];
        for i in 0..ns {
            let s = mesh.s(i);
            diag[i] = mesh.ks[i] + if i > 0 { mesh.ks[i - 1] } else { 0.0 } + mesh.ws[i] * (c + s * s * inv_t2);
            if i + 1 < ns {
                off[i] = -mesh.ks[i];
            }
        }
        SeparableSolver { ns, nz, phi, mu, diag, off, ws: mesh.ws.clone() }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (ns, nz) = (self.ns, self.nz);
        let bm = DMatrix::from_row_slice(ns, nz, b);
        let mut c = bm * &self.phi;
        let mut cp = vec![0.0; ns];
        for k in 0..nz {
            let mu = self.mu[k];
            // Thomas algorithm on column k.
            let mut col = c.column_mut(k);
            let mut d = self.diag[0] + mu * self.ws[0];
            cp[0] = if ns > 1 { self.off[0] / d } else { 0.0 };
            col[0] /= d;
            for i in 1..ns {
                d = self.diag[i] + mu * self.ws[i] - self.off[i - 1] * cp[i - 1];
                if i + 1 < ns {
                    cp[i] = self.off[i] / d;
                }
                col[i] = (col[i] - self.off[i - 1] * col[i - 1]) / d;
            }
            for i in (0..ns - 1).rev() {
                let next = col[i + 1];
                col[i] -= cp[i] * next;
            }
        }
        let x = c * self.phi.transpose();
        let mut out = Vec::with_capacity(ns * nz);
        for i in 0..ns {
            for j in 0..nz {
                out.push(x[(i, j)]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{exp, pow};

    #[test]
    fn solver_inverts_operator() {
        let mesh = Mesh::new(33, 6.0, 5.0).unwrap();
        let b: Vec<f64> = (0..mesh.len()).map(|k| libm::sin(k as f64 * 0.37) + 0.3).collect();
        for &(c, inv_t2) in &[(1.0, 0.0), (1.0, 0.25), (0.0, 1.0)] {
            let solver = SeparableSolver::new(&mesh, c, inv_t2);
            let x = solver.solve(&b);
            let back = mesh.apply(&x, c, inv_t2);
            let err = back.iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            assert!(err < 1e-11, "c = {c}, 1/t² = {inv_t2}: {err}");
        }
    }

    #[test]
    fn apply_matches_quadratic_form() {
        let mesh = Mesh::new(21, 4.0, 4.0).unwrap();
        let w = mesh.sample(|s, z| exp(-(s * s + 0.5 * z * z)));
        let aw = mesh.apply(&w, 1.0, 0.3);
        let form: f64 = aw.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((form - mesh.energy_norm(&w, 1.0, 0.3)).abs() < 1e-12 * form);
    }

    fn gaussian_errors(nodes: usize) -> (f64, f64, f64) {
        // ∫ e^{-2r²} = (π/2)^{3/2}, ∫ |∇e^{-r²}|² = 3 (π/2)^{3/2},
        // ∫ s² e^{-2r²} = (π/2)^{3/2} / 2.
        let mesh = Mesh::new(nodes, 7.0, 7.0).unwrap();
        let w = mesh.sample(|s, z| exp(-(s * s + z * z)));
        let base = pow(PI / 2.0, 1.5);
        let mass = mesh.integrate(&w, |_, _, v| v * v);
        let pot = mesh.integrate(&w, |s, _, v| s * s * v * v);
        let grad = mesh.dirichlet_form(&w);
        ((mass - base).abs() / base, (grad - 3.0 * base).abs() / (3.0 * base), (pot - 0.5 * base).abs() / (0.5 * base))
    }

    #[test]
    fn quadratures_are_second_order() {
        let coarse = gaussian_errors(57);
        let fine = gaussian_errors(113);
        assert!(fine.1 < 1e-3 && fine.0 < 1e-3 && fine.2 < 1e-3, "{fine:?}");
        // Halving h divides the gradient error by about four.
        let ratio = coarse.1 / fine.1;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn interpolation_reproduces_nodes_and_bilinear_data() {
        let mesh = Mesh::new(17, 4.0, 2.0).unwrap();
        let w = mesh.sample(|s, z| 1.0 + 2.0 * s + 3.0 * z);
        assert!((mesh.interpolate(&w, 1.25, 0.625) - (1.0 + 2.5 + 1.875)).abs() < 1e-12);
        assert_eq!(mesh.interpolate(&w, 10.0, 0.0), 0.0);
        assert!((mesh.interpolate(&w, 0.5, -0.25) - mesh.interpolate(&w, 0.5, 0.25)).abs() < 1e-15);
    }
}
