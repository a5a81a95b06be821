//! Dense kernels on upper-triangular Cholesky factors.
//!
//! A [`TriangularFactor`] `R` stands for the SPD matrix `RᵀR`. Every
//! operation here costs `O(p²)` for a `p`-dimensional factor, which is what
//! lets the covariance-matching sampler draw each crumb and proposal without
//! ever forming or factorizing a dense precision matrix.

use crate::error::{Error, Result};

/// Upper-triangular matrix with a strictly positive diagonal, stored
/// row-major as a full `p × p` array.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularFactor {
    dim: usize,
    entries: Vec<f64>,
}

impl TriangularFactor {
    /// Validates `entries` (row-major, `dim × dim`) as an upper-triangular
    /// factor with positive diagonal.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("factor dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::input(format!(
                "expected {} entries for a {dim}x{dim} factor, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("factor entries must be finite"));
        }
        for i in 0..dim {
            if entries[i * dim + i] <= 0.0 {
                return Err(Error::input(format!("diagonal entry {i} is not positive")));
            }
            for j in 0..i {
                if entries[i * dim + j] != 0.0 {
                    return Err(Error::input(format!(
                        "entry ({i}, {j}) below the diagonal is nonzero"
                    )));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// `scale · I`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 || !(scale.is_finite() && scale > 0.0) {
            return Err(Error::input(format!(
                "scaled identity needs dim > 0 and a positive finite scale, got dim={dim}, scale={scale}"
            )));
        }
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = scale;
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    /// Row-major entries, including the zero lower triangle.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `factor · R`. The factor must be positive to keep the diagonal valid.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::input(format!(
                "scale factor {factor} must be positive"
            )));
        }
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        })
    }

    /// `R v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let p = self.dim;
        (0..p)
            .map(|i| {
                let row = &self.entries[i * p..(i + 1) * p];
                (i..p).map(|j| row[j] * v[j]).sum()
            })
            .collect()
    }

    /// `Rᵀ v`.
    pub fn mul_transpose_vec(&self, v: &[f64]) -> Vec<f64> {
        let p = self.dim;
        let mut out = vec![0.0; p];
        for i in 0..p {
            let vi = v[i];
            let row = &self.entries[i * p..(i + 1) * p];
            for j in i..p {
                out[j] += row[j] * vi;
            }
        }
        out
    }

    /// Dense `RᵀR`, row-major. `O(p³)`; meant for diagnostics and tests.
    pub fn gram(&self) -> Vec<f64> {
        let p = self.dim;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                let upto = i.min(j);
                out[i * p + j] = (0..=upto).map(|k| self.get(k, i) * self.get(k, j)).sum();
            }
        }
        out
    }

    /// `‖R v‖²`, i.e. `vᵀ(RᵀR)v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().map(|x| x * x).sum()
    }

    fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::input(format!(
                "{what} has length {}, expected {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::input(format!("{what} has non-finite entries")));
        }
        Ok(())
    }
}

/// Cholesky factor of `RᵀR + vvᵀ`, by the LINPACK `dchud` sequence of Givens
/// rotations that folds the row `vᵀ` into `R`.
pub fn chud(r: &TriangularFactor, v: &[f64]) -> Result<TriangularFactor> {
    r.check_len(v, "update vector")?;
    let mut out = r.clone();
    chud_in_place(&mut out, v);
    Ok(out)
}

pub(crate) fn chud_in_place(r: &mut TriangularFactor, v: &[f64]) {
    let p = r.dim;
    let mut x = v.to_vec();
    let e = &mut r.entries;
    for j in 0..p {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let rjj = e[j * p + j];
        // hypot keeps the new diagonal positive and avoids overflow.
        let rho = rjj.hypot(xj);
        let c = rjj / rho;
        let s = xj / rho;
        e[j * p + j] = rho;
        for k in (j + 1)..p {
            let rjk = e[j * p + k];
            let xk = x[k];
            e[j * p + k] = c * rjk + s * xk;
            x[k] = c * xk - s * rjk;
        }
    }
}

/// Solves `R x = b` by back substitution.
pub fn solve_upper(r: &TriangularFactor, b: &[f64]) -> Result<Vec<f64>> {
    r.check_len(b, "right-hand side")?;
    Ok(solve_upper_unchecked(r, b))
}

pub(crate) fn solve_upper_unchecked(r: &TriangularFactor, b: &[f64]) -> Vec<f64> {
    let p = r.dim;
    let mut x = b.to_vec();
    for i in (0..p).rev() {
        let row = &r.entries[i * p..(i + 1) * p];
        let mut acc = x[i];
        for j in (i + 1)..p {
            acc -= row[j] * x[j];
        }
        x[i] = acc / row[i];
    }
    x
}

/// Solves `Rᵀ x = b` by forward substitution.
pub fn solve_upper_transpose(r: &TriangularFactor, b: &[f64]) -> Result<Vec<f64>> {
    r.check_len(b, "right-hand side")?;
    Ok(solve_upper_transpose_unchecked(r, b))
}

pub(crate) fn solve_upper_transpose_unchecked(r: &TriangularFactor, b: &[f64]) -> Vec<f64> {
    let p = r.dim;
    let mut x = b.to_vec();
    // Column-oriented: once x[i] is final, subtract its contribution from
    // every later equation (row i of R is column i of Rᵀ).
    for i in 0..p {
        let row = &r.entries[i * p..(i + 1) * p];
        x[i] /= row[i];
        let xi = x[i];
        for j in (i + 1)..p {
            x[j] -= row[j] * xi;
        }
    }
    x
}

/// Matrix of orthonormal columns in `R^p`, at most `p − 1` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalColumns {
    dim: usize,
    /// Column-major: column `k` occupies `cols[k*dim..(k+1)*dim]`.
    cols: Vec<f64>,
}

impl OrthonormalColumns {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            cols: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ncols(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.cols.len() / self.dim
        }
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.cols[k * self.dim..(k + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.cols.chunks_exact(self.dim.max(1))
    }

    /// True when another column may be appended without exhausting `R^p`.
    pub fn can_grow(&self) -> bool {
        self.ncols() + 1 < self.dim
    }
}

/// `v − JJᵀv`; `v` itself when `J` has no columns.
pub fn project_orthogonal(j: &OrthonormalColumns, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != j.dim {
        return Err(Error::input(format!(
            "vector has length {}, expected {}",
            v.len(),
            j.dim
        )));
    }
    Ok(project_orthogonal_unchecked(j, v))
}

pub(crate) fn project_orthogonal_unchecked(j: &OrthonormalColumns, v: &[f64]) -> Vec<f64> {
    let mut r = v.to_vec();
    // Modified Gram-Schmidt: equal to v − JJᵀv for orthonormal J, with
    // better rounding behaviour.
    for q in j.columns() {
        let coef: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= coef * qi;
        }
    }
    r
}

/// `[J  g*/‖g*‖]`. The caller is expected to have projected `g_star` out of
/// the span of `J` already.
pub fn append_orthonormal_column(
    j: &OrthonormalColumns,
    g_star: &[f64],
) -> Result<OrthonormalColumns> {
    if g_star.len() != j.dim {
        return Err(Error::input(format!(
            "direction has length {}, expected {}",
            g_star.len(),
            j.dim
        )));
    }
    if !j.can_grow() {
        return Err(Error::input(format!(
            "cannot append: already {} columns in dimension {}",
            j.ncols(),
            j.dim
        )));
    }
    let norm = g_star.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm >= 1e-12) {
        return Err(Error::DegenerateDirection { norm });
    }
    let mut out = j.clone();
    out.cols.extend(g_star.iter().map(|x| x / norm));
    Ok(out)
}
