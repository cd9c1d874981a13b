//! Dense row-major matrix with the handful of operations the learners need.
//!
//! Problems in this crate are small (p below a few dozen, n in the tens of
//! thousands), so a plain `Vec<f64>` backing store and textbook O(p^3)
//! factorizations are entirely adequate and keep everything deterministic.

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == p), "ragged row lengths");
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            data.extend_from_slice(r);
        }
        Matrix { rows: n, cols: p, data }
    }

    /// n x 1 matrix from a flat column.
    pub fn from_column(col: &[f64]) -> Self {
        Matrix {
            rows: col.len(),
            cols: 1,
            data: col.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(r));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }

    pub fn col_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter().enumerate() {
                m[c] += v;
            }
        }
        let n = self.rows.max(1) as f64;
        for v in &mut m {
            *v /= n;
        }
        m
    }

    /// X v for a length-p vector.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| dot(self.row(r), v))
            .collect()
    }

    /// X^T v for a length-n vector.
    pub fn tmatvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let w = v[r];
            for (c, x) in self.row(r).iter().enumerate() {
                out[c] += w * x;
            }
        }
        out
    }

    /// X^T X as a dense p x p row-major buffer.
    pub fn gram(&self) -> Vec<f64> {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..p {
                let xi = row[i];
                if xi == 0.0 {
                    continue;
                }
                for j in i..p {
                    g[i * p + j] += xi * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                g[i * p + j] = g[j * p + i];
            }
        }
        g
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solution of a symmetric positive semi-definite system with pivot dropping.
#[derive(Debug, Clone)]
pub struct LdltSolution {
    pub x: Vec<f64>,
    /// Indices whose pivot collapsed; their solution entries are forced to 0.
    pub dropped: Vec<usize>,
}

/// Solve `A x = b` for symmetric positive semi-definite `A` (p x p row-major)
/// by an LDL^T factorization with Jacobi scaling.
///
/// The system is normalized to a unit diagonal first so the pivot-drop test
/// is dimensionless; coordinates with wildly different scales (bytes next
/// to one-hots, huge ridge penalties next to an unpenalized intercept)
/// factor as reliably as balanced ones. Exactly dependent coordinates
/// surface as collapsed pivots; they are excluded from the factorization
/// and reported in `dropped`, with `x` zero there. For a least-squares
/// normal system this still yields a valid minimizer. Returns `None` only
/// when every pivot collapses.
pub fn solve_ldlt(a: &[f64], b: &[f64], p: usize) -> Option<LdltSolution> {
    assert_eq!(a.len(), p * p);
    assert_eq!(b.len(), p);

    let mut scale = vec![0.0; p];
    let mut kept = vec![true; p];
    let mut dropped = Vec::new();
    for i in 0..p {
        let d = a[i * p + i];
        if d > 0.0 && d.is_finite() {
            scale[i] = d.sqrt();
        } else {
            kept[i] = false;
            dropped.push(i);
        }
    }
    if dropped.len() == p {
        return None;
    }

    // Scaled system has a unit diagonal, so the pivot tolerance is absolute.
    let tol = 1e-10;
    let at = |i: usize, j: usize| a[i * p + j] / (scale[i] * scale[j]);

    let mut l = vec![0.0; p * p];
    let mut d = vec![0.0; p];
    for j in 0..p {
        if !kept[j] {
            continue;
        }
        let mut dj = 1.0; // at(j, j)
        for k in 0..j {
            if kept[k] {
                dj -= l[j * p + k] * l[j * p + k] * d[k];
            }
        }
        if dj <= tol {
            kept[j] = false;
            dropped.push(j);
            continue;
        }
        d[j] = dj;
        for i in (j + 1)..p {
            if !kept[i] {
                continue;
            }
            let mut v = at(i, j);
            for k in 0..j {
                if kept[k] {
                    v -= l[i * p + k] * l[j * p + k] * d[k];
                }
            }
            l[i * p + j] = v / dj;
        }
    }
    if dropped.len() == p {
        return None;
    }
    dropped.sort_unstable();

    // Forward solve L z = b', then z / d, then L^T x' = z, then unscale.
    let mut x = vec![0.0; p];
    for i in 0..p {
        if !kept[i] {
            continue;
        }
        let mut v = b[i] / scale[i];
        for k in 0..i {
            if kept[k] {
                v -= l[i * p + k] * x[k];
            }
        }
        x[i] = v;
    }
    for i in 0..p {
        if kept[i] {
            x[i] /= d[i];
        }
    }
    for i in (0..p).rev() {
        if !kept[i] {
            x[i] = 0.0;
            continue;
        }
        let mut v = x[i];
        for k in (i + 1)..p {
            if kept[k] {
                v -= l[k * p + i] * x[k];
            }
        }
        x[i] = v;
    }
    for i in 0..p {
        if kept[i] {
            x[i] /= scale[i];
        }
    }
    Some(LdltSolution { x, dropped })
}
