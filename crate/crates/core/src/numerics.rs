//! Self-contained dense complex linear algebra.
//!
//! Provides the Hermitian eigendecomposition and singular value decomposition
//! everything else is built on, plus the global tolerance policy. Both
//! factorizations use Jacobi rotations: cyclic Jacobi for `herm_eig` and
//! one-sided Jacobi for `svd`. Jacobi is quadratically convergent, needs no
//! pivoting or balancing, and delivers reconstruction residuals near machine
//! precision for the dimensions this crate targets (<= 256).
//!
//! Contracts enforced by the test suite:
//! * `herm_eig`: `H = V diag(l) V^dagger` within `1e-10 * max(1, ||H||)`,
//!   `V^dagger V = I` within `1e-12 * dim`, eigenvalues ascending.
//! * `svd`: `M = U diag(s) V^dagger` within `1e-10 * max(1, ||M||)`,
//!   orthonormal columns within `1e-12 * dim`, singular values descending.
//!
//! Output vectors follow a fixed phase convention (the first component of
//! largest modulus is made real and non-negative) so results are reproducible.

use crate::error::{Error, Result};

/// Complex double-precision scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl Cplx {
    pub const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };
    pub const ONE: Cplx = Cplx { re: 1.0, im: 0.0 };

    #[inline]
    pub fn new(re: f64, im: f64) -> Self {
        Cplx { re, im }
    }

    #[inline]
    pub fn from_re(re: f64) -> Self {
        Cplx { re, im: 0.0 }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Cplx { re: self.re, im: -self.im }
    }

    #[inline]
    pub fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.abs_sq().sqrt()
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Cplx { re: self.re * s, im: self.im * s }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// Unit-modulus phase factor of `self`, or 1 when `self` is zero.
    pub fn phase(self) -> Cplx {
        let r = self.abs();
        if r == 0.0 {
            Cplx::ONE
        } else {
            self.scale(1.0 / r)
        }
    }
}

impl std::ops::Add for Cplx {
    type Output = Cplx;
    #[inline]
    fn add(self, rhs: Cplx) -> Cplx {
        Cplx::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl std::ops::Sub for Cplx {
    type Output = Cplx;
    #[inline]
    fn sub(self, rhs: Cplx) -> Cplx {
        Cplx::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl std::ops::Mul for Cplx {
    type Output = Cplx;
    #[inline]
    fn mul(self, rhs: Cplx) -> Cplx {
        Cplx::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl std::ops::Neg for Cplx {
    type Output = Cplx;
    #[inline]
    fn neg(self) -> Cplx {
        Cplx::new(-self.re, -self.im)
    }
}

impl std::ops::AddAssign for Cplx {
    #[inline]
    fn add_assign(&mut self, rhs: Cplx) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl std::ops::SubAssign for Cplx {
    #[inline]
    fn sub_assign(&mut self, rhs: Cplx) {
        self.re -= rhs.re;
        self.im -= rhs.im;
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Cplx>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Cplx::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Cplx::ONE);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Cplx>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "matrix data length {} does not equal rows*cols = {}",
                data.len(),
                rows * cols
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn entries(&self) -> &[Cplx] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + a * rhs.get(k, j));
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| *a - *b)
            .collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        let data = self.data.iter().map(|z| z.scale(s)).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> Cplx {
        let mut t = Cplx::ZERO;
        for i in 0..self.rows.min(self.cols) {
            t += self.get(i, i);
        }
        t
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.abs_sq()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.abs()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = self.get(i, j) - self.get(j, i).conj();
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    pub fn mat_vec(&self, x: &[Cplx]) -> Vec<Cplx> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![Cplx::ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = Cplx::ZERO;
            for j in 0..self.cols {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn col(&self, j: usize) -> Vec<Cplx> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[Cplx]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    pub fn from_cols(rows: usize, cols: &[Vec<Cplx>]) -> CMatrix {
        let mut m = CMatrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_col(j, c);
        }
        m
    }
}

/// Global tolerance policy: `eps` governs equality/orthogonality checks,
/// `reconstruction_eps` governs factorization residual contracts.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub eps: f64,
    pub reconstruction_eps: f64,
}

impl Tolerance {
    pub fn new(eps: f64, reconstruction_eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1e-3) {
            return Err(Error::BadTolerance(eps));
        }
        Ok(Tolerance { eps, reconstruction_eps })
    }

    pub fn with_eps(eps: f64) -> Result<Self> {
        Tolerance::new(eps, 1e-10)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: 1e-9, reconstruction_eps: 1e-10 }
    }
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

/// Inner product `<a|b>`, conjugating the first argument.
pub fn dot(a: &[Cplx], b: &[Cplx]) -> Cplx {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Cplx::ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * *y;
    }
    acc
}

pub fn norm(a: &[Cplx]) -> f64 {
    a.iter().map(|z| z.abs_sq()).sum::<f64>().sqrt()
}

pub fn scale_vec(a: &[Cplx], s: Cplx) -> Vec<Cplx> {
    a.iter().map(|z| *z * s).collect()
}

pub fn normalize(a: &[Cplx]) -> Vec<Cplx> {
    let n = norm(a);
    if n == 0.0 {
        a.to_vec()
    } else {
        a.iter().map(|z| z.scale(1.0 / n)).collect()
    }
}

/// Extends a set of orthonormal vectors to an orthonormal basis of the
/// `dim`-dimensional space by Gram-Schmidt over the standard basis.
pub fn orthonormal_completion(existing: &[Vec<Cplx>], dim: usize) -> Vec<Vec<Cplx>> {
    let mut all: Vec<Vec<Cplx>> = existing.to_vec();
    let mut added = Vec::new();
    while all.len() < dim {
        // Orthogonalize every standard basis vector and keep the one with
        // the largest remainder; it has norm at least sqrt((dim-k)/dim).
        let mut best: Option<(f64, Vec<Cplx>)> = None;
        for basis in 0..dim {
            let mut w = vec![Cplx::ZERO; dim];
            w[basis] = Cplx::ONE;
            for other in &all {
                let ov = dot(other, &w);
                for (wi, oi) in w.iter_mut().zip(other.iter()) {
                    *wi -= *oi * ov;
                }
            }
            let nw = norm(&w);
            if best.as_ref().is_none_or(|(bn, _)| nw > *bn) {
                best = Some((nw, w));
            }
        }
        let (nw, w) = best.expect("dim > 0");
        assert!(nw > 1e-6, "completion requires orthonormal input");
        let mut w = scale_vec(&w, Cplx::from_re(1.0 / nw));
        // Second orthogonalization pass keeps the set orthonormal to
        // machine precision even when the remainder was small.
        for other in &all {
            let ov = dot(other, &w);
            for (wi, oi) in w.iter_mut().zip(other.iter()) {
                *wi -= *oi * ov;
            }
        }
        let nw = norm(&w);
        let mut w = scale_vec(&w, Cplx::from_re(1.0 / nw));
        phase_normalize(&mut w);
        all.push(w.clone());
        added.push(w);
    }
    added
}

/// Multiplies the vector by a unit phase so that its first component of
/// largest modulus becomes real and non-negative.
pub fn phase_normalize(v: &mut [Cplx]) {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for (i, z) in v.iter().enumerate() {
        let a = z.abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if best_abs <= 0.0 {
        return;
    }
    let ph = v[best].phase().conj();
    for z in v.iter_mut() {
        *z = *z * ph;
    }
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Result of [`herm_eig`]: eigenvalues ascending, eigenvectors as the
/// columns of the unitary `vectors`.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input must be Hermitian within `eps * max(1, ||H||)` entrywise; it is
/// symmetrized before iterating. Eigenvalues come back ascending with ties
/// broken by first occurrence, eigenvectors carry the crate phase convention.
pub fn herm_eig(h: &CMatrix) -> Result<HermEig> {
    herm_eig_tol(h, &Tolerance::default())
}

pub fn herm_eig_tol(h: &CMatrix, tol: &Tolerance) -> Result<HermEig> {
    if h.rows() != h.cols() {
        return Err(Error::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = h.rows();
    let scale = h.frob_norm().max(1.0);
    let herm_res = h.hermiticity_residual();
    if herm_res > tol.eps * scale {
        return Err(Error::NotHermitian { residual: herm_res });
    }

    // Work on the symmetrized copy; diag is real by construction.
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = h.get(i, j) + h.get(j, i).conj();
            a.set(i, j, v.scale(0.5));
        }
    }
    let mut v = CMatrix::identity(n);

    if n > 1 {
        let frob = a.frob_norm().max(f64::MIN_POSITIVE);
        let stop = 1e-15 * frob;
        for _sweep in 0..100 {
            let mut rotated = false;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    let r = apq.abs();
                    if r <= stop {
                        continue;
                    }
                    rotated = true;
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let ph = apq.phase();
                    // tan of the rotation angle solving t^2 - 2*tau*t - 1 = 0,
                    // smaller-magnitude root for stability.
                    let tau = (app - aqq) / (2.0 * r);
                    let t = if tau >= 0.0 {
                        -1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    // Column update with J[p][p]=c, J[p][q]=s*ph, J[q][p]=-s*conj(ph), J[q][q]=c.
                    let cs_ph = ph.scale(s);
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, akp.scale(c) - akq * cs_ph.conj());
                        a.set(k, q, akp * cs_ph + akq.scale(c));
                    }
                    // Row update = conjugate transpose of the column update.
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, apk.scale(c) - aqk * cs_ph);
                        a.set(q, k, apk * cs_ph.conj() + aqk.scale(c));
                    }
                    // The 2x2 block is now diagonal up to rounding; set it exactly.
                    let new_pp = c * c * app + s * s * aqq - 2.0 * c * s * r;
                    let new_qq = s * s * app + c * c * aqq + 2.0 * c * s * r;
                    a.set(p, p, Cplx::from_re(new_pp));
                    a.set(q, q, Cplx::from_re(new_qq));
                    a.set(p, q, Cplx::ZERO);
                    a.set(q, p, Cplx::ZERO);

                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, vkp.scale(c) - vkq * cs_ph.conj());
                        v.set(k, q, vkp * cs_ph + vkq.scale(c));
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    // Ascending sort, stable in the original diagonal order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).re.partial_cmp(&a.get(j, j).re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.col(src);
        phase_normalize(&mut col);
        vectors.set_col(dst, &col);
    }
    Ok(HermEig { values, vectors })
}

/// Assigns a cluster id to every eigenvalue; consecutive eigenvalues whose
/// gap is below `1e-8 * scale` share a cluster, so callers can treat a
/// degenerate subspace rather than its individual vectors as canonical.
pub fn degeneracy_clusters(values: &[f64], scale: f64) -> Vec<usize> {
    let thr = 1e-8 * scale.max(f64::MIN_POSITIVE);
    let mut ids = Vec::with_capacity(values.len());
    let mut current = 0usize;
    for (i, v) in values.iter().enumerate() {
        if i > 0 && (v - values[i - 1]).abs() >= thr {
            current += 1;
        }
        ids.push(current);
    }
    ids
}

// ---------------------------------------------------------------------------
// Singular value decomposition (one-sided Jacobi)
// ---------------------------------------------------------------------------

/// Result of [`svd`]: `m = u diag(sigma) v^dagger` with `sigma` descending
/// and `u`, `v` having orthonormal columns.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if m.rows() < m.cols() {
        // Orthogonalize the shorter side: svd(M^dagger) = (V, sigma, U).
        let t = svd_tall(&m.adjoint())?;
        return Ok(Svd { u: t.v, sigma: t.sigma, v: t.u });
    }
    svd_tall(m)
}

/// One-sided Jacobi on a tall (rows >= cols) matrix: unitary rotations on the
/// right orthogonalize the columns; their norms are the singular values.
fn svd_tall(m: &CMatrix) -> Result<Svd> {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.clone();
    let mut v = CMatrix::identity(cols);

    if cols > 1 {
        for _sweep in 0..100 {
            let mut rotated = false;
            for p in 0..cols - 1 {
                for q in p + 1..cols {
                    let mut app = 0.0f64;
                    let mut aqq = 0.0f64;
                    let mut apq = Cplx::ZERO;
                    for i in 0..rows {
                        let x = a.get(i, p);
                        let y = a.get(i, q);
                        app += x.abs_sq();
                        aqq += y.abs_sq();
                        apq += x.conj() * y;
                    }
                    let r = apq.abs();
                    if r <= 1e-15 * (app * aqq).sqrt() || r == 0.0 {
                        continue;
                    }
                    rotated = true;
                    // Diagonalize the 2x2 Gram block [[app, apq], [apq*, aqq]].
                    let ph = apq.phase();
                    let tau = (app - aqq) / (2.0 * r);
                    let t = if tau >= 0.0 {
                        -1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let cs_ph = ph.scale(s);
                    for i in 0..rows {
                        let x = a.get(i, p);
                        let y = a.get(i, q);
                        a.set(i, p, x.scale(c) - y * cs_ph.conj());
                        a.set(i, q, x * cs_ph + y.scale(c));
                    }
                    for i in 0..cols {
                        let x = v.get(i, p);
                        let y = v.get(i, q);
                        v.set(i, p, x.scale(c) - y * cs_ph.conj());
                        v.set(i, q, x * cs_ph + y.scale(c));
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut sigma: Vec<f64> = (0..cols).map(|j| norm(&a.col(j))).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));

    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let zero_cut = sigma_max * 1e-15 * (rows.max(cols) as f64);

    let mut u = CMatrix::zeros(rows, cols);
    let mut vv = CMatrix::zeros(cols, cols);
    let mut u_cols: Vec<Vec<Cplx>> = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        let mut vcol = v.col(src);
        if s > zero_cut {
            let mut ucol = scale_vec(&a.col(src), Cplx::from_re(1.0 / s));
            // Fix u's phase; rotate v by the same factor so u s v^dagger is unchanged.
            let before = ucol.clone();
            phase_normalize(&mut ucol);
            let ph = if let Some(k) = before.iter().position(|z| z.abs() > 0.0) {
                (ucol[k] * before[k].conj()).phase()
            } else {
                Cplx::ONE
            };
            vcol = scale_vec(&vcol, ph);
            u.set_col(dst, &ucol);
            u_cols.push(ucol);
        } else {
            sigma[src] = 0.0;
            // Column is numerically zero; fill u later by completion.
            u_cols.push(Vec::new());
            u.set_col(dst, &vec![Cplx::ZERO; rows]);
        }
        vv.set_col(dst, &vcol);
    }

    // Complete zero-sigma columns of u to an orthonormal set.
    let missing = u_cols.iter().filter(|c| c.is_empty()).count();
    if missing > 0 {
        let present: Vec<Vec<Cplx>> =
            u_cols.iter().filter(|c| !c.is_empty()).cloned().collect();
        let mut fill = orthonormal_completion(&present, rows).into_iter();
        for dst in 0..cols {
            if u_cols[dst].is_empty() {
                let w = fill.next().expect("enough completion vectors for rows >= cols");
                u.set_col(dst, &w);
                u_cols[dst] = w;
            }
        }
    }

    let sigma_sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    Ok(Svd { u, sigma: sigma_sorted, v: vv })
}
