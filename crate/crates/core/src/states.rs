//! Multipartite pure states and density operators.
//!
//! Index convention used everywhere in this crate: amplitudes and matrix
//! rows/columns are row-major with party 0 (Alice) slowest-varying. A joint
//! index decomposes as `I = sum_p i_p * stride_p` with
//! `stride_p = prod(dims[p+1..])`.

use crate::error::{Error, Result};
use crate::numerics::{self, herm_eig, CMatrix, Cplx, Tolerance};

/// Guard on the joint dimension of any state.
pub const DIM_GUARD: usize = 1 << 20;

/// Ordered list of party dimensions (party 0 = Alice, 1 = Bob, ...).
///
/// Dimension 1 is allowed as an ancilla placeholder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyDims {
    dims: Vec<usize>,
}

impl PartyDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::BadDims("party list must be nonempty".into()));
        }
        if dims.contains(&0) {
            return Err(Error::BadDims("party dimension must be >= 1".into()));
        }
        let mut total = 1usize;
        for &d in &dims {
            total = total
                .checked_mul(d)
                .ok_or(Error::DimOverflow(usize::MAX))?;
            if total > DIM_GUARD {
                return Err(Error::DimOverflow(total));
            }
        }
        Ok(PartyDims { dims })
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dim(&self, party: usize) -> usize {
        self.dims[party]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Stride of each party in the joint index.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut s = vec![1usize; n];
        for p in (0..n.saturating_sub(1)).rev() {
            s[p] = s[p + 1] * self.dims[p + 1];
        }
        s
    }

    /// Joint-index contributions of a party subset: entry `k` is the offset
    /// of the `k`-th assignment of the subset's digits (subset parties
    /// enumerated in ascending party order, row-major).
    pub fn subset_offsets(&self, subset: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let sub_dims: Vec<usize> = subset.iter().map(|&p| self.dims[p]).collect();
        let total: usize = sub_dims.iter().product();
        let mut offsets = vec![0usize; total];
        for (idx, off) in offsets.iter_mut().enumerate() {
            let mut rem = idx;
            let mut acc = 0usize;
            for k in (0..subset.len()).rev() {
                let d = sub_dims[k];
                acc += (rem % d) * strides[subset[k]];
                rem /= d;
            }
            *off = acc;
        }
        offsets
    }

    fn check_subset(&self, subset: &[usize], proper: bool) -> Result<Vec<usize>> {
        let n = self.count();
        let mut s: Vec<usize> = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.len() != subset.len() {
            return Err(Error::BadSubset("duplicate party index".into()));
        }
        if s.is_empty() {
            return Err(Error::BadSubset("subset must be nonempty".into()));
        }
        if s.iter().any(|&p| p >= n) {
            return Err(Error::BadSubset(format!("party index out of range (n = {n})")));
        }
        if proper && s.len() == n {
            return Err(Error::BadSubset("subset must be proper".into()));
        }
        Ok(s)
    }

    pub fn complement(&self, subset: &[usize]) -> Vec<usize> {
        (0..self.count()).filter(|p| !subset.contains(p)).collect()
    }
}

/// A bipartition of the parties into two nonempty groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Bipartition {
    /// Builds the cut `left | complement` over `n_parties` parties.
    pub fn new(left: &[usize], n_parties: usize) -> Result<Self> {
        let mut l: Vec<usize> = left.to_vec();
        l.sort_unstable();
        l.dedup();
        if l.len() != left.len() {
            return Err(Error::BadPartition("duplicate party index".into()));
        }
        if l.is_empty() {
            return Err(Error::BadPartition("left side must be nonempty".into()));
        }
        if l.iter().any(|&p| p >= n_parties) {
            return Err(Error::BadPartition(format!(
                "party index out of range (n = {n_parties})"
            )));
        }
        let right: Vec<usize> = (0..n_parties).filter(|p| !l.contains(p)).collect();
        if right.is_empty() {
            return Err(Error::BadPartition("right side must be nonempty".into()));
        }
        Ok(Bipartition { left: l, right })
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    /// Party letters, e.g. "A|BC".
    pub fn label(&self) -> String {
        let letters = |ps: &[usize]| -> String {
            ps.iter().map(|&p| (b'A' + p as u8) as char).collect()
        };
        format!("{}|{}", letters(&self.left), letters(&self.right))
    }
}

/// All bipartitions of `n` parties up to complement symmetry (the left side
/// always contains party 0).
pub fn canonical_bipartitions(n: usize) -> Vec<Bipartition> {
    let mut cuts = Vec::new();
    if n < 2 {
        return cuts;
    }
    let rest = n - 1;
    for mask in 0..(1usize << rest) {
        let mut left = vec![0usize];
        for b in 0..rest {
            if mask & (1 << b) != 0 {
                left.push(b + 1);
            }
        }
        if left.len() == n {
            continue;
        }
        cuts.push(Bipartition::new(&left, n).expect("canonical cut is valid"));
    }
    cuts
}

/// Normalized pure state over an ordered list of parties.
#[derive(Clone, Debug)]
pub struct PureState {
    parties: PartyDims,
    amps: Vec<Cplx>,
}

impl PureState {
    /// Validating constructor: amplitudes must be finite and normalized
    /// within the default tolerance.
    pub fn new(parties: PartyDims, amps: Vec<Cplx>) -> Result<Self> {
        Self::with_tol(parties, amps, &Tolerance::default())
    }

    pub fn with_tol(parties: PartyDims, amps: Vec<Cplx>, tol: &Tolerance) -> Result<Self> {
        if amps.len() != parties.total() {
            return Err(Error::DimMismatch(format!(
                "amplitude count {} does not match joint dimension {}",
                amps.len(),
                parties.total()
            )));
        }
        if !amps.iter().all(|z| z.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = numerics::norm(&amps);
        if (n - 1.0).abs() > tol.eps {
            return Err(Error::NotNormalized((n - 1.0).abs()));
        }
        Ok(PureState { parties, amps })
    }

    /// Normalizes the amplitudes and constructs the state.
    pub fn normalized(parties: PartyDims, amps: Vec<Cplx>) -> Result<Self> {
        if amps.len() != parties.total() {
            return Err(Error::DimMismatch(format!(
                "amplitude count {} does not match joint dimension {}",
                amps.len(),
                parties.total()
            )));
        }
        if !amps.iter().all(|z| z.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = numerics::norm(&amps);
        if n == 0.0 {
            return Err(Error::NotNormalized(1.0));
        }
        Ok(PureState { parties, amps: amps.iter().map(|z| z.scale(1.0 / n)).collect() })
    }

    pub(crate) fn new_unchecked(parties: PartyDims, amps: Vec<Cplx>) -> Self {
        debug_assert_eq!(amps.len(), parties.total());
        PureState { parties, amps }
    }

    pub fn parties(&self) -> &PartyDims {
        &self.parties
    }

    pub fn amps(&self) -> &[Cplx] {
        &self.amps
    }

    pub fn overlap(&self, other: &PureState) -> Cplx {
        numerics::dot(&self.amps, &other.amps)
    }

    /// Norm distance to `other` minimized over a global phase, computed
    /// entrywise after aligning the phases (the overlap-based formula
    /// `sqrt(2 - 2|<a|b>|)` cannot resolve distances below sqrt(machine
    /// epsilon)).
    pub fn distance_up_to_phase(&self, other: &PureState) -> f64 {
        let ph = numerics::dot(other.amps(), self.amps()).phase();
        let mut acc = 0.0;
        for (a, b) in self.amps().iter().zip(other.amps().iter()) {
            acc += (*a - *b * ph).abs_sq();
        }
        acc.sqrt()
    }

    /// Density operator |psi><psi|.
    pub fn to_density(&self) -> DensityMatrix {
        let d = self.amps.len();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, self.amps[i] * self.amps[j].conj());
            }
        }
        DensityMatrix::new_unchecked(self.parties.clone(), m)
    }

    /// Reduced density matrix after tracing out the `drop` parties,
    /// contracted directly from the amplitudes.
    pub fn partial_trace(&self, drop: &[usize]) -> Result<DensityMatrix> {
        let drop = self.parties.check_subset(drop, true)?;
        let keep = self.parties.complement(&drop);
        let keep_off = self.parties.subset_offsets(&keep);
        let drop_off = self.parties.subset_offsets(&drop);
        let kd = keep_off.len();
        let mut mat = CMatrix::zeros(kd, kd);
        for (a, &oa) in keep_off.iter().enumerate() {
            for (b, &ob) in keep_off.iter().enumerate().skip(a) {
                let mut acc = Cplx::ZERO;
                for &oe in &drop_off {
                    acc += self.amps[oa + oe] * self.amps[ob + oe].conj();
                }
                mat.set(a, b, acc);
                if a != b {
                    mat.set(b, a, acc.conj());
                }
            }
        }
        let keep_dims: Vec<usize> = keep.iter().map(|&p| self.parties.dim(p)).collect();
        Ok(DensityMatrix::new_unchecked(PartyDims::new(keep_dims)?, mat))
    }

    /// Applies a unitary (or a column-isometry, enlarging the party) locally.
    pub fn apply_local(&self, party: usize, u: &CMatrix) -> Result<PureState> {
        let n = self.parties.count();
        if party >= n {
            return Err(Error::BadSubset(format!("party index out of range (n = {n})")));
        }
        let d = self.parties.dim(party);
        if u.cols() != d {
            return Err(Error::DimMismatch(format!(
                "operator acts on dimension {} but party has dimension {d}",
                u.cols()
            )));
        }
        if !u.is_finite() {
            return Err(Error::NonFinite);
        }
        if u.rows() < u.cols() {
            return Err(Error::NotIsometry(f64::INFINITY));
        }
        let gram_dev = u
            .adjoint()
            .mul(u)
            .sub(&CMatrix::identity(d))
            .max_abs();
        if gram_dev > Tolerance::default().eps {
            return Err(Error::NotIsometry(gram_dev));
        }

        let d_new = u.rows();
        let mut new_dims = self.parties.dims().to_vec();
        new_dims[party] = d_new;
        let new_parties = PartyDims::new(new_dims)?;

        let strides = self.parties.strides();
        let stride = strides[party];
        let suffix = stride;
        let prefix = self.amps.len() / (d * stride);
        let mut out = vec![Cplx::ZERO; new_parties.total()];
        for pre in 0..prefix {
            for suf in 0..suffix {
                for ap in 0..d_new {
                    let mut acc = Cplx::ZERO;
                    for a in 0..d {
                        let idx = pre * d * stride + a * stride + suf;
                        acc += u.get(ap, a) * self.amps[idx];
                    }
                    out[pre * d_new * stride + ap * stride + suf] = acc;
                }
            }
        }
        Ok(PureState::new_unchecked(new_parties, out))
    }

    /// Matricization of the amplitudes across a bipartition: rows indexed by
    /// the left group, columns by the right group.
    pub fn matricize(&self, cut: &Bipartition) -> CMatrix {
        let left_off = self.parties.subset_offsets(cut.left());
        let right_off = self.parties.subset_offsets(cut.right());
        let mut m = CMatrix::zeros(left_off.len(), right_off.len());
        for (l, &ol) in left_off.iter().enumerate() {
            for (r, &or) in right_off.iter().enumerate() {
                m.set(l, r, self.amps[ol + or]);
            }
        }
        m
    }

    /// Von Neumann entropy (bits) of the reduced state on `cut.left()`.
    pub fn partial_entropy(&self, cut: &Bipartition) -> Result<f64> {
        let reduced = self.partial_trace(cut.right())?;
        Ok(reduced.von_neumann_entropy())
    }
}

/// Hermitian, PSD, unit-trace operator tagged with party structure.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    parties: PartyDims,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor: Hermitian within eps, unit trace within eps,
    /// and smallest eigenvalue >= -eps.
    pub fn new(parties: PartyDims, mat: CMatrix) -> Result<Self> {
        Self::with_tol(parties, mat, &Tolerance::default())
    }

    pub fn with_tol(parties: PartyDims, mat: CMatrix, tol: &Tolerance) -> Result<Self> {
        let d = parties.total();
        if mat.rows() != d || mat.cols() != d {
            return Err(Error::DimMismatch(format!(
                "matrix is {}x{} but joint dimension is {d}",
                mat.rows(),
                mat.cols()
            )));
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        let herm = mat.hermiticity_residual();
        if herm > tol.eps * mat.frob_norm().max(1.0) {
            return Err(Error::NotHermitian { residual: herm });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol.eps || tr.im.abs() > tol.eps {
            return Err(Error::BadTrace(tr.re));
        }
        let eig = numerics::herm_eig_tol(&mat, tol)?;
        if eig.values[0] < -tol.eps {
            return Err(Error::NotPositive(eig.values[0]));
        }
        Ok(DensityMatrix { parties, mat })
    }

    pub(crate) fn new_unchecked(parties: PartyDims, mat: CMatrix) -> Self {
        debug_assert_eq!(mat.rows(), parties.total());
        debug_assert_eq!(mat.cols(), parties.total());
        DensityMatrix { parties, mat }
    }

    pub fn parties(&self) -> &PartyDims {
        &self.parties
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Traces out the `drop` parties.
    pub fn partial_trace(&self, drop: &[usize]) -> Result<DensityMatrix> {
        let drop = self.parties.check_subset(drop, true)?;
        let keep = self.parties.complement(&drop);
        let keep_off = self.parties.subset_offsets(&keep);
        let drop_off = self.parties.subset_offsets(&drop);
        let kd = keep_off.len();
        let mut mat = CMatrix::zeros(kd, kd);
        for (a, &oa) in keep_off.iter().enumerate() {
            for (b, &ob) in keep_off.iter().enumerate() {
                let mut acc = Cplx::ZERO;
                for &oe in &drop_off {
                    acc += self.mat.get(oa + oe, ob + oe);
                }
                mat.set(a, b, acc);
            }
        }
        let keep_dims: Vec<usize> = keep.iter().map(|&p| self.parties.dim(p)).collect();
        Ok(DensityMatrix::new_unchecked(PartyDims::new(keep_dims)?, mat))
    }

    /// Partial transpose over `subset`: row and column digits of the subset
    /// parties are exchanged. The result is Hermitian but may fail to be PSD,
    /// so a bare matrix is returned. Applying the map twice is the identity,
    /// bit for bit.
    pub fn partial_transpose(&self, subset: &[usize]) -> Result<CMatrix> {
        let subset = self.parties.check_subset(subset, true)?;
        let keep = self.parties.complement(&subset);
        let keep_off = self.parties.subset_offsets(&keep);
        let sub_off = self.parties.subset_offsets(&subset);
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for &rk in &keep_off {
            for &ck in &keep_off {
                for &rs in &sub_off {
                    for &cs in &sub_off {
                        out.set(rk + rs, ck + cs, self.mat.get(rk + cs, ck + rs));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Overlap `<psi| rho |psi>`.
    pub fn fidelity(&self, psi: &PureState) -> Result<f64> {
        if psi.parties() != &self.parties {
            return Err(Error::DimMismatch(
                "state and operator have different party structures".into(),
            ));
        }
        let v = self.mat.mat_vec(psi.amps());
        let f = numerics::dot(psi.amps(), &v);
        debug_assert!(f.im.abs() <= 1e-12 * self.mat.frob_norm().max(1.0));
        Ok(f.re.clamp(0.0, 1.0 + 1e-12).min(1.0))
    }

    /// Von Neumann entropy in bits. Eigenvalues at or below eps are dropped;
    /// small negatives in [-eps, 0) clamp to zero.
    pub fn von_neumann_entropy(&self) -> f64 {
        let eps = Tolerance::default().eps;
        let mut s = 0.0;
        for l in self.eigenvalues() {
            if l > eps {
                s -= l * l.log2();
            }
        }
        s
    }

    /// Eigenvalues ascending (convenience over `herm_eig`).
    pub fn eigenvalues(&self) -> Vec<f64> {
        // Hermiticity was validated at construction, possibly against a
        // looser caller-supplied tolerance than the solver default.
        let relaxed = Tolerance::new(9.0e-4, 1e-10).expect("in range");
        numerics::herm_eig_tol(&self.mat, &relaxed)
            .expect("density matrix is Hermitian")
            .values
    }

    /// Views the operator as bipartite across `cut`, permuting parties so
    /// the left group forms one party and the right group the other.
    pub fn regroup_bipartite(&self, cut: &Bipartition) -> Result<DensityMatrix> {
        if cut.left().len() + cut.right().len() != self.parties.count() {
            return Err(Error::BadPartition(
                "cut does not cover the party list".into(),
            ));
        }
        let left_off = self.parties.subset_offsets(cut.left());
        let right_off = self.parties.subset_offsets(cut.right());
        let dl = left_off.len();
        let dr = right_off.len();
        let mut mat = CMatrix::zeros(dl * dr, dl * dr);
        for (l, &ol) in left_off.iter().enumerate() {
            for (r, &or) in right_off.iter().enumerate() {
                for (l2, &ol2) in left_off.iter().enumerate() {
                    for (r2, &or2) in right_off.iter().enumerate() {
                        mat.set(l * dr + r, l2 * dr + r2, self.mat.get(ol + or, ol2 + or2));
                    }
                }
            }
        }
        Ok(DensityMatrix::new_unchecked(PartyDims::new(vec![dl, dr])?, mat))
    }
}

/// Tensor product of pure states; output parties are the concatenation.
pub fn tensor_product(states: &[PureState]) -> Result<PureState> {
    if states.is_empty() {
        return Err(Error::BadDims("tensor product of nothing".into()));
    }
    let mut dims = Vec::new();
    for s in states {
        dims.extend_from_slice(s.parties().dims());
    }
    let parties = PartyDims::new(dims)?;
    let mut amps = vec![Cplx::ONE];
    for s in states {
        let mut next = Vec::with_capacity(amps.len() * s.amps().len());
        for a in &amps {
            for b in s.amps() {
                next.push(*a * *b);
            }
        }
        amps = next;
    }
    Ok(PureState::new_unchecked(parties, amps))
}

/// Builds a single-party state from a bare vector.
pub fn single_party(amps: Vec<Cplx>) -> Result<PureState> {
    let d = amps.len();
    PureState::new(PartyDims::new(vec![d])?, amps)
}
