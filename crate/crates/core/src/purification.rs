//! Purification, ensemble steering, ensemble hygiene and the layered normal
//! form with its explicit separability witness.
//!
//! A purification appends one party whose dimension equals the rank of the
//! mixed state. Steering maps any purification onto any target ensemble of
//! the same mixed state by an isometry on the purifying party alone
//! (Hughston-Jozsa-Wootters): if `psi = sum_k sqrt(l_k) |v_k>|w_k>` and the
//! target is `{p_i, e_i}`, the isometry has entries
//! `M[i][k] = sqrt(p_i / l_k) <v_k|e_i>` in the `w_k` basis.

use crate::error::{Error, Result};
use crate::numerics::{
    self, dot, herm_eig, norm, orthonormal_completion, CMatrix, Cplx, Tolerance,
};
use crate::proofcheck::{BranchKind, PairEntry};
use crate::schmidt::schmidt_decompose;
use crate::states::{Bipartition, DensityMatrix, PartyDims, PureState};

/// One product member of an ensemble: probability and one unit factor per
/// party.
#[derive(Clone, Debug)]
pub struct EnsembleMember {
    pub p: f64,
    pub factors: Vec<Vec<Cplx>>,
}

impl EnsembleMember {
    /// The full product vector on the joint space.
    pub fn product_vector(&self) -> Vec<Cplx> {
        let mut out = vec![Cplx::ONE];
        for f in &self.factors {
            let mut next = Vec::with_capacity(out.len() * f.len());
            for a in &out {
                for b in f {
                    next.push(*a * *b);
                }
            }
            out = next;
        }
        out
    }
}

/// Probabilistic mixture of product pure states.
#[derive(Clone, Debug)]
pub struct Ensemble {
    dims: Vec<usize>,
    members: Vec<EnsembleMember>,
}

impl Ensemble {
    /// Validates shapes, probabilities (nonnegative, summing to one within
    /// eps) and factor normalization; factors are renormalized exactly.
    pub fn new(dims: Vec<usize>, members: Vec<EnsembleMember>) -> Result<Self> {
        let tol = Tolerance::default();
        if dims.is_empty() {
            return Err(Error::BadDims("ensemble needs at least one party".into()));
        }
        if members.is_empty() {
            return Err(Error::Parse("ensemble needs at least one member".into()));
        }
        let mut total = 0.0;
        let mut cleaned = Vec::with_capacity(members.len());
        for m in members {
            if !m.p.is_finite() || m.p < -tol.eps {
                return Err(Error::Parse(format!("member probability {} invalid", m.p)));
            }
            if m.factors.len() != dims.len() {
                return Err(Error::DimMismatch(
                    "member factor count does not match party count".into(),
                ));
            }
            let mut factors = Vec::with_capacity(m.factors.len());
            for (f, &d) in m.factors.iter().zip(dims.iter()) {
                if f.len() != d {
                    return Err(Error::DimMismatch(
                        "factor length does not match party dimension".into(),
                    ));
                }
                if !f.iter().all(|z| z.is_finite()) {
                    return Err(Error::NonFinite);
                }
                let n = norm(f);
                if m.p > tol.eps {
                    if (n - 1.0).abs() > tol.eps {
                        return Err(Error::NotNormalized((n - 1.0).abs()));
                    }
                    factors.push(numerics::scale_vec(f, Cplx::from_re(1.0 / n)));
                } else {
                    factors.push(f.clone());
                }
            }
            total += m.p.max(0.0);
            cleaned.push(EnsembleMember { p: m.p.max(0.0), factors });
        }
        if (total - 1.0).abs() > tol.eps {
            return Err(Error::BadTrace(total));
        }
        Ok(Ensemble { dims, members: cleaned })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The mixed state `sum_i p_i |e_i><e_i|` the ensemble realizes.
    pub fn average_state(&self) -> Result<DensityMatrix> {
        let parties = PartyDims::new(self.dims.clone())?;
        let d = parties.total();
        let mut mat = CMatrix::zeros(d, d);
        for m in &self.members {
            if m.p <= 0.0 {
                continue;
            }
            let v = m.product_vector();
            for i in 0..d {
                for j in 0..d {
                    let cur = mat.get(i, j);
                    mat.set(i, j, cur + (v[i] * v[j].conj()).scale(m.p));
                }
            }
        }
        Ok(DensityMatrix::new_unchecked(parties, mat))
    }

    /// The ensemble's diagonal lift `sum_i sqrt(p_i) |i>|e_i>`: one extra
    /// leading party indexes the members.
    pub fn lift(&self) -> Result<PureState> {
        let m = self.members.len();
        let mut dims = vec![m];
        dims.extend_from_slice(&self.dims);
        let parties = PartyDims::new(dims)?;
        let joint: usize = self.dims.iter().product();
        let mut amps = vec![Cplx::ZERO; parties.total()];
        for (i, member) in self.members.iter().enumerate() {
            let v = member.product_vector();
            let w = member.p.max(0.0).sqrt();
            for (x, amp) in v.iter().enumerate() {
                amps[i * joint + x] = amp.scale(w);
            }
        }
        PureState::normalized(parties, amps)
    }
}

/// Drops negligible-probability members and merges members whose product
/// vectors are parallel, leaving a pairwise linearly independent list.
pub fn ensemble_reduce(e: &Ensemble) -> Ensemble {
    let eps = Tolerance::default().eps;
    // Overlap modulus above which two product vectors count as parallel.
    // Tight on purpose: a false merge destroys pairwise linear independence
    // arguments downstream.
    const PARALLEL: f64 = 1.0 - 1e-10;
    let mut kept: Vec<(EnsembleMember, Vec<Cplx>)> = Vec::new();
    for m in &e.members {
        if m.p <= eps {
            continue;
        }
        let v = m.product_vector();
        let mut merged = false;
        for (k, kv) in kept.iter_mut() {
            if dot(kv, &v).abs() >= PARALLEL {
                k.p += m.p;
                merged = true;
                break;
            }
        }
        if !merged {
            kept.push((m.clone(), v));
        }
    }
    Ensemble {
        dims: e.dims.clone(),
        members: kept.into_iter().map(|(m, _)| m).collect(),
    }
}

/// Purifies a mixed state by appending one party of dimension equal to the
/// rank; purifier index `k` pairs with the `k`-th largest eigenvalue.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    let tol = Tolerance::default();
    let eig = herm_eig(rho.mat())?;
    let d = rho.dim();
    let kept: Vec<(f64, usize)> = eig
        .values
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &l)| l > tol.eps)
        .map(|(k, &l)| (l, k))
        .collect();
    let rank = kept.len().max(1);
    let mut dims = rho.parties().dims().to_vec();
    dims.push(rank);
    let parties = PartyDims::new(dims)?;
    let mut amps = vec![Cplx::ZERO; parties.total()];
    for (slot, (l, k)) in kept.iter().enumerate() {
        let w = l.sqrt();
        for x in 0..d {
            amps[x * rank + slot] = eig.vectors.get(x, *k).scale(w);
        }
    }
    PureState::normalized(parties, amps)
}

/// Hughston-Jozsa-Wootters steering: an isometry on the purifying party
/// (the last party of `psi`) carrying the purification onto the diagonal
/// lift of `ensemble`. Columns are orthonormal; applying it with
/// [`PureState::apply_local`] reproduces `ensemble.lift()` up to a global
/// phase.
pub fn hjw_steering(psi: &PureState, ensemble: &Ensemble) -> Result<CMatrix> {
    let n = psi.parties().count();
    if n < 2 {
        return Err(Error::BadDims("purification needs at least two parties".into()));
    }
    let purifier = n - 1;
    let sys_dims = &psi.parties().dims()[..purifier];
    if sys_dims != ensemble.dims() {
        return Err(Error::DimMismatch(
            "ensemble parties do not match the purified system".into(),
        ));
    }

    let rho = psi.partial_trace(&[purifier])?;
    let avg = ensemble.average_state()?;
    let dev = avg.mat().sub(rho.mat()).max_abs();
    if dev > 1e-8 {
        return Err(Error::EnsembleMismatch(dev));
    }

    // Schmidt pairs of the purification across system | purifier.
    let cut = Bipartition::new(&(0..purifier).collect::<Vec<_>>(), n)?;
    let form = schmidt_decompose(psi, &cut)?;
    let rank = form.coeffs.len();
    let d_pur = psi.parties().dim(purifier);
    let m = ensemble.len();

    // M[i][k] = sqrt(p_i) / l_k_sqrt * <v_k|e_i> in the Schmidt basis of the
    // purifier, then rewritten in the computational basis.
    let mut coeff = CMatrix::zeros(m, rank);
    for (i, member) in ensemble.members().iter().enumerate() {
        let e_i = member.product_vector();
        let w = member.p.max(0.0).sqrt();
        let mut captured = 0.0f64;
        for (k, lk_sqrt) in form.coeffs.iter().enumerate() {
            let ov = dot(&form.left_basis[k], &e_i);
            coeff.set(i, k, ov.scale(w / lk_sqrt));
            captured += ov.abs_sq();
        }
        // A member leaking out of the range of rho cannot be steered to.
        if w > 0.0 && captured < 1.0 - 1e-8 {
            return Err(Error::EnsembleMismatch(1.0 - captured));
        }
    }

    let out_rows = m + (d_pur - rank);
    let mut mat = CMatrix::zeros(out_rows, d_pur);
    for i in 0..m {
        for c in 0..d_pur {
            let mut acc = Cplx::ZERO;
            for k in 0..rank {
                acc += coeff.get(i, k) * form.right_basis[k][c].conj();
            }
            mat.set(i, c, acc);
        }
    }
    if rank < d_pur {
        // Extend over the unused purifier directions so the columns stay
        // orthonormal.
        let kernel = orthonormal_completion(&form.right_basis, d_pur);
        for (j, kv) in kernel.iter().enumerate() {
            for c in 0..d_pur {
                mat.set(m + j, c, kv[c].conj());
            }
        }
    }
    let gram_dev = mat.adjoint().mul(&mat).sub(&CMatrix::identity(d_pur)).max_abs();
    if gram_dev > 1e-10 {
        return Err(Error::EnsembleMismatch(gram_dev));
    }
    Ok(mat)
}

/// One layer of the layered normal form: a shared second-party vector and
/// the items grouped under it.
#[derive(Clone, Debug)]
pub struct Layer {
    /// Shared party-B vector (layers are pairwise linearly independent).
    pub shared_b: Vec<Cplx>,
    pub items: Vec<LayerItem>,
}

#[derive(Clone, Debug)]
pub struct LayerItem {
    pub p: f64,
    /// Party-A vector; orthonormal across the whole structure.
    pub a_vector: Vec<Cplx>,
    /// Party-C vector; orthogonal across different layers.
    pub c_vector: Vec<Cplx>,
}

/// Layered regrouping `sum_i |mu_i^B> (x) sum_j sqrt(p_ij) |chi_ij^A>|nu_ij^C>`
/// of a diagonal lift.
#[derive(Clone, Debug)]
pub struct LayeredEnsemble {
    pub a_dim: usize,
    pub b_dim: usize,
    pub c_dim: usize,
    pub layers: Vec<Layer>,
}

impl LayeredEnsemble {
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_weights(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| l.items.iter().map(|it| it.p).sum())
            .collect()
    }
}

/// Groups the members of an ensemble over parties (B, C) into the layered
/// normal form, driven by the pairwise branch labels of its lift.
///
/// Precondition: no pair carries a violating label. Members sharing a
/// parallel B factor join one layer; across layers the C factors must be
/// orthogonal (that is exactly what the non-violating branch conditions
/// guarantee), which is re-verified numerically.
pub fn layered_normal_form(e: &Ensemble, pair_branches: &[PairEntry]) -> Result<LayeredEnsemble> {
    if e.dims().len() != 2 {
        return Err(Error::BadDims("layered form needs a two-party ensemble".into()));
    }
    let eps = Tolerance::default().eps;
    for entry in pair_branches {
        if entry.label.kind == BranchKind::Violation {
            return Err(Error::BranchViolation {
                i: entry.i,
                j: entry.j,
                minor: entry.label.minor,
            });
        }
    }

    const PARALLEL: f64 = 1.0 - 1e-10;
    let m = e.len();
    let mut layers: Vec<Layer> = Vec::new();
    for (i, member) in e.members().iter().enumerate() {
        let b = member.factors[0].clone();
        let c = member.factors[1].clone();
        let mut a = vec![Cplx::ZERO; m];
        a[i] = Cplx::ONE;
        let item = LayerItem { p: member.p, a_vector: a, c_vector: c };
        match layers
            .iter_mut()
            .find(|l| dot(&l.shared_b, &b).abs() >= PARALLEL)
        {
            Some(layer) => layer.items.push(item),
            None => layers.push(Layer { shared_b: b, items: vec![item] }),
        }
    }

    let result = LayeredEnsemble {
        a_dim: m,
        b_dim: e.dims()[0],
        c_dim: e.dims()[1],
        layers,
    };

    // Cross-layer C factors must be orthogonal.
    for (i, li) in result.layers.iter().enumerate() {
        for lj in result.layers.iter().skip(i + 1) {
            for a in &li.items {
                for b in &lj.items {
                    let ov = dot(&a.c_vector, &b.c_vector).abs();
                    if ov > eps {
                        return Err(Error::InvariantFailure(format!(
                            "cross-layer C overlap {ov:.3e} exceeds eps"
                        )));
                    }
                }
            }
        }
    }
    // Layer B vectors pairwise linearly independent by construction of the
    // grouping; probabilities must still sum to one.
    let total: f64 = result.layer_weights().iter().sum();
    if (total - 1.0).abs() > eps {
        return Err(Error::InvariantFailure(format!(
            "layer probabilities sum to {total}, not 1"
        )));
    }
    Ok(result)
}

/// The explicit product-form witness extracted from a layered form: the
/// lift's reduced state on (A, B) and a product ensemble realizing it.
///
/// Layer `i` contributes `q_i * Tr_C |chi_i^AC><chi_i^AC| (x) |mu_i><mu_i|`,
/// which splits into product terms through the eigendecomposition of the
/// A-side mixed state.
pub fn separable_ab_witness(l: &LayeredEnsemble) -> Result<(DensityMatrix, Ensemble)> {
    let eps = Tolerance::default().eps;
    let parties = PartyDims::new(vec![l.a_dim, l.b_dim])?;
    let d = parties.total();
    let mut rho = CMatrix::zeros(d, d);
    let mut members: Vec<EnsembleMember> = Vec::new();

    for layer in &l.layers {
        let q: f64 = layer.items.iter().map(|it| it.p).sum();
        if q <= 0.0 {
            continue;
        }
        // sigma = Tr_C |chi^AC><chi^AC| with chi = sum_j sqrt(p_j/q) a_j (x) c_j.
        let mut sigma = CMatrix::zeros(l.a_dim, l.a_dim);
        for x in &layer.items {
            for y in &layer.items {
                let w = ((x.p / q).sqrt() * (y.p / q).sqrt()).max(0.0);
                let cc = dot(&y.c_vector, &x.c_vector);
                for r in 0..l.a_dim {
                    for c in 0..l.a_dim {
                        let cur = sigma.get(r, c);
                        sigma.set(
                            r,
                            c,
                            cur + (x.a_vector[r] * y.a_vector[c].conj() * cc).scale(w),
                        );
                    }
                }
            }
        }
        let eig = herm_eig(&sigma)?;
        let mu = numerics::normalize(&layer.shared_b);
        for (k, &w) in eig.values.iter().enumerate() {
            if w <= eps {
                continue;
            }
            let a_vec = eig.vectors.col(k);
            members.push(EnsembleMember { p: q * w, factors: vec![a_vec.clone(), mu.clone()] });
            // Accumulate q * w * |a (x) mu><a (x) mu|.
            for r in 0..l.a_dim {
                for c in 0..l.a_dim {
                    for rb in 0..l.b_dim {
                        for cb in 0..l.b_dim {
                            let val = (a_vec[r] * a_vec[c].conj() * mu[rb] * mu[cb].conj())
                                .scale(q * w);
                            let (i, j) = (r * l.b_dim + rb, c * l.b_dim + cb);
                            let cur = rho.get(i, j);
                            rho.set(i, j, cur + val);
                        }
                    }
                }
            }
        }
    }
    // Spectra can sum slightly below one; renormalize the witness.
    let total: f64 = members.iter().map(|m| m.p).sum();
    if total <= 0.0 {
        return Err(Error::InvariantFailure("witness has no support".into()));
    }
    for m in members.iter_mut() {
        m.p /= total;
    }
    let rho = rho.scale(1.0 / total);
    Ok((
        DensityMatrix::new_unchecked(parties, rho),
        Ensemble::new(vec![l.a_dim, l.b_dim], members)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::proofcheck::{pair_condition_matrix, BranchLabel};
    use crate::rng::Rng64;

    fn eigen_ensemble_of(rho: &DensityMatrix) -> Ensemble {
        // Product eigen-ensemble for diagonal-in-product-basis test states.
        let eig = herm_eig(rho.mat()).unwrap();
        let eps = Tolerance::default().eps;
        let dims = rho.parties().dims().to_vec();
        let mut members = Vec::new();
        for (k, &l) in eig.values.iter().enumerate() {
            if l <= eps {
                continue;
            }
            let v = eig.vectors.col(k);
            let st = PureState::new_unchecked(rho.parties().clone(), v);
            let cut = Bipartition::new(&[0], dims.len()).unwrap();
            let form = schmidt_decompose(&st, &cut).unwrap();
            assert!(form.coeffs.len() == 1, "eigenvector must be product here");
            members.push(EnsembleMember {
                p: l,
                factors: vec![form.left_basis[0].clone(), form.right_basis[0].clone()],
            });
        }
        Ensemble::new(dims, members).unwrap()
    }

    #[test]
    fn purify_maximally_mixed_gives_one_ebit() {
        let rho = DensityMatrix::new(
            PartyDims::new(vec![2]).unwrap(),
            CMatrix::identity(2).scale(0.5),
        )
        .unwrap();
        let psi = purify(&rho).unwrap();
        assert_eq!(psi.parties().dims(), &[2, 2]);
        let cut = Bipartition::new(&[0], 2).unwrap();
        assert!((psi.partial_entropy(&cut).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purify_pure_state_appends_trivial_party() {
        let z = fixtures::basis_state(&[2], 0).unwrap();
        let psi = purify(&z.to_density()).unwrap();
        assert_eq!(psi.parties().dims(), &[2, 1]);
        let back = psi.partial_trace(&[1]).unwrap();
        assert!(back.mat().sub(z.to_density().mat()).max_abs() < 1e-12);
    }

    #[test]
    fn purify_tiles_round_trip() {
        let tiles = fixtures::tiles_state();
        let psi = purify(&tiles).unwrap();
        assert_eq!(psi.parties().dims(), &[3, 3, 4]);
        let back = psi.partial_trace(&[2]).unwrap();
        assert!(back.mat().sub(tiles.mat()).max_abs() < 1e-10);
    }

    #[test]
    fn steering_eigen_ensemble_is_near_identity() {
        // Nondegenerate diagonal state: the eigen-ensemble is the Schmidt
        // ensemble itself, so steering reduces to a permutation/phase.
        let mut m = CMatrix::zeros(2, 2);
        m.set(0, 0, Cplx::from_re(0.75));
        m.set(1, 1, Cplx::from_re(0.25));
        let rho = DensityMatrix::new(PartyDims::new(vec![2]).unwrap(), m).unwrap();
        let psi = purify(&rho).unwrap();
        let eig = herm_eig(rho.mat()).unwrap();
        let mut members = Vec::new();
        for (k, &l) in eig.values.iter().enumerate().rev() {
            members.push(EnsembleMember { p: l, factors: vec![eig.vectors.col(k)] });
        }
        let e = Ensemble::new(vec![2], members).unwrap();
        let m = hjw_steering(&psi, &e).unwrap();
        let dev = m.adjoint().mul(&m).sub(&CMatrix::identity(2)).max_abs();
        assert!(dev < 1e-10);
        let steered = psi.apply_local(1, &m).unwrap();
        let target = e.lift().unwrap();
        // lift() puts the index party first; our purifier is last. Compare
        // through the reduced states and the overlap of reordered amps.
        assert_eq!(steered.parties().dims(), &[2, 2]);
        let mut best = Cplx::ZERO;
        for (x, y) in steered.amps().iter().zip(reorder_lift(&target).iter()) {
            best += y.conj() * *x;
        }
        assert!(best.abs() > 1.0 - 1e-9);
    }

    /// lift() yields |i>|e_i> with the index party first; purifications here
    /// keep the purifier last. Reorder to system-first for comparison.
    fn reorder_lift(lift: &PureState) -> Vec<Cplx> {
        let dims = lift.parties().dims();
        let m = dims[0];
        let rest: usize = dims[1..].iter().product();
        let mut out = vec![Cplx::ZERO; lift.amps().len()];
        for i in 0..m {
            for x in 0..rest {
                out[x * m + i] = lift.amps()[i * rest + x];
            }
        }
        out
    }

    #[test]
    fn steering_onto_plus_minus_ensemble() {
        let rho = DensityMatrix::new(
            PartyDims::new(vec![2]).unwrap(),
            CMatrix::identity(2).scale(0.5),
        )
        .unwrap();
        let psi = purify(&rho).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = vec![Cplx::from_re(r), Cplx::from_re(r)];
        let minus = vec![Cplx::from_re(r), Cplx::from_re(-r)];
        let e = Ensemble::new(
            vec![2],
            vec![
                EnsembleMember { p: 0.5, factors: vec![plus] },
                EnsembleMember { p: 0.5, factors: vec![minus] },
            ],
        )
        .unwrap();
        let m = hjw_steering(&psi, &e).unwrap();
        assert!(m.adjoint().mul(&m).sub(&CMatrix::identity(2)).max_abs() < 1e-10);
        let steered = psi.apply_local(1, &m).unwrap();
        let mut ov = Cplx::ZERO;
        for (x, y) in steered.amps().iter().zip(reorder_lift(&e.lift().unwrap()).iter()) {
            ov += y.conj() * *x;
        }
        assert!(ov.abs() > 1.0 - 1e-9, "overlap {}", ov.abs());
    }

    #[test]
    fn steering_random_ensembles_reproduce_lift() {
        let mut rng = Rng64::new(50);
        for trial in 0..10 {
            // Random rank-3 state on a qutrit from a random product ensemble.
            let mut members = Vec::new();
            let mut ps = vec![0.0f64; 4];
            let mut total = 0.0;
            for p in ps.iter_mut() {
                *p = rng.uniform() + 0.1;
                total += *p;
            }
            for p in ps.iter_mut() {
                *p /= total;
            }
            for &p in &ps {
                members.push(EnsembleMember { p, factors: vec![rng.unit_vector(3)] });
            }
            let e = Ensemble::new(vec![3], members).unwrap();
            let rho = e.average_state().unwrap();
            let rho = DensityMatrix::new(rho.parties().clone(), rho.mat().clone()).unwrap();
            let psi = purify(&rho).unwrap();
            let m = hjw_steering(&psi, &e).unwrap();
            let d_pur = psi.parties().dim(1);
            assert!(
                m.adjoint().mul(&m).sub(&CMatrix::identity(d_pur)).max_abs() < 1e-10,
                "trial {trial}"
            );
            let steered = psi.apply_local(1, &m).unwrap();
            let mut ov = Cplx::ZERO;
            for (x, y) in steered.amps().iter().zip(reorder_lift(&e.lift().unwrap()).iter()) {
                ov += y.conj() * *x;
            }
            assert!(ov.abs() > 1.0 - 1e-9, "trial {trial}: overlap {}", ov.abs());
        }
    }

    #[test]
    fn steering_rejects_wrong_ensemble() {
        let rho = DensityMatrix::new(
            PartyDims::new(vec![2]).unwrap(),
            CMatrix::identity(2).scale(0.5),
        )
        .unwrap();
        let psi = purify(&rho).unwrap();
        let e = Ensemble::new(
            vec![2],
            vec![EnsembleMember {
                p: 1.0,
                factors: vec![vec![Cplx::ONE, Cplx::ZERO]],
            }],
        )
        .unwrap();
        assert!(matches!(hjw_steering(&psi, &e), Err(Error::EnsembleMismatch(_))));
    }

    #[test]
    fn steering_rejects_an_ensemble_for_the_wrong_state() {
        let psi = purify(&fixtures::tiles_state()).unwrap();
        let e = eigen_ensemble_of(&{
            let mut m = CMatrix::zeros(9, 9);
            m.set(0, 0, Cplx::from_re(0.5));
            m.set(4, 4, Cplx::from_re(0.3));
            m.set(8, 8, Cplx::from_re(0.2));
            DensityMatrix::new(PartyDims::new(vec![3, 3]).unwrap(), m).unwrap()
        });
        assert!(hjw_steering(&psi, &e).is_err());
    }

    #[test]
    fn two_purifications_steer_to_the_same_lift() {
        // Purifications of the same state differ by a purifier unitary;
        // steering both onto one target ensemble must land on the same lift.
        let mut m = CMatrix::zeros(4, 4);
        m.set(0, 0, Cplx::from_re(0.6));
        m.set(3, 3, Cplx::from_re(0.4));
        let sep = DensityMatrix::new(PartyDims::new(vec![2, 2]).unwrap(), m).unwrap();
        let p1 = purify(&sep).unwrap();
        let mut rng = Rng64::new(5);
        let g = CMatrix::from_rows(2, 2, (0..4).map(|_| rng.cplx_gaussian()).collect()).unwrap();
        let mut h = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let v = g.get(i, j) + g.get(j, i).conj();
                h.set(i, j, v.scale(0.5));
            }
        }
        let u = herm_eig(&h).unwrap().vectors;
        let p2 = p1.apply_local(2, &u).unwrap();
        let e = eigen_ensemble_of(&sep);
        let m1 = hjw_steering(&p1, &e).unwrap();
        let m2 = hjw_steering(&p2, &e).unwrap();
        let s1 = p1.apply_local(2, &m1).unwrap();
        let s2 = p2.apply_local(2, &m2).unwrap();
        assert!(s1.overlap(&s2).abs() > 1.0 - 1e-9);
    }

    #[test]
    fn reduce_merges_duplicates_and_drops_zero() {
        let zero = vec![Cplx::ONE, Cplx::ZERO];
        let one = vec![Cplx::ZERO, Cplx::ONE];
        let e = Ensemble::new(
            vec![2, 2],
            vec![
                EnsembleMember { p: 0.25, factors: vec![zero.clone(), zero.clone()] },
                EnsembleMember { p: 0.25, factors: vec![zero.clone(), zero.clone()] },
                EnsembleMember { p: 0.0, factors: vec![one.clone(), zero.clone()] },
                EnsembleMember { p: 0.5, factors: vec![one.clone(), one.clone()] },
            ],
        )
        .unwrap();
        let r = ensemble_reduce(&e);
        assert_eq!(r.len(), 2);
        assert!((r.members()[0].p - 0.5).abs() < 1e-12);
        assert!((r.members()[1].p - 0.5).abs() < 1e-12);
        // Already reduced: unchanged.
        let r2 = ensemble_reduce(&r);
        assert_eq!(r2.len(), 2);
    }

    #[test]
    fn layered_form_diagonal_ensemble_gives_singleton_layers() {
        let zero = vec![Cplx::ONE, Cplx::ZERO];
        let one = vec![Cplx::ZERO, Cplx::ONE];
        let e = Ensemble::new(
            vec![2, 2],
            vec![
                EnsembleMember { p: 0.5, factors: vec![zero.clone(), zero.clone()] },
                EnsembleMember { p: 0.5, factors: vec![one.clone(), one.clone()] },
            ],
        )
        .unwrap();
        let lift = e.lift().unwrap();
        let pairs = pair_condition_matrix(&lift).unwrap();
        let l = layered_normal_form(&e, &pairs).unwrap();
        assert_eq!(l.layer_count(), 2);
        assert!(l.layers.iter().all(|layer| layer.items.len() == 1));
    }

    #[test]
    fn layered_form_groups_shared_b_factor() {
        let b = vec![Cplx::from_re(0.6), Cplx::from_re(0.8)];
        let zero = vec![Cplx::ONE, Cplx::ZERO];
        let one = vec![Cplx::ZERO, Cplx::ONE];
        let e = Ensemble::new(
            vec![2, 2],
            vec![
                EnsembleMember { p: 0.5, factors: vec![b.clone(), zero] },
                EnsembleMember { p: 0.5, factors: vec![b.clone(), one] },
            ],
        )
        .unwrap();
        let lift = e.lift().unwrap();
        let pairs = pair_condition_matrix(&lift).unwrap();
        let l = layered_normal_form(&e, &pairs).unwrap();
        assert_eq!(l.layer_count(), 1);
        assert_eq!(l.layers[0].items.len(), 2);
    }

    #[test]
    fn layered_form_rejects_violations() {
        let e = Ensemble::new(
            vec![2, 2],
            vec![
                EnsembleMember {
                    p: 0.5,
                    factors: vec![vec![Cplx::ONE, Cplx::ZERO], vec![Cplx::ONE, Cplx::ZERO]],
                },
                EnsembleMember {
                    p: 0.5,
                    factors: vec![
                        crate::numerics::normalize(&[Cplx::ONE, Cplx::ONE]),
                        crate::numerics::normalize(&[Cplx::ONE, Cplx::ONE]),
                    ],
                },
            ],
        )
        .unwrap();
        let lift = e.lift().unwrap();
        let pairs = pair_condition_matrix(&lift).unwrap();
        assert!(pairs
            .iter()
            .any(|p| p.label.kind == BranchKind::Violation));
        assert!(matches!(
            layered_normal_form(&e, &pairs),
            Err(Error::BranchViolation { .. })
        ));
        let _ = BranchLabel { kind: BranchKind::Both, minor: 0.0 };
    }

    #[test]
    fn witness_reproduces_lift_reduction() {
        // Layer-compatible ensemble: two layers with distinct non-orthogonal
        // B vectors, C factors confined to orthogonal blocks per layer.
        let mut rng = Rng64::new(31);
        let b1 = rng.unit_vector(2);
        let b2 = {
            // Skew second direction, deliberately not orthogonal to b1.
            let v = vec![
                b1[0] + Cplx::from_re(0.7) * b1[1],
                b1[1] - Cplx::from_re(0.3) * b1[0],
            ];
            crate::numerics::normalize(&v)
        };
        let c_block1 = [
            vec![Cplx::ONE, Cplx::ZERO, Cplx::ZERO, Cplx::ZERO],
            crate::numerics::normalize(&[
                Cplx::ONE,
                Cplx::new(0.0, 1.0),
                Cplx::ZERO,
                Cplx::ZERO,
            ]),
        ];
        let c_block2 = [crate::numerics::normalize(&[
            Cplx::ZERO,
            Cplx::ZERO,
            Cplx::ONE,
            Cplx::new(0.5, 0.5),
        ])];
        let e = Ensemble::new(
            vec![2, 4],
            vec![
                EnsembleMember { p: 0.3, factors: vec![b1.clone(), c_block1[0].clone()] },
                EnsembleMember { p: 0.3, factors: vec![b1.clone(), c_block1[1].clone()] },
                EnsembleMember { p: 0.4, factors: vec![b2.clone(), c_block2[0].clone()] },
            ],
        )
        .unwrap();
        let lift = e.lift().unwrap();
        let pairs = pair_condition_matrix(&lift).unwrap();
        let layered = layered_normal_form(&e, &pairs).unwrap();
        assert_eq!(layered.layer_count(), 2);

        let (rho_ab, witness) = separable_ab_witness(&layered).unwrap();
        // The lift has parties (A index, B, C); its (A, B) reduction must
        // match the emitted operator and the witness average.
        let lift_ab = lift.partial_trace(&[2]).unwrap();
        assert!(lift_ab.mat().sub(rho_ab.mat()).max_abs() < 1e-9);
        let avg = witness.average_state().unwrap();
        assert!(avg.mat().sub(rho_ab.mat()).max_abs() < 1e-9);

        // The witness also certifies the reduction through the classifier.
        let c = crate::separability::certify_separable_with_witness(&lift_ab, &witness).unwrap();
        assert_eq!(c.verdict, crate::separability::Verdict::SeparableCertified);
    }
}
