//! Executable pairwise-projection machinery.
//!
//! Given a tripartite pure state together with a product ensemble for its
//! last-two-party reduction, the state lifts to the diagonal form
//! `sum_i sqrt(p_i) |i>|b_i>|c_i>`. Projecting onto any two of the index
//! vectors leaves a two-term state whose reduced (A,B) operator has a 4x4
//! partial transpose with an explicit 2x2 principal minor equal to
//! `-(q_i q_j |gamma| |beta|)^2`, where `beta` and `gamma` are the
//! Gram-Schmidt data of the two members' B and C factors. Positivity of the
//! partial transpose forces `gamma = 0` (C factors orthogonal) or `beta = 0`
//! (B factors parallel) for every pair; running the same test with the roles
//! of B and C swapped and combining the two yields mutual orthogonality on
//! both sides, which is exactly an all-parties Schmidt form.
//!
//! [`orthogonality_certificate`] packages that argument as a checkable
//! certificate, and [`induction_step`] drives it through party groupings to
//! cover four or more parties.

use crate::error::{Error, Result};
use crate::numerics::{
    self, dot, herm_eig, norm, orthonormal_completion, svd, CMatrix, Cplx, Tolerance,
};
use crate::purification::{ensemble_reduce, Ensemble, EnsembleMember};
use crate::rng::Rng64;
use crate::schmidt::{schmidt_decompose, GsdFailure, GsdResult};
use crate::states::{Bipartition, PartyDims, PureState};

/// Which branch of the pairwise partial-transpose condition a pair falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    /// C factors orthogonal (`gamma = 0`), B factors neither parallel nor
    /// orthogonal.
    COrthogonal,
    /// B factors parallel (`beta = 0`).
    BEqual,
    /// Orthogonal on both sides: `gamma = 0` and, with the roles of B and C
    /// swapped, `alpha = 0`. Every pair must land here for a Schmidt form.
    Both,
    /// The principal minor is negative with neither coefficient vanishing:
    /// the pair is incompatible with a positive partial transpose.
    Violation,
}

impl BranchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchKind::COrthogonal => "C_ORTHOGONAL",
            BranchKind::BEqual => "B_EQUAL",
            BranchKind::Both => "BOTH",
            BranchKind::Violation => "VIOLATION",
        }
    }
}

/// Branch verdict plus the tested 2x2 principal-minor determinant.
#[derive(Clone, Copy, Debug)]
pub struct BranchLabel {
    pub kind: BranchKind,
    pub minor: f64,
}

/// One entry of the pairwise condition matrix.
#[derive(Clone, Copy, Debug)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    /// Condition in the (A,B) roles.
    pub label: BranchLabel,
    /// Condition with the B and C roles swapped (the (A,C) argument).
    pub swapped: BranchLabel,
}

/// Two-member projection of a diagonal lift, renormalized, with the
/// Gram-Schmidt expansion data of the second member in the first member's
/// local frames.
#[derive(Clone, Debug)]
pub struct PairState {
    pub first: usize,
    pub second: usize,
    /// Joint weight `p_i + p_j` of the projection branch.
    pub prob: f64,
    /// The projected state on parties (2, dim B, dim C).
    pub state: PureState,
    /// Renormalized amplitudes `q = sqrt(p / (p_i + p_j))`.
    pub amp_first: f64,
    pub amp_second: f64,
    /// `alpha`: overlap of the second B factor with the first.
    pub overlap_b: Cplx,
    /// `beta`: orthogonal remainder of the second B factor (real, >= 0).
    pub residual_b: f64,
    /// `gamma`: overlap of the second C factor with the first.
    pub overlap_c: Cplx,
    /// `delta`: orthogonal remainder of the second C factor.
    pub residual_c: f64,
}

impl PairState {
    /// The same pair viewed with the roles of B and C exchanged.
    pub fn swap_bc_roles(&self) -> PairState {
        let dims = self.state.parties().dims();
        let (db, dc) = (dims[1], dims[2]);
        let mut amps = vec![Cplx::ZERO; self.state.amps().len()];
        for a in 0..2 {
            for b in 0..db {
                for c in 0..dc {
                    amps[a * db * dc + c * db + b] =
                        self.state.amps()[a * db * dc + b * dc + c];
                }
            }
        }
        let parties = PartyDims::new(vec![2, dc, db]).expect("swapped dims fit");
        PairState {
            first: self.first,
            second: self.second,
            prob: self.prob,
            state: PureState::new_unchecked(parties, amps),
            amp_first: self.amp_first,
            amp_second: self.amp_second,
            overlap_b: self.overlap_c,
            residual_b: self.residual_c,
            overlap_c: self.overlap_b,
            residual_c: self.residual_b,
        }
    }
}

/// Splits a product slice of a lift into unit B and C factors.
/// Returns the factors and the second singular value of the matricization.
fn split_product(slice: &[Cplx], db: usize, dc: usize) -> Result<(Vec<Cplx>, Vec<Cplx>, f64)> {
    let m = CMatrix::from_rows(db, dc, slice.to_vec())?;
    let dec = svd(&m)?;
    let sigma2 = dec.sigma.get(1).copied().unwrap_or(0.0);
    let b = dec.u.col(0);
    let c: Vec<Cplx> = dec.v.col(0).iter().map(|z| z.conj()).collect();
    Ok((b, c, sigma2))
}

/// Builds the diagonal lift `sum_i sqrt(p_i) |i>|b_i>|c_i>` of an ensemble
/// that realizes `Tr_A(psi)`.
pub fn lift_ensemble(psi: &PureState, e: &Ensemble) -> Result<PureState> {
    if psi.parties().count() != 3 {
        return Err(Error::BadDims("lift needs a three-party state".into()));
    }
    if e.dims() != &psi.parties().dims()[1..] {
        return Err(Error::DimMismatch(
            "ensemble parties do not match the last two parties of the state".into(),
        ));
    }
    let target = psi.partial_trace(&[0])?;
    let avg = e.average_state()?;
    let dev = avg.mat().sub(target.mat()).max_abs();
    if dev > 1e-8 {
        return Err(Error::EnsembleMismatch(dev));
    }
    e.lift()
}

/// Projects a diagonal lift onto the span of two index vectors and extracts
/// the pairwise Gram-Schmidt data.
pub fn project_pair(lift: &PureState, i: usize, j: usize) -> Result<PairState> {
    let tol = Tolerance::default();
    let dims = lift.parties().dims();
    if dims.len() != 3 {
        return Err(Error::BadDims("pair projection needs a three-party lift".into()));
    }
    let m = dims[0];
    if i == j || i >= m || j >= m {
        return Err(Error::BadSubset(format!(
            "pair indices ({i},{j}) invalid for index dimension {m}"
        )));
    }
    let (db, dc) = (dims[1], dims[2]);
    let len = db * dc;
    let s_i = &lift.amps()[i * len..(i + 1) * len];
    let s_j = &lift.amps()[j * len..(j + 1) * len];
    let p_i = norm(s_i).powi(2);
    let p_j = norm(s_j).powi(2);
    let prob = p_i + p_j;
    if prob <= tol.eps {
        return Err(Error::ZeroBranch(prob));
    }
    pair_from_slices(s_i, s_j, db, dc, i, j, prob)
}

/// Shared core of [`project_pair`] and the induction driver: builds the
/// two-term projected state from raw branch slices.
fn pair_from_slices(
    s_i: &[Cplx],
    s_j: &[Cplx],
    db: usize,
    dc: usize,
    i: usize,
    j: usize,
    prob: f64,
) -> Result<PairState> {
    let tol = Tolerance::default();
    let check_tol = 10.0 * tol.eps;
    let p_i = norm(s_i).powi(2);
    let p_j = norm(s_j).powi(2);

    let scale = Cplx::from_re(1.0 / prob.sqrt());
    let mut amps = Vec::with_capacity(2 * db * dc);
    amps.extend(s_i.iter().map(|z| *z * scale));
    amps.extend(s_j.iter().map(|z| *z * scale));
    let state = PureState::new_unchecked(PartyDims::new(vec![2, db, dc])?, amps);

    let norm_i = numerics::normalize(s_i);
    let norm_j = numerics::normalize(s_j);
    let (b_i, c_i, sig_i) = split_product(&norm_i, db, dc)?;
    if sig_i > check_tol {
        return Err(Error::NotProductBranch { index: i, sigma2: sig_i });
    }
    let (b_j, c_j, sig_j) = split_product(&norm_j, db, dc)?;
    if sig_j > check_tol {
        return Err(Error::NotProductBranch { index: j, sigma2: sig_j });
    }

    // Gram-Schmidt of the second member's factors in the first's frame.
    // Parallel-within-1e-10 snaps the remainder to exactly zero so noise
    // cannot masquerade as a violating branch.
    let expansion = |base: &[Cplx], other: &[Cplx]| -> (Cplx, f64) {
        let ov = dot(base, other);
        if ov.abs() >= 1.0 - 1e-10 {
            return (ov.phase(), 0.0);
        }
        let mut rem = other.to_vec();
        for (r, b) in rem.iter_mut().zip(base.iter()) {
            *r -= *b * ov;
        }
        (ov, norm(&rem))
    };
    let (overlap_b, residual_b) = expansion(&b_i, &b_j);
    let (overlap_c, residual_c) = expansion(&c_i, &c_j);

    Ok(PairState {
        first: i,
        second: j,
        prob,
        state,
        amp_first: (p_i / prob).sqrt(),
        amp_second: (p_j / prob).sqrt(),
        overlap_b,
        residual_b,
        overlap_c,
        residual_c,
    })
}

/// The 4x4 partial transpose of the pair's (A,B) reduction in the
/// constructed local frames, ordered |i i>, |i j>, |j i>, |j j>.
pub fn pair_pt_matrix(p: &PairState) -> CMatrix {
    let qi = p.amp_first;
    let qj = p.amp_second;
    let alpha = p.overlap_b;
    let beta = Cplx::from_re(p.residual_b);
    let gamma = p.overlap_c;
    let mut m = CMatrix::zeros(4, 4);
    m.set(0, 0, Cplx::from_re(qi * qi));
    m.set(0, 2, (gamma * alpha).conj().scale(qi * qj));
    m.set(2, 0, (gamma * alpha).scale(qi * qj));
    m.set(1, 2, (gamma * beta).conj().scale(qi * qj));
    m.set(2, 1, (gamma * beta).scale(qi * qj));
    m.set(2, 2, Cplx::from_re(qj * qj * alpha.abs_sq()));
    m.set(2, 3, (alpha * beta.conj()).scale(qj * qj));
    m.set(3, 2, (alpha * beta.conj()).conj().scale(qj * qj));
    m.set(3, 3, Cplx::from_re(qj * qj * beta.abs_sq()));
    m
}

/// Evaluates the pairwise branch condition.
///
/// The decisive quantity is the principal minor over rows/columns {1, 2} of
/// [`pair_pt_matrix`], which equals `-(q_i q_j |gamma| |beta|)^2`; a positive
/// partial transpose forces it to be nonnegative, hence `beta = 0` or
/// `gamma = 0`. The `Both` branch additionally requires `alpha = 0`, the
/// swapped-role orthogonality that makes the pair orthogonal on both sides.
pub fn pair_pt_condition(p: &PairState) -> BranchLabel {
    let eps = Tolerance::default().eps;
    let pt = pair_pt_matrix(p);
    let det = pt.get(1, 1) * pt.get(2, 2) - pt.get(1, 2) * pt.get(2, 1);
    debug_assert!(det.im.abs() < 1e-15);
    let minor = det.re;

    let beta = p.residual_b;
    let gamma = p.overlap_c.abs();
    let alpha = p.overlap_b.abs();
    let kind = if beta <= eps {
        BranchKind::BEqual
    } else if gamma <= eps {
        if alpha <= eps {
            BranchKind::Both
        } else {
            BranchKind::COrthogonal
        }
    } else if minor < -eps {
        BranchKind::Violation
    } else {
        // Minor nonnegative only because the branch weights are tiny; label
        // by the nearer vanishing coefficient.
        if gamma <= beta {
            BranchKind::COrthogonal
        } else {
            BranchKind::BEqual
        }
    };
    BranchLabel { kind, minor }
}

/// Evaluates the branch condition for every pair of a diagonal lift,
/// in both role orders.
pub fn pair_condition_matrix(lift: &PureState) -> Result<Vec<PairEntry>> {
    let m = lift.parties().dim(0);
    let mut entries = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let pair = project_pair(lift, i, j)?;
            let label = pair_pt_condition(&pair);
            let swapped = pair_pt_condition(&pair.swap_bc_roles());
            entries.push(PairEntry { i, j, label, swapped });
        }
    }
    Ok(entries)
}

/// Outcome of the orthogonality certificate.
#[derive(Clone, Debug)]
pub enum CertificateOutcome {
    /// Every pair is orthogonal on both sides; the state carries the
    /// all-parties Schmidt form assembled in `gsd`.
    Certified {
        gsd: GsdResult,
        pairs: Vec<PairEntry>,
        ppt_ab_min: f64,
        ppt_ac_min: f64,
    },
    /// Some pair (or the ensemble itself) obstructs the form. The partial
    /// transpose minima of the (A,B) and (A,C) reductions let the caller
    /// separate "not decomposable" from "positivity preconditions unmet".
    Violation {
        offending: Option<(usize, usize)>,
        reason: String,
        pairs: Vec<PairEntry>,
        ppt_ab_min: f64,
        ppt_ac_min: f64,
    },
}

impl CertificateOutcome {
    pub fn certified(&self) -> bool {
        matches!(self, CertificateOutcome::Certified { .. })
    }

    pub fn gsd(&self) -> Option<&GsdResult> {
        match self {
            CertificateOutcome::Certified { gsd, .. } => Some(gsd),
            CertificateOutcome::Violation { .. } => None,
        }
    }
}

fn min_pt_eigenvalue(rho: &crate::states::DensityMatrix) -> Result<f64> {
    let pt = rho.partial_transpose(&[1])?;
    Ok(herm_eig(&pt)?.values[0])
}

/// Runs the pairwise certificate for a three-party state against a reduced
/// product ensemble for its (B, C) reduction.
///
/// Certification requires every pair to land in the `Both` branch; the
/// resulting Schmidt data describe the original state, with the A-side basis
/// recovered by contracting against the ensemble members.
pub fn orthogonality_certificate(psi: &PureState, e: &Ensemble) -> Result<CertificateOutcome> {
    let tol = Tolerance::default();
    let lift = lift_ensemble(psi, e)?;
    let pairs = pair_condition_matrix(&lift)?;

    let ppt_ab_min = min_pt_eigenvalue(&lift.partial_trace(&[2])?)?;
    let ppt_ac_min = min_pt_eigenvalue(&lift.partial_trace(&[1])?)?;

    if let Some(bad) = pairs.iter().find(|p| p.label.kind != BranchKind::Both) {
        return Ok(CertificateOutcome::Violation {
            offending: Some((bad.i, bad.j)),
            reason: format!(
                "pair ({},{}) resolved to {} (minor {:.3e}); mutual orthogonality fails",
                bad.i,
                bad.j,
                bad.label.kind.as_str(),
                bad.label.minor
            ),
            pairs,
            ppt_ab_min,
            ppt_ac_min,
        });
    }

    // All pairs mutually orthogonal: the members are an orthonormal product
    // family, so the state is sum_i sqrt(p_i) u_i (x) b_i (x) c_i with the
    // A-side basis recovered by contraction.
    let dims = psi.parties().dims();
    let (da, db, dc) = (dims[0], dims[1], dims[2]);
    let len = db * dc;
    let mut terms: Vec<StageTerm> = Vec::new();
    for (k, member) in e.members().iter().enumerate() {
        let w = member.p.max(0.0).sqrt();
        if w <= tol.eps {
            continue;
        }
        let b = member.factors[0].clone();
        let c = member.factors[1].clone();
        let prod = EnsembleMember { p: member.p, factors: vec![b.clone(), c.clone()] }
            .product_vector();
        let mut u = vec![Cplx::ZERO; da];
        for (a, slot) in u.iter_mut().enumerate() {
            let slice = &psi.amps()[a * len..(a + 1) * len];
            *slot = dot(&prod, slice).scale(1.0 / w);
        }
        let nu = norm(&u);
        if (nu - 1.0).abs() > 10.0 * tol.eps {
            return Ok(CertificateOutcome::Violation {
                offending: None,
                reason: format!(
                    "member {k}: contracted A vector has norm {nu:.12}, ensemble weight \
                     inconsistent with the state"
                ),
                pairs,
                ppt_ab_min,
                ppt_ac_min,
            });
        }
        terms.push((w, numerics::normalize(&u), b, c));
    }
    for a in 0..terms.len() {
        for b in a + 1..terms.len() {
            let ov = dot(&terms[a].1, &terms[b].1).abs();
            if ov > 10.0 * tol.eps {
                return Ok(CertificateOutcome::Violation {
                    offending: Some((a, b)),
                    reason: format!(
                        "contracted A vectors of members {a} and {b} overlap (|<a|b>| = {ov:.3e})"
                    ),
                    pairs,
                    ppt_ab_min,
                    ppt_ac_min,
                });
            }
        }
    }

    terms.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let coeffs: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let bases = vec![
        terms.iter().map(|t| t.1.clone()).collect::<Vec<_>>(),
        terms.iter().map(|t| t.2.clone()).collect::<Vec<_>>(),
        terms.iter().map(|t| t.3.clone()).collect::<Vec<_>>(),
    ];
    let gsd = GsdResult::certified(coeffs, bases, 0.0, 1);
    let rec = crate::schmidt::gsd_reconstruct(&gsd, psi.parties())?;
    let residual = psi.distance_up_to_phase(&rec);
    let gsd = GsdResult { residual, ..gsd };
    if residual > 10.0 * tol.eps {
        return Ok(CertificateOutcome::Violation {
            offending: None,
            reason: format!("assembled Schmidt form misses the state (residual {residual:.3e})"),
            pairs,
            ppt_ab_min,
            ppt_ac_min,
        });
    }
    Ok(CertificateOutcome::Certified { gsd, pairs, ppt_ab_min, ppt_ac_min })
}

/// Product eigen-ensemble of a two-party mixed state, if every eigenvector
/// with nonnegligible weight is a product vector.
pub fn eigen_ensemble(rho: &crate::states::DensityMatrix) -> Result<Ensemble> {
    if rho.parties().count() != 2 {
        return Err(Error::BadDims("eigen-ensemble needs a two-party state".into()));
    }
    let tol = Tolerance::default();
    let eig = herm_eig(rho.mat())?;
    let mut members = Vec::new();
    for (k, &l) in eig.values.iter().enumerate().rev() {
        if l <= tol.eps {
            continue;
        }
        let v = eig.vectors.col(k);
        let (b, c, sigma2) =
            split_product(&v, rho.parties().dim(0), rho.parties().dim(1))?;
        if sigma2 > 10.0 * tol.eps {
            return Err(Error::NotProductBranch { index: k, sigma2 });
        }
        members.push(EnsembleMember { p: l, factors: vec![b, c] });
    }
    Ensemble::new(rho.parties().dims().to_vec(), members)
}

/// Certificate entry point when no ensemble is supplied: falls back to the
/// eigen-ensemble of `Tr_A(psi)`.
///
/// Degenerate reductions may have entangled computed eigenvectors even when
/// a product ensemble exists; that case surfaces as a `Violation` outcome
/// naming the non-product member, and the detector route remains available.
pub fn certificate_with_eigen_ensemble(psi: &PureState) -> Result<CertificateOutcome> {
    let rho_bc = psi.partial_trace(&[0])?;
    match eigen_ensemble(&rho_bc) {
        Ok(e) => orthogonality_certificate(psi, &ensemble_reduce(&e)),
        Err(Error::NotProductBranch { index, sigma2 }) => {
            let ppt_ab_min = min_pt_eigenvalue(&psi.partial_trace(&[2])?)?;
            let ppt_ac_min = min_pt_eigenvalue(&psi.partial_trace(&[1])?)?;
            Ok(CertificateOutcome::Violation {
                offending: None,
                reason: format!(
                    "eigen-ensemble member {index} of the (B,C) reduction is not a product \
                     vector (sigma2 = {sigma2:.3e}); no product ensemble available"
                ),
                pairs: Vec::new(),
                ppt_ab_min,
                ppt_ac_min,
            })
        }
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Multipartite induction
// ---------------------------------------------------------------------------

/// Terms of one certified grouping stage.
struct StageParts {
    coeffs: Vec<f64>,
    /// bases[party][term] over the stage's party list.
    bases: Vec<Vec<Vec<Cplx>>>,
}

/// Decides Schmidt decomposability of `n >= 4`-party states by the grouping
/// argument: certify the split (A | B | rest-grouped) with the pairwise
/// partial-transpose conditions, collapse the certified diagonal onto an
/// index party, and repeat on (index | C | rest), unwinding the per-party
/// bases on the way out. Two-party groupings bottom out in an SVD.
///
/// Agrees with [`crate::schmidt::gsd_detect`] on decomposability, through an
/// independent route: the checks here are the pairwise 4x4 partial-transpose
/// minors, not Gram matrices of conditionals.
pub fn induction_step(psi: &PureState, tol: &Tolerance, seed: u64) -> GsdResult {
    let n = psi.parties().count();
    if n <= 2 {
        return crate::schmidt::gsd_detect(psi, tol, 0, seed);
    }
    let rng = Rng64::new(seed);
    let mut attempts = 0usize;
    match certify_stage(psi, tol, &rng, 3, 0, &mut attempts) {
        Ok(parts) => {
            let rec = reconstruct(&parts, psi.parties());
            let residual = psi.distance_up_to_phase(&rec);
            if residual > 10.0 * tol.eps {
                return GsdResult {
                    decomposable: false,
                    coeffs: Vec::new(),
                    bases: Vec::new(),
                    residual,
                    attempts_used: attempts.max(1),
                    failure: Some(GsdFailure::ConditionalFactorization {
                        term: 0,
                        party: 0,
                        sigma2: residual,
                    }),
                };
            }
            let mut order: Vec<usize> = (0..parts.coeffs.len()).collect();
            order.sort_by(|&a, &b| {
                parts.coeffs[b].partial_cmp(&parts.coeffs[a]).unwrap().then(a.cmp(&b))
            });
            let coeffs: Vec<f64> = order.iter().map(|&i| parts.coeffs[i]).collect();
            let bases: Vec<Vec<Vec<Cplx>>> = parts
                .bases
                .iter()
                .map(|pb| order.iter().map(|&i| pb[i].clone()).collect())
                .collect();
            GsdResult {
                decomposable: true,
                coeffs,
                bases,
                residual,
                attempts_used: attempts.max(1),
                failure: None,
            }
        }
        Err((failure, value)) => GsdResult {
            decomposable: false,
            coeffs: Vec::new(),
            bases: Vec::new(),
            residual: value,
            attempts_used: attempts.max(1),
            failure: Some(failure),
        },
    }
}

type StageError = (GsdFailure, f64);

/// (coefficient, party-0 vector, party-1 factor, grouped-rest factor).
type StageTerm = (f64, Vec<Cplx>, Vec<Cplx>, Vec<Cplx>);

/// Certifies one grouping stage of an `m >= 3` party state and recurses on
/// the collapsed remainder. `depth` tracks how many original parties have
/// already been split off (for evidence labelling).
fn certify_stage(
    state: &PureState,
    tol: &Tolerance,
    rng: &Rng64,
    retries: usize,
    depth: usize,
    attempts: &mut usize,
) -> std::result::Result<StageParts, StageError> {
    let dims = state.parties().dims().to_vec();
    let m = dims.len();
    debug_assert!(m >= 2);
    if m == 2 {
        // Only reached for two-party inputs of the top-level call.
        let cut = Bipartition::new(&[0], 2).expect("two parties");
        let form = schmidt_decompose(state, &cut).expect("valid cut");
        return Ok(StageParts {
            coeffs: form.coeffs.clone(),
            bases: vec![form.left_basis, form.right_basis],
        });
    }

    let check_tol = 10.0 * tol.eps;
    let mut last_err: Option<StageError> = None;
    'attempt: for attempt in 0..=retries {
        *attempts += 1;
        let mut stream = rng.substream((depth as u64) << 32 | attempt as u64);

        // Candidate basis for party 0 from a random contraction of parties 2...
        let (d0, d1) = (dims[0], dims[1]);
        let tail: usize = dims[2..].iter().product();
        let mut contracted = vec![Cplx::ZERO; d0 * d1];
        let weights = {
            let draws: Vec<Vec<Cplx>> =
                dims[2..].iter().map(|&d| stream.unit_vector(d)).collect();
            let mut w = vec![Cplx::ONE];
            for v in &draws {
                let mut next = Vec::with_capacity(w.len() * v.len());
                for a in &w {
                    for b in v {
                        next.push(*a * b.conj());
                    }
                }
                w = next;
            }
            w
        };
        for x01 in 0..d0 * d1 {
            let mut acc = Cplx::ZERO;
            for (t, &wt) in weights.iter().enumerate() {
                acc += state.amps()[x01 * tail + t] * wt;
            }
            contracted[x01] = acc;
        }
        let mat = CMatrix::from_rows(d0, d1, contracted).expect("shape fixed");
        let dec = match svd(&mat) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let s0 = dec.sigma.first().copied().unwrap_or(0.0);
        if s0 <= 0.0 {
            continue;
        }
        let zero_floor = 1e-9 * s0;
        let active: Vec<f64> = dec.sigma.iter().copied().filter(|&s| s > zero_floor).collect();
        for w in active.windows(2) {
            if (w[0] - w[1]) < 1e-6 * s0 {
                continue 'attempt;
            }
        }
        if let Some(&last) = active.last() {
            if active.len() < dec.sigma.len() && (last - zero_floor) < 1e-6 * s0 {
                continue 'attempt;
            }
        }

        let mut u_cols: Vec<Vec<Cplx>> = (0..dec.u.cols()).map(|j| dec.u.col(j)).collect();
        u_cols.extend(orthonormal_completion(&u_cols, d0));
        let u = CMatrix::from_cols(d0, &u_cols);
        let rotated = state.apply_local(0, &u.adjoint()).expect("unitary");

        // Conditionals and their (party 1 | rest) product split.
        let rest: usize = dims[1..].iter().product();
        let tail_dim: usize = dims[2..].iter().product();
        let mut terms: Vec<StageTerm> = Vec::new();
        let mut raw_slices: Vec<Vec<Cplx>> = Vec::new();
        for i in 0..d0 {
            let slice = &rotated.amps()[i * rest..(i + 1) * rest];
            let c = norm(slice);
            if c <= tol.eps {
                continue;
            }
            let normalized = numerics::scale_vec(slice, Cplx::from_re(1.0 / c));
            let (b, g, sigma2) = match split_product(&normalized, d1, tail_dim) {
                Ok(x) => x,
                Err(_) => continue 'attempt,
            };
            if sigma2 > check_tol {
                last_err = Some((
                    GsdFailure::ConditionalFactorization {
                        term: terms.len(),
                        party: depth + 1,
                        sigma2,
                    },
                    sigma2,
                ));
                continue 'attempt;
            }
            // Align the factor product's phase with the conditional.
            let prod = {
                let mut out = Vec::with_capacity(rest);
                for x in &b {
                    for y in &g {
                        out.push(*x * *y);
                    }
                }
                out
            };
            let ov = dot(&prod, &normalized);
            let u_vec = numerics::scale_vec(&u_cols[i], ov.phase());
            terms.push((c, u_vec, b, g));
            raw_slices.push(slice.to_vec());
        }

        // Pairwise partial-transpose conditions on the stage's lift.
        let k = terms.len();
        for a in 0..k {
            for b in a + 1..k {
                let prob = terms[a].0 * terms[a].0 + terms[b].0 * terms[b].0;
                let pair = match pair_from_slices(
                    &raw_slices[a],
                    &raw_slices[b],
                    d1,
                    tail_dim,
                    a,
                    b,
                    prob,
                ) {
                    Ok(p) => p,
                    Err(_) => continue 'attempt,
                };
                let label = pair_pt_condition(&pair);
                let swapped = pair_pt_condition(&pair.swap_bc_roles());
                if label.kind != BranchKind::Both || swapped.kind == BranchKind::Violation {
                    let failure = match label.kind {
                        BranchKind::Violation => GsdFailure::CrossOrthogonality {
                            term_a: a,
                            term_b: b,
                            overlap: label.minor.abs().sqrt(),
                        },
                        _ => GsdFailure::DiagonalSupport {
                            party: depth + 1,
                            term_a: a,
                            term_b: b,
                            overlap: pair.overlap_b.abs().max(pair.overlap_c.abs()),
                        },
                    };
                    last_err = Some((failure, label.minor.abs()));
                    continue 'attempt;
                }
            }
        }

        if m == 3 {
            // Fully split: rest-group is a single party.
            return Ok(StageParts {
                coeffs: terms.iter().map(|t| t.0).collect(),
                bases: vec![
                    terms.iter().map(|t| t.1.clone()).collect(),
                    terms.iter().map(|t| t.2.clone()).collect(),
                    terms.iter().map(|t| t.3.clone()).collect(),
                ],
            });
        }

        // Collapse the certified diagonal onto an index party and recurse.
        let mut chi_dims = vec![k];
        chi_dims.extend_from_slice(&dims[2..]);
        let chi_parties = match PartyDims::new(chi_dims) {
            Ok(p) => p,
            Err(_) => continue 'attempt,
        };
        let mut chi_amps = vec![Cplx::ZERO; chi_parties.total()];
        for (i, t) in terms.iter().enumerate() {
            for (x, g) in t.3.iter().enumerate() {
                chi_amps[i * tail_dim + x] = g.scale(t.0);
            }
        }
        let chi = match PureState::normalized(chi_parties, chi_amps) {
            Ok(s) => s,
            Err(_) => continue 'attempt,
        };
        let sub = certify_stage(&chi, tol, rng, retries, depth + 1, attempts)?;

        // Match the recursion's index-party vectors back onto the stage terms.
        let mut used = vec![false; k];
        let mut coeffs = Vec::with_capacity(sub.coeffs.len());
        let mut out_bases: Vec<Vec<Vec<Cplx>>> =
            vec![Vec::with_capacity(sub.coeffs.len()); dims.len()];
        for (t, x_vec) in sub.bases[0].iter().enumerate() {
            let (best_i, best_amp) = x_vec
                .iter()
                .enumerate()
                .map(|(i, z)| (i, z.abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .expect("nonempty");
            if best_amp < 1.0 - 1e-6 || used[best_i] {
                last_err = Some((
                    GsdFailure::DiagonalSupport {
                        party: depth,
                        term_a: t,
                        term_b: best_i,
                        overlap: best_amp,
                    },
                    1.0 - best_amp,
                ));
                continue 'attempt;
            }
            used[best_i] = true;
            let phase = x_vec[best_i].phase();
            coeffs.push(sub.coeffs[t]);
            out_bases[0].push(numerics::scale_vec(&terms[best_i].1, phase));
            out_bases[1].push(terms[best_i].2.clone());
            for (q, pb) in sub.bases[1..].iter().enumerate() {
                out_bases[q + 2].push(pb[t].clone());
            }
        }
        return Ok(StageParts { coeffs, bases: out_bases });
    }
    Err(last_err.unwrap_or((
        GsdFailure::ConditionalFactorization { term: 0, party: depth + 1, sigma2: 1.0 },
        1.0,
    )))
}

fn reconstruct(parts: &StageParts, parties: &PartyDims) -> PureState {
    let mut amps = vec![Cplx::ZERO; parties.total()];
    for (t, &a) in parts.coeffs.iter().enumerate() {
        let mut prod = vec![Cplx::from_re(a)];
        for pb in &parts.bases {
            let f = &pb[t];
            let mut next = Vec::with_capacity(prod.len() * f.len());
            for x in &prod {
                for y in f {
                    next.push(*x * *y);
                }
            }
            prod = next;
        }
        for (slot, v) in amps.iter_mut().zip(prod.iter()) {
            *slot += *v;
        }
    }
    let n = norm(&amps);
    if n > 0.0 {
        for z in amps.iter_mut() {
            *z = z.scale(1.0 / n);
        }
    }
    PureState::new_unchecked(parties.clone(), amps)
}
