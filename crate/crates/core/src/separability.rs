//! Positivity-under-partial-transposition reports, one-sided entanglement
//! and separability certificates, eigenseparability, and the three-party
//! triangle classifier.
//!
//! Certificates are deliberately one-sided. "Not certified separable" is
//! reported as `Undetermined`, never as entangled; `SeparableCertified`
//! appears only where positivity under partial transposition is sufficient
//! (2x2 and 2x3) or an explicit product ensemble vouches for the state; and
//! negativity is reported as `Npt` without deciding distillability.

use crate::error::{Error, Result};
use crate::numerics::{degeneracy_clusters, herm_eig, svd, CMatrix, Cplx, Tolerance};
use crate::purification::Ensemble;
use crate::rng::Rng64;
use crate::schmidt::{gsd_detect, GsdResult};
use crate::states::{canonical_bipartitions, Bipartition, DensityMatrix, PureState};

/// Knobs shared by the randomized searches; defaults make the bound-entangled
/// fixtures certify reliably.
#[derive(Clone, Copy, Debug)]
pub struct SearchParams {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    pub retries: usize,
    pub tol: Tolerance,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { restarts: 32, iters: 200, seed: 1, retries: 3, tol: Tolerance::default() }
    }
}

/// Verdict of the partial transpose over one bipartition.
#[derive(Clone, Debug)]
pub struct PptEntry {
    pub cut: Bipartition,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub npt: bool,
}

/// Partial-transpose spectra for every bipartition up to complement
/// symmetry.
#[derive(Clone, Debug)]
pub struct PptReport {
    pub entries: Vec<PptEntry>,
}

impl PptReport {
    pub fn all_ppt(&self) -> bool {
        self.entries.iter().all(|e| !e.npt)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the partial transpose on every canonical bipartition. The
/// transposed side is the right group, matching the usual `T_B` convention
/// on two parties.
pub fn ppt_report(rho: &DensityMatrix) -> Result<PptReport> {
    let n = rho.parties().count();
    if n < 2 {
        return Err(Error::BadDims("partial transpose needs at least two parties".into()));
    }
    let eps = Tolerance::default().eps;
    let mut entries = Vec::new();
    for cut in canonical_bipartitions(n) {
        let pt = rho.partial_transpose(cut.right())?;
        let eig = herm_eig(&pt)?;
        let min = eig.values[0];
        entries.push(PptEntry { cut, eigenvalues: eig.values, min_eigenvalue: min, npt: min < -eps });
    }
    Ok(PptReport { entries })
}

/// Trace norm of the realigned matrix `R[(i,k)][(j,l)] = rho[(i,j)][(k,l)]`.
/// Values above one certify entanglement; every separable state satisfies
/// the bound.
pub fn realignment_value(rho: &DensityMatrix) -> Result<f64> {
    if rho.parties().count() != 2 {
        return Err(Error::BadDims("realignment needs a two-party state".into()));
    }
    let da = rho.parties().dim(0);
    let db = rho.parties().dim(1);
    let mut r = CMatrix::zeros(da * da, db * db);
    for i in 0..da {
        for k in 0..da {
            for j in 0..db {
                for l in 0..db {
                    r.set(i * da + k, j * db + l, rho.mat().get(i * db + j, k * db + l));
                }
            }
        }
    }
    let dec = svd(&r)?;
    Ok(dec.sigma.iter().sum())
}

/// Result of the alternating product-vector search.
#[derive(Clone, Debug)]
pub struct RangeSearch {
    /// Largest `<phi x chi| P |phi x chi>` found.
    pub best_overlap: f64,
    pub witness_left: Vec<Cplx>,
    pub witness_right: Vec<Cplx>,
}

/// Projector onto the range of a state (eigenvalues above eps).
fn range_projector(rho: &DensityMatrix) -> Result<CMatrix> {
    let eps = Tolerance::default().eps;
    let eig = herm_eig(rho.mat())?;
    let d = rho.dim();
    let mut p = CMatrix::zeros(d, d);
    for (k, &l) in eig.values.iter().enumerate() {
        if l <= eps {
            continue;
        }
        for i in 0..d {
            let vi = eig.vectors.get(i, k);
            for j in 0..d {
                let cur = p.get(i, j);
                p.set(i, j, cur + vi * eig.vectors.get(j, k).conj());
            }
        }
    }
    Ok(p)
}

/// Alternating maximization of `<phi x chi| P |phi x chi>`: with one side
/// fixed, the optimum of the other is the top eigenvector of the contracted
/// operator, so the objective never decreases. Runs `restarts` independent
/// seeded starts and keeps the best.
pub fn range_product_search(rho: &DensityMatrix, params: &SearchParams) -> Result<RangeSearch> {
    let p = range_projector(rho)?;
    let (da, db) = (rho.parties().dim(0), rho.parties().dim(1));
    seesaw_over_projector(&p, da, db, params)
}

pub(crate) fn seesaw_over_projector(
    p: &CMatrix,
    da: usize,
    db: usize,
    params: &SearchParams,
) -> Result<RangeSearch> {
    if p.rows() != da * db {
        return Err(Error::DimMismatch("projector does not match the party dims".into()));
    }
    let base = Rng64::new(params.seed);
    let mut best = RangeSearch {
        best_overlap: -1.0,
        witness_left: vec![Cplx::ZERO; da],
        witness_right: vec![Cplx::ZERO; db],
    };
    for restart in 0..params.restarts.max(1) {
        let mut rng = base.substream(restart as u64);
        let run = seesaw_once(p, da, db, params.iters, &mut rng)?;
        if run.0 > best.best_overlap {
            best = RangeSearch {
                best_overlap: run.0,
                witness_left: run.1,
                witness_right: run.2,
            };
        }
    }
    best.best_overlap = best.best_overlap.clamp(0.0, 1.0 + 1e-12).min(1.0);
    Ok(best)
}

/// One seesaw run: objective, witnesses, and the per-iteration trace.
type SeesawRun = (f64, Vec<Cplx>, Vec<Cplx>, Vec<f64>);

fn seesaw_once(
    p: &CMatrix,
    da: usize,
    db: usize,
    iters: usize,
    rng: &mut Rng64,
) -> Result<SeesawRun> {
    let mut left = rng.unit_vector(da);
    let mut right = rng.unit_vector(db);
    let mut value = 0.0f64;
    let mut trace = Vec::new();
    for _ in 0..iters.max(1) {
        // Fix the right side, optimize the left.
        let mut k_left = CMatrix::zeros(da, da);
        for a in 0..da {
            for a2 in 0..da {
                let mut acc = Cplx::ZERO;
                for b in 0..db {
                    for b2 in 0..db {
                        acc += right[b].conj() * p.get(a * db + b, a2 * db + b2) * right[b2];
                    }
                }
                k_left.set(a, a2, acc);
            }
        }
        let eig = herm_eig(&k_left)?;
        left = eig.vectors.col(da - 1);

        let mut k_right = CMatrix::zeros(db, db);
        for b in 0..db {
            for b2 in 0..db {
                let mut acc = Cplx::ZERO;
                for a in 0..da {
                    for a2 in 0..da {
                        acc += left[a].conj() * p.get(a * db + b, a2 * db + b2) * left[a2];
                    }
                }
                k_right.set(b, b2, acc);
            }
        }
        let eig = herm_eig(&k_right)?;
        right = eig.vectors.col(db - 1);
        let new_value = eig.values[db - 1];
        trace.push(new_value);
        if trace.len() > 1 && new_value - value < 1e-12 {
            value = new_value.max(value);
            break;
        }
        value = new_value.max(value);
    }
    Ok((value, left, right, trace))
}

/// Certified verdicts for a two-party state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    SeparableCertified,
    PptEntangledCertified,
    Npt,
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::SeparableCertified => "SeparableCertified",
            Verdict::PptEntangledCertified => "PPTEntangledCertified",
            Verdict::Npt => "NPT",
            Verdict::Undetermined => "Undetermined",
        }
    }
}

/// Verdict plus the criterion and numeric evidence that produced it.
#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    pub criterion: String,
    pub value: f64,
}

/// Decision tree for a two-party state:
/// negativity is reported as `Npt` (distillable vs bound is never decided);
/// positivity certifies separability only in 2x2 / 2x3 (or for a trivial
/// dimension-one factor); otherwise the realignment bound and the range
/// product search may certify entanglement; everything else stays
/// `Undetermined`.
pub fn classify_bipartite(rho: &DensityMatrix, params: &SearchParams) -> Result<Classification> {
    if rho.parties().count() != 2 {
        return Err(Error::BadDims("classification needs a two-party state".into()));
    }
    let eps = params.tol.eps;
    let report = ppt_report(rho)?;
    let min_eig = report.min_eigenvalue();
    if min_eig < -eps {
        return Ok(Classification {
            verdict: Verdict::Npt,
            criterion: "partial-transpose".into(),
            value: min_eig,
        });
    }
    let (da, db) = (rho.parties().dim(0), rho.parties().dim(1));
    if da.min(db) == 1 {
        // One side is trivial; the eigen-ensemble is a product witness.
        return Ok(Classification {
            verdict: Verdict::SeparableCertified,
            criterion: "trivial-factor".into(),
            value: min_eig,
        });
    }
    if (da == 2 && db == 2) || (da == 2 && db == 3) || (da == 3 && db == 2) {
        // Positivity under partial transposition is sufficient here.
        return Ok(Classification {
            verdict: Verdict::SeparableCertified,
            criterion: "ppt-low-dim".into(),
            value: min_eig,
        });
    }
    let realign = realignment_value(rho)?;
    if realign > 1.0 + eps {
        return Ok(Classification {
            verdict: Verdict::PptEntangledCertified,
            criterion: "realignment".into(),
            value: realign,
        });
    }
    let search = range_product_search(rho, params)?;
    if search.best_overlap < 1.0 - 1e-3 {
        return Ok(Classification {
            verdict: Verdict::PptEntangledCertified,
            criterion: "range-product-search".into(),
            value: search.best_overlap,
        });
    }
    Ok(Classification {
        verdict: Verdict::Undetermined,
        criterion: "no-certificate".into(),
        value: search.best_overlap,
    })
}

/// Certifies separability from an explicit product ensemble realizing the
/// state within `1e-8` entrywise.
pub fn certify_separable_with_witness(
    rho: &DensityMatrix,
    witness: &Ensemble,
) -> Result<Classification> {
    let avg = witness.average_state()?;
    if avg.parties() != rho.parties() {
        return Err(Error::DimMismatch("witness parties differ from the state".into()));
    }
    let dev = avg.mat().sub(rho.mat()).max_abs();
    if dev > 1e-8 {
        return Err(Error::EnsembleMismatch(dev));
    }
    Ok(Classification {
        verdict: Verdict::SeparableCertified,
        criterion: "ensemble-witness".into(),
        value: dev,
    })
}

/// Outcome of the eigenseparability check.
#[derive(Clone, Debug)]
pub enum EigenSeparability {
    /// A full orthogonal product eigenbasis was exhibited.
    ProductEigenbasis,
    /// A nondegenerate eigenvector is entangled; the state cannot be
    /// eigenseparable.
    EntangledEigenvector { index: usize, sigma2: f64 },
    /// A degenerate eigenspace defeated the product-basis search; no verdict.
    UndeterminedByDegeneracy { cluster_start: usize, cluster_len: usize, best_overlap: f64 },
}

impl EigenSeparability {
    pub fn as_str(&self) -> &'static str {
        match self {
            EigenSeparability::ProductEigenbasis => "product-eigenbasis",
            EigenSeparability::EntangledEigenvector { .. } => "entangled-eigenvector",
            EigenSeparability::UndeterminedByDegeneracy { .. } => "undetermined-by-degeneracy",
        }
    }
}

/// Tests whether a two-party state has an orthogonal eigenbasis of product
/// vectors. Nondegenerate eigenvectors are checked directly (rank-one
/// matricization); inside each degenerate cluster a product basis is sought
/// by repeated seesaw-and-deflate. Failure of the search is reported as
/// undetermined, not as a negative verdict.
pub fn eigenseparable_check(rho: &DensityMatrix, params: &SearchParams) -> Result<EigenSeparability> {
    if rho.parties().count() != 2 {
        return Err(Error::BadDims("eigenseparability needs a two-party state".into()));
    }
    let eps = params.tol.eps;
    let (da, db) = (rho.parties().dim(0), rho.parties().dim(1));
    let eig = herm_eig(rho.mat())?;
    let clusters = degeneracy_clusters(&eig.values, rho.mat().frob_norm());

    // Pass 1: nondegenerate eigenvectors give definitive answers.
    let mut idx = 0usize;
    while idx < eig.values.len() {
        let len = clusters[idx..].iter().take_while(|&&c| c == clusters[idx]).count();
        if len == 1 {
            let v = eig.vectors.col(idx);
            let m = CMatrix::from_rows(da, db, v)?;
            let dec = svd(&m)?;
            let sigma2 = dec.sigma.get(1).copied().unwrap_or(0.0);
            if sigma2 > eps {
                return Ok(EigenSeparability::EntangledEigenvector { index: idx, sigma2 });
            }
        }
        idx += len;
    }

    // Pass 2: search each degenerate cluster for an orthogonal product basis.
    let mut idx = 0usize;
    while idx < eig.values.len() {
        let len = clusters[idx..].iter().take_while(|&&c| c == clusters[idx]).count();
        if len > 1 {
            let d = rho.dim();
            let mut p = CMatrix::zeros(d, d);
            for k in idx..idx + len {
                for i in 0..d {
                    let vi = eig.vectors.get(i, k);
                    for j in 0..d {
                        let cur = p.get(i, j);
                        p.set(i, j, cur + vi * eig.vectors.get(j, k).conj());
                    }
                }
            }
            for found in 0..len {
                let sub_params = SearchParams {
                    seed: params.seed.wrapping_add(1 + idx as u64 * 16 + found as u64),
                    ..*params
                };
                let run = seesaw_over_projector(&p, da, db, &sub_params)?;
                if run.best_overlap < 1.0 - 10.0 * eps {
                    return Ok(EigenSeparability::UndeterminedByDegeneracy {
                        cluster_start: idx,
                        cluster_len: len,
                        best_overlap: run.best_overlap,
                    });
                }
                // Deflate the found product direction.
                let mut w = Vec::with_capacity(d);
                for a in &run.witness_left {
                    for b in &run.witness_right {
                        w.push(*a * *b);
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        let cur = p.get(i, j);
                        p.set(i, j, cur - w[i] * w[j].conj());
                    }
                }
            }
        }
        idx += len;
    }
    Ok(EigenSeparability::ProductEigenbasis)
}

/// Per-dropped-party analysis of an `n >= 3`-party pure state.
#[derive(Clone, Debug)]
pub struct DropReport {
    pub dropped: usize,
    pub ppt: PptReport,
    /// Classification of each bipartition of the reduced state, viewed as a
    /// two-group split.
    pub classifications: Vec<(Bipartition, Classification)>,
}

/// For each single party traced out: the reduced state's partial-transpose
/// report across all its bipartitions, plus certificates on each two-group
/// regrouping.
pub fn multiseparability_report(
    psi: &PureState,
    params: &SearchParams,
) -> Result<Vec<DropReport>> {
    let n = psi.parties().count();
    if n < 3 {
        return Err(Error::BadDims("multiseparability needs at least three parties".into()));
    }
    let mut out = Vec::with_capacity(n);
    for dropped in 0..n {
        let reduced = psi.partial_trace(&[dropped])?;
        let ppt = ppt_report(&reduced)?;
        let mut classifications = Vec::new();
        for cut in canonical_bipartitions(reduced.parties().count()) {
            let pair = reduced.regroup_bipartite(&cut)?;
            let class = classify_bipartite(&pair, params)?;
            classifications.push((cut, class));
        }
        out.push(DropReport { dropped, ppt, classifications });
    }
    Ok(out)
}

/// One side of the triangle: the two kept parties and their verdict.
#[derive(Clone, Debug)]
pub struct TriangleSide {
    pub kept: [usize; 2],
    pub classification: Classification,
    pub min_pt_eigenvalue: f64,
}

impl TriangleSide {
    pub fn label(&self) -> String {
        self.kept
            .iter()
            .map(|&p| (b'A' + p as u8) as char)
            .collect()
    }
}

/// Verdicts for the three two-party reductions of a three-party pure state,
/// with flags for combinations the structural implications rule out.
#[derive(Clone, Debug)]
pub struct TriangleReport {
    pub sides: Vec<TriangleSide>,
    pub gsd: GsdResult,
    /// Non-empty only if certified verdicts contradict each other; flags an
    /// internal inconsistency, not a physical state.
    pub exclusion_flags: Vec<String>,
}

/// Classifies the three reductions and raises exclusion flags when the
/// certified verdicts are mutually impossible: a certified bound-entangled
/// side next to a certified separable side (every purification of a
/// PPT-entangled state has both other reductions inseparable), or all three
/// sides certified separable while no Schmidt form exists.
pub fn triangle_classify(psi: &PureState, params: &SearchParams) -> Result<TriangleReport> {
    if psi.parties().count() != 3 {
        return Err(Error::BadDims("triangle needs exactly three parties".into()));
    }
    let mut sides = Vec::with_capacity(3);
    for dropped in [2usize, 1, 0] {
        let kept: Vec<usize> = (0..3).filter(|&p| p != dropped).collect();
        let rho = psi.partial_trace(&[dropped])?;
        let classification = classify_bipartite(&rho, params)?;
        let min_pt = ppt_report(&rho)?.min_eigenvalue();
        sides.push(TriangleSide {
            kept: [kept[0], kept[1]],
            classification,
            min_pt_eigenvalue: min_pt,
        });
    }
    let gsd = gsd_detect(psi, &params.tol, params.retries, params.seed);

    let mut flags = Vec::new();
    let bound_side = sides
        .iter()
        .find(|s| s.classification.verdict == Verdict::PptEntangledCertified);
    let separable_side = sides
        .iter()
        .find(|s| s.classification.verdict == Verdict::SeparableCertified);
    if let (Some(b), Some(s)) = (bound_side, separable_side) {
        flags.push(format!(
            "side {} certified bound entangled while side {} certified separable",
            b.label(),
            s.label()
        ));
    }
    if sides
        .iter()
        .all(|s| s.classification.verdict == Verdict::SeparableCertified)
        && !gsd.decomposable
    {
        flags.push("all sides certified separable but no Schmidt form found".into());
    }
    Ok(TriangleReport { sides, gsd, exclusion_flags: flags })
}
