//! Canonical states and deterministic random generators.
//!
//! Randomness comes from the crate's SplitMix64 stream ([`crate::rng::Rng64`]),
//! so a fixed seed reproduces a fixture bit for bit on every platform and
//! release.

use crate::error::{Error, Result};
use crate::numerics::{svd, CMatrix, Cplx};
use crate::rng::Rng64;
use crate::states::{DensityMatrix, PartyDims, PureState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureName {
    /// Spin singlet `(|01> - |10>)/sqrt(2)`. Note the singlet sign convention,
    /// not the `Phi+` Bell state; downstream phase expectations differ.
    Epr,
    /// `(|000> + |111>)/sqrt(2)`.
    Ghz,
    /// n-party cat state `(|0...0> + |1...1>)/sqrt(2)`.
    Ncat,
    /// `(|001> + |010> + |100>)/sqrt(3)`.
    W,
    /// Computational basis state `|k>` on the given dims.
    Basis,
    /// The 3x3 tiles bound-entangled state: normalized projector onto the
    /// complement of the five-member unextendible product basis.
    Tiles,
    /// Normalized complex-Gaussian amplitude vector (unitarily invariant).
    RandomPure,
    /// Random state in explicit diagonal product form: k orthonormal vectors
    /// per party and random squared coefficients summing to one.
    RandomGsd,
}

impl FixtureName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "epr" => Ok(FixtureName::Epr),
            "ghz" => Ok(FixtureName::Ghz),
            "ncat" => Ok(FixtureName::Ncat),
            "w" => Ok(FixtureName::W),
            "basis" => Ok(FixtureName::Basis),
            "tiles" => Ok(FixtureName::Tiles),
            "random_pure" => Ok(FixtureName::RandomPure),
            "random_gsd" => Ok(FixtureName::RandomGsd),
            other => Err(Error::BadSpec(format!("unknown fixture '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FixtureName::Epr => "epr",
            FixtureName::Ghz => "ghz",
            FixtureName::Ncat => "ncat",
            FixtureName::W => "w",
            FixtureName::Basis => "basis",
            FixtureName::Tiles => "tiles",
            FixtureName::RandomPure => "random_pure",
            FixtureName::RandomGsd => "random_gsd",
        }
    }
}

/// Parameters for [`make_fixture`]; unused fields are ignored by fixtures
/// that do not need them.
#[derive(Clone, Debug)]
pub struct FixtureSpec {
    pub name: FixtureName,
    /// Party count (ncat).
    pub n: Option<usize>,
    /// Party dimensions (basis, random_pure, random_gsd).
    pub dims: Option<Vec<usize>>,
    /// Schmidt term count (random_gsd) or basis index (basis).
    pub k: Option<usize>,
    pub seed: u64,
}

impl FixtureSpec {
    pub fn named(name: FixtureName) -> Self {
        FixtureSpec { name, n: None, dims: None, k: None, seed: 0 }
    }

    pub fn with_dims(name: FixtureName, dims: Vec<usize>, seed: u64) -> Self {
        FixtureSpec { name, n: None, dims: Some(dims), k: None, seed }
    }
}

#[derive(Clone, Debug)]
pub enum StateFixture {
    Pure(PureState),
    Density(DensityMatrix),
}

impl StateFixture {
    pub fn expect_pure(self) -> PureState {
        match self {
            StateFixture::Pure(p) => p,
            StateFixture::Density(_) => panic!("fixture is a density matrix"),
        }
    }

    pub fn expect_density(self) -> DensityMatrix {
        match self {
            StateFixture::Density(d) => d,
            StateFixture::Pure(_) => panic!("fixture is a pure state"),
        }
    }
}

pub fn make_fixture(spec: &FixtureSpec) -> Result<StateFixture> {
    match spec.name {
        FixtureName::Epr => Ok(StateFixture::Pure(epr())),
        FixtureName::Ghz => Ok(StateFixture::Pure(ncat(3)?)),
        FixtureName::Ncat => {
            let n = spec.n.unwrap_or(3);
            Ok(StateFixture::Pure(ncat(n)?))
        }
        FixtureName::W => Ok(StateFixture::Pure(w_state())),
        FixtureName::Basis => {
            let dims = spec.dims.clone().unwrap_or_else(|| vec![2, 2]);
            let k = spec.k.unwrap_or(0);
            Ok(StateFixture::Pure(basis_state(&dims, k)?))
        }
        FixtureName::Tiles => Ok(StateFixture::Density(tiles_state())),
        FixtureName::RandomPure => {
            let dims = spec
                .dims
                .clone()
                .ok_or_else(|| Error::BadSpec("random_pure requires --dims".into()))?;
            Ok(StateFixture::Pure(random_pure(&dims, spec.seed)?))
        }
        FixtureName::RandomGsd => {
            let dims = spec
                .dims
                .clone()
                .ok_or_else(|| Error::BadSpec("random_gsd requires --dims".into()))?;
            let k = spec.k.unwrap_or_else(|| dims.iter().copied().min().unwrap_or(1));
            Ok(StateFixture::Pure(random_gsd(&dims, k, spec.seed)?))
        }
    }
}

/// `(|01> - |10>)/sqrt(2)`.
pub fn epr() -> PureState {
    let parties = PartyDims::new(vec![2, 2]).expect("2x2 fits the guard");
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let amps = vec![
        Cplx::ZERO,
        Cplx::from_re(r),
        Cplx::from_re(-r),
        Cplx::ZERO,
    ];
    PureState::new_unchecked(parties, amps)
}

/// Cat state on `n >= 2` qubits; `ncat(3)` is the GHZ state.
pub fn ncat(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::BadSpec("ncat needs at least 2 parties".into()));
    }
    let parties = PartyDims::new(vec![2; n])?;
    let total = parties.total();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Cplx::ZERO; total];
    amps[0] = Cplx::from_re(r);
    amps[total - 1] = Cplx::from_re(r);
    Ok(PureState::new_unchecked(parties, amps))
}

/// `(|001> + |010> + |100>)/sqrt(3)`.
pub fn w_state() -> PureState {
    let parties = PartyDims::new(vec![2, 2, 2]).expect("2^3 fits the guard");
    let r = 1.0 / 3.0f64.sqrt();
    let mut amps = vec![Cplx::ZERO; 8];
    amps[0b001] = Cplx::from_re(r);
    amps[0b010] = Cplx::from_re(r);
    amps[0b100] = Cplx::from_re(r);
    PureState::new_unchecked(parties, amps)
}

pub fn basis_state(dims: &[usize], index: usize) -> Result<PureState> {
    let parties = PartyDims::new(dims.to_vec())?;
    if index >= parties.total() {
        return Err(Error::BadSpec(format!(
            "basis index {index} out of range for joint dimension {}",
            parties.total()
        )));
    }
    let mut amps = vec![Cplx::ZERO; parties.total()];
    amps[index] = Cplx::ONE;
    Ok(PureState::new_unchecked(parties, amps))
}

/// The five tiles product vectors on 3x3 (an unextendible product basis).
pub fn tiles_upb() -> Vec<Vec<Cplx>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let third = 1.0 / 3.0;
    let kron = |a: &[f64; 3], b: &[f64; 3]| -> Vec<Cplx> {
        let mut v = Vec::with_capacity(9);
        for x in a {
            for y in b {
                v.push(Cplx::from_re(x * y));
            }
        }
        v
    };
    vec![
        kron(&[1.0, 0.0, 0.0], &[r, -r, 0.0]),
        kron(&[r, -r, 0.0], &[0.0, 0.0, 1.0]),
        kron(&[0.0, 0.0, 1.0], &[0.0, r, -r]),
        kron(&[0.0, r, -r], &[1.0, 0.0, 0.0]),
        kron(&[third, third, third], &[1.0, 1.0, 1.0]),
    ]
}

/// Normalized projector onto the orthocomplement of the tiles UPB:
/// `(I - sum_k |u_k><u_k|)/4` on 3x3. PPT and entangled by construction.
pub fn tiles_state() -> DensityMatrix {
    let mut m = CMatrix::identity(9);
    for u in tiles_upb() {
        for i in 0..9 {
            for j in 0..9 {
                let cur = m.get(i, j);
                m.set(i, j, cur - u[i] * u[j].conj());
            }
        }
    }
    let m = m.scale(0.25);
    DensityMatrix::new_unchecked(PartyDims::new(vec![3, 3]).expect("3x3"), m)
}

pub fn random_pure(dims: &[usize], seed: u64) -> Result<PureState> {
    let parties = PartyDims::new(dims.to_vec())?;
    let mut rng = Rng64::new(seed);
    let amps = rng.unit_vector(parties.total());
    PureState::new(parties, amps)
}

/// Random state in explicit diagonal product form: per party, k orthonormal
/// vectors drawn by SVD of a seeded complex-Gaussian matrix; coefficients are
/// normalized absolute Gaussians, sorted descending.
pub fn random_gsd(dims: &[usize], k: usize, seed: u64) -> Result<PureState> {
    let parties = PartyDims::new(dims.to_vec())?;
    let min_dim = dims.iter().copied().min().unwrap_or(0);
    if k == 0 || k > min_dim {
        return Err(Error::BadSpec(format!(
            "term count k = {k} must satisfy 1 <= k <= min(dims) = {min_dim}"
        )));
    }
    let mut rng = Rng64::new(seed);

    let mut coeffs: Vec<f64> = (0..k).map(|_| rng.gaussian().abs().max(1e-3)).collect();
    let norm2: f64 = coeffs.iter().map(|c| c * c).sum();
    for c in coeffs.iter_mut() {
        *c /= norm2.sqrt();
    }
    coeffs.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut bases: Vec<Vec<Vec<Cplx>>> = Vec::with_capacity(dims.len());
    for &d in dims {
        let g = CMatrix::from_rows(d, k, (0..d * k).map(|_| rng.cplx_gaussian()).collect())?;
        let dec = svd(&g)?;
        let cols: Vec<Vec<Cplx>> = (0..k).map(|j| dec.u.col(j)).collect();
        bases.push(cols);
    }

    let strides = parties.strides();
    let mut amps = vec![Cplx::ZERO; parties.total()];
    for (i, &a) in coeffs.iter().enumerate() {
        // Add a * tensor product of the i-th basis vector of every party.
        let mut stack = vec![(0usize, Cplx::from_re(a))];
        for (p, basis) in bases.iter().enumerate() {
            let mut next = Vec::with_capacity(stack.len() * dims[p]);
            for &(off, amp) in &stack {
                for (x, &b) in basis[i].iter().enumerate() {
                    next.push((off + x * strides[p], amp * b));
                }
            }
            stack = next;
        }
        for (off, amp) in stack {
            amps[off] += amp;
        }
    }
    PureState::normalized(parties, amps)
}
