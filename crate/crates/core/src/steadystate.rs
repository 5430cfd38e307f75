//! Non-equilibrium steady states of the secular master equation, Markovian
//! time evolution, and the photon-fluctuation occupations.
//!
//! Superoperators act on row-major vectorized 4×4 matrices: element
//! `ρ[k][l]` sits at index `4k + l`, and `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.

use alloc::vec::Vec;

use crate::linalg::{expm, hermitian_eigen, jacobi_svd, CMatrix, C64};
use crate::model::DimerParams;
use crate::protocols::ProtocolTarget;
use crate::rates::RateMatrix;
use crate::spectrum::{QubitState, Spectrum};
use crate::{Error, Result};

/// Smallest singular value allowed for a null vector, relative to the largest.
pub const NULL_SINGULAR_TOL: f64 = 1e-10;
/// Gap the second-smallest singular value must clear, relative to the largest.
pub const NULL_GAP_TOL: f64 = 1e-6;
pub const NEGATIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Populations {
    pub n: [f64; 4],
}

impl Populations {
    pub fn get(&self, s: QubitState) -> f64 {
        self.n[s.index()]
    }

    pub fn sum(&self) -> f64 {
        self.n.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Populations) -> f64 {
        self.n
            .iter()
            .zip(&other.n)
            .fold(0.0_f64, |m, (a, b)| m.max(libm::fabs(a - b)))
    }
}

/// A 4×4 density matrix in the labeled eigenbasis of H̃_σ.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking shape, Hermiticity and unit trace to 1e-10.
    pub fn new(rho: CMatrix) -> Result<Self> {
        if rho.rows() != 4 || !rho.is_square() {
            return Err(Error::Precondition("density matrix must be 4×4".into()));
        }
        if rho.hermiticity_error() > 1e-10 {
            return Err(Error::Precondition("density matrix is not Hermitian".into()));
        }
        if (rho.trace() - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Precondition("density matrix trace is not 1".into()));
        }
        Ok(DensityMatrix { rho })
    }

    pub(crate) fn from_raw(rho: CMatrix) -> Self {
        DensityMatrix { rho }
    }

    pub fn pure(s: QubitState) -> Self {
        let v = s.bare_vector();
        DensityMatrix {
            rho: CMatrix::outer(&v, &v),
        }
    }

    pub fn diagonal(p: &Populations) -> Self {
        DensityMatrix {
            rho: CMatrix::diag_real(&p.n),
        }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            rho: CMatrix::diag_real(&[0.25; 4]),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn populations(&self) -> Populations {
        let mut n = [0.0; 4];
        for (k, x) in n.iter_mut().enumerate() {
            *x = self.rho[(k, k)].re;
        }
        Populations { n }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let h = self.rho.add(&self.rho.adjoint()).scale(C64::new(0.5, 0.0));
        Ok(hermitian_eigen(&h)?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Same state in the bare singlet-triplet basis.
    pub fn to_bare(&self, spec: &Spectrum) -> CMatrix {
        let u = spec.basis_matrix();
        u.matmul(&self.rho).matmul(&u.adjoint())
    }

    pub fn vectorize(&self) -> Vec<C64> {
        self.rho.to_vec()
    }
}

/// `dn/dt = G n` with `G[k][l] = Γ_{l→k}` off the diagonal and
/// `G[k][k] = −Σ_{l≠k} Γ_{k→l}`. Diagonal rates are dropped.
pub fn population_generator(r: &RateMatrix) -> [[f64; 4]; 4] {
    let mut g = [[0.0; 4]; 4];
    for k in 0..4 {
        for l in 0..4 {
            if k != l {
                g[k][l] = r.rate(l, k);
                g[k][k] -= r.rate(k, l);
            }
        }
    }
    g
}

/// True when following `parent` from every node reaches `root`.
fn is_in_tree(parent: &[usize; 4], root: usize) -> bool {
    (0..4).all(|start| {
        let mut node = start;
        for _ in 0..4 {
            if node == root {
                return true;
            }
            node = parent[node];
        }
        node == root
    })
}

/// Steady-state populations of the rate equations.
///
/// Uses the Markov chain tree theorem: `n_k` is proportional to the summed
/// weight of all spanning trees directed into `k`. Every term is a product
/// of nonnegative rates, so there is no cancellation.
pub fn ness_populations(r: &RateMatrix) -> Result<Populations> {
    for k in 0..4 {
        for l in 0..4 {
            let x = r.rate(k, l);
            if !x.is_finite() || (k != l && x < 0.0) {
                return Err(Error::Precondition(alloc::format!(
                    "rate {k}→{l} is {x}, expected finite and nonnegative"
                )));
            }
        }
    }
    let mut weights = [0.0; 4];
    for (root, w) in weights.iter_mut().enumerate() {
        let others: Vec<usize> = (0..4).filter(|&i| i != root).collect();
        let mut parent = [root; 4];
        for code in 0..27usize {
            let mut c = code;
            for &i in &others {
                let choice = c % 3;
                c /= 3;
                let targets: Vec<usize> = (0..4).filter(|&t| t != i).collect();
                parent[i] = targets[choice];
            }
            if !is_in_tree(&parent, root) {
                continue;
            }
            *w += others.iter().map(|&i| r.rate(i, parent[i])).product::<f64>();
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateNullSpace(
            "rate graph has more than one closed class".into(),
        ));
    }
    Ok(Populations {
        n: weights.map(|w| w / total),
    })
}

/// `‖G n‖∞` for the rate-equation generator.
pub fn population_residual(r: &RateMatrix, n: &Populations) -> f64 {
    let g = population_generator(r);
    g.iter().fold(0.0_f64, |m, row| {
        let s: f64 = row.iter().zip(&n.n).map(|(a, b)| a * b).sum();
        m.max(libm::fabs(s))
    })
}

/// Lindblad generator `−i[H, ·] + Σ rate·D[X]` for square `H` and jump operators `X`.
pub fn lindblad_superoperator(h: &CMatrix, jumps: &[(f64, CMatrix)]) -> CMatrix {
    let n = h.rows();
    let id = CMatrix::identity(n);
    let minus_i = C64::new(0.0, -1.0);
    let mut l = h.kron(&id).sub(&id.kron(&h.transpose())).scale(minus_i);
    for (rate, x) in jumps {
        if *rate == 0.0 {
            continue;
        }
        let xdx = x.adjoint().matmul(x);
        let mut d = x.kron(&x.conj());
        d.add_scaled_assign(&xdx.kron(&id), C64::new(-0.5, 0.0));
        d.add_scaled_assign(&id.kron(&xdx.transpose()), C64::new(-0.5, 0.0));
        l.add_scaled_assign(&d, C64::new(*rate, 0.0));
    }
    l
}

/// Secular master-equation generator over the labeled eigenbasis.
pub fn secular_liouvillian(spec: &Spectrum, r: &RateMatrix) -> CMatrix {
    let h = CMatrix::diag_real(&spec.energies);
    let mut jumps = Vec::with_capacity(16);
    for k in 0..4 {
        for l in 0..4 {
            let rate = r.rate(k, l);
            if rate != 0.0 {
                let x = CMatrix::from_fn(4, 4, |a, b| {
                    if a == l && b == k {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                jumps.push((rate, x));
            }
        }
    }
    lindblad_superoperator(&h, &jumps)
}

/// Apply a superoperator to a density matrix.
pub fn apply_superoperator(l: &CMatrix, rho: &CMatrix) -> CMatrix {
    let n = rho.rows();
    CMatrix::from_vec(n, n, l.matvec(rho.as_slice()))
}

/// Largest `|Tr L[E_ab]|` over matrix units, i.e. deviation from trace preservation.
pub fn trace_defect(l: &CMatrix) -> f64 {
    let d = l.rows();
    let n = libm::round(libm::sqrt(d as f64)) as usize;
    let mut worst = 0.0_f64;
    for col in 0..d {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            s += l[(i * n + i, col)];
        }
        worst = worst.max(s.norm());
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvillianNess {
    pub rho: DensityMatrix,
    /// `‖L vec(ρ)‖₂`.
    pub residual: f64,
    /// Singular values in ascending order.
    pub singular_values: Vec<f64>,
}

/// Steady state from the null space of a 16×16 generator.
pub fn liouvillian_ness(l: &CMatrix) -> Result<LiouvillianNess> {
    if l.rows() != 16 || !l.is_square() {
        return Err(Error::Precondition("expected a 16×16 superoperator".into()));
    }
    let scale = l.max_abs();
    if trace_defect(l) > 1e-10 * scale.max(1e-300) {
        return Err(Error::Precondition("superoperator is not trace preserving".into()));
    }
    let svd = jacobi_svd(l)?;
    let smax = *svd.values.last().unwrap_or(&0.0);
    if !(smax > 0.0) {
        return Err(Error::DegenerateNullSpace("zero superoperator".into()));
    }
    if svd.values[0] >= NULL_SINGULAR_TOL * smax || svd.values[1] <= NULL_GAP_TOL * smax {
        return Err(Error::DegenerateNullSpace(alloc::format!(
            "singular values {:e}, {:e} relative to {:e}",
            svd.values[0],
            svd.values[1],
            smax
        )));
    }
    let v = svd.right.column(0);
    let raw = CMatrix::from_vec(4, 4, v);
    let herm = raw.add(&raw.adjoint()).scale(C64::new(0.5, 0.0));
    let tr = herm.trace().re;
    if tr.abs() < 1e-300 {
        return Err(Error::DegenerateNullSpace("null vector is traceless".into()));
    }
    let rho = herm.scale(C64::new(1.0 / tr, 0.0));
    let dm = DensityMatrix::from_raw(rho);
    let min = dm.min_eigenvalue()?;
    if min < -NEGATIVITY_TOL {
        return Err(Error::Negativity(min));
    }
    let res = l.matvec(dm.rho.as_slice());
    let residual = libm::sqrt(res.iter().map(|z| z.norm_sqr()).sum());
    Ok(LiouvillianNess {
        rho: dm,
        residual,
        singular_values: svd.values,
    })
}

/// Markovian evolution `ρ(t) = exp(L t) ρ₀`.
///
/// The secular generator is Markovian by construction, so transients are
/// approximate; the long-time limit is exact.
pub fn evolve(rho0: &DensityMatrix, l: &CMatrix, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Precondition(alloc::format!("evolution time must be ≥ 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let prop = expm(&l.scale(C64::new(t, 0.0)));
    Ok(DensityMatrix::from_raw(apply_superoperator(&prop, &rho0.rho)))
}

/// Steady-state photon numbers of the fluctuation modes.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PhotonOccupations {
    /// `⟨d†d⟩`, asymmetric mode.
    pub n_d: f64,
    /// `⟨D†D⟩`, symmetric mode.
    pub n_big_d: f64,
}

/// Photon production rates into `d` and `D` divided by κ.
pub fn photon_occupations(n: &Populations, r: &RateMatrix, p: &DimerParams) -> PhotonOccupations {
    let (tm, t0, s, tp) = (0, 1, 2, 3);
    let n_d = (n.n[tm] * r.asymmetric[tm][s] + n.n[s] * r.asymmetric[s][tp]) / p.kappa;
    let n_big_d = (n.n[tm] * r.symmetric[tm][t0] + n.n[t0] * r.symmetric[t0][tp]) / p.kappa;
    PhotonOccupations { n_d, n_big_d }
}

/// Occupations at time `t` for fixed populations, from `dn/dt = source − κ n`.
pub fn photon_occupations_at(
    n: &Populations,
    r: &RateMatrix,
    p: &DimerParams,
    initial: PhotonOccupations,
    t: f64,
) -> PhotonOccupations {
    let ss = photon_occupations(n, r, p);
    let decay = libm::exp(-p.kappa * t);
    PhotonOccupations {
        n_d: ss.n_d + (initial.n_d - ss.n_d) * decay,
        n_big_d: ss.n_big_d + (initial.n_big_d - ss.n_big_d) * decay,
    }
}

/// `⟨k̃|ρ|k̃⟩` for the labeled (dressed) state.
pub fn fidelity(rho: &DensityMatrix, target: QubitState) -> f64 {
    let k = target.index();
    rho.rho[(k, k)].re
}

/// `⟨k|ρ|k⟩` for the bare singlet-triplet state.
pub fn fidelity_bare(rho: &DensityMatrix, target: QubitState, spec: &Spectrum) -> f64 {
    let k = target.index();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            let ua = spec.states[a][k];
            let ub = spec.states[b][k];
            acc += ua * rho.rho[(a, b)] * ub.conj();
        }
    }
    acc.re
}

/// Bare-basis populations `⟨k|ρ|k⟩` for all four states.
pub fn bare_populations(rho: &DensityMatrix, spec: &Spectrum) -> Populations {
    Populations {
        n: QubitState::ALL.map(|s| fidelity_bare(rho, s, spec)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NessMethod {
    /// Rate equations only; coherences vanish in the secular steady state.
    Populations,
    /// Null space of the full 16×16 secular generator.
    Liouvillian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NessDiagnostics {
    /// Γ^d_{T̃−→S}.
    pub rate_tm_s: f64,
    /// Γ^d_{S→T̃+}.
    pub rate_s_tp: f64,
    /// Γ^d_{T̃−→T̃0}.
    pub rate_tm_t0: f64,
    /// Γ^d_{T̃0→T̃+}.
    pub rate_t0_tp: f64,
    pub gamma: f64,
    pub population_residual: f64,
    pub liouvillian_residual: Option<f64>,
}

impl NessDiagnostics {
    /// Pump and leak rates for the given protocol.
    pub fn pump_leak(&self, target: ProtocolTarget) -> (f64, f64) {
        match target {
            ProtocolTarget::Singlet => (self.rate_tm_s, self.rate_s_tp),
            ProtocolTarget::Triplet0 => (self.rate_tm_t0, self.rate_t0_tp),
        }
    }

    /// `leak < γ < pump`.
    pub fn hierarchy_ok(&self, target: ProtocolTarget) -> bool {
        let (pump, leak) = self.pump_leak(target);
        leak < self.gamma && self.gamma < pump
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NessSolution {
    pub populations: Populations,
    pub rho: DensityMatrix,
    pub n_d: f64,
    pub n_big_d: f64,
    /// Bare singlet fidelity; the singlet is never dressed.
    pub fidelity_singlet: f64,
    pub fidelity_triplet0: f64,
    pub fidelity_triplet0_dressed: f64,
    pub diagnostics: NessDiagnostics,
}

pub fn solve_ness(
    spec: &Spectrum,
    r: &RateMatrix,
    p: &DimerParams,
    method: NessMethod,
) -> Result<NessSolution> {
    let pops = ness_populations(r)?;
    let (rho, liouvillian_residual) = match method {
        NessMethod::Populations => (DensityMatrix::diagonal(&pops), None),
        NessMethod::Liouvillian => {
            let sol = liouvillian_ness(&secular_liouvillian(spec, r))?;
            (sol.rho, Some(sol.residual))
        }
    };
    let populations = match method {
        NessMethod::Populations => pops,
        NessMethod::Liouvillian => rho.populations(),
    };
    let occ = photon_occupations(&populations, r, p);
    let (tm, t0, s, tp) = (0, 1, 2, 3);
    let diagnostics = NessDiagnostics {
        rate_tm_s: r.fluctuation(tm, s),
        rate_s_tp: r.fluctuation(s, tp),
        rate_tm_t0: r.fluctuation(tm, t0),
        rate_t0_tp: r.fluctuation(t0, tp),
        gamma: p.gamma,
        population_residual: population_residual(r, &populations),
        liouvillian_residual,
    };
    Ok(NessSolution {
        fidelity_singlet: fidelity_bare(&rho, QubitState::S, spec),
        fidelity_triplet0: fidelity_bare(&rho, QubitState::T0, spec),
        fidelity_triplet0_dressed: fidelity(&rho, QubitState::T0),
        populations,
        rho,
        n_d: occ.n_d,
        n_big_d: occ.n_big_d,
        diagnostics,
    })
}
