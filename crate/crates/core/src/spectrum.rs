//! The effective two-qubit Hamiltonian H̃_σ, its exact and perturbative
//! eigensystems, and Lamb-shift renormalization of the levels.
//!
//! All vectors are expressed in the bare singlet-triplet basis ordered
//! `{T_−, T_0, S, T_+}`.

use core::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::linalg::{hermitian_eigen, CMatrix, C64};
use crate::model::{DimerParams, DriveParams, EffectiveParams};
use crate::rates::{greens_retarded, LambdaPair, PhotonMode};
use crate::{Error, Result};

/// Two-qubit eigenstate label, with the fixed matrix index order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QubitState {
    Tminus = 0,
    T0 = 1,
    S = 2,
    Tplus = 3,
}

impl QubitState {
    pub const ALL: [QubitState; 4] = [
        QubitState::Tminus,
        QubitState::T0,
        QubitState::S,
        QubitState::Tplus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            QubitState::Tminus => "Tminus",
            QubitState::T0 => "T0",
            QubitState::S => "S",
            QubitState::Tplus => "Tplus",
        }
    }

    /// The bare state as a vector in the ordered singlet-triplet basis.
    pub fn bare_vector(self) -> [C64; 4] {
        let mut v = [C64::new(0.0, 0.0); 4];
        v[self.index()] = C64::new(1.0, 0.0);
        v
    }
}

/// Labeled eigensystem of H̃_σ. Arrays are indexed by [`QubitState::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Rotating-frame eigenenergies.
    pub energies: [f64; 4],
    /// Eigenvectors in the bare basis.
    pub states: [[C64; 4]; 4],
    pub lamb_shifted: bool,
}

impl Spectrum {
    pub fn energy(&self, s: QubitState) -> f64 {
        self.energies[s.index()]
    }

    pub fn state(&self, s: QubitState) -> &[C64; 4] {
        &self.states[s.index()]
    }

    /// Unitary whose column `k` is the eigenvector labeled `k`.
    pub fn basis_matrix(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, k| self.states[k][i])
    }

    /// `|⟨bare|labeled⟩|²`.
    pub fn overlap_sqr(&self, bare: QubitState, labeled: QubitState) -> f64 {
        self.states[labeled.index()][bare.index()].norm_sqr()
    }
}

/// H̃_σ = Σᵢ h·σᵢ/2 − (J_eff/2)(σ₁ˣσ₂ˣ + σ₁ʸσ₂ʸ) with h = (Ω_R, 0, Δ_q).
pub fn build_h_eff(e: &EffectiveParams) -> CMatrix {
    let off = e.omega_rabi / SQRT_2;
    #[rustfmt::skip]
    let h = [
        -e.delta_q, off,      0.0,     0.0,
        off,        -e.j_eff, 0.0,     off,
        0.0,        0.0,      e.j_eff, 0.0,
        0.0,        off,      0.0,     e.delta_q,
    ];
    CMatrix::from_real(4, 4, &h)
}

/// Exact diagonalization with labels assigned by maximal bare-state overlap.
pub fn eigensystem(h: &CMatrix) -> Result<Spectrum> {
    if h.rows() != 4 || !h.is_square() {
        return Err(Error::Precondition("H̃_σ must be 4×4".into()));
    }
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    if h.hermiticity_error() > 1e-12 * scale.max(1.0) {
        return Err(Error::Precondition("H̃_σ is not Hermitian".into()));
    }
    let eig = hermitian_eigen(h)?;
    let mut energies = [0.0; 4];
    let mut states = [[C64::new(0.0, 0.0); 4]; 4];
    let mut taken = [false; 4];
    for col in 0..4 {
        let v = eig.vectors.column(col);
        let (best, mag) = v
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag < FRAC_1_SQRT_2 || taken[best] {
            return Err(Error::LabelingAmbiguity { overlap: mag });
        }
        taken[best] = true;
        let phase = v[best].conj() / mag;
        let mut fixed = [C64::new(0.0, 0.0); 4];
        for (f, z) in fixed.iter_mut().zip(&v) {
            *f = z * phase;
        }
        fixed[best] = C64::new(fixed[best].norm(), 0.0);
        energies[best] = eig.values[col];
        states[best] = fixed;
    }
    Ok(Spectrum {
        energies,
        states,
        lamb_shifted: false,
    })
}

/// Second-order perturbative eigensystem in Ω_R/Δ_q.
pub fn perturbative_spectrum(e: &EffectiveParams) -> Result<Spectrum> {
    let ratio = e.omega_rabi / e.delta_q;
    if !(libm::fabs(ratio) < 1.0) {
        return Err(Error::Precondition(alloc::format!(
            "perturbative spectrum needs |Ω_R/Δ_q| < 1, got {ratio}"
        )));
    }
    let mix = e.omega_rabi / (SQRT_2 * e.delta_q);
    let shift = e.omega_rabi * e.omega_rabi / (2.0 * e.delta_q);
    let r = |x: f64| C64::new(x, 0.0);
    let raw: [[C64; 4]; 4] = [
        [r(1.0), r(-mix), r(0.0), r(0.0)],
        [r(mix), r(1.0), r(0.0), r(-mix)],
        [r(0.0), r(0.0), r(1.0), r(0.0)],
        [r(0.0), r(mix), r(0.0), r(1.0)],
    ];
    let states = raw.map(|v| {
        let norm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
        v.map(|z| z / norm)
    });
    Ok(Spectrum {
        energies: [
            -(e.delta_q + shift),
            -e.j_eff,
            e.j_eff,
            e.delta_q + shift,
        ],
        states,
        lamb_shifted: false,
    })
}

fn lamb_shifts(
    energies: &[f64; 4],
    lams: &LambdaPair,
    p: &DimerParams,
    d: &DriveParams,
) -> [f64; 4] {
    let mut shifts = [0.0; 4];
    for (k, shift) in shifts.iter_mut().enumerate() {
        for l in 0..4 {
            let arg = energies[k] - energies[l] + d.omega_d;
            let sym = lams.symmetric[k][l].norm_sqr();
            let asym = lams.asymmetric[k][l].norm_sqr();
            if sym != 0.0 {
                *shift += sym * greens_retarded(arg, PhotonMode::Symmetric, p).re;
            }
            if asym != 0.0 {
                *shift += asym * greens_retarded(arg, PhotonMode::Asymmetric, p).re;
            }
        }
    }
    shifts
}

/// Single-pass Lamb shift: the right-hand side uses the unshifted energies.
pub fn lamb_shift(
    spec: &Spectrum,
    lams: &LambdaPair,
    p: &DimerParams,
    d: &DriveParams,
) -> Result<Spectrum> {
    if spec.lamb_shifted {
        return Err(Error::Precondition("spectrum is already Lamb shifted".into()));
    }
    let shifts = lamb_shifts(&spec.energies, lams, p, d);
    let mut out = spec.clone();
    for (e, s) in out.energies.iter_mut().zip(shifts) {
        *e += s;
    }
    out.lamb_shifted = true;
    Ok(out)
}

/// Fixed-point iteration `E = E₀ + shift(E)`.
pub fn lamb_shift_self_consistent(
    spec: &Spectrum,
    lams: &LambdaPair,
    p: &DimerParams,
    d: &DriveParams,
    max_iter: usize,
    rel_tol: f64,
) -> Result<Spectrum> {
    if spec.lamb_shifted {
        return Err(Error::Precondition("spectrum is already Lamb shifted".into()));
    }
    let bare = spec.energies;
    let mut current = bare;
    for _ in 0..max_iter {
        let shifts = lamb_shifts(&current, lams, p, d);
        let mut next = bare;
        for (n, s) in next.iter_mut().zip(shifts) {
            *n += s;
        }
        let scale = next.iter().fold(0.0_f64, |m, x| m.max(libm::fabs(*x)));
        let change = next
            .iter()
            .zip(&current)
            .fold(0.0_f64, |m, (a, b)| m.max(libm::fabs(a - b)));
        current = next;
        if change <= rel_tol * scale {
            let mut out = spec.clone();
            out.energies = current;
            out.lamb_shifted = true;
            return Ok(out);
        }
    }
    Err(Error::NoConvergence("self-consistent Lamb shift".into()))
}

/// Convenience: exact labeled spectrum straight from effective parameters.
pub fn exact_spectrum(e: &EffectiveParams) -> Result<Spectrum> {
    eigensystem(&build_h_eff(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derived_params;
    use crate::rates::lambda_matrices;
    use crate::DimerParams;

    fn effective(eps: f64, wd: f64) -> EffectiveParams {
        derived_params(&DimerParams::TABLE_I, &DriveParams::new(eps, wd).unwrap()).unwrap()
    }

    fn synthetic(omega_rabi: f64, delta_q: f64, j_eff: f64) -> EffectiveParams {
        let mut e = effective(0.0, 6.5);
        e.omega_rabi = omega_rabi;
        e.delta_q = delta_q;
        e.j_eff = j_eff;
        e
    }

    /// σ operators on the product basis |q1 q2⟩ with index 2·q1 + q2, q = 1 ↔ ↑.
    fn product_basis_h(omega_rabi: f64, delta_q: f64, j_eff: f64) -> CMatrix {
        let c = |re: f64, im: f64| C64::new(re, im);
        let sx = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sy = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        // basis order (↓, ↑): σᶻ = diag(−1, 1)
        let sz = CMatrix::diag_real(&[-1.0, 1.0]);
        let id = CMatrix::identity(2);
        let single = sx.scale(c(omega_rabi / 2.0, 0.0)).add(&sz.scale(c(delta_q / 2.0, 0.0)));
        let field = single.kron(&id).add(&id.kron(&single));
        let xy = sx.kron(&sx).add(&sy.kron(&sy));
        field.sub(&xy.scale(c(j_eff / 2.0, 0.0)))
    }

    fn singlet_triplet_basis() -> CMatrix {
        // product index: 0=↓↓, 1=↓↑, 2=↑↓, 3=↑↑ ; columns T−, T0, S, T+
        let s = FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let b = [
            1.0, 0.0, 0.0, 0.0,
            0.0, s,   -s,  0.0,
            0.0, s,   s,   0.0,
            0.0, 0.0, 0.0, 1.0,
        ];
        CMatrix::from_real(4, 4, &b)
    }

    #[test]
    fn undriven_hamiltonian_is_diagonal() {
        let e = effective(0.0, 6.5);
        let h = build_h_eff(&e);
        let expect = CMatrix::diag_real(&[-e.delta_q, -e.j_eff, e.j_eff, e.delta_q]);
        assert_eq!(h, expect);
    }

    #[test]
    fn singlet_entry_is_exchange_energy() {
        for eps in [0.0, 0.05, 0.12] {
            let h = build_h_eff(&effective(eps, 6.5555));
            assert!((h[(2, 2)].re - 1e-3).abs() < 1e-18);
            for k in [0, 1, 3] {
                assert_eq!(h[(2, k)], C64::new(0.0, 0.0));
                assert_eq!(h[(k, 2)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn matches_product_basis_construction() {
        let (om, dq, j) = (0.02, 0.5, 1e-3);
        let b = singlet_triplet_basis();
        let brute = b.adjoint().matmul(&product_basis_h(om, dq, j)).matmul(&b);
        let h = build_h_eff(&synthetic(om, dq, j));
        assert!(brute.sub(&h).max_abs() < 1e-16);
        assert!((h[(3, 1)].re - 0.0141421).abs() < 1e-7);
    }

    #[test]
    fn diagonal_input_labels_in_order() {
        let h = CMatrix::diag_real(&[-0.5, -1e-3, 1e-3, 0.5]);
        let s = eigensystem(&h).unwrap();
        assert_eq!(s.energies, [-0.5, -1e-3, 1e-3, 0.5]);
        for k in QubitState::ALL {
            assert_eq!(*s.state(k), k.bare_vector());
        }
    }

    #[test]
    fn exact_close_to_perturbative() {
        let e = effective(0.05, 6.5555);
        let exact = exact_spectrum(&e).unwrap();
        let pert = perturbative_spectrum(&e).unwrap();
        let x = e.omega_rabi / e.delta_q;
        for k in QubitState::ALL {
            let diff = (exact.energy(k) - pert.energy(k)).abs();
            assert!(diff <= x * x * e.delta_q.abs(), "{k:?}: {diff}");
        }
    }

    #[test]
    fn strong_mixing_is_ambiguous() {
        let h = build_h_eff(&synthetic(5.0, 0.5, 1e-3));
        assert!(matches!(eigensystem(&h), Err(Error::LabelingAmbiguity { .. })));
    }

    #[test]
    fn perturbative_mixing_amplitude() {
        let s = perturbative_spectrum(&synthetic(0.02, 0.5, 1e-3)).unwrap();
        let raw = 0.02 / (SQRT_2 * 0.5);
        assert!((raw - 0.0282843).abs() < 1e-7);
        let tp = s.state(QubitState::Tplus);
        assert!((tp[1].re / tp[3].re - raw).abs() < 1e-15);
        let e = effective(0.0, 6.5);
        let s0 = perturbative_spectrum(&e).unwrap();
        for (a, b) in s0.energies.iter().zip([-e.delta_q, -1e-3, 1e-3, e.delta_q]) {
            assert!((a - b).abs() < 1e-18);
        }
        let s1 = perturbative_spectrum(&effective(0.07, 6.5555)).unwrap();
        assert!((s1.energy(QubitState::S) - s1.energy(QubitState::T0) - 2e-3).abs() < 1e-16);
    }

    #[test]
    fn perturbative_requires_weak_mixing() {
        assert!(perturbative_spectrum(&synthetic(0.6, 0.5, 1e-3)).is_err());
    }

    #[test]
    fn lamb_shift_vanishes_without_drive() {
        let e = effective(0.0, 6.5);
        let spec = exact_spectrum(&e).unwrap();
        let lams = lambda_matrices(&e);
        let d = DriveParams::new(0.0, 6.5).unwrap();
        let shifted = lamb_shift(&spec, &lams, &DimerParams::TABLE_I, &d).unwrap();
        assert_eq!(shifted.energies, spec.energies);
        assert!(shifted.lamb_shifted);
        assert!(lamb_shift(&shifted, &lams, &DimerParams::TABLE_I, &d).is_err());
    }

    #[test]
    fn on_resonance_term_has_no_real_part() {
        let p = DimerParams::TABLE_I;
        let mut lams = LambdaPair::zero();
        lams.asymmetric[0][2] = C64::new(1e-4, 0.0); // |Λ|² = 1e-8
        let spec = Spectrum {
            energies: [-0.45, -1e-3, 1e-3, 0.45],
            states: QubitState::ALL.map(QubitState::bare_vector),
            lamb_shifted: false,
        };
        // E_T− − E_S + ω_d = ω_c^+ exactly
        let wd = p.omega_c_plus() + 0.451;
        let shifted = lamb_shift(&spec, &lams, &p, &DriveParams::new(0.01, wd).unwrap()).unwrap();
        assert!((shifted.energies[0] - spec.energies[0]).abs() < 1e-20);
    }

    #[test]
    fn self_consistent_is_a_fixed_point() {
        let p = DimerParams::TABLE_I;
        let d = DriveParams::new(0.1, 6.5561).unwrap();
        let e = derived_params(&p, &d).unwrap();
        let spec = exact_spectrum(&e).unwrap();
        let lams = lambda_matrices(&e);
        let sc = lamb_shift_self_consistent(&spec, &lams, &p, &d, 50, 1e-12).unwrap();
        let again = lamb_shifts(&sc.energies, &lams, &p, &d);
        for k in 0..4 {
            assert!((spec.energies[k] + again[k] - sc.energies[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn self_consistent_matches_single_pass_off_resonance() {
        let p = DimerParams::TABLE_I;
        let d = DriveParams::new(0.1, 6.52).unwrap();
        let e = derived_params(&p, &d).unwrap();
        let spec = exact_spectrum(&e).unwrap();
        let lams = lambda_matrices(&e);
        let single = lamb_shift(&spec, &lams, &p, &d).unwrap();
        let sc = lamb_shift_self_consistent(&spec, &lams, &p, &d, 50, 1e-12).unwrap();
        for k in 0..4 {
            let shift = (single.energies[k] - spec.energies[k]).abs();
            assert!((single.energies[k] - sc.energies[k]).abs() <= 1e-3 * shift + 1e-15);
        }
    }

    /// Term-by-term re-evaluation with the Green's function written out.
    #[test]
    fn lamb_shift_matches_direct_sum() {
        let p = DimerParams::TABLE_I;
        let d = DriveParams::new(0.05, 6.5556).unwrap();
        let e = derived_params(&p, &d).unwrap();
        let spec = exact_spectrum(&e).unwrap();
        let lams = lambda_matrices(&e);
        let shifted = lamb_shift(&spec, &lams, &p, &d).unwrap();
        let re_g = |w: f64, w0: f64| (w - w0) / ((w - w0) * (w - w0) + p.kappa * p.kappa / 4.0);
        for k in 0..4 {
            let mut acc = 0.0;
            for l in 0..4 {
                let w = spec.energies[k] - spec.energies[l] + d.omega_d;
                acc += lams.symmetric[k][l].norm_sqr() * re_g(w, p.omega_c - p.j);
                acc += lams.asymmetric[k][l].norm_sqr() * re_g(w, p.omega_c + p.j);
            }
            let got = shifted.energies[k] - spec.energies[k];
            assert!((got - acc).abs() <= 1e-9 * acc.abs() + 1e-18, "{k}: {got} {acc}");
        }
    }

}
