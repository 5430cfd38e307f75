//! Photon Green's functions, coupling matrices Λ and golden-rule rates.

use core::f64::consts::PI;

use crate::linalg::C64;
use crate::model::{DimerParams, DriveParams, EffectiveParams};
use crate::spectrum::Spectrum;

/// Normal mode of the coupled-cavity pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhotonMode {
    /// `D`, frequency ω_c^− = ω_c − J.
    Symmetric,
    /// `d`, frequency ω_c^+ = ω_c + J.
    Asymmetric,
}

impl PhotonMode {
    pub fn frequency(self, p: &DimerParams) -> f64 {
        match self {
            PhotonMode::Symmetric => p.omega_c_minus(),
            PhotonMode::Asymmetric => p.omega_c_plus(),
        }
    }
}

/// G^R(ω) = 1/(ω − ω_mode + iκ/2).
pub fn greens_retarded(omega: f64, mode: PhotonMode, p: &DimerParams) -> C64 {
    let x = omega - mode.frequency(p);
    let h = p.kappa / 2.0;
    let den = x * x + h * h;
    C64::new(x / den, -h / den)
}

/// Lorentzian density of states, −Im G^R/π.
pub fn dos(omega: f64, mode: PhotonMode, p: &DimerParams) -> f64 {
    let x = omega - mode.frequency(p);
    let h = p.kappa / 2.0;
    h / (PI * (x * x + h * h))
}

/// Coupling matrices in label order. `symmetric` couples to `D`, `asymmetric` to `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPair {
    pub symmetric: [[C64; 4]; 4],
    pub asymmetric: [[C64; 4]; 4],
}

impl LambdaPair {
    pub fn zero() -> Self {
        let z = [[C64::new(0.0, 0.0); 4]; 4];
        LambdaPair {
            symmetric: z,
            asymmetric: z,
        }
    }

    pub fn for_mode(&self, mode: PhotonMode) -> &[[C64; 4]; 4] {
        match mode {
            PhotonMode::Symmetric => &self.symmetric,
            PhotonMode::Asymmetric => &self.asymmetric,
        }
    }
}

pub fn lambda_matrices(e: &EffectiveParams) -> LambdaPair {
    let l = e.lambda;
    let la = e.lambda * e.alpha;
    let z = C64::new(0.0, 0.0);
    LambdaPair {
        symmetric: [[l, la, z, z], [la, z, z, la], [z, z, z, z], [z, la, z, l]],
        asymmetric: [[z, z, la, z], [z, z, l, z], [la, l, z, la], [z, z, la, z]],
    }
}

/// Γ_{k→l} as `[k][l]`, split into its physical origins.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RateMatrix {
    /// Qubit decay and dephasing.
    pub bath: [[f64; 4]; 4],
    /// Fluctuation-mediated part through the symmetric mode.
    pub symmetric: [[f64; 4]; 4],
    /// Fluctuation-mediated part through the asymmetric mode.
    pub asymmetric: [[f64; 4]; 4],
}

impl RateMatrix {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rate(&self, k: usize, l: usize) -> f64 {
        self.bath[k][l] + self.symmetric[k][l] + self.asymmetric[k][l]
    }

    pub fn fluctuation(&self, k: usize, l: usize) -> f64 {
        self.symmetric[k][l] + self.asymmetric[k][l]
    }

    pub fn total(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (k, row) in out.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                *x = self.rate(k, l);
            }
        }
        out
    }

    pub fn fluctuation_total(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (k, row) in out.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                *x = self.fluctuation(k, l);
            }
        }
        out
    }

    /// Largest off-diagonal total rate.
    pub fn max_transfer_rate(&self) -> f64 {
        let mut m = 0.0_f64;
        for k in 0..4 {
            for l in 0..4 {
                if k != l {
                    m = m.max(self.rate(k, l));
                }
            }
        }
        m
    }
}

pub fn bath_rates(p: &DimerParams) -> RateMatrix {
    let (g, gp) = (p.gamma, p.gamma_phi);
    RateMatrix {
        bath: [
            [gp, 0.0, 0.0, 0.0],
            [g, 0.0, gp, 0.0],
            [g, gp, 0.0, 0.0],
            [0.0, g, g, gp],
        ],
        ..RateMatrix::zero()
    }
}

pub fn fluctuation_rates(
    spec: &Spectrum,
    lams: &LambdaPair,
    d: &DriveParams,
    p: &DimerParams,
) -> RateMatrix {
    let mut r = RateMatrix::zero();
    for k in 0..4 {
        for l in 0..4 {
            let arg = spec.energies[k] - spec.energies[l] + d.omega_d;
            let sym = lams.symmetric[k][l].norm_sqr();
            let asym = lams.asymmetric[k][l].norm_sqr();
            if sym != 0.0 {
                r.symmetric[k][l] = 2.0 * PI * sym * dos(arg, PhotonMode::Symmetric, p);
            }
            if asym != 0.0 {
                r.asymmetric[k][l] = 2.0 * PI * asym * dos(arg, PhotonMode::Asymmetric, p);
            }
        }
    }
    r
}

/// Elementwise sum, keeping each part.
pub fn total_rates(b: &RateMatrix, f: &RateMatrix) -> RateMatrix {
    let mut out = RateMatrix::zero();
    for k in 0..4 {
        for l in 0..4 {
            out.bath[k][l] = b.bath[k][l] + f.bath[k][l];
            out.symmetric[k][l] = b.symmetric[k][l] + f.symmetric[k][l];
            out.asymmetric[k][l] = b.asymmetric[k][l] + f.asymmetric[k][l];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::model::derived_params;
    use crate::spectrum::{build_h_eff, eigensystem, perturbative_spectrum, QubitState};
    use core::f64::consts::FRAC_1_SQRT_2;

    const P: DimerParams = DimerParams::TABLE_I;

    #[test]
    fn on_resonance_green_function() {
        let g = greens_retarded(P.omega_c_plus(), PhotonMode::Asymmetric, &P);
        assert!((g - C64::new(0.0, -2.0 / P.kappa)).norm() < 1e-9);
        let peak = dos(P.omega_c_plus(), PhotonMode::Asymmetric, &P);
        assert!((peak - 2.0 / (PI * P.kappa)).abs() < 1e-9);
        assert!((peak - 6366.2).abs() < 0.05);
        for s in [-1.0, 1.0] {
            let half = dos(P.omega_c_plus() + s * P.kappa / 2.0, PhotonMode::Asymmetric, &P);
            assert!((half / peak - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn dos_is_minus_imaginary_green_over_pi() {
        for w in [5.8, 5.9, 5.90003, 6.1, 6.4] {
            for m in [PhotonMode::Symmetric, PhotonMode::Asymmetric] {
                let a = dos(w, m, &P);
                let b = -greens_retarded(w, m, &P).im / PI;
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn undriven_lambdas_vanish() {
        let e = derived_params(&P, &DriveParams::new(0.0, 6.5).unwrap()).unwrap();
        assert_eq!(lambda_matrices(&e), LambdaPair::zero());
    }

    #[test]
    fn lambda_pattern_values() {
        let mut e = derived_params(&P, &DriveParams::new(0.0, 6.5).unwrap()).unwrap();
        e.lambda = C64::new(1e-4, 0.0);
        e.alpha = 0.03;
        let l = lambda_matrices(&e);
        assert!((l.asymmetric[2][1].re - 1e-4).abs() < 1e-20);
        assert!((l.asymmetric[2][0].re - 3e-6).abs() < 1e-20);
    }

    /// ⟨k̃|(σ₁ᶻ ± σ₂ᶻ)/2|l̃⟩ scaled by λ in the perturbative eigenbasis.
    #[test]
    fn lambda_pattern_matches_operator_elements() {
        let d = DriveParams::new(0.05, 6.5555).unwrap();
        let e = derived_params(&P, &d).unwrap();
        let spec = perturbative_spectrum(&e).unwrap();
        let s = FRAC_1_SQRT_2;
        // bare singlet-triplet basis expressed in the product basis ↓↓, ↓↑, ↑↓, ↑↑
        #[rustfmt::skip]
        let st = CMatrix::from_real(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, s,   -s,  0.0,
            0.0, s,   s,   0.0,
            0.0, 0.0, 0.0, 1.0,
        ]);
        let z1 = CMatrix::diag_real(&[-1.0, -1.0, 1.0, 1.0]);
        let z2 = CMatrix::diag_real(&[-1.0, 1.0, -1.0, 1.0]);
        let half = C64::new(0.5, 0.0);
        let plus = st.adjoint().matmul(&z1.add(&z2).scale(half)).matmul(&st);
        let minus = st.adjoint().matmul(&z1.sub(&z2).scale(half)).matmul(&st);
        let u = spec.basis_matrix();
        let plus_d = u.adjoint().matmul(&plus).matmul(&u);
        let minus_d = u.adjoint().matmul(&minus).matmul(&u);
        let lams = lambda_matrices(&e);
        let lam = e.lambda.norm();
        let tol = lam * e.alpha * e.alpha * 4.0;
        for k in 0..4 {
            for l in 0..4 {
                let a = lams.symmetric[k][l].norm();
                let b = lam * plus_d[(k, l)].norm();
                assert!((a - b).abs() <= tol, "D {k}{l}: {a} vs {b}");
                let a = lams.asymmetric[k][l].norm();
                let b = lam * minus_d[(k, l)].norm();
                assert!((a - b).abs() <= tol, "d {k}{l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn bath_rates_entries() {
        let b = bath_rates(&P);
        assert_eq!(b.rate(1, 0), 1e-5);
        assert_eq!(b.rate(2, 0), 1e-5);
        assert_eq!(b.rate(3, 1), 1e-5);
        assert_eq!(b.rate(3, 2), 1e-5);
        assert_eq!(b.rate(1, 2), 1e-6);
        assert_eq!(b.rate(2, 1), 1e-6);
        assert_eq!(b.rate(0, 0), 1e-6);
        assert_eq!(b.rate(3, 3), 1e-6);
        let mut q = P;
        q.gamma_phi = 0.0;
        let nz: usize = bath_rates(&q).total().iter().flatten().filter(|x| **x != 0.0).count();
        assert_eq!(nz, 4);
    }

    #[test]
    fn total_rates_identities() {
        let b = bath_rates(&P);
        let z = RateMatrix::zero();
        assert_eq!(total_rates(&b, &z), b);
        assert_eq!(total_rates(&z, &b), b);
    }

    fn singlet_resonance_point(eps: f64) -> (Spectrum, RateMatrix, EffectiveParams) {
        // bisection on the resonance residual, kept local to this test
        let f = |wd: f64| {
            let e = derived_params(&P, &DriveParams::new(eps, wd).unwrap()).unwrap();
            let s = eigensystem(&build_h_eff(&e)).unwrap();
            wd - P.omega_c_plus() - (s.energy(QubitState::S) - s.energy(QubitState::Tminus))
        };
        let (mut lo, mut hi) = (6.45, 6.65);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let d = DriveParams::new(eps, 0.5 * (lo + hi)).unwrap();
        let e = derived_params(&P, &d).unwrap();
        let s = eigensystem(&build_h_eff(&e)).unwrap();
        let r = fluctuation_rates(&s, &lambda_matrices(&e), &d, &P);
        (s, r, e)
    }

    #[test]
    fn peak_rate_at_singlet_resonance() {
        let (_, r, e) = singlet_resonance_point(0.1);
        let la = (e.lambda * e.alpha).norm_sqr();
        let expect = 4.0 * la / P.kappa;
        assert!((r.asymmetric[0][2] - expect).abs() < 1e-6 * expect);
        let estimate = 400.0 * 1e-6 * 1e-4 / P.kappa;
        let ratio = r.asymmetric[0][2] / estimate;
        assert!(ratio > 0.5 && ratio < 2.0, "{ratio}");
    }

    #[test]
    fn symmetric_channel_is_detuned() {
        let (s, r, _) = singlet_resonance_point(0.1);
        let ratio = r.symmetric[0][1] / r.asymmetric[0][2];
        let det = 2.0 * P.j + s.energy(QubitState::S) - s.energy(QubitState::T0);
        let k2 = P.kappa * P.kappa / 4.0;
        let expect = k2 / (det * det + k2);
        assert!((ratio / expect - 1.0).abs() < 1e-3, "{ratio} {expect}");
        assert!(ratio > 5e-8 && ratio < 7e-8);
    }

    #[test]
    fn pumping_beats_singlet_decay() {
        let (_, r, _) = singlet_resonance_point(0.1);
        let t = total_rates(&bath_rates(&P), &r);
        assert!((t.rate(2, 0) - P.gamma).abs() < 1e-3 * P.gamma);
        assert!(t.rate(0, 2) / t.rate(2, 0) > 10.0);
    }
}
