//! Cooling protocols: resonant drive frequencies, the drive-strength window,
//! (ω_d, ε_d) sweeps and the dark-state counterexample.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::model::{derived_params_with_floor, DimerParams, DriveParams, EffectiveParams, HazardFloor};
use crate::rates::{bath_rates, fluctuation_rates, lambda_matrices, total_rates, LambdaPair, PhotonMode, RateMatrix};
use crate::roots::{find_root, RootOptions};
use crate::spectrum::{
    build_h_eff, eigensystem, lamb_shift, lamb_shift_self_consistent, QubitState, Spectrum,
};
use crate::steadystate::{solve_ness, NessMethod, NessSolution, Populations};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolTarget {
    /// Pump T̃− → S through the asymmetric mode.
    Singlet,
    /// Pump T̃− → T̃0 through the symmetric mode.
    Triplet0,
}

impl ProtocolTarget {
    pub fn mode(self) -> PhotonMode {
        match self {
            ProtocolTarget::Singlet => PhotonMode::Asymmetric,
            ProtocolTarget::Triplet0 => PhotonMode::Symmetric,
        }
    }

    pub fn state(self) -> QubitState {
        match self {
            ProtocolTarget::Singlet => QubitState::S,
            ProtocolTarget::Triplet0 => QubitState::T0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolTarget::Singlet => "singlet",
            ProtocolTarget::Triplet0 => "triplet0",
        }
    }
}

impl fmt::Display for ProtocolTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singlet" => Ok(ProtocolTarget::Singlet),
            "triplet0" => Ok(ProtocolTarget::Triplet0),
            _ => Err(Error::InvalidParameter {
                name: "target",
                reason: alloc::format!("expected singlet or triplet0, got {s:?}"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LambShift {
    #[default]
    Off,
    SinglePass,
    SelfConsistent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineOptions {
    pub lamb_shift: LambShift,
    pub method: NessMethod,
    pub hazard: HazardFloor,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            lamb_shift: LambShift::Off,
            method: NessMethod::Populations,
            hazard: HazardFloor::default(),
        }
    }
}

/// Everything computed for one drive point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub drive: DriveParams,
    pub effective: EffectiveParams,
    pub spectrum: Spectrum,
    pub lambdas: LambdaPair,
    pub rates: RateMatrix,
    pub ness: NessSolution,
}

impl PointResult {
    pub fn summary(&self, target: ProtocolTarget) -> CellSummary {
        CellSummary::from_ness(&self.ness, target)
    }
}

fn dressed_spectrum(
    p: &DimerParams,
    d: &DriveParams,
    opts: &PipelineOptions,
) -> Result<(EffectiveParams, Spectrum, LambdaPair)> {
    let e = derived_params_with_floor(p, d, opts.hazard)?;
    let spec = eigensystem(&build_h_eff(&e))?;
    let lams = lambda_matrices(&e);
    let spec = match opts.lamb_shift {
        LambShift::Off => spec,
        LambShift::SinglePass => lamb_shift(&spec, &lams, p, d)?,
        LambShift::SelfConsistent => lamb_shift_self_consistent(&spec, &lams, p, d, 50, 1e-12)?,
    };
    Ok((e, spec, lams))
}

/// Derived parameters → spectrum → rates → steady state.
pub fn evaluate_point(p: &DimerParams, d: &DriveParams, opts: &PipelineOptions) -> Result<PointResult> {
    d.check()?;
    let (effective, spectrum, lambdas) = dressed_spectrum(p, d, opts)?;
    let rates = total_rates(&bath_rates(p), &fluctuation_rates(&spectrum, &lambdas, d, p));
    let ness = solve_ness(&spectrum, &rates, p, opts.method)?;
    Ok(PointResult {
        drive: *d,
        effective,
        spectrum,
        lambdas,
        rates,
        ness,
    })
}

/// `ω_d − ω_mode − (E_target − E_{T̃−})`.
pub fn resonance_residual(
    target: ProtocolTarget,
    epsilon_d: f64,
    omega_d: f64,
    p: &DimerParams,
    opts: &PipelineOptions,
) -> Result<f64> {
    let d = DriveParams::new(epsilon_d, omega_d)?;
    let (_, spec, _) = dressed_spectrum(p, &d, opts)?;
    Ok(omega_d - target.mode().frequency(p) - (spec.energy(target.state()) - spec.energy(QubitState::Tminus)))
}

/// Half-width of the search bracket around `(ω_mode + ω_q)/2`.
pub const RESONANCE_BRACKET: f64 = 0.2;

pub fn resonance_bracket(target: ProtocolTarget, p: &DimerParams) -> (f64, f64) {
    let c = 0.5 * (target.mode().frequency(p) + p.omega_q);
    (c - RESONANCE_BRACKET, c + RESONANCE_BRACKET)
}

/// Self-consistent resonant drive frequency for the protocol.
pub fn optimal_drive_frequency(
    target: ProtocolTarget,
    epsilon_d: f64,
    p: &DimerParams,
    opts: &PipelineOptions,
) -> Result<f64> {
    let (lo, hi) = resonance_bracket(target, p);
    find_root(
        |w| resonance_residual(target, epsilon_d, w, p, opts),
        lo,
        hi,
        &RootOptions::default(),
    )
}

/// Drive frequency making S̃ ← T̃0 resonant with the symmetric mode,
/// `ω_d = ω_c^− + E_S̃ − E_T̃0`.
pub fn dark_state_frequency(epsilon_d: f64, p: &DimerParams, opts: &PipelineOptions) -> Result<f64> {
    let j_eff = p.j * (p.g / p.detuning()) * (p.g / p.detuning());
    let c = p.omega_c_minus() + 2.0 * j_eff;
    let f = |w: f64| -> Result<f64> {
        let d = DriveParams::new(epsilon_d, w)?;
        let (_, spec, _) = dressed_spectrum(p, &d, opts)?;
        Ok(w - p.omega_c_minus() - (spec.energy(QubitState::S) - spec.energy(QubitState::T0)))
    };
    find_root(f, c - j_eff, c + j_eff, &RootOptions::default())
}

/// Steady state at the dark-state drive frequency.
pub fn dark_state_demo(p: &DimerParams, epsilon_d: f64, opts: &PipelineOptions) -> Result<PointResult> {
    let w = dark_state_frequency(epsilon_d, p, opts)?;
    evaluate_point(p, &DriveParams::new(epsilon_d, w)?, opts)
}

/// ε_d interval satisfying `leak·margin ≤ γ` and `γ·margin ≤ pump`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HierarchyWindow {
    /// `+∞` when the pump never reaches `γ·margin` on the scanned range.
    pub epsilon_min: f64,
    /// Upper end of the scanned range when the leak never reaches `γ/margin`.
    pub epsilon_max: f64,
    pub margin: f64,
}

impl HierarchyWindow {
    pub fn is_empty(&self) -> bool {
        !(self.epsilon_min < self.epsilon_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSearch {
    pub epsilon_lo: f64,
    pub epsilon_hi: f64,
    pub scan_points: usize,
}

impl Default for WindowSearch {
    fn default() -> Self {
        WindowSearch {
            epsilon_lo: 1e-3,
            epsilon_hi: 1.0,
            scan_points: 48,
        }
    }
}

/// Pump and leak fluctuation rates at the protocol's own resonant ω_d.
pub fn protocol_rates(
    target: ProtocolTarget,
    epsilon_d: f64,
    p: &DimerParams,
    opts: &PipelineOptions,
) -> Result<(f64, f64)> {
    let w = optimal_drive_frequency(target, epsilon_d, p, opts)?;
    let d = DriveParams::new(epsilon_d, w)?;
    let (_, spec, lams) = dressed_spectrum(p, &d, opts)?;
    let r = fluctuation_rates(&spec, &lams, &d, p);
    let tm = QubitState::Tminus.index();
    let t = target.state().index();
    let tp = QubitState::Tplus.index();
    Ok((r.fluctuation(tm, t), r.fluctuation(t, tp)))
}

pub fn hierarchy_window(
    p: &DimerParams,
    target: ProtocolTarget,
    margin: f64,
    opts: &PipelineOptions,
) -> Result<HierarchyWindow> {
    hierarchy_window_with(p, target, margin, opts, &WindowSearch::default())
}

pub fn hierarchy_window_with(
    p: &DimerParams,
    target: ProtocolTarget,
    margin: f64,
    opts: &PipelineOptions,
    search: &WindowSearch,
) -> Result<HierarchyWindow> {
    if !(margin >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "margin",
            reason: alloc::format!("must be ≥ 1, got {margin}"),
        });
    }
    // log-ratios: positive once the respective condition is crossed
    let pump_gap = |eps: f64| -> Result<f64> {
        let (pump, _) = protocol_rates(target, eps, p, opts)?;
        Ok(libm::log(pump / (p.gamma * margin)))
    };
    let leak_gap = |eps: f64| -> Result<f64> {
        let (_, leak) = protocol_rates(target, eps, p, opts)?;
        Ok(libm::log(leak * margin / p.gamma))
    };
    let n = search.scan_points.max(2);
    let ratio = libm::log(search.epsilon_hi / search.epsilon_lo);
    let grid: Vec<f64> = (0..n)
        .map(|i| search.epsilon_lo * libm::exp(ratio * i as f64 / (n - 1) as f64))
        .collect();
    let mut pump_vals = Vec::with_capacity(n);
    let mut leak_vals = Vec::with_capacity(n);
    let mut reach = search.epsilon_lo;
    for &eps in &grid {
        match (pump_gap(eps), leak_gap(eps)) {
            (Ok(a), Ok(b)) => {
                pump_vals.push((eps, a));
                leak_vals.push((eps, b));
                reach = eps;
            }
            // past the validity of the reduced model
            _ => break,
        }
    }
    let opts_root = RootOptions {
        residual_tol: 1e-12,
        ..RootOptions::default()
    };
    let crossing = |vals: &[(f64, f64)], f: &dyn Fn(f64) -> Result<f64>| -> Result<Option<f64>> {
        if let Some(&(e0, v0)) = vals.first() {
            if v0 >= 0.0 {
                return Ok(Some(e0));
            }
        }
        for w in vals.windows(2) {
            if w[0].1 < 0.0 && w[1].1 >= 0.0 {
                let x = find_root(|le| f(libm::exp(le)), libm::log(w[0].0), libm::log(w[1].0), &opts_root)?;
                return Ok(Some(libm::exp(x)));
            }
        }
        Ok(None)
    };
    let eps_min = crossing(&pump_vals, &pump_gap)?.unwrap_or(f64::INFINITY);
    let eps_max = crossing(&leak_vals, &leak_gap)?.unwrap_or(reach);
    Ok(HierarchyWindow {
        epsilon_min: eps_min,
        epsilon_max: eps_max,
        margin,
    })
}

/// Per-cell record of a sweep, mirroring one output row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellSummary {
    /// Populations of the labeled eigenstates.
    pub populations: Populations,
    pub fid_s_bare: f64,
    pub fid_t0_bare: f64,
    pub fid_t0_dressed: f64,
    pub n_d: f64,
    pub n_big_d: f64,
    pub rate_tm_s: f64,
    pub rate_s_tp: f64,
    pub hierarchy_ok: bool,
}

impl CellSummary {
    pub fn from_ness(n: &NessSolution, target: ProtocolTarget) -> Self {
        CellSummary {
            populations: n.populations,
            fid_s_bare: n.fidelity_singlet,
            fid_t0_bare: n.fidelity_triplet0,
            fid_t0_dressed: n.fidelity_triplet0_dressed,
            n_d: n.n_d,
            n_big_d: n.n_big_d,
            rate_tm_s: n.diagnostics.rate_tm_s,
            rate_s_tp: n.diagnostics.rate_s_tp,
            hierarchy_ok: n.diagnostics.hierarchy_ok(target),
        }
    }

    /// Fidelity of the protocol's target state in the bare basis.
    pub fn target_fidelity(&self, target: ProtocolTarget) -> f64 {
        match target {
            ProtocolTarget::Singlet => self.fid_s_bare,
            ProtocolTarget::Triplet0 => self.fid_t0_bare,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub omega_d: f64,
    pub epsilon_d: f64,
    pub result: core::result::Result<CellSummary, Error>,
}

/// Axes of a rectangular sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub omega_d: Vec<f64>,
    pub epsilon_d: Vec<f64>,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

impl SweepSpec {
    pub fn linear(omega: (f64, f64, usize), epsilon: (f64, f64, usize)) -> Self {
        SweepSpec {
            omega_d: linspace(omega.0, omega.1, omega.2),
            epsilon_d: linspace(epsilon.0, epsilon.1, epsilon.2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("omega_d", &self.omega_d), ("epsilon_d", &self.epsilon_d)] {
            if axis.is_empty() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "axis is empty".into(),
                });
            }
            if axis.iter().any(|x| !x.is_finite()) || axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "axis must be finite and strictly increasing".into(),
                });
            }
        }
        if self.omega_d[0] <= 0.0 {
            return Err(Error::NonPositive {
                name: "omega_d",
                value: self.omega_d[0],
            });
        }
        if self.epsilon_d[0] < 0.0 {
            return Err(Error::InvalidParameter {
                name: "epsilon_d",
                reason: "must be ≥ 0".into(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.omega_d.len() * self.epsilon_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(ω_d, ε_d)` of flat cell `i`; ε_d is the outer axis.
    pub fn point(&self, i: usize) -> (f64, f64) {
        let nw = self.omega_d.len();
        (self.omega_d[i % nw], self.epsilon_d[i / nw])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub omega_d_axis: Vec<f64>,
    pub epsilon_d_axis: Vec<f64>,
    pub target: ProtocolTarget,
    /// Row-major with ε_d outer and ω_d inner.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, i_eps: usize, i_omega: usize) -> &SweepCell {
        &self.cells[i_eps * self.omega_d_axis.len() + i_omega]
    }
}

pub fn evaluate_cell(
    omega_d: f64,
    epsilon_d: f64,
    p: &DimerParams,
    target: ProtocolTarget,
    opts: &PipelineOptions,
) -> SweepCell {
    let result = DriveParams::new(epsilon_d, omega_d)
        .and_then(|d| evaluate_point(p, &d, opts))
        .map(|r| r.summary(target));
    SweepCell {
        omega_d,
        epsilon_d,
        result,
    }
}

/// Assemble a grid from cells evaluated in flat order.
pub fn assemble_grid(spec: &SweepSpec, target: ProtocolTarget, cells: Vec<SweepCell>) -> SweepGrid {
    SweepGrid {
        omega_d_axis: spec.omega_d.clone(),
        epsilon_d_axis: spec.epsilon_d.clone(),
        target,
        cells,
    }
}

/// Sequential sweep. Cells that fail carry their error.
pub fn sweep(
    spec: &SweepSpec,
    p: &DimerParams,
    target: ProtocolTarget,
    opts: &PipelineOptions,
) -> Result<SweepGrid> {
    spec.validate()?;
    let cells = (0..spec.len())
        .map(|i| {
            let (w, e) = spec.point(i);
            evaluate_cell(w, e, p, target, opts)
        })
        .collect();
    Ok(assemble_grid(spec, target, cells))
}

/// Ridge location per ε_d row: the ω_d of maximal target fidelity, refined
/// by a parabola through the maximum and its neighbours.
pub fn ridge(grid: &SweepGrid) -> Vec<Option<f64>> {
    let nw = grid.omega_d_axis.len();
    (0..grid.epsilon_d_axis.len())
        .map(|ie| {
            let vals: Vec<Option<f64>> = (0..nw)
                .map(|iw| {
                    grid.cell(ie, iw)
                        .result
                        .as_ref()
                        .ok()
                        .map(|c| c.target_fidelity(grid.target))
                })
                .collect();
            let (best, fbest) = vals
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|x| (i, x)))
                .fold(None, |acc: Option<(usize, f64)>, (i, x)| match acc {
                    Some((_, y)) if y >= x => acc,
                    _ => Some((i, x)),
                })?;
            let w = &grid.omega_d_axis;
            if best == 0 || best + 1 == nw {
                return Some(w[best]);
            }
            match (vals[best - 1], vals[best + 1]) {
                (Some(fl), Some(fr)) => {
                    let den = fl - 2.0 * fbest + fr;
                    if den < 0.0 {
                        let h = w[best + 1] - w[best];
                        let shift = 0.5 * (fl - fr) / den;
                        Some(w[best] + shift.clamp(-1.0, 1.0) * h)
                    } else {
                        Some(w[best])
                    }
                }
                _ => Some(w[best]),
            }
        })
        .collect()
}

/// Least-squares polynomial fit; coefficients in ascending powers.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = degree + 1;
    if x.len() != y.len() || x.len() < m {
        return Err(Error::Precondition("not enough points for the fit".into()));
    }
    // center and scale for conditioning
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let span = x.iter().fold(0.0_f64, |s, v| s.max(libm::fabs(v - mean))).max(1e-300);
    let mut ata = alloc::vec![alloc::vec![0.0; m + 1]; m];
    for (&xi, &yi) in x.iter().zip(y) {
        let t = (xi - mean) / span;
        let pw: Vec<f64> = (0..m).map(|k| libm::pow(t, k as f64)).collect();
        for r in 0..m {
            for c in 0..m {
                ata[r][c] += pw[r] * pw[c];
            }
            ata[r][m] += pw[r] * yi;
        }
    }
    for c in 0..m {
        let piv = (c..m)
            .max_by(|&a, &b| libm::fabs(ata[a][c]).total_cmp(&libm::fabs(ata[b][c])))
            .unwrap_or(c);
        ata.swap(c, piv);
        if libm::fabs(ata[c][c]) < 1e-300 {
            return Err(Error::Precondition("singular fit".into()));
        }
        for r in 0..m {
            if r != c {
                let f = ata[r][c] / ata[c][c];
                for k in c..=m {
                    ata[r][k] -= f * ata[c][k];
                }
            }
        }
    }
    let scaled: Vec<f64> = (0..m).map(|r| ata[r][m] / ata[r][r]).collect();
    // expand Σ a_k ((x−mean)/span)^k into powers of x
    let mut coef = alloc::vec![0.0; m];
    for (k, a) in scaled.iter().enumerate() {
        let scale = a / libm::pow(span, k as f64);
        for j in 0..=k {
            let binom = binomial(k, j);
            coef[j] += scale * binom * libm::pow(-mean, (k - j) as f64);
        }
    }
    Ok(coef)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn polyval(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
