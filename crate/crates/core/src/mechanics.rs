//! Ion-crystal mechanics: equilibrium positions of a linear string, normal
//! modes along each trap axis, Lamb-Dicke factors, thermal occupations and
//! the thermally reduced carrier Rabi frequency of each ion.
//!
//! Positions are solved in the dimensionless units `u = z/ℓ` with
//! `ℓ = (e²/(4πε₀ m ω_z²))^(1/3)`, where the axial potential energy is
//! `Σ uᵢ²/2 + Σ_{i<j} 1/|uᵢ − uⱼ|` (in units of `m ω_z² ℓ²`).

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::{Error, PhysicalConstants, Result, TWO_PI};

/// Tolerance on the dimensionless force per ion for an accepted equilibrium.
pub const FORCE_TOLERANCE: f64 = 1e-9;
/// Tail probability at which the thermal Laguerre sum is truncated.
pub const LAGUERRE_TAIL_TOLERANCE: f64 = 1e-8;
/// Lamb-Dicke factors above this raise the table's warning flag.
pub const LAMB_DICKE_WARNING: f64 = 0.3;

const MAX_NEWTON_ITERATIONS: usize = 200;
const MAX_LAGUERRE_TERMS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfiguration {
    pub ion_count: usize,
    /// Axial centre-of-mass angular frequency (rad/s).
    pub omega_z: f64,
    /// Radial centre-of-mass angular frequencies (rad/s).
    pub omega_rx: f64,
    pub omega_ry: f64,
}

impl TrapConfiguration {
    /// The ten-ion confinement: ω_z = 2π×358 kHz, radial COM modes at
    /// 2π×2.0940 MHz and 2π×2.0469 MHz.
    pub fn ten_ion() -> Self {
        Self {
            ion_count: 10,
            omega_z: TWO_PI * 358e3,
            omega_rx: TWO_PI * 2.0940e6,
            omega_ry: TWO_PI * 2.0469e6,
        }
    }

    pub fn with_ion_count(mut self, n: usize) -> Self {
        self.ion_count = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.ion_count >= 1, || {
            "ion count must be at least one".into()
        })?;
        ensure(
            [self.omega_z, self.omega_rx, self.omega_ry]
                .iter()
                .all(|w| w.is_finite() && *w > 0.0),
            || "trap frequencies must be positive".into(),
        )
    }

    pub fn branch_frequency(&self, branch: ModeBranch) -> f64 {
        match branch {
            ModeBranch::Axial => self.omega_z,
            ModeBranch::RadialX => self.omega_rx,
            ModeBranch::RadialY => self.omega_ry,
        }
    }

    /// Characteristic length `ℓ = (e²/(4πε₀ m ω_z²))^(1/3)`.
    pub fn length_scale(&self, c: &PhysicalConstants) -> f64 {
        let num = c.electron_charge.powi(2);
        let den =
            4.0 * std::f64::consts::PI * c.vacuum_permittivity * c.ion_mass * self.omega_z.powi(2);
        (num / den).cbrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeBranch {
    Axial,
    RadialX,
    RadialY,
}

impl ModeBranch {
    pub fn label(&self) -> &'static str {
        match self {
            ModeBranch::Axial => "axial",
            ModeBranch::RadialX => "radial-x",
            ModeBranch::RadialY => "radial-y",
        }
    }
}

/// Equilibrium configuration of a linear ion string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonString {
    /// Positions along the trap axis (m), strictly increasing.
    pub positions: Vec<f64>,
    /// ℓ (m).
    pub length_scale: f64,
}

impl IonString {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dimensionless(&self) -> Vec<f64> {
        self.positions
            .iter()
            .map(|z| z / self.length_scale)
            .collect()
    }

    /// Distance between the outermost ions (m).
    pub fn span(&self) -> f64 {
        match (self.positions.first(), self.positions.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Largest net force on any ion, in units of `m ω_z² ℓ`.
    pub fn max_residual_force(&self) -> f64 {
        net_forces(&self.dimensionless())
            .iter()
            .fold(0.0, |m, f| m.max(f.abs()))
    }
}

fn net_forces(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut f = vec![0.0; n];
    for i in 0..n {
        let mut acc = -u[i];
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                acc += d.signum() / (d * d);
            }
        }
        f[i] = acc;
    }
    f
}

/// Axial Hessian in units of `m ω_z²`.
fn axial_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, j)] = -c;
                diag += c;
            }
        }
        a[(i, i)] = diag;
    }
    a
}

/// Radial Hessian in units of `m ω_z²` for a radial COM frequency
/// `ratio·ω_z`.
fn radial_hessian(u: &[f64], ratio: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = ratio * ratio;
        for j in 0..n {
            if i != j {
                let c = 1.0 / (u[i] - u[j]).abs().powi(3);
                b[(i, j)] = c;
                diag -= c;
            }
        }
        b[(i, i)] = diag;
    }
    b
}

fn is_strictly_increasing(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

/// Solves for the stationary point of the axial potential (harmonic
/// confinement plus pairwise Coulomb repulsion) by damped Newton iteration.
pub fn equilibrium_positions(
    config: &TrapConfiguration,
    constants: &PhysicalConstants,
) -> Result<IonString> {
    config.validate()?;
    let n = config.ion_count;
    let ell = config.length_scale(constants);
    if n == 1 {
        return Ok(IonString {
            positions: vec![0.0],
            length_scale: ell,
        });
    }

    // Uniform initial guess with roughly the right spacing.
    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing)
        .collect();
    let norm = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut f = net_forces(&u);
    let mut converged = false;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if f.iter().all(|v| v.abs() < FORCE_TOLERANCE * 1e-3) {
            converged = true;
            break;
        }
        let hess = axial_hessian(&u);
        let rhs = DVector::from_column_slice(&f);
        let step = hess.cholesky().map(|c| c.solve(&rhs)).ok_or_else(|| {
            Error::SolverFailure("axial Hessian lost positive definiteness".into())
        })?;

        let f_norm = norm(&f);
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + damping * d)
                .collect();
            if is_strictly_increasing(&trial) {
                let f_trial = net_forces(&trial);
                if norm(&f_trial) < f_norm || f_norm < FORCE_TOLERANCE {
                    u = trial;
                    f = f_trial;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let max_force = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !converged && max_force >= FORCE_TOLERANCE {
        return Err(Error::SolverFailure(format!(
            "equilibrium search stalled with residual force {max_force:.3e}"
        )));
    }

    // Remove rounding asymmetry and pin the centre of mass at zero.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    let mean = sym.iter().sum::<f64>() / n as f64;
    let positions = sym.iter().map(|v| (v - mean) * ell).collect();
    Ok(IonString {
        positions,
        length_scale: ell,
    })
}

/// Normal modes of one motional branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub branch: ModeBranch,
    /// Angular frequencies (rad/s), ascending.
    pub frequencies: Vec<f64>,
    /// `eigenvectors[(i, m)] = b_{i,m}`: ion `i`, mode `m`; columns are orthonormal.
    pub eigenvectors: DMatrix<f64>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn mode_vector(&self, m: usize) -> Vec<f64> {
        self.eigenvectors.column(m).iter().copied().collect()
    }

    /// Index of the centre-of-mass mode (lowest axial, highest radial).
    pub fn com_index(&self) -> usize {
        match self.branch {
            ModeBranch::Axial => 0,
            _ => self.len() - 1,
        }
    }
}

/// Diagonalises the potential Hessian of `branch` at the equilibrium `string`.
pub fn normal_modes(
    string: &IonString,
    config: &TrapConfiguration,
    branch: ModeBranch,
) -> Result<ModeSet> {
    config.validate()?;
    if string.len() != config.ion_count {
        return Err(Error::InvalidInput(format!(
            "string has {} ions but the trap configuration has {}",
            string.len(),
            config.ion_count
        )));
    }
    let u = string.dimensionless();
    let hess = match branch {
        ModeBranch::Axial => axial_hessian(&u),
        _ => radial_hessian(&u, config.branch_frequency(branch) / config.omega_z),
    };
    let n = u.len();
    let eig = SymmetricEigen::new(hess);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut frequencies = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (m, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda <= 0.0 {
            return Err(Error::LinearConfigurationUnstable {
                mode: m,
                eigenvalue: lambda,
            });
        }
        frequencies.push(config.omega_z * lambda.sqrt());
        let mut col: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        // Sign convention: first non-negligible component positive.
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-6) {
            if *first < 0.0 {
                col.iter_mut().for_each(|v| *v = -*v);
            }
        }
        for i in 0..n {
            vectors[(i, m)] = col[i];
        }
    }
    Ok(ModeSet {
        branch,
        frequencies,
        eigenvectors: vectors,
    })
}

/// Writes mode sets as CSV: `branch,mode_index,freq_hz,b_1..b_N`.
pub fn write_modes_csv<W: Write>(modes: &[ModeSet], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = modes.first().map_or(0, |m| m.len());
    let mut header = vec!["branch".to_string(), "mode_index".into(), "freq_hz".into()];
    header.extend((1..=n).map(|i| format!("b_{i}")));
    w.write_record(&header)?;
    for set in modes {
        for m in 0..set.len() {
            let mut rec = vec![
                set.branch.label().to_string(),
                (m + 1).to_string(),
                format!("{:.6}", set.frequencies[m] / TWO_PI),
            ];
            rec.extend(
                set.eigenvectors
                    .column(m)
                    .iter()
                    .map(|b| format!("{b:.12}")),
            );
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Which mass enters the zero-point amplitude `√(ħ/2Mω)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MassConvention {
    /// `M` = total string mass.
    TotalString,
    /// `M` = single-ion mass, the usual per-ion coupling for normalised
    /// mode vectors.
    #[default]
    SingleIon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambDickeTable {
    /// `eta[(i, m)]` = |η_{i,m}| for ion `i`, mode `m`.
    pub eta: DMatrix<f64>,
    pub wavelength: f64,
    pub projection_angle: f64,
    pub mass_convention: MassConvention,
    /// Set when any factor exceeds [`LAMB_DICKE_WARNING`].
    pub outside_lamb_dicke: bool,
}

/// `η_{i,m} = (2π/λ)·b_{i,m}·√(ħ/2Mω_m)·cos θ_k`, stored as magnitudes.
pub fn lamb_dicke_factors(
    modes: &ModeSet,
    wavelength: f64,
    projection_angle: f64,
    constants: &PhysicalConstants,
    convention: MassConvention,
) -> Result<LambDickeTable> {
    ensure(wavelength > 0.0 && wavelength.is_finite(), || {
        format!("wavelength must be positive, got {wavelength}")
    })?;
    ensure(projection_angle.is_finite(), || {
        "projection angle must be finite".into()
    })?;
    let n = modes.eigenvectors.nrows();
    let mass = match convention {
        MassConvention::TotalString => constants.ion_mass * n as f64,
        MassConvention::SingleIon => constants.ion_mass,
    };
    let k = TWO_PI / wavelength;
    let cos = projection_angle.cos().abs();
    let mut eta = DMatrix::zeros(n, modes.len());
    for (m, &omega) in modes.frequencies.iter().enumerate() {
        let zpf = (constants.reduced_planck / (2.0 * mass * omega)).sqrt();
        for i in 0..n {
            eta[(i, m)] = k * modes.eigenvectors[(i, m)].abs() * zpf * cos;
        }
    }
    let outside = eta.iter().any(|&e| e > LAMB_DICKE_WARNING);
    Ok(LambDickeTable {
        eta,
        wavelength,
        projection_angle,
        mass_convention: convention,
        outside_lamb_dicke: outside,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    /// Mean phonon number per mode, in the order of the frequencies given.
    pub occupations: Vec<f64>,
    /// Effective temperature (K).
    pub temperature: f64,
}

/// Temperature at which a mode of angular frequency `omega` holds a mean
/// occupation `nbar`: `ħω/(k_B T) = ln(1 + 1/n̄)`.
pub fn temperature_for_occupation(omega: f64, nbar: f64, c: &PhysicalConstants) -> Result<f64> {
    if !(nbar > 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidInput(format!(
            "reference occupation must be positive, got {nbar}"
        )));
    }
    ensure(omega > 0.0, || {
        "reference frequency must be positive".into()
    })?;
    Ok(c.reduced_planck * omega / (c.boltzmann * (1.0 / nbar).ln_1p()))
}

/// Bose–Einstein occupation at zero chemical potential.
pub fn bose_einstein(omega: f64, temperature: f64, c: &PhysicalConstants) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = c.reduced_planck * omega / (c.boltzmann * temperature);
    1.0 / x.exp_m1()
}

/// Thermal occupations of `frequencies` at the temperature fixed by the
/// reference mode `(reference_omega, reference_nbar)`.
pub fn thermal_occupations(
    reference_omega: f64,
    reference_nbar: f64,
    frequencies: &[f64],
    c: &PhysicalConstants,
) -> Result<ThermalState> {
    let temperature = temperature_for_occupation(reference_omega, reference_nbar, c)?;
    Ok(ThermalState {
        occupations: frequencies
            .iter()
            .map(|&w| bose_einstein(w, temperature, c))
            .collect(),
        temperature,
    })
}

/// The zero-temperature state: every occupation is zero.
pub fn ground_state(modes: usize) -> ThermalState {
    ThermalState {
        occupations: vec![0.0; modes],
        temperature: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RabiReduction {
    /// `Ω ∏_m (1 − η²_{i,m} n̄_m)`, valid deep in the Lamb-Dicke regime.
    LambDickeProduct,
    /// Thermal average of the Debye–Waller carrier coupling
    /// `e^{−η²/2} L_n(η²)` over a geometric Fock distribution.
    #[default]
    LaguerreThermal,
}

/// Thermally averaged carrier coupling of one mode,
/// `Σ_n p_n e^{−η²/2} L_n(η²)` with `p_n = n̄ⁿ/(n̄+1)ⁿ⁺¹`, truncated once the
/// remaining tail probability drops below [`LAGUERRE_TAIL_TOLERANCE`].
pub fn thermal_carrier_factor(eta: f64, nbar: f64) -> Result<f64> {
    ensure(nbar >= 0.0 && nbar.is_finite(), || {
        format!("occupation must be ≥ 0, got {nbar}")
    })?;
    let x = eta * eta;
    let ratio = nbar / (nbar + 1.0);
    let mut weight = 1.0 / (nbar + 1.0);
    let mut tail = 1.0 - weight;
    let (mut l_prev, mut l_curr) = (0.0, 1.0);
    let mut sum = weight * l_curr;
    let mut n = 0usize;
    while tail >= LAGUERRE_TAIL_TOLERANCE {
        if n >= MAX_LAGUERRE_TERMS {
            return Err(Error::Accuracy(format!(
                "thermal Laguerre sum for n̄ = {nbar} did not reach the tail tolerance"
            )));
        }
        let nf = n as f64;
        let l_next = ((2.0 * nf + 1.0 - x) * l_curr - nf * l_prev) / (nf + 1.0);
        l_prev = l_curr;
        l_curr = l_next;
        weight *= ratio;
        tail -= weight;
        sum += weight * l_curr;
        n += 1;
    }
    Ok((-x / 2.0).exp() * sum)
}

/// Reduced Rabi frequency `Ω_i^r` for each ion, combining every mode of
/// every supplied branch.
pub fn reduced_rabi(
    omega: f64,
    branches: &[(&LambDickeTable, &ThermalState)],
    method: RabiReduction,
) -> Result<Vec<f64>> {
    ensure(omega > 0.0, || "Rabi frequency must be positive".into())?;
    let ions = branches.first().map_or(0, |(t, _)| t.eta.nrows());
    let mut out = vec![omega; ions];
    for (table, thermal) in branches {
        ensure(table.eta.nrows() == ions, || {
            "branches disagree on the ion count".into()
        })?;
        ensure(table.eta.ncols() == thermal.occupations.len(), || {
            "thermal state and Lamb-Dicke table disagree on the mode count".into()
        })?;
        for (i, slot) in out.iter_mut().enumerate() {
            for (m, &nbar) in thermal.occupations.iter().enumerate() {
                let eta = table.eta[(i, m)];
                *slot *= match method {
                    RabiReduction::LambDickeProduct => 1.0 - eta * eta * nbar,
                    RabiReduction::LaguerreThermal => thermal_carrier_factor(eta, nbar)?,
                };
            }
        }
    }
    Ok(out)
}

/// Radial-motion model of a string: the two radial branches, their
/// Lamb-Dicke tables and thermal states, with one temperature fixed by a
/// reference occupation of the highest radial COM mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialThermalModel {
    pub string: IonString,
    pub modes: Vec<ModeSet>,
    pub tables: Vec<LambDickeTable>,
    pub thermal: Vec<ThermalState>,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCouplingSpec {
    /// Raman wavelength (m).
    pub wavelength: f64,
    /// Angle between the Raman k-vector and each radial direction (rad).
    pub projection_angle: f64,
    /// Mean occupation of the highest radial COM mode.
    pub reference_nbar: f64,
    pub mass_convention: MassConvention,
}

impl Default for RadialCouplingSpec {
    fn default() -> Self {
        Self {
            wavelength: 393e-9,
            projection_angle: 45f64.to_radians(),
            reference_nbar: 10.0,
            mass_convention: MassConvention::SingleIon,
        }
    }
}

impl RadialThermalModel {
    pub fn build(
        config: &TrapConfiguration,
        spec: &RadialCouplingSpec,
        c: &PhysicalConstants,
    ) -> Result<Self> {
        let string = equilibrium_positions(config, c)?;
        let modes = vec![
            normal_modes(&string, config, ModeBranch::RadialX)?,
            normal_modes(&string, config, ModeBranch::RadialY)?,
        ];
        let reference = config.omega_rx.max(config.omega_ry);
        let temperature = temperature_for_occupation(reference, spec.reference_nbar, c)?;
        let thermal: Vec<ThermalState> = modes
            .iter()
            .map(|m| ThermalState {
                occupations: m
                    .frequencies
                    .iter()
                    .map(|&w| bose_einstein(w, temperature, c))
                    .collect(),
                temperature,
            })
            .collect();
        let tables = modes
            .iter()
            .map(|m| {
                lamb_dicke_factors(
                    m,
                    spec.wavelength,
                    spec.projection_angle,
                    c,
                    spec.mass_convention,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            string,
            modes,
            tables,
            thermal,
            temperature,
        })
    }

    /// Ω_i^r/Ω for each ion.
    pub fn rabi_fractions(&self, method: RabiReduction) -> Result<Vec<f64>> {
        let pairs: Vec<_> = self.tables.iter().zip(&self.thermal).collect();
        reduced_rabi(1.0, &pairs, method)
    }

    /// Ω_i^r/Ω with every radial mode in its ground state.
    pub fn ground_state_fractions(&self, method: RabiReduction) -> Result<Vec<f64>> {
        let ground: Vec<ThermalState> = self.modes.iter().map(|m| ground_state(m.len())).collect();
        let pairs: Vec<_> = self.tables.iter().zip(&ground).collect();
        reduced_rabi(1.0, &pairs, method)
    }
}

/// Per-ion Lamb-Dicke factor quoted for the highest radial COM mode.
pub const QUOTED_COM_LAMB_DICKE: f64 = 0.0028;
/// Measured frequency of the lowest radial mode (rad/s).
pub const MEASURED_LOWEST_RADIAL: f64 = TWO_PI * 1.1273e6;

/// Model values next to the quoted and measured ones they should match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    /// Highest radial COM Lamb-Dicke factor with the total string mass.
    pub com_lamb_dicke: f64,
    /// `com_lamb_dicke / QUOTED_COM_LAMB_DICKE`.
    pub com_lamb_dicke_ratio: f64,
    /// Lowest mode of the higher radial branch (Hz).
    pub lowest_radial_hz: f64,
    pub measured_lowest_radial_hz: f64,
}

pub fn mode_report(
    config: &TrapConfiguration,
    spec: &RadialCouplingSpec,
    c: &PhysicalConstants,
) -> Result<ModeReport> {
    let string = equilibrium_positions(config, c)?;
    let branch = if config.omega_rx >= config.omega_ry {
        ModeBranch::RadialX
    } else {
        ModeBranch::RadialY
    };
    let modes = normal_modes(&string, config, branch)?;
    let table = lamb_dicke_factors(
        &modes,
        spec.wavelength,
        spec.projection_angle,
        c,
        MassConvention::TotalString,
    )?;
    let com_lamb_dicke = table.eta[(0, modes.com_index())];
    Ok(ModeReport {
        com_lamb_dicke,
        com_lamb_dicke_ratio: com_lamb_dicke / QUOTED_COM_LAMB_DICKE,
        lowest_radial_hz: modes.frequencies[0] / TWO_PI,
        measured_lowest_radial_hz: MEASURED_LOWEST_RADIAL / TWO_PI,
    })
}
