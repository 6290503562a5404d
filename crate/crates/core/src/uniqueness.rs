//! Relative energy, the one-sided Lipschitz estimator and Gronwall
//! certification of weak-strong uniqueness for pairs of numerical solutions.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::besov::{besov_seminorm, fit_regularity_exponent, ShiftPolicy};
use crate::calculus::velocity_gradient;
use crate::commutator::{cet_trilinear, convective_commutator};
use crate::error::{Error, Result};
use crate::field::{lp_norm, resample_scalar, resample_velocity, ScalarField, TensorField, VelocityField};
use crate::fit::{cumulative_trapezoid, trapezoid};
use crate::grid::PeriodicGrid;
use crate::mollify::{check_epsilon, make_kernel, min_epsilon, Mollify};
use crate::solver::{solve, SolverConfig, Trajectory};

/// `∫ ½ |u - v|^2 dx`.
pub fn relative_energy(u: &VelocityField, v: &VelocityField) -> Result<f64> {
    Ok(u.sub(v)?.kinetic_energy())
}

/// `∫ ½ rho |u - v|^2 dx`.
pub fn weighted_relative_energy(rho: &ScalarField, u: &VelocityField, v: &VelocityField) -> Result<f64> {
    let d = u.sub(v)?;
    rho.grid().ensure_same(d.grid())?;
    let w = rho.cell_weighted_sum(&d.magnitudes().iter().map(|m| m * m).collect::<Vec<_>>());
    Ok(0.5 * w)
}

/// `max_x lambda_max(-sym grad)` over the grid, clamped at zero.
pub fn max_negative_sym_eigenvalue(grad: &TensorField) -> f64 {
    let d = grad.grid().dims();
    let len = grad.grid().len();
    let e: Vec<&[f64]> = grad.entries().iter().map(|f| f.values()).collect();
    let mut best = 0.0f64;
    for x in 0..len {
        let lam = if d == 2 {
            let a = e[0][x];
            let b = 0.5 * (e[1][x] + e[2][x]);
            let c = e[3][x];
            -0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt()
        } else {
            let m = Matrix3::from_fn(|i, j| -0.5 * (e[i * 3 + j][x] + e[j * 3 + i][x]));
            SymmetricEigen::new(m).eigenvalues.max()
        };
        best = best.max(lam);
    }
    best
}

/// Smallest `C` with `zeta . grad(w_eps) zeta >= -C |zeta|^2` everywhere,
/// where `grad` is a velocity-gradient field and `eps = reg_epsilon`.
pub fn one_sided_lipschitz_of_gradient(grad: &TensorField, reg_epsilon: f64) -> Result<f64> {
    let k = make_kernel(*grad.grid(), reg_epsilon)?;
    Ok(max_negative_sym_eigenvalue(&grad.mollify(&k)?))
}

/// One-sided Lipschitz constant of the mollified field `v_eps`.
pub fn one_sided_lipschitz(v: &VelocityField, reg_epsilon: f64) -> Result<f64> {
    let k = make_kernel(*v.grid(), reg_epsilon)?;
    Ok(max_negative_sym_eigenvalue(&velocity_gradient(&v.mollify(&k)?)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeEnergySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub pair_id: (String, String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSeries {
    pub times: Vec<f64>,
    pub c_values: Vec<f64>,
    pub reg_epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallCertificate {
    pub tau1: f64,
    pub tau2: f64,
    pub lhs: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub commutator_budget: f64,
    pub certify_tolerance: f64,
}

/// Checks `E(tau2) <= E(tau1) exp(∫_{tau1}^{tau2} C) + budget + tolerance`
/// for every ordered pair of recorded times and reports the worst pair.
pub fn gronwall_certify(
    e: &RelativeEnergySeries,
    c: &LipschitzSeries,
    commutator_budget: f64,
    certify_tolerance: f64,
) -> Result<GronwallCertificate> {
    if e.times.len() != c.times.len()
        || e.times.iter().zip(&c.times).any(|(a, b)| (a - b).abs() > 1e-9)
        || e.values.len() != e.times.len()
        || c.c_values.len() != c.times.len()
    {
        return Err(Error::AxisMismatch(format!(
            "energy series has {} times, Lipschitz series {}",
            e.times.len(),
            c.times.len()
        )));
    }
    if e.times.is_empty() {
        return Err(Error::AxisMismatch("empty series".into()));
    }
    if !(certify_tolerance > 0.0) {
        return Err(Error::config("certify_tolerance must be positive"));
    }
    let cum = cumulative_trapezoid(&c.times, &c.c_values);
    let n = e.times.len();
    let mut best: Option<(usize, usize, f64, f64)> = None;
    let pairs: Box<dyn Iterator<Item = (usize, usize)>> = if n == 1 {
        Box::new(std::iter::once((0, 0)))
    } else {
        Box::new((0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j))))
    };
    for (i, j) in pairs {
        let bound = e.values[i] * (cum[j] - cum[i]).exp() + commutator_budget;
        let slack = bound - e.values[j];
        if best.map_or(true, |b| slack < b.3) {
            best = Some((i, j, bound, slack));
        }
    }
    let (i, j, bound, slack) = best.expect("at least one pair");
    Ok(GronwallCertificate {
        tau1: e.times[i],
        tau2: e.times[j],
        lhs: e.values[j],
        bound,
        slack,
        pass: slack >= -certify_tolerance,
        commutator_budget,
        certify_tolerance,
    })
}

/// Which commutator bound closes the Gronwall argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetPath {
    /// Quadratic commutator, rate `eps^{2 alpha - 1}`; needs `alpha > 1/2`
    /// for the reference solution only.
    Commutator,
    /// Trilinear energy-flux term, rate `eps^{3 alpha - 1}`; needs
    /// `alpha > 1/3` for both solutions.
    Trilinear,
}

impl BudgetPath {
    pub fn required_alpha(self) -> f64 {
        match self {
            BudgetPath::Commutator => 0.5,
            BudgetPath::Trilinear => 1.0 / 3.0,
        }
    }

    pub fn rate(self, alpha: f64) -> f64 {
        match self {
            BudgetPath::Commutator => 2.0 * alpha - 1.0,
            BudgetPath::Trilinear => 3.0 * alpha - 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessConfig {
    /// Regularity exponent at which seminorms and budget rates are evaluated.
    pub alpha: f64,
    pub p: f64,
    /// Radii at which budgets are reported; the working radius is added.
    pub epsilons: Vec<f64>,
    pub path: BudgetPath,
    /// Mollification scale of the Lipschitz estimator; defaults to the
    /// working radius.
    pub reg_epsilon: Option<f64>,
    /// Defaults to `max(10 * measured energy drift, 1e-12)`.
    pub certify_tolerance: Option<f64>,
}

impl UniquenessConfig {
    pub fn new(alpha: f64, p: f64, path: BudgetPath) -> Self {
        Self {
            alpha,
            p,
            epsilons: Vec::new(),
            path,
            reg_epsilon: None,
            certify_tolerance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("analysis.alpha must lie in (0, 1) (got {})", self.alpha)));
        }
        if self.p < 2.0 {
            return Err(Error::config(format!("analysis.p must be >= 2 (got {})", self.p)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    CertificateFailed,
    HypothesisNotMet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTable {
    pub t: Vec<f64>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetTable {
    pub epsilon: Vec<f64>,
    pub value: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Minimum over slices (and over both solutions on the trilinear path);
    /// `None` when every slice is constant in space.
    pub fitted_alpha: Option<f64>,
    pub required_alpha: f64,
    pub met: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub series: SeriesTable,
    pub budgets: BudgetTable,
    pub certificate: GronwallCertificate,
    pub hypothesis: Hypothesis,
    pub verdict: Verdict,
    pub path: BudgetPath,
    pub alpha: f64,
    pub p: f64,
    pub comparison_grid: usize,
    pub working_epsilon: f64,
    pub reg_epsilon: f64,
    /// Besov seminorm of the reference solution per slice.
    pub seminorm: Vec<f64>,
    /// Largest absolute kinetic-energy drift of the two runs.
    pub energy_drift: f64,
}

/// Velocity snapshots of one run, as consumed by [`analyze_pair`].
pub struct RunView<'a> {
    pub times: Vec<f64>,
    pub velocities: Vec<&'a VelocityField>,
    pub energy_drift: f64,
    /// Densities weighting the relative energy when this run is the one
    /// compared against the reference.
    pub weights: Option<Vec<&'a ScalarField>>,
}

impl<'a> RunView<'a> {
    pub fn from_trajectory(t: &'a Trajectory) -> Self {
        Self {
            times: t.times(),
            velocities: t.states.iter().map(|s| &s.velocity).collect(),
            energy_drift: t.absolute_energy_drift(),
            weights: None,
        }
    }

    fn grid(&self) -> PeriodicGrid {
        *self.velocities[0].grid()
    }
}

/// Index pairs of times present in both runs (matched within 1e-9).
pub fn common_times(a: &[f64], b: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut j = 0;
    for (i, &t) in a.iter().enumerate() {
        while j < b.len() && b[j] < t - 1e-9 {
            j += 1;
        }
        if j < b.len() && (b[j] - t).abs() <= 1e-9 {
            out.push((i, j));
        }
    }
    out
}

/// Dyadic budget radii: the configured list plus the working radius,
/// deduplicated and sorted in decreasing order.
fn budget_radii(cfg: &UniquenessConfig, working: f64) -> Vec<f64> {
    let mut eps = cfg.epsilons.clone();
    eps.push(working);
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    eps
}

/// Builds the relative-energy certificate for two runs of the same data.
///
/// The finer run plays the reference solution `v` (ties go to `b`).
/// Energies are compared on the coarser grid after spectral truncation;
/// Lipschitz constants, seminorms and budgets use `v` on its own grid.
pub fn analyze_pair(a: &RunView<'_>, b: &RunView<'_>, cfg: &UniquenessConfig) -> Result<UniquenessReport> {
    cfg.validate()?;
    let (u_run, v_run) = if a.grid().n_per_axis() > b.grid().n_per_axis() {
        (b, a)
    } else {
        (a, b)
    };
    let cmp_grid = u_run.grid();
    let v_grid = v_run.grid();
    let working = min_epsilon(&cmp_grid);
    let reg = cfg.reg_epsilon.unwrap_or(working);
    check_epsilon(&v_grid, reg)?;
    let radii = budget_radii(cfg, working);
    for &e in &radii {
        check_epsilon(&v_grid, e)?;
    }
    let kernels = radii
        .iter()
        .map(|&e| make_kernel(v_grid, e))
        .collect::<Result<Vec<_>>>()?;
    let rate = cfg.path.rate(cfg.alpha);

    let pairs = common_times(&u_run.times, &v_run.times);
    if pairs.is_empty() {
        return Err(Error::AxisMismatch("the two runs share no snapshot times".into()));
    }
    let mut times = Vec::with_capacity(pairs.len());
    let mut e_vals = Vec::with_capacity(pairs.len());
    let mut c_vals = Vec::with_capacity(pairs.len());
    let mut seminorms = Vec::with_capacity(pairs.len());
    let mut worst_alpha: Option<f64> = None;
    // Largest implied constant M(eps) / eps^rate per slice.
    let mut flux_rate = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let u = u_run.velocities[i];
        let v = v_run.velocities[j];
        times.push(u_run.times[i]);
        let v_cmp = resample_velocity(v, cmp_grid)?;
        e_vals.push(match &u_run.weights {
            None => relative_energy(u, &v_cmp)?,
            Some(w) => weighted_relative_energy(&resample_scalar(w[i], cmp_grid)?, u, &v_cmp)?,
        });
        c_vals.push(one_sided_lipschitz(v, reg)?);
        seminorms.push(besov_seminorm(v, cfg.alpha, cfg.p, &ShiftPolicy::Dyadic).seminorm);
        let mut fits = vec![fit_regularity_exponent(v, cfg.p).ok()];
        let u_fine = if cfg.path == BudgetPath::Trilinear {
            fits.push(fit_regularity_exponent(u, cfg.p).ok());
            Some(resample_velocity(u, v_grid)?)
        } else {
            None
        };
        for f in fits.into_iter().flatten() {
            worst_alpha = Some(worst_alpha.map_or(f, |w: f64| w.min(f)));
        }
        let mut best = 0.0f64;
        for (k, &eps) in kernels.iter().zip(&radii) {
            let m = match &u_fine {
                None => lp_norm(&convective_commutator(v, k)?, cfg.p / 2.0),
                Some(uf) => cet_trilinear(uf, v, k)?.abs(),
            };
            best = best.max(m / eps.powf(rate));
        }
        flux_rate.push(best);
    }
    // A density weight enters the energy balance linearly.
    let weight_scale = u_run.weights.as_ref().map_or(1.0, |w| {
        pairs.iter().fold(0.0f64, |m, &(i, _)| m.max(w[i].max_abs()))
    });
    let budgets: Vec<f64> = radii
        .iter()
        .map(|&eps| {
            let integrand: Vec<f64> = flux_rate.iter().map(|c| weight_scale * c * eps.powf(rate)).collect();
            trapezoid(&times, &integrand)
        })
        .collect();
    let working_budget = budgets[radii
        .iter()
        .position(|e| (*e - working).abs() <= 1e-12 * working)
        .expect("working radius is listed")];
    let drift = u_run.energy_drift.max(v_run.energy_drift);
    let tol = cfg.certify_tolerance.unwrap_or((10.0 * drift).max(1e-12));
    let e_series = RelativeEnergySeries {
        times: times.clone(),
        values: e_vals.clone(),
        pair_id: ("u".into(), "v".into()),
    };
    let c_series = LipschitzSeries {
        times: times.clone(),
        c_values: c_vals.clone(),
        reg_epsilon: reg,
    };
    let certificate = gronwall_certify(&e_series, &c_series, working_budget, tol)?;
    let required = cfg.path.required_alpha();
    let met = worst_alpha.map_or(true, |a| a > required);
    let verdict = if !met {
        Verdict::HypothesisNotMet
    } else if certificate.pass {
        Verdict::Certified
    } else {
        Verdict::CertificateFailed
    };
    Ok(UniquenessReport {
        series: SeriesTable {
            t: times,
            e: e_vals,
            c: c_vals,
        },
        budgets: BudgetTable {
            epsilon: radii,
            value: budgets,
        },
        certificate,
        hypothesis: Hypothesis {
            fitted_alpha: worst_alpha,
            required_alpha: required,
            met,
        },
        verdict,
        path: cfg.path,
        alpha: cfg.alpha,
        p: cfg.p,
        comparison_grid: cmp_grid.n_per_axis(),
        working_epsilon: working,
        reg_epsilon: reg,
        seminorm: seminorms,
        energy_drift: drift,
    })
}

/// Runs both solver configurations from `u0` and certifies the pair.
pub fn uniqueness_experiment(
    u0: &VelocityField,
    cfg_a: &SolverConfig,
    cfg_b: &SolverConfig,
    cfg: &UniquenessConfig,
) -> Result<(UniquenessReport, Trajectory, Trajectory)> {
    cfg.validate()?;
    let (ta, tb) = rayon::join(|| solve(u0, cfg_a), || solve(u0, cfg_b));
    let (ta, tb) = (ta?, tb?);
    let report = analyze_pair(&RunView::from_trajectory(&ta), &RunView::from_trajectory(&tb), cfg)?;
    Ok((report, ta, tb))
}
