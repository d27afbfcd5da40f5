//! Model contract and the statistic constructors: the signed likelihood
//! root, its empirical (Severini), Bayesian (DiCiccio-Martin) and
//! adjusted-profile (Cox-Reid) corrections, the per-dataset p-value grid,
//! and approximate confidence limits.

use crate::approx::{
    bn_format, guarded_pvalue_detailed, lr_format, near_zero_pair, plain_phi_fallback,
    FallbackReason, Format, FormatEval, PValuePair, SingularityPolicy, TailInput,
};
use crate::error::{Error, Result};
use crate::matrix::{row_vec_mul, Mat};
use crate::normal::std_normal_cdf;
use crate::numeric::{
    fd_derivative, fd_derivative_richardson, maximize_scalar, DerivOrder, NumericKitConfig,
};

/// Scalar interest parameter plus nuisance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub psi: f64,
    pub chi: Vec<f64>,
}

impl ParamPoint {
    pub fn new(psi: f64, chi: Vec<f64>) -> Self {
        ParamPoint { psi, chi }
    }

    pub fn dim(&self) -> usize {
        1 + self.chi.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.psi);
        v.extend_from_slice(&self.chi);
        v
    }
}

/// Prior families consumed by the Bayesian-style corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Matching,
    Uniform,
}

/// Capabilities a parametric model must provide.
///
/// Implementations bind their dataset, must be pure (no shared mutable
/// state during evaluation), and order parameters as (ψ, χ₁, …, χ_{d−1}).
pub trait LikelihoodModel {
    /// Parameter dimension d (interest plus nuisance).
    fn dim(&self) -> usize;
    fn n_obs(&self) -> usize;
    fn loglik(&self, theta: &ParamPoint) -> f64;
    /// Log-likelihood contribution of observation `j` alone.
    fn per_obs_loglik(&self, j: usize, theta: &ParamPoint) -> f64;
    /// Score vector of observation `j` alone, length d.
    fn per_obs_score(&self, j: usize, theta: &ParamPoint) -> Vec<f64>;
    fn mle(&self) -> Result<ParamPoint>;
    fn constrained_mle(&self, psi0: f64) -> Result<ParamPoint>;
    /// Observed information −l_ωω(θ), d × d.
    fn observed_info(&self, theta: &ParamPoint) -> Mat;
    /// Expected information i(θ), d × d.
    fn expected_info(&self, theta: &ParamPoint) -> Mat;
    /// Prior density up to a positive constant.
    fn prior(&self, theta: &ParamPoint, kind: PriorKind) -> f64;

    /// Closed-form ∂l/∂ψ where available; the generic fallback is a central
    /// finite difference.
    fn score_psi(&self, theta: &ParamPoint) -> Option<f64> {
        let _ = theta;
        None
    }

    /// Ancillary-based correction statistic for models that can construct
    /// one; `None` when no such route exists.
    fn bn_correction(&self, psi0: f64) -> Option<Result<f64>> {
        let _ = psi0;
        None
    }
}

/// Global and constrained maximum-likelihood solutions with the observed
/// information blocks the statistics need.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub mle: ParamPoint,
    pub constrained: ParamPoint,
    pub loglik_hat: f64,
    pub loglik_constrained: f64,
    /// j(ω̂) = −l_ωω(ω̂), d × d.
    pub j_full: Mat,
    /// Nuisance block j_χχ at the constrained fit, (d−1) × (d−1).
    pub j_chichi_constrained: Mat,
}

/// Fit the model globally and under ψ = ψ₀.
pub fn fit_model(model: &impl LikelihoodModel, psi0: f64) -> Result<ModelFit> {
    if model.n_obs() == 0 {
        return Err(Error::DegenerateData("empty dataset".into()));
    }
    let mle = model.mle()?;
    let constrained = model.constrained_mle(psi0)?;
    let loglik_hat = model.loglik(&mle);
    let loglik_constrained = model.loglik(&constrained);
    let d = model.dim();
    let j_full = model.observed_info(&mle);
    let j_chichi_constrained = model.observed_info(&constrained).block(1, d, 1, d);
    let det_full = j_full.det();
    let det_cc = j_chichi_constrained.det();
    if !(det_full > 0.0) || !det_full.is_finite() {
        return Err(Error::DegenerateData(format!(
            "observed information at the MLE has determinant {det_full}"
        )));
    }
    if !(det_cc > 0.0) || !det_cc.is_finite() {
        return Err(Error::DegenerateData(format!(
            "constrained nuisance information has determinant {det_cc}"
        )));
    }
    if !loglik_hat.is_finite() || !loglik_constrained.is_finite() {
        return Err(Error::DegenerateData(
            "non-finite log-likelihood at a fit".into(),
        ));
    }
    Ok(ModelFit {
        mle,
        constrained,
        loglik_hat,
        loglik_constrained,
        j_full,
        j_chichi_constrained,
    })
}

/// Largest negative radicand written off as optimizer noise.
const RADICAND_SLACK: f64 = 1e-8;

fn signed_sqrt(delta_loglik: f64, psi_hat: f64, psi0: f64) -> Result<f64> {
    let radicand = 2.0 * delta_loglik;
    if radicand < -RADICAND_SLACK {
        return Err(Error::InconsistentFit { excess: -radicand });
    }
    let root = radicand.max(0.0).sqrt();
    let sign = if psi_hat > psi0 {
        1.0
    } else if psi_hat < psi0 {
        -1.0
    } else {
        0.0
    };
    Ok(sign * root)
}

/// Signed root of the likelihood ratio statistic at the fit's ψ₀.
pub fn signed_root(fit: &ModelFit) -> Result<f64> {
    signed_sqrt(
        fit.loglik_hat - fit.loglik_constrained,
        fit.mle.psi,
        fit.constrained.psi,
    )
}

/// Empirical cross-sum Σ_j l⁽ʲ⁾(ω) · l_ω⁽ʲ⁾(ω₀)ᵀ, a length-d row vector.
pub fn empirical_q(
    model: &impl LikelihoodModel,
    omega: &ParamPoint,
    omega0: &ParamPoint,
) -> Vec<f64> {
    let d = model.dim();
    let mut out = vec![0.0; d];
    for j in 0..model.n_obs() {
        let lj = model.per_obs_loglik(j, omega);
        let sj = model.per_obs_score(j, omega0);
        for (o, s) in out.iter_mut().zip(sj) {
            *o += lj * s;
        }
    }
    out
}

/// Empirical covariance-style sum Σ_j l_ω⁽ʲ⁾(ω) · l_ω⁽ʲ⁾(ω₀)ᵀ, d × d.
pub fn empirical_i(model: &impl LikelihoodModel, omega: &ParamPoint, omega0: &ParamPoint) -> Mat {
    let d = model.dim();
    let mut out = Mat::zeros(d, d);
    for j in 0..model.n_obs() {
        let a = model.per_obs_score(j, omega);
        let b = model.per_obs_score(j, omega0);
        for r in 0..d {
            for c in 0..d {
                out[(r, c)] += a[r] * b[c];
            }
        }
    }
    out
}

/// Severini's empirical approximation to the conditional score statistic.
///
/// The sample-space derivatives in the score-statistic determinant are
/// replaced by their empirical-covariance surrogates: the nuisance block by
/// Î(ω̂_ψ; ω̂) î⁻¹ ĵ and the difference row by {Q̂(ω̂; ω̂) − Q̂(ω̂_ψ; ω̂)} î⁻¹ ĵ.
/// Nuisance rows are stacked first, the difference row last; the absolute
/// determinant is then signed to match R.
pub fn severini_u(model: &impl LikelihoodModel, fit: &ModelFit) -> Result<f64> {
    let d = model.dim();
    let ihat = empirical_i(model, &fit.mle, &fit.mle);
    let ihat_inv = ihat.inverse()?;
    let scale = ihat_inv.mul(&fit.j_full);

    let q_hat = empirical_q(model, &fit.mle, &fit.mle);
    let q_con = empirical_q(model, &fit.constrained, &fit.mle);
    let q_diff: Vec<f64> = q_hat.iter().zip(&q_con).map(|(a, b)| a - b).collect();
    let diff_row = row_vec_mul(&q_diff, &scale);

    let chi_block = empirical_i(model, &fit.constrained, &fit.mle).mul(&scale);

    let mut m = Mat::zeros(d, d);
    for r in 1..d {
        for c in 0..d {
            m[(r - 1, c)] = chi_block[(r, c)];
        }
    }
    for c in 0..d {
        m[(d - 1, c)] = diff_row[c];
    }

    let det_cc = fit.j_chichi_constrained.det();
    let det_full = fit.j_full.det();
    if !(det_cc > 0.0) || !(det_full > 0.0) {
        return Err(Error::SingularInformation);
    }
    let u = m.det().abs() / (det_cc.sqrt() * det_full.sqrt());
    if !u.is_finite() {
        return Err(Error::SingularInformation);
    }
    let sign = if fit.mle.psi > fit.constrained.psi {
        1.0
    } else if fit.mle.psi < fit.constrained.psi {
        -1.0
    } else {
        0.0
    };
    Ok(sign * u)
}

/// DiCiccio-Martin posterior-based correction statistic
/// T = l_ψ(ψ₀, χ̂₀) |j_χχ(ψ₀, χ̂₀)|^{1/2} π(ω̂) / (|j(ω̂)|^{1/2} π(ψ₀, χ̂₀)).
///
/// l_ψ is the partial derivative of the full log-likelihood at the
/// constrained fit (closed form when the model provides one, otherwise a
/// central difference), not the profile derivative.
pub fn diciccio_t(
    model: &impl LikelihoodModel,
    fit: &ModelFit,
    prior: PriorKind,
    kit: &NumericKitConfig,
) -> Result<f64> {
    let con = &fit.constrained;
    let l_psi = match model.score_psi(con) {
        Some(v) => v,
        None => {
            let chi = con.chi.clone();
            fd_derivative(
                |psi| model.loglik(&ParamPoint::new(psi, chi.clone())),
                con.psi,
                DerivOrder::First,
                kit,
            )?
        }
    };
    let det_cc = fit.j_chichi_constrained.det();
    let det_full = fit.j_full.det();
    if !(det_cc > 0.0) || !(det_full > 0.0) {
        return Err(Error::SingularInformation);
    }
    let prior_hat = model.prior(&fit.mle, prior);
    let prior_con = model.prior(con, prior);
    if !(prior_hat > 0.0) || !prior_hat.is_finite() {
        return Err(Error::NonPositivePrior { psi: fit.mle.psi });
    }
    if !(prior_con > 0.0) || !prior_con.is_finite() {
        return Err(Error::NonPositivePrior { psi: con.psi });
    }
    Ok(l_psi * det_cc.sqrt() / det_full.sqrt() * (prior_hat / prior_con))
}

/// Adjusted profile log-likelihood
/// l̄(ψ) = l(ψ, χ̂_ψ) − ½ log |j_χχ(ψ, χ̂_ψ)|.
pub fn adjusted_profile_loglik(model: &impl LikelihoodModel, psi: f64) -> Result<f64> {
    let d = model.dim();
    let con = model.constrained_mle(psi)?;
    let jcc = model.observed_info(&con).block(1, d, 1, d);
    let det = jcc.det();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::SingularInformation);
    }
    let value = model.loglik(&con) - 0.5 * det.ln();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::EvaluationFailure { x: psi })
    }
}

/// Signed root of the adjusted-profile likelihood ratio, together with the
/// maximizer ψ̄ of l̄.
pub fn coxreid_rbar(
    model: &impl LikelihoodModel,
    psi0: f64,
    kit: &NumericKitConfig,
) -> Result<(f64, f64)> {
    let psi_hat = model.mle()?.psi;
    let bracket = kit.bracket_around(psi_hat);
    let lbar = |psi: f64| adjusted_profile_loglik(model, psi).unwrap_or(f64::NAN);
    let max = maximize_scalar(lbar, bracket, kit)?;
    let lbar0 = adjusted_profile_loglik(model, psi0)?;
    let rbar = signed_sqrt(max.value - lbar0, max.x, psi0)?;
    Ok((rbar, max.x))
}

/// Cox-Reid correction statistic
/// T̄ = l̄⁽¹⁾(ψ₀) {−l̄⁽²⁾(ψ̄)}^{−1/2} π(ψ̄, χ̂_ψ̄) / π(ψ₀, χ̂₀).
///
/// The l̄ derivatives come from Richardson-extrapolated central differences:
/// each l̄ evaluation already contains an inner constrained fit whose noise
/// floor would corrupt naive second differences.
pub fn coxreid_tbar(
    model: &impl LikelihoodModel,
    psi0: f64,
    psibar: f64,
    prior: PriorKind,
    kit: &NumericKitConfig,
) -> Result<f64> {
    let lbar = |psi: f64| adjusted_profile_loglik(model, psi).unwrap_or(f64::NAN);
    let l1 = fd_derivative_richardson(lbar, psi0, DerivOrder::First, kit)?;
    let l2 = fd_derivative_richardson(lbar, psibar, DerivOrder::Second, kit)?;
    if l2 >= 0.0 {
        return Err(Error::NonConcaveAtMax(l2));
    }
    let point_bar = model.constrained_mle(psibar)?;
    let point_0 = model.constrained_mle(psi0)?;
    let prior_bar = model.prior(&point_bar, prior);
    let prior_0 = model.prior(&point_0, prior);
    if !(prior_bar > 0.0) || !prior_bar.is_finite() {
        return Err(Error::NonPositivePrior { psi: psibar });
    }
    if !(prior_0 > 0.0) || !prior_0.is_finite() {
        return Err(Error::NonPositivePrior { psi: psi0 });
    }
    Ok(l1 / (-l2).sqrt() * (prior_bar / prior_0))
}

/// Which root a correction statistic pairs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    R,
    Rbar,
}

/// Correction statistic variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionVariant {
    UBn,
    USev,
    TMatch,
    TUnif,
    TbarMatch,
    TbarUnif,
}

impl CorrectionVariant {
    pub fn root_kind(self) -> RootKind {
        match self {
            CorrectionVariant::TbarMatch | CorrectionVariant::TbarUnif => RootKind::Rbar,
            _ => RootKind::R,
        }
    }
}

/// A root/correction pair tagged with its variant. The root kind is derived
/// from the variant, so the pairing invariant holds by construction.
#[derive(Debug, Clone, Copy)]
pub struct StatisticBundle {
    pub r: f64,
    pub u: f64,
    pub variant: CorrectionVariant,
}

impl StatisticBundle {
    pub fn new(r: f64, u: f64, variant: CorrectionVariant) -> Self {
        StatisticBundle { r, u, variant }
    }

    pub fn root_kind(&self) -> RootKind {
        self.variant.root_kind()
    }

    pub fn tail_input(&self) -> TailInput {
        TailInput::new(self.r, self.u)
    }
}

/// Row tags of the p-value grid, in canonical (reporting) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowTag {
    R,
    Rbar,
    UBn,
    USev,
    TMatch,
    TUnif,
    TbarMatch,
    TbarUnif,
}

impl RowTag {
    pub const ALL: [RowTag; 8] = [
        RowTag::R,
        RowTag::Rbar,
        RowTag::UBn,
        RowTag::USev,
        RowTag::TMatch,
        RowTag::TUnif,
        RowTag::TbarMatch,
        RowTag::TbarUnif,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RowTag::R => "R",
            RowTag::Rbar => "Rbar",
            RowTag::UBn => "U_bn",
            RowTag::USev => "U_sev",
            RowTag::TMatch => "T_match",
            RowTag::TUnif => "T_unif",
            RowTag::TbarMatch => "Tbar_match",
            RowTag::TbarUnif => "Tbar_unif",
        }
    }

    pub fn parse(s: &str) -> Option<RowTag> {
        RowTag::ALL.iter().copied().find(|t| t.as_str() == s)
    }

    pub fn root_kind(self) -> RootKind {
        match self {
            RowTag::Rbar | RowTag::TbarMatch | RowTag::TbarUnif => RootKind::Rbar,
            _ => RootKind::R,
        }
    }

    pub fn correction(self) -> Option<CorrectionVariant> {
        match self {
            RowTag::R | RowTag::Rbar => None,
            RowTag::UBn => Some(CorrectionVariant::UBn),
            RowTag::USev => Some(CorrectionVariant::USev),
            RowTag::TMatch => Some(CorrectionVariant::TMatch),
            RowTag::TUnif => Some(CorrectionVariant::TUnif),
            RowTag::TbarMatch => Some(CorrectionVariant::TbarMatch),
            RowTag::TbarUnif => Some(CorrectionVariant::TbarUnif),
        }
    }
}

/// One grid cell: the p-values plus the fallback reason, if any.
#[derive(Debug, Clone, Copy)]
pub struct SuiteCell {
    pub pair: PValuePair,
    pub reason: Option<FallbackReason>,
}

/// The 8-row × 2-format grid of p-values for one dataset and one ψ₀.
#[derive(Debug, Clone)]
pub struct SuiteGrid {
    cells: Vec<SuiteCell>,
    /// Signed root R when it could be formed.
    pub r: Option<f64>,
    /// Adjusted-profile root R̄ when it could be formed.
    pub rbar: Option<f64>,
}

impl SuiteGrid {
    pub fn get(&self, row: RowTag, format: Format) -> &SuiteCell {
        let ri = RowTag::ALL.iter().position(|&t| t == row).unwrap();
        let fi = Format::ALL.iter().position(|&f| f == format).unwrap();
        &self.cells[ri * 2 + fi]
    }

    pub fn iter(&self) -> impl Iterator<Item = (RowTag, Format, &SuiteCell)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, cell)| (RowTag::ALL[i / 2], Format::ALL[i % 2], cell))
    }
}

fn unavailable_cell(root: Option<f64>, format: Format, policy: &SingularityPolicy) -> SuiteCell {
    let pair = match root {
        Some(r) if r.is_finite() => plain_phi_fallback(r, format),
        _ => near_zero_pair(format, policy),
    };
    SuiteCell {
        pair,
        reason: Some(FallbackReason::StatisticUnavailable),
    }
}

/// Both-format cells for one row. The root-only rows use u = r, under which
/// both formats reduce to Φ(r) bit-for-bit; the BN cell is computed once and
/// mirrored so the format independence is exact by construction.
fn push_root_row(cells: &mut Vec<SuiteCell>, root: f64, policy: &SingularityPolicy) {
    let (pair, reason) = guarded_pvalue_detailed(TailInput::new(root, root), Format::Bn, policy);
    cells.push(SuiteCell { pair, reason });
    let mut mirrored = pair;
    mirrored.format = Format::Lr;
    cells.push(SuiteCell {
        pair: mirrored,
        reason,
    });
}

fn push_correction_row(
    cells: &mut Vec<SuiteCell>,
    root: Option<f64>,
    u: Result<f64>,
    variant: CorrectionVariant,
    policy: &SingularityPolicy,
) {
    match (root, u) {
        (Some(r), Ok(u)) => {
            let bundle = StatisticBundle::new(r, u, variant);
            for format in Format::ALL {
                let (pair, reason) = guarded_pvalue_detailed(bundle.tail_input(), format, policy);
                cells.push(SuiteCell { pair, reason });
            }
        }
        (root, _) => {
            for format in Format::ALL {
                cells.push(unavailable_cell(root, format, policy));
            }
        }
    }
}

/// Evaluate the full p-value grid: Φ(R) and Φ(R̄), plus the six correction
/// statistics through both output formats. Per-cell failures become flagged
/// fallbacks, never panics.
pub fn pvalue_suite(
    model: &impl LikelihoodModel,
    psi0: f64,
    policy: &SingularityPolicy,
    kit: &NumericKitConfig,
) -> SuiteGrid {
    let mut cells = Vec::with_capacity(16);

    let fit = match fit_model(model, psi0) {
        Ok(f) => f,
        Err(_) => {
            for _ in RowTag::ALL {
                for format in Format::ALL {
                    cells.push(unavailable_cell(None, format, policy));
                }
            }
            return SuiteGrid {
                cells,
                r: None,
                rbar: None,
            };
        }
    };
    let r = signed_root(&fit).ok();
    let rbar_fit = coxreid_rbar(model, psi0, kit).ok();
    let rbar = rbar_fit.map(|(rb, _)| rb);

    for row in RowTag::ALL {
        match row {
            RowTag::R => match r {
                Some(r) => push_root_row(&mut cells, r, policy),
                None => {
                    for format in Format::ALL {
                        cells.push(unavailable_cell(None, format, policy));
                    }
                }
            },
            RowTag::Rbar => match rbar {
                Some(rb) => push_root_row(&mut cells, rb, policy),
                None => {
                    for format in Format::ALL {
                        cells.push(unavailable_cell(None, format, policy));
                    }
                }
            },
            RowTag::UBn => {
                let u = match model.bn_correction(psi0) {
                    Some(res) => res,
                    None => Err(Error::EvaluationFailure { x: psi0 }),
                };
                push_correction_row(&mut cells, r, u, CorrectionVariant::UBn, policy);
            }
            RowTag::USev => {
                push_correction_row(
                    &mut cells,
                    r,
                    severini_u(model, &fit),
                    CorrectionVariant::USev,
                    policy,
                );
            }
            RowTag::TMatch => {
                push_correction_row(
                    &mut cells,
                    r,
                    diciccio_t(model, &fit, PriorKind::Matching, kit),
                    CorrectionVariant::TMatch,
                    policy,
                );
            }
            RowTag::TUnif => {
                push_correction_row(
                    &mut cells,
                    r,
                    diciccio_t(model, &fit, PriorKind::Uniform, kit),
                    CorrectionVariant::TUnif,
                    policy,
                );
            }
            RowTag::TbarMatch | RowTag::TbarUnif => {
                let (prior, variant) = if row == RowTag::TbarMatch {
                    (PriorKind::Matching, CorrectionVariant::TbarMatch)
                } else {
                    (PriorKind::Uniform, CorrectionVariant::TbarUnif)
                };
                let u = match rbar_fit {
                    Some((_, psibar)) => coxreid_tbar(model, psi0, psibar, prior, kit),
                    None => Err(Error::EvaluationFailure { x: psi0 }),
                };
                push_correction_row(&mut cells, rbar, u, variant, policy);
            }
        }
    }

    SuiteGrid { cells, r, rbar }
}

/// Cell CDF used by the confidence-limit search. Near-zero roots take the
/// continuous Φ(root) extension instead of the policy p-value, so bisection
/// around ψ̂ stays well posed; other fallbacks mirror the guarded path.
fn cell_cdf_for_search(
    model: &impl LikelihoodModel,
    psi0: f64,
    row: RowTag,
    format: Format,
    policy: &SingularityPolicy,
    kit: &NumericKitConfig,
) -> Result<f64> {
    let fit = fit_model(model, psi0)?;
    let (root, psibar) = match row.root_kind() {
        RootKind::R => (signed_root(&fit)?, None),
        RootKind::Rbar => {
            let (rb, pb) = coxreid_rbar(model, psi0, kit)?;
            (rb, Some(pb))
        }
    };
    let u = match row.correction() {
        None => return Ok(std_normal_cdf(root)),
        Some(CorrectionVariant::UBn) => match model.bn_correction(psi0) {
            Some(res) => res?,
            None => return Err(Error::EvaluationFailure { x: psi0 }),
        },
        Some(CorrectionVariant::USev) => severini_u(model, &fit)?,
        Some(CorrectionVariant::TMatch) => diciccio_t(model, &fit, PriorKind::Matching, kit)?,
        Some(CorrectionVariant::TUnif) => diciccio_t(model, &fit, PriorKind::Uniform, kit)?,
        Some(CorrectionVariant::TbarMatch) => {
            coxreid_tbar(model, psi0, psibar.unwrap(), PriorKind::Matching, kit)?
        }
        Some(CorrectionVariant::TbarUnif) => {
            coxreid_tbar(model, psi0, psibar.unwrap(), PriorKind::Uniform, kit)?
        }
    };
    if root.abs() <= policy.r_threshold || !u.is_finite() || u / root <= 0.0 {
        return Ok(std_normal_cdf(root));
    }
    let input = TailInput::new(root, u);
    let eval: FormatEval = match format {
        Format::Bn => bn_format(input, policy)?,
        Format::Lr => lr_format(input, policy)?,
    };
    Ok(eval.cdf)
}

const CDF_TARGET_TOL: f64 = 1e-8;

/// ψ₀ whose cell CDF equals `alpha`: an approximate upper 1 − α confidence
/// limit. Bisection on a bracket expanded around ψ̂, with an explicit
/// monotonicity scan — a non-monotone cell is reported, not guessed around.
pub fn upper_confidence_limit(
    model: &impl LikelihoodModel,
    alpha: f64,
    row: RowTag,
    format: Format,
    policy: &SingularityPolicy,
    kit: &NumericKitConfig,
) -> Result<f64> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let psi_hat = model.mle()?.psi;
    let (mut lo, mut hi) = kit.bracket_around(psi_hat);
    let cdf = |p: f64| cell_cdf_for_search(model, p, row, format, policy, kit);

    // The cell CDF decreases in psi0; expand until it straddles alpha.
    let mut f_lo = cdf(lo)?;
    let mut f_hi = cdf(hi)?;
    let mut expansions = 0;
    while (f_lo < alpha || f_hi > alpha) && expansions < 4 {
        if f_lo < alpha {
            lo /= 10.0;
            f_lo = cdf(lo)?;
        }
        if f_hi > alpha {
            hi *= 10.0;
            f_hi = cdf(hi)?;
        }
        expansions += 1;
    }
    if f_lo < alpha || f_hi > alpha {
        return Err(Error::BracketFailure { expansions });
    }

    // Monotonicity scan across the bracket.
    let probes = 17;
    let mut prev = f_lo;
    for k in 1..probes {
        let p = lo + (hi - lo) * (k as f64) / (probes as f64 - 1.0);
        let v = cdf(p)?;
        if v > prev + 1e-9 {
            return Err(Error::NonMonotone);
        }
        prev = v;
    }

    for _ in 0..kit.max_iter.max(200) {
        let mid = 0.5 * (lo + hi);
        let fm = cdf(mid)?;
        if (fm - alpha).abs() <= CDF_TARGET_TOL {
            return Ok(mid);
        }
        if fm > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        max_iter: kit.max_iter.max(200),
    })
}

/// Numeric constrained fit by scalar maximization over the nuisance
/// parameter; supports at most one nuisance dimension. Kept as an
/// independent cross-check of closed-form estimators.
pub fn numeric_constrained_mle(
    model: &impl LikelihoodModel,
    psi0: f64,
    chi_center: f64,
    kit: &NumericKitConfig,
) -> Result<ParamPoint> {
    match model.dim() {
        1 => Ok(ParamPoint::new(psi0, vec![])),
        2 => {
            let max = maximize_scalar(
                |chi| model.loglik(&ParamPoint::new(psi0, vec![chi])),
                kit.bracket_around(chi_center),
                kit,
            )?;
            Ok(ParamPoint::new(psi0, vec![max.x]))
        }
        d => Err(Error::DegenerateData(format!(
            "numeric fit supports at most one nuisance parameter, model has {}",
            d - 1
        ))),
    }
}

/// Numeric global fit by nested scalar maximization (profile over ψ with an
/// inner numeric constrained fit).
pub fn numeric_mle(
    model: &impl LikelihoodModel,
    psi_center: f64,
    chi_center: f64,
    kit: &NumericKitConfig,
) -> Result<ParamPoint> {
    match model.dim() {
        1 => {
            let max = maximize_scalar(
                |psi| model.loglik(&ParamPoint::new(psi, vec![])),
                kit.bracket_around(psi_center),
                kit,
            )?;
            Ok(ParamPoint::new(max.x, vec![]))
        }
        2 => {
            let profile = |psi: f64| match numeric_constrained_mle(model, psi, chi_center, kit) {
                Ok(p) => model.loglik(&p),
                Err(_) => f64::NAN,
            };
            let max = maximize_scalar(profile, kit.bracket_around(psi_center), kit)?;
            numeric_constrained_mle(model, max.x, chi_center, kit)
        }
        d => Err(Error::DegenerateData(format!(
            "numeric fit supports at most one nuisance parameter, model has {}",
            d - 1
        ))),
    }
}
