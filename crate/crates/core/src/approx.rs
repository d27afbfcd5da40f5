//! Tail-probability formats, p-value assembly and the near-zero-root guard.

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_pdf};

/// Output format of the tail approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Bn,
    Lr,
}

impl Format {
    pub const ALL: [Format; 2] = [Format::Bn, Format::Lr];

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Bn => "BN",
            Format::Lr => "LR",
        }
    }

    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "BN" => Some(Format::Bn),
            "LR" => Some(Format::Lr),
            _ => None,
        }
    }
}

/// Signed root and correction statistic fed to the tail formats.
///
/// In regular cases `u` carries the sign of `r`; violations are routed to
/// the fallback policy by [`guarded_pvalue`], never accepted silently.
#[derive(Debug, Clone, Copy)]
pub struct TailInput {
    pub r: f64,
    pub u: f64,
}

impl TailInput {
    pub fn new(r: f64, u: f64) -> Self {
        TailInput { r, u }
    }
}

/// Guard band around r = 0 and the p-value reported inside it.
///
/// Both format formulas have a removable singularity at r = 0 and lose
/// numerical stability once |r| drops below the threshold; such replicates
/// are reported as non-rejections.
#[derive(Debug, Clone, Copy)]
pub struct SingularityPolicy {
    pub r_threshold: f64,
    pub near_zero_pvalue: f64,
}

impl Default for SingularityPolicy {
    fn default() -> Self {
        SingularityPolicy {
            r_threshold: 1e-4,
            near_zero_pvalue: 1.0,
        }
    }
}

impl SingularityPolicy {
    pub fn validate(&self) -> crate::error::Result<()> {
        if !(self.r_threshold > 0.0) || !self.r_threshold.is_finite() {
            return Err(crate::error::Error::DegenerateData(format!(
                "r_threshold must be positive, got {}",
                self.r_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.near_zero_pvalue) {
            return Err(crate::error::Error::DegenerateData(format!(
                "near_zero_pvalue must lie in [0, 1], got {}",
                self.near_zero_pvalue
            )));
        }
        Ok(())
    }
}

/// Approximate CDF with one- and two-sided p-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValuePair {
    /// Approximate P[R ≤ r].
    pub cdf: f64,
    /// P[R ≥ r] = 1 − cdf.
    pub one_sided: f64,
    /// 2·min(cdf, 1 − cdf).
    pub two_sided: f64,
    pub format: Format,
    pub fallback_used: bool,
}

/// Why a guarded evaluation fell back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackReason {
    /// |r| at or below the policy threshold.
    NearZeroRoot,
    /// u/r ≤ 0, so the format formulas do not apply.
    SignMismatch,
    /// Raw format value left [0, 1] and was clamped.
    OutOfRange,
    /// r or u was not a finite number.
    NonFinite,
    /// The correction statistic could not be computed for this model.
    StatisticUnavailable,
}

/// Raw format evaluation, plus whether clamping was needed.
#[derive(Debug, Clone, Copy)]
pub struct FormatEval {
    pub cdf: f64,
    pub clamped: bool,
}

/// Φ{r + r⁻¹ log(u/r)}. Collapses to Φ(r) when u = r.
pub fn bn_format(input: TailInput, policy: &SingularityPolicy) -> Result<FormatEval> {
    if input.r.abs() <= policy.r_threshold {
        return Err(Error::NearZeroRoot {
            value: input.r,
            threshold: policy.r_threshold,
        });
    }
    let ratio = input.u / input.r;
    if !(ratio > 0.0) {
        return Err(Error::NonPositiveRatio { ratio });
    }
    let z = input.r + ratio.ln() / input.r;
    Ok(FormatEval {
        cdf: std_normal_cdf(z),
        clamped: false,
    })
}

/// Φ(r) + φ(r)(r⁻¹ − u⁻¹), clamped to [0, 1].
pub fn lr_format(input: TailInput, policy: &SingularityPolicy) -> Result<FormatEval> {
    if input.r.abs() <= policy.r_threshold {
        return Err(Error::NearZeroRoot {
            value: input.r,
            threshold: policy.r_threshold,
        });
    }
    if input.u == 0.0 {
        return Err(Error::ZeroCorrection);
    }
    let raw = std_normal_cdf(input.r) + std_normal_pdf(input.r) * (1.0 / input.r - 1.0 / input.u);
    if (0.0..=1.0).contains(&raw) {
        Ok(FormatEval {
            cdf: raw,
            clamped: false,
        })
    } else {
        Ok(FormatEval {
            cdf: raw.clamp(0.0, 1.0),
            clamped: true,
        })
    }
}

/// One- and two-sided p-values for an approximate CDF value in [0, 1].
pub fn assemble_pvalues(cdf: f64, format: Format) -> PValuePair {
    debug_assert!((0.0..=1.0).contains(&cdf));
    let one_sided = 1.0 - cdf;
    PValuePair {
        cdf,
        one_sided,
        two_sided: 2.0 * cdf.min(one_sided),
        format,
        fallback_used: false,
    }
}

/// Total evaluation: every failure becomes a flagged fallback.
///
/// Near-zero roots yield the policy p-value for both sidednesses; a sign
/// mismatch or a failed/clamped format evaluation falls back to plain Φ(r).
pub fn guarded_pvalue(input: TailInput, format: Format, policy: &SingularityPolicy) -> PValuePair {
    guarded_pvalue_detailed(input, format, policy).0
}

/// As [`guarded_pvalue`], also reporting why a fallback was taken.
pub fn guarded_pvalue_detailed(
    input: TailInput,
    format: Format,
    policy: &SingularityPolicy,
) -> (PValuePair, Option<FallbackReason>) {
    if !input.r.is_finite() {
        return (
            near_zero_pair(format, policy),
            Some(FallbackReason::NonFinite),
        );
    }
    if input.r.abs() <= policy.r_threshold {
        return (
            near_zero_pair(format, policy),
            Some(FallbackReason::NearZeroRoot),
        );
    }
    if !input.u.is_finite() {
        return (
            plain_phi_fallback(input.r, format),
            Some(FallbackReason::NonFinite),
        );
    }
    if input.u / input.r <= 0.0 {
        return (
            plain_phi_fallback(input.r, format),
            Some(FallbackReason::SignMismatch),
        );
    }
    let eval = match format {
        Format::Bn => bn_format(input, policy),
        Format::Lr => lr_format(input, policy),
    };
    match eval {
        Ok(FormatEval {
            cdf,
            clamped: false,
        }) => (assemble_pvalues(cdf, format), None),
        Ok(FormatEval { cdf, clamped: true }) => {
            let mut pair = assemble_pvalues(cdf, format);
            pair.fallback_used = true;
            (pair, Some(FallbackReason::OutOfRange))
        }
        Err(_) => (
            plain_phi_fallback(input.r, format),
            Some(FallbackReason::SignMismatch),
        ),
    }
}

/// Policy result for a root inside the guard band: the configured p-value for
/// both sidednesses. `cdf` is set to keep one_sided + cdf = 1.
pub fn near_zero_pair(format: Format, policy: &SingularityPolicy) -> PValuePair {
    PValuePair {
        cdf: 1.0 - policy.near_zero_pvalue,
        one_sided: policy.near_zero_pvalue,
        two_sided: policy.near_zero_pvalue,
        format,
        fallback_used: true,
    }
}

pub(crate) fn plain_phi_fallback(r: f64, format: Format) -> PValuePair {
    let mut pair = assemble_pvalues(std_normal_cdf(r), format);
    pair.fallback_used = true;
    pair
}
