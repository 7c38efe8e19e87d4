//! TOML run configuration: one flat table per section.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statvar::forecast::ForecastMode;
use statvar::inference::{GradientMode, HmcConfig};
use statvar::prior::{
    AllOnesCentredLag, DiagonalCentredLag, DiagonalMean, ExchangeableHyper, GammaHyper, InverseWishart,
    MinnesotaHyper, NormalGamma, PriorKind, PriorSpec, SparseHyper,
};
use statvar::{Matrix, SpdMatrix};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub hmc: HmcSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub score: ScoreSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub p: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { p: 1 }
    }
}

/// Hyperparameters shared by every lag. Unset values fall back to the
/// Prior-1 normal-gamma (or `preset`, for the exchangeable prior).
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    /// exchangeable | diagonal-centred | all-ones-centred | sparse | rml-vague
    pub kind: String,
    /// prior1 | prior2
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag_h: Option<f64>,
    /// Diagonal-centred prior with fixed `N(mean, cov)` on the diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_cov: Option<Vec<Vec<f64>>>,
    /// All-ones-centred prior: mean `N(e, f²)` shared by every entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    /// All-ones-centred prior: one precision for every entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_precision: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_diag: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_offdiag: Option<f64>,
    /// `Σ ~ IW(sigma_df, sigma_scale)`; defaults `m + 4` and `I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_df: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_scale: Option<Vec<Vec<f64>>>,
}

impl Default for PriorSection {
    fn default() -> Self {
        Self {
            kind: "exchangeable".into(),
            preset: Some("prior1".into()),
            diag_e: None,
            diag_f: None,
            diag_g: None,
            diag_h: None,
            offdiag_e: None,
            offdiag_f: None,
            offdiag_g: None,
            offdiag_h: None,
            diag_mean: None,
            diag_cov: None,
            e: None,
            f: None,
            shared_precision: None,
            nu_diag: None,
            nu_offdiag: None,
            sigma_df: None,
            sigma_scale: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HmcSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_accept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_leapfrog: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_jitter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// ad | fd
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Trailing observations kept out of the fit.
    #[serde(default)]
    pub holdout: usize,
    /// Log-transform these columns (by header name) first.
    #[serde(default)]
    pub log: Vec<String>,
    /// Order of differencing, 0, 1 or 2.
    #[serde(default)]
    pub difference: usize,
    #[serde(default)]
    pub standardise: bool,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    /// rolling | fixed-origin
    pub mode: String,
    /// 1-based variables of interest; defaults to the first three.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<usize>>,
    /// Any of minnesota, semi-conjugate.
    #[serde(default)]
    pub baselines: Vec<String>,
    pub max_score_draws: usize,
    pub minnesota_draws: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub own_lag_mean: f64,
    /// Prior draws used to match the semi-conjugate moments.
    pub match_draws: usize,
    pub seed: u64,
}

impl Default for ScoreSection {
    fn default() -> Self {
        let mn = MinnesotaHyper::default();
        Self {
            mode: ForecastMode::Rolling.name().into(),
            variables: None,
            baselines: Vec::new(),
            max_score_draws: 1000,
            minnesota_draws: 4000,
            lambda1: mn.lambda1,
            lambda2: mn.lambda2,
            own_lag_mean: mn.own_lag_mean,
            match_draws: 4000,
            seed: 1,
        }
    }
}

/// Either an explicit model (`sigma` and `phi`) or a draw from `[prior]`
/// with dimension `m` and order `model.p`.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    /// One `m × m` matrix per lag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default = "one")]
    pub seed: u64,
}

fn one() -> u64 {
    1
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

pub fn parse_mode(s: &str) -> CliResult<ForecastMode> {
    match s {
        "rolling" => Ok(ForecastMode::Rolling),
        "fixed-origin" => Ok(ForecastMode::FixedOrigin),
        _ => Err(invalid(format!("mode must be rolling or fixed-origin, got {s:?}"))),
    }
}

pub fn parse_gradient(s: &str) -> CliResult<GradientMode> {
    match s {
        "ad" => Ok(GradientMode::Automatic),
        "fd" => Ok(GradientMode::FiniteDifference),
        _ => Err(invalid(format!("gradient must be ad or fd, got {s:?}"))),
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> CliResult<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{what} must be a non-empty square matrix")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::ConfigInvalid(msg) => CliError::ConfigInvalid(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        Ok((cfg, text))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> CliResult<()> {
        if self.model.p == 0 {
            return Err(invalid("model.p must be at least 1"));
        }
        if self.data.difference > 2 {
            return Err(invalid("data.difference must be 0, 1 or 2"));
        }
        parse_mode(&self.score.mode)?;
        if let Some(g) = &self.hmc.gradient {
            parse_gradient(g)?;
        }
        for b in &self.score.baselines {
            if b != "minnesota" && b != "semi-conjugate" {
                return Err(invalid(format!("unknown baseline {b:?}")));
            }
        }
        if let Some(v) = &self.score.variables {
            if v.is_empty() || v.contains(&0) {
                return Err(invalid("score.variables are 1-based and must be non-empty"));
            }
        }
        Ok(())
    }

    /// `holdout < n − p` for the preprocessed length `n`.
    pub fn validate_length(&self, n: usize) -> CliResult<()> {
        if self.data.holdout + self.model.p >= n {
            return Err(invalid(format!(
                "holdout {} and p {} leave no data to fit from {n} observations",
                self.data.holdout, self.model.p
            )));
        }
        Ok(())
    }

    pub fn hmc_config(&self) -> CliResult<HmcConfig> {
        let d = HmcConfig::default();
        let h = &self.hmc;
        let cfg = HmcConfig {
            chains: h.chains.unwrap_or(d.chains),
            iterations: h.iterations.unwrap_or(d.iterations),
            warmup: h.warmup.unwrap_or(d.warmup),
            target_accept: h.target_accept.unwrap_or(d.target_accept),
            max_leapfrog: h.max_leapfrog.unwrap_or(d.max_leapfrog),
            seed: h.seed.unwrap_or(d.seed),
            init_jitter: h.init_jitter.unwrap_or(d.init_jitter),
        };
        cfg.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn gradient(&self) -> CliResult<GradientMode> {
        self.hmc.gradient.as_deref().map_or(Ok(GradientMode::Automatic), parse_gradient)
    }

    pub fn mode(&self) -> CliResult<ForecastMode> {
        parse_mode(&self.score.mode)
    }

    pub fn minnesota(&self) -> MinnesotaHyper {
        MinnesotaHyper {
            lambda1: self.score.lambda1,
            lambda2: self.score.lambda2,
            own_lag_mean: self.score.own_lag_mean,
        }
    }

    /// 0-based variables of interest.
    pub fn subset(&self, m: usize) -> CliResult<Vec<usize>> {
        match &self.score.variables {
            None => Ok((0..m.min(3)).collect()),
            Some(v) => {
                if let Some(bad) = v.iter().find(|&&j| j > m) {
                    return Err(invalid(format!("score.variables: {bad} exceeds the {m} series")));
                }
                Ok(v.iter().map(|j| j - 1).collect())
            }
        }
    }
}

impl PriorSection {
    fn normal_gamma(&self, diag: bool, base: NormalGamma) -> NormalGamma {
        let (e, f, g, h) = if diag {
            (self.diag_e, self.diag_f, self.diag_g, self.diag_h)
        } else {
            (self.offdiag_e, self.offdiag_f, self.offdiag_g, self.offdiag_h)
        };
        NormalGamma {
            e: e.unwrap_or(base.e),
            f: f.unwrap_or(base.f),
            g: g.unwrap_or(base.g),
            h: h.unwrap_or(base.h),
        }
    }

    fn gamma(&self, diag: bool) -> GammaHyper {
        let base = NormalGamma::PRIOR1;
        let (g, h) = if diag {
            (self.diag_g, self.diag_h)
        } else {
            (self.offdiag_g, self.offdiag_h)
        };
        GammaHyper {
            g: g.unwrap_or(base.g),
            h: h.unwrap_or(base.h),
        }
    }

    fn sigma(&self, m: usize) -> CliResult<InverseWishart> {
        let df = self.sigma_df.unwrap_or(m as f64 + 4.0);
        let scale = match &self.sigma_scale {
            Some(rows) => {
                let s = matrix_from_rows(rows, "prior.sigma_scale")?;
                if s.rows() != m {
                    return Err(invalid(format!("prior.sigma_scale is {0}×{0} but the data have {m} series", s.rows())));
                }
                SpdMatrix::new(s).map_err(|e| invalid(format!("prior.sigma_scale: {e}")))?
            }
            None => SpdMatrix::identity(m),
        };
        InverseWishart::new(df, scale).map_err(|e| invalid(format!("prior.sigma_df: {e}")))
    }

    pub fn to_spec(&self, m: usize, p: usize) -> CliResult<PriorSpec> {
        let kind = match self.kind.as_str() {
            "exchangeable" => {
                let base = match self.preset.as_deref().unwrap_or("prior1") {
                    "prior1" => NormalGamma::PRIOR1,
                    "prior2" => NormalGamma::PRIOR2,
                    other => return Err(invalid(format!("unknown prior.preset {other:?}"))),
                };
                PriorKind::ExchangeableHierarchical(ExchangeableHyper::uniform(
                    p,
                    self.normal_gamma(true, base),
                    self.normal_gamma(false, base),
                ))
            }
            "diagonal-centred" => {
                let diag = match (&self.diag_mean, &self.diag_cov) {
                    (None, None) => DiagonalMean::Hierarchical(self.normal_gamma(true, NormalGamma::PRIOR1)),
                    (Some(mean), Some(cov)) => {
                        let cov = matrix_from_rows(cov, "prior.diag_cov")?;
                        if mean.len() != m || cov.rows() != m {
                            return Err(invalid(format!("prior.diag_mean and prior.diag_cov must have dimension {m}")));
                        }
                        DiagonalMean::Fixed {
                            mean: mean.clone(),
                            cov: SpdMatrix::new(cov).map_err(|e| invalid(format!("prior.diag_cov: {e}")))?,
                        }
                    }
                    _ => return Err(invalid("prior.diag_mean and prior.diag_cov go together")),
                };
                PriorKind::DiagonalCentred(vec![
                    DiagonalCentredLag {
                        diag,
                        offdiag_precision: self.gamma(false),
                    };
                    p
                ])
            }
            "all-ones-centred" => {
                let base = NormalGamma::PRIOR1;
                let lag = AllOnesCentredLag {
                    e: self.e.unwrap_or(base.e),
                    f: self.f.unwrap_or(base.f),
                    diag_precision: self.gamma(true),
                    offdiag_precision: (!self.shared_precision.unwrap_or(false)).then(|| self.gamma(false)),
                };
                PriorKind::AllOnesCentred(vec![lag; p])
            }
            "sparse" => {
                let d = SparseHyper::default();
                PriorKind::SparseScaleMixture(SparseHyper {
                    nu_diag: self.nu_diag.unwrap_or(d.nu_diag),
                    nu_offdiag: self.nu_offdiag.unwrap_or(d.nu_offdiag),
                })
            }
            "rml-vague" => PriorKind::RmlVague,
            other => return Err(invalid(format!("unknown prior.kind {other:?}"))),
        };
        let spec = PriorSpec::new(kind, self.sigma(m)?);
        spec.validate(m, p).map_err(|e| invalid(e.to_string()))?;
        Ok(spec)
    }

    /// The section describing `spec`; fails where lags carry different
    /// hyperparameters or for the baselines, which have no `[prior]` form.
    pub fn from_spec(spec: &PriorSpec) -> CliResult<Self> {
        fn same<T: PartialEq + Clone>(lags: &[T]) -> CliResult<T> {
            match lags.split_first() {
                Some((first, rest)) if rest.iter().all(|l| l == first) => Ok(first.clone()),
                Some(_) => Err(invalid("per-lag hyperparameters differ")),
                None => Err(invalid("no lags")),
            }
        }
        let mut s = Self {
            kind: spec.kind.name().into(),
            preset: None,
            ..Self::default()
        };
        let set_ng = |s: &mut Self, diag: bool, ng: NormalGamma| {
            let slots = if diag {
                [&mut s.diag_e, &mut s.diag_f, &mut s.diag_g, &mut s.diag_h]
            } else {
                [&mut s.offdiag_e, &mut s.offdiag_f, &mut s.offdiag_g, &mut s.offdiag_h]
            };
            for (slot, v) in slots.into_iter().zip([ng.e, ng.f, ng.g, ng.h]) {
                *slot = Some(v);
            }
        };
        match &spec.kind {
            PriorKind::ExchangeableHierarchical(h) => {
                let lag = same(&h.lags)?;
                set_ng(&mut s, true, lag.diag);
                set_ng(&mut s, false, lag.offdiag);
            }
            PriorKind::DiagonalCentred(lags) => {
                let lag = same(lags)?;
                match lag.diag {
                    DiagonalMean::Hierarchical(ng) => set_ng(&mut s, true, ng),
                    DiagonalMean::Fixed { mean, cov } => {
                        s.diag_mean = Some(mean);
                        s.diag_cov = Some(matrix_to_rows(cov.as_matrix()));
                    }
                }
                s.offdiag_g = Some(lag.offdiag_precision.g);
                s.offdiag_h = Some(lag.offdiag_precision.h);
            }
            PriorKind::AllOnesCentred(lags) => {
                let lag = same(lags)?;
                s.e = Some(lag.e);
                s.f = Some(lag.f);
                s.diag_g = Some(lag.diag_precision.g);
                s.diag_h = Some(lag.diag_precision.h);
                match lag.offdiag_precision {
                    Some(g) => {
                        s.offdiag_g = Some(g.g);
                        s.offdiag_h = Some(g.h);
                    }
                    None => s.shared_precision = Some(true),
                }
            }
            PriorKind::SparseScaleMixture(h) => {
                s.nu_diag = Some(h.nu_diag);
                s.nu_offdiag = Some(h.nu_offdiag);
            }
            PriorKind::RmlVague => {}
            PriorKind::MinnesotaBaseline(_) | PriorKind::SemiConjugateBaseline(_) => {
                return Err(invalid(format!("the {} baseline is configured under [score]", spec.kind.name())))
            }
        }
        s.sigma_df = Some(spec.sigma.df());
        s.sigma_scale = Some(matrix_to_rows(spec.sigma.scale().as_matrix()));
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_prior1() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.model.p, 1);
        assert_eq!(cfg.prior.to_spec(2, 1).unwrap(), PriorSpec::prior1(2, 1));
        assert_eq!(cfg.hmc_config().unwrap(), HmcConfig::default());
        assert_eq!(cfg.subset(5).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn preset_and_overrides() {
        let cfg = RunConfig::from_toml("[model]\np = 2\n[prior]\nkind = \"exchangeable\"\npreset = \"prior2\"\n").unwrap();
        assert_eq!(cfg.prior.to_spec(3, 2).unwrap(), PriorSpec::prior2(3, 2));
        let cfg = RunConfig::from_toml("[prior]\nkind = \"exchangeable\"\noffdiag_e = 0.5\n").unwrap();
        let PriorKind::ExchangeableHierarchical(h) = cfg.prior.to_spec(2, 1).unwrap().kind else {
            panic!()
        };
        assert_eq!(h.lags[0].offdiag.e, 0.5);
        assert_eq!(h.lags[0].diag, NormalGamma::PRIOR1);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "[model]\np = 0\n",
            "[data]\ndifference = 3\n",
            "[score]\nmode = \"sideways\"\n",
            "[model]\nq = 1\n",
            "[hmc]\ngradient = \"exact\"\n",
            "[score]\nbaselines = [\"ols\"]\n",
            "p = 1",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(CliError::ConfigInvalid(_))), "{text}");
        }
        let cfg = RunConfig::from_toml("[prior]\nkind = \"sparse\"\nnu_diag = -1.0\n").unwrap();
        assert!(cfg.prior.to_spec(2, 1).is_err());
        let cfg = RunConfig::from_toml("[hmc]\nwarmup = 5000\n").unwrap();
        assert!(cfg.hmc_config().is_err());
    }

    #[test]
    fn holdout_must_leave_data() {
        let cfg = RunConfig::from_toml("[model]\np = 2\n[data]\nholdout = 8\n").unwrap();
        assert!(cfg.validate_length(11).is_ok());
        assert!(cfg.validate_length(10).is_err());
    }

    #[test]
    fn prior_section_roundtrips() {
        let specs = [
            PriorSpec::prior2(2, 2),
            PriorSection {
                kind: "all-ones-centred".into(),
                shared_precision: Some(true),
                ..PriorSection::default()
            }
            .to_spec(3, 1)
            .unwrap(),
            PriorSection {
                kind: "diagonal-centred".into(),
                diag_mean: Some(vec![0.5, 0.5]),
                diag_cov: Some(vec![vec![1.0, 0.2], vec![0.2, 1.0]]),
                ..PriorSection::default()
            }
            .to_spec(2, 2)
            .unwrap(),
            PriorSection {
                kind: "sparse".into(),
                nu_offdiag: Some(5.0),
                sigma_df: Some(9.0),
                ..PriorSection::default()
            }
            .to_spec(2, 1)
            .unwrap(),
        ];
        for spec in specs {
            let (m, p) = (spec.sigma.dim(), spec_lags(&spec));
            let section = PriorSection::from_spec(&spec).unwrap();
            let text = toml::to_string(&section).unwrap();
            let back: PriorSection = toml::from_str(&text).unwrap();
            assert_eq!(back.to_spec(m, p).unwrap(), spec, "{text}");
        }
    }

    fn spec_lags(spec: &PriorSpec) -> usize {
        match &spec.kind {
            PriorKind::ExchangeableHierarchical(h) => h.lags.len(),
            PriorKind::DiagonalCentred(l) => l.len(),
            PriorKind::AllOnesCentred(l) => l.len(),
            _ => 1,
        }
    }

    #[test]
    fn subset_is_one_based() {
        let cfg = RunConfig::from_toml("[score]\nvariables = [2, 3]\n").unwrap();
        assert_eq!(cfg.subset(3).unwrap(), vec![1, 2]);
        assert!(cfg.subset(2).is_err());
    }
}
