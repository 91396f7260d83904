//! Plain-text experiment configuration.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! [experiment]          section header: experiment, env or policy
//! key = value           keys are [a-z0-9_]+, values are trimmed
//! ```
//!
//! `[experiment]` and `[env]` appear once; each `[policy]` block adds one
//! policy. Unknown keys, repeated keys and unregistered algorithms are errors.

use std::fmt::Write as _;

use crate::concentration::{ConfidenceLevel, ProxyFamily, TailSpec};
use crate::distributions::NoiseModel;
use crate::env::{CbEnvSpec, MabEnvSpec};
use crate::error::{config_err, Result, ZibError};
use crate::glm::{random_period_tau, GlmParams, Link, LinkPair};
use crate::mab::{ClipMode, DirectTsParams, ZiTsParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub column: usize,
    pub value_column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

fn parse_error(line: usize, column: usize, reason: impl Into<String>) -> ZibError {
    ZibError::Parse { line, column, reason: reason.into() }
}

/// Split configuration text into sections of `key = value` entries.
pub fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let col = |offset: usize| raw[..offset].chars().count() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(parse_error(line, col(indent), "unterminated section header"));
            };
            let name = name.trim();
            if !matches!(name, "experiment" | "env" | "policy") {
                return Err(parse_error(line, col(indent + 1), format!("unknown section `{name}`")));
            }
            if name != "policy" && sections.iter().any(|s| s.name == name) {
                return Err(parse_error(line, col(indent), format!("section `[{name}]` repeated")));
            }
            sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(parse_error(line, col(indent), "expected `key = value` or a `[section]` header"));
        };
        let key = content[..eq].trim();
        let value_raw = &content[eq + 1..];
        let value = value_raw.trim();
        let value_offset = eq + 1 + (value_raw.len() - value_raw.trim_start().len());
        if key.is_empty() || !key.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
            return Err(parse_error(line, col(indent), format!("invalid key `{key}`")));
        }
        if value.is_empty() {
            return Err(parse_error(line, col(value_offset), format!("missing value for `{key}`")));
        }
        let Some(section) = sections.last_mut() else {
            return Err(parse_error(line, col(indent), "key outside of any section"));
        };
        if section.entries.iter().any(|e| e.key == key) {
            return Err(parse_error(line, col(indent), format!("key `{key}` repeated in [{}]", section.name)));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            column: col(indent),
            value_column: col(value_offset),
        });
    }
    Ok(sections)
}

/// Typed access to a section that tracks which keys were consumed.
struct Reader<'a> {
    section: &'a Section,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section) -> Self {
        Reader { section, used: vec![false; section.entries.len()] }
    }

    fn take(&mut self, key: &str) -> Option<&'a Entry> {
        let i = self.section.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.section.entries[i])
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| parse_error(e.line, e.value_column, format!("`{key}` expects {what}, got `{}`", e.value))),
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, "a number")
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.parsed(key, "a nonnegative integer")
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.parsed(key, "a nonnegative integer")
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.parsed(key, "`true` or `false`")
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| parse_error(e.line, e.value_column, format!("`{key}` expects comma-separated numbers"))),
        }
    }

    /// A keyword from `options`.
    fn choice(&mut self, key: &str, options: &[&str]) -> Result<Option<(&'a str, &'a Entry)>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match options.iter().find(|o| **o == e.value) {
                Some(_) => Ok(Some((e.value.as_str(), e))),
                None => Err(parse_error(
                    e.line,
                    e.value_column,
                    format!("`{key}` must be one of {}, got `{}`", options.join(", "), e.value),
                )),
            },
        }
    }

    fn required<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| {
            parse_error(self.section.line, 1, format!("[{}] is missing required key `{key}`", self.section.name))
        })
    }

    fn finish(self) -> Result<()> {
        match self.used.iter().position(|u| !u) {
            None => Ok(()),
            Some(i) => {
                let e = &self.section.entries[i];
                Err(parse_error(e.line, e.column, format!("unknown key `{}` in [{}]", e.key, self.section.name)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Mab,
    Contextual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveModeKind {
    NonzeroParam,
    EmpiricalVariance,
    SolvedProxy,
    TrueProxy,
}

impl NaiveModeKind {
    const NAMES: [&'static str; 4] = ["nonzero_param", "empirical_variance", "solved_proxy", "true_proxy"];

    fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MabAlgorithm {
    /// Always plays an optimal arm.
    Oracle,
    ZiUcb { tail: TailSpec, delta: ConfidenceLevel },
    ZiUcbHeavy { tail: TailSpec },
    ZiTs(ZiTsParams),
    DirectTs(DirectTsParams),
    NaiveUcb { mode: NaiveModeKind, family: ProxyFamily, size: f64, delta: ConfidenceLevel },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbAlgorithm {
    Oracle,
    ZiGlmUcb,
    ZiGlmTs,
    LinUcb,
    LinTs,
    IntegratedUcb,
    IntegratedTs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    Mab(MabAlgorithm),
    Contextual { algorithm: CbAlgorithm, params: GlmParams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    /// Unique within an experiment; keys the policy's random streams.
    pub label: String,
    pub kind: PolicyKind,
}

impl PolicyConfig {
    pub fn algorithm_name(&self) -> &'static str {
        match &self.kind {
            PolicyKind::Mab(a) => match a {
                MabAlgorithm::Oracle => "oracle",
                MabAlgorithm::ZiUcb { .. } => "zi_ucb",
                MabAlgorithm::ZiUcbHeavy { .. } => "zi_ucb_heavy",
                MabAlgorithm::ZiTs(_) => "zi_ts",
                MabAlgorithm::DirectTs(_) => "direct_ts",
                MabAlgorithm::NaiveUcb { .. } => "naive_ucb",
            },
            PolicyKind::Contextual { algorithm, .. } => cb_name(*algorithm),
        }
    }
}

const MAB_ALGORITHMS: [&str; 6] = ["oracle", "zi_ucb", "zi_ucb_heavy", "zi_ts", "direct_ts", "naive_ucb"];
const CB_ALGORITHMS: [&str; 7] =
    ["oracle", "zi_glm_ucb", "zi_glm_ts", "lin_ucb", "lin_ts", "integrated_ucb", "integrated_ts"];

fn cb_name(a: CbAlgorithm) -> &'static str {
    CB_ALGORITHMS[a as usize]
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvConfig {
    Mab(MabEnvSpec),
    Contextual(CbEnvSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub horizon: u64,
    pub replications: usize,
    pub master_seed: u64,
    /// Maximum number of stored checkpoints per trace.
    pub checkpoints: usize,
    /// Store every round instead of checkpoints.
    pub full_trace: bool,
    pub env: EnvConfig,
    pub policies: Vec<PolicyConfig>,
}

const NOISES: [&str; 4] = ["gaussian", "mixture", "exponential", "student_t"];

fn read_noise(r: &mut Reader) -> Result<NoiseModel> {
    let kind = r.choice("noise", &NOISES)?.map(|(v, _)| v).unwrap_or("gaussian");
    let noise = match kind {
        "gaussian" => NoiseModel::Gaussian { variance: r.f64("noise_variance")?.unwrap_or(1.0) },
        "mixture" => {
            let d = NoiseModel::default_mixture();
            let NoiseModel::GaussianMixture { weights, means, variances } = d else { unreachable!() };
            NoiseModel::GaussianMixture {
                weights: r.list("mixture_weights")?.unwrap_or(weights),
                means: r.list("mixture_means")?.unwrap_or(means),
                variances: r.list("mixture_variances")?.unwrap_or(variances),
            }
        }
        "exponential" => NoiseModel::CenteredExponential { rate: r.f64("noise_rate")?.unwrap_or(1.0) },
        _ => NoiseModel::StudentT { df: r.f64("noise_df")?.unwrap_or(3.0) },
    };
    noise.validate().map_err(|e| config_err("env.noise", e.to_string()))?;
    Ok(noise)
}

fn write_noise(out: &mut String, noise: &NoiseModel) {
    match noise {
        NoiseModel::Gaussian { variance } => {
            let _ = writeln!(out, "noise = gaussian\nnoise_variance = {variance}");
        }
        NoiseModel::GaussianMixture { weights, means, variances } => {
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
            let _ = writeln!(
                out,
                "noise = mixture\nmixture_weights = {}\nmixture_means = {}\nmixture_variances = {}",
                join(weights),
                join(means),
                join(variances)
            );
        }
        NoiseModel::CenteredExponential { rate } => {
            let _ = writeln!(out, "noise = exponential\nnoise_rate = {rate}");
        }
        NoiseModel::StudentT { df } => {
            let _ = writeln!(out, "noise = student_t\nnoise_df = {df}");
        }
    }
}

fn read_link(r: &mut Reader, key: &str, default: Link) -> Result<Link> {
    Ok(r.choice(key, &["identity", "logistic", "probit"])?
        .and_then(|(v, _)| Link::parse(v))
        .unwrap_or(default))
}

fn noise_field<T>(v: Option<T>, label: &str, key: &str) -> Result<T> {
    v.ok_or_else(|| {
        config_err(format!("policy.{label}.{key}"), "cannot be derived from this noise model; set it explicitly")
    })
}

fn confidence(field: String, delta: f64) -> Result<ConfidenceLevel> {
    ConfidenceLevel::new(delta).map_err(|e| config_err(field, e.to_string()))
}

fn read_mab_policy(r: &mut Reader, name: &str, label: &str, horizon: u64, noise: &NoiseModel) -> Result<MabAlgorithm> {
    let field = |k: &str| format!("policy.{label}.{k}");
    let default_delta = 4.0 / (horizon as f64 * horizon as f64);
    let read_clip = |r: &mut Reader| -> Result<ClipMode> {
        Ok(match r.choice("clip", &["floor", "cap"])? {
            Some(("cap", _)) => ClipMode::Cap,
            _ => ClipMode::Floor,
        })
    };
    Ok(match name {
        "oracle" => MabAlgorithm::Oracle,
        "zi_ucb" => {
            let theta = r.f64("theta")?.unwrap_or(2.0);
            let size_c = r.f64("size_c")?.unwrap_or(1.0);
            let tail = TailSpec::sub_weibull(theta, size_c).map_err(|e| config_err(field("theta"), e.to_string()))?;
            let delta = confidence(field("delta"), r.f64("delta")?.unwrap_or(default_delta))?;
            MabAlgorithm::ZiUcb { tail, delta }
        }
        "zi_ucb_heavy" => {
            let eps = r.f64("eps")?.unwrap_or(0.5);
            let m = match r.f64("moment_m")? {
                Some(m) => m,
                None => noise_field(noise.absolute_moment_upper_bound(1.0 + eps), label, "moment_m")?,
            };
            let tail = TailSpec::heavy(eps, m).map_err(|e| config_err(field("eps"), e.to_string()))?;
            MabAlgorithm::ZiUcbHeavy { tail }
        }
        "zi_ts" => {
            let sigma2 = match r.f64("sigma2")? {
                Some(s) => s,
                None => noise_field(noise.subgaussian_proxy(), label, "sigma2")?,
            };
            let mut p = ZiTsParams::new(horizon, sigma2);
            p.gamma = r.f64("gamma")?.unwrap_or(p.gamma);
            p.rho = r.f64("rho")?.unwrap_or(p.rho);
            p.prior_alpha = r.f64("prior_alpha")?.unwrap_or(p.prior_alpha);
            p.prior_beta = r.f64("prior_beta")?.unwrap_or(p.prior_beta);
            p.prior_v = r.f64("prior_v")?.unwrap_or(p.prior_v);
            p.clip_mode = read_clip(r)?;
            MabAlgorithm::ZiTs(p)
        }
        "direct_ts" => {
            let mut p = DirectTsParams::new(horizon);
            p.gamma = r.f64("gamma")?.unwrap_or(p.gamma);
            p.rho = r.f64("rho")?.unwrap_or(p.rho);
            p.clip_mode = read_clip(r)?;
            MabAlgorithm::DirectTs(p)
        }
        "naive_ucb" => {
            let mode = match r.choice("mode", &NaiveModeKind::NAMES)? {
                Some(("nonzero_param", _)) => NaiveModeKind::NonzeroParam,
                Some(("solved_proxy", _)) => NaiveModeKind::SolvedProxy,
                Some(("true_proxy", _)) => NaiveModeKind::TrueProxy,
                _ => NaiveModeKind::EmpiricalVariance,
            };
            let family = match r.choice("family", &["subgaussian", "subexponential"])? {
                Some(("subexponential", _)) => ProxyFamily::SubExponential,
                _ => ProxyFamily::SubGaussian,
            };
            let size = match r.f64("size")? {
                Some(s) => s,
                None => match family {
                    ProxyFamily::SubGaussian => noise_field(noise.subgaussian_proxy(), label, "size")?,
                    ProxyFamily::SubExponential => noise_field(noise.subexponential_parameter(), label, "size")?,
                },
            };
            if !(size > 0.0 && size.is_finite()) {
                return Err(config_err(field("size"), "must be positive"));
            }
            let delta = confidence(field("delta"), r.f64("delta")?.unwrap_or(default_delta))?;
            MabAlgorithm::NaiveUcb { mode, family, size, delta }
        }
        _ => unreachable!("algorithm names are checked by the caller"),
    })
}

fn read_cb_policy(
    r: &mut Reader,
    name: &str,
    label: &str,
    horizon: u64,
    spec: &CbEnvSpec,
) -> Result<(CbAlgorithm, GlmParams)> {
    let field = |k: &str| format!("policy.{label}.{k}");
    let algorithm = match name {
        "oracle" => CbAlgorithm::Oracle,
        "zi_glm_ucb" => CbAlgorithm::ZiGlmUcb,
        "zi_glm_ts" => CbAlgorithm::ZiGlmTs,
        "lin_ucb" => CbAlgorithm::LinUcb,
        "lin_ts" => CbAlgorithm::LinTs,
        "integrated_ucb" => CbAlgorithm::IntegratedUcb,
        _ => CbAlgorithm::IntegratedTs,
    };
    let mut links = spec.links;
    let mut params = GlmParams {
        links,
        sigma: 1.0,
        lambda_v: 1.0,
        lambda_u: 1.0,
        delta: 1.0 / horizon as f64,
        horizon,
        random_period: 0,
        radius: 1.0,
    };
    if algorithm == CbAlgorithm::Oracle {
        return Ok((algorithm, params));
    }
    params.sigma = match r.f64("sigma")? {
        Some(s) => s,
        None => noise_field(spec.noise.subgaussian_proxy(), label, "sigma")?.sqrt(),
    };
    params.lambda_v = r.f64("lambda_v")?.unwrap_or(1.0);
    params.lambda_u = r.f64("lambda_u")?.unwrap_or(1.0);
    params.delta = r.f64("delta")?.unwrap_or(params.delta);
    params.radius = r.f64("radius")?.unwrap_or(1.0);
    links.kappa_g = r.f64("kappa_g")?.unwrap_or(links.kappa_g);
    links.kappa_h = r.f64("kappa_h")?.unwrap_or(links.kappa_h);
    params.links = links;
    for (k, v) in [
        ("sigma", params.sigma),
        ("lambda_v", params.lambda_v),
        ("lambda_u", params.lambda_u),
        ("radius", params.radius),
        ("kappa_g", links.kappa_g),
        ("kappa_h", links.kappa_h),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_err(field(k), format!("must be positive, got {v}")));
        }
    }
    confidence(field("delta"), params.delta)?;
    if matches!(algorithm, CbAlgorithm::ZiGlmUcb | CbAlgorithm::ZiGlmTs) {
        params.random_period = match r.u64("random_period")? {
            Some(t) => t,
            None => {
                // Context covariance is I/(2K): its eigenvalue is the natural default scale.
                let eig = 1.0 / (2.0 * spec.k as f64);
                let p_star = r.f64("p_star")?.unwrap_or(0.5);
                let sz = r.f64("sigma_z2")?.unwrap_or(eig);
                let sw = r.f64("sigma_w2")?.unwrap_or(eig);
                let mut c = [1.0; 4];
                for (i, ci) in c.iter_mut().enumerate() {
                    *ci = r.f64(&format!("c{}", i + 1))?.unwrap_or(1.0);
                }
                random_period_tau(spec.d, spec.d, params.delta, p_star, sz, sw, c)
                    .map_err(|e| config_err(field("random_period"), e.to_string()))?
            }
        };
    }
    Ok((algorithm, params))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = parse_sections(text)?;
        let find = |name: &str| sections.iter().find(|s| s.name == name);
        let exp = find("experiment").ok_or_else(|| parse_error(1, 1, "missing [experiment] section"))?;
        let env = find("env").ok_or_else(|| parse_error(1, 1, "missing [env] section"))?;

        let mut r = Reader::new(exp);
        let kind = r_choice(&mut r, "kind", &["mab", "contextual"])?;
        let kind = match r.required("kind", kind)? {
            "mab" => ExperimentKind::Mab,
            _ => ExperimentKind::Contextual,
        };
        let horizon = r.u64("horizon")?;
        let horizon = r.required("horizon", horizon)?;
        let replications = r.usize("replications")?.unwrap_or(1);
        let master_seed = r.u64("master_seed")?.unwrap_or(0);
        let checkpoints = r.usize("checkpoints")?.unwrap_or(200);
        let full_trace = r.bool("full_trace")?.unwrap_or(false);
        r.finish()?;

        let mut r = Reader::new(env);
        let env_cfg = match kind {
            ExperimentKind::Mab => {
                let k = r.usize("k")?.unwrap_or(10);
                let p_range = (r.f64("p_lo")?.unwrap_or(0.30), r.f64("p_hi")?.unwrap_or(0.35));
                let mu_range = (r.f64("mu_lo")?.unwrap_or(1.0), r.f64("mu_hi")?.unwrap_or(3.0));
                let noise = read_noise(&mut r)?;
                EnvConfig::Mab(MabEnvSpec { k, p_range, mu_range, noise, horizon })
            }
            ExperimentKind::Contextual => {
                let k = r.usize("k")?.unwrap_or(100);
                let d = r.usize("d")?.unwrap_or(10);
                let sparsity = r.usize("sparsity")?;
                let sparsity = r.required("sparsity", sparsity)?;
                let g = read_link(&mut r, "link_g", Link::Identity)?;
                let h = read_link(&mut r, "link_h", Link::Probit)?;
                let links = LinkPair::new(g, h).map_err(|e| config_err("env.link_h", e.to_string()))?;
                let noise = read_noise(&mut r)?;
                EnvConfig::Contextual(CbEnvSpec { k, d, sparsity, links, noise, horizon })
            }
        };
        r.finish()?;

        let mut policies = Vec::new();
        for section in sections.iter().filter(|s| s.name == "policy") {
            let mut r = Reader::new(section);
            let registry: &[&str] = match kind {
                ExperimentKind::Mab => &MAB_ALGORITHMS,
                ExperimentKind::Contextual => &CB_ALGORITHMS,
            };
            let name = match r.take("name") {
                None => return Err(parse_error(section.line, 1, "[policy] is missing required key `name`")),
                Some(e) if registry.contains(&e.value.as_str()) => e.value.clone(),
                Some(e) => {
                    return Err(parse_error(
                        e.line,
                        e.value_column,
                        format!("algorithm `{}` is not registered; expected one of {}", e.value, registry.join(", ")),
                    ))
                }
            };
            let label = r.take("label").map(|e| e.value.clone()).unwrap_or_else(|| name.clone());
            if label.contains(',') || label.contains('"') {
                return Err(config_err(format!("policy.{label}.label"), "must not contain commas or quotes"));
            }
            let policy_kind = match &env_cfg {
                EnvConfig::Mab(spec) => PolicyKind::Mab(read_mab_policy(&mut r, &name, &label, horizon, &spec.noise)?),
                EnvConfig::Contextual(spec) => {
                    let (algorithm, params) = read_cb_policy(&mut r, &name, &label, horizon, spec)?;
                    PolicyKind::Contextual { algorithm, params }
                }
            };
            r.finish()?;
            policies.push(PolicyConfig { label, kind: policy_kind });
        }
        let cfg = ExperimentConfig { kind, horizon, replications, master_seed, checkpoints, full_trace, env: env_cfg, policies };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(config_err("experiment.replications", "must be at least 1"));
        }
        if self.checkpoints == 0 {
            return Err(config_err("experiment.checkpoints", "must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(config_err("policy", "at least one [policy] block is required"));
        }
        for (i, p) in self.policies.iter().enumerate() {
            if self.policies[..i].iter().any(|q| q.label == p.label) {
                return Err(config_err(format!("policy.{}.label", p.label), "labels must be unique"));
            }
        }
        match &self.env {
            EnvConfig::Mab(spec) => {
                spec.validate().map_err(|e| config_err("env", e.to_string()))?;
                if self.horizon < spec.k as u64 {
                    return Err(config_err(
                        "experiment.horizon",
                        format!("must be at least the arm count {}, got {}", spec.k, self.horizon),
                    ));
                }
            }
            EnvConfig::Contextual(spec) => {
                spec.validate().map_err(|e| config_err("env", e.to_string()))?;
                for p in &self.policies {
                    if let PolicyKind::Contextual { params, .. } = &p.kind {
                        if self.horizon < params.random_period {
                            return Err(config_err(
                                format!("policy.{}.random_period", p.label),
                                format!(
                                    "exploration period {} exceeds the horizon {}",
                                    params.random_period, self.horizon
                                ),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical text form with every default resolved; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            ExperimentKind::Mab => "mab",
            ExperimentKind::Contextual => "contextual",
        };
        let _ = writeln!(
            out,
            "[experiment]\nkind = {kind}\nhorizon = {}\nreplications = {}\nmaster_seed = {}\ncheckpoints = {}\nfull_trace = {}",
            self.horizon, self.replications, self.master_seed, self.checkpoints, self.full_trace
        );
        out.push_str("\n[env]\n");
        match &self.env {
            EnvConfig::Mab(s) => {
                let _ = writeln!(
                    out,
                    "k = {}\np_lo = {}\np_hi = {}\nmu_lo = {}\nmu_hi = {}",
                    s.k, s.p_range.0, s.p_range.1, s.mu_range.0, s.mu_range.1
                );
                write_noise(&mut out, &s.noise);
            }
            EnvConfig::Contextual(s) => {
                let _ = writeln!(
                    out,
                    "k = {}\nd = {}\nsparsity = {}\nlink_g = {}\nlink_h = {}",
                    s.k,
                    s.d,
                    s.sparsity,
                    s.links.g.name(),
                    s.links.h.name()
                );
                write_noise(&mut out, &s.noise);
            }
        }
        for p in &self.policies {
            let _ = writeln!(out, "\n[policy]\nname = {}\nlabel = {}", p.algorithm_name(), p.label);
            match &p.kind {
                PolicyKind::Mab(a) => write_mab(&mut out, a),
                PolicyKind::Contextual { algorithm, params } => {
                    if *algorithm == CbAlgorithm::Oracle {
                        continue;
                    }
                    let _ = writeln!(
                        out,
                        "sigma = {}\nlambda_v = {}\nlambda_u = {}\ndelta = {}\nradius = {}\nkappa_g = {}\nkappa_h = {}",
                        params.sigma,
                        params.lambda_v,
                        params.lambda_u,
                        params.delta,
                        params.radius,
                        params.links.kappa_g,
                        params.links.kappa_h
                    );
                    if matches!(algorithm, CbAlgorithm::ZiGlmUcb | CbAlgorithm::ZiGlmTs) {
                        let _ = writeln!(out, "random_period = {}", params.random_period);
                    }
                }
            }
        }
        out
    }
}

fn r_choice<'a>(r: &mut Reader<'a>, key: &str, options: &[&str]) -> Result<Option<&'a str>> {
    Ok(r.choice(key, options)?.map(|(v, _)| v))
}

fn clip_name(c: ClipMode) -> &'static str {
    match c {
        ClipMode::Floor => "floor",
        ClipMode::Cap => "cap",
    }
}

fn write_mab(out: &mut String, a: &MabAlgorithm) {
    match a {
        MabAlgorithm::Oracle => {}
        MabAlgorithm::ZiUcb { tail, delta } => {
            if let TailSpec::SubWeibull { theta, size_c } = tail {
                let _ = writeln!(out, "theta = {theta}\nsize_c = {size_c}\ndelta = {}", delta.delta());
            }
        }
        MabAlgorithm::ZiUcbHeavy { tail } => {
            if let TailSpec::HeavyMoment { eps, moment_m } = tail {
                let _ = writeln!(out, "eps = {eps}\nmoment_m = {moment_m}");
            }
        }
        MabAlgorithm::ZiTs(p) => {
            let _ = writeln!(
                out,
                "sigma2 = {}\ngamma = {}\nrho = {}\nprior_alpha = {}\nprior_beta = {}\nprior_v = {}\nclip = {}",
                p.sigma2,
                p.gamma,
                p.rho,
                p.prior_alpha,
                p.prior_beta,
                p.prior_v,
                clip_name(p.clip_mode)
            );
        }
        MabAlgorithm::DirectTs(p) => {
            let _ = writeln!(out, "gamma = {}\nrho = {}\nclip = {}", p.gamma, p.rho, clip_name(p.clip_mode));
        }
        MabAlgorithm::NaiveUcb { mode, family, size, delta } => {
            let family = match family {
                ProxyFamily::SubGaussian => "subgaussian",
                ProxyFamily::SubExponential => "subexponential",
            };
            let _ = writeln!(
                out,
                "mode = {}\nfamily = {family}\nsize = {size}\ndelta = {}",
                mode.name(),
                delta.delta()
            );
        }
    }
}
