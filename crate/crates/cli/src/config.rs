//! Experiment configuration: TOML file, flag overrides, resolution.

use std::path::{Path, PathBuf};

use exdev::DensitySpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Tilt,
    Edgeworth,
    Tail,
    GibbsTv,
    Dlp,
    Levelset,
    Equiv,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Tilt => "tilt",
            ExperimentKind::Edgeworth => "edgeworth",
            ExperimentKind::Tail => "tail",
            ExperimentKind::GibbsTv => "gibbs-tv",
            ExperimentKind::Dlp => "dlp",
            ExperimentKind::Levelset => "levelset",
            ExperimentKind::Equiv => "equiv",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TiltParams {
    /// `t_lo:t_hi:points`, geometric.
    pub grid: String,
    pub t: Option<f64>,
    pub a: Option<f64>,
    pub self_neglect_t: Vec<f64>,
    /// Half-width of the `u` interval in the self-neglect sup.
    pub self_neglect_u: f64,
}

impl Default for TiltParams {
    fn default() -> Self {
        Self {
            grid: "10:10000:25".into(),
            t: None,
            a: None,
            self_neglect_t: vec![1e2, 1e3, 1e4],
            self_neglect_u: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeworthParams {
    pub a: f64,
    pub n_list: Vec<usize>,
    /// Sup-norm range and CSV range in standardised units.
    pub x_range: f64,
    pub x_points: usize,
    pub grid_half_width: f64,
    pub grid_points: usize,
}

impl Default for EdgeworthParams {
    fn default() -> Self {
        Self {
            a: 20.0,
            n_list: vec![4, 16, 64],
            x_range: 8.0,
            x_points: 161,
            grid_half_width: 12.0,
            grid_points: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailParams {
    pub n: u64,
    pub a: f64,
    pub oracle_samples: usize,
    pub min_lambda: f64,
}

impl Default for TailParams {
    fn default() -> Self {
        Self {
            n: 10,
            a: 3.0,
            oracle_samples: 1_000_000,
            min_lambda: exdev::MIN_LAMBDA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsTvParams {
    pub n_list: Vec<usize>,
    /// `a_n = n^alpha`.
    pub alpha: f64,
    pub chains: usize,
    /// Retained draws per chain.
    pub steps: usize,
    /// Burn-in in pair updates, as a multiple of `n`.
    pub burn_in_factor: u64,
    /// Thinning stride in pair updates, as a multiple of `n`.
    pub stride_factor: u64,
    pub null_test: bool,
}

impl Default for GibbsTvParams {
    fn default() -> Self {
        Self {
            n_list: vec![8, 32, 128],
            alpha: 0.35,
            chains: 8,
            steps: 12_500,
            burn_in_factor: 1000,
            stride_factor: 4,
            null_test: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlpParams {
    /// Tail exponent for the window schedule; taken from a Weibull density when absent.
    pub k: Option<f64>,
    pub alpha: f64,
    pub n_list: Vec<usize>,
    pub count: usize,
    pub delta: f64,
}

impl Default for DlpParams {
    fn default() -> Self {
        Self {
            k: None,
            alpha: 0.4,
            n_list: vec![16, 64, 256],
            count: 200_000,
            delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsetParams {
    pub f: String,
    pub dim: usize,
    pub a_list: Vec<f64>,
    pub count: usize,
    /// Level window half-width as a fraction of `a`.
    pub epsilon_rel: f64,
    /// `signed_root` (coordinates with `X² ~ p`) or `positive`.
    pub ambient: String,
}

impl Default for LevelsetParams {
    fn default() -> Self {
        Self {
            f: "sumsq".into(),
            dim: 1,
            a_list: vec![5.0, 20.0, 80.0],
            count: 20_000,
            epsilon_rel: 0.05,
            ambient: "signed_root".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivParams {
    pub n: usize,
    pub alpha: f64,
    /// Overrides `n^alpha` when set.
    pub a: Option<f64>,
    pub count: usize,
    /// Interval half-widths in units of the tilted standard deviation.
    pub half_widths: Vec<f64>,
    pub band: (f64, f64),
}

impl Default for EquivParams {
    fn default() -> Self {
        Self {
            n: 128,
            alpha: 0.35,
            a: None,
            count: 200_000,
            half_widths: vec![1.0],
            band: (0.8, 1.2),
        }
    }
}

/// Configuration file as written by the user. Every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub density: Option<DensitySpec>,
    pub density_file: Option<PathBuf>,
    pub output: OutputPaths,
    pub tilt: TiltParams,
    pub edgeworth: EdgeworthParams,
    pub tail: TailParams,
    pub gibbs_tv: GibbsTvParams,
    pub dlp: DlpParams,
    pub levelset: LevelsetParams,
    pub equiv: EquivParams,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path, "config")?;
        let mut cfg: ConfigFile = toml::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), one_line(&e.to_string()))))?;
        // density files named in a config are relative to it
        if let (Some(f), Some(dir)) = (&cfg.density_file, path.parent()) {
            if f.is_relative() {
                cfg.density_file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }
}

/// Experiment parameters for the selected kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Params {
    Tilt(TiltParams),
    Edgeworth(EdgeworthParams),
    Tail(TailParams),
    GibbsTv(GibbsTvParams),
    Dlp(DlpParams),
    Levelset(LevelsetParams),
    Equiv(EquivParams),
}

/// Fully resolved configuration, embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub density: DensitySpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_file: Option<PathBuf>,
    pub output: ResolvedOutput,
    #[serde(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedOutput {
    pub json: PathBuf,
    pub csv: PathBuf,
}

pub const DEFAULT_SEED: u64 = 1;

impl ConfigFile {
    /// Picks the section for `kind`, loads the density and fills output paths.
    pub fn resolve(self, kind: ExperimentKind) -> Result<ResolvedConfig, CliError> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(CliError::Invalid(format!(
                    "config is for experiment '{}', not '{}'",
                    k.name(),
                    kind.name()
                )));
            }
        }
        let density = match (&self.density, &self.density_file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Invalid(
                    "give either density or density_file, not both".into(),
                ))
            }
            (Some(d), None) => d.clone(),
            (None, Some(path)) => load_density(path)?,
            (None, None) => match (kind, self.dlp.k) {
                (ExperimentKind::Dlp, Some(k)) => DensitySpec::Weibull { k },
                _ => return Err(CliError::Missing("no density given".into())),
            },
        };
        let params = match kind {
            ExperimentKind::Tilt => Params::Tilt(self.tilt),
            ExperimentKind::Edgeworth => Params::Edgeworth(self.edgeworth),
            ExperimentKind::Tail => Params::Tail(self.tail),
            ExperimentKind::GibbsTv => Params::GibbsTv(self.gibbs_tv),
            ExperimentKind::Dlp => Params::Dlp(self.dlp),
            ExperimentKind::Levelset => Params::Levelset(self.levelset),
            ExperimentKind::Equiv => Params::Equiv(self.equiv),
        };
        let (json, csv) = output_paths(kind, self.output);
        let cfg = ResolvedConfig {
            experiment: kind,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            density,
            density_file: self.density_file,
            output: ResolvedOutput { json, csv },
            params,
        };
        validate(&cfg)?;
        Ok(cfg)
    }
}

fn output_paths(kind: ExperimentKind, out: OutputPaths) -> (PathBuf, PathBuf) {
    match (out.json, out.csv) {
        (Some(j), Some(c)) => (j, c),
        (Some(j), None) => {
            let c = j.with_extension("csv");
            (j, c)
        }
        (None, Some(c)) => (c.with_extension("json"), c),
        (None, None) => (
            PathBuf::from(format!("{}.json", kind.name())),
            PathBuf::from(format!("{}.csv", kind.name())),
        ),
    }
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            CliError::Missing(format!("{what} file '{}' not found", path.display()))
        }
        _ => CliError::Missing(format!("{what} file '{}' unreadable: {e}", path.display())),
    })
}

/// Reads a density spec from TOML, or JSON when the extension says so.
pub fn load_density(path: &Path) -> Result<DensitySpec, CliError> {
    let text = read_text(path, "density")?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Parse(format!("{}: {}", path.display(), one_line(&e))))
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn check_n_list(ns: &[usize], min: usize) -> Result<(), CliError> {
    if ns.is_empty() {
        return Err(invalid("n_list is empty"));
    }
    if let Some(n) = ns.iter().find(|&&n| n < min) {
        return Err(invalid(format!("n = {n} below the minimum {min}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be positive and finite")))
    }
}

fn check_count(name: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        Err(invalid(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

fn validate(cfg: &ResolvedConfig) -> Result<(), CliError> {
    match &cfg.params {
        Params::Tilt(p) => {
            parse_grid(&p.grid)?;
            if p.t.is_some() && p.a.is_some() {
                return Err(invalid("give either t or a, not both"));
            }
            if let Some(t) = p.t {
                if !t.is_finite() {
                    return Err(invalid("t must be finite"));
                }
            }
            if let Some(a) = p.a {
                check_positive("a", a)?;
            }
            for &t in &p.self_neglect_t {
                check_positive("self_neglect_t", t)?;
            }
            check_positive("self_neglect_u", p.self_neglect_u)?;
        }
        Params::Edgeworth(p) => {
            check_positive("a", p.a)?;
            check_n_list(&p.n_list, 1)?;
            check_positive("x_range", p.x_range)?;
            check_positive("grid_half_width", p.grid_half_width)?;
            if p.x_points < 2 {
                return Err(invalid("x_points must be at least 2"));
            }
            if p.grid_points < 64 {
                return Err(invalid("grid_points must be at least 64"));
            }
        }
        Params::Tail(p) => {
            if p.n == 0 {
                return Err(invalid("n must be positive"));
            }
            check_positive("a", p.a)?;
            check_count("oracle_samples", p.oracle_samples)?;
            if !(p.min_lambda >= 0.0) {
                return Err(invalid("min_lambda must be non-negative"));
            }
        }
        Params::GibbsTv(p) => {
            check_n_list(&p.n_list, 2)?;
            check_positive("alpha", p.alpha)?;
            check_count("chains", p.chains)?;
            check_count("steps", p.steps)?;
            if p.stride_factor == 0 {
                return Err(invalid("stride_factor must be positive"));
            }
        }
        Params::Dlp(p) => {
            check_n_list(&p.n_list, 2)?;
            check_positive("alpha", p.alpha)?;
            check_count("count", p.count)?;
            if let Some(k) = p.k {
                check_positive("k", k)?;
            } else if !matches!(cfg.density, DensitySpec::Weibull { .. }) {
                return Err(invalid("dlp needs k unless the density is weibull"));
            }
            if !(0.0..1.0).contains(&p.delta) {
                return Err(invalid("delta must lie in [0, 1)"));
            }
        }
        Params::Levelset(p) => {
            exdev::conditional::FCatalog::parse(&p.f).map_err(|e| invalid(e.to_string()))?;
            check_count("dim", p.dim)?;
            check_count("count", p.count)?;
            if p.a_list.is_empty() {
                return Err(invalid("a_list is empty"));
            }
            if p.a_list.iter().any(|a| !a.is_finite()) {
                return Err(invalid("a_list entries must be finite"));
            }
            check_positive("epsilon_rel", p.epsilon_rel)?;
            if p.ambient != "signed_root" && p.ambient != "positive" {
                return Err(invalid(format!(
                    "ambient '{}' must be signed_root or positive",
                    p.ambient
                )));
            }
        }
        Params::Equiv(p) => {
            if p.n < 2 {
                return Err(invalid("n must be at least 2"));
            }
            check_positive("alpha", p.alpha)?;
            if let Some(a) = p.a {
                check_positive("a", a)?;
            }
            check_count("count", p.count)?;
            if p.half_widths.is_empty() {
                return Err(invalid("half_widths is empty"));
            }
            for &h in &p.half_widths {
                check_positive("half_widths", h)?;
            }
            if !(p.band.0 < p.band.1) {
                return Err(invalid("band must be an increasing pair"));
            }
        }
    }
    Ok(())
}

/// Parses a geometric grid `t_lo:t_hi:points`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || invalid(format!("grid '{spec}' must be t_lo:t_hi:points"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || points < 2 {
        return Err(invalid(format!(
            "grid '{spec}' needs 0 < t_lo < t_hi and at least 2 points"
        )));
    }
    let r = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo * (r * i as f64).exp()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_geometric_with_exact_ends() {
        let g = parse_grid("10:10000:4").unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 10.0);
        assert_eq!(g[3], 10000.0);
        assert!((g[1] - 100.0).abs() < 1e-9);
        assert!(parse_grid("10:1:4").is_err());
        assert!(parse_grid("10:100").is_err());
    }

    #[test]
    fn sections_default_and_reject_unknown_keys() {
        let cfg: ConfigFile = toml::from_str(
            "experiment = \"gibbs-tv\"\n[density]\nkind = \"weibull\"\nk = 2.5\n[gibbs_tv]\nalpha = 0.3\n",
        )
        .unwrap();
        let r = cfg.resolve(ExperimentKind::GibbsTv).unwrap();
        match r.params {
            Params::GibbsTv(p) => {
                assert_eq!(p.alpha, 0.3);
                assert_eq!(p.n_list, vec![8, 32, 128]);
            }
            _ => panic!(),
        }
        assert!(toml::from_str::<ConfigFile>("[gibbs_tv]\nalfa = 0.3\n").is_err());
    }

    #[test]
    fn output_twin_follows_the_given_path() {
        let (j, c) = output_paths(
            ExperimentKind::Tilt,
            OutputPaths {
                json: Some("out/r.json".into()),
                csv: None,
            },
        );
        assert_eq!(j, PathBuf::from("out/r.json"));
        assert_eq!(c, PathBuf::from("out/r.csv"));
    }

    #[test]
    fn dlp_k_stands_in_for_the_density() {
        let cfg: ConfigFile = toml::from_str("[dlp]\nk = 2.5\n").unwrap();
        let r = cfg.resolve(ExperimentKind::Dlp).unwrap();
        assert_eq!(r.density, DensitySpec::Weibull { k: 2.5 });
        let cfg: ConfigFile = toml::from_str("").unwrap();
        assert!(matches!(
            cfg.resolve(ExperimentKind::Tilt),
            Err(CliError::Missing(_))
        ));
    }
}
