//! Run configuration: defaults, then the JSON config file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use zigzag_core::masking::{MaskConfig, MaskStrategy};
use zigzag_core::pipeline::derive_seed;
use zigzag_core::pointcloud::{CloudFormat, TokenizerConfig};
use zigzag_core::scan::{CurveTag, Plane, ScanParams, MAX_BITS};
use zigzag_core::ssm::TrainConfig;
use zigzag_core::synthetic::SyntheticKind;

use crate::error::{CliError, CliResult};

/// What a scan orders: the patch centers after tokenization or every point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScanTarget {
    Centers,
    Points,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyChoice {
    Sms,
    RandomOnly,
    Both,
}

impl StrategyChoice {
    pub fn strategies(self) -> Vec<MaskStrategy> {
        match self {
            Self::Sms => vec![MaskStrategy::Sms],
            Self::RandomOnly => vec![MaskStrategy::RandomOnly],
            Self::Both => vec![MaskStrategy::Sms, MaskStrategy::RandomOnly],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskSection {
    pub t_semantic: f64,
    pub r_random: f64,
}

impl Default for MaskSection {
    fn default() -> Self {
        let d = MaskConfig::default();
        Self {
            t_semantic: d.t_semantic,
            r_random: d.r_random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Serialize,
    Mask,
    Compare,
    Reconstruct,
}

/// Everything a run depends on. Serialized into every output, except the
/// output directory, so reruns elsewhere stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub format: Option<CloudFormat>,
    pub synthetic: SyntheticKind,
    pub n_clouds: Option<usize>,
    /// Size of each synthetic cloud.
    pub n_points: usize,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    pub tokenizer: TokenizerConfig,
    pub scan: ScanParams,
    pub quantization_bits: u32,
    pub target: ScanTarget,
    pub curves: Option<Vec<String>>,
    pub plane: Option<Plane>,
    pub mask: MaskSection,
    pub mask_strategy: Option<StrategyChoice>,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: Vec::new(),
            format: None,
            synthetic: SyntheticKind::Cube,
            n_clouds: None,
            n_points: 1024,
            seed: 0,
            out_dir: PathBuf::from("out"),
            tokenizer: TokenizerConfig::default(),
            scan: ScanParams::default(),
            quantization_bits: 10,
            target: ScanTarget::Centers,
            curves: None,
            plane: None,
            mask: MaskSection::default(),
            mask_strategy: None,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::ConfigFile {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Fills command-dependent defaults so the recorded config is the one that ran.
    pub fn finalize(&mut self, command: CommandKind) {
        let clouds = match command {
            CommandKind::Serialize | CommandKind::Mask => 1,
            CommandKind::Compare => 32,
            CommandKind::Reconstruct => 8,
        };
        self.n_clouds.get_or_insert(clouds);
        let curves = match command {
            CommandKind::Serialize => "zigzag",
            _ => "all",
        };
        self.curves.get_or_insert_with(|| vec![curves.to_owned()]);
        let strategy = match command {
            CommandKind::Reconstruct => StrategyChoice::Both,
            _ => StrategyChoice::Sms,
        };
        self.mask_strategy.get_or_insert(strategy);
    }

    pub fn n_clouds(&self) -> usize {
        self.n_clouds.unwrap_or(1)
    }

    pub fn strategies(&self) -> Vec<MaskStrategy> {
        self.mask_strategy
            .unwrap_or(StrategyChoice::Sms)
            .strategies()
    }

    pub fn mask_config(&self, seed: u64) -> MaskConfig {
        MaskConfig {
            t_semantic: self.mask.t_semantic,
            r_random: self.mask.r_random,
            seed,
        }
    }

    pub fn validate(&self, command: CommandKind) -> CliResult<()> {
        self.tokenizer.validate()?;
        self.scan.validate()?;
        self.mask_config(0).validate()?;
        if command == CommandKind::Reconstruct {
            self.train.validate()?;
        }
        if !(1..=MAX_BITS).contains(&self.quantization_bits) {
            return Err(CliError::Invalid(format!(
                "quantization_bits must be in [1, {MAX_BITS}], got {}",
                self.quantization_bits
            )));
        }
        if self.n_points == 0 || self.n_clouds() == 0 {
            return Err(CliError::Invalid(
                "n_points and n_clouds must be positive".into(),
            ));
        }
        let curves = self.curve_selection()?;
        if command == CommandKind::Compare && curves.len() < 2 {
            return Err(CliError::Invalid(format!(
                "compare needs at least two curves, got {}",
                curves.len()
            )));
        }
        for path in &self.input {
            if !path.is_file() {
                return Err(CliError::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }

    /// Expands `all` and `zigzag` into concrete selections, in request order
    /// and without duplicates.
    pub fn curve_selection(&self) -> CliResult<Vec<CurveChoice>> {
        let mut out = Vec::new();
        let names = self.curves.as_deref().unwrap_or_default();
        for name in names.iter().flat_map(|n| n.split(',')).map(str::trim) {
            let expanded = match name {
                "all" => CurveTag::ALL.iter().map(|&t| CurveChoice::Tag(t)).collect(),
                "zigzag" => match self.plane {
                    Some(plane) => vec![CurveChoice::Tag(plane.curve_tag())],
                    None => vec![CurveChoice::SeededZigzag],
                },
                tag => vec![CurveChoice::Tag(tag.parse()?)],
            };
            for choice in expanded {
                if !out.contains(&choice) {
                    out.push(choice);
                }
            }
        }
        if out.is_empty() {
            return Err(CliError::Invalid("no curve selected".into()));
        }
        Ok(out)
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::derive(self.seed, self.n_clouds())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveChoice {
    Tag(CurveTag),
    /// Zigzag on a plane drawn per cloud from its plane seed.
    SeededZigzag,
}

impl CurveChoice {
    pub fn label(self) -> &'static str {
        match self {
            Self::Tag(tag) => tag.as_str(),
            Self::SeededZigzag => "zigzag",
        }
    }

    pub fn is_zigzag(self) -> bool {
        match self {
            Self::Tag(tag) => tag.is_zigzag(),
            Self::SeededZigzag => true,
        }
    }
}

/// Every seed a run uses, derived from the base seed and recorded in outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub base: u64,
    pub encoder: u64,
    pub mask: u64,
    pub train: u64,
    pub clouds: Vec<CloudSeeds>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CloudSeeds {
    pub synthetic: u64,
    pub tokenize: u64,
    pub plane: u64,
    pub random_curve: u64,
}

impl Seeds {
    pub fn derive(base: u64, clouds: usize) -> Self {
        Self {
            base,
            encoder: derive_seed(base, 1),
            mask: derive_seed(base, 2),
            train: derive_seed(base, 3),
            clouds: (0..clouds as u64)
                .map(|i| {
                    let cloud = derive_seed(base, 1000 + i);
                    CloudSeeds {
                        synthetic: derive_seed(cloud, 0),
                        tokenize: derive_seed(cloud, 1),
                        plane: derive_seed(cloud, 2),
                        random_curve: derive_seed(cloud, 3),
                    }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_expansion() {
        let mut cfg = RunConfig {
            curves: Some(vec!["all".into()]),
            ..Default::default()
        };
        assert_eq!(cfg.curve_selection().unwrap().len(), 8);
        cfg.curves = Some(vec!["zigzag,random".into(), "random".into()]);
        assert_eq!(
            cfg.curve_selection().unwrap(),
            vec![
                CurveChoice::SeededZigzag,
                CurveChoice::Tag(CurveTag::Random)
            ]
        );
        cfg.plane = Some(Plane::Xz);
        assert_eq!(
            cfg.curve_selection().unwrap()[0],
            CurveChoice::Tag(CurveTag::ZigzagXz)
        );
        cfg.curves = Some(vec!["spiral".into()]);
        assert!(cfg.curve_selection().is_err());
    }

    #[test]
    fn command_defaults_and_validation() {
        let mut cfg = RunConfig::default();
        cfg.finalize(CommandKind::Compare);
        assert_eq!(cfg.n_clouds, Some(32));
        cfg.validate(CommandKind::Compare).unwrap();
        cfg.curves = Some(vec!["hilbert".into()]);
        assert!(matches!(
            cfg.validate(CommandKind::Compare),
            Err(CliError::Invalid(_))
        ));
        let mut cfg = RunConfig::default();
        cfg.finalize(CommandKind::Mask);
        cfg.mask.t_semantic = 1.5;
        assert_eq!(cfg.validate(CommandKind::Mask).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn config_file_round_trip_and_unknown_fields() {
        let mut cfg = RunConfig::default();
        cfg.finalize(CommandKind::Reconstruct);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 3}"#).is_err());
        let partial: RunConfig =
            serde_json::from_str(r#"{"seed": 3, "mask": {"r_random": 0.2}}"#).unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.mask.t_semantic, 0.8);
    }

    #[test]
    fn seeds_are_distinct_per_cloud() {
        let seeds = Seeds::derive(5, 3);
        assert_eq!(seeds, Seeds::derive(5, 3));
        assert_ne!(seeds.clouds[0], seeds.clouds[1]);
        assert_eq!(Seeds::derive(5, 2).clouds[..], seeds.clouds[..2]);
    }
}
