//! The four subcommands. Each one validates, computes everything in memory
//! and only then writes its outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use zigzag_core::masking::{MaskPlan, MaskStrategy};
use zigzag_core::pipeline::{build_recon_task, mask_prepared, prepare_cloud, PreparedCloud};
use zigzag_core::pointcloud::{load_pointcloud, tokenize, CloudFormat, EncoderWeights};
use zigzag_core::scan::{
    baseline_scan, locality_metrics, zigzag_plane_scan, zigzag_scan_3d, BaselineCurve, CurveTag,
    LocalityMetrics, Plane, PlaneChoice, ScanOrder,
};
use zigzag_core::ssm::reconstruct_train;
use zigzag_core::PointCloud;

use crate::config::{CloudSeeds, CommandKind, CurveChoice, RunConfig, ScanTarget, Seeds};
use crate::error::{CliError, CliResult};

/// An output document: the effective config and seeds, then the payload's fields.
#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a RunConfig,
    seeds: &'a Seeds,
    #[serde(flatten)]
    body: T,
}

struct Run {
    config: RunConfig,
    seeds: Seeds,
    files: Vec<(String, Vec<u8>)>,
}

impl Run {
    fn start(mut config: RunConfig, command: CommandKind) -> CliResult<Self> {
        if !config.input.is_empty() {
            config.n_clouds = Some(config.input.len());
        }
        config.finalize(command);
        config.validate(command)?;
        let seeds = config.seeds();
        Ok(Self {
            config,
            seeds,
            files: Vec::new(),
        })
    }

    fn json<T: Serialize>(&mut self, name: String, body: T) -> CliResult<()> {
        let doc = Document {
            config: &self.config,
            seeds: &self.seeds,
            body,
        };
        let mut text =
            serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Invalid(e.to_string()))?;
        text.push(b'\n');
        self.files.push((name, text));
        Ok(())
    }

    /// CSV with the config and seeds as leading `#` comment lines.
    fn csv(&mut self, name: String, table: &str) -> CliResult<()> {
        let config =
            serde_json::to_string(&self.config).map_err(|e| CliError::Invalid(e.to_string()))?;
        let seeds =
            serde_json::to_string(&self.seeds).map_err(|e| CliError::Invalid(e.to_string()))?;
        let text = format!("# config: {config}\n# seeds: {seeds}\n{table}");
        self.files.push((name, text.into_bytes()));
        Ok(())
    }

    fn finish(self) -> CliResult<Vec<String>> {
        let dir = &self.config.out_dir;
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = dir.join(&name);
            fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            written.push(path.display().to_string());
        }
        Ok(written)
    }
}

struct Source {
    name: String,
    cloud: PointCloud,
    seeds: CloudSeeds,
}

fn infer_format(path: &Path) -> Option<CloudFormat> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "xyz" | "txt" => Some(CloudFormat::XyzText),
        "ply" => Some(CloudFormat::PlyAscii),
        "bin" => Some(CloudFormat::F32leBin),
        _ => None,
    }
}

fn load_sources(config: &RunConfig, seeds: &Seeds) -> CliResult<Vec<Source>> {
    if config.input.is_empty() {
        return Ok(seeds
            .clouds
            .iter()
            .enumerate()
            .map(|(i, s)| Source {
                name: format!("synthetic:{}/{i}", config.synthetic),
                cloud: config.synthetic.generate(config.n_points, s.synthetic),
                seeds: *s,
            })
            .collect());
    }
    config
        .input
        .iter()
        .zip(&seeds.clouds)
        .map(|(path, s)| {
            let format = config
                .format
                .or_else(|| infer_format(path))
                .ok_or_else(|| {
                    CliError::Invalid(format!(
                        "cannot infer the format of {}; pass --format",
                        path.display()
                    ))
                })?;
            Ok(Source {
                name: path.display().to_string(),
                cloud: load_pointcloud(path, format)?,
                seeds: *s,
            })
        })
        .collect()
}

fn encoder(config: &RunConfig, seeds: &Seeds) -> CliResult<EncoderWeights> {
    let t = &config.tokenizer;
    Ok(EncoderWeights::random(
        &t.hidden,
        t.feature_dim,
        seeds.encoder,
    )?)
}

fn scan_target(
    config: &RunConfig,
    weights: &EncoderWeights,
    source: &Source,
) -> CliResult<PointCloud> {
    Ok(match config.target {
        ScanTarget::Points => source.cloud.normalize_unit_sphere(),
        ScanTarget::Centers => tokenize(
            &source.cloud,
            &config.tokenizer,
            weights,
            source.seeds.tokenize,
        )?
        .centers(),
    })
}

fn scan(
    cloud: &PointCloud,
    choice: CurveChoice,
    config: &RunConfig,
    seeds: &CloudSeeds,
) -> CliResult<ScanOrder> {
    let bits = config.quantization_bits;
    let baseline = |curve| baseline_scan(cloud, curve, bits);
    let order = match choice {
        CurveChoice::SeededZigzag => {
            zigzag_scan_3d(cloud, &config.scan, PlaneChoice::SeededRandom(seeds.plane))
        }
        CurveChoice::Tag(tag) => match tag {
            CurveTag::ZigzagXy => zigzag_plane_scan(cloud, Plane::Xy, &config.scan),
            CurveTag::ZigzagXz => zigzag_plane_scan(cloud, Plane::Xz, &config.scan),
            CurveTag::ZigzagYz => zigzag_plane_scan(cloud, Plane::Yz, &config.scan),
            CurveTag::Hilbert => baseline(BaselineCurve::Hilbert),
            CurveTag::TransHilbert => baseline(BaselineCurve::TransHilbert),
            CurveTag::ZOrder => baseline(BaselineCurve::ZOrder),
            CurveTag::TransZOrder => baseline(BaselineCurve::TransZOrder),
            CurveTag::Random => baseline(BaselineCurve::Random(seeds.random_curve)),
        },
    };
    Ok(order?)
}

pub fn serialize(config: RunConfig) -> CliResult<Vec<String>> {
    let mut run = Run::start(config, CommandKind::Serialize)?;
    let config = run.config.clone();
    let weights = encoder(&config, &run.seeds)?;
    let sources = load_sources(&config, &run.seeds)?;
    let curves = config.curve_selection()?;
    let many = sources.len() > 1;
    for (i, source) in sources.iter().enumerate() {
        let target = scan_target(&config, &weights, source)?;
        for &choice in &curves {
            let order = scan(&target, choice, &config, &source.seeds)?;
            let metrics = locality_metrics(&target, order.permutation())?;
            let tag = order.curve_tag();
            let stem = if many {
                format!("{tag}_{i}")
            } else {
                tag.to_string()
            };
            run.files
                .push((format!("order_{stem}.bin"), order.to_bytes()));
            #[derive(Serialize)]
            struct OrderBody<'a> {
                source: &'a str,
                #[serde(flatten)]
                order: &'a ScanOrder,
            }
            #[derive(Serialize)]
            struct MetricsBody<'a> {
                source: &'a str,
                curve_tag: CurveTag,
                n: usize,
                #[serde(flatten)]
                metrics: LocalityMetrics,
            }
            run.json(
                format!("order_{stem}.json"),
                OrderBody {
                    source: &source.name,
                    order: &order,
                },
            )?;
            let body = MetricsBody {
                source: &source.name,
                curve_tag: tag,
                n: order.len(),
                metrics,
            };
            run.json(format!("metrics_{stem}.json"), body)?;
            println!(
                "{}\t{tag}\tn={}\tmean_step={:.6}",
                source.name,
                order.len(),
                metrics.mean_step
            );
        }
    }
    run.finish()
}

fn prepare_all(config: &RunConfig, seeds: &Seeds) -> CliResult<Vec<PreparedCloud>> {
    let weights = encoder(config, seeds)?;
    load_sources(config, seeds)?
        .iter()
        .map(|s| {
            let plane = config
                .plane
                .map_or(PlaneChoice::SeededRandom(s.seeds.plane), PlaneChoice::from);
            Ok(prepare_cloud(
                &s.cloud,
                &config.tokenizer,
                &weights,
                &config.scan,
                plane,
                s.seeds.tokenize,
            )?)
        })
        .collect()
}

fn mask_summary(strategy: MaskStrategy, plan: &MaskPlan) -> String {
    let total = plan.batch() * plan.groups();
    format!(
        "{strategy}: {} x {} tokens, semantic-masked {}, random-masked {}, masked {}, retained {}",
        plan.batch(),
        plan.groups(),
        plan.semantic_count(),
        plan.random_count(),
        plan.masked_count(),
        total - plan.masked_count()
    )
}

pub fn mask(config: RunConfig) -> CliResult<Vec<String>> {
    let mut run = Run::start(config, CommandKind::Mask)?;
    let config = run.config.clone();
    let prepared = prepare_all(&config, &run.seeds)?;
    let mask_config = config.mask_config(run.seeds.mask);
    for strategy in config.strategies() {
        let plan = mask_prepared(&prepared, &mask_config, strategy)?;
        println!("{}", mask_summary(strategy, &plan));
        #[derive(Serialize)]
        struct MaskBody<'a> {
            strategy: MaskStrategy,
            #[serde(flatten)]
            plan: &'a MaskPlan,
        }
        run.json(
            format!("mask_{strategy}.json"),
            MaskBody {
                strategy,
                plan: &plan,
            },
        )?;
    }
    run.finish()
}

#[derive(Debug, Clone, Serialize)]
struct CompareRow {
    curve: &'static str,
    clouds: usize,
    mean_step: f64,
    max_step: f64,
    total_path_length: f64,
    /// Share of clouds where this zigzag ordering has a smaller mean step
    /// than the seeded random ordering.
    win_rate_vs_random: Option<f64>,
}

pub fn compare(config: RunConfig) -> CliResult<Vec<String>> {
    let mut run = Run::start(config, CommandKind::Compare)?;
    let config = run.config.clone();
    let weights = encoder(&config, &run.seeds)?;
    let sources = load_sources(&config, &run.seeds)?;
    let curves = config.curve_selection()?;
    let mut per_curve: Vec<Vec<LocalityMetrics>> = vec![Vec::new(); curves.len()];
    let mut random_steps = Vec::new();
    for source in &sources {
        let target = scan_target(&config, &weights, source)?;
        for (slot, &choice) in per_curve.iter_mut().zip(&curves) {
            let order = scan(&target, choice, &config, &source.seeds)?;
            slot.push(locality_metrics(&target, order.permutation())?);
        }
        let random = scan(
            &target,
            CurveChoice::Tag(CurveTag::Random),
            &config,
            &source.seeds,
        )?;
        random_steps.push(locality_metrics(&target, random.permutation())?.mean_step);
    }
    let n = sources.len() as f64;
    let mut rows: Vec<CompareRow> = curves
        .iter()
        .zip(&per_curve)
        .map(|(&choice, metrics)| CompareRow {
            curve: choice.label(),
            clouds: metrics.len(),
            mean_step: metrics.iter().map(|m| m.mean_step).sum::<f64>() / n,
            max_step: metrics.iter().map(|m| m.max_step).sum::<f64>() / n,
            total_path_length: metrics.iter().map(|m| m.total_path_length).sum::<f64>() / n,
            win_rate_vs_random: choice.is_zigzag().then(|| {
                let wins = metrics
                    .iter()
                    .zip(&random_steps)
                    .filter(|(m, &r)| m.mean_step < r)
                    .count();
                wins as f64 / n
            }),
        })
        .collect();
    rows.sort_by(|a, b| a.curve.cmp(b.curve));
    let mut table =
        String::from("curve_tag,clouds,mean_step,max_step,total_path_length,win_rate_vs_random\n");
    for r in &rows {
        let win = r
            .win_rate_vs_random
            .map(|w| w.to_string())
            .unwrap_or_default();
        writeln!(
            table,
            "{},{},{},{},{},{win}",
            r.curve, r.clouds, r.mean_step, r.max_step, r.total_path_length
        )
        .expect("writing to a String");
        println!(
            "{:<14} mean_step={:.6} max_step={:.6} total={:.4}{}",
            r.curve,
            r.mean_step,
            r.max_step,
            r.total_path_length,
            r.win_rate_vs_random
                .map(|w| format!(" win_rate_vs_random={w:.3}"))
                .unwrap_or_default()
        );
    }
    run.csv("compare.csv".into(), &table)?;
    #[derive(Serialize)]
    struct CompareBody {
        rows: Vec<CompareRow>,
    }
    run.json("compare_summary.json".into(), CompareBody { rows })?;
    run.finish()
}

pub fn reconstruct(config: RunConfig) -> CliResult<Vec<String>> {
    let mut run = Run::start(config, CommandKind::Reconstruct)?;
    let config = run.config.clone();
    let prepared = prepare_all(&config, &run.seeds)?;
    let mask_config = config.mask_config(run.seeds.mask);
    for strategy in config.strategies() {
        let plan = mask_prepared(&prepared, &mask_config, strategy)?;
        let task = build_recon_task(&prepared, &plan)?;
        let (trace, _) = reconstruct_train(&task, &config.train, run.seeds.train)?;
        println!(
            "{strategy}: masked {} tokens, loss {:.6} -> {:.6} (ratio {:.4})",
            task.masked_count(),
            trace.init_loss,
            trace.final_loss,
            trace.final_loss / trace.init_loss
        );
        run.csv(format!("trace_{strategy}.csv"), &trace.to_csv())?;
        #[derive(Serialize)]
        struct SummaryBody {
            strategy: MaskStrategy,
            masked_tokens: usize,
            #[serde(flatten)]
            summary: serde_json::Value,
        }
        let body = SummaryBody {
            strategy,
            masked_tokens: task.masked_count(),
            summary: trace.summary(),
        };
        run.json(format!("summary_{strategy}.json"), body)?;
    }
    run.finish()
}
