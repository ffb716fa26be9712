//! `analyze`: inspect a learned MLP update rule.
//!
//! Reports first-order variance fractions per rule input (Sobol-style, on
//! the idealized input distribution) and the rule's update curves: mean
//! weight change versus current weight for each (selected, rewarded) case,
//! with 10th/90th percentile bands over the marginalized inputs.
//!
//! Writes `importance.csv` (`config_hash,input,fraction`; the last row
//! `interactions` holds the variance share left to input interactions) and
//! `curves_case_XY.csv` per case (`config_hash,w_self,mean_dw,p10,p90`,
//! X = selected flag, Y = reward). `--svg` adds a chart of the four curves.

use std::path::PathBuf;

use neuro_l2l_core::analysis::{
    input_importance, update_curves, ImportanceReport, InputDist, UpdateCurve, ANN_INPUT_NAMES,
};
use neuro_l2l_core::config::config_hash;
use neuro_l2l_core::plasticity::Rule;
use neuro_l2l_core::seed::{stream, StreamRole};
use neuro_l2l_core::{Error, Result};

use crate::plot::{line_chart, Series};
use crate::table::{num, write_csv};
use crate::{load_experiment_config, load_json, resolve_out_dir, write_text, ThetaArtifact};

#[derive(Debug, Clone)]
pub struct Args {
    pub config: PathBuf,
    pub theta: PathBuf,
    /// Monte-Carlo samples for the variance decomposition.
    pub samples: usize,
    /// Grid points for the update curves.
    pub grid: usize,
    /// Marginalization draws per grid point.
    pub marginal: usize,
    pub svg: bool,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub config_hash: String,
    pub importance: ImportanceReport,
}

pub fn execute(args: &Args) -> Result<Summary> {
    let cfg = load_experiment_config(&args.config)?;
    let hash = config_hash(&cfg)?;
    let exp = cfg.to_experiment()?;
    let artifact: ThetaArtifact = load_json(&args.theta)?;
    if artifact.encoded.len() != exp.space.dim() {
        return Err(Error::Config(format!(
            "theta artifact has {} dims but the config's search space has {}",
            artifact.encoded.len(),
            exp.space.dim()
        )));
    }
    let agent = exp.agent(&artifact.encoded)?;
    let Rule::Ann(rule) = &agent.rule else {
        return Err(Error::Config(
            "analyze needs a config with rule \"ann\"".into(),
        ));
    };
    println!("config hash {hash}");

    let mut imp_rng = stream(exp.master_seed, StreamRole::Analysis, &[4]);
    let importance = input_importance(rule, &InputDist::Idealized, args.samples, &mut imp_rng)?;
    let mut curve_rng = stream(exp.master_seed, StreamRole::Analysis, &[5]);
    let curves = update_curves(rule, args.grid, args.marginal, &mut curve_rng)?;

    let out_dir = resolve_out_dir(args.out_dir.as_deref(), cfg.output_dir.as_deref())?;
    let imp_path = out_dir.join("importance.csv");
    let header: Vec<String> = ["config_hash", "input", "fraction"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows: Vec<Vec<String>> = ANN_INPUT_NAMES
        .iter()
        .zip(&importance.fractions)
        .map(|(name, frac)| vec![hash.clone(), name.to_string(), num(*frac)])
        .collect();
    rows.push(vec![
        hash.clone(),
        "interactions".to_string(),
        num(importance.residual_interactions),
    ]);
    write_csv(&imp_path, &header, &rows)?;
    if importance.degenerate {
        println!("note: the rule output has no variance; fractions are all zero");
    }
    for (name, frac) in ANN_INPUT_NAMES.iter().zip(&importance.fractions) {
        println!("{name:>8}: {frac:.4}");
    }
    println!("interactions: {:.4}", importance.residual_interactions);
    println!("importance {}", imp_path.display());

    let curve_header: Vec<String> = ["config_hash", "w_self", "mean_dw", "p10", "p90"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for curve in &curves {
        let path = out_dir.join(format!("curves_case_{}{}.csv", curve.flag, curve.reward));
        let rows: Vec<Vec<String>> = curve
            .grid
            .iter()
            .enumerate()
            .map(|(i, w)| {
                vec![
                    hash.clone(),
                    num(*w),
                    num(curve.mean_dw[i]),
                    num(curve.p10[i]),
                    num(curve.p90[i]),
                ]
            })
            .collect();
        write_csv(&path, &curve_header, &rows)?;
        println!("curves {}", path.display());
    }

    if args.svg {
        let series: Vec<Series> = curves
            .iter()
            .map(|c: &UpdateCurve| Series {
                name: format!("selected={} reward={}", c.flag, c.reward),
                xs: c.grid.clone(),
                ys: c.mean_dw.clone(),
                band: Some((c.p10.clone(), c.p90.clone())),
            })
            .collect();
        let svg = line_chart(
            "learned update rule",
            "normalized weight",
            "weight change",
            &series,
        );
        let svg_path = out_dir.join("analyze.svg");
        write_text(&svg_path, &svg)?;
        println!("plot {}", svg_path.display());
    }

    Ok(Summary {
        config_hash: hash,
        importance,
    })
}
