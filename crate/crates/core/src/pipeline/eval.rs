use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{input_err, write_json, Result, Workspace};
use crate::embed::{load_embedding_set, load_posterior_set, EmbeddingSet, Modality, PosteriorSet};
use crate::io_util::write_atomic;
use crate::metrics::{build_report, FdInput, MetricsReport, ReportInputs, DEFAULT_THRESHOLDS};

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub gen_emb: PathBuf,
    pub train_seg_emb: Option<PathBuf>,
    pub text_emb: Option<PathBuf>,
    /// Reference set for FD; the training segments stand in when absent.
    pub gt_emb: Option<PathBuf>,
    pub gen_post: Option<PathBuf>,
    pub gt_post: Option<PathBuf>,
    pub thresholds: Vec<f64>,
    /// Key of the FD entry in the report.
    pub fd_label: String,
    pub out_dir: PathBuf,
}

impl EvalOptions {
    /// The files `embed` writes under `ws`.
    pub fn from_workspace(ws: &Workspace) -> Self {
        let emb = ws.emb_dir();
        Self {
            gen_emb: emb.join("generated.emb"),
            train_seg_emb: Some(emb.join("segments.emb")),
            text_emb: Some(emb.join("captions.emb")),
            gt_emb: Some(emb.join("references.emb")),
            gen_post: Some(emb.join("generated.pos")),
            gt_post: Some(emb.join("references.pos")),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            fd_label: "audio".into(),
            out_dir: ws.root().to_path_buf(),
        }
    }
}

fn load_emb(path: &Path, modality: Modality) -> Result<EmbeddingSet<f64>> {
    load_embedding_set(path, modality).map_err(input_err(path))
}

fn load_post(path: &Path) -> Result<PosteriorSet> {
    load_posterior_set(path).map_err(input_err(path))
}

/// Writes `report.json`, `report.txt` and, when SIM_AA was computed,
/// `nn_audit.json` into `opts.out_dir`.
pub fn cmd_eval(opts: &EvalOptions) -> Result<MetricsReport> {
    let gen = load_emb(&opts.gen_emb, Modality::Audio)?;
    let train = opts.train_seg_emb.as_deref().map(|p| load_emb(p, Modality::Audio)).transpose()?;
    let texts = opts.text_emb.as_deref().map(|p| load_emb(p, Modality::Text)).transpose()?;
    let gt = opts.gt_emb.as_deref().map(|p| load_emb(p, Modality::Audio)).transpose()?;
    let gen_post = opts.gen_post.as_deref().map(load_post).transpose()?;
    let gt_post = match (&gen_post, &opts.gt_post) {
        (Some(_), Some(p)) => Some(load_post(p)?),
        _ => None,
    };

    let rel = |p: &Path| {
        let abs_p = std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
        let abs_o = std::path::absolute(&opts.out_dir).unwrap_or_else(|_| opts.out_dir.clone());
        pathdiff::diff_paths(&abs_p, &abs_o)
            .map(|r| super::ingest::portable(&r))
            .unwrap_or_else(|| p.display().to_string())
    };
    let mut providers = BTreeMap::new();
    providers.insert("generated".to_string(), rel(&opts.gen_emb));
    let files = [
        ("train_segments", &opts.train_seg_emb),
        ("texts", &opts.text_emb),
        ("fd_reference", &opts.gt_emb),
        ("generated_posteriors", &opts.gen_post),
    ];
    for (k, v) in files {
        if let Some(p) = v {
            providers.insert(k.to_string(), rel(p));
        }
    }
    if gt_post.is_some() {
        providers.insert("reference_posteriors".into(), rel(opts.gt_post.as_ref().expect("loaded")));
    }
    if opts.gt_emb.is_none() && train.is_some() {
        providers.insert("fd_reference".into(), rel(opts.train_seg_emb.as_ref().expect("loaded")));
    }

    let mut fd = Vec::new();
    if let Some(reference) = gt.as_ref().or(train.as_ref()) {
        fd.push(FdInput {
            provider: opts.fd_label.clone(),
            generated: &gen,
            reference,
        });
    }
    let inputs = ReportInputs {
        generated: Some(&gen),
        train_segments: train.as_ref(),
        texts: texts.as_ref(),
        fd,
        generated_posteriors: gen_post.as_ref(),
        reference_posteriors: gt_post.as_ref(),
        thresholds: opts.thresholds.clone(),
        providers,
    };
    let (report, audit) = build_report(&inputs)?;
    write_json(&report, &opts.out_dir.join("report.json"))?;
    let table = opts.out_dir.join("report.txt");
    write_atomic(&table, report.to_table().as_bytes())
        .map_err(super::internal_err(&table.display().to_string()))?;
    if !audit.is_empty() {
        write_json(&audit, &opts.out_dir.join("nn_audit.json"))?;
    }
    Ok(report)
}
