//! One function per subcommand. Each reads its inputs, calls the library
//! once and writes what it returned; nothing here does arithmetic.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use heart_core::anchors::{
    attribute_direction, estimate_anchor, role_embedding, AttributePair, ConceptAnchor, TokenRole,
};
use heart_core::edit::{
    edit_attribute_sequence, edit_subject_sequence, injection_schedule, AnchorPair, EditPlan, EditResult,
    SubjectAnchors, ANGLE_HEADER,
};
use heart_core::io::{
    read_manifest, read_model_file, read_sequence_file, write_model, write_sequence, EmbeddingSequence, FitConfig,
    ModelArtifact, ModelDocument, SequenceMeta,
};
use heart_core::probes::{
    contamination, magnitude_variants, nearest_neighbors, thinness, thinness_record, write_csv, CONTAMINATION_HEADER,
    NN_HEADER, THINNESS_HEADER,
};
use heart_core::sphere::{normalize, Direction};
use heart_core::stats::select::CSV_HEADER;
use heart_core::stats::{sample_kent, sample_vmf, select_model, KentModel, ModelTag, VmfModel};
use serde_json::{json, Value};

use crate::args::*;
use crate::config::CliConfig;
use crate::error::{CliError, Context};
use crate::output::{emit, write_atomic};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => CliConfig::load("config", p)?,
        None => CliConfig::default(),
    };
    match cli.command {
        Command::Fit(a) => fit(&cfg, a),
        Command::Anchor(a) => anchor(a),
        Command::AttrDir(a) => attr_dir(a),
        Command::EditSubject(a) => edit_subject(&cfg, a),
        Command::EditAttribute(a) => edit_attribute(&cfg, a),
        Command::Probe(ProbeCommand::Thinness(a)) => probe_thinness(a),
        Command::Probe(ProbeCommand::Nn(a)) => probe_nn(&cfg, a),
        Command::Probe(ProbeCommand::Contamination(a)) => probe_contamination(a),
        Command::Probe(ProbeCommand::Magnitude(a)) => probe_magnitude(&cfg, a),
        Command::Synth(SynthCommand::Vmf(a)) => synth(&cfg, &a, None),
        Command::Synth(SynthCommand::Kent(a)) => synth(&cfg, &a.common, Some(a.beta_ratio)),
        Command::Schedule(a) => schedule(&cfg, a),
    }
}

fn load_inputs(op: &'static str, inputs: &Inputs) -> Result<Vec<(PathBuf, EmbeddingSequence)>, CliError> {
    let mut paths = inputs.inputs.clone();
    if let Some(m) = &inputs.manifest {
        paths.extend(read_manifest(m).ctx(op, &m.display().to_string())?);
    }
    if paths.is_empty() {
        return Err(CliError::validation(op, "inputs", "no HEMB files given"));
    }
    paths
        .into_iter()
        .map(|p| {
            let s = read_sequence_file(&p).ctx(op, &p.display().to_string())?;
            Ok((p, s))
        })
        .collect()
}

fn load_sequence(op: &'static str, path: &Path) -> Result<EmbeddingSequence, CliError> {
    read_sequence_file(path).ctx(op, &path.display().to_string())
}

fn load_model(op: &'static str, path: &Path) -> Result<ModelDocument, CliError> {
    read_model_file(path).ctx(op, &path.display().to_string())
}

fn load_anchor(op: &'static str, param: &str, path: &Path) -> Result<ConceptAnchor, CliError> {
    match load_model(op, path)?.artifact {
        ModelArtifact::Anchor(a) => Ok(a),
        other => Err(wrong_type(op, param, path, other.type_tag(), "anchor")),
    }
}

/// Mean direction of an anchor, Kent or vMF document.
fn load_mean(op: &'static str, param: &str, path: &Path) -> Result<Direction, CliError> {
    match load_model(op, path)?.artifact {
        ModelArtifact::Anchor(a) => Ok(a.mu().clone()),
        ModelArtifact::Kent(k) => Ok(k.mu),
        ModelArtifact::Vmf(v) => Ok(v.mu),
        other => Err(wrong_type(op, param, path, other.type_tag(), "anchor, kent or vmf")),
    }
}

fn wrong_type(op: &'static str, param: &str, path: &Path, got: &str, want: &str) -> CliError {
    CliError::validation(
        op,
        param,
        format!("{} holds a {got} document, expected {want}", path.display()),
    )
}

fn csv_bytes<const N: usize>(
    op: &'static str,
    header: &[&str; N],
    records: &[[String; N]],
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, records).ctx(op, "csv")?;
    Ok(buf)
}

fn model_bytes(op: &'static str, doc: &ModelDocument) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_model(doc, &mut buf).ctx(op, "model")?;
    Ok(buf)
}

fn hemb_bytes(op: &'static str, seq: &EmbeddingSequence) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_sequence(seq, &mut buf).ctx(op, "hemb")?;
    Ok(buf)
}

fn options(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Samples for `fit`: one role embedding per sequence, or every non-special
/// row when no role is given.
fn samples(
    op: &'static str,
    seqs: &[(PathBuf, EmbeddingSequence)],
    role: Option<TokenRole>,
) -> Result<Vec<Direction>, CliError> {
    let mut out = Vec::new();
    for (path, seq) in seqs {
        let rows: Vec<(String, Vec<f64>)> = match role {
            Some(r) => {
                let v = role_embedding(seq, r).ok_or_else(|| {
                    CliError::validation(op, "--role", format!("{} has no {r} position", path.display()))
                })?;
                vec![(format!("{r} embedding"), v)]
            }
            None => (0..seq.rows())
                .filter(|&i| !seq.is_special(i))
                .map(|i| (format!("row {i}"), seq.row_f64(i)))
                .collect(),
        };
        for (what, v) in rows {
            let (d, _) = normalize(&v).ctx(op, &format!("{} {what}", path.display()))?;
            out.push(d);
        }
    }
    Ok(out)
}

fn fit(cfg: &CliConfig, a: FitArgs) -> Result<(), CliError> {
    const OP: &str = "fit";
    let seqs = load_inputs(OP, &a.inputs)?;
    let xs = samples(OP, &seqs, a.role)?;
    let k = cfg.components(OP, a.components)?;
    let seed = cfg.seed(a.seed);
    let sel = select_model(&xs, k, seed).ctx(OP, "inputs")?;
    log::info!("fit: {} samples, winner {}", xs.len(), sel.report.winner);

    let bytes = match a.format {
        ReportFormat::Json => {
            let mut b = serde_json::to_vec_pretty(&sel.report).expect("report serializes");
            b.push(b'\n');
            b
        }
        ReportFormat::Csv => csv_bytes(OP, &CSV_HEADER, &[sel.report.csv_record(&a.concept, &a.encoder)])?,
    };
    emit(OP, a.output.as_deref(), &bytes)?;

    if let Some(path) = &a.model_out {
        let missing = || CliError::validation(OP, "--model-out", "winning model was not kept");
        let artifact = match sel.report.winner {
            ModelTag::Vmf => ModelArtifact::Vmf(sel.vmf.ok_or_else(missing)?),
            ModelTag::Movmf => ModelArtifact::Movmf(sel.movmf.ok_or_else(missing)?),
            ModelTag::Kent => ModelArtifact::Kent(sel.kent.ok_or_else(missing)?),
        };
        let config = FitConfig {
            seed: Some(seed),
            sample_count: Some(xs.len()),
            options: options(&[("movmf_k", json!(k))]),
        };
        write_atomic(OP, path, &model_bytes(OP, &ModelDocument::new(artifact, config))?)?;
    }
    Ok(())
}

fn anchor(a: AnchorArgs) -> Result<(), CliError> {
    const OP: &str = "anchor";
    let seqs = load_inputs(OP, &a.inputs)?;
    let n = seqs.len();
    let seqs: Vec<EmbeddingSequence> = seqs.into_iter().map(|(_, s)| s).collect();
    let anchor = estimate_anchor(&a.concept, &seqs, a.role).ctx(OP, "inputs")?;
    let config = FitConfig {
        seed: None,
        sample_count: Some(n),
        options: options(&[("role", json!(a.role))]),
    };
    let doc = ModelDocument::new(ModelArtifact::Anchor(anchor), config);
    emit(OP, a.output.as_deref(), &model_bytes(OP, &doc)?)
}

fn attr_dir(a: AttrDirArgs) -> Result<(), CliError> {
    const OP: &str = "attr-dir";
    let neg = load_anchor(OP, "--negative", &a.negative)?;
    let pos = load_anchor(OP, "--positive", &a.positive)?;
    let (neg_name, pos_name) = (neg.concept.clone(), pos.concept.clone());
    let pair = AttributePair::new(&a.concept, &neg_name, &pos_name, neg, pos).ctx(OP, "--positive")?;
    let dir = attribute_direction(&pair).ctx(OP, "--positive")?;
    let config = FitConfig {
        options: options(&[
            ("concept", json!(a.concept)),
            ("negative", json!(neg_name)),
            ("positive", json!(pos_name)),
        ]),
        ..Default::default()
    };
    let doc = ModelDocument::new(ModelArtifact::AttributeDirection(dir), config);
    emit(OP, a.output.as_deref(), &model_bytes(OP, &doc)?)
}

fn pair(
    op: &'static str,
    role: &str,
    src: &Option<PathBuf>,
    tgt: &Option<PathBuf>,
) -> Result<Option<AnchorPair>, CliError> {
    match (src, tgt) {
        (Some(s), Some(t)) => {
            let (sp, tp) = (format!("--{role}-source"), format!("--{role}-target"));
            let p = AnchorPair::new(load_mean(op, &sp, s)?, load_mean(op, &tp, t)?).ctx(op, &tp)?;
            Ok(Some(p))
        }
        _ => Ok(None),
    }
}

fn write_edit(op: &'static str, r: &EditResult, output: &Path, angles: Option<&Path>) -> Result<(), CliError> {
    write_atomic(op, output, &hemb_bytes(op, &r.edited)?)?;
    emit(op, angles, &csv_bytes(op, &ANGLE_HEADER, &r.angle_records())?)
}

fn edit_subject(cfg: &CliConfig, a: EditSubjectArgs) -> Result<(), CliError> {
    const OP: &str = "edit-subject";
    let plan = cfg.plan(OP, &a.plan)?;
    let seq = load_sequence(OP, &a.input)?;
    let subject = AnchorPair::new(
        load_mean(OP, "--source", &a.source)?,
        load_mean(OP, "--target", &a.target)?,
    )
    .ctx(OP, "--target")?;
    let anchors = SubjectAnchors {
        subject,
        eot: pair(OP, "eot", &a.eot_source, &a.eot_target)?,
        pad: pair(OP, "pad", &a.pad_source, &a.pad_target)?,
    };
    let r = edit_subject_sequence(&seq, &anchors, &plan).ctx(OP, "--input")?;
    write_edit(OP, &r, &a.output, a.angles.as_deref())
}

fn edit_attribute(cfg: &CliConfig, a: EditAttributeArgs) -> Result<(), CliError> {
    const OP: &str = "edit-attribute";
    let dir = match load_model(OP, &a.direction)?.artifact {
        ModelArtifact::AttributeDirection(d) => d,
        other => {
            return Err(wrong_type(
                OP,
                "--direction",
                &a.direction,
                other.type_tag(),
                "attribute_direction",
            ))
        }
    };
    let mut plan: EditPlan = cfg.plan(OP, &a.plan)?;
    if a.to_target {
        plan.lambda = dir.theta_to_target;
    }
    let seq = load_sequence(OP, &a.input)?;
    let r = edit_attribute_sequence(&seq, &dir, &plan).ctx(OP, "--input")?;
    write_edit(OP, &r, &a.output, a.angles.as_deref())
}

fn probe_thinness(a: ThinnessArgs) -> Result<(), CliError> {
    const OP: &str = "probe thinness";
    let seqs: Vec<EmbeddingSequence> = load_inputs(OP, &a.inputs)?.into_iter().map(|(_, s)| s).collect();
    let r = thinness(&seqs, a.include_special, &a.encoder).ctx(OP, "inputs")?;
    emit(
        OP,
        a.output.as_deref(),
        &csv_bytes(OP, &THINNESS_HEADER, &[thinness_record(&r)])?,
    )
}

fn probe_nn(cfg: &CliConfig, a: NnArgs) -> Result<(), CliError> {
    const OP: &str = "probe nn";
    let k = cfg.nn_k(OP, a.k)?;
    let vocab_seq = load_sequence(OP, &a.vocab)?;
    let vocab: Vec<(String, Vec<f64>)> = (0..vocab_seq.rows())
        .map(|i| (vocab_seq.meta.tokens[i].clone(), vocab_seq.row_f64(i)))
        .collect();
    let (name, query) = match (&a.query_token, &a.query, a.row) {
        (Some(tok), _, _) => {
            let i = vocab.iter().position(|(t, _)| t == tok).ok_or_else(|| {
                CliError::validation(OP, "--query-token", format!("{tok:?} is not in the vocabulary"))
            })?;
            vocab[i].clone()
        }
        (None, Some(path), Some(row)) => {
            let q = load_sequence(OP, path)?;
            if row >= q.rows() {
                return Err(CliError::validation(
                    OP,
                    "--row",
                    format!("{row} is past the last row {}", q.rows() - 1),
                ));
            }
            (q.meta.tokens[row].clone(), q.row_f64(row))
        }
        _ => {
            return Err(CliError::validation(
                OP,
                "--query-token",
                "give --query-token or --query with --row",
            ))
        }
    };
    let r = nearest_neighbors(&name, &query, &vocab, k).ctx(OP, "--query")?;
    emit(OP, a.output.as_deref(), &csv_bytes(OP, &NN_HEADER, &r.records())?)
}

fn probe_contamination(a: ContaminationArgs) -> Result<(), CliError> {
    const OP: &str = "probe contamination";
    let (sa, sb) = (load_sequence(OP, &a.a)?, load_sequence(OP, &a.b)?);
    let r = contamination(&sa, &sb).ctx(OP, "b")?;
    emit(
        OP,
        a.output.as_deref(),
        &csv_bytes(OP, &CONTAMINATION_HEADER, &r.records())?,
    )?;
    if let Some(path) = &a.summary {
        let summary = json!({
            "eot_angle": r.eot_angle,
            "upstream_mean": r.upstream_mean,
            "downstream_mean": r.downstream_mean,
            "asymmetry": r.asymmetry,
        });
        let mut b = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        b.push(b'\n');
        write_atomic(OP, path, &b)?;
    }
    Ok(())
}

fn probe_magnitude(cfg: &CliConfig, a: MagnitudeArgs) -> Result<(), CliError> {
    const OP: &str = "probe magnitude";
    let scales = cfg.scales(OP, a.scales)?;
    let seq = load_sequence(OP, &a.input)?;
    let variants = magnitude_variants(&seq, &scales).ctx(OP, "--scales")?;
    std::fs::create_dir_all(&a.output_dir).map_err(|e| CliError::io(OP, &a.output_dir, e.to_string()))?;
    let stem = a
        .input
        .file_stem()
        .map_or("seq".into(), |s| s.to_string_lossy().into_owned());
    for (scale, v) in scales.iter().zip(&variants) {
        let path = a.output_dir.join(format!("{stem}.x{scale}.hemb"));
        write_atomic(OP, &path, &hemb_bytes(OP, v)?)?;
    }
    Ok(())
}

fn synth(cfg: &CliConfig, a: &SynthArgs, beta_ratio: Option<f64>) -> Result<(), CliError> {
    let op = if beta_ratio.is_some() {
        "synth kent"
    } else {
        "synth vmf"
    };
    let min_dim = if beta_ratio.is_some() { 3 } else { 2 };
    if a.dim < min_dim {
        return Err(CliError::validation(
            op,
            "--dim",
            format!("must be at least {min_dim}, got {}", a.dim),
        ));
    }
    if a.count == 0 {
        return Err(CliError::validation(op, "--count", "must be at least 1"));
    }
    let seed = cfg.seed(a.seed);
    let e = |i| Direction::basis(a.dim, i);
    let (draws, artifact) = match beta_ratio {
        Some(r) => {
            if !(0.0..0.5).contains(&r) {
                return Err(CliError::validation(
                    op,
                    "--beta-ratio",
                    format!("must lie in [0, 0.5), got {r}"),
                ));
            }
            let m = KentModel::new(e(0), a.kappa, r * a.kappa, e(1), e(2)).ctx(op, "--kappa")?;
            (sample_kent(&m, a.count, seed), ModelArtifact::Kent(m))
        }
        None => {
            let m = VmfModel::new(e(0), a.kappa).ctx(op, "--kappa")?;
            (sample_vmf(&m, a.count, seed), ModelArtifact::Vmf(m))
        }
    };
    let rows: Vec<Vec<f64>> = draws.into_iter().map(Direction::into_inner).collect();
    let meta = SequenceMeta {
        tokens: (0..a.count).map(|i| format!("x{i}")).collect(),
        model_tag: "synthetic".into(),
        extra: options(&[("generator", json!(artifact.type_tag())), ("seed", json!(seed))]),
        ..Default::default()
    };
    let seq = EmbeddingSequence::from_rows(&rows, meta).ctx(op, "--output")?;
    write_atomic(op, &a.output, &hemb_bytes(op, &seq)?)?;
    if let Some(path) = &a.truth {
        let config = FitConfig {
            seed: Some(seed),
            sample_count: Some(a.count),
            ..Default::default()
        };
        write_atomic(op, path, &model_bytes(op, &ModelDocument::new(artifact, config))?)?;
    }
    Ok(())
}

fn schedule(cfg: &CliConfig, a: ScheduleArgs) -> Result<(), CliError> {
    const OP: &str = "schedule";
    let steps = cfg.total_steps(OP, a.total_steps)?;
    let flags = PlanArgs {
        inject_fraction: a.inject_fraction,
        ..Default::default()
    };
    let plan = cfg.plan(OP, &flags)?;
    let step = injection_schedule(&plan, steps).ctx(OP, "--inject-fraction")?;
    emit(OP, None, format!("{step}\n").as_bytes())
}
