"""Pipeline orchestration: prepare-data, train, evaluate, explain, report,
alpha, serve — each command writes versioned artifacts plus a run manifest
into the output directory and refuses to mix artifacts from different
configurations."""

from __future__ import annotations

import json
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from . import metrics as mx
from . import pipeline as pl
from . import survey as sv
from .config import ConfigInvalid, PipelineConfig, load_config
from .explain import explain_batch, sample_background, summarize
from .schema import CLASS_NAMES, FEATURE_NAMES, default_schema
from .nn import (
    TrainConfig,
    cnn_reference_spec,
    load_model_bundle,
    lstm_reference_spec,
    predict_proba,
    save_model_bundle,
    train,
)


class MissingArtifact(Exception):
    def __init__(self, stage: str, hint: str):
        super().__init__(f"stage {stage!r} is missing its input artifact: {hint}")
        self.stage = stage


@contextmanager
def _lock(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    lock_path = out_dir / ".lock"
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise SystemExit(
            f"output directory is locked by another command ({lock_path}); remove the file if stale"
        )
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock_path.unlink(missing_ok=True)


def _write_manifest(out_dir: Path, stage: str, config: PipelineConfig, started: float, outputs: list[str]):
    manifest = {
        "stage": stage,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "started_unix": started,
        "duration_seconds": time.time() - started,
        "outputs": outputs,
        "config": config.to_jsonable(),
    }
    (out_dir / f"manifest_{stage}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _check_hash(out_dir: Path, stage: str, config: PipelineConfig, dependency_stage: str):
    manifest_path = out_dir / f"manifest_{dependency_stage}.json"
    if not manifest_path.exists():
        raise MissingArtifact(stage, f"run '{dependency_stage}' first (no {manifest_path.name})")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("config_hash") != config.config_hash():
        raise SystemExit(
            f"stage {stage!r}: artifact from '{dependency_stage}' was produced by a different "
            f"config (hash {manifest.get('config_hash')} != {config.config_hash()}); refusing to mix"
        )


def _config_from_ctx(ctx) -> PipelineConfig:
    params = ctx.obj
    overrides: dict = {"out_dir": params.get("out")}
    model_overrides: dict = {}
    if params.get("model"):
        model_overrides["family"] = params["model"]
    if params.get("seed") is not None:
        seed = params["seed"]
        overrides["seed"] = seed
        model_overrides["seed"] = seed
        overrides["split"] = {"seed": seed}
        overrides["explainer"] = {"seed": seed}
    if model_overrides:
        overrides["model"] = model_overrides
    try:
        return load_config(params.get("config"), overrides)
    except ConfigInvalid as exc:
        raise SystemExit(f"invalid configuration: {exc}")


@click.group()
@click.option("--config", type=click.Path(), default=None, help="JSON or TOML pipeline config.")
@click.option("--out", type=click.Path(), default=None, help="Output directory override.")
@click.option("--seed", type=int, default=None, help="Override every stage seed at once.")
@click.option("--model", type=click.Choice(["cnn", "lstm"]), default=None, help="Model family override.")
@click.pass_context
def main(ctx, config, out, seed, model):
    """Explainable intrusion-detection pipeline."""
    ctx.obj = {"config": config, "out": out, "seed": seed, "model": model}


@main.command("synth-data")
@click.option("--rows", type=int, default=20000, show_default=True)
@click.option("--path", type=click.Path(), default="data/synth.txt", show_default=True)
@click.pass_context
def synth_data(ctx, rows, path):
    """Generate a seeded synthetic corpus in the 43-field record format."""
    from .synth import synth_corpus

    config = _config_from_ctx(ctx)
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(synth_corpus(rows, seed=config.seed))
    click.echo(f"wrote {rows} synthetic records to {out_path}")


@main.command("prepare-data")
@click.pass_context
def prepare_data(ctx):
    """Parse, encode, scale, and split the dataset into a bundle directory."""
    config = _config_from_ctx(ctx)
    out_dir = Path(config.out_dir)
    with _lock(out_dir):
        started = time.time()
        source = Path(config.train_path)
        if not source.exists():
            raise MissingArtifact("prepare-data", f"dataset file not found: {source}")
        records = pl.load_nslkdd(source)
        split = pl.SplitSpec(config.split.train_fraction, config.split.seed, config.split.shuffle)
        bundle = pl.build_bundle(records, split)
        bundle_dir = pl.save_bundle(bundle, out_dir / "dataset")
        _write_manifest(out_dir, "prepare-data", config, started, [str(bundle_dir)])
        dist = bundle.distribution["full"]
        click.echo(f"parsed {len(records)} records -> {bundle_dir}")
        click.echo("class distribution: " + ", ".join(f"{k}={v}" for k, v in dist.items()))
        if bundle.unseen_category_rows:
            click.echo(f"note: {bundle.unseen_category_rows} test-row category values unseen in training partition")


def _model_dir(config: PipelineConfig) -> Path:
    return Path(config.out_dir) / f"model_{config.model.family}"


def _build_spec(config: PipelineConfig):
    if config.model.family == "cnn":
        return cnn_reference_spec()
    return lstm_reference_spec(dropout_rate=config.model.dropout)


@main.command("train")
@click.pass_context
def train_cmd(ctx):
    """Train the configured model family on the prepared training partition."""
    config = _config_from_ctx(ctx)
    out_dir = Path(config.out_dir)
    _check_hash(out_dir, "train", config, "prepare-data")
    with _lock(out_dir):
        started = time.time()
        bundle = pl.load_bundle(out_dir / "dataset")
        spec = _build_spec(config)
        x = pl.reshape(bundle.train.matrix, config.model.family)
        tc = TrainConfig(
            epochs=config.model.epochs,
            batch_size=config.model.batch_size,
            learning_rate=config.model.learning_rate,
            loss=config.model.resolved_loss(),
            seed=config.model.seed,
        )

        def progress(epoch, history):
            click.echo(
                f"epoch {epoch + 1}/{tc.epochs}: loss {history.epoch_loss[-1]:.4f} "
                f"acc {history.epoch_accuracy[-1]:.4f} ({history.epoch_seconds[-1]:.1f}s)"
            )

        params, history = train(spec, x, bundle.train.labels, tc, progress=progress)
        model_dir = save_model_bundle(_model_dir(config), spec, params, tc, history)
        _write_manifest(out_dir, "train", config, started, [str(model_dir)])
        click.echo(f"model bundle -> {model_dir}")


@main.command("evaluate")
@click.pass_context
def evaluate(ctx):
    """Score the held-out partition and write metric reports + ROC CSVs."""
    config = _config_from_ctx(ctx)
    out_dir = Path(config.out_dir)
    _check_hash(out_dir, "evaluate", config, "train")
    with _lock(out_dir):
        started = time.time()
        bundle = pl.load_bundle(out_dir / "dataset")
        spec, params = load_model_bundle(_model_dir(config))
        x = pl.reshape(bundle.test.matrix, config.model.family)
        scores = predict_proba(spec, params, x)
        predicted = np.argmax(scores, axis=1)
        report = mx.full_report(bundle.test.labels, predicted, scores)
        artifact_dir = out_dir / "artifacts"
        artifact_dir.mkdir(parents=True, exist_ok=True)
        report["model_family"] = config.model.family
        report["config_hash"] = config.config_hash()
        mx.save_report(report, artifact_dir, scores, bundle.test.labels)
        np.savez_compressed(
            artifact_dir / "predictions.npz",
            scores=scores,
            predicted=predicted,
            true_labels=bundle.test.labels,
        )
        _write_manifest(out_dir, "evaluate", config, started, [str(artifact_dir / "metrics.json")])
        click.echo(mx.render_text_report(report))


def _model_fn_for(spec, params, family: str):
    # float32 inference: ~2x GEMM throughput for coalition sweeps, error
    # orders of magnitude below the attribution tolerances.
    params32 = [{k: v.astype(np.float32) for k, v in layer.items()} for layer in params]

    def model_fn(rows: np.ndarray) -> np.ndarray:
        shaped = pl.reshape(np.ascontiguousarray(rows, dtype=np.float32), family)
        return predict_proba(spec, params32, shaped, chunk_size=16384).astype(np.float64)

    return model_fn


@main.command("explain")
@click.option("--jobs", type=int, default=1, show_default=True, help="Instance-level thread parallelism.")
@click.pass_context
def explain(ctx, jobs):
    """Attribute per-class predictions for a sample of test instances."""
    config = _config_from_ctx(ctx)
    out_dir = Path(config.out_dir)
    _check_hash(out_dir, "explain", config, "train")
    with _lock(out_dir):
        started = time.time()
        bundle = pl.load_bundle(out_dir / "dataset")
        spec, params = load_model_bundle(_model_dir(config))
        model_fn = _model_fn_for(spec, params, config.model.family)

        background = sample_background(
            bundle.train.matrix, config.explainer.background_size, config.explainer.seed
        )
        rng = np.random.Generator(np.random.PCG64(config.explainer.seed))
        order = rng.permutation(bundle.test.matrix.shape[0])
        picked = order[: config.explainer.instances]
        instances = bundle.test.matrix[picked]
        instance_ids = [f"test:{int(i)}" for i in picked]

        def progress(i, total):
            if (i + 1) % 10 == 0 or i + 1 == total:
                click.echo(f"explained {i + 1}/{total} instances")

        all_attributions = explain_batch(
            model_fn,
            instances,
            background,
            n_coalitions=config.explainer.n_coalitions,
            seed=config.explainer.seed,
            instance_ids=instance_ids,
            progress=progress,
            n_jobs=jobs,
        )
        payload = _explanation_payload(config, bundle, instances, picked, all_attributions)
        artifact_dir = out_dir / "artifacts"
        artifact_dir.mkdir(parents=True, exist_ok=True)
        (artifact_dir / "explanations.json").write_text(json.dumps(payload, sort_keys=True))
        scenarios = _build_scenarios(payload)
        (artifact_dir / "scenarios.json").write_text(json.dumps(scenarios, indent=2, sort_keys=True))
        sv.save_instrument(sv.default_instrument(), artifact_dir / "instrument.json")
        _write_manifest(out_dir, "explain", config, started, [str(artifact_dir / "explanations.json")])
        click.echo(f"explanations -> {artifact_dir / 'explanations.json'}")


def _explanation_payload(config, bundle, instances, picked, all_attributions) -> dict:
    schema = default_schema()
    raw = pl.invert_minmax(instances, bundle.test.scaler_params)
    categories = bundle.test.encoder_params.categories
    flat = [a for per_instance in all_attributions for a in per_instance]

    instances_out = []
    for row, per_instance in enumerate(all_attributions):
        idx = int(picked[row])
        true_label = int(bundle.test.labels[idx])
        predictions = [a.prediction for a in per_instance]
        predicted_label = int(np.argmax(predictions))
        feature_raw = []
        for f, name in enumerate(schema.names):
            if name in categories:
                code = int(round(raw[row, f]))
                cats = categories[name]
                feature_raw.append(cats[code] if 0 <= code < len(cats) else f"code:{code}")
            else:
                feature_raw.append(float(raw[row, f]))
        instances_out.append(
            {
                "instance_id": f"test:{idx}",
                "index": idx,
                "true_label": true_label,
                "true_label_name": CLASS_NAMES[true_label],
                "predicted_label": predicted_label,
                "predicted_label_name": CLASS_NAMES[predicted_label],
                "features_scaled": [float(v) for v in instances[row]],
                "features_raw": feature_raw,
                "classes": [
                    {
                        "class_index": a.class_index,
                        "class_name": CLASS_NAMES[a.class_index],
                        "base_value": a.base_value,
                        "phi": [float(p) for p in a.phi],
                        "prediction": a.prediction,
                        "ridge_fallback": a.ridge_fallback,
                    }
                    for a in per_instance
                ],
            }
        )

    summaries = []
    for c in range(len(CLASS_NAMES)):
        summary = summarize(flat, c, feature_values=instances)
        summaries.append(
            {
                "class_index": c,
                "class_name": CLASS_NAMES[c],
                "ranking": [FEATURE_NAMES[f] for f in summary.ranking],
                "mean_abs_phi": {FEATURE_NAMES[f]: float(summary.mean_abs_phi[f]) for f in range(len(FEATURE_NAMES))},
                "beeswarm": {
                    FEATURE_NAMES[f]: summary.beeswarm[f] for f in range(len(summary.beeswarm))
                },
            }
        )

    return {
        "version": 1,
        "config_hash": config.config_hash(),
        "model_family": config.model.family,
        "background_size": config.explainer.background_size,
        "n_coalitions": config.explainer.n_coalitions,
        "seed": config.explainer.seed,
        "feature_names": list(FEATURE_NAMES),
        "instances": instances_out,
        "summaries": summaries,
    }


def _build_scenarios(payload: dict) -> list[dict]:
    narratives = {
        "DoS": "Overnight, a web frontend logged thousands of half-open TCP connections from a "
        "single source range; service latency spiked and health checks began to fail.",
        "Probe": "A workstation swept sequential ports across several servers in the DMZ over a "
        "few minutes, touching many services without completing handshakes.",
        "R2L": "An external host made repeated login attempts against the FTP service, eventually "
        "transferring files after a successful guest authentication.",
        "U2R": "A logged-in user session spawned a root shell and created files in system "
        "directories shortly after a buffer-overflow alert.",
        "Normal": "Routine office traffic: authenticated HTTP sessions with normal byte counts "
        "and no connection errors.",
    }
    scenarios = []
    seen: set[str] = set()
    for inst in payload["instances"]:
        name = inst["predicted_label_name"]
        if name in seen:
            continue
        seen.add(name)
        scenarios.append(
            {
                "id": f"scenario_{name.lower()}",
                "title": f"{name} case review",
                "narrative": narratives[name],
                "instance_id": inst["instance_id"],
                "model_family": payload["model_family"],
            }
        )
    return scenarios


@main.command("report")
@click.pass_context
def report_cmd(ctx):
    """Render metric tables and attribution rankings from stored artifacts."""
    config = _config_from_ctx(ctx)
    out_dir = Path(config.out_dir)
    artifact_dir = out_dir / "artifacts"
    metrics_path = artifact_dir / "metrics.json"
    if not metrics_path.exists():
        raise MissingArtifact("report", f"run 'evaluate' first (no {metrics_path})")
    report = json.loads(metrics_path.read_text())
    if report.get("config_hash") != config.config_hash():
        raise SystemExit("report: metrics artifact was produced by a different config; refusing to mix")
    click.echo(mx.render_text_report(report))
    predictions_path = artifact_dir / "predictions.npz"
    if predictions_path.exists() and not (artifact_dir / "roc_micro.csv").exists():
        with np.load(predictions_path) as z:
            mx.save_report(report, artifact_dir, z["scores"], z["true_labels"])
        click.echo("re-emitted per-class ROC CSVs")
    explanations_path = artifact_dir / "explanations.json"
    if explanations_path.exists():
        payload = json.loads(explanations_path.read_text())
        click.echo("Top features by mean |phi|:")
        for summary in payload["summaries"]:
            top = ", ".join(summary["ranking"][:5])
            click.echo(f"  {summary['class_name']:<8} {top}")


@main.command("alpha")
@click.option("--responses", "responses_path", type=click.Path(exists=True), required=True)
@click.option("--instrument", "instrument_path", type=click.Path(exists=True), default=None)
@click.pass_context
def alpha_cmd(ctx, responses_path, instrument_path):
    """Internal-consistency table from a response-export CSV."""
    instrument = (
        sv.load_instrument(instrument_path) if instrument_path else sv.default_instrument()
    )
    rows = Path(responses_path).read_text().strip().split("\n")
    header = rows[0].split(",")
    responses = []
    for line_no, line in enumerate(rows[1:], start=2):
        cells = line.split(",")
        record = dict(zip(header, cells))
        answers = {}
        for item in instrument.items:
            value = record.get(item.id, "")
            if value:
                answers[item.id] = int(value)
        responses.append(
            sv.SurveyResponse(
                session_id=record.get("session_id", f"row{line_no}"),
                answers=answers,
                completed_at="imported",
            )
        )
    click.echo(f"{'Construct':<16} {'alpha':>8} {'n':>5} {'items':>6}")
    for construct in sv.VALIDATION_CONSTRUCTS:
        matrix = sv.response_matrix(responses, instrument, construct)
        if matrix.shape[0] < 2:
            click.echo(f"{construct:<16} {'n/a':>8} {matrix.shape[0]:>5} {matrix.shape[1]:>6}  (insufficient n)")
            continue
        try:
            rep = sv.cronbach_alpha(matrix, construct)
            click.echo(f"{construct:<16} {rep.alpha:>8.3f} {rep.n_respondents:>5} {rep.k_items:>6}")
        except sv.ZeroTotalVariance:
            click.echo(f"{construct:<16} {'n/a':>8} {matrix.shape[0]:>5} {matrix.shape[1]:>6}  (zero variance)")


@main.command("serve")
@click.option("--port", type=int, default=8000, show_default=True, envvar="XNIDS_PORT")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="XNIDS_HOST")
@click.option("--admin-token", default=None, envvar="XNIDS_ADMIN_TOKEN")
@click.option("--store", "store_path", type=click.Path(), default=None, envvar="XNIDS_STORE_PATH",
              help="Session store file (default: <out_dir>/sessions.jsonl).")
@click.pass_context
def serve(ctx, port, host, admin_token, store_path):
    """Serve artifacts and the participant flow over HTTP."""
    from .service import run_server

    config = _config_from_ctx(ctx)
    out_dir = Path(config.out_dir)
    artifact_dir = out_dir / "artifacts"
    if not artifact_dir.exists():
        raise MissingArtifact("serve", f"run 'evaluate' and 'explain' first (no {artifact_dir})")
    ui_dir = out_dir / "ui"
    if not ui_dir.exists():
        # source-checkout layout: src/xnids/cli.py -> repo root -> frontend/dist
        checkout_dist = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        ui_dir = checkout_dist if checkout_dist.exists() else None
    click.echo(f"serving {artifact_dir} on http://{host}:{port}")
    run_server(artifact_dir, Path(store_path) if store_path else out_dir / "sessions.jsonl", port, host, admin_token, ui_dir)


if __name__ == "__main__":
    main()
