"""Model bundle on disk: spec JSON + weight blob + train config + history CSV."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import ModelSpec, Params, spec_from_jsonable, spec_to_jsonable
from .train import TrainConfig, TrainHistory

BUNDLE_VERSION = 1


def save_model_bundle(
    out_dir: str | Path,
    spec: ModelSpec,
    params: Params,
    config: TrainConfig | None = None,
    history: TrainHistory | None = None,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(
        json.dumps({"version": BUNDLE_VERSION, "spec": spec_to_jsonable(spec)}, indent=2, sort_keys=True)
    )
    blobs = {}
    for i, layer in enumerate(params):
        for key, value in layer.items():
            blobs[f"layer{i}__{key}"] = value
    np.savez_compressed(out / "weights.npz", **blobs)
    if config is not None:
        (out / "train_config.json").write_text(json.dumps(asdict(config), indent=2, sort_keys=True))
    if history is not None:
        rows = ["epoch,loss,accuracy,seconds"]
        for e, (l, a, s) in enumerate(zip(history.epoch_loss, history.epoch_accuracy, history.epoch_seconds)):
            rows.append(f"{e},{l},{a},{s}")
        (out / "history.csv").write_text("\n".join(rows) + "\n")
    return out


def load_model_bundle(bundle_dir: str | Path) -> tuple[ModelSpec, Params]:
    bundle_dir = Path(bundle_dir)
    meta = json.loads((bundle_dir / "model.json").read_text())
    if meta.get("version") != BUNDLE_VERSION:
        raise ValueError(f"unsupported model bundle version: {meta.get('version')!r}")
    spec = spec_from_jsonable(meta["spec"])
    params: Params = [dict() for _ in spec.layers]
    with np.load(bundle_dir / "weights.npz") as z:
        for name in z.files:
            layer_tag, key = name.split("__", 1)
            params[int(layer_tag.removeprefix("layer"))][key] = z[name]
    return spec, params
