"""Secondary acceptance: scripted study sessions drive the compiled UI flow
machinery against a live service instance, then the store export, analytics
rendering, and explanation-panel ordering are verified.

Skips when node or the built UI bundle is unavailable (build with
``npm run build`` inside ``frontend/``).
"""

import json
import shutil
import socket
import subprocess
import threading
import time
import urllib.request
from pathlib import Path

import numpy as np
import pytest

FRONTEND_DIR = Path(__file__).resolve().parent.parent / "frontend"
DIST = FRONTEND_DIR / "dist"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None, reason="node is not installed"
)


def build_frontend_if_needed() -> bool:
    if (DIST / "e2e_session.js").exists():
        return True
    if shutil.which("tsc") is None and shutil.which("npm") is None:
        return False
    result = subprocess.run(
        ["npm", "run", "build"], cwd=FRONTEND_DIR, capture_output=True, text=True
    )
    return result.returncode == 0 and (DIST / "e2e_session.js").exists()


def make_artifacts(tmp_path: Path) -> Path:
    rng = np.random.default_rng(0)
    d = tmp_path / "artifacts"
    d.mkdir()
    class_names = ["DoS", "Probe", "R2L", "U2R", "Normal"]
    instances = []
    for idx in (3, 17, 29):
        probs = rng.dirichlet(np.ones(5))
        instances.append(
            {
                "instance_id": f"test:{idx}",
                "index": idx,
                "true_label": 0,
                "true_label_name": "DoS",
                "predicted_label": int(np.argmax(probs)),
                "predicted_label_name": class_names[int(np.argmax(probs))],
                "features_scaled": [float(v) for v in rng.random(41)],
                "features_raw": ["tcp" if i == 1 else float(i) for i in range(41)],
                "classes": [
                    {
                        "class_index": c,
                        "class_name": class_names[c],
                        "base_value": 0.2,
                        "phi": [float(v) for v in rng.normal(0, 0.02, 41)],
                        "prediction": float(probs[c]),
                        "ridge_fallback": False,
                    }
                    for c in range(5)
                ],
            }
        )
    (d / "explanations.json").write_text(
        json.dumps(
            {
                "version": 1,
                "feature_names": [f"f{i}" for i in range(41)],
                "instances": instances,
                "summaries": [],
            },
            sort_keys=True,
        )
    )
    (d / "metrics.json").write_text(json.dumps({"aggregate": {"accuracy": 0.99}}))
    (d / "scenarios.json").write_text(
        json.dumps(
            [
                {
                    "id": "scenario_dos",
                    "title": "DoS case review",
                    "narrative": "n",
                    "instance_id": "test:3",
                    "model_family": "cnn",
                }
            ]
        )
    )
    return d


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_scripted_study_flow(tmp_path):
    if not build_frontend_if_needed():
        pytest.skip("frontend bundle unavailable and could not be built")

    from xnids.service import create_app
    import uvicorn

    artifacts = make_artifacts(tmp_path)
    store_path = tmp_path / "sessions.jsonl"
    app = create_app(artifacts, store_path, ui_dir=DIST)
    port = free_port()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while time.time() < deadline:
        try:
            urllib.request.urlopen(f"http://127.0.0.1:{port}/api/instruments", timeout=1)
            break
        except Exception:
            time.sleep(0.2)
    else:
        pytest.fail("service did not come up")

    try:
        # static UI served alongside the API
        index = urllib.request.urlopen(f"http://127.0.0.1:{port}/", timeout=5).read().decode()
        assert "main.js" in index

        result = subprocess.run(
            [
                "node",
                str(DIST / "e2e_session.js"),
                "--base",
                f"http://127.0.0.1:{port}",
                "--sessions",
                "5",
            ],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert result.returncode == 0, f"e2e driver failed:\n{result.stdout}\n{result.stderr}"
        assert "all checks passed" in result.stdout

        # all five sessions persisted and completed in the store
        lines = [json.loads(l) for l in store_path.read_text().splitlines() if l.strip()]
        completed = {r["session_id"] for r in lines if r.get("completed_at")}
        assert len(completed) == 5
        print("ACCEPTANCE PASS: scripted study flow + dashboard rendering (5 sessions)")
    finally:
        server.should_exit = True
        thread.join(timeout=5)
