"""Seeded generator for an NSL-KDD-shaped demo corpus.

Produces comma-separated 43-field lines (41 features, attack label,
difficulty) whose five classes carry distinct, learnable signatures:
attack families differ in error-rate profiles, login state, and volume
counters, loosely echoing how the real traffic families behave. This is a
stand-in corpus for desk-scale runs and end-to-end tests, not a substitute
for the real benchmark files.
"""

from __future__ import annotations

import numpy as np

from .schema import ATTACK_LABEL_TO_CLASS, AttackClass, FEATURE_NAMES

# Heavily imbalanced like real connection logs, but with enough rare-class
# rows that desk-scale samples still cover all five classes.
CLASS_PROPORTIONS = {
    AttackClass.NORMAL: 0.53,
    AttackClass.DOS: 0.36,
    AttackClass.PROBE: 0.09,
    AttackClass.R2L: 0.015,
    AttackClass.U2R: 0.005,
}

_LABELS_BY_CLASS = {
    cls: sorted(lbl for lbl, c in ATTACK_LABEL_TO_CLASS.items() if c is cls)
    for cls in AttackClass
}

_SERVICES = ["http", "ftp_data", "smtp", "domain_u", "private", "telnet", "ftp", "eco_i", "pop_3", "imap4"]
_FLAGS = ["SF", "S0", "REJ", "RSTR", "RSTO", "SH"]
_PROTOCOLS = ["tcp", "udp", "icmp"]

_IDX = {name: i for i, name in enumerate(FEATURE_NAMES)}


def _choice(rng: np.random.Generator, values: list[str], probs: list[float]) -> str:
    return values[rng.choice(len(values), p=np.asarray(probs) / np.sum(probs))]


def _clip01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def _row_for_class(cls: AttackClass, rng: np.random.Generator) -> list[str]:
    f = [0.0] * len(FEATURE_NAMES)

    # Background noise on the traffic counters everyone shares.
    f[_IDX["count"]] = rng.integers(1, 30)
    f[_IDX["srv_count"]] = rng.integers(1, 20)
    f[_IDX["dst_host_count"]] = rng.integers(1, 255)
    f[_IDX["dst_host_srv_count"]] = rng.integers(1, 255)
    f[_IDX["same_srv_rate"]] = _clip01(rng.normal(0.7, 0.2))
    f[_IDX["dst_host_same_srv_rate"]] = _clip01(rng.normal(0.7, 0.2))

    if cls is AttackClass.DOS:
        proto, service, flag = "tcp", _choice(rng, _SERVICES, [4, 1, 1, 1, 6, 1, 1, 1, 1, 1]), _choice(rng, _FLAGS, [1, 8, 5, 1, 1, 1])
        err = _clip01(rng.normal(0.88, 0.1))
        f[_IDX["serror_rate"]] = err
        f[_IDX["srv_serror_rate"]] = _clip01(err + rng.normal(0, 0.05))
        f[_IDX["dst_host_serror_rate"]] = _clip01(err + rng.normal(0, 0.05))
        f[_IDX["dst_host_srv_serror_rate"]] = _clip01(err + rng.normal(0, 0.05))
        f[_IDX["count"]] = rng.integers(100, 511)
        f[_IDX["srv_count"]] = rng.integers(50, 511)
        f[_IDX["src_bytes"]] = max(0, int(rng.normal(60, 40)))
        f[_IDX["logged_in"]] = int(rng.random() < 0.02)
        f[_IDX["wrong_fragment"]] = int(rng.random() < 0.1) * rng.integers(1, 3)
    elif cls is AttackClass.PROBE:
        proto = _choice(rng, _PROTOCOLS, [5, 2, 3])
        service, flag = _choice(rng, _SERVICES, [1, 1, 1, 1, 6, 1, 1, 4, 1, 1]), _choice(rng, _FLAGS, [2, 2, 3, 2, 1, 3])
        f[_IDX["rerror_rate"]] = _clip01(rng.normal(0.6, 0.2))
        f[_IDX["srv_rerror_rate"]] = _clip01(rng.normal(0.6, 0.2))
        f[_IDX["dst_host_same_src_port_rate"]] = _clip01(rng.normal(0.8, 0.15))
        f[_IDX["diff_srv_rate"]] = _clip01(rng.normal(0.5, 0.2))
        f[_IDX["dst_host_diff_srv_rate"]] = _clip01(rng.normal(0.5, 0.2))
        f[_IDX["same_srv_rate"]] = _clip01(rng.normal(0.15, 0.1))
        f[_IDX["src_bytes"]] = max(0, int(rng.normal(20, 15)))
        f[_IDX["logged_in"]] = 0
    elif cls is AttackClass.R2L:
        proto, service, flag = "tcp", _choice(rng, _SERVICES, [1, 3, 1, 1, 1, 2, 5, 1, 2, 2]), _choice(rng, _FLAGS, [6, 1, 2, 2, 1, 1])
        f[_IDX["duration"]] = max(0, int(rng.normal(300, 200)))
        f[_IDX["num_failed_logins"]] = rng.integers(1, 5)
        f[_IDX["hot"]] = rng.integers(1, 10)
        f[_IDX["logged_in"]] = int(rng.random() < 0.5)
        f[_IDX["is_guest_login"]] = int(rng.random() < 0.4)
        f[_IDX["src_bytes"]] = max(0, int(rng.normal(400, 300)))
        f[_IDX["dst_bytes"]] = max(0, int(rng.normal(600, 400)))
    elif cls is AttackClass.U2R:
        proto, service, flag = "tcp", _choice(rng, _SERVICES, [1, 2, 1, 1, 1, 6, 2, 1, 1, 1]), "SF"
        f[_IDX["duration"]] = max(0, int(rng.normal(500, 300)))
        f[_IDX["root_shell"]] = 1
        f[_IDX["num_root"]] = rng.integers(1, 8)
        f[_IDX["num_compromised"]] = rng.integers(1, 5)
        f[_IDX["num_file_creations"]] = rng.integers(0, 4)
        f[_IDX["logged_in"]] = 1
        f[_IDX["hot"]] = rng.integers(0, 6)
        f[_IDX["src_bytes"]] = max(0, int(rng.normal(1500, 800)))
    else:  # Normal
        proto = _choice(rng, _PROTOCOLS, [6, 3, 1])
        service, flag = _choice(rng, _SERVICES, [8, 3, 4, 4, 1, 1, 2, 1, 3, 1]), _choice(rng, _FLAGS, [12, 1, 1, 1, 1, 1])
        f[_IDX["logged_in"]] = int(rng.random() < 0.7)
        f[_IDX["src_bytes"]] = max(0, int(rng.normal(800, 600)))
        f[_IDX["dst_bytes"]] = max(0, int(rng.normal(2000, 1500)))
        f[_IDX["duration"]] = max(0, int(rng.exponential(20.0)))
        f[_IDX["serror_rate"]] = _clip01(abs(rng.normal(0.0, 0.03)))
        f[_IDX["rerror_rate"]] = _clip01(abs(rng.normal(0.0, 0.03)))

    f[_IDX["protocol_type"]] = proto
    f[_IDX["service"]] = service
    f[_IDX["flag"]] = flag

    tokens = []
    for name in FEATURE_NAMES:
        v = f[_IDX[name]]
        if isinstance(v, str):
            tokens.append(v)
        elif name.endswith("_rate"):
            tokens.append(f"{float(v):.2f}")
        else:
            tokens.append(str(int(v)))
    return tokens


def synth_corpus(n: int, seed: int = 0) -> str:
    """Generate ``n`` NSL-KDD-format lines with the class mix above."""
    rng = np.random.Generator(np.random.PCG64(seed))
    classes = list(CLASS_PROPORTIONS)
    probs = np.array([CLASS_PROPORTIONS[c] for c in classes])
    probs = probs / probs.sum()
    lines = []
    for _ in range(n):
        cls = classes[rng.choice(len(classes), p=probs)]
        label = _LABELS_BY_CLASS[cls][rng.integers(len(_LABELS_BY_CLASS[cls]))]
        tokens = _row_for_class(cls, rng)
        difficulty = int(rng.integers(1, 22))
        lines.append(",".join(tokens + [label, str(difficulty)]))
    return "\n".join(lines) + "\n"
