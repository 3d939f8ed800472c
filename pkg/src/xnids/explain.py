"""Model-agnostic Shapley attributions for per-class predictions.

The main path is the kernel method: sample feature coalitions, evaluate the
model with absent features replaced by background-set values, and recover
per-feature contributions by weighted least squares. An exact enumeration
oracle (classic permutation average) covers small feature counts.

Masking semantics are interventional: a coalition's absent features take the
values of each background row in turn and the model outputs are averaged
over the background set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np

ModelFn = Callable[[np.ndarray], np.ndarray]  # (n, M) -> (n, K) class probabilities

BRUTE_FORCE_MAX_FEATURES = 12


class ExplainError(Exception):
    pass


class DegenerateCoalition(ExplainError):
    pass


class TooManyFeatures(ExplainError):
    pass


class InsufficientCoalitions(ExplainError):
    pass


class ModelEvaluationFailure(ExplainError):
    pass


class EmptyAttributionSet(ExplainError):
    pass


@dataclass(frozen=True)
class BackgroundSet:
    """Reference rows whose values stand in for absent features."""

    matrix: np.ndarray  # (B, M)
    seed: int | None = None

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] < 1:
            raise ValueError("background must be a non-empty 2-D matrix")


def sample_background(train_matrix: np.ndarray, size: int = 100, seed: int = 0) -> BackgroundSet:
    """First ``size`` rows of a seeded shuffle of the training matrix."""
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(train_matrix.shape[0])
    return BackgroundSet(matrix=np.array(train_matrix[order[:size]]), seed=seed)


@dataclass
class AttributionVector:
    class_index: int
    base_value: float  # expected model output over the background set
    phi: np.ndarray  # per-feature contributions
    prediction: float  # f_c(x)
    instance_id: str = ""
    ridge_fallback: bool = False

    def local_accuracy_gap(self) -> float:
        return abs(self.base_value + float(self.phi.sum()) - self.prediction)


def shapley_kernel_weight(m: int, s: int) -> float:
    """Coalition weight (M-1) / (C(M,s) * s * (M-s)); symmetric in s and M-s."""
    if s <= 0 or s >= m:
        raise DegenerateCoalition(f"coalition size {s} of {m} is an exact constraint, not a regression row")
    return (m - 1) / (comb(m, s) * s * (m - s))


def masked_prediction(
    model_fn: ModelFn,
    x: np.ndarray,
    z: np.ndarray,
    background: BackgroundSet,
    class_index: int,
) -> float:
    """Mean model output for one coalition: kept features (z=1) take x's
    values, absent features take each background row's values in turn."""
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z).astype(bool).ravel()
    rows = np.where(z[None, :], x[None, :], background.matrix)
    out = _evaluate(model_fn, rows)
    return float(out[:, class_index].mean())


def _evaluate(model_fn: ModelFn, rows: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(model_fn(rows), dtype=np.float64)
    except Exception as exc:  # surface the model's failure with context
        raise ModelEvaluationFailure(f"model evaluation failed on {rows.shape[0]} rows: {exc}") from exc
    if out.ndim != 2 or out.shape[0] != rows.shape[0]:
        raise ModelEvaluationFailure(f"model returned shape {out.shape} for {rows.shape[0]} rows")
    return out


# ---------------------------------------------------------------------------
# Coalition generation


def _enumerate_all(m: int) -> tuple[np.ndarray, np.ndarray]:
    masks = []
    weights = []
    for size in range(1, m):
        w = shapley_kernel_weight(m, size)
        for combo in itertools.combinations(range(m), size):
            mask = np.zeros(m, dtype=bool)
            mask[list(combo)] = True
            masks.append(mask)
            weights.append(w)
    return np.array(masks), np.array(weights)


def _stratified_sample(m: int, budget: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate complete size strata from the outside in while they fit the
    budget, then spend the remainder on paired random draws from the middle
    sizes, weighted by the leftover kernel mass."""
    mass = np.array([(m - 1) / (s * (m - s)) for s in range(1, m)], dtype=np.float64)

    masks: list[np.ndarray] = []
    weights: list[float] = []
    enumerated = np.zeros(m - 1, dtype=bool)  # index s-1
    remaining = budget
    for s in range(1, m // 2 + 1):
        pair = [s] if s * 2 == m else [s, m - s]
        cost = sum(comb(m, t) for t in pair)
        if cost > remaining:
            break
        for t in pair:
            w = shapley_kernel_weight(m, t)
            for combo in itertools.combinations(range(m), t):
                mask = np.zeros(m, dtype=bool)
                mask[list(combo)] = True
                masks.append(mask)
                weights.append(w)
            enumerated[t - 1] = True
        remaining -= cost

    leftover_sizes = np.where(~enumerated)[0] + 1
    if leftover_sizes.size and remaining > 0:
        leftover_mass = mass[leftover_sizes - 1]
        probs = leftover_mass / leftover_mass.sum()
        counts: dict[bytes, tuple[np.ndarray, int]] = {}
        drawn = 0
        while drawn < remaining:
            s = int(rng.choice(leftover_sizes, p=probs))
            members = rng.choice(m, size=s, replace=False)
            mask = np.zeros(m, dtype=bool)
            mask[members] = True
            for candidate in (mask, ~mask):  # antithetic pair
                if drawn >= remaining:
                    break
                if 0 < candidate.sum() < m and not enumerated[int(candidate.sum()) - 1]:
                    key = np.packbits(candidate).tobytes()
                    prev = counts.get(key)
                    counts[key] = (candidate.copy(), (prev[1] if prev else 0) + 1)
                    drawn += 1
        total_leftover = float(leftover_mass.sum())
        n_drawn = sum(c for _, c in counts.values())
        for mask, count in counts.values():
            masks.append(mask)
            weights.append(total_leftover * count / n_drawn)
    return np.array(masks), np.array(weights)


# ---------------------------------------------------------------------------
# Kernel method


def _solve_constrained_wls(
    z_rows: np.ndarray, weights: np.ndarray, values: np.ndarray, total: float
) -> tuple[np.ndarray, bool]:
    """Least squares for phi with the efficiency constraint folded in by
    eliminating the last unknown; returns (phi, ridge_fallback)."""
    m = z_rows.shape[1]
    if m == 1:
        return np.array([total]), False
    zt = z_rows[:, :-1] - z_rows[:, -1:]  # (n, m-1)
    yt = values - z_rows[:, -1] * total
    aw = zt.T * weights[None, :]
    lhs = aw @ zt
    rhs = aw @ yt
    ridge = False
    try:
        head = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        ridge = True
        head = np.linalg.solve(lhs + 1e-10 * np.eye(m - 1), rhs)
    if not np.all(np.isfinite(head)):
        ridge = True
        head = np.linalg.solve(lhs + 1e-10 * np.eye(m - 1), rhs)
    phi = np.empty(m)
    phi[:-1] = head
    phi[-1] = total - head.sum()
    return phi, ridge


def _varying_features(x: np.ndarray, background: BackgroundSet) -> np.ndarray:
    return np.where(np.any(background.matrix != x[None, :], axis=0))[0]


def kernel_shap_all_classes(
    model_fn: ModelFn,
    x: np.ndarray,
    background: BackgroundSet,
    n_coalitions: int = 2048,
    seed: int | np.random.SeedSequence = 0,
    instance_id: str = "",
) -> list[AttributionVector]:
    """One coalition sweep shared by every output class.

    A feature whose value is identical between x and the entire background
    cannot move the masked prediction; such features are pinned to zero
    contribution up front and excluded from the regression.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    m_all = x.shape[0]
    varying = _varying_features(x, background)
    m = varying.size

    fx = _evaluate(model_fn, x[None, :])[0]
    base = _evaluate(model_fn, background.matrix).mean(axis=0)
    k_classes = fx.shape[0]

    if m == 0:
        return [
            AttributionVector(c, float(base[c]), np.zeros(m_all), float(fx[c]), instance_id)
            for c in range(k_classes)
        ]

    rng = np.random.Generator(np.random.PCG64(seed))
    if m == 1:
        masks = np.zeros((0, 1), dtype=bool)
        weights = np.zeros(0)
    elif 2**m - 2 <= n_coalitions:
        masks, weights = _enumerate_all(m)
    elif n_coalitions < m + 2:
        raise InsufficientCoalitions(f"need at least {m + 2} coalitions for {m} varying features")
    else:
        masks, weights = _stratified_sample(m, n_coalitions, rng)

    # Evaluate every coalition for all classes in one sweep.
    b = background.matrix.shape[0]
    values = np.empty((masks.shape[0], k_classes))
    chunk = max(1, 262144 // max(b, 1))
    for start in range(0, masks.shape[0], chunk):
        batch = masks[start : start + chunk]
        nb = batch.shape[0]
        rows = np.tile(background.matrix, (nb, 1))  # (nb * B, M), coalition-major
        keep = np.repeat(batch, b, axis=0)  # (nb * B, m)
        rows[:, varying] = np.where(keep, x[varying][None, :], rows[:, varying])
        out = _evaluate(model_fn, rows)
        values[start : start + chunk] = out.reshape(nb, b, k_classes).mean(axis=1)

    results = []
    for c in range(k_classes):
        total = float(fx[c] - base[c])
        if m == 1:
            phi_varying, ridge = np.array([total]), False
        else:
            phi_varying, ridge = _solve_constrained_wls(
                masks.astype(np.float64), weights, values[:, c] - base[c], total
            )
        phi = np.zeros(m_all)
        phi[varying] = phi_varying
        results.append(AttributionVector(c, float(base[c]), phi, float(fx[c]), instance_id, ridge))
    return results


def kernel_shap(
    model_fn: ModelFn,
    x: np.ndarray,
    background: BackgroundSet,
    class_index: int,
    n_coalitions: int = 2048,
    seed: int | np.random.SeedSequence = 0,
    instance_id: str = "",
) -> AttributionVector:
    return kernel_shap_all_classes(model_fn, x, background, n_coalitions, seed, instance_id)[class_index]


# ---------------------------------------------------------------------------
# Exact enumeration oracle


def exact_shap_bruteforce(
    model_fn: ModelFn,
    x: np.ndarray,
    background: BackgroundSet,
    class_index: int,
) -> AttributionVector:
    """Classic permutation average over all 2^M coalitions.

    phi_i = sum over S not containing i of |S|!(M-|S|-1)!/M! * (v(S+i) - v(S)).
    Exact, and independent of the kernel-regression path.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    m = x.shape[0]
    if m > BRUTE_FORCE_MAX_FEATURES:
        raise TooManyFeatures(f"{m} features need 2^{m} evaluations; limit is {BRUTE_FORCE_MAX_FEATURES}")
    b = background.matrix.shape[0]

    n_masks = 2**m
    bits = (np.arange(n_masks)[:, None] >> np.arange(m)[None, :]) & 1  # (2^m, m)
    rows = np.where(bits[:, None, :].astype(bool), x[None, None, :], background.matrix[None, :, :])
    flat = rows.reshape(-1, m)
    chunks = [
        _evaluate(model_fn, flat[start : start + 200_000])[:, class_index]
        for start in range(0, flat.shape[0], 200_000)
    ]
    v = np.concatenate(chunks).reshape(n_masks, b).mean(axis=1)

    size = bits.sum(axis=1)
    coef = np.array([math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m) for s in range(m)])
    phi = np.zeros(m)
    for i in range(m):
        without = np.where(bits[:, i] == 0)[0]
        phi[i] = np.sum(coef[size[without]] * (v[without | (1 << i)] - v[without]))
    return AttributionVector(class_index, float(v[0]), phi, float(v[-1]))


# ---------------------------------------------------------------------------
# Batch explanation and summary


def instance_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Deterministic per-instance seed; shared by batch and single-call paths."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def explain_batch(
    model_fn: ModelFn,
    instances: np.ndarray,
    background: BackgroundSet,
    n_coalitions: int = 2048,
    seed: int = 0,
    instance_ids: Sequence[str] | None = None,
    progress=None,
    n_jobs: int = 1,
) -> list[list[AttributionVector]]:
    """Explain each instance for every class; one coalition sweep each.

    Instances are independent: with ``n_jobs > 1`` they run on a thread pool
    (model evaluation is BLAS-bound and releases the GIL). Results are
    ordered by instance and identical for any ``n_jobs``; model_fn must be
    safe for concurrent read-only calls.
    """
    instances = np.asarray(instances, dtype=np.float64)
    n = instances.shape[0]

    def one(i: int) -> list[AttributionVector]:
        iid = instance_ids[i] if instance_ids is not None else str(i)
        return kernel_shap_all_classes(
            model_fn, instances[i], background, n_coalitions, instance_seed(seed, i), iid
        )

    out: list[list[AttributionVector]] = [None] * n  # type: ignore[list-item]
    if n_jobs <= 1:
        for i in range(n):
            out[i] = one(i)
            if progress is not None:
                progress(i, n)
    else:
        from concurrent.futures import ThreadPoolExecutor, as_completed

        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            futures = {pool.submit(one, i): i for i in range(n)}
            done = 0
            for future in as_completed(futures):
                out[futures[future]] = future.result()
                done += 1
                if progress is not None:
                    progress(done - 1, n)
    return out


@dataclass
class ExplanationSummary:
    class_index: int
    mean_abs_phi: np.ndarray  # (M,)
    ranking: np.ndarray  # feature indices, descending mean |phi|
    beeswarm: list[list[tuple[float, float]]] = field(default_factory=list)  # per feature: (value, phi)


def summarize(
    attributions: Sequence[AttributionVector],
    class_index: int,
    feature_values: np.ndarray | None = None,
) -> ExplanationSummary:
    """Mean |phi| ranking for one class, with per-feature (value, phi)
    scatter tuples when the explained instances' values are supplied."""
    selected = [a for a in attributions if a.class_index == class_index]
    if not selected:
        raise EmptyAttributionSet(f"no attributions for class {class_index}")
    phis = np.stack([a.phi for a in selected])
    mean_abs = np.abs(phis).mean(axis=0)
    ranking = np.argsort(-mean_abs, kind="stable")
    beeswarm: list[list[tuple[float, float]]] = []
    if feature_values is not None:
        values = np.asarray(feature_values, dtype=np.float64)
        if values.shape != phis.shape:
            raise ValueError(f"feature values shape {values.shape} != attributions {phis.shape}")
        for f in range(phis.shape[1]):
            beeswarm.append([(float(values[i, f]), float(phis[i, f])) for i in range(phis.shape[0])])
    return ExplanationSummary(class_index, mean_abs, ranking, beeswarm)
