"""Built-in property suite runnable from the CLI.

Each check re-verifies a core mathematical contract with randomized inputs
against an independent computation: the quantization residual of the
Boolean-map encoding, the inner-product identity with the intersection
kernel, unit normalization of the explicit map, the classifier gradient
against central finite differences, and the benchmark metric hand cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bmr
from .classifier import TrainingSet, gradient, loss
from .evaluate import Curve, auc, center_error, overlap


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""


def check_quantization_bound(seed: int = 0, encode_fn=None, n: int = 10_000, dim: int = 64) -> CheckResult:
    """0 <= phi_k - reconstruct(encode(phi))_k <= 1/c, strict below 1/c for phi_k < 1."""
    encode_fn = encode_fn or bmr.encode
    rng = np.random.default_rng(seed)
    c = 4
    delta = 1.0 / c
    worst = 0.0
    violations = 0
    for _ in range(n):
        phi = rng.uniform(0.0, 1.0, size=dim)
        residual = phi - bmr.reconstruct(encode_fn(phi, c))
        worst = max(worst, float(residual.max()))
        bad = (residual < 0) | (residual > delta) | ((residual == delta) & (phi < 1.0))
        violations += int(bad.sum())
    # exact grid values and the closed upper endpoint
    phi = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    residual = phi - bmr.reconstruct(encode_fn(phi, c))
    violations += int(((residual < 0) | (residual > delta)).sum())
    violations += int(not np.isclose(residual[-1], delta))  # phi=1 leaves exactly delta
    return CheckResult(
        "quantization residual bound", violations == 0, n * dim,
        f"max residual {worst:.6f}, {violations} violations",
    )


def check_kernel_equivalence(seed: int = 0, encode_fn=None, n_pairs: int = 1_000, dim: int = 64) -> CheckResult:
    """On the threshold grid the stack inner product equals the intersection kernel."""
    encode_fn = encode_fn or bmr.encode
    rng = np.random.default_rng(seed)
    c = 4
    grid = np.arange(c) / c
    worst_on = 0.0
    worst_off = 0.0
    for _ in range(n_pairs):
        x = rng.choice(grid, size=dim)
        y = rng.choice(grid, size=dim)
        dot = float(encode_fn(x, c).values @ encode_fn(y, c).values)
        worst_on = max(worst_on, abs(dot - bmr.intersection_kernel(x, y)))

        x = rng.uniform(0.0, 1.0, size=dim)
        y = rng.uniform(0.0, 1.0, size=dim)
        dot = float(encode_fn(x, c).values @ encode_fn(y, c).values)
        worst_off = max(worst_off, abs(dot - bmr.intersection_kernel(x, y)))
    passed = worst_on < 1e-12 and worst_off <= dim * (1.0 / c)
    return CheckResult(
        "intersection-kernel equivalence", passed, 2 * n_pairs,
        f"on-grid err {worst_on:.2e}, off-grid err {worst_off:.3f} (bound {dim / c:.1f})",
    )


def check_explicit_map_normalization(seed: int = 0, encode_fn=None, n: int = 500, dim: int = 64) -> CheckResult:
    """Normalized nonzero encodings have unit self inner product."""
    encode_fn = encode_fn or bmr.encode
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        phi = rng.uniform(0.0, 1.0, size=dim)
        if phi.max() < 0.25:
            continue
        b = bmr.normalize(encode_fn(phi, 4))
        worst = max(worst, abs(float(b.values @ b.values) - 1.0))
    return CheckResult(
        "explicit-map normalization", worst < 1e-12, n, f"max |<b,b>-1| = {worst:.2e}",
    )


def check_gradient(seed: int = 0, n: int = 100, max_dim: int = 50) -> CheckResult:
    """Analytic loss gradient against central finite differences."""
    rng = np.random.default_rng(seed)
    h = 1e-5
    worst = 0.0
    for _ in range(n):
        dim = int(rng.integers(2, max_dim + 1))
        n_samples = int(rng.integers(2, 20))
        feats = rng.normal(size=(n_samples, dim))
        labels = rng.choice([-1.0, 1.0], size=n_samples)
        data = TrainingSet(feats, labels)
        w = rng.normal(size=dim)
        g = gradient(w, data)
        fd = np.empty(dim)
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = h
            fd[k] = (loss(w + e, data) - loss(w - e, data)) / (2 * h)
        rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, float(rel))
    return CheckResult("gradient vs finite differences", worst < 1e-5, n,
                       f"max relative error {worst:.2e}")


def check_metric_oracles() -> CheckResult:
    """Hand-verifiable metric cases: overlap, center error, AUC."""
    cases = [
        abs(overlap((0, 0, 10, 10), (0, 0, 10, 10)) - 1.0) < 1e-12,
        overlap((0, 0, 10, 10), (20, 20, 5, 5)) == 0.0,
        abs(overlap((0, 0, 10, 10), (5, 0, 10, 10)) - 1.0 / 3.0) < 1e-12,
        center_error((0, 0, 10, 10), (0, 0, 10, 10)) == 0.0,
        abs(center_error((0, 0, 2, 2), (3, 4, 2, 2)) - 5.0) < 1e-12,
        abs(auc(Curve(np.linspace(0, 1, 21), np.full(21, 0.5))) - 0.5) < 1e-12,
        abs(auc(Curve(np.linspace(0, 1, 21), np.linspace(1, 0, 21))) - 0.5) < 1e-12,
    ]
    return CheckResult("metric hand cases", all(cases), len(cases),
                       f"{sum(cases)}/{len(cases)} cases hold")


def run_all(seed: int = 0, encode_fn=None) -> list[CheckResult]:
    return [
        check_quantization_bound(seed, encode_fn),
        check_kernel_equivalence(seed, encode_fn),
        check_explicit_map_normalization(seed, encode_fn),
        check_gradient(seed),
        check_metric_oracles(),
    ]
