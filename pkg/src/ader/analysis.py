"""PCA of visited states via power iteration, plus 2-d histograms."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DegenerateDataError(ValueError):
    pass


@dataclass
class PcaModel:
    mean: np.ndarray
    axes: np.ndarray  # (k, d), one unit axis per row
    variances: np.ndarray  # (k,), descending

    def to_text(self) -> str:
        fmt = lambda v: " ".join(repr(float(x)) for x in v)  # noqa: E731
        lines = [f"mean {fmt(self.mean)}"]
        lines += [f"axis{i} {fmt(ax)}" for i, ax in enumerate(self.axes)]
        lines.append(f"variances {fmt(self.variances)}")
        return "\n".join(lines) + "\n"


def power_iteration(A: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000,
                    orth: np.ndarray | None = None, rng: np.random.Generator | None = None):
    """Dominant eigenpair of a symmetric PSD matrix.

    Stops when the residual ``||A v - lam v||`` drops below ``tol * max(1, lam)``.
    ``orth`` rows are projected out of every iterate, which keeps a deflated
    search inside the remaining subspace even when round-off leaks back in.
    """
    n = A.shape[0]
    rng = rng or np.random.default_rng(0)
    orth = np.zeros((0, n)) if orth is None else orth

    def project(x):
        return x - orth.T @ (orth @ x)

    v = project(rng.normal(size=n))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = project(A @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # v lies in the null space: eigenvalue 0, any remaining direction works
            return 0.0, v
        lam = float(v @ w)
        v_new = w / norm
        if np.linalg.norm(A @ v_new - float(v_new @ A @ v_new) * v_new) < tol * max(1.0, abs(lam)):
            v = v_new
            break
        v = v_new
    return float(v @ A @ v), v


def pca_fit(states, k: int = 2, tol: float = 1e-10, max_iter: int = 10_000) -> PcaModel:
    """Top-``k`` principal axes of the population covariance, by power
    iteration with Hotelling deflation."""
    X = np.asarray(states, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two state vectors")
    n, d = X.shape
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / n
    if np.trace(cov) == 0.0:
        raise DegenerateDataError(f"all {d} directions have zero variance")

    A = cov.copy()
    axes, variances = [], []
    rng = np.random.default_rng(0)
    for _ in range(k):
        lam, v = power_iteration(A, tol, max_iter, orth=np.array(axes).reshape(-1, d), rng=rng)
        lam = max(lam, 0.0)
        axes.append(v)
        variances.append(lam)
        A = A - lam * np.outer(v, v)
    order = np.argsort(variances)[::-1]
    return PcaModel(mean, np.array(axes)[order], np.array(variances)[order])


def pca_project(model: PcaModel, states) -> np.ndarray:
    X = np.asarray(states, dtype=np.float64)
    X = X[None, :] if X.ndim == 1 else X
    if X.shape[1] != model.mean.size:
        raise ValueError(f"state width {X.shape[1]} != model width {model.mean.size}")
    return (X - model.mean) @ model.axes.T


def histogram2d(points, bins: int = 50):
    """Counts on an equal-width grid over each axis' [min, max].

    Points on the upper edge land in the last bin. Returns
    ``(counts, x_edges, y_edges)`` with ``counts[i, j]`` for x-bin i, y-bin j.
    """
    P = np.asarray(points, dtype=np.float64)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if P.ndim != 2 or P.shape[1] != 2 or len(P) == 0:
        raise ValueError("points must be a non-empty (n, 2) array")
    ranges = [(P[:, i].min(), P[:, i].max()) for i in range(2)]
    # numpy widens a zero-width range by +-0.5, which keeps all mass in one cell
    counts, xe, ye = np.histogram2d(P[:, 0], P[:, 1], bins=bins,
                                    range=[r if r[1] > r[0] else None for r in ranges])
    return counts.astype(np.int64), xe, ye


def read_states(path, dim: int) -> np.ndarray:
    flat = np.fromfile(path, dtype="<f8")
    if flat.size % dim:
        raise ValueError(f"{path}: {flat.size} floats is not a multiple of width {dim}")
    return flat.reshape(-1, dim)


def heatmap_csv(counts: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "col", "count"])
    # row follows the second PCA coordinate, col the first
    for row in range(counts.shape[1]):
        for col in range(counts.shape[0]):
            w.writerow([row, col, int(counts[col, row])])
    return buf.getvalue()


def analyze_states(states_path, out_dir, dim: int, bins: int = 50, k: int = 2) -> PcaModel:
    """Fit PCA to a ``states.f64`` file and write ``pca.txt`` and ``heatmap.csv``."""
    states = read_states(states_path, dim)
    model = pca_fit(states, k=min(k, dim))
    proj = pca_project(model, states)
    if proj.shape[1] == 1:
        proj = np.column_stack([proj[:, 0], np.zeros(len(proj))])
    counts, _, _ = histogram2d(proj[:, :2], bins)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "pca.txt").write_text(model.to_text())
    (out / "heatmap.csv").write_text(heatmap_csv(counts))
    return model
