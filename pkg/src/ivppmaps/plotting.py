"""Deterministic SVG figures: implicit curves, hyperbolas and point clouds.

Implicit curves are drawn from a sign-change scan over a grid of cells; a
cell is marked when the function changes sign between its corners or
vanishes exactly at one of them (which catches isolated real zeros that sit
on a grid node).
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .ivpp import gamma_on_grid, hyperbola_branches  # noqa: E402
from .locus import G2, eval_term_polynomial_batch  # noqa: E402

GRID = 512

plt.rcParams["svg.hashsalt"] = "ivppmaps"
plt.rcParams["svg.fonttype"] = "none"


def sign_change_cells(fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      xlim: Sequence[float], ylim: Sequence[float], cells: int = GRID):
    """Centres of the grid cells crossed by the real zero set of ``fun``.

    ``fun`` takes two 2-D coordinate arrays and returns real values.
    """
    xs = np.linspace(xlim[0], xlim[1], cells + 1)
    ys = np.linspace(ylim[0], ylim[1], cells + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    with np.errstate(all="ignore"):
        V = np.real(fun(X, Y))
    S = np.sign(V)
    corners = np.stack([S[:-1, :-1], S[1:, :-1], S[:-1, 1:], S[1:, 1:]])
    mark = (corners.max(axis=0) > 0) & (corners.min(axis=0) < 0)
    mark |= (corners == 0).any(axis=0)
    iy, ix = np.nonzero(mark)
    cx = (xs[ix] + xs[ix + 1]) / 2
    cy = (ys[iy] + ys[iy + 1]) / 2
    return cx, cy


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _overlay(ax, points: Optional[np.ndarray]):
    if points is not None and len(points):
        ax.scatter(points[:, 0], points[:, 1], s=6, color="tab:red", zorder=3, gid="overlay")


def plot_g2(path, xlim=(-3.0, 4.0), ylim=(-3.0, 4.0), overlay: Optional[np.ndarray] = None,
            cells: int = GRID):
    def fun(X, Y):
        v, _ = eval_term_polynomial_batch(G2, np.stack([X.ravel(), Y.ravel()], axis=1))
        return v.reshape(X.shape)

    cx, cy = sign_change_cells(fun, xlim, ylim, cells)
    fig, ax = _new_axes("period-2 curve G2(x, y) = 0", "x", "y")
    ax.scatter(cx, cy, s=0.5, color="k", gid="g2")
    _overlay(ax, overlay)
    ax.set_xlim(*xlim)
    ax.set_ylim(*ylim)
    _save(fig, path)
    return len(cx)


def plot_hyperbolas(path, periods: Iterable[int] = range(3, 7), xlim=(-6.0, 6.0),
                    ylim=(-6.0, 6.0), coprime_only: bool = True, samples: int = 400):
    """One line per branch ``xy + tan^2(pi m / n) = 0``; returns the branch count."""
    fig, ax = _new_axes("hyperbolas xy + tan^2(pi m/n) = 0", "x", "y")
    x = np.linspace(xlim[0], xlim[1], samples)
    x = x[np.abs(x) > 1e-9]
    # break the line at x = 0 so each branch stays a single path
    x = np.concatenate([x[x < 0], [np.nan], x[x > 0]])
    count = 0
    colors = plt.get_cmap("tab10")
    for i, n in enumerate(periods):
        ms = [m for m in range(1, n) if not coprime_only or np.gcd(m, n) == 1]
        for m, c in zip(ms, hyperbola_branches(n, coprime_only)):
            y = -c / x
            y[(y < ylim[0] - 1) | (y > ylim[1] + 1)] = np.nan
            ax.plot(x, y, color=colors(i % 10), lw=1, gid=f"branch-n{n}-m{m}",
                    label=f"n={n}" if m == ms[0] else None)
            count += 1
    ax.set_xlim(*xlim)
    ax.set_ylim(*ylim)
    ax.legend(loc="upper right")
    _save(fig, path)
    return count


def gamma_zero_cells(period: int, rlim=(-3.0, 1.0), slim=(-3.0, 1.0), cells: int = GRID):
    return sign_change_cells(lambda R, S: gamma_on_grid("lv3d", period, R, S), rlim, slim, cells)


def plot_gamma(path, periods: Iterable[int] = (2, 3, 4), rlim=(-3.0, 1.0), slim=(-3.0, 1.0),
               cells: int = GRID):
    """Real zero sets of the lv3d gammas in the ``(r, s)`` plane.

    The default window puts ``(-1, -1)`` on a grid node.
    """
    fig, ax = _new_axes("lv3d period-n varieties in the (r, s) plane", "r", "s")
    colors = plt.get_cmap("tab10")
    found = {}
    for i, n in enumerate(periods):
        cx, cy = gamma_zero_cells(n, rlim, slim, cells)
        found[n] = (cx, cy)
        ax.scatter(cx, cy, s=1 if len(cx) > 1 else 20, color=colors(i % 10),
                   gid=f"gamma-{n}", label=f"n={n}")
    ax.set_xlim(*rlim)
    ax.set_ylim(*slim)
    ax.legend(loc="upper right")
    _save(fig, path)
    return found


def plot_scatter(path, points: np.ndarray, title: str = "point cloud", xlabel: str = "x",
                 ylabel: str = "y", marker=None):
    """Scatter of real 2-D points; an empty array gives empty axes."""
    fig, ax = _new_axes(title, xlabel, ylabel)
    if len(points):
        ax.scatter(points[:, 0], points[:, 1], s=2, color="k", gid="points")
    if marker is not None:
        ax.scatter([marker[0]], [marker[1]], s=30, marker="x", color="tab:red", gid="marker")
    _save(fig, path)
