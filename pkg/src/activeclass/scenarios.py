"""Scenario generators.

* :func:`make_theorem1_instance` builds the binary-search construction where
  the optimal adaptive policy needs log2(N) views and the optimal fixed
  ordering needs N - 1.
* :func:`make_random_instance` draws random CPTs around a clean value
  assignment, with noise level ``alpha``.
* :func:`make_polyhedra_like_instance` is a synthetic stand-in for multi-view
  polyhedron recognition: every view yields a binned correspondence count.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .model import Feature, Location, Scenario, zero_one_loss

BINARY = ("0", "1")


def _is_power_of_two(n: int) -> bool:
    return isinstance(n, int) and n > 0 and n & (n - 1) == 0


def make_theorem1_instance(n: int, unit_cost: float = 1.0) -> Scenario:
    """Binary-search instance with ``n`` hypotheses and ``n - 1`` binary features.

    Features are laid out in heap order over the hypothesis interval: feature 0
    splits ``[0, n)`` into halves, and each later feature splits one half of its
    parent down to features separating single pairs.  Inside its interval a
    feature reads ``1`` on the left part and ``0`` on the right part with
    certainty.  Outside the interval it is a fair coin.
    """
    if not _is_power_of_two(n) or n < 4:
        raise ValueError(f"n must be a power of two >= 4, got {n}")
    if unit_cost < 0:
        raise ValueError("unit_cost must be >= 0")

    intervals = [(0, n)]
    i = 0
    while len(intervals) < n - 1:
        lo, hi = intervals[i]
        mid = (lo + hi) // 2
        intervals += [(lo, mid), (mid, hi)]
        i += 1

    features = []
    for j, (lo, hi) in enumerate(intervals):
        mid = (lo + hi) // 2
        rows = []
        for h in range(n):
            if lo <= h < mid:
                rows.append((0.0, 1.0))
            elif mid <= h < hi:
                rows.append((1.0, 0.0))
            else:
                rows.append((0.5, 0.5))
        features.append(Feature(f"F{j + 1}", BINARY, tuple(rows)))

    m = n - 1
    return Scenario(
        hypotheses=tuple(f"h{i + 1}" for i in range(n)),
        prior=tuple([1.0 / n] * n),
        features=tuple(features),
        locations=tuple(Location(f"L{j + 1}", (j,)) for j in range(m)),
        travel_cost=tuple(tuple([float(unit_cost)] * m) for _ in range(m)),
        loss=zero_one_loss(n),
        tau=0.0,
        name=f"theorem1-n{n}",
    )


def _noisy_row(clean: int, n_values: int, alpha: float) -> tuple[float, ...]:
    # mixing weight chosen so alpha = 0.5 gives a uniform row for binary features
    w = alpha * n_values / (n_values - 1)
    row = np.full(n_values, w / n_values)
    row[clean] += 1.0 - w
    return tuple(float(x) for x in row)


def make_random_instance(
    n: int,
    k: int,
    m: int,
    alpha: float = 0.0,
    seed: int = 0,
    n_values: int = 2,
    uniform_prior: bool = False,
    unit_cost: bool = False,
    tau: float = 0.05,
) -> Scenario:
    """Random instance; each feature has a clean value per hypothesis, blurred by ``alpha``."""
    if n < 2:
        raise ValueError("n must be >= 2 (a scenario needs two hypotheses)")
    if min(k, m) < 1:
        raise ValueError("k and m must be >= 1")
    if not 0.0 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [0, 0.5]")
    if n_values < 2:
        raise ValueError("n_values must be >= 2")
    rng = np.random.default_rng(seed)

    if uniform_prior:
        prior = np.full(n, 1.0 / n)
    else:
        prior = rng.dirichlet(np.full(n, 2.0))
        prior = np.maximum(prior, 1e-3)
        prior /= prior.sum()

    features = []
    for j in range(k):
        clean = rng.integers(0, n_values, size=n)
        rows = tuple(_noisy_row(int(c), n_values, alpha) for c in clean)
        features.append(Feature(f"F{j + 1}", tuple(str(v) for v in range(n_values)), rows))

    perm = rng.permutation(k)
    assign: list[set[int]] = [{int(perm[i % k])} for i in range(m)]
    for f in perm[m:]:
        assign[int(rng.integers(0, m))].add(int(f))

    if unit_cost:
        cost = np.ones((m, m))
    else:
        cost = np.round(rng.uniform(1.0, 5.0, size=(m, m)), 3)

    return Scenario(
        hypotheses=tuple(f"h{i + 1}" for i in range(n)),
        prior=tuple(float(p) for p in prior),
        features=tuple(features),
        locations=tuple(Location(f"L{i + 1}", tuple(sorted(a))) for i, a in enumerate(assign)),
        travel_cost=tuple(tuple(float(c) for c in row) for row in cost),
        loss=zero_one_loss(n),
        tau=tau,
        name=f"random-n{n}-k{k}-m{m}-a{alpha:g}-s{seed}",
    )


# ---------------------------------------------------------------------------
# polyhedra-like correspondence counts

DEFAULT_PROFILE = "platonic-default"


def load_profile(source: str | Path | dict = DEFAULT_PROFILE) -> dict:
    """Load a correspondence profile from a builtin name or a file path (dicts pass through)."""
    if isinstance(source, dict):
        raw = source
    elif str(source) == DEFAULT_PROFILE:
        text = resources.files("activeclass.data").joinpath("platonic-default.json").read_text()
        raw = json.loads(text)
    else:
        raw = json.loads(Path(source).read_text(encoding="utf-8"))
    prof = raw.get("correspondence_profile", raw)
    for key in ("salience", "false_rate"):
        if key not in prof:
            raise ValueError(f"correspondence_profile: missing '{key}'")
    return prof


def _binned_counts(mean: float, sigma: float, n_bins: int, floor: float) -> np.ndarray:
    x = np.arange(n_bins)
    w = np.exp(-0.5 * ((x - mean) / sigma) ** 2)
    w /= w.sum()
    w = (1 - floor) * w + floor / n_bins
    return w / w.sum()


def make_polyhedra_like_instance(
    n_classes: int = 2,
    n_views: int = 24,
    profile: str | Path | dict = DEFAULT_PROFILE,
    seed: int = 0,
) -> Scenario:
    """Views of an unknown object, each yielding a binned correspondence count.

    Per view, each class has a signature count level.  The observed count is
    centred on ``false_rate + salience * (level - false_rate)``: face-like views
    (salience near 0) look the same for every class, vertex-like views
    (salience near 1) separate classes by their signatures.
    """
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if n_views < 1:
        raise ValueError("n_views must be >= 1")
    prof = load_profile(profile)
    n_bins = int(prof.get("n_bins", 8))
    sigma = float(prof.get("noise_sigma", 1.0))
    floor = float(prof.get("uniform_floor", 0.01))
    false_rate = float(prof["false_rate"])
    base = list(prof["salience"])
    salience = np.array([base[v % len(base)] for v in range(n_views)], dtype=float)

    rng = np.random.default_rng(seed)
    if "class_levels" in prof:
        levels = np.asarray(prof["class_levels"], dtype=float)[:n_classes, :n_views]
        if levels.shape != (n_classes, n_views):
            raise ValueError("class_levels must cover n_classes x n_views")
    else:
        levels = rng.uniform(false_rate, n_bins - 1, size=(n_classes, n_views))

    values = tuple(str(b) for b in range(n_bins))
    features = []
    for v in range(n_views):
        means = false_rate + salience[v] * (levels[:, v] - false_rate)
        rows = tuple(
            tuple(float(p) for p in _binned_counts(mu, sigma, n_bins, floor)) for mu in means
        )
        features.append(Feature(f"count_v{v + 1}", values, rows))

    angles = 2 * np.pi * np.arange(n_views) / n_views
    locations = tuple(
        Location(
            f"view{v + 1}",
            (v,),
            (round(float(np.cos(angles[v])), 6), round(float(np.sin(angles[v])), 6)),
        )
        for v in range(n_views)
    )
    return Scenario(
        hypotheses=tuple(f"class{c + 1}" for c in range(n_classes)),
        prior=tuple([1.0 / n_classes] * n_classes),
        features=tuple(features),
        locations=locations,
        travel_cost=tuple(tuple([1.0] * n_views) for _ in range(n_views)),
        loss=zero_one_loss(n_classes),
        tau=0.0,
        name=f"polyhedra-c{n_classes}-v{n_views}-s{seed}",
    )


def interpolate_informativeness(train, query, length_scale: float) -> float:
    """Squared-exponential weighted average of informativeness at ``query``.

    ``train`` is a sequence of ``(coords, value)`` pairs.
    """
    if not train:
        raise ValueError("train must be nonempty")
    if length_scale <= 0:
        raise ValueError("length_scale must be > 0")
    coords = np.array([c for c, _ in train], dtype=float)
    vals = np.array([v for _, v in train], dtype=float)
    d2 = ((coords - np.asarray(query, dtype=float)) ** 2).sum(axis=1)
    logw = -d2 / (2.0 * length_scale**2)
    w = np.exp(logw - logw.max())
    out = float(w @ vals / w.sum())
    return min(max(out, vals.min()), vals.max())
