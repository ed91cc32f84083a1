import itertools
import math

import numpy as np
import pytest

from activeclass.model import Feature, Location, Scenario, zero_one_loss


def make_scenario(prior, cpts, loc_features=None, cost=None, loss=None, tau=0.05, name="t"):
    """Small hand-built scenario; ``cpts`` is a list of [hypothesis][value] tables."""
    n = len(prior)
    feats = tuple(
        Feature(f"F{i}", tuple(str(v) for v in range(len(c[0]))), tuple(tuple(float(x) for x in r) for r in c))
        for i, c in enumerate(cpts)
    )
    if loc_features is None:
        loc_features = [[i] for i in range(len(cpts))]
    m = len(loc_features)
    locs = tuple(Location(f"L{i}", tuple(fs)) for i, fs in enumerate(loc_features))
    if cost is None:
        cost = [[1.0] * m for _ in range(m)]
    return Scenario(
        hypotheses=tuple(f"h{i}" for i in range(n)),
        prior=tuple(float(p) for p in prior),
        features=feats,
        locations=locs,
        travel_cost=tuple(tuple(float(c) for c in r) for r in cost),
        loss=zero_one_loss(n) if loss is None else tuple(tuple(float(x) for x in r) for r in loss),
        tau=tau,
        name=name,
    )


# -- brute-force reference computations, written without the library's helpers --


def bf_entropy(p):
    return -sum(x * math.log2(x) for x in p if x > 0)


def bf_posterior(sc, prior, obs):
    """obs: list of (feature, value)."""
    w = []
    for h in range(sc.n_hypotheses):
        x = prior[h]
        for k, v in obs:
            x *= sc.features[k].cpt[h][v]
        w.append(x)
    s = sum(w)
    if s == 0:
        return None, 0.0
    return [x / s for x in w], s


def bf_outcomes(sc, prior, feats):
    """Yield (P(o), o) over the joint outcome space of ``feats`` (positive mass only)."""
    ranges = [range(sc.features[k].n_values) for k in feats]
    for vals in itertools.product(*ranges):
        obs = list(zip(feats, vals))
        _, mass = bf_posterior(sc, prior, obs)
        if mass > 0:
            yield mass, obs


def bf_info_gain(sc, prior, feats):
    h0 = bf_entropy(prior)
    exp = 0.0
    for mass, obs in bf_outcomes(sc, prior, feats):
        post, _ = bf_posterior(sc, prior, obs)
        exp += mass * bf_entropy(post)
    return h0 - exp


def bf_risk(sc, p):
    return min(sum(sc.loss[d][h] * p[h] for h in range(len(p))) for d in range(len(p)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
