"""Exact Bayesian inference over a finite hypothesis set.

Features are conditionally independent given the class, so the posterior after
any set of observations is the prior times a product of CPT entries.  All
information quantities are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import Scenario, is_noiseless

OUTCOME_ENUM_CAP = 4096
MC_OUTCOME_SAMPLES = 2048
MASS_FLOOR = 1e-300


class ImpossibleEvidence(ValueError):
    """Every hypothesis assigns zero probability to the observed evidence."""


class DuplicateFeature(ValueError):
    """A feature already realized in the history was observed again."""


class OutcomeSpaceTooLarge(RuntimeError):
    """Exact enumeration of joint outcomes would exceed the configured cap."""


class NotNoiseless(ValueError):
    """A noiseless-only operation was called on a scenario with soft CPTs."""


@dataclass(frozen=True)
class Observation:
    feature: int
    value: int


@dataclass(frozen=True, eq=False)
class Belief:
    probs: np.ndarray
    history: tuple[Observation, ...] = ()

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __eq__(self, other):
        if not isinstance(other, Belief):
            return NotImplemented
        return self.history == other.history and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.history, self.probs.tobytes()))

    @classmethod
    def from_prior(cls, scenario: Scenario) -> "Belief":
        return cls(scenario.prior_array.copy())

    @property
    def realized(self) -> frozenset[int]:
        return frozenset(o.feature for o in self.history)

    def key(self, digits: int = 12) -> tuple:
        """Hashable rounded view of the probabilities (for memo tables)."""
        return tuple(np.round(self.probs, digits).tolist())


def likelihood(scenario: Scenario, observations: Iterable[Observation]) -> np.ndarray:
    lik = np.ones(scenario.n_hypotheses)
    for o in observations:
        lik = lik * scenario.cpt_array(o.feature)[:, o.value]
    return lik


def update(
    scenario: Scenario,
    belief: Belief,
    observations: Sequence[Observation],
    allow_repeat: bool = False,
) -> Belief:
    """Condition ``belief`` on ``observations``; raises on impossible evidence."""
    if not allow_repeat:
        seen = set(belief.realized)
        for o in observations:
            if o.feature in seen:
                raise DuplicateFeature(f"feature {o.feature} already realized")
            seen.add(o.feature)
    unnorm = belief.probs * likelihood(scenario, observations)
    mass = unnorm.sum()
    if not mass >= MASS_FLOOR:
        raise ImpossibleEvidence(
            f"observations {[(o.feature, o.value) for o in observations]} have zero "
            "probability under every hypothesis"
        )
    return Belief(unnorm / mass, belief.history + tuple(observations))


def entropy(belief: Belief | np.ndarray) -> float:
    p = belief.probs if isinstance(belief, Belief) else np.asarray(belief, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def _entropy_cols(post: np.ndarray) -> np.ndarray:
    """Entropy of each column of an (N, O) matrix of normalized posteriors."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(post > 0, post * np.log2(np.where(post > 0, post, 1.0)), 0.0)
    return -t.sum(axis=0)


def new_features(
    scenario: Scenario, belief: Belief, locations: Iterable[int], allow_repeat: bool = False
) -> tuple[int, ...]:
    """Sorted feature indices a visit to ``locations`` would newly reveal."""
    feats: set[int] = set()
    for loc in locations:
        feats.update(scenario.locations[loc].observed_features)
    if not allow_repeat:
        feats -= belief.realized
    return tuple(sorted(feats))


def outcome_space_size(scenario: Scenario, features: Sequence[int]) -> int:
    size = 1
    for k in features:
        size *= scenario.features[k].n_values
    return size


def joint_outcomes(
    scenario: Scenario, probs: np.ndarray, features: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate joint outcomes of ``features`` that have positive probability.

    Returns ``(values, lik)`` where ``values`` is (O, len(features)) of value
    indices and ``lik[h, o] = P(o | h)``.  Outcomes that every hypothesis in the
    support of ``probs`` rules out are dropped as they are built.
    """
    support = probs > 0
    values = np.zeros((1, 0), dtype=int)
    lik = np.ones((scenario.n_hypotheses, 1))
    for k in features:
        cpt = scenario.cpt_array(k)
        v = cpt.shape[1]
        lik = (lik[:, :, None] * cpt[:, None, :]).reshape(lik.shape[0], -1)
        values = np.concatenate(
            [np.repeat(values, v, axis=0), np.tile(np.arange(v), values.shape[0])[:, None]],
            axis=1,
        )
        keep = lik[support].sum(axis=0) > 0
        lik, values = lik[:, keep], values[keep]
    return values, lik


def branch(
    scenario: Scenario, belief: Belief, features: Sequence[int]
) -> list[tuple[float, tuple[Observation, ...], np.ndarray]]:
    """Outcome branches ``(P(o | belief), observations, posterior probs)``."""
    values, lik = joint_outcomes(scenario, belief.probs, features)
    joint = belief.probs[:, None] * lik
    p_o = joint.sum(axis=0)
    out = []
    for j in range(values.shape[0]):
        if p_o[j] <= 0:
            continue
        obs = tuple(Observation(int(k), int(v)) for k, v in zip(features, values[j]))
        out.append((float(p_o[j]), obs, joint[:, j] / p_o[j]))
    return out


def _exact_expected_entropy(probs: np.ndarray, lik: np.ndarray) -> float:
    joint = probs[:, None] * lik
    p_o = joint.sum(axis=0)
    nz = p_o > 0
    post = joint[:, nz] / p_o[nz]
    return float(p_o[nz] @ _entropy_cols(post))


def _sampled_expected_entropy(
    scenario: Scenario, probs: np.ndarray, features: Sequence[int], n: int, seed: int
) -> float:
    # hypotheses and each feature's uniforms come from their own streams, so
    # estimates for overlapping feature sets share random numbers
    hs = np.random.default_rng([seed, 0]).choice(len(probs), size=n, p=probs)
    loglik = np.zeros((len(probs), n))
    for k in features:
        cpt = scenario.cpt_array(k)
        cum = np.cumsum(cpt[hs], axis=1)
        u = np.random.default_rng([seed, 1, k]).random(n)[:, None]
        vals = np.minimum((u > cum).sum(axis=1), cpt.shape[1] - 1)
        with np.errstate(divide="ignore"):
            loglik += np.log(cpt[:, vals])
    with np.errstate(divide="ignore"):
        logpost = np.log(probs)[:, None] + loglik
    logpost -= logpost.max(axis=0)
    post = np.exp(logpost)
    post /= post.sum(axis=0)
    return float(_entropy_cols(post).mean())


def expected_entropy(
    scenario: Scenario,
    belief: Belief,
    features: Sequence[int],
    cap: int = OUTCOME_ENUM_CAP,
    n_samples: int | None = MC_OUTCOME_SAMPLES,
    seed: int = 0,
) -> float:
    """Expected posterior entropy after observing ``features``."""
    if not features:
        return entropy(belief)
    if outcome_space_size(scenario, features) <= cap:
        _, lik = joint_outcomes(scenario, belief.probs, features)
        return _exact_expected_entropy(belief.probs, lik)
    if n_samples is None:
        raise OutcomeSpaceTooLarge(
            f"{outcome_space_size(scenario, features)} joint outcomes exceeds cap {cap}"
        )
    return _sampled_expected_entropy(scenario, belief.probs, features, n_samples, seed)


def expected_information_gain(
    scenario: Scenario,
    belief: Belief,
    location: int,
    allow_repeat: bool = False,
    cap: int = OUTCOME_ENUM_CAP,
    n_samples: int = MC_OUTCOME_SAMPLES,
    seed: int = 0,
) -> float:
    """One-step expected entropy reduction from visiting ``location``."""
    feats = new_features(scenario, belief, [location], allow_repeat)
    if not feats:
        return 0.0
    h0 = entropy(belief)
    gain = h0 - expected_entropy(scenario, belief, feats, cap, n_samples, seed)
    return max(gain, 0.0)


def expected_information_gain_set(
    scenario: Scenario, belief: Belief, locations: Iterable[int], cap: int = OUTCOME_ENUM_CAP
) -> float:
    """Exact IG of observing every location in the set; no sampling fallback."""
    feats = new_features(scenario, belief, locations)
    if not feats:
        return 0.0
    if outcome_space_size(scenario, feats) > cap:
        raise OutcomeSpaceTooLarge(
            f"{outcome_space_size(scenario, feats)} joint outcomes exceeds cap {cap}"
        )
    _, lik = joint_outcomes(scenario, belief.probs, feats)
    return max(entropy(belief) - _exact_expected_entropy(belief.probs, lik), 0.0)


def decision_risks(scenario: Scenario, probs: np.ndarray) -> np.ndarray:
    """Expected loss of each decision d: sum_h loss(d, h) p(h)."""
    return scenario.loss_array @ probs


def bayes_risk(scenario: Scenario, belief: Belief | np.ndarray) -> float:
    p = belief.probs if isinstance(belief, Belief) else belief
    return float(decision_risks(scenario, p).min())


def map_decision(scenario: Scenario, belief: Belief | np.ndarray, tol: float = 1e-12) -> int:
    """Loss-weighted MAP decision; ties go to the lowest hypothesis index."""
    p = belief.probs if isinstance(belief, Belief) else belief
    r = decision_risks(scenario, p)
    return int(np.flatnonzero(r <= r.min() + tol)[0])


def expected_posterior_risk(
    scenario: Scenario, belief: Belief, location: int, allow_repeat: bool = False
) -> float:
    """Expected Bayes risk after visiting ``location`` (exact enumeration)."""
    feats = new_features(scenario, belief, [location], allow_repeat)
    if not feats:
        return bayes_risk(scenario, belief)
    if outcome_space_size(scenario, feats) > OUTCOME_ENUM_CAP:
        raise OutcomeSpaceTooLarge("too many joint outcomes for exact risk")
    _, lik = joint_outcomes(scenario, belief.probs, feats)
    joint = belief.probs[:, None] * lik
    # sum_o min_d sum_h loss(d,h) P(h, o)
    return float((scenario.loss_array @ joint).min(axis=0).sum())


def version_space_count(scenario: Scenario, history: Iterable[Observation]) -> int:
    """Number of hypotheses consistent with a noiseless observation history."""
    if not is_noiseless(scenario):
        raise NotNoiseless("version space is defined for 0/1 CPTs only")
    consistent = np.ones(scenario.n_hypotheses, dtype=bool)
    for o in history:
        consistent &= scenario.cpt_array(o.feature)[:, o.value] == 1.0
    return int(consistent.sum())
