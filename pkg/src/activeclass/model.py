"""Problem instances for active classification and their JSON file format.

A :class:`Scenario` bundles the hypotheses with their prior, the discrete
features with per-hypothesis CPTs, the viewing locations with the set of
features each one reveals, travel costs, the decision loss matrix and the
stopping threshold ``tau``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PROB_TOL = 1e-9
DEFAULT_TAU = 0.05


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or fails validation."""


@dataclass(frozen=True)
class Feature:
    name: str
    values: tuple[str, ...]
    # cpt[h][v] = P(F = v | H = h)
    cpt: tuple[tuple[float, ...], ...]

    @property
    def n_values(self) -> int:
        return len(self.values)

    def is_noiseless(self) -> bool:
        return all(p in (0.0, 1.0) for row in self.cpt for p in row)


@dataclass(frozen=True)
class Location:
    name: str
    observed_features: tuple[int, ...]
    coords: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    hypotheses: tuple[str, ...]
    prior: tuple[float, ...]
    features: tuple[Feature, ...]
    locations: tuple[Location, ...]
    travel_cost: tuple[tuple[float, ...], ...]
    loss: tuple[tuple[float, ...], ...]
    tau: float = DEFAULT_TAU
    name: str = "scenario"
    # numpy views, built once; the scenario is immutable
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.hypotheses == other.hypotheses
            and self.prior == other.prior
            and self.features == other.features
            and self.locations == other.locations
            and self.travel_cost == other.travel_cost
            and self.loss == other.loss
            and self.tau == other.tau
            and self.name == other.name
        )

    def __hash__(self):
        return hash((self.name, self.hypotheses, self.prior, self.tau))

    @property
    def n_hypotheses(self) -> int:
        return len(self.hypotheses)

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    @property
    def prior_array(self) -> np.ndarray:
        if "prior" not in self._cache:
            self._cache["prior"] = np.asarray(self.prior, dtype=float)
        return self._cache["prior"]

    @property
    def loss_array(self) -> np.ndarray:
        if "loss" not in self._cache:
            self._cache["loss"] = np.asarray(self.loss, dtype=float)
        return self._cache["loss"]

    @property
    def cost_array(self) -> np.ndarray:
        if "cost" not in self._cache:
            self._cache["cost"] = np.asarray(self.travel_cost, dtype=float)
        return self._cache["cost"]

    def cpt_array(self, k: int) -> np.ndarray:
        """CPT of feature ``k`` as an (N, V) array."""
        key = ("cpt", k)
        if key not in self._cache:
            self._cache[key] = np.asarray(self.features[k].cpt, dtype=float)
        return self._cache[key]

    def cost(self, target: int, current: int) -> float:
        """Cost of observing from ``target`` while positioned at ``current``."""
        return self.travel_cost[target][current]

    def position_independent_costs(self) -> bool:
        """True when the cost of a visit does not depend on where the agent is."""
        c = self.cost_array
        return bool(np.all(c == c[:, :1]))


def zero_one_loss(n: int) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(0.0 if d == h else 1.0 for h in range(n)) for d in range(n))


def _finite_nonneg(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and x >= 0


def validate(scenario: Scenario, require_positive_prior: bool = False) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    errs: list[str] = []
    n = len(scenario.hypotheses)
    m = len(scenario.locations)
    k = len(scenario.features)

    if n < 2:
        errs.append(f"hypotheses: need at least 2, got {n}")
    if len(set(scenario.hypotheses)) != n:
        errs.append("hypotheses: names are not unique")

    if len(scenario.prior) != n:
        errs.append(f"prior: length {len(scenario.prior)} != {n} hypotheses")
    else:
        if any(not _finite_nonneg(p) for p in scenario.prior):
            errs.append("prior: entries must be finite and >= 0")
        s = sum(scenario.prior)
        if abs(s - 1.0) > PROB_TOL:
            errs.append(f"prior: sum {s:.12g} != 1")
        if require_positive_prior and any(p <= 0 for p in scenario.prior):
            errs.append("prior: every entry must be > 0 (p_min required)")

    if k < 1:
        errs.append("features: need at least 1")
    if len({f.name for f in scenario.features}) != k:
        errs.append("features: names are not unique")
    for fi, feat in enumerate(scenario.features):
        tag = f"features[{fi}] ({feat.name})"
        if len(feat.values) < 2:
            errs.append(f"{tag}.values: need at least 2 outcomes")
        if len(set(feat.values)) != len(feat.values):
            errs.append(f"{tag}.values: labels are not unique")
        if len(feat.cpt) != n:
            errs.append(f"{tag}.cpt: {len(feat.cpt)} rows != {n} hypotheses")
            continue
        for hi, row in enumerate(feat.cpt):
            if len(row) != len(feat.values):
                errs.append(f"{tag}.cpt[{hi}]: {len(row)} entries != {len(feat.values)} values")
                continue
            if any(not (_finite_nonneg(p) and p <= 1.0) for p in row):
                errs.append(f"{tag}.cpt[{hi}]: entries must lie in [0, 1]")
            s = sum(row)
            if abs(s - 1.0) > PROB_TOL:
                errs.append(f"{tag}.cpt[{hi}]: row sum {s:.12g} != 1")

    if m < 1:
        errs.append("locations: need at least 1")
    if len({loc.name for loc in scenario.locations}) != m:
        errs.append("locations: names are not unique")
    for li, loc in enumerate(scenario.locations):
        tag = f"locations[{li}] ({loc.name})"
        if not loc.observed_features:
            errs.append(f"{tag}.features: must be nonempty")
        if any(not (isinstance(f, int) and 0 <= f < k) for f in loc.observed_features):
            errs.append(f"{tag}.features: index out of range")
        if len(set(loc.observed_features)) != len(loc.observed_features):
            errs.append(f"{tag}.features: duplicate index")
        if loc.coords is not None and len(loc.coords) not in (2, 3):
            errs.append(f"{tag}.coords: must have 2 or 3 components")

    tc = scenario.travel_cost
    if len(tc) != m or any(len(r) != m for r in tc):
        errs.append(f"travel_cost: must be {m}x{m}")
    elif any(not _finite_nonneg(c) for r in tc for c in r):
        errs.append("travel_cost: entries must be finite and >= 0")

    ls = scenario.loss
    if len(ls) != n or any(len(r) != n for r in ls):
        errs.append(f"loss: must be {n}x{n}")
    elif any(not _finite_nonneg(c) for r in ls for c in r):
        errs.append("loss: entries must be finite and >= 0")

    if not _finite_nonneg(scenario.tau):
        errs.append("tau: must be a finite number >= 0")
    return errs


def is_noiseless(scenario: Scenario) -> bool:
    return all(f.is_noiseless() for f in scenario.features)


# ---------------------------------------------------------------------------
# file format


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "hypotheses": [
            {"name": h, "prior": p} for h, p in zip(scenario.hypotheses, scenario.prior)
        ],
        "features": [
            {"name": f.name, "values": list(f.values), "cpt": [list(r) for r in f.cpt]}
            for f in scenario.features
        ],
        "locations": [
            {"name": loc.name, "features": list(loc.observed_features)}
            | ({"coords": list(loc.coords)} if loc.coords is not None else {})
            for loc in scenario.locations
        ],
        "travel_cost": [list(r) for r in scenario.travel_cost],
        "loss": [list(r) for r in scenario.loss],
        "tau": scenario.tau,
    }


def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    if key not in obj:
        raise ScenarioError(f"{where}: missing required field '{key}'")
    return obj[key]


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise ScenarioError(f"{where}: NaN/Inf not permitted")
    return float(x)


def _matrix(raw, where: str) -> tuple[tuple[float, ...], ...]:
    if not isinstance(raw, list):
        raise ScenarioError(f"{where}: expected a list of rows")
    out = []
    for i, row in enumerate(raw):
        if not isinstance(row, list):
            raise ScenarioError(f"{where}[{i}]: expected a list")
        out.append(tuple(_num(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)))
    return tuple(out)


def scenario_from_dict(d: dict, check: bool = True) -> Scenario:
    """Build a scenario from its JSON object tree; raises :class:`ScenarioError`."""
    hyps = _require(d, "hypotheses", "scenario")
    if not isinstance(hyps, list):
        raise ScenarioError("hypotheses: expected a list")
    names, prior = [], []
    for i, h in enumerate(hyps):
        names.append(str(_require(h, "name", f"hypotheses[{i}]")))
        prior.append(_num(_require(h, "prior", f"hypotheses[{i}]"), f"hypotheses[{i}].prior"))

    feats_raw = _require(d, "features", "scenario")
    if not isinstance(feats_raw, list):
        raise ScenarioError("features: expected a list")
    features = []
    for i, f in enumerate(feats_raw):
        where = f"features[{i}]"
        values = _require(f, "values", where)
        if not isinstance(values, list):
            raise ScenarioError(f"{where}.values: expected a list")
        features.append(
            Feature(
                name=str(_require(f, "name", where)),
                values=tuple(str(v) for v in values),
                cpt=_matrix(_require(f, "cpt", where), f"{where}.cpt"),
            )
        )

    locs_raw = _require(d, "locations", "scenario")
    if not isinstance(locs_raw, list):
        raise ScenarioError("locations: expected a list")
    locations = []
    for i, loc in enumerate(locs_raw):
        where = f"locations[{i}]"
        fidx = _require(loc, "features", where)
        if not isinstance(fidx, list) or any(
            isinstance(x, bool) or not isinstance(x, int) for x in fidx
        ):
            raise ScenarioError(f"{where}.features: expected a list of integer indices")
        coords = loc.get("coords")
        if coords is not None:
            if not isinstance(coords, list):
                raise ScenarioError(f"{where}.coords: expected a list")
            coords = tuple(_num(c, f"{where}.coords") for c in coords)
        locations.append(
            Location(name=str(_require(loc, "name", where)), observed_features=tuple(fidx), coords=coords)
        )

    travel = _matrix(_require(d, "travel_cost", "scenario"), "travel_cost")
    loss = _matrix(d["loss"], "loss") if d.get("loss") is not None else zero_one_loss(len(names))
    tau = _num(d["tau"], "tau") if d.get("tau") is not None else DEFAULT_TAU

    sc = Scenario(
        hypotheses=tuple(names),
        prior=tuple(prior),
        features=tuple(features),
        locations=tuple(locations),
        travel_cost=travel,
        loss=loss,
        tau=tau,
        name=str(d.get("name", "scenario")),
    )
    if check:
        errs = validate(sc)
        if errs:
            raise ScenarioError("invalid scenario: " + "; ".join(errs))
    return sc


def save_scenario(scenario: Scenario, path) -> None:
    text = json.dumps(scenario_to_dict(scenario), indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"{path}: cannot read ({e.strerror})") from e
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: line {e.lineno} col {e.colno}: {e.msg}") from e
    return scenario_from_dict(raw)


def _reject_constant(name):
    raise ScenarioError(f"non-finite number {name} not permitted")
