"""Sample-selection policies: confidence-margin difficulty estimation and
easy-first / hard-first / random batch selection under count or time budgets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Sample, ValidationError
from .annotator import CostModel, mask_cost

POLICIES = ("easy_first", "hard_first", "random")
DIFFICULTY_SOURCES = ("proxy", "oracle")

DEFAULT_MARGIN_THRESHOLD = 0.3


@dataclass(frozen=True)
class DifficultyEstimate:
    """Annotation-difficulty proxy for one sample.

    ``proxy_score`` is the mean per-voxel confidence margin (top probability
    minus second); ``predicted_cost_min`` prices the pseudo-error mask of
    voxels whose margin falls under the threshold. ``oracle_cost_min`` is the
    true editing cost, populated only in oracle-difficulty mode.
    """

    sample_id: str
    proxy_score: float
    predicted_cost_min: float
    oracle_cost_min: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.proxy_score <= 1.0):
            raise ValidationError(f"proxy_score out of [0,1]: {self.proxy_score}")


@dataclass(frozen=True)
class RoundBudget:
    """Exactly one of: annotate ``count`` samples, spend up to ``time_min``
    minutes, or take the whole remaining pool (``rest``)."""

    count: int | None = None
    time_min: float | None = None
    rest: bool = False

    def __post_init__(self):
        set_fields = (self.count is not None) + (self.time_min is not None) + self.rest
        if set_fields != 1:
            raise ValidationError("budget must set exactly one of count/time_min/rest")
        if self.count is not None and self.count <= 0:
            raise ValidationError("count budget must be positive")
        if self.time_min is not None and self.time_min <= 0:
            raise ValidationError("time budget must be positive")

    def to_json(self) -> dict:
        if self.count is not None:
            return {"count": self.count}
        if self.time_min is not None:
            return {"time_min": self.time_min}
        return {"rest": True}

    @staticmethod
    def from_json(d: dict) -> "RoundBudget":
        return RoundBudget(
            count=d.get("count"), time_min=d.get("time_min"), rest=d.get("rest", False)
        )


@dataclass(frozen=True)
class RoundSchedule:
    budgets: tuple[RoundBudget, ...]
    policy: str = "easy_first"
    difficulty_source: str = "proxy"
    rng_seed: int = 0

    def __post_init__(self):
        if not self.budgets:
            raise ValidationError("schedule must have at least one round")
        if self.policy not in POLICIES:
            raise ValidationError(f"unknown policy {self.policy!r}")
        if self.difficulty_source not in DIFFICULTY_SOURCES:
            raise ValidationError(f"unknown difficulty source {self.difficulty_source!r}")
        object.__setattr__(self, "budgets", tuple(self.budgets))


def default_schedule(rng_seed: int = 0) -> RoundSchedule:
    """Count schedule [4, 6, 8, 12, 16, rest] shaped like the paper's
    small-rounds-first interpolation for an 80-case pool."""
    budgets = [RoundBudget(count=n) for n in (4, 6, 8, 12, 16)]
    budgets.append(RoundBudget(rest=True))
    return RoundSchedule(budgets=tuple(budgets), rng_seed=rng_seed)


def estimate_difficulty(
    sample: Sample,
    probs: np.ndarray,
    cost: CostModel,
    margin_threshold: float = DEFAULT_MARGIN_THRESHOLD,
    oracle_cost_min: float | None = None,
) -> DifficultyEstimate:
    """Margin-based difficulty from the sample's prediction probabilities.

    Never reads ground truth: the caller passes ``oracle_cost_min`` only when
    the schedule runs in oracle-difficulty mode.
    """
    if sample.prediction is None or probs is None:
        raise ValidationError(f"sample {sample.id} has no prediction/probabilities")
    part = np.partition(probs, probs.shape[1] - 2, axis=1)
    margin = part[:, -1] - part[:, -2]
    pseudo = (margin < margin_threshold).reshape(sample.volume.dims)
    return DifficultyEstimate(
        sample_id=sample.id,
        proxy_score=float(margin.mean()),
        predicted_cost_min=mask_cost(pseudo, cost),
        oracle_cost_min=oracle_cost_min,
    )


def _selection_cost(est: DifficultyEstimate, source: str) -> float:
    if source == "oracle":
        if est.oracle_cost_min is None:
            raise ValidationError(
                f"oracle difficulty requested but estimate for {est.sample_id} has none"
            )
        return est.oracle_cost_min
    return est.predicted_cost_min


def select_batch(
    pool: list[str],
    estimates: dict[str, DifficultyEstimate],
    budget: RoundBudget,
    policy: str,
    rng_seed: int,
    difficulty_source: str = "proxy",
) -> list[str]:
    """Order the pool by estimated cost (or seeded shuffle) and take samples
    up to the budget. Time budgets pack greedily in policy order, stopping
    before the cumulative cost would exceed the limit. Ties break toward the
    lower sample id."""
    if not pool:
        return []
    missing = [sid for sid in pool if sid not in estimates]
    if missing:
        raise ValidationError(f"estimates missing for pool samples: {missing}")
    costs = {sid: _selection_cost(estimates[sid], difficulty_source) for sid in pool}
    if policy == "easy_first":
        ordered = sorted(pool, key=lambda sid: (costs[sid], sid))
    elif policy == "hard_first":
        ordered = sorted(pool, key=lambda sid: (-costs[sid], sid))
    elif policy == "random":
        rng = np.random.default_rng(rng_seed)
        base = sorted(pool)
        ordered = [base[i] for i in rng.permutation(len(base))]
    else:
        raise ValidationError(f"unknown policy {policy!r}")

    if budget.rest:
        return ordered
    if budget.count is not None:
        return ordered[: budget.count]
    taken = []
    spent = 0.0
    for sid in ordered:
        if spent + costs[sid] > budget.time_min:
            break
        taken.append(sid)
        spent += costs[sid]
    return taken
