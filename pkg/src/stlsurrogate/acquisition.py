"""Adaptive experiment design: choose where to test next.

Each step scores every candidate x by its Expected Prediction Error,

    EPE(x) = alpha * e2_cv(x) + (1 - alpha) * s2(x),

where e2_cv(x) is the leave-one-out squared error of the nearest training
point (a bias proxy), s2(x) the GP predictive variance, and alpha a balance
factor recomputed each iteration from how well the CV error anticipated the
last true error: alpha = 0.99 * min(1, 0.5 * (y - yhat)^2 / e2_cv_prev).
The point with maximal EPE over a fixed candidate pool is evaluated on the
black box, scored with AGM robustness at t=0, appended, and the surrogate
refit. Baseline strategies (one-shot uniform design, seeded random draws)
share the same campaign record format.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import gp
from .agm import agm_rob
from .blackbox import BlackBoxError
from .design import candidate_pool, random_design, uniform_design
from .stl import parse_formula

__all__ = [
    "AcquisitionState",
    "CampaignRecord",
    "FitSchedule",
    "cv_error_at",
    "epe",
    "update_alpha",
    "run_campaign",
]

ALPHA_CAP = 0.99
ALPHA_START = 0.5
STRATEGIES = ("mepe", "ud", "random")


@dataclass
class AcquisitionState:
    """Everything the acquisition rule needs at one iteration."""

    surrogate: gp.Surrogate
    cv_errors: np.ndarray
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= ALPHA_CAP:
            raise ValueError(f"alpha {self.alpha} outside [0, {ALPHA_CAP}]")
        if len(self.cv_errors) != self.surrogate.training.n:
            raise ValueError("cv_errors length must match training size")


def _nearest_index(surrogate, X):
    """Index of the nearest training point in normalized coordinates,
    ties broken by lowest training index."""
    Zq = surrogate._normalize(X)
    Zt = surrogate.Z
    d2 = (
        np.sum(Zq * Zq, axis=1)[:, None]
        + np.sum(Zt * Zt, axis=1)[None, :]
        - 2.0 * (Zq @ Zt.T)
    )
    return np.argmin(d2, axis=1)


def cv_error_at(state, x):
    """CV error field at x: the e2_cv of the nearest training point."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    idx = _nearest_index(state.surrogate, np.atleast_2d(x))
    out = state.cv_errors[idx]
    return float(out[0]) if single else out


def epe(state, x):
    """Expected prediction error at x (or a batch of x)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    ecv = cv_error_at(state, np.atleast_2d(x))
    _, s2 = state.surrogate.predict(np.atleast_2d(x))
    out = state.alpha * ecv + (1.0 - state.alpha) * s2
    return float(out[0]) if single else out


def update_alpha(y_prev, yhat_prev, ecv_prev, squared=True):
    """Balance factor from the previous iteration's outcome.

    A perfect prediction yields 0 (pure exploration); a true error at least
    twice the CV error saturates at the 0.99 cap. `squared=False` selects the
    unsquared-residual variant of the update for fidelity experiments; it is
    sign-clamped at 0.
    """
    residual = y_prev - yhat_prev
    num = residual**2 if squared else residual
    if num == 0.0:
        return 0.0
    if ecv_prev == 0.0:
        return ALPHA_CAP  # ratio saturates
    ratio = 0.5 * num / ecv_prev
    return float(np.clip(ALPHA_CAP * min(1.0, ratio), 0.0, ALPHA_CAP))


@dataclass
class FitSchedule:
    """How surrogates are (re)fit during a campaign."""

    initial_restarts: int = 3
    refit_restarts: int = 1
    initial_maxiter: int = 60
    refit_maxiter: int = 8
    refit_gtol: float = 1e-3


@dataclass
class CampaignRecord:
    """Replayable log of one experiment-selection run."""

    config: dict
    history: list = field(default_factory=list)
    final_surrogate: dict = None
    snapshots: dict = field(default_factory=dict)

    def points(self):
        return np.array([h["x"] for h in self.history])

    def scores(self):
        return np.array(
            [h["y"] if h["y"] is not None else np.nan for h in self.history]
        )

    def surrogate(self):
        return gp.Surrogate.from_dict(self.final_surrogate)

    def snapshot_surrogate(self, budget):
        return gp.Surrogate.from_dict(self.snapshots[str(budget)])

    def to_json(self, indent=None):
        return json.dumps(
            {
                "config": self.config,
                "history": self.history,
                "final_surrogate": self.final_surrogate,
                "snapshots": self.snapshots,
            },
            indent=indent,
        )

    @classmethod
    def from_json(cls, s):
        d = json.loads(s)
        return cls(d["config"], d["history"], d["final_surrogate"], d["snapshots"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json(indent=2))

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def write_csv(self, path):
        """Per-iteration export: iteration, x..., y, alpha, epe, wallclock."""
        dim = len(self.history[0]["x"]) if self.history else 0
        cols = [f"x{j + 1}" for j in range(dim)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                "iteration," + ",".join(cols) + ",y,alpha,epe,wallclock_ms\n"
            )
            for h in self.history:
                fields = [str(h["iteration"])]
                fields += [repr(v) for v in h["x"]]
                for key in ("y", "alpha", "epe"):
                    v = h.get(key)
                    fields.append("" if v is None else repr(v))
                fields.append(repr(h.get("wallclock_ms", 0.0)))
                fh.write(",".join(fields) + "\n")

    def replay_matches(self, blackbox, formula):
        """Re-evaluate recorded points; True iff all scores reproduce."""
        for h in self.history:
            if h["y"] is None:
                continue
            tr = blackbox.evaluate(np.array(h["x"]))
            if agm_rob(formula, tr, 0) != h["y"]:
                return False
        return True


def _score(formula, blackbox, x):
    """One black-box call plus monitoring; returns (y | None, error, ms)."""
    start = time.perf_counter()
    try:
        trace = blackbox.evaluate(x)
        y = agm_rob(formula, trace, 0)
        err = None
    except BlackBoxError as exc:
        y, err = None, str(exc)
    ms = (time.perf_counter() - start) * 1e3
    return y, err, ms


def _fit(X, y, dom, kernel, restarts, maxiter, seed, gtol=1e-5):
    return gp.fit(
        gp.TrainingSet(np.array(X), np.array(y)),
        kernel=kernel,
        bounds=dom.bounds(),
        restarts=restarts,
        maxiter=maxiter,
        seed=seed,
        gtol=gtol,
    )


def run_campaign(
    formula,
    dom,
    blackbox,
    budget,
    n_init=50,
    pool_size=4096,
    seed=0,
    strategy="mepe",
    fit_schedule=None,
    snapshot_budgets=(),
    squared_alpha=True,
):
    """Run one experiment-selection campaign and return its record.

    mepe: GLP initial design of n_init points, then `budget` adaptive
    EPE-argmax additions over a fixed candidate pool (chosen points excluded,
    ties by lowest pool index). ud: a single uniform design of size `budget`
    evaluated in lattice order, one final fit. random: `budget` seeded draws
    from the domain, one final fit. Deterministic given (seed, config) and a
    deterministic black box.
    """
    if isinstance(formula, str):
        formula = parse_formula(formula)
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; pick from {STRATEGIES}")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if strategy == "mepe":
        if n_init < 2:
            raise ValueError("n_init must be >= 2")
        if budget > 0 and pool_size < budget:
            raise ValueError("pool must be at least as large as the budget")
    schedule = fit_schedule or FitSchedule()

    from .stl import pretty_print

    record = CampaignRecord(
        config={
            "formula": pretty_print(formula),
            "domain": dom.to_dict(),
            "blackbox": blackbox.describe(),
            "budget": budget,
            "n_init": n_init,
            "pool_size": pool_size,
            "seed": seed,
            "strategy": strategy,
            "squared_alpha": squared_alpha,
            "fit": vars(schedule),
        }
    )

    if strategy == "mepe":
        surrogate = _run_mepe(
            formula,
            dom,
            blackbox,
            budget,
            n_init,
            pool_size,
            seed,
            schedule,
            squared_alpha,
            record,
            set(int(b) for b in snapshot_budgets),
        )
    else:
        design = (
            uniform_design(dom, budget)
            if strategy == "ud"
            else random_design(dom, budget, seed)
        )
        X, y = [], []
        for i, x in enumerate(design.points, start=1):
            yi, err, ms = _score(formula, blackbox, x)
            record.history.append(
                {
                    "iteration": i,
                    "x": [float(v) for v in x],
                    "y": yi,
                    "alpha": None,
                    "epe": None,
                    "error": err,
                    "wallclock_ms": ms,
                }
            )
            if yi is not None:
                X.append(x)
                y.append(yi)
        surrogate = _fit(
            X, y, dom, None, schedule.initial_restarts, schedule.initial_maxiter, seed
        )

    record.final_surrogate = surrogate.to_dict()
    return record


def _run_mepe(
    formula,
    dom,
    blackbox,
    budget,
    n_init,
    pool_size,
    seed,
    schedule,
    squared_alpha,
    record,
    snapshot_at,
):
    init = uniform_design(dom, n_init)
    X, y = [], []
    for x in init.points:
        yi, err, ms = _score(formula, blackbox, x)
        record.history.append(
            {
                "iteration": 0,  # initial design rows carry iteration 0
                "x": [float(v) for v in x],
                "y": yi,
                "alpha": None,
                "epe": None,
                "error": err,
                "wallclock_ms": ms,
            }
        )
        if yi is not None:
            X.append(x)
            y.append(yi)

    surrogate = _fit(
        X, y, dom, None, schedule.initial_restarts, schedule.initial_maxiter, seed
    )
    if 0 in snapshot_at:
        record.snapshots["0"] = surrogate.to_dict()

    pool = candidate_pool(dom, pool_size, seed).points
    available = np.ones(len(pool), dtype=bool)

    alpha = ALPHA_START
    prev = None  # (y, yhat, ecv) of the previous accepted point
    for i in range(1, budget + 1):
        if prev is not None:
            alpha = update_alpha(*prev, squared=squared_alpha)
        state = AcquisitionState(surrogate, surrogate.loo_squared_errors(), alpha)

        scores = epe(state, pool)
        scores[~available] = -np.inf
        while True:
            choice = int(np.argmax(scores))  # ties resolve to lowest pool index
            if not np.isfinite(scores[choice]):
                raise RuntimeError("candidate pool exhausted")
            x = pool[choice]
            # a pool point within the training-set duplicate tolerance would
            # poison the refit; skip it without consuming budget
            z = surrogate._normalize(x)
            if np.min(np.sum((surrogate.Z - z) ** 2, axis=1)) < gp.DUPLICATE_TOL**2:
                available[choice] = False
                scores[choice] = -np.inf
                continue
            break
        available[choice] = False

        yhat, _ = surrogate.predict(x)
        ecv_here = cv_error_at(state, x)
        yi, err, ms = _score(formula, blackbox, x)
        record.history.append(
            {
                "iteration": i,
                "x": [float(v) for v in x],
                "y": yi,
                "alpha": alpha,
                "epe": float(scores[choice]),
                "error": err,
                "wallclock_ms": ms,
            }
        )
        if yi is None:
            continue  # budget consumed, surrogate unchanged
        X.append(x)
        y.append(yi)
        surrogate = _fit(
            X,
            y,
            dom,
            surrogate.kernel,
            schedule.refit_restarts,
            schedule.refit_maxiter,
            seed + i,
            gtol=schedule.refit_gtol,
        )
        prev = (yi, yhat, ecv_here)
        if i in snapshot_at:
            record.snapshots[str(i)] = surrogate.to_dict()

    return surrogate
