"""Perturbation optimisation seeded by influence communities.

Stage one places budget on each community's highest-influence vertex and
maximises the convergence rate over those entries, discarding communities
whose entry is driven to zero.  Stage two builds a masked first-eigenvector
input per surviving community, sharpens each with an elementwise power
transform, and combines them with inverse weights, greedily admitting,
re-tuning, and pruning vectors under a 0.1% acceptance slack.  A direct
simplex-projected optimiser over all n vertices serves as the reference
point for speed ratios.

All intermediate allocations stay on the probability simplex: the power
transform and the weighted combination each renormalise to unit budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .consensus import BUDGET_TOL, PerturbationVector, rightmost_rate
from .graphs import Graph, LaplacianView, laplacian

ACCEPT_FACTOR = 1.001
DEFAULT_EVALS_PER_PHASE = 5000
_INVALID = -1e30


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class LeaderSelection:
    """Surviving communities (influence-ranked) and their leader allocation."""

    communities: tuple[tuple[int, ...], ...]
    leaders: tuple[int, ...]
    ranks: tuple[int, ...]  # 1-based rank in the pre-pruning influence order
    allocation: np.ndarray  # length-n, supported on `leaders`
    lambda1: float
    evaluations: int
    converged: bool


@dataclass(frozen=True)
class OptimizationResult:
    c: PerturbationVector
    lambda1: float
    active_communities: tuple[int, ...]  # ranks retained
    evaluations: int
    converged: bool
    lambda_history: tuple[float, ...] = field(default_factory=tuple)


def power_transform(omega, eta) -> np.ndarray:
    """Elementwise power then renormalise: p_i = w_i^eta / sum(w^eta).

    Computed through log-space so a large eta cannot underflow the whole
    vector; zero entries stay exactly zero.  eta -> 0 tends to uniform over
    the support.
    """
    omega = np.asarray(omega, dtype=float)
    if (omega < 0).any():
        raise OptimizationError("power transform input must be nonnegative")
    if not (omega > 0).any():
        raise OptimizationError("power transform input must have a positive entry")
    if eta <= 0:
        raise OptimizationError("eta must be positive")
    with np.errstate(divide="ignore"):
        logs = eta * np.log(omega)
    logs -= logs[np.isfinite(logs)].max()
    p = np.exp(logs)
    return p / p.sum()


def combine(p_list, r) -> np.ndarray:
    """Inverse-weighted combination c = sum(p_j / r_j) / sum(1 / r_j).

    An infinite weight drops its vector from the combination; at least one
    weight must stay finite.
    """
    if len(p_list) == 0:
        raise OptimizationError("cannot combine an empty vector list")
    r = np.asarray(r, dtype=float)
    if r.shape[0] != len(p_list) or (r <= 0).any():
        raise OptimizationError("weights must be positive, one per vector")
    inv = np.where(np.isinf(r), 0.0, 1.0 / r)
    if inv.sum() == 0:
        raise OptimizationError("all vectors dropped: no finite weight left")
    acc = np.zeros(np.asarray(p_list[0]).shape[0])
    for p, wi in zip(p_list, inv):
        if wi:
            acc += wi * np.asarray(p, dtype=float)
    return acc / inv.sum()


def numeric_maximize(objective, x0, bounds=None, max_evals=DEFAULT_EVALS_PER_PHASE,
                     xatol=1e-8, fatol=1e-8):
    """Derivative-free (Nelder-Mead) local maximiser.

    Returns (x, value, evaluations, converged).  Deterministic for a given
    x0; a non-finite objective value raises OptimizationError; hitting the
    evaluation cap returns the best iterate with converged=False.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    calls = 0

    def neg(x):
        nonlocal calls
        calls += 1
        v = float(objective(x))
        if math.isnan(v) or math.isinf(v):
            raise OptimizationError(f"objective returned non-finite value {v!r}")
        return -v

    res = scipy.optimize.minimize(
        neg, x0, method="Nelder-Mead", bounds=bounds,
        options={"maxfev": max_evals, "xatol": xatol, "fatol": fatol},
    )
    return res.x, -float(res.fun), calls, bool(res.success)


def _check_allocation(c):
    c = np.asarray(c)
    if (c < 0).any() or abs(float(c.sum()) - 1.0) > BUDGET_TOL:
        raise OptimizationError("allocation left the probability simplex")
    return c


def _as_lap(g) -> LaplacianView:
    return laplacian(g) if isinstance(g, Graph) else g


class _RateObjective:
    """Counts rate evaluations and checks the budget invariant on each call."""

    def __init__(self, lap, solver="auto"):
        self.lap = lap
        self.solver = solver
        self.calls = 0

    def __call__(self, c):
        self.calls += 1
        _check_allocation(c)
        return rightmost_rate(self.lap, c, solver=self.solver)


def _order_by_influence(communities, v1, detected_leaders=None):
    """Influence order: descending largest-v1 entry, ties by leader index.

    The leader of each community is its largest-v1 member; a community with
    no positive v1 mass falls back to its detected leader when one is given
    (v1 carries no signal off the terminal strongly connected parts).
    Returns (ordered member tuples, leaders, 1-based ranks).
    """
    items = []
    for pos, members in enumerate(communities):
        members = tuple(int(t) for t in members)
        if not members:
            continue
        beta = max(members, key=lambda t: (v1[t], -t))
        if v1[beta] <= 0 and detected_leaders is not None:
            beta = int(detected_leaders[pos])
        items.append((-float(max(v1[t] for t in members)), beta, members))
    if not items:
        raise OptimizationError("no nonempty communities to optimise")
    items.sort(key=lambda t: (t[0], t[1]))
    ordered = tuple(t[2] for t in items)
    leaders = tuple(t[1] for t in items)
    return ordered, leaders, tuple(range(1, len(items) + 1))


def leader_opt(g, communities, v1, detected_leaders=None,
               max_evals=DEFAULT_EVALS_PER_PHASE, solver="auto",
               xatol=1e-8, fatol=1e-8) -> LeaderSelection:
    """Stage-one optimisation over community leader vertices only.

    Budget starts at 1/i for the rank-i leader (then normalised) and is
    tuned by a projected simplex search; any leader entry driven to zero or
    below removes its community, and the search repeats on the survivors.
    """
    lap = _as_lap(g)
    v1 = np.asarray(v1, dtype=float)
    ordered, leaders, ranks = _order_by_influence(communities, v1, detected_leaders)
    rate = _RateObjective(lap, solver=solver)
    active = list(range(len(ordered)))
    restart = {i: 1.0 / (i + 1) for i in active}
    converged = True
    while True:
        betas = [leaders[i] for i in active]
        if len(active) == 1:
            alloc = np.zeros(lap.n)
            alloc[betas[0]] = 1.0
            best_val = rate(alloc)
            break
        x0 = np.array([restart[i] for i in active])
        x0 = x0 / x0.sum()

        def obj(q):
            qc = np.clip(q, 0.0, None)
            tot = qc.sum()
            if tot <= 0:
                return _INVALID
            alloc = np.zeros(lap.n)
            alloc[betas] = qc / tot
            return rate(alloc)

        x, best_val, _, ok = numeric_maximize(obj, x0, max_evals=max_evals,
                                              xatol=xatol, fatol=fatol)
        converged = converged and ok
        dead = {i for i, qi in zip(active, x) if qi <= 0}
        if not dead:
            qc = np.clip(x, 0.0, None)
            alloc = np.zeros(lap.n)
            alloc[betas] = qc / qc.sum()
            break
        restart = {i: float(qi) for i, qi in zip(active, x) if i not in dead}
        active = [i for i in active if i not in dead]
    _check_allocation(alloc)
    return LeaderSelection(
        communities=tuple(ordered[i] for i in active),
        leaders=tuple(leaders[i] for i in active),
        ranks=tuple(ranks[i] for i in active),
        allocation=alloc,
        lambda1=float(best_val),
        evaluations=rate.calls,
        converged=converged,
    )


class _Combiner:
    """Evaluates the combined allocation for index-selected input vectors."""

    def __init__(self, omegas, rate):
        self.omegas = omegas
        self.rate = rate

    def allocation(self, idx, etas, r):
        parts = [power_transform(self.omegas[i], etas[t]) for t, i in enumerate(idx)]
        return combine(parts, r)

    def value(self, idx, etas, r):
        return self.rate(self.allocation(idx, etas, r))


def _monotone(history, new_val):
    if history and new_val * ACCEPT_FACTOR < history[-1]:
        raise OptimizationError(
            f"accepted step broke monotonicity: {new_val} after {history[-1]}"
        )
    history.append(float(new_val))


def cdi_perturbation_opt(g, communities, v1, leader_selection=None,
                         detected_leaders=None,
                         max_evals=DEFAULT_EVALS_PER_PHASE, solver="auto",
                         xatol=1e-8, fatol=1e-8) -> OptimizationResult:
    """Stage-two optimisation over power-transformed community vectors.

    Runs `leader_opt` first unless given its output.  Each surviving
    community contributes an input vector holding the first-eigenvector
    entries of its members.  The first vector's power is tuned alone; the
    rest are admitted greedily (tuning the newcomer's weight, then a shared
    power on acceptance), then weights and powers are tuned jointly,
    redundant vectors are dropped when removal costs less than 0.1%, and the
    survivors are tuned jointly once more.
    """
    lap = _as_lap(g)
    v1 = np.asarray(v1, dtype=float)
    if leader_selection is None:
        leader_selection = leader_opt(g, communities, v1,
                                      detected_leaders=detected_leaders,
                                      max_evals=max_evals, solver=solver,
                                      xatol=xatol, fatol=fatol)
    rate = _RateObjective(lap, solver=solver)
    v1pos = np.clip(v1, 0.0, None)

    omegas, ranks = [], []
    for members, rank in zip(leader_selection.communities, leader_selection.ranks):
        w = np.zeros(lap.n)
        w[list(members)] = v1pos[list(members)]
        if w.max() <= 0:
            # No first-eigenvector mass on this community (it lies off the
            # terminal strongly connected parts); fall back to a uniform
            # vector over its members, the small-power limit of any mask.
            w[list(members)] = 1.0
        omegas.append(w)
        ranks.append(rank)

    comb = _Combiner(omegas, rate)
    history: list[float] = []
    converged = True

    def maximize(fn, x0):
        nonlocal converged
        x, val, _, ok = numeric_maximize(fn, x0, max_evals=max_evals,
                                         xatol=xatol, fatol=fatol)
        converged = converged and ok
        return x, val

    # Single-vector power tuning.
    x, lam = maximize(lambda z: comb.value([0], [math.exp(z[0])], [1.0]), [0.0])
    idx = [0]
    etas = [math.exp(x[0])]
    rvec = [1.0]
    _monotone(history, lam)

    # Greedy admission of the remaining community vectors.
    for j in range(1, len(omegas)):
        cand_idx = idx + [j]
        cand_etas = etas + [etas[-1]]
        base_r = rvec + [rvec[-1]]

        def obj_r(z):
            trial = base_r[:-1] + [math.exp(z[0])]
            return comb.value(cand_idx, cand_etas, trial)

        x, val = maximize(obj_r, [math.log(base_r[-1])])
        if val * ACCEPT_FACTOR < lam:
            continue  # admission rejected
        rvec = base_r[:-1] + [math.exp(x[0])]
        idx = cand_idx
        etas = cand_etas

        def obj_shared(z):
            shared = [math.exp(z[0])] * len(idx)
            return comb.value(idx, shared, rvec)

        x, val = maximize(obj_shared, [math.log(etas[0])])
        etas = [math.exp(x[0])] * len(idx)
        lam = val
        _monotone(history, lam)

    def joint(cur_idx, cur_etas, cur_r):
        q = len(cur_idx)

        def obj(z):
            return comb.value(cur_idx, list(np.exp(z[q:])), list(np.exp(z[:q])))

        z0 = np.concatenate([np.log(cur_r), np.log(cur_etas)])
        z, val = maximize(obj, z0)
        return list(np.exp(z[:q])), list(np.exp(z[q:])), val

    # Joint weight/power tuning.
    rvec, etas, lam = joint(idx, etas, rvec)
    _monotone(history, lam)

    # Redundancy pruning: drop a vector when the rate survives within slack.
    for t in range(len(idx)):
        trial = list(rvec)
        trial[t] = math.inf
        if not any(math.isfinite(w) for w in trial):
            continue  # never drop the last vector
        val = comb.value(idx, etas, trial)
        if val * ACCEPT_FACTOR >= lam:
            rvec = trial
            lam = val
            _monotone(history, lam)

    keep = [t for t, w in enumerate(rvec) if math.isfinite(w)]
    idx = [idx[t] for t in keep]
    etas = [etas[t] for t in keep]
    rvec = [rvec[t] for t in keep]

    # Final joint tuning of the survivors.
    rvec, etas, lam = joint(idx, etas, rvec)
    _monotone(history, lam)

    c_final = comb.allocation(idx, etas, rvec)
    _check_allocation(c_final)
    return OptimizationResult(
        c=PerturbationVector(c_final),
        lambda1=float(lam),
        active_communities=tuple(ranks[i] for i in idx),
        evaluations=rate.calls + leader_selection.evaluations,
        converged=converged and leader_selection.converged,
        lambda_history=tuple(history),
    )


def optimize_with_cdi(g, y=3, matrix_kind="laplacian", solver="auto",
                      max_evals=DEFAULT_EVALS_PER_PHASE) -> OptimizationResult:
    """Convenience pipeline: detect communities, then run both stages."""
    from .cdi import cdi as detect

    result = detect(g, y, matrix_kind=matrix_kind, solver=solver)
    v1 = result.coords.e[:, 0]
    return cdi_perturbation_opt(g, result.member_lists(), v1,
                                detected_leaders=[c.leader for c in result.communities],
                                max_evals=max_evals, solver=solver)


def direct_baseline_opt(g, multistart=3, seed=0, max_evals=20000,
                        solver="auto", xatol=1e-8, fatol=1e-8) -> OptimizationResult:
    """Reference optimiser over the full n-dimensional simplex.

    Multistarted projected Nelder-Mead from the uniform allocation plus
    seeded Dirichlet draws; the best run wins.  This is the denominator of
    the consensus speed ratio.
    """
    lap = _as_lap(g)
    n = lap.n
    rate = _RateObjective(lap, solver=solver)
    rng = np.random.default_rng(seed)
    starts = [np.full(n, 1.0 / n)]
    for _ in range(max(0, multistart - 1)):
        starts.append(rng.dirichlet(np.ones(n)))

    def obj(q):
        qc = np.clip(q, 0.0, None)
        tot = qc.sum()
        if tot <= 0:
            return _INVALID
        return rate(qc / tot)

    best_val, best_x, converged = -np.inf, None, True
    for x0 in starts:
        x, val, _, ok = numeric_maximize(obj, x0, max_evals=max_evals,
                                         xatol=xatol, fatol=fatol)
        converged = converged and ok
        if val > best_val:
            best_val, best_x = val, x
    qc = np.clip(best_x, 0.0, None)
    c = qc / qc.sum()
    _check_allocation(c)
    return OptimizationResult(
        c=PerturbationVector(c),
        lambda1=float(best_val),
        active_communities=(),
        evaluations=rate.calls,
        converged=converged,
        lambda_history=(float(best_val),),
    )
