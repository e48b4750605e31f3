"""Discrete replicator iteration and closed-form rest points

    gamma_j' = gamma_j (1 + h Delta_j) / sum_l gamma_l (1 + h Delta_l)

At a rest point every Delta_j on the support of gamma equals the gamma
weighted mean delta (Bishop-Cannings); the deviation from that equality is
recorded as a certificate next to the iterate-difference stop rule.

"""


import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from evodata.dataset import Moments
from evodata.exceptions import (ConfigurationError, DimensionError,
                                StepSizeError)
from evodata.strategies import check_simplex, delta_dombal

logger = logging.getLogger(__name__)

MAX_HALVINGS = 10
BC_TOLERANCE = 1e-8
PERSISTENCE_THRESHOLD = 1e-6
SUPPORT_THRESHOLD = 1e-14
RANK_RTOL = 1e-10
TAIL_WINDOW = 10
UNIQUENESS_TOL = 1e-6


class Strategy(Protocol):
    """Anything the engine can iterate: a size and a delta function"""

    m: int

    def delta(self, gamma: np.ndarray) -> np.ndarray:
        ...


# =============================================================================
# -----------------------------------TYPES-------------------------------------
# =============================================================================
@dataclass(frozen=True)
class ReplicatorConfig:
    step_size: float = 0.5
    max_iterations: int = 10000
    convergence_tol: float = 1e-10
    initial_gamma: np.ndarray | None = None
    record_trajectory: bool = True
    bc_tol: float = BC_TOLERANCE
    max_halvings: int = MAX_HALVINGS

    def __post_init__(self):
        if not 0.0 < self.step_size < 1.0:
            raise ConfigurationError(
                f"Invalid argument step_size={self.step_size} (need 0<h<1)")
        if self.max_iterations < 1:
            raise ConfigurationError(
                f"Invalid argument max_iterations={self.max_iterations}")
        if self.convergence_tol <= 0:
            raise ConfigurationError(
                f"Invalid argument convergence_tol={self.convergence_tol}")
        if self.initial_gamma is not None:
            gamma = np.array(self.initial_gamma, dtype=float)
            if gamma.ndim != 1 or not np.all(np.isfinite(gamma)):
                raise ConfigurationError(
                    f"initial_gamma must be a finite vector, got {gamma}")
            if np.any(gamma <= 0):
                raise ConfigurationError(
                    "initial_gamma must have all entries > 0")
            if abs(gamma.sum() - 1.0) > 1e-9:
                raise ConfigurationError(
                    f"initial_gamma sums to {gamma.sum()}, not 1")
            gamma.setflags(write=False)
            object.__setattr__(self, "initial_gamma", gamma)

    def start(self, m: int) -> np.ndarray:
        if self.initial_gamma is None:
            return np.full(m, 1.0 / m)
        if self.initial_gamma.shape != (m,):
            raise DimensionError(
                f"initial_gamma has {self.initial_gamma.size} entries, "
                f"expected {m}"
            )
        return self.initial_gamma.copy()


class Iterate(NamedTuple):
    k: int
    gamma: np.ndarray
    delta: np.ndarray


@dataclass
class Trajectory:
    iterates: list[Iterate] = field(default_factory=list)
    min_gamma_seen: np.ndarray | None = None

    def record(self, k: int, gamma: np.ndarray, delta: np.ndarray,
               keep: bool = True):
        if self.min_gamma_seen is None:
            self.min_gamma_seen = gamma.copy()
        else:
            self.min_gamma_seen = np.minimum(self.min_gamma_seen, gamma)
        if keep:
            self.iterates.append(Iterate(k, gamma, delta))

    @property
    def gammas(self) -> np.ndarray:
        return np.array([it.gamma for it in self.iterates])

    def rows(self, genes: Sequence[str]):
        """(iteration, gene label, gamma) rows in iteration order"""
        for it in self.iterates:
            for label, value in zip(genes, it.gamma):
                yield it.k, label, value


@dataclass(frozen=True)
class RestPoint:
    gamma: np.ndarray
    bc_residual: float
    iterations: int
    converged: bool
    method: str = "iterated"
    genes: tuple[str, ...] = ()
    tail: str = "converged"
    halvings: int = 0

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=float)
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        if not self.genes:
            object.__setattr__(
                self, "genes", tuple(f"g{j + 1}" for j in range(gamma.size)))

    @property
    def persistent(self) -> bool:
        return bool(self.gamma.min() > PERSISTENCE_THRESHOLD)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "bc_residual": self.bc_residual,
            "persistent": self.persistent,
            "tail": self.tail,
            "halvings": self.halvings,
            "gamma": dict(zip(self.genes, self.gamma.tolist())),
        }


# =============================================================================
# ------------------------------------STEP-------------------------------------
# =============================================================================
def admissible_step_size(
    delta: np.ndarray,
    h: float,
    max_halvings: int = MAX_HALVINGS,
) -> float:
    """Largest h / 2**k (k <= max_halvings) with 1 + h Delta_j > 0 for all j"""
    if not np.all(np.isfinite(delta)):
        raise StepSizeError(f"Strategy produced non-finite deltas: {delta}")
    for _ in range(max_halvings + 1):
        if np.all(1.0 + h * delta > 0.0):
            return h
        h /= 2
    raise StepSizeError(
        f"1 + h*Delta stays nonpositive after {max_halvings} halvings "
        f"(min Delta = {delta.min():g})"
    )


def _apply(gamma: np.ndarray, delta: np.ndarray, h: float) -> np.ndarray:
    growth = gamma * (1.0 + h * delta)
    return growth / growth.sum()


def step(
    gamma,
    delta,
    h: float,
    max_halvings: int = MAX_HALVINGS,
) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if gamma.shape != delta.shape:
        raise DimensionError(
            f"gamma {gamma.shape} and delta {delta.shape} differ in shape")
    return _apply(gamma, delta, admissible_step_size(delta, h, max_halvings))


def bc_residual(gamma, delta) -> float:
    """max_j |Delta_j - sum_l gamma_l Delta_l| over the support of gamma"""
    gamma = np.asarray(gamma, dtype=float)
    delta = np.asarray(delta, dtype=float)
    support = gamma > SUPPORT_THRESHOLD
    if not support.any():
        return 0.0
    mean = gamma @ delta
    return float(np.max(np.abs(delta[support] - mean)))


def classify_tail(window: Sequence[np.ndarray]) -> str:
    """Label the last iterates of an unconverged run

    "oscillating" when the iterates wander further than their net drift,
    "stalled" otherwise.
    """
    if len(window) < 2:
        return "stalled"
    window = np.asarray(window)
    spread = np.max(window.max(axis=0) - window.min(axis=0))
    drift = np.max(np.abs(window[-1] - window[0]))
    return "oscillating" if spread > 2.0 * drift else "stalled"


# =============================================================================
# -------------------------------------RUN-------------------------------------
# =============================================================================
def run(
    game: Strategy,
    config: ReplicatorConfig | None = None,
) -> tuple[Trajectory, RestPoint]:
    """Iterate the replicator equation until it comes to rest

    Stops when max_j |gamma' - gamma| < convergence_tol and the
    Bishop-Cannings residual is below bc_tol, or after max_iterations.
    Non-convergence is reported in the rest point, never raised.

    Raises
    ------
    StepSizeError
        If a step stays inadmissible after all halvings
    """
    config = config or ReplicatorConfig()
    m = game.m
    gamma = check_simplex(config.start(m), m)
    genes = tuple(getattr(game, "genes", ()) or ())
    monitor = getattr(game, "monitor_persistence", False)

    trajectory = Trajectory()
    tail = deque(maxlen=TAIL_WINDOW)
    delta = game.delta(gamma)
    trajectory.record(0, gamma, delta, config.record_trajectory)
    tail.append(gamma)

    converged = False
    halvings = 0
    warned = False
    residual = bc_residual(gamma, delta)
    k = 0
    for k in range(1, config.max_iterations + 1):
        h = admissible_step_size(delta, config.step_size, config.max_halvings)
        if h < config.step_size:
            halvings += 1
            logger.debug("Iteration %d: step size halved to %g", k, h)
        new = _apply(gamma, delta, h)
        change = np.max(np.abs(new - gamma))
        gamma = new
        delta = game.delta(gamma)
        trajectory.record(k, gamma, delta, config.record_trajectory)
        tail.append(gamma)

        if monitor and not warned and gamma.min() < PERSISTENCE_THRESHOLD:
            warned = True
            logger.warning(
                "Iteration %d: gene %d fell below the persistence "
                "threshold (%g)", k, int(np.argmin(gamma)), gamma.min())

        if change < config.convergence_tol:
            residual = bc_residual(gamma, delta)
            if residual < config.bc_tol:
                converged = True
                break

    if halvings:
        logger.warning("Step size was halved in %d of %d iterations",
                       halvings, k)
    if converged:
        label = "converged"
        logger.info("Converged after %d iterations (residual %.3g)",
                    k, residual)
    else:
        residual = bc_residual(gamma, delta)
        label = classify_tail(list(tail))
        logger.warning(
            "No convergence after %d iterations (%s, residual %.3g)",
            k, label, residual)

    rest_point = RestPoint(
        gamma=gamma,
        bc_residual=residual,
        iterations=k,
        converged=converged,
        method="iterated",
        genes=genes,
        tail=label,
        halvings=halvings,
    )
    return trajectory, rest_point


class MultiStartReport(NamedTuple):
    rest_points: list[RestPoint]
    spread: float
    unique: bool


def random_interior(m: int, rng: np.random.Generator) -> np.ndarray:
    gamma = rng.uniform(0.05, 1.0, size=m)
    return gamma / gamma.sum()


def multi_start(
    game: Strategy,
    starts: int = 10,
    seed: int | None = None,
    config: ReplicatorConfig | None = None,
    workers: int = 1,
    tol: float = UNIQUENESS_TOL,
) -> MultiStartReport:
    """Run from several random interior starts and compare the rest points

    The spread is the largest per-gene disagreement between converged runs.
    Disagreement above `tol` is logged as an anomaly, not raised.
    """
    config = config or ReplicatorConfig()
    rng = np.random.default_rng(seed)
    configs = [
        ReplicatorConfig(
            step_size=config.step_size,
            max_iterations=config.max_iterations,
            convergence_tol=config.convergence_tol,
            initial_gamma=random_interior(game.m, rng),
            record_trajectory=False,
            bc_tol=config.bc_tol,
            max_halvings=config.max_halvings,
        )
        for _ in range(starts)
    ]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        rest_points = [rp for _, rp in executor.map(
            lambda c: run(game, c), configs)]

    finals = np.array([rp.gamma for rp in rest_points if rp.converged])
    spread = 0.0
    if len(finals) > 1:
        spread = float(np.max(finals.max(axis=0) - finals.min(axis=0)))
    unique = spread <= tol
    if not unique:
        logger.warning(
            "Multi-start runs disagree by %.3g (> %g): rest point is not "
            "unique for this data", spread, tol)
    return MultiStartReport(rest_points, spread, unique)


# =============================================================================
# --------------------------------CLOSED FORMS---------------------------------
# =============================================================================
def dombal_rest_point(
    moments: Moments,
    genes: Sequence[str] = (),
) -> RestPoint:
    """gamma_j proportional to 1 / (mean_j + 1/2)"""
    weights = 1.0 / (moments.column_means + 0.5)
    gamma = weights / weights.sum()
    return RestPoint(
        gamma=gamma,
        bc_residual=bc_residual(gamma, delta_dombal(gamma, moments)),
        iterations=0,
        converged=True,
        method="closed_form_dombal",
        genes=tuple(genes),
    )


def lv_map(a) -> tuple[np.ndarray, np.ndarray]:
    """Map a linear payoff matrix onto the equivalent Lotka-Volterra system

    Returns A' (m-1 x m-1) with a'_jl = a_jl - a_ml and b with
    b_j = a_jm - a_mm.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"Payoff matrix must be square, got {a.shape}")
    m = a.shape[0]
    if m < 2:
        raise DimensionError("Payoff matrix needs at least 2 genes")
    a_prime = a[:m - 1, :m - 1] - a[m - 1, :m - 1]
    b = a[:m - 1, m - 1] - a[m - 1, m - 1]
    return a_prime, b


def lv_fixed_point(a) -> np.ndarray | None:
    """Interior rest point of Delta = A gamma via A'y = -b, or None

    None when A' is singular or the solution leaves the simplex.
    """
    a_prime, b = lv_map(a)
    size = a_prime.shape[0]
    rank = rank_of(a_prime)
    if rank < size:
        logger.info("A' is singular (rank %d of %d); no LV fixed point",
                    rank, size)
        return None
    y = np.linalg.solve(a_prime, -b)
    if np.any(y <= 0):
        logger.info("LV solution leaves the simplex: y=%s", y)
        return None
    y = np.append(y, 1.0)
    return y / y.sum()


def lv_rest_point(a, genes: Sequence[str] = ()) -> RestPoint | None:
    gamma = lv_fixed_point(a)
    if gamma is None:
        return None
    return RestPoint(
        gamma=gamma,
        bc_residual=bc_residual(gamma, np.asarray(a, dtype=float) @ gamma),
        iterations=0,
        converged=True,
        method="lv_linear",
        genes=tuple(genes),
    )


def rank_of(matrix) -> int:
    """Numerical rank: singular values above RANK_RTOL times the largest"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0
    singular = np.linalg.svd(matrix, compute_uv=False)
    if singular[0] == 0:
        return 0
    return int(np.count_nonzero(singular > RANK_RTOL * singular[0]))


def check_payoff_rank(d) -> int:
    """Rank of the AltSel payoff D; full rank gives a unique rest point"""
    d = np.asarray(d, dtype=float)
    rank = rank_of(d)
    if rank < d.shape[0]:
        logger.warning(
            "Payoff matrix D has rank %d < %d: the AltSel rest point may not "
            "be unique", rank, d.shape[0])
    return rank


class LinearGame:
    """Linear replicator system Delta = A gamma"""

    name = "linear"
    monitor_persistence = False

    def __init__(self, a, genes: Sequence[str] = ()):
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(
                f"Payoff matrix must be square, got {a.shape}")
        a.setflags(write=False)
        self.a = a
        self.m = a.shape[0]
        self.genes = tuple(genes)

    def delta(self, gamma) -> np.ndarray:
        return self.a @ check_simplex(gamma, self.m)
