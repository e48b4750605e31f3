"""Rankings, delivery distribution, persistence and fitting of mixes"""


import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from evodata.dataset import DEFAULT_NORM, DEFAULT_PAIRING, FitnessMatrix
from evodata.engine import (PERSISTENCE_THRESHOLD, ReplicatorConfig,
                            RestPoint, Trajectory, run)
from evodata.exceptions import (DegenerateDispersionError,
                                DegenerateDistributionError, DimensionError,
                                FitError, NotConvergedError, StepSizeError)
from evodata.strategies import Game, StrategyMix, organism_fitness

logger = logging.getLogger(__name__)

TIE_POLICY = "original index"


class RankEntry(NamedTuple):
    label: str
    score: float
    rank: int


@dataclass(frozen=True)
class Ranking:
    entries: tuple[RankEntry, ...]
    tie_policy: str = TIE_POLICY

    @property
    def labels(self) -> list[str]:
        return [entry.label for entry in self.entries]

    def rows(self):
        for entry in self.entries:
            yield entry.label, entry.score, entry.rank


@dataclass(frozen=True)
class DistributionPlan:
    labels: tuple[str, ...]
    shares: np.ndarray
    deviations: np.ndarray

    def rows(self):
        for label, share, deviation in zip(
                self.labels, self.shares, self.deviations):
            yield label, share, deviation


@dataclass(frozen=True)
class PersistenceReport:
    genes: tuple[str, ...]
    min_gamma: np.ndarray
    final_gamma: np.ndarray
    persistent: bool
    threshold: float = PERSISTENCE_THRESHOLD

    def as_dict(self) -> dict:
        return {
            "persistent": self.persistent,
            "threshold": self.threshold,
            "genes": {
                gene: {"min": low, "final": final}
                for gene, low, final in zip(
                    self.genes, self.min_gamma.tolist(),
                    self.final_gamma.tolist())
            },
        }


def _require_converged(rest_point: RestPoint):
    if not rest_point.converged:
        raise NotConvergedError(
            f"Rest point did not converge ({rest_point.tail} after "
            f"{rest_point.iterations} iterations, residual "
            f"{rest_point.bc_residual:.3g})"
        )


def rank_scores(labels: Sequence[str], scores) -> Ranking:
    """Order by score descending; ties keep the original order"""
    scores = np.asarray(scores, dtype=float)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return Ranking(tuple(
        RankEntry(labels[i], float(scores[i]), rank)
        for rank, i in enumerate(order, start=1)
    ))


def rank_genes(rest_point: RestPoint) -> Ranking:
    _require_converged(rest_point)
    return rank_scores(rest_point.genes, rest_point.gamma)


def rank_organisms(rest_point: RestPoint, phi: FitnessMatrix) -> Ranking:
    _require_converged(rest_point)
    return rank_scores(phi.rows, organism_fitness(rest_point.gamma, phi))


def distribution(
    rest_point: RestPoint,
    phi: FitnessMatrix,
) -> DistributionPlan:
    """Delivery shares r_i / sum r and deviations n * share_i - 1"""
    _require_converged(rest_point)
    r = organism_fitness(rest_point.gamma, phi)
    total = r.sum()
    if total <= 0:
        raise DegenerateDistributionError(
            "All organism fitness values are zero; nothing to distribute")
    shares = r / total
    return DistributionPlan(
        labels=phi.rows,
        shares=shares,
        deviations=phi.n * shares - 1.0,
    )


def persistence_report(
    trajectory: Trajectory,
    rest_point: RestPoint,
) -> PersistenceReport:
    final = rest_point.gamma
    low = trajectory.min_gamma_seen
    if low is None:
        low = final
    return PersistenceReport(
        genes=rest_point.genes,
        min_gamma=np.minimum(low, final),
        final_gamma=final,
        persistent=bool(np.all(final > PERSISTENCE_THRESHOLD)),
    )


def organism_trajectory(trajectory: Trajectory, phi: FitnessMatrix):
    """(iteration, organism label, r) rows for every recorded iterate"""
    for it in trajectory.iterates:
        for label, value in zip(phi.rows, phi.values @ it.gamma):
            yield it.k, label, value


# =============================================================================
# ----------------------------------FITTING------------------------------------
# =============================================================================
@dataclass(frozen=True)
class FitConfig:
    resolution: float = 0.1
    engine: ReplicatorConfig = field(default_factory=ReplicatorConfig)
    workers: int = 1
    norm: str = DEFAULT_NORM
    pairing: str = DEFAULT_PAIRING
    grid: tuple[tuple[float, float], ...] | None = None

    def cells(self) -> list[tuple[float, float]]:
        """(g:dom, w:bal) cells, DomBal-heavier cells first"""
        if self.grid is not None:
            cells = [tuple(map(float, cell)) for cell in self.grid]
        else:
            steps = int(round(1.0 / self.resolution))
            values = np.round(np.linspace(0.0, 1.0, steps + 1), 12)
            cells = [(float(d), float(b)) for d in values for b in values]
        return sorted(cells, key=lambda c: (-(c[0] + c[1]), -c[0]))


def _rescale(x: np.ndarray) -> np.ndarray:
    low, high = x.min(), x.max()
    if high == low:
        return np.zeros_like(x)
    return (x - low) / (high - low)


def _prepare(training_sets, config: FitConfig) -> list[tuple]:
    if not training_sets:
        raise FitError("fit_mix needs at least one training set")
    prepared = []
    for index, (phi, target) in enumerate(training_sets):
        target = np.asarray(target, dtype=float)
        if target.shape != (phi.n,):
            raise DimensionError(
                f"Training set {index}: target has {target.size} entries, "
                f"fitness matrix has {phi.n} organisms"
            )
        try:
            base = Game(phi, StrategyMix.altsel(),
                        norm=config.norm, pairing=config.pairing)
        except DegenerateDispersionError:
            base = Game(phi, StrategyMix.dombal(),
                        norm=config.norm, pairing=config.pairing)
        prepared.append((base, _rescale(target)))
    return prepared


def _score(
    prepared,
    mix: StrategyMix,
    engine: ReplicatorConfig,
) -> float | None:
    errors = []
    for base, target in prepared:
        try:
            game = base.with_mix(mix)
            _, rest_point = run(game, engine)
        except (DegenerateDispersionError, StepSizeError) as e:
            logger.warning("Skipping mix %s: %s", mix.as_dict(), e)
            return None
        if not rest_point.converged:
            logger.warning("Skipping mix %s: no convergence", mix.as_dict())
            return None
        r = organism_fitness(rest_point.gamma, game.phi)
        errors.append(float(np.mean((_rescale(r) - target) ** 2)))
    return float(np.mean(errors))


def evaluate_mix(
    training_sets: Sequence[tuple[FitnessMatrix, Sequence[float]]],
    mix: StrategyMix,
    config: FitConfig | None = None,
) -> float | None:
    """Mean squared error of min-max rescaled fitness against targets

    None when the mix does not converge on some training set.
    """
    config = config or FitConfig()
    prepared = _prepare(training_sets, config)
    return _score(prepared, mix, config.engine)


def fit_mix(
    training_sets: Sequence[tuple[FitnessMatrix, Sequence[float]]],
    config: FitConfig | None = None,
) -> StrategyMix:
    """Grid search over (g:dom, w:bal) minimizing the averaged MSE

    Cells that fail to converge are skipped. Ties go to the cell listed
    first, i.e. the DomBal-heavier one.

    Raises
    ------
    FitError
        If no cell converges on every training set
    """
    config = config or FitConfig()
    prepared = _prepare(training_sets, config)
    mixes = [StrategyMix.from_weights(d, b) for d, b in config.cells()]

    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as executor:
        scores = list(executor.map(
            lambda mix: _score(prepared, mix, config.engine), mixes))

    best, best_score = None, np.inf
    for mix, score in zip(mixes, scores):
        if score is not None and score < best_score:
            best, best_score = mix, score
    if best is None:
        raise FitError(f"None of the {len(mixes)} grid cells converged")
    logger.info("Best mix %s with MSE %.3g", best.as_dict(), best_score)
    return best


def report_bundle(rest_point: RestPoint, phi: FitnessMatrix) -> dict:
    """Both rankings and the distribution plan as one JSON-ready record"""
    plan = distribution(rest_point, phi)
    return {
        "method": rest_point.method,
        "genes": [e._asdict() for e in rank_genes(rest_point).entries],
        "organisms": [
            e._asdict() for e in rank_organisms(rest_point, phi).entries],
        "distribution": [
            {"label": label, "share": share, "deviation": deviation}
            for label, share, deviation in zip(
                plan.labels, plan.shares.tolist(), plan.deviations.tolist())
        ],
        "tie_policy": TIE_POLICY,
    }
