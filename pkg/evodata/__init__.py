"""Evolutionary games played on tabular data"""

from pathlib import Path

from evodata import analysis, dataset, engine
from evodata.strategies import Game, StrategyMix, build_dombal_payoff

__version__ = "0.1.0"


def load(input_path: Path, schema_path: Path | None = None):
    """Read a CSV table and turn it into a sanitized fitness matrix

    Parameters
    ----------
    input_path : Path
        CSV file with a header row
    schema_path : Path, optional
        Schema sidecar, by default the input path with a `.schema` suffix

    Returns
    -------
    FitnessMatrix
    """
    input_path = Path(input_path)
    if schema_path is None:
        schema_path = input_path.with_suffix(".schema")
    schema = dataset.load_schema(schema_path)
    raw = dataset.load_table(input_path, schema)
    return dataset.sanitize(dataset.normalize(raw, schema))


def game(
    phi,
    strategy: str = "dombal",
    mix: StrategyMix | None = None,
    norm: str = dataset.DEFAULT_NORM,
    pairing: str = dataset.DEFAULT_PAIRING,
) -> Game:
    g = Game.from_name(phi, strategy, mix, norm=norm, pairing=pairing)
    if g.bundle is not None and strategy == "altsel":
        engine.check_payoff_rank(g.bundle.altsel_d)
    return g


def solve(
    phi,
    strategy: str = "dombal",
    mix: StrategyMix | None = None,
    config: engine.ReplicatorConfig | None = None,
    norm: str = dataset.DEFAULT_NORM,
    pairing: str = dataset.DEFAULT_PAIRING,
):
    """Iterate a strategy on `phi` until it comes to rest

    Parameters
    ----------
    phi : FitnessMatrix
        Normalized fitness matrix
    strategy : str, optional
        One of "dombal", "altsel" or "mixed", by default "dombal"
    mix : StrategyMix, optional
        Weights, required for "mixed"
    config : ReplicatorConfig, optional
        Engine settings, by default ReplicatorConfig()

    Returns
    -------
    tuple of (Trajectory, RestPoint)
    """
    g = game(phi, strategy, mix, norm, pairing)
    return engine.run(g, config)


def rank(phi, axis: str = "organisms", **kwargs) -> analysis.Ranking:
    _, rest_point = solve(phi, **kwargs)
    if axis == "genes":
        return analysis.rank_genes(rest_point)
    if axis == "organisms":
        return analysis.rank_organisms(rest_point, phi)
    raise ValueError(f"Invalid argument axis={axis}")


def distribute(phi, **kwargs) -> analysis.DistributionPlan:
    _, rest_point = solve(phi, **kwargs)
    return analysis.distribution(rest_point, phi)


def payoff(
    phi,
    strategy: str = "dombal",
    norm: str = dataset.DEFAULT_NORM,
    pairing: str = dataset.DEFAULT_PAIRING,
) -> dict:
    """The precomputed payoff matrices of a pure strategy, by name

    "A" for DomBal; "Dg", "Dw" and "D" for AltSel; all four for a mix.
    """
    if strategy == "dombal":
        moments = dataset.compute_moments(phi, pairing)
        return {"A": build_dombal_payoff(moments)}
    if strategy == "altsel":
        bundle = game(phi, "altsel", norm=norm, pairing=pairing).bundle
        return {
            "Dg": bundle.altsel_dg,
            "Dw": bundle.altsel_dw,
            "D": bundle.altsel_d,
        }
    if strategy == "mixed":
        return {
            **payoff(phi, "dombal", norm, pairing),
            **payoff(phi, "altsel", norm, pairing),
        }
    raise ValueError(f"Invalid argument strategy={strategy}")
