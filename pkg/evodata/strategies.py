"""Delta functions of the evolutionary strategies and their payoff matrices

Genes play either the dominant (dom) or the altruistic (alt) strategy,
organisms either the balanced (bal) or the selfish (sel) one. Every delta
function is averaged over organisms. Wherever a strategy is linear or
quadratic in gamma, the gamma-independent factors are precomputed once:

    DomBal  Delta_j = [A gamma]_j
    AltSel  Delta_j = gamma_j [D gamma]_j,  D = Dg + Dw

The selfish part drops its j-independent term 2 r_i / m, which only shifts
every Delta_j by the same amount and so leaves the rest points unchanged.

"""


import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from evodata.dataset import (DEFAULT_NORM, DEFAULT_PAIRING, FitnessMatrix,
                             KinshipMatrices, Moments, compute_kinship,
                             compute_moments)
from evodata.exceptions import (ConfigurationError, DegenerateDispersionError,
                                DimensionError, DomainError)
from evodata.tables import MIX_KEYS

logger = logging.getLogger(__name__)

EPS_DISPERSION = 1e-12
SIMPLEX_TOL = 1e-9
MIX_TOL = 1e-12


# =============================================================================
# -----------------------------------TYPES-------------------------------------
# =============================================================================
def _weights(pair, experimental: bool) -> tuple:
    if len(pair) != 2:
        raise ConfigurationError(f"Expected a weight pair, got {pair!r}")
    first, second = (np.asarray(w, dtype=float) for w in pair)
    if first.ndim or second.ndim:
        if not experimental:
            raise ConfigurationError(
                "Per-gene mixing weights require experimental=True")
        first, second = np.broadcast_arrays(first, second)
        first, second = first.copy(), second.copy()
        first.setflags(write=False)
        second.setflags(write=False)
    else:
        first, second = float(first), float(second)
    if np.any(np.asarray(first) < 0) or np.any(np.asarray(second) < 0):
        raise ConfigurationError(f"Negative mixing weight in {pair!r}")
    if np.any(np.abs(np.asarray(first) + np.asarray(second) - 1.0) > MIX_TOL):
        raise ConfigurationError(
            f"Mixing weights {pair!r} do not sum to 1")
    return first, second


@dataclass(frozen=True)
class StrategyMix:
    """Convex weights of the gene and organism strategies

    gene is (g:dom, g:alt), organism is (w:bal, w:sel); each pair sums to 1.
    Per-gene weight vectors are accepted only with experimental=True, since
    neither convergence nor persistence is established for them.
    """

    gene: tuple = (1.0, 0.0)
    organism: tuple = (1.0, 0.0)
    experimental: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "gene", _weights(self.gene, self.experimental))
        object.__setattr__(
            self, "organism", _weights(self.organism, self.experimental))

    @classmethod
    def dombal(cls) -> "StrategyMix":
        return cls((1.0, 0.0), (1.0, 0.0))

    @classmethod
    def altsel(cls) -> "StrategyMix":
        return cls((0.0, 1.0), (0.0, 1.0))

    @classmethod
    def from_weights(cls, g_dom: float, w_bal: float) -> "StrategyMix":
        return cls((g_dom, 1.0 - g_dom), (w_bal, 1.0 - w_bal))

    @classmethod
    def parse(cls, text: str) -> "StrategyMix":
        """Parse `g:dom=0.7,w:bal=0.4`; missing complements are filled in"""
        weights = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, sep, value = item.partition("=")
            key = key.strip().lower()
            if not sep or key not in MIX_KEYS:
                raise ConfigurationError(
                    f"Invalid mix item {item!r} (keys: {', '.join(MIX_KEYS)})")
            try:
                weights[key] = float(value)
            except ValueError:
                raise ConfigurationError(
                    f"Invalid mix weight {value!r} for {key}") from None
        gene = _complete(weights, "g:dom", "g:alt")
        organism = _complete(weights, "w:bal", "w:sel")
        return cls(gene, organism)

    @property
    def g_dom(self):
        return self.gene[0]

    @property
    def g_alt(self):
        return self.gene[1]

    @property
    def w_bal(self):
        return self.organism[0]

    @property
    def w_sel(self):
        return self.organism[1]

    @property
    def per_gene(self) -> bool:
        return isinstance(self.g_dom, np.ndarray)

    @property
    def uses_payoff(self) -> bool:
        return bool(np.any(np.asarray(self.g_alt) > 0)
                    or np.any(np.asarray(self.w_sel) > 0))

    @property
    def name(self) -> str:
        if not self.per_gene:
            if self.g_dom == 1.0 and self.w_bal == 1.0:
                return "dombal"
            if self.g_alt == 1.0 and self.w_sel == 1.0:
                return "altsel"
        return "mixed"

    def check(self, m: int):
        if self.per_gene and np.shape(self.g_dom) != (m,):
            raise DimensionError(
                f"Per-gene weights have length {np.size(self.g_dom)}, "
                f"expected {m}"
            )

    def as_dict(self) -> dict:
        def plain(w):
            return w.tolist() if isinstance(w, np.ndarray) else w
        return {
            "g:dom": plain(self.g_dom),
            "g:alt": plain(self.g_alt),
            "w:bal": plain(self.w_bal),
            "w:sel": plain(self.w_sel),
            "experimental": self.experimental,
        }


def _complete(weights: dict, first: str, second: str) -> tuple:
    if first in weights and second in weights:
        return weights[first], weights[second]
    if first in weights:
        return weights[first], 1.0 - weights[first]
    if second in weights:
        return 1.0 - weights[second], weights[second]
    raise ConfigurationError(f"Mix needs {first} or {second}")


@dataclass(frozen=True)
class PayoffBundle:
    dombal_a: np.ndarray
    altsel_dg: np.ndarray
    altsel_dw: np.ndarray
    altsel_d: np.ndarray

    @property
    def m(self) -> int:
        return self.dombal_a.shape[0]


class DeltaComponents(NamedTuple):
    g_dom: np.ndarray
    g_alt: np.ndarray | None
    w_bal: np.ndarray
    w_sel: np.ndarray | None


# =============================================================================
# ----------------------------------HELPERS------------------------------------
# =============================================================================
def _values(phi) -> np.ndarray:
    if isinstance(phi, FitnessMatrix):
        return phi.values
    return np.asarray(phi, dtype=float)


def check_simplex(gamma, m: int) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (m,):
        raise DimensionError(
            f"gamma has shape {gamma.shape}, expected ({m},)")
    if np.any(gamma < 0) or abs(gamma.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"gamma is not on the simplex: sum={gamma.sum()}")
    return gamma


def _check_dispersion(moments: Moments):
    if moments.gene_dispersion <= EPS_DISPERSION:
        raise DegenerateDispersionError(
            "Gene dispersion is zero (all column means equal); AltSel is "
            "undefined, use the dombal strategy instead"
        )
    if moments.organism_dispersion <= EPS_DISPERSION:
        raise DegenerateDispersionError(
            "Organism dispersion is zero (all harmonic organism fitness "
            "values equal); AltSel is undefined, use the dombal strategy "
            "instead"
        )


# =============================================================================
# ---------------------------------DOMBAL--------------------------------------
# =============================================================================
def delta_dombal(gamma, moments: Moments) -> np.ndarray:
    means = moments.column_means
    m = means.shape[0]
    gamma = check_simplex(gamma, m)
    return -gamma * (means + 0.5) + (2.0 / m) * (gamma @ means)


def delta_explicit_dombal(gamma, phi) -> np.ndarray:
    """DomBal delta summed cell by cell over organisms

    The balanced term is evaluated as -2 (gamma_j phi_ij - r_i / m), which
    is defined for r_i = 0.
    """
    values = _values(phi)
    n, m = values.shape
    gamma = check_simplex(gamma, m)
    r = values @ gamma
    dom = gamma * (values - 0.5)
    bal = -2.0 * (gamma * values - r[:, None] / m)
    return (dom + bal).sum(axis=0) / n


def build_dombal_payoff(moments: Moments) -> np.ndarray:
    means = moments.column_means
    m = means.shape[0]
    a = np.tile((2.0 / m) * means, (m, 1))
    a[np.diag_indices(m)] -= means + 0.5
    a.setflags(write=False)
    return a


# =============================================================================
# ---------------------------------ALTSEL--------------------------------------
# =============================================================================
def build_altsel_payoff(
    phi,
    moments: Moments,
    kinship: KinshipMatrices,
) -> PayoffBundle:
    """Precompute Dg, Dw and D = Dg + Dw

    Dg[j, l] = kg[j, l] / (n nu_g) sum_i (phi_ij - 1/2)(phi_il - phi_ij)
    Dw[j, l] = -2 / (n**2 nu_w) sum_{i,t} phi_ij kw[i, t] (phi_il - phi_tl)

    Raises
    ------
    DegenerateDispersionError
        If either dispersion is below EPS_DISPERSION
    """
    _check_dispersion(moments)
    values = _values(phi)
    n, _ = values.shape

    centered = values - 0.5
    c = centered.T @ values
    dg = kinship.gene * (c - np.diag(c)[:, None])
    dg /= n * moments.gene_dispersion
    np.fill_diagonal(dg, 0.0)

    # sum_t kw[i, t] (phi_il - phi_tl) is the graph Laplacian of kw applied
    # to column l
    laplacian = np.diag(kinship.organism.sum(axis=1)) - kinship.organism
    dw = values.T @ (laplacian @ values)
    dw = (dw + dw.T) / 2
    dw *= -2.0 / (n * n * moments.organism_dispersion)

    d = dg + dw
    for matrix in (dg, dw, d):
        matrix.setflags(write=False)
    return PayoffBundle(
        dombal_a=build_dombal_payoff(moments),
        altsel_dg=dg,
        altsel_dw=dw,
        altsel_d=d,
    )


def delta_altsel(gamma, bundle: PayoffBundle) -> np.ndarray:
    gamma = check_simplex(gamma, bundle.m)
    return gamma * (bundle.altsel_d @ gamma)


def delta_explicit_altsel(
    gamma,
    phi,
    moments: Moments,
    kinship: KinshipMatrices,
) -> np.ndarray:
    """AltSel delta evaluated organism by organism, without the payoffs

    Slow; meant for diagnostics on small matrices.
    """
    _check_dispersion(moments)
    values = _values(phi)
    n, m = values.shape
    gamma = check_simplex(gamma, m)
    kg, kw = kinship.gene, kinship.organism
    nu_g, nu_w = moments.gene_dispersion, moments.organism_dispersion
    r = values @ gamma

    delta = np.zeros(m)
    for j in range(m):
        total = 0.0
        for i in range(n):
            altruism = sum(
                gamma[l] * kg[j, l] * (values[i, l] - values[i, j])
                for l in range(m) if l != j
            ) / nu_g
            selfishness = sum(
                kw[i, t] * (r[i] - r[t]) for t in range(n) if t != i
            ) / (n * nu_w)
            total += gamma[j] * (values[i, j] - 0.5) * altruism
            total += -2.0 * gamma[j] * values[i, j] * selfishness
        delta[j] = total / n
    return delta


# =============================================================================
# ----------------------------------MIXED--------------------------------------
# =============================================================================
def delta_components(
    gamma,
    phi,
    moments: Moments,
    bundle: PayoffBundle | None = None,
) -> DeltaComponents:
    """The four pure strategy deltas at gamma, each averaged over organisms"""
    means = moments.column_means
    m = means.shape[0]
    gamma = check_simplex(gamma, m)
    if _values(phi).shape[1] != m:
        raise DimensionError("fitness matrix and moments disagree on m")
    g_dom = gamma * (means - 0.5)
    w_bal = -2.0 * gamma * means + (2.0 / m) * (gamma @ means)
    g_alt = w_sel = None
    if bundle is not None:
        g_alt = gamma * (bundle.altsel_dg @ gamma)
        w_sel = gamma * (bundle.altsel_dw @ gamma)
    return DeltaComponents(g_dom, g_alt, w_bal, w_sel)


def delta_mixed(
    gamma,
    phi,
    moments: Moments,
    bundle: PayoffBundle | None,
    mix: StrategyMix,
) -> np.ndarray:
    mix.check(moments.m)
    if mix.uses_payoff and bundle is None:
        raise ConfigurationError(
            "Mix has altruistic or selfish weight but no payoff bundle")
    parts = delta_components(gamma, phi, moments, bundle)
    delta = mix.g_dom * parts.g_dom + mix.w_bal * parts.w_bal
    if parts.g_alt is not None:
        delta = delta + mix.g_alt * parts.g_alt + mix.w_sel * parts.w_sel
    return delta


def organism_fitness(gamma, phi) -> np.ndarray:
    values = _values(phi)
    gamma = check_simplex(gamma, values.shape[1])
    return values @ gamma


# =============================================================================
# -----------------------------------GAME--------------------------------------
# =============================================================================
class Game:
    """A fitness matrix bound to a strategy mix

    Precomputes moments and, when the mix needs them, kinship and the AltSel
    payoff bundle. `delta(gamma)` is what the replicator engine iterates.
    """

    def __init__(
        self,
        phi: FitnessMatrix,
        mix: StrategyMix | None = None,
        *,
        norm: str = DEFAULT_NORM,
        pairing: str = DEFAULT_PAIRING,
        moments: Moments | None = None,
        kinship: KinshipMatrices | None = None,
        bundle: PayoffBundle | None = None,
    ):
        self.phi = phi
        self.mix = mix if mix is not None else StrategyMix.dombal()
        self.mix.check(phi.m)
        self.norm = norm
        self.pairing = pairing
        self.moments = moments if moments is not None else compute_moments(
            phi, pairing)
        if self.mix.uses_payoff and bundle is None:
            if kinship is None:
                kinship = compute_kinship(phi, norm)
            bundle = build_altsel_payoff(phi, self.moments, kinship)
        self.kinship = kinship
        self.bundle = bundle
        self.name = self.mix.name

    @classmethod
    def from_name(
        cls,
        phi: FitnessMatrix,
        strategy: str,
        mix: StrategyMix | None = None,
        **kwargs,
    ) -> "Game":
        if strategy == "dombal":
            mix = StrategyMix.dombal()
        elif strategy == "altsel":
            mix = StrategyMix.altsel()
        elif strategy == "mixed":
            if mix is None:
                raise ConfigurationError("Strategy 'mixed' needs weights")
        else:
            raise ConfigurationError(f"Unknown strategy {strategy!r}")
        return cls(phi, mix, **kwargs)

    def with_mix(self, mix: StrategyMix) -> "Game":
        return Game(
            self.phi, mix,
            norm=self.norm, pairing=self.pairing,
            moments=self.moments, kinship=self.kinship, bundle=self.bundle,
        )

    @property
    def m(self) -> int:
        return self.phi.m

    @property
    def genes(self) -> tuple[str, ...]:
        return self.phi.columns

    @property
    def monitor_persistence(self) -> bool:
        return self.mix.experimental

    def delta(self, gamma) -> np.ndarray:
        if self.name == "dombal":
            return delta_dombal(gamma, self.moments)
        if self.name == "altsel":
            return delta_altsel(gamma, self.bundle)
        return delta_mixed(
            gamma, self.phi, self.moments, self.bundle, self.mix)
