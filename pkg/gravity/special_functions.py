"""
Airy functions, their negative-axis zeros and the truncated overlap
quadratures that every bouncer matrix element is built from.

Point evaluation goes through ``scipy.special.airy`` (Cephes switches from
the Maclaurin series to the asymptotic expansions away from the origin).
Zeros are seeded from the asymptotic estimate and polished with Brent's
method inside a bracket that must hold a sign change.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from numpy.polynomial import legendre
from scipy import optimize, special

from .exceptions import QuadratureError, RootBracketError

logger = logging.getLogger(__name__)

TAIL_TOLERANCE = 1e-15


def _check_finite(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f'Airy argument must be finite, got {x!r}')
    return x


def airy_ai(x):
    """Ai(x) for real finite ``x``."""
    ai, _, _, _ = special.airy(_check_finite(x))
    return float(ai)


def airy_ai_prime(x):
    """Ai'(x) for real finite ``x``."""
    _, aip, _, _ = special.airy(_check_finite(x))
    return float(aip)


@dataclass(frozen=True)
class AiryZeroTable:
    """The first ``count`` zeros a_1 > a_2 > ... of Ai, all negative."""

    zeros: tuple

    @property
    def count(self):
        return len(self.zeros)

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, index):
        return self.zeros[index]

    def as_array(self):
        return np.asarray(self.zeros, dtype=float)


def zero_estimate(k):
    """Asymptotic estimate of the k-th zero, k >= 1."""
    t = 3.0 * math.pi * (4 * k - 1) / 8.0
    return -t ** (2.0 / 3.0)


def airy_zeros(n):
    """
    First ``n`` zeros of Ai, each refined to 1e-12 or better.

    Brackets are centred on the asymptotic estimate with a half width of a
    quarter of the local zero spacing, pi / sqrt(|a|).
    """
    n = int(n)
    if n < 1:
        raise ValueError(f'need at least one zero, got n={n}')
    zeros = []
    for k in range(1, n + 1):
        seed = zero_estimate(k)
        half_width = 0.25 * math.pi / math.sqrt(abs(seed))
        lo, hi = seed - half_width, seed + half_width
        f_lo, f_hi = airy_ai(lo), airy_ai(hi)
        if f_lo * f_hi > 0:
            raise RootBracketError(f'no sign change of Ai on [{lo:.6f}, {hi:.6f}] for zero {k}')
        root = optimize.brentq(airy_ai, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        zeros.append(root)
    return AiryZeroTable(zeros=tuple(zeros))


@dataclass(frozen=True, eq=False)
class QuadratureScheme:
    """Panel-wise Gauss-Legendre nodes and weights on [0, xi_max]."""

    nodes: np.ndarray
    weights: np.ndarray
    xi_max: float
    panel_count: int

    @classmethod
    def build(cls, xi_max=None, panel_count=None, nodes_per_panel=None):
        xi_max = float(settings.XI_MAX if xi_max is None else xi_max)
        panel_count = int(settings.QUADRATURE_PANELS if panel_count is None else panel_count)
        nodes_per_panel = int(settings.QUADRATURE_NODES if nodes_per_panel is None else nodes_per_panel)
        if xi_max <= 0 or panel_count < 1 or nodes_per_panel < 1:
            raise ValueError('quadrature needs xi_max > 0 and at least one panel and node')

        x, w = legendre.leggauss(nodes_per_panel)
        edges = np.linspace(0.0, xi_max, panel_count + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return cls(nodes=nodes, weights=weights, xi_max=xi_max, panel_count=panel_count)

    @property
    def nodes_per_panel(self):
        return self.nodes.size // self.panel_count

    def integrate(self, values):
        return np.dot(self.weights, values)


class OverlapWeight(enum.Enum):
    ONE = 'one'
    XI = 'xi'
    EXP_PHASE = 'exp_phase'
    EXP_PHASE_SHIFT = 'exp_phase_shift'  # exp(-i xi / sigma) - 1
    AI_DERIVATIVE = 'ai_derivative'


def _check_tails(zeros, scheme):
    tails = np.abs(special.airy(scheme.xi_max + zeros)[0])
    if np.any(tails > TAIL_TOLERANCE):
        worst = int(np.argmax(tails))
        raise QuadratureError(
            f'xi_max={scheme.xi_max} leaves |Ai(xi_max + a_{worst + 1})| = {tails[worst]:.3e} '
            f'above {TAIL_TOLERANCE:g}'
        )


def _weight_factor(weight, scheme, sigma):
    if weight is OverlapWeight.XI:
        return scheme.weights * scheme.nodes
    if weight in (OverlapWeight.EXP_PHASE, OverlapWeight.EXP_PHASE_SHIFT):
        if sigma is None or not sigma > 0:
            raise ValueError(f'{weight.value} weight needs sigma > 0, got {sigma!r}')
        if weight is OverlapWeight.EXP_PHASE_SHIFT:
            theta = scheme.nodes / sigma
            return scheme.weights * (-2.0 * np.sin(0.5 * theta) ** 2 - 1j * np.sin(theta))
        return scheme.weights * np.exp(-1j * scheme.nodes / sigma)
    return scheme.weights


def overlap_matrix(weight, zeros, scheme, sigma=None, indices=None):
    """
    Matrix of int_0^xi_max f(xi) Ai(xi + a_{j+1}) g(xi + a_{k+1}) dxi.

    ``f`` is 1, xi, exp(-i xi / sigma) or exp(-i xi / sigma) - 1; ``g`` is Ai' for the
    ``AI_DERIVATIVE`` weight and Ai otherwise. Real weights give a real
    array.
    """
    weight = OverlapWeight(weight)
    a = zeros.as_array() if indices is None else zeros.as_array()[list(indices)]
    _check_tails(a, scheme)

    ai, aip, _, _ = special.airy(scheme.nodes[None, :] + a[:, None])
    right = aip if weight is OverlapWeight.AI_DERIVATIVE else ai
    factor = _weight_factor(weight, scheme, sigma)
    return (ai * factor[None, :]) @ right.T


def airy_overlap(j, k, weight, zeros, scheme, sigma=None):
    """Single overlap integral between shifted Airy functions j and k."""
    if not (0 <= j < zeros.count and 0 <= k < zeros.count):
        raise IndexError(f'overlap indices ({j}, {k}) outside a table of {zeros.count} zeros')
    block = overlap_matrix(weight, zeros, scheme, sigma=sigma, indices=(j, k))
    return complex(block[0, 1])
