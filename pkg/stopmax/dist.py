"""*Observation laws on the nonnegative reals*.

Every law offers two views:

- the value view (`cdf`, `quantile`, `sample`, support bounds, atoms)
- the rank view used by solvers and the simulator

Ranks are an order-preserving encoding of observations. Continuous laws use the
probability-integral level `u = F(x)`, discrete laws use the atom index. On ranks the game
comparisons `x >= alpha * m` and the stop probabilities `F(x / alpha)` are evaluated exactly,
even for spread-out laws whose slab centers are far beyond double precision.
"""
import math
import re
from bisect import bisect_left, bisect_right
from fractions import Fraction
from functools import lru_cache
from itertools import accumulate
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger as log
import stopmax as smx


__all__ = [
    "Distribution",
    "UniformDistribution",
    "DiscreteDistribution",
    "SpreadOutDistribution",
    "as_fraction",
    "parse_dist_spec",
    "cdf",
    "quantile",
    "n_alpha",
    "max_epsilon",
    "make_spread",
    "slab_index",
]


Number = Union[int, float, Fraction]


def as_fraction(x):
    # type: (Number) -> Fraction
    """
    Exact rational for a number given in decimal notation.

    Floats are read at their shortest decimal representation, so `0.7` becomes `7/10` and not
    the binary neighbour of 0.7.

    :param x: Number to convert.
    :return: Exact rational value.
    :rtype: Fraction
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(repr(float(x)))


def _fmt(x):
    # type: (float) -> str
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def _out(arr):
    """Return python floats for scalar input and arrays otherwise."""
    arr = np.asarray(arr)
    return arr.item() if arr.ndim == 0 else arr


class Distribution:
    """
    Capability record of a law on the nonnegative reals.

    Subclasses are immutable after construction and keep no mutable sampling state: every
    sampling method takes a numpy `Generator` owned by the caller.
    """

    continuous = True
    support_min = 0.0  # type: float
    support_max = math.inf  # type: float
    text = ""  # type: str

    @property
    def atoms(self):
        # type: () -> Optional[List[Tuple[float, float]]]
        """Ascending `(value, probability)` pairs for discrete laws, `None` otherwise."""
        return None

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, p):
        raise NotImplementedError

    def sample(self, rng, size=None):
        """
        Draw i.i.d. values by inverse-transform sampling.

        :param np.random.Generator rng: Caller owned random generator.
        :param size: Output shape (`None` for a single float).
        """
        return self.rank_value(self.draw_ranks(rng, size))

    def mass_between(self, lo, hi):
        # type: (Number, Number) -> float
        """Probability of the open interval `(lo, hi)`."""
        if not float(lo) < float(hi):
            return 0.0
        return max(0.0, float(self.cdf(float(hi))) - float(self.cdf(float(lo))))

    def cdf_over(self, x, alpha):
        # type: (Number, Number) -> float
        """Probability `P(X <= x / alpha)`, the chance a later draw stays within reach of `x`."""
        return float(self.cdf(float(x) / float(alpha)))

    # Rank view ##########################################################################

    def draw_ranks(self, rng, size=None):
        """Sample encoded observations (probability-integral levels for continuous laws)."""
        return rng.random(size)

    def rank_value(self, r):
        """Value of encoded observations."""
        return self.quantile(r)

    def rank_of(self, x):
        """Encoded observation of value `x`."""
        return self.cdf(x)

    def rank_cdf(self, r):
        """`F(x)` of encoded observations."""
        return _out(np.clip(np.asarray(r, dtype=float), 0.0, 1.0))

    def rank_cdf_over(self, r, alpha):
        """`F(x / alpha)` of encoded observations."""
        return self._rank_cdf_scaled(r, 1.0 / alpha)

    def rank_floor(self, r, alpha):
        """
        Rank threshold of `alpha * m`: `x >= alpha * m` iff `rank(x) >= rank_floor(rank(m))`.
        """
        return self._rank_cdf_scaled(r, alpha)

    def _rank_cdf_scaled(self, r, factor):
        return _out(self.cdf(factor * np.asarray(self.quantile(r), dtype=float)))

    def __repr__(self):
        return f"{self.__class__.__name__}({self.text!r})"


class UniformDistribution(Distribution):
    """Continuous uniform law on `(low, high)` with `0 <= low < high`."""

    def __init__(self, low, high):
        # type: (float, float) -> None
        low, high = float(low), float(high)
        if not (math.isfinite(low) and math.isfinite(high)):
            raise smx.DistributionSpecError("Uniform bounds must be finite")
        if low < 0:
            raise smx.DistributionSpecError(f"Negative support not allowed: {low}")
        if not low < high:
            raise smx.DistributionSpecError(f"Uniform needs low < high, got {low}, {high}")
        self.low = low
        self.high = high
        self.support_min = low
        self.support_max = high
        self.text = f"uniform:{_fmt(low)},{_fmt(high)}"

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0))

    def quantile(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        return _out(self.low + p * (self.high - self.low))


class DiscreteDistribution(Distribution):
    """
    Finite-support law given by distinct atoms and positive masses summing to one.

    Probabilities may be passed as `Fraction` for exact cumulative sums (the parser does so).
    """

    continuous = False

    def __init__(self, values, probs, text=None):
        # type: (Sequence[Number], Sequence[Number], Optional[str]) -> None
        if len(values) == 0 or len(values) != len(probs):
            raise smx.DistributionSpecError("Atoms and probabilities must be non-empty and aligned")
        fvalues = [as_fraction(v) for v in values]
        fprobs = [as_fraction(p) for p in probs]
        if any(v < 0 for v in fvalues):
            raise smx.DistributionSpecError("Negative support not allowed")
        if any(p <= 0 for p in fprobs):
            raise smx.DistributionSpecError("Atom probabilities must be positive")
        if len(set(fvalues)) != len(fvalues):
            raise smx.DistributionSpecError("Atom values must be distinct")
        total = sum(fprobs)
        if abs(total - 1) > Fraction(1, 10**12):
            raise smx.DistributionSpecError(f"Probabilities sum to {float(total)!r}, not 1")

        order = sorted(range(len(fvalues)), key=lambda i: fvalues[i])
        self._fvalues = [fvalues[i] for i in order]
        fprobs = [fprobs[i] for i in order]
        self.values = np.array([float(v) for v in self._fvalues])
        self.probs = np.array([float(p) for p in fprobs])
        cum = np.array([float(c) for c in accumulate(fprobs)])
        cum[-1] = 1.0
        self._cum = cum
        self._cum0 = np.concatenate([[0.0], cum])
        self.support_min = float(self.values[0])
        self.support_max = float(self.values[-1])
        self.text = text or "cat:" + ",".join(
            f"{_fmt(v)}={_fmt(p)}" for v, p in zip(self.values, self.probs)
        )

    @property
    def atoms(self):
        return list(zip(self.values.tolist(), self.probs.tolist()))

    @property
    def size(self):
        # type: () -> int
        """Number of atoms."""
        return len(self.values)

    def cdf(self, x):
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        return _out(self._cum0[idx])

    def quantile(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        idx = np.minimum(np.searchsorted(self._cum, p, side="left"), self.size - 1)
        return _out(self.values[idx])

    def cdf_over(self, x, alpha):
        idx = bisect_right(self._fvalues, as_fraction(x) / as_fraction(alpha))
        return float(self._cum0[idx])

    def mass_between(self, lo, hi):
        lo, hi = as_fraction(lo), as_fraction(hi)
        first = bisect_right(self._fvalues, lo)
        last = bisect_left(self._fvalues, hi)
        if last <= first:
            return 0.0
        return float(self._cum0[last] - self._cum0[first])

    # Rank view: atom indices ############################################################

    def draw_ranks(self, rng, size=None):
        u = rng.random(size)
        idx = np.minimum(np.searchsorted(self._cum, u, side="right"), self.size - 1)
        return _out(idx.astype(float))

    def rank_of(self, x):
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="left")
        hit = np.minimum(idx, self.size - 1)
        if np.any(self.values[hit] != x):
            raise smx.DistributionSpecError(f"Value {x!r} is not an atom of {self.text}")
        return _out(hit.astype(float))

    def rank_value(self, r):
        return _out(self.values[np.asarray(r).astype(np.intp)])

    def rank_cdf(self, r):
        return _out(self._cum[np.asarray(r).astype(np.intp)])

    def rank_cdf_over(self, r, alpha):
        return _out(self.alpha_tables(alpha)[1][np.asarray(r).astype(np.intp)])

    def rank_floor(self, r, alpha):
        return _out(self.alpha_tables(alpha)[0][np.asarray(r).astype(np.intp)].astype(float))

    @lru_cache(maxsize=64)
    def alpha_tables(self, alpha):
        # type: (float) -> Tuple[np.ndarray, np.ndarray]
        """
        Exact per-atom tables for proportion `alpha`.

        :param float alpha: Proportion (read at its decimal representation).
        :return: Tuple of (index of the first atom `>= alpha * v_i`, `F(v_i / alpha)`)
        :rtype: tuple[np.ndarray, np.ndarray]
        """
        a = as_fraction(alpha)
        floor = np.array([bisect_left(self._fvalues, a * v) for v in self._fvalues])
        over_idx = np.array([bisect_right(self._fvalues, v / a) for v in self._fvalues])
        log.debug(f"Built exact comparison tables for {self.size} atoms at alpha={alpha}")
        return floor, self._cum0[over_idx]


class SpreadOutDistribution(Distribution):
    """
    Uniform mass on `k` slabs `[base**j - eps, base**j + eps]`, `base = n_alpha(alpha) + 1`.

    Consecutive slabs are alpha-separated: every value in slab `j` is smaller than `alpha`
    times every value in slab `j + 1`. Slab centers beyond the double range are `inf` in the
    value view; the rank view stays exact for any `k`.
    """

    def __init__(self, alpha, k, eps):
        # type: (float, int, float) -> None
        if not 0 < alpha < 1:
            raise smx.DistributionSpecError(f"alpha must be in (0, 1), got {alpha}")
        if int(k) != k or k < 1:
            raise smx.DistributionSpecError(f"Slab count k must be a positive integer, got {k}")
        bound = max_epsilon(alpha)
        if not 0 < eps < bound:
            raise smx.DistributionSpecError(f"eps must be in (0, {bound!r}), got {eps}")
        self.alpha = float(alpha)
        self.k = int(k)
        self.eps = float(eps)
        self.base = n_alpha(alpha) + 1
        self.centers = self._center(np.arange(1, self.k + 1))
        if not math.isfinite(self.centers[-1]):
            log.debug(f"Spread-out slabs above {np.argmax(np.isinf(self.centers))} overflow")
        self.support_min = float(self.centers[0] - self.eps)
        self.support_max = float(self.centers[-1] + self.eps)
        self.text = f"spread:alpha={_fmt(alpha)},k={self.k},eps={_fmt(eps)}"

    def _center(self, j):
        with np.errstate(over="ignore"):
            return np.power(float(self.base), np.asarray(j, dtype=float))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        lower = self.centers - self.eps
        with np.errstate(invalid="ignore"):
            mass = np.clip((x[..., None] - lower) / (2 * self.eps), 0.0, 1.0)
        # inf - inf: an infinite value lies above every slab
        mass = np.where(np.isnan(mass), 1.0, mass)
        return _out(mass.sum(axis=-1) / self.k)

    def quantile(self, p):
        j, t = self._slab_and_offset(p)
        return _out(self.centers[j - 1] - self.eps + 2 * self.eps * t)

    def rank_slab(self, r):
        """Slab index (1..k) of encoded observations."""
        return _out(self._slab_and_offset(r)[0])

    def _slab_and_offset(self, p):
        pk = np.asarray(np.clip(np.asarray(p, dtype=float), 0.0, 1.0) * self.k)
        j = np.asarray(np.clip(np.ceil(pk), 1, self.k)).astype(np.intp)
        t = np.asarray(np.clip(pk - (j - 1), 0.0, 1.0))
        return j, t

    def _rank_cdf_scaled(self, r, factor):
        # Level of y = factor * x. Slabs two or more below floor(log_base(y)) are covered in
        # full, slabs two or more above are empty, the four in between are measured relative
        # to the center of the slab of x so huge centers cancel before eps-sized offsets.
        j, t = self._slab_and_offset(r)
        offset = 2 * self.eps * t - self.eps
        log_base = math.log(self.base)
        with np.errstate(over="ignore", invalid="ignore"):
            center = np.asarray(self._center(j))
            log_y = math.log(factor) + j * log_base + np.log1p(offset / center)
            nearest = np.asarray(np.maximum(np.floor(log_y / log_base), 0)).astype(np.intp)
            i = nearest[..., None] + np.arange(-1, 3)
            coef = factor - np.power(float(self.base), (i - j[..., None]).astype(float))
            dist = np.where(coef == 0, 0.0, center[..., None] * coef)
            dist = dist + factor * offset[..., None] + self.eps
            mass = np.clip(dist / (2 * self.eps), 0.0, 1.0)
        mass = np.where((i >= 1) & (i <= self.k), mass, 0.0)
        below = np.clip(nearest - 2, 0, self.k)
        return _out((below + mass.sum(axis=-1)) / self.k)


def parse_dist_spec(spec):
    # type: (str) -> Distribution
    """
    Build a distribution from its text form.

    !!! example
        ```
        >>> import stopmax as smx
        >>> smx.parse_dist_spec("duniform:1..10").atoms[0]
        (1.0, 0.1)

        ```

    Grammar (ASCII, no spaces):

    - `uniform:A,B` continuous uniform on (A, B), `0 <= A < B`
    - `duniform:LO..HI` integer atoms LO..HI with equal mass
    - `cat:v1=p1,v2=p2,...` finite support with explicit masses
    - `spread:alpha=A,k=K[,eps=E]` the spread-out family

    :param str spec: Distribution spec text.
    :return: The described distribution.
    :rtype: Distribution
    """
    text = spec.strip()
    kind, _, body = text.partition(":")
    try:
        if kind == "uniform":
            match = re.fullmatch(r"([^,]+),([^,]+)", body)
            if not match:
                raise smx.DistributionSpecError(f"Expected uniform:A,B, got {spec!r}")
            return UniformDistribution(float(match.group(1)), float(match.group(2)))
        if kind == "duniform":
            match = re.fullmatch(r"(\d+)\.\.(\d+)", body)
            if not match:
                raise smx.DistributionSpecError(f"Expected duniform:LO..HI, got {spec!r}")
            lo, hi = int(match.group(1)), int(match.group(2))
            if lo > hi:
                raise smx.DistributionSpecError(f"Empty range in {spec!r}")
            count = hi - lo + 1
            return DiscreteDistribution(
                list(range(lo, hi + 1)), [Fraction(1, count)] * count, text=text
            )
        if kind == "cat":
            values, probs = [], []
            for item in body.split(","):
                value, sep, prob = item.partition("=")
                if not sep:
                    raise smx.DistributionSpecError(f"Expected value=prob, got {item!r}")
                values.append(float(value))
                probs.append(Fraction(prob))
            return DiscreteDistribution(values, probs, text=text)
        if kind == "spread":
            params = {}
            for item in body.split(","):
                key, sep, value = item.partition("=")
                if not sep or key not in ("alpha", "k", "eps") or key in params:
                    raise smx.DistributionSpecError(f"Bad spread parameter {item!r}")
                params[key] = value
            if "alpha" not in params or "k" not in params:
                raise smx.DistributionSpecError("spread needs alpha and k")
            eps = float(params["eps"]) if "eps" in params else None
            return make_spread(float(params["alpha"]), int(params["k"]), eps)
    except (ValueError, ZeroDivisionError) as e:
        if isinstance(e, smx.DistributionSpecError):
            raise
        raise smx.DistributionSpecError(f"Malformed distribution spec {spec!r}: {e}") from e
    raise smx.DistributionSpecError(f"Unknown distribution kind in {spec!r}")


def cdf(d, x):
    # type: (Distribution, float) -> float
    """
    Probability `P(X <= x)`, clamped to 0 below and 1 above the support.

    :param Distribution d: Distribution
    :param float x: Value
    :rtype: float
    """
    return d.cdf(x)


def quantile(d, p):
    # type: (Distribution, float) -> float
    """
    Generalized inverse `min{x : F(x) >= p}`; `quantile(d, 0)` is the support minimum.

    :param Distribution d: Distribution
    :param float p: Probability level in [0, 1]
    :rtype: float
    """
    return d.quantile(p)


def n_alpha(alpha):
    # type: (float) -> int
    """
    Smallest integer `N` with `alpha > 1 / N` (strict).

    :param float alpha: Proportion in (0, 1)
    :rtype: int
    """
    if not 0 < alpha < 1:
        raise smx.DistributionSpecError(f"alpha must be in (0, 1), got {alpha}")
    return math.floor(1 / as_fraction(alpha)) + 1


def max_epsilon(alpha):
    # type: (float) -> float
    """
    Strict upper bound for the spread-out slab half width.

    Equals `(N + 1) * (alpha * N + alpha - 1) / (alpha + 1)` with `N = n_alpha(alpha)`, the
    binding (first) slab pair of `base**j + eps < alpha * (base**(j + 1) - eps)`.

    :param float alpha: Proportion in (0, 1)
    :rtype: float
    """
    n = n_alpha(alpha)
    a = as_fraction(alpha)
    return float((n + 1) * (a * n + a - 1) / (a + 1))


def make_spread(alpha, k, eps=None):
    # type: (float, int, Optional[float]) -> SpreadOutDistribution
    """
    Build the spread-out law with `k` slabs.

    :param float alpha: Proportion the slabs are separated for.
    :param int k: Number of slabs (>= 1).
    :param float eps: Slab half width in `(0, max_epsilon(alpha))`; defaults to
        `smx_opts.spread_eps_fraction * max_epsilon(alpha)`.
    :rtype: SpreadOutDistribution
    """
    if eps is None:
        eps = smx.smx_opts.spread_eps_fraction * max_epsilon(alpha)
    return SpreadOutDistribution(alpha, k, eps)


def slab_index(d, x):
    # type: (SpreadOutDistribution, float) -> Optional[int]
    """
    Slab containing value `x`.

    :param SpreadOutDistribution d: Spread-out law.
    :param float x: Value
    :return: Slab index in 1..k, or `None` if `x` lies in no slab.
    :rtype: int|None
    """
    hits = np.nonzero((x >= d.centers - d.eps) & (x <= d.centers + d.eps))[0]
    return int(hits[0]) + 1 if len(hits) else None
