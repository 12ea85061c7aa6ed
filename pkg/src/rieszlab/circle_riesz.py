"""Classical Riesz products on the unit circle.

A partial product ``prod_k (conj(a_k) zbar^{j_k}/2 + 1 + a_k z^{j_k}/2)`` is kept
either as an exact sparse coefficient map (:class:`TrigPoly`) or, once the
3^kappa coefficient growth gets out of hand, as pointwise values.

Evaluation points are 64-bit phases ``u`` standing for ``theta = 2 pi u / 2^64``.
``exp(i j theta)`` is formed from ``j u mod 2^64`` in exact integer arithmetic,
so factors with astronomically large lacunary frequencies are still evaluated
at the right points.  Point sets are regular grids while the frequencies fit
below the Nyquist bound and uniform random lattice points beyond it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

SHIFT_DENOM = 1 << 20
EXPANSION_CAP = 14
DEFAULT_GRID_CAP = 1 << 16
DIRECT_EVAL_MAX_TERMS = 512
NEG_CLIP = 1e-6


class NotADensityError(ValueError):
    """Grid values of an alleged density are significantly negative."""


class AdmissibilityError(ValueError):
    """A pair (J, a) violates lacunarity or |a_k| < 1."""


# --------------------------------------------------------------------------
# TrigPoly
# --------------------------------------------------------------------------


def _combine(freqs: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if freqs.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex)
    uniq, inv = np.unique(freqs, return_inverse=True)
    re = np.bincount(inv, weights=coeffs.real, minlength=uniq.size)
    im = np.bincount(inv, weights=coeffs.imag, minlength=uniq.size)
    out = re + 1j * im
    keep = out != 0
    return uniq[keep].astype(np.int64), out[keep]


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Sparse trigonometric polynomial ``sum_f c_f e^{i f theta}``.

    ``freqs`` is strictly increasing, ``coeffs`` has no exact zeros.
    """

    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=np.int64).reshape(-1)
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if f.shape != c.shape:
            raise ValueError("freqs and coeffs must have equal length")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            f, c = _combine(f, c)
        else:
            keep = c != 0
            f, c = f[keep], c[keep]
        f.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "coeffs", c)

    # constructors ---------------------------------------------------------
    @classmethod
    def from_dict(cls, mapping: dict) -> "TrigPoly":
        items = sorted(mapping.items())
        if not items:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex))
        f, c = zip(*items)
        return cls(np.array(f, dtype=np.int64), np.array(c, dtype=complex))

    @classmethod
    def constant(cls, c: complex = 1.0) -> "TrigPoly":
        return cls(np.array([0], dtype=np.int64), np.array([c], dtype=complex))

    @classmethod
    def _raw(cls, freqs, coeffs) -> "TrigPoly":
        f, c = _combine(np.asarray(freqs, dtype=np.int64), np.asarray(coeffs, dtype=complex))
        return cls(f, c)

    # accessors ------------------------------------------------------------
    def to_dict(self) -> dict:
        return {int(f): complex(c) for f, c in zip(self.freqs, self.coeffs)}

    def coeff(self, f: int) -> complex:
        i = np.searchsorted(self.freqs, f)
        if i < self.freqs.size and self.freqs[i] == f:
            return complex(self.coeffs[i])
        return 0j

    @property
    def max_freq(self) -> int:
        return int(np.abs(self.freqs).max()) if self.freqs.size else 0

    def __len__(self) -> int:
        return int(self.freqs.size)

    def support(self) -> set[int]:
        return set(int(f) for f in self.freqs)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self.to_dict()
        return all(abs(c - np.conj(d.get(-f, 0j))) <= tol for f, c in d.items())

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        return TrigPoly._raw(np.concatenate([self.freqs, other.freqs]),
                             np.concatenate([self.coeffs, other.coeffs]))

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(self.freqs, -self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPoly) else -complex(other))

    def __mul__(self, other):
        if not isinstance(other, TrigPoly):
            return TrigPoly(self.freqs, self.coeffs * complex(other))
        if len(self) == 0 or len(other) == 0:
            return TrigPoly._raw([], [])
        f = (self.freqs[:, None] + other.freqs[None, :]).ravel()
        c = (self.coeffs[:, None] * other.coeffs[None, :]).ravel()
        return TrigPoly._raw(f, c)

    __rmul__ = __mul__

    def allclose(self, other: "TrigPoly", atol: float = 1e-10) -> bool:
        diff = self - other
        return len(diff) == 0 or float(np.abs(diff.coeffs).max()) <= atol

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.exp(1j * np.multiply.outer(theta, self.freqs.astype(float))) @ self.coeffs

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        return {"freqs": [{"f": int(f), "re": float(c.real), "im": float(c.imag)}
                          for f, c in zip(self.freqs, self.coeffs)]}

    @classmethod
    def from_json(cls, obj: dict) -> "TrigPoly":
        return cls._raw([e["f"] for e in obj["freqs"]],
                        [complex(e["re"], e.get("im", 0.0)) for e in obj["freqs"]])


# --------------------------------------------------------------------------
# admissible pairs and coefficient specs
# --------------------------------------------------------------------------


def check_lacunary(J: Sequence[int], ratio: float = 3) -> None:
    J = [int(j) for j in J]
    if any(j <= 0 for j in J):
        raise AdmissibilityError("lacunary indices must be positive integers")
    for j0, j1 in zip(J, J[1:]):
        if j1 < ratio * j0:
            raise AdmissibilityError(f"lacunarity violated: {j1}/{j0} < {ratio}")


def lacunary_sequence(count: int, base: int = 3, first: int = 1) -> list[int]:
    """``first * base**k`` for ``k = 0 .. count-1`` (exact Python ints)."""
    if base < 3:
        raise AdmissibilityError("lacunary base must be at least 3")
    return [first * base ** k for k in range(count)]


@dataclass(frozen=True)
class AdmissiblePair:
    J: tuple
    a: tuple

    def __post_init__(self):
        J = tuple(int(j) for j in self.J)
        a = tuple(complex(x) for x in self.a)
        check_lacunary(J)
        if len(a) < len(J):
            raise AdmissibilityError("need one coefficient per lacunary index")
        bad = [k for k, x in enumerate(a) if not abs(x) < 1]
        if bad:
            raise AdmissibilityError(f"|a_k| < 1 violated at k={bad[0] + 1}")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "a", a[: len(J)])

    def __len__(self):
        return len(self.J)


def parse_complex(text: str) -> complex:
    """Parse ``0.3``, ``-0.2i``, ``0.3+0.2i`` (``j`` accepted as well)."""
    s = text.strip().replace(" ", "").replace("i", "j").replace("I", "j")
    if s.endswith("j") and (len(s) == 1 or s[-2] in "+-"):
        s = s[:-1] + "1j"
    try:
        return complex(s)
    except ValueError:
        raise ValueError(f"cannot parse complex number {text!r}") from None


@dataclass(frozen=True)
class CoeffSpec:
    """Named coefficient family.

    ``const:c``          a_k = c
    ``geom:r[,s[,o]]``   a_k = o + s * r**k
    ``harmonic:p[,s]``   a_k = s * (k + 1)**(-p)
    ``list:v1,v2,...``   explicit values (complex as ``re+imi``)
    """

    kind: str
    params: tuple

    KINDS = ("const", "geom", "harmonic", "list")

    @classmethod
    def parse(cls, text: str) -> "CoeffSpec":
        kind, _, rest = text.strip().partition(":")
        if kind not in cls.KINDS or not rest:
            raise ValueError(f"bad coefficient spec {text!r}; expected one of {cls.KINDS}")
        vals = tuple(parse_complex(v) for v in rest.split(","))
        if kind == "const" and len(vals) != 1:
            raise ValueError("const takes one value")
        if kind == "geom" and not 1 <= len(vals) <= 3:
            raise ValueError("geom takes r[,scale[,offset]]")
        if kind == "harmonic" and not 1 <= len(vals) <= 2:
            raise ValueError("harmonic takes p[,scale]")
        return cls(kind, vals)

    def __str__(self):
        def fmt(z):
            return repr(z.real) if z.imag == 0 else f"{z.real!r}{z.imag:+}i"
        return f"{self.kind}:" + ",".join(fmt(v) for v in self.params)

    def value(self, k: int) -> complex:
        """Coefficient with 1-based index ``k``."""
        p = self.params
        if self.kind == "const":
            return p[0]
        if self.kind == "geom":
            scale = p[1] if len(p) > 1 else 1.0
            offset = p[2] if len(p) > 2 else 0.0
            return offset + scale * p[0] ** k
        if self.kind == "harmonic":
            scale = p[1] if len(p) > 1 else 1.0
            return scale * (k + 1) ** (-p[0].real)
        if k > len(p):
            raise IndexError(f"list spec has only {len(p)} entries")
        return p[k - 1]

    def sequence(self, count: int) -> list[complex]:
        seq = [self.value(k) for k in range(1, count + 1)]
        bad = [k for k, x in enumerate(seq, 1) if not abs(x) < 1]
        if bad:
            raise AdmissibilityError(f"{self}: |a_k| >= 1 at k={bad[0]}")
        return seq


# --------------------------------------------------------------------------
# partial products and norms
# --------------------------------------------------------------------------


def riesz_factor(j: int, a: complex) -> TrigPoly:
    a = complex(a)
    return TrigPoly._raw([-j, 0, j], [a.conjugate() / 2, 1.0, a / 2])


def partial_product_circle(pair: AdmissiblePair, kappa: int) -> TrigPoly:
    """Exact coefficient expansion of the first ``kappa`` Riesz factors."""
    if kappa > len(pair):
        raise ValueError(f"kappa={kappa} exceeds the {len(pair)} available coefficients")
    if kappa > EXPANSION_CAP:
        raise ValueError(f"kappa={kappa} exceeds expansion cap {EXPANSION_CAP}; "
                         "use pointwise evaluation")
    if sum(pair.J[:kappa]) >= 2 ** 62:
        raise OverflowError("frequencies exceed int64")
    freqs = np.zeros(1, dtype=np.int64)
    coeffs = np.ones(1, dtype=complex)
    for j, a in zip(pair.J[:kappa], pair.a[:kappa]):
        if a == 0:
            continue
        freqs = np.concatenate([freqs - j, freqs, freqs + j])
        coeffs = np.concatenate([coeffs * (a.conjugate() / 2), coeffs, coeffs * (a / 2)])
        freqs, coeffs = _combine(freqs, coeffs)
    return TrigPoly(freqs, coeffs)


def l2_norm_sq_circle(p: TrigPoly) -> float:
    return float(np.sum(np.abs(p.coeffs) ** 2))


def parseval_product(a: Iterable[complex]) -> float:
    """``prod (1 + |a_k|^2 / 2)``, the squared L2 norm under lacunarity."""
    return float(math.prod(1 + abs(x) ** 2 / 2 for x in a))


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------


def next_pow2(x: int) -> int:
    return 1 << max(0, int(x - 1).bit_length())


def default_grid(max_freq: int, cap: int = DEFAULT_GRID_CAP) -> int:
    return min(next_pow2(4 * int(max_freq) + 4), cap)


def _phases(freqs, grid_size: int, shift: int) -> np.ndarray:
    """Offset phase ``exp(2 pi i f u / (N Q))`` per frequency, exact in ``f``."""
    if shift == 0:
        return np.ones(len(freqs), dtype=complex)
    NQ = grid_size * SHIFT_DENOM
    r = np.array([(int(f) % NQ) * shift % NQ for f in freqs], dtype=float)
    return np.exp(2j * np.pi * r / NQ)


def grid_phases(grid_size: int, shift: int = 0) -> np.ndarray:
    """Points ``theta_m = 2 pi (m + shift / SHIFT_DENOM) / N`` as 64-bit phases.

    A phase ``u`` stands for ``theta = 2 pi u / 2^64``.  For power-of-two ``N``
    up to ``2^44`` the grid is represented exactly.
    """
    N = int(grid_size)
    b = N.bit_length() - 1
    if N == 1 << b and b <= 64 - 20:
        m = np.arange(N, dtype=np.uint64) << np.uint64(64 - b)
        return m + np.uint64(int(shift) << (64 - b - 20))
    return np.array([((m * SHIFT_DENOM + int(shift)) << 64) // (N * SHIFT_DENOM) % (1 << 64)
                     for m in range(N)], dtype=np.uint64)


def random_phases(count: int, seed) -> np.ndarray:
    """Uniform points on the ``2^-64`` lattice of the circle.

    The lattice integrates every frequency ``|f| < 2^63`` exactly, so sample
    means are unbiased for all products considered here.
    """
    rng = np.random.default_rng(seed)
    return rng.integers(0, 1 << 64, size=int(count), dtype=np.uint64)


def exp_phase(j: int, u: np.ndarray) -> np.ndarray:
    """``exp(i j theta)`` at phases ``u``; ``j u mod 2^64`` is formed exactly."""
    prod = np.asarray(u, dtype=np.uint64) * np.uint64(int(j) % (1 << 64))
    frac = (prod >> np.uint64(11)).astype(float) * 2.0 ** -53
    return np.exp(2j * np.pi * frac)


def _as_phases(points, shift: int = 0) -> np.ndarray:
    if isinstance(points, (int, np.integer)):
        return grid_phases(int(points), shift)
    return np.asarray(points, dtype=np.uint64)


def circle_points(max_freq: int, grid_size: int, replicate: int = 0, seed: int = 0
                  ) -> tuple[np.ndarray, str]:
    """Evaluation points for products of frequency up to ``max_freq``.

    While ``max_freq < N / 2`` a (shifted) regular grid integrates the
    product exactly; beyond that a regular grid aliases, and ``N`` uniform
    lattice points give an unbiased Monte Carlo estimate instead.
    """
    N = int(grid_size)
    if 2 * int(max_freq) < N:
        return grid_phases(N, random_shifts(replicate + 1, seed)[replicate]), "grid"
    return random_phases(N, np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))), "random"


def evaluate_circle_complex(p: TrigPoly, grid_size, shift: int = 0) -> np.ndarray:
    """Values of ``p`` on the (optionally shifted) uniform grid, or at given phases."""
    if not isinstance(grid_size, (int, np.integer)):
        u = np.asarray(grid_size, dtype=np.uint64)
        out = np.zeros(u.size, dtype=complex)
        for f, c in zip(p.freqs, p.coeffs):
            out += c * exp_phase(int(f), u)
        return out
    N = int(grid_size)
    c = p.coeffs * _phases(p.freqs, N, shift)
    idx = np.mod(p.freqs, N)
    if len(p) <= DIRECT_EVAL_MAX_TERMS and N * max(len(p), 1) <= 1 << 24:
        m = np.arange(N, dtype=np.int64)
        ang = np.mod(np.multiply.outer(m, idx), N) * (2 * np.pi / N)
        return np.exp(1j * ang) @ c
    folded = (np.bincount(idx, weights=c.real, minlength=N)
              + 1j * np.bincount(idx, weights=c.imag, minlength=N))
    return np.fft.ifft(folded) * N


def evaluate_circle(p: TrigPoly, grid_size, shift: int = 0) -> np.ndarray:
    return evaluate_circle_complex(p, grid_size, shift).real


def factor_values(j: int, a: complex, points, shift: int = 0) -> np.ndarray:
    """Values of ``1 + Re(a z^j)`` on a grid of size ``points`` or at given phases."""
    return 1.0 + (complex(a) * exp_phase(j, _as_phases(points, shift))).real


def running_products(J: Sequence[int], a: Sequence[complex], points,
                     shift: int = 0) -> Iterator[np.ndarray]:
    """Yield point values of the partial products for kappa = 0, 1, 2, ..."""
    u = _as_phases(points, shift)
    vals = np.ones(u.size)
    yield vals.copy()
    for j, x in zip(J, a):
        vals *= 1.0 + (complex(x) * exp_phase(j, u)).real
        yield vals.copy()


def pointwise_product_circle(pair: AdmissiblePair, kappa: int, points,
                             shift: int = 0) -> np.ndarray:
    vals = np.ones(0)
    for vals in itertools.islice(running_products(pair.J, pair.a, points, shift), kappa + 1):
        pass
    return vals


# --------------------------------------------------------------------------
# density diagnostics
# --------------------------------------------------------------------------


def _density_values(p, grid_size, shift) -> np.ndarray:
    if isinstance(p, TrigPoly):
        if grid_size is None:
            grid_size = default_grid(p.max_freq)
        v = evaluate_circle(p, grid_size, shift)
    else:
        v = np.asarray(p, dtype=float)
    if v.size and v.min() < -NEG_CLIP:
        raise NotADensityError(f"grid value {v.min():.3g} < -{NEG_CLIP}")
    return np.clip(v, 0.0, None)


def _grid_for(p, q, grid_size):
    if grid_size is not None:
        return grid_size
    m = max((x.max_freq for x in (p, q) if isinstance(x, TrigPoly)), default=0)
    sizes = [np.asarray(x).size for x in (p, q) if not isinstance(x, TrigPoly)]
    return sizes[0] if sizes else default_grid(m)


def _as_density(p):
    if isinstance(p, (int, float)):
        return TrigPoly.constant(float(p))
    return p


def _pair_values(p, q, grid_size, shift):
    p, q = _as_density(p), _as_density(q)
    N = _grid_for(p, q, grid_size)
    return _density_values(p, N, shift), _density_values(q, N, shift)


def hellinger_affinity(p, q, grid_size=None, shift: int = 0) -> float:
    """Estimate of ``int sqrt(p q) dm`` as a mean over evaluation points.

    ``p`` and ``q`` are TrigPoly densities, scalars, or precomputed point
    values; ``grid_size`` is a grid size or an array of phases.
    """
    pv, qv = _pair_values(p, q, grid_size, shift)
    return float(np.mean(np.sqrt(pv * qv)))


def l1_distance(p, q, grid_size=None, shift: int = 0) -> float:
    """``int |p - q| dm`` for probability densities, as ``2 - 2 int min(p, q) dm``.

    Both masses are known to be 1, so only the bounded overlap term is
    estimated; on an exact grid this equals the plain mean of ``|p - q|``.
    """
    pv, qv = _pair_values(p, q, grid_size, shift)
    return float(2.0 - 2.0 * np.mean(np.minimum(pv, qv)))


def random_shifts(count: int, seed: int) -> list[int]:
    """Sub-cell grid offsets; the first is always the unshifted grid."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return [0] + [int(u) for u in rng.integers(1, SHIFT_DENOM, size=max(count - 1, 0))]


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------


@dataclass
class DichotomyRow:
    kappa: int
    l2_norm_sq: float
    affinity: float
    l1_distance: float


def dichotomy_curve(spec: CoeffSpec | str, J: Sequence[int], kappa_max: int,
                    grid_size: int | None = None, expand_upto: int = EXPANSION_CAP,
                    seed: int = 0) -> list[DichotomyRow]:
    """Norm and distance-to-Lebesgue of partial products, kappa = 0..kappa_max.

    ``l2_norm_sq`` comes from the exact expansion while ``kappa <= expand_upto``
    and from the lacunary Parseval product beyond.  The affinity and L1 columns
    use pointwise factor products on ``grid_size`` points from
    :func:`circle_points` (``seed`` only matters once they are random).
    """
    if isinstance(spec, str):
        spec = CoeffSpec.parse(spec)
    a = spec.sequence(kappa_max)
    pair = AdmissiblePair(tuple(J[:kappa_max]), tuple(a))
    if grid_size is None:
        grid_size = default_grid(sum(pair.J))
    pts, _ = circle_points(sum(pair.J), grid_size, 0, seed)
    rows = []
    poly = TrigPoly.constant(1.0)
    for kappa, vals in enumerate(running_products(pair.J, pair.a, pts)):
        if kappa <= min(expand_upto, EXPANSION_CAP):
            if kappa:
                poly = poly * riesz_factor(pair.J[kappa - 1], pair.a[kappa - 1])
            l2 = l2_norm_sq_circle(poly)
        else:
            l2 = parseval_product(pair.a[:kappa])
        rows.append(DichotomyRow(kappa, l2, hellinger_affinity(vals, np.ones_like(vals)),
                                 l1_distance(vals, np.ones_like(vals))))
    return rows


@dataclass
class PeyriereRow:
    kappa: int
    affinity: float
    l1_distance: float
    l1_stderr: float


def peyriere_curve(spec_a: CoeffSpec | str, spec_b: CoeffSpec | str, J: Sequence[int],
                   kappa_max: int, grid_size: int | None = None, shifts: int = 8,
                   seed: int = 0) -> list[PeyriereRow]:
    """Affinity and L1 distance between mu(J, a) and mu(J, b) partial products.

    Each quantity is averaged over ``shifts`` replicate point sets (offset
    grids, or independent random sets past the Nyquist bound); the reported
    stderr is the spread of the L1 estimates across replicates.
    """
    if isinstance(spec_a, str):
        spec_a = CoeffSpec.parse(spec_a)
    if isinstance(spec_b, str):
        spec_b = CoeffSpec.parse(spec_b)
    pa = AdmissiblePair(tuple(J[:kappa_max]), tuple(spec_a.sequence(kappa_max)))
    pb = AdmissiblePair(pa.J, tuple(spec_b.sequence(kappa_max)))
    if grid_size is None:
        grid_size = default_grid(sum(pa.J))
    reps = max(int(shifts), 1)
    aff = np.zeros((reps, kappa_max + 1))
    l1 = np.zeros_like(aff)
    for r in range(reps):
        pts, _ = circle_points(sum(pa.J), grid_size, r, seed)
        for kappa, (va, vb) in enumerate(zip(running_products(pa.J, pa.a, pts),
                                             running_products(pb.J, pb.a, pts))):
            aff[r, kappa] = hellinger_affinity(va, vb)
            l1[r, kappa] = l1_distance(va, vb)
    se = l1.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros(kappa_max + 1)
    return [PeyriereRow(k, float(aff[:, k].mean()), float(l1[:, k].mean()), float(se[k]))
            for k in range(kappa_max + 1)]
