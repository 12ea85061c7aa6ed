"""Polynomials in z and zbar restricted to the unit sphere of C^n.

A :class:`SpherePoly` stores terms ``c * z^alpha * zbar^beta`` as an integer
exponent matrix ``[alpha | beta]`` (one row per term) and a complex
coefficient vector.  Integration against the normalized surface measure is
exact:

    int_S z^alpha zbar^beta dsigma = delta_{alpha beta} (n-1)! alpha! / (n-1+|alpha|)!
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .circle_riesz import TrigPoly

LGAMMA_MAX_DEGREE = 60
SPECTRUM_TOL = 1e-10
UNIT_TOL = 1e-10
_SAMPLE_BLOCK = 1024
_LOG_ZERO = -1e4


class NotHomogeneousError(ValueError):
    pass


class NotOnSphereError(ValueError):
    pass


# --------------------------------------------------------------------------
# term bookkeeping
# --------------------------------------------------------------------------


def _combine(exps: np.ndarray, coeffs: np.ndarray, radix: np.ndarray | None = None):
    """Merge duplicate exponent rows, summing coefficients; drop exact zeros."""
    width = exps.shape[1]
    if exps.shape[0] == 0:
        return np.zeros((0, width), dtype=np.int64), np.zeros(0, dtype=complex)
    if radix is None:
        radix = exps.max(axis=0) + 1
    radix = np.asarray(radix, dtype=object)
    if math.prod(int(r) for r in radix) < 2 ** 62:
        mult = np.ones(width, dtype=np.int64)
        for i in range(width - 2, -1, -1):
            mult[i] = mult[i + 1] * int(radix[i + 1])
        keys = exps @ mult
        uniq, inv = np.unique(keys, return_inverse=True)
        out = np.empty((uniq.size, width), dtype=np.int64)
        rem = uniq.copy()
        for i in range(width):
            out[:, i], rem = np.divmod(rem, mult[i])
    else:
        out, inv = np.unique(exps, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
    re = np.bincount(inv, weights=coeffs.real, minlength=out.shape[0])
    im = np.bincount(inv, weights=coeffs.imag, minlength=out.shape[0])
    c = re + 1j * im
    keep = c != 0
    return out[keep], c[keep]


@dataclass(frozen=True, eq=False)
class SpherePoly:
    """Sparse polynomial ``sum c z^alpha zbar^beta`` on C^n."""

    n: int
    exps: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.exps, dtype=np.int64).reshape(-1, 2 * self.n)
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if e.shape[0] != c.shape[0]:
            raise ValueError("one coefficient per exponent row")
        if e.size and e.min() < 0:
            raise ValueError("negative exponent")
        e, c = _combine(e, c)
        e.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "exps", e)
        object.__setattr__(self, "coeffs", c)

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "SpherePoly":
        return cls(n, np.zeros((0, 2 * n), dtype=np.int64), np.zeros(0))

    @classmethod
    def constant(cls, n: int, c: complex = 1.0) -> "SpherePoly":
        return cls(n, np.zeros((1, 2 * n), dtype=np.int64), [c])

    @classmethod
    def monomial(cls, alpha: Sequence[int], beta: Sequence[int] | None = None,
                 c: complex = 1.0) -> "SpherePoly":
        n = len(alpha)
        beta = [0] * n if beta is None else list(beta)
        if len(beta) != n:
            raise ValueError("alpha and beta must have the same length")
        return cls(n, [list(alpha) + beta], [c])

    @classmethod
    def variable(cls, n: int, i: int, conj: bool = False) -> "SpherePoly":
        e = [0] * (2 * n)
        e[i + (n if conj else 0)] = 1
        return cls(n, [e], [1.0])

    @classmethod
    def from_terms(cls, n: int, terms: dict) -> "SpherePoly":
        """``{(alpha, beta): coeff}`` with ``alpha``, ``beta`` length-n tuples."""
        if not terms:
            return cls.zero(n)
        rows = [list(a) + list(b) for a, b in terms]
        return cls(n, rows, list(terms.values()))

    # accessors ------------------------------------------------------------
    @property
    def alpha(self) -> np.ndarray:
        return self.exps[:, : self.n]

    @property
    def beta(self) -> np.ndarray:
        return self.exps[:, self.n:]

    def __len__(self) -> int:
        return int(self.coeffs.size)

    def terms(self) -> dict:
        return {(tuple(int(x) for x in r[: self.n]), tuple(int(x) for x in r[self.n:])): complex(c)
                for r, c in zip(self.exps, self.coeffs)}

    def coeff(self, alpha, beta) -> complex:
        return self.terms().get((tuple(alpha), tuple(beta)), 0j)

    def bidegrees(self) -> np.ndarray:
        """(T, 2) array of per-term bidegrees ``(|alpha|, |beta|)``."""
        return np.stack([self.alpha.sum(axis=1), self.beta.sum(axis=1)], axis=1)

    def bidegree_set(self) -> set[tuple[int, int]]:
        return {(int(p), int(q)) for p, q in self.bidegrees()}

    @property
    def degree(self) -> int:
        """Maximal total degree ``|alpha| + |beta|`` (0 for the zero polynomial)."""
        return int(self.exps.sum(axis=1).max()) if len(self) else 0

    def is_homogeneous(self) -> bool:
        return len(self.bidegree_set()) <= 1

    def is_holomorphic(self) -> bool:
        return not np.any(self.beta)

    def is_real_density(self, tol: float = 1e-12) -> bool:
        return (self - self.conj()).max_abs_coeff() <= tol

    def max_abs_coeff(self) -> float:
        return float(np.abs(self.coeffs).max()) if len(self) else 0.0

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "SpherePoly"):
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, SpherePoly):
            other = SpherePoly.constant(self.n, other)
        self._check(other)
        return SpherePoly(self.n, np.vstack([self.exps, other.exps]),
                          np.concatenate([self.coeffs, other.coeffs]))

    __radd__ = __add__

    def __neg__(self):
        return SpherePoly(self.n, self.exps, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, SpherePoly):
            return SpherePoly(self.n, self.exps, self.coeffs * complex(other))
        return multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return SpherePoly(self.n, self.exps, self.coeffs / complex(c))

    def conj(self) -> "SpherePoly":
        return SpherePoly(self.n, np.hstack([self.beta, self.alpha]), np.conj(self.coeffs))

    def real_part(self) -> "SpherePoly":
        """``(f + conj f) / 2``, the real part as a function on C^n."""
        return (self + self.conj()) * 0.5

    def allclose(self, other: "SpherePoly", atol: float = 1e-10) -> bool:
        return (self - other).max_abs_coeff() <= atol

    # evaluation -----------------------------------------------------------
    def __call__(self, points):
        return evaluate(self, points)

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        items = sorted(self.terms().items())
        return {"n": self.n,
                "terms": [{"alpha": list(a), "beta": list(b), "re": float(c.real),
                           "im": float(c.imag)} for (a, b), c in items]}

    @classmethod
    def from_json(cls, obj: dict) -> "SpherePoly":
        n = int(obj["n"])
        if not obj["terms"]:
            return cls.zero(n)
        rows = [list(t["alpha"]) + list(t["beta"]) for t in obj["terms"]]
        if any(len(r) != 2 * n for r in rows):
            raise ValueError("multi-index length does not match n")
        return cls(n, rows, [complex(t["re"], t.get("im", 0.0)) for t in obj["terms"]])


def multiply(f: SpherePoly, g: SpherePoly) -> SpherePoly:
    """Exact coefficient convolution, chunked to bound memory."""
    f._check(g)
    if len(f) == 0 or len(g) == 0:
        return SpherePoly.zero(f.n)
    if len(f) < len(g):
        f, g = g, f
    radix = f.exps.max(axis=0) + g.exps.max(axis=0) + 1
    chunk = max(1, 4_000_000 // len(g))
    parts_e, parts_c = [], []
    for s in range(0, len(f), chunk):
        fe, fc = f.exps[s:s + chunk], f.coeffs[s:s + chunk]
        e = (fe[:, None, :] + g.exps[None, :, :]).reshape(-1, 2 * f.n)
        c = (fc[:, None] * g.coeffs[None, :]).ravel()
        e, c = _combine(e, c, radix)
        parts_e.append(e)
        parts_c.append(c)
    e, c = _combine(np.vstack(parts_e), np.concatenate(parts_c), radix)
    return SpherePoly(f.n, e, c)


def power(f: SpherePoly, k: int) -> SpherePoly:
    out = SpherePoly.constant(f.n)
    base = f
    while k:
        if k & 1:
            out = out * base
        k >>= 1
        if k:
            base = base * base
    return out


def norm_sq_poly(n: int) -> SpherePoly:
    """``|z|^2 = sum_i z_i zbar_i``."""
    eye = np.eye(n, dtype=np.int64)
    return SpherePoly(n, np.hstack([eye, eye]), np.ones(n))


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def _as_points(points, n):
    Z = np.asarray(points, dtype=complex)
    single = Z.ndim == 1
    Z = Z.reshape(-1, n)
    return Z, single


def evaluate(f: SpherePoly, points) -> np.ndarray | complex:
    """Values of ``f`` at ``points`` (shape (P, n) or (n,))."""
    Z, single = _as_points(points, f.n)
    out = np.zeros(Z.shape[0], dtype=complex)
    if len(f):
        chunk = max(1, 2_000_000 // len(f))
        for s in range(0, Z.shape[0], chunk):
            out[s:s + chunk] = _evaluate_block(f, Z[s:s + chunk])
    return complex(out[0]) if single else out


def _evaluate_block(f: SpherePoly, Z: np.ndarray) -> np.ndarray:
    a, b = f.alpha, f.beta
    if f.degree <= 64:
        vals = np.ones((Z.shape[0], len(f)), dtype=complex)
        Zc = np.conj(Z)
        for i in range(f.n):
            if a[:, i].any():
                vals *= Z[:, i:i + 1] ** a[None, :, i]
            if b[:, i].any():
                vals *= Zc[:, i:i + 1] ** b[None, :, i]
        return vals @ f.coeffs
    # high degree: work with log-moduli and phases so huge coefficients meet
    # tiny monomials without overflow
    mod = np.abs(Z)
    logmod = np.where(mod > 0, np.log(np.where(mod > 0, mod, 1.0)), _LOG_ZERO)
    arg = np.angle(Z)
    c = f.coeffs
    logc = np.log(np.abs(c))
    lm = logmod @ (a + b).T.astype(float) + logc[None, :]
    ph = arg @ (a - b).T.astype(float) + np.angle(c)[None, :]
    return np.sum(np.exp(lm) * np.exp(1j * ph), axis=1)


def derivative(f: SpherePoly, i: int, conj: bool = False) -> SpherePoly:
    """``d f / d z_i`` (or ``d f / d zbar_i``)."""
    col = i + (f.n if conj else 0)
    e = f.exps.copy()
    k = e[:, col]
    keep = k > 0
    e = e[keep]
    c = f.coeffs[keep] * k[keep]
    e[:, col] -= 1
    return SpherePoly(f.n, e, c)


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------


@lru_cache(maxsize=65536)
def _exact_moment(alpha: tuple, n: int) -> Fraction:
    num = math.factorial(n - 1) * math.prod(math.factorial(x) for x in alpha)
    return Fraction(num, math.factorial(n - 1 + sum(alpha)))


def monomial_integral(alpha: Sequence[int], beta: Sequence[int], n: int | None = None) -> float:
    """``int_S z^alpha zbar^beta dsigma`` for the normalized measure sigma."""
    alpha = tuple(int(x) for x in alpha)
    beta = tuple(int(x) for x in beta)
    n = len(alpha) if n is None else n
    if len(alpha) != n or len(beta) != n:
        raise ValueError("multi-index length must equal n")
    if alpha != beta:
        return 0.0
    return float(_moment_weights(np.array([alpha]), n)[0])


def _moment_weights(alpha: np.ndarray, n: int) -> np.ndarray:
    """``(n-1)! alpha! / (n-1+|alpha|)!`` per row of ``alpha``."""
    deg = alpha.sum(axis=1)
    out = np.empty(alpha.shape[0])
    small = deg <= LGAMMA_MAX_DEGREE
    if small.any():
        a = alpha[small]
        out[small] = np.exp(gammaln(n) + gammaln(a + 1).sum(axis=1) - gammaln(n + deg[small]))
        out[small & (deg == 0)] = 1.0
    for idx in np.flatnonzero(~small):
        out[idx] = float(_exact_moment(tuple(int(x) for x in alpha[idx]), n))
    return out


def _log_moment_weights(alpha: np.ndarray, n: int) -> np.ndarray:
    """``log`` of :func:`_moment_weights`, safe where the weights underflow."""
    deg = alpha.sum(axis=1)
    out = np.empty(alpha.shape[0])
    small = deg <= LGAMMA_MAX_DEGREE
    if small.any():
        a = alpha[small]
        out[small] = gammaln(n) + gammaln(a + 1).sum(axis=1) - gammaln(n + deg[small])
    for idx in np.flatnonzero(~small):
        w = _exact_moment(tuple(int(x) for x in alpha[idx]), n)
        out[idx] = math.log(w.numerator) - math.log(w.denominator)
    return out


def integrate_sphere(f: SpherePoly) -> complex:
    if len(f) == 0:
        return 0j
    diag = np.all(f.alpha == f.beta, axis=1)
    if not diag.any():
        return 0j
    w = _moment_weights(f.alpha[diag], f.n)
    return complex(np.dot(w, f.coeffs[diag]))


def l2_norm_sq(f: SpherePoly) -> float:
    """Exact ``||f||^2_{L^2(sigma)}``."""
    if len(f) == 0:
        return 0.0
    if f.is_holomorphic():
        with np.errstate(divide="ignore"):
            logs = _log_moment_weights(f.alpha, f.n) + 2 * np.log(np.abs(f.coeffs))
        return float(np.exp(logsumexp(logs)))
    return float(integrate_sphere(f * f.conj()).real)


def l2_inner(f: SpherePoly, g: SpherePoly) -> complex:
    return integrate_sphere(f * g.conj())


def gaussian_moment_integral(f: SpherePoly) -> complex:
    """Sphere integral via Gaussian moments.

    For a standard complex Gaussian vector w, ``E|w^alpha|^2 = alpha!`` and
    ``E|w|^{2m} = (n-1+m)!/(n-1)!``; homogeneity then gives the sphere moment.
    Computed term by term in exact rational arithmetic.
    """
    total = Fraction(0)
    total_im = Fraction(0)
    for (a, b), c in f.terms().items():
        if a != b:
            continue
        m = sum(a)
        gauss = math.prod(math.factorial(x) for x in a)
        radial = Fraction(math.factorial(f.n - 1 + m), math.factorial(f.n - 1))
        w = gauss / radial
        total += w * Fraction(c.real)
        total_im += w * Fraction(c.imag)
    return complex(float(total), float(total_im))


# --------------------------------------------------------------------------
# Laplacian and harmonic decomposition
# --------------------------------------------------------------------------


def complex_laplacian(f: SpherePoly) -> SpherePoly:
    """``4 sum_i d^2 f / dz_i dzbar_i``."""
    n = f.n
    parts_e, parts_c = [], []
    for i in range(n):
        ai, bi = f.exps[:, i], f.exps[:, n + i]
        keep = (ai > 0) & (bi > 0)
        if not keep.any():
            continue
        e = f.exps[keep].copy()
        e[:, i] -= 1
        e[:, n + i] -= 1
        parts_e.append(e)
        parts_c.append(4 * f.coeffs[keep] * ai[keep] * bi[keep])
    if not parts_e:
        return SpherePoly.zero(n)
    return SpherePoly(n, np.vstack(parts_e), np.concatenate(parts_c))


def bidegree_components(f: SpherePoly) -> dict[tuple[int, int], SpherePoly]:
    bd = f.bidegrees()
    out = {}
    for p, q in sorted({(int(x), int(y)) for x, y in bd}):
        mask = (bd[:, 0] == p) & (bd[:, 1] == q)
        out[(p, q)] = SpherePoly(f.n, f.exps[mask], f.coeffs[mask])
    return out


def harmonic_decomposition(f: SpherePoly) -> list[SpherePoly]:
    """Split a bidegree-(p, q) polynomial as ``f = sum_l |z|^{2l} h_l``.

    ``h_l`` lies in H(p-l, q-l).  Since
    ``Lap(|z|^{2l} h) = 4 l (p + q + n - l - 1) |z|^{2l-2} h`` for harmonic
    ``h`` of bidegree ``(p-l, q-l)``, the components of ``Lap f`` determine
    ``h_1, h_2, ...`` and ``h_0`` is what remains.
    """
    bds = f.bidegree_set()
    if len(bds) > 1:
        raise NotHomogeneousError(f"bidegrees {sorted(bds)} present")
    if not bds:
        return [SpherePoly.zero(f.n)]
    (p, q), = bds
    return _harmonic_decomposition(f, p, q)


def _harmonic_decomposition(f: SpherePoly, p: int, q: int) -> list[SpherePoly]:
    n = f.n
    if p == 0 or q == 0:
        return [f]
    lap = complex_laplacian(f)
    if len(lap) == 0:
        return [f]
    lower = _harmonic_decomposition(lap, p - 1, q - 1)
    hs = [None]
    r2 = norm_sq_poly(n)
    r2pow = SpherePoly.constant(n)
    rest = f
    for ell, g in enumerate(lower, start=1):
        h = g / (4 * ell * (p + q + n - ell - 1))
        r2pow = r2pow * r2
        rest = rest - r2pow * h
        hs.append(h)
    hs[0] = rest
    return hs


def harmonic_projections(f: SpherePoly) -> dict[tuple[int, int], SpherePoly]:
    """H(p, q)-projections of ``f`` as a function on S."""
    acc: dict[tuple[int, int], SpherePoly] = {}
    for (p, q), comp in bidegree_components(f).items():
        for ell, h in enumerate(harmonic_decomposition(comp)):
            key = (p - ell, q - ell)
            acc[key] = acc[key] + h if key in acc else h
    return acc


def spectrum(f: SpherePoly, tol: float = SPECTRUM_TOL) -> set[tuple[int, int]]:
    """``{(p, q) : ||H(p,q)-projection of f||_2 > tol}``."""
    return {k for k, h in harmonic_projections(f).items() if math.sqrt(max(l2_norm_sq(h), 0.0)) > tol}


def spectrum_superset(bidegrees) -> set[tuple[int, int]]:
    """Bidegrees reachable by harmonic decomposition: ``(p-l, q-l)``, ``l <= min(p, q)``."""
    out = set()
    for p, q in bidegrees:
        for ell in range(min(p, q) + 1):
            out.add((p - ell, q - ell))
    return out


def product_bidegree_rule(pq: tuple[int, int], rs: tuple[int, int]) -> set[tuple[int, int]]:
    """Possible bidegrees of H(p,q) * H(r,s): ``(p+r-l, q+s-l)``, ``l <= min(p,s)+min(q,r)``."""
    (p, q), (r, s) = pq, rs
    L = min(p, s) + min(q, r)
    return {(p + r - ell, q + s - ell) for ell in range(L + 1)}


# --------------------------------------------------------------------------
# slices
# --------------------------------------------------------------------------


def check_unit(zeta, tol: float = UNIT_TOL) -> np.ndarray:
    z = np.asarray(zeta, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(z) - 1) > tol:
        raise NotOnSphereError(f"| |zeta| - 1 | = {abs(np.linalg.norm(z) - 1):.3g}")
    return z


def slice_restrict(f: SpherePoly, zeta) -> TrigPoly:
    """``lambda -> f(lambda zeta)`` as a trigonometric polynomial in ``lambda``."""
    z = check_unit(zeta)
    if z.size != f.n:
        raise ValueError("point dimension does not match polynomial")
    if len(f) == 0:
        return TrigPoly.from_dict({})
    bd = f.bidegrees()
    return TrigPoly._raw(bd[:, 0] - bd[:, 1], _monomial_values(f, z) * f.coeffs)


def _monomial_values(f: SpherePoly, z: np.ndarray) -> np.ndarray:
    """``z^alpha zbar^beta`` for every term of ``f`` at a single point."""
    a, b = f.alpha, f.beta
    if f.degree <= 64:
        return np.prod(z[None, :] ** a * np.conj(z)[None, :] ** b, axis=1)
    mod = np.abs(z)
    logmod = np.where(mod > 0, np.log(np.where(mod > 0, mod, 1.0)), _LOG_ZERO)
    return np.exp((a + b) @ logmod + 1j * ((a - b) @ np.angle(z)))


def slice_mean_poly(f: SpherePoly) -> SpherePoly:
    """``zeta -> int_T f(lambda zeta) dm(lambda)``: keeps the bidegree-diagonal terms."""
    bd = f.bidegrees()
    mask = bd[:, 0] == bd[:, 1]
    return SpherePoly(f.n, f.exps[mask], f.coeffs[mask])


def slice_integral_identity_check(f: SpherePoly, mode: str = "exact", samples: int = 4096,
                                  seed: int = 0) -> float:
    """``|int_S f dsigma - int_S int_T f(lambda zeta) dm dsigma(zeta)|``.

    ``exact`` integrates the slice means symbolically through the Gaussian
    moment route; ``monte_carlo`` averages frequency-0 slice coefficients over
    sampled ``zeta`` (the residual is then a Monte Carlo error).
    """
    lhs = integrate_sphere(f)
    if mode == "exact":
        rhs = gaussian_moment_integral(slice_mean_poly(f))
    elif mode == "monte_carlo":
        pts = sample_sphere(f.n, samples, seed)
        rhs = np.mean([slice_restrict(f, z).coeff(0) for z in pts])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(abs(lhs - rhs))


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def sample_sphere(n: int, count: int, seed: int, start: int = 0) -> np.ndarray:
    """Uniform points on S (normalized complex Gaussians).

    Point ``i`` depends only on ``(seed, i)``: points come in blocks of 1024,
    each drawn from its own spawned seed sequence.
    """
    if count <= 0:
        return np.zeros((0, n), dtype=complex)
    first, last = start // _SAMPLE_BLOCK, (start + count - 1) // _SAMPLE_BLOCK
    blocks = []
    for b in range(first, last + 1):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(b,)))
        g = rng.standard_normal((_SAMPLE_BLOCK, 2 * n))
        w = g[:, :n] + 1j * g[:, n:]
        blocks.append(w / np.linalg.norm(w, axis=1, keepdims=True))
    allpts = np.vstack(blocks)
    off = start - first * _SAMPLE_BLOCK
    return allpts[off:off + count]


# --------------------------------------------------------------------------
# sup-norm bounds
# --------------------------------------------------------------------------


def monomial_sup(gamma: Sequence[int]) -> float:
    """``max_S |z^gamma| = prod_i (gamma_i/|gamma|)^{gamma_i/2}`` with ``0^0 = 1``."""
    g = np.asarray(gamma, dtype=float).reshape(1, -1)
    return float(_monomial_sups(g)[0])


def _monomial_sups(g: np.ndarray) -> np.ndarray:
    tot = g.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(g > 0, 0.5 * g * np.log(g / np.where(tot > 0, tot, 1)), 0.0)
    return np.exp(logs.sum(axis=1))


def coefficient_sup_bound(f: SpherePoly) -> float:
    """``sum |c| * max_S |z^(alpha+beta)|``, an upper bound for ``sup_S |f|``."""
    if len(f) == 0:
        return 0.0
    return float(np.dot(np.abs(f.coeffs), _monomial_sups((f.alpha + f.beta).astype(float))))


class SupBounds(NamedTuple):
    lower: float
    upper: float


def _torus_rows(f: SpherePoly, t: np.ndarray, deg_t: int) -> np.ndarray:
    """Weights ``c cos(t)^(a1+b1) sin(t)^(a2+b2)`` for rows ``t`` (n = 2)."""
    a1 = (f.exps[:, 0] + f.exps[:, 2]).astype(float)
    a2 = (f.exps[:, 1] + f.exps[:, 3]).astype(float)
    c, s = np.cos(t), np.sin(t)
    if deg_t <= 64:
        return (c[:, None] ** a1[None, :]) * (s[:, None] ** a2[None, :]) * f.coeffs[None, :]
    lc = np.where(np.abs(c) > 0, np.log(np.abs(np.where(c == 0, 1.0, c))), _LOG_ZERO)
    ls = np.where(np.abs(s) > 0, np.log(np.abs(np.where(s == 0, 1.0, s))), _LOG_ZERO)
    sign = (np.where(c < 0, -1.0, 1.0)[:, None] ** a1[None, :]
            * np.where(s < 0, -1.0, 1.0)[:, None] ** a2[None, :])
    logw = lc[:, None] * a1[None, :] + ls[:, None] * a2[None, :] + np.log(np.abs(f.coeffs))[None, :]
    return sign * np.exp(logw) * np.exp(1j * np.angle(f.coeffs))[None, :]


def torus_grid_sup(f: SpherePoly, oversample: float = 16.0, min_size: int = 512,
                   max_points: int = 400_000_000) -> tuple[float, float] | None:
    """Grid maximum and certified sup bound for bidegree-homogeneous ``f`` on S^3.

    Writes ``|f(zeta)| = |g(t, phi)|`` with ``zeta = (cos t e^{i phi}, sin t)``;
    ``g`` is a trigonometric polynomial of degree ``D = p + q`` in each
    variable.  At a maximizer the gradient vanishes and Bernstein's inequality
    bounds the Hessian by ``D^2 sup|g|``, so every grid point within ``h/2`` per
    coordinate satisfies ``|g| >= sup|g| (1 - D^2 h^2 / 2)``.

    Returns ``(grid_max, certified_upper)`` or ``None`` when not applicable.
    """
    if f.n != 2 or len(f) == 0 or not f.is_homogeneous():
        return None
    D = f.degree
    if D == 0:
        v = abs(complex(f.coeffs[0]))
        return v, v
    M = max(int(math.ceil(oversample * D)), min_size)
    M += M % 2
    h = 2 * math.pi / M
    shrink = 1 - D * D * h * h / 2
    if shrink <= 0 or (M // 2) * M > max_points:
        return None
    freq = (f.exps[:, 0] - f.exps[:, 2]) % M
    uniq_freq = np.unique(freq).size == len(f)
    best = 0.0
    rows = np.arange(M // 2) * h
    chunk = max(1, 2_000_000 // M)
    for s in range(0, rows.size, chunk):
        W = _torus_rows(f, rows[s:s + chunk], D)
        V = np.zeros((W.shape[0], M), dtype=complex)
        if uniq_freq:
            V[:, freq] = W
        else:
            for m in np.unique(freq):
                V[:, m] = W[:, freq == m].sum(axis=1)
        G = np.fft.ifft(V, axis=1) * M
        best = max(best, float(np.abs(G).max()))
    return best, best / shrink * (1 + 1e-12)


def _ascend(f: SpherePoly, starts: np.ndarray, steps: int) -> np.ndarray:
    """Projected gradient ascent of |f|^2 on the real 2n-sphere; returns |f| at the end."""
    if steps <= 0 or f.degree == 0:
        return np.abs(evaluate(f, starts))
    d_z = [derivative(f, i) for i in range(f.n)]
    d_zb = [derivative(f, i, conj=True) for i in range(f.n)]
    Z = starts.copy()
    val = np.abs(evaluate(f, Z)) ** 2
    eta = np.full(Z.shape[0], 0.5 / max(f.degree, 1))
    for _ in range(steps):
        fv = evaluate(f, Z)
        grad = np.stack([np.conj(fv) * evaluate(d_zb[i], Z) + fv * np.conj(evaluate(d_z[i], Z))
                         for i in range(f.n)], axis=1) * 2
        grad -= np.real(np.sum(grad * np.conj(Z), axis=1))[:, None] * Z
        scale = np.maximum(np.linalg.norm(grad, axis=1), 1e-300)
        trial = Z + (eta / scale * np.sqrt(val + 1e-300))[:, None] * grad
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        tv = np.abs(evaluate(f, trial)) ** 2
        up = tv > val
        Z[up], val[up] = trial[up], tv[up]
        eta = np.where(up, eta * 1.2, eta * 0.5)
    return np.sqrt(val)


def sup_norm_bounds(f: SpherePoly, samples: int = 4096, ascent_steps: int = 40, seed: int = 0,
                    multistarts: int = 64, grid: bool = True) -> SupBounds:
    """Bracket ``sup_S |f|``.

    ``lower`` is the best sampled value after local ascent from the top
    ``multistarts`` samples.  ``upper`` is the coefficient-sum bound, tightened
    by the torus-grid certificate when ``f`` is bidegree-homogeneous on S^3.
    """
    if len(f) == 0:
        return SupBounds(0.0, 0.0)
    upper = coefficient_sup_bound(f)
    if f.degree == 0:
        v = abs(complex(f.coeffs.sum()))
        return SupBounds(v, v)
    pts = sample_sphere(f.n, samples, seed)
    vals = np.abs(evaluate(f, pts))
    top = np.argsort(vals)[::-1][:multistarts]
    lower = max(float(vals.max()), float(_ascend(f, pts[top], ascent_steps).max()))
    if grid:
        cert = torus_grid_sup(f)
        if cert is not None:
            lower = max(lower, cert[0])
            upper = min(upper, cert[1])
    return SupBounds(lower, upper)
