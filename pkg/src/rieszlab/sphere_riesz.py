"""Riesz products on the unit sphere of C^n built from RW sequences.

A triple ``(R, J, a)`` gives partial products

    N_kappa = prod_{k <= kappa} (1 + Re[a_k R_{j_k}])

whose restriction to a complex line ``lambda -> lambda zeta`` is a classical
Riesz product on the circle with coefficients ``a_k R_{j_k}(zeta)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circle_riesz import (AdmissibilityError, AdmissiblePair, TrigPoly, check_lacunary,
                           circle_points, default_grid, exp_phase, hellinger_affinity,
                           l1_distance, partial_product_circle)
from .rw_unitary import (DegreeCapError, RWSequence, UnitaryMatrix, compose_unitary,
                         haar_unitaries)
from .sphere_poly import (SpherePoly, check_unit, gaussian_moment_integral, integrate_sphere,
                          sample_sphere, slice_mean_poly, slice_restrict)

EXPANSION_TERM_CAP = 2_000_000
STABLE_TOL = 1e-10


class ExpansionCapError(RuntimeError):
    pass


@dataclass(eq=False)
class RieszTriple:
    """``(R, J, a)``, optionally scrambled by unitaries ``U_k`` (member k is ``R_{j_k} o U_k``)."""

    R: RWSequence
    J: tuple
    a: tuple
    unitaries: tuple | None = None
    _members: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.J = tuple(int(j) for j in self.J)
        self.a = tuple(complex(x) for x in self.a)
        check_lacunary(self.J)
        if len(self.a) < len(self.J):
            raise AdmissibilityError("need one coefficient per index")
        self.a = self.a[: len(self.J)]
        bad = [k for k, x in enumerate(self.a) if not abs(x) < 1]
        if bad:
            raise AdmissibilityError(f"|a_k| < 1 violated at k={bad[0] + 1}")
        missing = [j for j in self.J if j not in self.R]
        if missing:
            raise DegreeCapError(f"RW sequence has no member of degree {missing[0]} "
                                 f"(available up to {max(self.R.degrees, default=0)})")
        if self.unitaries is not None:
            self.unitaries = tuple(self.unitaries)
            if len(self.unitaries) < len(self.J):
                raise ValueError("need one unitary per index")

    @property
    def n(self) -> int:
        return self.R.n

    def __len__(self) -> int:
        return len(self.J)

    def with_coeffs(self, b: Sequence[complex]) -> "RieszTriple":
        return RieszTriple(self.R, self.J, tuple(b), self.unitaries)

    def member(self, k: int) -> SpherePoly:
        """Polynomial used in factor ``k`` (1-based)."""
        if k not in self._members:
            p = self.R.poly(self.J[k - 1])
            if self.unitaries is not None:
                p = compose_unitary(p, self.unitaries[k - 1])
            self._members[k] = p
        return self._members[k]

    def member_values(self, k: int, points) -> np.ndarray:
        """``R_{j_k}(U_k zeta)`` without expanding the composition."""
        Z = np.asarray(points, dtype=complex).reshape(-1, self.n)
        if self.unitaries is not None:
            Z = self.unitaries[k - 1].apply(Z)
        return self.R.evaluate(self.J[k - 1], Z)

    def factor(self, k: int) -> SpherePoly:
        p = self.member(k)
        a = self.a[k - 1]
        return SpherePoly.constant(self.n) + p * (a / 2) + p.conj() * (np.conj(a) / 2)


def _keep(f: SpherePoly, mask: np.ndarray) -> SpherePoly:
    return SpherePoly(f.n, f.exps[mask], f.coeffs[mask])


def partial_product_sphere(t: RieszTriple, kappa: int, cap: int = EXPANSION_TERM_CAP) -> SpherePoly:
    """Exact coefficient expansion of ``N_kappa``."""
    if not 0 <= kappa <= len(t):
        raise ValueError(f"kappa must lie in [0, {len(t)}]")
    out = SpherePoly.constant(t.n)
    for k in range(1, kappa + 1):
        fac = t.factor(k)
        if len(out) * len(fac) > cap:
            raise ExpansionCapError(f"expansion at kappa={k} may exceed {cap} terms; "
                                    "use slice evaluation instead")
        out = out * fac
    return out


def sphere_product_values(t: RieszTriple, kappa: int, points) -> np.ndarray:
    """Pointwise values of ``N_kappa`` as a product of factor values."""
    Z = np.asarray(points, dtype=complex).reshape(-1, t.n)
    vals = np.ones(Z.shape[0])
    for k in range(1, kappa + 1):
        vals *= 1 + (t.a[k - 1] * t.member_values(k, Z)).real
    return vals


def check_nonnegative(t: RieszTriple, kappa: int, samples: int = 1000, seed: int = 0,
                      tol: float = 1e-10) -> float:
    """Minimum of ``N_kappa`` over sampled points; raises below ``-tol``."""
    m = float(sphere_product_values(t, kappa, sample_sphere(t.n, samples, seed)).min())
    if m < -tol:
        raise ValueError(f"partial product takes value {m:.3g} < -{tol}")
    return m


def slice_coefficients(t: RieszTriple, zeta, kappa: int | None = None) -> list[complex]:
    """Circle coefficients ``a_k R_{j_k}(zeta)`` of the slice product."""
    z = check_unit(zeta)
    kappa = len(t) if kappa is None else kappa
    return [complex(t.a[k - 1] * t.member_values(k, z)[0]) for k in range(1, kappa + 1)]


def slice_product(t: RieszTriple, zeta, kappa: int) -> TrigPoly:
    """``lambda -> N_kappa(lambda zeta)`` as a classical Riesz product."""
    c = slice_coefficients(t, zeta, kappa)
    return partial_product_circle(AdmissiblePair(t.J[:kappa], c), kappa)


def slice_decomposition_check(t: RieszTriple, kappa: int, f: SpherePoly, mode: str = "exact",
                              samples: int = 4096, seed: int = 0) -> float:
    """``|int_S f N_kappa dsigma - int_S int_T f(lambda zeta) N_zeta(lambda) dm dsigma|``.

    The left side is exact monomial integration. In ``exact`` mode the right
    side takes the frequency-0 part of every slice symbolically and integrates
    it through Gaussian moments. ``monte_carlo`` multiplies actual slice
    polynomials and averages their constant terms over sampled ``zeta``.
    """
    prod = f * partial_product_sphere(t, kappa)
    lhs = integrate_sphere(prod)
    if mode == "exact":
        rhs = gaussian_moment_integral(slice_mean_poly(prod))
    elif mode == "monte_carlo":
        Z = sample_sphere(t.n, samples, seed)
        rhs = np.mean([(slice_restrict(f, z) * slice_product(t, z, kappa)).coeff(0) for z in Z])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(abs(lhs - rhs))


def integrate_against_product(t: RieszTriple, f: SpherePoly, kappa: int, prune: bool = True,
                              cap: int = EXPANSION_TERM_CAP) -> complex:
    """Exact ``int_S f N_kappa dsigma``.

    With ``prune`` the factors are multiplied from the largest index down and
    every term whose net degree ``|alpha| - |beta|`` can no longer be
    cancelled by ``f`` and the remaining factors is dropped.  Such terms
    integrate to zero against anything left, so the result is unchanged.
    """
    if not prune:
        return integrate_sphere(f * partial_product_sphere(t, kappa, cap))
    d = f.degree
    remaining = sum(t.J[:kappa])
    acc = SpherePoly.constant(t.n)
    for k in range(kappa, 0, -1):
        remaining -= t.J[k - 1]
        fac = t.factor(k)
        if len(acc) * len(fac) > cap:
            raise ExpansionCapError(f"pruned expansion at factor {k} may exceed {cap} terms")
        acc = acc * fac
        bd = acc.bidegrees()
        acc = _keep(acc, np.abs(bd[:, 0] - bd[:, 1]) <= d + remaining)
    return integrate_sphere(f * acc)


def stabilization_threshold(J: Sequence[int], degree: int) -> int:
    """Smallest ``kappa0`` with ``j_K - sum_{k<K} j_k > degree`` for every ``K > kappa0``.

    Beyond it, every new term has net degree too large to pair with ``f``, so
    ``int f dN_kappa`` no longer changes.
    """
    kappa0, total = 0, 0
    for K, j in enumerate(J, start=1):
        if j - total <= degree:
            kappa0 = K
        total += j
    return kappa0


def moment_stabilization_check(t: RieszTriple, f: SpherePoly, kappa0: int, kappa1: int,
                               prune: bool | None = None) -> float:
    """``max_{kappa0 <= kappa <= kappa1} |int f dN_kappa - int f dN_kappa0|``.

    Each integral is computed independently; the full expansion is used
    whenever it fits under the term cap unless ``prune`` is forced.
    """
    def moment(kappa):
        use_prune = prune
        if use_prune is None:
            size = len(f)
            for k in range(1, kappa + 1):
                size *= len(t.factor(k))
            use_prune = size > EXPANSION_TERM_CAP
        return integrate_against_product(t, f, kappa, prune=use_prune)

    base = moment(kappa0)
    return max((abs(moment(k) - base) for k in range(kappa0, kappa1 + 1)), default=0.0)


# --------------------------------------------------------------------------
# slice diagnostics
# --------------------------------------------------------------------------


def _slice_grid(J: Sequence[int], kappa: int, grid_size: int | None) -> int:
    return int(grid_size) if grid_size else default_grid(sum(J[:kappa]))


def _slice_values(J, coeffs, u):
    """Running slice products at phases ``u`` for kappa = 0, 1, ..."""
    vals = np.ones(u.size)
    yield vals
    for j, c in zip(J, coeffs):
        vals = vals * (1 + (c * exp_phase(j, u)).real)
        yield vals


def _scramble_sums(t: RieszTriple, c: Sequence[complex], Z: np.ndarray, kappa: int) -> np.ndarray:
    vals = np.column_stack([t.member_values(k, Z) for k in range(1, kappa + 1)])
    w = np.abs(np.asarray(c[:kappa], dtype=complex)) ** 2
    return np.cumsum(w[None, :] * np.abs(vals) ** 2, axis=1)


def _profiles(tA: RieszTriple, tB: RieszTriple, kappas: Sequence[int], Z: np.ndarray,
              N: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-zeta affinity and L1 at each requested kappa: arrays (len(Z), len(kappas)).

    Direction ``i`` uses replicate ``i`` of :func:`circle_points`.
    """
    if tA.J != tB.J or tA.R is not tB.R:
        raise ValueError("triples must share R and J")
    kmax = max(kappas)
    want = {k: i for i, k in enumerate(kappas)}
    vA = np.column_stack([tA.member_values(k, Z) for k in range(1, kmax + 1)])
    vB = np.column_stack([tB.member_values(k, Z) for k in range(1, kmax + 1)]) \
        if tB.unitaries is not tA.unitaries else vA
    ca = vA * np.asarray(tA.a[:kmax])[None, :]
    cb = vB * np.asarray(tB.a[:kmax])[None, :]
    aff = np.empty((Z.shape[0], len(kappas)))
    l1 = np.empty_like(aff)
    top = sum(tA.J[:kmax])
    for i in range(Z.shape[0]):
        u, _ = circle_points(top, N, i, seed)
        ga = _slice_values(tA.J[:kmax], ca[i], u)
        gb = _slice_values(tB.J[:kmax], cb[i], u)
        for k, (pa, pb) in enumerate(zip(ga, gb)):
            if k in want:
                aff[i, want[k]] = hellinger_affinity(pa, pb)
                l1[i, want[k]] = l1_distance(pa, pb)
    return aff, l1


def slice_affinity_profile(tA: RieszTriple, tB: RieszTriple, kappa: int, zeta_count: int = 200,
                           grid_size: int | None = None, seed: int = 0
                           ) -> tuple[float, float, float]:
    """Mean over sampled ``zeta`` of slice affinity and L1; stderr of the L1 mean."""
    Z = sample_sphere(tA.n, zeta_count, seed)
    N = _slice_grid(tA.J, kappa, grid_size)
    aff, l1 = _profiles(tA, tB, [kappa], Z, N, seed)
    m = l1.shape[0]
    se = float(l1[:, 0].std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return float(aff[:, 0].mean()), float(l1[:, 0].mean()), se


@dataclass
class SingularityRow:
    kappa: int
    mean_affinity: float
    mean_l1: float
    stderr: float
    median_scramble_sum: float


SINGULARITY_HEADER = ("kappa", "mean_affinity", "mean_l1", "stderr", "median_scramble_sum")


def looks_square_summable(diff: Sequence[complex]) -> bool:
    """Heuristic: the tail of ``|a_k - b_k|^2`` is small next to its head."""
    d = np.abs(np.asarray(diff, dtype=complex)) ** 2
    if d.size < 4:
        return False
    h = d.size // 2
    return bool(d[h:].sum() < 0.1 * d[:h].sum()) or float(d.sum()) == 0.0


def mutual_singularity_experiment(R: RWSequence, J: Sequence[int], a: Sequence[complex],
                                  b: Sequence[complex], seed: int, kappa_max: int,
                                  zeta_count: int = 200, grid_size: int | None = None,
                                  kappas: Iterable[int] | None = None, scramble: bool = True
                                  ) -> list[SingularityRow]:
    """Slice-averaged affinity and L1 between ``N(R o U, J, a)`` and ``N(R o U, J, b)``.

    Unitaries are Haar draws (stream ``(seed, 0)``); directions use stream
    ``(seed, 1)``.  The scrambling sum uses ``c_k = a_k - b_k``.
    """
    J = tuple(J[:kappa_max])
    if len(J) < kappa_max:
        raise ValueError(f"need {kappa_max} indices, got {len(J)}")
    diff = [x - y for x, y in zip(a[:kappa_max], b[:kappa_max])]
    if looks_square_summable(diff):
        warnings.warn("a - b looks square summable; no separation is expected", stacklevel=2)
    ss = np.random.SeedSequence(int(seed))
    U_seed, Z_seed = (int(s.generate_state(1, np.uint64)[0]) for s in ss.spawn(2))
    U = haar_unitaries(R.n, kappa_max, U_seed) if scramble else None
    tA = RieszTriple(R, J, a, U)
    tB = tA.with_coeffs(b)
    kappas = sorted(set(kappas)) if kappas is not None else list(range(1, kappa_max + 1))
    Z = sample_sphere(R.n, zeta_count, Z_seed)
    N = _slice_grid(J, kappa_max, grid_size)
    aff, l1 = _profiles(tA, tB, kappas, Z, N, Z_seed)
    S = _scramble_sums(tA, diff, Z, kappa_max)
    rows = []
    for i, k in enumerate(kappas):
        se = float(l1[:, i].std(ddof=1) / math.sqrt(len(Z))) if len(Z) > 1 else 0.0
        med = float(np.median(S[:, k - 1])) if k > 0 else 0.0
        rows.append(SingularityRow(k, float(aff[:, i].mean()), float(l1[:, i].mean()), se, med))
    return rows
