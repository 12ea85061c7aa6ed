"""Ryll-Wojtaszczyk sequences, Haar unitaries and scrambling.

An RW member of degree j is a homogeneous holomorphic polynomial with
certified ``sup_S |R_j| <= 1`` and exactly computed L2 norm.  Candidates are
random-sign combinations

    sum_{|alpha| = j} eps_alpha sqrt(j!/alpha!) z^alpha,

whose L2(sigma) norm is exactly 1, so a candidate's quality is decided by its
sup norm alone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .sphere_poly import (SpherePoly, SupBounds, l2_norm_sq, power, sample_sphere,
                          sup_norm_bounds)

UNITARY_TOL = 1e-10
COMPOSE_DEGREE_CAP = {2: 24, 3: 12}
RW_TERM_CAP = 4096


class DegreeCapError(ValueError):
    pass


class RWCertificationError(ValueError):
    pass


def compose_cap(n: int) -> int:
    return COMPOSE_DEGREE_CAP.get(n, 8)


def check_rw_degree(j: int, n: int, cap: int = RW_TERM_CAP) -> None:
    """Refuse degrees whose dense candidate would have more than ``cap`` monomials."""
    terms = math.comb(int(j) + n - 1, n - 1)
    if terms > cap:
        raise DegreeCapError(f"an RW member of degree {j} in n={n} needs {terms} monomials "
                             f"(cap {cap}); this degree cannot be certified")


# --------------------------------------------------------------------------
# unitaries
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    entries: np.ndarray
    defect: float = field(default=float("nan"))

    def __post_init__(self):
        U = np.array(self.entries, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError("unitary must be square")
        d = float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max())
        if d > UNITARY_TOL:
            raise ValueError(f"unitarity defect {d:.3g} exceeds {UNITARY_TOL}")
        U.setflags(write=False)
        object.__setattr__(self, "entries", U)
        object.__setattr__(self, "defect", d)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "UnitaryMatrix":
        return cls(np.eye(n))

    def apply(self, points) -> np.ndarray:
        """``U z`` for each row ``z`` of ``points``."""
        Z = np.asarray(points, dtype=complex)
        return Z @ self.entries.T

    def to_json(self) -> dict:
        U = self.entries
        return {"re": U.real.tolist(), "im": U.imag.tolist()}


def haar_unitary(n: int, seed) -> UnitaryMatrix:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    diagonal phases of R moved into Q."""
    rng = np.random.default_rng(seed if isinstance(seed, np.random.SeedSequence)
                                else np.random.SeedSequence(seed))
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    q = q * (d / np.abs(d))[None, :]
    return UnitaryMatrix(q)


def haar_unitaries(n: int, count: int, seed: int) -> list[UnitaryMatrix]:
    """Independent Haar unitaries; the k-th depends only on ``(seed, k)``."""
    return [haar_unitary(n, np.random.SeedSequence(int(seed), spawn_key=(k,)))
            for k in range(count)]


def _linear_powers(U: np.ndarray, n: int, max_pow: list[int], conj: bool):
    """Powers of the linear forms ``(U z)_i`` (or their conjugates)."""
    out = []
    for i in range(n):
        row = np.conj(U[i]) if conj else U[i]
        e = np.zeros((n, 2 * n), dtype=np.int64)
        e[np.arange(n), np.arange(n) + (n if conj else 0)] = 1
        form = SpherePoly(n, e, row)
        pw = [SpherePoly.constant(n)]
        for _ in range(max_pow[i]):
            pw.append(pw[-1] * form)
        out.append(pw)
    return out


def compose_unitary(f: SpherePoly, U: UnitaryMatrix, cap: int | None = None) -> SpherePoly:
    """Coefficients of ``z -> f(U z)`` by exact multinomial substitution."""
    if U.n != f.n:
        raise ValueError("dimension mismatch")
    cap = compose_cap(f.n) if cap is None else cap
    if f.degree > cap:
        raise DegreeCapError(f"degree {f.degree} exceeds composition cap {cap} for n={f.n}")
    n = f.n
    A = U.entries
    pz = _linear_powers(A, n, list(f.alpha.max(axis=0)) if len(f) else [0] * n, conj=False)
    pzb = _linear_powers(A, n, list(f.beta.max(axis=0)) if len(f) else [0] * n, conj=True)
    out = SpherePoly.zero(n)
    for row, c in zip(f.exps, f.coeffs):
        term = SpherePoly.constant(n, c)
        for i in range(n):
            if row[i]:
                term = term * pz[i][row[i]]
            if row[n + i]:
                term = term * pzb[i][row[n + i]]
        out = out + term
    return out


# --------------------------------------------------------------------------
# RW candidates and certification
# --------------------------------------------------------------------------


def multi_indices(j: int, n: int) -> np.ndarray:
    """All ``alpha`` with ``|alpha| = j`` in ``n`` variables, lexicographically decreasing."""
    rows = []
    for bars in itertools.combinations(range(j + n - 1), n - 1):
        prev, a = -1, []
        for b in bars:
            a.append(b - prev - 1)
            prev = b
        a.append(j + n - 2 - prev)
        rows.append(a)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


def _sqrt_multinomials(alpha: np.ndarray) -> np.ndarray:
    j = alpha.sum(axis=1)
    return np.exp(0.5 * (gammaln(j + 1) - gammaln(alpha + 1).sum(axis=1)))


def signed_candidate(j: int, n: int, signs: np.ndarray) -> SpherePoly:
    alpha = multi_indices(j, n)
    exps = np.hstack([alpha, np.zeros_like(alpha)])
    return SpherePoly(n, exps, signs * _sqrt_multinomials(alpha))


def random_homogeneous_candidate(j: int, n: int, seed) -> SpherePoly:
    """``sum eps_alpha sqrt(j!/alpha!) z^alpha`` with random signs; exact L2 norm 1."""
    rng = np.random.default_rng(seed)
    k = multi_indices(j, n).shape[0]
    return signed_candidate(j, n, rng.choice([-1.0, 1.0], size=k))


def power_norm(j: int, n: int) -> float:
    """Exact ``||z_1^j||_2 = sqrt((n-1)! j! / (n-1+j)!)``."""
    return math.sqrt(math.factorial(n - 1) * math.factorial(j) / math.factorial(n - 1 + j))


@dataclass(frozen=True, eq=False)
class RWMember:
    degree: int
    poly: SpherePoly
    delta: float
    sup_lower: float
    sup_upper: float
    trial: int = 0

    def to_json(self) -> dict:
        d = self.poly.to_json()
        d.update(degree=self.degree, delta=self.delta, sup_lower=self.sup_lower,
                 sup_upper=self.sup_upper, trial=self.trial)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "RWMember":
        return cls(int(obj["degree"]), SpherePoly.from_json(obj), float(obj["delta"]),
                   float(obj["sup_lower"]), float(obj["sup_upper"]), int(obj.get("trial", 0)))


def _select_trial(j: int, n: int, trials: int, rng: np.random.Generator,
                  points: int) -> tuple[int, np.ndarray]:
    """Pick the sign vector with the smallest sampled sup."""
    alpha = multi_indices(j, n)
    k = alpha.shape[0]
    signs = rng.choice([-1.0, 1.0], size=(trials, k))
    if trials == 1:
        return 0, signs[0]
    Z = sample_sphere(n, points, int(rng.integers(2 ** 63)))
    # column t of vals holds sqrt(j!/alpha_t!) z^alpha_t at every sample point
    logmod = np.log(np.maximum(np.abs(Z), 1e-300))
    vals = np.exp(logmod @ alpha.T.astype(float) + 1j * (np.angle(Z) @ alpha.T.astype(float))
                  + np.log(_sqrt_multinomials(alpha))[None, :])
    est = np.abs(vals @ signs.T).max(axis=0)
    best = int(np.argmin(est))
    return best, signs[best]


def certify_rw(j: int, n: int = 2, trials: int = 64, seed: int = 0, floor: float | None = None,
               candidate: SpherePoly | None = None, select_points: int = 2048) -> RWMember:
    """Certified RW member of degree ``j``.

    Among ``trials`` random-sign candidates the one with the smallest sampled
    sup is kept; it is divided by its certified sup upper bound ``B`` so that
    ``||R_j||_inf <= 1`` holds, and ``delta = ||R_j||_2`` is computed exactly.
    An explicit ``candidate`` bypasses the random search.
    """
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(j), int(n))))
    if candidate is None:
        check_rw_degree(j, n)
        trial, signs = _select_trial(j, n, trials, rng, select_points)
        cand = signed_candidate(j, n, signs)
    else:
        if not (candidate.is_holomorphic() and candidate.is_homogeneous()):
            raise RWCertificationError("candidate must be homogeneous holomorphic")
        if candidate.degree != j:
            raise RWCertificationError(f"candidate degree {candidate.degree} != {j}")
        trial, cand = 0, candidate
    b = sup_norm_bounds(cand, seed=int(rng.integers(2 ** 63)))
    R = cand / b.upper
    delta = math.sqrt(l2_norm_sq(R))
    member = RWMember(j, R, delta, b.lower / b.upper, 1.0, trial)
    if floor is not None and delta < floor:
        raise RWCertificationError(f"degree {j}: achieved delta {delta:.4f} < floor {floor}")
    return member


@dataclass(frozen=True, eq=False)
class RWSequence:
    n: int
    members: dict
    seed: int | None = None

    @property
    def delta(self) -> float:
        return min(m.delta for m in self.members.values())

    @property
    def degrees(self) -> list[int]:
        return sorted(self.members)

    def __contains__(self, j) -> bool:
        return j in self.members

    def poly(self, j: int) -> SpherePoly:
        try:
            return self.members[j].poly
        except KeyError:
            raise DegreeCapError(f"RW sequence has no member of degree {j}") from None

    def evaluate(self, j: int, points) -> np.ndarray:
        return self.poly(j)(points)

    def check_invariants(self, floor: float | None = None) -> None:
        for j, m in self.members.items():
            p = m.poly
            if not (p.is_holomorphic() and p.is_homogeneous() and p.degree == j):
                raise RWCertificationError(f"member {j} is not homogeneous holomorphic of degree {j}")
            if m.sup_upper > 1 + 1e-12:
                raise RWCertificationError(f"member {j}: certified sup {m.sup_upper} > 1")
            if math.sqrt(l2_norm_sq(p)) < m.delta - 1e-12 or m.delta <= 0:
                raise RWCertificationError(f"member {j}: L2 norm below recorded delta")
            if floor is not None and m.delta < floor:
                raise RWCertificationError(f"member {j}: delta {m.delta:.4f} < floor {floor}")

    def to_json(self) -> dict:
        return {"n": self.n, "delta": self.delta, "seed": self.seed,
                "polys": [self.members[j].to_json() for j in self.degrees]}

    @classmethod
    def from_json(cls, obj: dict) -> "RWSequence":
        members = {}
        for p in obj["polys"]:
            m = RWMember.from_json({**p, "n": obj["n"]} if "n" not in p else p)
            members[m.degree] = m
        seq = cls(int(obj["n"]), members, obj.get("seed"))
        seq.check_invariants()
        return seq


def build_rw_sequence(n: int, degrees: Sequence[int], trials: int = 64, seed: int = 0,
                      floor: float | None = None) -> RWSequence:
    degrees = sorted({int(j) for j in degrees})
    for j in degrees:
        check_rw_degree(j, n)
    members = {j: certify_rw(j, n, trials, seed, floor) for j in degrees}
    return RWSequence(n, members, seed)


def power_family(n: int, degrees: Sequence[int]) -> RWSequence:
    """``R_j = z_1^j``: sup exactly 1 but L2 norms decaying to 0."""
    return RWSequence(n, {int(j): certify_rw(int(j), n, candidate=SpherePoly.monomial(
        [int(j)] + [0] * (n - 1))) for j in degrees})


def is_uniform_rw(seq: RWSequence, floor: float) -> bool:
    try:
        seq.check_invariants(floor)
    except RWCertificationError:
        return False
    return True


# --------------------------------------------------------------------------
# scrambling
# --------------------------------------------------------------------------


def scrambled_values(R: RWSequence, J: Sequence[int], unitaries: Sequence[UnitaryMatrix] | None,
                     zetas: np.ndarray) -> np.ndarray:
    """``R_{j_k}(U_k zeta)`` as a (len(zetas), len(J)) array."""
    Z = np.asarray(zetas, dtype=complex).reshape(-1, R.n)
    out = np.empty((Z.shape[0], len(J)), dtype=complex)
    for k, j in enumerate(J):
        pts = Z if unitaries is None else unitaries[k].apply(Z)
        out[:, k] = R.evaluate(int(j), pts)
    return out


def scrambling_experiment(R: RWSequence, J: Sequence[int], c: Sequence[complex],
                          unitaries: Sequence[UnitaryMatrix] | None, zetas: np.ndarray,
                          K_max: int | None = None) -> np.ndarray:
    """Partial sums ``S_K(zeta) = sum_{k<=K} |c_k|^2 |R_{j_k}(U_k zeta)|^2``.

    Returns an array of shape (len(zetas), K_max); column ``K-1`` holds ``S_K``.
    """
    K_max = len(J) if K_max is None else K_max
    if len(c) < K_max or len(J) < K_max:
        raise ValueError("need K_max coefficients and indices")
    vals = scrambled_values(R, J[:K_max], None if unitaries is None else unitaries[:K_max], zetas)
    w = np.abs(np.asarray(c[:K_max], dtype=complex)) ** 2
    return np.cumsum(w[None, :] * np.abs(vals) ** 2, axis=1)


def expected_scramble_sum(R: RWSequence, J: Sequence[int], c: Sequence[complex]) -> float:
    """Haar mean of ``S_K``: ``sum |c_k|^2 ||R_{j_k}||_2^2`` (U zeta is uniform on S)."""
    return float(sum(abs(x) ** 2 * l2_norm_sq(R.poly(int(j))) for j, x in zip(J, c)))
