"""Covariance models for simulations and Gaussian sampling from them.

Every model is ``Sigma = base + sum_r theta_r v_r v_r^T`` where ``base`` is
the identity unless given explicitly.  The ``v_r`` are the directions the
estimators should recover.
"""
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .errors import InvalidInput
from .projections import derive_seed

ORTHO_TOL = 1e-10
PSD_TOL = 1e-8


def J(q):
    """The ``q x q`` matrix with every entry ``1/q``."""
    return np.full((q, q), 1.0 / q)


def _block_diag(*blocks):
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    i = 0
    for b in blocks:
        out[i : i + b.shape[0], i : i + b.shape[0]] = b
        i += b.shape[0]
    return out


@dataclass
class SpikedModel:
    p: int
    thetas: np.ndarray
    vectors: np.ndarray  # p x m
    base: np.ndarray = None
    relaxed: bool = False
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float).ravel()
        self.vectors = np.asarray(self.vectors, dtype=float).reshape(self.p, -1)
        m = self.vectors.shape[1]
        if self.thetas.shape[0] != m:
            raise InvalidInput("one theta per component is required")
        if np.any(self.thetas <= 0) or np.any(np.diff(self.thetas) > 0):
            raise InvalidInput(f"thetas must be positive and nonincreasing: {self.thetas}")
        norms = np.linalg.norm(self.vectors, axis=0)
        if np.any(np.abs(norms - 1) > ORTHO_TOL):
            raise InvalidInput("component vectors must be unit-norm")
        if not self.relaxed:
            gram = self.vectors.T @ self.vectors - np.eye(m)
            if np.max(np.abs(gram)) > ORTHO_TOL:
                raise InvalidInput("component vectors are not orthogonal")
        if self.base is not None:
            self.base = np.asarray(self.base, dtype=float)
            if self.base.shape != (self.p, self.p):
                raise InvalidInput(f"base must be {self.p} x {self.p}")

    @property
    def m(self):
        return self.vectors.shape[1]

    @cached_property
    def sigma(self):
        base = np.eye(self.p) if self.base is None else self.base
        S = base + (self.vectors * self.thetas) @ self.vectors.T
        return (S + S.T) / 2

    @cached_property
    def _factor(self):
        values, vectors = np.linalg.eigh(self.sigma)
        if values[0] < -PSD_TOL:
            raise InvalidInput(f"covariance is not PSD: smallest eigenvalue {values[0]:.3e}")
        return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T

    @property
    def supports(self):
        return [np.flatnonzero(self.vectors[:, r]) for r in range(self.m)]

    @property
    def support(self):
        """Indices of the nonzero rows of the component matrix."""
        return np.flatnonzero(np.any(self.vectors != 0, axis=1))


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def make_single_spike(p, k, theta, profile="homogeneous"):
    """``I_p + theta v v^T`` with `v` supported on the first `k` coordinates.

    ``homogeneous``: equal loadings.  ``linear``: loadings ``k, k-1, ..., 1``.
    """
    if not 1 <= k <= p:
        raise InvalidInput(f"need 1 <= k <= p, got k={k}, p={p}")
    if theta <= 0:
        raise InvalidInput(f"theta must be positive, got {theta}")
    v = np.zeros(p)
    if profile == "homogeneous":
        v[:k] = 1.0
    elif profile == "linear":
        v[:k] = np.arange(k, 0, -1)
    else:
        raise InvalidInput(f"unknown profile {profile!r}")
    spec = {"kind": "single-spike", "p": p, "k": k, "theta": theta, "profile": profile}
    return SpikedModel(p, [theta], _unit(v)[:, None], spec=spec)


def _block_vector(p, start, k):
    v = np.zeros(p)
    v[start : start + k] = 1.0 / np.sqrt(k)
    return v


def make_sigma1(p, k):
    """``blockdiag(2 J_k, J_k, 0) + I_p``: two spikes of strength 2 and 1."""
    if k < 1 or 2 * k > p:
        raise InvalidInput(f"sigma1 needs 2k <= p, got k={k}, p={p}")
    V = np.column_stack([_block_vector(p, 0, k), _block_vector(p, k, k)])
    return SpikedModel(p, [2.0, 1.0], V, spec={"kind": "sigma1", "p": p, "k": k})


def make_sigma2(p, k):
    """``blockdiag(k J_k, 0.99 k J_3k, I_{p-4k}) + 0.01 I_p`` -- not spiked."""
    if k < 1 or 4 * k > p:
        raise InvalidInput(f"sigma2 needs 4k <= p, got k={k}, p={p}")
    base = _block_diag(np.zeros((k, k)), 0.99 * k * J(3 * k), np.eye(p - 4 * k))
    base += 0.01 * np.eye(p)
    return SpikedModel(
        p, [float(k)], _block_vector(p, 0, k)[:, None], base=base,
        spec={"kind": "sigma2", "p": p, "k": k},
    )


def make_intro_model(p=400):
    """``blockdiag(10 J_10, 8.9 J_390 + I_390) + 0.01 I_400``.

    The leading eigenvector sits on the first ten coordinates, yet those
    have the smallest diagonal entries.
    """
    if p != 400:
        raise InvalidInput("the intro model is defined for p = 400 only")
    base = _block_diag(np.zeros((10, 10)), 8.9 * J(390) + np.eye(390)) + 0.01 * np.eye(400)
    return SpikedModel(
        400, [10.0], _block_vector(400, 0, 10)[:, None], base=base,
        spec={"kind": "intro", "p": 400},
    )


def orthogonal_signs(supports):
    """First (lexicographic) +/-1 patterns making homogeneous vectors orthogonal.

    Every pattern starts with +1; at most ``2**(k-1)`` candidates are tried
    per support.
    """
    p = max(max(S) for S in supports) + 1
    chosen, previous = [], []
    for S in supports:
        S = list(S)
        for tail in product((1.0, -1.0), repeat=len(S) - 1):
            signs = np.array((1.0,) + tail)
            v = np.zeros(p)
            v[S] = signs
            if all(abs(v @ u) < 0.5 for u in previous):
                break
        else:
            raise InvalidInput(f"no orthogonal sign pattern for support {S}")
        chosen.append(signs)
        previous.append(v)
    return chosen


def make_multi_spike(p, supports, thetas, signs=None, relaxed=False):
    """``I_p + sum_r theta_r v_r v_r^T`` with homogeneous +/- loadings on each support.

    Without explicit `signs`, patterns are chosen by :func:`orthogonal_signs`.
    `relaxed` skips the orthogonality check.
    """
    supports = [sorted(int(j) for j in S) for S in supports]
    if len(supports) != len(thetas):
        raise InvalidInput("one theta per support is required")
    for S in supports:
        if not S or S[0] < 0 or S[-1] >= p or len(set(S)) != len(S):
            raise InvalidInput(f"invalid support {S} for p={p}")
    if signs is None:
        signs = orthogonal_signs(supports)
    V = np.zeros((p, len(supports)))
    for r, (S, s) in enumerate(zip(supports, signs)):
        s = np.asarray(s, dtype=float)
        if s.shape != (len(S),) or np.any(np.abs(s) != 1):
            raise InvalidInput(f"signs for component {r + 1} must be +/-1 of length {len(S)}")
        V[S, r] = s / np.sqrt(len(S))
    spec = {
        "kind": "multi-spike",
        "p": p,
        "supports": supports,
        "thetas": [float(t) for t in thetas],
        "signs": [[float(x) for x in s] for s in signs],
        "relaxed": relaxed,
    }
    return SpikedModel(p, thetas, V, relaxed=relaxed, spec=spec)


def make_two_spike_model(overlapping=True, p=200, thetas=(50.0, 30.0)):
    """Two spikes on ``{1..14}`` and ``{7..20}`` (or ``{15..28}``), 1-based.

    On the overlap the second vector alternates ``+, -, +, ...`` so the
    two components are orthogonal.
    """
    S1 = list(range(0, 14))
    if overlapping:
        S2 = list(range(6, 20))
        s2 = [1.0 if i % 2 == 0 else -1.0 for i in range(8)] + [1.0] * 6
    else:
        S2 = list(range(14, 28))
        s2 = [1.0] * 14
    return make_multi_spike(p, [S1, S2], list(thetas), signs=[[1.0] * 14, s2])


def make_three_spike_model(overlapping=True, p=100, thetas=(3.0, 2.0, 1.0)):
    """Three homogeneous spikes on ten coordinates each, shifted by 2 or by 10."""
    shift = 2 if overlapping else 10
    supports = [list(range(r * shift, r * shift + 10)) for r in range(3)]
    return make_multi_spike(p, supports, list(thetas))


def make_signed_pair_model(p=50, k=7):
    """Two spikes (10, 9); the second vector is supported on coordinates 3..k+2."""
    v2 = [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0]
    return make_multi_spike(
        p,
        [list(range(k)), list(range(3, 3 + k))],
        [10.0, 9.0],
        signs=[[1.0] * k, v2],
    )


def model_from_spec(spec):
    """Build a model from its JSON-friendly description."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "single-spike":
            return make_single_spike(
                int(spec["p"]), int(spec["k"]), float(spec.get("theta", 1.0)),
                spec.get("profile", "homogeneous"),
            )
        if kind == "sigma1":
            return make_sigma1(int(spec["p"]), int(spec["k"]))
        if kind == "sigma2":
            return make_sigma2(int(spec["p"]), int(spec["k"]))
        if kind == "intro":
            return make_intro_model(int(spec.get("p", 400)))
        if kind == "two-spike":
            return make_two_spike_model(bool(spec.get("overlapping", True)), int(spec.get("p", 200)))
        if kind == "three-spike":
            return make_three_spike_model(bool(spec.get("overlapping", True)), int(spec.get("p", 100)))
        if kind == "signed-pair":
            return make_signed_pair_model(int(spec.get("p", 50)), int(spec.get("k", 7)))
        if kind == "multi-spike":
            return make_multi_spike(
                int(spec["p"]), spec["supports"], spec["thetas"],
                spec.get("signs"), bool(spec.get("relaxed", False)),
            )
    except KeyError as exc:
        raise InvalidInput(f"model spec for {kind!r} is missing {exc}") from None
    raise InvalidInput(f"unknown model kind {kind!r}")


def sample_gaussian(model, n, seed):
    """`n` draws from ``N_p(0, Sigma)``.

    Standard normals come from numpy's PCG64 generator seeded with
    ``derive_seed(seed, 0)``, multiplied by the symmetric square root of
    ``Sigma`` (eigenvalues above -1e-8 clipped to zero).
    """
    if n < 1:
        raise InvalidInput(f"n must be positive, got {n}")
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 0)))
    Z = rng.standard_normal((n, model.p))
    return Z @ model._factor
