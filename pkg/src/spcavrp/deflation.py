"""Modified deflation producing mutually orthogonal sparse components.

Component ``r`` is found by running the single-component estimator on
the data projected away from the previous components, which fixes a
support ``S_r``.  The component itself is then the leading eigenvector
of the original covariance restricted to ``S_r`` and compressed onto the
orthogonal complement of the previous components' restriction to
``S_r``.  Being supported on ``S_r`` and orthogonal to the restricted
previous components, it is orthogonal to the unrestricted ones.
"""
from dataclasses import dataclass, field

import numpy as np

from . import projections
from .covariance import CovarianceSource, as_data_matrix, center_columns
from .errors import DegenerateDeflation, InvalidInput
from .estimator import SpcavrpConfig, fit_source, resolve_strategy
from .linalg import eig_top, fix_signs, proj_orth_complement

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class DeflationConfig:
    sparsities: tuple  # l_1, ..., l_m
    d: int
    A: int = 300
    B: int = 100
    seed: int = 0
    strategy: str = "auto"
    exhaustive: bool = False
    center: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sparsities", tuple(int(l) for l in self.sparsities))

    @property
    def m(self):
        return len(self.sparsities)

    def step_config(self, r):
        """Single-component configuration for step ``r`` (1-based).

        Step 1 uses the master seed itself, so a one-component run is the
        plain single-component estimator.
        """
        seed = self.seed if r == 1 else projections.derive_seed(self.seed, r)
        return SpcavrpConfig(
            d=self.d,
            l=self.sparsities[r - 1],
            A=self.A,
            B=self.B,
            m=1,
            seed=seed,
            strategy=self.strategy,
            exhaustive=self.exhaustive,
        )

    def validate(self, p):
        if self.m < 1:
            raise InvalidInput("need at least one component")
        for r in range(1, self.m + 1):
            self.step_config(r).validate(p)


@dataclass
class DeflationResult:
    components: np.ndarray  # p x m
    supports: list
    eigenvalues: np.ndarray
    intermediate: np.ndarray = field(repr=False)  # the per-step v-tilde directions
    scores: list = field(default_factory=list, repr=False)

    @property
    def m(self):
        return self.components.shape[1]


def deflate_fit(X, cfg, threads=1):
    """Estimate ``cfg.m`` orthogonal sparse components of the data `X`."""
    X = as_data_matrix(X)
    if cfg.center:
        X = center_columns(X)
    n, p = X.shape
    cfg.validate(p)

    full = CovarianceSource.from_data(X, mode=resolve_strategy(cfg.step_config(1), n, p))
    est = fit_source(full, cfg.step_config(1), threads=threads)

    V = np.zeros((p, cfg.m))
    tilde = np.zeros((p, cfg.m))
    V[:, 0] = est.vectors[:, 0]
    tilde[:, 0] = est.vectors[:, 0]
    supports = [np.flatnonzero(est.vectors[:, 0])]
    eigenvalues = [est.eigenvalues[0]]
    scores = [est.scores]

    for r in range(2, cfg.m + 1):
        prev = V[:, : r - 1]
        H = proj_orth_complement(prev, allow_rank_deficient=True)
        step = cfg.step_config(r)
        deflated = CovarianceSource.from_data(X @ H, mode=resolve_strategy(step, n, p))
        est = fit_source(deflated, step, threads=threads)
        v_tilde = est.vectors[:, 0]
        S = np.flatnonzero(v_tilde)

        # Restricted to S the projector is I - QQ^T for the range of prev[S];
        # off S it is the identity and the restricted covariance is zero.
        H_S = proj_orth_complement(prev[S], allow_rank_deficient=True)
        M = H_S @ full.submatrix(S) @ H_S
        top = eig_top(M, 1)
        if top.values[0] <= DEGENERATE_TOL:
            raise DegenerateDeflation(r, float(top.values[0]))
        # Re-applying the projector removes rounding drift out of its range.
        u = H_S @ top.vectors[:, 0]
        u /= np.linalg.norm(u)
        fix_signs(u[:, None])

        V[S, r - 1] = u
        tilde[:, r - 1] = v_tilde
        supports.append(S)
        eigenvalues.append(float(u @ full.submatrix(S) @ u))
        scores.append(est.scores)

    return DeflationResult(
        components=V,
        supports=supports,
        eigenvalues=np.array(eigenvalues),
        intermediate=tilde,
        scores=scores,
    )
