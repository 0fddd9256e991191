"""Shared containers, dataset validation, and design-matrix centering.

The model layer works with a latent Gaussian regression
    z_i = alpha + x_i' beta + eps_i,   eps_i ~ N(0, sigma2),
observed only through a counting likelihood attached to z_i. Everything
downstream (marginal likelihoods, model moves, latent updates) assumes the
covariates have been mean-centered, so centering lives here next to the
validation rules that make the posterior proper.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

FAMILY_NAMES = ("pln", "bil", "nbl")

# Relative pivot tolerance for declaring X_k'X_k rank-deficient.
RANK_RTOL = 1e-10


class StructuralError(ValueError):
    """Dataset arrays are malformed (shapes, finiteness, ranges)."""


class PosteriorImproprietyRisk(ValueError):
    """Outcome configuration under which the posterior is improper."""


class DegenerateZ(ValueError):
    """Latent vector is (numerically) constant; total sum of squares vanished."""


@dataclass(frozen=True)
class FamilyTag:
    """Which counting likelihood sits on top of the latent Gaussian layer.

    name: "pln" (Poisson, log link), "bil" (binomial, logit link) or
    "nbl" (negative binomial with fixed size r, logit link).
    """

    name: str
    r: int | None = None

    def __post_init__(self) -> None:
        if self.name not in FAMILY_NAMES:
            raise ValueError(f"unknown family {self.name!r}")
        if self.name == "nbl":
            if self.r is None or int(self.r) < 1:
                raise ValueError("nbl requires an integer size r >= 1")
            object.__setattr__(self, "r", int(self.r))
        elif self.r is not None:
            raise ValueError(f"family {self.name!r} takes no size parameter")


PLN = FamilyTag("pln")
BIL = FamilyTag("bil")


def nbl(r: int) -> FamilyTag:
    return FamilyTag("nbl", r)


def _frozen_array(x, dtype) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Raw observations. `trials` is required for bil, ignored otherwise.

    Construction only coerces types; use validate_dataset() for the actual
    admissibility checks.
    """

    y: np.ndarray
    X: np.ndarray
    family: FamilyTag
    trials: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", _frozen_array(self.y, np.float64))
        object.__setattr__(self, "X", _frozen_array(self.X, np.float64))
        if self.trials is not None:
            object.__setattr__(self, "trials", _frozen_array(self.trials, np.float64))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1] if self.X.ndim == 2 else 0


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    code: str  # "ok" | "structural" | "impropriety"
    message: str = ""


def validate_dataset(d: Dataset) -> ValidationReport:
    """Check shapes, finiteness and the outcome-count conditions.

    The count conditions are what keeps the posterior proper under the
    improper (alpha, sigma2) prior: at least two informative outcomes are
    needed so the latent layer cannot drift. PLN/NBL need two nonzero
    counts; bil needs two observations strictly between 0 and the number
    of trials.
    """

    def bad(code: str, msg: str) -> ValidationReport:
        return ValidationReport(False, code, msg)

    y, X = d.y, d.X
    if X.ndim != 2:
        return bad("structural", "X must be a 2-d array")
    n, p = X.shape
    if y.ndim != 1 or y.shape[0] != n:
        return bad("structural", f"y has length {y.shape[0] if y.ndim == 1 else '?'}, X has {n} rows")
    if n < 2:
        return bad("structural", "need at least 2 observations")
    if p < 1:
        return bad("structural", "need at least 1 candidate covariate")
    if not np.all(np.isfinite(X)):
        return bad("structural", "X contains non-finite entries")
    if not np.all(np.isfinite(y)):
        return bad("structural", "y contains non-finite entries")
    if np.any(y < 0) or np.any(y != np.floor(y)):
        return bad("structural", "y must hold non-negative integers")

    if d.family.name == "bil":
        if d.trials is None:
            return bad("structural", "bil requires a trials vector")
        N = d.trials
        if N.ndim != 1 or N.shape[0] != n:
            return bad("structural", "trials must match y in length")
        if not np.all(np.isfinite(N)) or np.any(N < 1) or np.any(N != np.floor(N)):
            return bad("structural", "trials must hold positive integers")
        if np.any(y > N):
            return bad("structural", "y may not exceed trials")
        informative = int(np.sum((y > 0) & (y < N)))
        if informative < 2:
            return bad(
                "impropriety",
                f"bil needs >= 2 observations with 0 < y_i < N_i, found {informative}",
            )
    else:
        nonzero = int(np.sum(y > 0))
        if nonzero < 2:
            return bad(
                "impropriety",
                f"{d.family.name} needs >= 2 nonzero outcomes, found {nonzero}",
            )
    return ValidationReport(True, "ok")


@dataclass(frozen=True)
class CenteredDesign:
    """Mean-centered covariate matrix plus the subtracted column means."""

    Xc: np.ndarray
    col_means: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "Xc", _frozen_array(self.Xc, np.float64))
        object.__setattr__(self, "col_means", _frozen_array(self.col_means, np.float64))

    @property
    def n(self) -> int:
        return self.Xc.shape[0]

    @property
    def p(self) -> int:
        return self.Xc.shape[1]


def center_design(X: np.ndarray) -> CenteredDesign:
    X = np.asarray(X, dtype=np.float64)
    means = X.mean(axis=0)
    return CenteredDesign(X - means, means)


@dataclass(frozen=True)
class ModelIndicator:
    """Immutable inclusion pattern over the p candidate covariates."""

    included: np.ndarray
    p_k: int = field(init=False)

    def __post_init__(self) -> None:
        inc = np.array(self.included, dtype=bool)
        inc.setflags(write=False)
        object.__setattr__(self, "included", inc)
        object.__setattr__(self, "p_k", int(inc.sum()))

    @cached_property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.included)

    @cached_property
    def key(self) -> bytes:
        return self.included.tobytes()

    @property
    def p(self) -> int:
        return self.included.shape[0]

    @staticmethod
    def null(p: int) -> "ModelIndicator":
        return ModelIndicator(np.zeros(p, dtype=bool))

    @staticmethod
    def from_indices(p: int, idx) -> "ModelIndicator":
        inc = np.zeros(p, dtype=bool)
        inc[np.asarray(idx, dtype=int)] = True
        return ModelIndicator(inc)

    def with_added(self, j: int) -> "ModelIndicator":
        inc = self.included.copy()
        inc[j] = True
        return ModelIndicator(inc)

    def with_removed(self, j: int) -> "ModelIndicator":
        inc = self.included.copy()
        inc[j] = False
        return ModelIndicator(inc)

    def with_swapped(self, j_out: int, j_in: int) -> "ModelIndicator":
        inc = self.included.copy()
        inc[j_out] = False
        inc[j_in] = True
        return ModelIndicator(inc)

    def bits(self) -> str:
        return "".join("1" if b else "0" for b in self.included)


@dataclass(frozen=True)
class FixedG:
    """Fixed g; g0 = n gives the unit-information prior."""

    g0: float

    def __post_init__(self) -> None:
        if not (self.g0 > 0 and np.isfinite(self.g0)):
            raise ValueError("g0 must be positive and finite")


@dataclass(frozen=True)
class HyperGOverN:
    """Continuous prior g/n ~ Beta-prime style with tail index a > 2."""

    a: float = 3.0

    def __post_init__(self) -> None:
        if not (self.a > 2 and np.isfinite(self.a)):
            raise ValueError("hyper-g/n requires a > 2")


@dataclass(frozen=True)
class PriorConfig:
    """g-prior choice plus the prior expected number of included covariates."""

    gprior: FixedG | HyperGOverN
    model_size: float

    def __post_init__(self) -> None:
        if not (self.model_size > 0 and np.isfinite(self.model_size)):
            raise ValueError("model_size must be positive (and < p)")


@dataclass(frozen=True)
class GaussianLayerState:
    """One sampler state of the Gaussian layer: latent z and (alpha, beta, sigma2, g)."""

    z: np.ndarray
    alpha: float
    beta: np.ndarray  # length p, zeros outside the current model
    sigma2: float
    g: float


def cholesky_with_tol(XtX: np.ndarray) -> np.ndarray | None:
    """Lower Cholesky factor of XtX, or None when effectively rank-deficient.

    A pivot counts as zero when it falls below RANK_RTOL times the average
    diagonal, so duplicated or constant (centered to zero) columns are
    rejected rather than factored into noise.
    """
    p_k = XtX.shape[0]
    if p_k == 0:
        return np.zeros((0, 0))
    tol = RANK_RTOL * float(np.trace(XtX)) / p_k
    try:
        L = np.linalg.cholesky(XtX)
    except np.linalg.LinAlgError:
        return None
    if np.any(np.diag(L) ** 2 <= tol):
        return None
    return L


def rank_ok(M: ModelIndicator, Xc: np.ndarray, n: int | None = None) -> bool:
    """True iff the intercept-augmented design of model M has full column rank."""
    Xc = np.asarray(Xc)
    if n is None:
        n = Xc.shape[0]
    if M.p_k == 0:
        return n >= 1
    if M.p_k >= n:
        return False
    Xk = Xc[:, M.indices]
    return cholesky_with_tol(Xk.T @ Xk) is not None
