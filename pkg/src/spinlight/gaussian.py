"""Exact Gaussian-state calculus for registers of bosonic modes.

Quadratures are ordered ``(x0, p0, x1, p1, ...)`` with commutator [X, P] = i
and vacuum variance 1/2 in every quadrature.  Every variance, squeezing and
fidelity formula in this package relies on that normalization; do not rescale.

States are immutable values: every operation returns a new ``GaussianState``.
Measurement sampling takes an explicit ``numpy.random.Generator``; nothing in
this module keeps hidden RNG state.
"""

import dataclasses
import enum
import math

import numpy as np

__all__ = [
    "VACUUM_VARIANCE",
    "DegeneracyError",
    "ModeLabel",
    "ModeIndex",
    "MeasurementRecord",
    "SymplecticMap",
    "GaussianState",
    "symplectic_form",
    "vacuum_state",
    "append_vacuum",
    "marginal",
    "displace",
    "rotate",
    "apply_symplectic",
    "loss_channel",
    "homodyne",
    "variance_of",
    "fidelity_coherent",
]

#: Variance of every quadrature of a fresh vacuum mode.
VACUUM_VARIANCE = 0.5

_SYMPLECTIC_TOL = 1e-10


class DegeneracyError(ArithmeticError):
    """A conditioning or overlap formula hit a singular covariance."""


class ModeLabel(enum.Enum):
    LIGHT = "light"
    ATOM = "atom"


@dataclasses.dataclass(frozen=True)
class ModeIndex:
    """Position of a mode in a register together with its physical role."""

    index: int
    label: ModeLabel

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"mode index must be non-negative, got {self.index}")


@dataclasses.dataclass(frozen=True)
class MeasurementRecord:
    """One homodyne result: which mode, which quadrature, what came out."""

    mode: ModeIndex
    quadrature: str
    outcome: float
    round_tag: str

    def __post_init__(self):
        if self.quadrature not in ("x", "p"):
            raise ValueError(f"quadrature must be 'x' or 'p', got {self.quadrature!r}")
        if not math.isfinite(self.outcome):
            raise ValueError(f"measurement outcome must be finite, got {self.outcome}")


def symplectic_form(n_modes):
    """Standard symplectic form Omega for the interleaved (x, p) ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclasses.dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix over an ordered register of modes.

    ``mean`` has length 2*n_modes in ``(x0, p0, x1, p1, ...)`` order and
    ``cov`` is the matching real symmetric matrix.  The covariance is
    symmetrized on construction to suppress floating-point drift, so every
    operation that rebuilds the state re-enforces symmetry.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size % 2 != 0:
            raise ValueError(f"mean length must be even, got {mean.size}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self):
        return self.mean.size // 2

    def heisenberg_margin(self):
        """Smallest eigenvalue of cov + (i/2) Omega.

        Non-negative (within tolerance) for every physical state; the vacuum
        saturates zero.
        """
        if self.n_modes == 0:
            return 0.0
        herm = self.cov + 0.5j * symplectic_form(self.n_modes)
        return float(np.linalg.eigvalsh(herm)[0])

    def is_physical(self, tol=1e-9):
        return self.heisenberg_margin() >= -tol


@dataclasses.dataclass(frozen=True)
class SymplecticMap:
    """Linear phase-space map: mean -> matrix @ mean + displacement."""

    matrix: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        disp = np.array(self.displacement, dtype=float).reshape(-1)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"matrix must be square, got shape {matrix.shape}")
        if matrix.shape[0] % 2 != 0 or matrix.shape[0] != disp.size:
            raise ValueError("matrix and displacement dimensions do not match")
        omega = symplectic_form(matrix.shape[0] // 2)
        defect = np.max(np.abs(matrix.T @ omega @ matrix - omega))
        if defect > _SYMPLECTIC_TOL:
            raise ValueError(f"matrix is not symplectic (defect {defect:.3e})")
        matrix.setflags(write=False)
        disp.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "displacement", disp)

    @classmethod
    def identity(cls, n_modes):
        return cls(np.eye(2 * n_modes), np.zeros(2 * n_modes))


def _mode_of(state, mode):
    """Resolve an int or ModeIndex argument to a validated register index."""
    idx = mode.index if isinstance(mode, ModeIndex) else int(mode)
    if not 0 <= idx < state.n_modes:
        raise ValueError(f"mode {idx} out of range for {state.n_modes}-mode register")
    return idx


def vacuum_state(n_modes):
    """Vacuum of ``n_modes`` modes: zero mean, covariance (1/2) * identity."""
    if n_modes < 1:
        raise ValueError(f"need at least one mode, got {n_modes}")
    dim = 2 * int(n_modes)
    return GaussianState(np.zeros(dim), VACUUM_VARIANCE * np.eye(dim))


def append_vacuum(state, n_modes=1):
    """Attach ``n_modes`` fresh vacuum modes at the end of the register."""
    if n_modes < 1:
        raise ValueError(f"need at least one mode to append, got {n_modes}")
    add = 2 * int(n_modes)
    dim = state.mean.size
    mean = np.concatenate([state.mean, np.zeros(add)])
    cov = VACUUM_VARIANCE * np.eye(dim + add)
    cov[:dim, :dim] = state.cov
    return GaussianState(mean, cov)


def marginal(state, modes):
    """Reduced state of the given modes, kept in the order supplied."""
    idx = [_mode_of(state, m) for m in modes]
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate modes in marginal request")
    sel = np.array([2 * i + q for i in idx for q in (0, 1)], dtype=int)
    return GaussianState(state.mean[sel], state.cov[np.ix_(sel, sel)])


def displace(state, mode, dx, dp):
    """Shift the (x, p) means of one mode; covariance is untouched."""
    m = _mode_of(state, mode)
    mean = state.mean.copy()
    mean[2 * m] += dx
    mean[2 * m + 1] += dp
    return GaussianState(mean, state.cov)


def _apply_matrix(state, matrix):
    """Homogeneous linear update without the symplectic validation.

    Internal fast path for maps that are symplectic by construction
    (rotations, interaction kicks); public callers go through
    :func:`apply_symplectic`.
    """
    return GaussianState(matrix @ state.mean, matrix @ state.cov @ matrix.T)


def rotate(state, mode, theta):
    """Phase-space rotation of one mode.

    The (x, p) pair is mapped by [[cos t, sin t], [-sin t, cos t]], so
    theta = -pi/2 sends x -> -p and p -> x.
    """
    m = _mode_of(state, mode)
    c, s = math.cos(theta), math.sin(theta)
    matrix = np.eye(state.mean.size)
    matrix[2 * m : 2 * m + 2, 2 * m : 2 * m + 2] = [[c, s], [-s, c]]
    return _apply_matrix(state, matrix)


def apply_symplectic(state, smap):
    """Apply a symplectic map: mean -> M mean + d, cov -> M cov M^T."""
    if smap.matrix.shape[0] != state.mean.size:
        raise ValueError(
            f"map dimension {smap.matrix.shape[0]} does not match "
            f"state dimension {state.mean.size}"
        )
    mean = smap.matrix @ state.mean + smap.displacement
    cov = smap.matrix @ state.cov @ smap.matrix.T
    return GaussianState(mean, cov)


def loss_channel(state, mode, eps):
    """Admix a fraction ``eps`` of vacuum into one mode.

    Means of the mode scale by sqrt(1 - eps), its covariance block becomes
    (1 - eps) * block + eps * (1/2) I, and every cross covariance with other
    modes scales by sqrt(1 - eps).  Vacuum is the fixed point for any eps.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"loss fraction must lie in [0, 1], got {eps}")
    m = _mode_of(state, mode)
    t = math.sqrt(1.0 - eps)
    rows = (2 * m, 2 * m + 1)
    mean = state.mean.copy()
    cov = state.cov.copy()
    mean[list(rows)] *= t
    cov[list(rows), :] *= t
    cov[:, list(rows)] *= t
    cov[rows[0], rows[0]] += eps * VACUUM_VARIANCE
    cov[rows[1], rows[1]] += eps * VACUUM_VARIANCE
    return GaussianState(mean, cov)


def homodyne(state, mode, quadrature, rng=None, forced=None):
    """Measure one quadrature of one mode and condition the rest on the result.

    Parameters
    ----------
    state : GaussianState
    mode : int or ModeIndex
    quadrature : str
        ``'x'`` or ``'p'``.
    rng : numpy.random.Generator, optional
        Draws the outcome from the Gaussian marginal.
    forced : float, optional
        Use this outcome instead of sampling.  Exactly one of ``rng`` and
        ``forced`` must be given.

    Returns
    -------
    (outcome, posterior) : (float, GaussianState)
        Posterior follows the scalar Gaussian conditioning rule and the
        measured mode is removed from the register (the pulse is destroyed
        at the detector); remaining modes keep their relative order.
    """
    if (rng is None) == (forced is None):
        raise ValueError("provide exactly one outcome source: rng or forced")
    if quadrature not in ("x", "p"):
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    m = _mode_of(state, mode)
    k = 2 * m + (0 if quadrature == "x" else 1)
    v = state.cov[k, k]
    if v <= 0.0:
        raise DegeneracyError(f"measured quadrature has non-positive variance {v}")
    prior_mean = state.mean[k]
    outcome = float(forced) if forced is not None else float(
        rng.normal(prior_mean, math.sqrt(v))
    )
    column = state.cov[:, k]
    mean = state.mean + column * ((outcome - prior_mean) / v)
    cov = state.cov - np.outer(column, column) / v
    keep = np.array(
        [i for i in range(state.mean.size) if i not in (2 * m, 2 * m + 1)], dtype=int
    )
    return outcome, GaussianState(mean[keep], cov[np.ix_(keep, keep)])


def variance_of(state, coeffs):
    """Variance of a linear combination of quadratures: c^T cov c."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != state.mean.shape:
        raise ValueError(
            f"coefficient length {coeffs.size} does not match state dimension "
            f"{state.mean.size}"
        )
    return float(coeffs @ state.cov @ coeffs)


def fidelity_coherent(state, mode, target_mean):
    """Overlap of a single-mode marginal with a coherent state.

    For marginal covariance G and mean mu the overlap with the coherent state
    of mean ``target_mean`` is

        F = det(G + (1/2) I)^(-1/2) * exp(-(1/2) d^T (G + (1/2) I)^(-1) d),

    d = mu - target_mean, under the variance-1/2 vacuum convention.  Equal
    coherent states give 1; a zero-mean thermal-like marginal sigma * I gives
    1 / (sigma + 1/2).
    """
    m = _mode_of(state, mode)
    sl = slice(2 * m, 2 * m + 2)
    gamma = state.cov[sl, sl] + VACUUM_VARIANCE * np.eye(2)
    det = gamma[0, 0] * gamma[1, 1] - gamma[0, 1] * gamma[1, 0]
    if det <= 0.0:
        raise DegeneracyError(f"singular overlap matrix (det {det})")
    delta = state.mean[sl] - np.asarray(target_mean, dtype=float)
    inv = np.array([[gamma[1, 1], -gamma[0, 1]], [-gamma[1, 0], gamma[0, 0]]]) / det
    return float(math.exp(-0.5 * delta @ inv @ delta) / math.sqrt(det))
