"""Grid re-derivation of the collective pass channel from propagation dynamics.

The one-dimensional linearized propagation equations (light advected through
the sample in retarded time, atoms driven bin by bin, spontaneous-emission
damping feeding fresh vacuum noise) are discretized on an (n_z slices) x
(n_tau bins) grid.  Each cell applies

  1. the kick x_light -= k_cell * p_atom, x_atom -= k_cell * p_light with
     k_cell = kappa / sqrt(n_z * n_tau),
  2. light damping eps_p / n_z with a fresh vacuum injection,
  3. atomic damping eps_a / n_tau with a fresh vacuum injection,

composed causally: bin m traverses slices j = 1..n_z, bins in time order.
Because the p quadratures are conserved by the kicks, the lossless part
composes exactly to the collective channel for any grid size; the damping
interleave reproduces the analytic coefficients up to O(eps^2).

Only fluctuation dynamics are propagated: the deterministic global phase from
the mean populations is dropped, matching the canonical-operator
linearization, and the pulse envelope is taken flat (uniform grid weights).
"""

import dataclasses
import math

import numpy as np

from .gaussian import VACUUM_VARIANCE, symplectic_form
from .interaction import derive_channel

__all__ = [
    "Grid",
    "TransferMap",
    "CollectiveExtraction",
    "build_transfer",
    "build_transfer_from_channel",
    "extract_collective",
    "collective_signal_block",
    "commutator_defect",
]


@dataclasses.dataclass(frozen=True)
class Grid:
    """Discretization: n_z atomic slices along the sample, n_tau light bins."""

    n_z: int
    n_tau: int
    L: float
    T: float

    def __post_init__(self):
        if self.n_z < 1 or self.n_tau < 1:
            raise ValueError(
                f"grid too small: need n_z >= 1 and n_tau >= 1, "
                f"got {self.n_z} x {self.n_tau}"
            )
        if self.L <= 0 or self.T <= 0:
            raise ValueError("grid extents L and T must be positive")

    @property
    def n_cells(self):
        return self.n_z * self.n_tau


@dataclasses.dataclass(frozen=True)
class TransferMap:
    """Input-output coefficients of the discretized propagation.

    ``signal`` maps the 2 * (n_tau + n_z) input quadratures (light bins first,
    then atomic slices, interleaved x/p) to outputs.  ``noise`` maps the
    injected vacuum quadratures, one (x, p) pair per grid cell and decay
    channel, to outputs; ``light_cols`` / ``atom_cols`` say which columns were
    injected by light and by atomic damping.  Output covariance on vacuum
    input is (1/2) (signal signal^T + noise noise^T).
    """

    signal: np.ndarray
    noise: np.ndarray
    light_cols: np.ndarray
    atom_cols: np.ndarray
    n_tau: int
    n_z: int

    def __post_init__(self):
        for name in ("signal", "noise", "light_cols", "atom_cols"):
            getattr(self, name).setflags(write=False)


@dataclasses.dataclass(frozen=True)
class CollectiveExtraction:
    """Channel coefficients read back from the collective-mode projection.

    ``kappa_eff`` is the magnitude of the collective x_light <- p_atom
    coefficient; ``eps_p_eff`` and ``eps_a_eff`` come from the shortfall of
    the diagonal signal coefficients (1 - eps = squared collective
    transmission).  Residuals: ``signal_leak`` is the largest variance weight
    any collective output leaves in non-collective input modes;
    ``noise_var_light_x`` / ``noise_var_atom_x`` are the same-decay-channel
    vacuum admixtures into the collective x outputs (the quantities the
    first-order channel models as eps/2), while the ``*_total`` fields also
    count the kick-mediated cross admixture of order kappa^2 * eps, which the
    first-order channel drops.
    """

    kappa_eff: float
    eps_p_eff: float
    eps_a_eff: float
    signal_leak: float
    noise_var_light_x: float
    noise_var_atom_x: float
    noise_var_light_x_total: float
    noise_var_atom_x_total: float


def build_transfer(params, grid):
    """Transfer map for the microscopic inputs; coefficients via derive_channel."""
    return build_transfer_from_channel(derive_channel(params), grid)


def build_transfer_from_channel(channel, grid):
    """Compose the per-cell kick/damping updates into one linear map."""
    nt, nz = grid.n_tau, grid.n_z
    dim = 2 * (nt + nz)
    eps_cell_p = channel.eps_p / nz
    eps_cell_a = channel.eps_a / nt
    k_cell = channel.kappa / math.sqrt(nz * nt)

    cols_per_cell = 2 * (eps_cell_p > 0) + 2 * (eps_cell_a > 0)
    n_cols = cols_per_cell * grid.n_cells
    signal = np.eye(dim)
    noise = np.zeros((dim, n_cols))
    light_cols = []
    atom_cols = []

    tp = math.sqrt(1.0 - eps_cell_p)
    sp = math.sqrt(eps_cell_p)
    ta = math.sqrt(1.0 - eps_cell_a)
    sa = math.sqrt(eps_cell_a)

    col = 0
    for m in range(nt):
        xl, pl = 2 * m, 2 * m + 1
        for j in range(nz):
            xa, pa = 2 * (nt + j), 2 * (nt + j) + 1
            # Kick reads p rows, writes x rows; no read-write overlap.  Noise
            # columns beyond ``col`` are still all zero, so restricting the
            # row operations to the written prefix is exact.
            signal[xl] -= k_cell * signal[pa]
            signal[xa] -= k_cell * signal[pl]
            if col:
                noise[xl, :col] -= k_cell * noise[pa, :col]
                noise[xa, :col] -= k_cell * noise[pl, :col]
            if eps_cell_p > 0:
                signal[xl] *= tp
                signal[pl] *= tp
                noise[xl, :col] *= tp
                noise[pl, :col] *= tp
                noise[xl, col] = sp
                noise[pl, col + 1] = sp
                light_cols += [col, col + 1]
                col += 2
            if eps_cell_a > 0:
                signal[xa] *= ta
                signal[pa] *= ta
                noise[xa, :col] *= ta
                noise[pa, :col] *= ta
                noise[xa, col] = sa
                noise[pa, col + 1] = sa
                atom_cols += [col, col + 1]
                col += 2
    return TransferMap(
        signal=signal,
        noise=noise,
        light_cols=np.array(light_cols, dtype=int),
        atom_cols=np.array(atom_cols, dtype=int),
        n_tau=nt,
        n_z=nz,
    )


def _collective_vectors(tm):
    """Uniform-weight normalized (x_light, p_light, x_atom, p_atom) directions."""
    dim = tm.signal.shape[0]
    vectors = np.zeros((4, dim))
    vectors[0, 0 : 2 * tm.n_tau : 2] = 1.0 / math.sqrt(tm.n_tau)
    vectors[1, 1 : 2 * tm.n_tau : 2] = 1.0 / math.sqrt(tm.n_tau)
    vectors[2, 2 * tm.n_tau :: 2] = 1.0 / math.sqrt(tm.n_z)
    vectors[3, 2 * tm.n_tau + 1 :: 2] = 1.0 / math.sqrt(tm.n_z)
    return vectors


def collective_signal_block(tm):
    """4x4 signal block of the collective (x_l, p_l, x_a, p_a) modes."""
    u = _collective_vectors(tm)
    return u @ tm.signal @ u.T


def extract_collective(tm):
    """Read the channel coefficients and residuals off a transfer map."""
    u = _collective_vectors(tm)
    rows = u @ tm.signal  # coefficient vectors of the four collective outputs
    block = rows @ u.T

    kappa_eff = abs(block[0, 3])
    eps_p_eff = 1.0 - block[0, 0] ** 2
    eps_a_eff = 1.0 - block[2, 2] ** 2

    residual = rows - block @ u
    signal_leak = float(np.max(np.sum(residual**2, axis=1)) * VACUUM_VARIANCE)

    noise_rows = u @ tm.noise
    def _var(row, cols):
        return float(np.sum(row[cols] ** 2) * VACUUM_VARIANCE)

    return CollectiveExtraction(
        kappa_eff=float(kappa_eff),
        eps_p_eff=float(eps_p_eff),
        eps_a_eff=float(eps_a_eff),
        signal_leak=signal_leak,
        noise_var_light_x=_var(noise_rows[0], tm.light_cols),
        noise_var_atom_x=_var(noise_rows[2], tm.atom_cols),
        noise_var_light_x_total=float(np.sum(noise_rows[0] ** 2) * VACUUM_VARIANCE),
        noise_var_atom_x_total=float(np.sum(noise_rows[2] ** 2) * VACUUM_VARIANCE),
    )


def commutator_defect(tm):
    """Max deviation of S Omega S^T + N Omega_noise N^T from Omega.

    Zero (to rounding) for every grid: each elementary update is symplectic on
    the system plus its fresh ancilla, so canonical commutators survive the
    full composition including the noise injections.
    """
    n_sys = tm.n_tau + tm.n_z
    omega = symplectic_form(n_sys)
    total = tm.signal @ omega @ tm.signal.T
    if tm.noise.shape[1]:
        omega_noise = symplectic_form(tm.noise.shape[1] // 2)
        total = total + tm.noise @ omega_noise @ tm.noise.T
    return float(np.max(np.abs(total - omega)))
