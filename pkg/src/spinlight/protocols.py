"""Entanglement generation and teleportation between two collective spins.

Both protocols are built from the same primitive: a two-round collective Bell
measurement.  In each round a fresh light pulse passes through the first
sample, suffers transmission loss on the way to the second sample, passes
through it, suffers detector loss, and has its x quadrature measured.  Between
the rounds both samples are rotated in phase space (first sample by -pi/2,
second by +pi/2) so that the two rounds pin down the commuting pair
x1 - x2 and p1 + p2 of the final variables; with transmission loss the
effectively measured combinations carry a sqrt(1 - eta_t) weight on the first
sample.

``entangle`` runs the Bell rounds on two samples starting in vacuum and
reports the conditional EPR variances (exact Gaussian algebra, independent of
the measurement outcomes).  ``teleport`` consumes the entangled pair, runs a
local Bell measurement on sample 1 and a freshly prepared input sample, and
displaces sample 2 by the outcomes.  The displacement gain is calibrated by a
deterministic linear solve so that the output mean tracks the input mean
exactly (unit end-to-end gain); the reported fidelity is that of the
outcome-averaged output state against the coherent input, which the unit gain
makes independent of the input amplitude.
"""

import dataclasses
import math

import numpy as np

from .gaussian import (
    GaussianState,
    MeasurementRecord,
    ModeIndex,
    ModeLabel,
    append_vacuum,
    displace,
    homodyne,
    loss_channel,
    marginal,
    rotate,
    variance_of,
    vacuum_state,
    fidelity_coherent,
)
from .interaction import ChannelParams, apply_pass

__all__ = [
    "RoundPlan",
    "ProtocolReport",
    "SweepPoint",
    "squeezing_parameter",
    "fidelity_ideal",
    "fidelity_lossy",
    "lossy_fidelity_bound",
    "optimal_kappa2",
    "classical_bound_check",
    "entangle",
    "teleport",
    "make_plans",
    "simulated_lossy_fidelity",
    "lossy_fidelity_sweep",
]

_ROTATION_FIRST = -math.pi / 2.0
_ROTATION_SECOND = math.pi / 2.0


@dataclasses.dataclass(frozen=True)
class RoundPlan:
    """Noise and strength settings for one Bell-measurement round.

    eta_t is the transmission loss between the two samples the round touches;
    eta_d the detector inefficiency just before the homodyne measurement.
    """

    kappa: float
    eps_p: float = 0.0
    eps_a: float = 0.0
    eta_t: float = 0.0
    eta_d: float = 0.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")
        for name in ("eps_p", "eps_a", "eta_t", "eta_d"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {value}")

    def channel(self):
        return ChannelParams(kappa=self.kappa, eps_p=self.eps_p, eps_a=self.eps_a)


@dataclasses.dataclass(frozen=True)
class ProtocolReport:
    """Run summary: squeezing, EPR variances, fidelity, outcomes, seed, config."""

    r: float
    epr_x: float
    epr_p: float
    fidelity: float = None
    records: tuple = ()
    seed: int = None
    config_echo: dict = None

    def __post_init__(self):
        if self.epr_x < 0 or self.epr_p < 0:
            raise ValueError("EPR variances must be non-negative")
        if self.fidelity is not None and not 0.0 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity must lie in [0, 1], got {self.fidelity}")


# ---------------------------------------------------------------------------
# closed forms


def squeezing_parameter(kappa):
    """Two-mode squeezing r = (1/2) ln(1 + 2 kappa^2) from one round pair."""
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    return 0.5 * math.log1p(2.0 * kappa**2)


def fidelity_ideal(kappa):
    """Noise-free teleportation fidelity 1 / (1 + 1/(1 + 2 k^2) + 1/(2 k^2))."""
    if kappa <= 0:
        raise ValueError("fidelity diverges at kappa = 0; kappa must be positive")
    return 1.0 / (1.0 + 1.0 / (1.0 + 2.0 * kappa**2) + 1.0 / (2.0 * kappa**2))


def fidelity_lossy(kappa2, eta_t):
    """First-order fidelity under transmission loss, 2 / (2 + 1/k2^2 + k2^2 eta_t)."""
    if kappa2 <= 0:
        raise ValueError("kappa2 must be positive")
    if not 0.0 <= eta_t < 1.0:
        raise ValueError(f"eta_t must lie in [0, 1), got {eta_t}")
    return 2.0 / (2.0 + 1.0 / kappa2**2 + kappa2**2 * eta_t)


def lossy_fidelity_bound(eta_t):
    """Upper envelope 1 / (1 + sqrt(eta_t)) of the lossy fidelity over kappa2."""
    if not 0.0 <= eta_t < 1.0:
        raise ValueError(f"eta_t must lie in [0, 1), got {eta_t}")
    return 1.0 / (1.0 + math.sqrt(eta_t))


def optimal_kappa2(eta_t):
    """Arg max of fidelity_lossy over kappa2: eta_t ** (-1/4)."""
    if not 0.0 < eta_t < 1.0:
        raise ValueError(f"eta_t must lie in (0, 1), got {eta_t}")
    return eta_t ** (-0.25)


def classical_bound_check(fidelity):
    """True iff the fidelity strictly beats the best measure-and-prepare value 1/2."""
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {fidelity}")
    return fidelity > 0.5


# ---------------------------------------------------------------------------
# Bell-measurement primitive


@dataclasses.dataclass(frozen=True)
class _RoundResult:
    outcome: float
    prior_mean: float
    prior_var: float
    record: MeasurementRecord


def _bell_rounds(state, first, second, plans, directives, rng, tag):
    """Run the two measurement rounds of one Bell measurement.

    ``directives`` is a pair of (kind, value) with kind in {'sample',
    'forced', 'innovate'}; 'innovate' forces outcome = prior mean + value,
    which is the handle the gain calibration uses to probe linear responses.
    """
    results = []
    for number, (plan, directive) in enumerate(zip(plans, directives), start=1):
        state = append_vacuum(state, 1)
        light = state.n_modes - 1
        state = apply_pass(state, light, first, plan.channel())
        state = loss_channel(state, light, plan.eta_t)
        state = apply_pass(state, light, second, plan.channel())
        state = loss_channel(state, light, plan.eta_d)

        k = 2 * light
        prior_mean = float(state.mean[k])
        prior_var = float(state.cov[k, k])
        kind, value = directive
        if kind == "sample":
            outcome, state = homodyne(state, light, "x", rng=rng)
        elif kind == "forced":
            outcome, state = homodyne(state, light, "x", forced=value)
        elif kind == "innovate":
            outcome, state = homodyne(state, light, "x", forced=prior_mean + value)
        else:
            raise ValueError(f"unknown outcome directive {kind!r}")
        record = MeasurementRecord(
            mode=ModeIndex(light, ModeLabel.LIGHT),
            quadrature="x",
            outcome=outcome,
            round_tag=f"{tag}:round{number}",
        )
        results.append(
            _RoundResult(
                outcome=outcome,
                prior_mean=prior_mean,
                prior_var=prior_var,
                record=record,
            )
        )
        if number == 1:
            state = rotate(state, first, _ROTATION_FIRST)
            state = rotate(state, second, _ROTATION_SECOND)
    return state, results


def _directives(forced_outcomes, rng):
    if forced_outcomes is not None:
        if len(forced_outcomes) != 2:
            raise ValueError("forced_outcomes must hold one value per round")
        return [("forced", float(v)) for v in forced_outcomes]
    if rng is None:
        raise ValueError("provide rng for sampled outcomes or forced_outcomes")
    return [("sample", None), ("sample", None)]


# ---------------------------------------------------------------------------
# entanglement generation


def entangle(plan_round1, plan_round2, rng=None, forced_outcomes=None, seed=None,
             config_echo=None):
    """Generate a conditionally entangled pair of collective spins.

    Both samples start in vacuum (coherent spin state along the polarization
    axis).  Returns the conditional two-sample state and a report whose EPR
    variances var(x1 - x2), var(p1 + p2) are exact consequences of the
    Gaussian conditioning, independent of the measurement outcomes.
    """
    directives = _directives(forced_outcomes, rng)
    state, results = _bell_rounds(
        vacuum_state(2), 0, 1, (plan_round1, plan_round2), directives, rng, "entangle"
    )
    epr_x = variance_of(state, [1.0, 0.0, -1.0, 0.0])
    epr_p = variance_of(state, [0.0, 1.0, 0.0, 1.0])
    report = ProtocolReport(
        r=-0.25 * math.log(epr_x * epr_p),
        epr_x=epr_x,
        epr_p=epr_p,
        fidelity=None,
        records=tuple(res.record for res in results),
        seed=seed,
        config_echo=config_echo,
    )
    return state, report


# ---------------------------------------------------------------------------
# teleportation


def _teleport_run(entangled, input_mean, plans, directives, rng):
    """One pipeline pass: attach the input sample, displace it, run the local Bell."""
    state = append_vacuum(entangled, 1)
    state = displace(state, 2, input_mean[0], input_mean[1])
    state, results = _bell_rounds(state, 0, 2, plans, directives, rng, "teleport")
    return state, results


def _mean_of_sample2(state):
    return np.array([state.mean[2], state.mean[3]])


@dataclasses.dataclass(frozen=True)
class _LinearResponse:
    """Linear coefficients of the teleport pipeline, from five probe runs.

    base_mean + b_mat @ u is the pre-displacement sample-2 mean for input u
    with zero-innovation outcomes; base_m + d_mat @ u the outcome means;
    innovation k shifts the sample-2 mean by c[k] and (for k = 1) the second
    outcome's mean by w21.  prior_vars are the outcome innovation variances
    and cond_cov the outcome-independent conditional sample-2 covariance.
    """

    base_mean: np.ndarray
    base_m: np.ndarray
    b_mat: np.ndarray
    d_mat: np.ndarray
    c: tuple
    w21: float
    prior_vars: np.ndarray
    cond_cov: np.ndarray

    def innovation_feeds(self):
        """Outcome response to each innovation: d m / d delta_k."""
        return (np.array([1.0, self.w21]), np.array([0.0, 1.0]))


def _linear_response(entangled, plans):
    """Probe the pipeline with unit inputs; everything is linear, no fitting."""
    zero = ("innovate", 0.0)
    unit = ("innovate", 1.0)

    def probe(u, directives):
        state, results = _teleport_run(entangled, u, plans, directives, None)
        return (
            _mean_of_sample2(state),
            np.array([res.prior_mean for res in results]),
            np.array([res.prior_var for res in results]),
            state,
        )

    base_mean, base_m, prior_vars, base_state = probe((0.0, 0.0), [zero, zero])
    mean_x, m_x, _, _ = probe((1.0, 0.0), [zero, zero])
    mean_p, m_p, _, _ = probe((0.0, 1.0), [zero, zero])
    mean_d1, m_d1, _, _ = probe((0.0, 0.0), [unit, zero])
    mean_d2, _, _, _ = probe((0.0, 0.0), [zero, unit])

    return _LinearResponse(
        base_mean=base_mean,
        base_m=base_m,
        b_mat=np.column_stack([mean_x - base_mean, mean_p - base_mean]),
        d_mat=np.column_stack([m_x - base_m, m_p - base_m]),
        c=(mean_d1 - base_mean, mean_d2 - base_mean),
        w21=float(m_d1[1] - base_m[1]),
        prior_vars=prior_vars,
        cond_cov=base_state.cov[2:4, 2:4],
    )


def _calibrated_gain(response):
    """Gain and offset giving unit end-to-end mean transfer for any input."""
    try:
        gain = np.linalg.solve(
            response.d_mat.T, (np.eye(2) - response.b_mat).T
        ).T
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "gain calibration failed: measurement outcomes do not respond to "
            "the input mean (kappa too small?)"
        ) from exc
    offset = -(response.base_mean + gain @ response.base_m)
    return gain, offset


def teleport(entangled, input_mean, plan_local_round1, plan_local_round2, gain=None,
             rng=None, forced_outcomes=None, seed=None, config_echo=None):
    """Teleport a coherent collective-spin state onto sample 2.

    Parameters
    ----------
    entangled : GaussianState
        Two-sample state from :func:`entangle`; sample 1 takes part in the
        local Bell measurement, sample 2 receives the displacement.
    input_mean : (float, float)
        Mean (x, p) of the coherent input prepared on the fresh third sample.
    plan_local_round1, plan_local_round2 : RoundPlan
        Settings of the local Bell rounds.  Under transmission loss the lossy
        strategy uses the moderate kappa first and the large kappa second,
        mirroring (in reverse) the entangling rounds.
    gain : (float, float), optional
        Displacement gains (gx, gp) applied as dx = gx * m2, dp = gp * m1,
        where m1, m2 are the two round outcomes.  Default: calibrated
        automatically for unit end-to-end mean transfer.
    rng, forced_outcomes
        Outcome source for the physical run, as in :func:`entangle`.

    Returns
    -------
    (output, report) : (GaussianState, ProtocolReport)
        ``output`` is the conditional single-mode state of sample 2 after the
        displacement.  ``report.fidelity`` is the overlap of the
        outcome-averaged output state with the coherent input, the quantity
        the closed-form expressions describe.
    """
    if entangled.n_modes != 2:
        raise ValueError(
            f"entangled resource must have exactly 2 modes, got {entangled.n_modes}"
        )
    plans = (plan_local_round1, plan_local_round2)
    input_mean = (float(input_mean[0]), float(input_mean[1]))

    response = _linear_response(entangled, plans)
    if gain is None:
        gain_matrix, offset = _calibrated_gain(response)
    else:
        gain_matrix = np.array([[0.0, float(gain[0])], [float(gain[1]), 0.0]])
        offset = np.zeros(2)

    # Outcome-averaged output state: the conditional covariance is outcome
    # independent, and the innovation-driven wander of the displaced mean adds
    # sum_k v_k * drift_k drift_k^T on top of it.
    drift = [
        c_k + gain_matrix @ feed_k
        for c_k, feed_k in zip(response.c, response.innovation_feeds())
    ]
    u = np.array(input_mean)
    marg_cov = response.cond_cov + sum(
        v * np.outer(r, r) for v, r in zip(response.prior_vars, drift)
    )
    marg_mean = (
        response.base_mean
        + response.b_mat @ u
        + gain_matrix @ (response.base_m + response.d_mat @ u)
        + offset
    )
    marg_state = GaussianState(marg_mean, marg_cov)
    fidelity = fidelity_coherent(marg_state, 0, input_mean)

    # Physical (conditional) run with sampled or forced outcomes.
    directives = _directives(forced_outcomes, rng)
    final_state, results = _teleport_run(entangled, input_mean, plans, directives, rng)
    outcomes = np.array([res.outcome for res in results])
    shift = gain_matrix @ outcomes + offset
    output = displace(marginal(final_state, [1]), 0, shift[0], shift[1])

    epr_x = variance_of(entangled, [1.0, 0.0, -1.0, 0.0])
    epr_p = variance_of(entangled, [0.0, 1.0, 0.0, 1.0])
    report = ProtocolReport(
        r=-0.25 * math.log(epr_x * epr_p),
        epr_x=epr_x,
        epr_p=epr_p,
        fidelity=fidelity,
        records=tuple(res.record for res in results),
        seed=seed,
        config_echo=config_echo,
    )
    return output, report


# ---------------------------------------------------------------------------
# loss / strength trade-off sweep


@dataclasses.dataclass(frozen=True)
class SweepPoint:
    kappa2: float
    eta_t: float
    f_simulated: float
    f_closed_form: float
    is_argmax: bool


def make_plans(kappa2, eta_t, kappa1_multiplier=10.0, eps_p=0.0, eps_a=0.0,
               eta_d=0.0, eta_t_local=None):
    """Round plans of the loss-adapted strategy.

    Entangling rounds run the large kappa first and kappa2 second; the local
    Bell measurement mirrors that (kappa2 first, large kappa second).  The
    local rounds carry the same transmission loss by default: matching the
    sqrt(1 - eta_t) weights between the nonlocal and local measurements is
    what cancels the amplified anti-squeezed noise at unit gain.
    """
    kappa1 = kappa1_multiplier * kappa2
    if eta_t_local is None:
        eta_t_local = eta_t
    noise = dict(eps_p=eps_p, eps_a=eps_a, eta_d=eta_d)
    return {
        "entangle1": RoundPlan(kappa=kappa1, eta_t=eta_t, **noise),
        "entangle2": RoundPlan(kappa=kappa2, eta_t=eta_t, **noise),
        "local1": RoundPlan(kappa=kappa2, eta_t=eta_t_local, **noise),
        "local2": RoundPlan(kappa=kappa1, eta_t=eta_t_local, **noise),
    }


def simulated_lossy_fidelity(kappa2, eta_t, **plan_kwargs):
    """Teleportation fidelity of the loss-adapted strategy at one operating point."""
    plans = make_plans(kappa2, eta_t, **plan_kwargs)
    entangled, _ = entangle(
        plans["entangle1"], plans["entangle2"], forced_outcomes=(0.0, 0.0)
    )
    _, report = teleport(
        entangled,
        (0.0, 0.0),
        plans["local1"],
        plans["local2"],
        forced_outcomes=(0.0, 0.0),
    )
    return report.fidelity


def lossy_fidelity_sweep(kappa2_values, eta_t, **plan_kwargs):
    """Sweep kappa2 at fixed eta_t; marks the simulated argmax row."""
    kappa2_values = [float(k) for k in kappa2_values]
    if len(kappa2_values) < 2:
        raise ValueError("sweep needs at least two kappa2 values")
    fids = [
        simulated_lossy_fidelity(k2, eta_t, **plan_kwargs) for k2 in kappa2_values
    ]
    best = int(np.argmax(fids))
    return [
        SweepPoint(
            kappa2=k2,
            eta_t=eta_t,
            f_simulated=f,
            f_closed_form=fidelity_lossy(k2, eta_t),
            is_argmax=(i == best),
        )
        for i, (k2, f) in enumerate(zip(kappa2_values, fids))
    ]
