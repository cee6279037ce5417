"""Decoy-state BB84 performance engine.

Closed-form gains and error rates for weak coherent pulses, two-decoy
single-photon bounds, the asymptotic secure key rate, the additive QBER
budget, and a seeded Monte Carlo detection model that serves as an
independent oracle for the closed forms.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._mc import get_tally

# Gates are simulated in fixed-size chunks so the random stream, and
# therefore every result, depends only on (seed, num_gates).
_CHUNK_GATES = 1_000_000


@dataclass(frozen=True)
class ProtocolParams:
    """Decoy-state BB84 source configuration."""

    mu_signal: float
    nu_decoy: float
    vacuum: float = 0.0
    state_ratio: tuple = (14, 1, 1)  # signal : decoy : vacuum pulses
    clock_rate_hz: float = 50e6
    error_correction_efficiency: float = 1.16
    sifting_factor: float = 0.5

    def __post_init__(self):
        if not self.mu_signal > self.nu_decoy >= 0:
            raise ValueError("need mu_signal > nu_decoy >= 0")
        if self.vacuum != 0.0:
            raise ValueError("vacuum state intensity must be 0")
        if len(self.state_ratio) != 3 or self.state_ratio[0] <= 0 or self.state_ratio[1] <= 0:
            raise ValueError("state_ratio needs positive signal and decoy shares")
        if self.clock_rate_hz <= 0:
            raise ValueError("clock rate must be > 0")
        if self.error_correction_efficiency < 1.0:
            raise ValueError("error correction efficiency must be >= 1")
        if not 0.0 < self.sifting_factor <= 1.0:
            raise ValueError("sifting factor must be in (0, 1]")

    @property
    def signal_fraction(self) -> float:
        return self.state_ratio[0] / sum(self.state_ratio)


@dataclass(frozen=True)
class DetectorParams:
    """Gated single-photon-detector configuration."""

    efficiency: float
    gate_width_ns: float
    dark_count_per_gate: float
    misalignment_error: float  # intrinsic error probability of signal clicks

    def __post_init__(self):
        for name in ("efficiency", "dark_count_per_gate", "misalignment_error"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.gate_width_ns <= 0:
            raise ValueError("gate width must be > 0")


@dataclass(frozen=True)
class ChannelBudget:
    """Aggregate channel description seen by the QKD formulas."""

    transmittance: float  # path transmittance times detector efficiency
    background_per_gate: float  # dark counts plus all noise counts (Y0)

    def __post_init__(self):
        if not 0.0 < self.transmittance <= 1.0:
            raise ValueError("transmittance must be in (0, 1]")
        if not 0.0 <= self.background_per_gate <= 1.0:
            raise ValueError("background per gate must be in [0, 1]")


@dataclass(frozen=True)
class QberBudget:
    """The five additive error-rate terms of the total QBER."""

    qber_in: float
    qber_mcf_ds: float
    qber_mcf_us: float
    qber_ssmf_ds: float
    qber_ssmf_us: float

    def __post_init__(self):
        for name in ("qber_in", "qber_mcf_ds", "qber_mcf_us",
                     "qber_ssmf_ds", "qber_ssmf_us"):
            value = getattr(self, name)
            if not 0.0 <= value <= 0.5:
                raise ValueError(f"{name} must be in [0, 0.5]")

    @property
    def qber_mcf(self) -> float:
        return self.qber_mcf_ds + self.qber_mcf_us

    @property
    def qber_ssmf(self) -> float:
        return self.qber_ssmf_ds + self.qber_ssmf_us

    @property
    def qber_total(self) -> float:
        return (self.qber_in + self.qber_mcf_ds + self.qber_mcf_us
                + self.qber_ssmf_ds + self.qber_ssmf_us)


@dataclass(frozen=True)
class MeasuredGains:
    """Observed gains and error rates for the three intensities."""

    q_mu: float
    e_mu: float
    q_nu: float
    e_nu: float
    y0: float  # vacuum gain


@dataclass(frozen=True)
class DecoyEstimate:
    """Single-photon bounds derived from two-decoy measurements."""

    q_mu: float
    e_mu: float
    q_nu: float
    e_nu: float
    y1_lower: float
    e1_upper: float
    q1_lower: float
    feasible: bool


def binary_entropy(x: float) -> float:
    """Shannon entropy of a binary variable, H2(0) = H2(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("binary entropy argument must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def gain_and_qber(intensity: float, budget: ChannelBudget, e_det: float):
    """Gain and QBER of a weak coherent pulse of the given mean photon
    number: Q = Y0 + 1 - exp(-eta*lambda) and
    E*Q = Y0/2 + e_det*(1 - exp(-eta*lambda))."""
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    y0 = budget.background_per_gate
    signal = -math.expm1(-budget.transmittance * intensity)
    gain = min(y0 + signal, 1.0)
    if gain == 0.0:
        return 0.0, 0.5  # vacuum in a noiseless channel: background limit
    qber = (0.5 * y0 + e_det * signal) / gain
    return gain, min(qber, 0.5)


def decoy_bounds(params: ProtocolParams, measured: MeasuredGains) -> DecoyEstimate:
    """Two-decoy (weak + vacuum) bounds on the single-photon yield and
    error rate, and the implied single-photon gain at the signal
    intensity.  Returns feasible=False when the yield bound is not
    positive."""
    mu, nu = params.mu_signal, params.nu_decoy
    if nu <= 0:
        raise ValueError("decoy intensity must be > 0 for two-decoy bounds")
    y0 = measured.y0
    y1 = (mu / (mu * nu - nu * nu)) * (
        measured.q_nu * math.exp(nu)
        - measured.q_mu * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y0
    )
    y1 = min(y1, 1.0)
    if y1 <= 0.0:
        return DecoyEstimate(measured.q_mu, measured.e_mu, measured.q_nu,
                             measured.e_nu, 0.0, 0.5, 0.0, feasible=False)
    e1 = (measured.e_nu * measured.q_nu * math.exp(nu) - 0.5 * y0) / (y1 * nu)
    e1 = min(max(e1, 0.0), 0.5)
    q1 = y1 * mu * math.exp(-mu)
    return DecoyEstimate(measured.q_mu, measured.e_mu, measured.q_nu,
                         measured.e_nu, y1, e1, q1, feasible=True)


def secure_key_rate(params: ProtocolParams, estimate: DecoyEstimate) -> float:
    """Asymptotic secure key rate in bits per second.

    R = sifting * clock * signal_fraction *
        max(0, -Q_mu * f_EC * H2(E_mu) + Q1 * (1 - H2(e1)))
    """
    if not estimate.feasible:
        return 0.0
    leak = estimate.q_mu * params.error_correction_efficiency \
        * binary_entropy(estimate.e_mu)
    distill = estimate.q1_lower * (1.0 - binary_entropy(estimate.e1_upper))
    per_pulse = max(0.0, distill - leak)
    return (params.sifting_factor * params.clock_rate_hz
            * params.signal_fraction * per_pulse)


def qber_budget(
    noise_contributions: dict,
    signal_counts: float,
    qber_in: float,
    dark_counts: float = 0.0,
) -> QberBudget:
    """Additive QBER decomposition.

    ``noise_contributions`` maps the four noise terms (mcf_ds, mcf_us,
    ssmf_ds, ssmf_us) to counts per gate; noise photons are random in
    basis and bit, so each contributes half its fraction of the total
    detections.  The total is the sum of the terms plus the inherent
    QBER, which makes the decomposition additive by construction.
    """
    known = {"mcf_ds", "mcf_us", "ssmf_ds", "ssmf_us"}
    unknown = set(noise_contributions) - known
    if unknown:
        raise ValueError(f"unknown noise terms: {sorted(unknown)}")
    counts = {k: noise_contributions.get(k, 0.0) for k in known}
    if signal_counts < 0 or dark_counts < 0 or any(v < 0 for v in counts.values()):
        raise ValueError("counts must be >= 0")
    denom = signal_counts + dark_counts + sum(counts.values())

    def term(n):
        return 0.5 * n / denom if denom > 0 else 0.0

    return QberBudget(
        qber_in=qber_in,
        qber_mcf_ds=term(counts["mcf_ds"]),
        qber_mcf_us=term(counts["mcf_us"]),
        qber_ssmf_ds=term(counts["ssmf_ds"]),
        qber_ssmf_us=term(counts["ssmf_us"]),
    )


def monte_carlo_gain_qber(
    intensity: float,
    budget: ChannelBudget,
    e_det: float,
    num_gates: int,
    rng: np.random.Generator,
    backend: str | None = None,
):
    """Empirical (gain, qber) for one intensity.

    Per gate: draw a Poisson photon number, thin each photon with the
    channel transmittance, fire the background with probability Y0;
    signal clicks err with probability e_det, background-only clicks
    with probability 1/2.  Gates run in fixed-size chunks so results
    depend only on the generator state and num_gates.
    """
    tally = get_tally(backend)
    eta = budget.transmittance
    y0 = budget.background_per_gate
    clicks = 0
    errors = 0
    remaining = num_gates
    while remaining > 0:
        chunk = min(_CHUNK_GATES, remaining)
        photons = rng.poisson(intensity, chunk)
        u_photon = rng.random(int(photons.sum()))
        u_background = rng.random(chunk)
        u_error = rng.random(chunk)
        c, e = tally(np.ascontiguousarray(photons, dtype=np.int64),
                     u_photon, u_background, u_error, eta, y0, e_det)
        clicks += c
        errors += e
        remaining -= chunk
    gain = clicks / num_gates
    qber = errors / clicks if clicks else 0.5
    return gain, qber


def monte_carlo_detect(
    params: ProtocolParams,
    budget: ChannelBudget,
    e_det: float,
    num_gates: int,
    seed: int,
    backend: str | None = None,
) -> dict:
    """Empirical gains and QBERs for signal, decoy and vacuum pulses.

    ``num_gates`` gates are simulated per intensity.  Deterministic for a
    given (seed, num_gates) regardless of the active tally backend.
    """
    if num_gates < 100_000:
        raise ValueError("num_gates must be >= 100000 for a usable oracle")
    rng = np.random.default_rng(seed)
    results = {}
    for label, intensity in (("signal", params.mu_signal),
                             ("decoy", params.nu_decoy),
                             ("vacuum", params.vacuum)):
        results[label] = monte_carlo_gain_qber(
            intensity, budget, e_det, num_gates, rng, backend=backend)
    return results
