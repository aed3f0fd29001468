"""Travel-time uncertainty model.

A trip of d km departing at minute t takes

    base + congestion * multiplier + accidents

where base = 60 d / v, congestion follows rush-hour Gaussian kernels scaled
by a saturating distance factor, the multiplier is log-normal with
time-varying parameters, and accidents arrive by a time-inhomogeneous
Poisson process peaking at night. All randomness flows through RandomStream
so every draw is replayable from (seed, label, indices) alone.
"""

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .core import (
    MINUTES_PER_DAY,
    Location,
    StochasticParams,
    TimeWindow,
    TimeWindowParams,
    canonical_real,
    euclidean_distance,
)

_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def _entropy_words(seed: int, label: str, indices: "tuple[int, ...]") -> "tuple[int, ...]":
    h = hashlib.sha256()
    h.update(struct.pack("<q", seed))
    h.update(label.encode("utf-8"))
    for ix in indices:
        h.update(struct.pack("<q", ix))
    digest = h.digest()
    return tuple(int.from_bytes(digest[i:i + 8], "little") for i in range(0, 32, 8))


class RandomStream:
    """A deterministic generator keyed by (seed, label, indices).

    Identical keys replay identical draw sequences on any platform; distinct
    keys give independent streams, so adding an entity never perturbs the
    draws of existing ones.
    """

    def __init__(self, seed: int, label: str = "", indices: "tuple[int, ...]" = ()):
        self.seed = int(seed)
        self.label = label
        self.indices = tuple(int(i) for i in indices)
        words = _entropy_words(self.seed, self.label, self.indices)
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))

    def derive(self, *indices: int) -> "RandomStream":
        """Child stream keyed by this stream's identity plus extra indices."""
        return RandomStream(self.seed, self.label, self.indices + tuple(int(i) for i in indices))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, label={self.label!r}, indices={self.indices})"


def derive_seed(seed: int, label: str, *parts) -> int:
    """Stable 63-bit integer seed mixed from a root seed, a label, and parts."""
    h = hashlib.sha256()
    h.update(struct.pack("<q", int(seed)))
    h.update(label.encode("utf-8"))
    for part in parts:
        if isinstance(part, int):
            h.update(b"i" + struct.pack("<q", part))
        else:
            h.update(b"s" + str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little") >> 1


def golden_vector(n: int = 128, seed: int = 123456789, label: str = "golden"):
    """Reference uniform draws pinned by the cross-platform determinism test."""
    return RandomStream(seed, label).rng.random(n)


def gaussian_density(x, mu: float, sigma: float):
    """Normal pdf, the shape shared by the rush-hour and accident kernels."""
    z = (np.asarray(x, dtype=float) - mu) / sigma
    return np.exp(-0.5 * z * z) / (sigma * _SQRT_TWO_PI)


def peak_kernel(t_hours, params: StochasticParams):
    """Morning plus evening rush-hour density at clock time t_hours."""
    return (gaussian_density(t_hours, params.mu_morning, params.sigma_peak)
            + gaussian_density(t_hours, params.mu_evening, params.sigma_peak))


def time_factor(t_hours, params: StochasticParams):
    """Congestion time profile: baseline plus amplified rush-hour kernel."""
    return params.beta_base + params.gamma_amp * peak_kernel(t_hours, params)


def distance_factor(d, params: StochasticParams):
    """Saturating trip-length effect, 0 at d = 0 rising toward 1."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0):
        raise ValueError(f"distance must be non-negative, got {d}")
    return 1.0 - np.exp(-d / params.lambda_dist)


def congestion_factor(d, t, params: StochasticParams):
    """Deterministic congestion minutes for d km departing at minute t."""
    return params.alpha * time_factor(np.asarray(t, dtype=float) / 60.0, params) * distance_factor(d, params)


def delay_parameters(t: float, params: StochasticParams) -> "tuple[float, float]":
    """(mu, sigma) of the log-normal multiplier at departure minute t."""
    k = float(peak_kernel(t / 60.0, params))
    return params.mu_base + params.delta * k, params.sigma_base + params.epsilon * k


def sample_delay_multiplier(t: float, params: StochasticParams, stream: RandomStream, size=None):
    """Draw the log-normal congestion multiplier; strictly positive."""
    mu, sigma = delay_parameters(t, params)
    return stream.rng.lognormal(mu, sigma, size)


def expected_delay_multiplier(t: float, params: StochasticParams) -> float:
    """Closed-form mean of the multiplier: exp(mu + sigma^2 / 2)."""
    mu, sigma = delay_parameters(t, params)
    return math.exp(mu + 0.5 * sigma * sigma)


def accident_rate(t: float, params: StochasticParams) -> float:
    """Accident intensity at minute t, peaking at the night kernel."""
    return params.lambda_scale * float(gaussian_density(t / 60.0, params.mu_night, params.sigma_acc))


def sample_accident_count(t: float, params: StochasticParams, stream: RandomStream, size=None):
    """Poisson accident count for a departure at minute t."""
    return stream.rng.poisson(accident_rate(t, params), size)


def sample_accident_delay(t: float, params: StochasticParams, stream: RandomStream) -> float:
    """Total accident delay in minutes: a uniform 0.5-2 h delay per accident."""
    count = int(sample_accident_count(t, params, stream))
    if count == 0:
        return 0.0
    hours = stream.rng.uniform(params.accident_delay_min, params.accident_delay_max, count)
    return 60.0 * float(hours.sum())


@dataclass(frozen=True)
class TravelSample:
    """One realized trip, decomposed into its three delay sources (minutes)."""

    base: float
    congestion: float
    accident_delay: float

    @property
    def total(self) -> float:
        return self.base + self.congestion + self.accident_delay


def travel_time(a: Location, b: Location, t: float, params: StochasticParams,
                stream: RandomStream) -> TravelSample:
    """Sample one realized trip from a to b departing at minute-of-day t."""
    t = float(t) % MINUTES_PER_DAY
    d = euclidean_distance(a, b)
    base = 60.0 * d / params.speed_v
    congestion = float(congestion_factor(d, t, params)) * float(
        sample_delay_multiplier(t, params, stream))
    accident = sample_accident_delay(t, params, stream)
    return TravelSample(base=base, congestion=congestion, accident_delay=accident)


def expected_travel_time(a: Location, b: Location, t: float, params: StochasticParams) -> float:
    """Mean trip time excluding accidents, used for planning."""
    t = float(t) % MINUTES_PER_DAY
    d = euclidean_distance(a, b)
    base = 60.0 * d / params.speed_v
    return base + float(congestion_factor(d, t, params)) * expected_delay_multiplier(t, params)


def clamp_window_start(start: float, length: float) -> float:
    """Shift a sampled start so the window fits inside the day."""
    return max(0.0, min(start, MINUTES_PER_DAY - length))


def sample_time_window(profile: str, tw_params: TimeWindowParams,
                       stream: RandomStream) -> TimeWindow:
    """Draw a service window for a customer profile.

    Residential starts are bimodal (morning and evening modes, equal weight);
    commercial starts are midday normal with a tighter maximum length.
    """
    g = stream.rng
    if profile == "residential":
        if g.random() < 0.5:
            start = g.normal(tw_params.res_morning_mean, tw_params.res_morning_sigma)
        else:
            start = g.normal(tw_params.res_evening_mean, tw_params.res_evening_sigma)
        length = g.uniform(tw_params.w_min, tw_params.w_max)
    elif profile == "commercial":
        start = g.normal(tw_params.com_mean, tw_params.com_sigma)
        length = g.uniform(tw_params.w_min, tw_params.w_max_com)
    else:
        raise ValueError(f"unknown customer profile {profile!r}")
    length = canonical_real(length)
    start = canonical_real(clamp_window_start(start, length))
    # rounding to stored precision can push a day-end window past midnight
    # by a few microminutes; step down until it fits again
    while start + length > MINUTES_PER_DAY:
        start = canonical_real(start - max(start, 1.0) * 1e-8)
    return TimeWindow(start=start, length=length)
