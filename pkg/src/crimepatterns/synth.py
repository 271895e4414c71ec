"""Seeded synthetic datasets with known ground truth.

Every generator takes an explicit integer seed and draws from its own
PCG64 stream, so scenarios are reproducible across runs and machines
and independent of call order.  These are the oracles the statistical
machinery is tested against: power-law counts with a known exponent,
red noise with a known lag-1 coefficient, a sinusoid in noise with a
known period, and a city of regions traversed by a traveling seasonal
wave.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .concentration import sample_power_law
from .series import (
    RegionSeriesSet,
    TimeSeries,
    WEEK_STEP_YEARS,
    WEEKS_PER_YEAR,
    week_starts_from,
)

RNG_ALGORITHM = "numpy-pcg64"
DEFAULT_WEEK_ORIGIN = np.datetime64("2010-01-04")  # a Monday

SCENARIO_KINDS = ("powerlaw_counts", "ar1", "seasonal", "traveling_wave_city")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_powerlaw_counts(alpha: float, xmin: int, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws from p(x) proportional to x**-alpha, x >= xmin."""
    if n < 1:
        raise ValueError("n must be positive")
    return sample_power_law(alpha, xmin, n, _rng(seed))


def gen_ar1(a: float, n: int, seed: int, burn_in: int = 1000) -> TimeSeries:
    """Red noise x[t] = a * x[t-1] + e[t] with unit-variance innovations.

    A warm-up stretch of `burn_in` steps is discarded so the returned
    series starts in the stationary regime.
    """
    if not 0 <= a < 1:
        raise ValueError("a must lie in [0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    innovations = _rng(seed).standard_normal(burn_in + n)
    x = lfilter([1.0], [1.0, -a], innovations)
    return TimeSeries(x[burn_in:], WEEK_STEP_YEARS, DEFAULT_WEEK_ORIGIN)


def gen_seasonal(
    period_years: float,
    amplitude: float,
    noise_sd: float,
    n: int,
    seed: int,
) -> TimeSeries:
    """A sinusoid of the given period plus white noise, sampled weekly.

    noise_sd = 0 returns the exact sinusoid.  The series must span at
    least two cycles of the requested period.
    """
    if period_years <= 0:
        raise ValueError("period must be positive")
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    if n * WEEK_STEP_YEARS < 2 * period_years:
        raise ValueError("series must cover at least two full periods")
    t = np.arange(n) * WEEK_STEP_YEARS
    values = amplitude * np.sin(2.0 * np.pi * t / period_years)
    if noise_sd > 0:
        values = values + noise_sd * _rng(seed).standard_normal(n)
    return TimeSeries(values, WEEK_STEP_YEARS, DEFAULT_WEEK_ORIGIN)


def gen_traveling_wave_city(
    n_regions: int,
    n_weeks: int,
    window_weeks: int,
    wave_speed: float | None = None,
    amplitude: float = 1.0,
    noise_sd: float = 0.5,
    seed: int = 0,
) -> RegionSeriesSet:
    """A city whose annual rhythm sweeps across regions.

    Every region carries the same annual sinusoid, but region i only
    expresses it inside a window of `window_weeks` weeks that starts at
    week i * 52 / wave_speed (wrapping around the series); outside its
    window a region is pure noise.  `wave_speed` is in regions per
    year; the default completes exactly one sweep over the whole series
    (52 * n_regions / n_weeks).  wave_speed = 0 disables the sweep and
    every region is rhythmic throughout, which is also what a window
    spanning the full series produces.
    """
    if n_regions < 4:
        raise ValueError("need at least 4 regions")
    if n_weeks < 2:
        raise ValueError("need at least 2 weeks")
    if not 1 <= window_weeks <= n_weeks:
        raise ValueError("window_weeks must lie in [1, n_weeks]")
    if wave_speed is None:
        wave_speed = WEEKS_PER_YEAR * n_regions / n_weeks
    if wave_speed < 0:
        raise ValueError("wave_speed must be non-negative")

    t = np.arange(n_weeks)
    seasonal = amplitude * np.sin(2.0 * np.pi * t * WEEK_STEP_YEARS)
    if wave_speed == 0:
        active = np.ones((n_regions, n_weeks), dtype=bool)
    else:
        stride = WEEKS_PER_YEAR / wave_speed  # weeks between region onsets
        onsets = (np.arange(n_regions) * stride) % n_weeks
        offset = (t[None, :] - onsets[:, None]) % n_weeks
        active = offset < window_weeks
    values = seasonal[None, :] * active
    if noise_sd > 0:
        values = values + noise_sd * _rng(seed).standard_normal((n_regions, n_weeks))
    return RegionSeriesSet(
        week_starts_from(DEFAULT_WEEK_ORIGIN, n_weeks),
        values,
        np.arange(n_regions),
        meta={
            "kind": "traveling_wave_city",
            "wave_speed": float(wave_speed),
            "window_weeks": int(window_weeks),
            "rng": RNG_ALGORITHM,
            "seed": int(seed),
        },
    )


@dataclass
class ScenarioSpec:
    """A generator invocation serialized as JSON: which generator, its
    parameters, and the seed."""

    kind: str
    seed: int
    parameters: dict

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(
                f"unknown scenario kind '{self.kind}'; expected one of {SCENARIO_KINDS}"
            )
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError("seed must be an integer")
        if not isinstance(self.parameters, dict):
            raise ValueError("parameters must be an object")


def load_scenario(path) -> ScenarioSpec:
    """Read and validate a scenario JSON file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"scenario file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError("scenario file must hold a JSON object")
    missing = [k for k in ("kind", "seed", "parameters") if k not in raw]
    if missing:
        raise ValueError(f"scenario file lacks required keys: {missing}")
    return ScenarioSpec(kind=raw["kind"], seed=raw["seed"], parameters=raw["parameters"])


_REQUIRED_PARAMETERS = {
    "powerlaw_counts": ("alpha", "xmin", "n"),
    "ar1": ("a", "n"),
    "seasonal": ("period_years", "amplitude", "noise_sd", "n"),
    "traveling_wave_city": ("n_regions", "n_weeks", "window_weeks"),
}
_OPTIONAL_PARAMETERS = {
    "traveling_wave_city": ("wave_speed_regions_per_year", "amplitude", "noise_sd"),
}


def run_scenario(spec: ScenarioSpec):
    """Dispatch a scenario to its generator.

    Returns whatever the generator returns: a count array for
    powerlaw_counts, a TimeSeries for ar1 and seasonal, and a
    RegionSeriesSet for traveling_wave_city.  Missing or unknown
    parameters are errors, so scenario files stay honest.
    """
    p = dict(spec.parameters)
    required = _REQUIRED_PARAMETERS[spec.kind]
    optional = _OPTIONAL_PARAMETERS.get(spec.kind, ())
    missing = [k for k in required if k not in p]
    if missing:
        raise ValueError(f"scenario '{spec.kind}' lacks parameters {missing}")
    unknown = sorted(set(p) - set(required) - set(optional))
    if unknown:
        raise ValueError(f"scenario '{spec.kind}' has unknown parameters {unknown}")

    if spec.kind == "powerlaw_counts":
        return gen_powerlaw_counts(
            alpha=float(p["alpha"]), xmin=int(p["xmin"]), n=int(p["n"]), seed=spec.seed
        )
    if spec.kind == "ar1":
        return gen_ar1(a=float(p["a"]), n=int(p["n"]), seed=spec.seed)
    if spec.kind == "seasonal":
        return gen_seasonal(
            period_years=float(p["period_years"]),
            amplitude=float(p["amplitude"]),
            noise_sd=float(p["noise_sd"]),
            n=int(p["n"]),
            seed=spec.seed,
        )
    wave_speed = p.get("wave_speed_regions_per_year")
    return gen_traveling_wave_city(
        n_regions=int(p["n_regions"]),
        n_weeks=int(p["n_weeks"]),
        window_weeks=int(p["window_weeks"]),
        wave_speed=None if wave_speed is None else float(wave_speed),
        amplitude=float(p.get("amplitude", 1.0)),
        noise_sd=float(p.get("noise_sd", 0.5)),
        seed=spec.seed,
    )
