"""Wavelet rhythm analysis for weekly count series.

The pipeline: remove the slow trend with a one-year moving average and
standardize, take a continuous Morlet wavelet transform on a dyadic
scale grid, and judge power against a lag-1 autoregressive (red noise)
null.  Scale-averaged power over the 0.8 to 1.1 year band isolates the
circannual rhythm; summing the band's significance masks across the
regions of a city gives the composed power, a week-by-week count of
rhythmic regions.

Wavelet normalization, cone of influence, red-noise spectrum and the
chi-squared degrees-of-freedom corrections follow the practical
conventions of Torrence and Compo (1998) for the omega0 = 6 Morlet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .series import TimeSeries, WEEK_STEP_YEARS

MORLET_OMEGA0 = 6.0
# Fourier period of a unit-scale omega0=6 Morlet: close to but not 1.
FOURIER_FACTOR = 4.0 * np.pi / (MORLET_OMEGA0 + np.sqrt(2.0 + MORLET_OMEGA0**2))
PSI0 = np.pi**-0.25
CDELTA = 0.776  # reconstruction constant
GAMMA_DECORR = 2.32  # temporal decorrelation scale for averaged spectra
DJ0 = 0.60  # scale decorrelation distance
DOFMIN = 2.0  # a complex wavelet has two degrees of freedom per point

CIRCANNUAL_BAND = (0.8, 1.1)  # scale band, in years

DEFAULT_TREND_WINDOW = 53  # weeks, about one year and odd
MIN_DETREND_LENGTH = 104  # two years of weekly data
DEFAULT_ALPHA_LEVEL = 0.05
DEFAULT_DJ = 0.1
DEFAULT_MAX_SCALE_YEARS = 4.0
MAX_FILL_GAP = 2


@dataclass
class WaveletField:
    """A CWT and the facts needed to test it against red noise.

    `coefficients` has shape (n_scales, n_times); `coi_scale[t]` is the
    largest scale free of edge effects at time t (e-folding distance of
    the wavelet's envelope).  `series_variance` and `lag1` describe the
    analyzed series and parameterize the null spectrum.
    """

    coefficients: np.ndarray
    scales: np.ndarray
    coi_scale: np.ndarray
    dt: float
    dj: float
    series_variance: float
    lag1: float
    t0: np.datetime64 | None = None

    @property
    def n_times(self) -> int:
        return self.coefficients.shape[1]

    @property
    def periods(self) -> np.ndarray:
        return self.scales * FOURIER_FACTOR

    def power(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2


@dataclass
class GlobalSpectrum:
    """Time-averaged wavelet power with its red-noise threshold."""

    scales: np.ndarray
    periods: np.ndarray
    power: np.ndarray
    significance: np.ndarray
    alpha_level: float

    def peak_scales(self) -> np.ndarray:
        """Scales of local power maxima that clear the threshold."""
        p = self.power
        interior = np.zeros(p.size, dtype=bool)
        interior[1:-1] = (p[1:-1] >= p[:-2]) & (p[1:-1] >= p[2:])
        interior[0] = p.size > 1 and p[0] > p[1]
        interior[-1] = p.size > 1 and p[-1] > p[-2]
        return self.scales[interior & (p > self.significance)]


@dataclass
class BandPower:
    """Scale-averaged power over one band, against a single red-noise
    threshold.  `significant` is already masked by COI validity."""

    band: tuple
    power: np.ndarray
    threshold: float
    significant: np.ndarray
    coi_valid: np.ndarray
    t0: np.datetime64 | None = None


@dataclass
class ComposedPower:
    """Count of simultaneously rhythmic regions, week by week."""

    c_b: np.ndarray
    regions_valid: np.ndarray
    week_starts: np.ndarray
    band: tuple
    region_ids: np.ndarray
    masks: np.ndarray
    rejected: list = field(default_factory=list)


@dataclass
class DurationRun:
    """A maximal run of consecutive significant weeks in one region."""

    region_id: int
    start: int
    length: int


def fill_gaps(values, max_gap: int = MAX_FILL_GAP) -> np.ndarray:
    """Linearly interpolate interior NaN runs of at most `max_gap`
    samples.  Longer runs, or NaNs touching either edge, are errors."""
    v = np.asarray(values, dtype=float).copy()
    missing = np.isnan(v)
    if not missing.any():
        return v
    if missing.all():
        raise ValueError("series is entirely missing")
    if missing[0] or missing[-1]:
        raise ValueError("missing values at the series edge cannot be interpolated")
    edges = np.diff(missing.astype(int))
    starts = np.nonzero(edges == 1)[0] + 1
    ends = np.nonzero(edges == -1)[0] + 1
    longest = int((ends - starts).max())
    if longest > max_gap:
        raise ValueError(f"gap of {longest} weeks exceeds the {max_gap}-week limit")
    good = np.nonzero(~missing)[0]
    v[missing] = np.interp(np.nonzero(missing)[0], good, v[good])
    return v


def detrend(series: TimeSeries, window: int = DEFAULT_TREND_WINDOW) -> TimeSeries:
    """Subtract a centered moving average and scale to unit variance.

    The window is clipped at the series edges (shorter, asymmetric
    averages there), which keeps the output length equal to the input
    length.  Needs two years of weekly data; a series that is constant
    up to rounding after trend removal is an error because it cannot be
    standardized.
    """
    y = series.values
    n = y.size
    if n < MIN_DETREND_LENGTH:
        raise ValueError(f"detrending needs at least {MIN_DETREND_LENGTH} samples")
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer of at least 3")
    if np.isnan(y).any():
        raise ValueError("series has missing values; fill gaps first")
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(y)])
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half, n - 1)
    trend = (csum[hi + 1] - csum[lo]) / (hi - lo + 1)
    residual = y - trend
    sd = residual.std()
    if sd <= 1e-12 * (1.0 + np.abs(y).max()):
        raise ValueError("series has no variance after trend removal")
    return TimeSeries(residual / sd, series.dt, series.t0)


def lag1_autocorrelation(values) -> float:
    """Sample lag-1 autocorrelation, clipped to [0, 1) for use as a red
    noise parameter."""
    x = np.asarray(values, dtype=float)
    x = x - x.mean()
    denom = (x * x).sum()
    if denom == 0:
        return 0.0
    a = (x[1:] * x[:-1]).sum() / denom
    return float(min(max(a, 0.0), 0.999999))


def cwt(
    series: TimeSeries,
    s0: float | None = None,
    dj: float = DEFAULT_DJ,
    max_scale_years: float = DEFAULT_MAX_SCALE_YEARS,
    required_band: tuple | None = CIRCANNUAL_BAND,
) -> WaveletField:
    """Continuous Morlet (omega0 = 6) wavelet transform.

    Scales form the dyadic grid s0 * 2**(j*dj); the default s0 is two
    sampling steps.  The transform is computed in the frequency domain
    with zero padding to the next power of two, which both speeds up
    the FFT and suppresses wraparound.  `required_band` asserts that
    the grid brackets a band of interest before doing any work.
    """
    y = series.values
    n = y.size
    dt = series.dt
    if np.isnan(y).any():
        raise ValueError("series has missing values; fill gaps first")
    if s0 is None:
        s0 = 2.0 * dt
    if not (s0 > 0 and dj > 0):
        raise ValueError("s0 and dj must be positive")
    n_scales = int(np.ceil(np.log2(max_scale_years / s0) / dj))
    if n_scales < 1:
        raise ValueError("max scale must exceed the smallest scale")
    scales = s0 * 2.0 ** (dj * np.arange(n_scales + 1))
    if required_band is not None:
        if scales[0] > required_band[0] or scales[-1] < required_band[1]:
            raise ValueError(
                f"scale grid [{scales[0]:.3f}, {scales[-1]:.3f}] does not cover "
                f"the band {required_band}"
            )

    variance = float(y.var())
    lag1 = lag1_autocorrelation(y)
    x = y - y.mean()
    nfft = 1 << int(n - 1).bit_length()
    if nfft == n:
        nfft *= 2  # always pad, even when n is a power of two
    omega = 2.0 * np.pi * np.fft.fftfreq(nfft, d=dt)
    spectrum = np.fft.fft(x, nfft)
    # Frequency-domain daughters with unit-energy normalization.
    arg = scales[:, None] * omega[None, :]
    daughters = (
        np.sqrt(2.0 * np.pi * scales[:, None] / dt)
        * PSI0
        * np.exp(-0.5 * (arg - MORLET_OMEGA0) ** 2)
        * (omega[None, :] > 0)
    )
    coefficients = np.fft.ifft(spectrum[None, :] * daughters, axis=1)[:, :n]

    steps_from_edge = np.minimum(np.arange(n), np.arange(n)[::-1])
    coi_scale = dt * steps_from_edge / np.sqrt(2.0)
    return WaveletField(
        coefficients=coefficients,
        scales=scales,
        coi_scale=coi_scale,
        dt=dt,
        dj=dj,
        series_variance=variance,
        lag1=lag1,
        t0=series.t0,
    )


def _red_noise_spectrum(lag1: float, dt: float, periods: np.ndarray) -> np.ndarray:
    """Normalized AR(1) spectrum at the Fourier periods of the scales."""
    freq = dt / periods  # cycles per sampling step
    return (1.0 - lag1**2) / (
        1.0 + lag1**2 - 2.0 * lag1 * np.cos(2.0 * np.pi * freq)
    )


def global_spectrum(
    field: WaveletField, alpha_level: float = DEFAULT_ALPHA_LEVEL
) -> GlobalSpectrum:
    """Time-averaged power per scale with red-noise significance.

    Averaging over time raises the degrees of freedom above the
    pointwise value of 2; the correction shrinks with scale because
    fewer independent wavelet samples fit in the series at large
    scales, and only the points inside the cone of influence should be
    counted (approximated by n - scale/dt).
    """
    if not 0 < alpha_level < 1:
        raise ValueError("alpha_level must be inside (0, 1)")
    n = field.n_times
    power = field.power().mean(axis=1)
    periods = field.periods
    background = field.series_variance * _red_noise_spectrum(field.lag1, field.dt, periods)
    n_avg = np.maximum(n - field.scales / field.dt, 1.0)
    dof = DOFMIN * np.sqrt(1.0 + (n_avg * field.dt / (GAMMA_DECORR * field.scales)) ** 2)
    q = chi2.ppf(1.0 - alpha_level, dof)
    significance = background * q / dof
    return GlobalSpectrum(
        scales=field.scales.copy(),
        periods=periods,
        power=power,
        significance=significance,
        alpha_level=alpha_level,
    )


def band_power(
    field: WaveletField,
    band: tuple = CIRCANNUAL_BAND,
    alpha_level: float = DEFAULT_ALPHA_LEVEL,
) -> BandPower:
    """Scale-averaged power over `band` and its red-noise threshold.

    The average is the scale-weighted sum (dj * dt / Cdelta) * sum of
    power / scale, tested as a chi-squared variable whose degrees of
    freedom account for the number of scales averaged and their
    decorrelation.  Time steps whose cone of influence excludes any
    scale in the band are reported in `coi_valid` and masked out of
    `significant`.
    """
    if not 0 < alpha_level < 1:
        raise ValueError("alpha_level must be inside (0, 1)")
    lo, hi = band
    if not 0 < lo < hi:
        raise ValueError("band must satisfy 0 < low < high")
    selected = (field.scales >= lo) & (field.scales <= hi)
    if not selected.any():
        raise ValueError(f"band {band} does not intersect the scale grid")
    s = field.scales[selected]
    power = field.power()[selected]
    averaged = (field.dj * field.dt / CDELTA) * (power / s[:, None]).sum(axis=0)

    n_avg = int(selected.sum())
    s_avg = 1.0 / (1.0 / s).sum()
    s_mid = float(np.exp(0.5 * (np.log(s[0]) + np.log(s[-1]))))
    dof = DOFMIN * (n_avg * s_avg / s_mid) * np.sqrt(1.0 + (n_avg * field.dj / DJ0) ** 2)
    background = _red_noise_spectrum(field.lag1, field.dt, s * FOURIER_FACTOR)
    p_avg = s_avg * (background / s).sum()
    q = chi2.ppf(1.0 - alpha_level, dof)
    threshold = (
        (field.dj * field.dt / (CDELTA * s_avg))
        * field.series_variance
        * p_avg
        * q
        / dof
    )
    coi_valid = field.coi_scale >= s[-1]
    significant = (averaged > threshold) & coi_valid
    return BandPower(
        band=(float(lo), float(hi)),
        power=averaged,
        threshold=float(threshold),
        significant=significant,
        coi_valid=coi_valid,
        t0=field.t0,
    )


def reconstruct_band(field: WaveletField, band: tuple | None = None) -> TimeSeries:
    """Invert the transform over a scale band (all scales when None).

    Uses the delta-function reconstruction: sum of Re(W)/sqrt(scale)
    rescaled by dj * sqrt(dt) / (Cdelta * psi0(0)).  With the full
    grid this recovers the anomaly series up to small discretization
    and edge errors.
    """
    if band is None:
        selected = np.ones(field.scales.size, dtype=bool)
    else:
        lo, hi = band
        selected = (field.scales >= lo) & (field.scales <= hi)
        if not selected.any():
            raise ValueError(f"band {band} does not intersect the scale grid")
    s = field.scales[selected]
    parts = field.coefficients[selected].real / np.sqrt(s)[:, None]
    values = (field.dj * np.sqrt(field.dt) / (CDELTA * PSI0)) * parts.sum(axis=0)
    return TimeSeries(values, field.dt, field.t0)


def composed_power(
    series_set,
    band: tuple = CIRCANNUAL_BAND,
    alpha_level: float = DEFAULT_ALPHA_LEVEL,
    trend_window: int = DEFAULT_TREND_WINDOW,
    max_gap: int = MAX_FILL_GAP,
) -> ComposedPower:
    """Week-by-week count of regions with significant band power.

    Every region series is gap-filled, detrended and transformed
    independently; c_b[t] is the number of regions significant at week
    t, and regions_valid[t] how many of them had a COI-valid band
    there.  Regions whose series cannot be analyzed (too gappy, or flat
    after detrending) are skipped and listed in `rejected`; fewer than
    two analyzable regions is an error.
    """
    n_regions, n_weeks = series_set.counts.shape
    if n_weeks < MIN_DETREND_LENGTH:
        raise ValueError(f"composed power needs at least {MIN_DETREND_LENGTH} weeks")
    masks, valids, kept = [], [], []
    rejected: list[tuple[int, str]] = []
    for i in range(n_regions):
        region_id = int(series_set.region_ids[i])
        try:
            values = fill_gaps(series_set.counts[i].astype(float), max_gap)
            anomaly = detrend(
                TimeSeries(values, WEEK_STEP_YEARS, series_set.week_starts[0]),
                window=trend_window,
            )
            bp = band_power(cwt(anomaly, required_band=band), band, alpha_level)
        except ValueError as exc:
            rejected.append((region_id, str(exc)))
            continue
        masks.append(bp.significant)
        valids.append(bp.coi_valid)
        kept.append(region_id)
    if len(kept) < 2:
        raise ValueError("fewer than two regions could be analyzed")
    mask_matrix = np.array(masks)
    return ComposedPower(
        c_b=mask_matrix.sum(axis=0).astype(np.int64),
        regions_valid=np.array(valids).sum(axis=0).astype(np.int64),
        week_starts=series_set.week_starts.copy(),
        band=(float(band[0]), float(band[1])),
        region_ids=np.array(kept, dtype=np.int64),
        masks=mask_matrix,
        rejected=rejected,
    )


def significant_durations(composed: ComposedPower) -> list[DurationRun]:
    """Maximal runs of consecutive significant weeks, per region.

    COI-invalid weeks are never significant, so runs terminate at the
    cone boundary by construction.  Runs come out sorted by region and
    start week.
    """
    runs: list[DurationRun] = []
    for row, region_id in zip(composed.masks, composed.region_ids):
        flags = np.concatenate([[0], row.astype(np.int8), [0]])
        edges = np.diff(flags)
        starts = np.nonzero(edges == 1)[0]
        ends = np.nonzero(edges == -1)[0]
        for a, b in zip(starts, ends):
            runs.append(DurationRun(int(region_id), int(a), int(b - a)))
    return runs
