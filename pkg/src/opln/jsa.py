"""Pump envelope, phase-matching functions, JSA grids and Schmidt purity.

Amplitudes throughout; the pump FWHM is quoted at intensity level.  The
domain-structure PMF uses the raw mismatch ``k_p - k_s - k_i`` because the
explicit sign pattern already carries the grating, while the ideal sinc form
subtracts ``2*pi/period`` and carries no sign pattern.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .phasematch import Media, delta_k_raw, pump_from

SQRT_LN2 = math.sqrt(math.log(2.0))

# grid points per chunk when summing over thousands of domains
_CHUNK = 4096

# Batched duty evaluation expands around the slice's central mismatch; past
# EXPANSION_MAX radians of spread the series is slower than direct exponentials.
EXPANSION_MAX = 4.0
EXPANSION_TOL = 1e-14


class DegenerateJsaError(ValueError):
    pass


# -- pump ---------------------------------------------------------------------


@dataclass(frozen=True)
class PumpSpec:
    """Gaussian pump: centre wavelength (um) and bandwidth (nm)."""

    center_wavelength: float
    bandwidth: float

    def __post_init__(self):
        if not self.center_wavelength > 0:
            raise ValueError("pump centre wavelength must be positive")
        if not self.bandwidth > 0:
            raise ValueError("pump bandwidth must be positive")
        if self.bandwidth * 1e-3 >= 2.0 * self.center_wavelength / 10.0:
            raise ValueError("pump bandwidth must stay below a tenth of the degenerate wavelength")

    @property
    def degenerate_wavelength(self) -> float:
        return 2.0 * self.center_wavelength

    @property
    def fwhm(self) -> float:
        return fwhm_of_pump(self)

    def to_dict(self) -> dict:
        return {"center_wavelength_um": self.center_wavelength, "bandwidth_nm": self.bandwidth}

    @classmethod
    def from_dict(cls, d: dict) -> "PumpSpec":
        return cls(float(d["center_wavelength_um"]), float(d["bandwidth_nm"]))


def pef(signal, idler, pump: PumpSpec):
    """Pump envelope amplitude at (signal, idler) wavelengths in um."""
    half = pump.center_wavelength
    dl = pump.bandwidth * 1e-3
    width = dl / (half**2 - (dl / 2.0) ** 2)
    x = (1.0 / np.asarray(signal, dtype=float) + 1.0 / np.asarray(idler, dtype=float) - 1.0 / half) / width
    return np.exp(-0.5 * x * x)


def fwhm_of_pump(pump: PumpSpec) -> float:
    """Intensity FWHM of the pump in nm."""
    l0 = pump.degenerate_wavelength * 1e3
    dl = pump.bandwidth
    ln4 = math.log(4.0)
    num = 2.0 * SQRT_LN2 * l0**2 * dl * (l0**2 - dl**2)
    den = l0**4 + dl**4 - 2.0 * l0**2 * dl**2 * (1.0 + ln4)
    return num / den


# -- poling structure ---------------------------------------------------------


@dataclass(frozen=True)
class PolingProfile:
    """Crystal of ``length`` mm poled with ``period`` um and per-period duty cycles.

    Each period starts with a positive domain covering a fraction ``A_j`` of it,
    followed by an inverted one.  Whatever is left past the last whole period
    stays unpoled (positive).
    """

    length: float
    period: float
    duty_cycles: np.ndarray = field(repr=False)

    def __post_init__(self):
        A = np.array(self.duty_cycles, dtype=float).reshape(-1)
        if self.length <= 0 or self.period <= 0:
            raise ValueError("length and period must be positive")
        M = period_count(self.length, self.period)
        if A.size != M:
            raise ValueError(f"expected {M} duty cycles (floor(L/period)), got {A.size}")
        if np.any(~np.isfinite(A)) or np.any(A < 0.0) or np.any(A > 1.0):
            raise ValueError("duty cycles must lie in [0, 1]")
        A.setflags(write=False)
        object.__setattr__(self, "duty_cycles", A)

    @property
    def period_count(self) -> int:
        return self.duty_cycles.size

    @property
    def length_um(self) -> float:
        return self.length * 1e3

    @classmethod
    def uniform(cls, length: float, period: float, duty: float = 0.5) -> "PolingProfile":
        return cls(length, period, np.full(period_count(length, period), duty))

    def with_duty(self, duty_cycles) -> "PolingProfile":
        return PolingProfile(self.length, self.period, duty_cycles)


def period_count(length_mm: float, period_um: float) -> int:
    return int(math.floor(length_mm * 1e3 / period_um + 1e-9))


@dataclass(frozen=True)
class Segments:
    start: np.ndarray
    end: np.ndarray
    sign: np.ndarray

    def __iter__(self):
        return iter(zip(self.start.tolist(), self.end.tolist(), self.sign.tolist()))

    def __len__(self):
        return self.start.size


def domain_boundaries(profile: PolingProfile) -> Segments:
    """Ordered (start, end, sign) segments in um covering [0, L]."""
    M = profile.period_count
    Lam = profile.period
    j = np.arange(M, dtype=float)
    z0 = j * Lam
    zb = (j + profile.duty_cycles) * Lam
    z1 = (j + 1.0) * Lam
    start = np.empty(2 * M)
    end = np.empty(2 * M)
    sign = np.empty(2 * M)
    start[0::2], end[0::2], sign[0::2] = z0, zb, 1.0
    start[1::2], end[1::2], sign[1::2] = zb, z1, -1.0
    L = profile.length_um
    if M:
        end[-1] = min(end[-1], L)
    tail = M * Lam
    if L - tail > 1e-9 * L:
        start = np.append(start, tail)
        end = np.append(end, L)
        sign = np.append(sign, 1.0)
    return Segments(start, end, sign)


def pmf_from_segments(dk, segments: Segments, length_um: float):
    """Sum of per-domain contributions for mismatch values ``dk`` (rad/um).

    Written with sinc so that the small-mismatch limit needs no special case.
    """
    dk = np.asarray(dk, dtype=float)
    flat = dk.reshape(-1)
    d = segments.end - segments.start
    c = 0.5 * (segments.end + segments.start)
    w = segments.sign * d / length_um
    out = np.empty(flat.size, dtype=complex)
    step = max(1, _CHUNK * 64 // max(len(segments), 1))
    for a in range(0, flat.size, step):
        x = flat[a : a + step, None]
        out[a : a + step] = (w * np.sinc(x * d / (2 * np.pi)) * np.exp(-1j * x * c)).sum(axis=1)
    return out.reshape(dk.shape)


def pmf_domains(signal, idler, pump, profile: PolingProfile, temperature: float, media: Media | None = None):
    """Phase-matching amplitude of an explicit domain structure.

    ``pump`` may be None, in which case it follows from energy conservation.
    """
    if pump is None:
        pump = pump_from(signal, idler)
    dk = delta_k_raw(pump, signal, idler, temperature, media)
    out = pmf_from_segments(dk, domain_boundaries(profile), profile.length_um)
    return out if np.ndim(out) else complex(out)


def pmf_sinc(signal, idler, pump, period: float, length: float, temperature: float, media: Media | None = None):
    """Envelope of an ideal periodically poled crystal: sinc with linear phase."""
    if pump is None:
        pump = pump_from(signal, idler)
    dkp = delta_k_raw(pump, signal, idler, temperature, media) - 2.0 * math.pi / period
    x = dkp * length * 1e3 / 2.0
    out = np.sinc(x / np.pi) * np.exp(-1j * x)
    return out if np.ndim(out) else complex(out)


class DutyPmf:
    """Fast PMF for periodic-with-duty profiles.

    Telescoping the per-domain integrals leaves one exponential per period
    boundary that moves with the duty cycle; the fixed period edges are summed
    in closed form.  Equivalent to ``pmf_from_segments`` on
    ``domain_boundaries`` (checked in the tests).
    """

    def __init__(self, dk, length: float, period: float):
        self.dk = np.asarray(dk, dtype=float).reshape(-1)
        self.shape = np.shape(dk)
        self.L = length * 1e3
        self.period = period
        self.M = period_count(length, period)
        M, Lam, L, x = self.M, period, self.L, self.dk
        if np.any(np.abs(x) < 1e-12):
            raise ValueError("DutyPmf needs a non-vanishing mismatch; use pmf_from_segments")
        self.pref = 1j / (x * L)
        q = np.exp(-1j * x * Lam)
        # sum_{j<M} q^j, robust where q -> 1
        near = np.abs(1 - q) < 1e-9
        geo = np.where(near, M, (1 - q**M) / np.where(near, 1, 1 - q))
        fixed = geo * (1 + q)
        tail = M * Lam
        if L - tail > 1e-9 * L:
            fixed = fixed - (np.exp(-1j * x * L) - np.exp(-1j * x * tail))
        self.fixed = fixed
        self.base = np.arange(M, dtype=float) * Lam

    def __call__(self, duty_cycles):
        """PMF for one duty vector (M,) or a batch (P, M); returns (..., len(dk))."""
        A = np.asarray(duty_cycles, dtype=float)
        if A.ndim > 1 and self._expansion() is not None:
            return self._batch(A)
        b = self.base + A * self.period
        e = np.exp(-1j * b[..., :, None] * self.dk)
        s = e.sum(axis=-2)
        out = self.pref * (2.0 * s - self.fixed)
        return out if A.ndim > 1 else out.reshape(self.shape)

    def _expansion(self):
        # exp(-i dk_m A_j Lam) = exp(-i dk0 A_j Lam) * sum_n (-i x_m A_j)^n / n!
        # with x_m = (dk_m - dk0) Lam.  Turns the batch into n matrix products.
        if not hasattr(self, "_terms"):
            self._terms = None
            dk0 = 0.5 * (self.dk.max() + self.dk.min())
            x = (self.dk - dk0) * self.period
            X = float(np.max(np.abs(x)))
            if X <= EXPANSION_MAX:
                n, term = 1, X
                while term > EXPANSION_TOL:
                    n += 1
                    term *= X / n
                self._terms = n
                self._dk0 = dk0
                coeff = np.empty((n, x.size), dtype=complex)
                coeff[0] = 1.0
                for k in range(1, n):
                    coeff[k] = coeff[k - 1] * (-1j * x) / k
                self._coeff = coeff
                self._e0 = np.exp(-1j * np.outer(self.dk, self.base))  # (N, M)
        return self._terms

    def _batch(self, A):
        n = self._terms
        u = np.exp(-1j * self._dk0 * self.period * A).T  # (M, P)
        At = A.T
        s = np.zeros((self.dk.size, A.shape[0]), dtype=complex)
        v = u
        for k in range(n):
            if k:
                v = v * At
            s += self._coeff[k][:, None] * (self._e0 @ v)
        return (self.pref[:, None] * (2.0 * s - self.fixed[:, None])).T


# -- JSA ----------------------------------------------------------------------


@dataclass
class JsaGrid:
    signal_axis: np.ndarray
    idler_axis: np.ndarray
    amplitude: np.ndarray
    window_nm: float

    def __post_init__(self):
        for ax in (self.signal_axis, self.idler_axis):
            if ax.ndim != 1 or ax.size < 2 or np.any(np.diff(ax) <= 0):
                raise ValueError("grid axes must be strictly increasing vectors")
        if self.amplitude.shape != (self.signal_axis.size, self.idler_axis.size):
            raise ValueError("amplitude shape does not match the axes")
        if not np.all(np.isfinite(self.amplitude)):
            raise ValueError("JSA amplitude must be finite")

    def normalize(self) -> "JsaGrid":
        norm = math.sqrt(float(np.sum(np.abs(self.amplitude) ** 2)))
        if norm == 0.0:
            raise DegenerateJsaError("degenerate JSA: amplitude vanishes everywhere")
        self.amplitude = self.amplitude / norm
        return self

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2


def grid_axes(center, window_nm: float, grid: int):
    if grid < 2:
        raise ValueError("grid must have at least two points per axis")
    if not window_nm > 0:
        raise ValueError("window must be positive")
    half = 0.5 * window_nm * 1e-3
    cs, ci = center
    return np.linspace(cs - half, cs + half, grid), np.linspace(ci - half, ci + half, grid)


def jsa_grid(
    pump: PumpSpec,
    pmf_evaluator: Callable,
    window_nm: float = 60.0,
    grid: int = 200,
    center=None,
    pef_evaluator: Callable | None = None,
) -> JsaGrid:
    """Sample PEF x PMF on a wavelength-linear square window and normalize.

    ``pmf_evaluator(S, I)`` receives meshgrids in um (signal along axis 0).
    ``center`` defaults to the degenerate point of the pump.
    """
    if center is None:
        center = (pump.degenerate_wavelength, pump.degenerate_wavelength)
    s_ax, i_ax = grid_axes(center, window_nm, grid)
    S, I = np.meshgrid(s_ax, i_ax, indexing="ij")
    env = pef(S, I, pump) if pef_evaluator is None else pef_evaluator(S, I)
    amp = env * pmf_evaluator(S, I)
    return JsaGrid(s_ax, i_ax, np.asarray(amp, dtype=complex), float(window_nm)).normalize()


def domain_pmf(profile: PolingProfile, temperature: float, media: Media | None = None) -> Callable:
    """PMF evaluator for an explicit domain structure (uses the fast path)."""

    def evaluate(S, I):
        dk = delta_k_raw(pump_from(S, I), S, I, temperature, media)
        if np.any(np.abs(dk) < 1e-12):
            return pmf_from_segments(dk, domain_boundaries(profile), profile.length_um)
        return _duty_pmf_chunked(dk, profile)

    return evaluate


def _duty_pmf_chunked(dk, profile: PolingProfile):
    flat = np.asarray(dk).reshape(-1)
    out = np.empty(flat.size, dtype=complex)
    step = max(1, (_CHUNK * 256) // max(profile.period_count, 1))
    for a in range(0, flat.size, step):
        ev = DutyPmf(flat[a : a + step], profile.length, profile.period)
        out[a : a + step] = ev(profile.duty_cycles)
    return out.reshape(np.shape(dk))


def sinc_pmf(period: float, length: float, temperature: float, media: Media | None = None) -> Callable:
    def evaluate(S, I):
        return pmf_sinc(S, I, None, period, length, temperature, media)

    return evaluate


# -- Schmidt decomposition ----------------------------------------------------


@dataclass(frozen=True)
class SchmidtSpectrum:
    coefficients: np.ndarray
    purity: float

    @property
    def schmidt_number(self) -> float:
        return 1.0 / self.purity


def schmidt_purity(grid: JsaGrid | np.ndarray) -> SchmidtSpectrum:
    """Schmidt coefficients (descending, unit 2-norm) and purity sum c^4."""
    amp = grid.amplitude if isinstance(grid, JsaGrid) else np.asarray(grid)
    s = np.linalg.svd(amp, compute_uv=False)
    total = float(np.sum(s * s))
    if total == 0.0 or not np.isfinite(total):
        raise DegenerateJsaError("degenerate JSA: no non-zero singular values")
    c = s / math.sqrt(total)
    return SchmidtSpectrum(c, float(np.sum(c**4)))


def antidiagonal_projection(grid: JsaGrid):
    """Project |f| onto the anti-diagonal axis.

    Sums run along the diagonals (constant signal - idler offset), so the
    result is a function of position across the phase-matching ridge of a
    45-degree JSA, which is where sinc side lobes sit.  Returns
    ``(offset_um, projection)`` with offset = signal - idler relative to the
    grid centre.
    """
    a = np.abs(grid.amplitude)
    n, m = a.shape
    if n != m:
        raise ValueError("projection needs a square grid")
    step = grid.signal_axis[1] - grid.signal_axis[0]
    offsets = np.arange(-(n - 1), n)
    proj = np.array([np.trace(a, offset=-int(k)) for k in offsets])
    return offsets * step, proj


def side_lobe_ratio(projection: np.ndarray) -> float:
    """Largest secondary local maximum relative to the global peak."""
    p = np.asarray(projection, dtype=float)
    peak = int(np.argmax(p))
    interior = np.nonzero((p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]))[0] + 1
    others = [p[i] for i in interior if i != peak]
    return float(max(others) / p[peak]) if others else 0.0


# -- exports ------------------------------------------------------------------


def write_jsa(grid: JsaGrid, stem) -> dict:
    """Write |f|^2 matrix CSV, axis sidecars and a real/imag npz bundle."""
    stem = str(stem)
    paths = {
        "intensity": stem + "_intensity.csv",
        "signal_axis": stem + "_signal_axis.csv",
        "idler_axis": stem + "_idler_axis.csv",
        "complex": stem + "_complex.npz",
    }
    np.savetxt(paths["intensity"], grid.intensity, delimiter=",", fmt="%.17g")
    np.savetxt(paths["signal_axis"], grid.signal_axis, delimiter=",", fmt="%.17g", header="signal_um", comments="")
    np.savetxt(paths["idler_axis"], grid.idler_axis, delimiter=",", fmt="%.17g", header="idler_um", comments="")
    np.savez(
        paths["complex"],
        signal_axis=grid.signal_axis,
        idler_axis=grid.idler_axis,
        real=grid.amplitude.real,
        imag=grid.amplitude.imag,
        window_nm=grid.window_nm,
    )
    return paths


def read_jsa(path) -> JsaGrid:
    with np.load(path) as z:
        return JsaGrid(
            z["signal_axis"], z["idler_axis"], z["real"] + 1j * z["imag"], float(z["window_nm"])
        )


def read_jsa_intensity(stem):
    stem = str(stem)
    inten = np.loadtxt(stem + "_intensity.csv", delimiter=",", ndmin=2)
    s = np.loadtxt(stem + "_signal_axis.csv", delimiter=",", skiprows=1, ndmin=1)
    i = np.loadtxt(stem + "_idler_axis.csv", delimiter=",", skiprows=1, ndmin=1)
    return s, i, inten


def write_projection(offsets, values, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["offset_um", "projection"])
        for x, y in zip(offsets, values):
            w.writerow([repr(float(x)), repr(float(y))])


def read_projection(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
