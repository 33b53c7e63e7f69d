"""Temperature-dependent refractive index of lithium niobate.

Coefficient sets live in YAML data files (see ``opln/data``); each file names a
functional form through ``form_id`` and carries the raw coefficient lists.
Wavelengths are in micrometres and temperatures in degrees Celsius throughout.

Angular frequencies are handled as vacuum wave numbers ``nu = 2*pi/lambda``
(rad/um), so that ``c * dk/domega == dk/dnu`` is a plain group index.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

C_LIGHT = 299_792_458.0  # m/s

DATA_DIR_ENV = "OPLN_DATA_DIR"

# Relative frequency step for the group-velocity stencil.
GROUP_STEP = 1e-4


class DomainError(ValueError):
    """Raised when a wavelength or temperature is outside a model's validity."""


class Polarization(str, enum.Enum):
    ORDINARY = "ordinary"
    EXTRAORDINARY = "extraordinary"

    @classmethod
    def parse(cls, value: "str | Polarization") -> "Polarization":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("o", "ordinary"):
            return cls.ORDINARY
        if v in ("e", "extraordinary"):
            return cls.EXTRAORDINARY
        raise ValueError(f"unknown polarization {value!r}")


def _jundt90(lam2, T, a, b):
    f = (T - 24.5) * (T + 570.82)
    return (
        a[0]
        + b[0] * f
        + (a[1] + b[1] * f) / (lam2 - (a[2] + b[2] * f) ** 2)
        + (a[3] + b[3] * f) / (lam2 - a[4] ** 2)
        - a[5] * lam2
    )


def _el84(lam2, T, a):
    A1, A2, A3, A4, B1, B2, B3 = a
    F = (T - 24.5) * (T + 570.5)
    return A1 + (A2 + B1 * F) / (lam2 - (A3 + B2 * F) ** 2) + B3 * F - A4 * lam2


def _sellmeier3(lam2, a):
    return 1.0 + sum(a[i] * lam2 / (lam2 - a[i + 1]) for i in range(0, len(a), 2))


def _n_jundt90(lam, T, coeffs, thermo):
    return np.sqrt(_jundt90(lam * lam, T, coeffs, thermo))


def _n_el84(lam, T, coeffs, thermo):
    return np.sqrt(_el84(lam * lam, T, coeffs))


def _n_zelmon97_el84dT(lam, T, coeffs, thermo):
    lam2 = lam * lam
    n0 = np.sqrt(_sellmeier3(lam2, coeffs))
    return n0 + np.sqrt(_el84(lam2, T, thermo)) - np.sqrt(_el84(lam2, 21.0, thermo))


def _n_sellmeier3(lam, T, coeffs, thermo):
    return np.sqrt(_sellmeier3(lam * lam, coeffs))


def _n_constant(lam, T, coeffs, thermo):
    return np.full(np.shape(lam), float(coeffs[0])) + 0.0 * np.asarray(T)


FORMS = {
    "jundt90": _n_jundt90,
    "el84": _n_el84,
    "zelmon97_el84dT": _n_zelmon97_el84dT,
    "sellmeier3": _n_sellmeier3,
    "constant": _n_constant,
}


@dataclass(frozen=True)
class SellmeierModel:
    """Refractive-index model for one polarization axis."""

    axis: Polarization
    form_id: str
    coefficients: tuple[float, ...]
    thermo_coefficients: tuple[float, ...]
    valid_wavelength: tuple[float, float]
    valid_temperature: tuple[float, float]
    source_label: str = ""

    def __post_init__(self):
        if self.form_id not in FORMS:
            raise ValueError(f"unknown form_id {self.form_id!r}; known: {sorted(FORMS)}")
        object.__setattr__(self, "axis", Polarization.parse(self.axis))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(
            self, "thermo_coefficients", tuple(float(c) for c in self.thermo_coefficients)
        )
        lo, hi = (float(x) for x in self.valid_wavelength)
        tlo, thi = (float(x) for x in self.valid_temperature)
        if not (0 < lo < hi) or not (tlo <= thi):
            raise ValueError("validity intervals must be non-empty")
        object.__setattr__(self, "valid_wavelength", (lo, hi))
        object.__setattr__(self, "valid_temperature", (tlo, thi))

    def check(self, wavelength, temperature) -> None:
        lam = np.asarray(wavelength, dtype=float)
        T = np.asarray(temperature, dtype=float)
        lo, hi = self.valid_wavelength
        if lam.size and (np.min(lam) < lo or np.max(lam) > hi or not np.all(np.isfinite(lam))):
            bad = float(np.min(lam)) if np.min(lam) < lo else float(np.max(lam))
            bound = f"lower wavelength bound {lo} um" if bad < lo else f"upper wavelength bound {hi} um"
            raise DomainError(
                f"{self.axis.value} model: wavelength {bad:g} um violates {bound}"
            )
        tlo, thi = self.valid_temperature
        if T.size and (np.min(T) < tlo or np.max(T) > thi or not np.all(np.isfinite(T))):
            bad = float(np.min(T)) if np.min(T) < tlo else float(np.max(T))
            bound = f"lower temperature bound {tlo} C" if bad < tlo else f"upper temperature bound {thi} C"
            raise DomainError(
                f"{self.axis.value} model: temperature {bad:g} C violates {bound}"
            )

    def _raw_index(self, lam, T):
        return FORMS[self.form_id](lam, T, self.coefficients, self.thermo_coefficients)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "axis": self.axis.value,
            "form_id": self.form_id,
            "coefficients": list(self.coefficients),
            "thermo_coefficients": list(self.thermo_coefficients),
            "valid_wavelength_um": list(self.valid_wavelength),
            "valid_temperature_c": list(self.valid_temperature),
            "source": self.source_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SellmeierModel":
        expected = {
            "axis",
            "form_id",
            "coefficients",
            "thermo_coefficients",
            "valid_wavelength_um",
            "valid_temperature_c",
            "source",
        }
        unknown = set(d) - expected
        missing = expected - set(d) - {"source"}
        if unknown:
            raise ValueError(f"unknown keys in coefficient file: {sorted(unknown)}")
        if missing:
            raise ValueError(f"missing keys in coefficient file: {sorted(missing)}")
        return cls(
            axis=d["axis"],
            form_id=d["form_id"],
            coefficients=tuple(d["coefficients"]),
            thermo_coefficients=tuple(d["thermo_coefficients"] or ()),
            valid_wavelength=tuple(d["valid_wavelength_um"]),
            valid_temperature=tuple(d["valid_temperature_c"]),
            source_label=d.get("source", ""),
        )


def load_model(path: str | os.PathLike) -> SellmeierModel:
    with open(path, encoding="utf-8") as fh:
        return SellmeierModel.from_dict(yaml.safe_load(fh))


def dump_model(model: SellmeierModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(model.to_dict(), fh, sort_keys=False)


def data_dir() -> Path:
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("opln") / "data"))


@lru_cache(maxsize=None)
def _load_cached(path: str) -> SellmeierModel:
    return load_model(path)


def lithium_niobate(axis: str | Polarization, directory: str | os.PathLike | None = None) -> SellmeierModel:
    """Shipped congruent LiNbO3 model for ``axis`` ('o' or 'e')."""
    pol = Polarization.parse(axis)
    name = "ln_congruent_o.yaml" if pol is Polarization.ORDINARY else "ln_congruent_e.yaml"
    base = Path(directory) if directory is not None else data_dir()
    return _load_cached(str(base / name))


def constant_model(n: float, axis="o", valid_wavelength=(0.1, 20.0), valid_temperature=(-273.0, 1000.0)):
    """Dispersionless toy model, handy for limits and tests."""
    return SellmeierModel(axis, "constant", (n,), (), valid_wavelength, valid_temperature, "toy")


# -- operations ---------------------------------------------------------------


def refractive_index(model: SellmeierModel, wavelength, temperature):
    """Refractive index at ``wavelength`` (um) and ``temperature`` (C)."""
    model.check(wavelength, temperature)
    lam = np.asarray(wavelength, dtype=float)
    n = model._raw_index(lam, np.asarray(temperature, dtype=float))
    if not np.all(np.isfinite(n)) or np.any(n <= 1.0):
        raise DomainError(f"{model.axis.value} model produced a non-physical index")
    return n if n.ndim else float(n)


def wave_number(model: SellmeierModel, wavelength, temperature):
    """k = 2*pi*n/lambda in rad/um."""
    lam = np.asarray(wavelength, dtype=float)
    k = 2.0 * math.pi * refractive_index(model, lam, temperature) / lam
    return k if np.ndim(k) else float(k)


def inverse_group_velocity(model: SellmeierModel, wavelength, temperature, step: float = GROUP_STEP):
    """dk/domega in units of 1/c (the group index).

    Central difference on the vacuum wave number with relative step ``step``.
    Multiply by ``1/C_LIGHT`` for seconds per metre.
    """
    lam = np.asarray(wavelength, dtype=float)
    model.check(lam, temperature)
    nu = 2.0 * math.pi / lam
    h = step * nu
    lam_hi = 2.0 * math.pi / (nu + h)
    lam_lo = 2.0 * math.pi / (nu - h)
    try:
        model.check(np.concatenate([np.ravel(lam_hi), np.ravel(lam_lo)]), temperature)
    except DomainError as exc:
        raise DomainError(f"too close to the validity boundary for the group-velocity stencil: {exc}") from None
    n_hi = model._raw_index(lam_hi, np.asarray(temperature, dtype=float))
    n_lo = model._raw_index(lam_lo, np.asarray(temperature, dtype=float))
    g = (n_hi * (nu + h) - n_lo * (nu - h)) / (2.0 * h)
    return g if np.ndim(g) else float(g)
