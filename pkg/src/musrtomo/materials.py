"""Material parameter presets and loading.

A material file is JSON with the fields
{name, family, A_MHz, A_is_angular, deltaA_MHz, j_e, notes}; couplings are
quoted in MHz and the flag says whether the number is an angular frequency
(used as-is, in rad units) or a linear frequency (multiplied by 2 pi on
ingestion). Shipped presets: ``vacuum`` (free muonium), ``quartz`` and
``si-mustar`` (anomalous muonium in silicon).

Extra search directories can be supplied through the ``MUSRTOMO_MATERIALS``
environment variable (path-separator separated).
"""

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import HamiltonianFamily, HamiltonianSpec
from .tomography import Direction

_PRESET_DIR = Path(__file__).parent / "materials"
ENV_SEARCH_PATH = "MUSRTOMO_MATERIALS"


@dataclass(frozen=True)
class Material:
    name: str
    family: HamiltonianFamily
    a_mhz: float
    a_is_angular: bool
    delta_a_mhz: float = 0.0
    j_e: float = 0.5
    notes: str = ""

    @property
    def a_rad_ns(self) -> float:
        return _to_rad_ns(self.a_mhz, self.a_is_angular)

    @property
    def delta_a_rad_ns(self) -> float:
        return _to_rad_ns(self.delta_a_mhz, self.a_is_angular)

    def hamiltonian_spec(self, b_field: float = 0.0,
                         b_axis: Direction | None = None,
                         aniso_axis: Direction | None = None) -> HamiltonianSpec:
        family = self.family
        if family is HamiltonianFamily.HYPERFINE and b_field != 0.0:
            family = HamiltonianFamily.ISOTROPIC
        if family is HamiltonianFamily.ANISOTROPIC and aniso_axis is None:
            aniso_axis = Direction.from_vector([1.0, 0.0, 0.0])
        return HamiltonianSpec(
            family=family,
            a=self.a_rad_ns,
            delta_a=self.delta_a_rad_ns if family is HamiltonianFamily.ANISOTROPIC else 0.0,
            b_field=b_field,
            b_axis=b_axis if b_field != 0.0 else None,
            aniso_axis=aniso_axis if family is HamiltonianFamily.ANISOTROPIC else None,
            j_e=self.j_e,
        )


def _to_rad_ns(mhz: float, is_angular: bool) -> float:
    """MHz -> rad/ns; linear frequencies pick up the 2 pi."""
    factor = 1.0 if is_angular else 2 * np.pi
    return mhz * factor * 1e-3


def _search_dirs() -> list[Path]:
    dirs = [_PRESET_DIR]
    env = os.environ.get(ENV_SEARCH_PATH, "")
    dirs += [Path(p) for p in env.split(os.pathsep) if p]
    return dirs


def material_from_dict(data: dict) -> Material:
    return Material(
        name=data["name"],
        family=HamiltonianFamily(data["family"]),
        a_mhz=float(data["A_MHz"]),
        a_is_angular=bool(data["A_is_angular"]),
        delta_a_mhz=float(data.get("deltaA_MHz", 0.0)),
        j_e=float(data.get("j_e", 0.5)),
        notes=data.get("notes", ""),
    )


def load_material(name_or_path: str) -> Material:
    """Load a preset by name or any material file by path."""
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        return material_from_dict(json.loads(p.read_text()))
    for d in _search_dirs():
        candidate = d / f"{name_or_path}.json"
        if candidate.exists():
            return material_from_dict(json.loads(candidate.read_text()))
    raise FileNotFoundError(f"no material preset or file named {name_or_path!r}")


def available_presets() -> list[str]:
    names = []
    for d in _search_dirs():
        if d.is_dir():
            names += sorted(f.stem for f in d.glob("*.json"))
    return names
