"""Robot geometry: tapered backbone, tendon routing, spacer discs.

All quantities are SI (meters, pascals) once loaded. The backbone is a solid
circular rod whose radius varies linearly from base_radius at s=0 to
tip_radius at s=length; tendon offsets likewise taper linearly. Spacer disc
radii follow a geometric progression between the given base and tip values,
and disc spacings shrink by the same ratio.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import IoFailure, OffsetInsideBackbone, OutOfDomain

MANIFEST_VERSION = 1

# default axial thickness of the largest spacer disc [m]
DEFAULT_DISC_THICKNESS = 0.004


@dataclass(frozen=True)
class RobotSpec:
    """Full geometric and material description of one robot.

    length               backbone arc length [m]
    base_radius          backbone radius at s=0 [m]
    tip_radius           backbone radius at s=length [m]
    youngs_modulus       E [Pa]
    poisson_ratio        nu [-]
    tendon_count         number of tendons, equally spaced in angle
    tendon_base_offset   tendon distance from centerline at s=0 [m]
    tendon_tip_offset    tendon distance from centerline at s=length [m]
    disc_count           number of spacer discs (>= 2)
    disc_base_radius     radius of the first disc [m]
    disc_tip_radius      radius of the last disc [m]
    disc_base_thickness  axial thickness of the first disc [m]
    """

    length: float
    base_radius: float
    tip_radius: float
    youngs_modulus: float
    poisson_ratio: float
    tendon_count: int = 3
    tendon_base_offset: float = 0.032
    tendon_tip_offset: float = 0.014
    disc_count: int = 10
    disc_base_radius: float = 0.037
    disc_tip_radius: float = 0.016
    disc_base_thickness: float = DEFAULT_DISC_THICKNESS

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("length must be positive")
        if not (0 < self.tip_radius <= self.base_radius):
            raise ValueError("need 0 < tip_radius <= base_radius")
        if not self.youngs_modulus > 0:
            raise ValueError("youngs_modulus must be positive")
        if not (-1.0 < self.poisson_ratio < 0.5):
            raise ValueError("poisson_ratio must lie in (-1, 0.5)")
        if self.tendon_count < 1:
            raise ValueError("tendon_count must be at least 1")
        if min(self.tendon_base_offset, self.tendon_tip_offset) <= 0:
            raise ValueError("tendon offsets must be positive")
        if self.disc_count < 2:
            raise ValueError("disc_count must be at least 2")
        if not (0 < self.disc_tip_radius <= self.disc_base_radius):
            raise ValueError("need 0 < disc_tip_radius <= disc_base_radius")
        if not self.disc_base_thickness > 0:
            raise ValueError("disc_base_thickness must be positive")

    @property
    def shear_modulus(self):
        """G = E / (2 (1 + nu)) [Pa]."""
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def radius_rate(self):
        """dr/ds, constant for the linear taper [m/m]."""
        return (self.tip_radius - self.base_radius) / self.length


def reference_spec():
    """The bench prototype this package was validated against.

    345 mm silicone backbone tapering 11.1 -> 4.5 mm, E = 67 MPa, nu = 0.39,
    three tendons (offsets 32 -> 14 mm), ten discs (radii 37 -> 16 mm).
    """
    return RobotSpec(
        length=0.345,
        base_radius=0.0111,
        tip_radius=0.0045,
        youngs_modulus=67e6,
        poisson_ratio=0.39,
    )


def _check_domain(spec, s):
    if s < 0.0 or s > spec.length:
        raise OutOfDomain(f"arc length {s} outside [0, {spec.length}]")


def radius_at(spec, s):
    """Backbone radius r(s) [m]."""
    _check_domain(spec, s)
    # two-coefficient lerp: exact at both endpoints
    t = s / spec.length
    return (1.0 - t) * spec.base_radius + t * spec.tip_radius


@dataclass(frozen=True)
class SectionProperties:
    """Cross-section area/second moments and their arc-length derivatives."""

    area: float
    i_xx: float
    i_yy: float
    i_zz: float
    d_area: float
    d_i_xx: float
    d_i_yy: float
    d_i_zz: float


def section_at(spec, s):
    """Solid circular section properties at s.

    A = pi r^2, I_xx = I_yy = pi r^4 / 4, I_zz = pi r^4 / 2; derivatives by
    the chain rule through dr/ds.
    """
    r = radius_at(spec, s)
    dr = spec.radius_rate
    area = math.pi * r * r
    i_bend = math.pi * r ** 4 / 4.0
    return SectionProperties(
        area=area,
        i_xx=i_bend,
        i_yy=i_bend,
        i_zz=2.0 * i_bend,
        d_area=2.0 * math.pi * r * dr,
        d_i_xx=math.pi * r ** 3 * dr,
        d_i_yy=math.pi * r ** 3 * dr,
        d_i_zz=2.0 * math.pi * r ** 3 * dr,
    )


def stiffness_diagonals(spec, s):
    """Diagonals of K_se, K_bt and their derivatives at s.

    Returns (kse, kbt, dkse, dkbt), each shape (3,):
      kse = (G A, G A, E A)          shear-extension
      kbt = (E Ixx, E Iyy, E Izz)    bending-twist
    """
    sec = section_at(spec, s)
    e = spec.youngs_modulus
    g = spec.shear_modulus
    kse = np.array([g * sec.area, g * sec.area, e * sec.area])
    kbt = np.array([e * sec.i_xx, e * sec.i_yy, e * sec.i_zz])
    dkse = np.array([g * sec.d_area, g * sec.d_area, e * sec.d_area])
    dkbt = np.array([e * sec.d_i_xx, e * sec.d_i_yy, e * sec.d_i_zz])
    return kse, kbt, dkse, dkbt


def stiffness_at(spec, s):
    """Stiffness matrices (K_se, K_bt, dK_se/ds, dK_bt/ds) at s, each 3x3."""
    kse, kbt, dkse, dkbt = stiffness_diagonals(spec, s)
    return np.diag(kse), np.diag(kbt), np.diag(dkse), np.diag(dkbt)


@dataclass(frozen=True)
class TendonPath:
    """One tendon's routing in the body frame.

    The offset vector d(s) points from the backbone centerline to the tendon
    in the cross-section plane; its magnitude tapers linearly.
    """

    angle: float        # angular position around the backbone [rad]
    base_offset: float  # |d| at s=0 [m]
    tip_offset: float   # |d| at s=length [m]
    length: float       # backbone length, for the linear taper [m]

    def offset_magnitude(self, s):
        return self.base_offset + (self.tip_offset - self.base_offset) * s / self.length

    def offset(self, s):
        """d(s), shape (3,)."""
        o = self.offset_magnitude(s)
        return np.array([o * math.cos(self.angle), o * math.sin(self.angle), 0.0])

    def offset_rate(self, s):
        """d'(s), constant for the linear taper."""
        do = (self.tip_offset - self.base_offset) / self.length
        return np.array([do * math.cos(self.angle), do * math.sin(self.angle), 0.0])

    def offset_accel(self, s):
        """d''(s), identically zero for the linear taper."""
        return np.zeros(3)


def tendon_paths(spec):
    """All tendon paths, first tendon along +x, equally spaced in angle.

    Raises OffsetInsideBackbone if a tendon would not clear the backbone
    surface somewhere along the rod (both curves are linear in s, so the
    endpoints decide).
    """
    if (spec.tendon_base_offset <= spec.base_radius
            or spec.tendon_tip_offset <= spec.tip_radius):
        raise OffsetInsideBackbone(
            "tendon offset must exceed the backbone radius along the whole rod")
    return [
        TendonPath(
            angle=2.0 * math.pi * i / spec.tendon_count,
            base_offset=spec.tendon_base_offset,
            tip_offset=spec.tendon_tip_offset,
            length=spec.length,
        )
        for i in range(spec.tendon_count)
    ]


def taper_angle(spec):
    """Half-angle of the backbone cone, degrees."""
    return math.degrees(math.atan((spec.base_radius - spec.tip_radius) / spec.length))


def spec_from_taper(spec, alpha_deg):
    """Same robot with tip_radius chosen to realize the given taper angle."""
    tip = spec.base_radius - spec.length * math.tan(math.radians(alpha_deg))
    if tip <= 0:
        raise ValueError(f"taper angle {alpha_deg} deg leaves no tip radius")
    return dataclasses.replace(spec, tip_radius=tip)


@dataclass(frozen=True)
class DiscLayout:
    """Spacer disc geometry along the rod."""

    positions: np.ndarray   # arc length of each disc [m], last one at s=length
    radii: np.ndarray       # disc radii [m]
    thicknesses: np.ndarray  # axial thicknesses [m]
    ratio: float            # common geometric ratio between neighbours


def disc_layout(spec):
    """Disc positions/radii/thicknesses.

    Radii follow a geometric progression from disc_base_radius to
    disc_tip_radius. Spacings between consecutive discs shrink by the same
    ratio and are normalized so the last disc sits exactly at s=length; the
    first disc sits one (largest) spacing away from the base.
    """
    n = spec.disc_count
    ratio = (spec.disc_tip_radius / spec.disc_base_radius) ** (1.0 / (n - 1))
    k = np.arange(n)
    radii = spec.disc_base_radius * ratio ** k
    spacings = ratio ** k
    positions = spec.length * np.cumsum(spacings) / np.sum(spacings)
    thicknesses = spec.disc_base_thickness * ratio ** k
    return DiscLayout(positions=positions, radii=radii,
                      thicknesses=thicknesses, ratio=ratio)


# ---------------------------------------------------------------------------
# geometry manifest (fabrication hand-off document)
# ---------------------------------------------------------------------------

def _fmt(x):
    # repr round-trips float64 exactly through float()
    return repr(float(x))


def manifest_document(spec):
    """Manifest as a nested dict; every number a decimal string in SI units."""
    layout = disc_layout(spec)
    tendons = tendon_paths(spec)
    return {
        "manifest_version": MANIFEST_VERSION,
        "backbone": {
            "length_m": _fmt(spec.length),
            "base_radius_m": _fmt(spec.base_radius),
            "tip_radius_m": _fmt(spec.tip_radius),
            "taper_angle_deg": _fmt(taper_angle(spec)),
            "youngs_modulus_pa": _fmt(spec.youngs_modulus),
            "poisson_ratio": _fmt(spec.poisson_ratio),
        },
        "discs": [
            {
                "position_m": _fmt(layout.positions[i]),
                "radius_m": _fmt(layout.radii[i]),
                "thickness_m": _fmt(layout.thicknesses[i]),
            }
            for i in range(spec.disc_count)
        ],
        "tendons": [
            {
                "angle_rad": _fmt(t.angle),
                "base_offset_m": _fmt(t.base_offset),
                "tip_offset_m": _fmt(t.tip_offset),
            }
            for t in tendons
        ],
    }


def export_manifest(spec, path):
    """Write the manifest (UTF-8 YAML). Returns the document text."""
    text = yaml.safe_dump(manifest_document(spec), sort_keys=False,
                          default_flow_style=False, allow_unicode=True)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write manifest: {exc}") from exc
    return text


def import_manifest(path):
    """Rebuild the RobotSpec from a manifest file. Exact inverse of export."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read manifest: {exc}") from exc
    except yaml.YAMLError as exc:
        raise IoFailure(f"manifest is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("manifest_version") != MANIFEST_VERSION:
        raise IoFailure("unsupported or missing manifest_version")
    try:
        bb = doc["backbone"]
        discs = doc["discs"]
        tendons = doc["tendons"]
        spec = RobotSpec(
            length=float(bb["length_m"]),
            base_radius=float(bb["base_radius_m"]),
            tip_radius=float(bb["tip_radius_m"]),
            youngs_modulus=float(bb["youngs_modulus_pa"]),
            poisson_ratio=float(bb["poisson_ratio"]),
            tendon_count=len(tendons),
            tendon_base_offset=float(tendons[0]["base_offset_m"]),
            tendon_tip_offset=float(tendons[0]["tip_offset_m"]),
            disc_count=len(discs),
            disc_base_radius=float(discs[0]["radius_m"]),
            disc_tip_radius=float(discs[-1]["radius_m"]),
            disc_base_thickness=float(discs[0]["thickness_m"]),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise IoFailure(f"malformed manifest: {exc}") from exc
    stated = float(bb["taper_angle_deg"])
    if abs(stated - taper_angle(spec)) > 1e-9:
        raise IoFailure("manifest taper angle inconsistent with radii")
    return spec


# ---------------------------------------------------------------------------
# robot spec files (user input, explicit units)
# ---------------------------------------------------------------------------

_UNIT_SCALES = {
    # units tag -> (length scale to m, modulus scale to Pa)
    "m_Pa": (1.0, 1.0),
    "cm_MPa": (0.01, 1e6),
}

_LENGTH_FIELDS = (
    "length", "base_radius", "tip_radius",
    "tendon_base_offset", "tendon_tip_offset",
    "disc_base_radius", "disc_tip_radius", "disc_base_thickness",
)


def load_spec(path):
    """Load a robot spec file (YAML key-value, explicit `units:` field)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise IoFailure(f"spec not found or unreadable: {exc}") from exc
    except yaml.YAMLError as exc:
        raise IoFailure(f"spec is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise IoFailure("spec file must be a mapping of fields")
    units = doc.pop("units", None)
    if units not in _UNIT_SCALES:
        raise IoFailure(
            f"spec must declare units as one of {sorted(_UNIT_SCALES)}")
    lscale, escale = _UNIT_SCALES[units]
    known = {f.name for f in dataclasses.fields(RobotSpec)}
    unknown = set(doc) - known
    if unknown:
        raise IoFailure(f"unknown spec fields: {sorted(unknown)}")
    kwargs = {}
    try:
        for key, value in doc.items():
            if key in _LENGTH_FIELDS:
                kwargs[key] = float(value) * lscale
            elif key == "youngs_modulus":
                kwargs[key] = float(value) * escale
            elif key in ("tendon_count", "disc_count"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return RobotSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise IoFailure(f"bad spec value: {exc}") from exc


def save_spec(spec, path):
    """Write a spec file in SI units (units: m_Pa)."""
    doc = {"units": "m_Pa"}
    for f in dataclasses.fields(RobotSpec):
        value = getattr(spec, f.name)
        doc[f.name] = int(value) if f.name in ("tendon_count", "disc_count") else float(value)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(doc, fh, sort_keys=False)
    except OSError as exc:
        raise IoFailure(f"cannot write spec: {exc}") from exc
