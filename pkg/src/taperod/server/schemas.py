"""Request/response models for the HTTP service.

These mirror the library's domain types field-for-field so the service is a
thin wrapper: construct the domain object, call the same entry point the
CLI uses, serialize the result.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..geometry import RobotSpec

Vec3 = List[float]


class SpecModel(BaseModel):
    """Robot description in SI units (m, Pa)."""

    model_config = ConfigDict(extra="forbid")

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
    disc_base_thickness: float = 0.004

    def to_spec(self):
        return RobotSpec(**self.model_dump())

    @classmethod
    def from_spec(cls, spec):
        return cls(length=spec.length, base_radius=spec.base_radius,
                   tip_radius=spec.tip_radius,
                   youngs_modulus=spec.youngs_modulus,
                   poisson_ratio=spec.poisson_ratio,
                   tendon_count=spec.tendon_count,
                   tendon_base_offset=spec.tendon_base_offset,
                   tendon_tip_offset=spec.tendon_tip_offset,
                   disc_count=spec.disc_count,
                   disc_base_radius=spec.disc_base_radius,
                   disc_tip_radius=spec.disc_tip_radius,
                   disc_base_thickness=spec.disc_base_thickness)


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spec: SpecModel
    tensions: List[float]
    tip_force: Optional[Vec3] = None
    tip_moment: Optional[Vec3] = None
    steps: int = 200


class SolutionModel(BaseModel):
    converged: bool
    residual_norm: float
    iterations: int
    tip_position: Vec3
    tip_quaternion: List[float]
    bending_angle_rad: float
    s: List[float]
    p: List[Vec3]
    q: List[List[float]]
    v: List[Vec3]
    u: List[Vec3]

    @classmethod
    def from_solution(cls, sol):
        return cls(converged=bool(sol.converged),
                   residual_norm=float(sol.residual_norm),
                   iterations=int(sol.iterations),
                   tip_position=sol.tip_position.tolist(),
                   tip_quaternion=sol.tip_quaternion.tolist(),
                   bending_angle_rad=sol.bending_angle(),
                   s=sol.s.tolist(), p=sol.p.tolist(), q=sol.q.tolist(),
                   v=sol.v.tolist(), u=sol.u.tolist())


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spec: SpecModel
    alphas_deg: List[float]
    tensions: List[float]
    steps: int = 200


class SweepCellModel(BaseModel):
    alpha_deg: float
    tension_n: float
    converged: bool
    tip_position: Optional[Vec3] = None
    bending_angle_rad: Optional[float] = None


class SweepResponse(BaseModel):
    cells: List[SweepCellModel]


class ProfileModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    s: List[float]
    u: List[Vec3]

    def to_profile(self):
        from ..design import CurvatureProfile
        return CurvatureProfile(s=np.asarray(self.s, dtype=float),
                                u=np.asarray(self.u, dtype=float))


class DesignRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spec: SpecModel
    tension: float
    plant_alpha: Optional[float] = None
    target: Optional[ProfileModel] = None
    noise: float = 0.0
    seed: int = 42
    bounds: List[float] = [0.0, 2.0]
    steps: int = 200


class DesignResponse(BaseModel):
    alpha_opt_deg: float
    cost: float
    curve_alphas: List[float]
    # infeasible/non-converging scan angles carry null (JSON has no inf)
    curve_costs: List[Optional[float]]


class DatasetModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tensions: List[List[float]]       # (samples, tendons) [N]
    markers: List[List[Vec3]]         # (samples, discs, 3) [m]
    disc_s: Optional[List[float]] = None   # defaults to the robot's disc layout
    times: Optional[List[float]] = None


class CalibrateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spec: SpecModel
    dataset: DatasetModel
    e_min_mpa: float = 50.0
    e_max_mpa: float = 200.0
    e_step_mpa: float = 1.0
    split: float = 0.7
    bin_width: float = 1.0
    seed: int = 42
    steps: int = 200


class TransformModel(BaseModel):
    rotation: List[Vec3]
    translation: Vec3


class BiasModel(BaseModel):
    disc_s: List[float]
    delta: List[Vec3]


class CalibrateResponse(BaseModel):
    youngs_mpa: float
    e_mpa: List[float]
    costs: List[float]
    dropped: int
    total: int
    transform: TransformModel
    bias: BiasModel
    test_errors: List[List[float]]    # rows of (s/l, tension, mean, std)


class GeometryRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spec: SpecModel


class GeometryResponse(BaseModel):
    manifest: dict
