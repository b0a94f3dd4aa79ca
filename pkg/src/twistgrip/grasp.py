"""Three-phase grasp state machine and explainable feasibility rules.

A grasp proceeds through Approaching, Lifting, and Holding. During
Lifting/Holding the base rotates at a fixed speed and the skin's coverage of
the object grows linearly with rotation angle until it saturates at the full
close angle. Feasibility is a deterministic rule cascade over object geometry
and environment (first matching rule wins), each failure carrying a reason
code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import DomainError
from .pressure import G_DEFAULT, FrictionModel, SphericalObject, line_pressure_closed_form

INCH = 0.0254
APERTURE_BY_NAME = {"2in": 2 * INCH, "4in": 4 * INCH, "8in": 8 * INCH}

TRAPPED_AIR_THRESHOLD = 0.6
TRAPPED_AIR_THRESHOLD_AGITATED = 0.9
ELONGATED_LENGTH_RATIO = 2.5
TRACE_STEPS = 16


class Phase(str, Enum):
    APPROACHING = "Approaching"
    LIFTING = "Lifting"
    HOLDING = "Holding"


class ShapeClass(str, Enum):
    SPHERE = "sphere"
    CYLINDER = "cylinder"
    FLAT = "flat"
    ELONGATED = "elongated"
    GRANULAR = "granular"
    DEFORMABLE = "deformable"


class Verdict(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"


class Reason(str, Enum):
    OK = "OK"
    OVERSIZED = "Oversized"
    FLAT_OBJECT = "FlatObject"
    ELONGATED_OBJECT = "ElongatedObject"
    TRAPPED_AIR = "TrappedAir"
    OUTSIDE_PETAL_REGION = "OutsidePetalRegion"


@dataclass(frozen=True)
class GripperGeometry:
    """Aperture diameter (m), saturation rotation angle (rad), base speed (rad/s)."""

    aperture_diameter: float
    full_close_angle: float = 2.0 * math.pi
    rotation_speed: float = math.pi / 2.0

    def __post_init__(self):
        for name in ("aperture_diameter", "full_close_angle", "rotation_speed"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")

    @classmethod
    def from_name(cls, name, **kwargs):
        """Build from an inch-version preset: '2in', '4in', or '8in'."""
        try:
            aperture = APERTURE_BY_NAME[name]
        except KeyError:
            raise DomainError(
                f"unknown gripper preset {name!r}; choose from {sorted(APERTURE_BY_NAME)}"
            ) from None
        return cls(aperture_diameter=aperture, **kwargs)

    def coverage(self, angle):
        """Fraction of the object embraced at rotation angle: linear then saturating."""
        return min(1.0, max(0.0, angle / self.full_close_angle))


@dataclass(frozen=True)
class PhaseState:
    phase: Phase = Phase.APPROACHING
    angle: float = 0.0


@dataclass(frozen=True)
class ObjectDescriptor:
    shape_class: ShapeClass
    height: float
    diameter: float
    mass: float
    label: str = ""

    def __post_init__(self):
        if self.height <= 0 or self.diameter <= 0:
            raise DomainError("object dimensions must be positive")
        if self.mass < 0:
            raise DomainError("object mass must be >= 0")


@dataclass(frozen=True)
class GraspScenario:
    gripper: GripperGeometry
    obj: ObjectDescriptor
    submersion_fraction: float = 0.0
    air_support_kpa: float = 0.0
    lift_height: float = 0.0
    hold_height: float = 0.0
    inside_petal_region: bool = True
    agitated_approach: bool = False  # approach combined with rotation to squeeze out air

    def __post_init__(self):
        if not 0.0 <= self.submersion_fraction <= 1.0:
            raise DomainError("submersion_fraction must lie in [0, 1]")
        if self.lift_height < 0 or self.hold_height < 0:
            raise DomainError("heights must be >= 0")


@dataclass(frozen=True)
class GraspOutcome:
    verdict: Verdict
    reason_code: Reason
    phase_trace: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.verdict is Verdict.INFEASIBLE and self.reason_code is Reason.OK:
            raise DomainError("infeasible outcome must carry a failure reason")


def step_phase(state, dt, geom, object_in_region=True):
    """Advance the grasp state machine by dt seconds.

    Approaching hands over to Lifting once the object is inside the petal
    region; the angle then advances by rotation_speed * dt and the phase
    becomes Holding when coverage saturates. Additive: two steps of dt equal
    one step of 2*dt.
    """
    if dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    phase = state.phase
    angle = state.angle
    if phase is Phase.APPROACHING:
        if not object_in_region:
            return PhaseState(Phase.APPROACHING, angle)
        phase = Phase.LIFTING
    angle += geom.rotation_speed * dt
    if geom.coverage(angle) >= 1.0:
        phase = Phase.HOLDING
    return PhaseState(phase, angle)


def simulate_phases(geom, n_steps=TRACE_STEPS):
    """Run the machine from rest to Holding; returns [(phase, angle, coverage)]."""
    dt = geom.full_close_angle / (geom.rotation_speed * n_steps)
    state = PhaseState()
    trace = [(state.phase.value, state.angle, geom.coverage(state.angle))]
    while state.phase is not Phase.HOLDING:
        state = step_phase(state, dt, geom)
        trace.append((state.phase.value, state.angle, geom.coverage(state.angle)))
    return trace


def grasp_feasibility(
    scenario,
    trapped_air_threshold=TRAPPED_AIR_THRESHOLD,
    elongated_length_ratio=ELONGATED_LENGTH_RATIO,
):
    """Deterministic feasibility verdict with reason code and phase trace.

    Rule cascade, first match wins: object outside the petal region; diameter
    at or above the aperture; flat objects; elongated objects beyond the
    length ratio; submersion above the trapped-air threshold. Anything else
    is feasible. Mass never changes the verdict.
    """
    obj = scenario.obj
    aperture = scenario.gripper.aperture_diameter

    def fail(reason):
        trace = ((Phase.APPROACHING.value, 0.0, 0.0),)
        return GraspOutcome(Verdict.INFEASIBLE, reason, trace)

    if not scenario.inside_petal_region:
        return fail(Reason.OUTSIDE_PETAL_REGION)
    if obj.diameter >= aperture:
        return fail(Reason.OVERSIZED)
    if obj.shape_class is ShapeClass.FLAT:
        return fail(Reason.FLAT_OBJECT)
    if obj.shape_class is ShapeClass.ELONGATED and obj.height > elongated_length_ratio * aperture:
        return fail(Reason.ELONGATED_OBJECT)
    threshold = trapped_air_threshold
    if scenario.agitated_approach:
        threshold = max(threshold, TRAPPED_AIR_THRESHOLD_AGITATED)
    if scenario.submersion_fraction >= threshold:
        return fail(Reason.TRAPPED_AIR)
    trace = tuple(simulate_phases(scenario.gripper))
    return GraspOutcome(Verdict.FEASIBLE, Reason.OK, trace)


def holding_pressure(scenario, fric, g=G_DEFAULT):
    """Line pressure on the object during Holding, N/m.

    The object is approximated as a sphere of its nominal diameter; gentleness
    metric for scenario reports.
    """
    sphere = SphericalObject(mass=scenario.obj.mass, radius=scenario.obj.diameter / 2.0)
    return line_pressure_closed_form(sphere, fric, g=g)


@dataclass(frozen=True)
class ValidationRow:
    label: str
    predicted: Verdict
    expected: Verdict
    success_rate: float

    @property
    def agrees(self):
        return self.predicted is self.expected


@dataclass(frozen=True)
class ValidationReport:
    dataset_id: str
    rows: tuple

    @property
    def n_agree(self):
        return sum(1 for row in self.rows if row.agrees)

    @property
    def n_total(self):
        return len(self.rows)

    @property
    def all_agree(self):
        return self.n_agree == self.n_total


def _expected_verdict(success_rate):
    return Verdict.FEASIBLE if success_rate >= 0.5 else Verdict.INFEASIBLE


def validate_against_reference(dataset, gripper=None):
    """Replay a bundled reference table through grasp_feasibility.

    dataset is a ReferenceDataset (or a dataset id string) for the object
    demonstration table or the submersion table. Agreement compares the
    predicted verdict against the recorded success rate (>= 50% means the
    trials mostly succeeded, so Feasible is expected).
    """
    from . import expio

    if isinstance(dataset, str):
        dataset = expio.load_reference_dataset(dataset)
    if gripper is None:
        gripper = GripperGeometry.from_name("4in")

    rows = []
    if dataset.id == "table2_objects":
        for record in dataset.rows:
            obj = ObjectDescriptor(
                shape_class=ShapeClass(record["shape_class"]),
                height=record["height_mm"] / 1000.0,
                diameter=record["diameter_mm"] / 1000.0,
                mass=record["mass_g"] / 1000.0,
                label=record["name"],
            )
            outcome = grasp_feasibility(GraspScenario(gripper=gripper, obj=obj))
            rows.append(ValidationRow(
                label=record["name"],
                predicted=outcome.verdict,
                expected=_expected_verdict(record["success_rate"]),
                success_rate=record["success_rate"],
            ))
    elif dataset.id == "table3_submersion":
        egg = dataset.meta["object"]
        obj = ObjectDescriptor(
            shape_class=ShapeClass(egg["shape_class"]),
            height=egg["height_mm"] / 1000.0,
            diameter=egg["diameter_mm"] / 1000.0,
            mass=egg["mass_g"] / 1000.0,
            label=egg["name"],
        )
        for record in dataset.rows:
            scenario = GraspScenario(
                gripper=gripper, obj=obj,
                submersion_fraction=record["submersion_fraction"],
            )
            outcome = grasp_feasibility(scenario)
            rows.append(ValidationRow(
                label=f"submersion {record['submersion_fraction']:.0%}",
                predicted=outcome.verdict,
                expected=_expected_verdict(record["success_rate"]),
                success_rate=record["success_rate"],
            ))
    else:
        raise DomainError(f"dataset {dataset.id!r} has no feasibility interpretation")
    return ValidationReport(dataset_id=dataset.id, rows=tuple(rows))
