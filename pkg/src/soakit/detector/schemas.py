"""Sensor and particle schemas plus their behavior bundle and external bindings."""

from dataclasses import dataclass, field

import numpy as np

from .. import behaviors as bh
from .. import schema as sc
from ..transfer import ExternalBinding

NUM_SENSOR_TYPES = 4
SENSOR_TYPE = sc.enum_type("SensorType", NUM_SENSOR_TYPES)


def _calibrate_object(view) -> None:
    cal = view.calibration_data
    view.energy = np.float32(cal.parameter_A) * np.float32(view.counts) + np.float32(cal.parameter_B)


def _noise_object(view) -> np.float32:
    cal = view.calibration_data
    e = np.maximum(np.float32(view.energy), np.float32(0.0))
    n = np.float32(cal.noise_A) * np.sqrt(e) + np.float32(cal.noise_B)
    if cal.noisy:
        n = n * np.float32(2.0)
    return n


def calibrate_collection(coll) -> None:
    energy = coll.column("energy").np
    a = coll.column("calibration_data.parameter_A").read()
    b = coll.column("calibration_data.parameter_B").read()
    energy[:] = a * coll.column("counts").read().astype(np.float32) + b


def noise_for_collection(coll) -> np.ndarray:
    e = np.maximum(coll.column("energy").read(), np.float32(0.0))
    n = coll.column("calibration_data.noise_A").read() * np.sqrt(e) + coll.column(
        "calibration_data.noise_B"
    ).read()
    return np.where(coll.column("calibration_data.noisy").read(), n * np.float32(2.0), n)


if not bh.is_registered("sensor_funcs"):
    bh.register_bundle(
        "sensor_funcs",
        [
            bh.BehaviorFunction("calibrate_energy", bh.TARGET_OBJECT, _calibrate_object),
            bh.BehaviorFunction("calibrate_energy", bh.TARGET_COLLECTION, calibrate_collection),
            bh.BehaviorFunction("get_noise", bh.TARGET_OBJECT, _noise_object),
            bh.BehaviorFunction("get_noise", bh.TARGET_COLLECTION, noise_for_collection),
        ],
    )


SENSOR_SCHEMA = sc.Schema(
    "Sensor",
    (
        sc.declare_per_item("type", SENSOR_TYPE),
        sc.declare_per_item("counts", sc.U64),
        sc.declare_per_item("energy", sc.F32),
        sc.declare_subgroup(
            "calibration_data",
            [
                sc.declare_per_item("noisy", sc.BOOL),
                sc.declare_per_item("parameter_A", sc.F32),
                sc.declare_per_item("parameter_B", sc.F32),
                sc.declare_per_item("noise_A", sc.F32),
                sc.declare_per_item("noise_B", sc.F32),
            ],
        ),
        sc.declare_behavior("funcs", "sensor_funcs"),
    ),
)

PARTICLE_SCHEMA = sc.Schema(
    "Particle",
    (
        sc.declare_per_item("energy", sc.F32),
        sc.declare_per_item("x", sc.F32),
        sc.declare_per_item("y", sc.F32),
        sc.declare_per_item("origin", sc.U64),
        sc.declare_jagged("sensors", sc.I32, sc.U64),
        sc.declare_per_item("x_variance", sc.F32),
        sc.declare_per_item("y_variance", sc.F32),
        sc.declare_array("significance", NUM_SENSOR_TYPES, sc.F32),
        sc.declare_array("E_contribution", NUM_SENSOR_TYPES, sc.F32),
        sc.declare_array("noisy_count", NUM_SENSOR_TYPES, sc.U8),
    ),
)

SENSOR_PLAN = sc.flatten(SENSOR_SCHEMA)
PARTICLE_PLAN = sc.flatten(PARTICLE_SCHEMA)


@dataclass
class SensorRecord:
    """Plain-object sensor, the shape a handwritten codebase would pass around."""

    type: int
    counts: int
    energy: float
    noisy: bool
    parameter_A: float
    parameter_B: float
    noise_A: float
    noise_B: float


@dataclass
class ParticleRecord:
    energy: float
    x: float
    y: float
    origin: int
    sensors: list = field(default_factory=list)
    x_variance: float = 0.0
    y_variance: float = 0.0
    significance: list = field(default_factory=lambda: [0.0] * NUM_SENSOR_TYPES)
    E_contribution: list = field(default_factory=lambda: [0.0] * NUM_SENSOR_TYPES)
    noisy_count: list = field(default_factory=lambda: [0] * NUM_SENSOR_TYPES)


SENSOR_BINDING = ExternalBinding(
    extractors={
        "type": lambda r: r.type,
        "counts": lambda r: r.counts,
        "energy": lambda r: r.energy,
        "calibration_data.noisy": lambda r: r.noisy,
        "calibration_data.parameter_A": lambda r: r.parameter_A,
        "calibration_data.parameter_B": lambda r: r.parameter_B,
        "calibration_data.noise_A": lambda r: r.noise_A,
        "calibration_data.noise_B": lambda r: r.noise_B,
    },
    factory=lambda row: SensorRecord(
        row["type"],
        row["counts"],
        row["energy"],
        row["calibration_data.noisy"],
        row["calibration_data.parameter_A"],
        row["calibration_data.parameter_B"],
        row["calibration_data.noise_A"],
        row["calibration_data.noise_B"],
    ),
)

PARTICLE_BINDING = ExternalBinding(
    extractors={
        "energy": lambda r: r.energy,
        "x": lambda r: r.x,
        "y": lambda r: r.y,
        "origin": lambda r: r.origin,
        "sensors.value": lambda r: r.sensors,
        "x_variance": lambda r: r.x_variance,
        "y_variance": lambda r: r.y_variance,
        "significance.value": lambda r: r.significance,
        "E_contribution.value": lambda r: r.E_contribution,
        "noisy_count.value": lambda r: r.noisy_count,
    },
    factory=lambda row: ParticleRecord(
        row["energy"],
        row["x"],
        row["y"],
        row["origin"],
        row["sensors.value"],
        row["x_variance"],
        row["y_variance"],
        row["significance.value"],
        row["E_contribution.value"],
        row["noisy_count.value"],
    ),
)


def make_sensor_records(event) -> list:
    """Materialize an event as plain SensorRecord objects, energy uncalibrated."""
    return [
        SensorRecord(
            int(event.type[i]),
            int(event.counts[i]),
            0.0,
            bool(event.noisy[i]),
            float(event.parameter_A[i]),
            float(event.parameter_B[i]),
            float(event.noise_A[i]),
            float(event.noise_B[i]),
        )
        for i in range(event.type.size)
    ]
