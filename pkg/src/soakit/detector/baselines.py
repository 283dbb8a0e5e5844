"""Handwritten AoS and SoA pipelines, the comparison targets.

These are written the way application code without the library would be: a
numpy structured array with a nested calibration block for AoS, plain
per-field arrays for SoA. They share the reconstruction kernel and the
calibration arithmetic with the library path, and they dump through the
same text format, so any divergence is a storage bug, not a physics one.
"""

from typing import Mapping

import numpy as np

from ..collection import Collection, _format_value
from ..schema import MAIN_TAG, ROLE_ELEMENT, StoragePlan
from .reconstruct import reconstruct_arrays
from .schemas import PARTICLE_PLAN, SENSOR_PLAN

SENSOR_AOS_DTYPE = np.dtype(
    [
        ("type", "u1"),
        ("counts", "<u8"),
        ("energy", "<f4"),
        (
            "calibration_data",
            [
                ("noisy", "?"),
                ("parameter_A", "<f4"),
                ("parameter_B", "<f4"),
                ("noise_A", "<f4"),
                ("noise_B", "<f4"),
            ],
        ),
    ]
)

PARTICLE_AOS_DTYPE = np.dtype(
    [
        ("energy", "<f4"),
        ("x", "<f4"),
        ("y", "<f4"),
        ("origin", "<u8"),
        ("x_variance", "<f4"),
        ("y_variance", "<f4"),
        ("significance", "<f4", (4,)),
        ("E_contribution", "<f4", (4,)),
        ("noisy_count", "u1", (4,)),
    ]
)


def _dump_external(
    name: str,
    plan: StoragePlan,
    n: int,
    main_cols: Mapping[str, np.ndarray],
    jagged_cols: Mapping[str, list] | None = None,
) -> str:
    # must produce byte-identical text to Collection.dump for equal content
    lines = [f"collection {name} records={n}"]
    jagged_cols = jagged_cols or {}
    for i in range(n):
        parts = []
        for leaf in plan.leaves:
            if leaf.role != ROLE_ELEMENT:
                continue
            vt = leaf.value_type
            if leaf.size_tag == MAIN_TAG:
                col = main_cols[leaf.dotted]
                if leaf.extent_multiplier == 1:
                    s = _format_value(col[i], vt)
                else:
                    s = "[" + ",".join(_format_value(col[i, k], vt) for k in range(leaf.extent_multiplier)) + "]"
            else:
                seg = jagged_cols[leaf.dotted][i]
                s = "[" + ",".join(_format_value(v, vt) for v in seg) + "]"
            parts.append(f"{leaf.dotted}={s}")
        lines.append(f"record {i}: " + " ".join(parts))
    return "\n".join(lines) + "\n"


def dump_particles_external(main_cols: Mapping[str, np.ndarray], sensors: list, n: int) -> str:
    return _dump_external("Particle", PARTICLE_PLAN, n, main_cols, {"sensors.value": sensors})


def dump_sensors_external(main_cols: Mapping[str, np.ndarray], n: int) -> str:
    return _dump_external("Sensor", SENSOR_PLAN, n, main_cols)


def particle_struct_from_cols(main_cols: Mapping[str, np.ndarray], n: int) -> np.ndarray:
    out = np.empty(n, PARTICLE_AOS_DTYPE)
    out["energy"] = main_cols["energy"]
    out["x"] = main_cols["x"]
    out["y"] = main_cols["y"]
    out["origin"] = main_cols["origin"]
    out["x_variance"] = main_cols["x_variance"]
    out["y_variance"] = main_cols["y_variance"]
    out["significance"] = main_cols["significance.value"]
    out["E_contribution"] = main_cols["E_contribution.value"]
    out["noisy_count"] = main_cols["noisy_count.value"]
    return out


def export_particles_from_collection(coll: Collection) -> tuple[np.ndarray, list]:
    """External AoS form of a particle collection: struct array + index lists."""
    cols = {
        "energy": coll.column("energy").read(),
        "x": coll.column("x").read(),
        "y": coll.column("y").read(),
        "origin": coll.column("origin").read(),
        "x_variance": coll.column("x_variance").read(),
        "y_variance": coll.column("y_variance").read(),
        "significance.value": coll.column("significance").read().T,
        "E_contribution.value": coll.column("E_contribution").read().T,
        "noisy_count.value": coll.column("noisy_count").read().T,
    }
    pool = np.array(coll.column("sensors").read())
    pv = coll.prefix_sums("sensors")
    sensors = np.split(pool, pv[1:-1].astype(np.int64)) if len(coll) else []
    return particle_struct_from_cols(cols, len(coll)), sensors


class HandwrittenAosPipeline:
    """Array-of-structures baseline; the verification reference."""

    name = "handwritten-aos"

    def __init__(self) -> None:
        self.sensors: np.ndarray | None = None
        self.particles = np.empty(0, PARTICLE_AOS_DTYPE)
        self.particle_sensors: list = []

    def fill(self, event) -> None:
        n = event.spec.n_sensors
        if self.sensors is None or self.sensors.size != n:
            self.sensors = np.empty(n, SENSOR_AOS_DTYPE)
        s = self.sensors
        s["type"] = event.type
        s["counts"] = event.counts
        s["energy"] = 0
        cal = s["calibration_data"]
        cal["noisy"] = event.noisy
        cal["parameter_A"] = event.parameter_A
        cal["parameter_B"] = event.parameter_B
        cal["noise_A"] = event.noise_A
        cal["noise_B"] = event.noise_B

    def calibrate(self) -> None:
        s = self.sensors
        cal = s["calibration_data"]
        s["energy"] = cal["parameter_A"] * s["counts"].astype(np.float32) + cal["parameter_B"]

    def noise(self) -> np.ndarray:
        s = self.sensors
        cal = s["calibration_data"]
        e = np.maximum(s["energy"], np.float32(0.0))
        n = cal["noise_A"] * np.sqrt(e) + cal["noise_B"]
        return np.where(cal["noisy"], n * np.float32(2.0), n)

    def reconstruct(self, width: int, height: int) -> None:
        s = self.sensors
        p = reconstruct_arrays(s["energy"], self.noise(), s["type"], s["calibration_data"]["noisy"], width, height)
        out = np.empty(len(p), PARTICLE_AOS_DTYPE)
        out["energy"] = p.energy
        out["x"] = p.x
        out["y"] = p.y
        out["origin"] = p.origin
        out["x_variance"] = p.x_variance
        out["y_variance"] = p.y_variance
        out["significance"] = p.significance
        out["E_contribution"] = p.E_contribution
        out["noisy_count"] = p.noisy_count
        self.particles = out
        self.particle_sensors = p.sensors

    def export(self) -> tuple[np.ndarray, list]:
        return self.particles.copy(), [a.copy() for a in self.particle_sensors]

    def _particle_cols(self) -> Mapping[str, np.ndarray]:
        p = self.particles
        return {
            "energy": p["energy"],
            "x": p["x"],
            "y": p["y"],
            "origin": p["origin"],
            "x_variance": p["x_variance"],
            "y_variance": p["y_variance"],
            "significance.value": p["significance"],
            "E_contribution.value": p["E_contribution"],
            "noisy_count.value": p["noisy_count"],
        }

    def particles_dump(self) -> str:
        return dump_particles_external(self._particle_cols(), self.particle_sensors, self.particles.size)

    def sensors_dump(self) -> str:
        s = self.sensors
        cal = s["calibration_data"]
        cols = {
            "type": s["type"],
            "counts": s["counts"],
            "energy": s["energy"],
            "calibration_data.noisy": cal["noisy"],
            "calibration_data.parameter_A": cal["parameter_A"],
            "calibration_data.parameter_B": cal["parameter_B"],
            "calibration_data.noise_A": cal["noise_A"],
            "calibration_data.noise_B": cal["noise_B"],
        }
        return dump_sensors_external(cols, s.size)


class HandwrittenSoaPipeline:
    """Plain per-field arrays, no library involved."""

    name = "handwritten-soa"

    _SENSOR_FIELDS = (
        ("type", np.uint8),
        ("counts", np.uint64),
        ("energy", np.float32),
        ("noisy", np.bool_),
        ("parameter_A", np.float32),
        ("parameter_B", np.float32),
        ("noise_A", np.float32),
        ("noise_B", np.float32),
    )

    def __init__(self) -> None:
        self.s: dict[str, np.ndarray] = {}
        self.p: dict[str, np.ndarray] = {}
        self.particle_sensors: list = []

    def fill(self, event) -> None:
        n = event.spec.n_sensors
        if not self.s or self.s["type"].size != n:
            self.s = {name: np.empty(n, dt) for name, dt in self._SENSOR_FIELDS}
        s = self.s
        s["type"][:] = event.type
        s["counts"][:] = event.counts
        s["energy"][:] = 0
        s["noisy"][:] = event.noisy
        s["parameter_A"][:] = event.parameter_A
        s["parameter_B"][:] = event.parameter_B
        s["noise_A"][:] = event.noise_A
        s["noise_B"][:] = event.noise_B

    def calibrate(self) -> None:
        s = self.s
        s["energy"][:] = s["parameter_A"] * s["counts"].astype(np.float32) + s["parameter_B"]

    def noise(self) -> np.ndarray:
        s = self.s
        e = np.maximum(s["energy"], np.float32(0.0))
        n = s["noise_A"] * np.sqrt(e) + s["noise_B"]
        return np.where(s["noisy"], n * np.float32(2.0), n)

    def reconstruct(self, width: int, height: int) -> None:
        s = self.s
        p = reconstruct_arrays(s["energy"], self.noise(), s["type"], s["noisy"], width, height)
        self.p = {
            "energy": p.energy,
            "x": p.x,
            "y": p.y,
            "origin": p.origin,
            "x_variance": p.x_variance,
            "y_variance": p.y_variance,
            "significance.value": p.significance,
            "E_contribution.value": p.E_contribution,
            "noisy_count.value": p.noisy_count,
        }
        self.particle_sensors = p.sensors

    def export(self) -> tuple[np.ndarray, list]:
        return (
            particle_struct_from_cols(self.p, self.p["energy"].size),
            [a.copy() for a in self.particle_sensors],
        )

    def particles_dump(self) -> str:
        return dump_particles_external(self.p, self.particle_sensors, self.p["energy"].size)

    def sensors_dump(self) -> str:
        s = self.s
        cols = {
            "type": s["type"],
            "counts": s["counts"],
            "energy": s["energy"],
            "calibration_data.noisy": s["noisy"],
            "calibration_data.parameter_A": s["parameter_A"],
            "calibration_data.parameter_B": s["parameter_B"],
            "calibration_data.noise_A": s["noise_A"],
            "calibration_data.noise_B": s["noise_B"],
        }
        return dump_sensors_external(cols, s["type"].size)
