"""Particle reconstruction, written once against plain arrays.

Every configuration (library collections in any layout, handwritten AoS,
handwritten SoA) extracts the same four sensor columns and runs this one
kernel, so cross-configuration equality is a property of the storage paths,
not of duplicated physics.

Determinism contract, fixed here because results must match bit-for-bit
across configurations:
  - seed candidates have energy/noise > 5 (f32 division), processed in
    descending energy with ties broken by ascending flat index;
  - a seed already consumed by an earlier particle is skipped;
  - contributors are the unconsumed sensors with ratio > 2 inside the
    grid-clipped 5x5 window, gathered and summed in ascending flat order;
  - per-type energy sums accumulate in float64 and round to float32 once;
    the particle energy is the float64 sum of those four float32 values,
    rounded once, so it equals the sum of E_contribution exactly;
  - centroids and variances are energy-weighted float64 two-pass values.
"""

from dataclasses import dataclass

import numpy as np

from ..collection import Collection
from ..layouts import PER_FIELD
from .schemas import NUM_SENSOR_TYPES, PARTICLE_SCHEMA, calibrate_collection, noise_for_collection

SEED_THRESHOLD = np.float32(5.0)
CONTRIBUTOR_THRESHOLD = np.float32(2.0)
WINDOW_RADIUS = 2


@dataclass
class ParticleArrays:
    """Kernel output: one row per particle, plus per-particle sensor lists."""

    energy: np.ndarray
    x: np.ndarray
    y: np.ndarray
    origin: np.ndarray
    x_variance: np.ndarray
    y_variance: np.ndarray
    significance: np.ndarray  # (n, 4) f32
    E_contribution: np.ndarray  # (n, 4) f32
    noisy_count: np.ndarray  # (n, 4) u8
    sensors: list  # list of u64 arrays, ascending flat indices

    def __len__(self) -> int:
        return self.energy.size


def reconstruct_arrays(
    energy: np.ndarray,
    noise: np.ndarray,
    sensor_type: np.ndarray,
    noisy: np.ndarray,
    width: int,
    height: int,
) -> ParticleArrays:
    n = width * height
    energy = np.asarray(energy, dtype=np.float32)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = energy / np.asarray(noise, dtype=np.float32)

    candidates = np.flatnonzero(ratio > SEED_THRESHOLD)
    order = np.argsort(-energy[candidates], kind="stable")
    seeds = candidates[order]

    consumed = np.zeros(n, dtype=bool)
    out_e, out_x, out_y, out_org = [], [], [], []
    out_vx, out_vy = [], []
    out_sig, out_ec, out_nc = [], [], []
    out_sensors = []

    for s in seeds:
        s = int(s)
        if consumed[s]:
            continue
        sy, sx = divmod(s, width)
        contrib = []
        for y in range(max(0, sy - WINDOW_RADIUS), min(height - 1, sy + WINDOW_RADIUS) + 1):
            base = y * width
            for x in range(max(0, sx - WINDOW_RADIUS), min(width - 1, sx + WINDOW_RADIUS) + 1):
                f = base + x
                if not consumed[f] and ratio[f] > CONTRIBUTOR_THRESHOLD:
                    consumed[f] = True
                    contrib.append(f)

        e64 = [0.0] * NUM_SENSOR_TYPES
        sig64 = [0.0] * NUM_SENSOR_TYPES
        ncount = [0] * NUM_SENSOR_TYPES
        sw = swx = swy = 0.0
        for f in contrib:
            e = float(energy[f])
            t = int(sensor_type[f])
            e64[t] += e
            sig64[t] += float(ratio[f])
            if noisy[f]:
                ncount[t] += 1
            sw += e
            swx += e * (f % width)
            swy += e * (f // width)
        xbar = swx / sw
        ybar = swy / sw
        vx = vy = 0.0
        for f in contrib:
            e = float(energy[f])
            vx += e * (f % width - xbar) ** 2
            vy += e * (f // width - ybar) ** 2

        e32 = [np.float32(v) for v in e64]
        out_e.append(np.float32(float(e32[0]) + float(e32[1]) + float(e32[2]) + float(e32[3])))
        out_x.append(np.float32(xbar))
        out_y.append(np.float32(ybar))
        out_org.append(s)
        out_vx.append(np.float32(vx / sw))
        out_vy.append(np.float32(vy / sw))
        out_sig.append([np.float32(v) for v in sig64])
        out_ec.append(e32)
        out_nc.append(ncount)
        out_sensors.append(np.array(contrib, dtype=np.uint64))

    count = len(out_e)
    return ParticleArrays(
        energy=np.array(out_e, dtype=np.float32),
        x=np.array(out_x, dtype=np.float32),
        y=np.array(out_y, dtype=np.float32),
        origin=np.array(out_org, dtype=np.uint64),
        x_variance=np.array(out_vx, dtype=np.float32),
        y_variance=np.array(out_vy, dtype=np.float32),
        significance=np.array(out_sig, dtype=np.float32).reshape(count, NUM_SENSOR_TYPES),
        E_contribution=np.array(out_ec, dtype=np.float32).reshape(count, NUM_SENSOR_TYPES),
        noisy_count=np.array(out_nc, dtype=np.uint8).reshape(count, NUM_SENSOR_TYPES),
        sensors=out_sensors,
    )


# -- generic pipeline over collections -------------------------------------------


def fill_sensor_collection(coll: Collection, event) -> None:
    """Load one event into a sensor collection, reusing its current size."""
    n = event.spec.n_sensors
    if coll.size() != n:
        coll.clear()
        coll.resize(n)
    coll.column("type").np[:] = event.type
    coll.column("counts").np[:] = event.counts
    coll.column("calibration_data.noisy").np[:] = event.noisy
    coll.column("calibration_data.parameter_A").np[:] = event.parameter_A
    coll.column("calibration_data.parameter_B").np[:] = event.parameter_B
    coll.column("calibration_data.noise_A").np[:] = event.noise_A
    coll.column("calibration_data.noise_B").np[:] = event.noise_B


def fill_particle_collection(coll: Collection, particles: ParticleArrays) -> None:
    coll.clear()
    coll.resize(len(particles))
    coll.column("energy").np[:] = particles.energy
    coll.column("x").np[:] = particles.x
    coll.column("y").np[:] = particles.y
    coll.column("origin").np[:] = particles.origin
    coll.column("x_variance").np[:] = particles.x_variance
    coll.column("y_variance").np[:] = particles.y_variance
    coll.column("significance").np[:] = particles.significance.T
    coll.column("E_contribution").np[:] = particles.E_contribution.T
    coll.column("noisy_count").np[:] = particles.noisy_count.T
    coll.jagged_fill("sensors", particles.sensors)


def reconstruct_from_collection(
    sensors: Collection,
    width: int,
    height: int,
    out: Collection | None = None,
) -> Collection:
    """Run the kernel on a calibrated sensor collection.

    Results land in `out` when given (any layout, resized to fit), else in a
    fresh host per-field particle collection.
    """
    particles = reconstruct_arrays(
        sensors.column("energy").read(),
        noise_for_collection(sensors),
        sensors.column("type").read(),
        sensors.column("calibration_data.noisy").read(),
        width,
        height,
    )
    if out is None:
        out = Collection(PARTICLE_SCHEMA, PER_FIELD)
    fill_particle_collection(out, particles)
    return out
