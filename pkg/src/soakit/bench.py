"""Timing and verification harness for the sensor reconstruction pipeline.

Six configurations run the same physics through different storage:

  handwritten-aos           numpy structured array, hand-rolled pipeline
  handwritten-soa           dict of flat numpy arrays, hand-rolled pipeline
  lib-per-field             collection with one buffer per leaf
  lib-arena                 collection in a single arena slab
  lib-aos                   collection with interleaved record storage
  lib-per-field-via-mockdev per-field collection migrated to the mock device
                            for compute, results migrated back

Each repetition times two phases separately: loading an event and calibrating
("fill+transfer+calibrate"), then running the kernel and exporting particle
records ("reconstruct+transfer-back+export"). Containers are built once per
cell and reused across repetitions, so the numbers reflect steady state; one
untimed warm-up repetition absorbs first-touch growth. A cell reports the mean
of its keep_fastest smallest samples. Byte and copy-operation counts are the
memory-statistics delta observed during the final repetition.

Verification compares the canonical particle dump of every configuration
against the handwritten-aos reference on the exact event set and reports the
first diverging field path per mismatch.
"""

from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import zip_longest
from typing import Callable, Iterable, Sequence

from . import layouts as ly
from . import memctx as mc
from . import schema as sc
from . import transfer as tr
from .collection import Collection
from .errors import BenchConfigError
from .detector import (
    PARTICLE_SCHEMA,
    SENSOR_SCHEMA,
    EventSpec,
    HandwrittenAosPipeline,
    HandwrittenSoaPipeline,
    export_particles_from_collection,
    fill_sensor_collection,
    generate_event,
    reconstruct_from_collection,
)

REFERENCE_CONFIGURATION = "handwritten-aos"

CONFIGURATIONS = (
    "handwritten-aos",
    "handwritten-soa",
    "lib-per-field",
    "lib-arena",
    "lib-aos",
    "lib-per-field-via-mockdev",
)

PHASE_PREPARE = "fill+transfer+calibrate"
PHASE_RECONSTRUCT = "reconstruct+transfer-back+export"
PHASES = (PHASE_PREPARE, PHASE_RECONSTRUCT)

# each wrapped configuration is held against the handwritten pipeline that
# stores its sensors the same way
OVERHEAD_PAIRS = (
    ("lib-per-field", "handwritten-soa"),
    ("lib-arena", "handwritten-soa"),
    ("lib-aos", "handwritten-aos"),
)
OVERHEAD_CONFIGURATIONS = (
    "handwritten-aos",
    "handwritten-soa",
    "lib-per-field",
    "lib-arena",
    "lib-aos",
)

RESULTS_HEADER = (
    "configuration",
    "grid",
    "density",
    "phase",
    "mean_fastest_s",
    "bytes_transferred",
    "copy_ops",
)
SAMPLES_HEADER = (
    "configuration",
    "grid",
    "density",
    "phase",
    "repetition",
    "event_index",
    "seconds",
)


@dataclass(frozen=True)
class CellResult:
    configuration: str
    width: int
    height: int
    density: float
    phase: str
    mean_fastest_s: float
    bytes_transferred: int
    copy_ops: int


@dataclass(frozen=True)
class SampleRow:
    configuration: str
    width: int
    height: int
    density: float
    phase: str
    repetition: int
    event_index: int
    seconds: float


# -- runners ----------------------------------------------------------------------


class _HandwrittenRunner:
    def __init__(self, pipeline) -> None:
        self._p = pipeline

    def prepare(self, event) -> None:
        self._p.fill(event)
        self._p.calibrate()

    def reconstruct(self, width: int, height: int):
        self._p.reconstruct(width, height)
        return self._p.export()

    def particles_dump(self) -> str:
        return self._p.particles_dump()


class _LibraryRunner:
    def __init__(self, kind: str, n_sensors: int) -> None:
        arena = ly.ArenaSpec({sc.MAIN_TAG: n_sensors}) if kind == ly.ARENA else None
        self.sensors = Collection(SENSOR_SCHEMA, kind, None, arena)
        # particle counts vary per event, so output stays growable per-field
        self.particles = Collection(PARTICLE_SCHEMA, ly.PER_FIELD)

    def prepare(self, event) -> None:
        fill_sensor_collection(self.sensors, event)
        self.sensors.funcs.calibrate_energy()

    def reconstruct(self, width: int, height: int):
        reconstruct_from_collection(self.sensors, width, height, out=self.particles)
        return export_particles_from_collection(self.particles)

    def particles_dump(self) -> str:
        return self.particles.dump()


class _MockdevRunner:
    def __init__(self) -> None:
        dev = mc.ContextInfo.mockdev()
        self.host = Collection(SENSOR_SCHEMA, ly.PER_FIELD)
        self.dev = Collection(SENSOR_SCHEMA, ly.PER_FIELD, dev)
        self.p_dev = Collection(PARTICLE_SCHEMA, ly.PER_FIELD, dev)
        self.p_host = Collection(PARTICLE_SCHEMA, ly.PER_FIELD)

    def prepare(self, event) -> None:
        fill_sensor_collection(self.host, event)
        tr.copy_collection(self.dev, self.host)
        with mc.execution_scope(mc.MOCKDEV):
            self.dev.funcs.calibrate_energy()

    def reconstruct(self, width: int, height: int):
        with mc.execution_scope(mc.MOCKDEV):
            reconstruct_from_collection(self.dev, width, height, out=self.p_dev)
        tr.copy_collection(self.p_host, self.p_dev)
        return export_particles_from_collection(self.p_host)

    def particles_dump(self) -> str:
        return self.p_host.dump()


_LIB_KINDS = {
    "lib-per-field": ly.PER_FIELD,
    "lib-arena": ly.ARENA,
    "lib-aos": ly.AOS,
}


def make_runner(configuration: str, n_sensors: int):
    """Build the reusable pipeline for one configuration and grid size."""
    if configuration == "handwritten-aos":
        return _HandwrittenRunner(HandwrittenAosPipeline())
    if configuration == "handwritten-soa":
        return _HandwrittenRunner(HandwrittenSoaPipeline())
    if configuration == "lib-per-field-via-mockdev":
        return _MockdevRunner()
    kind = _LIB_KINDS.get(configuration)
    if kind is None:
        raise ValueError(f"unknown configuration {configuration!r}")
    return _LibraryRunner(kind, n_sensors)


# -- timing -----------------------------------------------------------------------


def mean_of_fastest(seconds: Sequence[float], keep: int) -> float:
    return sum(sorted(seconds)[:keep]) / keep


def run_bench(
    grids: Sequence[tuple[int, int]],
    densities: Sequence[float],
    configurations: Sequence[str] = CONFIGURATIONS,
    *,
    seed: int = 0,
    repetitions: int = 50,
    keep_fastest: int = 10,
    events_per_cell: int = 10,
) -> tuple[list[CellResult], list[SampleRow]]:
    if not grids or not densities or not configurations:
        raise BenchConfigError("grids, densities, and configurations must be non-empty")
    unknown = [c for c in configurations if c not in CONFIGURATIONS]
    if unknown:
        raise BenchConfigError(f"unknown configurations: {unknown}")
    if repetitions < 1 or events_per_cell < 1:
        raise BenchConfigError("repetitions and events_per_cell must be at least 1")
    if not 1 <= keep_fastest <= repetitions:
        raise BenchConfigError("keep_fastest must be between 1 and repetitions")

    results: list[CellResult] = []
    samples: list[SampleRow] = []
    for w, h in grids:
        for density in densities:
            events = [
                generate_event(EventSpec(w, h, seed=seed + i, particle_density=density))
                for i in range(events_per_cell)
            ]
            for name in configurations:
                runner = make_runner(name, w * h)
                runner.prepare(events[0])
                runner.reconstruct(w, h)  # warm-up, untimed
                prep: list[float] = []
                reco: list[float] = []
                traffic = {PHASE_PREPARE: (0, 0), PHASE_RECONSTRUCT: (0, 0)}
                for rep in range(repetitions):
                    ev = events[rep % events_per_cell]
                    last = rep == repetitions - 1
                    if last:
                        before = mc.stats().snapshot()
                    t0 = time.perf_counter()
                    runner.prepare(ev)
                    t1 = time.perf_counter()
                    if last:
                        mid = mc.stats().snapshot()
                    t2 = time.perf_counter()
                    runner.reconstruct(w, h)
                    t3 = time.perf_counter()
                    if last:
                        after = mc.stats().snapshot()
                        traffic = {
                            PHASE_PREPARE: (
                                mid.bytes_copied - before.bytes_copied,
                                mid.copy_ops - before.copy_ops,
                            ),
                            PHASE_RECONSTRUCT: (
                                after.bytes_copied - mid.bytes_copied,
                                after.copy_ops - mid.copy_ops,
                            ),
                        }
                    prep.append(t1 - t0)
                    reco.append(t3 - t2)
                for phase, vals in ((PHASE_PREPARE, prep), (PHASE_RECONSTRUCT, reco)):
                    nbytes, ops = traffic[phase]
                    results.append(
                        CellResult(name, w, h, density, phase, mean_of_fastest(vals, keep_fastest), nbytes, ops)
                    )
                    samples.extend(
                        SampleRow(name, w, h, density, phase, rep, rep % events_per_cell, s)
                        for rep, s in enumerate(vals)
                    )
    return results, samples


def overhead_ratios(results: Iterable[CellResult]) -> dict[tuple[str, str], float]:
    """Median per-cell runtime ratio of each configuration to its handwritten base.

    Raises BenchConfigError when a measured configuration has no baseline row
    for one of its cells.
    """
    means = {(r.configuration, r.width, r.height, r.density, r.phase): r.mean_fastest_s for r in results}
    out: dict[tuple[str, str], float] = {}
    for cfg, base in OVERHEAD_PAIRS:
        for phase in PHASES:
            ratios = []
            for (c, w, h, d, ph), v in means.items():
                if c != cfg or ph != phase:
                    continue
                if (base, w, h, d, phase) not in means:
                    raise BenchConfigError(
                        f"no {base} baseline measured for {cfg} at {w}x{h} density {d:g}"
                    )
                ratios.append(v / means[base, w, h, d, phase])
            if ratios:
                out[cfg, phase] = statistics.median(ratios)
    return out


# -- verification -----------------------------------------------------------------


def first_divergence(expected: str, actual: str) -> str:
    """Field path of the first differing token between two record dumps."""
    for el, al in zip_longest(expected.splitlines(), actual.splitlines(), fillvalue=""):
        if el == al:
            continue
        for et, at in zip_longest(el.split(), al.split(), fillvalue=""):
            if et == at:
                continue
            token = et or at
            if "=" in token:
                return token.split("=", 1)[0]
            return "record-count" if token.startswith("record") else token
        return "line-length"
    return ""


def corrupt_first_energy(dump: str) -> str:
    """Flip the first particle's energy value; used for fault-injection checks."""
    lines = dump.splitlines()
    for i, line in enumerate(lines):
        if line.startswith("record ") and " energy=" in line:
            head, _, rest = line.partition(" energy=")
            _, _, tail = rest.partition(" ")
            lines[i] = head + " energy=999.0" + (" " + tail if tail else "")
            break
    else:
        lines[0] = lines[0].rsplit("records=", 1)[0] + "records=999"
    return "\n".join(lines) + "\n"


def _verify_cell(
    w: int,
    h: int,
    density: float,
    others: Sequence[str],
    seed: int,
    events_per_cell: int,
    mutate: Callable[[str, str], str] | None,
) -> list[str]:
    mismatches = []
    reference = make_runner(REFERENCE_CONFIGURATION, w * h)
    runners = {name: make_runner(name, w * h) for name in others}
    for i in range(events_per_cell):
        ev = generate_event(EventSpec(w, h, seed=seed + i, particle_density=density))
        reference.prepare(ev)
        reference.reconstruct(w, h)
        ref = reference.particles_dump()
        for name, runner in runners.items():
            runner.prepare(ev)
            runner.reconstruct(w, h)
            got = runner.particles_dump()
            if mutate is not None:
                got = mutate(name, got)
            if got != ref:
                path = first_divergence(ref, got)
                mismatches.append(
                    f"{name} grid {w}x{h} density {density:g} event {i}: first diverging field: {path}"
                )
    return mismatches


def verify_outputs(
    grids: Sequence[tuple[int, int]],
    densities: Sequence[float],
    configurations: Sequence[str] = CONFIGURATIONS,
    *,
    seed: int = 0,
    events_per_cell: int = 10,
    mutate: Callable[[str, str], str] | None = None,
    parallel: bool = False,
) -> list[str]:
    """Compare every configuration's particle dump against the reference.

    Returns one message per mismatching (configuration, cell, event), naming
    the first diverging field path. Empty means everything agreed. Runners are
    reused across the events of a cell, exactly as the timing loop does.
    """
    others = [c for c in configurations if c != REFERENCE_CONFIGURATION]
    cells = [(w, h, d) for w, h in grids for d in densities]
    if parallel and len(cells) > 1:
        with ThreadPoolExecutor() as pool:
            chunks = pool.map(
                lambda cell: _verify_cell(*cell, others, seed, events_per_cell, mutate), cells
            )
            return [m for chunk in chunks for m in chunk]
    out: list[str] = []
    for cell in cells:
        out.extend(_verify_cell(*cell, others, seed, events_per_cell, mutate))
    return out


# -- CSV output -------------------------------------------------------------------


def write_results_csv(path, results: Iterable[CellResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for r in results:
            writer.writerow(
                [
                    r.configuration,
                    f"{r.width}x{r.height}",
                    repr(r.density),
                    r.phase,
                    repr(r.mean_fastest_s),
                    r.bytes_transferred,
                    r.copy_ops,
                ]
            )


def write_samples_csv(path, samples: Iterable[SampleRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SAMPLES_HEADER)
        for s in samples:
            writer.writerow(
                [
                    s.configuration,
                    f"{s.width}x{s.height}",
                    repr(s.density),
                    s.phase,
                    s.repetition,
                    s.event_index,
                    repr(s.seconds),
                ]
            )
