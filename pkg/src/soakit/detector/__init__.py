"""Sensor-grid example domain: schemas, event generation, reconstruction,
and handwritten baseline pipelines used as oracles."""

from .schemas import (
    NUM_SENSOR_TYPES,
    PARTICLE_BINDING,
    PARTICLE_PLAN,
    PARTICLE_SCHEMA,
    SENSOR_BINDING,
    SENSOR_PLAN,
    SENSOR_SCHEMA,
    SENSOR_TYPE,
    ParticleRecord,
    SensorRecord,
    make_sensor_records,
)
from .events import EventData, EventSpec, generate_event, load_event, save_event
from .reconstruct import (
    CONTRIBUTOR_THRESHOLD,
    SEED_THRESHOLD,
    ParticleArrays,
    calibrate_collection,
    fill_particle_collection,
    fill_sensor_collection,
    noise_for_collection,
    reconstruct_arrays,
    reconstruct_from_collection,
)
from .baselines import (
    PARTICLE_AOS_DTYPE,
    SENSOR_AOS_DTYPE,
    HandwrittenAosPipeline,
    HandwrittenSoaPipeline,
    dump_particles_external,
    dump_sensors_external,
    export_particles_from_collection,
    particle_struct_from_cols,
)

__all__ = [
    "NUM_SENSOR_TYPES",
    "PARTICLE_BINDING",
    "PARTICLE_PLAN",
    "PARTICLE_SCHEMA",
    "SENSOR_PLAN",
    "SENSOR_BINDING",
    "SENSOR_SCHEMA",
    "SENSOR_TYPE",
    "ParticleRecord",
    "SensorRecord",
    "make_sensor_records",
    "EventData",
    "EventSpec",
    "generate_event",
    "load_event",
    "save_event",
    "CONTRIBUTOR_THRESHOLD",
    "SEED_THRESHOLD",
    "ParticleArrays",
    "calibrate_collection",
    "fill_particle_collection",
    "fill_sensor_collection",
    "noise_for_collection",
    "reconstruct_arrays",
    "reconstruct_from_collection",
    "PARTICLE_AOS_DTYPE",
    "SENSOR_AOS_DTYPE",
    "HandwrittenAosPipeline",
    "HandwrittenSoaPipeline",
    "dump_particles_external",
    "dump_sensors_external",
    "export_particles_from_collection",
    "particle_struct_from_cols",
]
