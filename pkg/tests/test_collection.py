"""Collection-level behavior: views, jagged maintenance, dumps, behaviors."""

import numpy as np
import pytest

import soakit.behaviors as bh
import soakit.layouts as ly
import soakit.memctx as mc
import soakit.schema as sc
from soakit.collection import Collection, ColumnView, FixedArrayView, JaggedView, ObjectView
from soakit.errors import (
    AccessError,
    BoundsError,
    CapacityError,
    KindError,
    SchemaError,
    StaleViewError,
    UnknownBehaviorError,
)

ALL_KINDS = (ly.PER_FIELD, ly.ARENA, ly.AOS)


def _scale_energy(view, factor):
    view.energy = float(view.energy) * factor
    return float(view.energy)


def _total_energy(coll):
    return float(coll.column("energy").read().sum())


@pytest.fixture(scope="module", autouse=True)
def _bundle():
    if not bh.is_registered("test_particle_funcs"):
        bh.register_bundle(
            "test_particle_funcs",
            [
                bh.BehaviorFunction("scale", bh.TARGET_OBJECT, _scale_energy),
                bh.BehaviorFunction("total", bh.TARGET_COLLECTION, _total_energy),
            ],
        )
    yield


def particle_like_schema() -> sc.Schema:
    return sc.Schema(
        "Particle",
        (
            sc.declare_per_item("energy", sc.F32),
            sc.declare_per_item("x", sc.F32),
            sc.declare_per_item("origin", sc.U64),
            sc.declare_jagged("sensors", sc.I32, sc.U64),
            sc.declare_array("significance", 4, sc.F32),
            sc.declare_behavior("funcs", "test_particle_funcs"),
        ),
    )


def gnarly_schema() -> sc.Schema:
    # arrays of groups, nested arrays, jagged with group children, a global
    return sc.Schema(
        "Gnarly",
        (
            sc.declare_per_item("id", sc.I64),
            sc.declare_subgroup(
                "cal",
                [
                    sc.declare_per_item("gain", sc.F64),
                    sc.declare_array("taps", 2, sc.F32),
                ],
            ),
            sc.declare_array(
                "slots",
                2,
                [
                    sc.declare_per_item("w", sc.F32),
                    sc.declare_array("inner", 3, sc.U16),
                ],
            ),
            sc.declare_jagged(
                "hits",
                sc.U64,
                [
                    sc.declare_per_item("adc", sc.I32),
                    sc.declare_per_item("t", sc.F32),
                ],
            ),
            sc.declare_global("run_number", sc.U32),
        ),
    )


def make(kind: str, schema: sc.Schema, info=None) -> Collection:
    if kind == ly.ARENA:
        plan = sc.flatten(schema)
        caps = {t.id: (64 if t.id == sc.MAIN_TAG else 1024) for t in plan.size_tags}
        return Collection(schema, kind, info, ly.ArenaSpec(caps))
    return Collection(schema, kind, info)


def assert_prefix_ok(coll: Collection, path: str):
    pv = coll.prefix_sums(path)
    assert pv[0] == 0
    assert (np.diff(pv.astype(np.int64)) >= 0).all()
    assert int(pv[-1]) == coll.jagged_size(path)
    assert len(pv) == len(coll) + 1


class TestBasics:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_new_collection_is_empty(self, kind):
        coll = make(kind, particle_like_schema())
        assert len(coll) == 0
        assert coll.kind == kind
        assert coll.info.context == "host"
        coll.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_resize_zero_fills(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(3)
        for rec in coll:
            assert rec.energy == 0.0
            assert rec.origin == 0
            assert len(rec.sensors) == 0
            assert rec.significance.to_list() == [0.0] * 4
        assert_prefix_ok(coll, "sensors")
        coll.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_attribute_read_write(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(2)
        r = coll.record(1)
        r.energy = 5.5
        r.origin = 77
        assert r.energy == np.float32(5.5)
        assert r.origin == 77
        assert coll.record(0).energy == 0.0
        coll.free()

    def test_record_bounds(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        with pytest.raises(BoundsError):
            coll.record(2)
        with pytest.raises(BoundsError):
            coll.record(-1)
        coll.free()

    def test_unknown_attribute(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(1)
        with pytest.raises(AttributeError):
            coll.record(0).not_there
        with pytest.raises(AttributeError):
            coll.record(0).not_there = 4
        coll.free()

    def test_subgroup_and_nested_arrays(self):
        coll = make(ly.PER_FIELD, gnarly_schema())
        coll.resize(2)
        r = coll.record(1)
        r.cal.gain = 2.5
        assert coll.record(1).cal.gain == 2.5
        r.cal.taps[1] = 0.25
        assert r.cal.taps.to_list() == [0.0, 0.25]
        # array of groups: each slot has its own scalar and inner array
        r.slots[0].w = 1.0
        r.slots[1].w = 2.0
        r.slots[1].inner[2] = 9
        assert r.slots[0].w == 1.0
        assert r.slots[1].w == 2.0
        assert r.slots[1].inner.to_list() == [0, 0, 9]
        assert r.slots[0].inner.to_list() == [0, 0, 0]
        with pytest.raises(KindError):
            r.slots[0] = 3
        with pytest.raises(KindError):
            r.cal = 1
        coll.free()


class TestFixedArrays:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_simple_array_slots(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(3)
        arr = coll.record(1).significance
        assert len(arr) == 4
        for k in range(4):
            arr[k] = k * 1.5
        assert arr.to_list() == [0.0, 1.5, 3.0, 4.5]
        assert list(arr.np) == [0.0, 1.5, 3.0, 4.5]
        arr.np[:] = 7.0
        assert coll.record(1).significance.to_list() == [7.0] * 4
        # neighbors untouched
        assert coll.record(0).significance.to_list() == [0.0] * 4
        assert coll.record(2).significance.to_list() == [0.0] * 4
        with pytest.raises(BoundsError):
            arr[4]
        coll.free()


class TestJagged:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_resize_and_write(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(3)
        coll.jagged_resize("sensors", 0, 2)
        coll.jagged_resize("sensors", 2, 3)
        assert_prefix_ok(coll, "sensors")
        s0 = coll.record(0).sensors
        assert len(s0) == 2
        s0[0], s0[1] = 10, 11
        s2 = coll.record(2).sensors
        s2.fill([20, 21, 22])
        assert coll.record(0).sensors.to_list() == [10, 11]
        assert coll.record(1).sensors.to_list() == []
        assert coll.record(2).sensors.to_list() == [20, 21, 22]
        coll.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_middle_grow_preserves_neighbors(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(3)
        coll.jagged_fill("sensors", [[1, 2], [3], [4, 5, 6]])
        coll.jagged_resize("sensors", 1, 3)
        assert coll.record(0).sensors.to_list() == [1, 2]
        assert coll.record(1).sensors.to_list() == [3, 0, 0]
        assert coll.record(2).sensors.to_list() == [4, 5, 6]
        assert_prefix_ok(coll, "sensors")
        coll.jagged_resize("sensors", 1, 0)
        assert coll.record(1).sensors.to_list() == []
        assert coll.record(2).sensors.to_list() == [4, 5, 6]
        assert_prefix_ok(coll, "sensors")
        coll.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_jagged_fill_bulk(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(4)
        segs = [[7], [], [8, 9], [10, 11, 12]]
        coll.jagged_fill("sensors", segs)
        assert [coll.record(i).sensors.to_list() for i in range(4)] == segs
        assert coll.jagged_size("sensors") == 6
        assert_prefix_ok(coll, "sensors")
        coll.jagged_fill("sensors", [[], [], [], []])
        assert coll.jagged_size("sensors") == 0
        assert_prefix_ok(coll, "sensors")
        coll.free()

    def test_jagged_fill_validation(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        with pytest.raises(BoundsError):
            coll.jagged_fill("sensors", [[1]])
        with pytest.raises(KindError):
            coll.jagged_fill("energy", [[1], [2]])
        coll.free()

    def test_jagged_with_group_children(self):
        coll = make(ly.PER_FIELD, gnarly_schema())
        coll.resize(2)
        coll.jagged_resize("hits", 0, 2)
        h = coll.record(0).hits
        h[0].adc = 100
        h[0].t = 1.5
        h[1].adc = 200
        assert h[0].adc == 100
        assert h[1].adc == 200
        assert h[1].t == 0.0
        with pytest.raises(KindError):
            h[0] = 5
        with pytest.raises(KindError):
            h.to_list()
        with pytest.raises(KindError):
            coll.jagged_fill("hits", [[], []])
        coll.free()

    def test_jagged_bounds_and_kind(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        with pytest.raises(BoundsError):
            coll.jagged_resize("sensors", 2, 1)
        with pytest.raises(BoundsError):
            coll.jagged_resize("sensors", 0, -1)
        with pytest.raises(KindError):
            coll.jagged_resize("energy", 0, 1)
        coll.jagged_resize("sensors", 0, 1)
        with pytest.raises(BoundsError):
            coll.record(0).sensors[1]
        coll.free()

    def test_jagged_not_reachable_from_nested_views(self):
        coll = make(ly.PER_FIELD, gnarly_schema())
        coll.resize(1)
        # group view inside the jagged cannot reach back out to a jagged
        coll.jagged_resize("hits", 0, 1)
        elem = coll.record(0).hits[0]
        with pytest.raises(AttributeError):
            elem.hits
        coll.free()


class TestSizeOps:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_insert_records(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(3)
        for i in range(3):
            coll.record(i).energy = float(i + 1)
        coll.jagged_fill("sensors", [[1], [2, 2], [3]])
        coll.insert_records(1, 2)
        assert len(coll) == 5
        assert [float(r.energy) for r in coll] == [1.0, 0.0, 0.0, 2.0, 3.0]
        assert [r.sensors.to_list() for r in coll] == [[1], [], [], [2, 2], [3]]
        assert_prefix_ok(coll, "sensors")
        coll.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_erase_records_drops_segments(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(4)
        for i in range(4):
            coll.record(i).energy = float(i + 1)
        coll.jagged_fill("sensors", [[1], [2, 2], [3, 3, 3], [4]])
        coll.erase_records(1, 2)
        assert len(coll) == 2
        assert [float(r.energy) for r in coll] == [1.0, 4.0]
        assert [r.sensors.to_list() for r in coll] == [[1], [4]]
        assert coll.jagged_size("sensors") == 2
        assert_prefix_ok(coll, "sensors")
        coll.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_shrink_drops_pool_tail(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(3)
        coll.jagged_fill("sensors", [[1], [2], [3, 3]])
        coll.resize(1)
        assert coll.jagged_size("sensors") == 1
        assert coll.record(0).sensors.to_list() == [1]
        assert_prefix_ok(coll, "sensors")
        coll.resize(3)
        assert [r.sensors.to_list() for r in coll] == [[1], [], []]
        assert_prefix_ok(coll, "sensors")
        coll.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_clear(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(3)
        coll.jagged_fill("sensors", [[1], [2], [3]])
        coll.clear()
        assert len(coll) == 0
        assert coll.jagged_size("sensors") == 0
        coll.resize(2)
        assert [r.sensors.to_list() for r in coll] == [[], []]
        assert_prefix_ok(coll, "sensors")
        coll.free()

    def test_erase_bounds(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        with pytest.raises(BoundsError):
            coll.erase_records(1, 2)
        with pytest.raises(BoundsError):
            coll.erase_records(-1, 1)
        assert len(coll) == 2
        coll.free()


class TestPushRecord:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_push_full(self, kind):
        coll = make(kind, particle_like_schema())
        rec = coll.push_record(
            energy=3.5,
            origin=42,
            sensors=[5, 6, 7],
            significance=[0.1, 0.2, 0.3, 0.4],
        )
        assert len(coll) == 1
        assert rec.energy == np.float32(3.5)
        assert rec.origin == 42
        assert rec.sensors.to_list() == [5, 6, 7]
        assert rec.significance.to_list() == [np.float32(v) for v in (0.1, 0.2, 0.3, 0.4)]
        assert_prefix_ok(coll, "sensors")
        coll.push_record(energy=1.0)
        assert coll.record(1).sensors.to_list() == []
        assert coll.record(1).x == 0.0
        coll.free()

    def test_push_validation_is_before_mutation(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.push_record(energy=1.0, sensors=[1])
        before = coll.dump()
        with pytest.raises(SchemaError):
            coll.push_record(energy=2.0, nope=1)
        with pytest.raises(BoundsError):
            coll.push_record(significance=[1.0, 2.0])
        with pytest.raises(KindError):
            coll.push_record(funcs=3)
        assert coll.dump() == before
        coll.free()

    def test_push_capacity_failure_leaves_collection_intact(self):
        schema = particle_like_schema()
        plan = sc.flatten(schema)
        coll = Collection(schema, ly.ARENA, arena=ly.ArenaSpec({sc.MAIN_TAG: 2, "sensors": 4}))
        coll.push_record(energy=1.0, sensors=[1, 2])
        coll.push_record(energy=2.0, sensors=[3])
        before = coll.dump()
        with pytest.raises(CapacityError):
            coll.push_record(energy=3.0)  # main tag full
        assert coll.dump() == before
        coll.erase_records(1, 1)
        with pytest.raises(CapacityError):
            coll.push_record(energy=4.0, sensors=[1, 2, 3])  # pool would overflow
        assert len(coll) == 1
        assert coll.record(0).sensors.to_list() == [1, 2]
        coll.free()


class TestStaleness:
    @pytest.mark.parametrize("op", ["resize", "insert", "erase", "clear", "reserve", "shrink", "jagged"])
    def test_views_go_stale(self, op):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(4)
        rec = coll.record(1)
        col = coll.column("energy")
        seg = coll.record(1).sensors
        arr = coll.record(1).significance
        {
            "resize": lambda: coll.resize(8),
            "insert": lambda: coll.insert_records(0, 1),
            "erase": lambda: coll.erase_records(0, 1),
            "clear": lambda: coll.clear(),
            "reserve": lambda: coll.reserve(32),
            "shrink": lambda: coll.shrink_to_fit(),
            "jagged": lambda: coll.jagged_resize("sensors", 0, 3),
        }[op]()
        with pytest.raises(StaleViewError):
            rec.energy
        with pytest.raises(StaleViewError):
            rec.energy = 1.0
        with pytest.raises(StaleViewError):
            col.np
        with pytest.raises(StaleViewError):
            len(seg)
        with pytest.raises(StaleViewError):
            arr[0]
        coll.free()

    def test_fresh_views_work_after_ops(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        coll.resize(4)
        assert coll.record(3).energy == 0.0

    def test_jagged_view_survives_its_own_resize(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        seg = coll.record(0).sensors
        seg.resize(2)
        seg[0] = 5
        assert seg.to_list() == [5, 0]
        coll.free()

    def test_value_writes_do_not_invalidate(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        rec = coll.record(0)
        coll.record(1).energy = 4.0
        coll.set_global  # attribute touch, no call
        assert rec.energy == 0.0  # still valid
        coll.free()


class TestColumns:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_column_views(self, kind):
        coll = make(kind, particle_like_schema())
        coll.resize(40)
        col = coll.column("energy")
        assert len(col) == 40
        assert col.np.shape == (40,)
        col.fill(2.0)
        assert float(col.read().sum()) == 80.0
        col[3] = 9.0
        assert col[3] == np.float32(9.0)
        arr = coll.column("significance.value")
        assert arr.np.shape == (4, 40)
        coll.free()

    def test_column_sugar_paths(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        coll.jagged_fill("sensors", [[1], [2, 3]])
        assert coll.column("significance").leaf.dotted == "significance.value"
        pool = coll.column("sensors")
        assert pool.leaf.dotted == "sensors.value"
        assert len(pool) == 3
        with pytest.raises(KindError):
            coll.column("funcs")
        coll.free()

    def test_prefix_sums_copy(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(2)
        coll.jagged_fill("sensors", [[1], [2, 3]])
        pv = coll.prefix_sums("sensors")
        assert pv.tolist() == [0, 1, 3]
        pv[0] = 99  # a copy: collection state untouched
        assert coll.prefix_sums("sensors")[0] == 0
        coll.free()


class TestGlobals:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_get_set(self, kind):
        coll = make(kind, gnarly_schema())
        assert coll.get_global("run_number") == 0
        coll.set_global("run_number", 1234)
        assert coll.get_global("run_number") == 1234
        coll.resize(5)
        coll.resize(0)
        assert coll.get_global("run_number") == 1234  # survives size changes
        coll.free()

    def test_globals_not_on_views(self):
        coll = make(ly.PER_FIELD, gnarly_schema())
        coll.resize(1)
        with pytest.raises(KindError):
            coll.record(0).run_number
        with pytest.raises(AttributeError):
            coll.run_number
        with pytest.raises(KindError):
            coll.get_global("id")
        with pytest.raises(KindError):
            coll.column("run_number")
        coll.free()


class TestBehaviors:
    def test_object_target(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(1)
        coll.record(0).energy = 2.0
        got = coll.record(0).funcs.scale(3.0)
        assert got == 6.0
        assert coll.record(0).energy == np.float32(6.0)

    def test_collection_target(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(3)
        coll.column("energy").fill(2.0)
        assert coll.funcs.total() == 6.0
        assert coll.call_behavior("funcs", "total") == 6.0

    def test_explicit_call_on_view(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(1)
        coll.record(0).energy = 1.0
        assert coll.record(0).call_behavior("funcs", "scale", 5.0) == 5.0

    def test_unknown_function_and_wrong_target(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(1)
        with pytest.raises(UnknownBehaviorError):
            coll.record(0).funcs.nope()
        with pytest.raises(UnknownBehaviorError):
            coll.funcs.scale(2.0)  # object-target fn not callable on the collection
        with pytest.raises(UnknownBehaviorError):
            coll.record(0).funcs.total()
        with pytest.raises(KindError):
            coll.call_behavior("energy", "scale")


class TestDump:
    def test_golden_dump(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.push_record(energy=1.5, x=0.5, origin=7, sensors=[3, 4], significance=[1.0, 0.0, 0.0, 2.0])
        coll.push_record(energy=0.0, origin=0)
        expected = (
            "collection Particle records=2\n"
            "record 0: energy=1.5 x=0.5 origin=7 sensors.value=[3,4]"
            " significance.value=[1.0,0.0,0.0,2.0]\n"
            "record 1: energy=0.0 x=0.0 origin=0 sensors.value=[]"
            " significance.value=[0.0,0.0,0.0,0.0]\n"
        )
        assert coll.dump() == expected
        coll.free()

    def test_golden_dump_with_global_and_groups(self):
        coll = make(ly.PER_FIELD, gnarly_schema())
        coll.set_global("run_number", 9)
        coll.resize(1)
        r = coll.record(0)
        r.id = -3
        r.cal.gain = 1.5
        r.slots[1].w = 2.0
        coll.jagged_resize("hits", 0, 1)
        r2 = coll.record(0)
        r2.hits[0].adc = 12
        r2.hits[0].t = 0.5
        expected = (
            "collection Gnarly records=1\n"
            "global run_number=9\n"
            "record 0: id=-3 cal.gain=1.5 cal.taps.value=[0.0,0.0]"
            " slots.w=[0.0,2.0] slots.inner.value=[0,0,0,0,0,0]"
            " hits.adc=[12] hits.t=[0.5]\n"
        )
        assert coll.dump() == expected
        coll.free()

    def test_dump_identical_across_kinds(self):
        dumps = []
        for kind in ALL_KINDS:
            coll = make(kind, particle_like_schema())
            coll.push_record(energy=1.25, x=-2.0, origin=11, sensors=[1, 2, 3], significance=[0.5, 1.5, 2.5, 3.5])
            coll.push_record(energy=4.0, sensors=[9])
            coll.insert_records(1, 1)
            coll.jagged_resize("sensors", 1, 2)
            dumps.append(coll.dump())
            coll.free()
        assert dumps[0] == dumps[1] == dumps[2]

    def test_empty_dump(self):
        coll = make(ly.AOS, particle_like_schema())
        assert coll.dump() == "collection Particle records=0\n"
        coll.free()


class TestResidency:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_migration_round_trip(self, kind):
        coll = make(kind, particle_like_schema())
        coll.push_record(energy=1.0, origin=5, sensors=[1, 2])
        coll.push_record(energy=2.0, sensors=[3])
        reference = coll.dump()
        coll.update_memory_context_info(mc.ContextInfo.mockdev())
        assert coll.info.context == "mockdev"
        with pytest.raises(AccessError):
            coll.dump()
        with pytest.raises(AccessError):
            coll.record(0).energy
        with mc.execution_scope("mockdev"):
            assert coll.dump() == reference
        coll.update_memory_context_info(mc.ContextInfo.host())
        assert coll.dump() == reference
        coll.free()

    def test_mockdev_collection_not_resizable_from_host(self):
        coll = make(ly.PER_FIELD, particle_like_schema(), info=mc.ContextInfo.mockdev())
        from soakit.errors import NotResizableError

        with pytest.raises(NotResizableError):
            coll.resize(2)
        with pytest.raises(NotResizableError):
            coll.push_record(energy=1.0)
        with mc.execution_scope("mockdev"):
            coll.resize(2)
            coll.record(0).energy = 3.0
        coll.free()

    def test_views_stale_after_migration(self):
        coll = make(ly.PER_FIELD, particle_like_schema())
        coll.resize(1)
        rec = coll.record(0)
        coll.update_memory_context_info(mc.ContextInfo.mockdev())
        with pytest.raises(StaleViewError):
            rec.energy
        coll.free()
