"""Layout behavior tests.

The three layouts must be observationally identical through the element
interface, so the size-op tests run one shared mirror-model oracle against
every kind. Structural properties that the interface hides (buffer counts,
arena offsets, record strides, growth policy) are pinned against
independent recomputation.
"""

import random

import numpy as np
import pytest

import soakit.layouts as ly
import soakit.memctx as mc
import soakit.schema as sc
from soakit.errors import (
    AccessError,
    BoundsError,
    CapacityError,
    LayoutError,
    NotResizableError,
    PlanError,
)

ALL_KINDS = (ly.PER_FIELD, ly.ARENA, ly.AOS)


def particle_like_schema() -> sc.Schema:
    return sc.Schema(
        "Particle",
        (
            sc.declare_per_item("energy", sc.F32),
            sc.declare_per_item("x", sc.F32),
            sc.declare_per_item("y", sc.F32),
            sc.declare_per_item("origin", sc.U64),
            sc.declare_jagged("sensors", sc.I32, sc.U64),
            sc.declare_per_item("x_variance", sc.F32),
            sc.declare_per_item("y_variance", sc.F32),
            sc.declare_array("significance", 4, sc.F32),
            sc.declare_array("E_contribution", 4, sc.F32),
            sc.declare_array("noisy_count", 4, sc.U8),
        ),
    )


def mixed_schema() -> sc.Schema:
    # small plan touching every role and dtype family
    return sc.Schema(
        "Mixed",
        (
            sc.declare_per_item("a", sc.F32),
            sc.declare_array("arr", 3, sc.U16),
            sc.declare_jagged("j", sc.I64, sc.F64),
            sc.declare_per_item("flag", sc.BOOL),
            sc.declare_global("offset", sc.F64),
        ),
    )


PARTICLE_PLAN = sc.flatten(particle_like_schema())
MIXED_PLAN = sc.flatten(mixed_schema())


def default_caps(plan: sc.StoragePlan) -> dict[str, int]:
    return {t.id: (64 if t.id == sc.MAIN_TAG else 1024) for t in plan.size_tags}


def make(kind: str, plan: sc.StoragePlan, info: mc.ContextInfo | None = None) -> ly.LayoutInstance:
    if kind == ly.ARENA:
        return ly.build_layout(kind, plan, info, ly.ArenaSpec(default_caps(plan)))
    return ly.build_layout(kind, plan, info)


@pytest.fixture(autouse=True)
def _host_exec():
    assert mc.current_execution_context() == "host"
    yield


class TestConstruction:
    def test_per_field_one_buffer_per_leaf(self):
        lay = make(ly.PER_FIELD, PARTICLE_PLAN)
        assert len(lay.buffers()) == len(PARTICLE_PLAN.leaves) == 11
        lay.free()

    def test_arena_single_allocation(self):
        before = mc.stats().allocations
        lay = make(ly.ARENA, PARTICLE_PLAN)
        assert mc.stats().allocations - before == 1
        assert len(lay.buffers()) == 1
        lay.free()

    def test_aos_struct_plus_side_buffers(self):
        lay = make(ly.AOS, PARTICLE_PLAN)
        # 9 interleaved main leaves in one struct buffer, 2 side leaves
        assert len(lay.buffers()) == 3
        lay.free()

    def test_initial_sizes_and_caps(self):
        for kind in ALL_KINDS:
            lay = make(kind, PARTICLE_PLAN)
            assert lay.size(sc.MAIN_TAG) == 0
            assert lay.size("sensors") == 0
            assert set(lay.tags()) == {sc.MAIN_TAG, "sensors"}
            lay.free()

    def test_mockdev_residency(self):
        lay = make(ly.PER_FIELD, MIXED_PLAN, mc.ContextInfo.mockdev())
        assert all(b.info.context == "mockdev" for b in lay.buffers())
        lay.free()

    def test_free_is_idempotent(self):
        lay = make(ly.AOS, MIXED_PLAN)
        bufs = lay.buffers()
        lay.free()
        lay.free()
        assert all(not b.live for b in bufs)

    def test_capability_invariant(self):
        with pytest.raises(LayoutError):
            ly.LayoutCapabilities(
                kind="per_field",
                memory_context="host",
                access={"host": ly.AccessFlags(True, False, True)},
            )


class TestBuildValidation:
    def test_unknown_kind(self):
        with pytest.raises(PlanError):
            ly.build_layout("soa", MIXED_PLAN)

    def test_arena_requires_spec(self):
        with pytest.raises(PlanError):
            ly.build_layout(ly.ARENA, MIXED_PLAN)

    def test_spec_rejected_for_other_kinds(self):
        spec = ly.ArenaSpec(default_caps(MIXED_PLAN))
        with pytest.raises(PlanError):
            ly.build_layout(ly.PER_FIELD, MIXED_PLAN, arena=spec)
        with pytest.raises(PlanError):
            ly.build_layout(ly.AOS, MIXED_PLAN, arena=spec)

    def test_arena_spec_must_cover_all_tags(self):
        with pytest.raises(PlanError):
            ly.build_layout(ly.ARENA, MIXED_PLAN, arena=ly.ArenaSpec({sc.MAIN_TAG: 8}))

    def test_arena_spec_rejects_unknown_tags(self):
        caps = default_caps(MIXED_PLAN)
        caps["ghost"] = 8
        with pytest.raises(PlanError):
            ly.build_layout(ly.ARENA, MIXED_PLAN, arena=ly.ArenaSpec(caps))

    def test_arena_spec_validation(self):
        with pytest.raises(PlanError):
            ly.ArenaSpec({sc.MAIN_TAG: 8}, alignment=3)
        with pytest.raises(PlanError):
            ly.ArenaSpec({sc.MAIN_TAG: 8}, alignment=0)
        with pytest.raises(PlanError):
            ly.ArenaSpec({sc.MAIN_TAG: -1})

    def test_jagged_inside_fixed_array_not_instantiable(self):
        schema = sc.Schema(
            "Bad",
            (
                sc.declare_array("slots", 3, [sc.declare_jagged("hits", sc.U64, sc.F32)]),
                sc.declare_per_item("pad", sc.U8),
            ),
        )
        plan = sc.flatten(schema)  # flattening itself is fine
        for kind in ALL_KINDS:
            with pytest.raises(PlanError):
                make(kind, plan)


class TestArenaGeometry:
    @pytest.mark.parametrize("alignment", [16, 64, 4096])
    def test_offsets_match_independent_recomputation(self, alignment):
        caps = default_caps(PARTICLE_PLAN)
        spec = ly.ArenaSpec(caps, alignment=alignment)
        lay = ly.build_layout(ly.ARENA, PARTICLE_PLAN, arena=spec)

        cursor = 0
        for leaf in PARTICLE_PLAN.leaves:
            assert lay.leaf_offset(leaf) == cursor
            assert cursor % alignment == 0
            if leaf.role == sc.ROLE_GLOBAL:
                n = 1
            elif leaf.role == sc.ROLE_PREFIX_SUM:
                n = caps[sc.MAIN_TAG] + 1
            else:
                n = caps[leaf.size_tag]
            nbytes = leaf.extent_multiplier * n * leaf.value_type.size_bytes
            cursor += -(-nbytes // alignment) * alignment
        assert lay.total_bytes == cursor
        lay.free()

    def test_no_allocations_during_size_changes(self):
        lay = make(ly.ARENA, PARTICLE_PLAN)
        before = mc.stats().allocations
        lay.resize(sc.MAIN_TAG, 40)
        lay.resize("sensors", 700)
        lay.insert(sc.MAIN_TAG, 3, 9)
        lay.erase(sc.MAIN_TAG, 0, 20)
        lay.reserve("sensors", 1024)
        lay.shrink_to_fit(sc.MAIN_TAG)
        lay.clear("sensors")
        lay.resize("sensors", 12)
        assert mc.stats().allocations == before
        assert lay.capacity(sc.MAIN_TAG) == 64  # shrink_to_fit gives nothing back
        lay.free()

    def test_capacity_exceeded(self):
        lay = make(ly.ARENA, PARTICLE_PLAN)
        with pytest.raises(CapacityError):
            lay.resize(sc.MAIN_TAG, 65)
        with pytest.raises(CapacityError):
            lay.reserve("sensors", 1025)
        lay.resize(sc.MAIN_TAG, 64)
        with pytest.raises(CapacityError):
            lay.insert(sc.MAIN_TAG, 0, 1)
        assert lay.size(sc.MAIN_TAG) == 64  # failed op left the size alone
        lay.free()

    def test_buffer_starts_zeroed(self):
        lay = make(ly.ARENA, MIXED_PLAN)
        assert not lay.buffers()[0]._data.any()
        lay.free()


class TestAosGeometry:
    def test_record_stride_is_packed_sum(self):
        lay = make(ly.AOS, PARTICLE_PLAN)
        expected = 0
        for leaf in PARTICLE_PLAN.element_leaves():
            if leaf.size_tag == sc.MAIN_TAG:
                expected += leaf.extent_multiplier * leaf.value_type.size_bytes
        assert lay.record_stride == expected == 64
        lay.free()

    def test_interleaving_strides(self):
        lay = make(ly.AOS, PARTICLE_PLAN)
        lay.resize(sc.MAIN_TAG, 10)
        scalar = lay.column_np("energy")
        assert scalar.shape == (10,)
        assert scalar.strides == (lay.record_stride,)
        multi = lay.column_np("significance.value")
        assert multi.shape == (4, 10)
        assert multi.strides[1] == lay.record_stride
        lay.free()

    def test_side_leaves_stay_contiguous(self):
        lay = make(ly.AOS, PARTICLE_PLAN)
        lay.resize(sc.MAIN_TAG, 5)
        lay.resize("sensors", 20)
        pool = lay.column_np("sensors.value")
        assert pool.shape == (20,)
        assert pool.strides == (8,)
        prefix = lay.column_np("sensors.prefix_sum")
        assert prefix.shape == (6,)
        assert prefix.strides == (4,)
        lay.free()


class TestPerFieldGeometry:
    def test_columns_contiguous(self):
        lay = make(ly.PER_FIELD, PARTICLE_PLAN)
        lay.resize(sc.MAIN_TAG, 7)
        col = lay.column_np("origin")
        assert col.shape == (7,)
        assert col.strides == (8,)
        multi = lay.column_np("noisy_count.value")
        assert multi.shape == (4, 7)
        assert multi.strides[1] == 1  # planes are contiguous runs
        lay.free()

    def test_growth_doubles(self):
        lay = make(ly.PER_FIELD, MIXED_PLAN)
        seen = []
        for n in (1, 5, 17):
            lay.resize(sc.MAIN_TAG, n)
            seen.append(lay.capacity(sc.MAIN_TAG))
        assert seen == [4, 8, 17]
        lay.free()

    def test_shrink_to_fit_releases(self):
        lay = make(ly.PER_FIELD, MIXED_PLAN)
        lay.resize(sc.MAIN_TAG, 17)
        lay.resize(sc.MAIN_TAG, 3)
        lay.shrink_to_fit(sc.MAIN_TAG)
        assert lay.capacity(sc.MAIN_TAG) == 3
        assert lay.column_np("a").shape == (3,)
        lay.free()


class TestElementAccess:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_slot_major_flat_indexing(self, kind):
        lay = make(kind, PARTICLE_PLAN)
        lay.resize(sc.MAIN_TAG, 6)
        leaf = PARTICLE_PLAN.leaf("E_contribution.value")
        assert lay.leaf_len(leaf) == 24
        for flat in range(24):
            lay.write_element(leaf, flat, np.float32(flat * 0.5))
        col = lay.column_np(leaf)
        for k in range(4):
            for i in range(6):
                assert col[k, i] == np.float32((k * 6 + i) * 0.5)
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_round_trip_all_dtypes(self, kind):
        lay = make(kind, MIXED_PLAN)
        lay.resize(sc.MAIN_TAG, 3)
        lay.resize("j", 4)
        lay.write_element("a", 1, 2.5)
        lay.write_element("arr.value", 7, 60000)
        lay.write_element("j.value", 3, -1.25)
        lay.write_element("flag", 2, True)
        lay.write_element("offset", 0, 1e300)
        assert lay.read_element("a", 1) == np.float32(2.5)
        assert lay.read_element("arr.value", 7) == 60000
        assert lay.read_element("j.value", 3) == -1.25
        assert bool(lay.read_element("flag", 2)) is True
        assert lay.read_element("offset", 0) == 1e300
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_bounds(self, kind):
        lay = make(kind, MIXED_PLAN)
        lay.resize(sc.MAIN_TAG, 2)
        with pytest.raises(BoundsError):
            lay.read_element("a", 2)
        with pytest.raises(BoundsError):
            lay.write_element("a", -1, 0.0)
        with pytest.raises(BoundsError):
            lay.element_ref("arr.value", 6)
        with pytest.raises(BoundsError):
            lay.read_element("j.value", 0)  # jagged still empty
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_element_ref(self, kind):
        lay = make(kind, MIXED_PLAN)
        lay.resize(sc.MAIN_TAG, 4)
        ref = lay.element_ref("a", 2)
        ref.value = 9.0
        assert lay.read_element("a", 2) == np.float32(9.0)
        assert ref.value == np.float32(9.0)
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_prefix_and_global_lengths(self, kind):
        lay = make(kind, MIXED_PLAN)
        assert lay.leaf_len("offset") == 1
        assert lay.leaf_len("j.prefix_sum") == 1  # sentinel entry exists at size 0
        assert lay.read_element("j.prefix_sum", 0) == 0
        lay.resize(sc.MAIN_TAG, 5)
        assert lay.leaf_len("j.prefix_sum") == 6
        assert lay.read_element("offset", 0) == 0.0
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_sizes_do_not_leak_between_tags(self, kind):
        lay = make(kind, PARTICLE_PLAN)
        lay.resize("sensors", 9)
        assert lay.size(sc.MAIN_TAG) == 0
        assert lay.leaf_len("sensors.value") == 9
        assert lay.leaf_len("energy") == 0
        lay.free()


def _model_new(plan: sc.StoragePlan) -> dict:
    """Plain-python mirror: leaf -> list of per-plane lists."""
    model = {}
    for leaf in plan.leaves:
        n = 1 if leaf.role != sc.ROLE_ELEMENT else 0
        model[leaf.dotted] = [[0] * n for _ in range(leaf.extent_multiplier)]
    return model


def _model_leaves(plan, tag, role):
    return [lf for lf in plan.leaves if lf.size_tag == tag and lf.role == role]


def _model_resize(model, plan, tag, new, old):
    for leaf in _model_leaves(plan, tag, sc.ROLE_ELEMENT):
        for plane in model[leaf.dotted]:
            if new > old:
                plane.extend([0] * (new - old))
            else:
                del plane[new:]
    if tag == sc.MAIN_TAG:
        for leaf in [lf for lf in plan.leaves if lf.role == sc.ROLE_PREFIX_SUM]:
            for plane in model[leaf.dotted]:
                if new > old:
                    plane.extend([0] * (new - old))
                else:
                    del plane[new + 1 :]


def _model_insert(model, plan, tag, i, c):
    for leaf in _model_leaves(plan, tag, sc.ROLE_ELEMENT):
        for plane in model[leaf.dotted]:
            plane[i:i] = [0] * c
    if tag == sc.MAIN_TAG:
        for leaf in [lf for lf in plan.leaves if lf.role == sc.ROLE_PREFIX_SUM]:
            for plane in model[leaf.dotted]:
                plane[i + 1 : i + 1] = [0] * c


def _model_erase(model, plan, tag, i, c):
    for leaf in _model_leaves(plan, tag, sc.ROLE_ELEMENT):
        for plane in model[leaf.dotted]:
            del plane[i : i + c]
    if tag == sc.MAIN_TAG:
        for leaf in [lf for lf in plan.leaves if lf.role == sc.ROLE_PREFIX_SUM]:
            for plane in model[leaf.dotted]:
                del plane[i + 1 : i + 1 + c]


def _assert_matches_model(lay: ly.LayoutInstance, plan: sc.StoragePlan, model: dict):
    for leaf in plan.leaves:
        expect = model[leaf.dotted]
        n = lay.plane_len(leaf)
        for k in range(lay.plane_count(leaf)):
            got = [lay.read_element(leaf, k * n + i) for i in range(n)]
            want = [leaf.value_type.np_dtype.type(v) for v in expect[k]]
            assert got == want, f"{leaf.dotted} plane {k}: {got} != {want}"


def _representable(rng: random.Random, vt: sc.ScalarType):
    if vt.is_float:
        return float(np.float32(rng.uniform(-100, 100))) if vt.size_bytes == 4 else rng.uniform(-100, 100)
    if vt.code == "bool":
        return rng.random() < 0.5
    if vt.enum_cardinality:
        return rng.randrange(vt.enum_cardinality)
    info = np.iinfo(vt.np_dtype)
    return rng.randrange(max(info.min, -1000), min(info.max, 1000) + 1)


class TestSizeOpsAgainstModel:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_randomized_op_sequences(self, kind):
        plan = PARTICLE_PLAN
        rng = random.Random(0xC0FFEE)
        lay = make(kind, plan)
        model = _model_new(plan)
        sizes = {sc.MAIN_TAG: 0, "sensors": 0}
        for step in range(160):
            tag = rng.choice([sc.MAIN_TAG, "sensors"])
            limit = 48 if tag == sc.MAIN_TAG else 512
            op = rng.choice(["resize", "insert", "erase", "clear", "reserve", "shrink"])
            n = sizes[tag]
            if op == "resize":
                new = rng.randrange(limit)
                lay.resize(tag, new)
                _model_resize(model, plan, tag, new, n)
                sizes[tag] = new
            elif op == "insert":
                i, c = rng.randint(0, n), rng.randint(0, 5)
                if n + c <= limit:
                    lay.insert(tag, i, c)
                    _model_insert(model, plan, tag, i, c)
                    sizes[tag] = n + c
            elif op == "erase" and n:
                i = rng.randrange(n)
                c = rng.randint(0, n - i)
                lay.erase(tag, i, c)
                _model_erase(model, plan, tag, i, c)
                sizes[tag] = n - c
            elif op == "clear":
                lay.clear(tag)
                _model_resize(model, plan, tag, 0, n)
                sizes[tag] = 0
            elif op == "reserve":
                lay.reserve(tag, rng.randrange(limit))
            elif op == "shrink":
                lay.shrink_to_fit(tag)
            # sprinkle writes so shifts move real data around
            for _ in range(3):
                leaf = rng.choice(plan.leaves)
                total = lay.leaf_len(leaf)
                if not total:
                    continue
                flat = rng.randrange(total)
                val = _representable(rng, leaf.value_type)
                lay.write_element(leaf, flat, val)
                pn = lay.plane_len(leaf)
                model[leaf.dotted][flat // pn][flat % pn] = val
            if step % 20 == 19:
                _assert_matches_model(lay, plan, model)
        _assert_matches_model(lay, plan, model)
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_regrow_after_shrink_is_zeroed(self, kind):
        lay = make(kind, MIXED_PLAN)
        lay.resize(sc.MAIN_TAG, 4)
        lay.column_np("a")[:] = 7.0
        lay.column_np("arr.value")[:] = 9
        lay.resize(sc.MAIN_TAG, 2)
        lay.resize(sc.MAIN_TAG, 6)
        a = lay.column_np("a")
        assert list(a) == [7.0, 7.0, 0.0, 0.0, 0.0, 0.0]
        arr = lay.column_np("arr.value")
        assert arr[:, :2].tolist() == [[9, 9]] * 3
        assert not arr[:, 2:].any()
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_erase_then_regrow_zeroed(self, kind):
        lay = make(kind, MIXED_PLAN)
        lay.resize("j", 4)
        lay.column_np("j.value")[:] = 3.5
        lay.erase("j", 1, 2)
        lay.resize("j", 4)
        assert list(lay.column_np("j.value")) == [3.5, 3.5, 0.0, 0.0]
        lay.free()

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_insert_erase_shift_values(self, kind):
        lay = make(kind, MIXED_PLAN)
        lay.resize(sc.MAIN_TAG, 4)
        lay.column_np("a")[:] = [1.0, 2.0, 3.0, 4.0]
        lay.column_np("j.prefix_sum")[:] = [0, 1, 2, 3, 4]
        lay.insert(sc.MAIN_TAG, 1, 2)
        assert list(lay.column_np("a")) == [1.0, 0.0, 0.0, 2.0, 3.0, 4.0]
        # gap opens after the boundary entry at index i
        assert list(lay.column_np("j.prefix_sum")) == [0, 1, 0, 0, 2, 3, 4]
        lay.erase(sc.MAIN_TAG, 1, 2)
        assert list(lay.column_np("a")) == [1.0, 2.0, 3.0, 4.0]
        assert list(lay.column_np("j.prefix_sum")) == [0, 1, 2, 3, 4]
        lay.free()


class TestAccessGuards:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_mockdev_resident_faults_from_host(self, kind):
        lay = make(kind, MIXED_PLAN, mc.ContextInfo.mockdev())
        with pytest.raises(NotResizableError):
            lay.resize(sc.MAIN_TAG, 2)
        with mc.execution_scope("mockdev"):
            lay.resize(sc.MAIN_TAG, 2)
            lay.write_element("a", 0, 5.0)
            assert lay.read_element("a", 0) == np.float32(5.0)
        with pytest.raises(AccessError):
            lay.read_element("a", 0)
        with pytest.raises(AccessError):
            lay.write_element("a", 0, 1.0)
        with pytest.raises(AccessError):
            lay.column_np("a")
        lay.free()

    def test_host_resident_faults_from_mockdev_scope(self):
        lay = make(ly.PER_FIELD, MIXED_PLAN)
        lay.resize(sc.MAIN_TAG, 1)
        with mc.execution_scope("mockdev"):
            with pytest.raises(AccessError):
                lay.read_element("a", 0)
            with pytest.raises(NotResizableError):
                lay.resize(sc.MAIN_TAG, 2)
        lay.free()

    def test_engine_ops_bypass_resize_guard(self):
        lay = make(ly.PER_FIELD, MIXED_PLAN, mc.ContextInfo.mockdev())
        with lay.engine_ops():
            lay.resize(sc.MAIN_TAG, 3)
        assert lay.size(sc.MAIN_TAG) == 3
        with pytest.raises(NotResizableError):
            lay.resize(sc.MAIN_TAG, 4)
        lay.free()


class TestMigration:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_round_trip_preserves_contents(self, kind):
        lay = make(kind, PARTICLE_PLAN)
        lay.resize(sc.MAIN_TAG, 5)
        lay.resize("sensors", 11)
        rng = random.Random(7)
        written = {}
        for leaf in PARTICLE_PLAN.leaves:
            vals = [_representable(rng, leaf.value_type) for _ in range(lay.leaf_len(leaf))]
            for flat, v in enumerate(vals):
                lay.write_element(leaf, flat, v)
            written[leaf.dotted] = vals
        nbuf = len(lay.buffers())

        lay.migrate(mc.ContextInfo.mockdev())
        assert all(b.info.context == "mockdev" for b in lay.buffers())
        assert len(lay.buffers()) == nbuf
        with pytest.raises(AccessError):
            lay.read_element("energy", 0)
        with mc.execution_scope("mockdev"):
            got = [lay.read_element("energy", i) for i in range(5)]
            assert got == [np.float32(v) for v in written["energy"]]

        lay.migrate(mc.ContextInfo.host())
        for leaf in PARTICLE_PLAN.leaves:
            n = lay.plane_len(leaf)
            for k in range(lay.plane_count(leaf)):
                got = [lay.read_element(leaf, k * n + i) for i in range(n)]
                want = [leaf.value_type.np_dtype.type(v) for v in written[leaf.dotted][k * n : k * n + n]]
                assert got == want
        lay.free()

    def test_failed_migration_leaves_layout_usable(self):
        lay = make(ly.PER_FIELD, PARTICLE_PLAN)
        lay.resize(sc.MAIN_TAG, 8)
        lay.column_np("energy")[:] = 2.0
        mc.configure_mockdev(capacity_bytes=64)
        try:
            with pytest.raises(mc.MemoryContextError):
                lay.migrate(mc.ContextInfo.mockdev())
        finally:
            mc.configure_mockdev(capacity_bytes=256 * 1024 * 1024)
        assert lay.info.context == "host"
        assert list(lay.column_np("energy")) == [2.0] * 8
        lay.free()


class TestEngineRefit:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_refit_matches_source_geometry(self, kind):
        src = make(kind, PARTICLE_PLAN)
        src.resize(sc.MAIN_TAG, 13)
        src.resize("sensors", 37)
        dst = make(kind, PARTICLE_PLAN)
        with dst.engine_ops():
            dst._refit_for_engine(src)
        assert dst.size(sc.MAIN_TAG) == 13 and dst.size("sensors") == 37
        for tag in dst.tags():
            assert dst.capacity(tag) == src.capacity(tag)
        src_lens = [b.length_bytes for b in src.buffers()]
        dst_lens = [b.length_bytes for b in dst.buffers()]
        assert src_lens == dst_lens
        src.free()
        dst.free()

    def test_arena_refit_requires_same_spec(self):
        src = make(ly.ARENA, MIXED_PLAN)
        other_caps = default_caps(MIXED_PLAN)
        other_caps[sc.MAIN_TAG] = 32
        dst = ly.build_layout(ly.ARENA, MIXED_PLAN, arena=ly.ArenaSpec(other_caps))
        with pytest.raises(LayoutError):
            dst._refit_for_engine(src)
        src.free()
        dst.free()
