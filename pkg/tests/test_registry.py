import numpy as np
import pytest

from tmm import errors
from tmm.meshcore import Timestamp, deserialize_snapshot, make_mesh
from tmm.registry import (
    COLOR_CYCLE,
    LayerRegistry,
    MAX_LOADED_LAYERS,
    assign_color,
)


def simple_mesh(offset=0.0):
    return make_mesh(
        [[offset, 0, 0], [offset + 1, 0, 0], [offset, 1, 0]], [[0, 1, 2]]
    )


@pytest.fixture
def registry(tmp_path):
    reg = LayerRegistry(tmp_path / "lib")
    reg.reset_room_position([simple_mesh()])
    return reg


class TestColors:
    def test_table_cycle(self):
        assert assign_color(0) == (0, 255, 255)  # cyan
        assert assign_color(1) == (0, 255, 0)    # lime
        assert assign_color(2) == (0, 0, 255)    # blue
        assert assign_color(3) == (255, 128, 0)  # orange
        assert assign_color(4) == (255, 0, 0)    # red
        assert assign_color(5) == (255, 0, 255)  # magenta

    def test_ordinal_out_of_range(self):
        with pytest.raises(errors.OrdinalOutOfRange):
            assign_color(6)
        with pytest.raises(errors.OrdinalOutOfRange):
            assign_color(-1)

    def test_cycle_names(self):
        assert [name for name, _ in COLOR_CYCLE] == [
            "cyan", "lime", "blue", "orange", "red", "magenta",
        ]


class TestSaveLoad:
    def test_save_creates_file_and_manifest(self, registry):
        sid = registry.save_room(now=Timestamp(1000))
        files = list(registry.library_path.glob("*.tmm.xml"))
        assert len(files) == 1
        rooms = registry.list_rooms()
        assert rooms[0]["id"] == sid and not rooms[0]["loaded"]

    def test_save_load_round_trip(self, registry):
        sid = registry.save_room(now=Timestamp(1000))
        registry.load_rooms([sid])
        layer = registry.loaded[0]
        # overlay coordinates identical to the live scene (vertex-set oracle)
        live = np.sort(registry.live.meshes[0].vertices, axis=0)
        loaded = np.sort(layer.snapshot.world_meshes()[0].vertices, axis=0)
        assert np.array_equal(live, loaded)

    def test_listing_ordered_by_timestamp(self, registry):
        registry.save_room(now=Timestamp(2000))
        registry.reset_room_position([simple_mesh(5.0)])
        registry.save_room(now=Timestamp(1000))
        stamps = [r["timestamp"] for r in registry.list_rooms()]
        assert stamps == sorted(stamps)

    def test_persistence_across_restart(self, registry, tmp_path):
        sid = registry.save_room(now=Timestamp(1000))
        doc = (registry.library_path / f"{sid}.tmm.xml").read_bytes()
        again = LayerRegistry(registry.library_path)
        again.load_rooms([sid])
        assert (registry.library_path / f"{sid}.tmm.xml").read_bytes() == doc
        assert again.loaded[0].snapshot == deserialize_snapshot(doc)

    def test_load_unknown_id(self, registry):
        with pytest.raises(errors.NotFound):
            registry.load_rooms(["deadbeef"])

    def test_unload_keeps_other_colors(self, registry):
        ids = []
        for i in range(3):
            registry.reset_room_position([simple_mesh(float(i))])
            ids.append(registry.save_room(now=Timestamp(1000 + i)))
        registry.load_rooms(ids)
        colors_before = {l.snapshot.id: l.color for l in registry.loaded}
        registry.unload_room(ids[1])
        for layer in registry.loaded:
            assert layer.color == colors_before[layer.snapshot.id]

    def test_freed_color_reused_on_next_load(self, registry):
        ids = []
        for i in range(2):
            registry.reset_room_position([simple_mesh(float(i))])
            ids.append(registry.save_room(now=Timestamp(1000 + i)))
        registry.load_rooms(ids)
        registry.unload_room(ids[0])
        registry.reset_room_position([simple_mesh(9.0)])
        sid = registry.save_room(now=Timestamp(3000))
        registry.load_rooms([sid])
        new_layer = next(l for l in registry.loaded if l.snapshot.id == sid)
        assert new_layer.color_ordinal == 0  # lowest free ordinal


class TestCapacity:
    def test_cap_at_six(self, registry):
        ids = []
        for i in range(MAX_LOADED_LAYERS + 1):
            registry.reset_room_position([simple_mesh(float(i))])
            ids.append(registry.save_room(now=Timestamp(1000 + i)))
        registry.load_rooms(ids[:MAX_LOADED_LAYERS])
        with pytest.raises(errors.CapacityExceeded):
            registry.load_rooms([ids[-1]])
        assert len(registry.loaded) == MAX_LOADED_LAYERS

    def test_violating_batch_fails_atomically(self, registry):
        ids = []
        for i in range(7):
            registry.reset_room_position([simple_mesh(float(i))])
            ids.append(registry.save_room(now=Timestamp(1000 + i)))
        with pytest.raises(errors.CapacityExceeded):
            registry.load_rooms(ids)  # 7 > 6
        assert registry.loaded == []

    def test_missing_file_fails_before_capacity_mutation(self, registry):
        sid = registry.save_room(now=Timestamp(1000))
        with pytest.raises(errors.NotFound):
            registry.load_rooms([sid, "nope"])
        assert registry.loaded == []


class TestLiveLayer:
    def test_toggle(self, registry):
        assert registry.toggle_realtime_mesh() is False
        assert registry.toggle_realtime_mesh() is True

    def test_hidden_live_excluded_from_targets(self, registry):
        assert len(registry.ray_targets()) == 1
        registry.toggle_realtime_mesh()
        assert registry.ray_targets() == []
        assert len(registry.ray_targets(include_hidden=True)) == 1

    def test_reset_replaces_live_only(self, registry):
        sid = registry.save_room(now=Timestamp(1000))
        registry.load_rooms([sid])
        registry.reset_room_position([simple_mesh(3.0)])
        assert registry.live.meshes[0].vertices[0, 0] == 3.0
        assert len(registry.loaded) == 1

    def test_target_filtering_by_id(self, registry):
        sid = registry.save_room(now=Timestamp(1000))
        registry.load_rooms([sid])
        assert len(registry.ray_targets()) == 2
        only_snap = registry.ray_targets(layers=[sid])
        assert len(only_snap) == 1 and only_snap[0].layer_id == sid
