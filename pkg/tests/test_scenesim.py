import copy
import json

import numpy as np
import pytest

from tmm import errors, scenesim
from tmm.scenesim import (
    ScanConfig,
    generate_scene,
    load_script,
    run_scenario,
    sample_scan,
)
from tmm.spatial import Ray, build_index, ray_cast
from tmm.transform import rigid_from_parts, rotation_about_z

SMALL_SCENE = {
    "room": {"width": 2.0, "depth": 2.0, "height": 2.0},
    "objects": [{"id": "box", "size": [0.4, 0.4, 0.4], "position": [-0.5, 0.0, 0.2]}],
}


def small_script(steps):
    return {"name": "t", "scene": copy.deepcopy(SMALL_SCENE),
            "scan": {"edge_length": 0.2, "noise_sigma": 0.0, "pin_jitter": 0.0},
            "steps": steps}


class TestScene:
    def test_objects_must_fit_in_room(self):
        bad = copy.deepcopy(SMALL_SCENE)
        bad["objects"][0]["position"] = [1.9, 0, 0.2]
        with pytest.raises(errors.TmmError):
            generate_scene(bad)

    def test_move_records_displacement(self):
        scene = generate_scene(SMALL_SCENE)
        before = scene.object_center("box").copy()
        scene.move_object("box", rigid_from_parts(np.eye(3), [0.91, 0, 0]))
        assert np.linalg.norm(scene.object_center("box") - before) == pytest.approx(0.91)

    def test_identity_move(self):
        scene = generate_scene(SMALL_SCENE)
        before = scene.object_center("box").copy()
        scene.move_object("box", rigid_from_parts(np.eye(3), [0, 0, 0]))
        assert np.linalg.norm(scene.object_center("box") - before) == 0.0

    def test_translations_add(self):
        scene = generate_scene(SMALL_SCENE)
        before = scene.object_center("box").copy()
        scene.move_object("box", rigid_from_parts(np.eye(3), [0.3, 0, 0]))
        scene.move_object("box", rigid_from_parts(np.eye(3), [0.2, 0.1, 0]))
        net = scene.object_center("box") - before
        assert np.allclose(net, [0.5, 0.1, 0.0])

    def test_rotation_about_object_center(self):
        scene = generate_scene(SMALL_SCENE)
        center = scene.object_center("box").copy()
        scene.move_object("box", rigid_from_parts(rotation_about_z(np.pi / 4), [0, 0, 0]))
        assert np.allclose(scene.object_center("box"), center)

    def test_feature_points(self):
        scene = generate_scene(SMALL_SCENE)
        point, normal = scene.feature_point("box", "top")
        assert np.allclose(point, [-0.5, 0.0, 0.4])
        assert np.allclose(normal, [0, 0, 1])
        point, _ = scene.feature_point("box", "top@1,1")
        assert np.allclose(point, [-0.3, 0.2, 0.4])


class TestSampleScan:
    def test_noiseless_surfaces_exact(self):
        scene = generate_scene(SMALL_SCENE)
        config = ScanConfig(edge_length=0.25, noise_sigma=0.0)
        meshes = sample_scan(scene, config, np.random.default_rng(0))
        assert len(meshes) == 12  # 6 room faces + 6 object faces
        idx = build_index(meshes)
        hit = ray_cast([idx], Ray([-0.5, 0.0, 1.5], [0, 0, -1]))
        assert hit is not None
        assert hit.point[2] == pytest.approx(0.4, abs=1e-12)  # box top

    def test_deterministic_for_seed(self):
        scene = generate_scene(SMALL_SCENE)
        config = ScanConfig(edge_length=0.25, noise_sigma=0.02)
        a = sample_scan(scene, config, np.random.default_rng(5))
        b = sample_scan(generate_scene(SMALL_SCENE), config, np.random.default_rng(5))
        for ma, mb in zip(a, b):
            assert ma.vertices.tobytes() == mb.vertices.tobytes()

    def test_noise_scales_surface_deviation(self):
        # hit-point deviation from the true plane grows with noise_sigma
        deviations = {}
        for sigma in (0.0, 0.005, 0.02):
            devs = []
            for seed in range(50):
                scene = generate_scene(SMALL_SCENE)
                config = ScanConfig(edge_length=0.25, noise_sigma=sigma)
                idx = build_index(sample_scan(scene, config, np.random.default_rng(seed)))
                hit = ray_cast([idx], Ray([-0.5, 0.0, 1.5], [0, 0, -1]))
                devs.append(abs(hit.point[2] - 0.4))
            deviations[sigma] = float(np.mean(devs))
        assert deviations[0.0] < 1e-12
        assert 2.0 < deviations[0.02] / deviations[0.005] < 6.0


class TestScenarioRunner:
    def test_noiseless_fidelity(self, tmp_path):
        script = small_script([
            {"save": {}},
            {"move": {"object": "box", "translate": [0.7, 0.0, 0.0]}},
            {"load": {"save": 0}},
            {"pin": {"object": "box", "feature": "top@-0.5,-0.5", "layer": 0}},
            {"pin": {"object": "box", "feature": "top@-0.5,-0.5", "layer": "live"}},
            {"measure": {}},
        ])
        report = run_scenario(script, tmp_path / "lib", seed=0)
        m = report["measurements"][0]
        assert abs(m["measured_m"] - 0.7) < 1e-6
        assert abs(m["measured_m"] - m["ground_truth_m"]) < 1e-6

    def test_cross_epoch_elapsed_time(self, tmp_path):
        script = small_script([
            {"save": {}},
            {"move": {"object": "box", "translate": [0.3, 0.0, 0.0]}},
            {"load": {"save": 0}},
            {"pin": {"object": "box", "feature": "top", "layer": 0}},
            {"pin": {"object": "box", "feature": "top", "layer": "live"}},
            {"measure": {}},
        ])
        report = run_scenario(script, tmp_path / "lib", seed=0)
        # save at step 1, live pin at step 5: four simulated minutes apart
        assert report["measurements"][0]["elapsed_s"] == pytest.approx(240.0)

    def test_assert_step_failure_reported(self, tmp_path):
        script = small_script([
            {"save": {}},
            {"load": {"save": 0}},
            {"pin": {"object": "box", "feature": "top", "layer": 0}},
            {"pin": {"object": "box", "feature": "top@0.5,0.5", "layer": "live"}},
            {"measure": {}},
            {"assert": {"expected": 99.0, "tol_abs": 0.001}},
        ])
        report = run_scenario(script, tmp_path / "lib", seed=0)
        assert report["passed"] is False
        with pytest.raises(errors.AssertionFailed):
            run_scenario(script, tmp_path / "lib2", seed=0, strict=True)

    def test_report_determinism(self, tmp_path):
        script = small_script([
            {"save": {}},
            {"move": {"object": "box", "translate": [0.4, 0.0, 0.0]}},
            {"load": {"save": 0}},
            {"pin": {"object": "box", "feature": "top", "layer": 0}},
            {"pin": {"object": "box", "feature": "top", "layer": "live"}},
            {"measure": {}},
        ])
        script["scan"]["noise_sigma"] = 0.01
        script["scan"]["pin_jitter"] = 0.005
        a = run_scenario(script, tmp_path / "a", seed=42)
        b = run_scenario(script, tmp_path / "b", seed=42)
        a.pop("wall_time_s")
        b.pop("wall_time_s")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_view_manipulation_leaves_measurements(self, tmp_path):
        script = small_script([
            {"save": {}},
            {"load": {"save": 0}},
            {"pin": {"object": "box", "feature": "top@-0.5,-0.5", "layer": 0}},
            {"pin": {"object": "box", "feature": "top@0.5,0.5", "layer": "live"}},
            {"measure": {}},
            {"manipulate_view": {"scale": 0.25, "rotate_z_deg": 30.0}},
        ])
        report = run_scenario(script, tmp_path / "lib", seed=0)
        step = next(s for s in report["steps"] if s["action"] == "manipulate_view")
        assert step["measurements_unchanged"] is True
        assert step["scale"] == pytest.approx(0.25)


class TestFixtures:
    def test_fixture_files_load(self):
        for name in ("verify_s6", "demo_s7"):
            script = load_script(scenesim.fixture_path(name))
            assert script["name"] == name
            assert len(script["steps"]) > 0
