import numpy as np
import pytest

import poicast as pc
from poicast import synth
from poicast.casting import CastConfig, adaptive_downsample, cast_cloud
from poicast.projection import mask_to_cloud


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Absorb numba compilation before any timed assertion runs."""
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    t = np.array([[0, 1, 2]])
    pc.TriMesh(v, t).distances(np.array([[0.2, 0.2, 1.0]]))
    scene = synth.standard_scene()
    synth.render_analytic(scene, 0)
    synth.reference_raycast(scene.vertices, scene.triangles, np.zeros(3), np.array([[1.0, 1.0, 1.0]]))
    from poicast.segmentation import FallbackSegmenter

    img = np.zeros((8, 8, 3), dtype=np.uint8)
    FallbackSegmenter().track(img, np.ones((8, 8), dtype=bool))


@pytest.fixture(scope="session")
def standard_scene_session():
    return synth.standard_scene()


@pytest.fixture(scope="session")
def standard_mesh(standard_scene_session):
    scene = standard_scene_session
    return pc.TriMesh(scene.vertices, scene.recon_triangles)


@pytest.fixture(scope="session")
def standard_renders(standard_scene_session):
    """Frame renders of the intact standard scene, computed once."""
    scene = standard_scene_session
    return [synth.render_analytic(scene, i) for i in range(scene.n_frames)]


@pytest.fixture(scope="session")
def standard_casts(standard_scene_session, standard_mesh, standard_renders):
    """Per-frame cast results for the standard POI over the first 3 frames."""
    scene = standard_scene_session
    results = []
    for idx in range(3):
        res = standard_renders[idx]
        cloud = mask_to_cloud(scene.models[idx], scene.poses[idx], res.masks[0], res.depth_map)
        cloud = adaptive_downsample(cloud, CastConfig())
        results.append(cast_cloud(standard_mesh, cloud, CastConfig()))
    return results


@pytest.fixture(scope="session")
def fixture_project_dir(tmp_path_factory):
    """A fully written standard fixture project (read-only for tests)."""
    root = tmp_path_factory.mktemp("fixture") / "room"
    synth.make_fixture(root)
    return root


def copy_project(src, dst):
    import shutil

    shutil.copytree(src, dst)
    return dst


@pytest.fixture
def project_copy(fixture_project_dir, tmp_path):
    """A private mutable copy of the standard fixture project."""
    return copy_project(fixture_project_dir, tmp_path / "room")
