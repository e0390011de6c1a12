import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def random_units(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def default_run():
    from anthrograsp.pipeline import PipelineConfig, run_pipeline
    return run_pipeline(PipelineConfig(metric_samples=20000))


def smooth_field(seed, n=64, sigma=4.0):
    """Random smooth occupancy-like field in [0, 1] on an n^3 unit-cube grid."""
    from scipy import ndimage
    from anthrograsp.volume import GridSpec, OccupancyGrid
    g = np.random.default_rng(seed).normal(size=(n, n, n))
    g = ndimage.gaussian_filter(g, sigma, mode="wrap")
    g = (g - g.min()) / (g.max() - g.min())
    spec = GridSpec(resolution=n)
    return OccupancyGrid(g, spec.origin, spec.voxel_size)


def sphere_grid(r=0.25, n=64, center=(0, 0, 0)):
    from anthrograsp.volume import GridSpec, OccupancyGrid, smooth
    spec = GridSpec(resolution=n)
    lat = OccupancyGrid(np.zeros((n, n, n)), spec.origin, spec.voxel_size)
    inside = np.linalg.norm(lat.centers() - np.asarray(center), axis=1).reshape(lat.shape) <= r
    return OccupancyGrid(smooth(inside), spec.origin, spec.voxel_size)


# -- acceptance summary ---------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion and assert it."""
    def record(number: int, title: str, passed: bool, detail: str):
        ACCEPTANCE[number] = f"criterion {number} {'PASS' if passed else 'FAIL'} [{title}] {detail}"
        assert passed, ACCEPTANCE[number]
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
