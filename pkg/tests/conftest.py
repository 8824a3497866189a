import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hitloop import _kernels  # noqa: E402

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger jit compilation once so timed tests measure steady state."""
    import numpy as np

    mat = np.linspace(0.0, 1.0, 12).reshape(4, 3)
    _kernels.perdim_entropy(mat, 3)
    corners = np.array([[0.0, 0.0, 1.0, 1.0], [0.5, 0.5, 2.0, 2.0]])
    _kernels.iou_matrix(corners, corners)
    yield


@pytest.fixture(scope="session")
def frames_dir(tmp_path_factory) -> Path:
    """A small deterministic scene corpus shared across tests."""
    from hitloop.mocks.frames import generate

    out = tmp_path_factory.mktemp("frames")
    generate(out, count=8, seed=11, width=64, height=48)
    return out
