import io

import numpy as np
import pytest
from PIL import Image

from cxrgen import neuralnet as nn
from cxrgen.bundle import ModelBundle, quantize_network
from cxrgen.classifier import ABNORMALITY_TAGS, Abnormality, TrainedModel
from cxrgen.reportgen import default_master_text


def pgm_bytes(arr) -> bytes:
    """Encode a uint8 2-D array as binary PGM (P5, maxval 255)."""
    arr = np.asarray(arr, dtype=np.uint8)
    h, w = arr.shape
    return f"P5\n{w} {h}\n255\n".encode() + arr.tobytes()


def png_bytes(arr) -> bytes:
    """Encode a uint8 array (H,W) or (H,W,3) as PNG via Pillow."""
    arr = np.asarray(arr, dtype=np.uint8)
    img = Image.fromarray(arr, mode="L" if arr.ndim == 2 else "RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="session")
def fixture_image_bytes() -> bytes:
    """Deterministic 200x256 gradient PGM used by all golden tests."""
    y, x = np.mgrid[0:200, 0:256]
    arr = ((x + 2 * y) % 256).astype(np.uint8)
    return pgm_bytes(arr)


@pytest.fixture(scope="session")
def fixture_bundle() -> ModelBundle:
    """Three seeded untrained networks, quantized as persistence would."""
    models = {}
    for seed, tag in enumerate(ABNORMALITY_TAGS, start=1):
        net = nn.build_network(width=8, seed=seed)
        quantize_network(net)
        models[tag] = TrainedModel(
            abnormality=Abnormality(tag),
            network=net,
            threshold=0.5,
            train_accuracy=0.9,
            test_accuracy=0.85,
        )
    return ModelBundle(models=models, master_text=default_master_text())


def tiny_constant_model(p_logit: float = 0.0) -> TrainedModel:
    """Cheap 2x2-input model emitting sigmoid(p_logit) for any input."""
    net = nn.Network(
        layers=[
            nn.Flatten(),
            nn.Dense(np.zeros((1, 4)), np.array([p_logit], dtype=np.float64)),
            nn.Sigmoid(),
        ],
        input_shape=(1, 2, 2),
    )
    return TrainedModel(abnormality=Abnormality("cardiomegaly"), network=net)


# Status lines recorded by the acceptance suite; printed after capture ends
# so they are always visible in the terminal output.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
