import httpx
import numpy as np
import pytest

from poicast.camera import Pixel
from poicast.errors import NoPositivePromptError, ProviderUnavailableError
from poicast.projection import SegMask
from poicast.rle import encode_mask
from poicast.segmentation import (
    EXIT_OBJECT,
    EXIT_PROVIDER,
    EXIT_SEQUENCE,
    AnnotationSession,
    FallbackSegmenter,
    PromptPoint,
    RemoteProvider,
    propagate,
    validate_polarity,
)


def flat_image(h, w, color):
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = color
    return img


def square_scene(square_xy=(30, 30), size=40, h=100, w=120):
    """Red square on a blue field."""
    img = flat_image(h, w, (10, 20, 200))
    x, y = square_xy
    img[y:y + size, x:x + size] = (220, 30, 30)
    return img


def pos(u, v):
    return PromptPoint(pixel=Pixel(u, v), polarity="positive")


def neg(u, v):
    return PromptPoint(pixel=Pixel(u, v), polarity="negative")


def test_flat_region_segments_exactly():
    img = square_scene()
    mask = FallbackSegmenter().segment(img, [pos(45, 45)])
    assert mask.sum() == 1600
    assert mask[30:70, 30:70].all()


def test_negative_prompt_carves_region():
    img = square_scene()
    seg = FallbackSegmenter()
    full = seg.segment(img, [pos(45, 45)])
    carved = seg.segment(img, [pos(45, 45), neg(50, 50)])
    assert not carved[50, 50]
    assert carved.sum() < full.sum()
    assert carved[45, 45]  # the positive prompt itself always stays


def test_no_positive_prompt_raises():
    with pytest.raises(NoPositivePromptError):
        FallbackSegmenter().segment(square_scene(), [neg(45, 45)])


def test_fallback_is_deterministic():
    img = square_scene()
    seg = FallbackSegmenter()
    prompts = [pos(45, 45), pos(60, 40)]
    a = seg.segment(img, prompts)
    b = seg.segment(img, prompts)
    assert np.array_equal(a, b)


def test_validate_polarity():
    bits = np.zeros((10, 10), dtype=bool)
    bits[2, 3] = True
    assert validate_polarity(bits, [pos(3, 2)])
    assert not validate_polarity(bits, [pos(5, 5)])
    assert not validate_polarity(bits, [neg(3, 2)])


def make_session(img, seg):
    mask = seg.segment(img, [pos(45, 45)])
    session = AnnotationSession(
        id="s1",
        frame_id="f0",
        label="door",
        prompts=[pos(45, 45)],
        current_mask=SegMask(bits=mask, frame_id="f0"),
    )
    session.confirm()
    return session


def test_propagation_tracks_until_object_exits():
    seg = FallbackSegmenter()
    frames = []
    for k in range(10):
        # square translates 10 px/frame toward the right edge, fully gone at k=7
        frames.append((f"f{k}", square_scene(square_xy=(30 + 10 * k, 30), w=100)))
    session = make_session(frames[0][1], seg)
    result = propagate(session, frames, segmenter=seg)
    assert sorted(result.masks) == [f"f{k}" for k in range(7)]
    assert result.termination_reason == EXIT_OBJECT
    assert result.termination_frame == "f7"
    for mask in result.masks.values():
        assert mask.area >= 25


def test_propagation_static_scene_runs_to_sequence_end():
    seg = FallbackSegmenter()
    img = square_scene()
    frames = [(f"f{k}", img) for k in range(5)]
    session = make_session(img, seg)
    result = propagate(session, frames, segmenter=seg)
    assert len(result.masks) == 5
    assert result.termination_reason == EXIT_SEQUENCE
    assert result.termination_frame is None


def test_propagation_provider_error_keeps_prefix():
    class Flaky(FallbackSegmenter):
        def __init__(self):
            super().__init__()
            self.calls = 0

        def track(self, image, previous_mask, reference_color=None):
            self.calls += 1
            if self.calls == 3:
                raise RuntimeError("backend fell over")
            return super().track(image, previous_mask, reference_color)

    seg = Flaky()
    img = square_scene()
    frames = [(f"f{k}", img) for k in range(6)]
    session = make_session(img, seg)
    result = propagate(session, frames, segmenter=seg)
    assert sorted(result.masks) == ["f0", "f1", "f2"]
    assert result.termination_reason == EXIT_PROVIDER
    assert result.termination_frame == "f3"


def test_propagation_requires_confirmed_anchor_start():
    seg = FallbackSegmenter()
    img = square_scene()
    session = make_session(img, seg)
    with pytest.raises(ValueError):
        propagate(session, [("other", img)], segmenter=seg)


def test_propagation_never_resumes():
    # frames where the object vanishes then reappears: the run must stop at
    # the first gap and not pick the object back up
    seg = FallbackSegmenter()
    img = square_scene()
    blank = flat_image(100, 120, (10, 20, 200))
    frames = [("f0", img), ("f1", img), ("f2", blank), ("f3", img), ("f4", img)]
    session = make_session(img, seg)
    result = propagate(session, frames, segmenter=seg)
    assert sorted(result.masks) == ["f0", "f1"]
    assert result.termination_frame == "f2"
    assert result.termination_reason == EXIT_OBJECT


# -- remote provider client ---------------------------------------------------

def test_remote_segment_against_stub_server():
    from fastapi.testclient import TestClient

    from poicast.service import create_provider_app

    app = create_provider_app()
    stub = TestClient(app)

    class Bridge(httpx.BaseTransport):
        def handle_request(self, request):
            resp = stub.request(
                request.method,
                str(request.url.raw_path.decode()),
                content=request.read(),
                headers=dict(request.headers),
            )
            return httpx.Response(resp.status_code, content=resp.content, headers=resp.headers)

    client = httpx.Client(transport=Bridge())
    provider = RemoteProvider("http://stub", client=client)
    img = square_scene()
    bits = provider.segment(img, [pos(45, 45)], frame_id="f0")
    assert bits.sum() == 1600


def test_provider_propagate_accepts_raw_png_mask(tmp_path):
    import base64
    import io

    from fastapi.testclient import TestClient
    from PIL import Image

    from poicast.images import save_image_rgb
    from poicast.rle import decode_mask
    from poicast.service import create_provider_app

    img = square_scene()
    for k in range(3):
        save_image_rgb(tmp_path / f"f{k}.png", img)
    seg = FallbackSegmenter()
    anchor = seg.segment(img, [pos(45, 45)])
    buf = io.BytesIO()
    Image.fromarray(anchor.astype(np.uint8) * 255, mode="L").save(buf, format="PNG")

    client = TestClient(create_provider_app(frames_dir=tmp_path))
    resp = client.post(
        "/propagate",
        json={
            "session_id": "s",
            "anchor_frame_id": "f0",
            "mask_png_b64": base64.b64encode(buf.getvalue()).decode("ascii"),
            "frame_refs": ["f1", "f2"],
        },
    )
    assert resp.status_code == 200
    data = resp.json()
    assert [m["frame_id"] for m in data["masks"]] == ["f1", "f2"]
    h, w = anchor.shape
    assert decode_mask(data["masks"][0]["mask_rle"], w, h).sum() == anchor.sum()


def test_remote_retries_once_then_fails():
    attempts = []

    def handler(request):
        attempts.append(1)
        raise httpx.ConnectError("nope", request=request)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    provider = RemoteProvider("http://down", client=client)
    with pytest.raises(ProviderUnavailableError):
        provider.segment(square_scene(), [pos(45, 45)])
    assert len(attempts) == 2  # initial call + exactly one retry


def test_remote_rejects_dimension_mismatch():
    def handler(request):
        return httpx.Response(200, json={"mask_rle": [4], "width": 2, "height": 2})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    provider = RemoteProvider("http://bad", client=client)
    with pytest.raises(ProviderUnavailableError, match="2x2"):
        provider.segment(square_scene(), [pos(45, 45)])


def test_remote_rejects_polarity_violation():
    h, w = 100, 120
    empty = np.zeros((h, w), dtype=bool)

    def handler(request):
        return httpx.Response(200, json={"mask_rle": encode_mask(empty), "width": w, "height": h})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    provider = RemoteProvider("http://lying", client=client)
    with pytest.raises(ProviderUnavailableError, match="polarity"):
        provider.segment(square_scene(), [pos(45, 45)])


def test_remote_http_error_status():
    def handler(request):
        return httpx.Response(503, text="busy")

    client = httpx.Client(transport=httpx.MockTransport(handler))
    provider = RemoteProvider("http://busy", client=client)
    with pytest.raises(ProviderUnavailableError, match="503"):
        provider.segment(square_scene(), [pos(45, 45)])
