"""Interactive segmentation providers and forward mask propagation.

Two providers implement one contract: a built-in seeded region grower that
needs no learned model (so the whole pipeline runs headless), and an HTTP
client for a hosted segmentation service. Either way, returned masks must
respect prompt polarity: every positive prompt pixel inside the mask, every
negative one outside; violating responses are rejected.

Propagation follows a local temporal control policy: masks are kept only
for a contiguous run of frames starting at the anchor and tracking stops
for good the first time the object leaves view. Repetitive indoor layouts
make anything else drift onto lookalike objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import httpx
import numpy as np
from numba import njit

from .camera import Pixel
from .errors import NoPositivePromptError, ProviderUnavailableError
from .images import encode_png_b64
from .projection import SegMask
from .rle import decode_mask, encode_mask

TAU_DEFAULT = 24.0  # per-channel color distance, out of 255
MIN_TRACK_AREA = 25  # below this the object is treated as out of view
PROVIDER_TIMEOUT_S = 120.0  # ~3x the typical hosted-model latency per annotation

POSITIVE = "positive"
NEGATIVE = "negative"

EXIT_OBJECT = "object_exited"
EXIT_SEQUENCE = "sequence_end"
EXIT_PROVIDER = "provider_error"


@dataclass(frozen=True)
class PromptPoint:
    pixel: Pixel
    polarity: str

    def __post_init__(self):
        if self.polarity not in (POSITIVE, NEGATIVE):
            raise ValueError(f"polarity must be positive|negative, got {self.polarity!r}")

    def to_dict(self) -> dict:
        return {"u": self.pixel.u, "v": self.pixel.v, "polarity": self.polarity}

    @classmethod
    def from_dict(cls, d: dict) -> "PromptPoint":
        return cls(pixel=Pixel(float(d["u"]), float(d["v"])), polarity=str(d["polarity"]))


@dataclass
class AnnotationSession:
    """One in-progress annotation: anchor frame, prompts, current mask."""

    id: str
    frame_id: str
    label: str
    description: str = ""
    prompts: list[PromptPoint] = field(default_factory=list)
    current_mask: SegMask | None = None
    state: str = "drafting"  # drafting | confirmed | propagated | failed

    def confirm(self) -> None:
        if self.current_mask is None or self.current_mask.area == 0:
            raise ValueError("cannot confirm a session without a non-empty mask")
        self.state = "confirmed"


@dataclass
class PropagationResult:
    session_id: str
    masks: dict[str, SegMask]  # contiguous run starting at the anchor frame
    termination_frame: str | None
    termination_reason: str


@njit(cache=True)
def _grow(img, seed_r, seed_c, tau):
    """FIFO region grow from one seed; running-mean color gate, 4-connected."""
    h, w = img.shape[0], img.shape[1]
    mask = np.zeros((h, w), dtype=np.bool_)
    qr = np.empty(h * w, dtype=np.int64)
    qc = np.empty(h * w, dtype=np.int64)
    mask[seed_r, seed_c] = True
    qr[0] = seed_r
    qc[0] = seed_c
    head = 0
    tail = 1
    s0 = img[seed_r, seed_c, 0]
    s1 = img[seed_r, seed_c, 1]
    s2 = img[seed_r, seed_c, 2]
    count = 1.0
    while head < tail:
        r = qr[head]
        c = qc[head]
        head += 1
        m0 = s0 / count
        m1 = s1 / count
        m2 = s2 / count
        for k in range(4):
            if k == 0:
                rr, cc = r - 1, c
            elif k == 1:
                rr, cc = r + 1, c
            elif k == 2:
                rr, cc = r, c - 1
            else:
                rr, cc = r, c + 1
            if rr < 0 or rr >= h or cc < 0 or cc >= w or mask[rr, cc]:
                continue
            d0 = abs(img[rr, cc, 0] - m0)
            d1 = abs(img[rr, cc, 1] - m1)
            d2 = abs(img[rr, cc, 2] - m2)
            if d0 <= tau and d1 <= tau and d2 <= tau:
                mask[rr, cc] = True
                s0 += img[rr, cc, 0]
                s1 += img[rr, cc, 1]
                s2 += img[rr, cc, 2]
                count += 1.0
                qr[tail] = rr
                qc[tail] = cc
                tail += 1
    return mask


def validate_polarity(bits: np.ndarray, prompts: list[PromptPoint]) -> bool:
    """True iff positives are inside the mask and negatives outside."""
    for p in prompts:
        r, c = int(p.pixel.v), int(p.pixel.u)
        if p.polarity == POSITIVE and not bits[r, c]:
            return False
        if p.polarity == NEGATIVE and bits[r, c]:
            return False
    return True


class FallbackSegmenter:
    """Seeded color region growing; deterministic for fixed tau and prompts."""

    def __init__(self, tau: float = TAU_DEFAULT):
        self.tau = float(tau)

    def segment(self, image: np.ndarray, prompts: list[PromptPoint]) -> np.ndarray:
        positives = [p for p in prompts if p.polarity == POSITIVE]
        negatives = [p for p in prompts if p.polarity == NEGATIVE]
        if not positives:
            raise NoPositivePromptError("at least one positive prompt is required")
        img = np.ascontiguousarray(image, dtype=np.float64)
        h, w = img.shape[:2]
        bits = np.zeros((h, w), dtype=bool)
        for p in positives:
            r, c = int(p.pixel.v), int(p.pixel.u)
            if not (0 <= r < h and 0 <= c < w):
                raise ValueError(f"prompt ({p.pixel.u}, {p.pixel.v}) outside {w}x{h} frame")
            bits |= _grow(img, r, c, self.tau)
        for p in negatives:
            r, c = int(p.pixel.v), int(p.pixel.u)
            if not (0 <= r < h and 0 <= c < w):
                raise ValueError(f"prompt ({p.pixel.u}, {p.pixel.v}) outside {w}x{h} frame")
            if bits[r, c]:
                bits &= ~_grow(img, r, c, self.tau)
        # the contract is pixel-exact on the prompts themselves
        for p in positives:
            bits[int(p.pixel.v), int(p.pixel.u)] = True
        for p in negatives:
            bits[int(p.pixel.v), int(p.pixel.u)] = False
        return bits

    def track(self, image: np.ndarray, previous_mask: np.ndarray, reference_color=None) -> np.ndarray:
        """Re-seed from the previous mask centroid; empty when the seed misses.

        With a reference color (the tracked object's signature from the
        anchor frame) the seed must still look like the object, otherwise
        the tracker would happily re-grow whatever replaced it.
        """
        rows, cols = np.nonzero(previous_mask)
        if len(rows) == 0:
            return np.zeros(image.shape[:2], dtype=bool)
        r = int(round(rows.mean()))
        c = int(round(cols.mean()))
        h, w = image.shape[:2]
        if not (0 <= r < h and 0 <= c < w):
            return np.zeros((h, w), dtype=bool)
        if reference_color is not None:
            if np.abs(image[r, c].astype(np.float64) - reference_color).max() > self.tau:
                return np.zeros((h, w), dtype=bool)
        img = np.ascontiguousarray(image, dtype=np.float64)
        return np.asarray(_grow(img, r, c, self.tau))

    @staticmethod
    def region_color(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return image[mask].astype(np.float64).mean(axis=0)


def propagate(
    session: AnnotationSession,
    frames: list[tuple[str, np.ndarray]],
    segmenter: FallbackSegmenter | None = None,
) -> PropagationResult:
    """Extend the confirmed anchor mask forward over consecutive frames.

    `frames` must start at the anchor frame. Tracking terminates at the
    first empty/vanishing mask (object left view), at sequence end, or when
    the provider errors; it never resumes afterwards.
    """
    if session.state not in ("confirmed", "propagated"):
        raise ValueError("session must be confirmed before propagation")
    if not frames or frames[0][0] != session.frame_id:
        raise ValueError("frame list must start at the session's anchor frame")
    if segmenter is None:
        segmenter = FallbackSegmenter()

    anchor_mask = session.current_mask
    masks: dict[str, SegMask] = {session.frame_id: anchor_mask}
    prev = anchor_mask.bits
    reference = FallbackSegmenter.region_color(frames[0][1], anchor_mask.bits)
    termination_frame = None
    reason = EXIT_SEQUENCE
    for frame_id, image in frames[1:]:
        try:
            bits = segmenter.track(image, prev, reference_color=reference)
        except Exception:
            termination_frame = frame_id
            reason = EXIT_PROVIDER
            break
        area = int(bits.sum())
        if area < MIN_TRACK_AREA:
            termination_frame = frame_id
            reason = EXIT_OBJECT
            break
        rows, cols = np.nonzero(bits)
        r, c = rows.mean(), cols.mean()
        if not (0 <= r < bits.shape[0] and 0 <= c < bits.shape[1]):
            termination_frame = frame_id
            reason = EXIT_OBJECT
            break
        masks[frame_id] = SegMask(bits=bits, frame_id=frame_id)
        prev = bits
    session.state = "propagated"
    return PropagationResult(
        session_id=session.id,
        masks=masks,
        termination_frame=termination_frame,
        termination_reason=reason,
    )


class RemoteProvider:
    """HTTP client for a hosted segmentation service.

    One retry on transport errors; responses are validated (dimensions must
    match the frame, polarity must hold) and rejected as provider failures
    otherwise.
    """

    def __init__(self, endpoint: str, timeout: float = PROVIDER_TIMEOUT_S, client: httpx.Client | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        last_exc = None
        for _ in range(2):  # initial attempt + one retry
            try:
                resp = self._client.post(self.endpoint + path, json=payload, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                raise ProviderUnavailableError(
                    f"provider returned {resp.status_code} for {path}: {resp.text[:200]}"
                )
            return resp.json()
        raise ProviderUnavailableError(f"provider unreachable after retry: {last_exc}")

    def segment(self, image: np.ndarray, prompts: list[PromptPoint], frame_id: str = "") -> np.ndarray:
        if not any(p.polarity == POSITIVE for p in prompts):
            raise NoPositivePromptError("at least one positive prompt is required")
        h, w = image.shape[:2]
        body = {
            "frame_id": frame_id,
            "image_b64": encode_png_b64(image),
            "points": [p.to_dict() for p in prompts],
        }
        data = self._post("/segment", body)
        if int(data.get("width", -1)) != w or int(data.get("height", -1)) != h:
            raise ProviderUnavailableError(
                f"provider mask is {data.get('width')}x{data.get('height')}, frame is {w}x{h}"
            )
        bits = decode_mask(data["mask_rle"], w, h)
        if not validate_polarity(bits, prompts):
            raise ProviderUnavailableError("provider mask violates prompt polarity")
        return bits

    def propagate_refs(
        self,
        session_id: str,
        anchor_frame_id: str,
        anchor_mask: np.ndarray,
        frame_refs: list[str],
        frame_size: tuple[int, int],
    ):
        """Propagate by frame reference; the provider resolves the frames."""
        h, w = anchor_mask.shape
        body = {
            "session_id": session_id,
            "anchor_frame_id": anchor_frame_id,
            "mask_rle": encode_mask(anchor_mask),
            "width": w,
            "height": h,
            "frame_refs": list(frame_refs),
        }
        data = self._post("/propagate", body)
        fw, fh = frame_size
        masks = []
        for item in data.get("masks", []):
            bits = decode_mask(item["mask_rle"], fw, fh)
            masks.append((str(item["frame_id"]), bits))
        return masks, str(data.get("termination_reason", EXIT_SEQUENCE))
