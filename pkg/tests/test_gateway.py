"""Wire protocol: encodings, transports, validation, and mock backends."""

import json
import sys
import threading
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from vividforge.core import FrameSequence
from vividforge.errors import (
    BackendFailure,
    BackendTimeoutError,
    ProtocolError,
    ValidationFailureError,
)
from vividforge.gateway import (
    BackendDescriptor,
    Gateway,
    SubprocessSession,
    decode_mask,
    encode_image,
    decode_image,
    encode_mask_rle,
)
from vividforge.mockbackend import handle

from tests.conftest import noise_frames, paint


class TestEncodings:
    def test_image_roundtrip(self, rng):
        frame = rng.integers(0, 256, (12, 9, 3)).astype(np.uint8)
        assert np.array_equal(decode_image(encode_image(frame)), frame)

    def test_rle_roundtrip(self, rng):
        for _ in range(20):
            mask = (rng.random((11, 7)) < 0.4).astype(np.uint8) * 255
            payload = encode_mask_rle(mask)
            assert np.array_equal(decode_mask(payload, 7, 11), mask)

    def test_rle_all_zero_and_all_set(self):
        zero = np.zeros((4, 5), np.uint8)
        assert encode_mask_rle(zero)["rle"] == [20]
        full = np.full((4, 5), 255, np.uint8)
        assert encode_mask_rle(full)["rle"] == [0, 20]

    def test_rle_wrong_sum_rejected(self):
        with pytest.raises(ValidationFailureError):
            decode_mask({"rle": [3, 2], "size": [4, 5]}, 5, 4)

    def test_rle_wrong_size_rejected(self):
        with pytest.raises(ValidationFailureError):
            decode_mask({"rle": [20], "size": [4, 5]}, 7, 11)

    def test_png_mask_binarized_at_128(self):
        gray = np.array([[0, 127], [128, 255]], np.uint8)
        payload = encode_image(gray)
        mask = decode_mask({"png_b64": payload["png_b64"]}, 2, 2)
        assert mask.tolist() == [[0, 0], [255, 255]]


class TestMockBackends:
    def test_tagger_sees_red_as_car(self, rng):
        frames = noise_frames(rng, 1, 32, 32)
        paint(frames, 0, 4, 16, 6, 20, (230, 20, 20))
        with Gateway() as gw:
            assert gw.tag_frame(frames[0]) == ["car"]

    def test_segmenter_recovers_rectangle(self, rng):
        frames = noise_frames(rng, 1, 32, 32)
        paint(frames, 0, 4, 16, 6, 20, (230, 20, 20))
        with Gateway() as gw:
            dets = gw.detect_label(frames[0], "car")
            assert len(dets) == 1 and dets[0].box == (6, 4, 20, 16)
            mask = gw.segment_box(frames[0], dets[0].box)
        expected = np.zeros((32, 32), np.uint8)
        expected[4:16, 6:20] = 255
        assert np.array_equal(mask, expected)

    def test_propagation_tracks_motion(self, rng):
        frames = noise_frames(rng, 3, 24, 24)
        for i in range(3):
            paint(frames, i, 4, 10, 4 + i, 10 + i, (230, 20, 20))
        seq = FrameSequence(frames, Fraction(30), "t")
        mask0 = np.zeros((24, 24), np.uint8)
        mask0[4:10, 4:10] = 255
        with Gateway() as gw:
            masks = gw.propagate_mask(seq, mask0)
        for i in range(3):
            expected = np.zeros((24, 24), np.uint8)
            expected[4:10, 4 + i : 10 + i] = 255
            assert np.array_equal(masks.masks[i], expected)

    def test_scorer_constant(self, rng):
        with Gateway() as gw:
            frame = noise_frames(rng, 1, 8, 8)[0]
            assert gw.score_frame(frame, "anything") == 0.21

    def test_flow_roundtrip_via_sidecar(self, rng, tmp_path):
        base = rng.integers(0, 256, (64, 64, 3)).astype(np.uint8)
        shifted = np.roll(base, 2, axis=1)
        with Gateway(scratch_dir=str(tmp_path)) as gw:
            flow = gw.estimate_flow(base, shifted)
        assert flow.shape == (64, 64, 2)
        assert abs(flow[32, 32, 0] - 2.0) <= 1.0
        assert abs(flow[32, 32, 1]) <= 1.0

    def test_unknown_method_for_role(self):
        raw = handle("tagger", json.dumps({"id": 1, "method": "detect", "params": {}}))
        response = json.loads(raw)
        assert response["ok"] is False

    def test_ping(self):
        with Gateway() as gw:
            assert gw.ping("tagger")["role"] == "tagger"


class TestSubprocessTransport:
    def cmd(self, role: str) -> str:
        return f"{sys.executable} -m vividforge.mockbackend --role {role}"

    def test_tag_over_subprocess(self, rng):
        frames = noise_frames(rng, 1, 24, 24)
        paint(frames, 0, 2, 12, 2, 12, (230, 20, 20))
        descriptors = {"tagger": BackendDescriptor("tagger", "subprocess", self.cmd("tagger"))}
        with Gateway(descriptors) as gw:
            assert gw.tag_frame(frames[0]) == ["car"]

    def test_malformed_response_is_protocol_error(self):
        command = (
            f"{sys.executable} -c "
            '"import sys; sys.stdin.readline(); print(\'not json\'); sys.stdout.flush()"'
        )
        session = SubprocessSession(command, timeout=5.0)
        try:
            with pytest.raises(ProtocolError):
                session.request("ping", {})
        finally:
            session.close()

    def test_timeout(self):
        command = f"{sys.executable} -c \"import time; time.sleep(30)\""
        session = SubprocessSession(command, timeout=0.3)
        try:
            with pytest.raises(BackendTimeoutError):
                session.request("ping", {})
        finally:
            session.close()

    def test_backend_error_envelope(self):
        descriptors = {"tagger": BackendDescriptor("tagger", "subprocess", self.cmd("tagger"))}
        with Gateway(descriptors) as gw:
            with pytest.raises(BackendFailure):
                gw._call("tagger", "caption", {"tag": "x"})


class _MockHttpHandler(BaseHTTPRequestHandler):
    role = "tagger"

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = self.rfile.read(length).decode("utf-8")
        response = handle(self.role, body)
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(response.encode("utf-8"))

    def log_message(self, *args):
        pass


class TestHttpTransport:
    def test_tag_over_http(self, rng):
        server = HTTPServer(("127.0.0.1", 0), _MockHttpHandler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            url = f"http://127.0.0.1:{server.server_port}/"
            frames = noise_frames(rng, 1, 24, 24)
            paint(frames, 0, 2, 12, 2, 12, (15, 230, 25))
            descriptors = {"tagger": BackendDescriptor("tagger", "http", url)}
            with Gateway(descriptors) as gw:
                assert gw.tag_frame(frames[0]) == ["dog"]
        finally:
            server.shutdown()


def test_mock_determinism(rng):
    frames = noise_frames(rng, 1, 24, 24)
    paint(frames, 0, 2, 12, 2, 12, (230, 20, 20))
    request = json.dumps(
        {"id": 1, "method": "tag", "params": {"image": encode_image(frames[0])}}
    )
    assert handle("tagger", request) == handle("tagger", request)
