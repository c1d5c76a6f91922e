"""Wire protocol conformance against a live server process.

One server is spawned for the whole module; every test leaves it drained
(one response read per request written), so cases stay independent.
"""

import base64
import json

import numpy as np
import pytest

from bridge_helpers import GENRES, LineClient


def pcm(wave) -> str:
    return base64.b64encode(np.asarray(wave, dtype="<f4").tobytes()).decode("ascii")


TONE = pcm(0.3 * np.sin(2 * np.pi * 330.0 * np.arange(4000) / 8000.0))


@pytest.fixture(scope="module")
def client(bridge_workspace):
    c = LineClient(bridge_workspace)
    yield c
    c.close()


class TestHandshake:
    def test_announces_labels(self, client):
        assert client.handshake == {"n_classes": len(GENRES), "labels": GENRES}


class TestValidRequests:
    def test_full_request(self, client):
        reply = client.ask(
            {"id": 1, "lyrics": "love in the rain", "sample_rate": 8000, "audio_b64": TONE}
        )
        assert reply["id"] == 1
        assert "error" not in reply
        probs = reply["probabilities"]
        assert len(probs) == len(GENRES)
        assert all(p >= 0.0 for p in probs)
        assert abs(sum(probs) - 1.0) <= 1e-4

    def test_lyrics_only(self, client):
        reply = client.ask({"id": 2, "lyrics": "dance dance dance"})
        assert reply["id"] == 2
        assert abs(sum(reply["probabilities"]) - 1.0) <= 1e-4

    def test_audio_only(self, client):
        reply = client.ask({"id": 3, "lyrics": "", "sample_rate": 8000, "audio_b64": TONE})
        assert reply["id"] == 3
        assert len(reply["probabilities"]) == len(GENRES)

    def test_minimal_request(self, client):
        reply = client.ask({"id": 4})
        assert reply["id"] == 4
        assert "probabilities" in reply

    def test_string_id_echoed_verbatim(self, client):
        reply = client.ask({"id": "req-xyz", "lyrics": "gold"})
        assert reply["id"] == "req-xyz"

    def test_identical_requests_identical_vectors(self, client):
        doc = {"id": 5, "lyrics": "fire on the street", "sample_rate": 8000, "audio_b64": TONE}
        first = client.ask(doc)["probabilities"]
        second = client.ask(doc)["probabilities"]
        assert first == second

    def test_null_audio_treated_as_absent(self, client):
        reply = client.ask({"id": 6, "lyrics": "blue heart", "audio_b64": None})
        assert reply["id"] == 6
        assert "probabilities" in reply


class TestPipelining:
    def test_burst_answered_in_full_with_matching_ids(self, client):
        texts = ["love", "night train", "city gold", "river", "stone fire"]
        for i, text in enumerate(texts):
            client.send({"id": 100 + i, "lyrics": text, "sample_rate": 8000, "audio_b64": TONE})
        replies = {}
        for _ in texts:
            reply = client.read()
            replies[reply["id"]] = reply
        assert sorted(replies) == [100 + i for i in range(len(texts))]
        for reply in replies.values():
            assert abs(sum(reply["probabilities"]) - 1.0) <= 1e-4

    def test_errors_interleave_without_stalling(self, client):
        client.send({"id": 200, "lyrics": "love"})
        client.send_line("{broken json")
        client.send({"id": 201, "lyrics": "rain"})
        ok1 = client.read()
        bad = client.read()
        ok2 = client.read()
        assert ok1["id"] == 200 and "probabilities" in ok1
        assert bad["id"] is None and "error" in bad
        assert ok2["id"] == 201 and "probabilities" in ok2


class TestMalformedRequests:
    def assert_error(self, client, line_or_doc, expect_id):
        if isinstance(line_or_doc, str):
            client.send_line(line_or_doc)
        else:
            client.send(line_or_doc)
        reply = client.read()
        assert reply["id"] == expect_id
        assert "error" in reply and isinstance(reply["error"], str)
        assert "probabilities" not in reply
        assert client.alive()

    def test_unparseable_json(self, client):
        self.assert_error(client, "this is not json", None)

    def test_non_object_request(self, client):
        self.assert_error(client, "[1, 2, 3]", None)

    def test_missing_id(self, client):
        self.assert_error(client, {"lyrics": "no id here"}, None)

    def test_non_string_lyrics(self, client):
        self.assert_error(client, {"id": 10, "lyrics": 42}, 10)

    def test_bad_base64(self, client):
        self.assert_error(client, {"id": 11, "audio_b64": "%%%", "sample_rate": 8000}, 11)

    def test_partial_sample_payload(self, client):
        torn = base64.b64encode(b"\x00" * 6).decode("ascii")
        self.assert_error(client, {"id": 12, "audio_b64": torn, "sample_rate": 8000}, 12)

    def test_non_finite_samples(self, client):
        inf = pcm(np.array([np.inf], dtype=np.float32))
        self.assert_error(client, {"id": 13, "audio_b64": inf, "sample_rate": 8000}, 13)

    def test_audio_without_sample_rate(self, client):
        self.assert_error(client, {"id": 14, "audio_b64": TONE}, 14)

    def test_zero_sample_rate(self, client):
        self.assert_error(client, {"id": 15, "audio_b64": TONE, "sample_rate": 0}, 15)

    def test_negative_sample_rate(self, client):
        self.assert_error(client, {"id": 16, "audio_b64": TONE, "sample_rate": -8000}, 16)

    def test_boolean_sample_rate(self, client):
        self.assert_error(client, {"id": 17, "audio_b64": TONE, "sample_rate": True}, 17)

    def test_float_sample_rate(self, client):
        self.assert_error(client, {"id": 18, "audio_b64": TONE, "sample_rate": 8000.5}, 18)

    def test_server_survives_the_whole_gauntlet(self, client):
        reply = client.ask({"id": 19, "lyrics": "still standing"})
        assert reply["id"] == 19
        assert "probabilities" in reply


class TestBlankLines:
    def test_blank_lines_are_skipped_not_answered(self, client):
        client.send_line("")
        client.send_line("   ")
        reply = client.ask({"id": 20, "lyrics": "dream"})
        assert reply["id"] == 20


class TestResponseShape:
    def test_probabilities_are_json_floats(self, client):
        client.send({"id": 21, "lyrics": "love", "sample_rate": 8000, "audio_b64": TONE})
        raw = client.proc.stdout.readline()
        doc = json.loads(raw)
        assert doc["id"] == 21
        assert all(isinstance(p, float) for p in doc["probabilities"])
