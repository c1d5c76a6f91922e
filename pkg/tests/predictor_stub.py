"""Wire-protocol predictor child used by the external-client tests.

Handshakes, then answers each request line according to the mode in argv[1].
Responses are deterministic functions of the request so tests can verify that
ids were matched back to the right rows.
"""

import base64
import json
import sys
import time


def handshake(names):
    print(json.dumps({"n_classes": len(names), "labels": names}), flush=True)


def request_probs(req):
    """Two-class vector determined by the request content."""
    n_samples = len(base64.b64decode(req["audio_b64"])) // 4
    a = 1.0 + len(req["lyrics"])
    b = 1.0 + n_samples
    return [a / (a + b), b / (a + b)]


def reply(req_id, probs):
    print(json.dumps({"id": req_id, "probabilities": probs}), flush=True)


def main() -> int:
    mode = sys.argv[1] if len(sys.argv) > 1 else "uniform"

    if mode == "no-handshake":
        time.sleep(10)
        return 0
    if mode == "bad-handshake":
        print("hello there", flush=True)
        return 0
    if mode == "mismatch-handshake":
        print(json.dumps({"n_classes": 3, "labels": ["x", "y"]}), flush=True)
        return 0

    if mode == "uniform":
        handshake(["a", "b", "c"])
        for line in sys.stdin:
            req = json.loads(line)
            reply(req["id"], [1 / 3, 1 / 3, 1 / 3])
        return 0

    handshake(["x", "y"])
    if mode == "die-after-handshake":
        return 0

    held = None
    for line in sys.stdin:
        req = json.loads(line)
        if mode == "echo":
            reply(req["id"], request_probs(req))
        elif mode == "swap-pairs":
            if held is None:
                held = req
            else:
                reply(req["id"], request_probs(req))
                reply(held["id"], request_probs(held))
                held = None
        elif mode == "error-on-id-3":
            if req["id"] == 3:
                print(json.dumps({"id": req["id"], "error": "synthetic failure"}), flush=True)
            else:
                reply(req["id"], [0.5, 0.5])
        elif mode == "wrong-length":
            reply(req["id"], [0.2, 0.3, 0.5])
        elif mode == "unnormalized":
            reply(req["id"], [0.7, 0.7])
        elif mode == "negative":
            reply(req["id"], [-0.1, 1.1])
        elif mode == "near":
            reply(req["id"], [0.5, 0.5 + 5e-5])
        elif mode == "unknown-id":
            reply(req["id"] + 1000, [0.5, 0.5])
        else:
            raise SystemExit(f"unknown mode {mode}")
    if held is not None:
        reply(held["id"], request_probs(held))
    return 0


if __name__ == "__main__":
    sys.exit(main())
