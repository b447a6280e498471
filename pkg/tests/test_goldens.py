"""The committed golden frames must stay in sync with the protocol encoder;
the browser console's tests compare against the same file byte for byte."""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "scripts"))

from gen_goldens import golden_frames  # noqa: E402

GOLDEN = pathlib.Path(__file__).resolve().parents[1] / "frontend" / "tests" / "golden" / "operator_actions.ndjson"


def test_committed_goldens_match_encoder():
    expected = b"".join(golden_frames())
    assert GOLDEN.read_bytes() == expected, (
        "golden transcript drifted; regenerate with scripts/gen_goldens.py")


def test_goldens_decode_cleanly():
    from teleassist.protocol import decode

    kinds = [decode(line).payload.kind for line in GOLDEN.read_bytes().splitlines()]
    assert kinds == ["modify_constraints", "modify_constraints", "modify_constraints",
                     "approval", "approval", "stop_execution", "handover"]
