#!/usr/bin/env python3
"""Regenerate the golden operator frames shared with the browser console.

The console's encoder must produce byte-identical frames for the same
logical actions, so the fixture pins envelope ordering and number
formatting. Values are chosen with fractional parts: both encoders print
shortest round-trip decimals, which only coincide for non-integral floats.
"""

import os
import sys

from teleassist.protocol import (Approval, Handover, ModifyConstraints,
                                 StopExecution, TeleopMessage, encode,
                                 LATERAL, LONGITUDINAL)

GOLDEN_ACTIONS = [
    ModifyConstraints(mod_type=LATERAL, polygon=[
        [24.5, -1.25], [43.5, -1.25], [43.5, -4.75], [24.5, -4.75]]),
    ModifyConstraints(mod_type=LONGITUDINAL, stop_progress=None),
    ModifyConstraints(mod_type=LONGITUDINAL, stop_progress=36.5),
    Approval(proposal_id=1),
    Approval(proposal_id=2),
    StopExecution(),
    Handover(),
]


def golden_frames() -> list[bytes]:
    frames = []
    for i, payload in enumerate(GOLDEN_ACTIONS):
        msg = TeleopMessage(session="golden", seq=i + 1, t=0.5 + i, payload=payload)
        frames.append(encode(msg))
    return frames


def main(out_path: str) -> None:
    os.makedirs(os.path.dirname(out_path), exist_ok=True)
    with open(out_path, "wb") as fh:
        for frame in golden_frames():
            fh.write(frame)
    print(f"wrote {len(GOLDEN_ACTIONS)} golden frames to {out_path}")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "frontend/tests/golden/operator_actions.ndjson"
    main(out)
