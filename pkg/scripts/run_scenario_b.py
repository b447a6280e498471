#!/usr/bin/env python3
"""Replay scenario B (blocked lane, lateral shoulder grant) and print the
event timeline."""

import sys

from teleassist.cli import main

if __name__ == "__main__":
    sys.exit(main(["run", "--scenario", "B", "--operator-script", "B",
                   "--log", "scenario_b.ndjson", *sys.argv[1:]]))
