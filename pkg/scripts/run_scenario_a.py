#!/usr/bin/env python3
"""Replay scenario A (false-positive obstacle, longitudinal edit) and print
the event timeline."""

import sys

from teleassist.cli import main

if __name__ == "__main__":
    sys.exit(main(["run", "--scenario", "A", "--operator-script", "A",
                   "--log", "scenario_a.ndjson", *sys.argv[1:]]))
