"""Chain persistence: one JSON object per line, append-only.

The writer flushes every record so a crash loses at most the final line;
the reader skips a truncated last line but refuses corruption anywhere
else.
"""

from __future__ import annotations

import json
import os


def sample_record(sample) -> dict:
    return {
        "t": int(sample.t),
        "theta_c": [float(v) for v in sample.theta_c],
        "theta_d": [int(v) for v in sample.theta_d],
        "nlp": float(sample.nlp),
        "accepted": bool(sample.accepted),
    }


class ChainWriter:
    """Append-only line writer; one flushed JSON record per sample."""

    def __init__(self, path: str):
        self.path = str(path)
        self._f = open(self.path, "w", encoding="utf-8")

    def write(self, sample):
        self._f.write(json.dumps(sample_record(sample), sort_keys=True) + "\n")
        self._f.flush()

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_chain(path: str) -> list:
    """Read records; a truncated final line is dropped, anything else raises.

    Only newline-terminated lines are parsed: a line missing its terminator
    may have been cut mid-token (a truncated number still parses as JSON,
    silently wrong), so it is discarded outright.
    """
    records = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        blob = f.read()
    lines = blob.split("\n")
    lines.pop()  # content after the last newline is incomplete (often empty)
    for i, line in enumerate(lines):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                break  # interrupted write cut this line's payload
            raise
    return records


def list_chains(directory: str) -> list:
    out = []
    for name in sorted(os.listdir(directory)):
        if name.startswith("chain_") and name.endswith(".jsonl"):
            out.append(os.path.join(directory, name))
    return out
