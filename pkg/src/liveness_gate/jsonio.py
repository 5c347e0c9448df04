"""Canonical JSON encoding shared by event logs, trajectories, and the wire.

One convention everywhere: insertion-ordered fields, compact separators, no
ASCII escaping, floats as Python's shortest round-trip repr. Byte-identical
output for identical values is what makes replay determinism testable.
"""

import json


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def loads(text: str):
    return json.loads(text)
