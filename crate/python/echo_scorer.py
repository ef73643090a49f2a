#!/usr/bin/env python3
"""Minimal line-JSON scorer: answers every `score` item with a fixed value.

Usable as `--scorer bridge --bridge "python3 python/echo_scorer.py"` or as a
template for real model wrappers. Items whose premise contains
``abstain`` get ``null``.
"""

import argparse
import json
import sys


def handle(req, value):
    items = req.get("items", [])
    kind = req.get("kind")
    if kind == "score":
        scores = [None if "abstain" in str(it.get("premise", "")) else value for it in items]
    elif kind == "wsd":
        scores = [[1.0] + [0.0] * (len(it.get("candidates", [])) - 1) for it in items]
    elif kind == "type":
        scores = [None for _ in items]
    else:
        return {"id": req.get("id"), "error": f"unsupported kind {kind!r}"}
    return {"id": req.get("id"), "scores": scores}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--value", type=float, default=0.5)
    args = ap.parse_args()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            reply = handle(json.loads(line), args.value)
        except json.JSONDecodeError as e:
            reply = {"id": None, "error": str(e)}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
