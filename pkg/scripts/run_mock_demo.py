#!/usr/bin/env python3
"""End-to-end demo against scripted mock backends.

Runs one automatic session whose first image scores below the threshold and
whose second passes, then prints the event trace and artifact locations.

    python3 scripts/run_mock_demo.py [store_dir]
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from genloop.config import parse_config
from genloop.orchestrator import SessionRunner, run_pipeline
from genloop.session import GenerationRequest

DEMO_CONFIG = {
    "backends": {
        "chat": {
            "mode": "mock",
            "scenario": {
                "main_subjects": [
                    {"name": "chocolate cupcake", "attributes": "vanilla frosting"},
                    {"name": "vanilla cupcake", "attributes": "chocolate frosting"},
                ],
                "ambiguities": [
                    {
                        "element": "plate",
                        "reason": "Type and style of plate are not specified",
                        "questions": ["What type of plate are you imagining?"],
                        "fill": "Assume a simple white ceramic plate to make it "
                                "versatile for presenting desserts",
                    }
                ],
                "scores": [
                    {
                        "all": 7.2,
                        "missing_elements": ["vanilla cupcake with chocolate frosting"],
                        "improvement_suggestions": "Ensure the vanilla cupcake is included "
                                                   "in the arrangement.",
                    },
                    8.6,
                ],
            },
        },
        "generator": {"mode": "mock"},
        "editor": {"mode": "mock"},
        "segmenter": {"mode": "mock"},
    },
    "run": {"width": 256, "height": 256},
    "retry": {"backoff_ms": 0},
}

PROMPT = (
    "A chocolate cupcake with vanilla frosting on a plate, "
    "beside a vanilla cupcake with chocolate frosting"
)


def main() -> int:
    store = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="genloop-demo-"))
    config = parse_config(DEMO_CONFIG)
    runner = SessionRunner(
        config.build_backends(), store, config.run, image_size=(config.width, config.height)
    )
    result = run_pipeline(GenerationRequest(prompt=PROMPT), runner=runner)

    print(f"session {result.session_id}: turns={result.turns} accepted={result.accepted}\n")
    print("event trace:")
    for record in runner.log.read(result.session_id):
        extra = ""
        if record.kind.value == "EVAL":
            extra = f"  overall={record.payload['overall']}"
        if record.kind.value == "VERDICT":
            extra = f"  {record.payload['decision']} ({record.payload['overall']} vs {record.payload['threshold']})"
        print(f"  {record.seq:>3}  {record.kind.value:<14}{extra}")

    state = runner.state(result.session_id)
    plate = state.report.ambiguous_elements[0]
    print(f"\nplate ambiguity resolved by {plate.resolution.source.value}: {plate.resolution.answer!r}")
    print(f"final image artifact: {result.image}")
    print(f"store root: {store}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
