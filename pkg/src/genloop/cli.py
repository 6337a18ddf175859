"""Command-line interface.

Subcommands:
    run            execute one pipeline, write final.png + session.json
    serve          start the HTTP API (and static frontend when present)
    batch          run a JSONL prompt list with bounded parallelism
    mock-backends  serve the backend HTTP contracts with deterministic mocks
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import AppConfig, load_config
from .errors import GenloopError, PipelineError
from .orchestrator import (
    AutomaticHandler,
    FeedbackResponse,
    InteractionHandler,
    RunConfig,
    SessionRunner,
    run_pipeline,
)
from .session import AmbiguousElement, ClarificationAnswer, CreativityLevel, EvaluationResult, GenerationRequest


class ConsoleHandler(InteractionHandler):
    """Terminal-mode interaction: prints questions and scores, reads stdin.

    EOF anywhere is treated as "skip", falling back to automatic behavior.
    """

    def ask_clarifications(self, questions: list[AmbiguousElement]) -> list[ClarificationAnswer]:
        answers: list[ClarificationAnswer] = []
        for el in questions:
            print(f"\nAmbiguous element: {el.element} ({el.reason})")
            for q in el.clarification_questions:
                print(f"  - {q}")
            try:
                text = input(f"Answer for '{el.element}' (empty to let the model decide): ").strip()
            except EOFError:
                return answers
            if text:
                answers.append(ClarificationAnswer(element=el.element, answer=text))
        return answers

    def request_feedback(self, image: bytes | None, evaluation: EvaluationResult) -> FeedbackResponse:
        print("\nEvaluation:")
        for name, score in {**evaluation.aesthetic, **evaluation.alignment}.items():
            print(f"  {name:>24}: {score}")
        print(f"  {'overall':>24}: {evaluation.overall}")
        if evaluation.missing_elements:
            print("  missing:", "; ".join(evaluation.missing_elements))
        if evaluation.improvement_suggestions:
            print("  suggestions:", evaluation.improvement_suggestions)
        try:
            choice = input("[a]ccept, [r]egenerate, feedback text, or ENTER to continue: ").strip()
        except EOFError:
            return FeedbackResponse()
        if choice.lower() == "a":
            return FeedbackResponse(accept=True)
        if choice.lower() == "r":
            return FeedbackResponse(regenerate=True)
        if choice:
            # typed feedback means the user wants another attempt honoring it
            return FeedbackResponse(text=choice, regenerate=True)
        return FeedbackResponse()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genloop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one pipeline run")
    run_p.add_argument("--prompt", required=True)
    run_p.add_argument("--ref-image", type=Path, default=None)
    run_p.add_argument("--creativity", choices=["low", "medium", "high"], default=None)
    run_p.add_argument("--interactive", action="store_true")
    run_p.add_argument("--threshold", type=float, default=None)
    run_p.add_argument("--max-regen", type=int, default=None)
    run_p.add_argument("--out", type=Path, default=Path("out"))
    run_p.add_argument("--config", type=Path, default=None)
    run_p.add_argument("--seed", type=int, default=None)

    serve_p = sub.add_parser("serve", help="start the HTTP API")
    serve_p.add_argument("--port", type=int, default=None)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--config", type=Path, default=None)
    serve_p.add_argument("--store", type=Path, default=Path("genloop-store"))
    serve_p.add_argument("--frontend", type=Path, default=None)

    batch_p = sub.add_parser("batch", help="run a JSONL prompt list")
    batch_p.add_argument("--prompts", type=Path, required=True)
    batch_p.add_argument("--out", type=Path, required=True)
    batch_p.add_argument("--config", type=Path, default=None)
    batch_p.add_argument("--parallel", type=int, default=4)

    mock_p = sub.add_parser("mock-backends", help="serve mock model backends over HTTP")
    mock_p.add_argument("--port", type=int, default=8099)
    mock_p.add_argument("--host", default="127.0.0.1")
    mock_p.add_argument("--config", type=Path, default=None)

    return parser


def _runner_from_config(config: AppConfig, store_root: Path, *, base_seed: int | None = None) -> SessionRunner:
    return SessionRunner(
        config.build_backends(),
        store_root,
        config.run,
        base_seed=config.base_seed if base_seed is None else base_seed,
        image_size=(config.width, config.height),
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    run_config = config.run
    if args.threshold is not None or args.max_regen is not None:
        run_config = RunConfig(
            threshold=args.threshold if args.threshold is not None else config.run.threshold,
            max_regen=args.max_regen if args.max_regen is not None else config.run.max_regen,
            creativity_default=config.run.creativity_default,
        )
        run_config.validate()
    args.out.mkdir(parents=True, exist_ok=True)
    runner = _runner_from_config(
        AppConfig(
            registry=config.registry,
            run=run_config,
            server=config.server,
            chat_scenario=config.chat_scenario,
            base_seed=config.base_seed,
            width=config.width,
            height=config.height,
        ),
        args.out / "store",
        base_seed=args.seed,
    )

    reference = None
    if args.ref_image is not None:
        reference = runner.artifacts.store(args.ref_image.read_bytes(), session_id="cli-input").hash
    creativity = CreativityLevel(args.creativity.upper()) if args.creativity else run_config.creativity_default
    request = GenerationRequest(
        prompt=args.prompt,
        reference_image=reference,
        creativity_level=creativity,
        interactive=args.interactive,
    )
    handler = ConsoleHandler() if args.interactive else AutomaticHandler()

    try:
        result = run_pipeline(request, handler=handler, runner=runner)
    except PipelineError as exc:
        print(f"pipeline failed: {exc}", file=sys.stderr)
        return 1

    state = runner.state(result.session_id)
    if result.image:
        (args.out / "final.png").write_bytes(runner.artifacts.load(result.image))
    (args.out / "session.json").write_text(json.dumps(state.to_dict(), indent=2, ensure_ascii=True), "utf-8")
    print(
        f"session {result.session_id}: turns={result.turns} accepted={result.accepted} "
        f"-> {args.out / 'final.png'}"
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config)
    runner = _runner_from_config(config, args.store)
    frontend = args.frontend
    if frontend is None:
        candidate = Path("frontend") / "dist"
        frontend = candidate if candidate.is_dir() else None
    app = create_app(runner, cors_origins=config.server.cors_origins, frontend_dir=frontend)
    port = args.port if args.port is not None else config.server.port
    uvicorn.run(app, host=args.host, port=port, log_level="info")
    return 0


def _sanitize_id(raw: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]", "_", raw)


def _cmd_batch(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    args.out.mkdir(parents=True, exist_ok=True)

    entries = []
    with args.prompts.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                entries.append(json.loads(line))

    def one(entry: dict) -> dict:
        # fresh backends per entry: scripted scenarios stay independent
        runner = _runner_from_config(config, args.out / "store")
        session_id = f"batch-{_sanitize_id(str(entry['id']))}"
        request = GenerationRequest(prompt=entry["prompt"], creativity_level=config.run.creativity_default)
        try:
            result = run_pipeline(request, runner=runner, session_id=session_id)
            overall = runner.state(result.session_id).turns[-1].evaluation.overall
            return {
                "prompt": entry["prompt"],
                "session_id": result.session_id,
                "accepted": result.accepted,
                "turns": result.turns,
                "overall": overall,
            }
        except GenloopError as exc:
            return {
                "prompt": entry["prompt"],
                "session_id": session_id,
                "accepted": False,
                "turns": 0,
                "overall": None,
                "error": str(exc),
            }

    with ThreadPoolExecutor(max_workers=max(1, args.parallel)) as pool:
        results = list(pool.map(one, entries))

    results_path = args.out / "results.jsonl"
    with results_path.open("w", encoding="utf-8") as fh:
        for record in results:
            fh.write(json.dumps(record, ensure_ascii=True) + "\n")
    print(f"{len(results)} results -> {results_path}")
    return 0


def _cmd_mock_backends(args: argparse.Namespace) -> int:
    import uvicorn

    from .backends.mock_server import create_mock_backend_app

    config = load_config(args.config)
    app = create_mock_backend_app(config.chat_scenario)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "batch":
        return _cmd_batch(args)
    if args.command == "mock-backends":
        return _cmd_mock_backends(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
