"""Application configuration: one JSON document drives backends, run knobs,
retry policy, and the API server.

    {
      "backends": {"chat": {...}, "generator": {...}, "editor": {...}, "segmenter": {...}},
      "run":      {"threshold": 8.0, "max_regen": 3, "creativity_default": "medium",
                   "base_seed": 0, "width": 1024, "height": 1024},
      "retry":    {"format_retries": 1, "transport_retries": 2, "backoff_ms": 250},
      "server":   {"port": 8040, "cors_origins": ["*"]}
    }

Each backend slot is {"mode": "mock"|"http", "id": ..., "url": ..., "model": ...,
"capabilities": [...], "api_key_env": ..., "timeout_s": ...}; the chat slot may
carry a "scenario" object scripting the mock. The chat credential comes from
the environment variable named by api_key_env (default T2I_COPILOT_API_KEY).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .backends import BackendRegistry, BackendSuite, ChatScenario, EndpointDescriptor, RetryPolicy, build_suite
from .errors import ValidationError
from .orchestrator import RunConfig
from .session import CreativityLevel

DEFAULT_CAPABILITIES = {
    "generator": ("prompt_guided", "style", "text_render", "position_via_prompt"),
    "editor": ("local_edit", "add", "replace", "remove", "inpaint"),
    "segmenter": ("referring_expression",),
    "chat": ("vision", "json_output"),
}


@dataclass(frozen=True)
class ServerConfig:
    port: int = 8040
    cors_origins: tuple[str, ...] = ("*",)


@dataclass
class AppConfig:
    registry: BackendRegistry
    run: RunConfig = field(default_factory=RunConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    chat_scenario: ChatScenario | None = None
    base_seed: int = 0
    width: int = 1024
    height: int = 1024

    def build_backends(self) -> BackendSuite:
        # deep copy: scripted scenarios mutate (counters), suites must not share
        scenario = copy.deepcopy(self.chat_scenario) if self.chat_scenario else None
        return build_suite(self.registry, chat_scenario=scenario)


def _descriptor(slot: str, data: dict[str, Any]) -> EndpointDescriptor:
    return EndpointDescriptor(
        id=data.get("id", f"mock-{slot}"),
        mode=data.get("mode", "mock"),
        url=data.get("url"),
        capabilities=tuple(data.get("capabilities", DEFAULT_CAPABILITIES[slot])),
        model=data.get("model"),
        api_key_env=data.get("api_key_env"),
        timeout_s=data.get("timeout_s"),
    )


def default_config() -> AppConfig:
    """All-mock configuration used when no config file is given."""
    return parse_config({})


def parse_config(data: dict[str, Any]) -> AppConfig:
    backends = data.get("backends", {})
    retry_data = data.get("retry", {})
    retry = RetryPolicy(
        format_retries=int(retry_data.get("format_retries", 1)),
        transport_retries=int(retry_data.get("transport_retries", 2)),
        backoff_ms=int(retry_data.get("backoff_ms", 250)),
    )
    registry = BackendRegistry(
        chat=_descriptor("chat", backends.get("chat", {})),
        generator=_descriptor("generator", backends.get("generator", {})),
        editor=_descriptor("editor", backends.get("editor", {})),
        segmenter=_descriptor("segmenter", backends.get("segmenter", {})),
        retry_policy=retry,
    )
    registry.validate()

    run_data = data.get("run", {})
    run = RunConfig(
        threshold=float(run_data.get("threshold", 8.0)),
        max_regen=int(run_data.get("max_regen", 3)),
        creativity_default=CreativityLevel(str(run_data.get("creativity_default", "medium")).upper()),
    )
    run.validate()

    server_data = data.get("server", {})
    server = ServerConfig(
        port=int(server_data.get("port", 8040)),
        cors_origins=tuple(server_data.get("cors_origins", ["*"])),
    )

    scenario = None
    scenario_data = backends.get("chat", {}).get("scenario")
    if scenario_data:
        scenario = ChatScenario.from_dict(scenario_data)

    return AppConfig(
        registry=registry,
        run=run,
        server=server,
        chat_scenario=scenario,
        base_seed=int(run_data.get("base_seed", 0)),
        width=int(run_data.get("width", 1024)),
        height=int(run_data.get("height", 1024)),
    )


def load_config(path: str | Path | None) -> AppConfig:
    if path is None:
        return default_config()
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot load config {path}: {exc}") from exc
    return parse_config(data)
