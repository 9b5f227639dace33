"""Agent configuration: a flat key = value text file.

Example::

    webid = http://127.0.0.1:8701/profile#me
    display_name = Jun
    listen_host = 127.0.0.1
    listen_port = 8701
    key_file = jun.key
    kb_file = jun.trig
    interpreter_kind = scripted
    auto_confirm = true
    clock = fixed:2024-11-04T08:00:00Z
    contacts = http://127.0.0.1:8702/profile#me
    share_obligation = P30D

Relative paths resolve against the config file's directory.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Optional

from .provenance import parse_timestamp


@dataclass
class AgentConfig:
    webid: str
    display_name: str
    listen_host: str = "127.0.0.1"
    listen_port: int = 0
    key_file: str = "agent.key"
    kb_file: str = "agent.trig"
    interpreter_kind: str = "scripted"  # scripted | remote
    interpreter_url: str = ""
    interpreter_api_key_env: str = ""
    auto_confirm: bool = True
    clock: str = "real"  # real | fixed:<RFC 3339>
    contacts: list[str] = field(default_factory=list)
    rules_file: str = ""
    share_obligation: str = "P30D"  # duration attached to granted sharing; "" for none
    uuid_seed: Optional[int] = None  # deterministic ids for the demo
    console_dir: str = ""

    def clock_fn(self) -> Callable[[], datetime]:
        if self.clock.startswith("fixed:"):
            instant = parse_timestamp(self.clock[len("fixed:"):])
            return lambda: instant
        return lambda: datetime.now(timezone.utc)


def _parse_value(key: str, raw: str):
    value = raw.strip()
    if value.startswith('"') and value.endswith('"') and len(value) >= 2:
        value = value[1:-1]
    if key == "listen_port":
        return int(value)
    if key == "uuid_seed":
        return int(value) if value else None
    if key == "auto_confirm":
        return value.lower() in ("true", "1", "yes")
    if key == "contacts":
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def parse_config_text(text: str) -> AgentConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in AgentConfig.__dataclass_fields__:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    missing = [k for k in ("webid", "display_name") if k not in values]
    if missing:
        raise ValueError(f"config is missing required keys: {', '.join(missing)}")
    return AgentConfig(**values)


def load_config(path: str) -> AgentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        config = parse_config_text(fh.read())
    base = os.path.dirname(os.path.abspath(path))
    for attr in ("key_file", "kb_file", "rules_file", "console_dir"):
        value = getattr(config, attr)
        if value and not os.path.isabs(value):
            setattr(config, attr, os.path.join(base, value))
    return config


def dump_config(config: AgentConfig) -> str:
    lines = []
    for name in AgentConfig.__dataclass_fields__:
        value = getattr(config, name)
        if value is None or value == "" or value == []:
            continue
        if isinstance(value, list):
            value = ", ".join(value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
