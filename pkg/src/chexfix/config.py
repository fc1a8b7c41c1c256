"""Pipeline configuration: guidelines, lexicon, routing, backends, gates."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backends import FixtureStore, HttpToolClient, RoutedBackend, RoutingTable, ToolBackend
from .core import StudyRecord
from .errors import ConfigError
from .extract import MEASUREMENT_KEYWORDS, CategoryLexicon
from .updater import Guidelines

CONFIG_ENV_VAR = "CHEXFIX_CONFIG"


@dataclass(frozen=True)
class PipelineConfig:
    guidelines: Guidelines = field(default_factory=Guidelines)
    keywords: tuple[str, ...] = MEASUREMENT_KEYWORDS
    lexicon_path: str | None = None
    backends: dict[str, str] = field(default_factory=dict)  # id -> "fixtures:<path>" | "http:<url>"
    routing: RoutingTable | None = None
    min_confidence: float = 0.0
    include_non_ett: bool = False
    all_images: bool = False
    jobs: int | None = None

    def lexicon(self) -> CategoryLexicon:
        if self.lexicon_path is None:
            return CategoryLexicon.default()
        return CategoryLexicon.from_file(self.lexicon_path)


def load_config(path: str | Path | None) -> PipelineConfig:
    """Load config JSON; falls back to the CHEXFIX_CONFIG env var, then defaults."""
    if path is None:
        env = os.environ.get(CONFIG_ENV_VAR)
        if not env:
            return PipelineConfig()
        path = env
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")

    known = {
        "ett_correct_range_cm",
        "keywords",
        "lexicon_path",
        "backends",
        "routing",
        "min_confidence",
        "include_non_ett",
        "all_images",
        "jobs",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")

    try:
        guidelines = Guidelines()
        if "ett_correct_range_cm" in raw:
            low, high = raw["ett_correct_range_cm"]
            guidelines = Guidelines(ett_correct_range_cm=(float(low), float(high)))
        keywords = tuple(raw.get("keywords", MEASUREMENT_KEYWORDS))
        routing = None
        if "routing" in raw and raw["routing"] is not None:
            routing = RoutingTable(
                patterns=dict(raw["routing"].get("patterns", {})),
                default=str(raw["routing"]["default"]),
            )
        config = PipelineConfig(
            guidelines=guidelines,
            keywords=keywords,
            lexicon_path=raw.get("lexicon_path"),
            backends=dict(raw.get("backends", {})),
            routing=routing,
            min_confidence=float(raw.get("min_confidence", 0.0)),
            include_non_ett=bool(raw.get("include_non_ett", False)),
            all_images=bool(raw.get("all_images", False)),
            jobs=raw.get("jobs"),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if config.lexicon_path is not None and not Path(config.lexicon_path).exists():
        raise ConfigError(f"{path}: lexicon file not found: {config.lexicon_path}")
    if not 0.0 <= config.min_confidence <= 1.0:
        raise ConfigError(f"{path}: min_confidence must be in [0, 1]")
    for backend_id, spec in config.backends.items():
        _split_backend_spec(spec)  # validates the scheme
        if spec.startswith("fixtures:") and not Path(spec.split(":", 1)[1]).exists():
            raise ConfigError(f"{path}: fixture file not found for backend {backend_id!r}")
    return config


def _split_backend_spec(spec: str) -> tuple[str, str]:
    if spec.startswith("fixtures:"):
        return "fixtures", spec[len("fixtures:"):]
    if spec.startswith(("http://", "https://")):
        return "http", spec
    if spec.startswith("http:"):
        return "http", "http://" + spec[len("http:"):]
    raise ConfigError(f"backend spec must be fixtures:<path> or http:<url>, got {spec!r}")


class BackendProvider:
    """Builds a per-study ToolBackend from backend specs plus optional routing."""

    def __init__(self, specs: dict[str, str], routing: RoutingTable | None = None):
        if not specs:
            raise ConfigError("at least one backend must be configured")
        self._providers: dict[str, object] = {}
        for backend_id, spec in specs.items():
            scheme, rest = _split_backend_spec(spec)
            if scheme == "fixtures":
                self._providers[backend_id] = FixtureStore(rest)
            else:
                self._providers[backend_id] = HttpToolClient(rest)
        self._routing = routing
        if routing is not None:
            missing = routing.backend_ids() - set(self._providers)
            if missing:
                raise ConfigError(f"routing references unknown backends: {sorted(missing)}")
        elif len(specs) == 1:
            self._single = next(iter(self._providers))
        else:
            raise ConfigError("multiple backends require a routing table")

    def backend_for(self, study: StudyRecord) -> ToolBackend:
        if self._routing is None:
            return self._providers[self._single].backend_for(study)  # type: ignore[attr-defined]
        bound = {
            backend_id: provider.backend_for(study)  # type: ignore[attr-defined]
            for backend_id, provider in self._providers.items()
        }
        return RoutedBackend(self._routing, bound)


def provider_from_cli(backend_arg: str | None, config: PipelineConfig) -> BackendProvider:
    """CLI --backend overrides any configured backends with a single default."""
    if backend_arg is not None:
        return BackendProvider({"default": backend_arg})
    if not config.backends:
        raise ConfigError("no backend given; pass --backend or configure one")
    return BackendProvider(config.backends, config.routing)
