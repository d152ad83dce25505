"""Service configuration and fixture loading.

Everything the engine needs ships as data files (workflow definitions,
guide library, references, protocol book, safety config, Q&A corpus,
scripted-provider demo script). The packaged fixtures are the default;
every path can be overridden by environment variables or flags.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import qa
from .engine import Engine
from .errors import CrisprFlowError
from .library import GuideLibrary, ingest_library
from .providers import (
    CompletionProvider,
    HttpProvider,
    ProviderConfig,
    ScriptedProvider,
    config_from_env,
)
from .safety import SafetyConfig, load_safety_config
from .sequences import load_fasta
from .tools import ProtocolBook, ToolProvider
from .workflows import WorkflowRegistry, load_workflows

PACKAGED_FIXTURES = Path(__file__).parent / "fixtures"

ENV_FIXTURES = "CRISPRFLOW_FIXTURES_DIR"
ENV_STORE = "CRISPRFLOW_STORE_DIR"
ENV_SCRIPT = "CRISPRFLOW_SCRIPT"


@dataclass
class ServiceConfig:
    fixtures_dir: Path = PACKAGED_FIXTURES
    store_dir: Path = Path("./crisprflow-store")
    script_path: Path | None = None  # scripted provider fixture; None -> demo script
    provider_kind: str = "scripted"  # scripted | http
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    host: str = "127.0.0.1"
    port: int = 8000
    console_dir: Path | None = None

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "ServiceConfig":
        e = env if env is not None else os.environ
        cfg = cls()
        if e.get(ENV_FIXTURES):
            cfg.fixtures_dir = Path(e[ENV_FIXTURES])
        if e.get(ENV_STORE):
            cfg.store_dir = Path(e[ENV_STORE])
        if e.get(ENV_SCRIPT):
            cfg.script_path = Path(e[ENV_SCRIPT])
        cfg.provider = config_from_env(e)
        if cfg.provider.endpoint:
            cfg.provider_kind = "http"
        if e.get("CRISPRFLOW_CONSOLE_DIR"):
            cfg.console_dir = Path(e["CRISPRFLOW_CONSOLE_DIR"])
        return cfg


@dataclass
class Fixtures:
    registry: WorkflowRegistry
    library: GuideLibrary
    references: dict[str, str]
    protocols: ProtocolBook
    safety: SafetyConfig
    corpus_index: qa.Index
    hashes: dict[str, str]


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise CrisprFlowError(f"missing {what}: {path}")
    return path


def _hash_path(path: Path) -> str:
    digest = hashlib.sha256()
    paths = sorted(path.rglob("*")) if path.is_dir() else [path]
    for p in paths:
        if p.is_file():
            digest.update(p.name.encode())
            digest.update(p.read_bytes())
    return digest.hexdigest()[:16]


def load_fixtures(fixtures_dir: Path | str = PACKAGED_FIXTURES) -> Fixtures:
    root = Path(fixtures_dir)
    workflows_dir = _require(root / "workflows", "workflow definitions directory")
    library_path = _require(root / "guide_library.tsv", "guide library")
    references_path = _require(root / "references.fa", "reference FASTA")
    protocols_path = _require(root / "protocols.yaml", "protocol book")
    safety_path = _require(root / "safety.yaml", "safety configuration")
    corpus_dir = _require(root / "corpus", "Q&A corpus directory")

    registry = load_workflows(workflows_dir)
    library = ingest_library(library_path)
    references = load_fasta(references_path)
    protocols = ProtocolBook.load(protocols_path)
    safety_config = load_safety_config(safety_path)
    corpus_index = qa.index_corpus(qa.load_corpus(corpus_dir))
    hashes = {
        "workflows": _hash_path(workflows_dir),
        "guide_library": _hash_path(library_path),
        "references": _hash_path(references_path),
        "protocols": _hash_path(protocols_path),
        "safety": _hash_path(safety_path),
        "corpus": _hash_path(corpus_dir),
    }
    return Fixtures(
        registry=registry,
        library=library,
        references=references,
        protocols=protocols,
        safety=safety_config,
        corpus_index=corpus_index,
        hashes=hashes,
    )


def build_engine(fixtures: Fixtures) -> Engine:
    tools = ToolProvider(
        library=fixtures.library,
        references=fixtures.references,
        protocols=fixtures.protocols,
    )
    return Engine(fixtures.registry, tools, fixtures.safety)


def build_provider(config: ServiceConfig) -> CompletionProvider:
    if config.provider_kind == "http":
        return HttpProvider(config.provider)
    script = config.script_path or (PACKAGED_FIXTURES / "scripts" / "demo_provider.json")
    return ScriptedProvider.from_file(_require(Path(script), "scripted provider file"))
