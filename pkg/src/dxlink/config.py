"""Application configuration: data paths, root-class ids, engine knobs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .ontology import DEFAULT_ISA_TYPE_ID, RootClass

MAX_K = 12


@dataclass(frozen=True)
class AppConfig:
    concepts_path: Path
    relations_path: Path
    sites_path: Path
    disorders_path: Path
    findings_path: Path
    links_path: Path
    vectors_path: Path
    descriptions_path: Path | None = None
    isa_type_id: int = DEFAULT_ISA_TYPE_ID
    root_class_ids: dict[str, int] = field(default_factory=dict)
    leak_default: float = 0.001
    prior_cap: float = 0.05
    k_default: int = 8
    leaks: dict[int, float] = field(default_factory=dict)
    port: int = 8350
    case_store_path: Path | None = None

    @property
    def roots(self) -> dict[int, RootClass]:
        return {cid: RootClass(name) for name, cid in self.root_class_ids.items()}

    def require_paths(self) -> None:
        paths = [
            self.concepts_path, self.relations_path, self.sites_path,
            self.disorders_path, self.findings_path, self.links_path,
            self.vectors_path,
        ]
        if self.descriptions_path is not None:
            paths.append(self.descriptions_path)
        missing = [str(p) for p in paths if not Path(p).exists()]
        if missing:
            raise ConfigError(f"missing data files: {missing}")


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    base = path.parent

    def resolve(p):
        return (base / p).resolve() if p else None

    try:
        onto = raw["ontology"]
        kb = raw["kb"]
    except KeyError as exc:
        raise ConfigError(f"config missing section {exc}") from exc

    root_ids = onto.get("root_classes", {})
    known = {rc.value for rc in RootClass}
    unknown = set(root_ids) - known
    if unknown:
        raise ConfigError(f"unknown root classes in config: {sorted(unknown)}")
    if root_ids and set(root_ids) != known:
        raise ConfigError(
            f"root_classes must list all 12 classes; missing {sorted(known - set(root_ids))}"
        )
    values = list(root_ids.values())
    if len(set(values)) != len(values):
        raise ConfigError("root_classes ids must be distinct")

    inference = raw.get("inference", {})
    k_default = int(inference.get("k_default", 8))
    if k_default > MAX_K:
        raise ConfigError(f"k_default {k_default} exceeds the maximum of {MAX_K}")
    leaks = {int(k): float(v) for k, v in inference.get("leaks", {}).items()}

    server = raw.get("server", {})

    return AppConfig(
        concepts_path=resolve(onto["concepts"]),
        relations_path=resolve(onto["relations"]),
        descriptions_path=resolve(onto.get("descriptions")),
        sites_path=resolve(onto["sites"]),
        isa_type_id=int(onto.get("isa_type_id", DEFAULT_ISA_TYPE_ID)),
        root_class_ids={str(k): int(v) for k, v in root_ids.items()},
        disorders_path=resolve(kb["disorders"]),
        findings_path=resolve(kb["findings"]),
        links_path=resolve(kb["links"]),
        vectors_path=resolve(raw["vectors"]),
        leak_default=float(inference.get("leak_default", 0.001)),
        prior_cap=float(inference.get("prior_cap", 0.05)),
        k_default=k_default,
        leaks=leaks,
        port=int(server.get("port", 8350)),
        case_store_path=resolve(server.get("case_store")),
    )
