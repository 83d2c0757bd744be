"""Run manifests written into every output directory."""

from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, Field

from utils import __version__

RUN_MANIFEST_FILE = "run_manifest.yaml"


class RunManifest(BaseModel):
    """How an output directory was produced. Holds no timestamps, so
    identical reruns write identical manifests."""

    command: str
    flags: Dict[str, Any] = Field(default_factory=dict)
    seeds: Dict[str, int] = Field(default_factory=dict)
    inputs: Dict[str, str] = Field(default_factory=dict)
    output: str = ""
    checkpoint_checksum: Optional[str] = None
    dataset_fingerprint: Optional[str] = None
    version: str = __version__


def write_run_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RUN_MANIFEST_FILE
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest.model_dump(mode="json"), f, sort_keys=False)
    return path


def read_run_manifest(out_dir: Path) -> RunManifest:
    with open(Path(out_dir) / RUN_MANIFEST_FILE, "r", encoding="utf-8") as f:
        return RunManifest(**yaml.safe_load(f))
