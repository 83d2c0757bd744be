"""Environment configuration for the pixel attribution toolkit."""

import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

# Load environment variables
load_dotenv()


class Config(BaseModel):
    """Configuration settings read from the environment."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    # Parallelism, 0 means one worker per CPU
    threads: int = Field(default_factory=lambda: int(os.getenv("PCIM_THREADS", "0")), ge=0)

    # Paths
    project_root: Path = Field(default_factory=lambda: Path(__file__).parent.parent)
    output_root: Path = Field(default_factory=lambda: Path(os.getenv("PCIM_OUTPUT_ROOT", "runs")))

    def resolved_threads(self) -> int:
        """Number of worker threads to use."""
        if self.threads == 0:
            return os.cpu_count() or 1
        return self.threads

    def default_output(self, name: str) -> Path:
        """Output directory used when a command gets no --out flag."""
        return self.output_root / name


def get_config() -> Config:
    """Get the configuration instance."""
    return Config()
