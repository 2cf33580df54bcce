"""Options shared by every subcommand handler."""

from dataclasses import dataclass, replace
from pathlib import Path


@dataclass(frozen=True)
class RunOptions:
    out: Path
    threads: int | None = None
    quick: bool = False
    reproducible: bool = False

    def under(self, name: str) -> "RunOptions":
        """Same options writing into the subdirectory ``name``."""
        return replace(self, out=self.out / name)
