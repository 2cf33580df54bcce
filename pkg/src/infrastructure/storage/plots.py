"""SVG convergence plots."""

import logging
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

HASH_SALT = "dporolab"
MARKERS = ["o", "s", "^", "D", "v", "P"]


def write_loglog_svg(
    path: Path,
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "epsilon",
    ylabel: str = "error",
    slopes: Mapping[str, float] | None = None,
    reproducible: bool = False,
) -> Path:
    """Log-log plot of one or more ``(x, y)`` series, labelled with their fitted slopes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    slopes = slopes or {}
    with plt.rc_context({"svg.hashsalt": HASH_SALT if reproducible else None}):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for k, (label, (x, y)) in enumerate(series.items()):
            if label in slopes:
                label = f"{label} (slope {slopes[label]:.2f})"
            ax.loglog(x, y, marker=MARKERS[k % len(MARKERS)], label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None} if reproducible else None)
        plt.close(fig)
    logger.debug(f"Wrote {path}")
    return path
