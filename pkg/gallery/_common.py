"""Shared helpers for the gallery scripts."""

from pathlib import Path

OUT = Path(__file__).resolve().parent / "output"


def figure(name, draw):
    """Save ``draw(ax)`` to ``output/<name>.svg`` if matplotlib is available."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print(f"(matplotlib missing, skipped {name}.svg)")
        return
    OUT.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    draw(ax)
    fig.tight_layout()
    fig.savefig(OUT / f"{name}.svg")
    plt.close(fig)
    print(f"wrote {OUT / (name + '.svg')}")
