"""Flat key = value run configuration files.

First line is a version magic; the rest are ``key = value`` pairs with
``#`` comments.  Every field round-trips exactly through save/load.
"""

from dataclasses import dataclass, field

from .transfer import DEFAULT_METHODS
from .tuning import HyperGrid

__all__ = ["CONFIG_MAGIC", "RunConfig", "load_config", "save_config"]

CONFIG_MAGIC = "respire-config v1"

DEFAULT_COMPRESSION_LEVELS = (1.0, 0.5, 0.25, 0.1, 0.05)


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs beyond its input paths."""

    seed: int = 0
    train_frac: float = 0.8
    cv_folds: int = 3
    min_points: int = 30
    methods: tuple = DEFAULT_METHODS
    adapter: str = "both"
    compression_levels: tuple = DEFAULT_COMPRESSION_LEVELS
    grid: HyperGrid = field(default_factory=HyperGrid)
    output_dir: str = "."
    datasets: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError(f"train_frac must lie in (0, 1), got {self.train_frac}")
        if self.cv_folds < 2:
            raise ValueError(f"cv_folds must be >= 2, got {self.cv_folds}")
        if self.min_points < 2:
            raise ValueError(f"min_points must be >= 2, got {self.min_points}")
        if self.adapter not in ("on", "off", "both"):
            raise ValueError(f"adapter must be on/off/both, got {self.adapter!r}")
        object.__setattr__(self, "methods", tuple(self.methods))
        levels = tuple(float(v) for v in self.compression_levels)
        if any(not 0.0 < v <= 1.0 for v in levels):
            raise ValueError("compression_levels must lie in (0, 1]")
        object.__setattr__(self, "compression_levels", levels)
        object.__setattr__(self, "datasets", dict(self.datasets))


def _floats(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip() != "")


def _strings(text: str):
    return tuple(v.strip() for v in text.split(",") if v.strip() != "")


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ValueError(f"{path}: cannot open ({exc})") from None
    if not lines or lines[0].strip() != CONFIG_MAGIC:
        raise ValueError(f"{path}:1: expected magic line {CONFIG_MAGIC!r}")

    fields = {}
    grid_fields = {}
    datasets = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key == "seed":
                fields["seed"] = int(value)
            elif key == "train_frac":
                fields["train_frac"] = float(value)
            elif key == "cv_folds":
                fields["cv_folds"] = int(value)
            elif key == "min_points":
                fields["min_points"] = int(value)
            elif key == "methods":
                fields["methods"] = _strings(value)
            elif key == "adapter":
                fields["adapter"] = value
            elif key == "compression_levels":
                fields["compression_levels"] = _floats(value)
            elif key == "output_dir":
                fields["output_dir"] = value
            elif key == "grid.families":
                grid_fields["families"] = _strings(value)
            elif key == "grid.alphas":
                grid_fields["alphas"] = _floats(value)
            elif key == "grid.q_ls":
                grid_fields["q_ls"] = _floats(value)
            elif key == "grid.etas":
                grid_fields["etas"] = _floats(value)
            elif key == "grid.lams":
                grid_fields["lams"] = _floats(value)
            elif key.startswith("dataset."):
                datasets[key[len("dataset."):]] = value
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    try:
        return RunConfig(grid=HyperGrid(**grid_fields), datasets=datasets, **fields)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def save_config(cfg: RunConfig, path: str):
    lines = [
        CONFIG_MAGIC,
        f"seed = {cfg.seed}",
        f"train_frac = {repr(cfg.train_frac)}",
        f"cv_folds = {cfg.cv_folds}",
        f"min_points = {cfg.min_points}",
        f"methods = {','.join(cfg.methods)}",
        f"adapter = {cfg.adapter}",
        f"compression_levels = {','.join(repr(v) for v in cfg.compression_levels)}",
        f"grid.families = {','.join(cfg.grid.families)}",
        f"grid.alphas = {','.join(repr(v) for v in cfg.grid.alphas)}",
        f"grid.q_ls = {','.join(repr(v) for v in cfg.grid.q_ls)}",
        f"grid.etas = {','.join(repr(v) for v in cfg.grid.etas)}",
        f"grid.lams = {','.join(repr(v) for v in cfg.grid.lams)}",
        f"output_dir = {cfg.output_dir}",
    ]
    for name, dspath in cfg.datasets.items():
        lines.append(f"dataset.{name} = {dspath}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
