"""Pipeline configuration, read from YAML.

Relative paths are resolved against the directory holding the config file.
The schema, with defaults::

    paths:
      corpus: corpus.jsonl          # required
      embeddings: vectors.txt       # required
      label_map: label_map.json     # optional, enables hashtag labels
      cohort: cohort.txt            # optional, one user id per line
      output: out                   # default "out"
    topics:
      k: 22                         # null -> elbow scan over k_list
      k_list: [2, 3, ..., 40]
      seeds: [0, 20000, 40000, 60000, 80000]
      max_iter: 100
      tol: 1.0e-4
    em:
      max_iter: 200
      tol: 1.0e-4
      variance_floor: 1.0e-8
    users:
      k: 5                          # null -> elbow scan over k_list
      k_list: [1, 2, ..., 10]
      seeds: [0, 20000, 40000, 60000, 80000]
      metric: euclidean             # or cosine
      max_iter: 100
      tol: 1.0e-4
    report:
      top_tweet_threshold: 0.9
      top_tweets: 10
    baseline:
      enabled: false
      stopwords: null               # path; packaged Spanish list when null
      keywords: null                # path; packaged politics list when null
      l2: 1.0e-4
      max_iter: 300
      test_fraction: 0.2
      seed: 0
      top_n: [30, 50, 100, 200]
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..errors import ConfigError

DEFAULT_SEEDS = [0, 20000, 40000, 60000, 80000]


@dataclass
class TopicsConfig:
    k: int | None = 22
    k_list: list[int] = field(default_factory=lambda: list(range(2, 41)))
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    max_iter: int = 100
    tol: float = 1e-4


@dataclass
class EmConfig:
    max_iter: int = 200
    tol: float = 1e-4
    variance_floor: float = 1e-8


@dataclass
class UsersConfig:
    k: int | None = 5
    k_list: list[int] = field(default_factory=lambda: list(range(1, 11)))
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    metric: str = "euclidean"
    max_iter: int = 100
    tol: float = 1e-4


@dataclass
class ReportConfig:
    top_tweet_threshold: float = 0.9
    top_tweets: int = 10


@dataclass
class BaselineConfig:
    enabled: bool = False
    stopwords: str | None = None
    keywords: str | None = None
    l2: float = 1e-4
    max_iter: int = 300
    test_fraction: float = 0.2
    seed: int = 0
    top_n: list[int] = field(default_factory=lambda: [30, 50, 100, 200])


@dataclass
class PipelineConfig:
    corpus: Path
    embeddings: Path
    output: Path
    label_map: Path | None = None
    cohort: Path | None = None
    topics: TopicsConfig = field(default_factory=TopicsConfig)
    em: EmConfig = field(default_factory=EmConfig)
    users: UsersConfig = field(default_factory=UsersConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def section(self, name) -> dict:
        return dataclasses.asdict(getattr(self, name))

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Copy that uses a single seed everywhere."""
        return dataclasses.replace(
            self,
            topics=dataclasses.replace(self.topics, seeds=[seed]),
            users=dataclasses.replace(self.users, seeds=[seed]),
            baseline=dataclasses.replace(self.baseline, seed=seed),
        )

    def validate(self) -> "PipelineConfig":
        if self.topics.k is not None and self.topics.k < 1:
            raise ConfigError("topics.k must be positive")
        for name, sec in (("topics", self.topics), ("users", self.users)):
            if not sec.seeds:
                raise ConfigError(f"{name}.seeds must not be empty")
            if sec.k is None and (not sec.k_list or sorted(set(sec.k_list)) != list(sec.k_list)):
                raise ConfigError(f"{name}.k_list must be nonempty and strictly increasing")
        if self.users.metric not in ("euclidean", "cosine"):
            raise ConfigError(f"users.metric must be 'euclidean' or 'cosine', got {self.users.metric!r}")
        if not 0 < self.report.top_tweet_threshold <= 1:
            raise ConfigError("report.top_tweet_threshold must be in (0, 1]")
        if not 0 < self.baseline.test_fraction < 1:
            raise ConfigError("baseline.test_fraction must be in (0, 1)")
        if self.em.variance_floor <= 0:
            raise ConfigError("em.variance_floor must be positive")
        if self.output.exists() and not self.output.is_dir():
            raise ConfigError(f"output path {self.output} is not a directory")
        return self


def _section(cls, raw, name):
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"section '{name}': {exc}") from None


def from_dict(obj: dict, base_dir=".") -> PipelineConfig:
    base = Path(base_dir)
    obj = dict(obj or {})
    paths = obj.pop("paths", None) or {}
    for key in ("corpus", "embeddings"):
        if not paths.get(key):
            raise ConfigError(f"paths.{key} is required")

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    sections = {"topics": TopicsConfig, "em": EmConfig, "users": UsersConfig,
                "report": ReportConfig, "baseline": BaselineConfig}
    unknown = set(obj) - set(sections)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    parsed = {name: _section(cls, obj.get(name), name) for name, cls in sections.items()}
    bl = parsed["baseline"]
    if bl.stopwords:
        bl.stopwords = str(resolve(bl.stopwords))
    if bl.keywords:
        bl.keywords = str(resolve(bl.keywords))
    cfg = PipelineConfig(
        corpus=resolve(paths["corpus"]),
        embeddings=resolve(paths["embeddings"]),
        output=resolve(paths.get("output") or "out"),
        label_map=resolve(paths.get("label_map")),
        cohort=resolve(paths.get("cohort")),
        **parsed,
    )
    return cfg.validate()


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            obj = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    return from_dict(obj, path.parent)
