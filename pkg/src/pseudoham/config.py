"""Every tunable constant of the algorithms, in one place.

Each dataclass documents the asymptotic value of a constant next to the
default used at laptop scale.  ``None`` means "derive from n and d using the
asymptotic formula".  ``ASYMPTOTIC`` collects the asymptotic settings and
``DESK`` the laptop-scale ones; the desk profile is the default everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


def log2(x: float) -> float:
    return math.log2(max(x, 2.0))


@dataclass(frozen=True)
class RotationConfig:
    delta_frac: float = 0.01             # clean-collection degree delta = d/100
    k: int | None = None                 # intervals per half path; None: ceil(30 log2 n)
    gamma: float | None = None           # spread fraction; None: C / (log2 n)^(1/3)
    gamma_constant: float = 1.0          # the unnamed C above
    depth_cap: int | None = None         # rotation depth; None: ceil(log2 n)
    restricted_target: int | None = None  # endpoints wanted inside a clean set; None: delta n / 200 d
    close_target: int | None = None      # endpoints per side when closing; None: as restricted_target
    path_clean_frac: float = 0.25        # a subpath A is cleaned to degree path_clean_frac * d|A|/n
    robust: bool = True                  # try the clean-collection closing pipeline first
    robust_min_n: int = 0                # below this many path vertices go straight to plain closing
    posa_depth_cap: int | None = None    # depth for the plain fallback; None: unbounded
    posa_breadth: int | None = None      # second-phase starts in plain closing; None: all
    retries: int = 50

    def k_for(self, n: int) -> int:
        return self.k if self.k is not None else math.ceil(30 * log2(n))

    def gamma_for(self, n: int) -> float:
        if self.gamma is not None:
            return self.gamma
        return self.gamma_constant / log2(n) ** (1 / 3)

    def cap_for(self, n: int) -> int:
        return self.depth_cap if self.depth_cap is not None else math.ceil(log2(n))

    def restricted_target_for(self, n: int, d: float) -> int:
        if self.restricted_target is not None:
            return self.restricted_target
        delta = self.delta_frac * d
        return max(1, math.ceil(delta * n / (200 * d)))

    def close_target_for(self, n: int, d: float) -> int:
        if self.close_target is not None:
            return self.close_target
        return self.restricted_target_for(n, d)


@dataclass(frozen=True)
class ConnectorConfig:
    max_degree: int = 3                  # D: binary out-trees need total degree 3
    s_frac: float = 0.1                  # goodness scale s = s_frac * |V(H)|
    s_max: int | None = 4                # cap on s for the sampled check; None: no cap
    exhaustive_limit: int = 18           # exhaustive goodness check up to this many H-vertices
    tree_frac: float = 1 / 50            # each connecting tree stops at tree_frac * |V(H)| vertices
    tree_min: int = 8                    # but is always allowed at least this many
    colourings: int = 20                 # fresh random colourings before giving up
    check_every: bool = False            # run the full goodness check after every tree operation
    search_fallback: bool = False        # breadth-first search when the trees fail to meet


@dataclass(frozen=True)
class ForestConfig:
    r: int = 5                           # factors in the regular subdigraph
    merge: bool = True                   # undirected rotation merging of leftover paths
    merge_cap: int | None = None         # rotation depth while merging; None: ceil(log2 n)
    merge_target: int = 256              # endpoints explored per merge attempt


@dataclass(frozen=True)
class AbsorberConfig:
    max_cycle_len: int = 6               # shortest cycles searched up to this length
    cycle_target: int | None = None      # cycles wanted; None: n / (2 log2 n), or cover_frac below
    cover_frac: float | None = None      # stop once the cycles cover this fraction of V
    keep_prob: float = 0.8               # sparsification keep probability
    outside_frac: float = 0.1            # every vertex keeps d/10 neighbours off the cycles
    trim_frac: float = 1 / 3             # cycles dropped at each end of the spine
    kept_slack: float = 0.1              # sparsification must keep 3/4 (1 - slack) of the cycles
    flex_threshold_frac: float = 0.25    # flexible set cleaned to degree frac * d|F|/n
    endpoint_frac: float = 0.25          # endpoints need endpoint_frac * d|F|/n flexible neighbours
    path_ratio: float | None = None      # residual paths <= path_ratio * l; None: 1 / (100 log2 n)
    endpoint_window: int | None = None   # re-termination window; None: 2 lambda n / d
    min_cycles: int = 24                 # cycle-supply heuristic for the auto strategy
    min_n: int = 128
    attempts: int = 6                    # sparsification seeds tried
    retries: int = 8                     # fresh seeds for sparsify / thread / connect
    fallback: bool = True                # hand over to rotation when absorbing keeps failing

    def cycle_target_for(self, n: int) -> int:
        if self.cycle_target is not None:
            return self.cycle_target
        return max(1, math.ceil(n / (2 * log2(n))))

    def path_budget(self, l: int, n: int) -> int:
        ratio = self.path_ratio if self.path_ratio is not None else 1 / (100 * log2(n))
        return max(1, int(ratio * l))


@dataclass(frozen=True)
class Profile:
    name: str
    rotation: RotationConfig = field(default_factory=RotationConfig)
    connector: ConnectorConfig = field(default_factory=ConnectorConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    absorber: AbsorberConfig = field(default_factory=AbsorberConfig)

    def with_rotation(self, **kw) -> "Profile":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, rotation=replace(self.rotation, **kw))


ASYMPTOTIC = Profile(
    "asymptotic",
    rotation=RotationConfig(robust_min_n=0),
    connector=ConnectorConfig(tree_frac=1 / 50, tree_min=1),
)

DESK = Profile(
    "desk",
    rotation=RotationConfig(k=8, gamma=0.25, restricted_target=96, close_target=96,
                            robust_min_n=200, posa_breadth=48),
    connector=ConnectorConfig(tree_frac=1 / 12, tree_min=16, search_fallback=True),
    absorber=AbsorberConfig(trim_frac=0.0, endpoint_window=2, cover_frac=0.7, path_ratio=0.5),
)

PROFILES = {"asymptotic": ASYMPTOTIC, "desk": DESK}
