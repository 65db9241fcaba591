"""Uniform augmentation-policy sampling and application.

A :class:`SearchSpace` is the set of enabled augmentation kinds, each with
the magnitude it will carry when sampled.  :func:`sample_policy` draws n
distinct kinds by partial Fisher-Yates shuffle (uniform, without
replacement) and :func:`apply_policy` composes them in shuffle order, each
step on its own forked rng stream so one operator's draw count can never
perturb another's randomness.

Seed derivation for batch work is pinned in :class:`SeedPlan` so any
(path, copy) pair maps to the same 64-bit seed on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .augment import MAGNITUDE_SPECS, AugmentationKind, MagnitudeSpec, apply_one
from .errors import DuplicateKind, InvalidN, InvalidParams
from .rng import GOLDEN, MASK64, RandomSource, fnv1a64, splitmix64
from .signal import Waveform

CANONICAL_ORDER: tuple[AugmentationKind, ...] = tuple(AugmentationKind)

# Table 1's nine; trim and bsf exist but are opt-in
DEFAULT_KINDS: tuple[AugmentationKind, ...] = tuple(
    k for k in CANONICAL_ORDER if k not in (AugmentationKind.TRIM, AugmentationKind.BAND_STOP_FILTER)
)

DEFAULT_N = 2


@dataclass(frozen=True)
class SpaceEntry:
    kind: AugmentationKind
    spec: MagnitudeSpec
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "magnitude", self.spec.check(self.magnitude))


@dataclass(frozen=True)
class SearchSpace:
    """Enabled kinds with their configured magnitudes, in canonical order."""

    entries: tuple[SpaceEntry, ...]

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: CANONICAL_ORDER.index(e.kind)))
        if not entries:
            raise InvalidParams("search space must contain at least one augmentation")
        seen = set()
        for entry in entries:
            if entry.kind in seen:
                raise DuplicateKind(f"augmentation {entry.kind.value!r} listed twice")
            seen.add(entry.kind)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def kinds(self) -> tuple[AugmentationKind, ...]:
        return tuple(e.kind for e in self.entries)


def default_space() -> SearchSpace:
    return SearchSpace(tuple(SpaceEntry(k, MAGNITUDE_SPECS[k], MAGNITUDE_SPECS[k].default) for k in DEFAULT_KINDS))


@dataclass(frozen=True)
class PolicyStep:
    kind: AugmentationKind
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "magnitude", MAGNITUDE_SPECS[self.kind].check(self.magnitude))


@dataclass(frozen=True)
class Policy:
    """Ordered (kind, magnitude) steps; the output of one sampling round."""

    steps: tuple[PolicyStep, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.steps)

    def to_obj(self) -> list[dict]:
        return [{"kind": s.kind.value, "magnitude": s.magnitude} for s in self.steps]

    @classmethod
    def from_obj(cls, obj: list[dict]) -> "Policy":
        return cls(tuple(PolicyStep(AugmentationKind.from_name(s["kind"]), float(s["magnitude"])) for s in obj))


@dataclass(frozen=True)
class SeedPlan:
    """Deterministic per-(path, copy) seed derivation.

    derive = splitmix64(fnv1a64(path) XOR master_seed XOR copy_index * GOLDEN),
    all in u64 arithmetic.  Distinct paths and copies land in decorrelated
    streams regardless of scheduling.
    """

    master_seed: int

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & MASK64)

    def derive(self, path: str, copy_index: int) -> int:
        mix = fnv1a64(path.encode("utf-8")) ^ self.master_seed ^ ((copy_index * GOLDEN) & MASK64)
        return splitmix64(mix)


def sample_policy(space: SearchSpace, n: int, rng: RandomSource) -> Policy:
    """Draw n distinct augmentations uniformly, without replacement.

    Partial Fisher-Yates over the canonical-order entries: position i swaps
    with i + next_below(len - i); the first n positions become the policy,
    so application order is the shuffle order.
    """
    if n < 0 or n > len(space):
        raise InvalidN(f"n must be in [0, {len(space)}], got {n}")
    pool = list(space.entries)
    for i in range(n):
        j = i + rng.next_below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return Policy(tuple(PolicyStep(e.kind, e.magnitude) for e in pool[:n]))


def apply_policy(w: Waveform, p: Policy, rng: RandomSource) -> Waveform:
    """Apply the policy's steps in order, each on a forked sub-stream.

    Forking insulates step k+1 from however many draws step k consumed;
    any step error propagates and no partial result is returned.
    """
    out = w
    for step in p.steps:
        out = apply_one(step.kind, out, step.magnitude, rng.fork())
    return out


def _entry_from_item(item: dict) -> SpaceEntry:
    if not isinstance(item, dict) or "kind" not in item:
        raise InvalidParams(f"augmentation entry must be an object with a 'kind', got {item!r}")
    unknown = set(item) - {"kind", "magnitude", "level"}
    if unknown:
        raise InvalidParams(f"unknown augmentation entry keys: {sorted(unknown)}")
    kind = AugmentationKind.from_name(str(item["kind"]))
    spec = MAGNITUDE_SPECS[kind]
    if "magnitude" in item and "level" in item:
        raise InvalidParams(f"{kind.value}: 'magnitude' and 'level' are mutually exclusive")
    if "level" in item:
        magnitude = spec.from_level(float(item["level"]))
    elif "magnitude" in item:
        magnitude = float(item["magnitude"])
    else:
        magnitude = spec.default
    return SpaceEntry(kind, spec, magnitude)


def space_from_config(cfg: dict) -> SearchSpace:
    """Build the search space from a parsed config document.

    An absent ``augmentations`` key enables the default nine kinds with
    default magnitudes; per-kind overrides give either ``magnitude`` in
    natural units or a normalized ``level`` in [0, 1].
    """
    if not isinstance(cfg, dict):
        raise InvalidParams(f"config must be a JSON object, got {type(cfg).__name__}")
    items = cfg.get("augmentations")
    if items is None:
        return default_space()
    if not isinstance(items, list):
        raise InvalidParams("'augmentations' must be an array")
    return SearchSpace(tuple(_entry_from_item(item) for item in items))


def n_from_config(cfg: dict, space: SearchSpace) -> int:
    """Resolve the policy size: explicit ``n`` wins, else min(2, |space|)."""
    n = cfg.get("n")
    if n is None:
        return min(DEFAULT_N, len(space))
    if not isinstance(n, int) or isinstance(n, bool):
        raise InvalidParams(f"'n' must be an integer, got {n!r}")
    return n
