"""Mapping generated command words onto a robot's closed vocabulary.

Each slot of a grammar-free command (hand, action, object) is resolved to
the nearest token of the matching candidate set under normalized edit
distance: similarity(a, b) = 1 - lev(a, b) / max(len(a), len(b)).  A command
is accepted only when every present slot reaches the similarity threshold;
rejections always name the offending slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import DataError, UsageError

SLOT_NAMES = ("hand", "action", "object")
DEFAULT_THRESHOLD = 0.8


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance (unit-cost insert/delete/substitute)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def similarity(a: str, b: str) -> float:
    """1 - edit_distance / max length; 1.0 iff the tokens are equal."""
    if not a and not b:
        return 1.0
    return 1.0 - edit_distance(a, b) / max(len(a), len(b))


def map_token(token: str, candidates: Iterable[str]) -> tuple[str, float]:
    """Most similar candidate and its similarity; ties pick the
    lexicographically smallest candidate."""
    if not token:
        raise UsageError("cannot map an empty token")
    pool = sorted(candidates)
    if not pool:
        raise UsageError("candidate set is empty")
    best, best_sim = pool[0], similarity(token, pool[0])
    for cand in pool[1:]:
        s = similarity(token, cand)
        if s > best_sim:
            best, best_sim = cand, s
    return best, best_sim


@dataclass(frozen=True)
class RobotVocabulary:
    """Closed robot token sets per slot; sets must be disjoint and non-empty."""

    hands: frozenset[str]
    actions: frozenset[str]
    objects: frozenset[str]
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        for name, pool in (("hand", self.hands), ("action", self.actions),
                           ("object", self.objects)):
            if not pool:
                raise DataError(f"robot vocabulary slot {name!r} is empty")
        if (self.hands & self.actions) or (self.hands & self.objects) \
                or (self.actions & self.objects):
            raise DataError("robot vocabulary slots must be disjoint")
        if not 0.0 <= self.threshold <= 1.0:
            raise DataError(f"threshold {self.threshold} outside [0, 1]")

    def pool(self, slot: str) -> frozenset[str]:
        return {"hand": self.hands, "action": self.actions, "object": self.objects}[slot]


def load_robot_vocab(path, threshold: float = DEFAULT_THRESHOLD) -> RobotVocabulary:
    """Parse `slot<TAB>token` lines (slot in hand/action/object); blank and
    '#' lines are skipped; anything else is an error naming the line."""
    pools: dict[str, set[str]] = {name: set() for name in SLOT_NAMES}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read robot vocabulary {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise DataError(f"{path}: line {lineno}: expected slot<TAB>token")
        slot, token = line.split("\t", 1)
        slot, token = slot.strip(), token.strip()
        if slot not in SLOT_NAMES:
            raise DataError(f"{path}: line {lineno}: unknown slot {slot!r}")
        if not token or " " in token:
            raise DataError(f"{path}: line {lineno}: bad token {token!r}")
        pools[slot].add(token)
    return RobotVocabulary(
        hands=frozenset(pools["hand"]),
        actions=frozenset(pools["action"]),
        objects=frozenset(pools["object"]),
        threshold=threshold,
    )


@dataclass(frozen=True)
class MappedCommand:
    """Slot-resolved command; ``accepted`` iff every present slot reached
    the threshold.  ``reason`` names the first offending slot on rejection."""

    hand: str | None = None
    action: str | None = None
    object: str | None = None
    similarities: dict[str, float] = field(default_factory=dict)
    accepted: bool = False
    reason: str | None = None

    def resolved(self) -> list[str]:
        return [t for t in (self.hand, self.action, self.object) if t is not None]


def map_command(tokens, robot_vocab: RobotVocabulary) -> MappedCommand:
    """Slot-wise mapping of a 1-3 token grammar-free command.

    Token order is hand, action, object; trailing slots may be absent
    (e.g. intransitive actions carry no object).  Total over all inputs:
    ill-formed commands come back rejected with a reason, never as an
    exception.
    """
    tokens = [str(t) for t in tokens]
    if not tokens:
        return MappedCommand(reason="empty command")
    if len(tokens) > len(SLOT_NAMES):
        return MappedCommand(reason=f"expected 1-3 tokens, got {len(tokens)}")
    resolved: dict[str, str] = {}
    sims: dict[str, float] = {}
    reason = None
    for slot, token in zip(SLOT_NAMES, tokens):
        if not token:
            return MappedCommand(similarities=sims, reason=f"{slot} token is empty")
        best, sim = map_token(token, robot_vocab.pool(slot))
        resolved[slot] = best
        sims[slot] = sim
        if sim < robot_vocab.threshold and reason is None:
            reason = (f"{slot} {token!r}: best candidate {best!r} similarity "
                      f"{sim:.3f} below threshold {robot_vocab.threshold:g}")
    return MappedCommand(
        hand=resolved.get("hand"), action=resolved.get("action"),
        object=resolved.get("object"), similarities=sims,
        accepted=reason is None, reason=reason,
    )
