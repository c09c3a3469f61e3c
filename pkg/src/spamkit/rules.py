"""Rule-based spam pre-filter.

A message is flagged when any rule matches; a rule matches when any of its
phrase patterns occurs as a case-insensitive substring of the
whitespace-normalized text (word-boundary anchored for single-word
patterns) and, if the rule demands it, the text carries a shortened link.
Rules run on raw message text, before any normalization or stemming.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import IoFailure, SchemaError

DEFAULT_LINK_HOSTS = ("bit.ly", "goo.gl")

_URL_RE = re.compile(r"https?://([^\s/]+)", re.IGNORECASE)


class RuleCategory(enum.Enum):
    BVN = "bvn"
    INVESTMENT = "investment"
    FAKE_JOB = "fake-job"
    MARKETING = "marketing"


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _compile_pattern(pattern: str, whole_word: bool | None) -> re.Pattern:
    normalized = _normalize_ws(pattern)
    if whole_word is None:
        whole_word = len(normalized.split()) == 1
    escaped = re.escape(normalized)
    if whole_word:
        # Anchor only at ends that are word characters; \b next to
        # punctuation would never match.
        if normalized and (normalized[0].isalnum() or normalized[0] == "_"):
            escaped = r"\b" + escaped
        if normalized and (normalized[-1].isalnum() or normalized[-1] == "_"):
            escaped = escaped + r"\b"
    return re.compile(escaped, re.IGNORECASE)


@dataclass(frozen=True)
class Rule:
    id: str
    category: RuleCategory
    patterns: tuple[str, ...]
    requires_short_link: bool = False
    whole_word: bool | None = None
    _compiled: tuple[re.Pattern, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.patterns and not self.requires_short_link:
            raise SchemaError(f"rule {self.id}: patterns empty and no short-link requirement")
        for p in self.patterns:
            if not p.strip():
                raise SchemaError(f"rule {self.id}: empty pattern string")
        object.__setattr__(
            self, "_compiled", tuple(_compile_pattern(p, self.whole_word) for p in self.patterns)
        )


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    link_host_patterns: tuple[str, ...] = DEFAULT_LINK_HOSTS

    def __post_init__(self):
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise SchemaError(f"duplicate rule id {dup!r}")

    def to_json(self) -> dict:
        return {
            "link_hosts": list(self.link_host_patterns),
            "rules": [
                {
                    "id": r.id,
                    "category": r.category.value,
                    "patterns": list(r.patterns),
                    "requires_short_link": r.requires_short_link,
                    "whole_word": r.whole_word,
                }
                for r in self.rules
            ],
        }


@dataclass(frozen=True)
class RuleVerdict:
    flagged: bool
    matched_rule_ids: tuple[str, ...]
    categories: frozenset[RuleCategory]


def detect_short_links(text: str, hosts=DEFAULT_LINK_HOSTS) -> bool:
    """True iff the text contains an http(s) URL on a configured shortener host."""
    lowered = [h.lower() for h in hosts]
    for match in _URL_RE.finditer(text):
        host = match.group(1).lower()
        if any(fragment in host for fragment in lowered):
            return True
    return False


def ruleset_from_json(doc: dict) -> RuleSet:
    if not isinstance(doc, dict) or "rules" not in doc:
        raise SchemaError("rules document must be an object with a 'rules' array")
    rules = []
    for raw in doc["rules"]:
        rule_id = raw.get("id")
        if not rule_id:
            raise SchemaError("rule without an id")
        try:
            category = RuleCategory(raw["category"])
        except (KeyError, ValueError):
            raise SchemaError(f"rule {rule_id}: unknown category {raw.get('category')!r}")
        rules.append(
            Rule(
                id=rule_id,
                category=category,
                patterns=tuple(raw.get("patterns", [])),
                requires_short_link=bool(raw.get("requires_short_link", False)),
                whole_word=raw.get("whole_word"),
            )
        )
    hosts = tuple(doc.get("link_hosts", DEFAULT_LINK_HOSTS))
    return RuleSet(rules=tuple(rules), link_host_patterns=hosts)


def load_rules(path: str) -> RuleSet:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as exc:
        raise IoFailure(f"cannot read rules file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"rules file {path} is not valid JSON: {exc}") from exc
    return ruleset_from_json(doc)


def default_ruleset() -> RuleSet:
    text = resources.files("spamkit.data").joinpath("default_rules.json").read_text("utf-8")
    return ruleset_from_json(json.loads(text))


def match_message(text: str, ruleset: RuleSet) -> RuleVerdict:
    """Evaluate every rule against one raw message."""
    normalized = _normalize_ws(text)
    has_short_link = None  # computed lazily; most rules never need it
    matched: list[str] = []
    categories: set[RuleCategory] = set()
    for rule in ruleset.rules:
        pattern_ok = not rule.patterns or any(c.search(normalized) for c in rule._compiled)
        if not pattern_ok:
            continue
        if rule.requires_short_link:
            if has_short_link is None:
                has_short_link = detect_short_links(text, ruleset.link_host_patterns)
            if not has_short_link:
                continue
        matched.append(rule.id)
        categories.add(rule.category)
    return RuleVerdict(
        flagged=bool(matched),
        matched_rule_ids=tuple(matched),
        categories=frozenset(categories),
    )
