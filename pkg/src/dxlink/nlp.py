"""Free-text and XML case intake: lexicon matching and negation scoping.

Extraction walks the token stream left to right taking the longest phrase
match at each position. A mention is absent when a negation trigger appears
earlier in the same clause; clauses break at sentence punctuation and at
"but".
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from enum import Enum

from .errors import CaseFormatError, LexiconConflictError
from .inference import Demographics, Evidence
from .kb import KnowledgeBase

NEGATION_TRIGGERS = frozenset({"no", "not", "denies", "without", "absent"})
CLAUSE_BREAK_CHARS = frozenset(".;!?\n")
CLAUSE_BREAK_TOKENS = frozenset({"but"})

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class Polarity(Enum):
    Present = "present"
    Absent = "absent"


@dataclass(frozen=True)
class Mention:
    finding_id: int
    polarity: Polarity
    start: int
    end: int
    text: str


class Lexicon:
    """Lowercased phrase -> finding id map built from names and synonyms."""

    def __init__(self, phrases: dict[str, int]):
        self.phrases = dict(phrases)
        self.max_tokens = max((len(p.split()) for p in self.phrases), default=0)

    def __len__(self) -> int:
        return len(self.phrases)

    def __contains__(self, phrase: str) -> bool:
        return normalize_phrase(phrase) in self.phrases

    def lookup(self, phrase: str) -> int | None:
        return self.phrases.get(normalize_phrase(phrase))

    def search(self, prefix: str, limit: int = 20) -> list[tuple[str, int]]:
        """Phrases starting with the prefix, alphabetically, at most limit."""
        needle = normalize_phrase(prefix)
        if not needle:
            return []
        hits = [(p, fid) for p, fid in self.phrases.items() if p.startswith(needle)]
        hits.sort()
        return hits[:limit]


def normalize_phrase(phrase: str) -> str:
    return " ".join(_TOKEN_RE.findall(phrase.lower()))


def build_lexicon(kb: KnowledgeBase) -> Lexicon:
    """Index every finding name and synonym; conflicting phrases are fatal."""
    phrases: dict[str, int] = {}
    for fid in sorted(kb.findings):
        finding = kb.findings[fid]
        for raw in (finding.name, *finding.synonyms):
            phrase = normalize_phrase(raw)
            if not phrase:
                continue
            if phrase in phrases and phrases[phrase] != fid:
                raise LexiconConflictError(phrase, phrases[phrase], fid)
            phrases[phrase] = fid
    return Lexicon(phrases)


def _token_stream(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text.lower())]


def _clause_starts(text: str, tokens: list[tuple[str, int, int]]) -> list[int]:
    """For each token, the index of the first token of its clause."""
    starts = []
    clause_start = 0
    prev_end = 0
    for idx, (tok, start, _end) in enumerate(tokens):
        if any(ch in CLAUSE_BREAK_CHARS for ch in text[prev_end:start]):
            clause_start = idx
        if tok in CLAUSE_BREAK_TOKENS:
            clause_start = idx + 1
        starts.append(clause_start)
        prev_end = _end
    return starts


def extract_findings(lexicon: Lexicon, text: str) -> list[Mention]:
    """Greedy longest-match extraction with clause-scoped negation."""
    tokens = _token_stream(text)
    clause_of = _clause_starts(text, tokens)
    mentions: list[Mention] = []
    trigger_at: list[int] = []  # token indices of negation triggers

    i = 0
    n = len(tokens)
    while i < n:
        matched = None
        longest = min(lexicon.max_tokens, n - i)
        for length in range(longest, 0, -1):
            phrase = " ".join(tok for tok, _, _ in tokens[i:i + length])
            fid = lexicon.phrases.get(phrase)
            if fid is not None:
                matched = (fid, length)
                break
        if matched is None:
            if tokens[i][0] in NEGATION_TRIGGERS:
                trigger_at.append(i)
            i += 1
            continue
        fid, length = matched
        negated = any(
            t >= clause_of[i] and t < i for t in trigger_at
        )
        start = tokens[i][1]
        end = tokens[i + length - 1][2]
        mentions.append(Mention(
            finding_id=fid,
            polarity=Polarity.Absent if negated else Polarity.Present,
            start=start,
            end=end,
            text=text[start:end],
        ))
        i += length
    return mentions


def evidence_from_mentions(mentions: list[Mention]) -> tuple[set[int], set[int]]:
    positive: set[int] = set()
    negative: set[int] = set()
    for m in mentions:
        if m.polarity is Polarity.Present:
            positive.add(m.finding_id)
        else:
            negative.add(m.finding_id)
    return positive, negative


@dataclass(frozen=True)
class Case:
    """Evidence plus demographics, raw text, and an optional truth label."""

    evidence: Evidence
    text: str = ""
    truth: int | None = None


def _polarity_from_attr(value: str) -> Polarity:
    try:
        return Polarity(value)
    except ValueError:
        raise CaseFormatError(
            f"polarity must be 'present' or 'absent', got {value!r}"
        ) from None


def parse_case_xml(payload: bytes, lexicon: Lexicon,
                   known_findings: set[int] | None = None) -> Case:
    """Parse a <case> document; explicit findings bypass text extraction."""
    try:
        root = ET.fromstring(payload)
    except ET.ParseError as exc:
        raise CaseFormatError(f"malformed XML: {exc}") from exc
    if root.tag != "case":
        raise CaseFormatError(f"root element must be <case>, got <{root.tag}>")

    positive: set[int] = set()
    negative: set[int] = set()
    text_parts: list[str] = []
    age = sex = nationality = None

    for child in root:
        if child.tag == "finding":
            raw_id = child.get("id")
            if raw_id is None or not raw_id.isdigit():
                raise CaseFormatError(f"finding element needs a numeric id, got {raw_id!r}")
            fid = int(raw_id)
            if known_findings is not None and fid not in known_findings:
                raise CaseFormatError(f"unknown finding id {fid}")
            polarity = _polarity_from_attr(child.get("polarity", "present"))
            (positive if polarity is Polarity.Present else negative).add(fid)
        elif child.tag == "text":
            text_parts.append(child.text or "")
        elif child.tag == "age":
            raw = (child.text or "").strip()
            if raw:
                if not raw.isdigit():
                    raise CaseFormatError(f"age must be an integer, got {raw!r}")
                age = int(raw)
        elif child.tag == "sex":
            sex = (child.text or "").strip() or None
        elif child.tag == "nationality":
            nationality = (child.text or "").strip() or None
        else:
            raise CaseFormatError(f"unexpected element <{child.tag}>")

    text = "\n".join(t for t in text_parts if t)
    if text:
        ext_pos, ext_neg = evidence_from_mentions(extract_findings(lexicon, text))
        positive |= ext_pos
        negative |= ext_neg

    conflict = positive & negative
    if conflict:
        raise CaseFormatError(
            f"findings asserted and negated at once: {sorted(conflict)}"
        )

    truth_attr = root.get("truth")
    truth = None
    if truth_attr is not None:
        if not truth_attr.isdigit():
            raise CaseFormatError(f"truth attribute must be a disorder id, got {truth_attr!r}")
        truth = int(truth_attr)

    evidence = Evidence(
        frozenset(positive), frozenset(negative),
        Demographics(age=age, sex=sex, nationality=nationality),
    )
    return Case(evidence=evidence, text=text, truth=truth)


def parse_case_text(payload: str, lexicon: Lexicon) -> Case:
    """Treat an entire plain-text body as the <text> of a case."""
    positive, negative = evidence_from_mentions(extract_findings(lexicon, payload))
    conflict = positive & negative
    if conflict:
        raise CaseFormatError(
            f"findings asserted and negated at once: {sorted(conflict)}"
        )
    return Case(
        evidence=Evidence(frozenset(positive), frozenset(negative)),
        text=payload,
    )
