"""Rule-based extraction of measured findings and tube observations.

Turns free-text chest X-ray reports into structured data with regexes and
phrase lexicons only: keyword gating, sentence splitting with a
spaced-decimal guard, value normalization, category tagging, negation,
and endotracheal-tube presence/measurement/placement parsing.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path

from .core import PlacementVerdict
from .errors import ExtractionError, IngestError

# Keyword gate used to skip reports that cannot contain concrete measurements.
MEASUREMENT_KEYWORDS: tuple[str, ...] = (
    "cm",
    "mm",
    "centimeter",
    "centimeters",
    "millimeter",
    "millimeters",
    "measure",
    "measures",
)


class Category(enum.Enum):
    ENDOTRACHEAL_TUBE = "endotracheal tube"
    OTHER_TUBE_CATHETER = "other tube/catheter"
    LESION = "lesion"
    PNEUMOTHORAX = "pneumothorax"
    OTHER = "other"


@dataclass(frozen=True)
class Sentence:
    """One sentence with its raw span; spans tile the whole report text."""

    index: int
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class MeasuredFinding:
    """An object with a concrete measurement attached in the same sentence.

    values_cm holds one value for scalars and (major, minor) for A x B
    patterns.  char_span is the absolute span of the measurement expression
    in the report (empty values => span of the object phrase instead).
    """

    object_name: str
    category: Category
    values_cm: tuple[float, ...]
    sentence_index: int
    char_span: tuple[int, int]
    polarity: str = "present"  # "present" | "absent"
    region: str | None = None
    ambiguous: bool = False

    @property
    def is_present(self) -> bool:
        return self.polarity == "present"


@dataclass(frozen=True)
class EttObservation:
    """Presence, tip-to-carina distance (cm, negative = below) and placement."""

    present: bool
    measurement_cm: float | None = None
    placement: PlacementVerdict | None = None

    def __post_init__(self):
        if not self.present and (self.measurement_cm is not None or self.placement is not None):
            raise ValueError("absent tube cannot carry a measurement or placement")


@dataclass(frozen=True)
class PlacementCue:
    """A placement phrase found in a tube-mentioning sentence."""

    sentence_index: int
    span: tuple[int, int]  # absolute in the report
    verdict: PlacementVerdict
    text: str


@dataclass(frozen=True)
class EttParse:
    """Full tube parse: the observation plus the anchors the updater needs."""

    observation: EttObservation
    mention_sentences: tuple[int, ...]  # non-negated tube mentions, in order
    negated_sentences: tuple[int, ...]
    finding: MeasuredFinding | None  # measured tube finding, if any
    placement_cues: tuple[PlacementCue, ...]


# ---------------------------------------------------------------------------
# Lexicon
# ---------------------------------------------------------------------------

_DEFAULT_LEXICON_ENTRIES: tuple[tuple[str, Category], ...] = (
    ("endotracheal tube", Category.ENDOTRACHEAL_TUBE),
    ("et tube", Category.ENDOTRACHEAL_TUBE),
    ("ett", Category.ENDOTRACHEAL_TUBE),
    ("tracheostomy tube", Category.OTHER_TUBE_CATHETER),
    ("picc line", Category.OTHER_TUBE_CATHETER),
    ("picc", Category.OTHER_TUBE_CATHETER),
    ("central venous line", Category.OTHER_TUBE_CATHETER),
    ("central line", Category.OTHER_TUBE_CATHETER),
    ("nasogastric tube", Category.OTHER_TUBE_CATHETER),
    ("enteric tube", Category.OTHER_TUBE_CATHETER),
    ("feeding tube", Category.OTHER_TUBE_CATHETER),
    ("chest tube", Category.OTHER_TUBE_CATHETER),
    ("catheter", Category.OTHER_TUBE_CATHETER),
    ("drain", Category.OTHER_TUBE_CATHETER),
    ("opacity", Category.LESION),
    ("mass", Category.LESION),
    ("nodule", Category.LESION),
    ("lesion", Category.LESION),
    ("consolidation", Category.LESION),
    ("pneumothorax", Category.PNEUMOTHORAX),
    ("hydropneumothorax", Category.PNEUMOTHORAX),
    ("calcification", Category.OTHER),
    ("balloon pump", Category.OTHER),
    ("effusion", Category.OTHER),
)


@dataclass(frozen=True)
class PhraseMatch:
    start: int
    end: int
    phrase: str
    category: Category


class CategoryLexicon:
    """Longest-phrase, case-insensitive matcher from phrases to categories."""

    def __init__(self, entries: tuple[tuple[str, Category], ...]):
        if not entries:
            raise ValueError("lexicon must have at least one phrase")
        self._by_phrase = {p.lower(): c for p, c in entries}
        ordered = sorted(self._by_phrase, key=len, reverse=True)
        alternation = "|".join(re.escape(p).replace(r"\ ", r"\s+") for p in ordered)
        self._pattern = re.compile(rf"\b(?:{alternation})\b", re.IGNORECASE)

    def __eq__(self, other) -> bool:
        return isinstance(other, CategoryLexicon) and self._by_phrase == other._by_phrase

    @classmethod
    def default(cls) -> "CategoryLexicon":
        return cls(_DEFAULT_LEXICON_ENTRIES)

    @classmethod
    def from_file(cls, path: str | Path) -> "CategoryLexicon":
        """Load `category<TAB>phrase` lines; '#' starts a comment."""
        categories = {c.name.lower(): c for c in Category}
        categories.update({c.value: c for c in Category})
        entries: list[tuple[str, Category]] = []
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise IngestError("expected `category<TAB>phrase`", path=str(path), line=lineno)
            cat_key, phrase = parts[0].strip().lower(), parts[1].strip()
            if cat_key not in categories:
                raise IngestError(f"unknown category {parts[0]!r}", path=str(path), line=lineno)
            if not phrase:
                raise IngestError("empty phrase", path=str(path), line=lineno)
            entries.append((phrase, categories[cat_key]))
        if not entries:
            raise IngestError("lexicon file has no entries", path=str(path))
        return cls(tuple(entries))

    def category_of(self, phrase: str) -> Category | None:
        return self._by_phrase.get(phrase.lower())

    def finditer(self, text: str) -> list[PhraseMatch]:
        out = []
        for m in self._pattern.finditer(text):
            phrase = re.sub(r"\s+", " ", m.group(0).lower())
            out.append(PhraseMatch(m.start(), m.end(), phrase, self._by_phrase[phrase]))
        return out


# ---------------------------------------------------------------------------
# Keyword gate and sentence splitting
# ---------------------------------------------------------------------------

def _keyword_pattern(keywords: tuple[str, ...]) -> re.Pattern:
    alternation = "|".join(re.escape(k) for k in sorted(keywords, key=len, reverse=True))
    return re.compile(rf"\b(?:{alternation})\b", re.IGNORECASE)


_DEFAULT_KEYWORD_RE = _keyword_pattern(MEASUREMENT_KEYWORDS)


def has_measurement_keywords(report: str, keywords: tuple[str, ...] | None = None) -> bool:
    """True when any measurement keyword occurs as a whole token."""
    pattern = _DEFAULT_KEYWORD_RE if keywords is None else _keyword_pattern(keywords)
    return pattern.search(report) is not None


_TERMINATOR_RE = re.compile(r"[.!?]+(?=\s|$)")


def split_sentences(report: str) -> list[Sentence]:
    """Split on sentence terminators; spans tile the text exactly.

    A period between digits with only whitespace after it is treated as a
    spaced decimal ("2. 0 cm"), not a boundary.  Trailing whitespace after
    the last terminator stays attached to the last sentence.
    """
    if report == "":
        return []
    boundaries = []
    for m in _TERMINATOR_RE.finditer(report):
        if "." in m.group(0):
            before = report[m.start() - 1] if m.start() > 0 else ""
            after = report[m.end():].lstrip()
            if before.isdigit() and after[:1].isdigit():
                continue  # spaced decimal, keep the sentence together
        boundaries.append(m.end())
    if boundaries and report[boundaries[-1]:].strip() == "":
        boundaries[-1] = len(report)
    if not boundaries or boundaries[-1] != len(report):
        boundaries.append(len(report))
    sentences = []
    start = 0
    for idx, end in enumerate(boundaries):
        sentences.append(Sentence(idx, start, end, report[start:end]))
        start = end
    return sentences


# ---------------------------------------------------------------------------
# Measurement expressions and value normalization
# ---------------------------------------------------------------------------

_NUM = r"\d+(?:\.\s*\d+)?"
_UNIT = r"cm|centimeters?|millimeters?|mm"
_QUALIFIER = r"(?:approximately|about|roughly|nearly|at least|less than|greater than|more than|up to|~)"

_MEASUREMENT_RE = re.compile(
    rf"""(?:{_QUALIFIER}\s+)?
         (?:
             (?P<dim_a>{_NUM})\s*(?P<dim_ua>{_UNIT})?\s*[x×]\s*(?P<dim_b>{_NUM})\s*(?P<dim_ub>{_UNIT})
           | (?P<rng_a>{_NUM})\s*(?:-|–|to)\s*(?P<rng_b>{_NUM})\s*(?P<rng_u>{_UNIT})
           | (?P<val>{_NUM})\s*(?P<val_u>{_UNIT})
         )\b""",
    re.IGNORECASE | re.VERBOSE,
)


@dataclass(frozen=True)
class MeasurementMatch:
    start: int
    end: int
    values_cm: tuple[float, ...]  # 1 value, or (major, minor) for dims
    text: str


def _parse_number(token: str) -> float:
    try:
        return float(re.sub(r"\s+", "", token))
    except ValueError as exc:  # pragma: no cover - the regex should prevent this
        raise ExtractionError(f"unparseable numeric {token!r}") from exc


def _to_cm(value: float, unit: str) -> float:
    return value / 10.0 if unit.lower().startswith("m") else value


def find_measurements(text: str) -> list[MeasurementMatch]:
    """All measurement expressions in the text, left to right."""
    out = []
    for m in _MEASUREMENT_RE.finditer(text):
        if m.group("dim_a") is not None:
            unit_b = m.group("dim_ub")
            unit_a = m.group("dim_ua") or unit_b
            a = _to_cm(_parse_number(m.group("dim_a")), unit_a)
            b = _to_cm(_parse_number(m.group("dim_b")), unit_b)
            values = (max(a, b), min(a, b))
        elif m.group("rng_a") is not None:
            # "[x]-[y] unit" resolves to the stated upper bound y
            values = (_to_cm(_parse_number(m.group("rng_b")), m.group("rng_u")),)
        else:
            values = (_to_cm(_parse_number(m.group("val")), m.group("val_u")),)
        out.append(MeasurementMatch(m.start(), m.end(), values, m.group(0)))
    return out


def normalize_value(phrase: str) -> float:
    """Normalize one measurement phrase to cm.

    Applies spaced-decimal repair, the range rule ("3-4 cm" -> 4.0),
    qualifier stripping ("less than 2 cm" -> 2.0) and mm -> cm conversion.
    A x B phrases yield the major axis.
    """
    matches = find_measurements(phrase)
    if not matches:
        raise ExtractionError(f"no measurement found in {phrase!r}")
    return matches[0].values_cm[0]


# ---------------------------------------------------------------------------
# Negation and regions
# ---------------------------------------------------------------------------

_NEGATION_CUES = ("no", "without", "removed", "extubated", "resolved")
# "no" followed by change-language is stability wording, not negation
_NEGATION_RE = re.compile(
    r"\b(?:no(?!\s+(?:significant\s+|interval\s+)?change)|without|removed|extubated|resolved)\b",
    re.IGNORECASE,
)
_EXTUBATION_RE = re.compile(r"\bextubat(?:ed|ion)\b", re.IGNORECASE)
_BELOW_CARINA_RE = re.compile(r"\bbelow\s+(?:the\s+)?carina\b", re.IGNORECASE)

_REGION_WORDS = frozenset(
    "left right upper lower central apical basal basilar mid medial lateral bilateral "
    "retrocardiac perihilar lung lobe apex base hemithorax zone region".split()
)


def sentence_negated(text: str) -> bool:
    """Same-sentence negation: any cue token anywhere in the sentence."""
    return _NEGATION_RE.search(text) is not None


def _region_before(text: str, phrase_start: int) -> str | None:
    """Maximal run of anatomical-region words immediately before a phrase."""
    tokens = [(m.start(), m.group(0)) for m in re.finditer(r"[A-Za-z]+", text[:phrase_start])]
    run: list[str] = []
    for _, tok in reversed(tokens):
        if tok.lower() in _REGION_WORDS:
            run.append(tok.lower())
        else:
            break
    if not run:
        return None
    return " ".join(reversed(run))


# ---------------------------------------------------------------------------
# Finding extraction
# ---------------------------------------------------------------------------

def extract_measured_findings(
    report: str, lexicon: CategoryLexicon | None = None
) -> list[MeasuredFinding]:
    """One finding per object with a concrete cm/mm measurement in its sentence.

    Each measurement expression attaches to the nearest lexicon phrase
    before it in the sentence (nearest following phrase when nothing
    precedes).  The first expression per object wins; objects described
    only qualitatively or via anatomical landmarks produce nothing.
    """
    lexicon = lexicon or CategoryLexicon.default()
    findings: list[MeasuredFinding] = []
    for sentence in split_sentences(report):
        phrases = lexicon.finditer(sentence.text)
        if not phrases:
            continue
        measurements = find_measurements(sentence.text)
        if not measurements:
            continue
        polarity = "absent" if sentence_negated(sentence.text) else "present"
        multi = len({p.phrase for p in phrases}) > 1
        taken: dict[int, MeasurementMatch] = {}
        for meas in measurements:
            preceding = [p for p in phrases if p.end <= meas.start]
            following = [p for p in phrases if p.start >= meas.end]
            owner = preceding[-1] if preceding else (following[0] if following else None)
            if owner is None:
                continue
            taken.setdefault(id(owner), meas)
        for phrase in phrases:
            meas = taken.get(id(phrase))
            if meas is None:
                continue
            findings.append(
                MeasuredFinding(
                    object_name=phrase.phrase,
                    category=phrase.category,
                    values_cm=meas.values_cm,
                    sentence_index=sentence.index,
                    char_span=(sentence.start + meas.start, sentence.start + meas.end),
                    polarity=polarity,
                    region=_region_before(sentence.text, phrase.start),
                    ambiguous=multi,
                )
            )
    return findings


# ---------------------------------------------------------------------------
# Endotracheal tube parse
# ---------------------------------------------------------------------------

# Cue phrases ordered by specificity; scanning stops at the first class hit.
_PLACEMENT_CUES: tuple[tuple[str, PlacementVerdict], ...] = (
    ("too low", PlacementVerdict.TOO_LOW),
    ("low position", PlacementVerdict.TOO_LOW),
    ("low-lying", PlacementVerdict.TOO_LOW),
    ("should be retracted", PlacementVerdict.TOO_LOW),
    ("should be withdrawn", PlacementVerdict.TOO_LOW),
    ("should be pulled back", PlacementVerdict.TOO_LOW),
    ("too high", PlacementVerdict.TOO_HIGH),
    ("high position", PlacementVerdict.TOO_HIGH),
    ("should be advanced", PlacementVerdict.TOO_HIGH),
    ("malpositioned", PlacementVerdict.INCORRECT_UNSPECIFIED),
    ("malposition", PlacementVerdict.INCORRECT_UNSPECIFIED),
    ("incorrect position", PlacementVerdict.INCORRECT_UNSPECIFIED),
    ("position is incorrect", PlacementVerdict.INCORRECT_UNSPECIFIED),
    ("repositioning is recommended", PlacementVerdict.INCORRECT_UNSPECIFIED),
    ("needs repositioning", PlacementVerdict.INCORRECT_UNSPECIFIED),
    ("requires repositioning", PlacementVerdict.INCORRECT_UNSPECIFIED),
    ("position is correct", PlacementVerdict.CORRECT),
    ("correct position", PlacementVerdict.CORRECT),
    ("standard position", PlacementVerdict.CORRECT),
    ("satisfactory position", PlacementVerdict.CORRECT),
    ("appropriate position", PlacementVerdict.CORRECT),
    ("adequate position", PlacementVerdict.CORRECT),
    ("good position", PlacementVerdict.CORRECT),
    ("appropriately positioned", PlacementVerdict.CORRECT),
    ("correctly positioned", PlacementVerdict.CORRECT),
    ("well positioned", PlacementVerdict.CORRECT),
    ("unchanged", PlacementVerdict.CORRECT),
    ("stable", PlacementVerdict.CORRECT),
    ("no change", PlacementVerdict.CORRECT),
    ("no interval change", PlacementVerdict.CORRECT),
    ("no significant change", PlacementVerdict.CORRECT),
)

def _phrase_regex(phrase: str) -> str:
    return re.escape(phrase).replace(r"\ ", r"\s+")


_PLACEMENT_RE = re.compile(
    r"\b(?:" + "|".join(f"(?P<c{i}>{_phrase_regex(p)})" for i, (p, _) in enumerate(_PLACEMENT_CUES)) + r")\b",
    re.IGNORECASE,
)

_VERDICT_PRIORITY = (
    PlacementVerdict.TOO_LOW,
    PlacementVerdict.TOO_HIGH,
    PlacementVerdict.INCORRECT_UNSPECIFIED,
    PlacementVerdict.CORRECT,
)


def _placement_cues_in(sentence: Sentence) -> list[PlacementCue]:
    cues = []
    for m in _PLACEMENT_RE.finditer(sentence.text):
        idx = int(m.lastgroup[1:])
        cues.append(
            PlacementCue(
                sentence_index=sentence.index,
                span=(sentence.start + m.start(), sentence.start + m.end()),
                verdict=_PLACEMENT_CUES[idx][1],
                text=m.group(0),
            )
        )
    return cues


def _aggregate_placement(cues: list[PlacementCue]) -> PlacementVerdict | None:
    for verdict in _VERDICT_PRIORITY:
        if any(c.verdict is verdict for c in cues):
            return verdict
    return None


def parse_ett(report: str, lexicon: CategoryLexicon | None = None) -> EttParse:
    """Full endotracheal-tube parse with sentence anchors and cue spans."""
    lexicon = lexicon or CategoryLexicon.default()
    sentences = split_sentences(report)

    mention: list[int] = []
    negated: list[int] = []
    removal_seen = False
    for sentence in sentences:
        phrases = [p for p in lexicon.finditer(sentence.text) if p.category is Category.ENDOTRACHEAL_TUBE]
        extubation = _EXTUBATION_RE.search(sentence.text) is not None
        if not phrases and not extubation:
            continue
        if extubation or sentence_negated(sentence.text):
            negated.append(sentence.index)
            if extubation or re.search(r"\bremov(?:ed|al)\b", sentence.text, re.IGNORECASE):
                removal_seen = True
        else:
            mention.append(sentence.index)

    present = bool(mention) and not removal_seen

    finding = None
    for f in extract_measured_findings(report, lexicon):
        if f.category is Category.ENDOTRACHEAL_TUBE and f.is_present:
            finding = f
            break

    measurement = None
    if present and finding is not None:
        measurement = finding.values_cm[0]
        if _BELOW_CARINA_RE.search(sentences[finding.sentence_index].text):
            measurement = -measurement

    cues: list[PlacementCue] = []
    for idx in mention:
        cues.extend(_placement_cues_in(sentences[idx]))
    placement = _aggregate_placement(cues) if present else None

    observation = EttObservation(
        present=present,
        measurement_cm=measurement if present else None,
        placement=placement,
    )
    return EttParse(
        observation=observation,
        mention_sentences=tuple(mention),
        negated_sentences=tuple(negated),
        finding=finding if present else None,
        placement_cues=tuple(cues),
    )


def extract_ett(report: str, lexicon: CategoryLexicon | None = None) -> EttObservation:
    """Endotracheal-tube observation for a report."""
    return parse_ett(report, lexicon).observation
