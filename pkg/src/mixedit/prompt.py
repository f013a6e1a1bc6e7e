"""Instruction simplification, template prompts, generic prompts, and parsing.

The pipeline is symmetric: ``simplify`` reduces a full instruction to the
subset a person would actually say, ``render`` turns that into one of three
template sentences using a phrase lexicon, and ``parse`` inverts the
rendering back to the simplified instruction. Uniform group edits can
instead use one of five stored generic phrasings per edit pattern.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .core import (
    Action,
    AudioDescriptor,
    AudioSignature,
    Descriptor,
    GroupDescriptor,
    GroupScope,
    Instruction,
    STYLE_FIELDS,
    SimplifiedInstruction,
    SpeechDescriptor,
    SpeechSignature,
    normalize_label,
)
from .errors import MixeditError
from .seeding import derive_seed


class CannotDistinguish(MixeditError):
    pass


class ParseError(MixeditError):
    """Base for prompt parsing failures; carries the offending span."""

    def __init__(self, message: str, span: tuple[int, int] | None = None):
        super().__init__(message)
        self.span = span


class UnknownVerb(ParseError):
    pass


class UnknownDescriptor(ParseError):
    pass


class ConflictingEdits(ParseError):
    pass


class EmptyInstruction(ParseError):
    pass


class TemplateId(Enum):
    PLEASE = "please"
    I_WANT_TO = "i_want_to"
    CAN_YOU = "can_you"


_TEMPLATE_PREFIX = {
    TemplateId.PLEASE: "Please ",
    TemplateId.I_WANT_TO: "I want to ",
    TemplateId.CAN_YOU: "Can you ",
}

_TEMPLATE_SUFFIX = {
    TemplateId.PLEASE: ".",
    TemplateId.I_WANT_TO: ".",
    TemplateId.CAN_YOU: "?",
}


class Provenance(Enum):
    TEMPLATE = "template"
    SPECIAL_GENERIC = "special_generic"
    EXTERNAL_REPHRASE = "external_rephrase"


@dataclass(frozen=True)
class Prompt:
    text: str
    provenance: Provenance
    template: TemplateId | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("prompt text must be non-empty")
        if not self.text.rstrip().endswith((".", "?")):
            raise ValueError("prompt must end in '.' or '?'")


@dataclass(frozen=True)
class SpecialPrompt:
    text: str
    edits: tuple[tuple[Action, GroupDescriptor], ...]


_SCOPES = {s.value: s for s in GroupScope}
_ACTION_BY_VALUE = {a.value: a for a in Action}


@dataclass
class Lexicon:
    """Phrase inventory for rendering and parsing prompts.

    Shipped as a versioned data file; every action must have at least
    three verb phrases and no phrase may serve two actions.
    """

    version: int
    verbs: dict[Action, tuple[str, ...]]
    gender_terms: dict[str, tuple[str, ...]]
    emotion_terms: dict[str, tuple[str, ...]]
    level_terms: dict[str, tuple[str, ...]]
    trait_terms: dict[str, tuple[str, ...]]
    speaker_terms: tuple[str, ...]
    sound_terms: tuple[str, ...]
    specials: dict[str, tuple[SpecialPrompt, ...]]
    # lookup tables built after validation
    _verb_lookup: tuple[tuple[str, Action], ...] = field(default=(), repr=False)
    _special_lookup: dict = field(default_factory=dict, repr=False)
    _gender_lookup: dict = field(default_factory=dict, repr=False)
    _emotion_lookup: dict = field(default_factory=dict, repr=False)
    _level_lookup: dict = field(default_factory=dict, repr=False)
    _trait_lookup: dict = field(default_factory=dict, repr=False)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Lexicon":
        if path is None:
            raw = resources.files("mixedit.data").joinpath("lexicon.json").read_text("utf-8")
        else:
            raw = Path(path).read_text("utf-8")
        doc = json.loads(raw)
        verbs = {
            _ACTION_BY_VALUE[key]: tuple(phrases)
            for key, phrases in doc["verbs"].items()
        }
        specials = {}
        for key, entries in doc["special_prompts"].items():
            parsed = []
            for entry in entries:
                edits = tuple(
                    (_ACTION_BY_VALUE[a], GroupDescriptor(_SCOPES[scope]))
                    for a, scope in entry["edits"]
                )
                parsed.append(SpecialPrompt(entry["text"], edits))
            specials[key] = tuple(parsed)
        lex = cls(
            version=doc["version"],
            verbs=verbs,
            gender_terms={k: tuple(v) for k, v in doc["gender_terms"].items()},
            emotion_terms={k: tuple(v) for k, v in doc["emotion_terms"].items()},
            level_terms={k: tuple(v) for k, v in doc["level_terms"].items()},
            trait_terms={k: tuple(v) for k, v in doc["trait_terms"].items()},
            speaker_terms=tuple(doc["speaker_terms"]),
            sound_terms=tuple(doc["sound_terms"]),
            specials=specials,
        )
        lex._validate()
        lex._build_lookups()
        return lex

    def _validate(self):
        for action in Action:
            phrases = self.verbs.get(action, ())
            if len(phrases) < 3:
                raise ValueError(f"need at least 3 phrases for {action.value}")
        seen: dict[str, Action] = {}
        for action, phrases in self.verbs.items():
            for p in phrases:
                if p in seen:
                    raise ValueError(f"phrase {p!r} serves two actions")
                seen[p] = action
        texts = [sp.text for entries in self.specials.values() for sp in entries]
        if len(set(t.casefold() for t in texts)) != len(texts):
            raise ValueError("special prompt texts must be globally unique")
        for key, entries in self.specials.items():
            if len(entries) != 5:
                raise ValueError(f"pattern {key!r} needs exactly 5 phrasings")

    def _build_lookups(self):
        self._verb_lookup = tuple(sorted(
            ((p, a) for a, ps in self.verbs.items() for p in ps),
            key=lambda pa: -len(pa[0]),
        ))
        self._special_lookup = {
            _normalize_text(sp.text): sp
            for entries in self.specials.values()
            for sp in entries
        }
        self._gender_lookup = {t: v for v, ts in self.gender_terms.items() for t in ts}
        self._emotion_lookup = {t: v for v, ts in self.emotion_terms.items() for t in ts}
        self._level_lookup = {t: v for v, ts in self.level_terms.items() for t in ts}
        self._trait_lookup = {t: f for f, ts in self.trait_terms.items() for t in ts}

    def verb_for(self, action: Action, rng: random.Random) -> str:
        phrases = self.verbs[action]
        return phrases[rng.randrange(len(phrases))]

    def special_entries(self, speech_action: Action, audio_action: Action):
        key = f"{speech_action.value}|{audio_action.value}"
        return self.specials.get(key)


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    return Lexicon.load()


def minimal_distinguishing_fields(styles) -> tuple[str, ...]:
    """Smallest attribute subset telling all styles apart, ties broken by
    canonical attribute order. A lone style still gets one attribute so
    descriptors stay non-empty."""
    styles = list(styles)
    if len(styles) <= 1:
        return (STYLE_FIELDS[0],)
    pairs = list(itertools.combinations(styles, 2))
    for size in range(1, len(STYLE_FIELDS) + 1):
        for combo in itertools.combinations(STYLE_FIELDS, size):
            if all(
                any(getattr(a, f) != getattr(b, f) for f in combo)
                for a, b in pairs
            ):
                return combo
    raise CannotDistinguish("two speech sources share all five attributes")


def simplify(instruction: Instruction, seed: int = 0) -> SimplifiedInstruction:
    """Reduce an instruction to what a person would say.

    Pure extraction/removal edits flip a fair coin between the extraction
    phrasing (keep-edits stay, removals go unsaid) and the removal phrasing
    (the reverse). Any other edit just drops its keep-edits. Speech styles
    are cut down to one minimal distinguishing attribute subset, shared by
    all speakers in the mixture.
    """
    rng = random.Random(derive_seed(seed))
    actions = set(instruction.actions)
    if actions <= {Action.KEEP, Action.REMOVE}:
        extraction = rng.random() < 0.5
        wanted = Action.KEEP if extraction else Action.REMOVE
        chosen = [(a, s) for a, s in instruction.edits if a is wanted]
    else:
        chosen = [(a, s) for a, s in instruction.edits if a is not Action.KEEP]

    styles = [
        s.style for _, s in instruction.edits if isinstance(s, SpeechSignature)
    ]
    for a, b in itertools.combinations(styles, 2):
        if a == b:
            raise CannotDistinguish("two speech sources share all five attributes")
    fields = minimal_distinguishing_fields(styles) if styles else ()

    edits = []
    for action, sig in chosen:
        if isinstance(sig, SpeechSignature):
            edits.append((action, SpeechDescriptor.from_style(sig.style, fields)))
        else:
            edits.append((action, AudioDescriptor(sig.label)))
    return SimplifiedInstruction(tuple(edits))


def _speech_phrase(desc: SpeechDescriptor, lex: Lexicon) -> str:
    attrs = dict(desc.attrs)
    pre = []
    if "emotion" in attrs:
        pre.append(lex.emotion_terms[attrs["emotion"]][0])
    if "gender" in attrs:
        pre.append(lex.gender_terms[attrs["gender"]][0])
    head = "the " + " ".join(pre + [lex.speaker_terms[0]])
    post = [
        f"{lex.level_terms[attrs[f]][0]} {lex.trait_terms[f][0]}"
        for f in ("pitch", "tempo", "volume")
        if f in attrs
    ]
    if not post:
        return head
    return head + " characterized by " + _join_and(post)


def _audio_phrase(desc: AudioDescriptor, lex: Lexicon) -> str:
    label = desc.label
    if label.split()[-1] in lex.sound_terms:
        return f"the {label}"
    return f"the {label} {lex.sound_terms[0]}"


def _join_and(parts) -> str:
    parts = list(parts)
    if len(parts) == 1:
        return parts[0]
    if len(parts) == 2:
        return f"{parts[0]} and {parts[1]}"
    return ", ".join(parts[:-1]) + ", and " + parts[-1]


def render(simplified: SimplifiedInstruction, template: TemplateId,
           lexicon: Lexicon | None = None, seed: int = 0) -> Prompt:
    """Slot a simplified instruction into one of the three templates.

    Edits are shuffled first so sources do not sit at fixed positions;
    verbs are sampled from the lexicon. Deterministic per seed.
    """
    lex = lexicon or default_lexicon()
    rng = random.Random(derive_seed(seed))
    edits = list(simplified.edits)
    rng.shuffle(edits)
    clauses = []
    for action, desc in edits:
        verb = lex.verb_for(action, rng)
        if isinstance(desc, SpeechDescriptor):
            phrase = _speech_phrase(desc, lex)
        elif isinstance(desc, AudioDescriptor):
            phrase = _audio_phrase(desc, lex)
        else:
            raise ValueError("group descriptors are rendered by generic prompts")
        clauses.append(f"{verb} {phrase}")
    if len(clauses) == 1:
        body = clauses[0]
    else:
        body = ", ".join(clauses[:-1]) + ", and " + clauses[-1]
    text = _TEMPLATE_PREFIX[template] + body + _TEMPLATE_SUFFIX[template]
    return Prompt(text, Provenance.TEMPLATE, template)


def special_generic(actions, comp, seed: int = 0,
                    lexicon: Lexicon | None = None) -> Prompt | None:
    """One of five generic phrasings for uniform group edits, or None.

    Applicable exactly when all speech actions agree and all audio actions
    agree. An empty group inherits the other group's action, collapsing
    onto the whole-mixture pattern. Callers are expected to use the result
    with probability 0.5 when it is available.
    """
    lex = lexicon or default_lexicon()
    actions = tuple(actions)
    speech = actions[:comp.n_speech]
    audio = actions[comp.n_speech:]
    s_act = speech[0] if speech and all(a is speech[0] for a in speech) else None
    a_act = audio[0] if audio and all(a is audio[0] for a in audio) else None
    if speech and s_act is None:
        return None
    if audio and a_act is None:
        return None
    if s_act is None:
        s_act = a_act
    if a_act is None:
        a_act = s_act
    if s_act is a_act and s_act in (Action.KEEP, Action.REMOVE):
        return None  # identity or silence; nothing to phrase
    entries = lex.special_entries(s_act, a_act)
    if not entries:
        return None
    rng = random.Random(derive_seed(seed))
    chosen = entries[rng.randrange(len(entries))]
    return Prompt(chosen.text, Provenance.SPECIAL_GENERIC)


def _normalize_text(text: str) -> str:
    return " ".join(text.casefold().split())


def parse(text: str, labels, lexicon: Lexicon | None = None) -> SimplifiedInstruction:
    """Invert ``render``: map a template or special generic prompt back to
    its simplified instruction.

    ``labels`` is the set of class labels known to the catalog. Edits come
    back in textual order. Raises UnknownVerb, UnknownDescriptor,
    ConflictingEdits, or EmptyInstruction, each carrying a source span.
    """
    lex = lexicon or default_lexicon()
    labels = {normalize_label(l) for l in labels}
    norm = _normalize_text(text)
    special = lex._special_lookup.get(norm)
    if special is not None:
        return SimplifiedInstruction(special.edits)

    folded = text.casefold()
    body = norm
    for prefix in ("please ", "i want to ", "can you "):
        if body.startswith(prefix):
            body = body[len(prefix):]
            break
    body = body.rstrip(".?!").strip()
    if not body:
        raise EmptyInstruction("no edits found", span=(0, len(text)))

    # Clause boundaries: a segment after ', ' opens a new clause only when
    # it starts with a verb phrase; anything else (e.g. the tail of an
    # attribute list) continues the previous clause.
    segments = body.split(", ")
    clauses: list[str] = []
    for seg in segments:
        candidate = seg[4:] if seg.startswith("and ") else seg
        if _match_verb(candidate, lex) is not None or not clauses:
            clauses.append(candidate)
        else:
            clauses[-1] += ", " + seg

    edits = []
    seen: set[Descriptor] = set()
    for clause in clauses:
        start = folded.find(clause[:40])
        span = (start, start + len(clause)) if start >= 0 else None
        matched = _match_verb(clause, lex)
        if matched is None:
            head = clause.split(" the ")[0]
            raise UnknownVerb(f"no known action phrase in {head!r}", span=span)
        phrase, action = matched
        rest = clause[len(phrase):].strip()
        desc = _parse_descriptor(rest, labels, lex, span)
        if desc in seen:
            raise ConflictingEdits(
                f"descriptor mentioned twice: {rest!r}", span=span
            )
        seen.add(desc)
        edits.append((action, desc))
    if not edits:
        raise EmptyInstruction("no edits found", span=(0, len(text)))
    return SimplifiedInstruction(tuple(edits))


def _match_verb(clause: str, lex: Lexicon):
    for phrase, action in lex._verb_lookup:
        if clause.startswith(phrase + " "):
            return phrase, action
    return None


def _strip_article(text: str) -> str:
    for art in ("the ", "an ", "a "):
        if text.startswith(art):
            return text[len(art):]
    return text


def _parse_descriptor(text: str, labels, lex: Lexicon,
                      span) -> Descriptor:
    core = _strip_article(text.strip())
    if not core:
        raise UnknownDescriptor("empty source description", span=span)

    if core in labels:
        return AudioDescriptor(core)
    words = core.split()
    if words[-1] in lex.sound_terms and " ".join(words[:-1]) in labels:
        return AudioDescriptor(" ".join(words[:-1]))

    head, _, tail = core.partition(" characterized by ")
    head_words = head.split()
    speechy = any(
        w in lex.speaker_terms or w in lex._gender_lookup
        or w in lex._emotion_lookup
        for w in head_words
    )
    if speechy:
        return _parse_speech(head_words, tail, lex, span)
    raise UnknownDescriptor(f"unknown source description {text!r}", span=span)


def _parse_speech(head_words, tail, lex: Lexicon, span) -> SpeechDescriptor:
    attrs: dict[str, str] = {}
    for word in head_words:
        if word in lex.speaker_terms:
            continue
        if word in lex._gender_lookup:
            _put_attr(attrs, "gender", lex._gender_lookup[word], span)
        elif word in lex._emotion_lookup:
            _put_attr(attrs, "emotion", lex._emotion_lookup[word], span)
        else:
            raise UnknownDescriptor(f"unknown style word {word!r}", span=span)
    if tail:
        parts = [p for piece in tail.split(", ") for p in piece.split(" and ") if p]
        for part in parts:
            part = part.strip()
            if part.startswith("and "):
                part = part[4:]
            part = _strip_article(part)
            tokens = part.split()
            if len(tokens) < 2:
                raise UnknownDescriptor(f"unreadable trait {part!r}", span=span)
            level_word, trait_word = tokens[0], " ".join(tokens[1:])
            level = lex._level_lookup.get(level_word)
            trait = lex._trait_lookup.get(trait_word)
            if level is None or trait is None:
                raise UnknownDescriptor(f"unreadable trait {part!r}", span=span)
            _put_attr(attrs, trait, level, span)
    if not attrs:
        raise UnknownDescriptor("speaker described with no attributes", span=span)
    ordered = tuple((f, attrs[f]) for f in STYLE_FIELDS if f in attrs)
    return SpeechDescriptor(ordered)


def _put_attr(attrs: dict, key: str, value: str, span):
    if key in attrs and attrs[key] != value:
        raise UnknownDescriptor(
            f"attribute {key!r} given twice with different values", span=span
        )
    attrs[key] = value


def expand(simplified: SimplifiedInstruction, signatures) -> tuple[Action, ...]:
    """Resolve a simplified instruction against concrete mixture signatures.

    Extraction-phrased instructions imply removal of unmentioned sources;
    any other phrasing keeps them. Group descriptors fan out over their
    whole group.
    """
    signatures = list(signatures)
    default = Action.REMOVE if simplified.extraction_phrased else Action.KEEP
    actions: list[Action] = [default] * len(signatures)
    for action, desc in simplified.edits:
        matched = [i for i, sig in enumerate(signatures) if _matches(desc, sig)]
        if not matched:
            raise UnknownDescriptor(f"{desc!r} matches no source in the mixture")
        if len(matched) > 1 and not isinstance(desc, GroupDescriptor):
            raise UnknownDescriptor(f"{desc!r} is ambiguous for this mixture")
        for i in matched:
            actions[i] = action
    return tuple(actions)


def _matches(desc: Descriptor, sig) -> bool:
    if isinstance(desc, GroupDescriptor):
        if desc.scope is GroupScope.EVERYTHING:
            return True
        if desc.scope is GroupScope.ALL_SPEECH:
            return isinstance(sig, SpeechSignature)
        return isinstance(sig, AudioSignature)
    if isinstance(desc, SpeechDescriptor):
        return isinstance(sig, SpeechSignature) and desc.matches(sig.style)
    return isinstance(sig, AudioSignature) and desc.label == sig.label
