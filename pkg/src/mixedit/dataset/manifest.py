"""Manifest records: JSON-serializable descriptions of generated mixtures.

A record carries everything needed to re-synthesize its mixture pair
bit-identically: source references, drawn SNRs, the action vector, the
simplified instruction, the prompt, and the per-record seed. The manifest
is line-delimited JSON, one record per line, schema-versioned.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

from ..core import (
    Action,
    AudioDescriptor,
    AudioSignature,
    GroupDescriptor,
    GroupScope,
    SimplifiedInstruction,
    SpeechDescriptor,
    SpeechSignature,
    StyleVector,
    validate_instruction,
)
from ..errors import MixeditError
from ..mixer import draw_assigned_snrs
from ..prompt import TemplateId, parse, render, simplify, special_generic
from ..seeding import derive_seed
from ..taskspace import Composition, sample_edit
from .catalog import Catalog, CatalogEntry, SplitAssignment

SCHEMA_VERSION = 1

_ACTION_BY_VALUE = {a.value: a for a in Action}


class ExhaustedRetries(MixeditError):
    pass


def signature_to_json(sig) -> dict:
    if isinstance(sig, SpeechSignature):
        return {"kind": "speech", "style": dict(zip(
            ("gender", "pitch", "tempo", "volume", "emotion"),
            sig.style.values(),
        ))}
    return {"kind": "audio", "label": sig.label}


def signature_from_json(doc: dict):
    if doc["kind"] == "speech":
        s = doc["style"]
        return SpeechSignature(StyleVector.from_strings(
            s["gender"], s["pitch"], s["tempo"], s["volume"], s["emotion"]))
    return AudioSignature(doc["label"])


def simplified_to_json(simp: SimplifiedInstruction) -> list[dict]:
    out = []
    for action, desc in simp.edits:
        if isinstance(desc, SpeechDescriptor):
            out.append({"action": action.value, "kind": "speech",
                        "attrs": dict(desc.attrs)})
        elif isinstance(desc, AudioDescriptor):
            out.append({"action": action.value, "kind": "audio",
                        "label": desc.label})
        else:
            out.append({"action": action.value, "kind": "group",
                        "scope": desc.scope.value})
    return out


def simplified_from_json(doc: list[dict]) -> SimplifiedInstruction:
    edits = []
    for item in doc:
        action = _ACTION_BY_VALUE[item["action"]]
        if item["kind"] == "speech":
            attrs = tuple(sorted(
                item["attrs"].items(),
                key=lambda kv: ("gender", "pitch", "tempo", "volume",
                                "emotion").index(kv[0]),
            ))
            edits.append((action, SpeechDescriptor(attrs)))
        elif item["kind"] == "audio":
            edits.append((action, AudioDescriptor(item["label"])))
        else:
            edits.append((action, GroupDescriptor(GroupScope(item["scope"]))))
    return SimplifiedInstruction(tuple(edits))


@dataclass
class SourceRef:
    id: str
    path: str
    signature: dict
    snr_db: float
    gain: float | None = None  # filled during synthesis


@dataclass
class ManifestRecord:
    record_id: int
    seed: int
    n_speech: int
    n_audio: int
    sources: list[SourceRef]
    actions: list[str]
    task: str
    simplified: list[dict]
    prompt: str
    prompt_provenance: str
    template: str | None = None
    scale: float | None = None
    outputs: dict | None = None
    schema: int = SCHEMA_VERSION

    def to_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ManifestRecord":
        doc = json.loads(line)
        if doc.get("schema") != SCHEMA_VERSION:
            raise MixeditError(
                f"unsupported manifest schema {doc.get('schema')}"
            )
        doc["sources"] = [SourceRef(**s) for s in doc["sources"]]
        return cls(**doc)

    @property
    def composition(self) -> Composition:
        return Composition(self.n_speech, self.n_audio)

    def action_vector(self) -> tuple[Action, ...]:
        return tuple(_ACTION_BY_VALUE[a] for a in self.actions)

    def signatures(self):
        return [signature_from_json(s.signature) for s in self.sources]


def _sample_distinct(pool: list[CatalogEntry], count: int, rng: random.Random,
                     *, speech: bool, max_tries: int) -> list[CatalogEntry]:
    if len(pool) < count:
        raise ExhaustedRetries(
            f"need {count} sources but the split holds {len(pool)}"
        )
    for _ in range(max_tries):
        picked = rng.sample(pool, count)
        if speech:
            styles = {e.signature.style for e in picked}
            speakers = {e.speaker for e in picked}
            if len(styles) == count and len(speakers) == count:
                return picked
        else:
            labels = {e.signature.label for e in picked}
            if len(labels) == count:
                return picked
    raise ExhaustedRetries(
        f"could not draw {count} distinct-{'style' if speech else 'label'} "
        f"sources in {max_tries} tries"
    )


def generate_manifest(catalog: Catalog, splits: SplitAssignment, count: int,
                      comp: Composition, seed: int, split: str = "train",
                      max_tries: int = 200) -> list[ManifestRecord]:
    """Symbolic dataset plan: no audio is read here.

    Per record, all randomness derives from hash(master seed, record id),
    so synthesis order and worker counts cannot change the result. Tasks
    are drawn uniformly over those defined for the composition, then one
    edit uniformly within the task. Special generic prompts replace the
    template rendering with probability 0.5 whenever they apply.
    """
    entries = splits.entries(catalog, split)
    speech_pool = [e for e in entries if e.is_speech]
    audio_pool = [e for e in entries if not e.is_speech]
    records = []
    for record_id in range(count):
        rec_seed = derive_seed(seed, record_id)
        rng = random.Random(derive_seed(rec_seed, "sources"))
        picked = []
        if comp.n_speech:
            picked += _sample_distinct(speech_pool, comp.n_speech, rng,
                                       speech=True, max_tries=max_tries)
        if comp.n_audio:
            picked += _sample_distinct(audio_pool, comp.n_audio, rng,
                                       speech=False, max_tries=max_tries)
        signatures = [e.signature for e in picked]
        task, actions = sample_edit(comp, derive_seed(rec_seed, "edit"))
        instruction = validate_instruction(list(zip(actions, signatures)))
        simp = simplify(instruction, derive_seed(rec_seed, "simplify"))
        template = None
        coin = random.Random(derive_seed(rec_seed, "special-coin")).random()
        special = special_generic(actions, comp,
                                  seed=derive_seed(rec_seed, "special"))
        if special is not None and coin < 0.5:
            prompt = special
            # store the group-level edits the shipped prompt denotes
            group_edits = parse(special.text, catalog.labels)
            simp_doc = simplified_to_json(group_edits)
        else:
            template_rng = random.Random(derive_seed(rec_seed, "template"))
            template = list(TemplateId)[template_rng.randrange(3)]
            prompt = render(simp, template,
                            seed=derive_seed(rec_seed, "render"))
            simp_doc = simplified_to_json(simp)
        snrs, _ref = draw_assigned_snrs(signatures,
                                        derive_seed(rec_seed, "gains"))
        sources = [
            SourceRef(e.id, str(e.path), signature_to_json(e.signature),
                      snr_db=snrs[i])
            for i, e in enumerate(picked)
        ]
        records.append(ManifestRecord(
            record_id=record_id,
            seed=rec_seed,
            n_speech=comp.n_speech,
            n_audio=comp.n_audio,
            sources=sources,
            actions=[a.value for a in actions],
            task=task.value,
            simplified=simp_doc,
            prompt=prompt.text,
            prompt_provenance=prompt.provenance.value,
            template=template.value if template else None,
        ))
    return records


def write_manifest(records, path):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json())
            fh.write("\n")


def load_manifest(path) -> list[ManifestRecord]:
    return [
        ManifestRecord.from_json(line)
        for line in Path(path).read_text("utf-8").splitlines()
        if line.strip()
    ]
