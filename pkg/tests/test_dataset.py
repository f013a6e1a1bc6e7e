"""Catalog ingestion, splits, manifests, synthesis, and the rephrase client."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from mixedit.core import Action, AudioSignature, SpeechSignature
from mixedit.dataset import (
    BadMetadataRow,
    Disabled,
    EmptyCatalog,
    MalformedResponse,
    MissingFile,
    MockRephraser,
    NetworkError,
    RephraseConfig,
    TooFewEntities,
    build_demo_catalog,
    generate_manifest,
    ingest,
    load_manifest,
    partition,
    read_wav,
    rephrase,
    synthesize,
    write_manifest,
    write_wav,
)
from mixedit.dataset.catalog import _allocate
from mixedit.dataset.manifest import ManifestRecord, simplified_from_json
from mixedit.dsp import Clip
from mixedit.mixer import SPEECH_SNR_RANGES, AUDIO_SNR_RANGE
from mixedit.prompt import Prompt, Provenance
from mixedit.taskspace import Composition, Task, classify

RATE = 16000


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    root = tmp_path_factory.mktemp("catalog")
    build_demo_catalog(root, seed=0)
    return ingest(root)


# ---------------- WAV I/O ----------------

def test_wav_round_trip_float32(tmp_path):
    clip = Clip(np.random.default_rng(0).standard_normal(1000) * 0.1, RATE)
    path = tmp_path / "x.wav"
    write_wav(path, clip)
    back = read_wav(path)
    assert back.rate == RATE
    assert np.allclose(back.samples, clip.samples, atol=1e-7)


def test_wav_pcm16(tmp_path):
    clip = Clip(np.linspace(-0.5, 0.5, 100), RATE)
    path = tmp_path / "x.wav"
    write_wav(path, clip, pcm16=True)
    back = read_wav(path)
    assert np.abs(back.samples - clip.samples).max() < 1e-3


def test_wav_downmix(tmp_path):
    from scipy.io import wavfile
    stereo = np.stack([np.ones(100), -np.ones(100)], axis=1).astype(np.float32)
    path = tmp_path / "st.wav"
    wavfile.write(path, RATE, stereo)
    assert np.allclose(read_wav(path).samples, 0.0)


# ---------------- ingestion ----------------

def _row_catalog(tmp_path, rows):
    wav = tmp_path / "a.wav"
    write_wav(wav, Clip(np.ones(100) * 0.1, RATE))
    for row in rows:
        row.setdefault("path", "a.wav")
    (tmp_path / "metadata.json").write_text(json.dumps(rows))
    return tmp_path


def test_ingest_demo_catalog(demo):
    assert len(demo.speech) == 16
    assert len(demo.audio) == 16
    assert len(demo.labels) == 16
    styles = [e.signature.style for e in demo.speech]
    assert len(set(styles)) == len(styles)


def test_ingest_rejects_multi_label(tmp_path):
    root = _row_catalog(tmp_path, [
        {"id": "a1", "type": "audio", "label": "dog, cat"},
    ])
    with pytest.raises(BadMetadataRow):
        ingest(root)
    root2 = _row_catalog(tmp_path, [
        {"id": "a1", "type": "audio", "label": ["dog", "cat"]},
    ])
    with pytest.raises(BadMetadataRow):
        ingest(root2)


def test_ingest_skips_blocklisted_labels(tmp_path):
    root = _row_catalog(tmp_path, [
        {"id": "a1", "type": "audio", "label": "People"},
        {"id": "a2", "type": "audio", "label": "dog"},
    ])
    catalog = ingest(root)
    assert catalog.labels == {"dog"}
    assert catalog.skipped_labels == ("people",)


def test_ingest_rejects_missing_style(tmp_path):
    root = _row_catalog(tmp_path, [
        {"id": "s1", "type": "speech", "gender": "female", "pitch": "low",
         "tempo": "low", "volume": "low"},  # emotion missing
    ])
    with pytest.raises(BadMetadataRow):
        ingest(root)


def test_ingest_missing_file(tmp_path):
    (tmp_path / "metadata.json").write_text(json.dumps([
        {"id": "a1", "type": "audio", "label": "dog", "path": "nope.wav"},
    ]))
    with pytest.raises(MissingFile):
        ingest(tmp_path)


def test_ingest_empty_catalog(tmp_path):
    root = _row_catalog(tmp_path, [
        {"id": "a1", "type": "audio", "label": "people"},
    ])
    with pytest.raises(EmptyCatalog):
        ingest(root)


def test_ingest_csv(tmp_path):
    wav = tmp_path / "a.wav"
    write_wav(wav, Clip(np.ones(100) * 0.1, RATE))
    (tmp_path / "meta.csv").write_text(
        "id,path,type,label\naa,a.wav,audio,dog\n")
    catalog = ingest(tmp_path, metadata=tmp_path / "meta.csv")
    assert catalog.labels == {"dog"}


# ---------------- partitioning ----------------

def test_allocate_reference_counts():
    assert _allocate(1327, (1177, 50, 100)) == [1177, 50, 100]


def test_partition_too_few_entities(tmp_path):
    rows = [{"id": f"s{i}", "type": "speech", "gender": "female",
             "pitch": "low", "tempo": "low", "volume": "low",
             "emotion": "happy", "speaker": f"spk{i}"} for i in range(10)]
    root = _row_catalog(tmp_path, rows)
    catalog = ingest(root)
    with pytest.raises(TooFewEntities):
        partition(catalog)


def test_partition_deterministic_and_disjoint(demo):
    a = partition(demo, seed=3)
    b = partition(demo, seed=3)
    assert a == b
    c = partition(demo, seed=4)
    assert a != c
    for split_map in (a.speakers, a.clips):
        assert set(split_map.values()) <= {"train", "valid", "test"}
    # split hygiene: each entity in exactly one split
    assert len(a.speakers) == 16
    assert len(a.clips) == 16


# ---------------- manifest generation ----------------

def test_generate_manifest_deterministic(demo):
    splits = partition(demo, seed=0)
    a = generate_manifest(demo, splits, count=12, comp=Composition(2, 2), seed=9)
    b = generate_manifest(demo, splits, count=12, comp=Composition(2, 2), seed=9)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    c = generate_manifest(demo, splits, count=12, comp=Composition(2, 2), seed=10)
    assert [r.to_json() for r in a] != [r.to_json() for r in c]


def test_manifest_records_are_consistent(demo):
    splits = partition(demo, seed=0)
    records = generate_manifest(demo, splits, count=40,
                                comp=Composition(2, 2), seed=1)
    for record in records:
        sigs = record.signatures()
        speech = [s for s in sigs if isinstance(s, SpeechSignature)]
        audio = [s for s in sigs if isinstance(s, AudioSignature)]
        assert len(speech) == 2 and len(audio) == 2
        assert speech[0].style != speech[1].style
        assert audio[0].label != audio[1].label
        # stored task matches the stored action vector
        assert classify(record.action_vector(),
                        record.composition) is Task(record.task)
        # stored SNRs respect the volume-conditioned ranges
        for ref, sig in zip(record.sources, sigs):
            if ref.snr_db == 0.0:
                continue
            if isinstance(sig, SpeechSignature):
                lo, hi = SPEECH_SNR_RANGES[sig.style.volume]
            else:
                lo, hi = AUDIO_SNR_RANGE
            assert lo <= ref.snr_db <= hi
        simplified_from_json(record.simplified)  # parses back


def test_manifest_uses_special_prompts_about_half_the_time(demo):
    splits = partition(demo, seed=0)
    records = generate_manifest(demo, splits, count=300,
                                comp=Composition(2, 2), seed=2)
    eligible = [r for r in records
                if r.prompt_provenance == Provenance.SPECIAL_GENERIC.value]
    # ~29/254 edits are uniform-group ones; of those ~half ship special text
    assert 0 < len(eligible) < len(records)
    for r in eligible:
        assert r.template is None
        assert r.prompt[0].isupper()


def test_manifest_task_histogram_16k(demo):
    # 16 tasks drawn uniformly: every count stays within +-10% of 1000
    splits = partition(demo, seed=0)
    records = generate_manifest(demo, splits, count=16_000,
                                comp=Composition(2, 2), seed=123)
    counts = {}
    for r in records:
        counts[r.task] = counts.get(r.task, 0) + 1
    assert len(counts) == 16
    assert all(900 <= n <= 1100 for n in counts.values()), counts


def test_manifest_round_trips_through_jsonl(demo, tmp_path):
    splits = partition(demo, seed=0)
    records = generate_manifest(demo, splits, count=5,
                                comp=Composition(2, 1), seed=3)
    path = tmp_path / "manifest.jsonl"
    write_manifest(records, path)
    loaded = load_manifest(path)
    assert [r.to_json() for r in loaded] == [r.to_json() for r in records]


# ---------------- synthesis ----------------

def _tree_digest(root):
    import hashlib
    digest = hashlib.blake2b(digest_size=16)
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


def test_synthesize_worker_counts_agree(demo, tmp_path):
    splits = partition(demo, seed=0)
    records = generate_manifest(demo, splits, count=8,
                                comp=Composition(2, 2), seed=5)
    out1 = tmp_path / "w1"
    out2 = tmp_path / "w2"
    s1 = synthesize(records, out1, workers=1)
    records2 = generate_manifest(demo, splits, count=8,
                                 comp=Composition(2, 2), seed=5)
    s2 = synthesize(records2, out2, workers=2)
    assert s1.ok and s2.ok
    assert _tree_digest(out1) == _tree_digest(out2)


def test_synthesized_mixture_replays_from_record(demo, tmp_path):
    splits = partition(demo, seed=0)
    records = generate_manifest(demo, splits, count=3,
                                comp=Composition(2, 2), seed=6)
    out = tmp_path / "out"
    summary = synthesize(records, out, workers=1)
    assert summary.ok
    for record in load_manifest(out / "manifest.jsonl"):
        x = read_wav(out / record.outputs["input"])
        y = read_wav(out / record.outputs["target"])
        total = np.zeros(len(x))
        target = np.zeros(len(x))
        for ref, action in zip(record.sources, record.action_vector()):
            clip = read_wav(ref.path)
            from mixedit.dsp import condition, resample
            from mixedit.seeding import derive_seed
            if clip.rate != RATE:
                clip = resample(clip, RATE)
            idx = record.sources.index(ref)
            conditioned = condition(clip, 5.0,
                                    seed=derive_seed(record.seed, "condition", idx))
            scaled = conditioned.samples * ref.gain * record.scale
            total += scaled
            target += action.alpha * scaled
        assert np.abs(total - x.samples).max() < 1e-6
        assert np.abs(target - y.samples).max() < 1e-6
        prompt_text = (out / record.outputs["prompt"]).read_text().strip()
        assert prompt_text == record.prompt


def test_synthesize_collects_silent_source_failures(demo, tmp_path):
    splits = partition(demo, seed=0)
    records = generate_manifest(demo, splits, count=2,
                                comp=Composition(2, 2), seed=7)
    silent = tmp_path / "silent.wav"
    write_wav(silent, Clip(np.zeros(RATE), RATE))
    records[0].sources[1].path = str(silent)
    out = tmp_path / "out"
    summary = synthesize(records, out, workers=1)
    assert not summary.ok
    assert summary.succeeded == 1
    assert summary.failures[0][0] == records[0].record_id
    assert "SilentSource" in summary.failures[0][1]
    listed = json.loads((out / "summary.json").read_text())
    assert listed["failures"][0]["error"].startswith("SilentSource")


# ---------------- rephrase client ----------------

def test_rephrase_disabled_without_endpoint():
    with pytest.raises(Disabled):
        rephrase(Prompt("Please remove the dog sound.", Provenance.TEMPLATE),
                 RephraseConfig(endpoint=None))


class _Handler(BaseHTTPRequestHandler):
    payload: dict = {}
    last_request: dict = {}

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        type(self).last_request = json.loads(self.rfile.read(length))
        body = json.dumps(type(self).payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_endpoint():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/rephrase"
    server.shutdown()


def test_rephrase_http_round_trip(http_endpoint):
    _Handler.payload = {"rephrasings": [
        "Could you remove the dog sound?",
        "Take away the dog sound.",
    ]}
    out = rephrase(Prompt("Please remove the dog sound.", Provenance.TEMPLATE),
                   RephraseConfig(endpoint=http_endpoint, n=2))
    assert [p.text for p in out] == _Handler.payload["rephrasings"]
    assert all(p.provenance is Provenance.EXTERNAL_REPHRASE for p in out)
    assert _Handler.last_request["prompt"] == "Please remove the dog sound."
    assert _Handler.last_request["n"] == 2
    assert "rephrase the prompt 2 times" in _Handler.last_request["wrapper"]


def test_rephrase_malformed_response(http_endpoint):
    _Handler.payload = {"something": "else"}
    with pytest.raises(MalformedResponse):
        rephrase(Prompt("Please remove the dog sound.", Provenance.TEMPLATE),
                 RephraseConfig(endpoint=http_endpoint))


def test_rephrase_network_error():
    config = RephraseConfig(endpoint="http://127.0.0.1:9/nothing",
                            timeout_s=0.5)
    with pytest.raises(NetworkError):
        rephrase(Prompt("Please remove the dog sound.", Provenance.TEMPLATE),
                 config)


def test_mock_rephraser_distinct_variants():
    mock = MockRephraser(seed=1)
    out = mock(Prompt("Please remove the dog barking sound.",
                      Provenance.TEMPLATE), n=5)
    texts = [p.text for p in out]
    assert len(texts) == 5
    assert len(set(texts)) == 5
    assert all(t.strip() for t in texts)
