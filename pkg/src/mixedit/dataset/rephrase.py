"""Client interface for an external prompt-rephrasing service.

The service itself (an LLM) is out of scope; this module only speaks the
wire format: POST {"prompt", "n", "wrapper"} and read back
{"rephrasings": [...]}. A deterministic mock ships for tests and offline
runs. The API key is read from the environment and never logged.
"""

from __future__ import annotations

import json
import os
import random
import urllib.error
import urllib.request
from dataclasses import dataclass

from ..errors import MixeditError
from ..prompt import Lexicon, Prompt, Provenance, default_lexicon
from ..seeding import derive_seed

DEFAULT_WRAPPER = (
    "This prompt is an instruction to a sound editing system. As a human "
    "user, rephrase the prompt {n} times, as natural as possible. Be "
    "creative in words and sentence structures. Use either imperative or "
    "interrogative instructions. Keep your language simple for daily use."
)


class Disabled(MixeditError):
    pass


class NetworkError(MixeditError):
    pass


class MalformedResponse(MixeditError):
    pass


@dataclass
class RephraseConfig:
    endpoint: str | None = None
    n: int = 5
    timeout_s: float = 10.0
    wrapper: str = DEFAULT_WRAPPER
    api_key_env: str = "MIXEDIT_REPHRASE_API_KEY"
    max_concurrency: int = 4  # honored by batch callers

    @classmethod
    def from_file(cls, path) -> "RephraseConfig":
        doc = json.loads(open(path, encoding="utf-8").read())
        return cls(**doc)


def rephrase(prompt: Prompt, config: RephraseConfig) -> list[Prompt]:
    """Request rephrased variants of a prompt from the configured service."""
    if not config.endpoint:
        raise Disabled("no rephrase endpoint configured")
    payload = json.dumps({
        "prompt": prompt.text,
        "n": config.n,
        "wrapper": config.wrapper.format(n=config.n),
    }).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(config.api_key_env)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    request = urllib.request.Request(config.endpoint, data=payload,
                                     headers=headers, method="POST")
    try:
        with urllib.request.urlopen(request, timeout=config.timeout_s) as resp:
            body = resp.read()
    except (urllib.error.URLError, TimeoutError, OSError) as err:
        raise NetworkError(f"rephrase request failed: {err}") from err
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as err:
        raise MalformedResponse("response is not JSON") from err
    texts = doc.get("rephrasings")
    if not isinstance(texts, list) or not texts:
        raise MalformedResponse("response lacks a rephrasings list")
    out = []
    for t in texts:
        if not isinstance(t, str) or not t.strip():
            raise MalformedResponse("empty rephrasing in response")
        text = t.strip()
        if not text.endswith((".", "?")):
            text += "."
        out.append(Prompt(text, Provenance.EXTERNAL_REPHRASE))
    return out


class MockRephraser:
    """Offline stand-in: verb-synonym swaps plus sentence-form jitter.

    Deterministic per seed and guaranteed to return n distinct non-empty
    variants (the original text is always the first).
    """

    def __init__(self, lexicon: Lexicon | None = None, seed: int = 0):
        self.lexicon = lexicon or default_lexicon()
        self.seed = seed

    def __call__(self, prompt: Prompt, n: int = 5) -> list[Prompt]:
        rng = random.Random(derive_seed(self.seed, prompt.text))
        variants = [prompt.text]
        attempts = 0
        while len(variants) < n and attempts < 50 * n:
            attempts += 1
            text = prompt.text
            for phrases in self.lexicon.verbs.values():
                present = [p for p in phrases if p in text.lower()]
                for p in present:
                    alt = phrases[rng.randrange(len(phrases))]
                    idx = text.lower().find(p)
                    text = text[:idx] + alt + text[idx + len(p):]
            if rng.random() < 0.3 and text.endswith("."):
                text = "Could you " + text[0].lower() + text[1:-1] + "?"
            if text not in variants:
                variants.append(text)
        while len(variants) < n:  # pathological lexicon: pad with tags
            variants.append(f"{prompt.text[:-1]} (variant {len(variants)}).")
        return [Prompt(v, Provenance.EXTERNAL_REPHRASE) for v in variants[:n]]
