"""Wire protocol for the four external model services, plus local stubs.

Every service speaks JSON over HTTP POST on a fixed route:

    /embed     {"texts": [str]}                  -> {"embeddings": [[float]]}
    /generate  {"prompt": str}                   -> {"text": str}
    /qa        {"question": str, "context": str} -> {"answer": str}
    /extract   {"sentence": str}                 -> {"spans": [str]}

The stub suite implements the same four interfaces in-process and fully
deterministically, so the whole pipeline runs and tests without any model.
Stub outputs are intentionally naive; they exercise control flow and
invariants, never model quality.
"""

from __future__ import annotations

import hashlib
import math
import string
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import requests

from .errors import ConvqgError
from .relevance import Embedding

RETRY_BACKOFF_S = 0.05

ROUTES = {"embed": "/embed", "generate": "/generate", "qa": "/qa", "extract": "/extract"}


class ServiceUnavailable(ConvqgError):
    """Transport failure that persisted through all retries."""


class ProtocolError(ConvqgError):
    """The remote response violated the wire contract."""


@dataclass(frozen=True)
class ServiceEndpoint:
    base_url: str
    timeout_ms: int = 10_000
    retries: int = 2

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


# --- request/response records ------------------------------------------------

@dataclass(frozen=True)
class EmbedRequest:
    texts: tuple[str, ...]

    def to_payload(self) -> dict:
        return {"texts": list(self.texts)}

    @staticmethod
    def from_payload(payload: dict) -> "EmbedRequest":
        return EmbedRequest(texts=tuple(str(t) for t in payload["texts"]))


@dataclass(frozen=True)
class EmbedResponse:
    embeddings: tuple[tuple[float, ...], ...]

    def to_payload(self) -> dict:
        return {"embeddings": [list(v) for v in self.embeddings]}

    @staticmethod
    def from_payload(payload: dict) -> "EmbedResponse":
        return EmbedResponse(
            embeddings=tuple(tuple(float(x) for x in v) for v in payload["embeddings"])
        )


@dataclass(frozen=True)
class GenerateRequest:
    prompt: str

    def to_payload(self) -> dict:
        return {"prompt": self.prompt}

    @staticmethod
    def from_payload(payload: dict) -> "GenerateRequest":
        return GenerateRequest(prompt=str(payload["prompt"]))


@dataclass(frozen=True)
class GenerateResponse:
    text: str

    def to_payload(self) -> dict:
        return {"text": self.text}

    @staticmethod
    def from_payload(payload: dict) -> "GenerateResponse":
        return GenerateResponse(text=str(payload["text"]))


@dataclass(frozen=True)
class QARequest:
    question: str
    context: str

    def to_payload(self) -> dict:
        return {"question": self.question, "context": self.context}

    @staticmethod
    def from_payload(payload: dict) -> "QARequest":
        return QARequest(question=str(payload["question"]), context=str(payload["context"]))


@dataclass(frozen=True)
class QAResponse:
    answer: str

    def to_payload(self) -> dict:
        return {"answer": self.answer}

    @staticmethod
    def from_payload(payload: dict) -> "QAResponse":
        return QAResponse(answer=str(payload["answer"]))


@dataclass(frozen=True)
class ExtractRequest:
    sentence: str

    def to_payload(self) -> dict:
        return {"sentence": self.sentence}

    @staticmethod
    def from_payload(payload: dict) -> "ExtractRequest":
        return ExtractRequest(sentence=str(payload["sentence"]))


@dataclass(frozen=True)
class ExtractResponse:
    spans: tuple[str, ...]

    def to_payload(self) -> dict:
        return {"spans": list(self.spans)}

    @staticmethod
    def from_payload(payload: dict) -> "ExtractResponse":
        return ExtractResponse(spans=tuple(str(s) for s in payload["spans"]))


# --- HTTP transport ----------------------------------------------------------

def _post(endpoint: ServiceEndpoint, route: str, payload: dict) -> dict:
    url = endpoint.base_url.rstrip("/") + route
    timeout = endpoint.timeout_ms / 1000.0
    last_error: Exception | None = None
    for attempt in range(endpoint.retries + 1):
        if attempt:
            time.sleep(RETRY_BACKOFF_S * (2 ** (attempt - 1)))
        try:
            response = requests.post(url, json=payload, timeout=timeout)
        except requests.RequestException as e:
            last_error = e
            continue
        if response.status_code >= 500:
            last_error = ServiceUnavailable(f"{url} returned {response.status_code}")
            continue
        if response.status_code != 200:
            raise ProtocolError(f"{url} returned {response.status_code}: {response.text}")
        try:
            body = response.json()
        except ValueError as e:
            raise ProtocolError(f"{url} returned non-JSON body") from e
        if not isinstance(body, dict):
            raise ProtocolError(f"{url} returned a non-object body")
        return body
    raise ServiceUnavailable(
        f"{url} unreachable after {endpoint.retries + 1} attempts: {last_error}"
    )


def embed_batch(endpoint: ServiceEndpoint, texts: Sequence[str]) -> list[Embedding]:
    if not texts:
        raise ValueError("texts must be non-empty")
    body = _post(endpoint, ROUTES["embed"], EmbedRequest(tuple(texts)).to_payload())
    try:
        response = EmbedResponse.from_payload(body)
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"malformed /embed response: {e}") from e
    return _validate_embeddings(response.embeddings, len(texts))


def _validate_embeddings(
    embeddings: Sequence[Sequence[float]], expected: int
) -> list[Embedding]:
    if len(embeddings) != expected:
        raise ProtocolError(
            f"/embed returned {len(embeddings)} embeddings for {expected} texts"
        )
    dims = {len(v) for v in embeddings}
    if len(dims) > 1:
        raise ProtocolError(f"/embed returned mixed dimensions {sorted(dims)}")
    if dims == {0}:
        raise ProtocolError("/embed returned zero-dimensional embeddings")
    if any(not math.isfinite(x) for v in embeddings for x in v):
        raise ProtocolError("/embed returned non-finite components")
    return [Embedding.of(v) for v in embeddings]


def generate(endpoint: ServiceEndpoint, prompt: str) -> str:
    if not prompt:
        raise ValueError("prompt must be non-empty")
    body = _post(endpoint, ROUTES["generate"], GenerateRequest(prompt).to_payload())
    try:
        response = GenerateResponse.from_payload(body)
    except (KeyError, TypeError) as e:
        raise ProtocolError(f"malformed /generate response: {e}") from e
    if not response.text:
        raise ProtocolError("/generate returned empty text")
    return response.text


def answer(endpoint: ServiceEndpoint, question: str, context: str) -> str:
    if not question or not context:
        raise ValueError("question and context must be non-empty")
    body = _post(endpoint, ROUTES["qa"], QARequest(question, context).to_payload())
    try:
        return QAResponse.from_payload(body).answer
    except (KeyError, TypeError) as e:
        raise ProtocolError(f"malformed /qa response: {e}") from e


def extract_spans(endpoint: ServiceEndpoint, sentence: str) -> list[str]:
    if not sentence:
        raise ValueError("sentence must be non-empty")
    body = _post(endpoint, ROUTES["extract"], ExtractRequest(sentence).to_payload())
    try:
        response = ExtractResponse.from_payload(body)
    except (KeyError, TypeError) as e:
        raise ProtocolError(f"malformed /extract response: {e}") from e
    for span in response.spans:
        if span not in sentence:
            raise ProtocolError(f"/extract span {span!r} is not a substring of the sentence")
    return list(response.spans)


# --- client interfaces -------------------------------------------------------

class Embedder(Protocol):
    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]: ...


class Generator(Protocol):
    def generate(self, prompt: str) -> str: ...


class Answerer(Protocol):
    def answer(self, question: str, context: str) -> str: ...


class Extractor(Protocol):
    def extract_spans(self, sentence: str) -> list[str]: ...


@dataclass(frozen=True)
class ServiceSuite:
    """The four model clients the pipeline consumes."""

    embedder: Embedder
    generator: Generator
    qa: Answerer
    extractor: Extractor


@dataclass(frozen=True)
class HttpEmbedder:
    endpoint: ServiceEndpoint

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        return embed_batch(self.endpoint, texts)


@dataclass(frozen=True)
class HttpGenerator:
    endpoint: ServiceEndpoint

    def generate(self, prompt: str) -> str:
        return generate(self.endpoint, prompt)


@dataclass(frozen=True)
class HttpAnswerer:
    endpoint: ServiceEndpoint

    def answer(self, question: str, context: str) -> str:
        return answer(self.endpoint, question, context)


@dataclass(frozen=True)
class HttpExtractor:
    endpoint: ServiceEndpoint

    def extract_spans(self, sentence: str) -> list[str]:
        return extract_spans(self.endpoint, sentence)


# --- deterministic stubs -----------------------------------------------------

STUB_DIM = 16


def stub_vector(seed: int, text: str, dim: int = STUB_DIM) -> tuple[float, ...]:
    """Unit-norm vector derived from a SHA-256 hash of (seed, text).

    Identical inputs always produce identical vectors, independent of the
    platform and process.
    """
    material = f"{seed}|{text}".encode("utf-8")
    raw: list[float] = []
    counter = 0
    while len(raw) < dim:
        digest = hashlib.sha256(material + b"#" + str(counter).encode("ascii")).digest()
        for off in range(0, 32, 8):
            value = int.from_bytes(digest[off : off + 8], "big")
            raw.append(value / 2**63 - 1.0)
        counter += 1
    components = raw[:dim]
    norm = math.sqrt(sum(x * x for x in components))
    return tuple(x / norm for x in components)


@dataclass(frozen=True)
class StubEmbedder:
    seed: int
    dim: int = STUB_DIM

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        if not texts:
            raise ValueError("texts must be non-empty")
        return [Embedding(stub_vector(self.seed, t, self.dim)) for t in texts]


class StubGenerator:
    def generate(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        head = " ".join(prompt.split()[:8])
        return f"Q: {head}?"


class StubAnswerer:
    """Finds the question's last word in the context; else the first word."""

    def answer(self, question: str, context: str) -> str:
        words = question.split()
        target = words[-1].strip(string.punctuation) if words else ""
        if target:
            idx = context.lower().find(target.lower())
            if idx >= 0:
                return context[idx : idx + len(target)]
        first = context.split()
        return first[0] if first else ""


class StubExtractor:
    """Capitalized tokens plus the final word-like token, deduplicated."""

    def extract_spans(self, sentence: str) -> list[str]:
        tokens = sentence.split()
        spans: list[str] = []
        for token in tokens:
            word = token.strip(string.punctuation)
            if word and word[0].isupper():
                spans.append(word)
        for token in reversed(tokens):
            word = token.strip(string.punctuation)
            if word and word[0].isalpha():
                spans.append(word)
                break
        seen: set[str] = set()
        unique = []
        for span in spans:
            if span not in seen:
                seen.add(span)
                unique.append(span)
        return unique


def make_stub_suite(seed: int) -> ServiceSuite:
    """In-process deterministic implementations of all four services."""
    return ServiceSuite(
        embedder=StubEmbedder(seed=seed),
        generator=StubGenerator(),
        qa=StubAnswerer(),
        extractor=StubExtractor(),
    )


def suite_from_specs(
    embedder: str, generator: str, qa: str, extractor: str,
    timeout_ms: int = 10_000, retries: int = 2,
) -> ServiceSuite:
    """Build a suite from per-service specs: a URL or ``stub:<seed>``."""
    def _client(spec: str, http_cls):
        if spec.startswith("stub:"):
            try:
                seed = int(spec.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad stub spec {spec!r}; expected stub:<int>") from None
            return make_stub_suite(seed)
        return http_cls(ServiceEndpoint(spec, timeout_ms=timeout_ms, retries=retries))

    def _pick(spec: str, http_cls, attr: str):
        client = _client(spec, http_cls)
        return getattr(client, attr) if isinstance(client, ServiceSuite) else client

    return ServiceSuite(
        embedder=_pick(embedder, HttpEmbedder, "embedder"),
        generator=_pick(generator, HttpGenerator, "generator"),
        qa=_pick(qa, HttpAnswerer, "qa"),
        extractor=_pick(extractor, HttpExtractor, "extractor"),
    )
