"""Text-generation, vision-judge, and embedding providers behind small interfaces.

Three implementations exist for each role: an HTTP client speaking the
chat-completions wire format, a scripted client that replays canned responses
(used for deterministic offline runs and tests), and for embeddings a local
inference backend plus a hash-seeded mock.  API keys come from environment
variables (TCB_LLM_API_KEY, TCB_VLM_API_KEY, TCB_EMBED_API_KEY).
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np
import requests

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF = 0.5


class ProviderError(Exception):
    """Raised when a provider call fails after all retries."""

    def __init__(self, message: str, retries: int = 0):
        self.retries = retries
        super().__init__(message)


class TextGenClient(Protocol):
    def complete(self, messages: list[dict], temperature: float = 0.0) -> str: ...


class VisionJudgeClient(Protocol):
    def judge(self, image_png: bytes, prompt: str) -> str: ...


class EmbeddingProvider(Protocol):
    fingerprint: str

    def embed_images(self, images: list[bytes]) -> np.ndarray: ...

    def embed_texts(self, texts: list[str]) -> np.ndarray: ...


class RateLimiter:
    """Simple token bucket enforcing a per-minute request ceiling."""

    def __init__(self, per_minute: int | None):
        self.per_minute = per_minute
        self._lock = threading.Lock()
        self._stamps: list[float] = []

    def acquire(self) -> None:
        if not self.per_minute:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self._stamps = [t for t in self._stamps if now - t < 60.0]
                if len(self._stamps) < self.per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            time.sleep(max(wait, 0.01))


def _with_retries(fn, retries: int, backoff: float, what: str):
    last: Exception | None = None
    for attempt in range(retries + 1):
        try:
            return fn()
        except Exception as exc:  # noqa: BLE001 - network and parse failures alike
            last = exc
            if attempt < retries and backoff > 0:
                time.sleep(backoff * (2**attempt))
    raise ProviderError(f"{what} failed after {retries + 1} attempts: {last}", retries=retries)


def _api_key(env_var: str) -> str:
    return os.environ.get(env_var, "")


@dataclass
class HttpChatClient:
    """OpenAI-style chat-completions client for text generation."""

    base_url: str
    model: str
    api_key_env: str = "TCB_LLM_API_KEY"
    retries: int = DEFAULT_RETRIES
    backoff: float = DEFAULT_BACKOFF
    timeout: float = 120.0
    rate_limiter: RateLimiter = field(default_factory=lambda: RateLimiter(None))

    def _post(self, payload: dict) -> dict:
        self.rate_limiter.acquire()
        headers = {"Content-Type": "application/json"}
        key = _api_key(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        resp = requests.post(
            self.base_url.rstrip("/") + "/chat/completions",
            json=payload,
            headers=headers,
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return resp.json()

    def complete(self, messages: list[dict], temperature: float = 0.0) -> str:
        payload = {"model": self.model, "messages": messages, "temperature": temperature}

        def call() -> str:
            data = self._post(payload)
            return data["choices"][0]["message"]["content"]

        return _with_retries(call, self.retries, self.backoff, "chat completion")


@dataclass
class HttpVisionClient:
    """Chat-completions client sending one base64 PNG image part per request."""

    base_url: str
    model: str
    api_key_env: str = "TCB_VLM_API_KEY"
    retries: int = DEFAULT_RETRIES
    backoff: float = DEFAULT_BACKOFF
    timeout: float = 120.0
    rate_limiter: RateLimiter = field(default_factory=lambda: RateLimiter(None))

    def judge(self, image_png: bytes, prompt: str) -> str:
        b64 = base64.b64encode(image_png).decode("ascii")
        payload = {
            "model": self.model,
            "temperature": 0.0,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt},
                        {
                            "type": "image_url",
                            "image_url": {"url": f"data:image/png;base64,{b64}"},
                        },
                    ],
                }
            ],
        }

        def call() -> str:
            self.rate_limiter.acquire()
            headers = {"Content-Type": "application/json"}
            key = _api_key(self.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            resp = requests.post(
                self.base_url.rstrip("/") + "/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]

        return _with_retries(call, self.retries, self.backoff, "vision judgement")


# ---------------------------------------------------------------------------
# Scripted clients: canned responses for offline, deterministic runs.


@dataclass
class ScriptedResponses:
    """Ordered (match, response) rules; first exact match wins, then substring."""

    rules: list[tuple[str, str]]
    default: str | None = None

    @classmethod
    def from_file(cls, path: Path | str) -> "ScriptedResponses":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = [(r["match"], r["response"]) for r in data.get("responses", [])]
        return cls(rules=rules, default=data.get("default"))

    def lookup(self, query: str) -> str:
        for match, response in self.rules:
            if match == query:
                return response
        for match, response in self.rules:
            if match in query:
                return response
        if self.default is not None:
            return self.default
        raise ProviderError(f"no scripted response matches: {query[:120]!r}")


@dataclass
class ScriptedTextClient:
    script: ScriptedResponses
    calls: int = 0

    def complete(self, messages: list[dict], temperature: float = 0.0) -> str:
        self.calls += 1
        query = messages[-1]["content"]
        if not isinstance(query, str):
            query = json.dumps(query)
        return self.script.lookup(query)


@dataclass
class ScriptedVisionClient:
    script: ScriptedResponses
    calls: int = 0

    def judge(self, image_png: bytes, prompt: str) -> str:
        self.calls += 1
        return self.script.lookup(prompt)


# ---------------------------------------------------------------------------
# Embedding providers.


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    norm[norm == 0] = 1.0
    return v / norm


@dataclass
class MockEmbeddingProvider:
    """Deterministic hash-seeded embeddings for offline runs and tests."""

    dim: int = 32
    fingerprint: str = "mock-embed-32"

    def _vector(self, payload: bytes) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.dim)

    def embed_images(self, images: list[bytes]) -> np.ndarray:
        return _unit(np.stack([self._vector(img) for img in images])).astype(np.float64)

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        return _unit(
            np.stack([self._vector(t.encode("utf-8")) for t in texts])
        ).astype(np.float64)


@dataclass
class HttpEmbeddingProvider:
    """Remote embedding endpoint; images are sent as base64 PNG input items.

    Wire format: POST {base_url}/embeddings with
    ``{"model": ..., "input": ["text", {"image_b64": ...}, ...]}`` returning
    ``{"data": [{"embedding": [...]}, ...]}`` in input order.
    """

    base_url: str
    model: str
    api_key_env: str = "TCB_EMBED_API_KEY"
    retries: int = DEFAULT_RETRIES
    backoff: float = DEFAULT_BACKOFF
    timeout: float = 120.0

    @property
    def fingerprint(self) -> str:
        return f"http:{self.model}"

    def _embed(self, inputs: list) -> np.ndarray:
        payload = {"model": self.model, "input": inputs}

        def call() -> np.ndarray:
            headers = {"Content-Type": "application/json"}
            key = _api_key(self.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            resp = requests.post(
                self.base_url.rstrip("/") + "/embeddings",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            data = resp.json()["data"]
            return np.asarray([d["embedding"] for d in data], dtype=np.float64)

        return _with_retries(call, self.retries, self.backoff, "embedding")

    def embed_images(self, images: list[bytes]) -> np.ndarray:
        return self._embed(
            [{"image_b64": base64.b64encode(img).decode("ascii")} for img in images]
        )

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        return self._embed(list(texts))


class LocalClipProvider:
    """Local image/text encoder backend; loads published weights on first use."""

    def __init__(self, model_name: str = "openai/clip-vit-large-patch14-336"):
        self.model_name = model_name
        self.fingerprint = f"local:{model_name}"
        self._model = None
        self._processor = None

    def _ensure_loaded(self):
        if self._model is not None:
            return
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ProviderError(
                "local embedding backend needs the 'local-embeddings' extra "
                f"(torch + transformers): {exc}"
            )
        self._model = CLIPModel.from_pretrained(self.model_name)
        self._model.eval()
        self._processor = CLIPProcessor.from_pretrained(self.model_name)

    def embed_images(self, images: list[bytes]) -> np.ndarray:
        self._ensure_loaded()
        import io

        import torch
        from PIL import Image

        pils = [Image.open(io.BytesIO(b)).convert("RGB") for b in images]
        inputs = self._processor(images=pils, return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return feats.cpu().numpy().astype(np.float64)

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        self._ensure_loaded()
        import torch

        inputs = self._processor(text=list(texts), return_tensors="pt", padding=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return feats.cpu().numpy().astype(np.float64)
