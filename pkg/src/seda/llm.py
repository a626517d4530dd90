"""Language-model access behind one narrow interface.

All LM interaction in the pipeline goes through a client exposing
``render(template_id, variables)`` and ``complete(prompt)``. The shipped
stub is a pure function of its input so the whole system runs offline and
deterministically; an HTTP-backed client can be swapped in via config.
"""

from __future__ import annotations

import json
import re
from importlib import resources
from typing import Mapping, Protocol

from .embedding import Embedder, HashedNgramEmbedder, cosine
from .errors import MalformedResponse

TEMPLATE_IDS = (
    "describe_dataset",
    "extract_dataset",
    "refine_tags",
    "summarize_results",
    "generate_topics",
)

# is_dataset=Yes signal: an introduction verb within 80 chars of a dataset noun.
DATASET_SIGNAL = re.compile(
    r"(introduce|release|propose|present)s?\b.{0,80}\b(dataset|benchmark|corpus)",
    re.IGNORECASE | re.DOTALL,
)

_URL = re.compile(r"https?://[^\s<>\"')\]]+")
_CAP_TOKEN = re.compile(r"^[A-Z][A-Za-z0-9_\-]*$")
_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_WORD = re.compile(r"[a-z0-9]+")
# Sentence-starter words that never name a dataset on their own.
_CAP_STOPWORDS = {
    "we", "the", "a", "an", "in", "on", "it", "i", "this", "these",
    "our", "here", "there", "to", "for", "of", "and",
}


class LanguageModelClient(Protocol):
    def render(self, template_id: str, variables: Mapping[str, str]) -> str:  # pragma: no cover
        ...

    def complete(self, prompt: str) -> str:  # pragma: no cover
        ...


class TemplateLibrary:
    """Loads the shipped prompt templates and fills their placeholders.

    Substitution is a targeted replace of the known ``{name}`` slots only;
    literal braces elsewhere in a template (JSON response formats) survive
    untouched.
    """

    def __init__(self) -> None:
        self._cache: dict[str, str] = {}

    def raw(self, template_id: str) -> str:
        if template_id not in self._cache:
            if template_id not in TEMPLATE_IDS:
                raise KeyError(f"unknown template: {template_id}")
            text = (
                resources.files("seda.templates")
                .joinpath(f"{template_id}.txt")
                .read_text(encoding="utf-8")
            )
            self._cache[template_id] = text
        return self._cache[template_id]

    def render(self, template_id: str, variables: Mapping[str, str]) -> str:
        text = self.raw(template_id)
        for name, value in variables.items():
            text = text.replace("{" + name + "}", str(value))
        return text


def _section(prompt: str, start_marker: str, end_marker: str | None = None) -> str:
    start = prompt.find(start_marker)
    if start < 0:
        return ""
    start += len(start_marker)
    if end_marker is None:
        return prompt[start:].strip()
    end = prompt.find(end_marker, start)
    if end < 0:
        return prompt[start:].strip()
    return prompt[start:end].strip()


def word_bigrams(text: str) -> list[str]:
    words = _WORD.findall(text.lower())
    return [f"{a} {b}" for a, b in zip(words, words[1:])]


def top_bigrams(text: str, k: int, exclude: set[str] | None = None) -> list[str]:
    """Most frequent word bigrams of a text, ties broken by first occurrence."""
    exclude = exclude or set()
    grams = word_bigrams(text)
    counts: dict[str, int] = {}
    first_pos: dict[str, int] = {}
    for pos, gram in enumerate(grams):
        counts[gram] = counts.get(gram, 0) + 1
        first_pos.setdefault(gram, pos)
    ranked = sorted(counts, key=lambda g: (-counts[g], first_pos[g]))
    out = []
    for gram in ranked:
        if gram in exclude:
            continue
        out.append(gram)
        if len(out) == k:
            break
    return out


def largest_content_block(html: str) -> str:
    """The longest visible text chunk of a page, with chrome regions removed."""
    cleaned = re.sub(
        r"<(script|style|nav|header|footer)\b[^>]*>.*?</\1\s*>",
        " ",
        html,
        flags=re.IGNORECASE | re.DOTALL,
    )
    chunks = re.split(
        r"<(?:p|div|main|article|section|li|td|h[1-6]|br)\b[^>]*/?>",
        cleaned,
        flags=re.IGNORECASE,
    )
    texts = []
    for chunk in chunks:
        text = re.sub(r"<[^>]+>", " ", chunk)
        text = re.sub(r"\s+", " ", text).strip()
        if text:
            texts.append(text)
    if not texts:
        return ""
    return max(texts, key=len)


def first_sentences(text: str, n: int) -> str:
    parts = _SENTENCE_SPLIT.split(text.strip())
    return " ".join(parts[:n]).strip()


class StubLanguageModel:
    """Deterministic offline client: ``complete`` is a pure function of the prompt.

    It recognizes which shipped template produced a prompt by its header
    line, parses the filled input sections back out, and applies fixed
    rules in place of a real model.
    """

    def __init__(self, embedder: Embedder | None = None):
        self.templates = TemplateLibrary()
        self.embedder = embedder or HashedNgramEmbedder()

    def render(self, template_id: str, variables: Mapping[str, str]) -> str:
        return self.templates.render(template_id, variables)

    def complete(self, prompt: str) -> str:
        if "You are a dataset analysis expert" in prompt:
            return self._extract(prompt)
        if "You are a dataset description extraction expert" in prompt:
            return self._describe(prompt)
        if "You are a dataset annotation specialist" in prompt:
            return self._refine(prompt)
        if "You are a dataset summarization specialist" in prompt:
            return self._summarize(prompt)
        if "You are a dataset topic generation specialist" in prompt:
            return self._topics(prompt)
        raise MalformedResponse("stub cannot route prompt", raw_response=prompt[:200])

    # -- extraction ---------------------------------------------------------

    def _extract(self, prompt: str) -> str:
        text = _section(prompt, "- Text Content: ")
        match = DATASET_SIGNAL.search(text)
        if not match:
            return json.dumps(
                {
                    "is_dataset": "No",
                    "dataset_name": "",
                    "dataset_desc": "",
                    "dataset_url": "",
                    "analysis": "no dataset introduction signal found",
                }
            )
        name = self._nearest_capitalized_run(text, match.start())
        url_match = _URL.search(text)
        url = url_match.group(0).rstrip(".,;") if url_match else ""
        sentence = self._sentence_around(text, match.start())
        return json.dumps(
            {
                "is_dataset": "Yes",
                "dataset_name": name,
                "dataset_desc": sentence,
                "dataset_url": url,
                "analysis": f"introduction signal: {match.group(0)[:60]!r}",
            }
        )

    @staticmethod
    def _nearest_capitalized_run(text: str, anchor: int) -> str:
        tokens = [(m.group(0), m.start()) for m in re.finditer(r"\S+", text)]
        runs: list[tuple[str, int]] = []
        current: list[tuple[str, int]] = []
        for token, pos in tokens:
            stripped = token.strip(".,;:!?()[]\"'")
            if stripped and _CAP_TOKEN.match(stripped):
                current.append((stripped, pos))
            else:
                if current:
                    runs.append((" ".join(t for t, _ in current), current[0][1]))
                current = []
        if current:
            runs.append((" ".join(t for t, _ in current), current[0][1]))
        named = [
            (label, pos)
            for label, pos in runs
            if not all(w.lower() in _CAP_STOPWORDS for w in label.split())
        ]
        if not named:
            return ""
        label, _ = min(named, key=lambda item: abs(item[1] - anchor))
        return label

    @staticmethod
    def _sentence_around(text: str, anchor: int) -> str:
        sentences = _SENTENCE_SPLIT.split(text.strip())
        offset = 0
        for sentence in sentences:
            start = text.find(sentence, offset)
            if start <= anchor < start + len(sentence) + 1:
                return sentence.strip()
            offset = start + len(sentence)
        return sentences[0].strip() if sentences else ""

    # -- description --------------------------------------------------------

    def _describe(self, prompt: str) -> str:
        html = _section(prompt, "The HTML content of the dataset detail page is: ")
        block = largest_content_block(html)
        return first_sentences(block, 2)

    # -- tag refinement ------------------------------------------------------

    def _refine(self, prompt: str) -> str:
        name = _section(prompt, "- Dataset Name: ", "\n- Dataset Description: ")
        desc = _section(prompt, "- Dataset Description: ", "\n- Candidate Tags: ")
        tags_raw = _section(prompt, "- Candidate Tags: ")
        try:
            candidates = list(json.loads(tags_raw)) if tags_raw else []
        except json.JSONDecodeError:
            candidates = [t.strip() for t in tags_raw.split(",") if t.strip()]

        target = self.embedder.embed(f"{name.lower().strip()} {desc}".strip())
        scored = sorted(
            ((cosine(target, self.embedder.embed(tag)), tag) for tag in candidates),
            key=lambda item: (-item[0], item[1]),
        )
        qualified = [tag for score, tag in scored[:2] if score >= 0.3]
        selected = [{"tag": tag, "is_new": False, "reason": "top similarity"} for tag in qualified]

        weakly: list[str] = []
        if len(scored) >= 3 and scored[2][0] >= 0.5:
            weakly.append(scored[2][1])
        taken = set(qualified) | set(weakly)
        discarded = [tag for _, tag in scored if tag not in taken]

        if len(selected) < 2:
            exclude = {t.lower() for t in candidates} | {s["tag"].lower() for s in selected}
            for fresh in self._fresh_tags(name, desc, 2 - len(selected), exclude):
                selected.append({"tag": fresh, "is_new": True, "reason": "synthesized from description"})
        return json.dumps(
            {"selected": selected, "weakly_related": weakly, "discarded": discarded}
        )

    @staticmethod
    def _fresh_tags(name: str, desc: str, count: int, exclude: set[str]) -> list[str]:
        pool = top_bigrams(desc, count + len(exclude) + 4, exclude=exclude)
        pool += [g for g in top_bigrams(name, 2, exclude=exclude) if g not in pool]
        words = [w for w in _WORD.findall(f"{desc} {name}".lower()) if w not in exclude]
        pool += [w for w in words if w not in pool]
        pool += ["untitled dataset", "unspecified domain"]
        out: list[str] = []
        for label in pool:
            if label.lower() in exclude or label in out:
                continue
            out.append(label)
            if len(out) == count:
                break
        return out

    # -- summarization -------------------------------------------------------

    def _summarize(self, prompt: str) -> str:
        query = _section(prompt, "- User Query: ", "\n- Dataset Records: ")
        records = _section(prompt, "- Dataset Records: ", "\n- Provider Information (optional): ")
        providers = _section(prompt, "- Provider Information (optional): ")
        names = [line.split(":", 1)[0].strip() for line in records.splitlines() if line.strip()]
        if not names:
            return f"No datasets found for '{query}'."
        summary = f"Datasets relevant to '{query}' include {_join_names(names)}."
        provider_names = [
            line.split(":", 1)[0].strip() for line in providers.splitlines() if line.strip()
        ]
        if provider_names:
            summary += f" Providers include {_join_names(provider_names)}."
        return summary

    # -- topic generation ----------------------------------------------------

    def _topics(self, prompt: str) -> str:
        name = _section(prompt, "- Dataset Name: ", "\n- Dataset Description: ")
        desc = _section(prompt, "- Dataset Description: ")
        topics = top_bigrams(desc, 2)
        if len(topics) < 2:
            topics += [g for g in top_bigrams(name, 2) if g not in topics]
        words = _WORD.findall(f"{desc} {name}".lower())
        for word in words:
            if len(topics) >= 2:
                break
            if word not in topics:
                topics.append(word)
        while len(topics) < 2:
            topics.append("general data" if "general data" not in topics else "uncategorized")
        return json.dumps(topics[:2])


def _join_names(names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


class ExternalLanguageModel:
    """Thin HTTP client for a real completion endpoint.

    Posts ``{"prompt": ...}`` and expects ``{"text": ...}`` back. Exists so
    deployments can swap the stub out via config; nothing in the offline
    suite exercises it.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.templates = TemplateLibrary()

    def render(self, template_id: str, variables: Mapping[str, str]) -> str:
        return self.templates.render(template_id, variables)

    def complete(self, prompt: str) -> str:
        import requests

        resp = requests.post(self.endpoint, json={"prompt": prompt}, timeout=self.timeout)
        resp.raise_for_status()
        body = resp.json()
        if "text" not in body:
            raise MalformedResponse("endpoint returned no text field", raw_response=resp.text)
        return str(body["text"])
