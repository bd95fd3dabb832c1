"""Turn raw caption cues into clean prose via the model.

Cue text is chunked at a character budget (whole cues only) with a short
trailing-context overlap so chunk boundaries never drop or garble text; the
normalized chunks concatenate in cue order.
"""

from __future__ import annotations

import logging

from .. import llm
from .models import CaptionCue, Transcript

logger = logging.getLogger(__name__)

CHUNK_CHARS = 6_000
OVERLAP_CHARS = 200

NORMALIZE_PROMPT = """\
You clean up raw video captions. Rewrite the caption text below as well-punctuated,
grammatical prose. Keep every statement and the original wording as much as possible;
fix only punctuation, casing, and obvious transcription stutters. Do not summarize,
do not add anything, do not drop anything.
{context_section}
Captions:
{captions}
"""

_CONTEXT_SECTION = """
Preceding text (context only, already handled, do not repeat it):
{context}
"""


def _chunk_cue_texts(texts: list[str], budget: int) -> list[list[str]]:
    chunks: list[list[str]] = []
    current: list[str] = []
    size = 0
    for text in texts:
        added = len(text) + (1 if current else 0)
        if current and size + added > budget:
            chunks.append(current)
            current = [text]
            size = len(text)
        else:
            current.append(text)
            size += added
    if current:
        chunks.append(current)
    return chunks


def normalize_transcript(
    cues: list[CaptionCue],
    client: llm.ModelClient,
    config: llm.ModelConfig | None = None,
    *,
    language: str = "und",
    chunk_chars: int = CHUNK_CHARS,
    overlap_chars: int = OVERLAP_CHARS,
) -> Transcript:
    """Normalize sorted cues into a Transcript; no cues means no model call."""
    texts = [cue.text for cue in cues if cue.text.strip()]
    if not texts:
        return Transcript(text="", source_cue_count=0, language=language)
    config = config or llm.factual_config()

    outputs: list[str] = []
    previous_raw = ""
    for chunk in _chunk_cue_texts(texts, chunk_chars):
        raw = " ".join(chunk)
        if previous_raw and overlap_chars > 0:
            context = previous_raw[-overlap_chars:]
            context_section = _CONTEXT_SECTION.format(context=context)
        else:
            context_section = ""
        prompt = NORMALIZE_PROMPT.format(context_section=context_section, captions=raw)
        outputs.append(llm.complete(client, prompt, config).strip())
        previous_raw = raw

    text = "\n\n".join(part for part in outputs if part).strip()
    if not text:
        # A degenerate model reply must not lose the transcript; fall back to
        # the raw cue text rather than fabricating emptiness.
        logger.warning("model returned empty normalization; keeping raw cue text")
        text = " ".join(texts)
    return Transcript(text=text, source_cue_count=len(texts), language=language)
