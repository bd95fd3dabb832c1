"""Caption track parsing: WebVTT, SRT, and platform XML timed-text.

Parsing is pure and deterministic: byte-identical input yields an identical
cue list. Cue text is stripped of inline styling/timing markup; cues whose
text is empty after stripping are dropped.
"""

from __future__ import annotations

import html
import re
import xml.etree.ElementTree as ET

from ..errors import MalformedTrack
from .models import CaptionCue, CaptionFormat

_TAG_RE = re.compile(r"<[^>]*>")
_ASS_OVERRIDE_RE = re.compile(r"\{\\[^}]*\}")
_VTT_TIMESTAMP_RE = re.compile(r"^(?:(\d{1,4}):)?(\d{2}):(\d{2})\.(\d{3})$")
_SRT_TIMESTAMP_RE = re.compile(r"^(\d{1,4}):(\d{2}):(\d{2})[,.](\d{3})$")


def _decode(raw: bytes) -> str:
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedTrack(f"track is not valid UTF-8: {exc.reason}", offset=exc.start)
    return text.replace("\r\n", "\n").replace("\r", "\n")


def strip_cue_markup(text: str) -> str:
    """Remove inline tags (<b>, <c.color>, <v Name>, <00:00:01.000>) and
    ASS-style {\\...} overrides, then unescape character references."""
    text = _TAG_RE.sub("", text)
    text = _ASS_OVERRIDE_RE.sub("", text)
    text = html.unescape(text)
    return " ".join(text.split())


def _parse_vtt_timestamp(token: str, line_no: int) -> int:
    match = _VTT_TIMESTAMP_RE.match(token)
    if not match:
        raise MalformedTrack(f"bad WebVTT timestamp {token!r}", line=line_no)
    hours = int(match.group(1) or 0)
    return ((hours * 60 + int(match.group(2))) * 60 + int(match.group(3))) * 1000 + int(
        match.group(4)
    )


def _parse_srt_timestamp(token: str, line_no: int) -> int:
    match = _SRT_TIMESTAMP_RE.match(token)
    if not match:
        raise MalformedTrack(f"bad SRT timestamp {token!r}", line=line_no)
    hours, minutes, seconds, millis = (int(g) for g in match.groups())
    return ((hours * 60 + minutes) * 60 + seconds) * 1000 + millis


def _make_cue(start: int, end: int, text: str, line_no: int) -> CaptionCue | None:
    if end <= start:
        raise MalformedTrack(f"cue end {end}ms <= start {start}ms", line=line_no)
    if start < 0:
        raise MalformedTrack(f"cue start {start}ms < 0", line=line_no)
    cleaned = strip_cue_markup(text)
    if not cleaned:
        return None
    return CaptionCue(start=start, end=end, text=cleaned)


def _blocks(lines: list[str]) -> list[tuple[int, list[str]]]:
    """Split lines into blank-separated blocks, keeping 1-based line numbers."""
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    start_line = 1
    for i, line in enumerate(lines, start=1):
        if line.strip() == "":
            if current:
                blocks.append((start_line, current))
                current = []
        else:
            if not current:
                start_line = i
            current.append(line)
    if current:
        blocks.append((start_line, current))
    return blocks


def _parse_webvtt(text: str) -> list[CaptionCue]:
    lines = text.split("\n")
    first = next((line for line in lines if line.strip()), "")
    if not first.strip().startswith("WEBVTT"):
        raise MalformedTrack("missing WEBVTT header", line=1)

    cues: list[CaptionCue] = []
    for start_line, block in _blocks(lines):
        head = block[0].strip()
        if head.startswith("WEBVTT"):
            continue
        if head.startswith(("NOTE", "STYLE", "REGION")):
            continue
        timing_index = next((i for i, line in enumerate(block) if "-->" in line), None)
        if timing_index is None:
            raise MalformedTrack("cue block has no timing line", line=start_line)
        timing_line_no = start_line + timing_index
        parts = block[timing_index].split("-->")
        if len(parts) != 2:
            raise MalformedTrack("malformed timing line", line=timing_line_no)
        start = _parse_vtt_timestamp(parts[0].strip(), timing_line_no)
        # Cue settings (align:, position:, ...) follow the end timestamp.
        end_token = parts[1].strip().split()[0] if parts[1].strip() else ""
        end = _parse_vtt_timestamp(end_token, timing_line_no)
        cue = _make_cue(start, end, " ".join(block[timing_index + 1 :]), timing_line_no)
        if cue is not None:
            cues.append(cue)
    return cues


def _parse_srt(text: str) -> list[CaptionCue]:
    cues: list[CaptionCue] = []
    for start_line, block in _blocks(text.split("\n")):
        index = 0
        if re.fullmatch(r"\d+", block[0].strip()):
            index = 1
        if index >= len(block) or "-->" not in block[index]:
            raise MalformedTrack("subtitle block has no timing line", line=start_line)
        timing_line_no = start_line + index
        parts = block[index].split("-->")
        if len(parts) != 2:
            raise MalformedTrack("malformed timing line", line=timing_line_no)
        start = _parse_srt_timestamp(parts[0].strip(), timing_line_no)
        end = _parse_srt_timestamp(parts[1].strip().split()[0], timing_line_no)
        cue = _make_cue(start, end, " ".join(block[index + 1 :]), timing_line_no)
        if cue is not None:
            cues.append(cue)
    return cues


def _xml_ms(value: str | None, attr: str, *, scale: float) -> int | None:
    if value is None:
        return None
    try:
        return int(round(float(value) * scale))
    except ValueError as exc:
        raise MalformedTrack(f"non-numeric {attr} attribute {value!r}") from exc


def _parse_platform_xml(text: str) -> list[CaptionCue]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, offset = exc.position
        raise MalformedTrack(f"invalid XML: {exc.msg.split(':')[0]}", line=line, offset=offset)

    cues: list[CaptionCue] = []
    if root.tag == "transcript":
        # Classic timed-text: <text start="1.54" dur="3.2">...</text>
        for element in root.iter("text"):
            start = _xml_ms(element.get("start"), "start", scale=1000)
            dur = _xml_ms(element.get("dur"), "dur", scale=1000)
            if start is None or dur is None:
                raise MalformedTrack("text element missing start/dur")
            cue = _make_cue(start, start + dur, "".join(element.itertext()), 0)
            if cue is not None:
                cues.append(cue)
    elif root.tag == "timedtext":
        # srv3: <p t="1540" d="3200">...</p>, times already in milliseconds
        for element in root.iter("p"):
            start = _xml_ms(element.get("t"), "t", scale=1)
            dur = _xml_ms(element.get("d"), "d", scale=1)
            if start is None or dur is None:
                raise MalformedTrack("p element missing t/d")
            cue = _make_cue(start, start + dur, "".join(element.itertext()), 0)
            if cue is not None:
                cues.append(cue)
    else:
        raise MalformedTrack(f"unrecognized timed-text root element <{root.tag}>")
    return cues


_PARSERS = {
    CaptionFormat.WEBVTT: _parse_webvtt,
    CaptionFormat.SRT: _parse_srt,
    CaptionFormat.PLATFORM_XML: _parse_platform_xml,
}


def parse_caption_track(raw: bytes, format: CaptionFormat) -> list[CaptionCue]:
    """Parse a raw caption document into cues sorted by start time."""
    if format not in _PARSERS:
        raise ValueError(f"unsupported caption format: {format}")
    cues = _PARSERS[format](_decode(raw))
    cues.sort(key=lambda cue: (cue.start, cue.end))
    return cues
