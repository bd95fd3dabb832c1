"""Themed article corpus: grounding context for comment generation.

One article per file; front-matter carries title and url, the rest is body:

    ---
    title: Why the wage-gap numbers keep getting misread
    url: https://example.org/wage-gap
    ---
    body text ...
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import MissingFrontMatter

PROMPT_BUDGET_CHARS = 12_000


@dataclass(frozen=True)
class Article:
    title: str
    url: str
    body: str


@dataclass(frozen=True)
class Corpus:
    theme: str
    articles: tuple[Article, ...]
    total_chars: int

    def urls(self) -> set[str]:
        return {article.url for article in self.articles}


def _parse_article(path: Path) -> Article:
    text = path.read_text(encoding="utf-8")
    name = path.name
    if not text.startswith("---"):
        raise MissingFrontMatter("no front-matter block", filename=name)
    try:
        _, front, body = text.split("---", 2)
    except ValueError:
        raise MissingFrontMatter("unterminated front-matter block", filename=name) from None
    fields: dict[str, str] = {}
    for line in front.strip().splitlines():
        if ":" not in line:
            continue
        key, _, value = line.partition(":")
        fields[key.strip().lower()] = value.strip()
    if not fields.get("url"):
        raise MissingFrontMatter("missing url", filename=name)
    if not fields.get("title"):
        raise MissingFrontMatter("missing title", filename=name)
    body = body.strip()
    if not body:
        raise MissingFrontMatter("article body is empty", filename=name)
    return Article(title=fields["title"], url=fields["url"], body=body)


def load_corpus(directory: str | Path, theme: str) -> Corpus:
    """Load every article under ``directory`` in filename order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory does not exist: {directory}")
    articles = [
        _parse_article(path)
        for path in sorted(directory.iterdir())
        if path.is_file() and path.suffix in (".md", ".txt")
    ]
    return Corpus(
        theme=theme,
        articles=tuple(articles),
        total_chars=sum(len(a.body) for a in articles),
    )


def render_corpus(corpus: Corpus, budget: int = PROMPT_BUDGET_CHARS) -> str:
    """Render articles in order until the character budget is exhausted."""
    blocks: list[str] = []
    used = 0
    for article in corpus.articles:
        block = f"### {article.title} ({article.url})\n{article.body}"
        if used + len(block) > budget:
            if not blocks:
                blocks.append(block[:budget])
            break
        blocks.append(block)
        used += len(block) + 2
    return "\n\n".join(blocks)
