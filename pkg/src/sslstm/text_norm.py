"""Tokenization and emoticon normalization for short conversational text.

Raw utterances go through two steps: :func:`tokenize` splits text into word,
emoticon, and punctuation tokens (dropping @-handles and URLs), and
:func:`normalize_emoticons` rewrites every recognized emoticon variant to a
single canonical form, e.g. ``:(((`` and the frowning-face emoji both become
``:(``.  The combined pipeline is :func:`normalize_utterance`.

The emoticon lexicon ships as a data file (``data/emoticons.tsv``) so the
token-level behaviour is stable and testable.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

EMOTICON_CLASSES = ("happy", "sad", "angry", "neutral")

TOKEN_KINDS = ("word", "emoticon", "punctuation")


class LexiconFormatError(ValueError):
    """Raised for malformed lexicon files or inconsistent lexicon entries."""


@dataclass(frozen=True)
class Token:
    """One normalized token.  ``kind`` is "emoticon" only for canonical forms."""

    surface: str
    kind: str

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValueError(f"token surface must be non-empty and whitespace-free: {self.surface!r}")
        if self.kind not in TOKEN_KINDS:
            raise ValueError(f"unknown token kind: {self.kind!r}")


def _is_word_char(ch: str) -> bool:
    return bool(re.match(r"[^\W_]", ch))


class EmoticonLexicon:
    """Immutable emoticon table mapping raw variants to canonical forms.

    Each entry is ``(raw, canonical, class)``.  Invariants enforced here:
    raw forms are unique, every canonical form maps to itself, and a raw
    form's class always agrees with its canonical form's class.
    """

    def __init__(self, entries):
        entries = [tuple(e) for e in entries]
        if not entries:
            raise LexiconFormatError("lexicon has no entries")
        raw_to_canonical: dict[str, str] = {}
        raw_class: dict[str, str] = {}
        for raw, canonical, cls in entries:
            for form in (raw, canonical):
                if not form or any(c.isspace() for c in form):
                    raise LexiconFormatError(f"emoticon form must be non-empty and whitespace-free: {form!r}")
            if cls not in EMOTICON_CLASSES:
                raise LexiconFormatError(f"unknown emoticon class {cls!r} for {raw!r}")
            if raw in raw_to_canonical:
                raise LexiconFormatError(f"duplicate raw form {raw!r}")
            raw_to_canonical[raw] = canonical
            raw_class[raw] = cls
        for raw, canonical, cls in entries:
            if raw_to_canonical.get(canonical) != canonical:
                raise LexiconFormatError(f"canonical form {canonical!r} does not map to itself")
            if raw_class[canonical] != cls:
                raise LexiconFormatError(
                    f"class of {raw!r} ({cls}) disagrees with its canonical form {canonical!r}"
                )
        self.entries = entries
        self.raw_to_canonical = raw_to_canonical
        # Class lookup is by canonical form; raw forms were checked consistent.
        self.canonical_class = {c: raw_class[c] for c in raw_to_canonical.values()}
        self._scanner = self._compile_scanner()

    def _compile_scanner(self) -> re.Pattern:
        # One alternation over all raw forms, longest first.  Each form may be
        # extended by a run of its final ("mouth") character, so ":(((" is
        # captured as a single token.  Forms ending in a letter or digit (like
        # "xD") must not bleed into a following word.
        order = {raw: i for i, raw in enumerate(self.raw_to_canonical)}
        parts = []
        for raw in sorted(self.raw_to_canonical, key=lambda r: (-len(r), order[r])):
            pat = re.escape(raw) + re.escape(raw[-1]) + "*"
            if _is_word_char(raw[-1]):
                pat += r"(?![^\W_])"
            parts.append(pat)
        return re.compile("|".join(parts))

    def match_emoticon(self, text: str, pos: int = 0):
        """Match an emoticon candidate (raw form plus mouth run) at ``pos``."""
        return self._scanner.match(text, pos)


def load_lexicon(source) -> EmoticonLexicon:
    """Read a lexicon from a path or text stream.

    Format: UTF-8, one ``raw<TAB>canonical<TAB>class`` entry per line; lines
    starting with '#' and blank lines are ignored.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
        name = getattr(source, "name", "<stream>")
    else:
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        name = str(source)
    entries = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise LexiconFormatError(f"{name}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
        entries.append(tuple(fields))
    try:
        return EmoticonLexicon(entries)
    except LexiconFormatError as exc:
        raise LexiconFormatError(f"{name}: {exc}") from None


@lru_cache(maxsize=1)
def default_lexicon() -> EmoticonLexicon:
    """The lexicon shipped with the package."""
    ref = resources.files("sslstm").joinpath("data/emoticons.tsv")
    with ref.open("r", encoding="utf-8") as fh:
        return load_lexicon(fh)


@lru_cache(maxsize=1)
def default_lexicon_sha256() -> str:
    """SHA-256 of the packaged lexicon file, for checkpoint provenance."""
    ref = resources.files("sslstm").joinpath("data/emoticons.tsv")
    return hashlib.sha256(ref.read_bytes()).hexdigest()


_WORD_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*")

# Emoji variation selectors change rendering only; drop them before scanning.
_VARIATION_SELECTORS = dict.fromkeys((0xFE0E, 0xFE0F), None)

def _drop_chunk(chunk: str) -> bool:
    # Twitter handles and URLs.  The prefixes are chosen so that no token the
    # scanner can emit ("@" alone, the bare word "http") matches, which keeps
    # tokenize -> serialize -> tokenize a fixed point.
    low = chunk.lower()
    if low.startswith("@"):
        return len(chunk) > 1
    return low.startswith(("http://", "https://", "www."))


def tokenize(raw: str, lex: EmoticonLexicon | None = None) -> list[Token]:
    """Split raw text into tokens.

    Word tokens are lowercased and keep internal apostrophes ("don't");
    @-handles and URLs are dropped; emoticon candidates (lexicon raw forms,
    including repeated-mouth runs) survive as single tokens; everything else
    becomes one punctuation token per character.
    """
    if lex is None:
        lex = default_lexicon()
    text = raw.translate(_VARIATION_SELECTORS)
    tokens: list[Token] = []
    for chunk in text.split():
        if _drop_chunk(chunk):
            continue
        pos = 0
        while pos < len(chunk):
            m = lex.match_emoticon(chunk, pos)
            if m:
                surface = m.group(0)
                kind = "emoticon" if surface in lex.canonical_class else "punctuation"
                tokens.append(Token(surface, kind))
                pos = m.end()
                continue
            m = _WORD_RE.match(chunk, pos)
            if m:
                tokens.append(Token(m.group(0).lower(), "word"))
                pos = m.end()
                continue
            tokens.append(Token(chunk[pos], "punctuation"))
            pos += 1
    return tokens


_TRAILING_RUN_RE = re.compile(r"(.)\1+\Z")


def normalize_emoticons(tokens, lex: EmoticonLexicon | None = None) -> list[Token]:
    """Replace every recognized emoticon variant by its canonical form.

    A token matches either directly or after collapsing a trailing repeated-
    character run (":(((" -> ":(").  Unrecognized tokens pass through
    unchanged; the operation is idempotent.
    """
    if lex is None:
        lex = default_lexicon()
    out: list[Token] = []
    for tok in tokens:
        surface = tok.surface
        canonical = lex.raw_to_canonical.get(surface)
        if canonical is None:
            collapsed = _TRAILING_RUN_RE.sub(r"\1", surface)
            if collapsed != surface:
                canonical = lex.raw_to_canonical.get(collapsed)
        if canonical is None:
            out.append(tok)
        else:
            out.append(Token(canonical, "emoticon"))
    return out


def normalize_utterance(raw: str, lex: EmoticonLexicon | None = None) -> list[Token]:
    """Tokenize and emoticon-normalize one utterance."""
    if lex is None:
        lex = default_lexicon()
    return normalize_emoticons(tokenize(raw, lex), lex)


def emoticon_class(token, lex: EmoticonLexicon | None = None) -> str | None:
    """Class of a canonical emoticon token; None for anything else."""
    if lex is None:
        lex = default_lexicon()
    surface = token.surface if isinstance(token, Token) else token
    return lex.canonical_class.get(surface)


def serialize_tokens(tokens) -> str:
    """Join tokens back into a space-separated string."""
    return " ".join(t.surface if isinstance(t, Token) else t for t in tokens)


def surfaces(tokens) -> list[str]:
    """Token surfaces as plain strings."""
    return [t.surface if isinstance(t, Token) else t for t in tokens]
