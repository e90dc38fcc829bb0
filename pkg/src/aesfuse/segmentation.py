"""Rule-based sentence segmentation for essay text.

Splits on terminal punctuation {. ! ?} with an abbreviation lexicon,
does not split inside double-quoted spans, and never drops a
non-whitespace character of the input.
"""

import re

# Words whose trailing period does not end a sentence. Entries with
# internal periods are matched against the token including them.
# Calendar abbreviations that collide with common words (sat, sun, wed,
# mar, no) are deliberately absent: the common-word reading wins.
ABBREVIATIONS = frozenset(
    """
    mr mrs ms dr prof rev fr sr jr st vs etc fig figs inc ltd co corp
    mt gen rep sen gov hon capt lt col maj sgt cpl dept univ assn bros
    approx appt apt ave blvd rd hwy misc
    jan feb apr jun jul aug sep sept oct nov dec
    mon tue tues thu thurs fri
    e.g i.e u.s u.k a.m p.m ph.d b.a m.a d.c
    """.split()
)

_TERMINALS = ".!?"
_CLOSERS = "\"')]}”’"
_VOWELS = "aeiouy"


def _token_before(text: str, i: int) -> str:
    """Word immediately left of position i, keeping internal periods."""
    j = i
    while j > 0 and (text[j - 1].isalpha() or text[j - 1] == "."):
        j -= 1
    return text[j:i].lstrip(".")


def _is_boundary(text: str, i: int, j: int, k: int) -> bool:
    """Decide whether the terminator run text[i:j] (closers up to k) ends a sentence."""
    run = text[i:j]
    n = len(text)
    if k >= n:
        return True
    nxt = text[k]
    if nxt.isspace():
        m = k
        while m < n and text[m].isspace():
            m += 1
        if m >= n:
            return True
        follower = text[m]
        if "!" in run or "?" in run:
            return True
        token = _token_before(text, i)
        if len(run) == 1 and token.lower() in ABBREVIATIONS:
            return False
        if follower.islower():
            return False
        return True
    # No whitespace after the run: decimal point, internal dot, or a
    # missing space after a genuine sentence end ("end.Next").
    if run == ".":
        prev = text[i - 1] if i > 0 else ""
        if prev.isdigit() and nxt.isdigit():
            return False
        token = _token_before(text, i)
        if (
            nxt.isupper()
            and len(token) >= 2
            and "." not in token
            and token.lower() not in ABBREVIATIONS
        ):
            return True
        return False
    return nxt.isupper()


def segment_sentences(text: str) -> list[str]:
    """Split text into sentences; empty or all-whitespace text gives []."""
    sentences: list[str] = []
    n = len(text)
    start = 0
    i = 0
    quote_depth = 0
    while i < n:
        ch = text[i]
        if ch == '"':
            quote_depth = 0 if quote_depth else 1
            i += 1
            continue
        if ch == "“":
            quote_depth += 1
            i += 1
            continue
        if ch == "”":
            quote_depth = max(0, quote_depth - 1)
            i += 1
            continue
        if ch == "\n":
            quote_depth = 0  # quotes do not span paragraph breaks
            i += 1
            continue
        if ch in _TERMINALS and quote_depth == 0:
            j = i + 1
            while j < n and text[j] in _TERMINALS:
                j += 1
            k = j
            while k < n and text[k] in _CLOSERS:
                k += 1
            if _is_boundary(text, i, j, k):
                piece = text[start:k].strip()
                if piece:
                    sentences.append(piece)
                start = k
            i = k if k > i else i + 1
        else:
            i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


_SYLLABLE_GROUPS = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group syllable heuristic with a silent-e rule; minimum 1 per word."""
    w = "".join(c for c in word.lower() if c.isalpha())
    if not w:
        return 0
    n = len(_SYLLABLE_GROUPS.findall(w))
    if n > 1 and w.endswith("e") and not w.endswith(("ee", "ye")):
        if w.endswith("le") and len(w) > 2 and w[-3] not in _VOWELS:
            pass  # syllabic -le as in "table", "purple"
        else:
            n -= 1
    return max(1, n)
