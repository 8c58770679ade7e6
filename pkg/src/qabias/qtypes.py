"""Question-type classification from the leading interrogative token."""

import re

QUESTION_TYPES = ("what", "who", "where", "why", "how", "other")

_PREFIXES = frozenset(QUESTION_TYPES[:-1])

# First run of letters, optionally continued after an apostrophe ("What's").
_FIRST_WORD = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)*", re.UNICODE)


def classify_question_type(question: str) -> str:
    """Map a question to one of what/who/where/why/how/other.

    Case-insensitive match on the first alphabetic token; leading
    whitespace, punctuation, and digits are skipped. A contraction such
    as "What's" matches by the part before the apostrophe. Total: any
    question (including empty) maps to exactly one type.
    """
    m = _FIRST_WORD.search(question)
    if m is None:
        return "other"
    head = m.group(0).split("'", 1)[0].lower()
    return head if head in _PREFIXES else "other"
