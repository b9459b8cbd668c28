"""Signaled gender from user names: first-name lexicon plus keyword lists."""
from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from .errors import DataError

_LETTERS = re.compile(r"[^\W\d_]+")

DICT_LABELS = ("male", "female", "mostly_male", "mostly_female", "androgynous")


class GenderSignal(str, enum.Enum):
    MALE = "SignalMale"
    FEMALE = "SignalFemale"
    NONE = "NoSignal"


@dataclass(frozen=True)
class NameLexicon:
    entries: Mapping[str, str]

    def get(self, token: str) -> str | None:
        return self.entries.get(token)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class KeywordLists:
    female: frozenset[str]
    male: frozenset[str]

    def __post_init__(self):
        both = self.female & self.male
        if both:
            raise DataError(f"keyword lists overlap: {sorted(both)}")


def _data_path(name: str):
    return resources.files("gendersignal") / "data" / name


def _read_lines(path) -> list[str]:
    try:
        if isinstance(path, (str, os.PathLike)):
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def load_lexicon(path=None) -> NameLexicon:
    """Read a ``name<TAB>label`` file; the bundled sample lexicon by default."""
    path = _data_path("names.tsv") if path is None else path
    entries = {}
    for ln in _read_lines(path):
        parts = ln.split("\t")
        if len(parts) != 2 or parts[1].strip() not in DICT_LABELS:
            raise DataError(f"bad lexicon line in {path}: {ln!r}")
        entries[parts[0].strip().casefold()] = parts[1].strip()
    return NameLexicon(entries)


def load_keywords(female_path=None, male_path=None) -> KeywordLists:
    female_path = _data_path("keywords_female.txt") if female_path is None else female_path
    male_path = _data_path("keywords_male.txt") if male_path is None else male_path
    return KeywordLists(
        female=frozenset(t.casefold() for t in _read_lines(female_path)),
        male=frozenset(t.casefold() for t in _read_lines(male_path)),
    )


def tokens(user_name: str) -> list[str]:
    return [t.casefold() for t in _LETTERS.findall(user_name)]


def first_token(user_name: str) -> str:
    """First run of letters in the name, case-folded ("  J. Smith" -> "j")."""
    m = _LETTERS.search(user_name)
    return m.group(0).casefold() if m else ""


def lookup_name(lexicon: NameLexicon, token: str) -> str | None:
    if not token:
        return None
    return lexicon.get(token)


def keyword_scan(user_name: str, lists: KeywordLists) -> GenderSignal | None:
    hit = None
    for tok in tokens(user_name):
        if tok in lists.female:
            gender = GenderSignal.FEMALE
        elif tok in lists.male:
            gender = GenderSignal.MALE
        else:
            continue
        if hit is None:
            hit = gender
        elif hit is not gender:
            return None  # conflicting cues
    return hit


def classify_signal(user_name: str, lexicon: NameLexicon, lists: KeywordLists) -> GenderSignal:
    label = lookup_name(lexicon, first_token(user_name))
    if label == "male":
        return GenderSignal.MALE
    if label == "female":
        return GenderSignal.FEMALE
    # "mostly_*", androgynous and unknown names fall through to the keywords
    hit = keyword_scan(user_name, lists)
    return hit if hit is not None else GenderSignal.NONE


def classify_reviewers(names: Mapping[str, str], lexicon: NameLexicon,
                       lists: KeywordLists) -> dict[str, GenderSignal]:
    """Signal per reviewer id, given one representative name per reviewer."""
    return {rid: classify_signal(name, lexicon, lists) for rid, name in names.items()}
