"""Reviewer groups and the four paired-treatment comparisons."""
from __future__ import annotations

import enum


class ReviewerGroup(str, enum.Enum):
    SIGNALING_MAN = "SM"
    SIGNALING_WOMAN = "SW"
    PERFORMING_MAN = "PM"
    PERFORMING_WOMAN = "PW"
    UNCLASSIFIED = "UN"


GROUP_TAGS = ("SM", "SW", "PM", "PW")

# first group is side 1 (h1), second is side 2 (h2)
PAIR_GROUPS = ("PW-PM", "SW-SM", "PW-SW", "PM-SM")


def pair_members(pair_group: str) -> tuple[str, str]:
    a, b = pair_group.split("-")
    return a, b
