"""The five locomotion classes and their fixed order.

The order below is used everywhere a deterministic class order matters:
confusion-matrix rows/columns, vote tie-breaking, and report layout.
``Others`` sits last so that "prefer non-Others, then earliest class"
reduces to "lowest index wins".
"""

from __future__ import annotations

import enum


class ActivityLabel(enum.Enum):
    Stand = "Stand"
    Sit = "Sit"
    Walk = "Walk"
    Lie = "Lie"
    Others = "Others"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


CLASS_ORDER: tuple[ActivityLabel, ...] = (
    ActivityLabel.Stand,
    ActivityLabel.Sit,
    ActivityLabel.Walk,
    ActivityLabel.Lie,
    ActivityLabel.Others,
)

CLASS_NAMES: tuple[str, ...] = tuple(label.value for label in CLASS_ORDER)

N_CLASSES = len(CLASS_ORDER)

_INDEX = {label: i for i, label in enumerate(CLASS_ORDER)}


def class_index(label: ActivityLabel) -> int:
    """Position of a label in the fixed class order."""
    return _INDEX[label]


def label_from_index(index: int) -> ActivityLabel:
    return CLASS_ORDER[index]


def label_from_name(name: str) -> ActivityLabel:
    try:
        return ActivityLabel(name)
    except ValueError:
        raise ValueError(f"unknown activity label {name!r}; expected one of {CLASS_NAMES}") from None
