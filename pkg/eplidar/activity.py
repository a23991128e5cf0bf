"""Pedestrian activity classes and their Normal/Abnormal grouping."""

from enum import Enum
from typing import Dict


class BinaryLabel(str, Enum):
    NORMAL = "Normal"
    ABNORMAL = "Abnormal"

    @property
    def index(self) -> int:
        return 0 if self is BinaryLabel.NORMAL else 1

    @classmethod
    def from_index(cls, index: int) -> "BinaryLabel":
        if index not in (0, 1):
            raise ValueError(f"Binary label index must be 0 or 1, got {index}")
        return cls.NORMAL if index == 0 else cls.ABNORMAL


class ActivityClass(str, Enum):
    WALKING = "Walking"
    RUNNING = "Running"
    TALKING_ON_PHONE = "TalkingOnPhone"
    DIZZY_WALKING = "DizzyWalking"
    FALLING = "Falling"
    INJURED_LEG_WALKING = "InjuredLegWalking"

    @property
    def binary(self) -> BinaryLabel:
        return ACTIVITY_TO_BINARY[self]

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @classmethod
    def from_name(cls, name: str) -> "ActivityClass":
        """Accept enum values, member names and the display names of the activity table."""
        key = _norm(name)
        for member in cls:
            if key in (_norm(member.value), _norm(member.name), _norm(member.display_name)):
                return member
        raise ValueError(f"Unknown activity '{name}'. Expected one of {[m.value for m in cls]}")


ACTIVITY_TO_BINARY: Dict[ActivityClass, BinaryLabel] = {
    ActivityClass.WALKING: BinaryLabel.NORMAL,
    ActivityClass.RUNNING: BinaryLabel.NORMAL,
    ActivityClass.TALKING_ON_PHONE: BinaryLabel.NORMAL,
    ActivityClass.DIZZY_WALKING: BinaryLabel.ABNORMAL,
    ActivityClass.FALLING: BinaryLabel.ABNORMAL,
    ActivityClass.INJURED_LEG_WALKING: BinaryLabel.ABNORMAL,
}

_DISPLAY_NAMES: Dict[ActivityClass, str] = {
    ActivityClass.WALKING: "Walking",
    ActivityClass.RUNNING: "Running",
    ActivityClass.TALKING_ON_PHONE: "Talking on the phone",
    ActivityClass.DIZZY_WALKING: "Dizzy walking",
    ActivityClass.FALLING: "Falling",
    ActivityClass.INJURED_LEG_WALKING: "Walking with injured leg",
}


def _norm(s: str) -> str:
    return "".join(ch for ch in str(s).lower() if ch.isalnum())
