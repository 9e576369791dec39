"""The seven tracked object categories and their wire names."""

from __future__ import annotations

import enum


class Category(enum.Enum):
    CAR = "car"
    PED = "pedestrian"
    BIC = "bicycle"
    MOTO = "motorcycle"
    BUS = "bus"
    TRA = "trailer"
    TRU = "truck"

    def __repr__(self) -> str:
        return f"Category.{self.name}"


CATEGORIES: tuple[Category, ...] = tuple(Category)

_BY_NAME = {c.value: c for c in Category}


def category_from_name(name: str) -> Category:
    """Resolve a wire-format category string, e.g. "car" -> Category.CAR.

    Raises ValueError for names outside the seven-class set.
    """
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown category: {name!r}") from None
