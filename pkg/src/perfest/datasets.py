"""Bundled example data."""

from __future__ import annotations

from importlib import resources

from .frame import DataFrame, read_csv


def load_iris() -> DataFrame:
    """Fisher's iris measurements (150 rows, target ``Species``)."""
    with resources.files("perfest.data").joinpath("iris.csv").open("r", encoding="utf-8") as fh:
        return read_csv(fh, name="iris")
