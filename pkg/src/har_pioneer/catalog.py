"""Sensor-location catalog: body positions, dataset columns, label codes.

The catalog is a versioned YAML data file mapping each body-worn location to
its 1-based column triads in the dataset files, a set of lowercase natural
language aliases (used to resolve LLM suggestions), and the locomotion label
code table. Nothing about the dataset layout is hard-coded in logic; a
different deployment can ship its own catalog file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from har_pioneer.errors import AmbiguousNameError, ConfigurationError, UnresolvedNameError
from har_pioneer.labels import ActivityLabel
from har_pioneer.naming import overlap_score, tokenize
from har_pioneer.resources import default_catalog_path

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class SensorLocation:
    """One body-worn sensor position.

    ``channels`` maps a modality group name to its (x, y, z) column triad.
    Groups whose name contains ``acc`` are accelerometer triads; orientation
    features apply only to those.
    """

    id: str
    description: str
    aliases: tuple[str, ...]
    channels: dict[str, tuple[int, ...]] = field(hash=False)

    @property
    def modalities(self) -> tuple[str, ...]:
        return tuple(self.channels)

    @property
    def all_columns(self) -> tuple[int, ...]:
        return tuple(c for cols in self.channels.values() for c in cols)

    def is_accelerometer_group(self, modality: str) -> bool:
        return "acc" in modality


class SensorCatalog:
    """Loaded catalog plus name resolution and the label code table."""

    def __init__(
        self,
        locations: list[SensorLocation],
        locomotion_codes: dict[int, ActivityLabel],
        sample_rate_hz: float,
        time_column: int,
        label_column: int,
        version: int = 1,
        dataset: str = "unknown",
        source: Path | None = None,
    ):
        self.locations = list(locations)
        self.locomotion_codes = dict(locomotion_codes)
        self.sample_rate_hz = float(sample_rate_hz)
        self.time_column = int(time_column)
        self.label_column = int(label_column)
        self.version = version
        self.dataset = dataset
        self.source = source
        self._by_id = {loc.id.lower(): loc for loc in self.locations}
        self._validate()

    def _validate(self) -> None:
        if len(self._by_id) != len(self.locations):
            raise ConfigurationError("catalog location ids are not unique")
        seen: dict[int, str] = {}
        for loc in self.locations:
            if not loc.channels:
                raise ConfigurationError(f"location {loc.id} has no channel columns")
            for col in loc.all_columns:
                if col in seen:
                    raise ConfigurationError(
                        f"column {col} assigned to both {seen[col]} and {loc.id}"
                    )
                seen[col] = loc.id
            for alias in loc.aliases:
                if alias != alias.lower():
                    raise ConfigurationError(
                        f"alias {alias!r} of {loc.id} must be lowercase"
                    )
        if self.sample_rate_hz <= 0:
            raise ConfigurationError("sample_rate_hz must be positive")

    @property
    def location_ids(self) -> list[str]:
        return [loc.id for loc in self.locations]

    def get(self, location_id: str) -> SensorLocation:
        loc = self._by_id.get(location_id.lower())
        if loc is None:
            raise ConfigurationError(
                f"unknown sensor location id {location_id!r}; "
                f"catalog has {', '.join(self.location_ids)}"
            )
        return loc

    def __contains__(self, location_id: str) -> bool:
        return location_id.lower() in self._by_id

    def __len__(self) -> int:
        return len(self.locations)

    def map_locomotion_label(self, raw_code: int) -> ActivityLabel:
        """Map a raw locomotion code to a class; unknown codes become Others."""
        return self.locomotion_codes.get(int(raw_code), ActivityLabel.Others)

    def resolve(self, name_or_alias: str) -> SensorLocation:
        """Resolve a free-form name to a unique location.

        Matching order: case-insensitive id, exact alias, an id appearing as
        a word token of the query (covers "Right wrist (RWR)"), then the
        longest token-level overlap between the query and any alias. A tie
        between distinct locations raises AmbiguousNameError; no match raises
        UnresolvedNameError.
        """
        if not self.locations:
            raise ConfigurationError("catalog is empty")
        query = name_or_alias.strip().lower()
        if not query:
            raise UnresolvedNameError(name_or_alias)
        loc = self._by_id.get(query)
        if loc is not None:
            return loc

        tokens = tokenize(name_or_alias)
        norm_query = " ".join(tokens)
        exact = [loc for loc in self.locations if norm_query in loc.aliases]
        if len(exact) == 1:
            return exact[0]
        if len(exact) > 1:
            raise AmbiguousNameError(name_or_alias, [loc.id for loc in exact])

        id_hits = sorted({t for t in tokens if t in self._by_id})
        if len(id_hits) == 1:
            return self._by_id[id_hits[0]]
        if len(id_hits) > 1:
            raise AmbiguousNameError(
                name_or_alias, [self._by_id[t].id for t in id_hits]
            )

        # Token-overlap stage: an alias whose words appear contiguously in
        # the query scores the alias length; a query contained in an alias
        # scores the query length. Word-level matching keeps short aliases
        # from firing inside unrelated words.
        best_score = 0
        best: list[SensorLocation] = []
        for loc in self.locations:
            loc_score = 0
            for alias in loc.aliases:
                loc_score = max(loc_score, overlap_score(tokens, tokenize(alias)))
            if loc_score > best_score:
                best_score, best = loc_score, [loc]
            elif loc_score == best_score and loc_score > 0:
                best.append(loc)
        if not best:
            raise UnresolvedNameError(name_or_alias)
        if len(best) > 1:
            raise AmbiguousNameError(name_or_alias, [loc.id for loc in best])
        return best[0]


def resolve_sensor_location(name_or_alias: str, catalog: SensorCatalog) -> SensorLocation:
    return catalog.resolve(name_or_alias)


def load_catalog(path: str | Path | None = None) -> SensorCatalog:
    """Load a catalog YAML file (the shipped Opportunity catalog by default)."""
    path = Path(path) if path is not None else default_catalog_path()
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"catalog file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"catalog file {path} is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"catalog file {path} must be a mapping")

    try:
        locations = [
            SensorLocation(
                id=str(entry["id"]),
                description=str(entry.get("description", entry["id"])),
                aliases=tuple(str(a) for a in entry.get("aliases", ())),
                channels={
                    str(mod): tuple(int(c) for c in cols)
                    for mod, cols in entry["channels"].items()
                },
            )
            for entry in raw["locations"]
        ]
        codes = {
            int(code): ActivityLabel(name)
            for code, name in raw.get("locomotion_codes", {}).items()
        }
        return SensorCatalog(
            locations=locations,
            locomotion_codes=codes,
            sample_rate_hz=raw.get("sample_rate_hz", 30),
            time_column=raw.get("time_column", 1),
            label_column=raw["label_columns"]["locomotion"],
            version=int(raw.get("version", 1)),
            dataset=str(raw.get("dataset", "unknown")),
            source=path,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"catalog file {path} is malformed: {exc}") from None


def catalog_to_dict(catalog: SensorCatalog) -> dict:
    """Serializable form of a catalog, inverse of load_catalog."""
    return {
        "version": catalog.version,
        "dataset": catalog.dataset,
        "sample_rate_hz": catalog.sample_rate_hz,
        "time_column": catalog.time_column,
        "label_columns": {"locomotion": catalog.label_column},
        "locomotion_codes": {
            code: label.value for code, label in catalog.locomotion_codes.items()
        },
        "locations": [
            {
                "id": loc.id,
                "description": loc.description,
                "aliases": list(loc.aliases),
                "channels": {mod: list(cols) for mod, cols in loc.channels.items()},
            }
            for loc in catalog.locations
        ],
    }
