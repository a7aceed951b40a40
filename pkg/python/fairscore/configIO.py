# This file is part of fairscore.
#
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This software is dual licensed under the GNU General Public License and also
# under a 3-clause BSD license. Recipients may choose which of these licenses
# to use; please see the files gpl-3.0.txt and/or bsd_license.txt,
# respectively.  If you choose the GPL option then the following text applies
# (but note that there is still no warranty even if you opt for BSD instead):
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""Loading of `lsst.pex.config` configurations from TOML documents."""

from __future__ import annotations

__all__ = ["assign_mapping", "config_from_toml", "parse_override", "override_mapping"]

import tomllib
from collections.abc import Mapping
from pathlib import Path
from typing import Any, TypeVar

import lsst.pex.config as pexConfig

_ConfigT = TypeVar("_ConfigT", bound=pexConfig.Config)

# TOML keys that cannot be Python identifiers.
_ALIASES = {"lambda": "repair_level"}


def _coerce(field: pexConfig.Field, value: Any) -> Any:
    """Convert a TOML value to what the field expects."""
    dtype = getattr(field, "dtype", None)

    def convert(item: Any) -> Any:
        if dtype is float and isinstance(item, int) and not isinstance(item, bool):
            return float(item)
        return item

    if isinstance(field, pexConfig.ListField):
        if not isinstance(value, list):
            value = [value]
        return [convert(item) for item in value]
    if isinstance(field, pexConfig.DictField):
        if not isinstance(value, Mapping):
            raise TypeError(f"expected a table, got {value!r}")
        return {str(key): item for key, item in value.items()}
    return convert(value)


def assign_mapping(config: pexConfig.Config, mapping: Mapping[str, Any], prefix: str = "") -> list[str]:
    """Assign nested values to a configuration, collecting violations.

    Parameters
    ----------
    config : `lsst.pex.config.Config`
        Configuration updated in place.
    mapping : `~collections.abc.Mapping`
        Nested mapping, typically parsed from TOML.
    prefix : `str`, optional
        Dotted key prefix used in violation messages.

    Returns
    -------
    violations : `list` [`str`]
        One message per key that could not be assigned, prefixed with its
        dotted key path.
    """
    violations: list[str] = []
    for key, value in mapping.items():
        path = f"{prefix}{key}"
        name = _ALIASES.get(key, key)
        field = type(config)._fields.get(name)
        if field is None:
            violations.append(f"{path}: unknown key")
            continue
        if isinstance(field, pexConfig.ConfigField):
            if not isinstance(value, Mapping):
                violations.append(f"{path}: expected a table")
                continue
            violations.extend(assign_mapping(getattr(config, name), value, f"{path}."))
        elif isinstance(field, pexConfig.ConfigDictField):
            if not isinstance(value, Mapping):
                violations.append(f"{path}: expected a table")
                continue
            container = getattr(config, name)
            for item_key, item_value in value.items():
                item_path = f"{path}.{item_key}"
                if not isinstance(item_value, Mapping):
                    violations.append(f"{item_path}: expected a table")
                    continue
                if item_key not in container:
                    container[item_key] = field.itemtype()
                violations.extend(assign_mapping(container[item_key], item_value, f"{item_path}."))
        else:
            try:
                setattr(config, name, _coerce(field, value))
            except (pexConfig.FieldValidationError, TypeError, ValueError) as exc:
                violations.append(f"{path}: invalid value {value!r} ({exc})")
    return violations


def config_from_toml(config: _ConfigT, path: str | Path) -> tuple[_ConfigT, list[str]]:
    """Update a configuration from a TOML file.

    Parameters
    ----------
    config : `lsst.pex.config.Config`
        Configuration with defaults applied, updated in place.
    path : `str` or `~pathlib.Path`
        TOML file.

    Returns
    -------
    config : `lsst.pex.config.Config`
        The same configuration instance.
    violations : `list` [`str`]
        Keys that could not be assigned.

    Raises
    ------
    OSError
        Raised if the file cannot be read.
    tomllib.TOMLDecodeError
        Raised if the file is not valid TOML.
    """
    with open(path, "rb") as stream:
        mapping = tomllib.load(stream)
    return config, assign_mapping(config, mapping)


def parse_override(text: str) -> tuple[str, Any]:
    """Split a ``key=value`` override, parsing the value as a TOML literal.

    Values that are not valid TOML (bare words) are kept as strings.

    Parameters
    ----------
    text : `str`
        Override text.

    Returns
    -------
    key : `str`
        Dotted configuration key.
    value : `typing.Any`
        Parsed value.

    Raises
    ------
    ValueError
        Raised if the text has no ``=`` or an empty key.
    """
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValueError(f"Override {text!r} is not of the form key=value")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def override_mapping(key: str, value: Any) -> dict[str, Any]:
    """Turn a dotted key and value into a nested mapping.

    Parameters
    ----------
    key : `str`
        Dotted key, e.g. ``cost.roi``.
    value : `typing.Any`
        Leaf value.

    Returns
    -------
    mapping : `dict`
        Nested mapping suitable for `assign_mapping`.
    """
    mapping: dict[str, Any] = {}
    node = mapping
    *parents, leaf = key.split(".")
    for part in parents:
        node = node.setdefault(part, {})
    node[leaf] = value
    return mapping
