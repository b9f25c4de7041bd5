# pylint: disable=invalid-name
"""Settings parsing and validation.

``parse_config`` turns the flat ``dotted.key = value`` pairs of the
``[liras]`` section of an INI file, with command-line flags layered on top,
into a typed namespace. The shape of the namespace is given by a nested
dictionary of parsers::

    [liras]
    planner.node_budget = 50000
    planner.heuristic = manhattan
    synthesis.attempts = 4

might be parsed like::

    >>> settings = config.parse_config(raw_config, {
    ...     "planner": {
    ...         "node_budget": config.Optional(config.Positive(config.Integer), default=10 ** 6),
    ...         "heuristic": config.Optional(config.OneOf(none="none", manhattan="manhattan")),
    ...     },
    ...     "synthesis": {
    ...         "attempts": config.Optional(config.Positive(config.Integer), default=8),
    ...     },
    ... })
    >>> settings.planner.heuristic
    'manhattan'

Keys the layout does not mention are refused, so a misspelt setting fails
loudly instead of silently falling back to its default.

"""
import os

from typing import Any
from typing import Callable
from typing import Dict
from typing import Optional as OptionalType
from typing import Set
from typing import TypeVar
from typing import Union


class ConfigurationError(Exception):
    """Raised when a setting is missing, malformed or unknown."""

    def __init__(self, key: str, error: Union[str, Exception]):
        super().__init__(f"{key}: {error}")
        self.key = key
        self.error = error


T = TypeVar("T")
N = TypeVar("N", int, float)


def String(text: str) -> str:  # noqa: D401
    """A raw, non-empty string."""
    if not text:
        raise ValueError("no value specified")
    return text


def Float(text: str) -> float:  # noqa: D401
    """A finite floating-point number."""
    value = float(text)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def Integer(text: str) -> int:  # noqa: D401
    """A whole number; ``1.5`` is refused rather than truncated."""
    return int(text, base=10)


def Positive(item_parser: Callable[[str], N]) -> Callable[[str], N]:  # noqa: D401
    """A number strictly greater than zero.

    Caps, budgets, resample counts and temperatures are all meaningless at
    zero or below.

    """

    def positive(text: str) -> N:
        value = item_parser(text)
        if not value > 0:
            raise ValueError(f"expected a positive value, got {value!r}")
        return value

    return positive


def OneOf(**options: T) -> Callable[[str], T]:  # noqa: D401
    """One of several named choices, mapped to their values."""

    def one_of(text: str) -> T:
        try:
            return options[text]
        except KeyError:
            raise ValueError(f"expected one of {sorted(options)!r}, got {text!r}")

    return one_of


def Optional(
    item_parser: Callable[[str], T], default: OptionalType[T] = None
) -> Callable[[str], OptionalType[T]]:  # noqa: D401
    """An option of type T, or ``default`` if not configured."""

    def optional(text: str) -> OptionalType[T]:
        if text:
            return item_parser(text)
        return default

    return optional


def DefaultFromEnv(
    item_parser: Callable[[str], T], variable: str, fallback: OptionalType[T] = None
) -> Callable[[str], T]:  # noqa: D401
    """An option of type T that falls back to the environment variable ``variable``.

    The environment is read at parse time, so credentials exported after
    import are still seen. Parsing fails if no value turns up anywhere.

    """

    def default_from_env(text: str) -> T:
        value = Optional(item_parser)(text)
        if value is None:
            value = Optional(item_parser, fallback)(os.getenv(variable) or "")
        if value is None:
            raise ValueError(f"no value provided and ${variable} is not set")
        return value

    return default_from_env


class ConfigNamespace(dict):
    """A dictionary whose keys are also attributes."""

    def __init__(self) -> None:
        super().__init__()
        self.__dict__ = self

    def __getattr__(self, name: str) -> Any:
        ...


ConfigLayout = Dict[str, Any]
RawConfig = Dict[str, str]


def _parse_section(
    layout: ConfigLayout, prefix: str, raw: RawConfig, known: Set[str]
) -> ConfigNamespace:
    parsed = ConfigNamespace()
    for name, item in layout.items():
        assert "." not in name, f"dots are not allowed in setting names: {name!r}"
        key = f"{prefix}.{name}" if prefix else name
        if isinstance(item, dict):
            parsed[name] = _parse_section(item, key, raw, known)
        elif callable(item):
            known.add(key)
            try:
                parsed[name] = item(raw.get(key, ""))
            except Exception as exc:
                raise ConfigurationError(key, exc)
        else:
            raise AssertionError(f"invalid layout entry for {key}: {item!r}")
    return parsed


def parse_config(raw: RawConfig, layout: ConfigLayout) -> ConfigNamespace:
    """Parse raw settings against ``layout`` and return a typed namespace.

    :param raw: The flat ``dotted.key -> text`` mapping.
    :param layout: Nested dictionaries whose leaves are parsers.
    :raises: :py:exc:`ConfigurationError` if a value fails to parse or a key in
        ``raw`` is not part of the layout.

    """
    known: Set[str] = set()
    parsed = _parse_section(layout, "", raw, known)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(unknown[0], "unknown setting")
    return parsed
