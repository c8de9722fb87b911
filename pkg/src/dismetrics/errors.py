"""Exception hierarchy.

Input problems derive from :class:`InputError`, configuration problems from
:class:`ConfigError`; the CLI maps them to exit codes 2 and 3.
"""


class DisMetricsError(Exception):
    pass


class InputError(DisMetricsError, ValueError):
    pass


class ConfigError(DisMetricsError, ValueError):
    pass


class MalformedFile(InputError):
    pass


class InvalidValue(InputError):
    pass


class LabelOutOfRange(InputError):
    pass


class DegenerateGrid(ConfigError):
    pass


class KOutOfRange(ConfigError):
    pass


class TooLarge(ConfigError):
    pass


class SingleLatent(DisMetricsError, ValueError):
    """The metric needs at least two latents."""


class SingleFactor(DisMetricsError, ValueError):
    """Modularity is undefined for a single factor."""


class EmptyFactors(DisMetricsError, ValueError):
    pass


class AllLatentsUninformative(DisMetricsError, ValueError):
    """Informativeness weights cannot be formed: every I(x, z_i) is ~0."""
