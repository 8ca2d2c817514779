"""Exception types raised by wdnsense."""


class WdnError(ValueError):
    """Base class for all toolkit errors."""


# network parsing and ingestion
class MalformedSection(WdnError):
    pass


class DanglingEndpoint(WdnError):
    pass


class DuplicateId(WdnError):
    pass


class SchemaViolation(WdnError):
    """Native-format record that does not match the schema.

    ``path`` locates the offending field, e.g. ``"line 4: link P1: len"``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class MissingLink(WdnError):
    pass


class UnknownLink(WdnError):
    pass


class NonmonotoneTime(WdnError):
    pass


class UnknownNode(WdnError, KeyError):
    def __str__(self) -> str:
        return ValueError.__str__(self)


# metrics
class DegenerateGraph(WdnError):
    pass


class IsolatedNode(WdnError):
    pass


class NotAPipe(WdnError):
    pass


# scenarios
class NonDivisibleHorizon(WdnError):
    pass


class NoSnapshotBefore(WdnError):
    pass


# optimizer
class DimensionMismatch(WdnError):
    pass


class InfeasibleCardinality(WdnError):
    pass


class DisconnectedPlacement(WdnError):
    """Sensors span several components.

    ``per_component`` maps a component index to the mean pairwise hop
    distance among the sensors in that component.
    """

    def __init__(self, message: str, per_component: dict[int, float]):
        super().__init__(message)
        self.per_component = per_component
