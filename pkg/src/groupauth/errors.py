"""Exception taxonomy shared by every layer of the package.

All errors raised on purpose derive from GroupAuthError so callers
(parties, the scenario runner, the CLI) can distinguish protocol-level
failures from plain bugs.
"""


class GroupAuthError(Exception):
    """Base class for every deliberate failure in this package."""


class ModulusMismatch(GroupAuthError):
    """Two values from different algebraic structures were combined."""


class InversionOfZero(GroupAuthError):
    """Multiplicative inverse of the zero field element was requested."""


class DegenerateShareSet(GroupAuthError):
    """Interpolation points contain a duplicate evaluation position."""


class SubgroupViolation(GroupAuthError):
    """A value outside the prime-order subgroup was used as a group element."""


class InvalidThreshold(GroupAuthError):
    """Issuer parameters violate 2 <= t <= n."""


class NotAMember(GroupAuthError):
    """A credential was used for a group that does not list its owner."""


class InsufficientQuorum(GroupAuthError):
    """Fewer than t participants were asked to authenticate jointly."""


class MalformedTranscript(GroupAuthError):
    """A message set or serialized record is structurally invalid."""


class ProtocolOrderViolation(GroupAuthError):
    """A state machine step was invoked outside its phase."""


class IncompleteRound(GroupAuthError):
    """A step needs messages from every group member but some are missing."""


class SessionExhausted(GroupAuthError):
    """A credential was asked to reuse a one-time session index."""


class UnknownParty(GroupAuthError):
    """A channel operation referenced an unregistered participant."""


class SimulationDiverged(GroupAuthError):
    """The event loop exceeded its delivery budget without quiescing."""


class InsufficientObservation(GroupAuthError):
    """An attack step ran before the channel revealed enough traffic."""


class AuditFailure(GroupAuthError):
    """A transcript failed independent re-verification."""


class ConfigError(GroupAuthError):
    """A scenario configuration is invalid or inconsistent."""
