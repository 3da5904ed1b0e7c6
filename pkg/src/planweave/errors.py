"""Exception types shared across the package."""

from __future__ import annotations


class PlanweaveError(Exception):
    """Base class for all domain errors raised by this package."""


# --- plan model ---------------------------------------------------------


class MalformedPlan(PlanweaveError):
    """Plan text could not be decoded at all."""


class SchemaViolation(PlanweaveError):
    """Plan decoded but does not match the wire schema."""


class CycleError(PlanweaveError):
    """Operation requires an acyclic graph but the edge relation has a cycle."""

    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__(f"cycle through nodes {cycle}")


class UnknownNode(PlanweaveError):
    def __init__(self, node_id: int):
        self.node_id = node_id
        super().__init__(f"no node with id {node_id}")


class UnknownEdge(PlanweaveError):
    def __init__(self, quad: tuple[int, int, str, str]):
        self.quad = quad
        super().__init__(f"no edge {quad[0]}.{quad[2]} -> {quad[1]}.{quad[3]}")


class UnknownPort(PlanweaveError):
    def __init__(self, node_id: int, port: str):
        self.node_id = node_id
        self.port = port
        super().__init__(f"node {node_id} has no port {port!r}")


class UnknownOutput(UnknownPort):
    pass


# --- plan editing -------------------------------------------------------


class WouldCreateCycle(PlanweaveError):
    def __init__(self, src: int, dest: int):
        self.src = src
        self.dest = dest
        super().__init__(f"edge {src} -> {dest} would create a cycle")


class DuplicateEdge(PlanweaveError):
    def __init__(self, quad: tuple[int, int, str, str]):
        self.quad = quad
        super().__init__(f"edge {quad} already present")


class DuplicateNode(PlanweaveError):
    def __init__(self, node_id: int):
        self.node_id = node_id
        super().__init__(f"node id {node_id} already present")


class DuplicatePort(PlanweaveError):
    def __init__(self, node_id: int, port: str):
        self.node_id = node_id
        self.port = port
        super().__init__(f"node {node_id} already has a port {port!r}")


# --- agent registry / execution -----------------------------------------


class MalformedRegistry(PlanweaveError):
    """Registry source could not be decoded or fails the registry schema."""


class DuplicateAgent(PlanweaveError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"agent {name!r} declared more than once")


class UnknownAgent(PlanweaveError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"agent {name!r} not in registry")


class MissingInput(PlanweaveError):
    def __init__(self, agent: str, missing: list[str]):
        self.agent = agent
        self.missing = missing
        super().__init__(f"agent {agent!r} invoked without inputs {missing}")


class UnknownBuiltin(PlanweaveError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no builtin implementation for agent {name!r}")


class UpstreamFailure(PlanweaveError):
    """Transport-level failure talking to an LLM or HTTP agent."""


class OutputMismatch(PlanweaveError):
    def __init__(self, agent: str, expected: list[str], got: list[str]):
        self.agent = agent
        self.expected = expected
        self.got = got
        super().__init__(
            f"agent {agent!r} returned outputs {got}, declared {expected}"
        )


class NonNumericOperand(PlanweaveError):
    def __init__(self, agent: str, value: object):
        self.agent = agent
        self.value = value
        super().__init__(f"agent {agent!r} requires numeric operands, got {value!r}")


class DivisionByZero(PlanweaveError):
    pass


# --- executor -----------------------------------------------------------


class UnboundInput(PlanweaveError):
    def __init__(self, node_id: int, missing: list[str]):
        self.node_id = node_id
        self.missing = missing
        super().__init__(f"node {node_id} has unbound inputs {missing}")


class NodeFailure(PlanweaveError):
    def __init__(self, node_id: int, cause: Exception):
        self.node_id = node_id
        self.cause = cause
        super().__init__(f"node {node_id} failed: {cause}")


# --- planner ------------------------------------------------------------


class PlannerOutputInvalid(PlanweaveError):
    def __init__(self, reason: str, problems: list[str] | None = None):
        self.problems = problems or []
        super().__init__(reason)


class TransportError(PlanweaveError):
    """Live language-model endpoint unreachable or returned a bad status."""


class UnknownFixture(PlanweaveError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no scripted fixture for prompt hash {key}")


# --- eval harness -------------------------------------------------------


class InapplicableKind(PlanweaveError):
    def __init__(self, kind: str, reason: str):
        self.kind = kind
        self.reason = reason
        super().__init__(f"cannot apply corruption {kind!r}: {reason}")


# --- service ------------------------------------------------------------


class StorageError(PlanweaveError):
    pass


class UnknownSession(PlanweaveError):
    def __init__(self, session_id: str):
        self.session_id = session_id
        super().__init__(f"no session {session_id!r}")


class NoActivePlan(PlanweaveError):
    def __init__(self, what: str):
        super().__init__(f"{what} needs a current plan")
