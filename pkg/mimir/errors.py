"""Errors raised by the pipeline stages.

Each family carries the process exit code the CLI reports for it.
"""

EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_GRAPH = 3
EXIT_RULES = 4


class MimirError(Exception):
    exit_code = EXIT_GRAPH


class InvalidConfig(MimirError):
    exit_code = EXIT_USAGE


# ingest


class IngestError(MimirError):
    exit_code = EXIT_PARSE


class MalformedRecord(IngestError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MissingRequiredField(MalformedRecord):
    def __init__(self, line: int, field: str):
        super().__init__(line, f"missing required field '{field}'")
        self.field = field


class MixedSessions(IngestError):
    def __init__(self, session_ids):
        self.session_ids = tuple(session_ids)
        super().__init__(f"stream holds {len(self.session_ids)} sessions: {', '.join(self.session_ids)}")


class ConflictingEventId(IngestError):
    def __init__(self, event_id: str):
        super().__init__(f"event id '{event_id}' appears with differing fields")
        self.event_id = event_id


# rules


class RulesError(MimirError):
    exit_code = EXIT_RULES


class RuleParseError(RulesError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownMoveKind(RulesError):
    def __init__(self, name: str, line: int = 0):
        super().__init__(f"line {line}: unknown move kind '{name}'")
        self.name = name
        self.line = line


# graph


class GraphError(MimirError):
    exit_code = EXIT_GRAPH


class CycleDetected(GraphError):
    def __init__(self, path):
        self.path = tuple(path)
        super().__init__("connected_from cycle: " + " -> ".join(self.path))


class DanglingParent(GraphError):
    def __init__(self, parent_id: str, child_id: str):
        super().__init__(f"node '{child_id}' names parent '{parent_id}' which was never created")
        self.parent_id = parent_id
        self.child_id = child_id


class DuplicateNode(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"node '{node_id}' created twice")
        self.node_id = node_id


class ModifyUnknownNode(GraphError):
    """A MODIFY or REMOVE move targets a node that was never created."""

    def __init__(self, node_id: str):
        super().__init__(f"move targets unknown node '{node_id}'")
        self.node_id = node_id


class ModifyAfterRemove(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"node '{node_id}' modified after it was removed")
        self.node_id = node_id


class NodeAlreadyRemoved(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"node '{node_id}' removed twice")
        self.node_id = node_id


# analysis


class ValidationError(MimirError):
    exit_code = EXIT_GRAPH


class InvalidN(ValidationError):
    def __init__(self, n):
        super().__init__(f"n-gram order must be >= 1, got {n}")
        self.n = n


class UnknownState(ValidationError):
    def __init__(self, state: str):
        super().__init__(f"'{state}' is not a state of the transition model")
        self.state = state


class EmptyWindow(ValidationError):
    def __init__(self):
        super().__init__("phase window is empty")


class InvalidParams(ValidationError):
    pass


class SessionMismatch(ValidationError):
    def __init__(self, expected: str, actual: str):
        super().__init__(f"inputs come from different sessions: '{expected}' and '{actual}'")
        self.expected = expected
        self.actual = actual


class InvalidSpec(ValidationError):
    pass
