"""Exception taxonomy shared across the engine."""


class AdeptError(Exception):
    """Base class for all engine errors."""


# --- program model ---------------------------------------------------------


class NoFunctionsFound(AdeptError):
    """Source text contains no top-level function definition marker."""


class EntryUnresolved(AdeptError):
    """Neither the hint nor the naming convention selects a defined function."""


# --- search tree -----------------------------------------------------------


class UnknownParent(AdeptError):
    pass


class UnknownNode(AdeptError):
    pass


class CorruptCheckpoint(AdeptError):
    """Checkpoint version or content hash mismatch."""


# --- prompts ---------------------------------------------------------------


class UnknownTemplate(AdeptError):
    pass


class MissingPlaceholder(AdeptError):
    def __init__(self, name: str):
        super().__init__(f"prompt context is missing placeholder {name!r}")
        self.name = name


class NoCodeFound(AdeptError):
    """Generator response contains neither a fenced block nor a definition."""


class UnparsableRoleList(AdeptError):
    pass


# --- gateway ---------------------------------------------------------------


class BudgetExhausted(AdeptError):
    pass


class ProviderError(AdeptError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class FixtureMissing(AdeptError):
    pass


# --- operators -------------------------------------------------------------


class NoPartner(AdeptError):
    """No other evaluated node exists to cross with."""


# --- problems --------------------------------------------------------------


class MalformedSolution(AdeptError):
    """Solution has the wrong shape or indices out of range."""


class TooLarge(AdeptError):
    """Instance exceeds the exact-oracle size bounds."""


class ConstructionStuck(AdeptError):
    """Greedy construction reached a dead end with customers left over."""


class UnknownProblem(AdeptError):
    pass


# --- evaluation / orchestration --------------------------------------------


class RunnerUnavailable(AdeptError):
    """The guest worker process could not be spawned (infrastructure)."""


class EmptyTree(AdeptError):
    pass


class ConfigError(AdeptError):
    pass
