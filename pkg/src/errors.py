class JTwoError(Exception):
    """Base for every failure the engine reports on purpose."""


class DataFileError(JTwoError):
    def __init__(self, path, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class FixtureMismatchError(JTwoError):
    def __init__(self, name: str, diff: list[str]):
        self.name = name
        self.diff = diff
        body = "\n".join(diff)
        super().__init__(f"fixture {name!r} does not match the computed model:\n{body}")


class SeamMismatchError(JTwoError):
    def __init__(self, degree: int, sphere: list[str], computed: list[str]):
        self.degree = degree
        super().__init__(
            f"seam mismatch in degree {degree}: sphere table {sphere} vs tmf^ψ {computed}"
        )


class UnresolvedActionError(JTwoError):
    def __init__(self, label: str, action: str):
        self.label = label
        self.action = action
        super().__init__(f"{action} on {label} is not determined by rules or data")


class RegistryConflictError(JTwoError):
    pass


class RegistryCitationError(JTwoError):
    pass


class DegreeRangeError(JTwoError):
    pass


class PeriodicityLiftError(JTwoError):
    def __init__(self, step: str, group: str):
        self.step = step
        self.group = group
        super().__init__(f"periodicity lift step failed: {step} (group: {group})")


class UsageError(JTwoError, ValueError):
    """A command-line target, ideal or format the engine cannot act on."""
