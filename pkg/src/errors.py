"""
PDNspot error hierarchy
Every model failure carries a stable code so the CLI can report it as a diagnostic
"""

from typing import Any, Dict, List, Optional


class PdnError(Exception):
    """Base class for all model errors"""

    code = "PdnError"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_diagnostic(self, file: Optional[str] = None, line: Optional[int] = None):
        from schemas import Diagnostic
        return Diagnostic(file=file, line=line, code=self.code, message=self.message)

    def to_diagnostics(self) -> list:
        return [self.to_diagnostic()]


class ZeroPower(PdnError):
    code = "ZeroPower"


class NegativeGuardband(PdnError):
    code = "NegativeGuardband"


class ZeroAr(PdnError):
    code = "ZeroAr"


class DropoutViolation(PdnError):
    code = "DropoutViolation"


class NoMatchingPowerState(PdnError):
    code = "NoMatchingPowerState"


class EmptyCurve(PdnError):
    code = "EmptyCurve"


class ResidencyMismatch(PdnError):
    code = "ResidencyMismatch"


class BudgetUnderflow(PdnError):
    code = "BudgetUnderflow"


class UnknownTdp(PdnError):
    code = "UnknownTdp"


class CurrentExceedsTable(PdnError):
    code = "CurrentExceedsTable"


class EmptyTrace(PdnError):
    code = "EmptyTrace"


class InputFormatError(PdnError):
    """A data file row or field failed schema validation"""

    code = "InputFormatError"

    def __init__(self, message: str, file: Optional[str] = None, line: Optional[int] = None,
                 code: Optional[str] = None):
        super().__init__(message, {"file": file, "line": line})
        self.file = file
        self.line = line
        if code:
            self.code = code

    def to_diagnostic(self, file: Optional[str] = None, line: Optional[int] = None):
        return super().to_diagnostic(file or self.file, line if line is not None else self.line)


class TopologyError(PdnError):
    """Raised with the complete list of topology violations"""

    code = "TopologyError"

    def __init__(self, topology: str, violations: List["object"], file: Optional[str] = None):
        summary = "; ".join(str(v) for v in violations)
        super().__init__(f"topology {topology} is invalid: {summary}",
                         {"violations": [str(v) for v in violations]})
        self.topology = topology
        self.violations = list(violations)
        self.file = file

    def to_diagnostics(self) -> list:
        from schemas import Diagnostic
        return [Diagnostic(file=self.file, code=getattr(v, "code", self.code),
                           message=f"{self.topology}: {getattr(v, 'message', v)}")
                for v in self.violations]
