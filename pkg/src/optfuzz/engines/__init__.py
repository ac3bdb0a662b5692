from .base import BugInjection, EngineResult, Executor, QueryTimeout
from .evaluator import EvalError, RowContext, EMPTY_CONTEXT, eval_expression, truth
from .toy import ToyEngine
from .sqlite_adapter import SqliteExecutor

__all__ = [
    "BugInjection",
    "EngineResult",
    "Executor",
    "QueryTimeout",
    "EvalError",
    "RowContext",
    "EMPTY_CONTEXT",
    "eval_expression",
    "truth",
    "ToyEngine",
    "SqliteExecutor",
]
