"""Run id context variable for logging"""

import contextvars

# Identifies the election run currently being simulated
run_id_context: contextvars.ContextVar[str | None] = contextvars.ContextVar(
    "run_id", default=None
)
