"""Pick the compiled kernel when it is importable; ``IBVPCHECK_PURE_PYTHON=1``
forces the numpy fallback."""
import os

from . import _godunov as python_kernels

compiled_kernels = None
if not os.environ.get("IBVPCHECK_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_kernels
    except ImportError:  # pragma: no cover - depends on the build
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"
