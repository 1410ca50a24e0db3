"""Exception types shared across the package."""


class AlignmentError(ValueError):
    """A cube is not resolvable on the cell lattice or misses the box."""


class CoverageError(ValueError):
    """A cube is too large to be covered by the shifted dyadic family."""


class ResolutionError(ValueError):
    """A requested scale is finer than the grid can represent."""


class NonConvergenceError(RuntimeError):
    """A root bracket could not be established."""


class SparseConstructionError(RuntimeError):
    """The stopping-constant search in the sparse construction gave up."""


class BudgetError(RuntimeError):
    """A computation would exceed the configured cost budget."""
