from .renorm import renorm_service
from .exact_diag import exact_diagonalizer
from .dynamics import revival_simulator

__all__ = ['renorm_service', 'exact_diagonalizer', 'revival_simulator']
