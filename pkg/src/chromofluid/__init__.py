"""Structure-verifying simulator for ideal gauge-charged fluids on periodic grids.

Submodules:

* :mod:`chromofluid.lie` -- u(1), su(2), su(3) algebras, brackets, exponentials
* :mod:`chromofluid.forms` -- spectral exterior calculus for Lie-algebra-valued forms
* :mod:`chromofluid.wong` -- charged test particles in a static gauge background
* :mod:`chromofluid.gauge_dynamics` -- temporal-gauge Yang-Mills fields, Gauss law
* :mod:`chromofluid.fluid_dynamics` -- Euler, Euler-Maxwell, Euler-Yang-Mills systems
* :mod:`chromofluid.diagnostics` -- energies, Casimir, Kelvin-Noether circulation
* :mod:`chromofluid.cli` -- scenario runner and invariant check suite
"""

from chromofluid.lie import LieAlgebra, make_algebra
from chromofluid.forms import GForm, Grid

__all__ = ["GForm", "Grid", "LieAlgebra", "make_algebra"]
__version__ = "0.1.0"
