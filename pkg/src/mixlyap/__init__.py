"""mixlyap: Lyapunov exponents, stationary phase densities and quantum
dynamics for 1D lattice Schrodinger operators with mixing correlated
potentials.

Subpackages
-----------
potential     stationary centered processes (IID, Markov, moving average,
              intermittent map, cocycle) with declared mixing profiles
spectral      spectral density D_V(k): periodogram and exact oracles
transfer      transfer matrices, frames, Monte Carlo Lyapunov exponents
phase         projective phase dynamics, anomaly families, Birkhoff sums
fokkerplanck  drift-diffusion coefficients, stationary densities, predictors
dynamics      Jacobi operators, position moments, log-growth verdict
cli           configuration-driven experiment runner (`mixlyap` command)

The hot kernels run compiled (Cython) when the extension is built and fall
back to numpy otherwise; see mixlyap.kernels.backend_name().
"""

from .kernels import USING_COMPILED, backend_name

__version__ = "0.1.0"
__all__ = ["USING_COMPILED", "backend_name", "__version__"]
