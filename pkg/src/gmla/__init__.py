"""Phase-space microlocal analysis: STFTs, Weyl and anti-Wick operators,
Shubin symbol calculus and Gabor / Sobolev-Gabor wave front set estimates."""

from gmla.grid import PhaseField, PhaseGrid, SampledSignal, fourier_dual_grid, make_grid
from gmla.parser import ExprError, Symbol, parse_expr, parse_signal, parse_symbol, pretty
from gmla.signals import sample_signal
from gmla.stft import make_window, moyal_residual, parse_window, stft, stft_adjoint

__version__ = "0.1.0"

__all__ = [
    "ExprError",
    "PhaseField",
    "PhaseGrid",
    "SampledSignal",
    "Symbol",
    "fourier_dual_grid",
    "make_grid",
    "make_window",
    "moyal_residual",
    "parse_expr",
    "parse_signal",
    "parse_symbol",
    "parse_window",
    "pretty",
    "sample_signal",
    "stft",
    "stft_adjoint",
]
