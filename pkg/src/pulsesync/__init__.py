"""Pulse-coupled phase oscillators with transmission delay.

Simulation (smooth pulses by delayed RK4, Dirac pulses event-driven),
linearized synchronization theory, network spectral stability, and the
observables needed to compare the two.
"""

from .analysis import (MechanismSeries, NoDecay, SyncReport, TrajectoryTooShort,
                       WindowSeries, measure_sync_time, mechanism_series,
                       strong_sync_check, windowed_phase_diff)
from .dde import (HistoryPolicy, StepTooLarge, SystemSpec, Trajectory,
                  continue_rk4, history_eval, integrate_euler_forward,
                  integrate_rk4)
from .dirac import EventFlood, EventTrajectory, simulate_dirac
from .lintheory import (InfiniteSyncTime, ModePrediction, NonDecayingMode,
                        PeriodIntegrals, QuadratureError, TheoryParams,
                        mean_phase_at, mean_phase_time, mode_predictions,
                        mode_sync_time, period_integrals, predict_mode,
                        predict_phi, sync_time_two)
from .network import (CouplingMatrix, DefectiveMatrix, RowSumMismatch,
                      SpectralDecomposition, classify_stability,
                      coupling_from_csv, coupling_matrix, make_all_to_all,
                      make_ring_laplacian, spectral_decompose, validate_row_sum)
from .pulse import (ConstantPulse, GaussianCombPulse, PulseFunction,
                    PulseParams, constant, gaussian_comb, sigma, sigma_prime)

__version__ = "0.1.0"
