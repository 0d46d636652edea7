"""darkspec: magnetically driven spin-pair spectroscopy simulator.

Forward pipeline: a five-level electron-hole pair (bright singlet, dark
triplet) is driven by a THz magnetic pulse while three impulsive optical
interactions generate linear, transient-absorption, and 2D electronic
spectra. Inverse pipeline: peak positions and population-time coherence
oscillations of the simulated 2D movie are inverted for the bare
Hamiltonian.
"""

__version__ = "0.1.0"

from .config import (ConfigError, DephasingConfig, Diagnostic, DipoleOperator,
                     DynamicsGrid, EnergyLevels, HyperfineConfig, LandeFactors,
                     PulseConfig, RunConfig, SystemConfig, TimeGrids,
                     build_run_config, parse_config_text, run_config_from_text,
                     validate_config, validate_pulse)
from .constants import (HBAR_MEV_FS, HC_EV_NM, MU_B_MEV_PER_T, StateIndex,
                        UNITS, UnitConstants, energy_to_wavelength,
                        thz_to_rad_per_fs, wavelength_to_energy)
from .integrate import IntegrationError
from .pulse import (EffectiveFields, HyperfineSample, draw_hyperfine_ensemble,
                    effective_fields, field_components, phase_grid)
from .spindyn import (SpinAmplitudes, Trajectory, ensemble_average_populations,
                      propagate_amplitudes, strong_drive_reference)
from .liouville import (LindbladGenerator, TimeDependentHamiltonian,
                        hamiltonian_at, lindblad_apply, propagate_density)
from .response import (PathwayKind, ResponseGrid, ResponseSet,
                       averaged_response, first_order_coherence,
                       pathway_response, response_movie)
from .spectra import (AbsorptionSpectrum, SpectrumMap, absorption,
                      render_heatmap, spectrum_map, transient_absorption,
                      twod_transform)
from .analysis import (MultiExpFit, Peak2D, ReconstructionModel, T2Trace,
                       detrend_multiexp, extract_trace, find_peaks,
                       oscillation_frequencies, reconstruct_hamiltonian,
                       reconstruction_matrix)
from .pipeline import (ReconstructionReport, reconstruct_from_maps,
                       simulate_and_reconstruct, simulate_movie_maps)
from .presets import PRESETS, load_preset
