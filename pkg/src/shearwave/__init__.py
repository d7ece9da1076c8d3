"""Desk-scale steady-state shear-wave elastography: simulation to inversion.

Synthesizes multi-frequency shear-wave fields in virtual tissue phantoms,
acquires them with a virtual swept plane-wave transducer under
synchronized sequences, and reconstructs absolute elasticity volumes via
phasor fitting, curl filtering and local frequency estimation, alongside
a push-track baseline for comparison.
"""

from .acquisition import (AcquisitionRecord, ScattererCloud, SpeckleParams,
                          VolumeSeries, acquire_sweep, form_volumes,
                          synthesize_speckle)
from .arfi import (ARFIScene, TransientField, elasticity_from_sws,
                   estimate_group_sws, estimate_phase_velocity,
                   repeat_measurements, simulate_push_response)
from .config import RunConfig, example_config_text
from .errors import (ConditioningError, DegenerateInputError, GeometryError,
                     PlanningError, StageError, SynchronizationError)
from .forward import (CompressionalField, DisplacementFieldSeries,
                      ExcitationSpec, OscillatingPotential, PlanarSource,
                      PlaneWavePotential, QuadraticPotential,
                      SinusoidalPotential, SteadyStateField,
                      add_compressional_component, default_excitation,
                      simulate_steady_state)
from .geometry import CartesianGrid, FrustumGeometry
from .inversion import (CartesianPhasorSet, CurlSet, ElasticityVolume,
                        ROIStats, curl2d, curl3d, erode_mask,
                        fuse_frequencies, lfe, roi_stats, scan_convert)
from .lfe import FilterBankParams, local_frequency
from .phantom import (Background, ElasticityPhantom, Layer, Material,
                      PhantomSpec, RegionSpec, Sphere, build_phantom,
                      homogeneous_phantom)
from .phasor import PhasorSet, fit_phasors, phasor_spectrum_report
from .pipeline import (acquisition_time_report, replicate_table, run_pipeline)
from .sequence import (SequencePlan, fundamental_period, plan_sequence,
                       spectral_separability, validate_synchronization)
from .tracking import (DisplacementSeries, oracle_displacements,
                       track_displacements)
from .viscoelastic import (complex_modulus, complex_wavenumber, shear_speed,
                           shear_attenuation, young_from_speed)

__version__ = "0.1.0"
