"""Numerical Finsler geometry: tensors, curve calculus, flows, and a CLI."""

from .curves import (BitensionReport, CurveState, FrenetFrame, bienergy,
                     bitension, bitension_series, covariant_derivative_along,
                     first_variation_check, frenet_frame, residual_2d,
                     tension)
from .errors import (ArtifactError, ConfigError, DegenerateFlag,
                     DegenerateHint, DegenerateTangent, DimensionError,
                     DomainError, InsufficientSamples, IntegrationError,
                     IntervalExhausted, InvalidParams, NotPositiveDefinite,
                     ReconstructionFailure)
from .flows import (IntegratorConfig, MonitorReport, Trajectory,
                    integrate_biharmonic, integrate_geodesic,
                    make_biharmonic_initial, monitor_invariants)
from .geometry import (CurvatureData, JetConfig, MetricSpec, PointGeometry,
                       TangentSample, c_tilde, cartan_tensor, curvature_data,
                       eval_F, f_operator, flag_curvature, full_apparatus,
                       metric_tensor, spray_and_connection)
from .library import (Mink3ProfileParams, NumataClosedFormParams,
                      RandersParams, builtin, mink3_profile,
                      numata_closed_form, numata_identity_audit)

__version__ = "0.1.0"
