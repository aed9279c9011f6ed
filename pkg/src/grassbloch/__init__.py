"""Grassmannian constellations on G(2,1) through the Bloch sphere.

Constructions (packing-based and structured), matching low-complexity
detectors, and a reproducible Monte Carlo link simulator for T = 2 resources
and one transmit antenna.
"""

__version__ = "0.1.0"

from .geometry import (
    BlochPoint,
    Codeword,
    Constellation,
    SphericalAngles,
    angles_to_codeword,
    chordal_distance,
    codeword_to_bloch,
    euclidean_distance,
    fejes_toth_bound,
    min_chordal_distance,
    normalize_received,
)
from .packing import PackingConfig, PackingSet, exact_packing, load_packing, optimize_packing
from .zopt import (
    CandidateDistances,
    ZOptConfig,
    ZOptConstellation,
    ZOptStructure,
    build_z_opt,
    candidate_distances,
    optimize_zopt,
    zopt_structure,
)
from .builders import (
    build_cube_split,
    build_exp_map,
    build_grass_lattice,
    build_man_opt,
    build_s_opt,
    exp_map_constellation,
)
from .detectors import (
    DetectionResult,
    GlrtDetector,
    NearestNeighborIndex,
    SoptDetector,
    ZOptDetectorState,
    ZoptDetector,
    azimuth_region,
    glrt_detect,
    polar_region,
    rough_estimate,
    sopt_detect,
    zopt_detect,
)
from .channel import ChannelSample, SerCurve, bench_detectors, run_ser, transmit

__all__ = [name for name in dir() if not name.startswith("_")]
