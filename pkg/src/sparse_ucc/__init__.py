"""Classical sparse-wavefunction optimization of the factorized UCCSD ansatz."""

from .ansatz import (
    AnsatzConfig,
    OrderedAnsatz,
    UccFactor,
    UccsdProblem,
    apply_ansatz,
    apply_factor,
    build_pool,
    mp2_amplitudes,
    order_and_truncate,
)
from .determinant import (
    Determinant,
    ExcitationOperator,
    SignedDeterminant,
    apply_deexcitation,
    apply_excitation,
    excitation_degree,
    hartree_fock_reference,
)
from .diagnostics import SweepResult, entropy_trace, md_convergence_sweep, replay_vs_ncut
from .fcidump import (
    IntegralStore,
    OrbitalEnergies,
    get_two_electron,
    orbital_energies,
    parse_fcidump,
    read_fcidump,
)
from .hamiltonian import (
    EnergyReport,
    expectation_energy,
    fci_ground_energy,
    matrix_element,
    spin_orbital_integrals,
)
from .optimizer import AnsatzObjective, OptimizerSettings, gradient, minimize, objective
from .wavefunction import SparseWavefunction, TruncationPolicy, entropy, from_reference, norm, truncate

__version__ = "0.1.0"
