"""Random-circuit Bell-violation distributions, quantum-resource measures,
hardware-native transpilation, and device benchmarking."""

from .qstate import (
    DensityMatrix,
    HermitianObservable,
    QStateError,
    StateVector,
    apply_kraus,
    apply_unitary,
    apply_unitary_rho,
    depolarize,
    expectation,
    partial_trace,
    purity,
    to_density,
)
from .circuit import (
    Circuit,
    CircuitError,
    GateSpec,
    NoiseModel,
    circuit_digest,
    circuit_from_dict,
    circuit_to_dict,
    enumerate_stabilizer_states,
    gate_counts,
    gate_matrix,
    haar_unitary,
    random_circuit,
    random_depth,
    simulate_noisy,
    simulate_pure,
)
from .inequality import (
    CoefficientTable,
    InequalityError,
    InequalitySpec,
    MeasurementSettings,
    bell_operator,
    chsh_table,
    evaluate,
    local_observable,
    mermin_table,
    svetlichny_table,
    table_for,
)
from .optimize import (
    OptimizeError,
    OptimizerConfig,
    ViolationResult,
    chsh_horodecki,
    grid_oracle,
    seesaw_maximize,
)
from .measures import (
    MeasureError,
    MeasureReport,
    measure_report,
    meyer_wallach_q,
    pauli_expectations,
    stabilizer_renyi_2,
    three_tangle,
)
from .transpile import (
    NativeTarget,
    RepresentativeBin,
    RepresentativeSet,
    TranspileError,
    circuit_unitary,
    decompose,
    export_representatives,
    ionq_like,
    iqm_like,
    is_native,
    select_representatives,
    unitary_distance,
)
from .qasm import QasmError, from_qasm, to_qasm
from .harness import (
    ExperimentConfig,
    HarnessError,
    Histogram,
    RunRecord,
    bench_protocol,
    compare_histograms,
    depth_sweep,
    ghz_circuit,
    ghz_state,
    ghz_suite,
    noise_sweep,
    run_distribution,
    sample_correlator,
    simulate_device_measurements,
    violation_fraction_table,
)

__version__ = "0.1.0"
