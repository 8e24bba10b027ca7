from src.scenarios.bundle import (
    ChainSpec, build_chain_from_spec, load_bundle, read_day_file, save_bundle, write_day_file,
)
from src.scenarios.clustering import (
    ClusteringResult,
    DayNormalizer,
    DayVector,
    NoiseProfile,
    ScenarioError,
    cluster_days,
    pam,
)
from src.scenarios.dtw import dtw_distance, pairwise_dtw
from src.scenarios.markov import (
    ChainValidationError,
    MarkovChain,
    MarkovState,
    ScenarioTree,
    build_markov_chain,
    count_forward_samples,
    expand_to_tree,
    expected_value_chain,
    series_roles,
)
from src.scenarios.validation import AgreementReport, label_agreement, validate_out_of_sample
